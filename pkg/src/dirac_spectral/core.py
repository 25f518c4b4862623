"""Data model for Dirac coefficients, sampled functions and canonical systems.

Matrices are plain ``numpy`` arrays of shape ``(..., 2, 2)``; the symmetric
traceless coefficient ``[[mu1, mu2], [mu2, -mu1]]`` is always stored by its
two real entries.
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .config import DEFAULT

J = np.array([[0.0, -1.0], [1.0, 0.0]])
I2 = np.eye(2)


class Direction(str, Enum):
    LEFT_TO_RIGHT = "left_to_right"
    RIGHT_TO_LEFT = "right_to_left"


def coefficient_matrix(mu1, mu2):
    """Stack ``[[mu1, mu2], [mu2, -mu1]]`` over broadcast inputs."""
    mu1, mu2 = np.broadcast_arrays(np.asarray(mu1), np.asarray(mu2))
    out = np.empty(mu1.shape + (2, 2), dtype=np.result_type(mu1, mu2, float))
    out[..., 0, 0] = mu1
    out[..., 0, 1] = mu2
    out[..., 1, 0] = mu2
    out[..., 1, 1] = -mu1
    return out


def _sinhc(t):
    """sinh(t)/t, switching to a Taylor polynomial near 0."""
    t = np.asarray(t, dtype=float)
    small = np.abs(t) < DEFAULT.small_t
    safe = np.where(small, 1.0, t)
    t2 = t * t
    series = 1.0 + t2 / 6.0 + t2 * t2 / 120.0 + t2**3 / 5040.0
    return np.where(small, series, np.sinh(safe) / safe)


def _coshm1c(t):
    """(cosh(t) - 1)/t**2 with the limit 1/2 at t = 0."""
    t = np.asarray(t, dtype=float)
    small = np.abs(t) < DEFAULT.small_t
    safe = np.where(small, 1.0, t)
    t2 = t * t
    series = 0.5 + t2 / 24.0 + t2 * t2 / 720.0 + t2**3 / 40320.0
    return np.where(small, series, (np.cosh(safe) - 1.0) / (safe * safe))


def _tanhc(t):
    """tanh(t)/t with the limit 1 at t = 0."""
    t = np.asarray(t, dtype=float)
    small = np.abs(t) < DEFAULT.small_t
    safe = np.where(small, 1.0, t)
    t2 = t * t
    series = 1.0 - t2 / 3.0 + 2.0 * t2 * t2 / 15.0 - 17.0 * t2**3 / 315.0
    return np.where(small, series, np.tanh(safe) / safe)


@dataclass(frozen=True)
class PointMass:
    position: float
    mu1: float
    mu2: float

    def __post_init__(self):
        if not np.isfinite([self.position, self.mu1, self.mu2]).all():
            raise ValueError("point mass entries must be finite")
        if self.position <= 0:
            raise ValueError("point masses must sit strictly to the right of 0")
        if self.weight == 0:
            raise ValueError("zero point mass; omit it instead")

    @property
    def weight(self):
        return float(np.hypot(self.mu1, self.mu2))

    @property
    def matrix(self):
        return coefficient_matrix(self.mu1, self.mu2)


def jump_factor(pm, direction=Direction.LEFT_TO_RIGHT):
    """Closed-form jump of a solution across an atom.

    ``LEFT_TO_RIGHT`` returns ``exp(-J mu{x})`` so that ``f(x) = M f(x-)``;
    ``RIGHT_TO_LEFT`` returns the inverse ``exp(J mu{x})``.
    """
    t = pm.weight
    if t == 0:
        raise ValueError("degenerate point mass (t = 0)")
    sign = -1.0 if Direction(direction) is Direction.LEFT_TO_RIGHT else 1.0
    return np.cosh(t) * I2 + sign * float(_sinhc(t)) * (J @ pm.matrix)


def g_of(D):
    """Sum of D**(n-1)/n! for D = mu{x} J, using D @ D = t**2 I."""
    D = np.asarray(D)
    t2 = np.real(D[..., 0, 0] * D[..., 1, 1] - D[..., 0, 1] * D[..., 1, 0]) * -1.0
    t = np.sqrt(np.maximum(t2, 0.0))
    a = _sinhc(t)[..., None, None]
    b = _coshm1c(t)[..., None, None]
    return a * I2 + b * D


@dataclass(frozen=True)
class GridFunction1D:
    """Uniform complex samples on ``[lo, hi]`` including both endpoints."""

    lo: float
    hi: float
    samples: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=complex)
        if s.ndim != 1 or s.size < 2:
            raise ValueError("need at least two samples")
        if not self.hi > self.lo:
            raise ValueError("hi must exceed lo")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @property
    def count(self):
        return self.samples.size

    @property
    def step(self):
        return (self.hi - self.lo) / (self.count - 1)

    @property
    def nodes(self):
        return np.linspace(self.lo, self.hi, self.count)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        x = self.nodes
        return np.interp(t, x, self.samples.real) + 1j * np.interp(t, x, self.samples.imag)


@dataclass(frozen=True)
class DiracMeasure:
    """Absolutely continuous density on a uniform grid plus finitely many atoms.

    ``ac_density`` has shape ``(m, 2)`` with columns ``mu1, mu2`` sampled at
    ``linspace(0, N, m)`` and is interpolated piecewise linearly.
    """

    N: float
    ac_density: np.ndarray
    point_masses: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if not (np.isfinite(self.N) and self.N > 0):
            raise ValueError("interval length N must be positive")
        dens = np.array(self.ac_density, dtype=float)
        if dens.ndim != 2 or dens.shape[1] != 2 or dens.shape[0] < 2:
            raise ValueError("ac_density must have shape (m >= 2, 2)")
        if not np.isfinite(dens).all():
            raise ValueError("ac_density contains non-finite entries")
        dens.setflags(write=False)
        object.__setattr__(self, "ac_density", dens)
        pms = tuple(self.point_masses)
        positions = [pm.position for pm in pms]
        if any(b <= a for a, b in zip(positions, positions[1:])):
            raise ValueError("point-mass positions must be strictly increasing")
        if positions and positions[-1] > self.N:
            raise ValueError("point mass outside (0, N]")
        object.__setattr__(self, "point_masses", pms)

    @classmethod
    def zero(cls, N, samples=2):
        return cls(N, np.zeros((samples, 2)))

    @classmethod
    def from_functions(cls, N, mu1, mu2, samples, point_masses=()):
        x = np.linspace(0.0, N, samples)
        dens = np.column_stack([np.broadcast_to(mu1(x), x.shape), np.broadcast_to(mu2(x), x.shape)])
        return cls(N, dens, tuple(point_masses))

    @property
    def grid(self):
        return np.linspace(0.0, self.N, self.ac_density.shape[0])

    @property
    def is_absolutely_continuous(self):
        return not self.point_masses

    def density(self, x):
        """Interpolated ``(mu1(x), mu2(x))``."""
        g = self.grid
        return (np.interp(x, g, self.ac_density[:, 0]), np.interp(x, g, self.ac_density[:, 1]))

    def l1_norm(self):
        """Total variation: L1 norm of the density plus the atom weights."""
        g = self.grid
        ac = np.trapezoid(np.hypot(self.ac_density[:, 0], self.ac_density[:, 1]), g)
        return float(ac + sum(pm.weight for pm in self.point_masses))

    def component_variation(self, a=0.0, b=None):
        """max_i |mu_i|((a, b]) for the density and atoms in that range."""
        b = self.N if b is None else b
        x = np.linspace(a, b, 4 * self.ac_density.shape[0] + 1)
        m1, m2 = self.density(x)
        v1 = np.trapezoid(np.abs(m1), x)
        v2 = np.trapezoid(np.abs(m2), x)
        for pm in self.point_masses:
            if a < pm.position <= b:
                v1 += abs(pm.mu1)
                v2 += abs(pm.mu2)
        return float(max(v1, v2))

    def truncate(self, x):
        """Restriction to ``[0, x]`` on a grid of the same step."""
        if not 0 < x <= self.N:
            raise ValueError("truncation point outside (0, N]")
        m = max(2, int(round((self.ac_density.shape[0] - 1) * x / self.N)) + 1)
        g = np.linspace(0.0, x, m)
        dens = np.column_stack(self.density(g))
        return DiracMeasure(x, dens, tuple(pm for pm in self.point_masses if pm.position <= x))


@dataclass(frozen=True)
class SpectralMeasure:
    lambdas: np.ndarray
    weights: np.ndarray
    N: float
    beta: float

    def __post_init__(self):
        lam = np.asarray(self.lambdas, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if lam.shape != w.shape or lam.ndim != 1:
            raise ValueError("lambdas and weights must be matching 1-D arrays")
        if np.any(w <= 0):
            raise ValueError("spectral weights must be positive")
        if np.any(np.diff(lam) <= 0):
            raise ValueError("eigenvalues must be strictly increasing")
        if not 0 <= self.beta < np.pi:
            raise ValueError("beta must lie in [0, pi)")
        object.__setattr__(self, "lambdas", lam)
        object.__setattr__(self, "weights", w)

    def __len__(self):
        return self.lambdas.size

    def to_dict(self):
        return {
            "N": self.N,
            "beta": self.beta,
            "atoms": [{"lambda": float(l), "weight": float(w)} for l, w in zip(self.lambdas, self.weights)],
        }


class GLFunction:
    """Hermitian-symmetric samples of phi on the symmetric grid over [-2N, 2N].

    Inputs are symmetrized as ``(phi(x) + conj(phi(-x))) / 2`` so that the
    symmetry holds exactly at mirrored nodes.
    """

    def __init__(self, N, samples):
        samples = np.asarray(samples, dtype=complex)
        if samples.ndim != 1 or samples.size < 3 or samples.size % 2 == 0:
            raise ValueError("GL samples need an odd count >= 3 so that 0 is a node")
        if not np.isfinite(samples).all():
            raise ValueError("GL samples contain non-finite values")
        sym = 0.5 * (samples + np.conj(samples[::-1]))
        self.N = float(N)
        self.grid = GridFunction1D(-2.0 * N, 2.0 * N, sym)
        self._cumulative = None

    @classmethod
    def from_function(cls, N, func, samples=4097):
        x = np.linspace(-2.0 * N, 2.0 * N, samples)
        x[samples // 2] = 0.0
        return cls(N, func(x))

    @classmethod
    def zero(cls, N, samples=257):
        return cls(N, np.zeros(samples))

    @property
    def nodes(self):
        x = self.grid.nodes
        x[x.size // 2] = 0.0
        return x

    @property
    def samples(self):
        return self.grid.samples

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(np.abs(t) > 2.0 * self.N * (1 + 1e-12)):
            raise ValueError("phi evaluated outside (-2N, 2N)")
        return self.grid(t)

    def _cumulative_table(self):
        if self._cumulative is None:
            s = self.samples
            h = self.grid.step
            c = s.size // 2
            right = np.concatenate([[0.0], np.cumsum(0.5 * h * (s[c:-1] + s[c + 1:]))])
            left = -np.concatenate([[0.0], np.cumsum(0.5 * h * (s[c:0:-1] + s[c - 1::-1]))])
            self._cumulative = np.concatenate([left[:0:-1], right])
        return self._cumulative

    def antiderivative(self, t):
        """Phi(t) = integral of phi from 0 to t (trapezoid, linear in between)."""
        t = np.asarray(t, dtype=float)
        tab = self._cumulative_table()
        x = self.nodes
        return np.interp(t, x, tab.real) + 1j * np.interp(t, x, tab.imag)

    def sup_norm(self, mask=None):
        s = self.samples if mask is None else self.samples[mask]
        return float(np.max(np.abs(s))) if s.size else 0.0

    def __repr__(self):
        return f"GLFunction(N={self.N}, samples={self.samples.size})"


@dataclass(frozen=True)
class CanonicalSystem:
    """Real symmetric H sampled on ``linspace(0, N, m)``; columns h11, h12, h22."""

    N: float
    h: np.ndarray

    def __post_init__(self):
        h = np.array(self.h, dtype=float)
        if h.ndim != 2 or h.shape[1] != 3 or h.shape[0] < 2:
            raise ValueError("canonical system samples must have shape (m >= 2, 3)")
        if not np.isfinite(h).all():
            raise ValueError("canonical system contains non-finite entries")
        tol = DEFAULT.psd
        if np.any(h[:, 0] < -tol) or np.any(h[:, 2] < -tol):
            raise ValueError("H must be positive semidefinite")
        if np.any(h[:, 0] * h[:, 2] - h[:, 1] ** 2 < -tol * max(1.0, np.abs(h).max() ** 2)):
            raise ValueError("H must be positive semidefinite")
        h.setflags(write=False)
        object.__setattr__(self, "h", h)

    @classmethod
    def identity(cls, N, samples=2):
        h = np.zeros((samples, 3))
        h[:, 0] = h[:, 2] = 1.0
        return cls(N, h)

    @classmethod
    def from_matrices(cls, N, H):
        H = np.asarray(H)
        return cls(N, np.column_stack([H[:, 0, 0], 0.5 * (H[:, 0, 1] + H[:, 1, 0]), H[:, 1, 1]]))

    @property
    def grid(self):
        return np.linspace(0.0, self.N, self.h.shape[0])

    @property
    def matrices(self):
        out = np.empty((self.h.shape[0], 2, 2))
        out[:, 0, 0] = self.h[:, 0]
        out[:, 0, 1] = out[:, 1, 0] = self.h[:, 1]
        out[:, 1, 1] = self.h[:, 2]
        return out

    def det(self):
        return self.h[:, 0] * self.h[:, 2] - self.h[:, 1] ** 2

    def trace(self):
        return self.h[:, 0] + self.h[:, 2]

    def at(self, x):
        """Piecewise-linear H(x), shape ``x.shape + (2, 2)``."""
        g = self.grid
        h11, h12, h22 = (np.interp(x, g, self.h[:, k]) for k in range(3))
        x = np.asarray(x)
        out = np.empty(x.shape + (2, 2))
        out[..., 0, 0] = h11
        out[..., 0, 1] = out[..., 1, 0] = h12
        out[..., 1, 1] = h22
        return out
