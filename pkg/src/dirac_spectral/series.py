"""Iterated-integral expansion of the de Branges function on a short interval.

On ``[0, delta]`` the rotated solution ``f`` obeys

    f' = [[0, exp(-2izs) dP], [exp(2izs) conj(dP), 0]] f,   f(0) = (1, 1)/2,

and ``E_delta(z) = k(delta) exp(-iz delta) (1 + 2 sum_n v_n2(delta, z))``.
Iterating the system, ``v_n2`` is always integrated against ``conj(dP)`` in the
outermost variable, then ``dP``, alternating inwards.

This module is a slow reference implementation used to cross-check the
transfer-matrix solver. Beyond first order it handles densities only.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_simpson

from .core import _tanhc

MAX_ORDER = 4
NORM_LIMIT = 0.125


def omega_weight(pm):
    """Mass of the jump measure at an atom: cosh(t) - 1."""
    return math.cosh(pm.weight) - 1.0


def k_function(mu, x):
    """Right-continuous product of 1/cosh(t_j) over atoms at positions <= x."""
    x = np.asarray(x, dtype=float)
    out = np.ones(x.shape)
    for pm in mu.point_masses:
        out = np.where(x >= pm.position, out / math.cosh(pm.weight), out)
    return out


@dataclass(frozen=True)
class DPMeasure:
    """dP = tanh(t)/t (dmu2 - i dmu1): a density on the grid plus atoms."""

    nodes: np.ndarray
    density: np.ndarray
    atoms: tuple = field(default=())

    def total_variation(self, upto=None):
        upto = self.nodes[-1] if upto is None else upto
        m = self.nodes <= upto + 1e-15
        ac = np.trapezoid(np.abs(self.density[m]), self.nodes[m])
        return float(ac + sum(abs(w) for x, w in self.atoms if x <= upto))

    def at(self, x):
        x = np.asarray(x, dtype=float)
        re = np.interp(x, self.nodes, self.density.real)
        im = np.interp(x, self.nodes, self.density.imag)
        return re + 1j * im


def dP_density(mu):
    m1, m2 = mu.ac_density[:, 0], mu.ac_density[:, 1]
    atoms = tuple(
        (pm.position, float(_tanhc(pm.weight)) * (pm.mu2 - 1j * pm.mu1)) for pm in mu.point_masses
    )
    return DPMeasure(mu.grid, m2 - 1j * m1, atoms)


def _cumulative(y, s):
    # cumulative_simpson is real-only
    re = cumulative_simpson(y.real, x=s, axis=-1, initial=0.0)
    im = cumulative_simpson(y.imag, x=s, axis=-1, initial=0.0)
    return re + 1j * im


def _iterate(P, delta, z, order, samples):
    """v_n2(delta, z) for n = 1..order via nested cumulative Simpson sums."""
    if order > MAX_ORDER:
        raise ValueError(f"series order is limited to {MAX_ORDER}")
    if P.atoms and order > 1:
        raise NotImplementedError("atoms are only supported at first order")
    z = np.asarray(z, dtype=complex)
    s = np.linspace(0.0, delta, samples)
    dp = P.at(s)
    ph = np.exp(2j * np.multiply.outer(z, s))
    up = ph * np.conj(dp)
    down = dp / ph
    v1 = np.full(z.shape + s.shape, 0.5, dtype=complex)
    v2 = v1.copy()
    terms = []
    for _ in range(order):
        v1, v2 = (
            _cumulative(down * v2, s),
            _cumulative(up * v1, s),
        )
        terms.append(v2[..., -1])
    if P.atoms:
        zz = z[..., None]
        atom = sum(0.5 * np.exp(2j * zz * x) * np.conj(w) for x, w in P.atoms if x <= delta)
        terms[0] = terms[0] + np.squeeze(atom, -1)
    return np.stack(terms)


def iterated_v(P, n, delta, z, samples=2049):
    """v_n2(delta, z) for a single order n."""
    if not 1 <= n <= MAX_ORDER:
        raise ValueError(f"n must lie in 1..{MAX_ORDER}")
    return _iterate(P, delta, z, n, samples)[n - 1]


def factorial_bound(variation, n, z, delta):
    """|v_n2| <= max(1, exp(-2 delta Im z)) |P|^n / (2 n!)."""
    z = np.asarray(z, dtype=complex)
    growth = np.maximum(1.0, np.exp(-2.0 * delta * z.imag))
    return growth * variation**n / (2.0 * math.factorial(n))


@dataclass(frozen=True)
class SeriesExpansion:
    delta: float
    z: np.ndarray
    terms: np.ndarray
    truncation_order: int
    tail_bound: np.ndarray
    k_delta: float = 1.0

    @property
    def rho_hat(self):
        return 2.0 * self.terms.sum(axis=0)

    @property
    def value(self):
        return self.k_delta * np.exp(-1j * self.z * self.delta) * (1.0 + self.rho_hat)

    @property
    def error_bound(self):
        """Bound on |E_delta - value| from the truncated orders."""
        return self.k_delta * np.abs(np.exp(-1j * self.z * self.delta)) * 2.0 * self.tail_bound


def geometric_bound(variation, n, z, delta):
    """|v_n2| <= max(1, exp(-2 delta Im z)) |P|^n / 2, valid with atoms present."""
    z = np.asarray(z, dtype=complex)
    growth = np.maximum(1.0, np.exp(-2.0 * delta * z.imag))
    return growth * variation**n / 2.0


def _tail(variation, order, z, delta, atoms=False, extra=30):
    # an atom puts mass on the diagonal of the simplex, so no 1/n! there
    if atoms:
        if variation >= 1.0:
            return np.full(np.shape(z), np.inf)
        return geometric_bound(variation, order + 1, z, delta) / (1.0 - variation)
    return sum(factorial_bound(variation, n, z, delta) for n in range(order + 1, order + extra))


def series_expansion(mu, z, delta=None, order=MAX_ORDER, samples=2049, check_norm=True):
    delta = mu.N if delta is None else float(delta)
    if not 0 < delta <= mu.N:
        raise ValueError("delta must lie in (0, N]")
    if check_norm and mu.component_variation(0.0, delta) >= NORM_LIMIT:
        raise ValueError("series expansion needs max_i |mu_i|((0, delta]) < 1/8")
    if order > 1 and mu.point_masses:
        raise NotImplementedError("the series path beyond first order is for densities only")
    P = dP_density(mu)
    z = np.asarray(z, dtype=complex)
    terms = _iterate(P, delta, z, order, samples)
    tail = _tail(P.total_variation(delta), order, z, delta, atoms=any(x <= delta for x, _ in P.atoms))
    k = float(k_function(mu, delta))
    return SeriesExpansion(delta, z, terms, order, tail, k)


def E_via_series(mu, z, delta=None, order=MAX_ORDER, samples=2049):
    """k(delta) exp(-iz delta) (1 + 2 sum_{n <= order} v_n2(delta, z))."""
    return series_expansion(mu, z, delta, order, samples).value


def rho_hat_function(mu, delta=None, order=MAX_ORDER, samples=2049):
    """Callable t -> rho_hat(t) for the Wiener-lemma route to phi."""

    def rho_hat(t):
        return series_expansion(mu, t, delta, order, samples).rho_hat

    return rho_hat
