"""Reconstruction of the canonical system and the Dirac coefficient from phi.

For each x the convolution equation ``p + int_{-x}^x phi(t - s) p(s) ds = g``
is discretized by the trapezoid rule on an odd number of symmetric nodes
(0 is a node) and solved densely. The kernels j (rhs 1/2) and k (rhs psi/2)
give H through their corner values at t = +-x.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .config import DEFAULT
from .core import I2, J, CanonicalSystem, DiracMeasure
from .forward import propagate
from .gl_extract import trapezoid_nodes

MIN_DIM = 16


class ConditioningError(ArithmeticError):
    pass


@dataclass(frozen=True)
class NystromSystem:
    x: float
    nodes: np.ndarray
    weights: np.ndarray
    matrix: np.ndarray

    def solve(self, rhs, check=True):
        rhs = np.asarray(rhs, dtype=complex)
        p = np.linalg.solve(self.matrix, rhs)
        if check:
            res = np.max(np.abs(self.matrix @ p - rhs))
            if res > DEFAULT.residual * max(1.0, np.max(np.abs(rhs))):
                raise ArithmeticError(f"Nystrom residual {res:.2e} above tolerance")
        return p

    def integrate(self, values, axis=0):
        return np.tensordot(self.weights, values, axes=([0], [axis]))


def nystrom_system(phi, x, dim, check_condition=True):
    """Matrix of 1 + T_phi^x on ``dim`` trapezoid nodes over [-x, x]."""
    if not 0 < x <= phi.N * (1 + 1e-12):
        raise ValueError("x must lie in (0, N]")
    if dim < MIN_DIM:
        raise ValueError(f"dim must be at least {MIN_DIM}")
    if dim % 2 == 0:
        raise ValueError("dim must be odd so that t = 0 is a node")
    t, w = trapezoid_nodes(-x, x, dim)
    t[dim // 2] = 0.0
    t[dim // 2 + 1:] = -t[dim // 2 - 1::-1]
    diff = np.clip(t[:, None] - t[None, :], -2.0 * phi.N, 2.0 * phi.N)
    A = np.eye(dim) + phi(diff) * w[None, :]
    if check_condition:
        cond = np.linalg.cond(A)
        if cond > DEFAULT.condition:
            raise ConditioningError(f"Nystrom matrix condition number {cond:.2e}; phi is near the boundary of Phi_N")
    return NystromSystem(float(x), t, w, A)


def fredholm_solve(phi, x, rhs, dim=129):
    """Solve p + int phi(t - s) p(s) ds = rhs(t) on [-x, x]; returns (nodes, p)."""
    sys = nystrom_system(phi, x, dim)
    g = rhs(sys.nodes) if callable(rhs) else rhs
    g = np.broadcast_to(np.asarray(g, dtype=complex), sys.nodes.shape)
    return sys.nodes, sys.solve(g)


@dataclass(frozen=True)
class KernelSolution:
    x: float
    nodes: np.ndarray
    j: np.ndarray
    k_c: np.ndarray

    @property
    def k(self):
        return self.k_c + 1j * (self.nodes >= 0)

    @property
    def corners(self):
        """(j(x, x), j(x, -x), k(x, x), k(x, -x))."""
        k = self.k
        return self.j[-1], self.j[0], k[-1], k[0]


def _kernel_solve(phi, x, dim):
    sys = nystrom_system(phi, x, dim)
    t = sys.nodes
    Phi = phi.antiderivative
    # psi/2 minus (i/2) sgn has the Hermitian-symmetric rhs below; the
    # continuous part k_c = k - i chi_[0, x] is this solution minus i/2.
    rhs = np.column_stack([np.full(t.size, 0.5, dtype=complex), 0.5j * (Phi(t - x) + Phi(t + x))])
    sol = sys.solve(rhs)
    return sys, KernelSolution(float(x), t, sol[:, 0], sol[:, 1] - 0.5j)


def kernel_pair(phi, x, dim=129):
    """Kernels j and k of the reproducing and conjugate functionals of PW_x."""
    return _kernel_solve(phi, x, dim)[1]


@dataclass(frozen=True)
class ReconstructionIntermediates:
    x: float
    A: complex
    B: complex
    C: complex
    D: complex


def corner_coefficients(ks):
    jp, jm, kp, km = ks.corners
    return ReconstructionIntermediates(
        ks.x,
        2.0 * jp * jm,
        jm * kp + jp * km,
        2.0 * kp * km,
        jm * kp - jp * km,
    )


def h_from_coefficients(c):
    """H = (i / D) [[A, B], [B, C]] as a complex 2x2 array."""
    if abs(c.D) < DEFAULT.min_D:
        raise ArithmeticError(f"D(x) vanishes at x = {c.x}")
    return (1j / c.D) * np.array([[c.A, c.B], [c.B, c.C]])


def _h_at(phi, x, dim):
    c = corner_coefficients(kernel_pair(phi, x, dim))
    return c, h_from_coefficients(c)


def reconstruct_H(phi, x_count=64, dim=129, return_intermediates=False, workers=1):
    """Canonical system on linspace(0, N, x_count + 1) with H(0) = I.

    The solves at different x are independent; ``workers > 1`` runs them on a
    thread pool with identical results.
    """
    if x_count < 1:
        raise ValueError("x_count must be positive")
    xs = np.linspace(0.0, phi.N, x_count + 1)[1:]
    H = np.empty((x_count + 1, 2, 2))
    H[0] = I2
    inter = []
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda x: _h_at(phi, x, dim), xs))
    else:
        results = [_h_at(phi, x, dim) for x in xs]
    for i, (x, (c, Hc)) in enumerate(zip(xs, results), start=1):
        if np.max(np.abs(Hc.imag)) > DEFAULT.imag_H * max(1.0, np.max(np.abs(Hc.real))):
            raise ArithmeticError(f"reconstructed H is not real at x = {x}")
        H[i] = Hc.real
        inter.append(c)
    out = CanonicalSystem.from_matrices(phi.N, H)
    return (out, inter) if return_intermediates else out


def _psi_bar(phi, t, sign):
    """conj(psi(t)) with sgn taken as ``sign`` (used on either side of 0)."""
    return -1j * (2.0 * np.conj(phi.antiderivative(t)) + sign)


def _split_integral(sys, values_right, values_left):
    """Trapezoid integral over [-x, x] with separate values on either side of 0."""
    t, h = sys.nodes, sys.nodes[1] - sys.nodes[0]
    c = t.size // 2
    wl = np.full(c + 1, h)
    wl[[0, -1]] *= 0.5
    wr = wl.copy()
    return np.dot(wl, values_left[: c + 1]) + np.dot(wr, values_right[c:])


def reconstruct_H_derivative_form(phi, x, dim=129):
    """H(x) from the x-derivative kernels, independent of the D-quotient formula."""
    sys, ks = _kernel_solve(phi, x, dim)
    t = sys.nodes
    jp, jm, kp, km = ks.corners
    kcp, kcm = ks.k_c[-1], ks.k_c[0]
    f_minus = phi(t - x)
    f_plus = phi(t + x)
    rhs = np.column_stack([
        -f_minus * jp - f_plus * jm,
        -1j * f_minus - f_minus * kcp - f_plus * kcm,
    ])
    d = sys.solve(rhs)
    jx, kcx = d[:, 0], d[:, 1]
    h11 = jp + jm + sys.integrate(jx)
    h12 = kp + km + sys.integrate(kcx)
    psib_x = _psi_bar(phi, x, 1.0)
    psib_mx = _psi_bar(phi, -x, -1.0)
    h22 = psib_x * kp + psib_mx * km + _split_integral(
        sys, _psi_bar(phi, t, 1.0) * kcx, _psi_bar(phi, t, -1.0) * kcx
    )
    H = np.array([[h11, h12], [h12, h22]])
    return H.real


def conjugate_pairing(phi, x, dim=129):
    """int_{-x}^{x} conj(psi(s)) j(x, s) ds, whose x-derivative is H12(x)."""
    sys, ks = _kernel_solve(phi, x, dim)
    t = sys.nodes
    return _split_integral(sys, _psi_bar(phi, t, 1.0) * ks.j, _psi_bar(phi, t, -1.0) * ks.j)


def dirac_to_h(mu, steps=None):
    """H = T0^T T0 with T0 the z = 0 transfer matrix, on the uniform ODE grid."""
    steps = steps or (mu.ac_density.shape[0] - 1)
    steps = max(steps, 16)
    _, pts, right, _, _ = propagate(mu, np.array(0.0), None, steps, path=True)
    grid = np.linspace(0.0, mu.N, steps + 1)
    idx = np.searchsorted(pts, grid)
    idx = np.minimum(idx, pts.size - 1)
    T0 = right[idx].real
    H = np.einsum("xki,xkj->xij", T0, T0)
    return CanonicalSystem.from_matrices(mu.N, H)


def _sqrt_spd_det1(H):
    """Square root of 2x2 SPD matrices with det 1: (H + I) / sqrt(tr H + 2)."""
    tr = H[:, 0, 0] + H[:, 1, 1]
    return (H + I2) / np.sqrt(tr + 2.0)[:, None, None]


def _rotation(theta):
    c, s = np.cos(theta), np.sin(theta)
    R = np.empty(theta.shape + (2, 2))
    R[..., 0, 0] = c
    R[..., 0, 1] = -s
    R[..., 1, 0] = s
    R[..., 1, 1] = c
    return R


def h_to_dirac(H, det_tol=1e-6, return_diagnostics=False):
    """Dirac density mu with dirac_to_h(mu) = H for an absolutely continuous H.

    T0 is carried in polar form ``R(theta) P`` with ``P = H**(1/2)``, so that
    ``T0^T T0 = H`` holds exactly at the samples. With ``A = P' P^{-1}``
    (centred differences, one-sided at the ends) the rotation angle obeys
    ``theta' = -(A[1,0] - A[0,1]) / 2`` and ``-J mu = R sym(A) R^T``.
    """
    Hm = H.matrices
    if np.max(np.abs(H.det() - 1.0)) > det_tol:
        raise ValueError("h_to_dirac needs det H = 1")
    if np.max(np.abs(Hm[0] - I2)) > det_tol:
        raise ValueError("h_to_dirac needs H(0) = I")
    x = H.grid
    P = _sqrt_spd_det1(Hm)
    dP = np.gradient(P, x, axis=0, edge_order=2)
    Pinv = np.linalg.inv(P)
    A = dP @ Pinv
    anti = 0.5 * (A[:, 1, 0] - A[:, 0, 1])
    sym = 0.5 * (A + np.swapaxes(A, 1, 2))
    trace = sym[:, 0, 0] + sym[:, 1, 1]
    sym = sym - 0.5 * trace[:, None, None] * I2
    dtheta = -anti
    theta = np.concatenate([[0.0], np.cumsum(0.5 * (dtheta[1:] + dtheta[:-1]) * np.diff(x))])
    R = _rotation(theta)
    mu_m = J @ R @ sym @ np.swapaxes(R, 1, 2)
    asym = np.max(np.abs(mu_m[:, 0, 1] - mu_m[:, 1, 0]))
    trace_mu = np.max(np.abs(mu_m[:, 0, 0] + mu_m[:, 1, 1]))
    scale = max(1.0, np.max(np.abs(mu_m)))
    if max(asym, trace_mu) > DEFAULT.traceless * scale:
        raise ArithmeticError("recovered coefficient is not symmetric traceless")
    dens = np.column_stack([mu_m[:, 0, 0], 0.5 * (mu_m[:, 0, 1] + mu_m[:, 1, 0])])
    mu = DiracMeasure(H.N, dens)
    if return_diagnostics:
        return mu, {"max_trace_drift": float(np.max(np.abs(trace))), "max_asymmetry": float(asym)}
    return mu
