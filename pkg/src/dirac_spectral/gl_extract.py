"""Gelfand-Levitan function phi from spectral data, and the positivity test.

Fourier convention: ``hat(f)(t) = integral of exp(i t s) f(s) ds``.

With the transfer matrix oriented so that the free field gives
``E_N = exp(-izN)``, the function that feeds the kernel equations and agrees
with the spectral-measure route satisfies ``1/|E(t)|**2 = 1 + hat(phi)(-t)``,
so ``phi(x) = (1/2 pi) integral of exp(i t x) g(t) dt`` with
``g = 1/|E|**2 - 1``.
"""

from dataclasses import asdict, dataclass

import numpy as np

from .config import DEFAULT
from .core import GLFunction, GridFunction1D
from .forward import db_function

TAPER_FRACTION = 0.1


@dataclass(frozen=True)
class PositivityReport:
    min_eigenvalue: float
    matrix_dim: int
    passed: bool

    def to_dict(self):
        return asdict(self)


def fourier_transform(samples, nodes, t):
    """Trapezoid quadrature of integral exp(i t s) f(s) ds over the sampled range."""
    nodes = np.asarray(nodes, dtype=float)
    w = np.full(nodes.size, nodes[1] - nodes[0])
    w[[0, -1]] *= 0.5
    return np.exp(1j * np.outer(np.asarray(t, dtype=float), nodes)) @ (w * np.asarray(samples))


def inverse_fourier_transform(samples, nodes, x):
    """Trapezoid quadrature of (1/2 pi) integral exp(-i t x) g(t) dt."""
    nodes = np.asarray(nodes, dtype=float)
    w = np.full(nodes.size, abs(nodes[1] - nodes[0])) / (2.0 * np.pi)
    w[[0, -1]] *= 0.5
    return np.exp(-1j * np.outer(np.asarray(x, dtype=float), nodes)) @ (w * np.asarray(samples))


def raised_cosine_taper(t, half_width, fraction=TAPER_FRACTION):
    """1 on the inner part of [-W, W], cosine roll-off to 0 over the outer fraction."""
    a = np.abs(np.asarray(t, dtype=float))
    start = (1.0 - fraction) * half_width
    ramp = np.clip((a - start) / (half_width - start), 0.0, 1.0)
    return 0.5 * (1.0 + np.cos(np.pi * ramp))


def tail_mean(values, fraction=TAPER_FRACTION):
    """Mean modulus over the outer ``fraction`` of a symmetric sample window."""
    v = np.abs(np.asarray(values))
    k = max(1, int(np.ceil(fraction * v.size / 2)))
    return float(np.mean(np.concatenate([v[:k], v[-k:]])))


def _out_nodes(N, out_samples):
    if out_samples < 3 or out_samples % 2 == 0:
        raise ValueError("out_samples must be odd and >= 3")
    x = np.linspace(-2.0 * N, 2.0 * N, out_samples)
    x[out_samples // 2] = 0.0
    return x


def _invert(g, t, N, out_samples):
    half = max(abs(t[0]), abs(t[-1]))
    tapered = g * raised_cosine_taper(t, half)
    # reflected inversion, see the module docstring
    return GLFunction(N, inverse_fourier_transform(tapered, -t, _out_nodes(N, out_samples)))


def sample_db_function(mu, half_width, step=None, steps=512):
    """E_N on a symmetric uniform grid over [-half_width, half_width]."""
    step = step or np.pi / (8.0 * mu.N)
    n = 2 * int(np.ceil(half_width / step)) + 1
    t = np.linspace(-half_width, half_width, n)
    return GridFunction1D(-half_width, half_width, db_function(mu, t, None, steps))


def phi_from_E(E_grid, N, out_samples=2049, tail_tol=None):
    """phi on [-2N, 2N] from samples of E_N on the real line."""
    tail_tol = DEFAULT.tail_mean if tail_tol is None else tail_tol
    t = E_grid.nodes
    if E_grid.step > np.pi / (8.0 * N) * (1 + 1e-12):
        raise ValueError("E grid step exceeds pi/(8N)")
    mod = np.abs(E_grid.samples)
    if np.min(mod) < DEFAULT.min_modulus_E:
        raise ArithmeticError("|E(t)| vanishes on the grid")
    g = 1.0 / mod**2 - 1.0
    if tail_mean(g) > tail_tol:
        raise ArithmeticError(f"tail of 1/|E|^2 - 1 too large ({tail_mean(g):.2e}); widen the window")
    return _invert(g, t, N, out_samples)


def phi_from_dirac(mu, out_samples=2049, steps=512, start_width=None, max_width=None, tail_tol=None):
    """Forward solve plus phi_from_E, doubling the window until the tail test passes."""
    tail_tol = DEFAULT.tail_mean if tail_tol is None else tail_tol
    width = start_width or 32.0 / mu.N
    max_width = max_width or 4096.0 / mu.N
    while True:
        E = sample_db_function(mu, width, steps=steps)
        g = 1.0 / np.abs(E.samples) ** 2 - 1.0
        if tail_mean(g) <= tail_tol or width >= max_width:
            break
        width *= 2.0
    return phi_from_E(E, mu.N, out_samples, tail_tol), E


def phi_from_series(rho_hat, N, half_width, count, out_samples=2049):
    """phi from E = exp(-izN)(1 + rho_hat) through hat(phi) = -g/(1 + g).

    ``g = rho_hat + conj(rho_hat) + |rho_hat|**2`` is real on the real axis.
    """
    if count % 2 == 0:
        raise ValueError("count must be odd")
    t = np.linspace(-half_width, half_width, count)
    r = np.asarray(rho_hat(t), dtype=complex)
    g = 2.0 * r.real + np.abs(r) ** 2
    if np.min(np.abs(1.0 + g)) < DEFAULT.wiener:
        raise ArithmeticError("1 + g vanishes on the grid")
    return _invert(-g / (1.0 + g), t, N, out_samples)


def trapezoid_nodes(lo, hi, dim):
    x = np.linspace(lo, hi, dim)
    w = np.full(dim, (hi - lo) / (dim - 1))
    w[[0, -1]] *= 0.5
    return x, w


def check_phi(phi, N=None, dim=129):
    """Smallest eigenvalue of the Nystrom discretization of 1 + T_phi on [-N, N]."""
    N = phi.N if N is None else N
    if dim < 16:
        raise ValueError("dim must be at least 16")
    if N > phi.N * (1 + 1e-12):
        raise ValueError("phi is only known on (-2 phi.N, 2 phi.N)")
    x, w = trapezoid_nodes(-N, N, dim)
    diff = np.clip(x[:, None] - x[None, :], -2.0 * phi.N, 2.0 * phi.N)
    K = phi(diff)
    sw = np.sqrt(w)
    M = np.eye(dim) + sw[:, None] * K * sw[None, :]
    M = 0.5 * (M + M.conj().T)
    lam = float(np.linalg.eigvalsh(M)[0])
    return PositivityReport(lam, dim, lam > 0)


def quadratic_form(phi, f, N=None, dim=2001):
    """<f, f + phi * f> on [-N, N] by trapezoid quadrature (f callable)."""
    N = phi.N if N is None else N
    x, w = trapezoid_nodes(-N, N, dim)
    fx = np.asarray(f(x), dtype=complex)
    conv = phi(x[:, None] - x[None, :]) @ (w * fx)
    return complex(np.sum(w * np.conj(fx) * (fx + conv)))


def gaussian_cutoff(lam, width):
    return np.exp(-0.5 * (width * np.asarray(lam)) ** 2)


def phi_from_spectral_measure(rho, mollifier_width, out_samples=2049, tol=1e-8):
    """Mollified phi(t) = (1/2)[sum_k w_k exp(i t lambda_k) G(lambda_k) - F(t)].

    ``G`` is the Gaussian cutoff ``exp(-(eps lambda)**2 / 2)`` and
    ``F(t) = (1/pi) * sqrt(2 pi)/eps * exp(-t**2 / (2 eps**2))`` its transform
    against ``d lambda / pi``. The result is only meaningful away from t = 0
    and t = +-2N, where the discrete measure carries the delta-like parts;
    those neighbourhoods are marked in ``phi.reliable``.
    """
    eps = float(mollifier_width)
    if eps <= 0:
        raise ValueError("mollifier width must be positive")
    lam, w = rho.lambdas, rho.weights
    if lam.size == 0:
        raise ValueError("empty spectral measure")
    if gaussian_cutoff(lam[0], eps) > tol or gaussian_cutoff(lam[-1], eps) > tol:
        raise ValueError("spectral window too small for the mollifier width")
    N = rho.N
    x = _out_nodes(N, out_samples)
    series = np.exp(1j * np.outer(x, lam)) @ (w * gaussian_cutoff(lam, eps))
    F = np.sqrt(2.0 / np.pi) / eps * np.exp(-0.5 * (x / eps) ** 2)
    phi = GLFunction(N, 0.5 * (series - F))
    margin = 6.0 * eps
    phi.reliable = (np.abs(x) > margin) & (np.abs(x) < 2.0 * N - margin)
    return phi
