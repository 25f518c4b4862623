"""Transfer matrices, de Branges and Weyl functions, and the discrete spectrum.

The eigenvalue equation is propagated in the differentiated form
``T' = -J (mu(x) - z) T`` with ``T(0) = I``. Each step applies a fourth-order
Magnus exponential: the generator is traceless, so ``exp`` has the closed form
``cosh(w) I + sinh(w)/w Omega`` with ``w**2 = -det Omega`` and every step has
determinant one up to rounding. Atoms multiply from the left by
``exp(-J mu{x})`` once the propagation reaches their position.
"""

import numpy as np
from scipy.integrate import simpson

from .config import DEFAULT
from .core import I2, J, CanonicalSystem, Direction, SpectralMeasure, jump_factor

_GAUSS = np.sqrt(3.0) / 6.0
_MAGNUS_C = np.sqrt(3.0) / 12.0


def _sinhc_complex(w):
    small = np.abs(w) < 1e-4
    safe = np.where(small, 1.0, w)
    w2 = w * w
    return np.where(small, 1.0 + w2 / 6.0 + w2 * w2 / 120.0, np.sinh(safe) / safe)


def expm_traceless(omega):
    """exp of traceless 2x2 matrices, broadcasting over leading axes."""
    omega = np.asarray(omega, dtype=complex)
    det = omega[..., 0, 0] * omega[..., 1, 1] - omega[..., 0, 1] * omega[..., 1, 0]
    w = np.sqrt(-det)
    return np.cosh(w)[..., None, None] * I2 + _sinhc_complex(w)[..., None, None] * omega


def _dirac_generator(mu1, mu2, z):
    """-J (mu - z I) for scalar mu entries and an array of z."""
    A = np.empty(z.shape + (2, 2), dtype=complex)
    A[..., 0, 0] = mu2
    A[..., 0, 1] = -mu1 - z
    A[..., 1, 0] = -mu1 + z
    A[..., 1, 1] = -mu2
    return A


def _magnus4(A1, A2, h):
    omega = 0.5 * h * (A1 + A2) + _MAGNUS_C * h * h * (A2 @ A1 - A1 @ A2)
    return expm_traceless(omega)


def _breakpoints(N, x_end, steps, atoms):
    nodes = np.linspace(0.0, N, steps + 1)
    nodes = nodes[nodes < x_end]
    pts = np.union1d(np.append(nodes, x_end), [a for a in atoms if a <= x_end])
    return pts


def _check_mu(mu):
    if not np.isfinite(mu.ac_density).all():
        raise ValueError("non-finite entries in mu")


def propagate(mu, z, x_end=None, steps=512, path=False):
    """Propagate T(x, z) from 0 to ``x_end`` for an array of spectral values.

    Returns ``T`` of shape ``z.shape + (2, 2)``. With ``path=True`` also returns
    the breakpoints and the right-continuous values of T there, plus a boolean
    mask of positions carrying an atom (where the left limit differs).
    """
    _check_mu(mu)
    if steps < 16:
        raise ValueError("steps must be at least 16")
    x_end = mu.N if x_end is None else float(x_end)
    if not 0.0 <= x_end <= mu.N * (1 + 1e-14):
        raise ValueError("x outside [0, N]")
    z = np.asarray(z, dtype=complex)
    atoms = {pm.position: jump_factor(pm, Direction.LEFT_TO_RIGHT) for pm in mu.point_masses}
    pts = _breakpoints(mu.N, x_end, steps, atoms)
    T = np.broadcast_to(I2, z.shape + (2, 2)).astype(complex)
    record = [T.copy()] if path else None
    left = [T.copy()] if path else None
    gauss = []
    for a, b in zip(pts[:-1], pts[1:]):
        gauss.extend((0.5 * (a + b) - _GAUSS * (b - a), 0.5 * (a + b) + _GAUSS * (b - a)))
    m1, m2 = mu.density(np.array(gauss)) if gauss else ((), ())
    for k, (a, b) in enumerate(zip(pts[:-1], pts[1:])):
        A1 = _dirac_generator(m1[2 * k], m2[2 * k], z)
        A2 = _dirac_generator(m1[2 * k + 1], m2[2 * k + 1], z)
        T = _magnus4(A1, A2, b - a) @ T
        if path:
            left.append(T.copy())
        if b in atoms:
            T = atoms[b] @ T
        if path:
            record.append(T.copy())
    if path:
        is_atom = np.array([p in atoms for p in pts])
        return T, pts, np.stack(record), np.stack(left), is_atom
    return T


def transfer_matrix(mu, x, z, steps=512):
    """T(x, z); scalar z gives a 2x2 array, array z a stack of them."""
    return propagate(mu, z, x, steps)


def db_function(mu, z, N=None, steps=512):
    """E_N(z) = u1(N, z) - i u2(N, z)."""
    T = propagate(mu, z, N, steps)
    return T[..., 0, 0] - 1j * T[..., 1, 0]


def _boundary_vector(beta):
    return np.array([np.cos(beta), np.sin(beta)])


def mobius_inverse(T, b):
    """Ratio p/q of (p, q) = T^{-1} b for a stack of 2x2 matrices."""
    det = T[..., 0, 0] * T[..., 1, 1] - T[..., 0, 1] * T[..., 1, 0]
    p = (T[..., 1, 1] * b[0] - T[..., 0, 1] * b[1]) / det
    q = (-T[..., 1, 0] * b[0] + T[..., 0, 0] * b[1]) / det
    if np.any(q == 0):
        raise ArithmeticError("Mobius denominator vanished")
    return p / q


def weyl_function(mu, beta, z, N=None, steps=512):
    """m_N^beta(z): the Mobius action of T(N, z)^{-1} on cot(beta)."""
    z = np.asarray(z, dtype=complex)
    if np.any(z.imag <= 0):
        raise ValueError("weyl_function needs Im z > 0")
    if not 0 <= beta < np.pi:
        raise ValueError("beta must lie in [0, pi)")
    T = propagate(mu, z, N, steps)
    return mobius_inverse(T, _boundary_vector(beta))


def boundary_function(mu, beta, lam, steps=512):
    """w(lambda) = e_beta^T J u(N, lambda); its zeros are the eigenvalues."""
    T = propagate(mu, np.asarray(lam, dtype=float), None, steps)
    u = T[..., :, 0].real
    e = _boundary_vector(beta)
    Ju = np.stack([-u[..., 1], u[..., 0]], axis=-1)
    return Ju @ e


def eigenvalues(mu, beta, window, steps=512, resolution=None, max_refine=4):
    """All eigenvalues in ``window`` of the problem f2(0) = 0, e_beta^* J f(N) = 0.

    Sign changes of the boundary function are scanned at ``resolution``
    (default pi/(8N)); the scan is repeated at half the step and the count
    must agree, otherwise the grid is refined up to ``max_refine`` times.
    Each bracket is then bisected to the configured tolerance.
    """
    lo, hi = map(float, window)
    if not (np.isfinite(lo) and np.isfinite(hi) and hi > lo):
        raise ValueError("window must be a finite interval")
    step = resolution or np.pi / (8.0 * mu.N)

    def brackets(h):
        n = max(int(np.ceil((hi - lo) / h)), 1)
        grid = np.linspace(lo, hi, n + 1)
        w = boundary_function(mu, beta, grid, steps)
        exact = grid[w == 0.0]
        change = np.nonzero(np.sign(w[:-1]) * np.sign(w[1:]) < 0)[0]
        return grid, w, change, exact

    for _ in range(max_refine + 1):
        coarse = brackets(step)
        fine = brackets(step / 2)
        if len(coarse[2]) + len(coarse[3]) == len(fine[2]) + len(fine[3]):
            break
        step /= 2
    else:
        raise RuntimeError("eigenvalue scan could not separate roots; refine the window")

    grid, w, change, exact = fine
    a, b = grid[change], grid[change + 1]
    fa = w[change]
    while a.size and np.max(b - a) > DEFAULT.bisection:
        m = 0.5 * (a + b)
        fm = boundary_function(mu, beta, m, steps)
        left = np.sign(fm) == np.sign(fa)
        a = np.where(left, m, a)
        fa = np.where(left, fm, fa)
        b = np.where(left, b, m)
    roots = np.concatenate([0.5 * (a + b), exact])
    return np.sort(roots)


def eigenfunction_norms(mu, lam, steps=512):
    """Integral over [0, N] of |u(s, lambda)|**2 by composite Simpson per smooth piece."""
    lam = np.asarray(lam, dtype=float)
    _, pts, right, left, is_atom = propagate(mu, lam, None, steps, path=True)
    dens = np.sum(np.abs(right[..., :, 0]) ** 2, axis=-1)
    dens_left = np.sum(np.abs(left[..., :, 0]) ** 2, axis=-1)
    cuts = np.concatenate([[0], np.nonzero(is_atom)[0], [pts.size - 1]])
    total = np.zeros(lam.shape)
    for i0, i1 in zip(cuts[:-1], cuts[1:]):
        if i1 <= i0:
            continue
        # values on [x_i0, x_i1): right limit at the start, left limit at the end
        y = np.concatenate([dens[i0:i1], dens_left[i1:i1 + 1]], axis=0)
        total += simpson(y, x=pts[i0:i1 + 1], axis=0)
    return total


def spectral_measure(mu, beta, window, steps=512):
    """Eigenvalues in ``window`` with weights 1 / ||u(., lambda_k)||**2."""
    lam = eigenvalues(mu, beta, window, steps)
    norms = eigenfunction_norms(mu, lam, steps) if lam.size else np.zeros(0)
    return SpectralMeasure(lam, 1.0 / norms, mu.N, beta)


def transform_to_spectrum(mu, f, lam, steps=512):
    """(U f)(lambda) = integral of u(s, lambda)^T f(s) ds for real lambda.

    ``f`` maps an array of positions to shape ``(m, 2)``.
    """
    lam = np.asarray(lam, dtype=float)
    _, pts, right, left, is_atom = propagate(mu, lam, None, steps, path=True)
    fx = np.asarray(f(pts))
    vals = np.einsum("x...i,xi->x...", right[..., :, 0].real, fx)
    vals_left = np.einsum("x...i,xi->x...", left[..., :, 0].real, fx)
    cuts = np.concatenate([[0], np.nonzero(is_atom)[0], [pts.size - 1]])
    total = np.zeros(lam.shape)
    for i0, i1 in zip(cuts[:-1], cuts[1:]):
        if i1 <= i0:
            continue
        y = np.concatenate([vals[i0:i1], vals_left[i1:i1 + 1]], axis=0)
        total += simpson(y, x=pts[i0:i1 + 1], axis=0)
    return total


def canonical_transfer_matrix(H, z, x_end=None, steps=None):
    """Solution of u' = z J H(x) u with u(0) = I for a sampled canonical system."""
    z = np.asarray(z, dtype=complex)
    x_end = H.N if x_end is None else float(x_end)
    steps = steps or (H.h.shape[0] - 1)
    pts = np.linspace(0.0, x_end, steps + 1)
    U = np.broadcast_to(I2, z.shape + (2, 2)).astype(complex)
    zJ = z[..., None, None] * J
    for a, b in zip(pts[:-1], pts[1:]):
        c, d = 0.5 * (a + b) - _GAUSS * (b - a), 0.5 * (a + b) + _GAUSS * (b - a)
        A1 = zJ @ H.at(c)
        A2 = zJ @ H.at(d)
        U = _magnus4(A1, A2, b - a) @ U
    return U


def canonical_weyl_function(H, z, boundary, steps=None):
    """Weyl function of u' = zJHu with u2(0) = 0 and b^T J u(N) = 0."""
    z = np.asarray(z, dtype=complex)
    if np.any(z.imag <= 0):
        raise ValueError("canonical_weyl_function needs Im z > 0")
    U = canonical_transfer_matrix(H, z, None, steps)
    return mobius_inverse(U, np.asarray(boundary, dtype=float))


def exponential_type(H):
    """Integral over [0, N] of sqrt(det H), clipped at 0."""
    if not isinstance(H, CanonicalSystem):
        raise TypeError("expected a CanonicalSystem")
    return float(np.trapezoid(np.sqrt(np.maximum(H.det(), 0.0)), H.grid))
