import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm
from scipy.optimize import brentq

from dirac_spectral.core import J, CanonicalSystem, DiracMeasure, PointMass, jump_factor
from dirac_spectral.forward import (
    boundary_function,
    canonical_transfer_matrix,
    db_function,
    eigenfunction_norms,
    eigenvalues,
    expm_traceless,
    exponential_type,
    propagate,
    spectral_measure,
    transfer_matrix,
    transform_to_spectrum,
    weyl_function,
)
from dirac_spectral.inverse import dirac_to_h

from conftest import random_smooth_measure


def free_T(x, z):
    return np.array([[np.cos(z * x), -np.sin(z * x)], [np.sin(z * x), np.cos(z * x)]])


def constant_measure(c1, c2, N=1.0):
    return DiracMeasure(N, np.tile([c1, c2], (17, 1)))


def constant_T(c1, c2, x, z):
    return expm(-J @ (np.array([[c1, c2], [c2, -c1]]) - z * np.eye(2)) * x)


class TestTransferMatrix:
    @pytest.mark.parametrize("z", [0.0, 3.7, 2.0 - 1.5j, 15.0 + 0.5j])
    def test_free_field(self, z):
        mu = DiracMeasure.zero(1.0)
        assert np.allclose(transfer_matrix(mu, 0.7, z), free_T(0.7, z), atol=1e-12)

    def test_free_db_function(self):
        t = np.linspace(-20, 20, 101)
        assert np.allclose(db_function(DiracMeasure.zero(2.0), t), np.exp(-2j * t), atol=1e-12)

    @pytest.mark.parametrize("z", [0.0, 1.3, -2.0 + 0.7j])
    def test_constant_coefficient_matches_expm(self, z):
        mu = constant_measure(0.4, -0.9)
        assert np.allclose(transfer_matrix(mu, 0.8, z), constant_T(0.4, -0.9, 0.8, z), atol=1e-12)

    def test_single_atom_composition(self):
        pm = PointMass(0.3, 0.5, -1.2)
        mu = DiracMeasure(1.0, np.zeros((5, 2)), (pm,))
        z = 2.0 + 0.3j
        ref = free_T(0.7, z) @ jump_factor(pm) @ free_T(0.3, z)
        assert np.allclose(transfer_matrix(mu, 1.0, z), ref, atol=1e-12)
        # right continuity: the jump is already applied at x0
        assert np.allclose(transfer_matrix(mu, 0.3, z), jump_factor(pm) @ free_T(0.3, z), atol=1e-12)

    @settings(max_examples=25, deadline=None)
    @given(
        st.integers(0, 2**32 - 1),
        st.floats(0.0, 1.0),
        st.floats(-20.0, 20.0),
        st.floats(-2.0, 2.0),
        st.integers(0, 3),
    )
    def test_det_one_moderate_growth(self, seed, x, re, im, atoms):
        # |T|**2 * eps stays far below 1e-10 for |Im z| <= 2
        mu = random_smooth_measure(np.random.default_rng(seed), atoms=atoms, amplitude=0.5)
        T = transfer_matrix(mu, x, complex(re, im), steps=64)
        assert abs(np.linalg.det(T) - 1.0) <= 1e-10

    def test_det_deviation_is_rounding(self):
        # the deviation tracks eps * |T|**2 when T grows
        rng = np.random.default_rng(3)
        mu = random_smooth_measure(rng, atoms=2)
        for im in (5.0, 10.0, 15.0):
            T = transfer_matrix(mu, 1.0, 3.0 + 1j * im)
            assert abs(np.linalg.det(T) - 1.0) <= 64 * np.finfo(float).eps * np.abs(T).max() ** 2

    def test_composition(self, rng):
        mu = random_smooth_measure(rng, atoms=2)
        z = 1.7 - 0.4j
        x1, x2 = 0.37, 0.91
        if any(abs(pm.position - x1) < 1e-12 for pm in mu.point_masses):
            pytest.skip("atom at the split point")
        T1 = transfer_matrix(mu, x1, z, steps=4096)
        T2 = transfer_matrix(mu, x2, z, steps=4096)
        # propagate from x1 to x2 by hand: shift the measure
        g = np.linspace(x1, x2, 2049)
        m1, m2 = mu.density(g)
        shifted = DiracMeasure(
            x2 - x1,
            np.column_stack([m1, m2]),
            tuple(PointMass(pm.position - x1, pm.mu1, pm.mu2) for pm in mu.point_masses if x1 < pm.position <= x2),
        )
        T12 = transfer_matrix(shifted, x2 - x1, z, steps=2048)
        assert np.allclose(T2, T12 @ T1, atol=1e-9)

    def test_real_for_real_lambda(self, rng):
        mu = random_smooth_measure(rng, atoms=3)
        T = transfer_matrix(mu, 1.0, 7.5)
        assert np.max(np.abs(T.imag)) <= 1e-12

    def test_fourth_order(self):
        x = np.linspace(0.0, 1.0, 2**15 + 1)
        mu = DiracMeasure(1.0, np.column_stack([np.sin(3 * x), np.cos(5 * x) + x]))
        ref = transfer_matrix(mu, 1.0, 4.0 + 0.5j, steps=2048)
        errs = [np.abs(transfer_matrix(mu, 1.0, 4.0 + 0.5j, steps=s) - ref).max() for s in (16, 32, 64)]
        assert errs[0] / errs[1] >= 8 and errs[1] / errs[2] >= 8

    def test_expm_traceless(self):
        A = np.array([[0.3 + 1j, 2.0], [-0.5j, -0.3 - 1j]])
        assert np.allclose(expm_traceless(A), expm(A), atol=1e-13)

    def test_bad_x(self):
        with pytest.raises(ValueError):
            transfer_matrix(DiracMeasure.zero(1.0), 1.5, 0.0)


class TestWeyl:
    def test_free_pi_half(self):
        z = np.array([1.0 + 0.5j, -2.0 + 0.1j])
        assert np.allclose(weyl_function(DiracMeasure.zero(1.0), np.pi / 2, z), np.tan(z), atol=1e-12)

    def test_free_beta_zero(self):
        z = 0.3 + 1.1j
        assert weyl_function(DiracMeasure.zero(2.0), 0.0, z) == pytest.approx(-1.0 / np.tan(2 * z), abs=1e-12)

    def test_herglotz(self, rng):
        mu = random_smooth_measure(rng, atoms=2)
        z = rng.uniform(-10, 10, 40) + 1j * rng.uniform(0.01, 5, 40)
        for beta in (0.0, 1.0, 2.5):
            assert np.all(weyl_function(mu, beta, z).imag > 0)

    def test_requires_upper_half_plane(self):
        with pytest.raises(ValueError):
            weyl_function(DiracMeasure.zero(1.0), 0.0, 1.0 - 0.1j)


class TestEigenvalues:
    def test_free_pi_half(self):
        lam = eigenvalues(DiracMeasure.zero(1.0), np.pi / 2, (-10, 10))
        k = np.arange(-3, 3)
        assert np.allclose(lam, (k + 0.5) * np.pi, atol=1e-10)

    def test_free_beta_zero(self):
        lam = eigenvalues(DiracMeasure.zero(2.0), 0.0, (-5.1, 5.1))
        assert np.allclose(lam, np.arange(-3, 4) * np.pi / 2, atol=1e-10)

    def test_constant_coefficient_oracle(self):
        c1, c2, beta = 0.5, -0.3, 0.8
        e = np.array([np.cos(beta), np.sin(beta)])

        def w(lam):
            u = constant_T(c1, c2, 1.0, lam)[:, 0]
            return e @ (J @ u)

        grid = np.linspace(-12, 12, 2401)
        vals = np.array([w(g) for g in grid])
        idx = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]
        ref = np.array([brentq(w, grid[i], grid[i + 1], xtol=1e-14) for i in idx])
        lam = eigenvalues(constant_measure(c1, c2), beta, (-12, 12))
        assert lam.size == ref.size and np.allclose(lam, ref, atol=1e-9)

    def test_spacing(self, rng):
        mu = random_smooth_measure(rng)
        lam = eigenvalues(mu, 0.3, (-30, 30))
        assert np.min(np.diff(lam)) >= np.pi / (2 * (1 + mu.l1_norm()))

    def test_boundary_function_zero(self, rng):
        mu = random_smooth_measure(rng, atoms=1)
        lam = eigenvalues(mu, 1.1, (-8, 8))
        assert np.max(np.abs(boundary_function(mu, 1.1, lam))) < 1e-9

    def test_bad_window(self):
        with pytest.raises(ValueError):
            eigenvalues(DiracMeasure.zero(1.0), 0.0, (1.0, np.inf))


class TestSpectralMeasure:
    def test_free_weights(self):
        rho = spectral_measure(DiracMeasure.zero(3.0), 0.0, (-6, 6))
        assert np.allclose(rho.weights, 1.0 / 3.0, rtol=1e-10)

    def test_norm_identity_complex_step(self, rng):
        # int |u|^2 = -u(N)^T J d/dlambda u(N), the derivative by complex step
        mu = random_smooth_measure(rng, atoms=2)
        lam = np.array([-7.3, 0.4, 11.0])
        h = 1e-20
        T = propagate(mu, lam + 1j * h, None, 1024)
        u = T[..., :, 0].real
        du = T[..., :, 0].imag / h
        ref = -np.einsum("ki,ij,kj->k", u, J, du)
        assert np.allclose(eigenfunction_norms(mu, lam, 1024), ref, rtol=1e-8)

    def test_weights_positive_and_scaled(self, rng):
        for N in (0.5, 2.0):
            mu = random_smooth_measure(rng, N=N)
            rho = spectral_measure(mu, 0.0, (-20, 20))
            assert np.all(rho.weights > 0)
            # Gronwall: |u|^2 stays within exp(+-2 ||mu||_1) of 1
            bound = np.exp(2 * mu.l1_norm())
            assert np.all((rho.weights * N >= 1 / bound) & (rho.weights * N <= bound))

    def test_parseval_free(self):
        mu = DiracMeasure.zero(1.0)
        rho = spectral_measure(mu, 0.0, (-60, 60))
        Uf = transform_to_spectrum(mu, lambda s: np.column_stack([np.ones_like(s), 0 * s]), rho.lambdas)
        assert np.sum(rho.weights * Uf**2) == pytest.approx(1.0, abs=1e-8)

    def test_parseval_smooth(self, rng):
        mu = random_smooth_measure(rng, atoms=1, amplitude=0.5)
        f = lambda s: np.column_stack([np.ones_like(s), 0 * s])  # noqa: E731
        total, tail = 0.0, 1.0
        L = 50.0
        while tail > 0.01:
            rho = spectral_measure(mu, 0.0, (-L, L))
            Uf = transform_to_spectrum(mu, f, rho.lambdas)
            terms = rho.weights * Uf**2
            total = terms.sum()
            tail = terms[np.abs(rho.lambdas) > L / 2].sum() / total
            L *= 2
        assert total == pytest.approx(1.0, rel=0.02)


class TestCanonical:
    def test_identity_H_is_free(self):
        H = CanonicalSystem.identity(1.0, 65)
        z = 2.0 + 0.5j
        assert np.allclose(canonical_transfer_matrix(H, z), free_T(1.0, z), atol=1e-12)

    def test_exponential_type(self, rng):
        assert exponential_type(CanonicalSystem.identity(2.5)) == pytest.approx(2.5)
        h = np.tile([4.0, 0.0, 0.25], (9, 1))
        assert exponential_type(CanonicalSystem(1.5, h)) == pytest.approx(1.5)
        mu = random_smooth_measure(rng, atoms=0)
        assert exponential_type(dirac_to_h(mu, 256)) == pytest.approx(1.0, abs=1e-6)
