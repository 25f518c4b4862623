import numpy as np
import pytest

from dirac_spectral.core import DiracMeasure, PointMass
from dirac_spectral.gl_extract import phi_from_dirac


def bump(x, N=1.0):
    return np.sin(np.pi * np.asarray(x) / N) ** 4


def bump_measure(samples=1025, scale=1.0):
    """Smooth density vanishing at both ends, L1 norm about 0.29 * scale."""
    return DiracMeasure.from_functions(
        1.0,
        lambda x: 0.6 * scale * bump(x),
        lambda x: 0.9 * scale * bump(x) * np.cos(2 * x),
        samples,
    )


def random_smooth_measure(rng, samples=257, atoms=0, N=1.0, amplitude=1.0):
    a = amplitude * rng.normal(size=5)
    pms = ()
    if atoms:
        pos = np.sort(rng.choice(np.arange(1, 64), size=atoms, replace=False) / 64.0 * N)
        pms = tuple(PointMass(float(p), *rng.normal(size=2)) for p in pos)
    return DiracMeasure.from_functions(
        N,
        lambda x: a[0] * np.sin(2 * x + a[1]),
        lambda x: a[2] * np.cos(3 * x) + a[3] * x + a[4],
        samples,
        pms,
    )


def random_bump_measure(rng, samples=1025):
    """Random smooth density vanishing at 0 and N so that phi has no jump at 0."""
    a = rng.uniform(-1.0, 1.0, size=4)
    return DiracMeasure.from_functions(
        1.0,
        lambda x: 0.5 * a[0] * bump(x) * np.cos(a[1] * 3 * x),
        lambda x: 0.5 * a[2] * bump(x) * np.sin(2 * x + a[3]),
        samples,
    )


@pytest.fixture(scope="session")
def bump_mu():
    return bump_measure()


@pytest.fixture(scope="session")
def bump_phi(bump_mu):
    phi, _ = phi_from_dirac(bump_mu)
    return phi


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
