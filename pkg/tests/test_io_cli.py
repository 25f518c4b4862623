import json

import numpy as np
import pytest

from dirac_spectral import io as dio
from dirac_spectral.cli import RunConfig, main
from dirac_spectral.core import CanonicalSystem, DiracMeasure, GLFunction, PointMass, SpectralMeasure
from dirac_spectral.inverse import dirac_to_h

from conftest import bump_measure

FAST = {"ode_steps": 64, "nystrom_dim": 33, "x_count": 8, "phi_samples": 401, "ladder": 1}


def write_cfg(tmp_path, name="cfg.json", **cfg):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def run_cli(tmp_path, command, **cfg):
    return main([command, "--config", write_cfg(tmp_path, **cfg)])


@pytest.fixture
def measure_file(tmp_path):
    path = tmp_path / "mu.json"
    dio.write_measure(path, bump_measure(257))
    return path.name


class TestIO:
    def test_measure_round_trip(self, tmp_path):
        mu = DiracMeasure(2.0, np.random.default_rng(0).normal(size=(9, 2)), (PointMass(0.5, 1.0, -0.25),))
        dio.write_measure(tmp_path / "m.json", mu)
        back = dio.read_measure(tmp_path / "m.json")
        assert back.N == mu.N and np.array_equal(back.ac_density, mu.ac_density)
        assert back.point_masses == mu.point_masses

    def test_phi_round_trip(self, tmp_path):
        phi = GLFunction.from_function(1.0, lambda x: np.exp(1j * x) / (2 + x * x), 101)
        dio.write_phi(tmp_path / "phi.csv", phi)
        assert np.array_equal(dio.read_phi(tmp_path / "phi.csv").samples, phi.samples)

    def test_canonical_round_trip(self, tmp_path):
        H = dirac_to_h(bump_measure(65), 64)
        dio.write_canonical(tmp_path / "H.csv", H)
        back = dio.read_canonical(tmp_path / "H.csv")
        assert back.N == H.N and np.array_equal(back.h, H.h)

    def test_spectral_round_trip(self, tmp_path):
        rho = SpectralMeasure(np.array([-1.0, 0.5]), np.array([0.3, 0.7]), 1.0, 0.2)
        dio.write_spectral_measure(tmp_path / "r.json", rho)
        back = dio.read_spectral_measure(tmp_path / "r.json")
        assert np.array_equal(back.lambdas, rho.lambdas) and back.beta == 0.2

    @pytest.mark.parametrize("text", ["{", '{"N": 1.0}', '{"N": -1, "grid": [[0, 0], [0, 0]]}'])
    def test_bad_measure(self, tmp_path, text):
        (tmp_path / "m.json").write_text(text)
        with pytest.raises(dio.InputError):
            dio.read_measure(tmp_path / "m.json")

    def test_missing(self, tmp_path):
        with pytest.raises(dio.InputError):
            dio.read_phi(tmp_path / "nope.csv")


class TestConfig:
    def test_defaults_and_relative_paths(self, tmp_path):
        cfg = RunConfig.load(write_cfg(tmp_path, command="forward", input_path="mu.json"))
        assert cfg.nystrom_dim == 129 and cfg.input_path == str(tmp_path / "mu.json")

    @pytest.mark.parametrize(
        "bad", [{"nystrom_dim": 64}, {"beta": 4.0}, {"unknown_key": 1}, {"series_order": 9}, {"command": "gl"}]
    )
    def test_rejects(self, tmp_path, bad):
        cfg = {"command": "forward", **bad}
        with pytest.raises(dio.InputError):
            RunConfig.load(write_cfg(tmp_path, **cfg), "forward")


class TestCommands:
    def test_forward(self, tmp_path, measure_file):
        assert run_cli(tmp_path, "forward", input_path=measure_file, ode_steps=64, fourier_window=16.0) == 0
        s = json.loads((tmp_path / "out" / "summary.json").read_text())
        assert s["metrics"]["det_T_max_deviation"] <= 1e-10 and s["metrics"]["weyl_imag_min"] > 0
        t, E = dio.read_complex_csv(tmp_path / "out" / "E.csv")
        assert t.size == E.size

    def test_spectrum(self, tmp_path, measure_file):
        assert run_cli(tmp_path, "spectrum", input_path=measure_file, fourier_window=20.0, ode_steps=128) == 0
        rho = dio.read_spectral_measure(tmp_path / "out" / "spectral_measure.json")
        assert np.all(rho.weights > 0) and len(rho) > 5

    def test_gl_then_inverse(self, tmp_path, measure_file):
        assert run_cli(tmp_path, "gl", input_path=measure_file, output_path="gl", **FAST) == 0
        assert run_cli(tmp_path, "check-phi", input_path="gl/phi.csv", output_path="chk", **FAST) == 0
        assert run_cli(tmp_path, "inverse", input_path="gl/phi.csv", output_path="inv", **FAST) == 0
        H = dio.read_canonical(tmp_path / "inv" / "H.csv")
        assert np.max(np.abs(H.det() - 1)) <= 1e-8

    def test_convert_both_ways(self, tmp_path, measure_file):
        assert run_cli(tmp_path, "convert", input_path=measure_file, output_path="a", ode_steps=128) == 0
        assert run_cli(tmp_path, "convert", input_path="a/H.csv", output_path="b") == 0
        back = dio.read_measure(tmp_path / "b" / "mu.json")
        ref = np.column_stack(bump_measure(257).density(back.grid))
        assert np.max(np.abs(back.ac_density - ref)) <= 1e-3

    def test_series_check(self, tmp_path):
        dio.write_measure(tmp_path / "small.json", bump_measure(1025, scale=0.1))
        assert run_cli(tmp_path, "series-check", input_path="small.json", ode_steps=1024) == 0
        s = json.loads((tmp_path / "out" / "summary.json").read_text())
        assert s["metrics"]["within_bound"]

    def test_series_check_norm_too_large(self, tmp_path, measure_file):
        assert run_cli(tmp_path, "series-check", input_path=measure_file) == 2

    def test_zero_roundtrip(self, tmp_path):
        dio.write_measure(tmp_path / "zero.json", DiracMeasure.zero(1.0))
        assert run_cli(tmp_path, "roundtrip", input_path="zero.json", **FAST) == 0
        rep = json.loads((tmp_path / "out" / "errors.json").read_text())
        assert rep["rungs"][0]["sup_error"] <= 1e-8

    def test_corrupted_phi_exits_3(self, tmp_path, measure_file, capsys):
        code = run_cli(tmp_path, "roundtrip", input_path=measure_file, phi_corruption=3.0, **FAST)
        assert code == 3
        assert "check-phi" in capsys.readouterr().err

    def test_missing_input_exits_2(self, tmp_path):
        assert run_cli(tmp_path, "forward", input_path="absent.json") == 2

    def test_atoms_rejected_by_roundtrip(self, tmp_path):
        mu = DiracMeasure(1.0, np.zeros((5, 2)), (PointMass(0.5, 0.1, 0.0),))
        dio.write_measure(tmp_path / "atom.json", mu)
        assert run_cli(tmp_path, "roundtrip", input_path="atom.json", **FAST) == 2

    def test_deterministic_summary(self, tmp_path, measure_file):
        cfg = write_cfg(tmp_path, input_path=measure_file, **FAST)
        assert main(["gl", "--config", cfg]) == 0
        first = (tmp_path / "out" / "summary.json").read_bytes()
        assert main(["gl", "--config", cfg]) == 0
        assert (tmp_path / "out" / "summary.json").read_bytes() == first

    def test_threads_identical(self, tmp_path, measure_file, monkeypatch):
        assert run_cli(tmp_path, "roundtrip", input_path=measure_file, output_path="one", **FAST) == 0
        monkeypatch.setenv("DIRAC_SPECTRAL_THREADS", "4")
        assert run_cli(tmp_path, "roundtrip", input_path=measure_file, output_path="four", **FAST) == 0
        a = (tmp_path / "one" / "errors.json").read_bytes()
        assert a == (tmp_path / "four" / "errors.json").read_bytes()


def test_canonical_rejects_bad_csv(tmp_path):
    (tmp_path / "H.csv").write_text("x,h11,h12,h22\n0,1,0,1\n1,a,0,1\n")
    with pytest.raises(dio.InputError):
        dio.read_canonical(tmp_path / "H.csv")


def test_canonical_system_type():
    assert isinstance(dirac_to_h(DiracMeasure.zero(1.0)), CanonicalSystem)
