"""Command-line entry point: ``dirac-spectral <command> --config cfg.json``.

Each command reads one JSON config, writes its outputs into ``output_path``
(a directory) and always leaves a ``summary.json`` there holding the full
config with defaults filled in and the invariant-deviation metrics of the
stages it ran. Wall-clock timings go to ``timing.json`` so that identical
configs give bit-identical summaries.

Exit codes: 0 success, 2 input error, 3 numerical-guard failure.
"""

import argparse
import json
import math
import os
import sys
import time
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from . import forward, gl_extract, inverse, series
from . import io as dio
from .config import DEFAULT
from .core import GLFunction

COMMANDS = ("forward", "spectrum", "gl", "check-phi", "inverse", "convert", "roundtrip", "series-check")
EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3


class GuardFailure(ArithmeticError):
    """A numerical guard tripped; ``stage`` names the pipeline step."""

    def __init__(self, stage, message):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


@dataclass
class RunConfig:
    command: str
    input_path: str = ""
    output_path: str = "out"
    N: float = 1.0
    beta: float = 0.0
    ode_steps: int = 512
    nystrom_dim: int = 129
    x_count: int = 64
    fourier_window: float = 0.0
    mollifier_width: float = 0.0
    phi_samples: int = 2049
    ladder: int = 3
    phi_corruption: float = 0.0
    series_order: int = 4
    delta: float = 0.0
    seed: int = 0

    def validate(self):
        if self.command not in COMMANDS:
            raise dio.InputError(f"unknown command {self.command!r}")
        if not (math.isfinite(self.N) and self.N > 0):
            raise dio.InputError("N must be positive")
        if not 0.0 <= self.beta < math.pi:
            raise dio.InputError("beta must lie in [0, pi)")
        if self.ode_steps < 16:
            raise dio.InputError("ode_steps must be at least 16")
        if self.nystrom_dim < inverse.MIN_DIM or self.nystrom_dim % 2 == 0:
            raise dio.InputError(f"nystrom_dim must be odd and at least {inverse.MIN_DIM}")
        if self.x_count < 1:
            raise dio.InputError("x_count must be positive")
        if self.phi_samples < 3 or self.phi_samples % 2 == 0:
            raise dio.InputError("phi_samples must be odd and at least 3")
        if self.fourier_window < 0 or self.mollifier_width < 0 or self.phi_corruption < 0:
            raise dio.InputError("fourier_window, mollifier_width and phi_corruption must be non-negative")
        if self.ladder < 1:
            raise dio.InputError("ladder must have at least one rung")
        if not 1 <= self.series_order <= series.MAX_ORDER:
            raise dio.InputError(f"series_order must lie in 1..{series.MAX_ORDER}")
        return self

    @classmethod
    def load(cls, path, command=None):
        data = dio._read_json(path)
        if not isinstance(data, dict):
            raise dio.InputError("config must be a JSON object")
        if command is not None:
            data.setdefault("command", command)
            if data["command"] != command:
                raise dio.InputError(f"config is for {data['command']!r}, not {command!r}")
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise dio.InputError(f"unknown config keys: {sorted(unknown)}")
        try:
            cfg = cls(**data)
        except TypeError as exc:
            raise dio.InputError(str(exc)) from exc
        base = Path(path).resolve().parent
        for key in ("input_path", "output_path"):
            value = getattr(cfg, key)
            if value and not Path(value).is_absolute():
                setattr(cfg, key, str(base / value))
        return cfg.validate()


def thread_count():
    try:
        return max(1, int(os.environ.get("DIRAC_SPECTRAL_THREADS", "1")))
    except ValueError:
        return 1


def _input(cfg):
    if not cfg.input_path:
        raise dio.InputError("input_path is required")
    return cfg.input_path


def _window(cfg, N):
    return cfg.fourier_window or 32.0 / N


def cmd_forward(cfg, out):
    mu = dio.read_measure(_input(cfg))
    W = _window(cfg, mu.N)
    E = gl_extract.sample_db_function(mu, W, steps=cfg.ode_steps)
    t = E.nodes
    T = forward.propagate(mu, t, None, cfg.ode_steps)
    det = T[..., 0, 0] * T[..., 1, 1] - T[..., 0, 1] * T[..., 1, 0]
    z = t + 1j
    m = forward.weyl_function(mu, cfg.beta, z, steps=cfg.ode_steps)
    dio.write_complex_csv(out / "E.csv", t, E.samples)
    dio.write_complex_csv(out / "weyl.csv", t, m)
    return {
        "det_T_max_deviation": float(np.max(np.abs(det - 1.0))),
        "modulus_E_minus_one_max": float(np.max(np.abs(np.abs(E.samples) - 1.0))),
        "weyl_imag_min": float(np.min(m.imag)),
        "weyl_sample_imag_z": 1.0,
        "grid_points": int(t.size),
    }


def cmd_spectrum(cfg, out):
    mu = dio.read_measure(_input(cfg))
    W = _window(cfg, mu.N)
    rho = forward.spectral_measure(mu, cfg.beta, (-W, W), cfg.ode_steps)
    dio.write_spectral_measure(out / "spectral_measure.json", rho)
    summary = {"atoms": len(rho), "window": [-W, W], "weight_min": float(rho.weights.min(initial=np.inf))}
    if cfg.mollifier_width:
        phi = gl_extract.phi_from_spectral_measure(rho, cfg.mollifier_width, cfg.phi_samples)
        dio.write_phi(out / "phi_spectral.csv", phi)
        summary["phi_sup_reliable"] = phi.sup_norm(phi.reliable)
    return summary


def _positivity(phi, cfg, out):
    rep = gl_extract.check_phi(phi, phi.N, cfg.nystrom_dim)
    dio.write_json(out / "positivity.json", rep.to_dict())
    return rep


def cmd_gl(cfg, out):
    mu = dio.read_measure(_input(cfg))
    start = cfg.fourier_window or None
    phi, E = gl_extract.phi_from_dirac(mu, cfg.phi_samples, cfg.ode_steps, start_width=start)
    dio.write_phi(out / "phi.csv", phi)
    rep = _positivity(phi, cfg, out)
    if not rep.passed:
        raise GuardFailure("check-phi", f"min eigenvalue {rep.min_eigenvalue:.3e}")
    return {"fourier_window": E.hi, "phi_sup": phi.sup_norm(), "min_eigenvalue": rep.min_eigenvalue}


def cmd_check_phi(cfg, out):
    phi = dio.read_phi(_input(cfg))
    rep = _positivity(phi, cfg, out)
    if not rep.passed:
        raise GuardFailure("check-phi", f"min eigenvalue {rep.min_eigenvalue:.3e}")
    return {"min_eigenvalue": rep.min_eigenvalue}


def _reconstruct(phi, cfg, x_count, dim):
    rep = gl_extract.check_phi(phi, phi.N, dim)
    if not rep.passed:
        raise GuardFailure("check-phi", f"phi is not in Phi_N (min eigenvalue {rep.min_eigenvalue:.3e})")
    try:
        H, inter = inverse.reconstruct_H(phi, x_count, dim, True, workers=thread_count())
    except ArithmeticError as exc:
        raise GuardFailure("reconstruct", str(exc)) from exc
    try:
        mu = inverse.h_to_dirac(H)
    except (ArithmeticError, ValueError) as exc:
        raise GuardFailure("h_to_dirac", str(exc)) from exc
    D = np.array([c.D for c in inter])
    metrics = {
        "min_eigenvalue": rep.min_eigenvalue,
        "det_H_max_deviation": float(np.max(np.abs(H.det() - 1.0))),
        "min_abs_D": float(np.min(np.abs(D))),
    }
    return H, mu, metrics


def cmd_inverse(cfg, out):
    phi = dio.read_phi(_input(cfg))
    H, mu, metrics = _reconstruct(phi, cfg, cfg.x_count, cfg.nystrom_dim)
    dio.write_canonical(out / "H.csv", H)
    dio.write_measure(out / "mu.json", mu)
    dio.write_density_csv(out / "mu.csv", mu)
    return metrics


def cmd_convert(cfg, out):
    src = _input(cfg)
    if src.endswith(".json"):
        mu = dio.read_measure(src)
        H = inverse.dirac_to_h(mu, cfg.ode_steps)
        dio.write_canonical(out / "H.csv", H)
        return {"direction": "dirac_to_h", "det_H_max_deviation": float(np.max(np.abs(H.det() - 1.0)))}
    H = dio.read_canonical(src)
    try:
        mu, diag = inverse.h_to_dirac(H, return_diagnostics=True)
    except (ArithmeticError, ValueError) as exc:
        raise GuardFailure("h_to_dirac", str(exc)) from exc
    dio.write_measure(out / "mu.json", mu)
    return {"direction": "h_to_dirac", **diag}


def _corrupt(phi, amplitude):
    """Subtract amplitude * (1 - |t|/N)_+ from phi."""
    if not amplitude:
        return phi
    x = phi.nodes
    return GLFunction(phi.N, phi.samples - amplitude * np.clip(1.0 - np.abs(x) / phi.N, 0.0, None))


def cmd_roundtrip(cfg, out):
    mu = dio.read_measure(_input(cfg))
    if not mu.is_absolutely_continuous:
        raise dio.InputError("roundtrip needs a measure without point masses")
    rungs = []
    for r in range(cfg.ladder):
        f = 2**r
        steps, dim, xc = cfg.ode_steps * f, (cfg.nystrom_dim - 1) * f + 1, cfg.x_count * f
        try:
            phi, E = gl_extract.phi_from_dirac(mu, cfg.phi_samples, steps, start_width=cfg.fourier_window or None)
        except ArithmeticError as exc:
            raise GuardFailure("gl", str(exc)) from exc
        phi = _corrupt(phi, cfg.phi_corruption)
        _, rec, metrics = _reconstruct(phi, cfg, xc, dim)
        m1, m2 = mu.density(rec.grid)
        err = np.hypot(rec.ac_density[:, 0] - m1, rec.ac_density[:, 1] - m2)
        metrics.update({
            "ode_steps": steps,
            "nystrom_dim": dim,
            "x_count": xc,
            "fourier_window": E.hi,
            "sup_error": float(err.max()),
            "l1_error": float(np.trapezoid(err, rec.grid)),
        })
        dio.write_density_csv(out / f"mu_recovered_{r}.csv", rec)
        rungs.append(metrics)
    sup = [m["sup_error"] for m in rungs]
    orders = [math.log2(a / b) if b > 0 and a > 0 else math.inf for a, b in zip(sup, sup[1:])]
    report = {"rungs": rungs, "empirical_orders": orders}
    dio.write_json(out / "errors.json", report)
    return report


def cmd_series_check(cfg, out):
    mu = dio.read_measure(_input(cfg))
    delta = cfg.delta or mu.N
    rng = np.random.default_rng(cfg.seed)
    r = 3.0 * np.sqrt(rng.uniform(size=10))
    z = r * np.exp(2j * np.pi * rng.uniform(size=10))
    try:
        se = series.series_expansion(mu, z, delta, cfg.series_order)
    except (ValueError, NotImplementedError) as exc:
        raise dio.InputError(str(exc)) from exc
    E = forward.db_function(mu, z, delta, cfg.ode_steps)
    err = np.abs(se.value - E)
    P = series.dP_density(mu)
    tv = P.total_variation(delta)
    n = np.arange(1, cfg.series_order + 1)
    mags = np.abs(se.terms).max(axis=1)
    bounds = np.array([series.factorial_bound(tv, k, z, delta).max() for k in n])
    dio.write_series_debug(out / "series_terms.csv", n, mags, bounds)
    return {
        "max_abs_error": float(err.max()),
        "max_error_over_bound": float(np.max(err / se.error_bound)),
        "within_bound": bool(np.all(err <= se.error_bound)),
        "variation_P": tv,
    }


HANDLERS = {
    "forward": cmd_forward,
    "spectrum": cmd_spectrum,
    "gl": cmd_gl,
    "check-phi": cmd_check_phi,
    "inverse": cmd_inverse,
    "convert": cmd_convert,
    "roundtrip": cmd_roundtrip,
    "series-check": cmd_series_check,
}


def run(cfg):
    """Run one command; returns the summary dict (raises on failure)."""
    out = Path(cfg.output_path)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    metrics = HANDLERS[cfg.command](cfg, out)
    summary = {"config": asdict(cfg), "tolerances": DEFAULT.as_dict(), "metrics": metrics}
    dio.write_json(out / "summary.json", summary)
    dio.write_json(out / "timing.json", {"runtime_seconds": time.perf_counter() - t0})
    return summary


def main(argv=None):
    parser = argparse.ArgumentParser(prog="dirac-spectral", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="JSON run configuration")
    args = parser.parse_args(argv)
    try:
        cfg = RunConfig.load(args.config, args.command)
        summary = run(cfg)
    except dio.InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except GuardFailure as exc:
        print(f"numerical guard failed at stage {exc.stage}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ArithmeticError, RuntimeError, np.linalg.LinAlgError) as exc:
        print(f"numerical guard failed: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    print(json.dumps(summary["metrics"], sort_keys=True))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
