"""JSON and CSV readers and writers for the package data types."""

import csv
import json
from pathlib import Path

import numpy as np

from .core import CanonicalSystem, DiracMeasure, GLFunction, PointMass, SpectralMeasure


class InputError(ValueError):
    """Malformed or missing input file."""


def _read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise InputError(f"no such file: {path}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"invalid JSON in {path}: {exc}") from exc


def write_json(path, data):
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")


def measure_to_dict(mu):
    return {
        "N": mu.N,
        "grid": mu.ac_density.tolist(),
        "point_masses": [{"x": pm.position, "mu1": pm.mu1, "mu2": pm.mu2} for pm in mu.point_masses],
    }


def measure_from_dict(data):
    try:
        N = float(data["N"])
        grid = np.asarray(data["grid"], dtype=float)
        atoms = tuple(
            PointMass(float(p["x"]), float(p["mu1"]), float(p["mu2"])) for p in data.get("point_masses", [])
        )
        return DiracMeasure(N, grid, atoms)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"bad Dirac measure: {exc}") from exc


def read_measure(path):
    return measure_from_dict(_read_json(path))


def write_measure(path, mu):
    write_json(path, measure_to_dict(mu))


def _write_rows(path, header, columns):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in zip(*columns):
            w.writerow([repr(float(v)) for v in row])


def _read_rows(path):
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except FileNotFoundError as exc:
        raise InputError(f"no such file: {path}") from exc
    header, body = rows[0], rows[1:]
    try:
        return header, np.array(body, dtype=float)
    except ValueError as exc:
        raise InputError(f"non-numeric CSV in {path}") from exc


def write_complex_csv(path, t, values):
    """Columns t, re, im."""
    values = np.asarray(values, dtype=complex)
    _write_rows(path, ["t", "re", "im"], [t, values.real, values.imag])


def read_complex_csv(path):
    _, data = _read_rows(path)
    return data[:, 0], data[:, 1] + 1j * data[:, 2]


def write_phi(path, phi):
    """CSV (x, re, im) with a JSON header file next to it."""
    path = Path(path)
    write_complex_csv(path, phi.nodes, phi.samples)
    write_json(path.with_suffix(".json"), {"N": phi.N, "samples": int(phi.samples.size)})


def read_phi(path):
    path = Path(path)
    header = _read_json(path.with_suffix(".json"))
    _, values = read_complex_csv(path)
    if values.size != header["samples"]:
        raise InputError("phi CSV length does not match its header")
    return GLFunction(float(header["N"]), values)


def write_canonical(path, H):
    h = H.h
    _write_rows(path, ["x", "h11", "h12", "h22"], [H.grid, h[:, 0], h[:, 1], h[:, 2]])


def read_canonical(path):
    _, data = _read_rows(path)
    x = data[:, 0]
    return CanonicalSystem(float(x[-1]), data[:, 1:4])


def write_density_csv(path, mu):
    _write_rows(path, ["x", "mu1", "mu2"], [mu.grid, mu.ac_density[:, 0], mu.ac_density[:, 1]])


def write_kernels(path, ks):
    k = ks.k
    _write_rows(path, ["t", "re_j", "im_j", "re_k", "im_k"], [ks.nodes, ks.j.real, ks.j.imag, k.real, k.imag])


def write_spectral_measure(path, rho):
    data = rho.to_dict()
    data.update({"N": rho.N, "beta": rho.beta})
    write_json(path, data)


def read_spectral_measure(path):
    data = _read_json(path)
    try:
        atoms = data["atoms"]
        lam = np.array([a["lambda"] for a in atoms], dtype=float)
        w = np.array([a["weight"] for a in atoms], dtype=float)
        return SpectralMeasure(lam, w, float(data["N"]), float(data.get("beta", 0.0)))
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"bad spectral measure: {exc}") from exc


def write_series_debug(path, orders, magnitudes, bounds):
    _write_rows(path, ["n", "abs_v", "bound"], [orders, magnitudes, bounds])
