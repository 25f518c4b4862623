"""Numerical tolerances shared by every stage of the pipeline."""

from dataclasses import asdict, dataclass


@dataclass(frozen=True)
class Tolerances:
    det: float = 1e-10
    psd: float = 1e-9
    small_t: float = 1e-4
    bisection: float = 1e-11
    min_modulus_E: float = 1e-8
    tail_mean: float = 1e-4
    condition: float = 1e12
    residual: float = 1e-9
    min_D: float = 1e-10
    imag_H: float = 1e-8
    traceless: float = 1e-7
    wiener: float = 1e-8

    def as_dict(self):
        return asdict(self)


DEFAULT = Tolerances()
