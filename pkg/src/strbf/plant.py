"""Benchmark nonlinear plant, measurement noise and square-wave input signals.

The plant is::

    y(k) = q1 r(k) + q2 r(k-1) + q3 r(k-2) + q4 [cos(q5 r(k)) + exp(-|r(k)|)] + n(k)

with ``n(k) ~ N(0, variance)`` and ``r`` zero before the first sample.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class PlantCoeffs:
    q1: float = 2.0
    q2: float = -0.5
    q3: float = -0.1
    q4: float = -0.7
    q5: float = 3.0

    def __post_init__(self):
        for name in ("q1", "q2", "q3", "q4", "q5"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"plant coefficient {name} must be finite")


@dataclass(frozen=True)
class NoiseSpec:
    variance: float = 0.1

    def __post_init__(self):
        if not (math.isfinite(self.variance) and self.variance >= 0):
            raise ValueError(f"noise variance must be >= 0, got {self.variance!r}")


@dataclass(frozen=True)
class SignalSpec:
    length: int = 1000
    half_period: int = 250
    amplitude: float = 1.0

    def __post_init__(self):
        if self.length < 1:
            raise ValueError(f"signal length must be >= 1, got {self.length}")
        if self.half_period < 1:
            raise ValueError(f"half period must be >= 1, got {self.half_period}")
        if not math.isfinite(self.amplitude):
            raise ValueError("amplitude must be finite")


TRAIN_SIGNAL = SignalSpec(1000, 250, 1.0)
# 2.5x the training frequency: period 500 -> 200
TEST_SIGNAL = SignalSpec(200, 100, 1.0)


def plant_output(coeffs: PlantCoeffs, r_k: float, r_km1: float, r_km2: float, noise: float = 0.0) -> float:
    args = (r_k, r_km1, r_km2, noise)
    if not all(math.isfinite(v) for v in args):
        raise ValueError(f"plant inputs must be finite, got {args!r}")
    c = coeffs
    return (
        c.q1 * r_k
        + c.q2 * r_km1
        + c.q3 * r_km2
        + c.q4 * (math.cos(c.q5 * r_k) + math.exp(-abs(r_k)))
        + noise
    )


def gen_square(spec: SignalSpec) -> np.ndarray:
    """``+amplitude`` on even half periods, ``-amplitude`` on odd ones."""
    j = np.arange(spec.length)
    sign = np.where((j // spec.half_period) % 2 == 0, 1.0, -1.0)
    return sign * float(spec.amplitude)


def gaussian_noise(rng: np.random.Generator, variance: float) -> float:
    """A single ``N(0, variance)`` draw. Always consumes one normal variate."""
    if not variance >= 0:
        raise ValueError(f"noise variance must be >= 0, got {variance!r}")
    z = rng.standard_normal()
    if variance == 0:
        return 0.0
    return math.sqrt(variance) * float(z)


def noise_stream(rng: np.random.Generator, variance: float, n: int) -> np.ndarray:
    """``n`` draws, identical to ``n`` successive :func:`gaussian_noise` calls."""
    if not variance >= 0:
        raise ValueError(f"noise variance must be >= 0, got {variance!r}")
    z = rng.standard_normal(n)
    if variance == 0:
        return np.zeros(n)
    return math.sqrt(variance) * z


def run_plant(coeffs: PlantCoeffs, signal, noise: NoiseSpec, rng: np.random.Generator) -> np.ndarray:
    """Drive the plant with ``signal``; one noise draw per sample."""
    r = np.asarray(signal, dtype=np.float64)
    if r.ndim != 1 or r.size == 0:
        raise ValueError("plant input must be a non-empty 1-D signal")
    n = noise_stream(rng, noise.variance, r.size)
    rl = r.tolist()
    out = np.empty(r.size)
    r1 = r2 = 0.0
    for k, rk in enumerate(rl):
        out[k] = plant_output(coeffs, rk, r1, r2, float(n[k]))
        r1, r2 = rk, r1
    return out


def write_signal_csv(path, values, name: str) -> None:
    """Single-column CSV with a header line; floats at 17 significant digits."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([name])
        for v in np.asarray(values, dtype=np.float64):
            w.writerow([format(float(v), ".17g")])
