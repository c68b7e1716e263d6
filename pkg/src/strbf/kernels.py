"""Radial basis functions evaluated on squared input-center distances."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np


class KernelVariant(str, enum.Enum):
    GAUSSIAN = "gaussian"
    MULTIQUADRIC = "multiquadric"
    INVERSE_MULTIQUADRIC = "inverse_multiquadric"


@dataclass(frozen=True)
class KernelSpec:
    """Basis function variant and its shape parameters.

    ``sigma`` is the Gaussian spread and ``zeta`` the inverse-multiquadric
    offset. Each is ignored by variants that do not use it.

    Note that the multiquadric here is the plain distance
    ``(||x - c||^2)^(1/2)`` without the usual additive offset.
    """

    variant: KernelVariant = KernelVariant.GAUSSIAN
    sigma: float = 1.0
    zeta: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "variant", KernelVariant(self.variant))
        if self.variant is KernelVariant.GAUSSIAN:
            if not (np.isfinite(self.sigma) and self.sigma > 0):
                raise ValueError(f"Gaussian kernel needs sigma > 0, got {self.sigma!r}")
        elif self.variant is KernelVariant.INVERSE_MULTIQUADRIC:
            if not (np.isfinite(self.zeta) and self.zeta > 0):
                raise ValueError(
                    f"inverse multiquadric kernel needs zeta > 0, got {self.zeta!r}"
                )


def squared_distance(x, c) -> float:
    """Return ``sum_j (x_j - c_j)**2``."""
    x = np.asarray(x, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    if x.ndim != 1 or c.ndim != 1:
        raise ValueError("squared_distance expects two 1-D vectors")
    if x.shape != c.shape or x.size == 0:
        raise ValueError(f"dimension mismatch: {x.shape} vs {c.shape}")
    diff = x - c
    return float(diff @ diff)


def kernel_eval(spec: KernelSpec, sq_dist):
    """Evaluate the basis function at a squared distance.

    Accepts a scalar or an array of squared distances; a scalar input
    returns a Python float.
    """
    d2 = np.asarray(sq_dist, dtype=np.float64)
    if np.any(d2 < 0) or np.any(np.isnan(d2)):
        raise ValueError("squared distance must be non-negative")
    variant = spec.variant
    if variant is KernelVariant.GAUSSIAN:
        out = np.exp(-d2 / (spec.sigma * spec.sigma))
    elif variant is KernelVariant.MULTIQUADRIC:
        out = np.sqrt(d2)
    else:
        out = 1.0 / np.sqrt(d2 + spec.zeta * spec.zeta)
    if out.ndim == 0:
        return float(out)
    return out
