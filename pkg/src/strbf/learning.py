"""Instantaneous squared-error cost and online gradient-descent updates.

All updates compute the output and error from the parameters *before*
the update (LMS ordering). Any non-finite parameter after an update raises
:class:`DivergenceError`.

The fractional variant mixes a conventional step with a fractional-order
term::

    w_i += alpha * eta * e * phi_i
         + (1 - alpha) * eta_v * e * phi_i * |w_i|**(1 - nu) / gamma(2 - nu)
    b   += eta * e

The absolute value keeps the fractional power real for negative weights and
the bias gets only the conventional step. This rule follows the
fractional-LMS family; it is a reconstruction, not a derivation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .model import RbfState, StRbfState, activations, push_activation, push_and_forward_strbf


class DivergenceError(ArithmeticError):
    """Raised when an update leaves a non-finite parameter."""

    def __init__(self, message: str, iteration: Optional[int] = None):
        if iteration is not None:
            message = f"{message} (iteration {iteration})"
        super().__init__(message)
        self.iteration = iteration


@dataclass(frozen=True)
class GdConfig:
    eta: float

    def __post_init__(self):
        # eta = 0 is allowed: it freezes the network (useful as a baseline)
        if not (math.isfinite(self.eta) and self.eta >= 0):
            raise ValueError(f"step size eta must be finite and >= 0, got {self.eta!r}")


@dataclass(frozen=True)
class FrbfConfig:
    """Step sizes and mixing for the fractional update.

    ``gamma_factor`` is ``gamma(2 - nu)``; it is computed when omitted and
    checked against ``math.gamma`` when given.
    """

    eta: float = 2e-5
    eta_v: float = 2e-5
    alpha: float = 0.5
    nu: float = 0.9
    gamma_factor: Optional[float] = None

    def __post_init__(self):
        for name in ("eta", "eta_v"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be finite and >= 0, got {v!r}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha!r}")
        if not 0.0 < self.nu < 1.0:
            raise ValueError(f"nu must lie in (0, 1), got {self.nu!r}")
        g = math.gamma(2.0 - self.nu)
        if self.gamma_factor is None:
            object.__setattr__(self, "gamma_factor", g)
        elif not math.isclose(self.gamma_factor, g, rel_tol=1e-12, abs_tol=0.0):
            raise ValueError(
                f"gamma_factor {self.gamma_factor!r} is not gamma(2 - nu) = {g!r}"
            )


@dataclass(frozen=True)
class StepResult:
    y: float
    e: float
    cost: float


def instantaneous_cost(d: float, y: float) -> StepResult:
    if not (math.isfinite(d) and math.isfinite(y)):
        raise ValueError(f"target and output must be finite, got d={d!r}, y={y!r}")
    e = d - y
    return StepResult(y, e, 0.5 * e * e)


def _check_finite(state, iteration):
    # NaN/inf anywhere propagates into the sum
    if not math.isfinite(float(state.weights.sum()) + state.bias):
        raise DivergenceError("non-finite parameters after update", iteration)


def _result(d, y, iteration) -> StepResult:
    if not math.isfinite(y):
        raise DivergenceError("non-finite network output", iteration)
    e = d - y
    return StepResult(y, e, 0.5 * e * e)


def gd_step_rbf(
    state: RbfState, x, d: float, cfg: GdConfig, iteration: Optional[int] = None
) -> StepResult:
    """One gradient-descent step of the plain network on sample ``(x, d)``."""
    phi = activations(state.centers, state.kernel, x)
    res = _result(d, float(state.weights @ phi) + state.bias, iteration)
    step = cfg.eta * res.e
    state.weights += step * phi
    state.bias += step
    _check_finite(state, iteration)
    return res


def gd_step_strbf(
    state: StRbfState, x, d: float, cfg: GdConfig, iteration: Optional[int] = None
) -> StepResult:
    """One step of the spatio-temporal network.

    The new activation is pushed first; the gradient uses the same buffer
    contents that produced the output.
    """
    lagged = push_activation(state, x)
    res = _result(d, float(np.vdot(state.weights, lagged)) + state.bias, iteration)
    step = cfg.eta * res.e
    state.weights += step * lagged
    state.bias += step
    _check_finite(state, iteration)
    return res


def frbf_step(
    state: RbfState, x, d: float, cfg: FrbfConfig, iteration: Optional[int] = None
) -> StepResult:
    """One fractional-gradient step of the plain network."""
    phi = activations(state.centers, state.kernel, x)
    res = _result(d, float(state.weights @ phi) + state.bias, iteration)
    e = res.e
    frac = np.abs(state.weights) ** (1.0 - cfg.nu) / cfg.gamma_factor
    state.weights += (cfg.alpha * cfg.eta * e) * phi + ((1.0 - cfg.alpha) * cfg.eta_v * e) * phi * frac
    state.bias += cfg.eta * e
    _check_finite(state, iteration)
    return res


def cost_gradient(state, x, d: float):
    """Analytic gradient of ``0.5 * (d - y)**2`` w.r.t. weights and bias.

    Pure: for a temporal state the gradient is taken at the buffer that the
    next push of ``x`` would produce, without mutating ``state``.
    Returns ``(grad_weights, grad_bias)``.
    """
    if isinstance(state, StRbfState):
        probe = state.copy()
        y = push_and_forward_strbf(probe, x)
        e = d - y
        return -e * probe.lagged(), -e
    phi = activations(state.centers, state.kernel, x)
    e = d - (float(state.weights @ phi) + state.bias)
    return -e * phi, -e
