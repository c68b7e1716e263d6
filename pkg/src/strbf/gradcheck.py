"""Finite-difference verification of the weight and bias gradients.

For each random small network the analytic gradient of the squared-error
cost is compared against central differences of the cost evaluated through
the forward pass. Two analytic routes are checked: :func:`cost_gradient` and
the direction actually applied by each model's update rule (recovered as
``-(new - old) / eta``). The fractional rule is checked with ``alpha = 1``,
where it reduces to the conventional gradient.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from .kernels import KernelSpec
from .learning import FrbfConfig, GdConfig, cost_gradient, frbf_step, gd_step_rbf, gd_step_strbf
from .model import RbfState, StRbfState, forward_rbf, push_and_forward_strbf

REL_TOL = 1e-6
ABS_FLOOR = 1e-9
FD_STEP = 1e-5
FAULTS = ("sign-flip",)


def deviation(analytic, numeric) -> np.ndarray:
    """Relative deviation with the absolute floor folded in.

    ``deviation <= REL_TOL`` exactly when the pair agrees to ``REL_TOL``
    relative or ``ABS_FLOOR`` absolute.
    """
    a = np.asarray(analytic, dtype=np.float64)
    n = np.asarray(numeric, dtype=np.float64)
    scale = np.maximum(np.maximum(np.abs(a), np.abs(n)), ABS_FLOOR / REL_TOL)
    return np.abs(a - n) / scale


def _cost(state, x, d) -> float:
    if isinstance(state, StRbfState):
        y = push_and_forward_strbf(state.copy(), x)
    else:
        y = forward_rbf(state, x)
    return 0.5 * (d - y) ** 2


def numeric_gradient(state, x, d: float, h: float = FD_STEP):
    """Central differences of the cost w.r.t. every weight and the bias."""
    grad_w = np.zeros_like(state.weights)
    for idx in np.ndindex(state.weights.shape):
        plus, minus = state.copy(), state.copy()
        plus.weights[idx] += h
        minus.weights[idx] -= h
        grad_w[idx] = (_cost(plus, x, d) - _cost(minus, x, d)) / (2 * h)
    plus, minus = state.copy(), state.copy()
    plus.bias += h
    minus.bias -= h
    grad_b = (_cost(plus, x, d) - _cost(minus, x, d)) / (2 * h)
    return grad_w, grad_b


def update_direction(state, x, d: float, kind: str):
    """Negative applied step per unit step size, i.e. the gradient the rule follows."""
    probe = state.copy()
    eta = 1.0
    if kind == "strbf":
        gd_step_strbf(probe, x, d, GdConfig(eta))
    elif kind == "frbf":
        frbf_step(probe, x, d, FrbfConfig(eta=eta, eta_v=eta, alpha=1.0))
    else:
        gd_step_rbf(probe, x, d, GdConfig(eta))
    return -(probe.weights - state.weights) / eta, -(probe.bias - state.bias) / eta


def random_case(rng: np.random.Generator, kind: str):
    """Random network (S<=4, D<=3, T<=3, sigma in [0.5, 2]), input and target."""
    s = int(rng.integers(1, 5))
    dim = int(rng.integers(1, 4))
    lags = int(rng.integers(1, 4)) if kind == "strbf" else 1
    kernel = KernelSpec(sigma=float(rng.uniform(0.5, 2.0)))
    centers = rng.uniform(-1.0, 1.0, size=(s, dim))
    if kind == "strbf":
        state = StRbfState(centers, kernel, rng.normal(size=(s, lags)), rng.normal())
        # partly filled history
        for _ in range(int(rng.integers(0, lags + 1))):
            push_and_forward_strbf(state, rng.uniform(-1.0, 1.0, size=dim))
    else:
        state = RbfState(centers, kernel, rng.normal(size=s), rng.normal())
    return state, rng.uniform(-1.0, 1.0, size=dim), float(rng.normal())


@dataclass
class GradcheckReport:
    max_deviation: Dict[str, float] = field(default_factory=dict)
    n_cases: int = 0

    @property
    def worst(self) -> float:
        return max(self.max_deviation.values(), default=0.0)

    @property
    def passed(self) -> bool:
        return self.worst <= REL_TOL


def run_gradcheck(n_cases: int = 100, seed: int = 0, fault: Optional[str] = None) -> GradcheckReport:
    """Check ``n_cases`` random configurations for each model kind.

    ``fault="sign-flip"`` negates the analytic gradients; the check must
    then fail (negative control).
    """
    if fault is not None and fault not in FAULTS:
        raise ValueError(f"unknown fault {fault!r}; choose from {FAULTS}")
    sign = -1.0 if fault == "sign-flip" else 1.0
    report = GradcheckReport(n_cases=n_cases)
    for n, kind in enumerate(("rbf", "frbf", "strbf")):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(n,)))
        worst = 0.0
        for _ in range(n_cases):
            state, x, d = random_case(rng, kind)
            num_w, num_b = numeric_gradient(state, x, d)
            routes = [update_direction(state, x, d, kind)]
            if kind != "frbf":
                routes.append(cost_gradient(state, x, d))
            for an_w, an_b in routes:
                dev = np.concatenate(
                    [
                        deviation(sign * np.ravel(an_w), np.ravel(num_w)),
                        deviation([sign * an_b], [num_b]),
                    ]
                )
                worst = max(worst, float(dev.max()))
        report.max_deviation[kind] = worst
    return report
