"""Monte Carlo system-identification experiments.

A trial trains one freshly initialised network online on the noisy plant
output for ``epochs`` passes over the training signal, then freezes it and
scores the test signal. Squared errors are averaged across trials in the
linear domain and only then converted to dB.

Each trial draws from its own generator tree, derived from
``SeedSequence(base_seed, spawn_key=(trial_index,))`` and split into three
child streams (initialisation, training noise, test noise). Trial ``k`` can
therefore be reproduced in isolation, and different model kinds run with the
same ``base_seed`` see identical noise.
"""

from __future__ import annotations

import csv
import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import partial
from pathlib import Path
from typing import Mapping, Optional, Sequence, Tuple

import numpy as np

from .kernels import KernelSpec
from .learning import (
    DivergenceError,
    FrbfConfig,
    GdConfig,
    frbf_step,
    gd_step_rbf,
    gd_step_strbf,
)
from .model import (
    Architecture,
    StRbfState,
    forward_rbf,
    init_state,
    push_and_forward_strbf,
    scalar_range_centers,
    tapped_windows,
)
from .plant import (
    TEST_SIGNAL,
    TRAIN_SIGNAL,
    NoiseSpec,
    PlantCoeffs,
    SignalSpec,
    gen_square,
    run_plant,
)


class ModelKind(str, enum.Enum):
    RBF = "rbf"
    FRBF = "frbf"
    STRBF = "strbf"


class ScoringTarget(str, enum.Enum):
    CLEAN = "clean"
    NOISY = "noisy"


class AggregationError(RuntimeError):
    """No usable trials to aggregate."""


# values reported for the three models at 1000 trials: (train dB, test dB)
PUBLISHED_DB = {
    ModelKind.RBF: (-1.6813, -4.431),
    ModelKind.FRBF: (-1.7444, -4.955),
    ModelKind.STRBF: (-15.1286, -19.67),
}

DEFAULT_ETA = {ModelKind.RBF: 2e-5, ModelKind.FRBF: 2e-5, ModelKind.STRBF: 1e-2}
DEFAULT_LAGS = 5


@dataclass(frozen=True)
class CenterRule:
    """Either an inclusive scalar range ``lo:hi:step`` or an explicit value list.

    Each scalar is replicated across all input dimensions.
    """

    lo: float = -5.0
    hi: float = 5.0
    step: float = 2.0
    values: Optional[Tuple[float, ...]] = None

    def build(self, dim: int) -> np.ndarray:
        if self.values is not None:
            v = np.asarray(self.values, dtype=np.float64)
            if v.size == 0:
                raise ValueError("explicit center list is empty")
            return np.repeat(v[:, None], dim, axis=1)
        return scalar_range_centers(self.lo, self.hi, self.step, dim)

    @property
    def count(self) -> int:
        return self.build(1).shape[0]

    def __str__(self) -> str:
        if self.values is not None:
            return "list:" + ",".join(repr(float(v)) for v in self.values)
        return f"range:{self.lo!r}:{self.hi!r}:{self.step!r}"

    @classmethod
    def parse(cls, text: str) -> "CenterRule":
        kind, _, rest = text.strip().partition(":")
        try:
            if kind == "range":
                lo, hi, step = (float(p) for p in rest.split(":"))
                rule = cls(lo, hi, step)
            elif kind == "list":
                rule = cls(values=tuple(float(p) for p in rest.split(",") if p.strip()))
            else:
                raise ValueError
            rule.build(1)
        except ValueError:
            raise ValueError(
                f"bad center rule {text!r}; use 'range:LO:HI:STEP' or 'list:V1,V2,...'"
            ) from None
        return rule


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything that determines a Monte Carlo run.

    Use :meth:`published` to get the published setup for a model kind with
    selective overrides. ``lags`` is forced to 1 for the plain networks.
    """

    model_kind: ModelKind = ModelKind.STRBF
    inputs: int = 3
    lags: int = DEFAULT_LAGS
    kernel: KernelSpec = KernelSpec()
    center_rule: CenterRule = CenterRule()
    eta: float = DEFAULT_ETA[ModelKind.STRBF]
    frbf: Optional[FrbfConfig] = None
    epochs: int = 1
    trials: int = 1000
    base_seed: int = 0
    init_scale: float = 0.1
    plant: PlantCoeffs = PlantCoeffs()
    noise: NoiseSpec = NoiseSpec(0.1)
    train_signal: SignalSpec = TRAIN_SIGNAL
    test_signal: SignalSpec = TEST_SIGNAL
    test_target: ScoringTarget = ScoringTarget.CLEAN

    def __post_init__(self):
        set_ = partial(object.__setattr__, self)
        set_("model_kind", ModelKind(self.model_kind))
        set_("test_target", ScoringTarget(self.test_target))
        if self.model_kind is not ModelKind.STRBF:
            set_("lags", 1)
        if self.model_kind is ModelKind.FRBF:
            if self.frbf is None:
                set_("frbf", FrbfConfig(eta=self.eta))
            elif self.frbf.eta != self.eta:
                raise ValueError("frbf.eta must equal eta")
        elif self.frbf is not None:
            raise ValueError("frbf settings are only valid for model_kind 'frbf'")
        GdConfig(self.eta)
        for name in ("inputs", "lags", "epochs", "trials"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.base_seed < 0:
            raise ValueError(f"seed must be non-negative, got {self.base_seed}")
        if not (math.isfinite(self.init_scale) and self.init_scale >= 0):
            raise ValueError(f"init_scale must be >= 0, got {self.init_scale}")
        self.center_rule.build(self.inputs)

    @classmethod
    def published(cls, model_kind=ModelKind.STRBF, **overrides) -> "ExperimentConfig":
        kind = ModelKind(model_kind)
        eta = overrides.pop("eta", None)
        if eta is None:
            eta = DEFAULT_ETA[kind]
        frbf_kw = {k: overrides.pop(k) for k in ("eta_v", "alpha", "nu") if k in overrides}
        frbf = FrbfConfig(eta=eta, **frbf_kw) if kind is ModelKind.FRBF else None
        return cls(model_kind=kind, eta=eta, frbf=frbf, **overrides)

    @property
    def n_neurons(self) -> int:
        return self.center_rule.count

    def architecture(self) -> Architecture:
        return Architecture(
            self.center_rule.build(self.inputs),
            self.kernel,
            self.lags,
            temporal=self.model_kind is ModelKind.STRBF,
        )

    def with_(self, **changes) -> "ExperimentConfig":
        return replace(self, **changes)


@dataclass
class TrialResult:
    train_sq_err: np.ndarray
    test_sq_err: np.ndarray
    diverged: bool = False
    state: object = field(default=None, repr=False)
    test_output: Optional[np.ndarray] = field(default=None, repr=False)


@dataclass
class AggregateResult:
    mean_train_curve: np.ndarray
    mean_test_curve: np.ndarray
    mean_train_curve_db: np.ndarray
    mean_test_curve_db: np.ndarray
    final_train_mse_db: float
    mean_test_mse_db: float
    trials_used: int
    diverged_count: int
    # order of the reduction steps, recorded for auditing
    audit: Tuple[str, ...] = ()


def mse_db(m: float) -> float:
    """``10 * log10(m)`` for a positive mean squared error."""
    if not m > 0:
        raise ValueError(f"MSE must be positive to express in dB, got {m!r}")
    return 10.0 * math.log10(m)


def curve_db(curve) -> np.ndarray:
    """Elementwise dB; exact zeros map to -inf."""
    c = np.asarray(curve, dtype=np.float64)
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(c)


def trial_seed(base_seed: int, trial_index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(base_seed, spawn_key=(trial_index,))


def _stepper(cfg: ExperimentConfig):
    if cfg.model_kind is ModelKind.STRBF:
        return gd_step_strbf, GdConfig(cfg.eta)
    if cfg.model_kind is ModelKind.FRBF:
        return frbf_step, cfg.frbf
    return gd_step_rbf, GdConfig(cfg.eta)


def score(state, windows: np.ndarray, target: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Frozen-parameter outputs and squared errors over a window sequence."""
    if isinstance(state, StRbfState):
        state.reset_buffer()
        y = np.array([push_and_forward_strbf(state, x) for x in windows])
    else:
        y = np.array([forward_rbf(state, x) for x in windows])
    return y, (target - y) ** 2


def run_trial(cfg: ExperimentConfig, trial_index: int) -> TrialResult:
    init_ss, train_ss, test_ss = trial_seed(cfg.base_seed, trial_index).spawn(3)
    init_rng = np.random.default_rng(init_ss)
    train_rng = np.random.default_rng(train_ss)
    test_rng = np.random.default_rng(test_ss)

    state = init_state(cfg.architecture(), init_rng, cfg.init_scale)
    step, step_cfg = _stepper(cfg)

    r_train = gen_square(cfg.train_signal)
    x_train = tapped_windows(r_train, cfg.inputs)
    n = r_train.size
    train_err = np.full(cfg.epochs * n, np.nan)
    temporal = isinstance(state, StRbfState)
    try:
        # divergence is detected explicitly; overflow on the way there is expected
        with np.errstate(over="ignore", invalid="ignore"):
            for epoch in range(cfg.epochs):
                d = run_plant(cfg.plant, r_train, cfg.noise, train_rng)
                # each epoch presents the signal from rest
                if temporal:
                    state.reset_buffer()
                offset = epoch * n
                for k in range(n):
                    res = step(state, x_train[k], d[k], step_cfg, iteration=offset + k)
                    train_err[offset + k] = res.e * res.e
    except DivergenceError:
        return TrialResult(train_err, np.full(cfg.test_signal.length, np.nan), True, state)

    r_test = gen_square(cfg.test_signal)
    test_noise = cfg.noise if cfg.test_target is ScoringTarget.NOISY else NoiseSpec(0.0)
    d_test = run_plant(cfg.plant, r_test, test_noise, test_rng)
    with np.errstate(over="ignore", invalid="ignore"):
        y_test, test_err = score(state, tapped_windows(r_test, cfg.inputs), d_test)
    if temporal:
        state.reset_buffer()
    # finite errors can still overflow once squared
    blown = not (np.isfinite(train_err).all() and np.isfinite(test_err).all())
    return TrialResult(train_err, test_err, blown, state, y_test)


def _column_mean(stack: np.ndarray) -> np.ndarray:
    # exactly rounded sums: the mean does not depend on trial order
    n = stack.shape[0]
    return np.array([math.fsum(col) for col in stack.T]) / n


def _tail_mean(curve: np.ndarray, fraction: float = 0.1) -> float:
    k = max(1, math.ceil(fraction * curve.size))
    return math.fsum(curve[-k:]) / k


def tail_mse_db(curve, fraction: float = 0.1) -> float:
    """dB of the mean over the last ``fraction`` of an averaged squared-error curve."""
    return mse_db(_tail_mean(np.asarray(curve, dtype=np.float64), fraction))


def aggregate(trials: Sequence[TrialResult]) -> AggregateResult:
    """Average per-sample squared errors across non-diverged trials, then convert to dB.

    The final training figure is the dB of the mean over the last 10% of the
    averaged training curve; the test figure is the dB of the mean of the
    whole averaged test curve.
    """
    used = [t for t in trials if not t.diverged]
    diverged = len(trials) - len(used)
    if not used:
        raise AggregationError(f"all {len(trials)} trials diverged; nothing to aggregate")
    train = _column_mean(np.stack([t.train_sq_err for t in used]))
    test = _column_mean(np.stack([t.test_sq_err for t in used]))
    return AggregateResult(
        mean_train_curve=train,
        mean_test_curve=test,
        mean_train_curve_db=curve_db(train),
        mean_test_curve_db=curve_db(test),
        final_train_mse_db=tail_mse_db(train),
        mean_test_mse_db=mse_db(math.fsum(test) / test.size),
        trials_used=len(used),
        diverged_count=diverged,
        audit=("mean_linear", "to_db"),
    )


def run_trials(cfg: ExperimentConfig, indices: Sequence[int], workers: int = 1):
    if workers > 1 and len(indices) > 1:
        chunk = max(1, len(indices) // (4 * workers))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(partial(run_trial, cfg), indices, chunksize=chunk))
    return [run_trial(cfg, i) for i in indices]


def run_monte_carlo(cfg: ExperimentConfig, workers: int = 1) -> AggregateResult:
    """Run ``cfg.trials`` independent trials and aggregate them.

    With ``workers > 1`` trials run in a process pool; results are collected
    in trial order so the outcome does not depend on scheduling.
    """
    return aggregate(run_trials(cfg, range(cfg.trials), workers))


# -- CSV output ------------------------------------------------------------


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def moving_average_db(curve: np.ndarray, window: int) -> np.ndarray:
    """Trailing moving average of a linear curve, in dB; short windows at the start."""
    if window < 1:
        raise ValueError("moving-average window must be >= 1")
    c = np.asarray(curve, dtype=np.float64)
    out = np.empty_like(c)
    for k in range(c.size):
        lo = max(0, k - window + 1)
        out[k] = math.fsum(c[lo : k + 1]) / (k + 1 - lo)
    return curve_db(out)


def summary_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + "_summary" + (path.suffix or ".csv"))


def emit_csv(result: AggregateResult, path, smooth_window: Optional[int] = None) -> None:
    """Write the averaged learning curves and a summary file next to them.

    Curves file columns: ``phase`` (train/test), ``iteration`` (1-based),
    ``mean_sq_err`` (linear), ``mean_db`` and, when ``smooth_window`` is set,
    ``mean_db_ma<window>``: a trailing moving average taken in the linear
    domain. The summary goes to ``<stem>_summary.csv`` as ``key,value`` rows.
    UTF-8, LF line endings, floats at 17 significant digits.
    """
    path = Path(path)
    header = ["phase", "iteration", "mean_sq_err", "mean_db"]
    if smooth_window:
        header.append(f"mean_db_ma{smooth_window}")
    try:
        with path.open("w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for phase, lin, db in (
                ("train", result.mean_train_curve, result.mean_train_curve_db),
                ("test", result.mean_test_curve, result.mean_test_curve_db),
            ):
                ma = moving_average_db(lin, smooth_window) if smooth_window and lin.size else None
                for k in range(lin.size):
                    row = [phase, k + 1, _fmt(lin[k]), _fmt(db[k])]
                    if ma is not None:
                        row.append(_fmt(ma[k]))
                    w.writerow(row)
        with summary_path(path).open("w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["key", "value"])
            w.writerow(["final_train_mse_db", _fmt(result.final_train_mse_db)])
            w.writerow(["mean_test_mse_db", _fmt(result.mean_test_mse_db)])
            w.writerow(["trials_used", result.trials_used])
            w.writerow(["diverged_count", result.diverged_count])
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc.strerror or exc}") from exc


def read_csv_curves(path) -> Tuple[np.ndarray, np.ndarray]:
    """Parse a curves file written by :func:`emit_csv` back into (train, test)."""
    curves = {"train": [], "test": []}
    with Path(path).open(encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            curves[row["phase"]].append(float(row["mean_sq_err"]))
    return np.array(curves["train"]), np.array(curves["test"])


COMPARISON_HEADER = [
    "model",
    "final_train_mse_db",
    "mean_test_mse_db",
    "published_train_db",
    "published_test_db",
    "trials_used",
    "diverged_count",
]


def comparison_rows(results: Mapping[ModelKind, AggregateResult]):
    rows = []
    for kind, res in results.items():
        kind = ModelKind(kind)
        published_train, published_test = PUBLISHED_DB[kind]
        rows.append(
            [
                kind.value,
                res.final_train_mse_db,
                res.mean_test_mse_db,
                published_train,
                published_test,
                res.trials_used,
                res.diverged_count,
            ]
        )
    return rows


def emit_comparison(results: Mapping[ModelKind, AggregateResult], path) -> None:
    """Side-by-side summary of several models next to the published figures."""
    path = Path(path)
    try:
        with path.open("w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(COMPARISON_HEADER)
            for row in comparison_rows(results):
                w.writerow([v if isinstance(v, (str, int)) else _fmt(v) for v in row])
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc.strerror or exc}") from exc
