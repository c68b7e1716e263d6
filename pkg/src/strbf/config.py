"""Flat ``key = value`` configuration files and their mapping onto ExperimentConfig.

Precedence is built-in defaults < config file < explicit overrides. Every
key corresponds to one ExperimentConfig setting; unknown keys are rejected.
"""

from __future__ import annotations

from pathlib import Path
from typing import Any, Callable, Dict, Mapping, NamedTuple, Optional

from .harness import CenterRule, ExperimentConfig, ModelKind, ScoringTarget
from .kernels import KernelSpec, KernelVariant
from .plant import NoiseSpec, PlantCoeffs, SignalSpec


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key or file."""


class Key(NamedTuple):
    parse: Callable[[str], Any]
    help: str
    choices: Optional[tuple] = None


def _choice(enum_cls):
    return lambda s: enum_cls(s.strip().lower()).value


KEYS: Dict[str, Key] = {
    "model": Key(_choice(ModelKind), "model kind", tuple(m.value for m in ModelKind)),
    "inputs": Key(int, "tapped-delay input length D (default 3)"),
    "lags": Key(int, "truncated time T of the spatio-temporal net (default 5; 1 for rbf/frbf)"),
    "kernel": Key(_choice(KernelVariant), "basis function", tuple(k.value for k in KernelVariant)),
    "sigma": Key(float, "Gaussian spread (default 1)"),
    "zeta": Key(float, "inverse-multiquadric offset (default 1)"),
    "centers": Key(CenterRule.parse, "center rule 'range:LO:HI:STEP' or 'list:V1,V2,...' (default range:-5:5:2)"),
    "eta": Key(float, "step size (default 2e-5 for rbf/frbf, 1e-2 for strbf)"),
    "eta_v": Key(float, "fractional step size (default 2e-5)"),
    "alpha": Key(float, "fractional convex-combination weight (default 0.5)"),
    "nu": Key(float, "fractional order (default 0.9)"),
    "epochs": Key(int, "passes over the training signal (default 1)"),
    "trials": Key(int, "Monte Carlo trials (default 1000)"),
    "seed": Key(int, "base seed for all randomness (default 0)"),
    "init_scale": Key(float, "std of the Gaussian weight/bias initialisation (default 0.1)"),
    "q1": Key(float, "plant coefficient q1 (default 2)"),
    "q2": Key(float, "plant coefficient q2 (default -0.5)"),
    "q3": Key(float, "plant coefficient q3 (default -0.1)"),
    "q4": Key(float, "plant coefficient q4 (default -0.7)"),
    "q5": Key(float, "plant coefficient q5 (default 3)"),
    "noise_var": Key(float, "measurement-noise variance (default 0.1)"),
    "train_length": Key(int, "training signal length (default 1000)"),
    "train_half_period": Key(int, "training square-wave half period (default 250)"),
    "train_amplitude": Key(float, "training square-wave amplitude (default 1)"),
    "test_length": Key(int, "test signal length (default 200)"),
    "test_half_period": Key(int, "test square-wave half period (default 100)"),
    "test_amplitude": Key(float, "test square-wave amplitude (default 1)"),
    "test_target": Key(_choice(ScoringTarget), "score the test phase against clean or noisy plant output",
                       tuple(t.value for t in ScoringTarget)),
}


def parse_value(key: str, raw: str) -> Any:
    if key not in KEYS:
        raise ConfigError(f"unknown config key {key!r}")
    try:
        return KEYS[key].parse(raw)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key!r}: {raw!r} ({exc})") from None


def load_config_file(path) -> Dict[str, Any]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror or exc}") from None
    settings: Dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        try:
            settings[key] = parse_value(key, value.strip())
        except ConfigError as exc:
            raise ConfigError(f"{path}:{lineno}: {exc}") from None
    return settings


def build_config(settings: Mapping[str, Any], model: Optional[str] = None) -> ExperimentConfig:
    """Resolve settings on top of the published defaults.

    ``model`` overrides ``settings['model']``; the default model is strbf.
    """
    unknown = set(settings) - set(KEYS)
    if unknown:
        raise ConfigError(f"unknown config key {sorted(unknown)[0]!r}")
    s = dict(settings)
    kind = ModelKind(model or s.pop("model", None) or ModelKind.STRBF)
    s.pop("model", None)
    kw: Dict[str, Any] = {}
    kw["kernel"] = _make(
        "kernel/sigma/zeta", KernelSpec,
        s.pop("kernel", KernelVariant.GAUSSIAN.value), s.pop("sigma", 1.0), s.pop("zeta", 1.0),
    )
    defaults = PlantCoeffs()
    kw["plant"] = _make(
        "q1..q5", PlantCoeffs, *(s.pop(q, getattr(defaults, q)) for q in ("q1", "q2", "q3", "q4", "q5"))
    )
    kw["noise"] = _make("noise_var", NoiseSpec, s.pop("noise_var", 0.1))
    kw["train_signal"] = _make(
        "train_length/train_half_period", SignalSpec,
        s.pop("train_length", 1000), s.pop("train_half_period", 250), s.pop("train_amplitude", 1.0),
    )
    kw["test_signal"] = _make(
        "test_length/test_half_period", SignalSpec,
        s.pop("test_length", 200), s.pop("test_half_period", 100), s.pop("test_amplitude", 1.0),
    )
    for key, field in (("centers", "center_rule"), ("seed", "base_seed")):
        if key in s:
            kw[field] = s.pop(key)
    if kind is not ModelKind.FRBF:
        for k in ("eta_v", "alpha", "nu"):
            s.pop(k, None)
    kw.update(s)
    return _make("config", ExperimentConfig.published, kind, **kw)


def _make(label, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except ValueError as exc:
        raise ConfigError(f"{label}: {exc}") from None
