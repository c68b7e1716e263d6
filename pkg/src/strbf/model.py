"""Network parameters and forward mappings for plain and spatio-temporal RBF nets.

The spatio-temporal network keeps the last ``T`` activation vectors in a
ring buffer. Lag ``t`` (``t = 1`` is the current sample) contributes
``sum_i W[i, t] * phi_i(x(k - t + 1))``, so the temporal expansion delays the
kernel activations rather than re-evaluating kernels on delayed input
windows. Centers are shared across lags. Slots for samples before the first
push hold zero vectors, which makes ``T = 1`` reduce exactly to the plain
network.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .kernels import KernelSpec, KernelVariant, kernel_eval

__all__ = [
    "Architecture",
    "RbfState",
    "StRbfState",
    "activations",
    "dump_state",
    "forward_rbf",
    "init_state",
    "load_state",
    "push_activation",
    "push_and_forward_strbf",
    "scalar_range_centers",
    "tapped_windows",
]


def _check_centers(centers) -> np.ndarray:
    c = np.array(centers, dtype=np.float64, ndmin=2)
    if c.ndim != 2 or c.shape[0] < 1 or c.shape[1] < 1:
        raise ValueError(f"centers must be an S x D matrix with S, D >= 1, got shape {c.shape}")
    if not np.all(np.isfinite(c)):
        raise ValueError("centers must be finite")
    return c


def scalar_range_centers(lo: float, hi: float, step: float, dim: int) -> np.ndarray:
    """Centers ``lo, lo+step, ..., hi`` with each value replicated over ``dim`` inputs."""
    if step <= 0:
        raise ValueError(f"center step must be positive, got {step}")
    if hi < lo:
        raise ValueError(f"center range is empty: lo={lo}, hi={hi}")
    if dim < 1:
        raise ValueError(f"input dimension must be >= 1, got {dim}")
    n = int(np.floor((hi - lo) / step + 1e-9)) + 1
    values = lo + step * np.arange(n, dtype=np.float64)
    return np.repeat(values[:, None], dim, axis=1)


def tapped_windows(signal, dim: int) -> np.ndarray:
    """Rows ``[r(k), r(k-1), ..., r(k-dim+1)]`` for every k, zero pre-history."""
    r = np.asarray(signal, dtype=np.float64)
    if r.ndim != 1:
        raise ValueError("signal must be 1-D")
    if dim < 1:
        raise ValueError(f"window length must be >= 1, got {dim}")
    padded = np.concatenate([np.zeros(dim - 1), r])
    n = r.size
    return np.stack([padded[dim - 1 - j : dim - 1 - j + n] for j in range(dim)], axis=1)


@dataclass
class RbfState:
    centers: np.ndarray
    kernel: KernelSpec
    weights: np.ndarray
    bias: float = 0.0

    def __post_init__(self):
        self.centers = _check_centers(self.centers)
        self.weights = np.array(self.weights, dtype=np.float64)
        if self.weights.shape != (self.centers.shape[0],):
            raise ValueError(
                f"weights shape {self.weights.shape} does not match S={self.centers.shape[0]}"
            )
        self.bias = float(self.bias)

    @property
    def n_neurons(self) -> int:
        return self.centers.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.centers.shape[1]

    def copy(self) -> "RbfState":
        return RbfState(self.centers.copy(), self.kernel, self.weights.copy(), self.bias)


@dataclass
class StRbfState:
    """Spatio-temporal RBF parameters plus the activation history.

    ``weights[i, t]`` multiplies neuron ``i`` at lag ``t + 1``.
    ``activation_buffer`` has shape ``(T, S)``; row ``head`` is the most
    recent activation vector and rows further back (cyclically) are older.
    """

    centers: np.ndarray
    kernel: KernelSpec
    weights: np.ndarray
    bias: float = 0.0
    activation_buffer: Optional[np.ndarray] = None
    samples_seen: int = 0
    head: int = field(default=0, repr=False)
    _order: list = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        self.centers = _check_centers(self.centers)
        self.weights = np.array(self.weights, dtype=np.float64, ndmin=2)
        s = self.centers.shape[0]
        if self.weights.ndim != 2 or self.weights.shape[0] != s or self.weights.shape[1] < 1:
            raise ValueError(f"weights shape {self.weights.shape} does not match (S={s}, T>=1)")
        t = self.weights.shape[1]
        if self.activation_buffer is None:
            self.activation_buffer = np.zeros((t, s))
        else:
            self.activation_buffer = np.array(self.activation_buffer, dtype=np.float64)
            if self.activation_buffer.shape != (t, s):
                raise ValueError(
                    f"activation buffer shape {self.activation_buffer.shape} != {(t, s)}"
                )
        self.bias = float(self.bias)
        if self.samples_seen < 0:
            raise ValueError("samples_seen must be non-negative")
        self.head %= t
        # row order lag 1..T for each head position
        self._order = [(h - np.arange(t)) % t for h in range(t)]

    @property
    def n_neurons(self) -> int:
        return self.centers.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.centers.shape[1]

    @property
    def n_lags(self) -> int:
        return self.weights.shape[1]

    def lagged(self) -> np.ndarray:
        """Buffered activations as an ``(S, T)`` matrix aligned with ``weights``."""
        return self.activation_buffer[self._order[self.head]].T

    def lag(self, t: int) -> np.ndarray:
        """Activation vector at lag ``t`` (1 = most recent)."""
        if not 1 <= t <= self.n_lags:
            raise ValueError(f"lag must be in 1..{self.n_lags}, got {t}")
        return self.activation_buffer[(self.head - (t - 1)) % self.n_lags].copy()

    def reset_buffer(self) -> None:
        self.activation_buffer[:] = 0.0
        self.head = 0

    def copy(self) -> "StRbfState":
        return StRbfState(
            self.centers.copy(),
            self.kernel,
            self.weights.copy(),
            self.bias,
            self.activation_buffer.copy(),
            self.samples_seen,
            self.head,
        )


State = Union[RbfState, StRbfState]


def _as_window(x, dim: int) -> np.ndarray:
    if type(x) is not np.ndarray or x.dtype != np.float64:
        x = np.asarray(x, dtype=np.float64)
    if x.shape != (dim,):
        raise ValueError(f"input window has shape {x.shape}, expected ({dim},)")
    return x


def activations(centers, kernel: KernelSpec, x) -> np.ndarray:
    """Kernel activation of every neuron for the input window ``x``."""
    if type(centers) is not np.ndarray or centers.dtype != np.float64:
        centers = np.asarray(centers, dtype=np.float64)
    if centers.ndim != 2:
        raise ValueError("centers must be an S x D matrix")
    x = _as_window(x, centers.shape[1])
    diff = centers - x
    sq = np.einsum("ij,ij->i", diff, diff)
    if kernel.variant is KernelVariant.GAUSSIAN:
        # inlined hot path; same arithmetic as kernel_eval
        return np.exp(-sq / (kernel.sigma * kernel.sigma))
    return kernel_eval(kernel, sq)


def forward_rbf(state: RbfState, x) -> float:
    """``sum_i w_i phi_i(x) + b``; does not touch the state."""
    phi = activations(state.centers, state.kernel, x)
    return float(state.weights @ phi) + state.bias


def push_activation(state: StRbfState, x) -> np.ndarray:
    """Push the activation of ``x`` into the buffer; return the lagged ``(S, T)`` matrix."""
    phi = activations(state.centers, state.kernel, x)
    state.head = (state.head + 1) % state.n_lags
    state.activation_buffer[state.head] = phi
    state.samples_seen += 1
    return state.lagged()


def push_and_forward_strbf(state: StRbfState, x) -> float:
    """Push the activation of ``x`` into the buffer and return the network output.

    Only the buffer, its head and ``samples_seen`` change.
    """
    lagged = push_activation(state, x)
    return float(np.vdot(state.weights, lagged)) + state.bias


@dataclass(frozen=True)
class Architecture:
    """Network shape: centers, kernel, lag count and whether the net is temporal."""

    centers: np.ndarray
    kernel: KernelSpec = KernelSpec()
    lags: int = 1
    temporal: bool = False

    @classmethod
    def from_range(
        cls,
        lo: float,
        hi: float,
        step: float,
        dim: int,
        kernel: KernelSpec = KernelSpec(),
        lags: int = 1,
        temporal: bool = False,
    ) -> "Architecture":
        return cls(scalar_range_centers(lo, hi, step, dim), kernel, lags, temporal)

    @classmethod
    def from_values(
        cls,
        values: Sequence[float],
        dim: int,
        kernel: KernelSpec = KernelSpec(),
        lags: int = 1,
        temporal: bool = False,
    ) -> "Architecture":
        v = np.asarray(values, dtype=np.float64).reshape(-1)
        return cls(np.repeat(v[:, None], dim, axis=1), kernel, lags, temporal)


def init_state(arch: Architecture, rng: np.random.Generator, init_scale: float = 0.1) -> State:
    """Fresh network with ``N(0, init_scale**2)`` weights and bias.

    Weights are drawn first (row-major over ``(S, T)``), then the bias, so a
    temporal net with ``T = 1`` gets the same numbers as a plain net from
    the same generator.
    """
    centers = _check_centers(arch.centers)
    if arch.lags < 1:
        raise ValueError(f"lag count T must be >= 1, got {arch.lags}")
    if not arch.temporal and arch.lags != 1:
        raise ValueError("a non-temporal network has exactly one lag")
    if not (np.isfinite(init_scale) and init_scale >= 0):
        raise ValueError(f"init_scale must be finite and >= 0, got {init_scale}")
    s = centers.shape[0]
    if arch.temporal:
        weights = rng.normal(0.0, init_scale, size=(s, arch.lags))
        bias = rng.normal(0.0, init_scale)
        return StRbfState(centers.copy(), arch.kernel, weights, bias)
    weights = rng.normal(0.0, init_scale, size=s)
    bias = rng.normal(0.0, init_scale)
    return RbfState(centers.copy(), arch.kernel, weights, bias)


# -- flat text snapshots ---------------------------------------------------


def dump_state(state: State) -> str:
    """Serialize a state as ``key = value`` lines, one parameter per line.

    Keys: ``kind``, ``S``, ``D``, ``T``, ``kernel.variant``, ``kernel.sigma``,
    ``kernel.zeta``, ``center[i][j]``, ``weight[i][t]``, ``bias`` and, for
    temporal nets, ``buffer[t][i]`` (lag-ordered, t=1 most recent) and
    ``samples_seen``. Floats use ``repr`` so a round trip is exact.
    """
    temporal = isinstance(state, StRbfState)
    w = state.weights if temporal else state.weights[:, None]
    s, d = state.centers.shape
    lines = [
        f"kind = {'strbf' if temporal else 'rbf'}",
        f"S = {s}",
        f"D = {d}",
        f"T = {w.shape[1]}",
        f"kernel.variant = {state.kernel.variant.value}",
        f"kernel.sigma = {state.kernel.sigma!r}",
        f"kernel.zeta = {state.kernel.zeta!r}",
    ]
    for i in range(s):
        for j in range(d):
            lines.append(f"center[{i}][{j}] = {float(state.centers[i, j])!r}")
    for i in range(s):
        for t in range(w.shape[1]):
            lines.append(f"weight[{i}][{t + 1}] = {float(w[i, t])!r}")
    lines.append(f"bias = {state.bias!r}")
    if temporal:
        lagged = state.lagged()
        for t in range(state.n_lags):
            for i in range(s):
                lines.append(f"buffer[{t + 1}][{i}] = {float(lagged[i, t])!r}")
        lines.append(f"samples_seen = {state.samples_seen}")
    return "\n".join(lines) + "\n"


def load_state(text: str) -> State:
    """Inverse of :func:`dump_state`."""
    kv = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        kv[key.strip()] = value.strip()
    try:
        kind = kv["kind"]
        s, d, t = int(kv["S"]), int(kv["D"]), int(kv["T"])
        kernel = KernelSpec(
            KernelVariant(kv["kernel.variant"]),
            float(kv["kernel.sigma"]),
            float(kv["kernel.zeta"]),
        )
        centers = np.array([[float(kv[f"center[{i}][{j}]"]) for j in range(d)] for i in range(s)])
        w = np.array([[float(kv[f"weight[{i}][{k + 1}]"]) for k in range(t)] for i in range(s)])
        bias = float(kv["bias"])
        if kind == "rbf":
            return RbfState(centers, kernel, w[:, 0], bias)
        if kind != "strbf":
            raise ValueError(f"unknown state kind {kind!r}")
        # stored lag-ordered; rebuild with head at row 0
        buf = np.array([[float(kv[f"buffer[{k + 1}][{i}]"]) for i in range(s)] for k in range(t)])
        ring = np.zeros_like(buf)
        for k in range(t):
            ring[(-k) % t] = buf[k]
        return StRbfState(centers, kernel, w, bias, ring, int(kv["samples_seen"]), 0)
    except KeyError as exc:
        raise ValueError(f"state snapshot is missing key {exc.args[0]!r}") from None
