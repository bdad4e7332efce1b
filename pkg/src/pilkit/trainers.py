"""Non-iterative pseudoinverse training: PIL, PIL0, ePIL and PIL1.

Every trainer returns ``(PilNetwork, TrainReport)`` and is deterministic for
a fixed dataset and config: all randomness comes from one
``numpy.random.default_rng(cfg.random_seed)`` consumed in a fixed order.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .activation import Activation, apply, inverse_with_count, saturation_mask
from .dataset import Dataset
from .errors import ConfigError, NumericalError
from .linalg import (
    RankInfo,
    frobenius_error,
    numerical_rank,
    projector,
    projector_defects,
    pseudoinverse,
)
from .network import BiasPolicy, PilNetwork, forward

ALGORITHMS = ("pil", "pil0", "epil", "pil1")
STOP_REASONS = ("residual_below_E", "max_depth", "single_pass")


@dataclass(frozen=True)
class TrainConfig:
    """Training hyperparameters.

    ``hidden_width=None`` means ``auto`` (l = N). ``output_activation=None``
    picks the algorithm default: the hidden activation for PIL/PIL0 (the
    Tanh-wrapped output) and linear for ePIL/PIL1.
    """

    hidden_width: int | None = None
    stopping_error: float = 1e-8
    max_depth: int = 16
    noise_stddev: float = 0.01
    random_seed: int = 0
    weight_interval: tuple[float, float] = (-1.0, 1.0)
    activation: Activation = field(default_factory=Activation)
    output_activation: Activation | None = None
    hidden_bias: bool = False

    def __post_init__(self):
        if not (self.stopping_error > 0 and math.isfinite(self.stopping_error)):
            raise ConfigError(f"stopping_error must be > 0, got {self.stopping_error}")
        if self.max_depth < 1:
            raise ConfigError(f"max_depth must be >= 1, got {self.max_depth}")
        if not (self.noise_stddev >= 0 and math.isfinite(self.noise_stddev)):
            raise ConfigError(f"noise_stddev must be >= 0, got {self.noise_stddev}")
        lo, hi = self.weight_interval
        if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
            raise ConfigError(f"weight_interval needs lo < hi, got {self.weight_interval}")
        if self.hidden_width is not None and self.hidden_width < 1:
            raise ConfigError(f"hidden_width must be >= 1 or auto, got {self.hidden_width}")

    def to_dict(self) -> dict:
        return {
            "hidden_width": self.hidden_width if self.hidden_width is not None else "auto",
            "stopping_error": self.stopping_error,
            "max_depth": self.max_depth,
            "noise_stddev": self.noise_stddev,
            "random_seed": self.random_seed,
            "weight_interval": list(self.weight_interval),
            "activation": str(self.activation),
            "output_activation": str(self.output_activation) if self.output_activation else None,
            "hidden_bias": self.hidden_bias,
        }


@dataclass
class LayerRecord:
    """Diagnostics of one matrix ``Y^l`` that was pseudo-inverted."""

    layer: int
    rank: RankInfo
    projector_residual: float
    idempotence_error: float
    symmetry_error: float
    saturated_fraction: float

    def to_dict(self) -> dict:
        return {
            "layer": self.layer,
            "rank": self.rank.to_dict(spectrum=False),
            "projector_residual": self.projector_residual,
            "idempotence_error": self.idempotence_error,
            "symmetry_error": self.symmetry_error,
            "saturated_fraction": self.saturated_fraction,
        }


@dataclass
class TrainReport:
    algorithm: str
    final_sse: float
    residual_norm: float
    per_layer: list[LayerRecord]
    depth_used: int
    stop_reason: str
    clipped_target_count: int = 0
    wall_time: float = 0.0
    warnings: list[str] = field(default_factory=list)

    def to_dict(self, timing: bool = True) -> dict:
        d = {
            "algorithm": self.algorithm,
            "final_sse": self.final_sse,
            "residual_norm": self.residual_norm,
            "depth_used": self.depth_used,
            "stop_reason": self.stop_reason,
            "clipped_target_count": self.clipped_target_count,
            "per_layer": [r.to_dict() for r in self.per_layer],
            "warnings": list(self.warnings),
        }
        if timing:
            d["wall_time"] = self.wall_time
        return d


# --------------------------------------------------------------------------- helpers


def _check_finite(m: np.ndarray, what: str) -> np.ndarray:
    if not np.all(np.isfinite(m)):
        raise NumericalError(f"non-finite values in {what}")
    return m


def _prepend_ones(y: np.ndarray) -> np.ndarray:
    return np.hstack([np.ones((y.shape[0], 1)), y])


def _layer_record(layer: int, y: np.ndarray, act: Activation | None) -> LayerRecord:
    p = projector(y)
    resid = p.copy()
    resid[np.diag_indices_from(resid)] -= 1.0
    idem, sym = projector_defects(p)
    sat = float(saturation_mask(act, y).mean()) if act is not None else 0.0
    return LayerRecord(layer, numerical_rank(y), float(np.sum(resid * resid)), idem, sym, sat)


def _output_targets(data: Dataset, out: Activation) -> tuple[np.ndarray, int]:
    """Pre-image of ``T`` under the output activation (``B = ArcTanh(T)`` for tanh)."""
    return inverse_with_count(out, data.t)


def _has_duplicate_rows(x: np.ndarray) -> bool:
    return np.unique(x, axis=0).shape[0] < x.shape[0]


def random_input_weights(rng: np.random.Generator, shape: tuple[int, int],
                         interval: tuple[float, float]) -> np.ndarray:
    """i.i.d. uniform weights on ``interval``."""
    lo, hi = interval
    return rng.uniform(lo, hi, size=shape)


def pil0_hidden(data: Dataset, width: int, cfg: TrainConfig,
                rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Random input weights ``V`` (d x width) and hidden output ``Y = sigma(X V)``.

    Shared by :func:`train_pil0` and the error-floor diagnostic so both see
    the same hidden matrix for the same seed.
    """
    v = random_input_weights(rng, (data.x.shape[1], width), cfg.weight_interval)
    y = _check_finite(apply(cfg.activation, data.x @ v), "hidden output")
    if cfg.hidden_bias:
        y = _prepend_ones(y)
    return v, y


def _resolve_output(cfg: TrainConfig, default: Activation) -> Activation:
    out = cfg.output_activation or default
    if not out.invertible:
        raise ConfigError(
            f"output activation {out.kind!r} has no inverse; targets cannot be pulled back"
        )
    return out


# --------------------------------------------------------------------------- SHLN


def _fit_single_layer(algorithm: str, data: Dataset, cfg: TrainConfig, v: np.ndarray,
                      y: np.ndarray, out: Activation, started: float) -> tuple[PilNetwork, TrainReport]:
    b, clipped = _output_targets(data, out)
    y_pinv = pseudoinverse(y)
    w = _check_finite(y_pinv @ b, "output weights")
    net = PilNetwork(
        [v, w], cfg.activation, out, BiasPolicy(hidden_bias=cfg.hidden_bias),
        meta={"algorithm": algorithm},
    )
    o = _check_finite(forward(net, data.x), "network output")
    rec = _layer_record(1, y, cfg.activation)
    n = data.n_samples
    warnings = []
    if y.shape[1] >= n and rec.rank.numerical_rank < n:
        warnings.append(
            f"exact learning not achievable: rank(Y) = {rec.rank.numerical_rank} < N = {n}"
        )
    if y.shape[1] < n:
        warnings.append(f"hidden width {y.shape[1]} < N = {n}: training error is bounded below")
    if _has_duplicate_rows(data.x):
        warnings.append("duplicate input rows: Y cannot have full row rank")
    if rec.saturated_fraction > 0:
        warnings.append(
            f"{100 * rec.saturated_fraction:.1f}% of hidden outputs saturated at the "
            f"{cfg.activation.kind} bounds"
        )
    if clipped:
        warnings.append(f"{clipped} target entries clipped into the open inverse domain")
    report = TrainReport(
        algorithm=algorithm,
        final_sse=frobenius_error(o, data.t),
        residual_norm=float(np.linalg.norm(y @ w - b)),
        per_layer=[rec],
        depth_used=1,
        stop_reason="single_pass",
        clipped_target_count=clipped,
        wall_time=time.perf_counter() - started,
        warnings=warnings,
    )
    return net, report


def train_pil(data: Dataset, cfg: TrainConfig = TrainConfig()) -> tuple[PilNetwork, TrainReport]:
    """Algorithm PIL: ``V = X^+``, ``Y = sigma(X V)``, ``W = Y^+ B``.

    With ``hidden_width = l < N`` the first ``l`` columns of ``X^+`` are used.
    """
    started = time.perf_counter()
    out = _resolve_output(cfg, cfg.activation)
    n = data.n_samples
    width = n if cfg.hidden_width is None else cfg.hidden_width
    if width > n:
        raise ConfigError(f"PIL hidden width {width} exceeds N = {n} (X^+ has N columns)")
    v = pseudoinverse(data.x)[:, :width]
    y = _check_finite(apply(cfg.activation, data.x @ v), "hidden output")
    if cfg.hidden_bias:
        y = _prepend_ones(y)
    return _fit_single_layer("pil", data, cfg, v, y, out, started)


def train_pil0(data: Dataset, cfg: TrainConfig = TrainConfig()) -> tuple[PilNetwork, TrainReport]:
    """Algorithm PIL0: ``V`` uniform on ``cfg.weight_interval``, then as PIL."""
    started = time.perf_counter()
    out = _resolve_output(cfg, cfg.activation)
    width = data.n_samples if cfg.hidden_width is None else cfg.hidden_width
    rng = np.random.default_rng(cfg.random_seed)
    v, y = pil0_hidden(data, width, cfg, rng)
    return _fit_single_layer("pil0", data, cfg, v, y, out, started)


# --------------------------------------------------------------------------- deep


def _grow(algorithm: str, data: Dataset, cfg: TrainConfig,
          noise_stddev: float) -> tuple[PilNetwork, TrainReport]:
    started = time.perf_counter()
    n = data.n_samples
    if cfg.hidden_width is not None and cfg.hidden_width != n:
        raise ConfigError(
            f"{algorithm} fixes every hidden width to N = {n}; got hidden_width={cfg.hidden_width}"
        )
    out = _resolve_output(cfg, Activation("linear"))
    rng = np.random.default_rng(cfg.random_seed)
    act = cfg.activation

    y = data.x
    weights: list[np.ndarray] = []
    records: list[LayerRecord] = []
    stop_reason = "max_depth"
    for layer in range(cfg.max_depth):
        y_pinv = pseudoinverse(y)
        rec = _layer_record(layer, y, act if layer > 0 else None)
        records.append(rec)
        if rec.projector_residual < cfg.stopping_error:
            stop_reason = "residual_below_E"
            break
        if layer + 1 == cfg.max_depth:
            break
        w = y_pinv
        if noise_stddev > 0:
            w = w + rng.normal(0.0, noise_stddev, size=w.shape)
        weights.append(w)
        y = _check_finite(apply(act, y @ w), f"hidden layer {layer + 1}")
        if cfg.hidden_bias:
            y = _prepend_ones(y)

    b, clipped = _output_targets(data, out)
    w_out = _check_finite(y_pinv @ b, "output weights")
    weights.append(w_out)
    net = PilNetwork(
        weights, act, out, BiasPolicy(hidden_bias=cfg.hidden_bias),
        meta={"algorithm": algorithm},
    )
    o = _check_finite(forward(net, data.x), "network output")

    warnings = []
    if stop_reason == "max_depth":
        warnings.append(
            f"max_depth {cfg.max_depth} reached with projector residual "
            f"{records[-1].projector_residual:.3g} >= E = {cfg.stopping_error:g}"
        )
    if clipped:
        warnings.append(f"{clipped} target entries clipped into the open inverse domain")
    report = TrainReport(
        algorithm=algorithm,
        final_sse=frobenius_error(o, data.t),
        residual_norm=float(np.linalg.norm(y @ w_out - b)),
        per_layer=records,
        depth_used=len(records),
        stop_reason=stop_reason,
        clipped_target_count=clipped,
        wall_time=time.perf_counter() - started,
        warnings=warnings,
    )
    return net, report


def train_epil(data: Dataset, cfg: TrainConfig = TrainConfig()) -> tuple[PilNetwork, TrainReport]:
    """Algorithm ePIL: grow layers ``Y^{l+1} = sigma(Y^l (Y^l)^+)`` until
    ``||Y^l (Y^l)^+ - I||_F^2 < E``, then ``W^L = (Y^L)^+ T``.

    ``depth_used`` counts the pseudo-inverted matrices ``Y^0 = X, ..., Y^L``,
    so a full-row-rank ``X`` stops with ``depth_used == 1``.
    """
    return _grow("epil", data, cfg, 0.0)


def train_pil1(data: Dataset, cfg: TrainConfig = TrainConfig()) -> tuple[PilNetwork, TrainReport]:
    """Algorithm PIL1: ePIL with ``W^l = (Y^l)^+ + G``, ``G ~ N(0, noise_stddev^2)``
    drawn fresh per layer. ``noise_stddev == 0`` reproduces ePIL exactly."""
    return _grow("pil1", data, cfg, cfg.noise_stddev)


TRAINERS = {
    "pil": train_pil,
    "pil0": train_pil0,
    "epil": train_epil,
    "pil1": train_pil1,
}


def train(algorithm: str, data: Dataset, cfg: TrainConfig = TrainConfig()):
    try:
        fn = TRAINERS[algorithm]
    except KeyError:
        raise ConfigError(
            f"unknown algorithm {algorithm!r}; expected one of {', '.join(ALGORITHMS)}"
        ) from None
    return fn(data, cfg)
