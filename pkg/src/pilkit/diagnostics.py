"""Runnable rank/invertibility experiments.

* :func:`theorem1_sweep` shrinks the weight interval scale and watches a
  bounded activation saturate until the hidden matrix collapses to rank 1.
* :func:`counterexample_fx` / :func:`fx_rank_experiment` sample the
  three-Gaussian target and measure the rank of a random hidden matrix.
* :func:`error_floor` computes ``||P T - T||_F`` for narrow hidden layers.
* :func:`float_range_guard` flags entries a float32 pipeline cannot carry.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .activation import DELTA, Activation, apply, saturation_mask
from .dataset import Dataset, TargetEncoding
from .errors import ConfigError
from .linalg import RankInfo, as_matrix, numerical_rank, projector
from .trainers import TrainConfig, pil0_hidden

DEFAULT_SEED = 0
DEFAULT_EPSILONS = (1.0, 1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6)
# largest magnitude a float32 pipeline represents before overflowing to inf
SINGLE_PRECISION_LIMIT = 10.0 ** 38.53
# ArcTanh inputs this close to +-1 are reported as near the domain boundary
NEAR_BOUNDARY_MARGIN = 1e-9


@dataclass(frozen=True)
class SaturationProbe:
    """Setup for the saturation sweep.

    Weights and biases are drawn once from ``weight_interval = (a, b)`` and
    divided by each ``epsilon``, so every scaled draw is uniform on
    ``(a/eps, b/eps)`` and pre-activations grow monotonically along the
    schedule. Inputs are ``n_samples x n_features`` uniform on
    ``input_range`` plus a bias column; the hidden layer has ``n_samples``
    units so ``H`` is square.
    """

    activation: Activation = field(default_factory=lambda: Activation("sigmoid"))
    weight_interval: tuple[float, float] = (1.0, 2.0)
    epsilon_schedule: tuple[float, ...] = DEFAULT_EPSILONS
    input_range: tuple[float, float] = (0.0, 1.0)
    n_samples: int = 50
    n_features: int = 5
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        eps = tuple(float(e) for e in self.epsilon_schedule)
        object.__setattr__(self, "epsilon_schedule", eps)
        if not eps or any(e <= 0 for e in eps):
            raise ConfigError("epsilon schedule must be non-empty and strictly positive")
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise ConfigError("epsilon schedule must be strictly decreasing")
        if self.n_samples < 2:
            raise ConfigError(f"n_samples must be >= 2, got {self.n_samples}")
        if self.n_features < 1:
            raise ConfigError(f"n_features must be >= 1, got {self.n_features}")
        lo, hi = self.input_range
        if not lo < hi:
            raise ConfigError(f"input_range needs lo < hi, got {self.input_range}")
        a, b = self.weight_interval
        if a == b:
            raise ConfigError(f"weight_interval is degenerate: {self.weight_interval}")

    def to_dict(self) -> dict:
        return {
            "activation": str(self.activation),
            "weight_interval": list(self.weight_interval),
            "epsilon_schedule": list(self.epsilon_schedule),
            "input_range": list(self.input_range),
            "n_samples": self.n_samples,
            "n_features": self.n_features,
            "seed": self.seed,
        }


@dataclass
class EpsilonRecord:
    epsilon: float
    rank: RankInfo
    saturated_fraction: float
    min_entry: float
    max_entry: float
    max_abs_preactivation: float

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "rank": self.rank.to_dict(spectrum=False),
            "saturated_fraction": self.saturated_fraction,
            "min_entry": self.min_entry,
            "max_entry": self.max_entry,
            "max_abs_preactivation": self.max_abs_preactivation,
            "beyond_single_precision": self.max_abs_preactivation > SINGLE_PRECISION_LIMIT,
        }


@dataclass
class RankSweepResult:
    probe: SaturationProbe
    per_epsilon: list[EpsilonRecord]
    notes: list[str] = field(default_factory=list)

    @property
    def applicable(self) -> bool:
        return self.probe.activation.bounded and _single_signed(self.probe.weight_interval)

    @property
    def terminal_rank(self) -> int:
        return self.per_epsilon[-1].rank.numerical_rank

    def to_dict(self) -> dict:
        return {
            "experiment": "theorem1",
            "probe": self.probe.to_dict(),
            "applicable": self.applicable,
            "terminal_rank": self.terminal_rank,
            "per_epsilon": [r.to_dict() for r in self.per_epsilon],
            "notes": list(self.notes),
        }

    def csv_rows(self) -> list[tuple]:
        return [("epsilon", "rank", "saturated_fraction")] + [
            (r.epsilon, r.rank.numerical_rank, r.saturated_fraction) for r in self.per_epsilon
        ]


def _single_signed(interval: tuple[float, float]) -> bool:
    a, b = interval
    return (a > 0 and b > 0) or (a < 0 and b < 0)


def theorem1_sweep(probe: SaturationProbe) -> RankSweepResult:
    """Rank and saturation of ``H = sigma(X W / eps)`` along the epsilon schedule."""
    rng = np.random.default_rng(probe.seed)
    n, f = probe.n_samples, probe.n_features
    x = np.hstack([np.ones((n, 1)), rng.uniform(*probe.input_range, size=(n, f))])
    a, b = sorted(probe.weight_interval)
    base = rng.uniform(a, b, size=(f + 1, n))
    z_base = x @ base

    records = []
    for eps in probe.epsilon_schedule:
        with np.errstate(over="ignore"):
            z = z_base / eps
        if not np.all(np.isfinite(z)):
            raise ConfigError(f"pre-activations overflow float64 at epsilon={eps:g}")
        h = apply(probe.activation, z)
        records.append(EpsilonRecord(
            epsilon=eps,
            rank=numerical_rank(h),
            saturated_fraction=float(saturation_mask(probe.activation, h).mean()),
            min_entry=float(h.min()),
            max_entry=float(h.max()),
            max_abs_preactivation=float(np.abs(z).max()),
        ))

    notes = []
    if not probe.activation.bounded:
        notes.append("theorem inapplicable: unbounded activation")
    if not _single_signed(probe.weight_interval):
        notes.append("theorem inapplicable: weight interval straddles zero")
    return RankSweepResult(probe, records, notes)


# --------------------------------------------------------------------------- f(x)


def fx(x):
    """Three-Gaussian target on ``[0, 1]``."""
    x = np.asarray(x, dtype=np.float64)
    return (
        0.2 * np.exp(-((10 * x - 4) ** 2))
        + 0.5 * np.exp(-((80 * x - 40) ** 2))
        + 0.3 * np.exp(-((80 * x - 20) ** 2))
    )


def counterexample_fx(n_points: int = 100) -> Dataset:
    """``n_points`` equispaced samples of :func:`fx` as a regression dataset."""
    if n_points < 2:
        raise ConfigError(f"n_points must be >= 2, got {n_points}")
    x = np.linspace(0.0, 1.0, n_points)[:, None]
    return Dataset.from_arrays(
        x, fx(x), TargetEncoding("regression-raw"), source=f"counterexample_fx(n_points={n_points})"
    )


@dataclass
class FxRankReport:
    n_points: int
    hidden_width: int
    seed: int
    activation: str
    weight_interval: tuple[float, float]
    rank: RankInfo
    sse: float
    x: np.ndarray = field(repr=False)
    y: np.ndarray = field(repr=False)

    @property
    def full_rank(self) -> bool:
        return self.rank.numerical_rank == min(self.n_points, self.hidden_width)

    def to_dict(self) -> dict:
        return {
            "experiment": "fx-rank",
            "n_points": self.n_points,
            "hidden_width": self.hidden_width,
            "seed": self.seed,
            "activation": self.activation,
            "weight_interval": list(self.weight_interval),
            "rank": self.rank.to_dict(),
            "full_rank": self.full_rank,
            "sse": self.sse,
        }

    def csv_rows(self) -> list[tuple]:
        return [("x", "fx")] + [(float(a), float(b)) for a, b in zip(self.x, self.y)]


def fx_rank_experiment(
    n_points: int = 100,
    hidden_width: int = 100,
    seed: int = DEFAULT_SEED,
    activation: Activation = Activation("tanh"),
    weight_interval: tuple[float, float] = (-1.0, 1.0),
) -> FxRankReport:
    """Rank, conditioning and least-squares SSE of a random hidden matrix on f(x).

    Input weights and biases are uniform on ``weight_interval``; the output
    layer is the linear least-squares readout ``W = H^+ T``.
    """
    if hidden_width > n_points:
        raise ConfigError(f"hidden_width {hidden_width} must not exceed n_points {n_points}")
    data = counterexample_fx(n_points)
    cfg = TrainConfig(activation=activation, weight_interval=weight_interval)
    _, h = pil0_hidden(data, hidden_width, cfg, np.random.default_rng(seed))
    p = projector(h)
    resid = p @ data.t - data.t
    sse = float(np.sum(resid * resid) / (2 * n_points))
    return FxRankReport(
        n_points, hidden_width, seed, str(activation), tuple(weight_interval),
        numerical_rank(h), sse, data.raw_x[:, 0].copy(), data.t[:, 0].copy(),
    )


# --------------------------------------------------------------------------- floor


def error_floor(
    data: Dataset,
    hidden_width: int,
    seed: int = DEFAULT_SEED,
    activation: Activation = Activation("tanh"),
    weight_interval: tuple[float, float] = (-1.0, 1.0),
) -> float:
    """``||P T - T||_F`` with ``P = H H^+`` for the PIL0 hidden matrix ``H``.

    ``H`` is drawn exactly as :func:`~pilkit.trainers.train_pil0` draws it
    for the same seed, so the value equals the residual of ``W = H^+ T``.
    """
    if hidden_width >= data.n_samples:
        raise ConfigError(
            f"error floor needs hidden_width < N; got {hidden_width} >= {data.n_samples}"
        )
    cfg = TrainConfig(activation=activation, weight_interval=weight_interval)
    _, h = pil0_hidden(data, hidden_width, cfg, np.random.default_rng(seed))
    p = projector(h)
    return float(np.linalg.norm(p @ data.t - data.t))


# --------------------------------------------------------------------------- float range


@dataclass
class FloatRangeReport:
    max_abs: float
    beyond_single_precision: int
    preimage_overflow_single: int
    arctanh_in_domain: bool
    near_domain_boundary: int
    would_clip: int

    @property
    def flagged(self) -> bool:
        return bool(
            self.beyond_single_precision or self.preimage_overflow_single
            or not self.arctanh_in_domain or self.near_domain_boundary
        )

    def to_dict(self) -> dict:
        return {
            "max_abs": self.max_abs,
            "beyond_single_precision": self.beyond_single_precision,
            "preimage_overflow_single": self.preimage_overflow_single,
            "arctanh_in_domain": self.arctanh_in_domain,
            "near_domain_boundary": self.near_domain_boundary,
            "would_clip": self.would_clip,
            "flagged": self.flagged,
        }


def float_range_guard(m, margin: float = NEAR_BOUNDARY_MARGIN) -> FloatRangeReport:
    """Advisory scan of ``m`` against float32 range and the ArcTanh domain.

    * ``beyond_single_precision``: entries with ``|v| > 10**38.53``.
    * ``preimage_overflow_single``: in-domain entries whose ArcTanh pre-image
      is not a finite float32, i.e. ``|v|`` rounds to 1 in single precision.
    * ``near_domain_boundary``: in-domain entries with ``1 - |v| <= margin``.
    * ``would_clip``: entries the inverse activation pulls back by ``DELTA``.
    """
    m = as_matrix(m)
    a = np.abs(m)
    with np.errstate(over="ignore"):
        single = np.abs(m.astype(np.float32))
    inside = a < 1.0
    return FloatRangeReport(
        max_abs=float(a.max()),
        beyond_single_precision=int(np.count_nonzero(a > SINGLE_PRECISION_LIMIT)),
        preimage_overflow_single=int(np.count_nonzero(inside & (single >= 1.0))),
        arctanh_in_domain=bool(inside.all()),
        near_domain_boundary=int(np.count_nonzero(inside & (1.0 - a <= margin))),
        would_clip=int(np.count_nonzero(inside & (a > 1.0 - DELTA))),
    )


def csv_text(rows: list[tuple]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for r in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in r])
    return buf.getvalue()
