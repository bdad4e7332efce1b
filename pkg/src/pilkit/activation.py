"""Elementwise activation functions and their partial inverses."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit, logit

from .errors import ConfigError, DomainError
from .linalg import as_matrix

KINDS = ("tanh", "sigmoid", "linear", "step", "gaussian")
INVERTIBLE = frozenset({"tanh", "sigmoid", "linear"})

# margin kept between inverse-activation inputs and the open codomain boundary
DELTA = 1e-12
# an entry this close to a codomain bound counts as saturated
SATURATION_TOL = 1e-12

_CODOMAIN = {
    "tanh": (-1.0, 1.0),
    "sigmoid": (0.0, 1.0),
    "step": (0.0, 1.0),
    "gaussian": (0.0, 1.0),
    "linear": (-np.inf, np.inf),
}


@dataclass(frozen=True)
class Activation:
    """Named scalar map.

    ``params`` holds the width for ``gaussian`` (``exp(-(x/w)^2)``, default
    1.0) and the threshold for ``step`` (``1 if x > threshold else 0``,
    default 0.0). Other kinds take no parameters.
    """

    kind: str = "tanh"
    params: tuple[float, ...] = field(default=())

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(
                f"unknown activation {self.kind!r}; expected one of {', '.join(KINDS)}"
            )
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        if self.kind == "gaussian" and self.params and self.params[0] <= 0:
            raise ConfigError(f"gaussian width must be positive, got {self.params[0]}")
        if self.kind in ("tanh", "sigmoid", "linear") and self.params:
            raise ConfigError(f"activation {self.kind!r} takes no parameters")

    @classmethod
    def parse(cls, text: str) -> "Activation":
        """Parse ``"tanh"`` or ``"gaussian:2.0"``-style keys."""
        kind, _, rest = text.strip().partition(":")
        try:
            params = tuple(float(p) for p in rest.split(",")) if rest else ()
        except ValueError as exc:
            raise ConfigError(f"bad activation parameters in {text!r}") from exc
        return cls(kind, params)

    def __str__(self) -> str:
        if self.params:
            return f"{self.kind}:{','.join(repr(p) for p in self.params)}"
        return self.kind

    @property
    def invertible(self) -> bool:
        return self.kind in INVERTIBLE

    @property
    def bounded(self) -> bool:
        return self.kind != "linear"

    @property
    def codomain(self) -> tuple[float, float]:
        return _CODOMAIN[self.kind]

    @property
    def width(self) -> float:
        return self.params[0] if self.params else 1.0

    @property
    def threshold(self) -> float:
        return self.params[0] if self.params else 0.0

    def to_dict(self) -> dict:
        return {"kind": self.kind, "params": list(self.params)}

    @classmethod
    def from_dict(cls, d: dict) -> "Activation":
        return cls(d["kind"], tuple(d.get("params", ())))


def apply(act: Activation, m) -> np.ndarray:
    """Apply ``act`` elementwise; shape is preserved."""
    m = as_matrix(m)
    kind = act.kind
    if kind == "tanh":
        return np.tanh(m)
    if kind == "sigmoid":
        return expit(m)
    if kind == "linear":
        return m.copy()
    if kind == "step":
        return (m > act.threshold).astype(np.float64)
    # gaussian
    z = m / act.width
    return np.exp(-(z * z))


def inverse_with_count(act: Activation, m, delta: float = DELTA) -> tuple[np.ndarray, int]:
    """Invert ``act`` elementwise, returning ``(preimage, clipped_count)``.

    Entries strictly inside the codomain but within ``delta`` of a bound are
    pulled back to ``bound -/+ delta`` and counted. Entries at or beyond a
    bound raise :class:`DomainError`: they mean the targets were not encoded
    for this activation, and ArcTanh of them is infinite or complex.
    """
    m = as_matrix(m)
    if not act.invertible:
        raise DomainError(f"activation {act.kind!r} has no inverse")
    if act.kind == "linear":
        return m.copy(), 0
    lo, hi = act.codomain
    outside = (m <= lo) | (m >= hi)
    if outside.any():
        i, j = np.argwhere(outside)[0]
        raise DomainError(
            f"{int(outside.sum())} entr{'y' if outside.sum() == 1 else 'ies'} outside the open "
            f"codomain ({lo}, {hi}) of {act.kind}; first at [{i}, {j}] = {m[i, j]!r}"
        )
    clipped = np.clip(m, lo + delta, hi - delta)
    count = int(np.count_nonzero(clipped != m))
    if act.kind == "tanh":
        return np.arctanh(clipped), count
    return logit(clipped), count


def apply_inverse(act: Activation, m, delta: float = DELTA) -> np.ndarray:
    """Elementwise inverse of ``act`` (ArcTanh, logit, identity)."""
    return inverse_with_count(act, m, delta)[0]


def saturation_mask(act: Activation, m, tol: float = SATURATION_TOL) -> np.ndarray:
    """Boolean mask of entries within ``tol`` of a finite codomain bound.

    Always all-False for ``linear``. ``gaussian`` only saturates toward 0;
    its value 1 is attained at the origin and is not saturation.
    """
    m = np.asarray(m, dtype=np.float64)
    if not act.bounded:
        return np.zeros(m.shape, dtype=bool)
    lo, hi = act.codomain
    mask = np.abs(m - lo) <= tol
    if act.kind != "gaussian":
        mask |= np.abs(hi - m) <= tol
    return mask
