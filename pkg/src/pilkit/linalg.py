"""Dense-matrix primitives: SVD pseudoinverse, numerical rank, projectors.

Matrices are plain 2-D ``numpy.ndarray`` of float64. Every public function
validates its inputs through :func:`as_matrix`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidMatrix, ShapeMismatch

EPS = np.finfo(np.float64).eps


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Return ``a`` as a finite, non-empty 2-D float64 array."""
    try:
        m = np.asarray(a, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise InvalidMatrix(f"{name}: cannot convert to a real matrix ({exc})") from exc
    if m.ndim != 2:
        raise InvalidMatrix(f"{name}: expected a 2-D matrix, got ndim={m.ndim}")
    if m.shape[0] < 1 or m.shape[1] < 1:
        raise InvalidMatrix(f"{name}: empty matrix of shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InvalidMatrix(f"{name}: contains NaN or Inf")
    return m


def default_tolerance(shape: tuple[int, int], sigma_max: float) -> float:
    """Standard singular-value cutoff ``max(rows, cols) * sigma_max * eps``."""
    return max(shape) * sigma_max * EPS


def _check_tol(tol: float | None) -> None:
    if tol is not None and not (tol > 0 and math.isfinite(tol)):
        raise ValueError(f"tolerance must be a positive finite number, got {tol!r}")


def pseudoinverse(a, tol: float | None = None) -> np.ndarray:
    """Moore-Penrose pseudoinverse via a thin SVD.

    Singular values ``<= tol`` are treated as zero. The default tolerance is
    ``max(rows, cols) * sigma_max * eps``; a zero matrix maps to the zero
    matrix of transposed shape.
    """
    m = as_matrix(a)
    _check_tol(tol)
    u, s, vt = np.linalg.svd(m, full_matrices=False)
    if tol is None:
        tol = default_tolerance(m.shape, s[0])
    r = int(np.count_nonzero(s > tol))
    if r == 0:
        return np.zeros((m.shape[1], m.shape[0]))
    return (vt[:r].T / s[:r]) @ u[:, :r].T


@dataclass(frozen=True)
class RankInfo:
    numerical_rank: int
    singular_values: np.ndarray
    tolerance_used: float
    condition_estimate: float

    def to_dict(self, spectrum: bool = True) -> dict:
        cond = self.condition_estimate
        d = {
            "numerical_rank": self.numerical_rank,
            "tolerance_used": self.tolerance_used,
            # inf (rank 0) is not representable in strict JSON
            "condition_estimate": cond if math.isfinite(cond) else None,
        }
        if spectrum:
            d["singular_values"] = [float(v) for v in self.singular_values]
        return d


def numerical_rank(a, tol: float | None = None) -> RankInfo:
    """Count singular values above ``tol`` and return the full spectrum.

    The condition estimate is ``sigma_max / sigma_min`` over the retained
    values (``inf`` for a zero matrix).
    """
    m = as_matrix(a)
    _check_tol(tol)
    s = np.linalg.svd(m, compute_uv=False)
    if tol is None:
        tol = default_tolerance(m.shape, s[0])
    r = int(np.count_nonzero(s > tol))
    cond = float(s[0] / s[r - 1]) if r > 0 else math.inf
    s.setflags(write=False)
    return RankInfo(r, s, float(tol), cond)


def frobenius_error(o, t) -> float:
    """Cost ``||O - T||_F^2 / (2N)`` with N the row count."""
    o = as_matrix(o, "output")
    t = as_matrix(t, "target")
    if o.shape != t.shape:
        raise ShapeMismatch(f"output shape {o.shape} != target shape {t.shape}")
    diff = o - t
    return float(np.sum(diff * diff) / (2 * o.shape[0]))


def projector(y, tol: float | None = None) -> np.ndarray:
    """Orthogonal projector ``Y Y^+`` onto the column space of ``y``.

    Built as ``U_r U_r^T`` from the thin SVD with the same rank cutoff as
    :func:`pseudoinverse`. This equals ``Y Y^+`` exactly in real arithmetic,
    but stays symmetric and idempotent to rounding when ``y`` is badly
    conditioned, where the literal product loses about ``cond(Y) * eps``.
    """
    y = as_matrix(y, "y")
    _check_tol(tol)
    u, s, _ = np.linalg.svd(y, full_matrices=False)
    if tol is None:
        tol = default_tolerance(y.shape, s[0])
    ur = u[:, : int(np.count_nonzero(s > tol))]
    return ur @ ur.T


def projector_residual(y, tol: float | None = None) -> float:
    """``||Y Y^+ - I_N||_F^2``; zero up to rounding iff ``y`` has full row rank."""
    p = projector(y, tol)
    p[np.diag_indices_from(p)] -= 1.0
    return float(np.sum(p * p))


def projector_defects(p) -> tuple[float, float]:
    """Return ``(||P^2 - P||_F, ||P^T - P||_F)`` for a candidate projector."""
    p = as_matrix(p, "projector")
    if p.shape[0] != p.shape[1]:
        raise ShapeMismatch(f"projector must be square, got {p.shape}")
    return (
        float(np.linalg.norm(p @ p - p)),
        float(np.linalg.norm(p.T - p)),
    )
