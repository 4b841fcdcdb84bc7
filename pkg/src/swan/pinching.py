"""Gauss-Seidel grid search over pinching-antenna positions."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np

from .errors import FeasibilityError
from .geometry import FEASIBILITY_ATOL, GeometryConfig, is_feasible

BatchObjective = Callable[[np.ndarray, int, np.ndarray], np.ndarray]


@dataclass
class SearchGrid:
    """Candidate x-coordinates per antenna plus the spacing constraint."""

    candidates: List[np.ndarray]
    delta_min: float
    resolution: float

    @property
    def M(self) -> int:
        return len(self.candidates)


def interval_grid(lo: float, hi: float, resolution: float) -> np.ndarray:
    """Points ``lo, lo + res, ...`` up to and including ``hi``."""
    n = int(np.floor((hi - lo) / resolution + 1e-9))
    pts = lo + resolution * np.arange(n + 1)
    if hi - pts[-1] > 1e-9 * max(1.0, abs(hi)):
        pts = np.append(pts, hi)
    else:
        pts[-1] = min(pts[-1], hi)
    return pts


def segment_grid(geom: GeometryConfig, resolution: float = 0.01) -> SearchGrid:
    """Per-segment candidates including both segment endpoints."""
    if resolution <= 0:
        raise ValueError("resolution must be positive")
    lo, hi = geom.segment_bounds
    cands = [interval_grid(a, b, resolution) for a, b in zip(lo, hi)]
    return SearchGrid(cands, geom.delta_min, resolution)


def batch_from_scalar(objective: Callable[[np.ndarray], float]) -> BatchObjective:
    """Adapt ``f(x) -> float`` to the batched coordinate interface."""

    def batch(x, m, cands):
        out = np.empty(len(cands))
        trial = x.copy()
        for i, c in enumerate(cands):
            trial[m] = c
            out[i] = objective(trial)
        return out

    return batch


@dataclass
class SearchResult:
    x: np.ndarray
    trace: List[float] = field(default_factory=list)
    passes: int = 0
    moves: int = 0


def _spacing_ok(x: np.ndarray, m: int, cands: np.ndarray, delta_min: float) -> np.ndarray:
    others = np.delete(x, m)
    if others.size == 0:
        return np.ones(len(cands), dtype=bool)
    gap = np.min(np.abs(cands[:, None] - others[None, :]), axis=1)
    return gap >= delta_min - FEASIBILITY_ATOL


def gauss_seidel(objective: Callable[[np.ndarray], float],
                 grid: SearchGrid, x0: Sequence[float], sense: str = "minimize",
                 tol: float = 1e-8, max_pass: int = 50,
                 batch: Optional[BatchObjective] = None,
                 geom: Optional[GeometryConfig] = None) -> SearchResult:
    """Sequential one-dimensional grid search, ascending antenna index.

    Each coordinate moves to its best feasible candidate only on strict
    improvement.  Passes repeat until the fractional objective change over a
    pass is below ``tol``.  ``batch(x, m, cands)`` evaluates the objective for
    every candidate value of coordinate ``m`` at once and is always handed the
    grid's own candidate array, so implementations may cache per-array work;
    when omitted it is built from ``objective``.  Infeasible or non-finite
    candidates are never accepted.
    """
    if sense not in ("minimize", "maximize"):
        raise ValueError("sense must be 'minimize' or 'maximize'")
    sign = 1.0 if sense == "minimize" else -1.0
    x = np.array(x0, dtype=float)
    if geom is not None:
        ok, reason = is_feasible(geom, x)
        if not ok:
            raise FeasibilityError(reason)
    elif _spacing_violated(x, grid.delta_min):
        raise FeasibilityError("initial positions violate the spacing constraint")
    if batch is None:
        batch = batch_from_scalar(objective)

    f = sign * float(objective(x))
    result = SearchResult(x=x, trace=[sign * f])
    for _ in range(max_pass):
        f_start = f
        for m in range(grid.M):
            cands = grid.candidates[m]
            ok = _spacing_ok(x, m, cands, grid.delta_min)
            if not ok.any():
                continue
            vals = sign * np.asarray(batch(x, m, cands), dtype=float)
            vals[~ok | ~np.isfinite(vals)] = np.inf
            best = int(np.argmin(vals))
            # strict improvement with a round-off guard
            if vals[best] < f - 1e-13 * max(1.0, abs(f)):
                x[m] = cands[best]
                f = float(vals[best])
                result.moves += 1
        result.passes += 1
        result.trace.append(sign * f)
        if abs(f_start - f) <= tol * max(abs(f_start), np.finfo(float).tiny):
            break
    result.x = x
    return result


def _spacing_violated(x: np.ndarray, delta_min: float) -> bool:
    if len(x) < 2:
        return False
    return bool(np.any(np.diff(np.sort(x)) < delta_min - FEASIBILITY_ATOL))
