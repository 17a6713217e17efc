"""Effective positions: where each soliton stops being seen to the right of the observer.

For soliton ``i`` and a tolerance ``delta_X``::

    x_left  = sup { x : X_i(x*) > x* + delta_X for all x* < x }
    x_right = inf { x : X_i(x*) < x* - delta_X for all x* > x }

The canonical position map is piecewise linear in ``x*`` (see
:class:`~soligas.positions.PositionPath`), so both bounds are located exactly
on its segments rather than by sampling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DEFAULT_EPS, SolitonConfig, phase_matrix, sgn
from .positions import PositionPath


@dataclass(frozen=True)
class EffectivePositions:
    x_left: np.ndarray
    x_right: np.ndarray
    delta_X: float
    eps: float
    breakpoints: np.ndarray
    converged: bool = True

    @property
    def x_eff(self) -> np.ndarray:
        return 0.5 * (self.x_left + self.x_right)

    @property
    def delta_x(self) -> float:
        if len(self.x_left) == 0:
            return 0.0
        return float(np.max(self.x_right - self.x_left) / 2.0)

    def to_dict(self) -> dict:
        return {
            "x_eff": self.x_eff.tolist(),
            "x_left": self.x_left.tolist(),
            "x_right": self.x_right.tolist(),
            "delta_x": self.delta_x,
            "delta_X": self.delta_X,
            "eps": self.eps,
            "converged": self.converged,
        }


def _first_below(path: PositionPath, i: int, level: float) -> float:
    """First x* with d_i(x*) <= level."""
    for seg in path.segments:
        d0, s = seg.d0[i], seg.slope[i]
        if d0 <= level:
            return seg.x0
        if s < 0:
            root = seg.x0 + (level - d0) / s
            if root < seg.x1:
                return root
    # extremal ray on the right: d = X_plus - x*
    return max(path.x_end, path.extremal.X_plus[i] - level)


def _last_above(path: PositionPath, i: int, level: float) -> float:
    """Supremum of x* with d_i(x*) >= level."""
    tail = path.extremal.X_plus[i] - level
    if tail >= path.x_end:
        return tail
    for seg in reversed(path.segments):
        d0, s = seg.d0[i], seg.slope[i]
        d1 = d0 + s * (seg.x1 - seg.x0)
        if d1 >= level:
            return seg.x1
        if d0 >= level:
            return seg.x0 + (level - d0) / s
    return min(path.x_start, path.extremal.X_minus[i] - level)


def scan_effective(
    config: SolitonConfig,
    delta_X: float,
    eps: float = DEFAULT_EPS,
    path: PositionPath | None = None,
) -> EffectivePositions:
    if delta_X < 0:
        raise ValueError("delta_X must be non-negative")
    if path is None:
        path = PositionPath(config, eps, margin=2.0 * (delta_X + eps) + delta_X)
    n = config.n
    left = np.array([_first_below(path, i, delta_X) for i in range(n)])
    right = np.array([_last_above(path, i, -delta_X) for i in range(n)])
    return EffectivePositions(left, right, float(delta_X), float(eps), path.breakpoints, True)


def grid_effective(path: PositionPath, delta_X: float, grid: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sampled version of the two quantifiers, for cross-checking the exact scan."""
    grid = np.sort(np.asarray(grid, dtype=float))
    X = path.positions_many(grid)
    n = path.config.n
    left = np.empty(n)
    right = np.empty(n)
    for i in range(n):
        fail = np.flatnonzero(X[:, i] <= grid + delta_X)
        left[i] = grid[fail[0]] if len(fail) else np.inf
        hold = np.flatnonzero(X[:, i] >= grid - delta_X)
        right[i] = grid[hold[-1]] if len(hold) else -np.inf
    return left, right


@dataclass(frozen=True)
class BetheResidual:
    delta: np.ndarray
    """Centre of the residual interval ``y - x - 1/2 sum f phi``."""
    slack: np.ndarray
    """Half-width from pairs closer than ``2 delta_x`` whose sign is undetermined."""
    bound: float
    ok: bool

    def to_dict(self) -> dict:
        return {"delta": self.delta.tolist(), "slack": self.slack.tolist(), "bound": self.bound, "ok": self.ok}


def bethe_residual(config: SolitonConfig, eff: EffectivePositions) -> BetheResidual:
    """Residual of the discrete Bethe-type relation ``y_i = x_i + 1/2 sum f_ij phi_ij + delta_i``."""
    x = eff.x_eff
    dx = eff.delta_x
    phi = phase_matrix(config.chi)
    gap = x[:, None] - x[None, :]
    far = np.abs(gap) > 2.0 * dx
    np.fill_diagonal(far, False)
    f = np.where(far, sgn(gap), 0.0)
    near = ~far
    np.fill_diagonal(near, False)
    delta = config.y - x - 0.5 * np.sum(f * phi, axis=1)
    slack = 0.5 * np.sum(np.where(near, np.abs(phi), 0.0), axis=1)
    bound = eff.delta_X + dx
    ok = bool(np.all(np.abs(delta) <= bound + slack + 1e-9))
    return BetheResidual(delta, slack, bound, ok)


def position_trajectory(path: PositionPath, grid) -> np.ndarray:
    """Rows ``(x*, X_1(x*), ..., X_n(x*))`` for CSV output."""
    grid = np.asarray(grid, dtype=float)
    return np.column_stack([grid, path.positions_many(grid)])
