"""Reduce a configuration to a subset of its solitons.

Removing a soliton to the far right (or left) shifts the impact parameters of
the remaining ones by half the corresponding phase shift.  The other
projections choose which solitons to keep from the position map at an
observation point, or from effective positions and a fluid cell.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DEFAULT_EPS, SolitonConfig, phase_matrix
from .effective import EffectivePositions, scan_effective
from .positions import PositionPath, contract, extremal_and_core
from .tau import field


@dataclass(frozen=True)
class Projection:
    config: SolitonConfig
    kept: np.ndarray
    plus: np.ndarray
    minus: np.ndarray

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "kept": self.kept.tolist(),
            "plus": self.plus.tolist(),
            "minus": self.minus.tolist(),
        }


def _index_array(idx, n: int) -> np.ndarray:
    idx = np.asarray(sorted(set(int(i) for i in np.atleast_1d(idx))), dtype=int)
    if len(idx) and (idx.min() < 0 or idx.max() >= n):
        raise IndexError("soliton index out of range")
    return idx


def _partition(n: int, plus, minus) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    plus = _index_array(plus, n)
    minus = _index_array(minus, n)
    if np.intersect1d(plus, minus).size:
        raise ValueError("a soliton cannot be removed in both directions")
    kept = np.setdiff1d(np.arange(n), np.union1d(plus, minus))
    return kept, plus, minus


def project_out(config: SolitonConfig, plus=(), minus=()) -> Projection:
    """Send solitons ``plus`` to +infinity and ``minus`` to -infinity."""
    kept, plus, minus = _partition(config.n, plus, minus)
    phi = phase_matrix(config.chi)
    shift = 0.5 * phi[np.ix_(kept, plus)].sum(axis=1) - 0.5 * phi[np.ix_(kept, minus)].sum(axis=1)
    new = SolitonConfig(config.chi[kept], config.y[kept] + shift)
    return Projection(new, kept, plus, minus)


def limit_error(config: SolitonConfig, plus=(), minus=(), distance: float | None = None, points: int = 401) -> float:
    """Max field difference between the projection and the configuration with the
    removed solitons pushed a finite ``distance`` away (default ``60/chi_min``)."""
    proj = project_out(config, plus, minus)
    if proj.config.n == 0:
        return 0.0
    if distance is None:
        distance = 60.0 / float(np.min(config.chi))
    y = config.y.copy()
    y[proj.plus] += distance
    y[proj.minus] -= distance
    pushed = SolitonConfig(config.chi, y)
    lo, hi = extremal_and_core(proj.config).core
    pad = 10.0 / float(np.min(proj.config.chi))
    x = np.linspace(lo - pad, hi + pad, points)
    return float(np.max(np.abs(field(pushed, x).u - field(proj.config, x).u)))


def extract(
    config: SolitonConfig,
    plus,
    minus,
    x_star: float,
    eps: float = DEFAULT_EPS,
    path: PositionPath | None = None,
) -> Projection:
    """Keep the complement of ``plus`` and ``minus`` with their positions frozen at ``x_star``."""
    kept, plus, minus = _partition(config.n, plus, minus)
    if path is None:
        path = PositionPath(config, eps)
    X = path.positions(x_star)
    y_new = contract(config.chi[kept], x_star, X[kept], eps)
    return Projection(SolitonConfig(config.chi[kept], y_new), kept, plus, minus)


def is_separated(d: np.ndarray, plus, minus, eps: float = DEFAULT_EPS) -> bool:
    plus = np.asarray(plus, dtype=int)
    minus = np.asarray(minus, dtype=int)
    return bool(np.all(d[plus] >= eps) and np.all(d[minus] <= -eps))


def local_projection(
    config: SolitonConfig,
    x_star: float,
    width: float,
    eps: float = DEFAULT_EPS,
    path: PositionPath | None = None,
) -> Projection:
    """Keep the solitons whose displacement from ``x_star`` is at most ``width/2``."""
    if width < 2 * eps:
        raise ValueError("width must be at least 2*eps")
    if path is None:
        path = PositionPath(config, eps)
    d = path.displacements(x_star)
    plus = np.flatnonzero(d > width / 2.0)
    minus = np.flatnonzero(d < -width / 2.0)
    return extract(config, plus, minus, x_star, eps, path)


def fluid_cell_projection(
    config: SolitonConfig,
    cell: tuple[float, float],
    delta_X: float,
    eps: float = DEFAULT_EPS,
    eff: EffectivePositions | None = None,
) -> Projection:
    """Keep solitons whose effective position lies in the closed ``cell``."""
    lo, hi = float(cell[0]), float(cell[1])
    if not lo < hi:
        raise ValueError("cell must satisfy lo < hi")
    if eff is None:
        eff = scan_effective(config, delta_X, eps)
    x = eff.x_eff
    plus = np.flatnonzero(x > hi)
    minus = np.flatnonzero(x < lo)
    return project_out(config, plus, minus)
