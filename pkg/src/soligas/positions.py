"""Soliton positions seen from an observation point ``x_star``.

The *contraction* maps positions ``X`` to impact parameters:

    y_i = X_i - 1/2 sum_{j != i} sgn_eps(X_j - x_star) phi_ij

It is piecewise linear in the displacements ``d = X - x_star``.  The
*expansion* picks a right inverse.  Far from the interaction core the solution
is unique and given in closed form; inside, several solutions may coexist and
the canonical one is obtained by continuation in ``x_star`` from the far left.

Continuation is done exactly: the solution set of ``C(d) + x_star = y`` is a
piecewise-linear curve in ``(d, x_star)`` space, traced cell by cell (one
cell per sign pattern).  At a fold, where the curve turns back in
``x_star``, the canonical solution jumps to the point where the curve first
reaches the new ``x_star``.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .core import DEFAULT_EPS, SolitonConfig, phase_matrix, sgn_eps
from .errors import SolverError

ABOVE, BAND, BELOW = 1, 0, -1


def contract(chi, x_star: float, X, eps: float = DEFAULT_EPS) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    phi = phase_matrix(chi)
    return X - 0.5 * (phi @ sgn_eps(X - x_star, eps))


def position_residual(phi: np.ndarray, z: np.ndarray, d: np.ndarray, eps: float) -> np.ndarray:
    return d - 0.5 * (phi @ sgn_eps(d, eps)) - z


@dataclass(frozen=True)
class ExtremalPositions:
    X_minus: np.ndarray
    """Positions seen from far left of the core (all displacements positive)."""
    X_plus: np.ndarray
    """Positions seen from far right of the core."""
    core: tuple[float, float]


def extremal_and_core(config: SolitonConfig) -> ExtremalPositions:
    half = 0.5 * phase_matrix(config.chi).sum(axis=1)
    X_minus = config.y + half
    X_plus = config.y - half
    if config.n == 0:
        return ExtremalPositions(X_minus, X_plus, (np.nan, np.nan))
    return ExtremalPositions(X_minus, X_plus, (float(X_minus.min()), float(X_plus.max())))


def pattern_of(d: np.ndarray, eps: float) -> np.ndarray:
    return np.where(d >= eps, ABOVE, np.where(d <= -eps, BELOW, BAND)).astype(int)


class _PatternAlgebra:
    """Linear algebra of one sign pattern: ``J = I - phi Lambda / 2`` with Lambda = 1/eps on the band."""

    def __init__(self, phi: np.ndarray, eps: float):
        self.phi = phi
        self.eps = eps

    def solve(self, pattern: np.ndarray, rhs: np.ndarray) -> np.ndarray:
        band = np.flatnonzero(pattern == BAND)
        out = np.array(rhs, dtype=float)
        if len(band):
            K = np.eye(len(band)) - self.phi[np.ix_(band, band)] / (2.0 * self.eps)
            vb = np.linalg.solve(K, rhs[band])
            out = rhs + self.phi[:, band] @ vb / (2.0 * self.eps)
            out[band] = vb
        return out

    def affine_solution(self, pattern: np.ndarray, z: np.ndarray) -> np.ndarray:
        """Displacements solving the linear system of ``pattern`` (consistency not checked)."""
        c = np.where(pattern == BAND, 0.0, pattern.astype(float))
        return self.solve(pattern, z + 0.5 * (self.phi @ c))

    def tangent(self, pattern: np.ndarray) -> tuple[np.ndarray, float]:
        """Oriented tangent ``(t_d, t_x)`` of the solution curve inside the cell."""
        n = len(pattern)
        band = np.flatnonzero(pattern == BAND)
        if len(band) == 0:
            return -np.ones(n), 1.0
        K = np.eye(len(band)) - self.phi[np.ix_(band, band)] / (2.0 * self.eps)
        det = np.linalg.det(K)
        cond = np.linalg.cond(K)
        if np.isfinite(cond) and cond < 1e12:
            tx = 1.0 if det > 0 else -1.0
            tb = -tx * np.linalg.solve(K, np.ones(len(band)))
        else:
            # singular band block: the curve moves at fixed x_star
            _, _, vh = np.linalg.svd(K)
            tb = vh[-1]
            tx = 0.0
        td = np.full(n, -tx) + self.phi[:, band] @ tb / (2.0 * self.eps)
        td[band] = tb
        # orientation: det([[J, 1], [t_d, t_x]]) > 0
        J = np.eye(n)
        J[:, band] -= self.phi[:, band] / (2.0 * self.eps)
        A = np.zeros((n + 1, n + 1))
        A[:n, :n] = J
        A[:n, n] = 1.0
        A[n, :n] = td
        A[n, n] = tx
        if np.linalg.det(A) < 0:
            td, tx = -td, -tx
        return td, tx


@dataclass(frozen=True)
class PathSegment:
    """Piece of the canonical expansion: ``d(x) = d0 + slope * (x - x0)`` on ``[x0, x1)``."""

    x0: float
    x1: float
    d0: np.ndarray
    slope: np.ndarray
    pattern: np.ndarray

    def d_at(self, x: float) -> np.ndarray:
        return self.d0 + self.slope * (x - self.x0)


class PositionPath:
    """Canonical observer-relative positions ``X(x_star)`` for every ``x_star``.

    ``segments`` cover ``[x_start, x_end)``; left of it the positions are the
    extremal ``X_minus``, right of it ``X_plus``.
    """

    def __init__(self, config: SolitonConfig, eps: float = DEFAULT_EPS, margin: float = 1.0, max_cells: int = 200_000):
        if not eps > 0:
            raise ValueError("eps must be positive")
        self.config = config
        self.eps = float(eps)
        self.phi = phase_matrix(config.chi)
        self.extremal = extremal_and_core(config)
        self.folds = 0
        self.cells = 0
        self.segments: list[PathSegment] = []
        if config.n:
            self._trace(margin, max_cells)
        self._starts = [s.x0 for s in self.segments]

    @property
    def x_start(self) -> float:
        return self.segments[0].x0 if self.segments else 0.0

    @property
    def x_end(self) -> float:
        return self.segments[-1].x1 if self.segments else 0.0

    def _trace(self, margin: float, max_cells: int) -> None:
        alg = _PatternAlgebra(self.phi, self.eps)
        eps = self.eps
        y = self.config.y
        n = self.config.n
        x = self.extremal.core[0] - eps - margin
        d = self.extremal.X_minus - x
        pattern = np.full(n, ABOVE)
        running_max = x
        zero_steps = 0
        prev_tx = 1.0
        for _ in range(max_cells):
            self.cells += 1
            td, tx = alg.tangent(pattern)
            if np.all(pattern == BELOW) and tx > 0:
                return
            steps = np.full(n, np.inf)
            target = np.zeros(n)
            for j in range(n):
                if pattern[j] == ABOVE and td[j] < 0:
                    target[j] = eps
                elif pattern[j] == BELOW and td[j] > 0:
                    target[j] = -eps
                elif pattern[j] == BAND and td[j] != 0:
                    target[j] = eps if td[j] > 0 else -eps
                else:
                    continue
                steps[j] = (target[j] - d[j]) / td[j]
            j = int(np.argmin(steps))
            lam = max(float(steps[j]), 0.0)
            if not np.isfinite(lam):
                raise SolverError("position path lost: no exit from cell")
            zero_steps = zero_steps + 1 if lam == 0.0 else 0
            if zero_steps > 4 * n + 8:
                raise SolverError("position path stalled at a degenerate vertex")
            x_new = x + lam * tx
            d_new = d + lam * td
            d_new[j] = target[j]
            if tx > 0 and x_new > running_max:
                lo = max(x, running_max)
                slope = td / tx
                d_lo = d + (lo - x) * slope
                self.segments.append(PathSegment(lo, x_new, d_lo, slope, pattern.copy()))
                running_max = x_new
            if tx < 0 < prev_tx:
                self.folds += 1
            prev_tx = tx
            if pattern[j] == BAND:
                pattern[j] = ABOVE if target[j] > 0 else BELOW
            else:
                pattern[j] = BAND
            # Newton polish against drift, keeping the boundary coordinate exact
            z = y - x_new
            res = position_residual(self.phi, z, d_new, eps)
            if np.max(np.abs(res)) > 1e-13 * (1.0 + np.max(np.abs(d_new))):
                d_new = d_new - alg.solve(pattern, res)
                d_new[j] = target[j]
            x, d = x_new, d_new
        raise SolverError(f"position path exceeded {max_cells} cells")

    def displacements(self, x_star: float) -> np.ndarray:
        if self.config.n == 0:
            return np.zeros(0)
        if not self.segments or x_star < self.x_start:
            return self.extremal.X_minus - x_star
        if x_star >= self.x_end:
            return self.extremal.X_plus - x_star
        k = bisect.bisect_right(self._starts, x_star) - 1
        return self.segments[k].d_at(x_star)

    def positions(self, x_star: float) -> np.ndarray:
        return x_star + self.displacements(x_star)

    def positions_many(self, x_stars) -> np.ndarray:
        return np.array([self.positions(float(xs)) for xs in np.atleast_1d(x_stars)])

    @cached_property
    def breakpoints(self) -> np.ndarray:
        return np.array([s.x0 for s in self.segments] + ([self.x_end] if self.segments else []))


def solve_active_set(
    chi,
    x_star: float,
    y,
    eps: float = DEFAULT_EPS,
    d0=None,
    max_iter: int = 10_000,
    tol: float = 1e-10,
) -> np.ndarray:
    """Direct solve for displacements by sign-pattern iteration.

    Starting from ``d0`` (default: the far-left guess), each step solves the
    linear system of the current pattern and re-reads the pattern from the
    result.  A repeated pattern switches to a damped fixed-point iteration.
    Returns positions ``X``.
    """
    phi = phase_matrix(chi)
    y = np.asarray(y, dtype=float)
    z = y - x_star
    alg = _PatternAlgebra(phi, eps)
    d = z + 0.5 * phi.sum(axis=1) if d0 is None else np.asarray(d0, dtype=float).copy()
    seen = set()
    pattern = pattern_of(d, eps)
    for _ in range(max_iter):
        key = pattern.tobytes()
        if key in seen:
            break
        seen.add(key)
        d_new = alg.affine_solution(pattern, z)
        new_pattern = pattern_of(d_new, eps)
        if np.array_equal(new_pattern, pattern):
            if np.max(np.abs(position_residual(phi, z, d_new, eps)), initial=0.0) <= tol:
                return x_star + d_new
        d, pattern = d_new, new_pattern
    d = _damped_fixed_point(phi, z, d, eps, max_iter, tol)
    return x_star + d


def _damped_fixed_point(phi, z, d, eps, max_iter, tol) -> np.ndarray:
    theta = 0.5
    res = np.max(np.abs(position_residual(phi, z, d, eps)), initial=0.0)
    for _ in range(max_iter):
        if res <= tol:
            return d
        cand = (1.0 - theta) * d + theta * (z + 0.5 * (phi @ sgn_eps(d, eps)))
        cres = np.max(np.abs(position_residual(phi, z, cand, eps)), initial=0.0)
        if cres > res:
            theta *= 0.5
            if theta < 1e-12:
                break
            continue
        d, res = cand, cres
    raise SolverError(f"position solver did not converge (residual {res:.3e})")


def separated_closed_form(chi, x_star: float, y, s_negative, eps: float = DEFAULT_EPS) -> np.ndarray | None:
    """Closed-form displacements when solitons split cleanly into two groups.

    ``s_negative`` marks the solitons to the left of ``x_star``, as a boolean
    mask or a list of indices.  Returns None if the separation condition fails
    for this pattern.
    """
    phi = phase_matrix(chi)
    y = np.asarray(y, dtype=float)
    neg = np.asarray(s_negative)
    if neg.dtype != bool:
        mask = np.zeros(len(y), dtype=bool)
        mask[neg.astype(int)] = True
        neg = mask
    z = y - x_star
    half = 0.5 * phi.sum(axis=1)
    ok = np.where(neg, z <= half - eps, z >= -half + eps)
    if not np.all(ok):
        return None
    signs = np.where(neg, -1.0, 1.0)
    return z + 0.5 * (phi @ signs)


def expand(chi, x_star: float, y, eps: float = DEFAULT_EPS, path: PositionPath | None = None) -> np.ndarray:
    """Canonical positions ``X`` with ``contract(chi, x_star, X) == y``."""
    config = path.config if path is not None else SolitonConfig(chi, y)
    if config.n == 0:
        return np.zeros(0)
    ext = extremal_and_core(config)
    if x_star <= ext.core[0] - eps:
        return ext.X_minus.copy()
    if x_star >= ext.core[1] + eps:
        return ext.X_plus.copy()
    if path is None:
        path = PositionPath(config, eps)
    return path.positions(x_star)
