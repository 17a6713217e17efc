"""Euler-scale hydrodynamics of the soliton gas.

The density of solitons ``rho(chi, x, t)`` obeys a continuity equation whose
velocity is dressed by collisions:

    v(chi) = 4 chi^2 + int dchi' rho(chi') phi(chi, chi') (v(chi') - v(chi))

The spectral integral uses trapezoid weights on a fixed chi grid; the
continuity equation is advanced with a first-order upwind finite-volume step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DEFAULT_EPS, SolitonConfig
from .effective import scan_effective
from .errors import CFLError, SolverError
from .positions import PositionPath


@dataclass(frozen=True)
class DensityField:
    """Soliton density sampled at spectral nodes ``chi`` and cell centres ``x``.

    ``rho[a, m]`` is the density at ``chi[a]`` in cell ``m``.  Cells are uniform.
    """

    chi: np.ndarray
    x: np.ndarray
    rho: np.ndarray

    def __post_init__(self):
        chi = np.asarray(self.chi, dtype=float)
        x = np.asarray(self.x, dtype=float)
        rho = np.asarray(self.rho, dtype=float)
        if rho.shape != (len(chi), len(x)):
            raise ValueError("rho must have shape (len(chi), len(x))")
        if np.any(np.diff(chi) <= 0):
            raise ValueError("chi nodes must be strictly increasing")
        if len(x) > 1 and not np.allclose(np.diff(x), x[1] - x[0], rtol=1e-9, atol=0):
            raise ValueError("x cells must be uniform")
        object.__setattr__(self, "chi", chi)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "rho", rho)

    @property
    def dx(self) -> float:
        return float(self.x[1] - self.x[0]) if len(self.x) > 1 else 1.0

    def mass(self) -> np.ndarray:
        """Total number of solitons per spectral node (sum over cells times dx)."""
        return self.rho.sum(axis=1) * self.dx

    def to_long(self) -> np.ndarray:
        cc, xx = np.meshgrid(self.chi, self.x, indexing="ij")
        return np.column_stack([cc.ravel(), xx.ravel(), self.rho.ravel()])

    @classmethod
    def from_long(cls, rows: np.ndarray) -> "DensityField":
        rows = np.asarray(rows, dtype=float)
        chi = np.unique(rows[:, 0])
        x = np.unique(rows[:, 1])
        rho = np.zeros((len(chi), len(x)))
        ia = np.searchsorted(chi, rows[:, 0])
        im = np.searchsorted(x, rows[:, 1])
        rho[ia, im] = rows[:, 2]
        return cls(chi, x, rho)


def trapezoid_weights(chi: np.ndarray) -> np.ndarray:
    chi = np.asarray(chi, dtype=float)
    if len(chi) == 1:
        return np.ones(1)
    h = np.diff(chi)
    w = np.zeros_like(chi)
    w[:-1] += h / 2.0
    w[1:] += h / 2.0
    return w


def phase_kernel(chi: np.ndarray) -> np.ndarray:
    """``phi(chi_a, chi_b)`` on the grid.

    The log singularity on the diagonal is replaced by the average of the
    kernel over the node's cell, ``(log(w/(4 chi)) - 1)/chi``.  The diagonal
    multiplies ``v_a - v_a`` in the dressing equation, so it never changes
    the velocity; it only matters for anyone reusing the kernel.
    """
    chi = np.asarray(chi, dtype=float)
    a, b = chi[:, None], chi[None, :]
    with np.errstate(divide="ignore"):
        K = np.log(np.abs((a - b) / (a + b))) / a
    w = trapezoid_weights(chi)
    diag = (np.log(w / (4.0 * chi)) - 1.0) / chi
    K[np.diag_indices_from(K)] = diag
    return K


@dataclass(frozen=True)
class VelocityResult:
    v: np.ndarray
    residual: float


def effective_velocity(chi: np.ndarray, rho: np.ndarray, tol: float = 1e-10) -> VelocityResult:
    """Solve the dressing equation for every column of ``rho`` (shape ``(n_chi,)`` or ``(n_chi, n_x)``)."""
    chi = np.asarray(chi, dtype=float)
    rho = np.asarray(rho, dtype=float)
    single = rho.ndim == 1
    R = rho[:, None] if single else rho
    K = phase_kernel(chi)
    w = trapezoid_weights(chi)
    # T[m, a, b] = w_b rho_b(m) phi_ab
    T = K[None, :, :] * (w[:, None] * R).T[:, None, :]
    A = -T
    idx = np.arange(len(chi))
    A[:, idx, idx] += 1.0 + T.sum(axis=2)
    rhs = np.broadcast_to(4.0 * chi**2, (R.shape[1], len(chi)))
    try:
        V = np.linalg.solve(A, rhs[..., None])[..., 0]
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"dressing equation is singular: {exc}") from None
    res = float(np.max(np.abs(np.einsum("mab,mb->ma", A, V) - rhs), initial=0.0))
    if not np.isfinite(res) or res > tol * max(1.0, float(np.max(np.abs(rhs)))):
        raise SolverError(f"dressing equation residual {res:.3e} above tolerance")
    V = V.T
    return VelocityResult(V[:, 0] if single else V, res)


def ghd_step(state: DensityField, dt: float, cfl: float = 0.9, boundary: str = "periodic") -> DensityField:
    """One upwind finite-volume step of the continuity equation."""
    v = effective_velocity(state.chi, state.rho).v
    dx = state.dx
    vmax = float(np.max(np.abs(v), initial=0.0))
    if not 0.0 < cfl <= 1.0:
        raise CFLError(f"CFL number {cfl} outside (0, 1]; the upwind scheme is unstable")
    if dt * vmax > cfl * dx * (1.0 + 1e-12):
        raise CFLError(f"dt={dt} exceeds CFL limit {cfl * dx / vmax:.3e}")
    flux_c = v * state.rho
    if boundary == "periodic":
        v_r = np.roll(v, -1, axis=1)
        f_r = np.roll(flux_c, -1, axis=1)
    elif boundary == "outflow":
        v_r = np.concatenate([v[:, 1:], v[:, -1:]], axis=1)
        f_r = np.concatenate([flux_c[:, 1:], flux_c[:, -1:]], axis=1)
    else:
        raise ValueError(f"unknown boundary {boundary!r}")
    v_face = 0.5 * (v + v_r)
    flux = np.where(v_face > 0, flux_c, f_r)  # flux through the right face of each cell
    if boundary == "periodic":
        flux_left = np.roll(flux, 1, axis=1)
    else:
        # zero-gradient ghost cell on the left
        flux_left = np.concatenate([flux_c[:, :1], flux[:, :-1]], axis=1)
    rho = state.rho - dt / dx * (flux - flux_left)
    return DensityField(state.chi, state.x, rho)


def ghd_evolve(state: DensityField, t_end: float, cfl: float = 0.9, boundary: str = "periodic") -> DensityField:
    """Advance to ``t_end`` with steps at the CFL limit."""
    t = 0.0
    while t < t_end - 1e-15:
        v = effective_velocity(state.chi, state.rho).v
        vmax = float(np.max(np.abs(v), initial=0.0))
        dt = cfl * state.dx / vmax if vmax > 0 else t_end - t
        dt = min(dt, t_end - t)
        state = ghd_step(state, dt, cfl, boundary)
        t += dt
    return state


def microscopic_trajectories(
    config: SolitonConfig,
    times,
    delta_X: float,
    eps: float = DEFAULT_EPS,
) -> np.ndarray:
    """Effective positions ``x_i(t)`` for each time; shape ``(len(times), n)``."""
    times = np.atleast_1d(np.asarray(times, dtype=float))
    out = np.empty((len(times), config.n))
    for m, t in enumerate(times):
        out[m] = scan_effective(config.evolve(float(t)), delta_X, eps).x_eff
    return out


def empirical_density(
    chi,
    x,
    chi_edges,
    x_edges,
    scale: float = 1.0,
) -> DensityField:
    """Histogram ``counts / (N * bin area)`` of ``(chi_i, x_i / scale)``.

    Points outside the edges are dropped, so the total mass is 1 only when
    every soliton falls inside the window.
    """
    chi = np.asarray(chi, dtype=float)
    x = np.asarray(x, dtype=float) / scale
    n = len(chi)
    counts, ce, xe = np.histogram2d(chi, x, bins=[chi_edges, x_edges])
    area = np.diff(ce)[:, None] * np.diff(xe)[None, :]
    rho = counts / (max(n, 1) * area)
    return DensityField(0.5 * (ce[1:] + ce[:-1]), 0.5 * (xe[1:] + xe[:-1]), rho)


def displacement_density(config: SolitonConfig, x_star: float, d_edges, eps: float = DEFAULT_EPS) -> np.ndarray:
    """Number of solitons per unit displacement in each bin, seen from ``x_star``."""
    d = PositionPath(config, eps).displacements(x_star)
    counts, edges = np.histogram(d, bins=d_edges)
    return counts / np.diff(edges)
