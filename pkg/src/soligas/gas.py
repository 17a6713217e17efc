"""Random and structured soliton gases, and checks of the density hypotheses."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .core import DEFAULT_EPS, SolitonConfig, phase_matrix, sgn_eps
from .effective import scan_effective
from .errors import SolverError
from .positions import PositionPath


def generate_ultra_dilute(n: int, R: float = 1.0, eps_exp: float = 0.1, chi_star: float = 1.0, C: float = 2.0) -> SolitonConfig:
    """Evenly spread spectrum on ``(chi_star, C]`` with spacing ``R n^(1+eps_exp)`` in space."""
    if n < 1:
        raise ValueError("n must be positive")
    if not 0 < chi_star < C:
        raise ValueError("need 0 < chi_star < C")
    i = np.arange(1, n + 1, dtype=float)
    chi = chi_star + (C - chi_star) * i / n
    y = R * (i - n / 2.0) * float(n) ** (1.0 + eps_exp)
    return SolitonConfig(chi, y)


def generate_uniform(n: int, ell: float, chi_range: tuple[float, float] = (0.5, 3.0), seed: int | None = 0) -> SolitonConfig:
    """Impacts uniform on ``[-ell/2, ell/2]``, spectrum uniform on ``chi_range`` (sorted)."""
    rng = np.random.default_rng(seed)
    chi = np.sort(rng.uniform(chi_range[0], chi_range[1], n))
    y = rng.uniform(-ell / 2.0, ell / 2.0, n)
    return SolitonConfig(chi, y)


@dataclass
class SequentialPositions:
    """Breakpoints of the one-at-a-time crossing procedure.

    ``starts[k]`` is the observer position at which soliton ``order[k]``
    begins to be crossed and ``X[k]`` holds all positions at ``starts[k]``.
    """

    starts: np.ndarray
    order: np.ndarray
    X: np.ndarray
    eps: float
    phi: np.ndarray

    def positions(self, x_star: float) -> np.ndarray:
        k = int(np.searchsorted(self.starts, x_star, side="right")) - 1
        if k < 0:
            return self.X[0].copy()
        if k >= len(self.order):
            return self.X[-1].copy()
        i = self.order[k]
        base = self.X[k]
        shift = -0.5 * self.phi[:, i] * (1.0 - sgn_eps(base[i] - x_star, self.eps))
        shift[i] = 0.0
        return base + shift


def sequential_positions(config: SolitonConfig, eps: float = DEFAULT_EPS, start: float | None = None) -> SequentialPositions:
    """Positions of a dilute configuration built crossing by crossing.

    Valid when solitons are crossed one at a time, which holds for
    ultra-dilute gases.  Independent of the general path tracer.
    """
    phi = phase_matrix(config.chi)
    X = config.y + 0.5 * phi.sum(axis=1)
    x = float(X.min()) - 10.0 * eps - 1.0 if start is None else start
    starts, order, snaps = [], [], []
    for _ in range(10 * config.n + 10):
        cand = [j for j in range(config.n) if X[j] >= x + eps]
        if not cand:
            break
        i = min(cand, key=lambda j: X[j])
        starts.append(x)
        order.append(i)
        snaps.append(X.copy())
        x_next = X[i] + eps
        X = X - phi[:, i]
        X[i] = snaps[-1][i]
        x = x_next
    else:
        raise SolverError("sequential crossing did not terminate; configuration is not dilute")
    starts.append(x)
    snaps.append(X.copy())
    return SequentialPositions(np.array(starts), np.array(order, dtype=int), np.array(snaps), eps, phi)


@dataclass
class AssumptionParams:
    """Exponents and constants of the gas hypotheses."""

    chi_star: float = 0.5
    A: float = 1.0
    alpha: float = 1.0
    C: float = 10.0
    beta: float = 0.0
    U: float = 1.0
    sigma: float = 0.0
    B: float = 1.0
    D: float = 1.0
    mu: float = 0.0
    nu: float = 0.0
    gamma: float = 0.5
    G: float = 1.0
    eps_exp: float = 0.1

    @property
    def eta(self) -> float:
        return (self.alpha + self.sigma) / 2.0


@dataclass
class Check:
    measured: float
    bound: float
    ok: bool


@dataclass
class AssumptionReport:
    n: int
    params: dict
    checks: dict = field(default_factory=dict)
    worst_x_star: float = float("nan")

    @property
    def ok(self) -> bool:
        return all(c["ok"] for c in self.checks.values())

    def to_dict(self) -> dict:
        return {"n": self.n, "params": self.params, "checks": self.checks, "worst_x_star": self.worst_x_star, "ok": self.ok}


def _record(report: AssumptionReport, name: str, measured: float, bound: float, ok: bool) -> None:
    report.checks[name] = asdict(Check(float(measured), float(bound), bool(ok)))


def check_assumptions(
    config: SolitonConfig,
    params: AssumptionParams | None = None,
    eps: float = DEFAULT_EPS,
    samples: int = 400,
) -> AssumptionReport:
    """Check the spectral, accumulation, density and variation hypotheses.

    Quantities depending on the observer are sampled on a grid covering the
    core plus every path breakpoint, so the result is a measurement rather
    than a proof.
    """
    p = params or AssumptionParams()
    n = config.n
    report = AssumptionReport(n, asdict(p))
    chi = np.sort(config.chi)
    gap = float(np.min(np.diff(chi))) if n > 1 else math.inf
    _record(report, "spectrum_lower", chi[0], p.chi_star, chi[0] >= p.chi_star)
    gap_bound = math.exp(-p.A * n ** (p.alpha / 2.0))
    _record(report, "spectrum_gap", gap, gap_bound, gap >= gap_bound)
    chi_max_bound = p.C * n**p.beta
    _record(report, "spectrum_upper", chi[-1], chi_max_bound, chi[-1] <= chi_max_bound)

    delta_X = float(n) ** p.gamma
    path = PositionPath(config, eps, margin=3.0 * (delta_X + eps))
    grid = np.union1d(np.linspace(path.x_start, path.x_end, samples), path.breakpoints)
    grid = np.union1d(grid, path.breakpoints + eps / 2.0)
    D = np.array([path.displacements(x) for x in grid])
    band_counts = np.sum(np.abs(D) < eps, axis=1)
    k = int(np.argmax(band_counts))
    acc_bound = p.U * n ** (p.sigma / 2.0)
    _record(report, "accumulation", band_counts[k], acc_bound, band_counts[k] <= acc_bound)

    d_min = p.B * n ** (p.eta + p.mu)
    radii = d_min * np.logspace(0, 3, 16)
    absd = np.abs(D)
    dens = np.array([[np.sum(row <= r) / (2.0 * r) for r in radii] for row in absd])
    flat = int(np.argmax(dens))
    worst_row = flat // len(radii)
    dens_bound = p.D * n**p.nu
    _record(report, "density", dens.flat[flat], dens_bound, dens.flat[flat] <= dens_bound)
    report.worst_x_star = float(grid[worst_row] if dens.flat[flat] > dens_bound else grid[k])

    eff = scan_effective(config, delta_X, eps, path=path)
    var_bound = p.G * n ** (p.gamma + p.eps_exp)
    _record(report, "variations", eff.delta_x, var_bound, eff.delta_x <= var_bound)
    return report
