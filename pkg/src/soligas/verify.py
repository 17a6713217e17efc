"""Numerical checks of the structural results on soliton gases.

Each check returns a :class:`TheoremReport` that round-trips through JSON.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field as dc_field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .core import DEFAULT_EPS, SolitonConfig
from .effective import scan_effective
from .gas import generate_ultra_dilute
from .observables import exact_charge, fluid_cell_mean, integrate_density
from .positions import PositionPath, extremal_and_core
from .projections import extract, fluid_cell_projection, local_projection
from .tau import field


@dataclass
class TheoremReport:
    name: str
    passed: bool
    metrics: dict = dc_field(default_factory=dict)
    details: dict = dc_field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, default=_jsonable)

    @classmethod
    def from_dict(cls, data: dict) -> "TheoremReport":
        return cls(data["name"], bool(data["passed"]), dict(data.get("metrics", {})), dict(data.get("details", {})))

    @classmethod
    def from_json(cls, text: str) -> "TheoremReport":
        return cls.from_dict(json.loads(text))


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    raise TypeError(f"not serialisable: {type(obj)}")


def _clean(d: dict) -> dict:
    return json.loads(json.dumps(d, default=_jsonable))


def loglinear_slope(xs: Sequence[float], values: Sequence[float]) -> float:
    xs = np.asarray(xs, dtype=float)
    ys = np.log(np.asarray(values, dtype=float))
    return float(np.polyfit(xs, ys, 1)[0])


def verify_local_form(
    config: SolitonConfig,
    x_star: float,
    L_list: Sequence[float] | None = None,
    eps: float = DEFAULT_EPS,
    chi_star: float | None = None,
    slack: float = 0.1,
    points: int = 201,
    min_points: int = 4,
) -> TheoremReport:
    """Error of the local projection on a window of width ``2/chi_max`` around ``x_star``.

    The error must decay in the width ``L`` at least like ``exp(-chi_star L)``:
    the fitted log-linear slope must be at most ``-(1 - slack) chi_star``.
    By default ``L`` runs over the points just before each soliton enters the
    kept set, where the error is largest for its width.
    """
    chi_star = float(np.min(config.chi)) if chi_star is None else chi_star
    C = float(np.max(config.chi))
    path = PositionPath(config, eps)
    d = path.displacements(x_star)
    if L_list is None:
        steps = np.unique(np.abs(d)[np.abs(d) > eps])
        L_list = [2.0 * a * (1.0 - 1e-9) for a in steps if 2.0 * a * (1.0 - 1e-9) >= 2 * eps]
    J = np.linspace(x_star - 1.0 / C, x_star + 1.0 / C, points)
    u = field(config, J).u
    floor = 1e-12 * max(1.0, float(np.max(np.abs(u))))
    errors = []
    for L in L_list:
        proj = local_projection(config, x_star, L, eps, path)
        errors.append(float(np.max(np.abs(u - field(proj.config, J).u))))
    use = [(L, e) for L, e in zip(L_list, errors) if e > floor]
    slope = loglinear_slope([p[0] for p in use], [p[1] for p in use]) if len(use) >= 2 else math.nan
    enough = len(use) >= min_points
    passed = bool(enough and slope <= -(1.0 - slack) * chi_star)
    return TheoremReport(
        "local_form",
        passed,
        _clean({"slope": slope, "chi_star": chi_star, "points_used": len(use), "threshold": -(1.0 - slack) * chi_star}),
        _clean({"x_star": x_star, "L": list(L_list), "errors": errors, "floor": floor}),
    )


def verify_support(
    config: SolitonConfig,
    deltas: Sequence[float] | None = None,
    chi_star: float | None = None,
    slack: float = 0.1,
) -> TheoremReport:
    """Decay of the field outside the interaction core, on both sides.

    The fitted rate of ``log|u|`` against distance from the core must be at
    least ``2 (1 - slack) chi_star``.
    """
    chi_star = float(np.min(config.chi)) if chi_star is None else chi_star
    if deltas is None:
        deltas = [1.0 / chi_star, 2.0 / chi_star, 5.0 / chi_star, 10.0 / chi_star]
    deltas = np.asarray(deltas, dtype=float)
    lo, hi = extremal_and_core(config).core
    right = np.abs(field(config, hi + deltas).u)
    left = np.abs(field(config, lo - deltas).u)
    rate_r = -loglinear_slope(deltas, right)
    rate_l = -loglinear_slope(deltas, left)
    rate = min(rate_r, rate_l)
    passed = bool(rate >= 2.0 * (1.0 - slack) * chi_star)
    return TheoremReport(
        "support",
        passed,
        _clean({"rate": rate, "rate_right": rate_r, "rate_left": rate_l, "threshold": 2.0 * (1.0 - slack) * chi_star}),
        _clean({"core": [lo, hi], "deltas": deltas, "u_right": right, "u_left": left}),
    )


def verify_fluid_cell(
    config: SolitonConfig,
    cell: tuple[float, float],
    delta_X: float,
    k_list: Sequence[int] = (0, 1, 2),
    eps: float = DEFAULT_EPS,
    tol: float = 1e-4,
) -> TheoremReport:
    """Cell averages of conserved densities against the kept solitons' charges.

    Also checks that the projected configuration's core lies within the cell
    widened by ``delta_x``, and that for wide enough cells the fluid-cell
    projection coincides with extraction at the cell centre.
    """
    lo, hi = float(cell[0]), float(cell[1])
    L = hi - lo
    eff = scan_effective(config, delta_X, eps)
    proj = fluid_cell_projection(config, cell, delta_X, eps, eff)
    dx = eff.delta_x
    diffs = {}
    for k in k_list:
        mean = fluid_cell_mean(config, k, cell)
        predicted = exact_charge(proj.config, k) / L if proj.config.n else 0.0
        diffs[str(k)] = {"cell_mean": mean, "kept_charge": predicted, "diff": abs(mean - predicted)}
    worst = max(v["diff"] for v in diffs.values())
    if proj.config.n:
        core = extremal_and_core(proj.config).core
        core_ok = bool(core[0] >= lo - dx - 1e-9 and core[1] <= hi + dx + 1e-9)
    else:
        core, core_ok = (None, None), True
    explicit = None
    if lo + dx < hi - dx:
        ex = extract(config, proj.plus, proj.minus, 0.5 * (lo + hi), eps)
        explicit = float(np.max(np.abs(ex.config.y - proj.config.y), initial=0.0))
    passed = bool(worst < tol and core_ok and (explicit is None or explicit < 1e-10))
    return TheoremReport(
        "fluid_cell",
        passed,
        _clean({"max_diff": worst, "core_inside": core_ok, "extraction_diff": explicit, "delta_x": dx}),
        _clean({"cell": [lo, hi], "kept": proj.kept, "core": list(core), "per_k": diffs}),
    )


def gaussian(center: float = 0.0, width: float = 1.0) -> Callable[[float], float]:
    def f(x):
        return np.exp(-0.5 * ((np.asarray(x) - center) / width) ** 2)

    return f


def weak_limit_difference(
    config: SolitonConfig,
    k: int,
    scale: float,
    delta_X: float,
    test_fn: Callable[[float], float],
    eps: float = DEFAULT_EPS,
) -> float:
    """``int f(x) P_k[u](scale x) dx - scale^-1 sum_i f(x_i/scale) chi_i^(2k+1)``."""
    lhs = integrate_density(config, k, weight=lambda x: float(test_fn(x / scale))).value / scale
    x_eff = scan_effective(config, delta_X, eps).x_eff
    rhs = float(np.sum(test_fn(x_eff / scale) * config.chi ** (2 * k + 1))) / scale
    return abs(lhs - rhs)


def verify_weak_limit(
    family: Callable[[int], SolitonConfig] | None = None,
    N_list: Sequence[int] = (2, 4, 8),
    k: int = 0,
    Lambda: float = 1.1,
    gamma: float = 0.5,
    test_fn: Callable[[float], float] | None = None,
    eps: float = DEFAULT_EPS,
) -> TheoremReport:
    """Difference between the scaled density and the empirical charge measure must shrink with N."""
    if family is None:
        family = lambda N: generate_ultra_dilute(N, 1.0, 0.1, 1.0, 2.0)  # noqa: E731
    test_fn = test_fn or gaussian(0.0, 1.0)
    diffs = []
    for N in N_list:
        cfg = family(N)
        diffs.append(weak_limit_difference(cfg, k, float(N) ** Lambda, float(N) ** gamma, test_fn, eps))
    decreasing = bool(all(b < a for a, b in zip(diffs[:-1], diffs[1:])))
    return TheoremReport(
        "weak_limit",
        decreasing,
        _clean({"differences": diffs, "decreasing": decreasing}),
        _clean({"N": list(N_list), "k": k, "Lambda": Lambda, "gamma": gamma}),
    )


def verify_charges(config: SolitonConfig, k_list: Sequence[int] = (0, 1, 2), rtol: float = 1e-6) -> TheoremReport:
    rel = {}
    for k in k_list:
        exact = exact_charge(config, k)
        rel[str(k)] = abs(integrate_density(config, k).value - exact) / exact
    worst = max(rel.values())
    return TheoremReport("charges", bool(worst < rtol), _clean({"max_rel_error": worst}), _clean({"rel_error": rel}))


SUITES = ("local_form", "support", "fluid_cell", "weak_limit", "charges")


def default_suite_config(name: str) -> SolitonConfig:
    """Gas used by a check when none is supplied.

    The local-form fit needs several removed solitons within reach of the
    observer, so it uses a compressed dilute gas; the cell check needs isolated
    solitons.
    """
    if name == "local_form":
        return generate_ultra_dilute(6, 0.3, 0.1, 0.5, 1.5)
    return generate_ultra_dilute(8, 1.0, 0.1, 1.0, 2.0)


def single_soliton_cell(eff) -> tuple[float, float]:
    """Cell centred on the middle effective position, half as wide as the gap to its nearest neighbour on each side."""
    x = np.sort(eff.x_eff)
    m = len(x) // 2
    gaps = [x[m] - x[m - 1]] if m > 0 else []
    if m + 1 < len(x):
        gaps.append(x[m + 1] - x[m])
    half = 0.5 * min(gaps) if gaps else 20.0
    return (float(x[m] - half), float(x[m] + half))


def run_suite(suite: str = "all", config: SolitonConfig | None = None, delta_X: float | None = None) -> list[TheoremReport]:
    """Run one named check or all of them on ``config`` (default: a dilute 6-soliton gas)."""
    names = SUITES if suite == "all" else (suite,)
    unknown = [s for s in names if s not in SUITES]
    if unknown:
        raise ValueError(f"unknown suite {unknown[0]!r}; choose from {', '.join(SUITES)} or 'all'")
    reports = []
    for name in names:
        cfg = config or default_suite_config(name)
        dX = float(cfg.n) ** 0.5 if delta_X is None else delta_X
        if name == "local_form":
            x_star = float(np.median(PositionPath(cfg).extremal.X_minus))
            reports.append(verify_local_form(cfg, x_star))
        elif name == "support":
            reports.append(verify_support(cfg))
        elif name == "fluid_cell":
            cell = single_soliton_cell(scan_effective(cfg, dX))
            reports.append(verify_fluid_cell(cfg, cell, dX))
        elif name == "weak_limit":
            reports.append(verify_weak_limit())
        elif name == "charges":
            reports.append(verify_charges(cfg))
    return reports


def write_reports(reports: list[TheoremReport], out_dir: str | Path) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for rep in reports:
        (out / f"{rep.name}.json").write_text(rep.to_json() + "\n")
    summary = out / "summary.csv"
    lines = ["theorem,passed"] + [f"{r.name},{int(r.passed)}" for r in reports]
    summary.write_text("\n".join(lines) + "\n")
    return summary
