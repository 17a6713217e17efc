"""Conserved densities of KdV and their integrals.

``P_0 = u/4``, ``P_1 = 3u^2/16``, ``P_2 = 5/64 (2u^3 - u_x^2)``; the integral of
``P_k`` over the line equals ``sum_i chi_i^(2k+1)``.  The sign of ``P_2`` is the
one for which this identity holds (positive charges).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .core import SolitonConfig
from .errors import UnsupportedOrderError
from .positions import extremal_and_core
from .tau import FieldJet, field

SUPPORTED_ORDERS = (0, 1, 2)


def _check_k(k: int) -> None:
    if k not in SUPPORTED_ORDERS:
        raise UnsupportedOrderError(f"density order {k} is not supported (only 0, 1, 2)")


def density_from_jet(jet: FieldJet, k: int) -> np.ndarray:
    _check_k(k)
    u = jet.u
    if k == 0:
        return u / 4.0
    if k == 1:
        return 3.0 * u**2 / 16.0
    return 5.0 / 64.0 * (2.0 * u**3 - jet.u_x**2)


def density_at(config: SolitonConfig, k: int, x) -> np.ndarray:
    _check_k(k)
    jet = field(config, x, order=1 if k == 2 else 0)
    return density_from_jet(jet, k)


def exact_charge(config: SolitonConfig, k: int) -> float:
    _check_k(k)
    return float(np.sum(config.chi ** (2 * k + 1)))


@dataclass(frozen=True)
class Integral:
    value: float
    error: float
    interval: tuple[float, float]


def _breakpoints(config: SolitonConfig, lo: float, hi: float) -> np.ndarray:
    ext = extremal_and_core(config)
    pts = np.concatenate([ext.X_minus, ext.X_plus, config.y])
    pts = pts[(pts > lo) & (pts < hi)]
    return np.unique(np.concatenate([[lo], pts, [hi]]))


def integrate_density(
    config: SolitonConfig,
    k: int,
    interval: tuple[float, float] | None = None,
    epsabs: float = 1e-9,
    epsrel: float = 1e-9,
    limit: int = 2000,
    weight=None,
) -> Integral:
    """Adaptive Gauss-Kronrod integral of ``P_k`` (times ``weight(x)`` if given).

    Without ``interval`` the line is truncated to the core widened by
    ``40/chi_min`` on each side, where the field is below ``exp(-80)``.
    The range is split at soliton positions so each piece holds at most a
    few humps.
    """
    _check_k(k)
    if config.n == 0:
        return Integral(0.0, 0.0, (0.0, 0.0) if interval is None else tuple(interval))
    if interval is None:
        lo, hi = extremal_and_core(config).core
        pad = 40.0 / float(np.min(config.chi))
        lo, hi = lo - pad, hi + pad
    else:
        lo, hi = float(interval[0]), float(interval[1])
    order = 1 if k == 2 else 0

    def f(x: float) -> float:
        val = float(density_from_jet(field(config, [x], order=order), k)[0])
        return val * weight(x) if weight is not None else val

    total = 0.0
    err = 0.0
    edges = _breakpoints(config, lo, hi)
    for a, b in zip(edges[:-1], edges[1:]):
        val, e = integrate.quad(f, a, b, epsabs=epsabs / len(edges), epsrel=epsrel, limit=limit)
        total += val
        err += e
    return Integral(total, err, (lo, hi))


def fluid_cell_mean(config: SolitonConfig, k: int, cell: tuple[float, float]) -> float:
    lo, hi = float(cell[0]), float(cell[1])
    return integrate_density(config, k, (lo, hi)).value / (hi - lo)
