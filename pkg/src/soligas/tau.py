"""Tau functions and the KdV field ``u = 2 d^2/dx^2 log tau``.

Three representations are provided:

* the subset expansion (``tau_expansion``): a sum of ``2**n`` positive
  exponentials, evaluated in the log domain;
* the centred expansion around a point ``x_star`` (``tau_centred``), the same
  sum reorganised by the displacements of the solitons from ``x_star``, with an
  optional truncation to solitons close to ``x_star``;
* the Hirota determinant (``tau_determinant``), evaluated in ball arithmetic
  with adaptive precision since the Cauchy-type matrix it contains becomes
  badly conditioned when spectral parameters are close.

Derivatives of ``log tau`` are exact in every path.  In the expansions they
are the cumulants of the exponential rates under the normalised term weights;
in the determinant they are Taylor coefficients of ``log det``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Sequence

import numpy as np

from .core import SolitonConfig, scattering_tables, sgn, sgn_eps, DEFAULT_EPS
from .errors import InconsistentDisplacementsError, RepresentationError, UnsupportedOrderError

DEFAULT_CAP = 14
MAX_ORDER = 4
_CHUNK_ELEMENTS = 4_000_000


@dataclass(frozen=True)
class FieldJet:
    """Field and its x-derivatives on a grid.

    ``derivs[k]`` holds ``d^k u / dx^k``.  ``log_tau`` is only defined up to an
    additive affine function of x, which depends on the representation.
    """

    x: np.ndarray
    derivs: np.ndarray
    log_tau: np.ndarray
    representation: str
    meta: dict = dc_field(default_factory=dict)

    @property
    def order(self) -> int:
        return self.derivs.shape[0] - 1

    def _get(self, k: int) -> np.ndarray:
        if k > self.order:
            raise UnsupportedOrderError(f"derivative of order {k} not computed (order={self.order})")
        return self.derivs[k]

    @property
    def u(self) -> np.ndarray:
        return self.derivs[0]

    @property
    def u_x(self) -> np.ndarray:
        return self._get(1)

    @property
    def u_xx(self) -> np.ndarray:
        return self._get(2)

    @property
    def u_xxx(self) -> np.ndarray:
        return self._get(3)

    @property
    def u_xxxx(self) -> np.ndarray:
        return self._get(4)


def _check_order(order: int) -> None:
    if not 0 <= order <= MAX_ORDER:
        raise UnsupportedOrderError(f"order must be in [0, {MAX_ORDER}]")


def cumulants_from_central_moments(mu: Sequence[np.ndarray]) -> list[np.ndarray]:
    """Faa di Bruno for the logarithm, written as the moment-cumulant recursion.

    ``mu[j]`` is the j-th central moment (``mu[0] = 1``, ``mu[1] = 0``).
    Returns ``kappa[0..m]`` with ``kappa[0]`` unused (zeros) and ``kappa[1] = 0``.
    """
    m = len(mu) - 1
    kappa = [np.zeros_like(mu[0]) for _ in range(m + 1)]
    for n in range(2, m + 1):
        acc = mu[n].copy()
        for k in range(2, n - 1):
            acc = acc - math.comb(n - 1, k - 1) * kappa[k] * mu[n - k]
        kappa[n] = acc
    return kappa


class ExponentialSum:
    """``tau(x) = sum_r exp(rates[r] * x + consts[r])`` with exact log-derivatives."""

    def __init__(self, rates: np.ndarray, consts: np.ndarray):
        self.rates = np.asarray(rates, dtype=float)
        self.consts = np.asarray(consts, dtype=float)

    def log_derivatives(self, x, nmax: int) -> tuple[np.ndarray, list[np.ndarray]]:
        """Return ``log tau`` and ``[d^n log tau for n = 0..nmax]`` (index 0 is log tau)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        nterms = len(self.rates)
        out_log = np.empty_like(x)
        out = [np.empty_like(x) for _ in range(nmax + 1)]
        chunk = max(1, _CHUNK_ELEMENTS // max(nterms, 1))
        for start in range(0, len(x), chunk):
            xs = x[start:start + chunk]
            expo = xs[:, None] * self.rates[None, :] + self.consts[None, :]
            top = expo.max(axis=1)
            w = np.exp(expo - top[:, None])
            total = w.sum(axis=1)
            p = w / total[:, None]
            mean = p @ self.rates
            centred = self.rates[None, :] - mean[:, None]
            mu = [np.ones_like(xs), np.zeros_like(xs)]
            power = centred.copy()
            for _ in range(2, nmax + 1):
                power = power * centred
                mu.append(np.sum(p * power, axis=1))
            kappa = cumulants_from_central_moments(mu) if nmax >= 2 else [None, None]
            sl = slice(start, start + len(xs))
            out_log[sl] = top + np.log(total)
            out[0][sl] = out_log[sl]
            if nmax >= 1:
                out[1][sl] = mean
            for n in range(2, nmax + 1):
                out[n][sl] = kappa[n]
        if not np.all(np.isfinite(out_log)):
            raise RepresentationError("non-finite log tau in exponential sum")
        return out_log, out


def _subset_members(n: int) -> np.ndarray:
    idx = np.arange(2**n, dtype=np.int64)
    return ((idx[:, None] >> np.arange(n)) & 1).astype(float)


def signed_exponential_sum(chi, signs, centres, log_abs_S, members: np.ndarray | None = None) -> ExponentialSum:
    """Sum over subsets ``r`` of ``exp(sum_{i in r} 2 chi_i s_i (x - b_i) + sum_{i != j in r} s_i s_j log|S_ij|)``."""
    chi = np.asarray(chi, dtype=float)
    n = len(chi)
    if members is None:
        members = _subset_members(n)
    sig = members * np.asarray(signs, dtype=float)[None, :]
    rates = sig @ (2.0 * chi)
    consts = -(sig @ (2.0 * chi * np.asarray(centres, dtype=float)))
    consts = consts + np.einsum("ri,ij,rj->r", sig, log_abs_S, sig)
    return ExponentialSum(rates, consts)


def in_out_centres(config: SolitonConfig, s_mask: np.ndarray, phi: np.ndarray | None = None) -> np.ndarray:
    """Positions ``y_i + 1/2 sum_j sgn_s(j) phi_ij`` for the in/out pattern ``s``."""
    if phi is None:
        phi = scattering_tables(config.chi).phi
    signs = np.where(s_mask, 1.0, -1.0)
    return config.y + 0.5 * (phi @ signs)


def _jet_from_logderivs(x, log_tau, logd, order, representation, meta=None) -> FieldJet:
    derivs = np.array([2.0 * logd[k + 2] for k in range(order + 1)])
    return FieldJet(np.asarray(x, dtype=float), derivs, log_tau, representation, meta or {})


def tau_expansion(config: SolitonConfig, x, order: int = 0, s=None, cap: int = DEFAULT_CAP) -> FieldJet:
    """Exact subset expansion.  ``s`` is the set of outgoing solitons (default: all)."""
    _check_order(order)
    n = config.n
    if n > cap:
        raise RepresentationError(f"subset expansion capped at n={cap}, got n={n}")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if n == 0:
        z = np.zeros((order + 1, len(x)))
        return FieldJet(x, z, np.zeros_like(x), "expansion")
    tables = scattering_tables(config.chi)
    s_mask = np.ones(n, dtype=bool) if s is None else _mask(s, n)
    centres = in_out_centres(config, s_mask, tables.phi)
    es = signed_exponential_sum(config.chi, np.where(s_mask, 1.0, -1.0), centres, tables.log_abs_S)
    log_tau, logd = es.log_derivatives(x, order + 2)
    return _jet_from_logderivs(x, log_tau, logd, order, "expansion")


def _mask(s, n: int) -> np.ndarray:
    s = np.asarray(s)
    if s.dtype == bool:
        if s.shape != (n,):
            raise ValueError("boolean mask has wrong length")
        return s.copy()
    mask = np.zeros(n, dtype=bool)
    mask[s.astype(int)] = True
    return mask


@dataclass(frozen=True)
class CentredTau:
    jet: FieldJet
    kept: np.ndarray
    discarded_weight: np.ndarray
    """Upper estimate of ``log tau_full - log tau_kept`` ignoring pair interactions."""


def position_residual(config: SolitonConfig, x_star: float, d, eps: float = DEFAULT_EPS) -> np.ndarray:
    phi = scattering_tables(config.chi).phi
    d = np.asarray(d, dtype=float)
    return d - 0.5 * (phi @ sgn_eps(d, eps)) - (config.y - x_star)


def tau_centred(
    config: SolitonConfig,
    x,
    x_star: float,
    d,
    order: int = 0,
    eps: float = DEFAULT_EPS,
    cutoff: float | None = None,
    tol: float = 1e-8,
) -> CentredTau:
    """Expansion reorganised around ``x_star`` using displacements ``d``.

    With ``cutoff = L`` only solitons with ``|d_i| <= L/2`` are kept, which is
    exactly the tau function of the local projection of width ``L``.
    """
    _check_order(order)
    d = np.asarray(d, dtype=float)
    if d.shape != (config.n,):
        raise InconsistentDisplacementsError("displacement vector has wrong length")
    res = position_residual(config, x_star, d, eps)
    if np.max(np.abs(res), initial=0.0) > tol:
        raise InconsistentDisplacementsError(f"displacements violate the position equation (residual {np.max(np.abs(res)):.3e})")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    tables = scattering_tables(config.chi)
    signs = sgn(d)
    e = 0.5 * (tables.phi @ (signs - sgn_eps(d, eps)))
    centres = x_star + d + e
    kept = np.ones(config.n, dtype=bool) if cutoff is None else np.abs(d) <= cutoff / 2.0
    idx = np.flatnonzero(kept)
    if len(idx) > DEFAULT_CAP + 6:
        raise RepresentationError(f"centred expansion over {len(idx)} solitons is too large")
    if len(idx) == 0:
        jet = FieldJet(x, np.zeros((order + 1, len(x))), np.zeros_like(x), "centred")
    else:
        es = signed_exponential_sum(
            config.chi[idx], signs[idx], centres[idx], tables.log_abs_S[np.ix_(idx, idx)]
        )
        log_tau, logd = es.log_derivatives(x, order + 2)
        jet = _jet_from_logderivs(x, log_tau, logd, order, "centred")
    drop = np.flatnonzero(~kept)
    expo = -2.0 * config.chi[drop, None] * (signs[drop, None] * (centres[drop, None] - x[None, :]))
    discarded = np.sum(np.logaddexp(0.0, expo), axis=0) if len(drop) else np.zeros_like(x)
    return CentredTau(jet, kept, discarded)


# --- determinant path -------------------------------------------------------


def _flint():
    import flint

    return flint


def _precision_estimate(chi: np.ndarray) -> int:
    n = len(chi)
    S = np.abs((chi[:, None] - chi[None, :]) / (chi[:, None] + chi[None, :])) + np.eye(n)
    # bits lost to the Cauchy block: log2 of the largest row of |S|^-2
    loss = float(np.max(-2.0 * np.log2(S).sum(axis=1))) if n > 1 else 0.0
    return int(80 + loss + 2 * math.log2(max(n, 2)))


class _ArbDeterminant:
    """Scaled matrix ``D^-1 (Psi^2 + omega) D^-1`` in ball arithmetic."""

    def __init__(self, config: SolitonConfig, prec: int):
        fl = _flint()
        self.fl = fl
        self.prec = prec
        fl.ctx.prec = prec
        n = config.n
        self.n = n
        arb = fl.arb
        ca = [arb(float(c)) for c in config.chi]
        self.ca = ca
        zero = arb(0)
        phi_sum = []
        for i in range(n):
            acc = zero
            for j in range(n):
                if i != j:
                    acc = acc + abs((ca[i] - ca[j]) / (ca[i] + ca[j])).log() / ca[i]
            phi_sum.append(acc)
        self.a = [arb(float(config.y[i])) - phi_sum[i] / 2 for i in range(n)]
        self.omega = [[2 * (ca[i] * ca[j]).sqrt() / (ca[i] + ca[j]) for j in range(n)] for i in range(n)]

    def log_derivatives(self, x: float, nmax: int):
        fl = self.fl
        fl.ctx.prec = self.prec
        arb, arb_mat = fl.arb, fl.arb_mat
        n = self.n
        xa = arb(float(x))
        L = [2 * self.ca[i] * (xa - self.a[i]) for i in range(n)]
        shift = [max(0.0, float(L[i].mid()) / 2.0) for i in range(n)]
        P = [(L[i] - 2 * shift[i]).exp() for i in range(n)]
        dinv = [arb(-shift[i]).exp() for i in range(n)]
        M = arb_mat(n, n)
        for i in range(n):
            for j in range(n):
                v = self.omega[i][j] * dinv[i] * dinv[j]
                M[i, j] = v + P[i] if i == j else v
        logdet = M.det().log() + 2 * sum(shift)
        out = [logdet]
        if nmax >= 1:
            B = M.inv()
            coeffs = self._log_det_series(B, P, nmax)
            out.extend(coeffs[1:])
        return out

    def _log_det_series(self, B, P, m: int):
        """Taylor coefficients (times k!) of ``log det(I + B E(h))``, ``E(h) = diag(P (exp(2 chi h) - 1))``."""
        fl = self.fl
        arb, arb_mat = fl.arb, fl.arb_mat
        n = self.n
        F = [None]
        for k in range(1, m + 1):
            D = arb_mat(n, n)
            for i in range(n):
                D[i, i] = P[i] * (2 * self.ca[i]) ** k / math.factorial(k)
            F.append(B * D)
        total = [arb(0) for _ in range(m + 1)]
        power = F[:]  # series of F^1
        for j in range(1, m + 1):
            sign = 1 if j % 2 else -1
            for k in range(j, m + 1):
                tr = sum((power[k][i, i] for i in range(n)), arb(0))
                total[k] = total[k] + sign * tr / j
            if j == m:
                break
            nxt = [None] * (m + 1)
            for k in range(j + 1, m + 1):
                acc = None
                for a in range(j, k):
                    b = k - a
                    if power[a] is None or F[b] is None:
                        continue
                    term = power[a] * F[b]
                    acc = term if acc is None else acc + term
                nxt[k] = acc
            power = nxt
        return [total[k] * math.factorial(k) for k in range(m + 1)]


def _radius_bound(v, k: int, tol: float, scale: float) -> float:
    # the field and its derivatives (k >= 2) must be accurate relative to their own size, down to underflow
    if k < 2:
        return tol * scale
    return tol * max(abs(float(v.mid())), 1e-300 * scale)


def tau_determinant(
    config: SolitonConfig,
    x,
    order: int = 0,
    tol: float = 1e-14,
    max_prec: int = 1 << 15,
) -> FieldJet:
    """Hirota determinant ``det(Psi^2 + omega)`` with certified precision.

    Working precision starts from an estimate of the bits lost to the Cauchy
    block and doubles until every field derivative has a ball radius below
    ``tol`` times its own magnitude.  Far from the solitons the field is the
    small remainder of cancelling series terms, which costs extra bits there.
    """
    _check_order(order)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    n = config.n
    if n == 0:
        return FieldJet(x, np.zeros((order + 1, len(x))), np.zeros_like(x), "determinant")
    nmax = order + 2
    scale = [(2.0 * float(np.max(config.chi))) ** k for k in range(nmax + 1)]
    prec = _precision_estimate(config.chi)
    log_tau = np.empty(len(x))
    logd = np.empty((nmax + 1, len(x)))
    engine = _ArbDeterminant(config, prec)
    for m, xv in enumerate(x):
        while True:
            vals = engine.log_derivatives(float(xv), nmax)
            ok = vals[0].is_finite() and all(v.is_finite() and float(v.rad()) <= _radius_bound(v, k, tol, scale[k]) for k, v in enumerate(vals) if k >= 1)
            if ok:
                break
            prec *= 2
            if prec > max_prec:
                raise RepresentationError(f"determinant unresolved at x={xv} with {max_prec} bits")
            engine = _ArbDeterminant(config, prec)
        log_tau[m] = float(vals[0].mid())
        for k in range(nmax + 1):
            logd[k, m] = float(vals[k].mid())
    if not np.all(np.isfinite(logd)):
        raise RepresentationError("non-finite determinant result")
    return _jet_from_logderivs(x, log_tau, list(logd), order, "determinant", {"precision_bits": prec})


def field(
    config: SolitonConfig,
    x,
    order: int = 0,
    representation: str = "auto",
    cap: int = DEFAULT_CAP,
) -> FieldJet:
    """KdV field and derivatives up to ``order`` (at most 4)."""
    _check_order(order)
    if representation == "auto":
        representation = "expansion" if config.n <= cap else "determinant"
    if representation == "expansion":
        return tau_expansion(config, x, order, cap=cap)
    if representation == "determinant":
        return tau_determinant(config, x, order)
    raise ValueError(f"unknown representation {representation!r}")


def one_soliton(chi: float, y: float, x, t: float = 0.0) -> np.ndarray:
    """Closed-form single soliton ``2 chi^2 sech^2(chi (x - y - 4 chi^2 t))``."""
    x = np.asarray(x, dtype=float)
    return 2.0 * chi**2 / np.cosh(chi * (x - y - 4.0 * chi**2 * t)) ** 2
