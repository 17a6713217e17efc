"""Soliton configurations and two-body scattering data.

A configuration is a list of spectral parameters ``chi`` (positive, pairwise
distinct) together with impact parameters ``y``.  Soliton ``i`` travels with
speed ``4 chi_i**2``; two solitons exchange a position shift given by
:func:`phase_shift` when they collide.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import CoincidentSpectrumError, InvalidConfigError

DEFAULT_EPS = 1e-3


def sgn(d):
    """Sign with the convention ``sgn(0) = +1``."""
    return np.where(np.asarray(d) >= 0, 1.0, -1.0)


def sgn_eps(d, eps: float = DEFAULT_EPS):
    """Regularized sign: linear ramp ``d/eps`` on ``[-eps, eps]``, saturating at +-1."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    return np.clip(np.asarray(d, dtype=float) / eps, -1.0, 1.0)


@dataclass(frozen=True)
class RegularizedSign:
    eps: float = DEFAULT_EPS

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("eps must be positive")

    def __call__(self, d):
        return sgn_eps(d, self.eps)


def _as_vector(values, name: str) -> np.ndarray:
    try:
        arr = np.atleast_1d(np.array(values, dtype=float))
    except (TypeError, ValueError):
        raise InvalidConfigError(f"{name} must be a list of numbers") from None
    if arr.ndim != 1:
        raise InvalidConfigError(f"{name} must be one-dimensional")
    if not np.all(np.isfinite(arr)):
        raise InvalidConfigError(f"{name} must be finite")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class SolitonConfig:
    """Spectral parameters and impact parameters of an N-soliton state."""

    chi: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        chi = _as_vector(self.chi, "chi")
        y = _as_vector(self.y, "y")
        if chi.shape != y.shape:
            raise InvalidConfigError("chi and y must have the same length")
        if np.any(chi <= 0):
            raise InvalidConfigError("spectral parameters must be positive")
        if len(np.unique(chi)) != len(chi):
            raise CoincidentSpectrumError("spectral parameters must be pairwise distinct")
        object.__setattr__(self, "chi", chi)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return len(self.chi)

    def __len__(self) -> int:
        return self.n

    @property
    def velocities(self) -> np.ndarray:
        return 4.0 * self.chi**2

    def evolve(self, t: float) -> "SolitonConfig":
        return SolitonConfig(self.chi, evolve_impact(self.y, self.chi, t))

    def subset(self, idx: Sequence[int]) -> "SolitonConfig":
        idx = np.asarray(idx, dtype=int)
        return SolitonConfig(self.chi[idx], self.y[idx])

    def to_dict(self) -> dict:
        return {"chi": self.chi.tolist(), "y": self.y.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "SolitonConfig":
        try:
            return cls(data["chi"], data["y"])
        except KeyError as exc:
            raise InvalidConfigError(f"missing key {exc}") from None

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "SolitonConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidConfigError(f"invalid JSON: {exc}") from None
        return cls.from_dict(data)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json() + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "SolitonConfig":
        return cls.from_json(Path(path).read_text())


def phase_shift(chi_i: float, chi_j: float) -> float:
    """Position shift of soliton ``i`` caused by its collision with soliton ``j``.

    Always negative; ``phase_shift(1, 2) == -log 3``.
    """
    if chi_i == chi_j:
        raise CoincidentSpectrumError("phase shift undefined for coincident spectral parameters")
    if chi_i <= 0 or chi_j <= 0:
        raise InvalidConfigError("spectral parameters must be positive")
    return float(np.log(abs((chi_i - chi_j) / (chi_i + chi_j))) / chi_i)


@dataclass(frozen=True)
class ScatteringTables:
    chi: np.ndarray
    phi: np.ndarray
    """Phase shift matrix, zero on the diagonal."""
    S: np.ndarray
    """Signed ratios ``(chi_i - chi_j)/(chi_i + chi_j)``, zero on the diagonal."""
    log_abs_S: np.ndarray
    """``log|S_ij|`` off the diagonal, zero on it."""
    omega: np.ndarray
    log_det_omega: float


def scattering_tables(chi: Iterable[float]) -> ScatteringTables:
    chi = np.asarray(chi, dtype=float)
    n = len(chi)
    if len(np.unique(chi)) != n:
        raise CoincidentSpectrumError("spectral parameters must be pairwise distinct")
    off = ~np.eye(n, dtype=bool)
    diff = chi[:, None] - chi[None, :]
    tot = chi[:, None] + chi[None, :]
    S = np.where(off, diff / tot, 0.0)
    log_abs_S = np.zeros((n, n))
    log_abs_S[off] = np.log(np.abs(S[off]))
    phi = log_abs_S / chi[:, None]
    omega = 2.0 * np.sqrt(np.outer(chi, chi)) / tot
    # det(omega) = prod_{i<j} S_ij^2
    log_det = float(np.sum(np.triu(log_abs_S, 1)) * 2.0)
    return ScatteringTables(chi, phi, S, log_abs_S, omega, log_det)


def phase_matrix(chi) -> np.ndarray:
    return scattering_tables(chi).phi


def naive_impact(config: SolitonConfig) -> np.ndarray:
    """Parameters ``a_i = y_i - 1/2 sum_j phi_ij`` entering the determinant form."""
    return config.y - 0.5 * phase_matrix(config.chi).sum(axis=1)


def impact_from_naive(chi, a) -> np.ndarray:
    """Inverse of :func:`naive_impact`."""
    return np.asarray(a, dtype=float) + 0.5 * phase_matrix(chi).sum(axis=1)


def evolve_impact(y, chi, t: float) -> np.ndarray:
    chi = np.asarray(chi, dtype=float)
    return np.asarray(y, dtype=float) + 4.0 * chi**2 * t


def ordered_impacts(config: SolitonConfig, w) -> np.ndarray:
    """Positions ``y_i + 1/2 sum_j sgn(w_j - w_i) phi_ij`` for an ordering key ``w``."""
    w = np.asarray(w, dtype=float)
    phi = phase_matrix(config.chi)
    signs = sgn(w[None, :] - w[:, None])
    np.fill_diagonal(signs, 0.0)
    return config.y + 0.5 * np.sum(signs * phi, axis=1)


def asymptotic_impacts(config: SolitonConfig) -> tuple[np.ndarray, np.ndarray]:
    """Outgoing (t -> +inf) and incoming (t -> -inf) impact parameters."""
    v = config.velocities
    return ordered_impacts(config, v), ordered_impacts(config, -v)


def wigner_shifts(config: SolitonConfig) -> np.ndarray:
    """Total displacement ``x_i^+ - x_i^-`` accumulated over all collisions."""
    v = config.velocities
    phi = phase_matrix(config.chi)
    signs = sgn(v[:, None] - v[None, :])
    np.fill_diagonal(signs, 0.0)
    return np.sum(-signs * phi, axis=1)
