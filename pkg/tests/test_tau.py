
import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from soligas.core import SolitonConfig
from soligas.errors import InconsistentDisplacementsError, RepresentationError, UnsupportedOrderError
from soligas.positions import PositionPath
from soligas.tau import (
    ExponentialSum,
    cumulants_from_central_moments,
    field,
    one_soliton,
    tau_centred,
    tau_determinant,
    tau_expansion,
)

from conftest import configs, random_config


def mp_field(cfg, x, dps=40):
    """Independent oracle: Hirota determinant in mpmath, differentiated numerically."""
    mpmath.mp.dps = dps
    chi = [mpmath.mpf(float(c)) for c in cfg.chi]
    n = len(chi)
    a = []
    for i in range(n):
        s = sum(mpmath.log(abs((chi[i] - chi[j]) / (chi[i] + chi[j]))) / chi[i] for j in range(n) if j != i)
        a.append(mpmath.mpf(float(cfg.y[i])) - s / 2)

    def logtau(xv):
        M = mpmath.matrix(n, n)
        for i in range(n):
            for j in range(n):
                M[i, j] = 2 * mpmath.sqrt(chi[i] * chi[j]) / (chi[i] + chi[j])
            M[i, i] += mpmath.exp(2 * chi[i] * (xv - a[i]))
        return mpmath.log(mpmath.det(M))

    return np.array([float(2 * mpmath.diff(logtau, mpmath.mpf(float(v)), 2)) for v in x])


@pytest.mark.parametrize("chi, y", [(0.7, 0.0), (1.5, -2.0), (2.4, 3.3)])
def test_single_soliton_closed_form(chi, y):
    x = np.linspace(-10, 10, 401)
    cfg = SolitonConfig([chi], [y])
    for rep in ("expansion", "determinant"):
        u = field(cfg, x, representation=rep).u
        np.testing.assert_allclose(u, one_soliton(chi, y, x), atol=1e-12)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_expansion_matches_mpmath_oracle(seed):
    rng = np.random.default_rng(seed)
    cfg = random_config(rng, 3, y_span=3.0)
    x = np.linspace(-5, 5, 9)
    ref = mp_field(cfg, x)
    got = field(cfg, x).u
    np.testing.assert_allclose(got, ref, atol=1e-10 * max(1.0, np.max(np.abs(ref))))


def test_kdv_equation_residual():
    cfg = SolitonConfig([0.8, 1.3, 1.9], [-2.0, 0.5, 3.0])
    x = np.linspace(-6, 6, 25)
    jet = field(cfg, x, order=3)
    h = 1e-4
    u_t = (field(cfg.evolve(h), x).u - field(cfg.evolve(-h), x).u) / (2 * h)
    res = u_t + 6 * jet.u * jet.u_x + jet.u_xxx
    assert np.max(np.abs(res)) < 1e-5 * np.max(np.abs(u_t))


def test_derivatives_match_finite_differences():
    cfg = SolitonConfig([0.9, 1.7], [-1.0, 1.0])
    x = np.linspace(-4, 4, 17)
    jet = field(cfg, x, order=4)
    h = 1e-3
    for k in range(1, 5):
        lo = field(cfg, x - h, order=k - 1).derivs[k - 1]
        hi = field(cfg, x + h, order=k - 1).derivs[k - 1]
        fd = (hi - lo) / (2 * h)
        assert np.max(np.abs(jet.derivs[k] - fd)) < 1e-4 * (2 * 1.7) ** (k + 2)


@settings(max_examples=15)
@given(configs(n_max=6))
def test_in_out_choice_is_irrelevant(cfg):
    # choosing a different outgoing set multiplies tau by exp(Ax+B); u is unchanged
    x = np.linspace(-8, 8, 21)
    u0 = tau_expansion(cfg, x).u
    for s in ([], [0], list(range(0, cfg.n, 2))):
        np.testing.assert_allclose(tau_expansion(cfg, x, s=s).u, u0, atol=1e-10 * max(1.0, np.max(u0)))


@settings(max_examples=8)
@given(configs(n_max=7))
def test_determinant_matches_expansion(cfg):
    x = np.linspace(-12, 12, 11)
    a = tau_expansion(cfg, x, order=1)
    b = tau_determinant(cfg, x, order=1)
    scale = max(1.0, float(np.max(np.abs(a.u))))
    np.testing.assert_allclose(b.u, a.u, atol=1e-11 * scale)
    np.testing.assert_allclose(b.u_x, a.u_x, atol=1e-10 * scale * 6)


def test_positivity_of_field():
    rng = np.random.default_rng(5)
    for _ in range(10):
        cfg = random_config(rng, 5)
        assert np.all(field(cfg, np.linspace(-15, 15, 301)).u > 0)


def test_cumulants_of_two_point_distribution():
    # rates {0, 1} with equal weight: cumulants 1/2, 1/4, 0, -1/8
    p = 0.5
    mu = [np.array(1.0), np.array(0.0), np.array(p * (1 - p)), np.array(p * (1 - p) * (1 - 2 * p)),
          np.array(p * (1 - p) * (1 - 3 * p + 3 * p * p))]
    k = cumulants_from_central_moments(mu)
    assert float(k[2]) == pytest.approx(0.25)
    assert float(k[3]) == pytest.approx(0.0, abs=1e-15)
    assert float(k[4]) == pytest.approx(-0.125)


def test_exponential_sum_logsumexp_derivatives():
    es = ExponentialSum(np.array([0.0, 2.0]), np.array([0.0, 0.0]))
    x = np.array([-1.0, 0.0, 1.5])
    log_tau, d = es.log_derivatives(x, 2)
    np.testing.assert_allclose(log_tau, np.log1p(np.exp(2 * x)))
    np.testing.assert_allclose(d[1], 2 / (1 + np.exp(-2 * x)))
    np.testing.assert_allclose(d[2], 4 * np.exp(2 * x) / (1 + np.exp(2 * x)) ** 2)


def test_centred_form_equals_full_field():
    cfg = SolitonConfig([0.8, 1.2, 1.6, 2.0], [-6.0, -1.0, 2.0, 7.0])
    path = PositionPath(cfg)
    x = np.linspace(-3, 3, 31)
    for xs in (-4.0, 0.0, 3.0):
        d = path.displacements(xs)
        c = tau_centred(cfg, x, xs, d, order=1)
        full = field(cfg, x, order=1)
        np.testing.assert_allclose(c.jet.u, full.u, atol=1e-12)
        assert c.kept.all()


def test_centred_rejects_bad_displacements():
    cfg = SolitonConfig([1.0, 2.0], [0.0, 0.0])
    with pytest.raises(InconsistentDisplacementsError):
        tau_centred(cfg, [0.0], 0.0, [5.0, 5.0])
    with pytest.raises(InconsistentDisplacementsError):
        tau_centred(cfg, [0.0], 0.0, [5.0])


def test_errors():
    cfg = SolitonConfig(np.linspace(0.5, 3.0, 5), np.zeros(5))
    with pytest.raises(RepresentationError):
        tau_expansion(cfg, [0.0], cap=4)
    with pytest.raises(UnsupportedOrderError):
        field(cfg, [0.0], order=5)
    with pytest.raises(ValueError):
        field(cfg, [0.0], representation="bogus")


def test_auto_switches_to_determinant():
    cfg = SolitonConfig(np.linspace(0.5, 3.0, 5), np.linspace(-4, 4, 5))
    jet = field(cfg, [0.0, 1.0], cap=4)
    assert jet.representation == "determinant"
    assert jet.meta["precision_bits"] >= 53
    np.testing.assert_allclose(jet.u, field(cfg, [0.0, 1.0]).u, rtol=1e-12)


def test_integral_of_field():
    cfg = SolitonConfig([1.1, 1.9], [-3.0, 4.0])
    x = np.linspace(-40, 40, 20001)
    # integral of u equals 4 sum chi
    assert np.trapezoid(field(cfg, x).u, x) == pytest.approx(4 * 3.0, rel=1e-8)
