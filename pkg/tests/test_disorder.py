import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.stats import norm

from dpre.disorder import (
    ConvexOrderReport,
    DiscreteDist,
    DisorderLaw,
    EmpiricalDist,
    SpreadProductDist,
    TiltedWeightDist,
    convex_order_check,
    coupling_constants,
    coupling_ratio_sup,
    log_mgf,
    parse_law,
    sample_environment,
    sample_spread_factor,
    sample_tilted_weight,
)
from dpre.errors import ConfigError


# ---------------------------------------------------------------------------
# log-MGF
# ---------------------------------------------------------------------------

def test_log_mgf_gaussian_closed_form(gaussian):
    assert log_mgf(gaussian, 1.0) == pytest.approx(0.5, abs=1e-15)
    assert log_mgf(gaussian, -2.0) == pytest.approx(2.0, abs=1e-14)


def test_log_mgf_zero_everywhere(gaussian, rademacher, bounded_table):
    for law in (gaussian, rademacher, bounded_table):
        assert log_mgf(law, 0.0) == pytest.approx(0.0, abs=1e-15)


def test_log_mgf_rademacher():
    law = DisorderLaw.rademacher()
    assert log_mgf(law, 1.0) == pytest.approx(math.log(math.cosh(1.0)), abs=1e-12)
    assert log_mgf(law, 1.0) == pytest.approx(0.433781, abs=1e-6)


def test_log_mgf_numeric_matches_closed(gaussian, rademacher, bounded_table):
    for law in (gaussian, rademacher, bounded_table):
        for beta in (-2.5, -1.0, -0.3, 0.0, 0.4, 1.0, 2.0, 3.5):
            assert abs(law.log_mgf_quadrature(beta) - law.log_mgf(beta)) <= 1e-10


def test_log_mgf_rejects_nonfinite(gaussian):
    with pytest.raises(ConfigError):
        log_mgf(gaussian, float("inf"))


@given(beta=st.floats(min_value=-4.0, max_value=4.0))
@settings(max_examples=60, deadline=None)
def test_log_mgf_symmetrized_nonnegative(beta):
    # lambda(beta) + lambda(-beta) >= 0, strictly away from beta = 0
    # (below |beta| ~ 1e-6 the strict gap, of order beta^2, underflows)
    for law in (DisorderLaw.gaussian(), DisorderLaw.rademacher(),
                DisorderLaw.table([-2.0, 0.5, 1.0], [0.25, 0.5, 0.25])):
        s = law.log_mgf(beta) + law.log_mgf(-beta)
        assert s >= -1e-15
        if beta == 0.0:
            assert s == 0.0
        elif abs(beta) >= 1e-6:
            assert s > 0.0


def test_log_mgf_prime_matches_finite_difference(gaussian, rademacher, bounded_table):
    h = 1e-6
    for law in (gaussian, rademacher, bounded_table):
        for beta in (0.0, 0.7, 1.8, -1.2):
            fd = (law.log_mgf(beta + h) - law.log_mgf(beta - h)) / (2 * h)
            assert law.log_mgf_prime(beta) == pytest.approx(fd, abs=5e-9)


def test_parse_law_round_trips(bounded_table):
    assert parse_law("gaussian").kind == "gaussian"
    assert parse_law("rademacher").kind == "rademacher"
    law = parse_law('{support = [-2.0, 0.5, 1.0], probs = [0.25, 0.5, 0.25]}')
    assert law.kind == "table"
    np.testing.assert_allclose(law.support, bounded_table.support)
    with pytest.raises(ConfigError):
        parse_law("cauchy")
    with pytest.raises(ConfigError):
        parse_law({"support": [-1.0, 1.0], "probs": [0.9, 0.1]})  # not centered


# ---------------------------------------------------------------------------
# tilted weight sampling
# ---------------------------------------------------------------------------

def test_tilted_weight_degenerate_at_beta_zero(gaussian, rng):
    w = sample_tilted_weight(gaussian, 0.0, rng, size=1000)
    assert np.all(w == 1.0)


def test_tilted_weight_mean_one(gaussian, rng):
    w = sample_tilted_weight(gaussian, 1.0, rng, size=1_000_000)
    se = w.std(ddof=1) / math.sqrt(w.size)
    assert abs(w.mean() - 1.0) <= 4 * se


def test_tilted_weight_rademacher_support(rademacher, rng):
    w = sample_tilted_weight(rademacher, 1.0, rng, size=10_000)
    lam = math.log(math.cosh(1.0))
    hi, lo = math.exp(1.0 - lam), math.exp(-1.0 - lam)
    assert set(np.round(np.unique(w), 12)) == {round(hi, 12), round(lo, 12)}


# ---------------------------------------------------------------------------
# spread factor
# ---------------------------------------------------------------------------

def test_spread_factor_degenerate(rng):
    assert np.all(sample_spread_factor(0.0, rng, size=500) == 1.0)


@pytest.mark.parametrize("v", [0.05, 0.2, 1.0 / 3.0])
def test_spread_factor_moments(v, rng):
    z = sample_spread_factor(v, rng, size=1_000_000)
    se1 = z.std(ddof=1) / math.sqrt(z.size)
    assert abs(z.mean() - 1.0) <= 4 * se1
    z2 = z * z
    se2 = z2.std(ddof=1) / math.sqrt(z.size)
    assert abs(z2.mean() - (1.0 + 3 * v)) <= 4 * se2


def test_spread_factor_mass_split_at_third(rng):
    v = 1.0 / 3.0
    z = sample_spread_factor(v, rng, size=200_000)
    n = z.size
    frac_zero = np.mean(z == 0.0)
    frac_one = np.mean(z == 1.0)
    frac_cont = np.mean(z > 1.0)
    assert frac_one == 0.0
    assert abs(frac_zero - 1 / 3) <= 4 * math.sqrt((1 / 3) * (2 / 3) / n)
    assert abs(frac_cont - 2 / 3) <= 4 * math.sqrt((1 / 3) * (2 / 3) / n)


def test_spread_factor_rejects_bad_v(rng):
    with pytest.raises(ConfigError):
        sample_spread_factor(0.5, rng, size=10)


# ---------------------------------------------------------------------------
# positive-part expectations against closed forms
# ---------------------------------------------------------------------------

def _lognormal_positive_part(beta: float, a: float) -> float:
    # tilted Gaussian weight is lognormal(mu=-beta^2/2, sigma=beta), mean one
    if a <= 0:
        return 1.0 - a
    sigma = beta
    d1 = (sigma / 2) - math.log(a) / sigma
    d2 = -(sigma / 2) - math.log(a) / sigma
    return norm.cdf(d1) - a * norm.cdf(d2)


def test_tilted_positive_part_matches_lognormal(gaussian):
    t = TiltedWeightDist(gaussian, 0.8)
    for a in (0.0, 0.05, 0.3, 1.0, 2.5, 7.0):
        assert t.positive_part_mean(a) == pytest.approx(
            _lognormal_positive_part(0.8, a), abs=1e-12)


def test_tilted_third_moment_below(gaussian):
    t = TiltedWeightDist(gaussian, 0.6)
    beta = 0.6
    full = math.exp(3 * beta**2)  # E[Z^3] = exp(lambda(3b) - 3 lambda(b))
    assert t.third_moment_below(1e9) == pytest.approx(full, rel=1e-11)
    x = 1.7
    expected = full * norm.cdf(math.log(x) / beta - 2.5 * beta)
    assert t.third_moment_below(x) == pytest.approx(expected, rel=1e-10)


def test_spread_product_positive_part_matches_mc(gaussian, rng):
    beta, v = 0.7, 0.15
    dist = SpreadProductDist(TiltedWeightDist(gaussian, beta), v)
    zeta = sample_tilted_weight(gaussian, beta, rng, size=400_000)
    spread = sample_spread_factor(v, rng, size=zeta.size)
    prod = zeta * spread
    for a in (0.4, 1.0, 2.3):
        y = np.maximum(prod - a, 0.0)
        se = y.std(ddof=1) / math.sqrt(y.size)
        assert dist.positive_part_mean(a) == pytest.approx(y.mean(), abs=5 * se)


# ---------------------------------------------------------------------------
# convex order
# ---------------------------------------------------------------------------

def test_convex_order_identity_passes(gaussian):
    t = TiltedWeightDist(gaussian, 0.5)
    rep = convex_order_check(t, t, np.linspace(0, 5, 51))
    assert rep.passed and rep.max_violation <= 0.0


def test_convex_order_tilts_increase(gaussian):
    lo = TiltedWeightDist(gaussian, 0.5)
    hi = TiltedWeightDist(gaussian, 0.8)
    rep = convex_order_check(lo, hi, np.arange(0.0, 5.0 + 1e-9, 0.1), tolerance=1e-9)
    assert rep.passed
    assert rep.mode == "quadrature"


@pytest.mark.parametrize("law_name,pairs", [
    ("gaussian", [(0.3, 0.6), (0.5, 1.0)]),
    ("rademacher", [(0.3, 0.6), (0.5, 1.0)]),
])
def test_convex_order_monotone_in_tilt(law_name, pairs):
    law = DisorderLaw.gaussian() if law_name == "gaussian" else DisorderLaw.rademacher()
    for b_lo, b_hi in pairs:
        rep = convex_order_check(
            TiltedWeightDist(law, b_lo), TiltedWeightDist(law, b_hi),
            np.linspace(0.0, 6.0, 120), tolerance=1e-9)
        assert rep.passed, f"{law_name} {b_lo}->{b_hi}: {rep.max_violation}"


def test_convex_order_spread_vs_degenerate():
    spread = DiscreteDist([0.0, 2.0], [0.5, 0.5])
    degenerate = DiscreteDist([1.0], [1.0])
    ok = convex_order_check(degenerate, spread, [0.0, 0.5, 1.0, 1.5])
    assert ok.passed
    bad = convex_order_check(spread, degenerate, [0.0, 0.5, 1.0, 1.5])
    assert not bad.passed
    # direct evaluation of the positive part at a = 1 pins the violation
    assert bad.max_violation == pytest.approx(0.5, abs=1e-15)
    assert bad.worst_a == pytest.approx(1.0)


def test_convex_order_rejects_unequal_means():
    with pytest.raises(ConfigError):
        convex_order_check(DiscreteDist([0.0], [1.0]), DiscreteDist([1.0], [1.0]),
                           [0.0, 1.0])


def test_convex_order_empirical_mode(rng):
    samples = rng.exponential(size=5000)
    emp = EmpiricalDist(samples)
    rep = convex_order_check(emp, emp, [0.0, 1.0, 2.0])
    assert rep.mode == "empirical"
    assert rep.passed


@given(
    q=st.floats(0.1, 0.9), gap=st.floats(0.1, 2.0), delta=st.floats(0.01, 0.5),
    t1=st.floats(-1.0, 3.0), t2=st.floats(-1.0, 3.0),
    c1=st.floats(-1.0, 1.0), c2=st.floats(-1.0, 1.0),
)
@settings(max_examples=80, deadline=None)
def test_multivariate_convex_dominance_brute_force(q, gap, delta, t1, t2, c1, c2):
    # Coordinates: Y_i two-point, Z_i its mean-preserving split; any
    # coordinate-wise-convex phi must have E[phi(Y)] <= E[phi(Z)] over the
    # product measure (checked by exhaustive enumeration, M = 2).
    y_support = np.array([0.0, gap])
    y_probs = np.array([q, 1.0 - q])
    z_support = np.array([-delta, delta, gap - delta, gap + delta])
    z_probs = np.array([q / 2, q / 2, (1 - q) / 2, (1 - q) / 2])

    def phis(x1, x2):
        return (
            max(x1 + x2 - t1, 0.0),
            max(x1 - t1, 0.0) * max(x2 - t2, 0.0),
            math.exp(min(c1 * x1 + c2 * x2, 30.0)),
        )

    def product_expect(s, p):
        totals = np.zeros(3)
        for xi, pi in zip(s, p):
            for xj, pj in zip(s, p):
                totals += pi * pj * np.array(phis(xi, xj))
        return totals

    ey = product_expect(y_support, y_probs)
    ez = product_expect(z_support, z_probs)
    assert np.all(ey <= ez + 1e-10 * np.maximum(1.0, np.abs(ez)))


# ---------------------------------------------------------------------------
# coupling ratio and constants
# ---------------------------------------------------------------------------

def _ratio_denominator_oracle(law, beta, x):
    # direct double integration of the spread comparison denominator
    t = TiltedWeightDist(law, beta)

    def inner(r):
        lam = t.lam
        w_hi = (math.log(x) + lam) / beta          # zeta < x
        w_kink = (math.log(x / r) + lam) / beta    # r * zeta = x

        def f(w):
            z = math.exp(beta * w - lam)
            return max(r * z - x, 0.0) * norm.pdf(w)

        val, _ = quad(f, -40, w_hi, points=[max(w_kink, -40)],
                      limit=400, epsabs=1e-13)
        return val * r**-4

    integral, _ = quad(inner, 1.0, np.inf, limit=400)
    return x * t.tail_prob(x) + integral


def test_coupling_denominator_reduction_matches_quadrature(gaussian):
    beta = 1.0
    t = TiltedWeightDist(gaussian, beta)
    for x in (0.3, 1.0, 4.0):
        closed = x * t.tail_prob(x) + t.third_moment_below(x) / (6 * x * x)
        assert closed == pytest.approx(_ratio_denominator_oracle(gaussian, beta, x),
                                       rel=1e-7)


def test_coupling_ratio_small_x_limit(gaussian):
    rep = coupling_ratio_sup(gaussian, 1.0)
    # ratio at and below the smallest grid points stays at or below 1 + slack
    assert rep.left_tail_bound <= 1.0 + 1e-6
    assert np.all(rep.values[:5] <= 1.0 + 1e-6)


def test_coupling_ratio_vanishes_at_infinity(gaussian):
    rep = coupling_ratio_sup(gaussian, 1.0)
    # the ratio collapses on the far right of the grid and keeps decreasing
    assert np.all(rep.values[-3:] < 1e-6)
    assert np.all(np.diff(rep.values[-10:]) < 0)
    assert rep.right_tail_bound < 1e-6
    assert rep.certified, rep.notes


def test_coupling_ratio_finite_sup(gaussian, rademacher):
    for law in (gaussian, rademacher):
        rep = coupling_ratio_sup(law, 1.0)
        assert math.isfinite(rep.sup) and rep.sup > 0
        assert rep.certified, rep.notes


def test_coupling_ratio_needs_positive_beta(gaussian):
    with pytest.raises(ConfigError):
        coupling_ratio_sup(gaussian, 0.0)


@pytest.mark.parametrize("law_name", ["gaussian", "rademacher"])
def test_coupling_dominates_tilt_increase(law_name):
    # the committed coupling: tilt increment u is convexly dominated by
    # multiplying the base weight with an independent spread factor at C*u
    law = DisorderLaw.gaussian() if law_name == "gaussian" else DisorderLaw.rademacher()
    beta = 0.8
    cc = coupling_constants(law, beta)
    assert cc.C > 0 and math.isfinite(cc.C)
    a_grid = np.concatenate([[0.0], np.geomspace(1e-3, 50.0, 120)])
    for u in np.linspace(0.0, cc.u_max, 5)[1:]:
        lo = TiltedWeightDist(law, beta + u)
        hi = SpreadProductDist(TiltedWeightDist(law, beta), cc.C * u)
        rep = convex_order_check(lo, hi, a_grid, tolerance=1e-9)
        assert rep.passed, f"u={u}: violation {rep.max_violation:.3e} at {rep.worst_a}"


# ---------------------------------------------------------------------------
# environments
# ---------------------------------------------------------------------------

def test_environment_deterministic(gaussian):
    env1 = sample_environment(gaussian, 2, 10, seed=7)
    env2 = sample_environment(gaussian, 2, 10, seed=7)
    k = np.array([3, 5, 10])
    x = np.array([[1, 0], [-2, 1], [0, 0]])
    np.testing.assert_array_equal(env1.omega(k, x), env2.omega(k, x))


def test_environment_seed_independence(gaussian):
    n_addr = 100_000
    env1 = sample_environment(gaussian, 1, n_addr + 1, seed=1)
    env2 = sample_environment(gaussian, 1, n_addr + 1, seed=2)
    k = np.arange(2, n_addr + 2)
    x = (k % 2)[:, None] * 0  # stay on the parity cone: use x with parity of k
    x = np.where(k[:, None] % 2 == 1, 1, 0)
    w1, w2 = env1.omega(k, x), env2.omega(k, x)
    r = np.corrcoef(w1, w2)[0, 1]
    assert abs(r) <= 4.0 / math.sqrt(n_addr)


def test_environment_shift_readdresses(gaussian):
    env = sample_environment(gaussian, 2, 20, seed=11)
    shifted = env.shift(4, [2, -2])
    k = np.array([1, 3, 6])
    x = np.array([[1, 0], [2, 1], [-3, 1]])
    np.testing.assert_array_equal(shifted.omega(k, x),
                                  env.omega(k + 4, x + np.array([2, -2])))


def test_environment_rejects_off_cone(gaussian):
    env = sample_environment(gaussian, 1, 5, seed=0)
    with pytest.raises(ConfigError):
        env.omega(2, [[3]])  # |x| > k
    with pytest.raises(ConfigError):
        env.omega(2, [[1]])  # parity mismatch
    with pytest.raises(ConfigError):
        env.omega(9, [[1]])  # beyond horizon


def test_environment_law_matches_marginals(rademacher):
    env = sample_environment(rademacher, 1, 40_001, seed=3)
    k = np.arange(1, 40_000, 2)
    x = np.ones((k.size, 1), dtype=int)
    w = env.omega(k, x)
    assert set(np.unique(w)) == {-1.0, 1.0}
    assert abs(w.mean()) <= 4.0 / math.sqrt(k.size)
