"""The acceptance suite: every verifiable claim at its pinned tolerance.

Each criterion is a function returning a CriterionResult; the CLI `accept`
subcommand and the pytest acceptance module both run exactly these.  All
sizes, seeds, and tolerances are fixed here, not configurable: the suite is
the contract.  Statistical checks use the uniform four-standard-error
allowance; exact checks use the stated absolute tolerances.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations, product as iproduct

import numpy as np

from .disorder import (
    DisorderLaw,
    TiltedWeightDist,
    convex_order_check,
    sample_environment,
    sample_spread_factor,
)
from .lattice import beta2_bound
from .moments import (
    concentration_check,
    free_energy_estimate,
    martingale_power_constants,
    mc_moment,
    mc_moment_series,
    moment_growth_fit,
    paley_zygmund_check,
)
from .pinning import (
    chaos_moment_bound_check,
    dyadic_slope,
    kernel_table_exact,
    renewal_series,
    synthetic_kernel_table,
    tilt_exponent,
)
from .polymer import (
    batched_forward_sweep,
    forward_fields,
    path_overlap,
    second_moment_exact,
)
from .seeding import replica_seeds

ACCEPT_SEED = 20252026


@dataclass
class CriterionResult:
    name: str
    passed: bool
    detail: str
    elapsed_s: float
    report_only: bool = False

    def line(self) -> str:
        tag = "INFO" if self.report_only else ("PASS" if self.passed else "FAIL")
        return f"[{tag}] {self.name}: {self.detail} ({self.elapsed_s:.1f}s)"


def _timed(fn):
    def wrapper() -> CriterionResult:
        t0 = time.perf_counter()
        name, passed, detail, report_only = fn()
        return CriterionResult(name, passed, detail,
                               time.perf_counter() - t0, report_only)
    wrapper.__name__ = fn.__name__
    return wrapper


@lru_cache(maxsize=1)
def _martingale_samples() -> np.ndarray:
    """log W_16 over 2e4 gaussian environments, d = 2, beta = 0.5 (shared)."""
    law = DisorderLaw.gaussian()
    seeds = replica_seeds(ACCEPT_SEED, 20_000)
    return batched_forward_sweep(law, 0.5, 2, 16, seeds).log_w[:, 0]


@_timed
def criterion_martingale_mean():
    w = np.exp(_martingale_samples())
    se = w.std(ddof=1) / math.sqrt(w.size)
    gap = abs(w.mean() - 1.0)
    return ("martingale mean one (d=2, beta=0.5, n=16, R=2e4)",
            bool(gap <= 4 * se),
            f"|mean-1|={gap:.2e} vs 4se={4 * se:.2e}", False)


@_timed
def criterion_beta_zero_degeneracy():
    law = DisorderLaw.gaussian()
    worst = 0.0
    for d, n in ((1, 50), (2, 50), (3, 50)):
        env = sample_environment(law, d, n, seed=ACCEPT_SEED + d)
        for fld in forward_fields(env, law, 0.0, n):
            if fld.n == 0:
                continue
            worst = max(worst, abs(math.exp(fld.log_partition()) - 1.0))
    return ("zero-tilt partition degeneracy (d<=3, n<=50)",
            bool(worst <= 1e-12), f"max |W-1| = {worst:.2e} <= 1e-12", False)


def _enumerate_paths(n):
    out = []
    for steps in iproduct((-1, 1), repeat=n):
        x, sites = 0, []
        for s in steps:
            x += s
            sites.append(x)
        out.append(tuple(sites))
    return out


@_timed
def criterion_second_moment_oracle():
    law = DisorderLaw.gaussian()
    beta, d = 0.7, 1
    gamma = law.log_mgf(2 * beta) - 2 * law.log_mgf(beta)
    worst = 0.0
    for n in range(1, 7):
        paths = _enumerate_paths(n)
        total = 0.0
        for pth in paths:
            for qth in paths:
                hits = sum(1 for a, b in zip(pth, qth) if a == b)
                total += math.exp(gamma * hits)
        oracle = total / 4.0 ** n
        worst = max(worst, abs(second_moment_exact(law, beta, d, n) - oracle))
    est = mc_moment(law, beta, d, 10, 2.0, 100_000, seed=ACCEPT_SEED + 3)
    exact10 = second_moment_exact(law, beta, d, 10)
    mc_gap = abs(est.estimate - exact10)
    ok = worst <= 1e-10 and mc_gap <= 4 * est.stderr
    return ("second-moment transfer matrix vs enumeration and MC",
            bool(ok),
            f"enum gap {worst:.2e} <= 1e-10; MC gap {mc_gap:.2e} vs "
            f"4se={4 * est.stderr:.2e}", False)


@_timed
def criterion_spread_sampler():
    rng = np.random.Generator(np.random.Philox(key=ACCEPT_SEED + 4))
    v = 0.2
    z = sample_spread_factor(v, rng, size=1_000_000)
    se1 = z.std(ddof=1) / math.sqrt(z.size)
    z2 = z * z
    se2 = z2.std(ddof=1) / math.sqrt(z.size)
    g1, g2 = abs(z.mean() - 1.0), abs(z2.mean() - 1.6)
    ok = g1 <= 4 * se1 and g2 <= 4 * se2
    return ("spread-factor sampler moments (v=0.2, 1e6 draws)", bool(ok),
            f"|m1-1|={g1:.2e} vs {4 * se1:.2e}; |m2-1.6|={g2:.2e} vs "
            f"{4 * se2:.2e}", False)


@_timed
def criterion_convex_order():
    law = DisorderLaw.gaussian()
    rep = convex_order_check(TiltedWeightDist(law, 0.5),
                             TiltedWeightDist(law, 0.8),
                             np.linspace(0.0, 6.0, 100), tolerance=1e-9)
    return ("tilt convex-order monotonicity (gaussian 0.5 vs 0.8)",
            bool(rep.passed),
            f"max violation {rep.max_violation:.2e} <= 1e-9", False)


@_timed
def criterion_kernel_exponent():
    t1 = kernel_table_exact(1, 1.5, 4096)
    s1 = dyadic_slope(t1)
    t3 = kernel_table_exact(3, 1.2, 128)
    s3 = dyadic_slope(t3)
    ok = abs(s1 - 0.75) <= 0.1 and abs(s3 - 0.7) <= 0.15
    return ("zero-tilt kernel-sum exponents (d=1 and d=3)", bool(ok),
            f"slope(d=1,p=1.5)={s1:.4f} (target 0.75+-0.1); "
            f"slope(d=3,p=1.2)={s3:.4f} (target 0.70+-0.15)", False)


@_timed
def criterion_tilt_exponent_law():
    geo = synthetic_kernel_table(np.ones(4000))
    worst = max(abs(tilt_exponent(geo, v).phi - math.log1p(v))
                for v in (0.1, 0.5, 1.0))
    n = np.arange(1, 4097, dtype=float)
    sqrt_t = synthetic_kernel_table(n ** -0.5)
    vs = np.geomspace(1e-4, 1e-2, 9)
    phis = np.array([tilt_exponent(sqrt_t, v).phi for v in vs])
    slope = float(np.polyfit(np.log(vs), np.log(phis), 1)[0])
    ok = worst <= 1e-10 and abs(slope - 2.0) <= 0.05
    return ("tilt-exponent laws (geometric exact, sqrt-kernel scaling)",
            bool(ok),
            f"|phi-log(1+v)| max {worst:.2e} <= 1e-10; "
            f"loglog slope {slope:.4f} (target 2+-0.05)", False)


def _subset_oracle(kernel, v, m):
    if m == 0:
        return 1.0
    total = 0.0
    for size in range(0, m):
        for inner in combinations(range(1, m), size):
            pts = (0,) + inner + (m,)
            prod = 1.0
            for a, b in zip(pts, pts[1:]):
                prod *= v * kernel[b - a - 1]
            total += prod
    return total


@_timed
def criterion_renewal_bound():
    geo = synthetic_kernel_table(np.ones(2000))
    n_arr = np.arange(1, 4097, dtype=float)
    sqr = synthetic_kernel_table(n_arr ** -0.5)
    rep1 = renewal_series(geo, 0.3, 200)
    rep2 = renewal_series(sqr, 0.05, 200)
    worst_ratio = max(rep1.max_ratio, rep2.max_ratio)
    worst_enum = 0.0
    for table, v in ((geo, 0.3), (sqr, 0.05)):
        rep = renewal_series(table, v, 12, phi=0.5)
        z = np.exp(rep.log_z)
        for m in range(13):
            oracle = _subset_oracle(table.values, v, m)
            worst_enum = max(worst_enum, abs(z[m] - oracle) / max(1.0, oracle))
    ok = worst_ratio <= 1.0 + 1e-10 and worst_enum <= 1e-12
    return ("renewal series bounded by its exponential tilt", bool(ok),
            f"max Z_m e^(-phi m) = {worst_ratio:.12f} <= 1+1e-10; "
            f"subset-enum gap {worst_enum:.2e} <= 1e-12", False)


@_timed
def criterion_chaos_bound():
    law = DisorderLaw.gaussian()
    rep = chaos_moment_bound_check(law, 0.0, 0.1, 1.5, 1, 32, 100_000,
                                   seed=ACCEPT_SEED + 9)
    return ("chaos/pinning moment upper bound (d=1, u=0.1, p=1.5, n=32)",
            bool(rep.passed),
            f"lhs {rep.lhs:.6f} (se {rep.lhs_se:.1e}) <= rhs {rep.rhs:.3e}",
            False)


@_timed
def criterion_pz_and_concentration():
    law = DisorderLaw.gaussian()
    logs = _martingale_samples()
    pz = paley_zygmund_check(np.exp(logs), theta=0.5, p=1.5)
    conc = concentration_check(logs, law, 0.5, 16, [1.0, 2.0, 4.0, 8.0])
    ok = pz.passed and conc.passed
    return ("Paley-Zygmund and concentration on the shared samples",
            bool(ok),
            f"PZ lhs {pz.lhs:.4f} >= rhs {pz.rhs:.4f}; concentration "
            f"max tail {conc.tail_probs.max():.2e} within bounds", False)


@_timed
def criterion_localization_oracle():
    law = DisorderLaw.gaussian()
    n, beta = 6, 1.0
    env = sample_environment(law, 1, n, seed=ACCEPT_SEED + 11)
    rep = path_overlap(env, law, beta, n)
    lam = law.log_mgf(beta)

    def weight(sites):
        w = 1.0
        for k, x in enumerate(sites, start=1):
            om = float(env.omega(k, [[x]])[0])
            w *= math.exp(beta * om - lam) / 2.0
        return w

    paths = _enumerate_paths(n)
    weights = np.array([weight(p) for p in paths])
    w_n = weights.sum()
    ep_terms, ov_terms = [], []
    for k in range(1, n + 1):
        acc = {}
        for sites in _enumerate_paths(k):
            acc[sites[-1]] = acc.get(sites[-1], 0.0) + weight(sites)
        tot = sum(acc.values())
        ep_terms.append(sum((val / tot) ** 2 for val in acc.values()))
        marg = {}
        for pth, w in zip(paths, weights):
            marg[pth[k - 1]] = marg.get(pth[k - 1], 0.0) + w / w_n
        ov_terms.append(sum(val * val for val in marg.values()))
    gap_ep = abs(rep.ep - np.mean(ep_terms))
    gap_ov = abs(rep.ov - np.mean(ov_terms))
    ok = gap_ep <= 1e-10 and gap_ov <= 1e-10
    return ("localization observables vs path-pair enumeration (d=1, n=6)",
            bool(ok), f"EP gap {gap_ep:.2e}, OV gap {gap_ov:.2e} <= 1e-10",
            False)


@lru_cache(maxsize=1)
def _beta2_d3() -> float:
    return beta2_bound(DisorderLaw.gaussian(), 3, n_max=10_000).beta2


@_timed
def criterion_l2_region():
    law = DisorderLaw.gaussian()
    res = beta2_bound(law, 3, n_max=10_000)
    beta2 = res.beta2
    flat = free_energy_estimate(law, 0.5 * beta2, 3, [32, 48, 64], 2000,
                                seed=ACCEPT_SEED + 12)
    neg = free_energy_estimate(law, 1.0, 1, [64, 128, 256], 2000,
                               seed=ACCEPT_SEED + 13)
    ok = (beta2 > 0.0 and res.collision.tail_bound < math.inf
          and abs(flat.slope) <= 4 * flat.slope_se
          and neg.slope + 4 * neg.slope_se < 0.0)
    return ("L2 region: certified beta2 > 0, flat slope inside, decay in d=1",
            bool(ok),
            f"beta2={beta2:.6f} (tail {res.collision.tail_bound:.1e}); "
            f"d=3 slope {flat.slope:.2e} vs 4se {4 * flat.slope_se:.2e}; "
            f"d=1 slope {neg.slope:.4f} + 4se {4 * neg.slope_se:.1e} < 0",
            False)


@_timed
def criterion_power_constants():
    c2, _ = martingale_power_constants(2.0)
    ok = abs(c2 - 1.0) <= 1e-6
    mins = {}
    for p in (1.1, 1.3, 1.5, 1.7, 1.9):
        c_p, _ = martingale_power_constants(p)
        mins[p] = c_p
        ok = ok and c_p > 0.0
    return ("martingale power-gap constants", bool(ok),
            f"|c_2 - 1| = {abs(c2 - 1.0):.1e} <= 1e-6; min c_p = "
            f"{min(mins.values()):.4f} > 0", False)


@_timed
def criterion_smoothness_illustration():
    # Report-only: the true critical tilt is not computable, so this curve is
    # anchored at the L2 threshold and carries no pass/fail weight.
    law = DisorderLaw.gaussian()
    beta2 = _beta2_d3()
    rows = []
    for i, u in enumerate((0.05, 0.1, 0.2)):
        series = mc_moment_series(law, beta2 + u, 3, [4, 8, 16], 1.2, 500,
                                  seed=ACCEPT_SEED + 20 + i)
        fit = moment_growth_fit(series, window=[4, 8, 16])
        rows.append(f"u={u}: fp-slope {fit.slope:+.4f} (se {fit.slope_se:.4f})")
    return ("illustration: moment growth above the L2 anchor (not beta_c)",
            True, "; ".join(rows), True)


ALL_CRITERIA = [
    criterion_martingale_mean,
    criterion_beta_zero_degeneracy,
    criterion_second_moment_oracle,
    criterion_spread_sampler,
    criterion_convex_order,
    criterion_kernel_exponent,
    criterion_tilt_exponent_law,
    criterion_renewal_bound,
    criterion_chaos_bound,
    criterion_pz_and_concentration,
    criterion_localization_oracle,
    criterion_l2_region,
    criterion_power_constants,
    criterion_smoothness_illustration,
]


def run_all(include_illustration: bool = True,
            echo: bool = False) -> list[CriterionResult]:
    out = []
    for fn in ALL_CRITERIA:
        if not include_illustration and fn is criterion_smoothness_illustration:
            continue
        out.append(fn())
        if echo:
            print(out[-1].line(), flush=True)
    return out
