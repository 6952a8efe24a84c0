"""Monte Carlo moment functionals, growth-rate fits, and inequality checks.

Free energy and moment growth rates are limits; everything here reports
finite-horizon proxies as windowed slope fits with standard errors and
residuals attached, and verification-style checks use an explicit
four-standard-error allowance so that population inequalities can be tested
against samples with a uniform convention.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .disorder import DisorderLaw
from .errors import ConfigError
from .lattice import beta2_bound
from .polymer import batched_forward_sweep
from .seeding import hash_chain, replica_seeds

SE_FACTOR = 4.0


# ---------------------------------------------------------------------------
# estimates and fits
# ---------------------------------------------------------------------------

@dataclass
class MomentEstimate:
    """One Monte Carlo estimate of a moment functional of W_n."""

    functional: str          # "pth_moment" | "log_mean" | "tail_prob"
    estimate: float
    stderr: float
    r_count: int
    seed: int
    n: int
    beta: float
    d: int
    p: float | None = None


@dataclass
class GrowthFit:
    """Windowed slope fit of a sequence against n.

    points holds (n, value, stderr) for everything computed; the slope is
    fitted on the window only and the fit residual is reported, never hidden.
    """

    points: list
    slope: float
    slope_se: float
    residual: float
    window: tuple


def _window_default(ns: list[int]) -> list[int]:
    cut = max(ns) / 2.0
    win = [n for n in ns if n >= cut]
    if len(win) < 2:
        win = ns[-2:]
    return win


def mc_moment(law: DisorderLaw, beta: float, d: int, n: int, p: float,
              r_count: int, seed: int, omega_mode: str = "stream") -> MomentEstimate:
    """Mean of W_n^p over independent environments, deterministic by seed."""
    if p <= 0:
        raise ConfigError("moment order must be positive")
    if r_count < 2:
        raise ConfigError("need at least two replicas for a standard error")
    seeds = replica_seeds(seed, r_count)
    res = batched_forward_sweep(law, beta, d, n, seeds, marks=[n],
                                omega_mode=omega_mode)
    vals = np.exp(p * res.log_w[:, 0])
    return MomentEstimate(
        functional="pth_moment",
        estimate=float(vals.mean()),
        stderr=float(vals.std(ddof=1) / math.sqrt(r_count)),
        r_count=r_count, seed=seed, n=n, beta=beta, d=d, p=p,
    )


def free_energy_estimate(law: DisorderLaw, beta: float, d: int,
                         n_list, r_count: int, seed: int,
                         window=None, omega_mode: str = "stream") -> GrowthFit:
    """Per-n means of log W_n and a tail-window slope (free-energy proxy).

    All n share replicas (one sweep each), so the slope and its standard
    error come from per-replica slopes, which accounts for the correlation.
    """
    ns = sorted(set(int(n) for n in n_list))
    if len(ns) < 2:
        raise ConfigError("need at least two horizon values")
    seeds = replica_seeds(seed, r_count)
    res = batched_forward_sweep(law, beta, d, max(ns), seeds, marks=ns,
                                omega_mode=omega_mode)
    means = res.log_w.mean(axis=0)
    ses = res.log_w.std(axis=0, ddof=1) / math.sqrt(r_count)
    points = [(n, float(m), float(s)) for n, m, s in zip(ns, means, ses)]

    win = sorted(window) if window is not None else _window_default(ns)
    idx = [ns.index(n) for n in win]
    x = np.array(win, dtype=float)
    xc = x - x.mean()
    denom = float((xc * xc).sum())
    if denom == 0.0:
        raise ConfigError("degenerate fit window")
    rep_slopes = (res.log_w[:, idx] * xc).sum(axis=1) / denom
    slope = float(rep_slopes.mean())
    slope_se = float(rep_slopes.std(ddof=1) / math.sqrt(r_count))
    fit_vals = means[idx].mean() + slope * xc
    residual = float(np.sqrt(np.mean((means[idx] - fit_vals) ** 2)))
    return GrowthFit(points=points, slope=slope, slope_se=slope_se,
                     residual=residual, window=tuple(win))


def moment_growth_fit(estimates: list[MomentEstimate],
                      window=None) -> GrowthFit:
    """Slope of log E[W_n^p] against n from independent per-n estimates."""
    est = sorted(estimates, key=lambda e: e.n)
    if len(est) < 2:
        raise ConfigError("need at least two estimates")
    if any(e.estimate <= 0 for e in est):
        raise ConfigError("moment estimates must be positive")
    ns = [e.n for e in est]
    y = np.array([math.log(e.estimate) for e in est])
    sig = np.array([e.stderr / e.estimate for e in est])
    points = [(e.n, float(yy), float(ss)) for e, yy, ss in zip(est, y, sig)]

    win = sorted(window) if window is not None else _window_default(ns)
    sel = [ns.index(n) for n in win]
    x = np.array(win, dtype=float)
    yy = y[sel]
    ss = sig[sel]
    if np.all(ss == 0.0):
        w = np.ones_like(x)
    else:
        floor = max(ss[ss > 0].min() * 1e-3, 1e-300)
        w = 1.0 / np.maximum(ss, floor) ** 2
    xw = (w * x).sum() / w.sum()
    denom = float((w * (x - xw) ** 2).sum())
    slope = float((w * (x - xw) * yy).sum() / denom)
    slope_se = float(math.sqrt(((w * (x - xw)) ** 2 * ss**2).sum()) / denom)
    fit = (w * yy).sum() / w.sum() + slope * (x - xw)
    residual = float(np.sqrt(np.mean((yy - fit) ** 2)))
    return GrowthFit(points=points, slope=slope, slope_se=slope_se,
                     residual=residual, window=tuple(win))


def mc_moment_series(law: DisorderLaw, beta: float, d: int, n_list, p: float,
                     r_count: int, seed: int,
                     omega_mode: str = "stream") -> list[MomentEstimate]:
    """Independent mc_moment runs per n (distinct derived seeds)."""
    out = []
    for i, n in enumerate(sorted(set(int(v) for v in n_list))):
        sub = int(hash_chain(np.uint64(seed), np.int64(7_000_000 + i)))
        out.append(mc_moment(law, beta, d, n, p, r_count, sub,
                             omega_mode=omega_mode))
    return out


# ---------------------------------------------------------------------------
# inequality checks
# ---------------------------------------------------------------------------

@dataclass
class PZReport:
    passed: bool
    lhs: float
    lhs_se: float
    rhs: float
    rhs_se: float
    theta: float
    p: float
    moment_p: float


def paley_zygmund_check(samples, theta: float, p: float) -> PZReport:
    """Empirical check of P(Z >= theta) >= (1-theta)^(p/(p-1)) E[Z^p]^(-1/(p-1)).

    Samples are renormalized to unit mean first; the pass verdict allows the
    usual four combined standard errors.
    """
    if not 0.0 < theta < 1.0:
        raise ConfigError("theta must be in (0, 1)")
    if p <= 1.0:
        raise ConfigError("p must exceed 1")
    z = np.asarray(samples, dtype=float)
    if z.size < 2 or np.any(z < 0):
        raise ConfigError("need >= 2 nonnegative samples")
    z = z / z.mean()
    r = z.size
    ind = (z >= theta).astype(float)
    lhs = float(ind.mean())
    lhs_se = float(ind.std(ddof=1) / math.sqrt(r))
    zp = z ** p
    mp = float(zp.mean())
    mp_se = float(zp.std(ddof=1) / math.sqrt(r))
    rhs = (1.0 - theta) ** (p / (p - 1.0)) * mp ** (-1.0 / (p - 1.0))
    rhs_se = rhs * mp_se / ((p - 1.0) * mp)
    passed = lhs >= rhs - SE_FACTOR * (lhs_se + rhs_se)
    return PZReport(passed, lhs, lhs_se, rhs, rhs_se, theta, p, mp)


def concentration_rate(u: float, big_k: float) -> float:
    """The quadratic-then-linear rate in the upper-tail concentration bound."""
    if u <= big_k:
        return u * u / (4.0 * big_k)
    return u - big_k


@dataclass
class ConcentrationReport:
    passed: bool
    big_k: float
    x_grid: np.ndarray
    tail_probs: np.ndarray
    tail_ses: np.ndarray
    bounds: np.ndarray


def concentration_check(log_w_samples, law: DisorderLaw, beta: float, n: int,
                        x_grid) -> ConcentrationReport:
    """Check the exponential concentration of log W_n above its mean.

    The bound is exp(-n * rate(x / n)) with K = 2 exp(lambda(beta) +
    lambda(-beta)); empirical upper tails get a four-standard-error
    allowance.
    """
    z = np.asarray(log_w_samples, dtype=float)
    z = z - z.mean()
    big_k = 2.0 * math.exp(law.log_mgf(beta) + law.log_mgf(-beta))
    xs = np.asarray(x_grid, dtype=float)
    tails = np.empty_like(xs)
    ses = np.empty_like(xs)
    bounds = np.empty_like(xs)
    r = z.size
    for i, x in enumerate(xs):
        ind = (z >= x).astype(float)
        tails[i] = ind.mean()
        ses[i] = ind.std(ddof=1) / math.sqrt(r)
        bounds[i] = math.exp(-n * concentration_rate(x / n, big_k))
    passed = bool(np.all(tails <= bounds + SE_FACTOR * ses))
    return ConcentrationReport(passed, big_k, xs, tails, ses, bounds)


# ---------------------------------------------------------------------------
# martingale-difference constants
# ---------------------------------------------------------------------------

def _power_gap_ratio(b: np.ndarray, p: float) -> np.ndarray:
    """(|1+b|^p - 1 - p b) / min(b^2, |b|^p), series-stabilized near 0."""
    b = np.asarray(b, dtype=float)
    out = np.empty_like(b)
    small = np.abs(b) < 1e-3
    bs = b[small]
    out[small] = 0.5 * p * (p - 1.0) * (
        1.0 + (p - 2.0) * bs / 3.0
        + (p - 2.0) * (p - 3.0) * bs**2 / 12.0
        + (p - 2.0) * (p - 3.0) * (p - 4.0) * bs**3 / 60.0)
    bl = b[~small]
    num = np.abs(1.0 + bl) ** p - 1.0 - p * bl
    den = np.minimum(bl * bl, np.abs(bl) ** p)
    out[~small] = num / den
    return out


def _golden_min(f, lo: float, hi: float, tol: float = 1e-12) -> float:
    g = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = f(c), f(d)
    while abs(b - a) > tol * (1.0 + abs(a) + abs(b)):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def martingale_power_constants(p: float) -> tuple[float, float]:
    """The sharp pair (c_p, C_p) in the power-gap martingale estimate.

    c_p is the infimum over b != 0 of (|1+b|^p - 1 - p b) / min(b^2, |b|^p);
    the companion constant is C_p = 1 + 1/c_p.  Valid for 1 < p <= 2; at
    p = 2 the ratio is identically one.
    """
    if not 1.0 < p <= 2.0:
        raise ConfigError("p must lie in (1, 2]")
    mags = np.geomspace(1e-8, 1e8, 900)
    grid = np.concatenate([-mags[::-1], mags, np.linspace(-3.0, 3.0, 1201)])
    grid = grid[np.abs(grid) > 1e-14]
    vals = _power_gap_ratio(grid, p)
    order = np.argsort(grid)
    grid, vals = grid[order], vals[order]
    i = int(np.argmin(vals))
    lo = grid[max(0, i - 1)]
    hi = grid[min(grid.size - 1, i + 1)]
    b_star = _golden_min(lambda b: float(_power_gap_ratio(np.array([b]), p)[0]),
                         lo, hi)
    candidates = [
        float(_power_gap_ratio(np.array([b_star]), p)[0]),
        float(vals[i]),
        0.5 * p * (p - 1.0),  # b -> 0 limit
        1.0,                  # |b| -> infinity limit
    ]
    c_p = min(candidates)
    return c_p, 1.0 + 1.0 / c_p


# ---------------------------------------------------------------------------
# free-energy / moment-growth bridge
# ---------------------------------------------------------------------------

@dataclass
class SupTailDiagnostic:
    """Exploratory tail fit for the running maximum of the martingale.

    Strictly a diagnostic: the power-law tail of sup_k W_k is a feature of
    the (uncomputable) critical tilt, so this runs at a computable anchor
    (the L2 threshold by default) where the tail eventually cuts off.  The
    anchor is disclosed in the result and in any emitted rows.
    """

    beta: float
    anchor_kind: str
    u_grid: np.ndarray
    tail_points: list          # MomentEstimate rows, functional "tail_prob"
    slope: float
    slope_se: float


def sup_tail_diagnostic(law: DisorderLaw, d: int, n: int, r_count: int,
                        seed: int, beta: float | None = None,
                        u_grid=None) -> SupTailDiagnostic:
    """Fit the upper tail of sup_{k<=n} W_k on a log-log grid (exploratory)."""
    if beta is None:
        if d <= 2:
            beta, kind = 0.0, "zero"
        else:
            beta, kind = beta2_bound(law, d, n_max=2000).beta2, "beta2"
    else:
        kind = "given"
    seeds = replica_seeds(seed, r_count)
    res = batched_forward_sweep(law, beta, d, n, seeds,
                                marks=list(range(n + 1)))
    sup_w = np.exp(res.log_w.max(axis=1))
    if u_grid is None:
        hi = np.quantile(sup_w, 0.995)
        u_grid = np.geomspace(max(1.0, np.quantile(sup_w, 0.5)), hi, 8)
    u_grid = np.asarray(u_grid, dtype=float)
    points = []
    for u in u_grid:
        ind = (sup_w >= u).astype(float)
        points.append(MomentEstimate(
            functional="tail_prob", estimate=float(ind.mean()),
            stderr=float(ind.std(ddof=1) / math.sqrt(r_count)),
            r_count=r_count, seed=seed, n=n, beta=beta, d=d, p=None))
    mask = [pt.estimate > 0 for pt in points]
    xs = np.log(u_grid[mask])
    ys = np.log([pt.estimate for pt in points if pt.estimate > 0])
    if xs.size >= 2 and float(np.ptp(xs)) > 0:
        slope, _ = np.polyfit(xs, ys, 1)
        xc = xs - xs.mean()
        sig = np.array([pt.stderr / pt.estimate for pt in points
                        if pt.estimate > 0])
        denom = float((xc * xc).sum())
        slope_se = float(math.sqrt(((xc / denom) ** 2 * sig**2).sum())) \
            if denom > 0 else math.inf
    else:
        slope, slope_se = math.nan, math.nan
    return SupTailDiagnostic(beta=beta, anchor_kind=kind, u_grid=u_grid,
                             tail_points=points, slope=float(slope),
                             slope_se=slope_se)


@dataclass
class BridgeReport:
    """Result of the finite-n free-energy vs moment-growth comparison.

    status is PASS/FAIL for the inequality |f| <= 2 sqrt(K1 f_p / (p-1)) with
    statistical allowance, or SKIP when the moment-growth proxy is
    nonpositive (the inequality is vacuous there).  beta_star_kind records
    which computable critical-point anchor was used.
    """

    status: str
    beta_star: float
    beta_star_kind: str
    u: float
    p: float
    k1: float
    f_proxy: GrowthFit = field(repr=False, default=None)
    fp_proxy: GrowthFit = field(repr=False, default=None)
    lhs: float = math.nan
    rhs: float = math.nan
    allowance: float = math.nan


def bridge_inequality_check(law: DisorderLaw, d: int, p: float, u: float,
                            n: int, r_count: int, seed: int,
                            beta_star: float | None = None) -> BridgeReport:
    """Finite-n proxy check of the free-energy / p-moment bridge inequality.

    The anchor beta* is 0 in d <= 2 (the known critical point) and the
    computable L2 threshold in d >= 3.  Both proxies are windowed slope
    fits; the right side uses K1 = 2 exp(lambda(beta*+1) + lambda(-beta*-1)).
    The free-energy proxy runs to the full horizon n; the moment proxy is
    fitted on shorter horizons (capped at 32) because the p-th moment
    sampler's relative error grows exponentially in n.
    """
    if u < 0:
        raise ConfigError("tilt increment u must be >= 0")
    if beta_star is None:
        if d <= 2:
            beta_star, kind = 0.0, "zero"
        else:
            beta_star, kind = beta2_bound(law, d).beta2, "beta2"
    else:
        kind = "given"
    beta = beta_star + u
    ns = sorted(set(max(2, n // 8) * f for f in (1, 2, 4, 8)))[:4]
    ns = [v for v in ns if v <= n] or [n // 2, n]
    m = min(n, 32)
    ns_moment = sorted(set(v for v in (max(2, m // 4), m // 2, m)))
    k1 = 2.0 * math.exp(law.log_mgf(beta_star + 1.0) + law.log_mgf(-beta_star - 1.0))

    f_fit = free_energy_estimate(law, beta, d, ns, r_count,
                                 int(hash_chain(np.uint64(seed), np.int64(1))))
    fp_fit = moment_growth_fit(mc_moment_series(
        law, beta, d, ns_moment, p, r_count,
        int(hash_chain(np.uint64(seed), np.int64(2)))))

    if fp_fit.slope <= 0.0:
        return BridgeReport("SKIP", beta_star, kind, u, p, k1, f_fit, fp_fit)
    rhs = 2.0 * math.sqrt(k1 / (p - 1.0) * fp_fit.slope)
    drhs = rhs / (2.0 * fp_fit.slope)
    allowance = SE_FACTOR * (f_fit.slope_se + drhs * fp_fit.slope_se)
    lhs = abs(f_fit.slope)
    status = "PASS" if lhs <= rhs + allowance else "FAIL"
    return BridgeReport(status, beta_star, kind, u, p, k1, f_fit, fp_fit,
                        lhs=lhs, rhs=rhs, allowance=allowance)
