"""Simple-random-walk kernels, two-replica collision sums, and the L2 threshold.

The difference of two independent walks is itself a walk whose time-n return
probability equals the 2n-step return probability of a single walk (the
reversed second walk concatenates with the first).  Return probabilities are
computed exactly by conditioning on how many steps each coordinate receives,
which reduces everything to 1-d binomial returns; this is what makes
collision sums to n = 10^4 in d = 3 affordable, where iterating the dense
difference kernel would not be.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product

import numpy as np
from scipy.special import gammaln

from .disorder import DisorderLaw
from .errors import ConfigError, ConvergenceError

# ---------------------------------------------------------------------------
# dense walk slices
# ---------------------------------------------------------------------------


@dataclass
class WalkSlice:
    """Distribution of the walk at a fixed time over the dense box [-n, n]^d."""

    d: int
    n: int
    probs: np.ndarray

    def mass(self) -> float:
        return float(self.probs.sum())

    def prob_at(self, x) -> float:
        idx = tuple(int(c) + self.n for c in np.atleast_1d(x))
        return float(self.probs[idx])


def srw_origin(d: int) -> WalkSlice:
    if d < 1:
        raise ConfigError("dimension must be >= 1")
    return WalkSlice(d, 0, np.ones((1,) * d))


def srw_step(slc: WalkSlice) -> WalkSlice:
    """One step of the nearest-neighbor walk: average the 2d neighbors."""
    d, n = slc.d, slc.n
    new = np.zeros((2 * (n + 1) + 1,) * d)
    inner = tuple(slice(1, -1) for _ in range(d))
    for axis in range(d):
        for delta in (-1, 1):
            idx = list(inner)
            idx[axis] = slice(1 + delta, new.shape[axis] - 1 + delta)
            new[tuple(idx)] += slc.probs
    new /= 2 * d
    return WalkSlice(d, n + 1, new)


def srw_slices(d: int, n_max: int):
    """Yield WalkSlice for n = 0, 1, ..., n_max."""
    slc = srw_origin(d)
    yield slc
    for _ in range(n_max):
        slc = srw_step(slc)
        yield slc


# ---------------------------------------------------------------------------
# the difference walk
# ---------------------------------------------------------------------------

def difference_step_kernel(d: int) -> np.ndarray:
    """Step law of X1 - X2 for independent single steps, on a radius-2 box.

    Built by enumerating all (2d)^2 ordered step pairs; no closed form is
    trusted here because this table is the cross-check oracle for everything
    downstream.
    """
    kern = np.zeros((5,) * d)
    steps = []
    for axis in range(d):
        for sign in (-1, 1):
            e = [0] * d
            e[axis] = sign
            steps.append(e)
    w = 1.0 / (2 * d) ** 2
    for e1, e2 in product(steps, steps):
        idx = tuple(a - b + 2 for a, b in zip(e1, e2))
        kern[idx] += w
    return kern


def _log_binom_return(m_max: int) -> np.ndarray:
    """log P(1-d SRW returns to 0 in m steps), -inf for odd m."""
    out = np.full(m_max + 1, -np.inf)
    m = np.arange(0, m_max + 1, 2)
    out[m] = gammaln(m + 1) - 2 * gammaln(m // 2 + 1) - m * math.log(2.0)
    return out


def return_probability_series(d: int, n_max: int) -> np.ndarray:
    """P(difference walk is at the origin at time n), n = 0..n_max, exactly.

    Equals P(X_{2n} = 0) for a single walk.  d = 1 and d = 2 have closed
    binomial forms; higher d conditions coordinate by coordinate on the
    multinomial split of the steps.
    """
    if d < 1 or n_max < 0:
        raise ConfigError("need d >= 1 and n_max >= 0")
    m_max = 2 * n_max
    logb = _log_binom_return(m_max)
    if d == 1:
        logu = logb
    elif d == 2:
        logu = 2.0 * logb
    else:
        logu = 2.0 * logb  # start from the 2-d closed form
        for t in range(3, d + 1):
            logu = _absorb_coordinate(logu, logb, t, m_max)
    return np.exp(logu[0::2])


def _absorb_coordinate(logu_prev: np.ndarray, logb: np.ndarray,
                       t: int, m_max: int) -> np.ndarray:
    """Return-prob logs for t dims from t-1 dims via the multinomial split."""
    out = np.full(m_max + 1, -np.inf)
    out[0] = 0.0
    lg = gammaln(np.arange(m_max + 1) + 1)
    log_p = math.log(1.0 / t)
    log_q = math.log((t - 1.0) / t)
    for m in range(2, m_max + 1, 2):
        k = np.arange(0, m + 1, 2)
        terms = (lg[m] - lg[k] - lg[m - k]
                 + k * log_p + (m - k) * log_q
                 + logb[k] + logu_prev[m - k])
        tmax = terms.max()
        out[m] = tmax + math.log(np.exp(terms - tmax).sum())
    return out


def collision_series_dense(d: int, n_max: int) -> np.ndarray:
    """P(difference walk at origin), n = 0..n_max, by dense kernel iteration.

    Quadratic-in-volume; meant for small horizons as an independent check of
    the combinatorial series.
    """
    kern = difference_step_kernel(d)
    offsets = [tuple(i - 2 for i in idx) for idx in zip(*np.nonzero(kern))]
    weights = [kern[tuple(i + 2 for i in off)] for off in offsets]
    out = np.empty(n_max + 1)
    out[0] = 1.0
    cur = np.ones((1,) * d)
    r = 0
    for n in range(1, n_max + 1):
        r_new = r + 2
        new = np.zeros((2 * r_new + 1,) * d)
        for off, w in zip(offsets, weights):
            idx = tuple(slice(2 + o, 2 + o + 2 * r + 1) for o in off)
            new[idx] += w * cur
        cur, r = new, r_new
        out[n] = cur[(r,) * d]
    return out


# ---------------------------------------------------------------------------
# collision sums and the L2 threshold
# ---------------------------------------------------------------------------

@dataclass
class CollisionSumResult:
    """Partial sums of expected replica collisions with a certified tail.

    partial[n-1] holds S_n = sum_{m<=n} P(collision at time m).  For d >= 3
    the local-limit decay m^(-d/2) gives a tail coefficient fitted (as a max,
    hence an upper bound) over the last decade of computed terms.
    """

    d: int
    n_max: int
    partial: np.ndarray
    s_lower: float
    tail_bound: float
    s_upper: float
    tail_coeff: float
    diverged: bool

    def returns(self) -> np.ndarray:
        out = np.empty_like(self.partial)
        out[0] = self.partial[0]
        out[1:] = np.diff(self.partial)
        return out


def collision_sum(d: int, n_max: int) -> CollisionSumResult:
    """Expected number of collisions of two independent walks up to n_max."""
    if n_max < 1:
        raise ConfigError("n_max must be >= 1")
    u = return_probability_series(d, n_max)[1:]
    partial = np.cumsum(u)
    s_n = float(partial[-1])
    if d <= 2:
        return CollisionSumResult(d, n_max, partial, s_n, math.inf, math.inf,
                                  math.nan, True)
    if n_max < 100:
        raise ConvergenceError("tail certification needs n_max >= 100")
    lo = max(1, n_max // 10)
    n_fit = np.arange(lo, n_max + 1)
    scaled = u[lo - 1:] * n_fit ** (d / 2.0)
    # the scaled returns increase toward the local-limit constant like
    # c - b/n; Richardson-extrapolate and double the correction for safety
    c_end = float(scaled[-1])
    c_half = float(u[n_max // 2 - 1] * (n_max // 2) ** (d / 2.0))
    coeff = max(float(scaled.max()), c_end + 2.0 * max(0.0, c_end - c_half))
    # sum_{n > N} n^(-d/2) <= integral_N^inf x^(-d/2) dx
    tail = coeff * n_max ** (1.0 - d / 2.0) / (d / 2.0 - 1.0)
    return CollisionSumResult(d, n_max, partial, s_n, tail, s_n + tail,
                              coeff, False)


@dataclass
class Beta2Result:
    """The L2-region threshold: largest tilt with bounded second moments.

    beta2 is computed against the certified upper collision sum (conservative);
    beta2_optimistic uses the uncertified partial sum.  Divergent collision
    sums (d <= 2) report threshold zero.
    """

    beta2: float
    beta2_optimistic: float
    diverged: bool
    gamma_target: float
    collision: CollisionSumResult | None = field(repr=False, default=None)


def _solve_gamma_equals(law: DisorderLaw, target: float, tol: float) -> float:
    """Solve logMGF(2 b) - 2 logMGF(b) = target for b >= 0 (increasing map)."""

    def h(b: float) -> float:
        return law.log_mgf(2 * b) - 2 * law.log_mgf(b)

    if target <= 0:
        return 0.0
    hi = 1.0
    while h(hi) < target:
        hi *= 2.0
        if hi > 2.0 ** 40:
            return math.inf
    lo = 0.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if h(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def beta2_bound(law: DisorderLaw, d: int, tol: float = 1e-10,
                n_max: int = 10_000) -> Beta2Result:
    """Sup of the tilts whose two-replica collision weight stays below one.

    The criterion is exp(logMGF(2b) - 2 logMGF(b)) * S < 1 with S the full
    collision sum; b -> logMGF(2b) - 2 logMGF(b) is strictly increasing, so
    bisection applies.  For d <= 2 the collision sum diverges and the
    threshold is zero (flagged).
    """
    if d <= 2:
        cs = collision_sum(d, min(n_max, 2000))
        return Beta2Result(0.0, 0.0, True, 0.0, cs)
    cs = collision_sum(d, n_max)
    target = -math.log(cs.s_upper)
    if target <= 0:
        raise ConvergenceError(
            f"certified collision sum {cs.s_upper:.6g} >= 1; raise n_max")
    beta2 = _solve_gamma_equals(law, target, tol)
    beta2_opt = _solve_gamma_equals(law, -math.log(cs.s_lower), tol)
    return Beta2Result(beta2, beta2_opt, False, target, cs)
