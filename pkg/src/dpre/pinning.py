"""Pinning-style kernels, the tilt exponent, renewal bounds, and chaos checks.

The comparison chain bounds fractional moments of the partition function by a
homogeneous renewal series built from the kernel K(n) = E[sum_y (point-to-point
weight at n, y)^p].  Everything here works with finite kernel tables; infinite
sums are truncated at the table length with the residual controlled through a
power-law fit of the kernel tail (the kernels decay like n^(-d(p-1)/2) at zero
tilt, so the last decade pins the fit).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaincc, gammaln

from .disorder import DisorderLaw
from .errors import ConfigError, NumericsError, RootBracketError
from .lattice import srw_slices
from .moments import mc_moment
from .polymer import batched_forward_sweep
from .seeding import hash_chain, replica_seeds

CSV_COLUMNS = ["n", "kernel_value", "stderr", "partial_sum", "p", "beta", "d"]


# ---------------------------------------------------------------------------
# kernel tables
# ---------------------------------------------------------------------------

@dataclass
class KernelTable:
    """K(n) for n = 1..N with standard errors (zero when exact)."""

    p: float
    beta: float
    d: int
    values: np.ndarray
    stderr: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.stderr = np.asarray(self.stderr, dtype=float)
        if self.values.ndim != 1 or self.values.size == 0:
            raise ConfigError("kernel table needs a nonempty value vector")
        if self.values.shape != self.stderr.shape:
            raise ConfigError("values and stderr must align")
        if np.any(self.values <= 0.0):
            raise ConfigError("kernel values must be positive")

    @property
    def n_max(self) -> int:
        return self.values.size

    def partial_sums(self) -> np.ndarray:
        return np.cumsum(self.values)

    def tail_fit(self, decades: int = 10) -> tuple[float, float]:
        """Fit K(n) ~ coeff * n^(-a) on the last decade; returns (coeff, a)."""
        n = self.n_max
        lo = max(1, n // decades)
        if n - lo < 1:
            raise ConfigError("table too short for a tail fit")
        xs = np.log(np.arange(lo, n + 1, dtype=float))
        ys = np.log(self.values[lo - 1:])
        slope, intercept = np.polyfit(xs, ys, 1)
        return float(math.exp(intercept)), float(-slope)

    def to_csv(self, path) -> None:
        partial = self.partial_sums()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(CSV_COLUMNS)
            for i, (v, s, j) in enumerate(zip(self.values, self.stderr, partial)):
                w.writerow([i + 1, repr(float(v)), repr(float(s)), repr(float(j)),
                            repr(float(self.p)), repr(float(self.beta)), self.d])

    @staticmethod
    def from_csv(path) -> "KernelTable":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        if not rows:
            raise ConfigError(f"empty kernel table file {path!r}")
        values = np.array([float(r["kernel_value"]) for r in rows])
        stderr = np.array([float(r["stderr"]) for r in rows])
        return KernelTable(p=float(rows[0]["p"]), beta=float(rows[0]["beta"]),
                           d=int(rows[0]["d"]), values=values, stderr=stderr)


def synthetic_kernel_table(values, p: float = 1.5) -> KernelTable:
    """Kernel table from explicit values (synthetic test kernels)."""
    values = np.asarray(values, dtype=float)
    return KernelTable(p=p, beta=0.0, d=0, values=values,
                       stderr=np.zeros_like(values))


def kernel_table_exact(d: int, p: float, n_max: int) -> KernelTable:
    """K(n) = sum_x P(X_n = x)^p from exact walk slices (zero-tilt kernels)."""
    if p <= 0:
        raise ConfigError("p must be positive")
    vals = np.empty(n_max)
    for n, slc in enumerate(srw_slices(d, n_max)):
        if n == 0:
            continue
        probs = slc.probs.ravel()
        nz = probs[probs > 0.0]
        vals[n - 1] = float((nz ** p).sum())
    return KernelTable(p=p, beta=0.0, d=d, values=vals,
                       stderr=np.zeros(n_max))


def kernel_table_mc(law: DisorderLaw, beta: float, d: int, p: float,
                    n_max: int, r_count: int, seed: int,
                    omega_mode: str = "stream") -> KernelTable:
    """Monte Carlo kernel table E[sum_y w_n(y)^p] for n = 1..n_max."""
    if r_count < 2:
        raise ConfigError("need at least two replicas")
    seeds = replica_seeds(seed, r_count)
    res = batched_forward_sweep(law, beta, d, n_max, seeds, marks=[],
                                power_ps=(p,), omega_mode=omega_mode)
    sums = np.exp(res.log_power_sums[p])  # (R, n_max)
    vals = sums.mean(axis=0)
    ses = sums.std(axis=0, ddof=1) / math.sqrt(r_count)
    return KernelTable(p=p, beta=beta, d=d, values=vals, stderr=ses)


def dyadic_slope(table: KernelTable, n_points: int = 4) -> float:
    """Slope of log J_N vs log N over the last n_points dyadic horizons."""
    partial = table.partial_sums()
    n = table.n_max
    ns = [n >> k for k in range(n_points)][::-1]
    if ns[0] < 1:
        raise ConfigError("table too short for the dyadic slope")
    xs = np.log(np.array(ns, dtype=float))
    ys = np.log(partial[[m - 1 for m in ns]])
    return float(np.polyfit(xs, ys, 1)[0])


# ---------------------------------------------------------------------------
# tilt exponent
# ---------------------------------------------------------------------------

def _upper_gamma(s: float, z: float) -> float:
    """Upper incomplete gamma for any real s and z > 0 (recursed into s > 0)."""
    if z <= 0:
        raise ConfigError("need z > 0")
    # the downward recurrence divides by s + k; nudge s off nonpositive
    # integers (yields a ~1e-9 relative perturbation of a tail estimate)
    if abs(s - round(s)) < 1e-9 and round(s) <= 0:
        s += 1e-9
    shift = 0
    while s + shift <= 0:
        shift += 1
    # Gamma(t, z) for t = s + shift
    t = s + shift
    val = math.exp(gammaln(t)) * float(gammaincc(t, z))
    # step down: Gamma(s, z) = (Gamma(s+1, z) - z^s e^{-z}) / s
    for k in range(shift - 1, -1, -1):
        sk = s + k
        val = (val - z ** sk * math.exp(-z)) / sk
    return val


def _tail_sum(coeff: float, a: float, n_from: int, phi: float) -> float:
    """coeff * sum_{n >= n_from} n^(-a) exp(-n phi), midpoint-integral form."""
    if coeff <= 0.0:
        return 0.0
    c = n_from - 0.5
    if phi <= 0.0:
        if a <= 1.0:
            return math.inf
        return coeff * c ** (1.0 - a) / (a - 1.0)
    # integral_c^inf x^(-a) e^(-phi x) dx = phi^(a-1) Gamma(1-a, c phi)
    return coeff * phi ** (a - 1.0) * _upper_gamma(1.0 - a, c * phi)


@dataclass
class TiltExponentResult:
    """Root of sum_n e^(-n phi) K(n) = 1/v, with its truncation accounting."""

    phi: float
    v: float
    residual: float
    tail_mode: str
    tail_coeff: float
    tail_exponent: float
    tail_at_root: float


def tilt_exponent(table: KernelTable, v: float,
                  tail: str = "fit") -> TiltExponentResult:
    """Solve the renewal-tilt equation for phi >= 0 by bisection.

    The left side sum e^(-n phi) K(n) (+ fitted tail beyond the table when
    tail="fit") is strictly decreasing in phi, and equals 1/v at the root.
    With tail="none" the sum is truncated at the table length and a missing
    positive root raises, naming the table length or v needed.
    """
    if v <= 0.0:
        raise ConfigError("v must be positive")
    vals = table.values
    ns = np.arange(1, table.n_max + 1, dtype=float)
    if tail == "fit":
        coeff, a = table.tail_fit()
    elif tail == "none":
        coeff, a = 0.0, 0.0
    else:
        raise ConfigError(f"unknown tail mode {tail!r}")

    target = 1.0 / v

    def lhs(phi: float) -> float:
        s = float((vals * np.exp(-ns * phi)).sum())
        if tail == "fit":
            s += _tail_sum(coeff, a, table.n_max + 1, phi)
        return s

    at_zero = lhs(0.0)
    if at_zero <= target:
        need_v = 1.0 / at_zero if math.isfinite(at_zero) else 0.0
        raise RootBracketError(
            f"no positive root: truncated kernel mass {at_zero:.6g} <= 1/v = "
            f"{target:.6g}; enlarge the table beyond N={table.n_max} or use "
            f"v > {need_v:.6g}")
    hi = 1.0
    while lhs(hi) > target:
        hi *= 2.0
        if hi > 1e6:
            raise NumericsError("tilt exponent bracket exploded")
    lo = 0.0
    for _ in range(220):
        mid = 0.5 * (lo + hi)
        if lhs(mid) > target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-14 * hi:
            break
    phi = 0.5 * (lo + hi)
    residual = abs(lhs(phi) - target)
    if residual > 1e-10 * target:
        raise NumericsError(
            f"tilt-exponent residual {residual:.3e} exceeds 1e-10/v")
    return TiltExponentResult(
        phi=phi, v=v, residual=residual, tail_mode=tail, tail_coeff=coeff,
        tail_exponent=a, tail_at_root=_tail_sum(coeff, a, table.n_max + 1, phi)
        if tail == "fit" else 0.0)


# ---------------------------------------------------------------------------
# renewal series
# ---------------------------------------------------------------------------

@dataclass
class RenewalBoundReport:
    """Renewal series of the tilted kernel and its exponential bound.

    log_z[m] is log of the renewal mass at m (Z_0 = 1); visit_probs is the
    independent route through the tilted kernel (a defective renewal whose
    visit probabilities cannot exceed one), and max_ratio certifies
    Z_m <= exp(phi m).
    """

    v: float
    phi: float
    log_z: np.ndarray
    visit_probs: np.ndarray
    max_ratio: float
    bound_ok: bool
    tilted_mass: float
    routes_agree: float


def renewal_series(table: KernelTable, v: float, n_max: int,
                   phi: float | None = None,
                   tail: str = "fit") -> RenewalBoundReport:
    """Renewal masses of the kernel v*K and the tilted visit probabilities.

    Two independent recursions are run: the direct one on v*K(j) (with
    rescaling against overflow) and the tilted one on v e^(-j phi) K(j);
    their agreement and the bound max_m Z_m e^(-phi m) <= 1 are reported.
    """
    if n_max > table.n_max:
        raise ConfigError(
            f"kernel table too short: have {table.n_max}, need {n_max}")
    if phi is None:
        phi = tilt_exponent(table, v, tail=tail).phi
    k = v * table.values[:n_max]
    k_tilt = k * np.exp(-phi * np.arange(1, n_max + 1))

    # tilted route: visit probabilities of a (sub)probability renewal
    rho = np.empty(n_max + 1)
    rho[0] = 1.0
    for m in range(1, n_max + 1):
        rho[m] = float((k_tilt[:m] * rho[m - 1::-1]).sum())

    # direct route in the linear domain where representable
    direct_ok = phi * n_max < 600.0
    if direct_ok:
        z_lin = np.empty(n_max + 1)
        z_lin[0] = 1.0
        for m in range(1, n_max + 1):
            z_lin[m] = float((k[:m] * z_lin[m - 1::-1]).sum())
        with np.errstate(divide="ignore"):
            log_z = np.log(z_lin)
        ratios = z_lin * np.exp(-phi * np.arange(n_max + 1))
        routes_agree = float(np.max(np.abs(ratios - rho)))
    else:
        log_z = phi * np.arange(n_max + 1) + np.log(rho)
        ratios = rho
        routes_agree = 0.0

    max_ratio = float(ratios.max())
    return RenewalBoundReport(
        v=v, phi=phi, log_z=log_z, visit_probs=rho, max_ratio=max_ratio,
        bound_ok=bool(max_ratio <= 1.0 + 1e-10),
        tilted_mass=float(k_tilt.sum()), routes_agree=routes_agree)


# ---------------------------------------------------------------------------
# the chaos upper bound (gaussian tilt splitting)
# ---------------------------------------------------------------------------

@dataclass
class ChaosBoundReport:
    """Monte Carlo left side vs renewal right side of the chaos bound.

    The gaussian tilt at sqrt(beta_base^2 + u) splits into the base field
    plus an independent sqrt(u) field; conditioning and a second-moment
    expansion bound the p-th moment by a renewal sum over collision subsets
    with weight (2u)^(p/2) per kernel factor.
    """

    passed: bool
    lhs: float
    lhs_se: float
    rhs: float
    u: float
    p: float
    beta_base: float
    beta_lhs: float
    n: int
    r_count: int
    kernel_source: str


def chaos_moment_bound_check(law: DisorderLaw, beta_base: float, u: float,
                             p: float, d: int, n: int, r_count: int,
                             seed: int,
                             kernel_table: KernelTable | None = None,
                             kernel_r: int = 2000) -> ChaosBoundReport:
    """Check E[(W at sqrt(base^2+u))^p] against the renewal upper bound.

    Exact at beta_base = 0, where the kernels are the zero-tilt walk kernels
    and E[(W_base)^p] = 1; for beta_base > 0 both enter by Monte Carlo.
    """
    if law.kind != "gaussian":
        raise ConfigError("the tilt-splitting route needs gaussian disorder")
    if not 1.0 < p <= 2.0:
        raise ConfigError("p must lie in (1, 2]")
    if not 0.0 <= u <= 1.0:
        raise ConfigError("u must lie in [0, 1] (the 2u linearization)")
    beta_lhs = math.sqrt(beta_base ** 2 + u)

    if kernel_table is None:
        if beta_base == 0.0:
            kernel_table = kernel_table_exact(d, p, n)
            source = "exact"
        else:
            kernel_table = kernel_table_mc(
                law, beta_base, d, p, n, kernel_r,
                int(hash_chain(np.uint64(seed), np.int64(11))))
            source = "mc"
    else:
        source = "given"
    if kernel_table.n_max < n:
        raise ConfigError("kernel table too short for the requested horizon")

    q = (2.0 * u) ** (0.5 * p) * kernel_table.values[:n]
    b = np.empty(n + 1)
    b[0] = 1.0
    for m in range(1, n + 1):
        b[m] = float((q[:m] * b[m - 1::-1]).sum())

    if beta_base == 0.0:
        base_moments = np.ones(n + 1)
    else:
        seeds = replica_seeds(int(hash_chain(np.uint64(seed), np.int64(12))),
                              kernel_r)
        res = batched_forward_sweep(law, beta_base, d, n, seeds,
                                    marks=list(range(n + 1)))
        base_moments = np.exp(p * res.log_w).mean(axis=0)

    rhs = float((b * base_moments[::-1]).sum())
    lhs = mc_moment(law, beta_lhs, d, n, p, r_count, seed)
    passed = lhs.estimate <= rhs + 4.0 * lhs.stderr
    return ChaosBoundReport(
        passed=passed, lhs=lhs.estimate, lhs_se=lhs.stderr, rhs=rhs, u=u, p=p,
        beta_base=beta_base, beta_lhs=beta_lhs, n=n, r_count=r_count,
        kernel_source=source)
