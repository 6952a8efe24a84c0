"""Disorder laws, exponential tilts, and convex-order coupling machinery.

The site variables are i.i.d. mean-zero with exponential moments of all
orders.  Three families are supported: standard Gaussian, Rademacher, and
finite-support tables.  Everything downstream consumes a law through its
log-MGF, its quantile function, and a small set of expectations
(positive parts, truncated moments) that are evaluated exactly for discrete
laws and by composite Gauss-Legendre quadrature for the Gaussian.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import erfc, ndtri

from .errors import ConfigError
from .seeding import hash_chain, uniform_from_bits

_WIN = 42.0  # Gaussian mass beyond 42 sigmas is ~1e-385; quadrature window half-width


# ---------------------------------------------------------------------------
# quadrature backbone (Gaussian laws only)
# ---------------------------------------------------------------------------

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(24)


def _gauss_expect(f: Callable[[np.ndarray], np.ndarray], lo: float, hi: float) -> float:
    """integral of f(w) * standard normal density over [lo, hi].

    Composite 24-point Gauss-Legendre on panels of width <= 1; the integrands
    used here are entire functions times the normal density, for which this
    converges far below 1e-12 relative.  Callers clip [lo, hi] to the window
    where the (possibly tilted) integrand carries mass.
    """
    if hi <= lo:
        return 0.0
    n_panels = max(1, int(math.ceil(hi - lo)))
    edges = np.linspace(lo, hi, n_panels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    w = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
    wt = (half[:, None] * _GL_WEIGHTS[None, :]).ravel()
    dens = np.exp(-0.5 * w * w) / math.sqrt(2.0 * math.pi)
    return float(np.sum(f(w) * dens * wt))


# ---------------------------------------------------------------------------
# disorder laws
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DisorderLaw:
    """Mean-zero site disorder with finite log-MGF everywhere.

    kind is one of "gaussian", "rademacher", "table".  Table laws carry an
    explicit finite support; the other two keep support/probs empty.
    """

    kind: str
    support: np.ndarray = field(default_factory=lambda: np.empty(0))
    probs: np.ndarray = field(default_factory=lambda: np.empty(0))

    # -- construction -------------------------------------------------------

    @staticmethod
    def gaussian() -> "DisorderLaw":
        return DisorderLaw("gaussian")

    @staticmethod
    def rademacher() -> "DisorderLaw":
        return DisorderLaw("rademacher")

    @staticmethod
    def table(support: Sequence[float], probs: Sequence[float]) -> "DisorderLaw":
        s = np.asarray(support, dtype=float)
        p = np.asarray(probs, dtype=float)
        if s.ndim != 1 or s.shape != p.shape or s.size == 0:
            raise ConfigError("table law needs matching 1-d support and probs")
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
            raise ConfigError("table probabilities must be nonnegative and sum to 1")
        p = p / p.sum()
        order = np.argsort(s)
        s, p = s[order], p[order]
        m = float(np.dot(s, p))
        if abs(m) > 1e-9:
            raise ConfigError(f"disorder must be centered; table mean is {m:g}")
        if float(np.dot(s * s, p)) <= 0.0:
            raise ConfigError("degenerate table law (zero variance)")
        return DisorderLaw("table", s, p)

    # -- basic functionals ---------------------------------------------------

    def log_mgf(self, beta: float) -> float:
        """log E[exp(beta * omega)]; finite for every real beta."""
        if not math.isfinite(beta):
            raise ConfigError("beta must be finite")
        if self.kind == "gaussian":
            return 0.5 * beta * beta
        if self.kind == "rademacher":
            # log cosh, overflow-safe
            ab = abs(beta)
            return ab + math.log1p(math.exp(-2.0 * ab)) - math.log(2.0)
        z = beta * self.support
        zmax = float(np.max(z))
        return zmax + math.log(float(np.dot(self.probs, np.exp(z - zmax))))

    def log_mgf_prime(self, beta: float) -> float:
        """d/dbeta of the log-MGF (the tilted mean)."""
        if self.kind == "gaussian":
            return beta
        if self.kind == "rademacher":
            return math.tanh(beta)
        z = beta * self.support
        z -= z.max()
        e = self.probs * np.exp(z)
        return float(np.dot(self.support, e) / e.sum())

    def log_mgf_quadrature(self, beta: float, half_width: float = _WIN) -> float:
        """Numeric log-MGF, independent of the closed forms (cross-check path).

        Discrete laws reduce to their exact finite sums; the Gaussian goes
        through quadrature with relative error far below 1e-10.
        """
        if self.kind == "gaussian":
            val = _gauss_expect(lambda w: np.exp(beta * w - abs(beta) * half_width),
                                -half_width, abs(beta) + half_width)
            return math.log(val) + abs(beta) * half_width
        return self.log_mgf(beta)

    def variance(self) -> float:
        if self.kind == "gaussian":
            return 1.0
        if self.kind == "rademacher":
            return 1.0
        return float(np.dot(self.support**2, self.probs))

    def abs_mean(self) -> float:
        """E|omega|."""
        if self.kind == "gaussian":
            return math.sqrt(2.0 / math.pi)
        if self.kind == "rademacher":
            return 1.0
        return float(np.dot(np.abs(self.support), self.probs))

    def tail_prob(self, t: float) -> float:
        """P(omega >= t)."""
        if self.kind == "gaussian":
            return 0.5 * erfc(t / math.sqrt(2.0))
        if self.kind == "rademacher":
            if t <= -1.0:
                return 1.0
            return 0.5 if t <= 1.0 else 0.0
        return float(self.probs[self.support >= t].sum())

    def ess_sup(self) -> float:
        """Essential supremum of omega (inf for the Gaussian)."""
        if self.kind == "gaussian":
            return math.inf
        if self.kind == "rademacher":
            return 1.0
        return float(self.support[-1])

    def ppf(self, u: np.ndarray) -> np.ndarray:
        """Quantile function, vectorized; u must lie strictly in (0, 1)."""
        if self.kind == "gaussian":
            return ndtri(u)
        if self.kind == "rademacher":
            return np.where(u < 0.5, -1.0, 1.0)
        cum = np.cumsum(self.probs)
        idx = np.searchsorted(cum, u, side="left")
        return self.support[np.minimum(idx, self.support.size - 1)]

    def expect(self, f, lo: float = -math.inf, hi: float = math.inf,
               growth: float = 0.0, include_lo: bool = True,
               include_hi: bool = True) -> float:
        """E[f(omega); lo <= omega <= hi].

        growth hints the exponential rate of f so the Gaussian quadrature
        window can cover the tilted bulk.  Boundary inclusion only matters
        for laws with atoms.
        """
        if self.kind == "gaussian":
            return _gauss_expect(f, max(lo, min(0.0, growth) - _WIN),
                                 min(hi, max(0.0, growth) + _WIN))
        if self.kind == "rademacher":
            s, p = np.array([-1.0, 1.0]), np.array([0.5, 0.5])
        else:
            s, p = self.support, self.probs
        m_lo = (s >= lo) if include_lo else (s > lo)
        m_hi = (s <= hi) if include_hi else (s < hi)
        m = m_lo & m_hi
        if not np.any(m):
            return 0.0
        return float(np.dot(np.atleast_1d(f(s[m])), p[m]))


def parse_law(spec) -> DisorderLaw:
    """Build a law from config text or a mapping.

    Accepted forms: "gaussian", "rademacher", or a mapping/inline table
    {support = [...], probs = [...]}.
    """
    if isinstance(spec, DisorderLaw):
        return spec
    if isinstance(spec, str):
        text = spec.strip()
        low = text.lower()
        if low == "gaussian":
            return DisorderLaw.gaussian()
        if low == "rademacher":
            return DisorderLaw.rademacher()
        if text.startswith("{"):
            import tomli

            try:
                data = tomli.loads("law = " + text)["law"]
            except tomli.TOMLDecodeError as exc:
                raise ConfigError(f"cannot parse law spec {text!r}: {exc}") from exc
            return parse_law(data)
        raise ConfigError(f"unknown law {spec!r}")
    if isinstance(spec, dict):
        if set(spec) != {"support", "probs"}:
            raise ConfigError("table law mapping must have exactly support and probs")
        return DisorderLaw.table(spec["support"], spec["probs"])
    raise ConfigError(f"unsupported law spec {spec!r}")


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

def log_mgf(law: DisorderLaw, beta: float) -> float:
    """log E[exp(beta * omega)] (module-level convenience)."""
    return law.log_mgf(beta)


def sample_omega(law: DisorderLaw, rng: np.random.Generator, size=None) -> np.ndarray:
    if law.kind == "gaussian":
        return rng.standard_normal(size)
    return law.ppf(rng.random(size))


def sample_tilted_weight(law: DisorderLaw, beta: float,
                         rng: np.random.Generator, size=None) -> np.ndarray:
    """Draws of exp(beta * omega - logMGF(beta)); the population mean is 1."""
    if not math.isfinite(beta):
        raise ConfigError("beta must be finite")
    lam = law.log_mgf(beta)
    return np.exp(beta * sample_omega(law, rng, size) - lam)


def sample_spread_factor(v: float, rng: np.random.Generator, size=None) -> np.ndarray:
    """Unit-mean spread variable: atom v at 0, atom 1-3v at 1, density 6v r^-4 on (1, inf).

    Second moment is 1 + 3v.  The continuous part is drawn by inverse
    transform, r = (1 - U)^(-1/3).
    """
    if not 0.0 <= v <= 1.0 / 3.0 + 1e-15:
        raise ConfigError(f"spread parameter v={v} outside [0, 1/3]")
    u = rng.random(size)
    out = np.ones_like(u)
    out[u < v] = 0.0
    dens = u >= 1.0 - 2.0 * v
    if np.any(dens):
        u_cond = (u[dens] - (1.0 - 2.0 * v)) / (2.0 * v)
        out[dens] = (1.0 - u_cond) ** (-1.0 / 3.0)
    return out


# ---------------------------------------------------------------------------
# scalar distributions with exact positive-part expectations
# ---------------------------------------------------------------------------

class TiltedWeightDist:
    """Law of exp(beta*omega - logMGF(beta)) for omega ~ law, beta > 0."""

    def __init__(self, law: DisorderLaw, beta: float):
        if beta < 0:
            raise ConfigError("tilted weight defined for beta >= 0")
        self.law = law
        self.beta = float(beta)
        self.lam = law.log_mgf(beta)

    def mean(self) -> float:
        return 1.0

    def moment(self, q: float) -> float:
        return math.exp(self.law.log_mgf(q * self.beta) - q * self.lam)

    def _omega_at(self, x: float) -> float:
        # omega level where the weight equals x
        return (math.log(x) + self.lam) / self.beta

    def tail_prob(self, x: float) -> float:
        """P(weight >= x)."""
        if x <= 0:
            return 1.0
        if self.beta == 0.0:
            return 1.0 if x <= 1.0 else 0.0
        return self.law.tail_prob(self._omega_at(x))

    def positive_part_mean(self, a: float) -> float:
        """E[(Z - a)_+], the convex-order test function."""
        if a <= 0:
            return 1.0 - a
        if self.beta == 0.0:
            return max(1.0 - a, 0.0)
        w_a = self._omega_at(a)
        b, lam = self.beta, self.lam
        return self.law.expect(lambda w: np.exp(b * w - lam) - a, lo=w_a,
                               growth=b)

    def partial_mean_above(self, a: float) -> float:
        """E[Z; Z >= a]."""
        if a <= 0:
            return 1.0
        if self.beta == 0.0:
            return 1.0 if a <= 1.0 else 0.0
        b, lam = self.beta, self.lam
        return self.law.expect(lambda w: np.exp(b * w - lam),
                               lo=self._omega_at(a), growth=b)

    def third_moment_below(self, x: float) -> float:
        """E[Z^3; Z < x]."""
        if x <= 0:
            return 0.0
        if self.beta == 0.0:
            return 1.0 if x > 1.0 else 0.0
        b, lam = self.beta, self.lam
        return self.law.expect(lambda w: np.exp(3.0 * (b * w - lam)),
                               hi=self._omega_at(x), growth=3.0 * b,
                               include_hi=False)


class SpreadProductDist:
    """Law of (tilted weight) * (independent spread factor Z_v); mean one."""

    def __init__(self, tilted: TiltedWeightDist, v: float):
        if not 0.0 <= v <= 1.0 / 3.0 + 1e-15:
            raise ConfigError(f"spread parameter v={v} outside [0, 1/3]")
        self.tilted = tilted
        self.v = float(v)

    def mean(self) -> float:
        return 1.0

    def positive_part_mean(self, a: float) -> float:
        # Conditioning on the spread factor: the r-integral against 6 r^-4
        # collapses to 3z - 2a on {z >= a} and z^3/a^2 on {z < a}.
        t, v = self.tilted, self.v
        if a <= 0:
            return 1.0 - a
        base = t.positive_part_mean(a)
        heavy = 3.0 * t.partial_mean_above(a) - 2.0 * a * t.tail_prob(a)
        light = t.third_moment_below(a) / (a * a)
        return (1.0 - 3.0 * v) * base + v * (heavy + light)


class DiscreteDist:
    """Finite-support scalar distribution (convex-order test fixtures)."""

    def __init__(self, support, probs):
        self.support = np.asarray(support, dtype=float)
        self.probs = np.asarray(probs, dtype=float)
        if abs(self.probs.sum() - 1.0) > 1e-12:
            raise ConfigError("probs must sum to 1")

    def mean(self) -> float:
        return float(np.dot(self.support, self.probs))

    def positive_part_mean(self, a: float) -> float:
        return float(np.dot(np.maximum(self.support - a, 0.0), self.probs))


class EmpiricalDist:
    """Sample-based distribution; expectations carry standard errors."""

    def __init__(self, samples):
        self.samples = np.asarray(samples, dtype=float)
        if self.samples.size < 2:
            raise ConfigError("need at least two samples")

    def mean(self) -> float:
        return float(self.samples.mean())

    def mean_se(self) -> float:
        return float(self.samples.std(ddof=1) / math.sqrt(self.samples.size))

    def positive_part_mean(self, a: float) -> tuple[float, float]:
        y = np.maximum(self.samples - a, 0.0)
        return float(y.mean()), float(y.std(ddof=1) / math.sqrt(y.size))


# ---------------------------------------------------------------------------
# convex order
# ---------------------------------------------------------------------------

@dataclass
class ConvexOrderReport:
    passed: bool
    max_violation: float
    worst_a: float
    a_grid: np.ndarray
    gaps: np.ndarray
    allowances: np.ndarray
    mean_gap: float
    mode: str
    tolerance: float


def _ppm(dist, a: float) -> tuple[float, float]:
    out = dist.positive_part_mean(a)
    if isinstance(out, tuple):
        return out
    return out, 0.0


def convex_order_check(dist_lo, dist_hi, a_grid, tolerance: float = 1e-9,
                       mean_tolerance: float | None = None,
                       se_factor: float = 4.0) -> ConvexOrderReport:
    """Check dist_lo <= dist_hi in the convex order via positive parts.

    Dominance of equal-mean laws is equivalent to E[(Z_lo - a)_+] <=
    E[(Z_hi - a)_+] for every a; the check evaluates both sides on a_grid and
    reports the largest allowance-adjusted violation.  Empirical inputs get a
    se_factor * (combined standard error) allowance per grid point; analytic
    inputs get none.  Unequal means are rejected outright.
    """
    a_grid = np.asarray(a_grid, dtype=float)
    if a_grid.size == 0:
        raise ConfigError("a_grid must be nonempty")
    empirical = isinstance(dist_lo, EmpiricalDist) or isinstance(dist_hi, EmpiricalDist)
    mean_lo, mean_hi = dist_lo.mean(), dist_hi.mean()
    mean_gap = mean_hi - mean_lo
    if mean_tolerance is None:
        mean_tolerance = max(tolerance, 1e-8)
        if empirical:
            se = 0.0
            for d in (dist_lo, dist_hi):
                if isinstance(d, EmpiricalDist):
                    se += d.mean_se()
            mean_tolerance += se_factor * se
    if abs(mean_gap) > mean_tolerance:
        raise ConfigError(
            f"convex order undefined for unequal means (gap {mean_gap:.3e})")

    gaps = np.empty_like(a_grid)
    allow = np.zeros_like(a_grid)
    for i, a in enumerate(a_grid):
        lo_val, lo_se = _ppm(dist_lo, a)
        hi_val, hi_se = _ppm(dist_hi, a)
        gaps[i] = lo_val - hi_val
        allow[i] = se_factor * (lo_se + hi_se)
    adjusted = gaps - allow
    worst = int(np.argmax(adjusted))
    max_violation = float(adjusted[worst])
    return ConvexOrderReport(
        passed=bool(max_violation <= tolerance),
        max_violation=max_violation,
        worst_a=float(a_grid[worst]),
        a_grid=a_grid,
        gaps=gaps,
        allowances=allow,
        mean_gap=mean_gap,
        mode="empirical" if empirical else "quadrature",
        tolerance=tolerance,
    )


# ---------------------------------------------------------------------------
# the coupling ratio and its sup
# ---------------------------------------------------------------------------

@dataclass
class CouplingRatioReport:
    sup: float
    argmax: float
    grid_max: float
    left_tail_bound: float
    right_tail_bound: float
    certified: bool
    notes: str
    x_lo: float
    x_hi: float
    x_grid: np.ndarray = field(repr=False, default=None)
    values: np.ndarray = field(repr=False, default=None)


def coupling_ratio_sup(law: DisorderLaw, beta: float,
                       x_grid: np.ndarray | None = None,
                       points_per_decade: int = 40) -> CouplingRatioReport:
    """Numeric sup over x > 0 of the tilt-versus-spread comparison ratio.

    The ratio has numerator min(x, P(omega_+ >= log x / (beta+1))^(1/2)) and
    denominator x P(Z >= x) + E[Z^3; Z < x] / (6 x^2) with Z the tilted
    weight at beta.  Finiteness of the sup is what makes the explicit
    coupling (tilted weight times spread factor) dominate the tilt increase
    in convex order; the sup feeds the coupling constant.

    Tails are controlled analytically: the ratio is at most 1/P(Z >= x_lo)
    below the grid, and beyond the grid the numerator tail is either zero
    (bounded laws) or dominated by the Gaussian tail bound.  If the grid is
    too short for the right tail to be provably decreasing, the result is
    flagged uncertified.
    """
    if beta <= 0:
        raise ConfigError("coupling ratio needs beta > 0")
    tilted = TiltedWeightDist(law, beta)
    bp1 = beta + 1.0

    def numerator(x: float) -> float:
        t = math.log(x) / bp1
        tail = 1.0 if t <= 0 else law.tail_prob(t)
        return min(x, math.sqrt(tail))

    def denominator(x: float) -> float:
        return x * tilted.tail_prob(x) + tilted.third_moment_below(x) / (6.0 * x * x)

    if x_grid is None:
        x_lo = 1e-8
        if math.isfinite(law.ess_sup()):
            x_hi = math.exp(bp1 * law.ess_sup() + 2.0)
        else:
            # the Gaussian ratio peaks near log x = 4 (beta+1)^2 and its tail
            # bound only decays visibly beyond ~8 (beta+1)^2; cover both
            x_hi = math.exp(max(math.log(1e8), 12.0 * bp1 * bp1 + 2.0))
        n_pts = int(points_per_decade * math.log10(x_hi / x_lo)) + 1
        x_grid = np.exp(np.linspace(math.log(x_lo), math.log(x_hi), n_pts))
    else:
        x_grid = np.asarray(x_grid, dtype=float)
        x_lo, x_hi = float(x_grid.min()), float(x_grid.max())

    vals = np.array([numerator(x) / denominator(x) for x in x_grid])
    i_max = int(np.argmax(vals))
    grid_max = float(vals[i_max])

    left_bound = 1.0 / tilted.tail_prob(x_lo)
    t_hi = math.log(x_hi) / bp1
    third_floor = tilted.third_moment_below(x_hi)
    notes = []
    certified = True
    if math.isfinite(law.ess_sup()) and t_hi > law.ess_sup():
        right_bound = 0.0
    elif law.kind == "gaussian":
        # P(omega >= t) <= exp(-t^2/2); the resulting bound on the ratio is
        # decreasing in x once log x >= 4 (beta+1)^2.
        right_bound = 6.0 * x_hi**2 * math.exp(-0.25 * t_hi * t_hi) / third_floor
        if math.log(x_hi) < 4.0 * bp1 * bp1:
            certified = False
            notes.append("grid too short: gaussian right-tail bound not yet decreasing")
    else:
        right_bound = 6.0 * x_hi**2 * math.sqrt(law.tail_prob(t_hi)) / third_floor
        certified = False
        notes.append("no analytic right-tail certificate for this law")
    if i_max in (0, x_grid.size - 1):
        certified = False
        notes.append("ratio maximized at grid boundary")

    sup = max(grid_max, left_bound, right_bound)
    return CouplingRatioReport(
        sup=float(sup), argmax=float(x_grid[i_max]), grid_max=grid_max,
        left_tail_bound=float(left_bound), right_tail_bound=float(right_bound),
        certified=certified, notes="; ".join(notes), x_lo=x_lo, x_hi=x_hi,
        x_grid=x_grid, values=vals,
    )


@dataclass
class CouplingConstants:
    """Computed constants for the coupling Y_u = (spread at C*u) of a tilt step.

    C is the product of the comparison-ratio sup with the explicit amplitude
    max(A, B), where A^2 = E[omega_+^2 exp(2(beta+1) omega_+)] and
    B = logMGF'(beta+1) + E|omega|.  The coupling is valid for tilt
    increments u in [0, u_max] with u_max = min(1, 1/(3C)) so that the spread
    parameter v = C*u stays within [0, 1/3].
    """

    beta: float
    amplitude: float
    ratio_sup: float
    C: float
    u_max: float
    ratio_report: CouplingRatioReport


def coupling_constants(law: DisorderLaw, beta: float,
                       x_grid: np.ndarray | None = None) -> CouplingConstants:
    report = coupling_ratio_sup(law, beta, x_grid=x_grid)
    bp1 = beta + 1.0
    a_sq = law.expect(lambda w: w * w * np.exp(2.0 * bp1 * w), lo=0.0,
                      growth=2.0 * bp1, include_lo=False)
    amp = max(math.sqrt(a_sq), law.log_mgf_prime(bp1) + law.abs_mean())
    c = amp * report.sup
    return CouplingConstants(
        beta=beta, amplitude=amp, ratio_sup=report.sup, C=c,
        u_max=min(1.0, 1.0 / (3.0 * c)), ratio_report=report,
    )


# ---------------------------------------------------------------------------
# environments
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Environment:
    """One realization of the disorder field on a space-time cone.

    Values are produced lazily by counter hashing of (seed, layer, site), so
    the field needs no storage, identical addresses always return identical
    values, and shifting is a pure re-addressing.
    """

    law: DisorderLaw
    d: int
    horizon: int
    seed: int
    k_offset: int = 0
    x_offset: tuple = ()

    def __post_init__(self):
        if self.d < 1:
            raise ConfigError("dimension must be >= 1")
        if self.horizon < 0:
            raise ConfigError("horizon must be >= 0")
        if not self.x_offset:
            object.__setattr__(self, "x_offset", (0,) * self.d)

    def omega(self, k, x, validate: bool = True) -> np.ndarray:
        """Disorder values at layer(s) k and site(s) x (last axis indexes d)."""
        k = np.asarray(k, dtype=np.int64)
        x = np.asarray(x, dtype=np.int64)
        if x.shape[-1] != self.d:
            raise ConfigError(f"site coordinates must have last axis {self.d}")
        k_eff = k + self.k_offset
        x_eff = x + np.asarray(self.x_offset, dtype=np.int64)
        if validate:
            l1 = np.abs(x_eff).sum(axis=-1)
            if np.any(k_eff < 1) or np.any(k_eff > self.horizon):
                raise ConfigError("layer index outside the environment horizon")
            if np.any(l1 > k_eff) or np.any((l1 - k_eff) % 2 != 0):
                raise ConfigError("site outside the parity-matched cone")
        h = hash_chain(np.uint64(self.seed), k_eff,
                       *(x_eff[..., i] for i in range(self.d)))
        return self.law.ppf(uniform_from_bits(h))

    def tilted_weight(self, beta: float, k, x, validate: bool = True) -> np.ndarray:
        lam = self.law.log_mgf(beta)
        return np.exp(beta * self.omega(k, x, validate=validate) - lam)

    def shift(self, k0: int, z) -> "Environment":
        """Re-addressed view: (k, x) of the shifted field is (k + k0, x + z) here."""
        z = tuple(int(c) for c in np.atleast_1d(z))
        if len(z) != self.d:
            raise ConfigError("shift vector must have length d")
        return Environment(self.law, self.d, self.horizon, self.seed,
                           self.k_offset + int(k0),
                           tuple(a + b for a, b in zip(self.x_offset, z)))


def sample_environment(law: DisorderLaw, d: int, n: int, seed: int) -> Environment:
    """Seed-addressable disorder field covering layers 1..n."""
    return Environment(law=law, d=d, horizon=n, seed=int(seed))
