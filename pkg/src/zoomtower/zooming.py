"""Zooming contractions, hyperbolic/zooming time detection, orbit statistics.

Detection is exact in log space: the two hyperbolic-time inequalities reduce
to prefix-extremum comparisons of compensated cumulative sums, so flagging a
whole orbit costs O(n).  Ties count as satisfied (the defining inequalities
are non-strict) with tolerance 1e-12.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import dynamics
from .errors import UNBOUNDED, HypothesisFail, PrecisionLoss

TIE_TOL = 1e-12


# ---------------------------------------------------------------------------
# zooming contractions


@dataclass(frozen=True)
class ZoomingContraction:
    """Family alpha_n(r) with alpha_n(r) < r, alpha_n∘alpha_m <= alpha_{n+m},
    and summable supremum over r in (0,1]."""

    kind: str
    param: float = 0.0
    table: Optional[tuple] = None  # tabulated: per-n callables

    def __call__(self, n, r):
        n = np.asarray(n, dtype=float)
        r = np.asarray(r, dtype=float)
        if self.kind == "exponential":
            out = np.exp(-self.param * n / 8.0) * r
        elif self.kind == "power":
            out = self.param**n * r
        elif self.kind == "polynomial":
            out = r / (1.0 + n * np.sqrt(np.maximum(r, 0.0))) ** 2
        elif self.kind == "tabulated":
            out = np.vectorize(lambda nn, rr: self.table[int(nn) - 1](rr))(n, r)
        else:
            raise ValueError(f"unknown contraction kind {self.kind!r}")
        return float(out) if out.ndim == 0 else out

    @property
    def ratio(self):
        """Per-step factor for the homogeneous (exponential/power) kinds."""
        if self.kind == "exponential":
            return math.exp(-self.param / 8.0)
        if self.kind == "power":
            return self.param
        return None

    def series_sum(self, r, n_terms):
        ns = np.arange(1, n_terms + 1)
        return float(np.sum(self(ns, r)))

    def tail_bound(self, r, n_from):
        """Closed-form bound for sum_{n > n_from} alpha_n(r)."""
        q = self.ratio
        if q is not None:
            return r * q ** (n_from + 1) / (1.0 - q)
        if self.kind == "polynomial":
            # integral comparison: sum_{n>N} r/(1+n*sqrt(r))^2 <= sqrt(r)/(1+N*sqrt(r))
            s = math.sqrt(max(r, 0.0))
            return s / (1.0 + n_from * s) if s > 0 else 0.0
        raise ValueError("no closed-form tail for tabulated contractions")

    def subsampled(self, ell):
        """The contraction n -> alpha_{ell*n} used for the iterate f^ell."""
        if self.kind == "exponential":
            return ZoomingContraction("exponential", self.param * ell)
        if self.kind == "power":
            return ZoomingContraction("power", self.param**ell)
        outer = self
        return ZoomingContraction(
            "tabulated",
            table=tuple(
                (lambda rr, n=n: outer(ell * n, rr)) for n in range(1, 512)
            ),
        )


def exponential_contraction(lam):
    return ZoomingContraction("exponential", float(lam))


def power_contraction(c):
    if not (0 < c < 1):
        raise ValueError("power contraction needs 0 < c < 1")
    return ZoomingContraction("power", float(c))


def polynomial_contraction():
    return ZoomingContraction("polynomial")


def check_contraction_axioms(alpha, n_max=64, grid=None):
    """Verify the three axioms on a grid of radii; raises HypothesisFail."""
    rs = np.linspace(0.02, 1.0, 50) if grid is None else np.asarray(grid)
    ns = np.arange(1, n_max + 1)
    for r in rs:
        vals = alpha(ns, r)
        if not np.all(vals < r + TIE_TOL):
            raise HypothesisFail(f"alpha_n(r) >= r at r={r}")
        total = float(np.sum(vals)) + alpha.tail_bound(r, n_max)
        if not np.isfinite(total):
            raise HypothesisFail("divergent contraction series")
        for n in (1, 2, 5, 13):
            for m in (1, 3, 8):
                if alpha(n, alpha(m, r)) > alpha(n + m, r) + TIE_TOL:
                    raise HypothesisFail(f"semigroup axiom fails at n={n}, m={m}, r={r}")
    return True


# ---------------------------------------------------------------------------
# time flags


@dataclass(frozen=True)
class TimeFlags:
    """Boolean flags over times 1..n_max (index 0 is always False)."""

    kind: str
    flags: np.ndarray

    @property
    def n_max(self):
        return len(self.flags) - 1

    @property
    def counts(self):
        return np.cumsum(self.flags.astype(np.int64))

    @property
    def frequency(self):
        c = self.counts
        ns = np.maximum(np.arange(len(c)), 1)
        return c / ns

    def times(self):
        return np.nonzero(self.flags)[0]

    def first(self):
        t = self.times()
        return int(t[0]) if t.size else None


@dataclass(frozen=True)
class HyperbolicParams:
    """Constants for hyperbolic-time detection.

    b defaults to 0.4*min(1, 1/beta), strictly inside the admissible range
    0 < b < (1/2)*min(1, 1/beta).
    """

    sigma: float
    epsilon: float
    b: Optional[float] = None
    lam: Optional[float] = None
    delta: Optional[float] = None
    theta: Optional[float] = None

    def __post_init__(self):
        if not (0 < self.sigma < 1):
            raise ValueError("sigma must be in (0,1)")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")

    def resolve_b(self, beta):
        if self.b is not None:
            limit = 0.5 * min(1.0, 1.0 / beta) if beta > 0 else 0.5
            if not (0 < self.b < limit):
                raise ValueError(f"b must lie in (0, {limit})")
            return self.b
        return 0.4 * min(1.0, 1.0 / beta) if beta > 0 else 0.4

    @classmethod
    def from_rate(cls, lam, epsilon, **kw):
        """sigma = e^{-lam/4}, the convention used for expanding sets."""
        return cls(sigma=math.exp(-lam / 4.0), epsilon=epsilon, lam=lam, **kw)


def _comp_cumsum(values):
    """Cumulative sums in extended precision (prefix S[0]=0)."""
    acc = np.cumsum(np.asarray(values, dtype=np.longdouble))
    out = np.empty(len(values) + 1, dtype=np.longdouble)
    out[0] = 0.0
    out[1:] = acc
    return out


def detect_hyperbolic_times(orbit, params, beta=None, step=1):
    """Flags of (sigma, epsilon)-hyperbolic times along the orbit.

    Time n is flagged iff for every 1 <= k <= n the backward derivative
    product is <= sigma^k and the epsilon-truncated critical distance at
    step n-k is >= sigma^(b*k).  `step` detects times of the iterate
    f^step using every step-th orbit point (orders counted in f^step
    steps, derivative sums taken over blocks).
    """
    beta = orbit.system.beta if beta is None and hasattr(orbit, "system") else (beta or 0.0)
    b = params.resolve_b(beta)
    log_sigma = math.log(params.sigma)

    le = orbit.log_expansion
    cd = orbit.crit_dist
    if orbit.critical_index is not None:
        horizon = orbit.critical_index
    else:
        horizon = len(le) - 1
    n_steps = horizon // step
    if step > 1:
        block = _comp_cumsum(le[:horizon])
        logd = np.array(block[step::step] - block[:-step:step], dtype=np.longdouble)
        d = cd[: n_steps * step : step]
    else:
        logd = np.asarray(le[:n_steps], dtype=np.longdouble)
        d = cd[:n_steps]

    tdist = np.where(d <= params.epsilon, d, 1.0)
    with np.errstate(divide="ignore"):
        logtd = np.log(tdist.astype(np.longdouble))

    # condition 1:  S(n) - S(j) >= -(n-j) log sigma  for all j < n
    S = _comp_cumsum(logd)
    T = S + np.arange(len(S)) * log_sigma
    prefmax = np.maximum.accumulate(T)
    cond1 = T[1:] >= prefmax[:-1] - TIE_TOL

    # condition 2:  log dist_eps(x_j) >= b (n-j) log sigma  for all j < n
    U = logtd - b * log_sigma * np.arange(len(logtd))
    prefmin = np.minimum.accumulate(U)
    cond2 = prefmin >= -b * log_sigma * np.arange(1, len(logtd) + 1) - TIE_TOL

    flags = np.zeros(n_steps + 1, dtype=bool)
    flags[1:] = np.asarray(cond1[:n_steps] & cond2[:n_steps])
    return TimeFlags(kind=f"hyperbolic(step={step})" if step > 1 else "hyperbolic",
                     flags=flags)


def detect_zooming_times(system, x, alpha, delta, n_max, orbit=None):
    """Flags of (alpha, delta)-zooming times via certified pre-ball builds."""
    from . import preballs  # local import: preballs sits above this module

    if orbit is None:
        orbit = dynamics.iterate(system, x, n_max, on_critical="truncate")
    flags = np.zeros(n_max + 1, dtype=bool)
    for n in range(1, n_max + 1):
        try:
            preballs.build_preball(system, x, n, delta, alpha, orbit=orbit)
        except Exception:
            continue
        flags[n] = True
    return TimeFlags(kind="zooming", flags=flags)


def detect_zooming_times_shift(system, word, alpha=None, n_max=None):
    """Zooming flags for a one-sided shift: every cylinder is a pre-ball.

    For the polynomial metric the contraction identity
    d(sigma^j x, sigma^j y) = alpha_{n-j}(d(sigma^n x, sigma^n y)) is exact;
    for the standard metric the per-step factor is exactly 1/2.  The flags
    are certified by checking the identity on companion words.
    """
    cap = len(word) - 1 if n_max is None else min(n_max, len(word) - 1)
    if alpha is None:
        alpha = (polynomial_contraction() if system.metric_kind == "polynomial"
                 else power_contraction(0.5))
    flags = np.zeros(cap + 1, dtype=bool)
    for n in range(1, cap + 1):
        companion = tuple(word[:n]) + tuple(
            1 - s if i == 0 else s for i, s in enumerate(word[n:])
        )
        ok = True
        dn = dynamics.symbolic_distance(system, dynamics.shift_word(word, n),
                                        dynamics.shift_word(companion, n))
        for j in range(n):
            dj = dynamics.symbolic_distance(system, dynamics.shift_word(word, j),
                                            dynamics.shift_word(companion, j))
            if dj > alpha(n - j, dn) + TIE_TOL:
                ok = False
                break
        flags[n] = ok
    return TimeFlags(kind="zooming-shift", flags=flags)


# ---------------------------------------------------------------------------
# frequency and recurrence statistics


@dataclass(frozen=True)
class FrequencyReport:
    theta: float
    qualifying: np.ndarray       # times n with count(n) >= theta * n
    largest_prefix_frequency: float
    limsup_estimate: float       # max prefix frequency on a geometric grid

    @property
    def qualifies_somewhere(self):
        return self.qualifying.size > 0


def frequency_stats(flags, theta):
    """Membership report for the theta-frequency sets along the orbit."""
    counts = flags.counts
    ns = np.arange(1, len(counts))
    qual = ns[counts[1:] >= theta * ns - TIE_TOL]
    freq = counts[1:] / ns
    grid = []
    k = 0
    while True:
        n = int(1.25**k)
        if n >= len(ns) + 1:
            break
        if n >= 1:
            grid.append(n)
        k += 1
    grid = sorted(set(grid))
    limsup = float(np.max(freq[np.array(grid) - 1])) if grid else 0.0
    return FrequencyReport(
        theta=theta,
        qualifying=qual,
        largest_prefix_frequency=float(np.max(freq)) if freq.size else 0.0,
        limsup_estimate=limsup,
    )


def slow_approximation_stat(orbit, delta):
    """s_n = (1/n) sum_{j<n} -log dist_delta(f^j x, C), n = 1..len."""
    d = orbit.crit_dist[:-1] if len(orbit.crit_dist) > 1 else orbit.crit_dist
    td = np.where(d <= delta, d, 1.0)
    with np.errstate(divide="ignore"):
        neg = -np.log(td)
    sums = np.cumsum(neg.astype(np.longdouble))
    return np.asarray(sums / np.arange(1, len(sums) + 1), dtype=float)


def expansion_stat(orbit, upto=None):
    """Running Birkhoff averages e_n of the log-expansion channel."""
    horizon = orbit.n if upto is None else upto
    orbit.require_derivatives(min(horizon, orbit.n) - 1 if horizon else 0)
    le = orbit.log_expansion[:horizon]
    sums = np.cumsum(le.astype(np.longdouble))
    return np.asarray(sums / np.arange(1, len(sums) + 1), dtype=float)


def first_expanding_moment(orbit, lam, r, epsilon):
    """h(x): first j > 0 with average log-expansion >= lam and average
    truncated recurrence <= r; UNBOUNDED if none within the orbit."""
    horizon = orbit.n if orbit.critical_index is None else orbit.critical_index
    if horizon < 1:
        return UNBOUNDED
    le = orbit.log_expansion[:horizon]
    d = orbit.crit_dist[:horizon]
    td = np.where(d <= epsilon, d, 1.0)
    with np.errstate(divide="ignore"):
        rec = -np.log(td)
    js = np.arange(1, horizon + 1)
    e_avg = np.cumsum(le.astype(np.longdouble)) / js
    r_avg = np.cumsum(rec.astype(np.longdouble)) / js
    ok = (e_avg >= lam - TIE_TOL) & (r_avg <= r + TIE_TOL)
    idx = np.nonzero(ok)[0]
    return int(idx[0] + 1) if idx.size else UNBOUNDED


def check_transport_inequality(orbit, m, delta, K=None):
    """Slow-approximation transport from f to F = f^m:

        sum_{j<n} -log dist_{delta/K^m}(F^j x, C_F)
            <= 2 sum_{j<mn} -log dist_delta(f^j x, C)

    checked for every available prefix n.  C_F is the union of f-preimages
    of C of orders 0..m-1, enumerated through the branch inverses.
    """
    from . import preballs

    system = orbit.system
    if K is None:
        K = system.max_abs_deriv
    if not delta < K**-m:
        raise ValueError(f"need delta < K^-m = {K**-m:.3g}")
    crit_f = list(system.critical)
    level = list(system.critical)
    for _ in range(m - 1):
        level = [q for c in level for q in preballs.point_preimages(system, c)]
        if len(level) > 4096:
            raise PrecisionLoss("critical pullback enumeration exceeded cap")
        crit_f.extend(level)

    n_blocks = orbit.n // m
    if n_blocks < 1:
        raise ValueError("orbit shorter than one f^m block")
    pts_F = orbit.points[: n_blocks * m : m]
    from . import regions

    dF = regions.dist_to_set(system.domain, pts_F, crit_f)
    trunc_F = np.where(dF <= delta / K**m, dF, 1.0)
    with np.errstate(divide="ignore"):
        lhs_terms = -np.log(trunc_F)
    d = orbit.crit_dist[: n_blocks * m]
    trunc = np.where(d <= delta, d, 1.0)
    with np.errstate(divide="ignore"):
        rhs_terms = -np.log(trunc)
    lhs = np.cumsum(lhs_terms)
    rhs = 2.0 * np.cumsum(rhs_terms)
    return bool(np.all(lhs <= rhs[m - 1 :: m] + TIE_TOL))


# ---------------------------------------------------------------------------
# the ell-iterate calculus


def compute_ell(lam):
    """Minimal integer ell with ell >= 16*log(3)/lam.

    Certifies the geometric bound sum_{n>=1} e^{-lam*ell*n/8} <= 1/8
    (the ratio is at most 1/9).
    """
    if lam <= 0:
        raise ValueError("lam must be positive")
    ell = math.ceil(16.0 * math.log(3.0) / lam)
    q = math.exp(-lam * ell / 8.0)
    if q / (1.0 - q) > 0.125 + TIE_TOL:
        raise HypothesisFail("geometric certificate failed; lam too small?")
    return ell


def ell_by_scan(alpha, radii, target=0.125, ell_max=4096, n_terms=512):
    """Minimal ell with sum_n alpha_{ell n}(r) <= target * r for all given r."""
    for ell in range(1, ell_max + 1):
        sub = alpha.subsampled(ell)
        ok = all(
            sub.series_sum(r, n_terms) + sub.tail_bound(r, n_terms) <= target * r + TIE_TOL
            for r in radii
        )
        if ok:
            return ell
    raise HypothesisFail(f"no ell <= {ell_max} satisfies the summability target")


def sub_collection_filter(flags, ell):
    """Flags of the iterate: output n is set iff input ell*n was set."""
    if ell < 1:
        raise ValueError("ell must be >= 1")
    n_out = flags.n_max // ell
    out = np.zeros(n_out + 1, dtype=bool)
    out[1:] = flags.flags[ell : ell * n_out + 1 : ell]
    return TimeFlags(kind=f"{flags.kind}/x{ell}", flags=out)
