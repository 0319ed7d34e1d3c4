"""Piecewise-monotone 1D dynamics and symbolic shifts.

A map is a list of monotone branches given by closed-form lift expressions.
Circle maps store continuous lifts (values may exceed 1); a point evaluation
wraps mod 1.  Derivatives and, where available, branch inverses are declared
alongside the expressions - there is no automatic differentiation.
"""

import ast
import configparser
import io
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import kernels, regions
from .errors import ConfigError, CriticalHit, PrecisionLoss, UndefinedDerivative

SNAP_TOL = 1e-13
CRIT_TOL = 1e-13


# ---------------------------------------------------------------------------
# expression mini-grammar for user map configs


_ALLOWED_CALLS = {
    "sin": np.sin,
    "cos": np.cos,
    "abs": np.abs,
    "mod1": lambda v: v - np.floor(v),
    "sqrt": np.sqrt,
}
_ALLOWED_NAMES = {"x", "pi"} | set(_ALLOWED_CALLS)
_ALLOWED_NODES = (
    ast.Expression,
    ast.BinOp,
    ast.UnaryOp,
    ast.Constant,
    ast.Name,
    ast.Call,
    ast.Load,
    ast.Add,
    ast.Sub,
    ast.Mult,
    ast.Div,
    ast.Pow,
    ast.USub,
    ast.UAdd,
)


def compile_expr(src):
    """Compile an expression in x (arith ops, powers, sin/cos/abs/sqrt/mod1)."""
    try:
        tree = ast.parse(src, mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"cannot parse expression {src!r}: {exc}") from None
    for node in ast.walk(tree):
        if not isinstance(node, _ALLOWED_NODES):
            raise ConfigError(f"disallowed syntax {type(node).__name__} in {src!r}")
        if isinstance(node, ast.Name) and node.id not in _ALLOWED_NAMES:
            raise ConfigError(f"unknown name {node.id!r} in {src!r}")
        if isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in _ALLOWED_CALLS:
                raise ConfigError(f"disallowed call in {src!r}")
            if node.keywords or len(node.args) != 1:
                raise ConfigError(f"calls take a single argument in {src!r}")
        if isinstance(node, ast.Constant) and not isinstance(node.value, (int, float)):
            raise ConfigError(f"non-numeric constant in {src!r}")
    code = compile(tree, "<map-expr>", "eval")
    env = dict(_ALLOWED_CALLS)
    env["pi"] = np.pi

    def fn(x):
        local = dict(env)
        local["x"] = x
        out = eval(code, {"__builtins__": {}}, local)  # noqa: S307 - whitelisted AST
        return np.broadcast_to(np.asarray(out, dtype=float), np.shape(x)).copy() if np.ndim(x) else float(out)

    fn.src = src
    return fn


# ---------------------------------------------------------------------------
# branches and map systems


@dataclass(frozen=True)
class Branch:
    """One monotone piece of the lift: continuous on [lo, hi], f' of one sign."""

    lo: float
    hi: float
    fn: Callable
    dfn: Callable
    inv: Optional[Callable] = None
    d2fn: Optional[Callable] = None

    @property
    def increasing(self):
        return self.fn(self.hi) >= self.fn(self.lo)

    @property
    def image(self):
        a, b = self.fn(self.lo), self.fn(self.hi)
        return (a, b) if a <= b else (b, a)

    def invert(self, values, tol=1e-13):
        """Preimages of lift values inside [lo, hi] (bisection + polish)."""
        values = np.asarray(values, dtype=float)
        scalar = values.ndim == 0
        v = np.atleast_1d(values)
        if self.inv is not None:
            out = np.asarray(self.inv(v), dtype=float)
        else:
            lo = np.full(v.shape, self.lo)
            hi = np.full(v.shape, self.hi)
            if not self.increasing:
                lo, hi = hi, lo
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                smaller = self.fn(mid) < v
                lo = np.where(smaller, mid, lo)
                hi = np.where(smaller, hi, mid)
            out = 0.5 * (lo + hi)
            for _ in range(2):
                d = self.dfn(out)
                step = np.where(np.abs(d) > 1e-300, (self.fn(out) - v) / d, 0.0)
                out = np.clip(out - step, self.lo, self.hi)
        out = np.clip(out, self.lo, self.hi)
        err = np.max(np.abs(self.fn(out) - v)) if out.size else 0.0
        if err > 1e-9:
            raise PrecisionLoss(f"branch inversion residual {err:.3g}")
        return float(out[0]) if scalar else out


@dataclass(frozen=True)
class MapSystem:
    """Piecewise-monotone self-map of [0,1] or the circle R/Z."""

    name: str
    domain: str
    branches: tuple
    critical: tuple = ()
    beta: float = 0.0
    b_const: float = 1.0
    kernel_id: Optional[int] = None
    kernel_param: float = 0.0
    degree: Optional[int] = None  # lift displacement for circle covers

    def __post_init__(self):
        lefts = [b.lo for b in self.branches]
        if lefts != sorted(lefts):
            raise ValueError("branches must be ordered left to right")
        object.__setattr__(self, "_lefts", np.array(lefts))

    # -- point/branch machinery ------------------------------------------

    def snap(self, x):
        """Snap values within SNAP_TOL of a branch endpoint onto it."""
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        out = np.atleast_1d(x).copy()
        if self.domain == regions.CIRCLE:
            out = regions.wrap(out)
        ends = {b.lo for b in self.branches} | {b.hi for b in self.branches}
        for e in sorted(ends):
            out[np.abs(out - e) <= SNAP_TOL] = e
        if self.domain == regions.CIRCLE:
            out[out >= 1.0] = 0.0
        else:
            out = np.clip(out, 0.0, 1.0)
        return float(out[0]) if scalar else out

    def branch_index(self, x):
        """Index of the branch containing x (boundary points go to the branch
        starting there, except at the right end of the domain)."""
        x = self.snap(x)
        arr = np.atleast_1d(np.asarray(x, dtype=float))
        idx = np.searchsorted(self._lefts, arr, side="right") - 1
        idx = np.clip(idx, 0, len(self.branches) - 1)
        last = self.branches[-1]
        idx[arr >= last.hi] = len(self.branches) - 1
        return int(idx[0]) if np.ndim(x) == 0 else idx

    def lift(self, x):
        """Continuous lift value(s); vectorized over points."""
        x = self.snap(x)
        arr = np.atleast_1d(np.asarray(x, dtype=float))
        idx = np.atleast_1d(self.branch_index(arr))
        out = np.empty_like(arr)
        for i, b in enumerate(self.branches):
            m = idx == i
            if np.any(m):
                out[m] = b.fn(arr[m])
        return float(out[0]) if np.ndim(x) == 0 else out

    def apply(self, x):
        """f(x) as a point of the domain."""
        y = self.lift(x)
        if self.domain == regions.CIRCLE:
            return regions.wrap(y)
        return np.clip(y, 0.0, 1.0)

    def abs_deriv(self, x):
        x = self.snap(x)
        arr = np.atleast_1d(np.asarray(x, dtype=float))
        idx = np.atleast_1d(self.branch_index(arr))
        out = np.empty_like(arr)
        for i, b in enumerate(self.branches):
            m = idx == i
            if np.any(m):
                out[m] = np.abs(b.dfn(arr[m]))
        return float(out[0]) if np.ndim(x) == 0 else out

    def crit_dist(self, x):
        return regions.dist_to_set(self.domain, np.asarray(x, dtype=float), self.critical)

    @property
    def max_abs_deriv(self):
        xs = np.linspace(0, 1, 4097)[:-1]
        return float(np.max(self.abs_deriv(xs)))


@dataclass(frozen=True)
class OrbitRecord:
    """Orbit of length n+1 with derivative, critical-distance and branch channels.

    log_expansion[j] is log of the inverse of the inverse-derivative norm at
    f^j(x) - in one dimension simply log|f'(f^j(x))|.  Channels are NaN from
    the first critical hit onward; `critical_index` marks it.
    """

    system: MapSystem
    start: float
    points: np.ndarray
    log_expansion: np.ndarray
    crit_dist: np.ndarray
    branches: np.ndarray
    critical_index: Optional[int] = None

    def __post_init__(self):
        n = len(self.points)
        if not (len(self.log_expansion) == len(self.crit_dist) == len(self.branches) == n):
            raise ValueError("orbit channels must have equal length")

    @property
    def n(self):
        return len(self.points) - 1

    def require_derivatives(self, upto):
        if self.critical_index is not None and self.critical_index <= upto:
            raise UndefinedDerivative(
                f"derivative channel undefined from step {self.critical_index}"
            )
        if upto > self.n:
            raise UndefinedDerivative(f"orbit holds {self.n} steps, {upto} requested")


def iterate(system, x, n, on_critical="raise"):
    """Orbit record of x, f(x), ..., f^n(x).

    Raises CriticalHit when some orbit point lies within machine tolerance
    of the critical set (on_critical="truncate" records the index instead;
    the derivative channel is NaN from there on).
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    x0 = system.snap(float(x))
    if system.kernel_id is not None:
        pts = kernels.orbit_points(system.kernel_id, system.kernel_param, x0, n)
        if system.domain == regions.INTERVAL:
            np.clip(pts, 0.0, 1.0, out=pts)
    else:
        pts = np.empty(n + 1)
        cur = x0
        for j in range(n + 1):
            pts[j] = cur
            if j < n:
                cur = float(system.apply(cur))
    cd = np.atleast_1d(system.crit_dist(pts))
    hit = np.nonzero(cd <= CRIT_TOL)[0]
    crit_index = int(hit[0]) if hit.size else None
    if crit_index is not None and on_critical == "raise":
        raise CriticalHit(crit_index, float(pts[crit_index]))
    with np.errstate(divide="ignore"):
        logd = np.log(system.abs_deriv(pts))
    if crit_index is not None:
        logd[crit_index:] = np.nan
    return OrbitRecord(
        system=system,
        start=x0,
        points=pts,
        log_expansion=np.atleast_1d(logd),
        crit_dist=cd,
        branches=np.atleast_1d(system.branch_index(pts)),
        critical_index=crit_index,
    )


def truncated_distance(system, x, delta):
    """delta-truncated distance to the critical set: dist if <= delta, else 1."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    d = system.crit_dist(x)
    return np.where(d <= delta, d, 1.0) if np.ndim(d) else (d if d <= delta else 1.0)


# ---------------------------------------------------------------------------
# shipped maps


def _affine_branch(lo, hi, slope, offset):
    return Branch(
        lo=lo,
        hi=hi,
        fn=lambda x, s=slope, o=offset: s * np.asarray(x, dtype=float) + o,
        dfn=lambda x, s=slope: np.full_like(np.asarray(x, dtype=float), float(s)),
        inv=lambda v, s=slope, o=offset: (np.asarray(v, dtype=float) - o) / s,
        d2fn=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
    )


def times_m(m, name=None):
    """x -> m*x mod 1 on the circle, as a single-branch lift of degree m."""
    m = int(m)
    if m < 2:
        raise ValueError("need m >= 2")
    return MapSystem(
        name=name or f"times{m}",
        domain=regions.CIRCLE,
        branches=(_affine_branch(0.0, 1.0, float(m), 0.0),),
        critical=(),
        beta=0.0,
        b_const=float(m),
        kernel_id=kernels.KID_TIMES_M,
        kernel_param=float(m),
        degree=m,
    )


def doubling():
    return times_m(2, name="doubling")


def tent():
    return MapSystem(
        name="tent",
        domain=regions.INTERVAL,
        branches=(
            _affine_branch(0.0, 0.5, 2.0, 0.0),
            _affine_branch(0.5, 1.0, -2.0, 2.0),
        ),
        critical=(),
        beta=0.0,
        b_const=2.0,
        kernel_id=kernels.KID_TENT,
        kernel_param=0.0,
    )


def logistic(a=4.0):
    a = float(a)
    if not (0 < a <= 4):
        raise ValueError("logistic parameter must be in (0, 4]")

    def up(v, a=a):
        return 0.5 * (1.0 - np.sqrt(np.maximum(1.0 - 4.0 * np.asarray(v, dtype=float) / a, 0.0)))

    def down(v, a=a):
        return 0.5 * (1.0 + np.sqrt(np.maximum(1.0 - 4.0 * np.asarray(v, dtype=float) / a, 0.0)))

    fn = lambda x: a * np.asarray(x, dtype=float) * (1.0 - np.asarray(x, dtype=float))
    dfn = lambda x: a * (1.0 - 2.0 * np.asarray(x, dtype=float))
    d2 = lambda x: np.full_like(np.asarray(x, dtype=float), -2.0 * a)
    return MapSystem(
        name=f"logistic(a={a:g})",
        domain=regions.INTERVAL,
        branches=(
            Branch(0.0, 0.5, fn, dfn, inv=up, d2fn=d2),
            Branch(0.5, 1.0, fn, dfn, inv=down, d2fn=d2),
        ),
        critical=(0.5,),
        beta=1.0,
        b_const=2.0 * a,
        kernel_id=kernels.KID_LOGISTIC,
        kernel_param=a,
    )


def circle_neutral():
    """Smooth degree-two circle map with an indifferent fixed point at 0.

    Lower branch x + 2x^2; upper branch glued so the lift is continuous and
    increasing with displacement 2.  Lebesgue-typical orbits have zero
    Lyapunov exponent while expanding invariant measures abound.
    """

    def f_lo(x):
        x = np.asarray(x, dtype=float)
        return x + 2.0 * x * x

    def f_hi(x):
        x = np.asarray(x, dtype=float)
        return 1.0 + x - 2.0 * (1.0 - x) * (1.0 - x)

    def inv_lo(v):
        v = np.asarray(v, dtype=float)
        return 0.25 * (np.sqrt(1.0 + 8.0 * v) - 1.0)

    def inv_hi(v):
        v = np.asarray(v, dtype=float)
        return 1.0 - 0.25 * (np.sqrt(17.0 - 8.0 * v) - 1.0)

    return MapSystem(
        name="circle_neutral",
        domain=regions.CIRCLE,
        branches=(
            Branch(0.0, 0.5, f_lo, lambda x: 1.0 + 4.0 * np.asarray(x, dtype=float), inv=inv_lo,
                   d2fn=lambda x: np.full_like(np.asarray(x, dtype=float), 4.0)),
            Branch(0.5, 1.0, f_hi, lambda x: 1.0 + 4.0 * (1.0 - np.asarray(x, dtype=float)), inv=inv_hi,
                   d2fn=lambda x: np.full_like(np.asarray(x, dtype=float), -4.0)),
        ),
        critical=(),
        beta=0.0,
        b_const=3.0,
        kernel_id=kernels.KID_CIRCLE_NEUTRAL,
        kernel_param=0.0,
        degree=2,
    )


_REGISTRY = {
    "doubling": doubling,
    "times3": lambda: times_m(3),
    "times8": lambda: times_m(8),
    "tent": tent,
    "logistic": logistic,
    "circle_neutral": circle_neutral,
}


def get_map(name, **params):
    if name.startswith("times") and name[5:].isdigit():
        return times_m(int(name[5:]))
    try:
        factory = _REGISTRY[name]
    except KeyError:
        raise ConfigError(f"unknown map {name!r}; shipped: {sorted(_REGISTRY)}") from None
    return factory(**params)


# ---------------------------------------------------------------------------
# declarative map configs


def parse_map_config(text):
    """Build a MapSystem from the [map]/[branch.i]/[critical] config grammar."""
    cp = configparser.ConfigParser(comment_prefixes=("#",), inline_comment_prefixes=("#",))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"bad map config: {exc}") from None
    if "map" not in cp:
        raise ConfigError("missing [map] section", section="map")
    sec = cp["map"]
    domain = sec.get("domain", "interval").strip()
    if domain not in (regions.CIRCLE, regions.INTERVAL):
        raise ConfigError(f"domain must be circle or interval, got {domain!r}",
                          section="map", key="domain")
    name = sec.get("name", "custom").strip()
    beta = float(sec.get("beta", "0"))
    b_const = float(sec.get("B", "1"))
    critical = ()
    if "critical" in cp and cp["critical"].get("points", "").strip():
        critical = tuple(
            float(tok) for tok in cp["critical"]["points"].replace(",", " ").split()
        )
    branch_secs = sorted(
        (s for s in cp.sections() if s.startswith("branch.")),
        key=lambda s: int(s.split(".", 1)[1]),
    )
    if not branch_secs:
        raise ConfigError("no [branch.i] sections")
    branches = []
    for s in branch_secs:
        bs = cp[s]
        try:
            lo, hi = (float(tok) for tok in bs["interval"].replace(",", " ").split())
        except (KeyError, ValueError):
            raise ConfigError("branch interval must be two numbers", section=s,
                              key="interval") from None
        if "expr" not in bs or "deriv" not in bs:
            raise ConfigError("branch needs expr and deriv", section=s)
        fn = compile_expr(bs["expr"])
        dfn = compile_expr(bs["deriv"])
        inv = compile_expr(bs["inverse"]) if "inverse" in bs else None
        d2 = compile_expr(bs["deriv2"]) if "deriv2" in bs else None
        if inv is not None:
            raw_inv = inv
            inv = lambda v, g=raw_inv: g(np.asarray(v, dtype=float))
        branches.append(Branch(lo, hi, fn, dfn, inv=inv, d2fn=d2))
    sys_ = MapSystem(
        name=name, domain=domain, branches=tuple(branches),
        critical=critical, beta=beta, b_const=b_const,
    )
    _validate_map(sys_)
    return sys_


def _validate_map(system):
    lo = system.branches[0].lo
    hi = system.branches[-1].hi
    if abs(lo) > 1e-12 or abs(hi - 1.0) > 1e-12:
        raise ConfigError("branch closures must cover [0,1]")
    for a, b in zip(system.branches[:-1], system.branches[1:]):
        if b.lo - a.hi > 1e-12:
            raise ConfigError(f"gap between branches at {a.hi}")
        if b.lo < a.hi - 1e-12:
            raise ConfigError(f"overlapping branches at {b.lo}")
    for b in system.branches:
        xs = np.linspace(b.lo, b.hi, 257)[1:-1]
        d = b.dfn(xs)
        if np.any(d == 0) or (np.any(d > 0) and np.any(d < 0)):
            raise ConfigError(f"branch on [{b.lo},{b.hi}] is not strictly monotone")


# ---------------------------------------------------------------------------
# symbolic shifts


@dataclass(frozen=True)
class SymbolicSystem:
    """One-sided full shift with the standard (2^-n) or polynomial metric."""

    alphabet_size: int = 2
    metric_kind: str = "polynomial"
    word_cap: int = 64

    def __post_init__(self):
        if self.metric_kind not in ("standard", "polynomial"):
            raise ValueError("metric_kind must be 'standard' or 'polynomial'")

    def check_word(self, w):
        if len(w) > self.word_cap:
            raise ValueError(f"word longer than cap {self.word_cap}")
        if any(not (0 <= s < self.alphabet_size) for s in w):
            raise ValueError("symbol outside alphabet")


def shift_word(w, j=1):
    return tuple(w[j:])


def first_difference(x, y):
    """phi(x,y): 1-based index of the first differing symbol; None if equal."""
    for i, (a, b) in enumerate(zip(x, y)):
        if a != b:
            return i + 1
    return None


def symbolic_distance(system, x, y):
    system.check_word(x)
    system.check_word(y)
    if len(x) != len(y):
        raise ValueError("words must have equal length")
    phi = first_difference(x, y)
    if phi is None:
        return 0.0
    if system.metric_kind == "polynomial":
        return phi ** -2.0
    return float(sum(abs(a - b) * 2.0 ** -(i + 1) for i, (a, b) in enumerate(zip(x, y))))


def conformal_derivative(system, x):
    """Local expansion factor of the shift in the chosen metric.

    Exact by the metric formulas: ratios d(sigma x, sigma y)/d(x, y) over
    words agreeing to depth m are 2 identically (standard) and (m/(m-1))^2
    -> 1 (polynomial); the limit is returned.
    """
    if len(x) < 2:
        raise ValueError("need a word of length >= 2")
    system.check_word(x)
    if system.metric_kind == "standard":
        return 2.0
    return 1.0


# ---------------------------------------------------------------------------
# Viana-type skew product (orbit statistics only; no pre-ball geometry)


@dataclass(frozen=True)
class VianaMap:
    """Skew product (s,x) -> (d*s mod 1, a0 + alpha*sin(2*pi*s) - x^2)."""

    a0: float = 1.7945
    alpha: float = 1e-3
    d: int = 16

    @property
    def name(self):
        return f"viana(a0={self.a0:g}, alpha={self.alpha:g}, d={self.d})"

    def orbit(self, s0, x0, n):
        s = np.empty(n + 1)
        x = np.empty(n + 1)
        s[0], x[0] = s0 % 1.0, x0
        for j in range(n):
            s[j + 1] = (self.d * s[j]) % 1.0
            x[j + 1] = self.a0 + self.alpha * np.sin(2 * np.pi * s[j]) - x[j] * x[j]
        # smallest singular value of DF = [[d, 0], [c, b]]
        c = 2 * np.pi * self.alpha * np.cos(2 * np.pi * s)
        b = -2.0 * x
        tr = self.d**2 + c * c + b * b
        disc = np.sqrt(np.maximum(tr * tr - 4.0 * (self.d * b) ** 2, 0.0))
        sigma_min = np.sqrt(np.maximum(0.5 * (tr - disc), 0.0))
        with np.errstate(divide="ignore"):
            log_exp = np.log(sigma_min)
        return SkewOrbit(points=np.stack([s, x], axis=1),
                         log_expansion=log_exp, crit_dist=np.abs(x))


@dataclass(frozen=True)
class SkewOrbit:
    """Minimal orbit-statistics record for 2D skew products."""

    points: np.ndarray
    log_expansion: np.ndarray
    crit_dist: np.ndarray
    critical_index: Optional[int] = None

    @property
    def n(self):
        return len(self.log_expansion) - 1

    def require_derivatives(self, upto):
        if upto > self.n:
            raise UndefinedDerivative(f"orbit holds {self.n} steps, {upto} requested")
