"""Certified inverse-branch pull-back and zooming pre-balls.

A pull-back follows the branch itinerary of a known orbit.  On the circle
the shipped maps are continuous increasing covers, so endpoint inversion
goes through the global lift (integer shifts tracked explicitly, arcs may
cross the seam); on the interval the target must stay inside each branch
image or the pull-back fails with BranchEscape.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import dynamics, kernels, regions
from .errors import BranchEscape, NotAZoomingTime, UndefinedJacobian

CERT_SLACK = 1e-9
IMAGE_TOL = 1e-10


@dataclass(frozen=True)
class InverseBranchPath:
    """Branch indices b_0..b_{n-1} visited by x, f(x), ..., f^{n-1}(x)."""

    branches: tuple

    @property
    def order(self):
        return len(self.branches)


def path_for_orbit(orbit, n):
    return InverseBranchPath(tuple(int(b) for b in orbit.branches[:n]))


@dataclass(frozen=True)
class PreBall:
    """Interval V_n(x) sent homeomorphically onto the ball B_delta(f^n(x))."""

    base: float
    order: int
    interval: regions.Arc
    image: regions.Arc
    contraction_cert: float
    path: InverseBranchPath
    cert_kind: str = "sampled"


def _is_increasing_cover(system):
    return (
        system.domain == regions.CIRCLE
        and system.degree is not None
        and all(b.increasing for b in system.branches)
    )


def global_lift_invert(system, v):
    """Inverse of the real-line lift of an increasing circle cover."""
    deg = system.degree
    f0 = float(system.branches[0].fn(system.branches[0].lo))
    v = np.asarray(v, dtype=float)
    scalar = v.ndim == 0
    vv = np.atleast_1d(v).astype(float)
    j = np.floor((vv - f0) / deg)
    base = vv - j * deg
    out = np.empty_like(base)
    done = np.zeros(base.shape, dtype=bool)
    for b in system.branches:
        c, d = b.image
        m = ~done & (base >= c - IMAGE_TOL) & (base <= d + IMAGE_TOL)
        if np.any(m):
            out[m] = b.invert(np.clip(base[m], c, d))
            done[m] = True
    if not np.all(done):
        raise BranchEscape("lift value outside the cover image")
    res = out + j
    return float(res[0]) if scalar else res


def _pull_arc_once(system, branch_idx, arc, anchor):
    """The connected preimage of `arc` under f containing `anchor`."""
    b = system.branches[branch_idx]
    if system.domain == regions.CIRCLE:
        t = float(b.fn(anchor))
        k = math.floor(t - arc.lo)
        if t - k > arc.hi + IMAGE_TOL:
            k += 1
        if not (arc.lo - IMAGE_TOL <= t - k <= arc.hi + IMAGE_TOL):
            raise BranchEscape("anchor image not inside the target arc")
        vlo, vhi = arc.lo + k, arc.hi + k
        c, d = b.image
        if vlo >= c - IMAGE_TOL and vhi <= d + IMAGE_TOL:
            xlo = b.invert(min(max(vlo, c), d))
            xhi = b.invert(min(max(vhi, c), d))
        elif _is_increasing_cover(system):
            xlo = global_lift_invert(system, vlo)
            xhi = global_lift_invert(system, vhi)
        else:
            raise BranchEscape("target arc leaves the branch image")
        lo, hi = (xlo, xhi) if xlo <= xhi else (xhi, xlo)
        w = regions.wrap(lo)
        return regions.Arc(w, w + (hi - lo))
    c, d = b.image
    if arc.lo < c - IMAGE_TOL or arc.hi > d + IMAGE_TOL:
        raise BranchEscape("target leaves the branch image")
    xa = b.invert(min(max(arc.lo, c), d))
    xb = b.invert(min(max(arc.hi, c), d))
    lo, hi = (xa, xb) if xa <= xb else (xb, xa)
    return regions.Arc(lo, hi)


def pull_back(system, path, target, anchors=None):
    """Interval W with f^n(W) = target along the itinerary (n = path order).

    `anchors` are the orbit points x, f(x), ..., f^{n-1}(x); when omitted
    they are reconstructed from branch midpoints, which only works if the
    target stays inside single branches.
    """
    arc = target
    n = path.order
    for j in reversed(range(n)):
        anchor = anchors[j] if anchors is not None else system.branches[path.branches[j]].lo
        if anchors is None and system.domain == regions.CIRCLE:
            b = system.branches[path.branches[j]]
            anchor = 0.5 * (b.lo + b.hi)
        arc = _pull_arc_once(system, path.branches[j], arc, anchor)
    return arc


def pull_back_points(system, path, values, with_jacobian=False):
    """Pull point values back through the itinerary (vectorized).

    Returns preimages, and with with_jacobian=True also the log of
    |(f^n)'| evaluated at the preimages (chain rule over the path).
    """
    v = np.asarray(values, dtype=float)
    scalar = v.ndim == 0
    cur = np.atleast_1d(v).astype(float)
    circle = system.domain == regions.CIRCLE
    for j in reversed(range(path.order)):
        b = system.branches[path.branches[j]]
        c, d = b.image
        if circle:
            if _is_increasing_cover(system):
                span = regions.wrap(cur)
                # choose the lift representative inside this branch image
                k = np.floor(span - c)
                lift = span - np.floor(span) + np.ceil(c - (span - np.floor(span)))
                lift = span + np.ceil(c - span)  # smallest representative >= c
                lift = np.where(lift > d + IMAGE_TOL, lift - 1.0, lift)
                m_in = (lift >= c - IMAGE_TOL) & (lift <= d + IMAGE_TOL)
                if np.all(m_in):
                    cur = b.invert(np.clip(lift, c, d))
                else:
                    cur = global_lift_invert(system, np.where(m_in, lift, span))
                    cur = regions.wrap(cur)
            else:
                lift = regions.wrap(cur) + np.ceil(c - regions.wrap(cur))
                if np.any(lift < c - IMAGE_TOL) or np.any(lift > d + IMAGE_TOL):
                    raise BranchEscape("point leaves branch image")
                cur = b.invert(np.clip(lift, c, d))
        else:
            if np.any(cur < c - IMAGE_TOL) or np.any(cur > d + IMAGE_TOL):
                raise BranchEscape("point leaves branch image")
            cur = b.invert(np.clip(cur, c, d))
        cur = np.atleast_1d(cur)
    if with_jacobian:
        logj = np.zeros_like(cur)
        pts = cur.copy()
        for j in range(path.order):
            b = system.branches[path.branches[j]]
            logj += np.log(np.abs(b.dfn(pts)))
            pts = b.fn(pts)
            if circle:
                pts = regions.wrap(np.atleast_1d(pts))
        if scalar:
            return float(cur[0]), float(logj[0])
        return cur, logj
    return float(cur[0]) if scalar else cur


def _forward_orbits(system, points, n):
    """Orbit matrix (len(points), n+1) using the fast kernel when available."""
    pts = np.asarray(points, dtype=float)
    if system.kernel_id is not None:
        return kernels.orbit_points_many(system.kernel_id, system.kernel_param, pts, n)
    out = np.empty((len(pts), n + 1))
    cur = pts.copy()
    for j in range(n + 1):
        out[:, j] = cur
        if j < n:
            cur = np.atleast_1d(system.apply(cur))
    return out


def build_preball(system, x, n, delta, alpha, orbit=None, grid_points=17,
                  step=1, slack=CERT_SLACK):
    """Construct and certify the zooming pre-ball V_n(x).

    The backward-contraction condition is checked on a grid of
    `grid_points` forward orbits (adjacent pairs plus the endpoint pair);
    the certificate is the worst ratio dist_j / alpha_{n-j}(dist_n) and
    must not exceed 1 + slack.  With step=ell only multiples of ell are
    checked, against the subsampled contraction (pre-balls of the
    iterate f^ell).
    """
    if n < 1:
        raise ValueError("order must be >= 1")
    if orbit is None:
        orbit = dynamics.iterate(system, x, n, on_critical="truncate")
    if orbit.critical_index is not None and orbit.critical_index <= n:
        raise NotAZoomingTime(f"orbit hits the critical set before step {n}")
    if orbit.n < n:
        raise ValueError("orbit too short")
    target = regions.ball(system.domain, float(orbit.points[n]), delta)
    path = path_for_orbit(orbit, n)
    try:
        V = pull_back(system, path, target, anchors=orbit.points[:n])
    except BranchEscape as exc:
        raise NotAZoomingTime(f"pull-back escaped a branch: {exc}") from None

    grid = np.linspace(V.lo, V.hi, grid_points)
    grid_pts = regions.wrap(grid) if system.domain == regions.CIRCLE else grid
    orbits = _forward_orbits(system, grid_pts, n)

    # homeomorphism: endpoints of V must land on the endpoints of the target
    end_vals = np.sort(regions.to_chart(system.domain, target, orbits[[0, -1], n]))
    if abs(end_vals[0]) > 1e-8 or abs(end_vals[1] - target.length) > 1e-8:
        raise NotAZoomingTime("endpoints do not map onto the ball boundary")

    pair_idx = [(i, i + 1) for i in range(grid_points - 1)] + [(0, grid_points - 1)]
    checks = range(step, n + 1, step) if step > 1 else range(1, n + 1)
    worst = 0.0
    sub = alpha.subsampled(step) if step > 1 else alpha
    for (i, k) in pair_idx:
        d_n = regions.dist(system.domain, orbits[i, n], orbits[k, n])
        if d_n <= 0:
            continue
        for j in checks:
            if j == n:
                continue
            d_j = regions.dist(system.domain, orbits[i, j], orbits[k, j])
            bound = sub((n - j) // step if step > 1 else n - j, d_n)
            ratio = d_j / bound if bound > 0 else np.inf
            worst = max(worst, float(ratio))
        d_0 = regions.dist(system.domain, orbits[i, 0], orbits[k, 0])
        bound0 = sub(n // step if step > 1 else n, d_n)
        worst = max(worst, float(d_0 / bound0 if bound0 > 0 else np.inf))
    if worst > 1.0 + slack:
        raise NotAZoomingTime(f"contraction certificate {worst:.6g} > 1")
    return PreBall(base=float(orbit.points[0]), order=n, interval=V,
                   image=target, contraction_cert=worst, path=path)


def distortion_estimate(system, preball, jacobian=None, grid_points=33):
    """Distortion constant rho of f^n over the pre-ball:

        |log J f^n(p) - log J f^n(q)| <= rho * dist(f^n p, f^n q)

    maximized over sampled pairs.  `jacobian` maps points to J_mu f
    (default Lebesgue: |f'|); exactly 0 for affine maps under Lebesgue.
    """
    V = preball.interval
    n = preball.order
    grid = np.linspace(V.lo, V.hi, grid_points)
    pts = regions.wrap(grid) if system.domain == regions.CIRCLE else grid
    orbits = _forward_orbits(system, pts, n)
    if jacobian is None:
        jac = lambda x: system.abs_deriv(x)
    else:
        jac = jacobian
    vals = np.asarray(jac(orbits[:, :n].ravel()), dtype=float).reshape(grid_points, n)
    if np.any(~np.isfinite(vals)) or np.any(vals <= 0):
        raise UndefinedJacobian("Jacobian vanishes or is undefined on the pre-ball")
    logj = np.sum(np.log(vals), axis=1)
    rho = 0.0
    for i in range(grid_points):
        for k in range(i + 1, grid_points):
            d = regions.dist(system.domain, orbits[i, n], orbits[k, n])
            if d > 1e-15:
                rho = max(rho, abs(logj[i] - logj[k]) / d)
    return float(rho)


# ---------------------------------------------------------------------------
# preimage enumeration


def point_preimages(system, y, tol=1e-11):
    """All solutions of f(x) = y, via per-branch inversion."""
    out = []
    for b in system.branches:
        c, d = b.image
        if system.domain == regions.CIRCLE:
            k0 = math.ceil(c - regions.wrap(y) - tol)
            k1 = math.floor(d - regions.wrap(y) + tol)
            for k in range(k0, k1 + 1):
                v = regions.wrap(y) + k
                if c - tol <= v <= d + tol:
                    out.append(regions.wrap(b.invert(min(max(v, c), d))))
        else:
            if c - tol <= y <= d + tol:
                out.append(float(b.invert(min(max(y, c), d))))
    uniq = []
    for x in sorted(out):
        if not uniq or abs(x - uniq[-1]) > tol:
            uniq.append(x)
    return uniq


def enumerate_preimages(system, target, order, max_count=2_000_000):
    """All regular preimages of `target` of exactly the given order.

    Exhaustive inverse-branch tree, vectorized level by level; used as the
    brute-force oracle against the anchored boundary-orbit search.  Returns
    a list of Arcs.
    """
    level = [target]
    for _ in range(order):
        nxt = []
        los = np.array([a.lo for a in level])
        lens = np.array([a.length for a in level])
        for bi, b in enumerate(system.branches):
            c, d = b.image
            if system.domain == regions.CIRCLE:
                base = regions.wrap(los)
                k0 = np.ceil(c - base - IMAGE_TOL).astype(int)
                k1 = np.floor(d - (base + lens) + IMAGE_TOL).astype(int)
                for a_i in range(len(level)):
                    for k in range(k0[a_i], k1[a_i] + 1):
                        vlo = base[a_i] + k
                        vhi = vlo + lens[a_i]
                        xa = b.invert(min(max(vlo, c), d))
                        xb = b.invert(min(max(vhi, c), d))
                        lo, hi = (xa, xb) if xa <= xb else (xb, xa)
                        w = regions.wrap(lo)
                        nxt.append(regions.Arc(w, w + (hi - lo)))
            else:
                mask = (los >= c - IMAGE_TOL) & (los + lens <= d + IMAGE_TOL)
                idx = np.nonzero(mask)[0]
                if idx.size:
                    va = np.clip(los[idx], c, d)
                    vb = np.clip(los[idx] + lens[idx], c, d)
                    xa = np.atleast_1d(b.invert(va))
                    xb = np.atleast_1d(b.invert(vb))
                    lo = np.minimum(xa, xb)
                    hi = np.maximum(xa, xb)
                    nxt.extend(regions.Arc(float(l), float(h)) for l, h in zip(lo, hi))
        if len(nxt) > max_count:
            raise MemoryError(f"preimage enumeration exceeded {max_count} nodes")
        level = nxt
    return level
