"""One-dimensional set algebra on the interval [0,1] and the circle R/Z.

Arcs are stored as (lo, hi) with hi > lo.  On the circle lo is normalized
to [0,1) and hi may exceed 1 to encode an arc crossing the seam; arc
length never exceeds 1.  All subtraction / component work happens in a
local chart relative to a host arc, which keeps the circle case exact.
"""

from dataclasses import dataclass

import numpy as np

CIRCLE = "circle"
INTERVAL = "interval"

_MERGE_TOL = 1e-12


def wrap(x):
    return x - np.floor(x)


def dist(domain, x, y):
    if domain == CIRCLE:
        d = np.abs(wrap(x) - wrap(y))
        return np.minimum(d, 1.0 - d)
    return np.abs(x - y)


def dist_to_set(domain, x, points):
    """Distance from x (scalar or array) to a finite point set; inf if empty."""
    x = np.asarray(x, dtype=float)
    if len(points) == 0:
        return np.full(x.shape, np.inf) if x.shape else np.inf
    ds = [dist(domain, x, p) for p in points]
    out = np.minimum.reduce(ds)
    return out if x.shape else float(out)


@dataclass(frozen=True)
class Arc:
    """Open arc/interval (lo, hi), hi > lo; circle arcs may have hi > 1."""

    lo: float
    hi: float

    @property
    def length(self):
        return self.hi - self.lo

    @property
    def mid(self):
        return self.lo + 0.5 * (self.hi - self.lo)

    def __repr__(self):
        return f"Arc({self.lo:.12g}, {self.hi:.12g})"


def ball(domain, center, radius):
    if radius <= 0:
        raise ValueError("ball radius must be positive")
    if domain == CIRCLE:
        if 2 * radius >= 1:
            raise ValueError("circle ball needs radius < 1/2")
        lo = wrap(center - radius)
        return Arc(lo, lo + 2 * radius)
    return Arc(max(0.0, center - radius), min(1.0, center + radius))


def to_chart(domain, host, x):
    """Coordinate of x in the chart [0, host.length] anchored at host.lo.

    On the circle the representative closest to the host is chosen, so
    points slightly outside the host get coordinates < 0 or > length.
    """
    if domain == CIRCLE:
        t = wrap(np.asarray(x, dtype=float) - host.lo)
        # pull representatives near the far side back below zero
        L = host.length
        t = np.where(t > 0.5 * (1.0 + L), t - 1.0, t)
        return t if t.shape else float(t)
    return np.asarray(x, dtype=float) - host.lo if np.ndim(x) else x - host.lo


def contains_point(domain, arc, x, closed=False, tol=0.0):
    t = to_chart(domain, arc, x)
    if closed:
        return (t >= -tol) & (t <= arc.length + tol) if np.ndim(t) else (-tol <= t <= arc.length + tol)
    return (t > tol) & (t < arc.length - tol) if np.ndim(t) else (tol < t < arc.length - tol)


def _endpoints_inside(domain, outer, inner, tol):
    """How many endpoints of `inner` lie strictly inside `outer`."""
    n = 0
    for e in (inner.lo, inner.hi):
        if contains_point(domain, outer, e, closed=False, tol=tol):
            n += 1
    return n


def is_linked(domain, a1, a2, tol=_MERGE_TOL):
    """Linked = overlapping with neither contained in the other.

    For connected 1D sets this is equivalent to each arc containing at
    least one endpoint of the other in its interior.
    """
    return (
        _endpoints_inside(domain, a1, a2, tol) >= 1
        and _endpoints_inside(domain, a2, a1, tol) >= 1
    )


def is_subset(domain, inner, outer, tol=_MERGE_TOL):
    """Closure-insensitive containment test: inner ⊆ outer up to tol."""
    lo = to_chart(domain, outer, inner.lo)
    if not (-tol <= lo <= outer.length + tol):
        return False
    return inner.length <= outer.length - lo + tol


def intersects(domain, a1, a2, tol=_MERGE_TOL):
    if is_subset(domain, a1, a2, tol) or is_subset(domain, a2, a1, tol):
        return True
    return (
        _endpoints_inside(domain, a1, a2, -tol) >= 1
        or _endpoints_inside(domain, a2, a1, -tol) >= 1
    )


def subtract_closed(domain, host, pieces, keep_point=None):
    """host minus the closure of the union of `pieces`.

    Returns the list of open component arcs; if keep_point is given,
    returns (components, index of the component containing it or None).
    """
    L = host.length
    segs = []
    for p in pieces:
        lo = to_chart(domain, host, p.lo)
        if domain == CIRCLE:
            # a piece can poke into the host from either side
            for shift in (-1.0, 0.0, 1.0):
                a, b = lo + shift, lo + shift + p.length
                if b > 0 and a < L:
                    segs.append((max(a, 0.0), min(b, L)))
        else:
            a, b = lo, lo + p.length
            if b > 0 and a < L:
                segs.append((max(a, 0.0), min(b, L)))
    segs.sort()
    merged = []
    for a, b in segs:
        if merged and a <= merged[-1][1] + _MERGE_TOL:
            merged[-1][1] = max(merged[-1][1], b)
        else:
            merged.append([a, b])
    comps = []
    cursor = 0.0
    for a, b in merged:
        if a - cursor > _MERGE_TOL:
            comps.append(Arc(host.lo + cursor, host.lo + a))
        cursor = max(cursor, b)
    if L - cursor > _MERGE_TOL:
        comps.append(Arc(host.lo + cursor, host.lo + L))
    if keep_point is None:
        return comps
    t = to_chart(domain, host, keep_point)
    for i, c in enumerate(comps):
        if c.lo - host.lo <= t <= c.hi - host.lo:
            return comps, i
    return comps, None


def maximal_separated(domain, spacing, seed_point=0.0):
    """Deterministic maximal `spacing`-separated point set (greedy scan)."""
    if domain == CIRCLE:
        count = int(np.floor(1.0 / spacing))
        if count < 1:
            raise ValueError("spacing too large for the circle")
        # greedy from the seed; last gap to the seed stays >= spacing
        return [wrap(seed_point + k * spacing) for k in range(count)]
    pts = [0.0]
    while pts[-1] + spacing <= 1.0:
        pts.append(pts[-1] + spacing)
    return pts


@dataclass(frozen=True)
class EOAtom:
    """Essentially open set: open pieces plus its included boundary points."""

    pieces: tuple
    included_points: tuple
    index_set: frozenset

    @property
    def length(self):
        return sum(p.length for p in self.pieces)

    @property
    def diameter(self):
        """Diameter of the single merged span (pieces are near-adjacent)."""
        lo = min(p.lo for p in self.pieces)
        hi = max(p.hi for p in self.pieces)
        return hi - lo

    def interior_contains(self, domain, x, tol=0.0):
        return any(contains_point(domain, p, x, tol=tol) for p in self.pieces)

    def contains(self, domain, x, tol=_MERGE_TOL):
        if self.interior_contains(domain, x):
            return True
        return any(dist(domain, x, q) <= tol for q in self.included_points)


def arrangement_atoms(domain, covers):
    """Partition of the domain by exact covering sets of the open arcs `covers`.

    Returns a list of EOAtom, one per nonempty exact-cover class.  Boundary
    points whose own cover class has no open piece are attached to the atom
    of the elementary arc on their right (deterministic, measure-zero fix
    that keeps every atom essentially open).
    """
    bounds = set()
    for a in covers:
        bounds.add(round(wrap(a.lo) if domain == CIRCLE else a.lo, 15))
        hi = wrap(a.hi) if domain == CIRCLE else a.hi
        bounds.add(round(hi, 15))
    if domain == INTERVAL:
        bounds.update((0.0, 1.0))
    pts = sorted(bounds)
    # merge nearly-equal boundary points
    uniq = []
    for p in pts:
        if not uniq or p - uniq[-1] > _MERGE_TOL:
            uniq.append(p)
    pts = uniq

    def cover_of(x):
        return frozenset(
            i for i, a in enumerate(covers) if contains_point(domain, a, x)
        )

    elems = []
    if domain == CIRCLE:
        n = len(pts)
        for i in range(n):
            lo = pts[i]
            hi = pts[(i + 1) % n] + (1.0 if i == n - 1 else 0.0)
            if hi - lo > _MERGE_TOL:
                elems.append(Arc(lo, hi))
    else:
        for lo, hi in zip(pts[:-1], pts[1:]):
            if hi - lo > _MERGE_TOL:
                elems.append(Arc(lo, hi))

    arc_cover = [cover_of(e.mid) for e in elems]
    atoms = {}
    for e, cov in zip(elems, arc_cover):
        if not cov:
            continue
        atoms.setdefault(cov, ([], []))[0].append(e)
    # boundary points: attach to their own class if it has open pieces,
    # otherwise to the atom of the elementary arc on their right
    for i, p in enumerate(pts):
        cov = cover_of(p)
        if cov in atoms:
            atoms[cov][1].append(p)
            continue
        for e, ecov in zip(elems, arc_cover):
            near = abs(e.lo - p) <= _MERGE_TOL or (
                domain == CIRCLE and abs(e.lo - p - 1.0) <= _MERGE_TOL
            )
            if near and ecov:
                atoms[ecov][1].append(p)
                break
    return [
        EOAtom(tuple(pieces), tuple(points), cov)
        for cov, (pieces, points) in sorted(
            atoms.items(), key=lambda kv: min(a.lo for a in kv[1][0])
        )
    ]
