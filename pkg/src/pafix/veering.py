"""Veering triangulation combinatorics on half-translation surfaces.

A section is a triangulation of the punctured surface by veering edges:
pairwise noncrossing saddle connections whose spanning rectangles are
free of singularities.  Sections are partially ordered by the slope
order on crossing edges; diagonal exchanges (flips) are the covering
moves.  This module builds sections, flips them, computes the extremal
sections through an edge, stabilizes a section under an expanding
affine automorphism, cuts out the pocket between two crossing edges,
and layers the automorphism's mapping torus into ideal tetrahedra, one
per flip.

All geometry is exact.  Most routines take or share an EdgeCache; on
surfaces of any size the pairwise crossing numbers dominate the cost
and the cache makes repeated sweeps affordable.
"""

from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .affine import InverseAutomorphism
from .errors import (
    InputError,
    InternalCheckError,
    LambdaNotExpanding,
    NotCrossing,
    NotFilling,
    NotFlippable,
    NotNoncrossing,
    NotVeering,
    OverlappingSegments,
    UnsupportedSurface,
    WrongOrder,
)
from .flatsurf import FlatSurface, SurfacePoint
from .geom import Mat2, Vec2, convex_hull_is_quad_strict
from .saddle import (
    SaddleConnection,
    _abs,
    _corner_for_ray,
    _key_less,
    enumerate_saddles,
    intersection_number,
    is_veering_edge,
)

__all__ = [
    "EdgeCache",
    "Section",
    "edge_order",
    "section_size",
    "complete_to_section",
    "flip_up",
    "flip_down",
    "t_plus",
    "t_minus",
    "section_leq",
    "apply_to_edge",
    "apply_to_section",
    "f_section",
    "annular_avoiding_f_section",
    "FlipStep",
    "flip_path",
    "Pocket",
    "pocket",
    "Tetrahedron",
    "MappingTorus",
    "mapping_torus_layering",
]

_SWEEP_CAP = 20000
_BOX_DOUBLINGS = 4
_DEGREE_THRESHOLD = 16


def section_size(surface: FlatSurface) -> int:
    """Edge count of any section: three times |chi| of the punctured
    surface (vertices removed)."""
    e = len(surface.gluings) // 2
    f = len(surface.polygons)
    n = 3 * (e - f)
    if n <= 0:
        raise UnsupportedSurface(
            "punctured Euler characteristic %d admits no triangulation by "
            "saddle connections" % (f - e))
    return n


class EdgeCache:
    """Shared memo for reverses, canonical representatives, crossing
    numbers, and spanning rectangles.

    Crossing numbers are the expensive primitive; every sweep in this
    module hits the same pairs repeatedly, so one cache is threaded
    through sections, flips, and order tests."""

    def __init__(self):
        self.rev: Dict[SaddleConnection, SaddleConnection] = {}
        self.canon: Dict[SaddleConnection, SaddleConnection] = {}
        self.cross: Dict[tuple, int] = {}
        self.rects: Dict[SaddleConnection, object] = {}
        self.boxes: Dict[tuple, tuple] = {}

    def box_candidates(self, surface, box: int):
        """Canonical non-axis saddle connections with |holonomy| in the
        box, sorted; memoized because completions re-scan the same
        boxes."""
        key = (id(surface), box)
        got = self.boxes.get(key)
        if got is None:
            seen = set()
            out = []
            for sc in enumerate_saddles(surface, box, box):
                if sc.is_horizontal() or sc.is_vertical():
                    continue
                c = self.canonical(sc)
                if c not in seen:
                    seen.add(c)
                    out.append(c)
            out.sort(key=_SortKey)
            got = tuple(out)
            self.boxes[key] = got
        return got

    def reverse(self, sc: SaddleConnection) -> SaddleConnection:
        r = self.rev.get(sc)
        if r is None:
            r = sc.reverse()
            self.rev[sc] = r
            self.rev[r] = sc
        return r

    def canonical(self, sc: SaddleConnection) -> SaddleConnection:
        c = self.canon.get(sc)
        if c is None:
            r = self.reverse(sc)
            c = sc if _key_less(sc.sort_key(), r.sort_key()) else r
            self.canon[sc] = c
            self.canon[r] = c
        return c

    def crossings(self, a: SaddleConnection, b: SaddleConnection) -> int:
        ca, cb = self.canonical(a), self.canonical(b)
        if ca == cb:
            return 0
        if _key_less(cb.sort_key(), ca.sort_key()):
            ca, cb = cb, ca
        key = (ca, cb)
        n = self.cross.get(key)
        if n is None:
            n = intersection_number(ca, cb)
            self.cross[key] = n
        return n

    def rect(self, sc: SaddleConnection):
        """Spanning rectangle of the unoriented edge, or None when the
        rectangle develops over a singularity (not a veering edge)."""
        c = self.canonical(sc)
        if c not in self.rects:
            self.rects[c] = is_veering_edge(c)
        return self.rects[c]


def _slope_abs_less(a: Vec2, b: Vec2) -> int:
    """sign(|slope a| - |slope b|) via cross-multiplied exact compare."""
    lhs = _abs(a.y * b.x)
    rhs = _abs(b.y * a.x)
    return (lhs - rhs).sign()


def edge_order(a: SaddleConnection, b: SaddleConnection,
               cache: Optional[EdgeCache] = None) -> str:
    """Order of two veering edges: "equal", "disjoint", "below", "above".

    Crossing edges compare by absolute slope; the more-horizontal edge
    crosses the other's spanning rectangle left to right and is below.
    An exact |slope| tie between crossing edges is broken by sign: the
    negative-slope edge counts as above."""
    cache = cache or EdgeCache()
    ca, cb = cache.canonical(a), cache.canonical(b)
    if ca == cb:
        return "equal"
    if cache.crossings(ca, cb) == 0:
        return "disjoint"
    s = _slope_abs_less(ca.hol, cb.hol)
    if s < 0:
        return "below"
    if s > 0:
        return "above"
    sa = (ca.hol.x * ca.hol.y).sign()
    return "above" if sa < 0 else "below"


# ---------------------------------------------------------------------------
# face tracing

def _vertex_fan_positions(surface: FlatSurface) -> Dict[tuple, tuple]:
    """corner -> (vertex class, position in the class's rotational fan).

    The fan hops across each corner's back edge, which walks the corners
    of a vertex class counterclockwise."""
    out = {}
    for cp in surface.cone_points:
        start = min(cp.corners)
        cur = start
        pos = 0
        while True:
            out[cur] = (cp.id, pos)
            p, v = cur
            n = len(surface.polygons[p])
            cur = surface.transitions[(p, (v - 1) % n)].target
            pos += 1
            if cur == start:
                break
            if pos > len(cp.corners):
                raise InternalCheckError(
                    "vertex fan of class %d does not close" % cp.id)
        if pos != len(cp.corners):
            raise InternalCheckError(
                "vertex fan of class %d misses corners" % cp.id)
    return out


def _ordered_ends(surface, oriented, fan):
    """Cyclic counterclockwise order of edge germs around each vertex
    class: primary key the fan position of the owning corner, secondary
    the angle within the corner wedge."""
    by_class: Dict[int, list] = {}
    for sc in oriented:
        cls, _ = fan[sc.start_corner]
        by_class.setdefault(cls, []).append(sc)
    cyclic = {}
    for cls, ends in by_class.items():
        ordered: List[SaddleConnection] = []
        for sc in ends:
            lo, hi = 0, len(ordered)
            while lo < hi:
                mid = (lo + hi) // 2
                if _end_before(fan, ordered[mid], sc):
                    lo = mid + 1
                else:
                    hi = mid
            ordered.insert(lo, sc)
        cyclic[cls] = ordered
    return cyclic


def _end_before(fan, a: SaddleConnection, b: SaddleConnection) -> bool:
    pa, pb = fan[a.start_corner][1], fan[b.start_corner][1]
    if pa != pb:
        return pa < pb
    s = a.hol.cross(b.hol).sign()
    if s == 0:
        raise InternalCheckError("coincident edge germs at one corner")
    return s > 0


def _trace_faces(surface, edges, cache):
    """Complementary faces of a noncrossing edge set, each as the cycle
    of oriented edges with the face on the left."""
    fan = _vertex_fan_positions(surface)
    oriented = []
    for c in edges:
        oriented.append(c)
        oriented.append(cache.reverse(c))
    cyclic = _ordered_ends(surface, oriented, fan)
    pred = {}
    for ends in cyclic.values():
        k = len(ends)
        for i, sc in enumerate(ends):
            pred[sc] = ends[(i - 1) % k]
    remaining = set(oriented)
    faces = []
    while remaining:
        start = None
        for sc in remaining:
            if start is None or _key_less(sc.sort_key(), start.sort_key()):
                start = sc
        cyc = [start]
        remaining.discard(start)
        cur = start
        while True:
            nxt = pred[cache.reverse(cur)]
            if nxt == start:
                break
            if nxt not in remaining:
                raise InternalCheckError("face boundary revisits an edge")
            remaining.discard(nxt)
            cyc.append(nxt)
            cur = nxt
            if len(cyc) > len(oriented):
                raise InternalCheckError("face boundary does not close")
        faces.append(tuple(cyc))
    if sum(len(f) for f in faces) != len(oriented):
        raise InternalCheckError("face boundary count mismatch")
    return tuple(faces)


# ---------------------------------------------------------------------------
# sections

class Section:
    """A triangulation of the punctured surface by veering edges.

    edges holds canonical representatives in deterministic order; the
    triangles property lists each complementary face as its boundary
    cycle of oriented edges (face on the left)."""

    def __init__(self, surface: FlatSurface, edges: Sequence[SaddleConnection],
                 cache: Optional[EdgeCache] = None):
        self.surface = surface
        self.cache = cache or EdgeCache()
        canon: List[SaddleConnection] = []
        for e in edges:
            if e.surface is not surface:
                raise InputError("edge belongs to a different surface")
            c = self.cache.canonical(e)
            if c not in canon:
                canon.append(c)
        canon.sort(key=_SortKey)
        self.edges: Tuple[SaddleConnection, ...] = tuple(canon)
        self.edge_set = frozenset(canon)
        self._faces = None
        self._face_of = None
        self._validate()

    def _validate(self):
        target = section_size(self.surface)
        if len(self.edges) != target:
            raise NotFilling(
                "a section of this surface has %d edges, got %d"
                % (target, len(self.edges)))
        for e in self.edges:
            if e.is_horizontal() or e.is_vertical():
                raise NotVeering(
                    "edge with holonomy (%s, %s) is axis parallel"
                    % (e.hol.x, e.hol.y))
            if self.cache.rect(e) is None:
                raise NotVeering(
                    "edge with holonomy (%s, %s) spans a rectangle containing "
                    "a singularity" % (e.hol.x, e.hol.y))
        for i, a in enumerate(self.edges):
            for b in self.edges[i + 1:]:
                try:
                    n = self.cache.crossings(a, b)
                except OverlappingSegments:
                    raise NotNoncrossing("edges overlap along a segment")
                if n != 0:
                    raise NotNoncrossing(
                        "edges with holonomies (%s, %s) and (%s, %s) cross"
                        % (a.hol.x, a.hol.y, b.hol.x, b.hol.y))
        for f in self.triangles:
            if len(f) != 3:
                raise NotFilling("complementary face with %d sides" % len(f))

    @property
    def triangles(self):
        if self._faces is None:
            self._faces = _trace_faces(self.surface, self.edges, self.cache)
            self._face_of = {}
            for f in self._faces:
                for sc in f:
                    self._face_of[sc] = f
        return self._faces

    def face_of(self, oriented: SaddleConnection):
        """The face on the left of an oriented edge of this section."""
        self.triangles
        f = self._face_of.get(oriented)
        if f is None:
            raise InputError("oriented edge is not part of this section")
        return f

    def records(self):
        return tuple(e.record() for e in self.edges)

    def __eq__(self, other):
        return isinstance(other, Section) and self.edge_set == other.edge_set

    def __ne__(self, other):
        return not self.__eq__(other)

    def __hash__(self):
        return hash(self.edge_set)

    def __repr__(self):
        return "Section(%d edges)" % len(self.edges)


class _SortKey:
    """Adapter: sort SaddleConnections by sort_key under _key_less."""

    __slots__ = ("key",)

    def __init__(self, sc):
        self.key = sc.sort_key()

    def __lt__(self, other):
        return _key_less(self.key, other.key)


def complete_to_section(surface: FlatSurface,
                        edges: Sequence[SaddleConnection] = (),
                        cache: Optional[EdgeCache] = None,
                        max_doublings: int = _BOX_DOUBLINGS) -> Section:
    """Extend pairwise noncrossing veering edges to a full section.

    Greedy and deterministic: candidate edges come from holonomy boxes
    of doubling size, each pass sorted by (start class, holonomy).  A
    surface whose sections need edges beyond the final box (or which,
    like the axis-aligned square torus, admits no section at all)
    raises UnsupportedSurface."""
    cache = cache or EdgeCache()
    chosen: List[SaddleConnection] = []
    for e in edges:
        c = cache.canonical(e)
        if c in chosen:
            continue
        if c.is_horizontal() or c.is_vertical() or cache.rect(c) is None:
            raise NotVeering(
                "seed edge with holonomy (%s, %s) is not a veering edge"
                % (c.hol.x, c.hol.y))
        for prev in chosen:
            try:
                if cache.crossings(c, prev) != 0:
                    raise NotNoncrossing("seed edges cross")
            except OverlappingSegments:
                raise NotNoncrossing("seed edges overlap")
        chosen.append(c)
    target = section_size(surface)
    box = 1
    for _ in range(max_doublings + 1):
        for c in cache.box_candidates(surface, box):
            if len(chosen) == target:
                break
            if c in chosen:
                continue
            ok = True
            for prev in chosen:
                try:
                    if cache.crossings(c, prev) != 0:
                        ok = False
                        break
                except OverlappingSegments:
                    ok = False
                    break
            if ok and cache.rect(c) is not None:
                chosen.append(c)
        if len(chosen) == target:
            return Section(surface, chosen, cache)
        box *= 2
    raise UnsupportedSurface(
        "no section completion within holonomy box %d; the surface may "
        "admit no veering triangulation in these coordinates" % (box // 2))


# ---------------------------------------------------------------------------
# flips

def _rotate_to(face, member):
    for i, sc in enumerate(face):
        if sc == member:
            return face[i:] + face[:i]
    raise InternalCheckError("edge missing from its own face")


def _apex_solve(H: Vec2, p: Vec2, q: Vec2, side: int) -> Vec2:
    """Apex of the triangle with one side 0->H and the other two sides
    carried by p and q up to sign (chart frames differ by +-1 only).
    side +1 picks the apex left of H, -1 right."""
    cands = []
    for first, second in ((p, q), (q, p)):
        for a in (first, -first):
            for b in (second, -second):
                if (a + b) == H:
                    if a not in cands:
                        cands.append(a)
    good = [a for a in cands if H.cross(a).sign() == side]
    if len(good) != 1:
        raise InternalCheckError(
            "apex recovery found %d candidates on the requested side"
            % len(good))
    return good[0]


def _quad(section: Section, c: SaddleConnection):
    """Developed quadrilateral around a section edge, in the frame of
    its canonical orientation: returns (H, apex_left, apex_right,
    left face rotated to start at c, right face rotated to start at
    the reverse)."""
    cache = section.cache
    r = cache.reverse(c)
    fl = section.face_of(c)
    fr = section.face_of(r)
    if fl is fr:
        raise InternalCheckError("edge is self-adjacent across one face")
    fl_rot = _rotate_to(fl, c)
    fr_rot = _rotate_to(fr, r)
    H = c.hol
    apex_l = _apex_solve(H, fl_rot[1].hol, fl_rot[2].hol, 1)
    apex_r = _apex_solve(H, fr_rot[1].hol, fr_rot[2].hol, -1)
    return H, apex_l, apex_r, fl_rot, fr_rot


def _flip(section: Section, edge: SaddleConnection, up: bool):
    """Shared flip core; returns (new section, new canonical edge, the
    walked oriented copy of the new edge based at the right apex)."""
    cache = section.cache
    c = cache.canonical(edge)
    if c not in section.edge_set:
        raise InputError("flip edge is not in the section")
    H, apex_l, apex_r, fl_rot, fr_rot = _quad(section, c)
    mine = _abs(H.x) if up else _abs(H.y)
    for other in (fl_rot[1], fl_rot[2], fr_rot[1], fr_rot[2]):
        val = _abs(other.hol.x) if up else _abs(other.hol.y)
        if (mine - val).sign() <= 0:
            raise NotFlippable(
                "edge with holonomy (%s, %s) is not the strictly %s edge of "
                "both adjacent faces" % (H.x, H.y,
                                         "widest" if up else "tallest"))
    z = H.x.field.zero()
    if not convex_hull_is_quad_strict([Vec2(z, z), apex_r, H, apex_l]):
        raise NotFlippable(
            "the two faces around the edge do not form a strictly convex "
            "quadrilateral")
    d = apex_l - apex_r
    if d.x.is_zero() or d.y.is_zero():
        raise NotFlippable("replacement diagonal is axis parallel")
    s = _slope_abs_less(d, H)
    if up and s <= 0:
        raise NotFlippable("replacement diagonal is not strictly steeper")
    if not up and s >= 0:
        raise NotFlippable("replacement diagonal is not strictly shallower")
    # the right apex is where fr's second companion side starts
    chart_v, vidx_v = fr_rot[2].start_corner
    walked = None
    for dd in (d, -d):
        corner, ray = _corner_for_ray(section.surface, chart_v, vidx_v, dd)
        cand = SaddleConnection.walk(section.surface, corner, ray)
        if cand is None:
            continue
        if cand.length_sq() != d.dot(d):
            continue
        try:
            if cache.crossings(cand, c) != 1:
                continue
        except OverlappingSegments:
            continue
        walked = cand
        break
    if walked is None:
        raise InternalCheckError("no diagonal replaces the flipped edge")
    if cache.rect(walked) is None:
        raise NotFlippable(
            "replacement diagonal spans a rectangle containing a singularity")
    new_c = cache.canonical(walked)
    new_edges = [e for e in section.edges if e != c]
    new_edges.append(new_c)
    return Section(section.surface, new_edges, cache), new_c, walked


def flip_up(section: Section, edge: SaddleConnection) -> Section:
    """Replace the strictly widest edge of two adjacent faces by the
    steeper diagonal of their union quadrilateral."""
    return _flip(section, edge, True)[0]


def flip_down(section: Section, edge: SaddleConnection) -> Section:
    """Replace the strictly tallest edge of two adjacent faces by the
    shallower diagonal of their union quadrilateral."""
    return _flip(section, edge, False)[0]


# ---------------------------------------------------------------------------
# extremal sections and the section order

def t_plus(edge: SaddleConnection, section: Optional[Section] = None,
           cache: Optional[EdgeCache] = None) -> Section:
    """Highest section containing the edge: sweep every other edge
    upward until the edge itself is the only up-flippable one."""
    return _extremal(edge, section, cache, True)


def t_minus(edge: SaddleConnection, section: Optional[Section] = None,
            cache: Optional[EdgeCache] = None) -> Section:
    """Lowest section containing the edge."""
    return _extremal(edge, section, cache, False)


def _extremal(edge, section, cache, up):
    if section is not None:
        cache = section.cache
    else:
        cache = cache or EdgeCache()
        section = complete_to_section(edge.surface, (edge,), cache)
    c = cache.canonical(edge)
    if c not in section.edge_set:
        raise InputError("edge is not in the starting section")
    cur = section
    for _ in range(_SWEEP_CAP):
        moved = False
        for cand in cur.edges:
            if cand == c:
                continue
            try:
                cur = _flip(cur, cand, up)[0]
                moved = True
                break
            except NotFlippable:
                continue
        if not moved:
            return cur
    raise InternalCheckError("extremal-section sweep did not terminate")


def section_leq(lower: Section, upper: Section) -> bool:
    """True when every crossing pair has the lower section's edge below
    the upper section's edge."""
    cache = lower.cache
    for a in lower.edges:
        for b in upper.edges:
            if cache.crossings(a, b) == 0:
                continue
            if edge_order(a, b, cache) != "below":
                return False
    return True


# ---------------------------------------------------------------------------
# automorphism action

def _derivative_matrix(f) -> Mat2:
    lam = f.lambda_
    if isinstance(f, InverseAutomorphism):
        return Mat2.diagonal(lam.inverse(), lam)
    return Mat2.diagonal(lam, lam.inverse())


def _derivative_sign(f, sp: SurfacePoint) -> int:
    if hasattr(f, "derivative_sign_at"):
        return f.derivative_sign_at(sp)
    return f.piece_at(sp).map.mat.a.sign()


def _sign_along(f, sc: SaddleConnection) -> int:
    """Derivative sign along the open edge.  Constant there (a sign
    jump inside the segment would fold its image), so sample three
    interior parameters and take the majority to dodge piece-corner
    ties."""
    votes = [_derivative_sign(f, sc.point_at(t))
             for t in (Fraction(1, 2), Fraction(1, 3), Fraction(2, 3))]
    return 1 if votes.count(1) >= 2 else -1


def apply_to_edge(f, sc: SaddleConnection,
                  cache: Optional[EdgeCache] = None) -> SaddleConnection:
    """Image of a saddle connection under an affine automorphism (or
    its inverse), as an oriented saddle connection."""
    surface = sc.surface
    if f.surface is not surface:
        raise InputError("automorphism and edge live on different surfaces")
    im_start = f.apply(sc.start_point())
    im_hol = _derivative_matrix(f).apply(sc.hol)
    if _sign_along(f, sc) < 0:
        im_hol = -im_hol
    poly = surface.polygons[im_start.chart]
    vidx = None
    for i, v in enumerate(poly.vertices):
        if v == im_start.pos:
            vidx = i
            break
    if vidx is None:
        raise InternalCheckError("edge image does not start at a vertex")
    corner, ray = _corner_for_ray(surface, im_start.chart, vidx, im_hol)
    out = SaddleConnection.walk(surface, corner, ray)
    if out is None:
        raise InternalCheckError("edge image failed to develop")
    if cache is not None:
        cache.canonical(out)
    return out


def apply_to_section(f, section: Section) -> Section:
    """Image section; validation re-checks that the automorphism sent
    veering edges to veering edges."""
    images = [apply_to_edge(f, e, section.cache) for e in section.edges]
    return Section(section.surface, images, section.cache)


def f_section(f, start: Optional[Section] = None) -> Section:
    """A section T with f(T) <= T: the maximum of the translate family
    over the start section, reached by flipping up exactly the edges
    that sit below some image edge."""
    d = _derivative_matrix(f)
    horiz = d.a if d.a.sign() > 0 else -d.a
    if (horiz - 1).sign() <= 0:
        raise LambdaNotExpanding(
            "sections track horizontally expanding maps; this map has "
            "horizontal derivative %s (apply to the inverse instead)" % horiz)
    if start is None:
        start = complete_to_section(f.surface)
    cache = start.cache
    cur = start
    images = {e: cache.canonical(apply_to_edge(f, e, cache))
              for e in cur.edges}
    for _ in range(_SWEEP_CAP):
        offenders = []
        for e in cur.edges:
            bad = False
            for src in cur.edges:
                a = images[src]
                if cache.crossings(a, e) == 0:
                    continue
                if edge_order(a, e, cache) == "above":
                    bad = True
                    break
            if bad:
                offenders.append(e)
        if not offenders:
            return cur
        moved = False
        for e in offenders:
            try:
                nxt, new_c, _ = _flip(cur, e, True)
            except NotFlippable:
                continue
            del images[e]
            images[new_c] = cache.canonical(apply_to_edge(f, new_c, cache))
            cur = nxt
            moved = True
            break
        if not moved:
            raise InternalCheckError(
                "no edge below the image section is up-flippable")
    raise InternalCheckError("f-section sweep did not stabilize")


def annular_avoiding_f_section(f, threshold: int = _DEGREE_THRESHOLD) -> Section:
    """An f-section avoiding deep annular pockets: flip down through
    any cylinder certified by a spanning rectangle of degree >=
    threshold, keeping the f-section property at every step."""
    cur = f_section(f)
    cache = cur.cache
    for _ in range(_SWEEP_CAP):
        offenders = [e for e in cur.edges
                     if cache.rect(e).degree >= threshold]
        if not offenders:
            return cur
        moved = False
        for e in offenders:
            try:
                nxt = _flip(cur, e, False)[0]
            except NotFlippable:
                continue
            if section_leq(apply_to_section(f, nxt), nxt):
                cur = nxt
                moved = True
                break
        if not moved:
            raise InternalCheckError(
                "cannot reduce rectangle degrees and keep an f-section")
    raise InternalCheckError("annular-avoiding sweep did not terminate")


# ---------------------------------------------------------------------------
# flip paths

class FlipStep:
    """One upward diagonal exchange inside a flip path."""

    __slots__ = ("before", "edge", "after", "new_edge", "walked")

    def __init__(self, before, edge, after, new_edge, walked):
        self.before = before      # section before the flip
        self.edge = edge          # canonical edge removed
        self.after = after        # section after the flip
        self.new_edge = new_edge  # canonical edge inserted
        self.walked = walked      # oriented copy based at the right apex

    def __repr__(self):
        return "FlipStep((%s, %s) -> (%s, %s))" % (
            self.edge.hol.x, self.edge.hol.y,
            self.new_edge.hol.x, self.new_edge.hol.y)


def flip_path(lower: Section, upper: Section,
              cap: int = _SWEEP_CAP) -> List[FlipStep]:
    """Monotone upward flip sequence from one section to a higher one.

    Greedy: flip any edge outside the target whose replacement is not
    above the target; the covering structure of the section order
    guarantees progress when lower <= upper."""
    if lower.surface is not upper.surface:
        raise InputError("sections live on different surfaces")
    cache = lower.cache
    if not section_leq(lower, upper):
        raise WrongOrder("start section is not below the target section")
    steps: List[FlipStep] = []
    cur = lower
    while cur.edge_set != upper.edge_set:
        moved = False
        for e in cur.edges:
            if e in upper.edge_set:
                continue
            try:
                nxt, new_c, walked = _flip(cur, e, True)
            except NotFlippable:
                continue
            if new_c not in upper.edge_set:
                ok = True
                for u in upper.edges:
                    if cache.crossings(new_c, u) == 0:
                        continue
                    if edge_order(new_c, u, cache) != "below":
                        ok = False
                        break
                if not ok:
                    continue
            steps.append(FlipStep(cur, e, nxt, new_c, walked))
            cur = nxt
            moved = True
            break
        if not moved:
            raise InternalCheckError("flip path is stuck below the target")
        if len(steps) > cap:
            raise InternalCheckError("flip path exceeded the step cap")
    return steps


# ---------------------------------------------------------------------------
# pockets

class Pocket:
    """The sub-complex between the lowest section through an upper edge
    and the highest section through a lower crossing edge.

    top_faces and bottom_faces triangulate the same base; top_interior
    and bottom_interior are the edges proper to each side, boundary the
    shared edges around the base."""

    __slots__ = ("sigma1", "sigma2", "upper_section", "lower_section",
                 "top_faces", "bottom_faces", "top_interior",
                 "bottom_interior", "boundary", "crossing", "intersection",
                 "flip_count")

    def __init__(self, sigma1, sigma2, upper_section, lower_section,
                 top_faces, bottom_faces, top_interior, bottom_interior,
                 boundary, crossing, intersection, flip_count):
        self.sigma1 = sigma1
        self.sigma2 = sigma2
        self.upper_section = upper_section
        self.lower_section = lower_section
        self.top_faces = top_faces
        self.bottom_faces = bottom_faces
        self.top_interior = top_interior
        self.bottom_interior = bottom_interior
        self.boundary = boundary
        self.crossing = crossing          # i(sigma1, sigma2)
        self.intersection = intersection  # i(P+, P-)
        self.flip_count = flip_count

    def __repr__(self):
        return ("Pocket(%d top faces, %d bottom faces, i=%d, flips=%d)"
                % (len(self.top_faces), len(self.bottom_faces),
                   self.intersection, self.flip_count))


def _side_component(section, other_edge_set, seed, cache):
    """Faces of `section` reachable from the seed edge's faces across
    edges absent from the other section; returns (faces, interior
    edges, boundary edges)."""
    diff = [e for e in section.edges if e not in other_edge_set]
    diff_set = frozenset(diff)
    seed_faces = [section.face_of(seed), section.face_of(cache.reverse(seed))]
    comp = []
    queue = list(seed_faces)
    seen = set()
    while queue:
        face = queue.pop()
        if id(face) in seen:
            continue
        seen.add(id(face))
        comp.append(face)
        for sc in face:
            c = cache.canonical(sc)
            if c in diff_set:
                nb = section.face_of(cache.reverse(sc))
                if id(nb) not in seen:
                    queue.append(nb)
    interior = set()
    boundary = set()
    for face in comp:
        for sc in face:
            c = cache.canonical(sc)
            if c in diff_set:
                interior.add(c)
            else:
                boundary.add(c)
    if cache.canonical(seed) not in interior:
        raise InternalCheckError("pocket seed edge fell outside its side")
    return tuple(comp), tuple(sorted(interior, key=_SortKey)), boundary


def _face_area2(face) -> object:
    H = face[0].hol
    apex = _apex_solve(H, face[1].hol, face[2].hol, 1)
    return H.cross(apex)


def pocket(sigma1: SaddleConnection, sigma2: SaddleConnection,
           cache: Optional[EdgeCache] = None) -> Pocket:
    """The pocket with sigma1 on its top side and sigma2 on its bottom
    side.  Requires the edges to cross with sigma1 above sigma2."""
    cache = cache or EdgeCache()
    c1 = cache.canonical(sigma1)
    c2 = cache.canonical(sigma2)
    try:
        i12 = cache.crossings(c1, c2)
    except OverlappingSegments:
        raise NotCrossing("edges overlap along a segment")
    if i12 == 0:
        raise NotCrossing("pocket edges must cross")
    if edge_order(c1, c2, cache) != "above":
        raise WrongOrder("the first pocket edge must lie above the second")
    upper = t_minus(c1, cache=cache)
    lower = t_plus(c2, cache=cache)
    top_faces, top_int, top_bnd = _side_component(
        upper, lower.edge_set, c1, cache)
    bot_faces, bot_int, bot_bnd = _side_component(
        lower, upper.edge_set, c2, cache)
    if top_bnd != bot_bnd:
        raise InternalCheckError("pocket sides have different boundaries")
    area_top = _face_area2(top_faces[0])
    for f in top_faces[1:]:
        area_top = area_top + _face_area2(f)
    area_bot = _face_area2(bot_faces[0])
    for f in bot_faces[1:]:
        area_bot = area_bot + _face_area2(f)
    if area_top != area_bot:
        raise InternalCheckError("pocket sides cover different areas")
    total = 0
    bot_hits = {b: 0 for b in bot_int}
    for a in top_int:
        hits = 0
        for b in bot_int:
            n = cache.crossings(a, b)
            if n and edge_order(a, b, cache) != "above":
                raise InternalCheckError(
                    "pocket order violated between side edges")
            hits += n
            bot_hits[b] += n
        if hits == 0:
            raise InternalCheckError(
                "pocket top edge crosses nothing on the bottom side")
        total += hits
    for b, n in bot_hits.items():
        if n == 0:
            raise InternalCheckError(
                "pocket bottom edge crosses nothing on the top side")
    flips = flip_path(lower, upper)
    return Pocket(c1, c2, upper, lower, top_faces, bot_faces, top_int,
                  bot_int, tuple(sorted(top_bnd, key=_SortKey)), i12,
                  total, len(flips))


# ---------------------------------------------------------------------------
# mapping torus layering

class Tetrahedron:
    """Ideal tetrahedron of one diagonal exchange: the maximal
    rectangle's inscribed quadrilateral with the flipped edge as bottom
    diagonal and its replacement as top diagonal.

    corners maps the tetrahedron's vertex labels 0..3 to positions in
    the bottom diagonal's frame: 0 its start, 1 its end, 2 the right
    apex, 3 the left apex."""

    __slots__ = ("index", "bottom", "top", "sides", "corners",
                 "rect_width", "rect_height")

    def __init__(self, index, bottom, top, sides, corners):
        self.index = index
        self.bottom = bottom
        self.top = top
        self.sides = sides
        self.corners = corners
        xs = [v.x for v in corners.values()]
        ys = [v.y for v in corners.values()]
        self.rect_width = _span(xs)
        self.rect_height = _span(ys)

    def __repr__(self):
        return "Tetrahedron(%d, bottom=(%s, %s), top=(%s, %s))" % (
            self.index, self.bottom.hol.x, self.bottom.hol.y,
            self.top.hol.x, self.top.hol.y)


def _span(vals):
    lo = hi = vals[0]
    for v in vals[1:]:
        if (v - lo).sign() < 0:
            lo = v
        if (v - hi).sign() > 0:
            hi = v
    return hi - lo


class MappingTorus:
    """Layered ideal triangulation of an automorphism's mapping torus:
    one tetrahedron per flip between the image section and the
    section, glued face to face, closed up through the automorphism.

    gluings lists each face pairing once as (tet, face, other tet,
    other face, vertex permutation), the permutation given as the
    4-tuple of images of 0..3.  Face slots: 0 bottom-left, 1
    bottom-right, 2 top-left, 3 top-right of the flip quadrilateral."""

    __slots__ = ("tetrahedra", "gluings", "section", "bottom_section")

    def __init__(self, tetrahedra, gluings, section, bottom_section):
        self.tetrahedra = tuple(tetrahedra)
        self.gluings = tuple(gluings)
        self.section = section
        self.bottom_section = bottom_section
        slots = {}
        for (t, fc, t2, fc2, perm) in self.gluings:
            for side in ((t, fc), (t2, fc2)):
                if side in slots:
                    raise InternalCheckError(
                        "tetrahedron face glued twice: %r" % (side,))
                slots[side] = True
            if sorted(perm) != [0, 1, 2, 3]:
                raise InternalCheckError("gluing permutation is not a "
                                         "bijection on vertex labels")
        expect = {(t.index, fc) for t in self.tetrahedra for fc in range(4)}
        if set(slots) != expect:
            raise InternalCheckError("gluing table is not closed")

    def format_text(self) -> str:
        lines = ["tetrahedra %d" % len(self.tetrahedra)]
        partner = {}
        for (t, fc, t2, fc2, perm) in self.gluings:
            partner[(t, fc)] = (t2, fc2, perm)
            partner[(t2, fc2)] = (t, fc, _invert_perm(perm))
        for tet in self.tetrahedra:
            cells = []
            for fc in range(4):
                t2, fc2, perm = partner[(tet.index, fc)]
                cells.append("%d->%d.%d %s" % (fc, t2, fc2,
                                               _perm_cycles(perm)))
            lines.append("tet %d bottom=(%s,%s) top=(%s,%s) | %s" % (
                tet.index, tet.bottom.hol.x, tet.bottom.hol.y,
                tet.top.hol.x, tet.top.hol.y, "  ".join(cells)))
        return "\n".join(lines)

    def __repr__(self):
        return "MappingTorus(%d tetrahedra)" % len(self.tetrahedra)


def _invert_perm(perm):
    out = [0] * 4
    for i, v in enumerate(perm):
        out[v] = i
    return tuple(out)


def _perm_cycles(perm) -> str:
    seen = set()
    parts = []
    for start in range(4):
        if start in seen:
            continue
        cyc = [start]
        seen.add(start)
        cur = perm[start]
        while cur != start:
            cyc.append(cur)
            seen.add(cur)
            cur = perm[cur]
        if len(cyc) > 1:
            parts.append("(" + " ".join(str(v) for v in cyc) + ")")
    return "".join(parts) if parts else "()"


def _face_key(cycle):
    best = cycle
    for i in range(1, len(cycle)):
        rot = cycle[i:] + cycle[:i]
        if _cycle_less(rot, best):
            best = rot
    return best


def _cycle_less(a, b):
    for x, y in zip(a, b):
        kx, ky = x.sort_key(), y.sort_key()
        if kx == ky:
            continue
        return _key_less(kx, ky)
    return False


def _perm_from_alignment(labels_a, off_a, labels_b, off_b, pos_map):
    perm = [None] * 4
    for p in range(3):
        perm[labels_a[p]] = labels_b[pos_map[p]]
    perm[off_a] = off_b
    return tuple(perm)


def mapping_torus_layering(f, section: Optional[Section] = None) -> MappingTorus:
    """Layer the mapping torus of an expanding automorphism: flip from
    the image section up to the section, one ideal tetrahedron per
    flip, then identify the leftover top faces with bottom faces
    through the automorphism."""
    if section is None:
        section = f_section(f)
    cache = section.cache
    bottom = apply_to_section(f, section)
    if not section_leq(bottom, section):
        raise InputError("the supplied section is not an f-section")
    steps = flip_path(bottom, section)
    if not steps:
        raise InternalCheckError(
            "the image section equals the section; nothing to layer")

    open_faces = {}
    face_meta = {}      # (tet, slot) -> (rotation, labels, off-label)
    base_consumer = {}  # base face key -> (tet, slot)
    base_keys = set()
    for fc in bottom.triangles:
        key = _face_key(fc)
        open_faces[key] = ("base", key)
        base_keys.add(key)
    gluings = []
    tets = []
    zero = section.surface.field.zero()

    for i, st in enumerate(steps):
        H, apex_l, apex_r, fl_rot, fr_rot = _quad(st.before, st.edge)
        rev_walked = cache.reverse(st.walked)
        g1 = st.after.face_of(st.walked)
        g2 = st.after.face_of(rev_walked)
        g1_rot = _rotate_to(g1, st.walked)
        g2_rot = _rotate_to(g2, rev_walked)
        d = apex_l - apex_r
        third_left = 0 if d.cross(-apex_r).sign() > 0 else 1
        labels = {
            0: {fl_rot[0]: 0, fl_rot[1]: 1, fl_rot[2]: 3},
            1: {fr_rot[0]: 1, fr_rot[1]: 0, fr_rot[2]: 2},
            2: {g1_rot[0]: 2, g1_rot[1]: 3, g1_rot[2]: third_left},
            3: {g2_rot[0]: 3, g2_rot[1]: 2, g2_rot[2]: 1 - third_left},
        }
        faces = {0: fl_rot, 1: fr_rot, 2: g1_rot, 3: g2_rot}
        sides = []
        for sc in (fl_rot[1], fl_rot[2], fr_rot[1], fr_rot[2]):
            sides.append(cache.canonical(sc))
        corners = {0: Vec2(zero, zero), 1: H, 2: apex_r, 3: apex_l}
        tets.append(Tetrahedron(i, st.edge, st.new_edge, tuple(sides),
                                corners))
        for slot in range(4):
            rot = _face_key(faces[slot])
            lab = tuple(labels[slot][sc] for sc in rot)
            off = 6 - sum(lab)
            face_meta[(i, slot)] = (rot, lab, off)
        for slot in (0, 1):
            rot, lab, off = face_meta[(i, slot)]
            handle = open_faces.pop(rot, None)
            if handle is None:
                raise InternalCheckError(
                    "flip consumed a face that is not open")
            if handle[0] == "base":
                base_consumer[handle[1]] = (i, slot)
            else:
                _, j, jslot = handle
                rot_j, lab_j, off_j = face_meta[(j, jslot)]
                perm = _perm_from_alignment(lab_j, off_j, lab, off,
                                            (0, 1, 2))
                gluings.append((j, jslot, i, slot, perm))
        for slot in (2, 3):
            rot, lab, off = face_meta[(i, slot)]
            if rot in open_faces:
                raise InternalCheckError("flip produced a duplicate face")
            open_faces[rot] = ("top", i, slot)

    top_keys = {_face_key(fc) for fc in section.triangles}
    if set(open_faces) != top_keys:
        raise InternalCheckError(
            "faces left open do not match the section's faces")

    for key, handle in sorted(open_faces.items(),
                              key=lambda kv: (kv[1][1], kv[1][2])
                              if kv[1][0] == "top" else (-1, -1)):
        if handle[0] != "top":
            continue
        _, i, slot = handle
        rot_i, lab_i, off_i = face_meta[(i, slot)]
        cur = rot_i
        pos_map = (0, 1, 2)
        for _ in range(len(top_keys) + 1):
            img = tuple(apply_to_edge(f, sc, cache) for sc in cur)
            img_rot = _face_key(img)
            offset = None
            for o in range(3):
                if img[o] == img_rot[0]:
                    offset = o
                    break
            if offset is None:
                raise InternalCheckError("image face rotation mismatch")
            pos_map = tuple((pos_map[p] + 3 - offset) % 3 for p in range(3))
            if img_rot in base_consumer:
                j, jslot = base_consumer[img_rot]
                rot_j, lab_j, off_j = face_meta[(j, jslot)]
                perm = _perm_from_alignment(lab_i, off_i, lab_j, off_j,
                                            pos_map)
                gluings.append((i, slot, j, jslot, perm))
                break
            if img_rot not in base_keys or img_rot not in top_keys:
                raise InternalCheckError(
                    "monodromy image is not a bottom face")
            cur = img_rot
        else:
            raise InternalCheckError(
                "monodromy face orbit never reaches a tetrahedron")

    return MappingTorus(tets, gluings, section, bottom)
