"""Exact fixed point counting for affine automorphisms.

Two independent counters are provided.  The primary one solves, for every
edge of an f-section, the affine fixed point equation of each branch of f
over the edge's spanning rectangle; every regular fixed point of f lies
in at least one such rectangle, so the deduplicated union is Fix(f) minus
the singular points, which are read off the singularity permutation.  The
oracle counter instead clips f(t) against t for every triangle t of a
section and solves the same equation per overlap piece.  Both attach a
Lefschetz number computed homologically, from the action of f on cycles
of section edges, as a third independent cross-check.

Coordinates, indices and counts are exact; no step rounds.
"""

from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from .errors import (
    InputError,
    InternalCheckError,
    NotFixed,
    NotVeering,
    OverlappingSegments,
)
from .fileio import format_element
from .flatsurf import FlatSurface, SurfacePoint
from .geom import ConvexPolygon, Vec2, on_segment, segment_intersection
from .saddle import (
    SaddleConnection,
    _corner_for_ray,
    _place_apply,
    _place_cross,
    _place_key,
    _place_unapply,
    _wedge_contains,
    is_veering_edge,
)
from .veering import (
    EdgeCache,
    Section,
    _derivative_matrix,
    _vertex_fan_positions,
    annular_avoiding_f_section,
    apply_to_edge,
    f_section,
    section_size,
)

__all__ = [
    "FixedPoint",
    "FixReport",
    "MarkovBound",
    "count_fixed_points",
    "fixed_point_index",
    "fixed_points_in_rectangle",
    "lefschetz_number",
    "markov_upper_bound",
    "max_edge",
    "oracle_count_fixed_points",
]

_COVER_CAP = 200000


class FixedPoint:
    """A point with f(p) = p, in canonical chart coordinates."""

    __slots__ = ("chart", "pos", "kind", "index", "key")

    def __init__(self, chart: int, pos: Vec2, kind: str, index: int, key):
        self.chart = chart
        self.pos = pos
        self.kind = kind      # "regular", "cone" or "marked"
        self.index = index
        self.key = key        # canonical-point key; equal iff same point

    def sort_key(self):
        return (self.kind, repr(self.key))

    def record(self):
        return (self.kind, self.chart, format_element(self.pos.x),
                format_element(self.pos.y), self.index)

    def __eq__(self, other):
        return isinstance(other, FixedPoint) and self.key == other.key

    def __hash__(self):
        return hash((self.kind, repr(self.key)))

    def __repr__(self):
        return "FixedPoint(%s, chart %d, (%s, %s), index %d)" % (
            self.kind, self.chart, self.pos.x, self.pos.y, self.index)


class FixReport:
    """Inventory of Fix(f) with indices and per-rectangle attribution."""

    __slots__ = ("points", "per_edge", "lefschetz", "method")

    def __init__(self, points, per_edge, lefschetz, method):
        self.points = tuple(sorted(points, key=lambda p: p.sort_key()))
        self.per_edge = per_edge
        self.lefschetz = lefschetz
        self.method = method

    @property
    def total(self) -> int:
        return len(self.points)

    @property
    def regular_count(self) -> int:
        return sum(1 for p in self.points if p.kind == "regular")

    @property
    def singular_count(self) -> int:
        return self.total - self.regular_count

    @property
    def index_sum(self) -> int:
        return sum(p.index for p in self.points)

    def point_keys(self) -> frozenset:
        return frozenset(repr(p.key) for p in self.points)

    def summary(self):
        return (self.total, self.regular_count, self.singular_count,
                self.lefschetz, self.method)

    def records(self):
        return [p.record() for p in self.points]

    def __repr__(self):
        return "FixReport(total=%d, regular=%d, singular=%d, lefschetz=%d)" \
            % (self.total, self.regular_count, self.singular_count,
               self.lefschetz)


# ---------------------------------------------------------------------------
# crossing data

def _param_along(sc: SaddleConnection, plane_point: Vec2):
    """Parameter t with plane_point = start + t*hol, in the walk frame."""
    chart0, vidx0 = sc.start_corner
    p0 = sc.surface.polygons[chart0].vertices[vidx0]
    if not sc.hol.x.is_zero():
        return (plane_point.x - p0.x) / sc.hol.x
    return (plane_point.y - p0.y) / sc.hol.y


def _crossing_data(s1: SaddleConnection, s2: SaddleConnection):
    """Interior transverse crossings of two connections, with chart data.

    Each record is (t1, t2, chart, pos, place1, place2, side) where t_i is
    the parameter along s_i, pos is in chart coordinates, place_i is the
    (eps, shift) placement of that chart in s_i's walk frame, and side is
    the sign of cross(dir1, dir2).  One record per surface point."""
    if s1.surface is not s2.surface:
        raise InputError("connections live on different surfaces")
    surface = s1.surface
    out = {}
    for (c1, a, b), (_, e1, sh1) in zip(s1.pieces, s1.placements):
        for (c2, c, d), (_, e2, sh2) in zip(s2.pieces, s2.placements):
            if c1 != c2:
                continue
            r = segment_intersection(a, b, c, d)
            if r[0] == "none":
                continue
            if r[0] == "overlap":
                if r[1] == r[2]:
                    continue
                raise OverlappingSegments(
                    "connections share a parallel subsegment")
            side = (b - a).cross(d - c).sign()
            if side == 0:
                # collinear endpoint touch, resolved in an adjacent chart
                continue
            p = r[1]
            kind, key, _ = surface.canonical_point(SurfacePoint(c1, p))
            if kind == "vertex" or key in out:
                continue
            t1 = _param_along(s1, _place_apply(e1, sh1, p))
            t2 = _param_along(s2, _place_apply(e2, sh2, p))
            out[key] = (t1, t2, c1, p, (e1, sh1), (e2, sh2), side)
    return list(out.values())


def _same_point(surface: FlatSurface, a: SurfacePoint, b: SurfacePoint) -> bool:
    return surface.canonical_point(a)[1] == surface.canonical_point(b)[1]


def _image_sign(f, sc: SaddleConnection, image: SaddleConnection) -> int:
    d = _derivative_matrix(f).apply(sc.hol)
    if image.hol == d:
        return 1
    if image.hol == -d:
        return -1
    raise InternalCheckError("image holonomy is not +-D times the source")


# ---------------------------------------------------------------------------
# the rectangle solver

def fixed_points_in_rectangle(f, sigma: SaddleConnection,
                              cache: Optional[EdgeCache] = None
                              ) -> List[FixedPoint]:
    """Regular fixed points of f inside sigma's spanning rectangle.

    Every crossing of sigma with f(sigma) selects one affine branch of f
    over the rectangle; the branch's unique fixed point is kept when it
    lands in the open rectangle and survives an exact f(p) = p check.
    Points are deduplicated by canonical coordinates."""
    cache = cache or EdgeCache()
    surface = sigma.surface
    rect = is_veering_edge(sigma)
    if rect is None:
        raise NotVeering(
            "connection with holonomy (%s, %s) spans a singular rectangle"
            % (sigma.hol.x, sigma.hol.y))
    image = apply_to_edge(f, sigma, cache)
    s = _image_sign(f, sigma, image)
    dmat = _derivative_matrix(f)
    d1 = dmat.a if s == 1 else -dmat.a
    d2 = dmat.d if s == 1 else -dmat.d
    chart0, vidx0 = sigma.start_corner
    p0 = surface.polygons[chart0].vertices[vidx0]
    qchart, qvidx = image.start_corner
    q0 = surface.polygons[qchart].vertices[qvidx]
    x0, x1, y0, y1 = rect.bounds
    one = surface.field.one()
    found: Dict[object, FixedPoint] = {}
    for rec in _crossing_data(sigma, image):
        (ea, sa) = rec[4]
        (eb, sb) = rec[5]
        e = ea * eb
        # branch g of f in sigma's frame: the lift of f along sigma is
        # z -> diag(d1, d2)(z - p0) + q0 into the image frame, composed
        # with the deck motion w -> e*w + (sa - e*sb) back to sigma's.
        l1 = d1 if e == 1 else -d1
        l2 = d2 if e == 1 else -d2
        base = (q0 + sa - sb) if e == 1 else (sa + sb - q0)
        zx = (base.x - l1 * p0.x) / (one - l1)
        zy = (base.y - l2 * p0.y) / (one - l2)
        if not ((zx - x0).sign() > 0 and (x1 - zx).sign() > 0
                and (zy - y0).sign() > 0 and (y1 - zy).sign() > 0):
            continue
        z = Vec2(zx, zy)
        sp = None
        for (chart, eps, shift) in rect.placements:
            local = _place_unapply(eps, shift, z)
            if surface.polygons[chart].contains(local) >= 1:
                sp = SurfacePoint(chart, local)
                break
        if sp is None:
            raise InternalCheckError(
                "rectangle point escapes the rectangle's own unfolding")
        if not _same_point(surface, f.apply(sp), sp):
            continue
        kind, key, rep = surface.canonical_point(sp)
        if kind == "vertex":
            raise InternalCheckError("open rectangle contains a vertex")
        if key not in found:
            found[key] = FixedPoint(rep.chart, rep.pos, "regular", -1, key)
    return sorted(found.values(), key=lambda p: p.sort_key())


# ---------------------------------------------------------------------------
# singular points and indices

def _horizontal_germs(surface: FlatSurface, cone):
    """The unstable prongs at a cone point: one horizontal germ per half
    plane of the cone angle, each canonicalized by its owning corner."""
    field = surface.field
    plus = Vec2(field.one(), field.zero())
    germs = []
    for corner in sorted(cone.corners):
        chart, v = corner
        poly = surface.polygons[chart]
        n = len(poly)
        pv = poly.vertices[v]
        out = poly.vertices[(v + 1) % n] - pv
        back = poly.vertices[(v - 1) % n] - pv
        for d in (plus, -plus):
            if _wedge_contains(out, back, d):
                c2, d2 = _corner_for_ray(surface, chart, v, d)
                germs.append((c2, 1 if d2.x.sign() > 0 else -1))
    if len(germs) != cone.prongs:
        raise InternalCheckError(
            "cone of angle %d*pi carries %d horizontal germs"
            % (cone.angle_pi, len(germs)))
    return germs


def _point_charts(surface: FlatSurface, sp: SurfacePoint):
    """sp together with its twin on the other side of a glued edge."""
    out = [sp]
    poly = surface.polygons[sp.chart]
    n = len(poly)
    for e in range(n):
        a = poly.vertices[e]
        b = poly.vertices[(e + 1) % n]
        if on_segment(sp.pos, a, b) and sp.pos != a and sp.pos != b:
            out.append(surface.cross_edge((sp.chart, e), sp.pos))
            break
    return out


def _match_horizontal(surface: FlatSurface, cone, sp: SurfacePoint):
    """Germ of the horizontal ray reaching sp from a vertex of the cone's
    class inside one chart, or None when no vertex lines up."""
    for rep in _point_charts(surface, sp):
        ipoly = surface.polygons[rep.chart]
        for vi in range(len(ipoly)):
            if surface.corner_class[(rep.chart, vi)] != cone.id:
                continue
            off = rep.pos - ipoly.vertices[vi]
            if not off.y.is_zero() or off.x.sign() == 0:
                continue
            c2, d2 = _corner_for_ray(surface, rep.chart, vi, off)
            return (c2, 1 if d2.x.sign() > 0 else -1)
    return None


def _germ_image(f, surface: FlatSurface, cone, germ):
    """Image prong of a horizontal germ under f, by an exact probe point.

    The probe distance shrinks until the image point is horizontally
    visible from the image vertex within a single chart; a too-long probe
    wraps around the surface and lines up with nothing."""
    (chart, v), xsign = germ
    poly = surface.polygons[chart]
    pv = poly.vertices[v]
    d = Vec2(surface.field.rational(Fraction(xsign, 1)), surface.field.zero())
    t = Fraction(1, 2)
    for _ in range(80):
        pt = pv + d.scale(surface.field.rational(t))
        if poly.contains(pt) >= 1:
            hit = _match_horizontal(surface, cone, f.apply(SurfacePoint(chart, pt)))
            if hit is not None:
                return hit
        t = t / 4
    raise InternalCheckError("prong image is not a horizontal germ")


def _singular_index(f, surface: FlatSurface, cone) -> int:
    germs = _horizontal_germs(surface, cone)
    fixed = 0
    for g in germs:
        if _germ_image(f, surface, cone, g) == g:
            fixed += 1
    if fixed == len(germs):
        return 1 - len(germs)
    if fixed == 0:
        return 1
    raise InternalCheckError(
        "cone point fixes %d of %d prongs; partially rotated prongs "
        "have no index convention here" % (fixed, len(germs)))


def fixed_point_index(p: FixedPoint, f) -> int:
    """Index of a fixed point: -1 at regular points; at a singular or
    marked point +1 when f rotates the unstable prongs and 1 - prongs
    when it fixes each of them."""
    surface = f.surface
    sp = SurfacePoint(p.chart, p.pos)
    if not _same_point(surface, f.apply(sp), sp):
        raise NotFixed("point %r moves under the map" % (p,))
    if p.kind == "regular":
        return -1
    cls = surface.vertex_class_at(sp)
    if cls is None:
        raise InputError("singular fixed point is not at a vertex")
    return _singular_index(f, surface, surface.cone_points[cls])


def _singular_fixed_points(f) -> List[FixedPoint]:
    surface = f.surface
    out = []
    for cone in surface.cone_points:
        if f.singularity_permutation.get(cone.id) != cone.id:
            continue
        sp = surface.vertex_point(cone.id)
        if not _same_point(surface, f.apply(sp), sp):
            raise InternalCheckError(
                "singularity permutation fixes class %d but the point moves"
                % cone.id)
        kind = "marked" if cone.is_marked else "cone"
        idx = _singular_index(f, surface, cone)
        out.append(FixedPoint(sp.chart, sp.pos, kind, idx,
                              ("vertex", cone.id)))
    return out


# ---------------------------------------------------------------------------
# the main counter

def count_fixed_points(f, cache: Optional[EdgeCache] = None) -> FixReport:
    """Exact Fix(f): rectangle solves over an annular-avoiding f-section,
    deduplicated, plus the fixed singular and marked points."""
    cache = cache or EdgeCache()
    section = annular_avoiding_f_section(f)
    per_edge = {}
    seen: Dict[str, FixedPoint] = {}
    for e in section.edges:
        pts = fixed_points_in_rectangle(f, e, cache)
        per_edge[e] = tuple(pts)
        for fp in pts:
            seen.setdefault(repr(fp.key), fp)
    points = list(seen.values()) + _singular_fixed_points(f)
    lef = lefschetz_number(f, section=section, cache=cache)
    return FixReport(points, per_edge, lef, "fundamental")


def max_edge(T: Section, f) -> SaddleConnection:
    """Edge of T with the largest crossing number with its own image;
    ties go to the earliest edge in the section's deterministic order."""
    best = None
    best_n = -1
    for e in T.edges:
        image = apply_to_edge(f, e, T.cache)
        n = len(_crossing_data(e, image))
        if n > best_n:
            best, best_n = e, n
    return best


# ---------------------------------------------------------------------------
# triangle development for the oracle

def _start_coords(sc: SaddleConnection) -> Vec2:
    chart, vidx = sc.start_corner
    return sc.surface.polygons[chart].vertices[vidx]


def _transport_places(sc: SaddleConnection, t: Vec2):
    """sc's chart placements pushed through the translation z -> z + t."""
    return [(chart, e, sh + t) for (chart, e, sh) in sc.placements]


def _face_development(face):
    """Develop a triangular face in its first edge's walk frame.

    The face tuple traverses the boundary coherently with the interior on
    the left, so the holonomies close up counterclockwise.  Returns the
    developed triangle and seed placements from all three walks."""
    r0, r1, r2 = face
    if not (r0.hol + r1.hol + r2.hol).is_zero():
        raise InternalCheckError("face boundary does not close up")
    if r0.hol.cross(r1.hol).sign() <= 0:
        raise InternalCheckError("face development is not counterclockwise")
    v0 = _start_coords(r0)
    v1 = v0 + r0.hol
    v2 = v1 + r1.hol
    tri = ConvexPolygon([v0, v1, v2])
    seeds = list(r0.placements)
    seeds += _transport_places(r1, v1 - _start_coords(r1))
    seeds += _transport_places(r2, v2 - _start_coords(r2))
    return tri, seeds


def _chord_in_region(region: ConvexPolygon, a: Vec2, b: Vec2) -> bool:
    """Does segment (a, b) meet the closed region in a positive-length
    chord?  Used to decide which gluings an unfolding must cross; chords
    along the boundary count, so covers can walk around the region."""
    field = region.vertices[0].x.field
    lo, hi = field.zero(), field.one()
    r = b - a
    vs = region.vertices
    n = len(vs)
    for i in range(n):
        p, q = vs[i], vs[(i + 1) % n]
        d = q - p
        num = (p - a).cross(d)
        den = r.cross(d)
        sden = den.sign()
        if sden == 0:
            if num.sign() < 0:
                return False
            continue
        t = num / den
        if sden > 0:
            if (t - hi).sign() < 0:
                hi = t
        else:
            if (t - lo).sign() > 0:
                lo = t
        if (hi - lo).sign() <= 0:
            return False
    mid = a + r.scale((lo + hi) / 2)
    return region.contains(mid) >= 1


def _cover_region(surface: FlatSurface, seeds, region: ConvexPolygon,
                  allow_interior_vertices: bool = False):
    """Chart placements covering a developed convex region.

    Returns [(chart, eps, shift, piece)] with piece the chart-coordinate
    pullback of the region clipped to the placed polygon.  The search
    expands across every gluing whose edge meets the region."""
    seen = {}
    queue = []
    for (chart, eps, shift) in seeds:
        key = _place_key(chart, eps, shift)
        if key not in seen:
            seen[key] = None
            queue.append((chart, eps, shift))
    out = []
    popped = 0
    while queue:
        chart, eps, shift = queue.pop()
        popped += 1
        if popped > _COVER_CAP:
            raise InternalCheckError("region unfolding exploded")
        poly = surface.polygons[chart]
        placed = [_place_apply(eps, shift, v) for v in poly.vertices]
        if not allow_interior_vertices:
            for w in placed:
                if region.contains(w) == 2:
                    raise InternalCheckError(
                        "developed region covers a singular point")
        clip = ConvexPolygon(placed).intersect(region)
        if clip is not None:
            piece = ConvexPolygon(
                [_place_unapply(eps, shift, v) for v in clip.vertices])
            out.append((chart, eps, shift, piece))
        m = len(poly)
        for e in range(m):
            a, b = placed[e], placed[(e + 1) % m]
            if not _chord_in_region(region, a, b):
                continue
            tr = surface.transitions[(chart, e)]
            eps2, shift2 = _place_cross(eps, shift, tr)
            key = _place_key(tr.target[0], eps2, shift2)
            if key in seen:
                continue
            seen[key] = None
            queue.append((tr.target[0], eps2, shift2))
    return out


def oracle_count_fixed_points(f, T: Section) -> FixReport:
    """Brute force counter: clip every triangle of T against its f-image
    across charts and solve the branch fixed point equation per overlap
    piece.  Independent of the rectangle route; totals must agree."""
    surface = T.surface
    cache = T.cache
    dmat = _derivative_matrix(f)
    one = surface.field.one()
    seen: Dict[str, FixedPoint] = {}
    for face in T.triangles:
        tri, seeds = _face_development(face)
        cover = _cover_region(surface, seeds, tri)
        images = tuple(apply_to_edge(f, r, cache) for r in face)
        itri, iseeds = _face_development(images)
        icover = _cover_region(surface, iseeds, itri)
        s = _image_sign(f, face[0], images[0])
        d1 = dmat.a if s == 1 else -dmat.a
        d2 = dmat.d if s == 1 else -dmat.d
        p0 = _start_coords(face[0])
        q0 = _start_coords(images[0])
        by_chart: Dict[int, list] = {}
        for (chart, eps, shift, piece) in icover:
            by_chart.setdefault(chart, []).append((eps, shift, piece))
        for (chart, ea, sa, piece_a) in cover:
            for (eb, sb, piece_b) in by_chart.get(chart, ()):
                overlap = piece_a.intersect(piece_b)
                if overlap is None:
                    continue
                # branch of f from chart to chart through the two frames:
                # z -> eb*(J(ea*z + sa) - sb), J(w) = diag(d1,d2)(w-p0)+q0
                l1 = ea * eb * d1
                l2 = ea * eb * d2
                cvec = Vec2(d1 * (sa.x - p0.x) + q0.x - sb.x,
                            d2 * (sa.y - p0.y) + q0.y - sb.y)
                if eb == -1:
                    cvec = -cvec
                z = Vec2(cvec.x / (one - l1), cvec.y / (one - l2))
                if overlap.contains(z) == 0:
                    continue
                sp = SurfacePoint(chart, z)
                if not _same_point(surface, f.apply(sp), sp):
                    continue
                kind, key, rep = surface.canonical_point(sp)
                if kind == "vertex":
                    continue
                if repr(key) not in seen:
                    seen[repr(key)] = FixedPoint(
                        rep.chart, rep.pos, "regular", -1, key)
    points = list(seen.values()) + _singular_fixed_points(f)
    lef = lefschetz_number(f, section=T, cache=cache)
    return FixReport(points, {}, lef, "oracle")


# ---------------------------------------------------------------------------
# homological Lefschetz number

def _germ_cmp(fan, a, b) -> int:
    """Counterclockwise order of two outgoing germs at one vertex class.

    A germ is ((chart, vertex), direction).  Primary key is the owning
    corner's fan position, secondary the angle inside the wedge."""
    (ca, da), (cb, db) = a, b
    pa, pb = fan[ca][1], fan[cb][1]
    if pa != pb:
        return -1 if pa < pb else 1
    s = da.cross(db).sign()
    if s == 0:
        if da.dot(db).sign() > 0:
            return 0
        raise InternalCheckError("opposite germs share a corner wedge")
    return -1 if s > 0 else 1


def _cyclic_between(fan, a, x, b) -> bool:
    """Is x strictly inside the counterclockwise wedge from a to b?"""
    ax = _germ_cmp(fan, a, x)
    xb = _germ_cmp(fan, x, b)
    if ax == 0 or xb == 0:
        return False
    ab = _germ_cmp(fan, a, b)
    if ab < 0:
        return ax < 0 and xb < 0
    return ax < 0 or xb < 0


def _germ_of(sc: SaddleConnection):
    return (sc.start_corner, sc.hol)


class _Comb:
    """Rewrites arcs between singularities as chains of section edges,
    exact modulo face boundaries."""

    def __init__(self, section: Section):
        self.section = section
        self.cache = section.cache
        self.surface = section.surface
        self.fan = _vertex_fan_positions(section.surface)
        self.faces = section.triangles
        self.corner_class = section.surface.corner_class

    def _locate_germ(self, germ):
        """(face, corner position) whose wedge contains the germ."""
        cls = self.corner_class[germ[0]]
        hits = []
        for face in self.faces:
            for j in range(3):
                rj = face[j]
                if self.corner_class[rj.start_corner] != cls:
                    continue
                a = _germ_of(rj)
                b = _germ_of(self.cache.reverse(face[j - 1]))
                if _cyclic_between(self.fan, a, germ, b):
                    hits.append((face, j))
        if len(hits) != 1:
            raise InternalCheckError(
                "germ lies in %d face corners instead of one" % len(hits))
        return hits[0]

    def _kappa(self, face, c: SaddleConnection) -> int:
        """Corner position of c's canonical start vertex inside face."""
        rev = self.cache.reverse(c)
        for k in range(3):
            if face[k] == c:
                return k
            if face[k] == rev:
                return (k + 1) % 3
        raise InternalCheckError("edge is not a side of the face")

    def _route(self, face, i: int, j: int, chain: Dict):
        k = i
        while k != j:
            rep = face[k]
            can = self.cache.canonical(rep)
            chain[can] = chain.get(can, 0) + (1 if rep == can else -1)
            k = (k + 1) % 3

    def chain_of(self, arc: SaddleConnection) -> Dict[SaddleConnection, int]:
        """arc as an integer chain of section edges, mod face boundaries."""
        can = self.cache.canonical(arc)
        if can in self.section.edge_set:
            return {can: 1 if arc == can else -1}
        events = []
        for c in self.section.edges:
            for rec in _crossing_data(c, arc):
                events.append((rec[1], c, rec[6]))
        events.sort(key=lambda ev: ev[0])
        for i in range(1, len(events)):
            if events[i][0] == events[i - 1][0]:
                raise InternalCheckError("two crossings at one arc point")
        face0, j0 = self._locate_germ(_germ_of(arc))
        face1, j1 = self._locate_germ(_germ_of(self.cache.reverse(arc)))
        chain: Dict[SaddleConnection, int] = {}
        if not events:
            if face0 is not face1:
                raise InternalCheckError(
                    "uncrossed arc starts and ends in different faces")
            self._route(face0, j0, j1, chain)
            return chain
        cur_face, cur_pos = face0, j0
        for (_, c, side) in events:
            pre = self.section.face_of(self.cache.reverse(c)) if side > 0 \
                else self.section.face_of(c)
            if pre is not cur_face:
                raise InternalCheckError("crossing sequence skips a face")
            self._route(cur_face, cur_pos, self._kappa(cur_face, c), chain)
            cur_face = self.section.face_of(c) if side > 0 \
                else self.section.face_of(self.cache.reverse(c))
            cur_pos = self._kappa(cur_face, c)
        if cur_face is not face1:
            raise InternalCheckError("arc does not end in the entered face")
        self._route(cur_face, cur_pos, j1, chain)
        return chain


def lefschetz_number(f, section: Optional[Section] = None,
                     cache: Optional[EdgeCache] = None) -> int:
    """2 minus the trace of f on first homology of the closed surface,
    computed from the action on cycles of section edges."""
    import sympy

    if section is None:
        section = f_section(f)
    cache = cache or section.cache
    surface = section.surface
    comb = _Comb(section)
    edges = section.edges
    idx = {e: i for i, e in enumerate(edges)}
    ne = len(edges)
    phi = sympy.zeros(ne, ne)
    for j, e in enumerate(edges):
        image = apply_to_edge(f, e, cache)
        for c, coeff in comb.chain_of(image).items():
            phi[idx[c], j] = coeff
    ends = {}
    for e in edges:
        ends[e] = (surface.corner_class[e.start_corner],
                   surface.corner_class[e.end_corner])
    classes = sorted({cls for pair in ends.values() for cls in pair})
    if classes != sorted(c.id for c in surface.cone_points):
        raise InternalCheckError("section edges miss a vertex class")
    crow = {c: i for i, c in enumerate(classes)}
    bdry1 = sympy.zeros(len(classes), ne)
    for j, e in enumerate(edges):
        a, b = ends[e]
        bdry1[crow[b], j] += 1
        bdry1[crow[a], j] -= 1
    cols = []
    for face in comb.faces:
        col = sympy.zeros(ne, 1)
        for rep in face:
            can = cache.canonical(rep)
            col[idx[can], 0] += 1 if rep == can else -1
        cols.append(col)
    bdry2 = sympy.Matrix.hstack(*cols)
    nullvecs = bdry1.nullspace()
    zbasis = sympy.Matrix.hstack(*nullvecs) if nullvecs else sympy.zeros(ne, 0)
    bcols = bdry2.columnspace()
    bbasis = sympy.Matrix.hstack(*bcols) if bcols else sympy.zeros(ne, 0)
    if (bdry1 * bbasis) != sympy.zeros(len(classes), bbasis.shape[1]):
        raise InternalCheckError("face boundaries are not cycles")
    if (bdry1 * phi * zbasis) != sympy.zeros(len(classes), zbasis.shape[1]):
        raise InternalCheckError("chain map does not preserve cycles")
    tr_z = _restricted_trace(phi, zbasis) if zbasis.shape[1] else 0
    tr_b = _restricted_trace(phi, bbasis) if bbasis.shape[1] else 0
    trace = tr_z - tr_b
    if int(trace) != trace:
        raise InternalCheckError("homology trace %s is not an integer"
                                 % (trace,))
    return 2 - int(trace)


def _restricted_trace(phi, w):
    """Trace of phi on the invariant column space of w (verified)."""
    gram = w.T * w
    a = gram.solve(w.T * (phi * w))
    if (w * a) != (phi * w):
        raise InternalCheckError(
            "subspace is not invariant under the chain map")
    return a.trace()


# ---------------------------------------------------------------------------
# the Markov style upper bound

class MarkovBound:
    """An integer upper bound for #Fix(f) from rectangle crossing counts,
    with a rational interval around the crossing matrix's Perron root."""

    __slots__ = ("bound", "matrix", "perron_interval", "method")

    def __init__(self, bound, matrix, perron_interval, method):
        self.bound = bound
        self.matrix = matrix
        self.perron_interval = perron_interval
        self.method = method

    def __repr__(self):
        return "MarkovBound(%d, method=%s)" % (self.bound, self.method)

    def __int__(self):
        return self.bound

    def __le__(self, other):
        return self.bound <= other

    def __ge__(self, other):
        return self.bound >= other


def _branch_maps(rect_a, rect_b):
    """Deduplicated plane motions carrying rect_b's frame into rect_a's,
    read off chart placements the two unfoldings share."""
    by_chart: Dict[int, list] = {}
    for (chart, eps, shift) in rect_b.placements:
        by_chart.setdefault(chart, []).append((eps, shift))
    seen = {}
    for (chart, ea, sa) in rect_a.placements:
        for (eb, sb) in by_chart.get(chart, ()):
            e = ea * eb
            t = (sa - sb) if e == 1 else (sa + sb)
            key = (e, t.x, t.y)
            if key not in seen:
                seen[key] = (e, t)
    return list(seen.values())


def _full_width_crossings(rect_a, rect_b) -> int:
    """Copies of rect_b's rectangle crossing rect_a's over its full width."""
    ax0, ax1, ay0, ay1 = rect_a.bounds
    bx0, bx1, by0, by1 = rect_b.bounds
    count = 0
    for (e, t) in _branch_maps(rect_a, rect_b):
        if e == 1:
            cx0, cx1 = bx0 + t.x, bx1 + t.x
            cy0, cy1 = by0 + t.y, by1 + t.y
        else:
            cx0, cx1 = t.x - bx1, t.x - bx0
            cy0, cy1 = t.y - by1, t.y - by0
        if ((cx0 - ax0).sign() <= 0 and (ax1 - cx1).sign() <= 0
                and (cy1 - ay0).sign() > 0 and (ay1 - cy0).sign() > 0):
            count += 1
    return count


def _perron_interval(n_matrix) -> Tuple[Fraction, Fraction]:
    """Collatz-Wielandt bracket for the Perron root, exact rationals.

    Iterates N + I so the test vector stays positive, then shifts back."""
    n = len(n_matrix)
    v = [Fraction(1)] * n
    for _ in range(12):
        w = [sum(n_matrix[i][j] * v[j] for j in range(n)) + v[i]
             for i in range(n)]
        big = max(w)
        v = [x / big for x in w]
    w = [sum(n_matrix[i][j] * v[j] for j in range(n)) + v[i]
         for i in range(n)]
    ratios = [w[i] / v[i] for i in range(n)]
    return (min(ratios) - 1, max(ratios) - 1)


def markov_upper_bound(f, pair_budget: int = 200000) -> MarkovBound:
    """Upper bound for the number of fixed points.

    When affordable, builds the full matrix of full-width crossings of
    each section rectangle by every image rectangle and scales its trace;
    otherwise falls back to the edge-image crossing numbers, which bound
    the per-rectangle branch counts from above."""
    cache = EdgeCache()
    section = annular_avoiding_f_section(f)
    surface = section.surface
    chi = section_size(surface) // 3
    nsing = len(surface.cone_points)
    rects = [cache.rect(e) for e in section.edges]
    images = [apply_to_edge(f, e, cache) for e in section.edges]
    irects = [is_veering_edge(im) for im in images]
    if any(r is None for r in irects):
        raise InternalCheckError("image of a veering edge is not veering")
    work = sum(len(r.placements) for r in rects) \
        * sum(len(r.placements) for r in irects)
    if work <= pair_budget:
        n = len(rects)
        mat = [[_full_width_crossings(rects[i], irects[j]) for j in range(n)]
               for i in range(n)]
        trace = sum(mat[i][i] for i in range(n))
        bound = 9 * chi * trace + nsing
        return MarkovBound(bound, mat, _perron_interval(mat), "rectangle")
    total = 0
    for e, im in zip(section.edges, images):
        total += len(_crossing_data(e, im))
    bound = 9 * chi * (total + 1) + nsing
    return MarkovBound(bound, None, None, "crossing-trace")
