"""Half-translation surfaces presented by glued convex polygons.

A surface is a finite list of strictly convex polygons with an involutive
edge pairing.  Each pairing is a `translation` (partner edge vector is the
negative) or a `halfturn` (partner edge vector is equal, glued by a point
reflection).  Every polygon vertex lands in a vertex class; classes carry a
cone angle that is an exact integer multiple of pi, computed by developing
the corner fan around the class.

Conventions baked in here and relied on everywhere else:

* crossing edge e of polygon P into its partner e' of Q sends z to z + t
  (translation) or -z + t (halfturn), with t chosen so endpoints match;
* vertex classes of angle exactly 2*pi must be marked; unmarked flat
  vertices are rejected rather than silently smoothed away;
* an edge may not be glued to itself (fold points would hide angle-pi cone
  points inside edges, which the validator cannot see).
"""

from __future__ import annotations

from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .errors import (
    ConeAngleError,
    GaussBonnetViolation,
    InputError,
    InternalCheckError,
    LengthMismatch,
    UnmarkedConePoint,
    UnmatchedEdge,
)
from .exactnum import FieldElement, RealNumberField
from .geom import AffineMap, ConvexPolygon, Mat2, Vec2, on_segment

EdgeRef = Tuple[int, int]  # (polygon index, edge index)


class Transition:
    """Chart change when crossing a glued edge."""

    __slots__ = ("source", "target", "map", "flip")

    def __init__(self, source: EdgeRef, target: EdgeRef, map_: AffineMap, flip: bool):
        self.source = source
        self.target = target
        self.map = map_
        self.flip = flip  # True for halfturn

    def __repr__(self):
        return "Transition(%s -> %s%s)" % (
            self.source, self.target, ", flip" if self.flip else "")


class ConePoint:
    __slots__ = ("id", "angle_pi", "is_marked", "corners")

    def __init__(self, id_: int, angle_pi: int, is_marked: bool, corners: frozenset):
        self.id = id_
        self.angle_pi = angle_pi  # cone angle in units of pi
        self.is_marked = is_marked
        self.corners = corners  # frozenset of (polygon, vertex) pairs

    @property
    def prongs(self) -> int:
        """Number of unstable (horizontal) prongs: angle / pi."""
        return self.angle_pi

    def __repr__(self):
        mark = ", marked" if self.is_marked else ""
        return "ConePoint(%d, angle %d*pi%s)" % (self.id, self.angle_pi, mark)


class SurfacePoint:
    """A point given in one polygon chart.  Use FlatSurface.canonical_point
    to compare points that may sit on shared edges."""

    __slots__ = ("chart", "pos")

    def __init__(self, chart: int, pos: Vec2):
        self.chart = chart
        self.pos = pos

    def __eq__(self, o):
        return isinstance(o, SurfacePoint) and self.chart == o.chart and self.pos == o.pos

    def __hash__(self):
        return hash((self.chart, self.pos))

    def __repr__(self):
        return "SurfacePoint(%d, %r)" % (self.chart, self.pos)


class FlatSurface:
    """Validated half-translation surface."""

    def __init__(self, field: RealNumberField, polygons: Sequence[ConvexPolygon],
                 gluings: Dict[EdgeRef, Tuple[EdgeRef, str]],
                 marked_corners: Sequence[EdgeRef] = (),
                 names: Optional[Sequence[str]] = None):
        self.field = field
        self.polygons = list(polygons)
        self.names = list(names) if names is not None else [
            "P%d" % i for i in range(len(self.polygons))]
        if len(set(self.names)) != len(self.names):
            raise InputError("duplicate polygon names")
        self._validate_gluings(gluings)
        self.gluings = dict(gluings)
        self._build_transitions()
        self._build_vertex_classes()
        self._compute_cone_angles()
        self._apply_marks(marked_corners)
        self._check_gauss_bonnet()

    # -- validation steps ----------------------------------------------------

    def _validate_gluings(self, gluings):
        all_edges = set()
        for p, poly in enumerate(self.polygons):
            for e in range(len(poly)):
                all_edges.add((p, e))
        seen = {}
        for edge, (partner, kind) in gluings.items():
            if edge not in all_edges:
                raise UnmatchedEdge("gluing names nonexistent edge %s" % (edge,))
            if partner not in all_edges:
                raise UnmatchedEdge("gluing names nonexistent edge %s" % (partner,))
            if kind not in ("translation", "halfturn"):
                raise InputError("unknown gluing kind %r" % kind)
            if edge == partner:
                raise UnmatchedEdge(
                    "edge %s glued to itself; subdivide the polygon instead "
                    "(self-gluings hide fold points)" % (edge,))
            seen[edge] = (partner, kind)
        for edge in all_edges:
            if edge not in seen:
                raise UnmatchedEdge("edge %s is not glued" % (edge,))
        for edge, (partner, kind) in seen.items():
            back = seen.get(partner)
            if back != (edge, kind):
                raise UnmatchedEdge(
                    "gluing is not an involution at %s <-> %s" % (edge, partner))
        # edge vector compatibility
        for edge, (partner, kind) in seen.items():
            v = self.polygons[edge[0]].edge_vector(edge[1])
            w = self.polygons[partner[0]].edge_vector(partner[1])
            if kind == "translation":
                if not (v + w).is_zero():
                    raise LengthMismatch(
                        "translation-glued edges %s, %s need opposite vectors; "
                        "got %r and %r" % (edge, partner, v, w))
            else:
                if not (v - w).is_zero():
                    raise LengthMismatch(
                        "halfturn-glued edges %s, %s need equal vectors; "
                        "got %r and %r" % (edge, partner, v, w))

    def _build_transitions(self):
        self.transitions: Dict[EdgeRef, Transition] = {}
        one = self.field.one()
        for edge, (partner, kind) in self.gluings.items():
            p, e = edge
            q, e2 = partner
            a = self.polygons[p].vertices[e]
            qverts = self.polygons[q].vertices
            b2 = qverts[(e2 + 1) % len(qverts)]
            if kind == "translation":
                m = AffineMap(Mat2.identity(self.field), b2 - a)
                flip = False
            else:
                m = AffineMap(Mat2.diagonal(-one, -one), a + b2)
                flip = True
            self.transitions[edge] = Transition(edge, partner, m, flip)

    def _build_vertex_classes(self):
        corners = []
        for p, poly in enumerate(self.polygons):
            for v in range(len(poly)):
                corners.append((p, v))
        parent = {c: c for c in corners}

        def find(c):
            while parent[c] != c:
                parent[c] = parent[parent[c]]
                c = parent[c]
            return c

        def union(c1, c2):
            r1, r2 = find(c1), find(c2)
            if r1 != r2:
                parent[r1] = r2

        for (p, e), ((q, e2), kind) in self.gluings.items():
            np_, nq = len(self.polygons[p]), len(self.polygons[q])
            # start of e ~ end of partner, end of e ~ start of partner
            union((p, e), (q, (e2 + 1) % nq))
            union((p, (e + 1) % np_), (q, e2))
        groups: Dict[EdgeRef, set] = {}
        for c in corners:
            groups.setdefault(find(c), set()).add(c)
        classes = sorted(groups.values(), key=lambda g: sorted(g)[0])
        self.corner_class: Dict[EdgeRef, int] = {}
        self._class_corners: List[frozenset] = []
        for i, g in enumerate(classes):
            self._class_corners.append(frozenset(g))
            for c in g:
                self.corner_class[c] = i

    def _corner_rays(self, corner: EdgeRef) -> Tuple[Vec2, Vec2]:
        """Outgoing edge direction and direction toward the previous vertex,
        both based at the corner."""
        p, v = corner
        poly = self.polygons[p]
        n = len(poly)
        out = poly.vertices[(v + 1) % n] - poly.vertices[v]
        back = poly.vertices[(v - 1) % n] - poly.vertices[v]
        return out, back

    def _compute_cone_angles(self):
        self.cone_points: List[ConePoint] = []
        for cls_index, corners in enumerate(self._class_corners):
            start = sorted(corners)[0]
            angle = self._develop_angle(start, corners)
            self.cone_points.append(
                ConePoint(cls_index, angle, False, corners))

    def _develop_angle(self, start: EdgeRef, expected_corners: frozenset) -> int:
        """Walk the corner fan around a vertex class, counting half-turns."""
        d0, _ = self._corner_rays(start)
        d = d0
        crossings = 0
        flips = 0
        corner = start
        visited = 0
        while True:
            out, back = self._corner_rays(corner)
            # rotate d by the corner angle: the scaled rotation taking ray
            # `out` to ray `back` (counterclockwise, interior angle < pi)
            if out.cross(back).sign() <= 0:
                raise InternalCheckError("corner angle not in (0, pi)")
            r = _ray_rotation(out, back)
            s_before = d0.cross(d).sign()
            d = r.apply(d)
            s_after = d0.cross(d).sign()
            if s_after == 0:
                crossings += 1
            elif s_before != 0 and s_before != s_after:
                crossings += 1
            visited += 1
            # cross the edge arriving at this vertex: edge (p, v-1)
            p, v = corner
            n = len(self.polygons[p])
            tr = self.transitions[(p, (v - 1) % n)]
            if tr.flip:
                # chart change negates coordinates; the geometric ray and the
                # reference line are unchanged, so this is not a crossing
                d = -d
                flips += 1
            corner = (tr.target[0], tr.target[1])
            if corner == start:
                break
            if visited > 4 * len(expected_corners) + 8:
                raise InternalCheckError("vertex fan walk did not close")
        if visited != len(expected_corners):
            raise InternalCheckError(
                "fan walk visited %d corners, class has %d"
                % (visited, len(expected_corners)))
        if d0.cross(d).sign() != 0:
            raise ConeAngleError(
                "developing walk around %s does not close on a multiple of pi"
                % (start,))
        if d0.dot(d).sign() != (1 if (crossings + flips) % 2 == 0 else -1):
            raise ConeAngleError(
                "developing walk around %s closes with inconsistent parity"
                % (start,))
        if crossings < 1:
            raise ConeAngleError("vertex class %s has zero angle" % (start,))
        return crossings

    def _apply_marks(self, marked_corners):
        marked_classes = set()
        for corner in marked_corners:
            if corner not in self.corner_class:
                raise InputError("mark names nonexistent corner %s" % (corner,))
            marked_classes.add(self.corner_class[corner])
        for cls in marked_classes:
            cp = self.cone_points[cls]
            if cp.angle_pi != 2:
                raise InputError(
                    "vertex class %d has angle %d*pi and cannot be marked "
                    "(marks are for angle-2pi classes only)" % (cls, cp.angle_pi))
            cp.is_marked = True
        for cp in self.cone_points:
            if cp.angle_pi == 2 and not cp.is_marked:
                raise UnmarkedConePoint(
                    "vertex class %d has cone angle exactly 2*pi but is not "
                    "marked; mark it or remove the flat vertex" % cp.id)

    def _check_gauss_bonnet(self):
        v = len(self.cone_points)
        e = sum(len(p) for p in self.polygons) // 2
        f = len(self.polygons)
        self.euler_char = v - e + f
        excess = sum(cp.angle_pi - 2 for cp in self.cone_points)
        if excess != -2 * self.euler_char:
            raise GaussBonnetViolation(
                "total angle excess %d*pi does not match -2*chi = %d"
                % (excess, -2 * self.euler_char))
        if self.euler_char % 2 != 0:
            raise GaussBonnetViolation(
                "odd Euler characteristic %d: surface not closed orientable"
                % self.euler_char)
        self.genus = (2 - self.euler_char) // 2

    # -- derived data ----------------------------------------------------------

    @property
    def chi_punctured(self) -> int:
        """Euler characteristic of the surface punctured at every vertex class."""
        return self.euler_char - len(self.cone_points)

    def area2(self) -> FieldElement:
        total = self.field.zero()
        for poly in self.polygons:
            total = total + poly.area2()
        return total

    def singular_classes(self):
        """Cone points with angle != 2*pi (true singularities)."""
        return [cp for cp in self.cone_points if cp.angle_pi != 2]

    def vertex_point(self, cls: int) -> SurfacePoint:
        p, v = sorted(self._class_corners[cls])[0]
        return SurfacePoint(p, self.polygons[p].vertices[v])

    def vertex_class_at(self, sp: SurfacePoint) -> Optional[int]:
        poly = self.polygons[sp.chart]
        for v, vert in enumerate(poly.vertices):
            if vert == sp.pos:
                return self.corner_class[(sp.chart, v)]
        return None

    # -- point bookkeeping -----------------------------------------------------

    def cross_edge(self, edge: EdgeRef, pos: Vec2) -> SurfacePoint:
        tr = self.transitions[edge]
        return SurfacePoint(tr.target[0], tr.map.apply(pos))

    def canonical_point(self, sp: SurfacePoint) -> Tuple[str, object, SurfacePoint]:
        """Classify and canonicalize: returns (kind, key, representative).

        kind is "interior", "edge", or "vertex"; key is hashable and equal
        exactly when the surface points coincide."""
        poly = self.polygons[sp.chart]
        cls = self.vertex_class_at(sp)
        if cls is not None:
            return ("vertex", cls, self.vertex_point(cls))
        c = poly.contains(sp.pos)
        if c == 2:
            return ("interior", (sp.chart, sp.pos.x.coeffs, sp.pos.y.coeffs), sp)
        if c == 0:
            raise InputError("point %r lies outside its chart" % (sp,))
        # on an edge interior: normalize to the smaller edge reference
        for e, (a, b) in enumerate(poly.edges()):
            if on_segment(sp.pos, a, b):
                partner, _ = self.gluings[(sp.chart, e)]
                if partner < (sp.chart, e):
                    other = self.cross_edge((sp.chart, e), sp.pos)
                    return ("edge",
                            (partner, other.pos.x.coeffs, other.pos.y.coeffs),
                            other)
                return ("edge", ((sp.chart, e), sp.pos.x.coeffs, sp.pos.y.coeffs), sp)
        raise InternalCheckError("boundary point not on any edge")

    def same_point(self, a: SurfacePoint, b: SurfacePoint) -> bool:
        return self.canonical_point(a)[:2] == self.canonical_point(b)[:2]

    def locate(self, sp: SurfacePoint) -> int:
        """Containment class of the position in its chart (2/1/0)."""
        return self.polygons[sp.chart].contains(sp.pos)

    def __repr__(self):
        return "FlatSurface(%d polygons, genus %d, %d cone points)" % (
            len(self.polygons), self.genus, len(self.cone_points))


def _ray_rotation(u: Vec2, w: Vec2) -> Mat2:
    """The rotation-and-scale fixing 0 and taking ray u to ray w."""
    nn = u.dot(u)
    alpha = (u.x * w.x + u.y * w.y) / nn
    beta = (u.x * w.y - u.y * w.x) / nn
    return Mat2(alpha, -beta, beta, alpha)
