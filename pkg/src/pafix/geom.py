"""Exact planar geometry over a real number field.

Everything here is decided by exact sign computations; floats appear only in
the conservative bounding-box prefilters, which may claim "maybe" but never
lie about "no".
"""

from __future__ import annotations

from typing import Iterable, Optional, Sequence

from .errors import InternalCheckError, NonConvexPolygon
from .exactnum import FieldElement, RealNumberField


class Vec2:
    __slots__ = ("x", "y")

    def __init__(self, x: FieldElement, y: FieldElement):
        self.x = x
        self.y = y

    @property
    def field(self) -> RealNumberField:
        return self.x.field

    def __add__(self, o: "Vec2") -> "Vec2":
        return Vec2(self.x + o.x, self.y + o.y)

    def __sub__(self, o: "Vec2") -> "Vec2":
        return Vec2(self.x - o.x, self.y - o.y)

    def __neg__(self) -> "Vec2":
        return Vec2(-self.x, -self.y)

    def scale(self, s) -> "Vec2":
        return Vec2(self.x * s, self.y * s)

    def dot(self, o: "Vec2") -> FieldElement:
        return self.x * o.x + self.y * o.y

    def cross(self, o: "Vec2") -> FieldElement:
        return self.x * o.y - self.y * o.x

    def is_zero(self) -> bool:
        return self.x.is_zero() and self.y.is_zero()

    def __eq__(self, o):
        return isinstance(o, Vec2) and self.x == o.x and self.y == o.y

    def __ne__(self, o):
        return not self.__eq__(o)

    def __hash__(self):
        return hash((self.x, self.y))

    def __repr__(self):
        return "(%s, %s)" % (self.x, self.y)

    def key(self):
        """Deterministic sort key (coefficient tuples, exact)."""
        return (self.x.coeffs, self.y.coeffs)


class Mat2:
    __slots__ = ("a", "b", "c", "d")

    def __init__(self, a, b, c, d):
        self.a, self.b, self.c, self.d = a, b, c, d

    @classmethod
    def identity(cls, field: RealNumberField) -> "Mat2":
        return cls(field.one(), field.zero(), field.zero(), field.one())

    @classmethod
    def diagonal(cls, lam: FieldElement, mu: FieldElement) -> "Mat2":
        z = lam.field.zero()
        return cls(lam, z, z, mu)

    def apply(self, v: Vec2) -> Vec2:
        return Vec2(self.a * v.x + self.b * v.y, self.c * v.x + self.d * v.y)

    def __mul__(self, o: "Mat2") -> "Mat2":
        return Mat2(self.a * o.a + self.b * o.c, self.a * o.b + self.b * o.d,
                    self.c * o.a + self.d * o.c, self.c * o.b + self.d * o.d)

    def __neg__(self) -> "Mat2":
        return Mat2(-self.a, -self.b, -self.c, -self.d)

    def det(self) -> FieldElement:
        return self.a * self.d - self.b * self.c

    def trace(self) -> FieldElement:
        return self.a + self.d

    def inverse(self) -> "Mat2":
        dt = self.det()
        return Mat2(self.d / dt, -self.b / dt, -self.c / dt, self.a / dt)

    def __eq__(self, o):
        return (isinstance(o, Mat2) and self.a == o.a and self.b == o.b
                and self.c == o.c and self.d == o.d)

    def __hash__(self):
        return hash((self.a, self.b, self.c, self.d))

    def __repr__(self):
        return "[[%s, %s], [%s, %s]]" % (self.a, self.b, self.c, self.d)


class AffineMap:
    """z -> M z + t with exact entries."""

    __slots__ = ("mat", "shift")

    def __init__(self, mat: Mat2, shift: Vec2):
        self.mat = mat
        self.shift = shift

    @classmethod
    def identity(cls, field: RealNumberField) -> "AffineMap":
        return cls(Mat2.identity(field), Vec2(field.zero(), field.zero()))

    def apply(self, v: Vec2) -> Vec2:
        return self.mat.apply(v) + self.shift

    def compose(self, inner: "AffineMap") -> "AffineMap":
        # self after inner
        return AffineMap(self.mat * inner.mat, self.mat.apply(inner.shift) + self.shift)

    def inverse(self) -> "AffineMap":
        inv = self.mat.inverse()
        return AffineMap(inv, -inv.apply(self.shift))

    def __eq__(self, o):
        return isinstance(o, AffineMap) and self.mat == o.mat and self.shift == o.shift

    def __hash__(self):
        return hash((self.mat, self.shift))

    def __repr__(self):
        return "AffineMap(%r, %r)" % (self.mat, self.shift)


def orient(a: Vec2, b: Vec2, c: Vec2) -> int:
    """Sign of the signed area of triangle abc: +1 counterclockwise."""
    return (b - a).cross(c - a).sign()


def on_segment(p: Vec2, a: Vec2, b: Vec2) -> bool:
    """Is p on the closed segment ab (a != b)?"""
    if orient(a, b, p) != 0:
        return False
    d = b - a
    t = (p - a).dot(d)
    return t.sign() >= 0 and (t - d.dot(d)).sign() <= 0


def segment_intersection(a: Vec2, b: Vec2, c: Vec2, d: Vec2):
    """Exact intersection of closed segments ab and cd.

    Returns one of
      ("none",)
      ("point", p, t, u)   p = a + t(b-a) = c + u(d-c), t and u FieldElements in [0,1]
      ("overlap", p, q)    collinear with a shared segment [p, q] of positive length
    Degenerate (zero-length) segments are not supported.
    """
    r = b - a
    s = d - c
    denom = r.cross(s)
    ca = c - a
    if denom.sign() != 0:
        t = ca.cross(s) / denom
        u = ca.cross(r) / denom
        if t.sign() < 0 or (t - 1).sign() > 0 or u.sign() < 0 or (u - 1).sign() > 0:
            return ("none",)
        return ("point", a + r.scale(t), t, u)
    # parallel
    if ca.cross(r).sign() != 0:
        return ("none",)
    # collinear: parametrize by dot with r
    rr = r.dot(r)
    t0 = ca.dot(r) / rr
    t1 = t0 + s.dot(r) / rr
    lo, hi = (t0, t1) if (t1 - t0).sign() > 0 else (t1, t0)
    zero, one = a.field.zero(), a.field.one()
    lo2 = lo if (lo - zero).sign() > 0 else zero
    hi2 = hi if (hi - one).sign() < 0 else one
    cmp = (hi2 - lo2).sign()
    if cmp < 0:
        return ("none",)
    if cmp == 0:
        p = a + r.scale(lo2)
        # endpoint touch of collinear segments
        return ("point", p, lo2, (p - c).dot(s) / s.dot(s))
    return ("overlap", a + r.scale(lo2), a + r.scale(hi2))


def float_box(points: Iterable[Vec2]):
    """Conservative float bounding box (xlo, xhi, ylo, yhi)."""
    xlo = ylo = float("inf")
    xhi = yhi = float("-inf")
    for p in points:
        bx = p.x.float_bounds()
        by = p.y.float_bounds()
        xlo, xhi = min(xlo, bx[0]), max(xhi, bx[1])
        ylo, yhi = min(ylo, by[0]), max(yhi, by[1])
    return (xlo, xhi, ylo, yhi)


def boxes_disjoint(b1, b2) -> bool:
    return b1[1] < b2[0] or b2[1] < b1[0] or b1[3] < b2[2] or b2[3] < b1[2]


class ConvexPolygon:
    """Strictly convex polygon, vertices in counterclockwise order.

    Validation rejects repeated vertices, collinear triples, and clockwise
    order.  `relaxed` construction (used internally for clipped pieces)
    allows collinear vertices but still requires positive area and CCW.
    """

    __slots__ = ("vertices", "_box")

    def __init__(self, vertices: Sequence[Vec2], relaxed: bool = False):
        verts = list(vertices)
        if relaxed:
            verts = _drop_collinear(verts)
        if len(verts) < 3:
            raise NonConvexPolygon("polygon needs at least 3 vertices")
        n = len(verts)
        for i in range(n):
            a, b, c = verts[i], verts[(i + 1) % n], verts[(i + 2) % n]
            if orient(a, b, c) <= 0:
                raise NonConvexPolygon(
                    "vertices not in strictly convex counterclockwise position "
                    "near %r" % (b,))
        self.vertices = tuple(verts)
        self._box = None

    def __len__(self):
        return len(self.vertices)

    def edges(self):
        vs = self.vertices
        n = len(vs)
        return [(vs[i], vs[(i + 1) % n]) for i in range(n)]

    def edge_vector(self, i: int) -> Vec2:
        vs = self.vertices
        return vs[(i + 1) % len(vs)] - vs[i]

    def area2(self) -> FieldElement:
        """Twice the area, exact."""
        vs = self.vertices
        total = vs[0].field.zero()
        for i in range(1, len(vs) - 1):
            total = total + (vs[i] - vs[0]).cross(vs[i + 1] - vs[0])
        return total

    def contains(self, p: Vec2) -> int:
        """2 = interior, 1 = boundary, 0 = outside."""
        res = 2
        vs = self.vertices
        n = len(vs)
        for i in range(n):
            s = orient(vs[i], vs[(i + 1) % n], p)
            if s < 0:
                return 0
            if s == 0:
                # on the edge line; must be within the edge's span
                res = 1
        if res == 1 and not any(on_segment(p, a, b) for a, b in self.edges()):
            return 0
        return res

    def float_bbox(self):
        if self._box is None:
            self._box = float_box(self.vertices)
        return self._box

    def translate(self, t: Vec2) -> "ConvexPolygon":
        return ConvexPolygon([v + t for v in self.vertices])

    def transform(self, m: "AffineMap") -> "ConvexPolygon":
        verts = [m.apply(v) for v in self.vertices]
        if m.mat.det().sign() < 0:
            verts.reverse()
        return ConvexPolygon(verts)

    def clip_halfplane(self, p: Vec2, d: Vec2) -> Optional["ConvexPolygon"]:
        """Intersection with {z : cross(d, z - p) >= 0}, the closed halfplane
        to the left of the directed line through p with direction d.
        Returns None when the intersection has empty interior."""
        vs = self.vertices
        n = len(vs)
        sides = [(v - p).cross(d).sign() for v in vs]  # <= 0 means keep... see below
        # left of directed line: cross(d, z - p) >= 0  <=>  (z-p).cross(d) <= 0
        keep = [s <= 0 for s in sides]
        if all(keep):
            return self
        if not any(s < 0 for s in sides):
            return None
        out = []
        for i in range(n):
            j = (i + 1) % n
            if keep[i]:
                out.append(vs[i])
            if (sides[i] < 0 < sides[j]) or (sides[j] < 0 < sides[i]):
                a, b = vs[i], vs[j]
                r = b - a
                denom = r.cross(d)
                t = (p - a).cross(d) / denom
                out.append(a + r.scale(t))
            # vertices exactly on the line are kept once by keep[i]
        try:
            return ConvexPolygon(out, relaxed=True)
        except NonConvexPolygon:
            return None

    def intersect(self, other: "ConvexPolygon") -> Optional["ConvexPolygon"]:
        """Intersection with positive area, or None."""
        if boxes_disjoint(self.float_bbox(), other.float_bbox()):
            return None
        poly: Optional[ConvexPolygon] = self
        for a, b in other.edges():
            poly = poly.clip_halfplane(a, b - a)
            if poly is None:
                return None
        return poly

    def centroid(self) -> Vec2:
        vs = self.vertices
        sx = vs[0].field.zero()
        sy = vs[0].field.zero()
        for v in vs:
            sx = sx + v.x
            sy = sy + v.y
        n = len(vs)
        from fractions import Fraction
        inv = Fraction(1, n)
        return Vec2(sx * inv, sy * inv)

    def __eq__(self, o):
        return isinstance(o, ConvexPolygon) and self.vertices == o.vertices

    def __hash__(self):
        return hash(self.vertices)

    def __repr__(self):
        return "ConvexPolygon(%s)" % (list(self.vertices),)


def _drop_collinear(verts):
    out = list(verts)
    changed = True
    while changed and len(out) >= 3:
        changed = False
        n = len(out)
        for i in range(n):
            a, b, c = out[(i - 1) % n], out[i], out[(i + 1) % n]
            if b == a:
                out.pop(i)
                changed = True
                break
            if orient(a, b, c) == 0:
                out.pop(i)
                changed = True
                break
    return out


def convex_hull_is_quad_strict(pts) -> bool:
    """True iff the four points form a strictly convex quadrilateral in the
    given cyclic order."""
    if len(pts) != 4:
        raise InternalCheckError("expected 4 points")
    for i in range(4):
        if orient(pts[i], pts[(i + 1) % 4], pts[(i + 2) % 4]) <= 0:
            return False
    return True
