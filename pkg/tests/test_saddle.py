"""Saddle connection geometry against hand-checkable oracles.

The once-marked square torus is the main oracle surface: its saddle
connections are exactly the primitive lattice vectors, its cylinders are
forced by the direction, and intersection numbers reduce to lattice
counting.  The octagon and pillowcase exercise cone angles above and
below 2 pi."""

import math
from fractions import Fraction

import pytest

from pafix.errors import (
    HorizontalOrVertical,
    InputError,
    NotCylinder,
    OverlappingSegments,
)
from pafix.flatsurf import FlatSurface, SurfacePoint
from pafix.geom import ConvexPolygon, Vec2
from pafix.saddle import (
    SaddleConnection,
    _wedge_contains,
    cylinder_through,
    cylinders_in_direction,
    degree,
    enumerate_saddles,
    intersection_number,
    is_veering_edge,
    trace,
)

from surfbuild import octagon_surface, pillowcase, point, rational_field, square_torus, vec


def conn(surface, x, y):
    """The saddle connection with holonomy (x, y), found from its owning
    corner."""
    d = vec(surface.field, x, y)
    for corner in sorted(surface.corner_class):
        chart, vidx = corner
        poly = surface.polygons[chart]
        n = len(poly)
        origin = poly.vertices[vidx]
        out = poly.vertices[(vidx + 1) % n] - origin
        back = poly.vertices[(vidx - 1) % n] - origin
        if not _wedge_contains(out, back, d):
            continue
        sc = SaddleConnection.walk(surface, corner, d)
        if sc is not None:
            return sc
    raise AssertionError("no connection with holonomy (%s, %s)" % (x, y))


def rect_torus(w, h):
    field = rational_field()
    poly = ConvexPolygon([vec(field, 0, 0), vec(field, w, 0),
                          vec(field, w, h), vec(field, 0, h)])
    gluings = {
        (0, 0): ((0, 2), "translation"),
        (0, 2): ((0, 0), "translation"),
        (0, 1): ((0, 3), "translation"),
        (0, 3): ((0, 1), "translation"),
    }
    return FlatSurface(field, [poly], gluings, marked_corners=[(0, 0)],
                       names=["R"])


def primitive_count(nx, ny):
    c = 0
    for p in range(-nx, nx + 1):
        for q in range(-ny, ny + 1):
            if (p, q) != (0, 0) and math.gcd(abs(p), abs(q)) == 1:
                c += 1
    return c


def hol_pair(sc):
    return (sc.hol.x, sc.hol.y)


# ---------------------------------------------------------------------------
# trace

def test_trace_straight_across_charts():
    t = square_torus()
    res = trace(t, 0, vec(t.field, Fraction(1, 2), Fraction(1, 2)),
                vec(t.field, 2, 0))
    assert res.status == "end"
    assert len(res.pieces) == 3  # half + full + half width
    assert res.end_pos == vec(t.field, Fraction(1, 2), Fraction(1, 2))


def test_trace_stops_at_vertex():
    t = square_torus()
    res = trace(t, 0, vec(t.field, Fraction(1, 2), Fraction(1, 2)),
                vec(t.field, 1, 1))
    assert res.status == "vertex"
    assert (res.consumed - t.field.rational(Fraction(1, 2))).is_zero()


def test_trace_zero_vector_rejected():
    t = square_torus()
    with pytest.raises(InputError):
        trace(t, 0, vec(t.field, Fraction(1, 2), Fraction(1, 2)),
              vec(t.field, 0, 0))


# ---------------------------------------------------------------------------
# enumeration

def test_unit_box_has_the_eight_shortest():
    t = square_torus()
    saddles = enumerate_saddles(t, 1, 1)
    assert len(saddles) == 8
    hols = {(int(h.x.float_bounds()[0].__round__()),
             int(h.y.float_bounds()[0].__round__()))
            for h in (sc.hol for sc in saddles)}
    assert hols == {(1, 0), (-1, 0), (0, 1), (0, -1),
                    (1, 1), (1, -1), (-1, 1), (-1, -1)}


def test_counts_match_primitive_lattice_oracle():
    t = square_torus()
    for n in range(1, 11):
        saddles = enumerate_saddles(t, n, n)
        assert len(saddles) == primitive_count(n, n), "bound %d" % n


def test_counts_match_oracle_on_skew_boxes():
    t = square_torus()
    for nx, ny in [(3, 2), (5, 1), (1, 4)]:
        saddles = enumerate_saddles(t, nx, ny)
        assert len(saddles) == primitive_count(nx, ny)


def test_box_below_systole_is_empty():
    t = square_torus()
    assert enumerate_saddles(t, Fraction(1, 2), Fraction(1, 2)) == []


def test_enumeration_sorted_and_duplicate_free():
    t = square_torus()
    saddles = enumerate_saddles(t, 3, 3)
    ids = {(sc.start_corner, hol_pair(sc), sc.chain) for sc in saddles}
    assert len(ids) == len(saddles)
    keys = [(sc.start_class, sc.hol.x, sc.hol.y) for sc in saddles]
    for k1, k2 in zip(keys, keys[1:]):
        assert k1 <= k2


def test_every_connection_has_its_reverse_listed():
    t = square_torus()
    saddles = enumerate_saddles(t, 2, 2)
    hols = {hol_pair(sc) for sc in saddles}
    for sc in saddles:
        assert (-sc.hol.x, -sc.hol.y) in hols
        rev = sc.reverse()
        assert hol_pair(rev) in hols
        assert rev.reverse() == sc


def test_octagon_unit_box_is_the_sides():
    o = octagon_surface()
    g = o.field.gen()  # sqrt(2)
    h = g / 2
    saddles = enumerate_saddles(o, 1, 1)
    assert len(saddles) == 8
    one = o.field.one()
    zero = o.field.zero()
    expect = set()
    for sx, sy in [(one, zero), (zero, one), (h, h), (-h, h)]:
        expect.add((sx, sy))
        expect.add((-sx, -sy))
    assert {hol_pair(sc) for sc in saddles} == expect


def test_pillowcase_enumeration_pairs_up():
    p = pillowcase()
    saddles = enumerate_saddles(p, Fraction(1, 2), Fraction(1, 2))
    assert saddles and len(saddles) % 2 == 0
    hols = {}
    for sc in saddles:
        hols.setdefault(hol_pair(sc), 0)
        hols[hol_pair(sc)] += 1
    for sc in saddles:
        rev = sc.reverse()
        assert hols.get(hol_pair(rev), 0) >= 1
    # monotone in the box
    bigger = enumerate_saddles(p, 1, 1)
    assert len(bigger) > len(saddles)


def test_walk_blocked_by_intermediate_singularity():
    t = square_torus()
    corner = (0, 0)
    assert SaddleConnection.walk(t, corner, vec(t.field, 2, 0)) is None
    assert SaddleConnection.walk(t, corner, vec(t.field, 2, 2)) is None


def test_point_at_and_midpoint():
    t = square_torus()
    sc = conn(t, 1, 1)
    mid = sc.midpoint()
    assert t.same_point(mid, point(t, 0, Fraction(1, 2), Fraction(1, 2)))
    quarter = sc.point_at(Fraction(1, 4))
    assert t.same_point(quarter, point(t, 0, Fraction(1, 4), Fraction(1, 4)))


def test_record_shape():
    t = square_torus()
    sc = conn(t, 1, 2)
    rec = sc.record()
    assert rec[0] == sc.start_class
    assert isinstance(rec[1], str) and isinstance(rec[2], str)
    assert all(isinstance(q, int) and isinstance(e, int) for q, e in rec[3])


# ---------------------------------------------------------------------------
# spanning rectangles and degree

def test_unit_diagonal_is_veering_degree_one():
    t = square_torus()
    rect = is_veering_edge(conn(t, 1, 1))
    assert rect is not None
    assert rect.width == t.field.one()
    assert rect.height == t.field.one()
    assert degree(rect) == 1
    assert rect.witness is None


def test_two_three_is_not_veering():
    t = square_torus()
    assert is_veering_edge(conn(t, 2, 3)) is None


def test_one_n_is_veering_with_degree_n():
    t = square_torus()
    for n in range(1, 5):
        rect = is_veering_edge(conn(t, 1, n))
        assert rect is not None, n
        assert degree(rect) == n
        if n >= 2:
            assert not rect.ambiguous
            assert rect.translation is not None
            assert rect.translation.x.is_zero()
            w = rect.witness
            assert w is not None
            assert w.circumference_sq == t.field.one()
            assert w.area == t.field.one()


def test_horizontal_and_vertical_span_nothing():
    t = square_torus()
    with pytest.raises(HorizontalOrVertical):
        is_veering_edge(conn(t, 1, 0))
    with pytest.raises(HorizontalOrVertical):
        is_veering_edge(conn(t, 0, 1))


def test_tall_thin_cylinder_degree():
    r = rect_torus(1, 5)
    rect = is_veering_edge(conn(r, 3, 5))
    assert rect is not None
    assert degree(rect) == 3
    assert not rect.ambiguous
    # deck translation is horizontal: the circumference-1 direction
    assert rect.translation.y.is_zero()
    w = rect.witness
    assert w.circumference_sq == r.field.one()
    assert w.area == r.field.rational(5)
    assert w.height_sq == r.field.rational(25)


# ---------------------------------------------------------------------------
# intersection numbers

def test_axis_pair_meets_only_at_the_marked_point():
    t = square_torus()
    assert intersection_number(conn(t, 1, 0), conn(t, 0, 1)) == 0


def test_one_two_against_two_one():
    t = square_torus()
    assert intersection_number(conn(t, 1, 2), conn(t, 2, 1)) == 2


def test_diagonals_cross_once():
    t = square_torus()
    assert intersection_number(conn(t, 1, 1), conn(t, 1, -1)) == 1


def test_intersection_symmetry_on_enumerated_pairs():
    t = square_torus()
    saddles = enumerate_saddles(t, 2, 2)
    for i, a in enumerate(saddles):
        for b in saddles[i + 1:]:
            try:
                ab = intersection_number(a, b)
            except OverlappingSegments:
                with pytest.raises(OverlappingSegments):
                    intersection_number(b, a)
                continue
            assert ab == intersection_number(b, a)


def test_reversed_connection_overlaps():
    t = square_torus()
    sc = conn(t, 1, 1)
    with pytest.raises(OverlappingSegments):
        intersection_number(sc, sc.reverse())


def test_intersection_equivariance_under_torus_automorphism():
    # the cat-map automorphism acts on torus connections by its derivative
    t = square_torus()

    def act(m, x, y):
        return (m[0][0] * x + m[0][1] * y, m[1][0] * x + m[1][1] * y)

    m = [[2, 1], [1, 1]]
    pairs = [((1, 0), (0, 1)), ((1, 2), (2, 1)), ((1, 1), (1, -1)),
             ((1, 3), (2, -1))]
    for (h1, h2) in pairs:
        base = intersection_number(conn(t, *h1), conn(t, *h2))
        moved = intersection_number(conn(t, *act(m, *h1)),
                                    conn(t, *act(m, *h2)))
        assert moved == base, (h1, h2)


def test_different_surfaces_rejected():
    t1 = square_torus()
    t2 = square_torus()
    with pytest.raises(InputError):
        intersection_number(conn(t1, 1, 0), conn(t2, 0, 1))


# ---------------------------------------------------------------------------
# cylinders

def test_square_torus_horizontal_cylinder():
    t = square_torus()
    cyls = cylinders_in_direction(t, vec(t.field, 1, 0), 2)
    assert len(cyls) == 1
    c = cyls[0]
    assert c.circumference_sq == t.field.one()
    assert c.height_sq == t.field.one()
    assert c.area == t.field.one()
    low, high = c.boundary
    for sc in tuple(low) + tuple(high):
        assert sc.is_horizontal()


def test_square_torus_diagonal_cylinder():
    t = square_torus()
    cyls = cylinders_in_direction(t, vec(t.field, 1, 1), 2)
    assert len(cyls) == 1
    c = cyls[0]
    assert c.circumference_sq == t.field.rational(2)
    assert c.height_sq == t.field.rational(Fraction(1, 2))
    assert c.area == t.field.one()


def test_slope_two_cylinder():
    t = square_torus()
    cyls = cylinders_in_direction(t, vec(t.field, 1, 2), 3)
    assert len(cyls) == 1
    c = cyls[0]
    assert c.circumference_sq == t.field.rational(5)
    assert c.area == t.field.one()
    assert c.height_sq == t.field.rational(Fraction(1, 5))


def test_bound_filters_out_long_cylinders():
    t = square_torus()
    assert cylinders_in_direction(t, vec(t.field, 1, 1), 1) == []
    assert cylinders_in_direction(t, vec(t.field, 1, 0), 0) == []


def test_direction_scaling_does_not_matter():
    t = square_torus()
    a = cylinders_in_direction(t, vec(t.field, 1, 1), 2)
    b = cylinders_in_direction(t, vec(t.field, 3, 3), 2)
    assert len(a) == len(b) == 1
    assert a[0].key() == b[0].key()
    assert a[0].circumference_sq == b[0].circumference_sq


def test_cylinder_through_interior_points_agree():
    t = square_torus()
    c1 = cylinder_through(t, point(t, 0, Fraction(1, 2), Fraction(1, 3)),
                          vec(t.field, 1, 0))
    c2 = cylinder_through(t, point(t, 0, Fraction(1, 4), Fraction(2, 3)),
                          vec(t.field, 1, 0))
    assert c1.key() == c2.key()
    assert c1.height_sq == t.field.one()
    # core leaf sits in the middle of the cylinder
    mid = c1.core_point
    assert mid.pos.y == t.field.rational(Fraction(1, 2))


def test_cylinder_through_rejects_singular_basepoint():
    t = square_torus()
    with pytest.raises(NotCylinder):
        cylinder_through(t, point(t, 0, 0, 0), vec(t.field, 1, 0))


def test_cylinder_leaf_into_cone_point_rejected():
    t = square_torus()
    with pytest.raises(NotCylinder):
        cylinder_through(t, point(t, 0, Fraction(1, 2), 0),
                         vec(t.field, 1, 2))


def test_pillowcase_cylinders_both_axes():
    p = pillowcase()
    for d in [vec(p.field, 1, 0), vec(p.field, 0, 1)]:
        cyls = cylinders_in_direction(p, d, 2)
        assert len(cyls) == 1
        c = cyls[0]
        assert c.circumference_sq == p.field.one()
        assert c.height_sq == p.field.rational(Fraction(1, 4))
        assert c.area == p.field.rational(Fraction(1, 2))


def test_octagon_horizontal_decomposition():
    o = octagon_surface()
    g = o.field.gen()  # sqrt(2)
    cyls = cylinders_in_direction(o, vec(o.field, 1, 0), 4)
    assert len(cyls) == 2
    circ = sorted([c.circumference_sq for c in cyls],
                  key=lambda el: el.float_bounds()[0])
    three = o.field.rational(3)
    six = o.field.rational(6)
    assert circ[0] == three + g + g          # (1 + sqrt2)^2
    assert circ[1] == six + g + g + g + g    # (2 + sqrt2)^2
    total = o.polygons[0].area2() / o.field.rational(2)
    acc = cyls[0].area + cyls[1].area
    assert acc == total
    for c in cyls:
        for side in c.boundary:
            for sc in side:
                assert sc.is_horizontal()
