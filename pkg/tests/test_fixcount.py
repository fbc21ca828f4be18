"""Exact fixed point counts on the eigen-coordinate torus of [[2,1],[1,1]]:
the rectangle counter against the clip-everything oracle, Lefschetz numbers
against 2 - tr(M^n), sandwich inequalities, and the Markov bound."""

from fractions import Fraction

import pytest

from pafix.affine import torus_from_matrix
from pafix.errors import (
    HorizontalOrVertical,
    LambdaNotExpanding,
    NotFixed,
    NotVeering,
)
from pafix.fixcount import (
    FixedPoint,
    _crossing_data,
    count_fixed_points,
    fixed_point_index,
    fixed_points_in_rectangle,
    lefschetz_number,
    markov_upper_bound,
    max_edge,
    oracle_count_fixed_points,
)
from pafix.saddle import (
    SaddleConnection,
    _corner_for_ray,
    enumerate_saddles,
    intersection_number,
    is_veering_edge,
)
from pafix.veering import (
    EdgeCache,
    annular_avoiding_f_section,
    apply_to_edge,
    f_section,
)

# 2 - tr(M^n) for M = [[2,1],[1,1]]; all traces exceed 2 so the fixed
# point total is tr(M^n) - 2.
TRACES = {1: 3, 2: 7, 3: 18, 4: 47}


@pytest.fixture(scope="module")
def torus():
    surface, f = torus_from_matrix([[2, 1], [1, 1]])
    return surface, f, EdgeCache()


def _edge_from_lattice(surface, a, b):
    poly = surface.polygons[0]
    w1 = poly.vertices[1] - poly.vertices[0]
    w2 = poly.vertices[3] - poly.vertices[0]
    hol = w1.scale(a) + w2.scale(b)
    corner, _ = _corner_for_ray(surface, 0, 0, hol)
    return SaddleConnection.walk(surface, corner, hol)


def test_count_summaries_small_powers(torus):
    surface, f, cache = torus
    for n in (1, 2, 3):
        g = f if n == 1 else f.power(n)
        rep = count_fixed_points(g, cache)
        total = TRACES[n] - 2
        assert rep.total == total
        assert rep.singular_count == 1
        assert rep.regular_count == total - 1
        assert rep.lefschetz == 2 - TRACES[n]
        assert rep.index_sum == rep.lefschetz
        assert rep.method == "fundamental"


def test_marked_point_is_the_only_fix_at_n1(torus):
    surface, f, cache = torus
    rep = count_fixed_points(f, cache)
    (p,) = rep.points
    assert p.kind == "marked"
    assert p.index == -1
    rec = rep.records()[0]
    assert rec[0] == "marked" and rec[4] == -1
    assert fixed_point_index(p, f) == -1


def test_lefschetz_direct(torus):
    surface, f, cache = torus
    assert lefschetz_number(f) == -1
    assert lefschetz_number(f.power(2)) == -5


def test_oracle_agrees_on_exact_point_sets(torus):
    surface, f, cache = torus
    for n in (1, 2, 3):
        g = f if n == 1 else f.power(n)
        rep = count_fixed_points(g, cache)
        oracle = oracle_count_fixed_points(g, f_section(g))
        assert oracle.method == "oracle"
        assert oracle.point_keys() == rep.point_keys()
        assert oracle.summary()[:4] == rep.summary()[:4]


def test_disjoint_image_gives_empty_rectangle_count(torus):
    surface, f, cache = torus
    section = annular_avoiding_f_section(f)
    for e in section.edges:
        image = apply_to_edge(f, e, cache)
        assert intersection_number(e, image) == 0
        assert fixed_points_in_rectangle(f, e, cache) == []


def test_rectangle_union_at_n2(torus):
    surface, f, cache = torus
    g = f.power(2)
    section = annular_avoiding_f_section(g)
    keys = set()
    for e in section.edges:
        pts = fixed_points_in_rectangle(g, e, cache)
        i = intersection_number(e, apply_to_edge(g, e, cache))
        assert len(pts) <= i
        for p in pts:
            assert p.kind == "regular" and p.index == -1
            keys.add(repr(p.key))
    assert len(keys) == 4


def test_sandwich_inequalities_in_holonomy_box(torus):
    surface, f, cache = torus
    g = f.power(2)
    checked = 0
    for sc in enumerate_saddles(surface, 3, 3):
        try:
            rect = is_veering_edge(sc)
        except HorizontalOrVertical:
            continue
        if rect is None:
            continue
        image = apply_to_edge(g, sc, cache)
        i = intersection_number(sc, image)
        n = len(fixed_points_in_rectangle(g, sc, cache))
        assert n <= i
        assert n * rect.degree >= i
        checked += 1
    assert checked == 14


def test_max_edge_tie_breaks_to_first(torus):
    surface, f, cache = torus
    g = f.power(2)
    section = annular_avoiding_f_section(g)
    e = max_edge(section, g)
    assert e == section.edges[0]
    assert intersection_number(e, apply_to_edge(g, e, cache)) == 2


def test_crossing_data_matches_intersection_number(torus):
    surface, f, cache = torus
    g = f.power(2)
    section = annular_avoiding_f_section(g)
    for e in section.edges:
        image = apply_to_edge(g, e, cache)
        assert len(_crossing_data(e, image)) == intersection_number(e, image)


def test_non_veering_edge_rejected(torus):
    surface, f, cache = torus
    sc = _edge_from_lattice(surface, 3, 1)
    assert is_veering_edge(sc) is None
    with pytest.raises(NotVeering):
        fixed_points_in_rectangle(f, sc, cache)


def test_inverse_map_rejected_up_front(torus):
    # the inverse expands vertically; sections only track horizontal
    # expansion, so the count must refuse instead of sweeping forever
    surface, f, cache = torus
    with pytest.raises(LambdaNotExpanding):
        count_fixed_points(f.inverse())


def test_moving_point_has_no_index(torus):
    surface, f, cache = torus
    poly = surface.polygons[0]
    w1 = poly.vertices[1] - poly.vertices[0]
    w2 = poly.vertices[3] - poly.vertices[0]
    third = surface.field.rational(Fraction(1, 3))
    seventh = surface.field.rational(Fraction(1, 7))
    pos = w1.scale(third) + w2.scale(seventh)
    fake = FixedPoint(0, pos, "regular", -1, ("interior", "nowhere"))
    with pytest.raises(NotFixed):
        fixed_point_index(fake, f)


def test_fixed_point_identity_and_order(torus):
    surface, f, cache = torus
    rep = count_fixed_points(f.power(2), cache)
    pts = rep.points
    assert len(set(pts)) == len(pts)
    assert list(pts) == sorted(pts, key=lambda p: p.sort_key())
    again = count_fixed_points(f.power(2), EdgeCache())
    assert again.point_keys() == rep.point_keys()


def test_markov_bound_dominates_total(torus):
    surface, f, cache = torus
    mb = markov_upper_bound(f)
    rep = count_fixed_points(f, cache)
    assert mb.method == "rectangle"
    assert int(mb) == 55
    assert mb >= rep.total
    assert len(mb.matrix) == 3
    assert sum(mb.matrix[i][i] for i in range(3)) == 6
    assert all(v >= 0 for row in mb.matrix for v in row)


def test_markov_interval_clears_the_stretch_factor(torus):
    # the spanning rectangles overlap, so the crossing matrix counts some
    # orbits twice and its Perron root sits above lambda; the interval
    # must still be consistent and lie above lambda = (3 + sqrt 5)/2
    surface, f, cache = torus
    mb = markov_upper_bound(f)
    lo, hi = mb.perron_interval
    assert isinstance(lo, Fraction) and isinstance(hi, Fraction)
    assert lo <= hi
    shifted = 2 * hi - 3
    assert shifted >= 0 and shifted * shifted >= 5
