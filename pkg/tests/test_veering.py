"""Sections, flips, the slope order, f-sections, pockets, and mapping
torus layering, exercised on the eigen-coordinate torus of [[2,1],[1,1]]
where Farey combinatorics give independent oracles."""

from fractions import Fraction

import pytest

from pafix.affine import torus_from_matrix
from pafix.errors import (
    InputError,
    NotCrossing,
    NotFlippable,
    NotVeering,
    UnsupportedSurface,
    WrongOrder,
)
from pafix.exactnum import RealNumberField
from pafix.flatsurf import FlatSurface
from pafix.geom import ConvexPolygon, Vec2
from pafix.saddle import SaddleConnection, _corner_for_ray
from pafix.veering import (
    EdgeCache,
    Section,
    annular_avoiding_f_section,
    apply_to_edge,
    apply_to_section,
    complete_to_section,
    edge_order,
    f_section,
    flip_down,
    flip_path,
    flip_up,
    mapping_torus_layering,
    pocket,
    section_leq,
    section_size,
    t_minus,
    t_plus,
)


@pytest.fixture(scope="module")
def torus():
    surface, f = torus_from_matrix([[2, 1], [1, 1]])
    return surface, f, EdgeCache()


def _basis(surface):
    poly = surface.polygons[0]
    return poly.vertices[1], poly.vertices[3]


def lat(surface, sc):
    """Integer lattice class of a torus edge in the eigen chart."""
    w1, w2 = _basis(surface)
    det = w1.cross(w2)
    a = sc.hol.cross(w2) / det
    b = w1.cross(sc.hol) / det
    pa, pb = a.as_fraction(), b.as_fraction()
    assert pa.denominator == 1 and pb.denominator == 1
    return (int(pa), int(pb))


def unsigned_lat(surface, sc):
    a, b = lat(surface, sc)
    return (a, b) if (a, b) > (-a, -b) else (-a, -b)


def edge_for(surface, cache, a, b):
    """Walk the saddle connection of a primitive lattice class."""
    w1, w2 = _basis(surface)
    hol = w1.scale(a) + w2.scale(b)
    corner, ray = _corner_for_ray(surface, 0, 0, hol)
    sc = SaddleConnection.walk(surface, corner, ray)
    assert sc is not None
    return cache.canonical(sc)


def test_section_size_torus(torus):
    surface, _, _ = torus
    assert section_size(surface) == 3


def test_complete_empty_is_farey_triangle(torus):
    surface, _, cache = torus
    T = complete_to_section(surface, (), cache)
    assert len(T.edges) == 3
    assert {unsigned_lat(surface, e) for e in T.edges} == {
        (1, 0), (0, 1), (1, -1)}
    assert all(len(f) == 3 for f in T.triangles)
    assert sum(len(f) for f in T.triangles) == 6


def test_complete_is_idempotent_on_sections(torus):
    surface, _, cache = torus
    T = complete_to_section(surface, (), cache)
    again = complete_to_section(surface, T.edges, cache)
    assert again == T


def test_complete_from_two_seeds(torus):
    surface, _, cache = torus
    seeds = [edge_for(surface, cache, 1, 0), edge_for(surface, cache, 0, 1)]
    T = complete_to_section(surface, seeds, cache)
    third = [unsigned_lat(surface, e) for e in T.edges
             if unsigned_lat(surface, e) not in ((1, 0), (0, 1))]
    assert third in ([(1, 1)], [(1, -1)])


def test_complete_rejects_crossing_seeds(torus):
    surface, _, cache = torus
    from pafix.errors import NotNoncrossing
    s1 = edge_for(surface, cache, 1, 1)
    s2 = edge_for(surface, cache, 1, -1)
    with pytest.raises(NotNoncrossing):
        complete_to_section(surface, [s1, s2], cache)


def test_section_constructor_rejects_wrong_count(torus):
    surface, _, cache = torus
    from pafix.errors import NotFilling
    e = edge_for(surface, cache, 1, 0)
    with pytest.raises(NotFilling):
        Section(surface, [e], cache)


def test_edge_order_basics(torus):
    surface, _, cache = torus
    a = edge_for(surface, cache, 1, 1)
    b = edge_for(surface, cache, 1, -1)
    o1 = edge_order(a, b, cache)
    o2 = edge_order(b, a, cache)
    assert {o1, o2} == {"below", "above"}
    assert edge_order(a, a, cache) == "equal"
    T = complete_to_section(surface, (), cache)
    assert edge_order(T.edges[0], T.edges[1], cache) == "disjoint"


def test_flip_farey_moves(torus):
    surface, _, cache = torus
    T = complete_to_section(surface, (), cache)
    by = {unsigned_lat(surface, e): e for e in T.edges}

    up = flip_up(T, by[(1, 0)])
    new = [e for e in up.edges if e not in T.edge_set]
    assert [unsigned_lat(surface, e) for e in new] == [(1, -2)]
    assert flip_down(up, new[0]) == T
    # bottom vs top diagonal of one maximal rectangle
    assert edge_order(by[(1, 0)], new[0], cache) == "below"
    assert edge_order(new[0], by[(1, 0)], cache) == "above"

    down = flip_down(T, by[(1, -1)])
    new2 = [e for e in down.edges if e not in T.edge_set]
    assert [unsigned_lat(surface, e) for e in new2] == [(1, 1)]
    assert flip_up(down, new2[0]) == T


def test_flip_rejects_non_extremal(torus):
    surface, _, cache = torus
    T = complete_to_section(surface, (), cache)
    by = {unsigned_lat(surface, e): e for e in T.edges}
    with pytest.raises(NotFlippable):
        flip_up(T, by[(0, 1)])
    with pytest.raises(NotFlippable):
        flip_down(T, by[(0, 1)])
    with pytest.raises(InputError):
        flip_up(T, edge_for(surface, cache, 2, -1))


def test_flip_walk_preserves_section_invariants(torus):
    surface, _, cache = torus
    T = complete_to_section(surface, (), cache)
    seen = {T}
    frontier = [T]
    # shallow walk: holonomies grow exponentially with flip depth
    for _ in range(4):
        nxt = []
        for S in frontier:
            for e in S.edges:
                for fn in (flip_up, flip_down):
                    try:
                        S2 = fn(S, e)
                    except NotFlippable:
                        continue
                    assert len(S2.edges) == 3
                    if S2 not in seen:
                        seen.add(S2)
                        nxt.append(S2)
        frontier = nxt[:2]
    assert len(seen) > 4


def test_automorphism_acts_linearly_on_lattice(torus):
    surface, f, cache = torus
    T = complete_to_section(surface, (), cache)
    for e in T.edges:
        im = apply_to_edge(f, e, cache)
        a, b = lat(surface, e)
        ia, ib = lat(surface, im)
        assert (ia, ib) == (2 * a + b, a + b)
        assert cache.rect(im) is not None  # veering goes to veering


def test_f_section_defining_properties(torus):
    surface, f, cache = torus
    T0 = complete_to_section(surface, (), cache)
    T = f_section(f, T0)
    fT = apply_to_section(f, T)
    assert section_leq(fT, T)
    assert f_section(f, T) == T
    assert section_leq(T0, T)
    # and the image section is genuinely lower
    assert not section_leq(T, fT)


def test_t_plus_t_minus(torus):
    surface, f, cache = torus
    T = f_section(f, complete_to_section(surface, (), cache))
    sigma = T.edges[0]
    tp = t_plus(sigma, section=T)
    tm = t_minus(sigma, section=T)
    assert sigma in tp.edge_set and sigma in tm.edge_set
    assert section_leq(tm, tp)
    for S, fn in ((tp, flip_up), (tm, flip_down)):
        movable = []
        for e in S.edges:
            try:
                fn(S, e)
                movable.append(e)
            except NotFlippable:
                pass
        assert movable == [sigma]


def test_t_plus_standalone_builds_own_section(torus):
    surface, _, cache = torus
    sigma = edge_for(surface, cache, 1, 1)
    tp = t_plus(sigma, cache=cache)
    assert sigma in tp.edge_set
    assert len(tp.edges) == 3


def test_pocket_on_image_pairs(torus):
    surface, f, cache = torus
    T = f_section(f, complete_to_section(surface, (), cache))
    f2 = f.power(2)
    chi = section_size(surface) // 3
    bound = (9 * chi) ** 2
    for e in T.edges:
        im = cache.canonical(apply_to_edge(f2, e, cache))
        assert cache.crossings(e, im) == 2
        assert edge_order(e, im, cache) == "above"
        p = pocket(e, im, cache)
        assert p.crossing == 2
        assert p.intersection == 4
        assert p.flip_count == 2
        assert p.crossing <= p.intersection <= bound * p.crossing
        assert section_leq(p.lower_section, p.upper_section)


def test_pocket_rejects_disjoint_and_misordered(torus):
    surface, f, cache = torus
    T = f_section(f, complete_to_section(surface, (), cache))
    with pytest.raises(NotCrossing):
        pocket(T.edges[0], T.edges[1], cache)
    f2 = f.power(2)
    e = T.edges[0]
    im = cache.canonical(apply_to_edge(f2, e, cache))
    with pytest.raises(WrongOrder):
        pocket(im, e, cache)


def test_flip_path_between_sections(torus):
    surface, f, cache = torus
    T = f_section(f, complete_to_section(surface, (), cache))
    bottom = apply_to_section(f, T)
    steps = flip_path(bottom, T)
    assert len(steps) == 2
    assert steps[0].before == bottom
    assert steps[-1].after == T
    for st in steps:
        assert st.edge in st.before.edge_set
        assert st.new_edge in st.after.edge_set
    with pytest.raises(WrongOrder):
        flip_path(T, bottom)


def test_mapping_torus_word_lengths(torus):
    surface, f, cache = torus
    T = f_section(f, complete_to_section(surface, (), cache))
    mt = mapping_torus_layering(f, T)
    assert len(mt.tetrahedra) == 2
    assert len(mt.gluings) == 4  # 2 tets, 8 face slots, each pairing once
    f2 = f.power(2)
    mt2 = mapping_torus_layering(f2, f_section(f2, T))
    assert len(mt2.tetrahedra) == 4
    assert len(mt2.gluings) == 8


def test_mapping_torus_tetrahedron_geometry(torus):
    surface, f, cache = torus
    mt = mapping_torus_layering(f)
    for tet in mt.tetrahedra:
        b, t = tet.bottom.hol, tet.top.hol
        # top diagonal strictly steeper than bottom
        from pafix.saddle import _abs
        assert (_abs(t.y * b.x) - _abs(b.y * t.x)).sign() > 0
        # the maximal rectangle is spanned by the two diagonals
        assert tet.rect_width == _abs(b.x)
        assert tet.rect_height == _abs(t.y)
        assert len(tet.sides) == 4


def test_mapping_torus_format(torus):
    surface, f, cache = torus
    mt = mapping_torus_layering(f)
    text = mt.format_text()
    lines = text.splitlines()
    assert lines[0] == "tetrahedra 2"
    assert len(lines) == 3
    assert all("->" in ln for ln in lines[1:])


def test_annular_avoiding_equals_f_section_on_torus(torus):
    surface, f, cache = torus
    assert annular_avoiding_f_section(f) == f_section(f)


def _square_torus():
    field = RealNumberField.create(
        [Fraction(0), Fraction(1)], Fraction(-1), Fraction(1))
    z, o = field.zero(), field.one()
    sq = ConvexPolygon([Vec2(z, z), Vec2(o, z), Vec2(o, o), Vec2(z, o)])
    glu = {}
    for a, b in (((0, 0), (0, 2)), ((0, 1), (0, 3))):
        glu[a] = (b, "translation")
        glu[b] = (a, "translation")
    return FlatSurface(field, [sq], glu, marked_corners=[(0, 0)])


def test_square_torus_has_no_section():
    surf = _square_torus()
    with pytest.raises(UnsupportedSurface):
        complete_to_section(surf, max_doublings=2)


def test_axis_seed_rejected():
    surf = _square_torus()
    o = surf.field.one()
    z = surf.field.zero()
    corner, ray = _corner_for_ray(surf, 0, 0, Vec2(o, z))
    sc = SaddleConnection.walk(surf, corner, ray)
    assert sc is not None and sc.is_horizontal()
    with pytest.raises(NotVeering):
        complete_to_section(surf, [sc], max_doublings=2)
