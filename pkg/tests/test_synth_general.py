import json

import pytest
from hypothesis import given, settings, strategies as st

from tilesmith.certificate import (
    MODE_EXPLICIT,
    MODE_TREE,
    canonical_json,
    certificate_from_json,
    verify_exhaustive,
)
from tilesmith.space import SpaceError, parse_tile
from tilesmith.synth_general import (
    Blueprint,
    CornerProduct,
    HoleCover,
    ParamError,
    build_blueprint,
    construct_denser,
    cover_holes,
    initial_hole,
    m_csets,
    make_densification,
    removed_cset,
    solve_g,
    synthesize_general,
    use_cset,
)
from tilesmith.verify import verify_exhaustive_construction, verify_sampled

L_TILE = [[0, 0], [0, 1], [1, 0]]


def assert_tiles(c):
    rep = verify_exhaustive_construction(c)
    assert rep.ok, rep.violations[:3]
    return rep


# --- densification ----------------------------------------------------------


def test_densification_punctured_interval():
    d = make_densification(5, [0, 1, 3, 4])
    assert d.shift == (1,)
    assert d.up == {(2,)}
    assert d.down == {(3,)}
    assert len(d.carrier) == 5


def test_densification_short_interval():
    d = make_densification(3, [0, 1])
    assert d.shift == (1,)
    assert d.up == {(2,)}
    assert d.down == {(0,)}
    assert d.carrier == {(0,), (1,), (2,)}


def test_densification_disjoint_translate():
    # {0,2} + 1 is disjoint from {0,2}: both halves of the carrier move
    d = make_densification(4, [0, 2])
    assert d.shift == (1,)
    assert d.up == {(1,), (3,)}
    assert d.down == {(0,), (2,)}
    assert d.carrier - d.up - d.down == set()


def test_densification_normalizes_input_translate():
    assert make_densification(4, [1, 2]) == make_densification(4, [0, 1])


def test_densification_two_axes():
    d = make_densification((2, 2), L_TILE)
    assert d.shift == (0, 1)
    assert len(d.up) == len(d.down) == 1
    assert len(d.carrier) == 4


def test_densification_rejects_full_box():
    with pytest.raises(ParamError):
        make_densification(2, [0, 1])
    with pytest.raises(ParamError):
        make_densification((2, 2), [[0, 0], [0, 1], [1, 0], [1, 1]])


def test_densification_rejects_colliding_residues():
    with pytest.raises(ParamError):
        make_densification(3, [0, 3])


# --- corner products --------------------------------------------------------


def test_corner_product_factors():
    d = make_densification(3, [0, 1])
    assert CornerProduct(d, 3, 0).factors() == (d.down,) * 3
    assert CornerProduct(d, 3, 2).factors() == (d.down, d.up, d.down)
    assert CornerProduct(d, 3, 3).factors() == (d.down, d.down, d.up)


def test_corner_products_disjoint():
    d = make_densification(4, [0, 2])
    pts = {}
    import itertools

    for i in range(3):
        cp = CornerProduct(d, 2, i)
        for combo in itertools.product(*(sorted(f) for f in cp.factors())):
            q = tuple(c for blk in combo for c in blk)
            assert q not in pts, (i, pts[q])
            pts[q] = i


def test_corner_product_index_range():
    d = make_densification(3, [0, 1])
    with pytest.raises(ParamError):
        CornerProduct(d, 2, 3)
    with pytest.raises(ParamError):
        CornerProduct(d, 2, -1)
    with pytest.raises(ParamError):
        CornerProduct(d, 0, 0)


# --- removed corner tilings -------------------------------------------------


@pytest.mark.parametrize("group,tile", [(3, [0, 1]), (4, [0, 2]), (5, [0, 1, 3, 4])])
def test_removed_cset_every_index(group, tile):
    dens = make_densification(group, tile)
    for d in (1, 2):
        box = len(dens.carrier) ** d
        for i in range(d + 1):
            c = removed_cset(dens, d, i)
            rep = assert_tiles(c)
            assert rep.covered_count == box - CornerProduct(dens, d, i).size()


def test_removed_cset_depth_three():
    dens = make_densification(3, [0, 1])
    for i in (0, 2, 3):
        assert_tiles(removed_cset(dens, 3, i))


def test_removed_cset_is_memoized():
    dens = make_densification(3, [0, 1])
    assert removed_cset(dens, 2, 1) is removed_cset(dens, 2, 1)


# --- trading corner products for dimensions ---------------------------------


@pytest.mark.parametrize("group,tile", [(3, [0, 1]), (4, [0, 2])])
def test_use_cset_single_trade(group, tile):
    dens = make_densification(group, tile)
    box = len(dens.carrier)
    for i in (0, 1):
        h = use_cset(initial_hole(dens, 1), i)
        assert h.d == 2
        rep = assert_tiles(h.construction)
        assert rep.covered_count == box ** 2 - h.points.size()


def test_use_cset_requires_cset_inside_hole():
    dens = make_densification(3, [0, 1])
    h = use_cset(initial_hole(dens, 1), 1)
    # the traded corner is spent; trading the same one again must fail
    with pytest.raises(ParamError):
        use_cset(h, 1)


def test_m_csets_two_trades_exhaustive():
    dens = make_densification(3, [0, 1])
    c = m_csets(dens, 1, [0, 1])
    rep = assert_tiles(c)
    assert rep.covered_count == 27 - 3


def test_m_csets_matches_chained_trades():
    dens = make_densification(4, [0, 2])
    via_ops = use_cset(use_cset(initial_hole(dens, 1), 0), 1).construction
    via_m = m_csets(dens, 1, [0, 1])
    a = sorted(via_ops.iter_placements())
    b = sorted(via_m.iter_placements())
    assert a == b


def test_m_csets_validates_indices():
    dens = make_densification(3, [0, 1])
    with pytest.raises(ParamError):
        m_csets(dens, 2, [1, 1])
    with pytest.raises(ParamError):
        m_csets(dens, 2, [3])
    with pytest.raises(ParamError):
        m_csets(dens, 2, [])


# --- blueprints --------------------------------------------------------------


def test_blueprint_full_partition():
    bp = build_blueprint(3, [0, 1], 1, 3)
    assert bp.y_list == ((0,), (1,), (2,))
    rep = assert_tiles(bp.full())
    assert rep.covered_count == 81 - bp.uncovered(0).size()


def test_blueprint_marked_columns_stay_open():
    bp = build_blueprint(3, [0, 1], 1, 3)
    c = bp.construction([1, 3])
    rep = assert_tiles(c)
    open_pts = bp.uncovered(0).size() + bp.uncovered(1).size() + bp.uncovered(3).size()
    assert rep.covered_count == 81 - open_pts


def test_blueprint_y_list_wraps_lexicographically():
    bp = build_blueprint(3, [0, 1], 2, 7)
    assert bp.y_list == ((0,), (1,), (2,), (0,), (1,), (2,), (0,))


def test_blueprint_needs_enough_levels():
    with pytest.raises(ParamError):
        build_blueprint(3, [0, 1], 2, 5)
    build_blueprint(3, [0, 1], 2, 6)


def test_blueprint_rejects_bad_marks():
    bp = build_blueprint(3, [0, 1], 1, 3)
    with pytest.raises(ParamError):
        bp.construction([4])
    with pytest.raises(ParamError):
        bp.construction([0])


# --- one densification step with its spend plans ----------------------------


def test_construct_denser_dimension_formula():
    carrier, d1, fam, _ = construct_denser(3, [0, 1], 1)
    assert sorted(carrier) == [(0,), (1,), (2,)]
    assert d1 == 3
    assert [cp.i for cp in fam] == [1, 2, 3]


def test_construct_denser_single_spends():
    _, d1, fam, tiler = construct_denser(3, [0, 1], 1)
    for i in range(1, d1 + 1):
        rep = assert_tiles(tiler([i]))
        assert rep.covered_count == 3 ** (d1 + 1) - 3


def test_construct_denser_multi_spends():
    _, d1, fam, tiler = construct_denser(3, [0, 1], 3)
    assert d1 == 8
    for spend in ([6, 7, 8], [2, 5, 7]):
        rep = assert_tiles(tiler(spend))
        assert rep.covered_count == 3 ** (d1 + 1) - 9
    # corner product labels work as spend arguments too
    assert_tiles(tiler([fam[0]]))


def test_construct_denser_validates_spends():
    _, d1, _, tiler = construct_denser(3, [0, 1], 1)
    with pytest.raises(ParamError):
        tiler([1, 2])  # wrong count mod |tile|
    with pytest.raises(ParamError):
        tiler([1, 2, 3])  # over the budget
    with pytest.raises(ParamError):
        tiler([])
    with pytest.raises(ParamError):
        tiler([1, 1, 1])
    with pytest.raises(ParamError):
        tiler([0])
    with pytest.raises(ParamError):
        tiler([d1 + 1])


# --- deconvolution ----------------------------------------------------------


def test_solve_g_arity_zero():
    g = solve_g([()], 5, 3)
    assert g.value(()) == 2


def test_solve_g_frozen_interval_values():
    g = solve_g([0, 1, 3, 4], 1, 4)
    assert g.periodic.period == 24
    assert tuple(g.periodic.value(n) for n in range(8)) == (1, 0, 1, 3, 1, 3, 2, 3)


def test_solve_g_row_identity():
    g = solve_g([0, 1, 3, 4], 1, 4)
    for x in range(-25, 25):
        assert sum(g.value(x - y) for y in (0, 1, 3, 4)) % 4 == 1


def test_solve_g_periodic_identity_full_cycle():
    g = solve_g([0, 2], 1, 2)
    p = g.periodic
    for n in range(p.period):
        assert (p.value(n) + p.value(n - 2)) % 2 == 1


def test_solve_g_handles_negative_tile_points():
    g = solve_g([-2, 0], 1, 2)
    for x in range(-10, 10):
        assert (g.value(x + 2) + g.value(x)) % 2 == 1


def test_solve_g_values_are_pure():
    g = solve_g([0, 1, 3], 1, 3)
    first = [g.value(x) for x in range(-9, 9)]
    assert [g.value(x) for x in range(-9, 9)] == first


def test_solve_g_modulus_one_is_zero():
    g = solve_g([0, 2], 1, 1)
    assert g.value(7) == 0
    assert g.periodic.values == (0,)


@settings(deadline=None, max_examples=25)
@given(
    st.sets(st.integers(0, 5), min_size=1, max_size=4),
    st.integers(2, 6),
    st.integers(-12, 12),
)
def test_solve_g_identity_one_axis(coords, t, x):
    tile = sorted(coords)
    g = solve_g(tile, 1, t)
    assert sum(g.value(x - y) for y in tile) % t == 1


@settings(deadline=None, max_examples=15)
@given(
    st.sets(
        st.tuples(st.integers(0, 2), st.integers(0, 2)), min_size=1, max_size=4
    ),
    st.integers(2, 5),
    st.tuples(st.integers(-4, 4), st.integers(-4, 4)),
)
def test_solve_g_identity_two_axes(pts, t, x):
    tile = sorted(pts)
    g = solve_g(tile, 1, t)
    total = sum(
        g.value((x[0] - y[0], x[1] - y[1])) for y in tile
    )
    assert total % t == 1


# --- hole spending plans ----------------------------------------------------


def test_cover_holes_periodic_plan():
    cov = cover_holes([0, 2], 2, list(range(8)))
    assert cov.period == 4
    assert [cov.members(n) for n in range(4)] == [(0,), (0,), (), ()]
    for n in range(4):
        col = cov.column(n)
        assert len(col) % 2 == 1
        assert len(col) <= 2


def test_cover_holes_column_is_footprint_union():
    cov = cover_holes([0, 1, 3, 4], 4, list(range(48)))
    for x in range(cov.period):
        want = set()
        for y in (0, 1, 3, 4):
            want.update(cov.members(x - y))
        assert set(cov.column(x)) == want
        assert len(cov.column(x)) % 4 == 1


def test_cover_holes_conflicting_points_stay_disjoint():
    tile = [0, 1, 3, 4]
    cov = cover_holes(tile, 4, list(range(48)))
    diffs = {a - c for a in tile for c in tile} - {0}
    for n in range(cov.period):
        mine = set(cov.members(n))
        for d in diffs:
            other = set(cov.members(n - d))
            assert not (mine & other)


def test_cover_holes_family_size_bound():
    with pytest.raises(ParamError):
        cover_holes([0, 2], 2, list(range(3)))
    cover_holes([0, 2], 2, list(range(4)))


def test_cover_holes_two_axes_on_demand():
    cov = cover_holes(L_TILE, 3, list(range(27)))
    assert cov.period is None
    diffs = {
        (a0 - c0, a1 - c1) for a0, a1 in cov._tile for c0, c1 in cov._tile
    } - {(0, 0)}
    for x0 in range(-3, 4):
        for x1 in range(-3, 4):
            mine = set(cov.members((x0, x1)))
            for d in diffs:
                assert not (mine & set(cov.members((x0 - d[0], x1 - d[1]))))
            assert len(cov.column((x0, x1))) % 3 == 1


# --- the full pipeline ------------------------------------------------------


def test_synthesize_singleton():
    cert = synthesize_general("X")
    assert cert.mode == MODE_EXPLICIT
    assert cert.period == (1,)
    assert verify_exhaustive(cert).ok


def test_synthesize_full_box_is_periodic_list():
    cert = synthesize_general("XX")
    assert cert.mode == MODE_EXPLICIT
    assert cert.period == (2,)
    assert cert.meta["d"] == 1
    assert verify_exhaustive(cert).ok


def test_synthesize_punctured_pair():
    trace = {}
    cert = synthesize_general("X.X", trace=trace)
    assert cert.mode == MODE_TREE
    assert trace["p"] == 1 and trace["q"] == 11
    assert cert.meta["d"] == 12
    assert cert.meta["periodic"] is True
    lv = trace["levels"][0]
    assert lv["residues"] == 2 and lv["blocks"] == 10 and lv["free_period"] == 4
    rep = verify_sampled(cert.payload, 3000, seed=0, free_ranges=cert.domain_window())
    assert rep.ok, rep.violations[:3]


def test_synthesize_punctured_pair_round_trips():
    cert = synthesize_general("X.X")
    blob = canonical_json(cert.to_json())
    # structural sharing keeps the tree compact
    assert len(blob) < 200_000
    back = certificate_from_json(json.loads(blob))
    assert back.period == cert.period
    rep = verify_sampled(back.payload, 1500, seed=3, free_ranges=back.domain_window())
    assert rep.ok, rep.violations[:3]


def test_synthesize_wide_interval_bookkeeping():
    trace = {}
    cert = synthesize_general("XX.XX", trace=trace)
    lv = trace["levels"][0]
    assert lv["budget"] == 48
    assert lv["blocks"] == 108
    assert lv["free_period"] == 24
    assert trace["p"] == 1 and trace["q"] == 109
    assert cert.meta["d"] == 110
    rep = verify_sampled(cert.payload, 300, seed=0, free_ranges=cert.domain_window())
    assert rep.ok, rep.violations[:3]


@pytest.mark.parametrize("pattern", ["X..X", "XX.X", "X.XX"])
def test_synthesize_one_axis_smoke(pattern):
    cert = synthesize_general(pattern)
    assert cert.meta["pipeline"] == "general"
    rep = verify_sampled(cert.payload, 300, seed=0, free_ranges=cert.domain_window())
    assert rep.ok, rep.violations[:3]


def test_synthesize_two_axes_lazy():
    trace = {}
    cert = synthesize_general(L_TILE, trace=trace)
    assert cert.mode == MODE_TREE
    assert cert.meta["periodic"] is False
    assert cert.meta["d"] == 2 * (trace["p"] + trace["q"])
    rep = verify_sampled(cert.payload, 800, seed=0, free_ranges=cert.domain_window())
    assert rep.ok, rep.violations[:3]


def test_synthesize_two_axes_has_no_serialized_form():
    cert = synthesize_general(L_TILE)
    with pytest.raises(SpaceError):
        cert.to_json()


def test_synthesize_matches_parse_tile_inputs():
    a = synthesize_general("X.X")
    b = synthesize_general([[0], [2]])
    assert a.period == b.period
    assert a.meta["d"] == b.meta["d"]
