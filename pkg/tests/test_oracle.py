import pytest

from tilesmith.oracle import (
    OracleError,
    SearchProblem,
    brute_force_decide,
    decide,
    density_bound,
    orientations,
    prove_not_tiles,
    spaced_interval_tile,
)
from tilesmith.space import Block, Placement, SpaceSignature, parse_tile, render_tile
from tilesmith.verify import verify_exhaustive_construction
from tilesmith.construction import ExplicitNode

S_TILE = parse_tile([[0, 0], [1, 0], [1, 1], [2, 1]])
GAP = parse_tile("X.X")
FIVE = parse_tile("XX.XX")


def as_torus_tiling(problem, result):
    """Check a torus SAT witness against the partition verifier."""
    sig = SpaceSignature(
        tuple(problem.torus), (Block(0, len(problem.torus), problem.tile),)
    )
    node = ExplicitNode(sig, [Placement(0, c.offset) for c in result.witness])
    return verify_exhaustive_construction(node)


def test_s_tetromino_tiles_4x2_torus():
    problem = SearchProblem(S_TILE, torus=(4, 2))
    r = decide(problem)
    assert r.status == "SAT"
    assert [c.offset for c in r.witness] == [(0, 0), (2, 0)]
    assert as_torus_tiling(problem, r).ok


def test_gap_tile_on_z4():
    problem = SearchProblem(GAP, torus=(4,))
    r = decide(problem)
    assert r.status == "SAT"
    assert [c.offset for c in r.witness] == [(0,), (1,)]
    assert as_torus_tiling(problem, r).ok


def test_decide_is_deterministic():
    problem = SearchProblem(S_TILE, torus=(4, 4))
    a = decide(problem)
    b = decide(problem)
    assert a.status == b.status == "SAT"
    assert a.nodes == b.nodes
    assert [c.offset for c in a.witness] == [c.offset for c in b.witness]


def test_prefer_fewest_agrees_on_status():
    for spec, torus in ((S_TILE, (4, 2)), (GAP, (4,)), (GAP, (6,)), (FIVE, (8,))):
        p = SearchProblem(spec, torus=torus)
        assert decide(p).status == decide(p, prefer_fewest=True).status


def test_torus_divisibility_shortcut():
    # |domain| not a multiple of |tile|: refuted without search
    r = decide(SearchProblem(S_TILE, torus=(3, 2)))
    assert r.status == "UNSAT" and r.nodes == 0


def test_brute_force_agreement_small():
    cases = [
        SearchProblem(GAP, torus=(4,)),
        SearchProblem(GAP, torus=(6,)),
        SearchProblem(FIVE, torus=(8,)),
        SearchProblem(S_TILE, torus=(4, 2)),
        SearchProblem(parse_tile("XX"), box=(4,)),
        SearchProblem(parse_tile("XXX"), box=(4,)),
    ]
    for p in cases:
        assert decide(p).status == brute_force_decide(p)


def test_box_overhang_changes_answer():
    # X.X cannot pack [0,6) exactly, but may stick out of [0,4)
    assert decide(SearchProblem(GAP, box=(6,))).status == "UNSAT"
    r = decide(SearchProblem(GAP, box=(4,), overhang=True))
    assert r.status == "SAT"


def test_overhang_copies_stay_disjoint_outside():
    # the witness occupies outside points at most once
    r = decide(SearchProblem(GAP, box=(4,), overhang=True))
    seen = set()
    for c in r.witness:
        assert seen.isdisjoint(c.outside)
        seen.update(c.outside)


def test_orientations_counts():
    L = parse_tile([[0, 0], [1, 0], [1, 1]])
    assert len(orientations(L, "translate")) == 1
    assert len(orientations(L, "perm")) == 2
    assert len(orientations(GAP, "full")) == 1  # symmetric under negation
    assert len(orientations(L, "full")) == 4


def test_orientations_rejects_unknown_mode():
    with pytest.raises(OracleError):
        orientations(GAP, "rotate")


def test_cell_cap():
    with pytest.raises(OracleError):
        decide(SearchProblem(GAP, torus=(101, 101)))


def test_five_tile_has_no_1d_tiling():
    proof = prove_not_tiles(FIVE, d=1, max_box=12)
    assert proof.status == "proof"
    assert proof.box_size == 5
    assert proof.nodes == 15


def test_prove_not_tiles_inconclusive_for_tileable():
    # XX tiles Z, so box growth never refutes it
    out = prove_not_tiles(parse_tile("XX"), d=1, max_box=4)
    assert out.status == "inconclusive"


def test_spaced_interval_tile_shape():
    t = spaced_interval_tile(4)
    assert render_tile(t) == "XXXX...X...X...X...XXXX"
    assert t.size == 11  # 3k - 1


def test_density_bound_arithmetic():
    out = density_bound(10, 3)
    assert out["tile_size"] == 29 and out["lhs"] == 87 and out["rhs"] == 119
    assert out["ruled_out"]
    out = density_bound(3, 5)
    assert out["lhs"] == 40 and out["rhs"] == 14
    assert not out["ruled_out"]


def test_search_problem_validation():
    with pytest.raises(OracleError):
        SearchProblem(GAP)  # neither torus nor box
    with pytest.raises(OracleError):
        SearchProblem(GAP, torus=(4,), box=(4,))
    with pytest.raises(OracleError):
        SearchProblem(GAP, torus=(4,), symmetry="mirror")


def test_result_json_shape():
    r = decide(SearchProblem(GAP, torus=(4,)))
    data = r.to_json()
    assert data["status"] == "SAT"
    assert len(data["witness"]) == 2
    assert data["nodes"] == r.nodes
