"""Exact-cover search over small tori and boxes.

Ground truth for the synthesizers: a complete backtracking search that
decides whether a tile admits an exact cover of a finite torus or box,
entirely independent of the construction machinery.  Branching is on the
lexicographically first uncovered cell with candidates tried in offset
order, so node counts are reproducible; a fewest-candidates mode exists
for speed and must agree on status.
"""
from __future__ import annotations

import sys
import time
from dataclasses import dataclass, field
from itertools import combinations, permutations, product

from .space import TileSpec, make_tile

DEFAULT_BUDGET = 10**8
MAX_CELLS = 10**4

SYMMETRY_MODES = ("translate", "perm", "full")


class OracleError(ValueError):
    pass


class _BudgetExhausted(Exception):
    pass


@dataclass(frozen=True)
class SearchProblem:
    tile: TileSpec
    torus: tuple = None  # modulus vector
    box: tuple = None  # extent vector
    symmetry: str = "translate"
    overhang: bool = False

    def __post_init__(self):
        if (self.torus is None) == (self.box is None):
            raise OracleError("exactly one of torus/box required")
        shape = self.torus if self.torus is not None else self.box
        if len(shape) != self.tile.dim:
            raise OracleError("domain dimension differs from the tile's")
        if any(int(m) < 1 for m in shape):
            raise OracleError("domain extents must be >= 1")
        if self.symmetry not in SYMMETRY_MODES:
            raise OracleError("unknown symmetry mode %r" % self.symmetry)
        if self.overhang and self.box is None:
            raise OracleError("overhang applies to boxes only")

    @property
    def shape(self):
        return self.torus if self.torus is not None else self.box

    def n_cells(self) -> int:
        n = 1
        for m in self.shape:
            n *= m
        return n


@dataclass
class Candidate:
    tile: TileSpec  # the orientation used
    offset: tuple
    inside: tuple  # cells covered inside the domain
    outside: frozenset  # points covered outside (overhang mode)
    mask: int = 0


@dataclass
class SearchResult:
    status: str  # SAT | UNSAT | TIMEOUT
    witness: list = field(default_factory=list)  # Candidates (SAT only)
    nodes: int = 0
    elapsed: float = 0.0

    def to_json(self):
        return {
            "status": self.status,
            "nodes": self.nodes,
            "witness": [
                {
                    "offset": list(c.offset),
                    "tile": [list(y) for y in c.tile.points],
                    "cells": [list(q) for q in c.inside],
                }
                for c in self.witness
            ],
        }


def orientations(tile: TileSpec, mode: str):
    """Distinct normalized images of the tile under the symmetry mode."""
    if mode not in SYMMETRY_MODES:
        raise OracleError("unknown symmetry mode %r" % mode)
    if mode == "translate":
        return [tile]
    dim = tile.dim
    signs_choices = (
        list(product((1, -1), repeat=dim)) if mode == "full" else [(1,) * dim]
    )
    seen = set()
    for perm in permutations(range(dim)):
        for signs in signs_choices:
            pts = [
                tuple(p[perm[a]] * signs[a] for a in range(dim)) for p in tile.points
            ]
            seen.add(make_tile(pts).points)
    return [TileSpec(dim, pts) for pts in sorted(seen)]


def _cells(shape):
    pts = [()]
    for m in shape:
        pts = [p + (v,) for p in pts for v in range(m)]
    return pts


def candidates_for(problem: SearchProblem):
    """All copies touching the domain, deduplicated by cover, in a fixed
    sorted order; each gets a bitmask over lex-indexed cells."""
    shape = problem.shape
    cells = _cells(shape)
    cell_index = {q: i for i, q in enumerate(cells)}
    cands = {}
    for orient in orientations(problem.tile, problem.symmetry):
        if problem.torus is not None:
            for off in cells:
                pts = set()
                for y in orient.points:
                    pts.add(tuple((o + c) % m for o, c, m in zip(off, y, shape)))
                if len(pts) != orient.size:
                    continue  # wrapped onto itself: not a genuine copy
                key = (tuple(sorted(pts)), ())
                if key not in cands:
                    cands[key] = Candidate(orient, off, key[0], frozenset())
        else:
            ranges = []
            for a, m in enumerate(shape):
                top = max(y[a] for y in orient.points)
                if problem.overhang:
                    ranges.append(range(-top, m))
                else:
                    if top >= m:
                        ranges = None
                        break
                    ranges.append(range(0, m - top))
            if ranges is None:
                continue
            for off in product(*ranges):
                inside = []
                outside = []
                for y in orient.points:
                    q = tuple(o + c for o, c in zip(off, y))
                    if q in cell_index:
                        inside.append(q)
                    else:
                        outside.append(q)
                if not inside:
                    continue
                key = (tuple(sorted(inside)), tuple(sorted(outside)))
                if key not in cands:
                    cands[key] = Candidate(
                        orient, off, key[0], frozenset(outside)
                    )
    # Offset-lex order keeps witnesses hand-checkable: the copy at the
    # smallest offset covering a cell is always tried first.
    out = sorted(
        cands.values(),
        key=lambda c: (c.offset, c.inside, tuple(sorted(c.outside))),
    )
    for c in out:
        m = 0
        for q in c.inside:
            m |= 1 << cell_index[q]
        c.mask = m
    return cells, out


def decide(problem: SearchProblem, budget: int = DEFAULT_BUDGET,
           prefer_fewest: bool = False) -> SearchResult:
    """Complete exact-cover decision.  Every cell of the domain must be
    covered exactly once; overhang copies must additionally be pairwise
    disjoint outside."""
    t0 = time.monotonic()
    n = problem.n_cells()
    if n > MAX_CELLS:
        raise OracleError("domain has %d cells, over the %d-cell cap" % (n, MAX_CELLS))
    if problem.torus is not None and n % problem.tile.size != 0:
        # |domain| = |tile| * copies is necessary on a torus
        return SearchResult("UNSAT", [], 0, time.monotonic() - t0)
    cells, cands = candidates_for(problem)
    full = (1 << n) - 1
    by_cell = [[] for _ in range(n)]
    cell_index = {q: i for i, q in enumerate(cells)}
    for ci, c in enumerate(cands):
        for q in c.inside:
            by_cell[cell_index[q]].append(ci)
    nodes = 0
    chosen = []
    used_out = set()

    def pick_cell(used):
        free = ~used & full
        if not prefer_fewest:
            return (free & -free).bit_length() - 1
        best, best_n = -1, None
        while free:
            cell = (free & -free).bit_length() - 1
            free &= free - 1
            avail = 0
            for ci in by_cell[cell]:
                c = cands[ci]
                if not (c.mask & used) and used_out.isdisjoint(c.outside):
                    avail += 1
            if best_n is None or avail < best_n:
                best, best_n = cell, avail
                if avail == 0:
                    break
        return best

    def rec(used):
        nonlocal nodes
        if used == full:
            return True
        cell = pick_cell(used)
        for ci in by_cell[cell]:
            c = cands[ci]
            if c.mask & used:
                continue
            if c.outside and not used_out.isdisjoint(c.outside):
                continue
            nodes += 1
            if nodes > budget:
                raise _BudgetExhausted
            chosen.append(ci)
            used_out.update(c.outside)
            if rec(used | c.mask):
                return True
            used_out.difference_update(c.outside)
            chosen.pop()
        return False

    old_limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old_limit, n + 100))
    try:
        sat = rec(0)
    except _BudgetExhausted:
        return SearchResult("TIMEOUT", [], nodes, time.monotonic() - t0)
    finally:
        sys.setrecursionlimit(old_limit)
    if sat:
        return SearchResult(
            "SAT", [cands[ci] for ci in chosen], nodes, time.monotonic() - t0
        )
    return SearchResult("UNSAT", [], nodes, time.monotonic() - t0)


def brute_force_decide(problem: SearchProblem) -> str:
    """Subset enumeration over candidate covers; tiny domains only.
    Exists purely to cross-check decide()."""
    n = problem.n_cells()
    if n > 16:
        raise OracleError("brute force capped at 16 cells")
    cells, cands = candidates_for(problem)
    size = problem.tile.size
    if n % size != 0 and problem.torus is not None:
        return "UNSAT"
    full = (1 << n) - 1
    for r in range(0, len(cands) + 1):
        if problem.torus is not None and r * size != n:
            continue
        for combo in combinations(range(len(cands)), r):
            used = 0
            out = set()
            ok = True
            for ci in combo:
                c = cands[ci]
                if c.mask & used or not out.isdisjoint(c.outside):
                    ok = False
                    break
                used |= c.mask
                out.update(c.outside)
            if ok and used == full:
                return "SAT"
    return "UNSAT"


@dataclass
class BoxProof:
    status: str  # "proof" | "inconclusive"
    box_size: int = 0
    nodes: int = 0
    detail: str = ""

    def to_json(self):
        return {
            "status": self.status,
            "box_size": self.box_size,
            "nodes": self.nodes,
            "detail": self.detail,
        }


def prove_not_tiles(tile: TileSpec, d: int, max_box: int = 12,
                    budget: int = DEFAULT_BUDGET) -> BoxProof:
    """Search growing d-dimensional boxes with overhang allowed and full
    symmetry.  An UNSAT box proves the tile cannot tile Z^d: any tiling
    restricted to the box is an exact cover with overhangs.  Box position
    does not matter (translation invariance), so boxes grow from the
    origin.  Never claims tilability."""
    if tile.dim != d:
        tile = _reshape(tile, d)
    total_nodes = 0
    for s in range(1, max_box + 1):
        if s**d > MAX_CELLS:
            return BoxProof(
                "inconclusive", s - 1, total_nodes, "box cap reached before UNSAT"
            )
        problem = SearchProblem(
            tile, box=(s,) * d, symmetry="full", overhang=True
        )
        res = decide(problem, budget=budget - total_nodes)
        total_nodes += res.nodes
        if res.status == "UNSAT":
            return BoxProof("proof", s, total_nodes, "no exact cover of the box")
        if res.status == "TIMEOUT":
            return BoxProof("inconclusive", s, total_nodes, "node budget exhausted")
    return BoxProof("inconclusive", max_box, total_nodes, "all boxes SAT")


def _reshape(tile: TileSpec, d: int) -> TileSpec:
    if tile.dim > d:
        raise OracleError("tile dimension exceeds the requested one")
    pad = d - tile.dim
    return make_tile([y + (0,) * pad for y in tile.points])


def spaced_interval_tile(k: int) -> TileSpec:
    """Two length-k runs, gap k^2-1, every k-th gap point filled."""
    pts = list(range(k))
    pts.extend(k - 1 + j * k for j in range(1, k))
    start = k * k + k - 1
    pts.extend(range(start, start + k))
    return make_tile([(c,) for c in pts])


def witness_certificate(problem: SearchProblem, result: SearchResult):
    """Lift a SAT torus witness to a periodic lattice certificate.

    Only translate-only witnesses lift: a certificate block carries a
    single tile shape, so rotated or reflected copies have no place in
    it.  Copies that wrap around the torus are rejected for the same
    reason.  This is the one spot where the oracle touches the
    construction machinery; the imports stay local to keep the search
    itself independent of it.
    """
    from .certificate import build_certificate
    from .construction import ExplicitNode, lift
    from .pointsets import full_set
    from .space import Block, Placement, SpaceSignature

    if problem.torus is None:
        raise OracleError("only torus witnesses lift to certificates")
    if problem.symmetry != "translate":
        raise OracleError("witness may mix orientations; cannot lift")
    if result.status != "SAT":
        raise OracleError("no witness to lift: status is %s" % result.status)
    dim = problem.tile.dim
    for a in range(dim):
        if problem.tile.extents[a] + 1 > problem.torus[a]:
            raise OracleError("copies wrap around torus axis %d" % a)
    sig = SpaceSignature(tuple(problem.torus), (Block(0, dim, problem.tile),))
    node = ExplicitNode(
        sig,
        [Placement(0, tuple(c.offset)) for c in result.witness],
        region=full_set(sig),
    )
    lifted = lift(node, tuple(problem.torus))
    meta = {
        "pipeline": "oracle",
        "d": dim,
        "torus": list(problem.torus),
        "nodes": result.nodes,
    }
    return build_certificate(lifted, tuple(problem.torus), meta)


def density_bound(k: int, d: int) -> dict:
    """Counting bound: translates of the spaced tile near a large box are
    too few to cover it when d*|T| < k^2 + 2k - 1."""
    if k < 2 or d < 1:
        raise OracleError("need k >= 2, d >= 1")
    tile = spaced_interval_tile(k)
    lhs = d * tile.size
    rhs = k * k + 2 * k - 1
    return {
        "k": k,
        "d": d,
        "tile_size": tile.size,
        "lhs": lhs,
        "rhs": rhs,
        "ruled_out": lhs < rhs,
        "tile": tile,
    }
