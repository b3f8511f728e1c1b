"""Tilings for punctured-interval tiles.

The tile here is a length-(k-1) run of k consecutive integers with one
interior point missing.  Its residues mod k miss exactly one value, so a
single translate tiles Z_k minus a point; everything else is bookkeeping
that trades those missing points upward through dimensions until a
periodic plan along one free axis absorbs them.  The end product is a
tiling of Z^d with period k on all but the first axis.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import lcm

from .certificate import Certificate, build_certificate
from .construction import (
    Construction,
    ExplicitNode,
    FiberNode,
    RemoveNode,
    SliceStackNode,
    UnionNode,
    drop_block_sig,
    lift,
    permute_blocks,
)
from .pointsets import DiffSet, ExplicitSet, empty_set, full_set
from .space import (
    Block,
    Placement,
    SpaceError,
    SpaceSignature,
    TileSpec,
    cover,
    make_tile,
    uniform_signature,
)


class ParamError(ValueError):
    pass


def punctured_interval_params(tile: TileSpec):
    """(k, i) if the 1-D tile is k consecutive cells missing the i-th
    (1-based, 2 <= i <= k-1), else None."""
    if tile.dim != 1:
        return None
    vals = [p[0] for p in tile.points]
    k = vals[-1] + 1
    missing = sorted(set(range(k)) - set(vals))
    if len(missing) != 1:
        return None
    i = missing[0] + 1
    if not (k >= 3 and 2 <= i <= k - 1):
        return None
    return (k, i)


def _check_params(k: int, i: int) -> None:
    if k < 3:
        raise ParamError("k must be >= 3")
    if not 2 <= i <= k - 1:
        raise ParamError("missing position i must satisfy 2 <= i <= k-1")


def base_tile(k: int, i: int) -> TileSpec:
    """{0..k-1} minus i-1: the punctured interval, already min-shifted."""
    return make_tile([(c,) for c in range(k) if c != i - 1])


def residue_tile(k: int, i: int) -> TileSpec:
    # residues mod k coincide with the integer points for this tile
    return base_tile(k, i)


def cover_but_one(k: int, i: int, d: int, x) -> Construction:
    """Tiling of Z_k^d minus the single point x.

    d=1 is one translate; d >= 2 places one copy along the last axis
    through x's column and reuses one shared (d-1)-dimensional child for
    every slice, each slice missing the same projected point.
    """
    _check_params(k, i)
    if d < 1:
        raise ParamError("d must be >= 1")
    x = tuple(int(c) % k for c in x)
    if len(x) != d:
        raise ParamError("x has arity %d, want %d" % (len(x), d))
    u = residue_tile(k, i)
    sig = uniform_signature(d, k, u)
    if d == 1:
        off = (x[0] - (i - 1)) % k
        hole = ExplicitSet(sig, {x})
        return ExplicitNode(
            sig, [Placement(0, (off,))], region=DiffSet(sig, full_set(sig), hole)
        )
    head, last = x[:-1], x[-1]
    column = ExplicitNode(
        sig, [Placement(d - 1, head + ((last - (i - 1)) % k,))]
    )
    child = cover_but_one(k, i, d - 1, head)
    slices = SliceStackNode(sig, d - 1, {}, default=child)
    hole = ExplicitSet(sig, {x})
    return UnionNode(
        sig, [column, slices], region=DiffSet(sig, full_set(sig), hole)
    )


def move_point(k: int, i: int, construction: Construction, hole, x):
    """Trade one hole point for a fresh top corner, one dimension up.

    Input tiles Z_k^d minus ``hole``; x must be in the hole.  The output
    tiles Z_k^{d+1} minus (hole-without-x at height 0, plus the point
    (0,..,0,k-1)): height 0 reuses the input, one copy runs vertically
    through x, the top slice is missing only the origin column's top.
    """
    _check_params(k, i)
    hole = frozenset(tuple(p) for p in hole)
    x = tuple(int(c) for c in x)
    if x not in hole:
        raise ParamError("x is not one of the hole points")
    d = construction.sig.n_axes
    u = residue_tile(k, i)
    sig = uniform_signature(d + 1, k, u)
    child_mid = cover_but_one(k, i, d, x)
    child_top = cover_but_one(k, i, d, (0,) * d)
    children = {
        (0,): construction,
        (k - 1,): child_top,
    }
    slices = SliceStackNode(sig, d, children, default=child_mid)
    column = ExplicitNode(sig, [Placement(d, x + ((k - i) % k,))])
    new_hole = frozenset(p + (0,) for p in hole if p != x) | {(0,) * d + (k - 1,)}
    region = DiffSet(sig, full_set(sig), ExplicitSet(sig, new_hole))
    out = UnionNode(sig, [column, slices], region=region)
    return out, new_hole


def exchange_all(k: int, i: int, construction: Construction, hole, xs):
    """Iterate move_point over xs (points of the original hole, traded in
    the given order)."""
    cur = construction
    cur_hole = frozenset(tuple(p) for p in hole)
    for j, x in enumerate(xs):
        lifted_x = tuple(x) + (0,) * j
        cur, cur_hole = move_point(k, i, cur, cur_hole, lifted_x)
    return cur, cur_hole


def hole_of_size(k: int, i: int, r: int, m: int):
    """(X, construction) with |X| = m: X is the origin plus the covers of
    the lexicographically first (m-1)/(k-1) copies of the one-point-hole
    tiling of Z_k^r; the construction is that tiling minus those copies."""
    _check_params(k, i)
    if m < 1 or (m - 1) % (k - 1) != 0:
        raise ParamError("need m = 1 mod (k-1), m >= 1")
    if m > k**r:
        raise ParamError("m exceeds the space")
    base = cover_but_one(k, i, r, (0,) * r)
    want = (m - 1) // (k - 1)
    taken = set()
    removed = []
    x_pts = {(0,) * r}
    probe = _lex_walker(k, r)
    while len(removed) < want:
        p = next(probe)
        if p in x_pts:
            continue
        pl = base._locate(p)
        if pl in taken:
            continue
        taken.add(pl)
        removed.append(pl)
        x_pts.update(cover(pl, base.sig))
    construction = RemoveNode(base.sig, base, removed)
    return frozenset(x_pts), construction


def _lex_walker(k, r):
    p = [0] * r
    while True:
        yield tuple(p)
        a = r - 1
        while a >= 0 and p[a] == k - 1:
            p[a] = 0
            a -= 1
        if a < 0:
            return
        p[a] += 1


def corner(k: int, d: int, j: int):
    """Point with k-1 in axis j, zero elsewhere."""
    return tuple(k - 1 if a == j else 0 for a in range(d))


def removed_corners(k: int, i: int, d: int, s) -> Construction:
    """Tiling of Z_k^d minus the corner points indexed by s.

    Needs |s| = 1 mod (k-1) and k^(d-|s|) >= d (the size bound, kept in
    integer form).  Internally the holes are produced on the last |s|
    axes and permuted into place.
    """
    _check_params(k, i)
    s = sorted(set(int(j) for j in s))
    if any(j < 0 or j >= d for j in s):
        raise ParamError("corner index out of range")
    m = len(s)
    if m % (k - 1) != 1 % (k - 1) or m < 1:
        raise ParamError("need |s| = 1 mod (k-1)")
    if k ** (d - m) < d:
        raise ParamError("|s| over the size bound for this d")
    r = d - m
    x_pts, base = hole_of_size(k, i, r, m)
    c, hole = exchange_all(k, i, base, x_pts, sorted(x_pts))
    want = {corner(k, d, r + t) for t in range(m)}
    if hole != want:
        raise SpaceError("hole bookkeeping mismatch")  # internal invariant
    others = [j for j in range(d) if j not in s]
    perm = [0] * d
    for pos, j in enumerate(others):
        perm[pos] = j
    for pos, j in enumerate(s):
        perm[r + pos] = j
    return permute_blocks(c, perm)


@dataclass(frozen=True)
class PeriodicFn:
    """Periodic residue sequence: value(n) = values[n mod period]."""

    period: int
    values: tuple
    modulus: int

    def value(self, n: int) -> int:
        return self.values[n % self.period]

    def to_json(self):
        return {
            "period": self.period,
            "values": list(self.values),
            "modulus": self.modulus,
        }


def solve_f(k: int, i: int) -> PeriodicFn:
    """Smallest-period solution of sum_{y in tile} f(x-y) = 1 (mod k-1),
    grown forward from an all-zero window.  The window-to-window step is
    a bijection, so the orbit returns to the zero window and the prefix
    is a genuine period."""
    _check_params(k, i)
    t = k - 1
    taps = [y[0] for y in base_tile(k, i).points if y[0] != 0]
    w = k - 1  # window length = max tap
    hist = [0] * w  # hist[j] = f(n-1-j)
    zero = tuple(hist)
    values = []
    cap = t**w + 1
    for _ in range(cap):
        v = (1 - sum(hist[y - 1] for y in taps)) % t
        values.append(v)
        hist = [v] + hist[:-1]
        if tuple(hist) == zero:
            return PeriodicFn(len(values), tuple(values), t)
    raise SpaceError("cycle detection failed")  # unreachable: <= t^w states


def check_convolution(f: PeriodicFn, taps, x: int) -> bool:
    """Does sum over tile taps of f(x-y) hit 1 (mod modulus) at x?"""
    total = sum(f.value(x - y) for y in taps) % f.modulus
    return total == 1 % f.modulus


@dataclass(frozen=True)
class SpecialColumnPlan:
    """Per-residue corner subsets S_n with |S_n| = f(n), subsets at
    cyclic distance < k disjoint."""

    period: int
    subsets: tuple  # tuple of tuples of corner indices

    def validate(self, k: int, f: PeriodicFn) -> None:
        p = self.period
        if p % f.period != 0 or p % (2 * k) != 0:
            raise ParamError("plan period must absorb f's period and 2k")
        for n, s in enumerate(self.subsets):
            if len(s) != f.value(n):
                raise ParamError("subset size != f at residue %d" % n)
        for n in range(p):
            for m in range(n + 1, p):
                dist = min((m - n) % p, (n - m) % p)
                if dist < k and set(self.subsets[n]) & set(self.subsets[m]):
                    raise ParamError("subsets too close at %d,%d" % (n, m))

    def to_json(self):
        return {"period": self.period, "subsets": [list(s) for s in self.subsets]}


def plan_special_column(k: int, i: int, f: PeriodicFn, family) -> SpecialColumnPlan:
    """Greedy assignment of corner indices to residues 0..P-1, P =
    lcm(f.period, 2k) so the distance-(k-1) neighborhood wraps
    consistently.  Needs |family| >= 2k(k-2)."""
    _check_params(k, i)
    family = list(family)
    ell = 2 * k * (k - 2)
    if len(family) < ell:
        raise ParamError("corner family smaller than %d" % ell)
    p = lcm(f.period, 2 * k)
    subsets = []
    for n in range(p):
        blocked = set()
        for m in range(len(subsets)):
            dist = min((m - n) % p, (n - m) % p)
            if dist < k:
                blocked.update(subsets[m])
        need = f.value(n)
        chosen = []
        for c in family:
            if len(chosen) == need:
                break
            if c not in blocked:
                chosen.append(c)
        if len(chosen) < need:
            raise ParamError("greedy assignment ran out of corners")
        subsets.append(tuple(chosen))
    plan = SpecialColumnPlan(p, tuple(subsets))
    plan.validate(k, f)
    return plan


def minimal_dimension(k: int) -> int:
    """Smallest d with (d-1) - log_k(d-1) >= 2k(k-2), checked in integer
    arithmetic as k^(d-1-ell) >= d-1."""
    ell = 2 * k * (k - 2)
    d = ell + 1
    while True:
        n = d - 1
        if n - ell >= 0 and k ** (n - ell) >= n:
            return d
        d += 1


def synthesize_simple(k: int, i: int, limit=None, trace=None) -> Certificate:
    """Full pipeline: solve the residue recurrence, plan the special
    column, tile each cross-section minus its planned corners, and lift
    the cyclic axes to Z^d."""
    _check_params(k, i)
    f = solve_f(k, i)
    d = minimal_dimension(k)
    n_corners = d - 1
    plan = plan_special_column(k, i, f, range(n_corners))
    p = plan.period
    t_int = base_tile(k, i)
    u = residue_tile(k, i)

    axes = (None,) + (k,) * (d - 1)
    blocks = [Block(0, 1, t_int)]
    blocks.extend(Block(a, a + 1, u) for a in range(1, d))
    sig = SpaceSignature(axes, tuple(blocks))

    entries = []
    rest_sig = drop_block_sig(sig, 0)
    for n in range(p):
        s = plan.subsets[n]
        if not s:
            continue
        pts = {corner(k, d - 1, j) for j in s}
        entries.append(((n,), ExplicitSet(rest_sig, pts)))
    fiber = FiberNode(sig, 0, entries, period=p)

    children = {}
    cache = {}
    for n in range(p):
        col = []
        for y in t_int.points:
            col.extend(plan.subsets[(n - y[0]) % p])
        key = tuple(sorted(col))
        if len(set(key)) != len(key):
            raise SpaceError("plan produced overlapping columns")
        if key not in cache:
            cache[key] = removed_corners(k, i, d - 1, key)
        children[(n,)] = cache[key]
    slices = SliceStackNode(sig, 0, children, period=p)

    top = UnionNode(sig, [fiber, slices], region=full_set(sig))
    lifted = lift(top, (None,) + (k,) * (d - 1))
    period = (p,) + (k,) * (d - 1)
    meta = {
        "pipeline": "simple",
        "d": d,
        "k": k,
        "i": i,
        "column_period": p,
        "f_period": f.period,
    }
    if trace is not None:
        trace["f"] = f.to_json()
        trace["plan"] = plan.to_json()
        trace["d"] = d
        trace["ell"] = 2 * k * (k - 2)
    return build_certificate(lifted, period, meta, limit=limit)
