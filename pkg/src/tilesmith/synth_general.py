"""Constructive tilings for arbitrary finite tiles.

Any finite set of integer vectors tiles Z^d once d is large enough.
The engine works with the tile's residues inside its bounding box and
grows them level by level: a densification step trades the current
residue set for a strictly larger one on a higher-dimensional box, at
the cost of corner-product holes, and a spending plan spreads those
holes along the free axes so that every tile footprint meets a balanced
number of them.  When the residues fill the whole box a single
translate tiles it; unwinding the levels through block substitution and
lifting the cyclic axes yields the final certificate.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import lcm

from .certificate import MODE_EXPLICIT, MODE_TREE, Certificate, build_certificate
from .construction import (
    Construction,
    ExplicitNode,
    ExtendNode,
    FiberNode,
    SliceStackNode,
    UnionNode,
    compose,
    drop_block_sig,
    lift,
    permute_blocks,
)
from .pointsets import (
    DiffSet,
    InfiniteSetError,
    PointSet,
    ProductSet,
    UnionSet,
    empty_set,
    full_set,
)
from .space import (
    Block,
    Placement,
    SpaceError,
    SpaceSignature,
    TileSpec,
    make_tile,
    parse_tile,
)
from .synth_simple import ParamError, PeriodicFn


def _as_points(pts, arity=None):
    """Normalize ints or vectors to a sorted tuple of distinct tuples."""
    out = []
    for p in pts:
        if isinstance(p, int):
            p = (p,)
        out.append(tuple(int(c) for c in p))
    if not out:
        raise ParamError("point set must be nonempty")
    b = len(out[0])
    if any(len(p) != b for p in out):
        raise ParamError("mixed point arities")
    if arity is not None and b != arity:
        raise ParamError("point arity is %d, want %d" % (b, arity))
    if len(set(out)) != len(out):
        raise ParamError("duplicate points")
    return tuple(sorted(out))


# ---------------------------------------------------------------------------
# densification


@dataclass(frozen=True)
class Densification:
    """A residue set next to its lex-least properly shifted translate.

    ``up`` is what the shift adds, ``down`` what it drops, ``carrier``
    the union of both translates.  |up| = |down| > 0, and the carrier
    splits both ways: carrier = tile + up = shifted + down.
    """

    moduli: tuple
    tile: frozenset
    shift: tuple
    shifted: frozenset
    up: frozenset
    down: frozenset
    carrier: frozenset

    @property
    def arity(self) -> int:
        return len(self.moduli)

    def tile_spec(self) -> TileSpec:
        return TileSpec(self.arity, tuple(sorted(self.tile)))

    def box_points(self):
        return [p for p in itertools.product(*(range(m) for m in self.moduli))]

    def add(self, p, q):
        return tuple((a + c) % m for a, c, m in zip(p, q, self.moduli))


def make_densification(group, tile) -> Densification:
    """Pair a residue set with its lex-smallest translate that moves it.

    ``group`` is a modulus (arity taken from the points) or a tuple of
    per-axis moduli.  Input points are reduced into the group and
    min-shifted to 0 on every axis first; a set that already fills the
    group has no moving translate and is rejected.
    """
    pts = _as_points(tile)
    b = len(pts[0])
    if isinstance(group, int):
        moduli = (int(group),) * b
    else:
        moduli = tuple(int(m) for m in group)
    if len(moduli) != b:
        raise ParamError("group arity is %d, tile arity is %d" % (len(moduli), b))
    if any(m < 1 for m in moduli):
        raise ParamError("moduli must be positive")
    reduced = {tuple(c % m for c, m in zip(p, moduli)) for p in pts}
    if len(reduced) != len(pts):
        raise ParamError("tile points collide inside the group")
    mins = [min(p[a] for p in reduced) for a in range(b)]
    tile_set = frozenset(tuple(c - m for c, m in zip(p, mins)) for p in reduced)
    size = 1
    for m in moduli:
        size *= m
    if len(tile_set) == size:
        raise ParamError("tile already fills its group")
    for x in itertools.product(*(range(m) for m in moduli)):
        if all(c == 0 for c in x):
            continue
        moved = frozenset(
            tuple((a + c) % m for a, c, m in zip(p, x, moduli)) for p in tile_set
        )
        if moved != tile_set:
            return Densification(
                moduli,
                tile_set,
                x,
                moved,
                moved - tile_set,
                tile_set - moved,
                tile_set | moved,
            )
    raise AssertionError("only the full box is fixed by every translation")


# ---------------------------------------------------------------------------
# corner products


@dataclass(frozen=True)
class CornerProduct:
    """down^(i-1) x up x down^(d-i) inside the d-fold carrier box.

    Index 0 is the all-down product.  Distinct indices give disjoint
    sets because up and down never meet.
    """

    dens: Densification
    d: int
    i: int

    def __post_init__(self):
        if self.d < 1:
            raise ParamError("corner product needs d >= 1")
        if not 0 <= self.i <= self.d:
            raise ParamError("corner index %d outside 0..%d" % (self.i, self.d))

    def factors(self) -> tuple:
        down, up = self.dens.down, self.dens.up
        if self.i == 0:
            return (down,) * self.d
        return (down,) * (self.i - 1) + (up,) + (down,) * (self.d - self.i)

    def size(self) -> int:
        n = 1
        for f in self.factors():
            n *= len(f)
        return n


def box_signature(dens: Densification, d: int, lead_group: bool = False) -> SpaceSignature:
    """d carrier-box block groups, optionally behind one whole-group block.

    Every block carries the level tile, so placements put translates of
    it; which sub-box a block ranges over is the region's business.
    """
    b = dens.arity
    n = d + (1 if lead_group else 0)
    tile = dens.tile_spec()
    blocks = tuple(Block(j * b, (j + 1) * b, tile) for j in range(n))
    return SpaceSignature(dens.moduli * n, blocks)


_RC_CACHE = {}


def removed_cset(dens: Densification, d: int, i: int) -> Construction:
    """Tiling of the d-fold carrier box minus one corner product.

    One dimension peels off per level: last-block values inside the
    lower corner product take a single shifted copy, the rest recurse,
    and together they miss exactly the requested corner product.  The
    top index routes through index 1 with first and last blocks swapped.
    """
    cset = CornerProduct(dens, d, i)
    key = (dens, d, i)
    hit = _RC_CACHE.get(key)
    if hit is not None:
        return hit
    sig = box_signature(dens, d)
    region = DiffSet(
        sig,
        ProductSet(sig, (dens.carrier,) * d),
        ProductSet(sig, cset.factors()),
    )
    if d == 1:
        off = (0,) * dens.arity if i == 1 else dens.shift
        node = ExplicitNode(sig, [Placement(0, off)], region=region)
    elif i == d:
        inner = removed_cset(dens, d, 1)
        perm = [d - 1] + list(range(d - 1))
        node = permute_blocks(inner, perm)
        node.region = region
    else:
        rest = drop_block_sig(sig, d - 1)
        pinned = ProductSet(rest, CornerProduct(dens, d - 1, i).factors())
        shifted_copies = FiberNode(sig, d - 1, [(dens.shift, pinned)])
        slices = SliceStackNode(
            sig,
            d - 1,
            {},
            default=removed_cset(dens, d - 1, i),
            values=dens.carrier,
        )
        node = UnionNode(sig, [shifted_copies, slices], region=region)
    _RC_CACHE[key] = node
    return node


# ---------------------------------------------------------------------------
# trading corner products for dimensions


@dataclass(frozen=True)
class Hole:
    """A region of the d-fold carrier box whose complement is tiled."""

    dens: Densification
    d: int
    points: PointSet
    construction: Construction


def initial_hole(dens: Densification, d: int) -> Hole:
    """The whole d-fold box as one hole, with the empty tiling."""
    if d < 1:
        raise ParamError("need d >= 1")
    sig = box_signature(dens, d)
    return Hole(
        dens,
        d,
        ProductSet(sig, (dens.carrier,) * d),
        ExplicitNode(sig, [], region=empty_set(sig)),
    )


def _check_cset_inside(points: PointSet, cset: CornerProduct) -> None:
    # exhaustive when small; otherwise lex ends plus an early stretch
    factors = [sorted(f) for f in cset.factors()]

    def flat(p):
        return tuple(c for blk in p for c in blk)

    def fail():
        raise ParamError("corner product %d sticks out of the hole" % cset.i)

    if cset.size() <= 4096:
        for p in itertools.product(*factors):
            if not points.contains(flat(p)):
                fail()
        return
    for p in itertools.islice(itertools.product(*factors), 64):
        if not points.contains(flat(p)):
            fail()
    if not points.contains(flat(tuple(f[-1] for f in factors))):
        fail()


def use_cset(hole: Hole, i: int) -> Hole:
    """Trade one corner product of the hole for a fresh dimension.

    The input covers box^d minus a hole containing corner product i;
    the output covers box^(d+1) minus the traded hole: what is left of
    the old hole crossed with ``down``, plus the top corner product of
    the new box.  Four disjoint parts do it: plain copies fill the freed
    corner product's column, the old tiling extends by ``down``, and
    the two one-corner-short box tilings extend by the overlap and by
    ``up``.
    """
    dens = hole.dens
    d = hole.d
    cset = CornerProduct(dens, d, i)
    _check_cset_inside(hole.points, cset)
    sig1 = box_signature(dens, d + 1)
    rest = drop_block_sig(sig1, d)
    freed = FiberNode(
        sig1, d, [((0,) * dens.arity, ProductSet(rest, cset.factors()))]
    )
    overlap = ExtendNode(
        sig1, removed_cset(dens, d, i), [dens.carrier - dens.up - dens.down]
    )
    top = ExtendNode(sig1, removed_cset(dens, d, 0), [dens.up])
    bulk = ExtendNode(sig1, hole.construction, [dens.down])
    old_sig = hole.points.sig
    kept = DiffSet(old_sig, hole.points, ProductSet(old_sig, cset.factors()))
    new_points = UnionSet(
        sig1,
        (
            kept.extended(sig1, [dens.down]),
            ProductSet(sig1, CornerProduct(dens, d + 1, d + 1).factors()),
        ),
    )
    region = DiffSet(sig1, ProductSet(sig1, (dens.carrier,) * (d + 1)), new_points)
    node = UnionNode(sig1, [freed, overlap, top, bulk], region=region)
    return Hole(dens, d + 1, new_points, node)


def m_csets(dens: Densification, d: int, indices) -> Construction:
    """Spend several corner products of the d-fold box at once.

    Starting from the whole box as one hole, each index is traded in
    ascending order for one fresh dimension.  The result covers the
    (d+m)-fold box minus the m-fold-traded hole.
    """
    idx = sorted(int(i) for i in indices)
    if not idx:
        raise ParamError("need at least one corner index")
    if len(set(idx)) != len(idx):
        raise ParamError("repeated corner index")
    if idx[0] < 0 or idx[-1] > d:
        raise ParamError("corner index outside 0..%d" % d)
    hole = initial_hole(dens, d)
    for i in idx:
        hole = use_cset(hole, i)
    return hole.construction


# ---------------------------------------------------------------------------
# blueprint: group x box^r, built one box block at a time


@dataclass(frozen=True)
class Blueprint:
    """Level plan over group x box^r with chosen columns kept open.

    Level j adds one box block: group elements outside tile + y_j take a
    shifted copy on the new block, those inside take a copy at y_j
    indexed by the remaining values, and the prior plan extends by
    ``down``.  The all-down column always stays open; marking level j
    keeps its corner column (tile + y_j) x down^(j-1) x up x down^(r-j)
    open as well.  ``y_list`` walks the group in lex order, wrapping, so
    each element hosts the same number of marked levels per lap.
    """

    dens: Densification
    mult: int
    r: int
    y_list: tuple

    def group_signature(self) -> SpaceSignature:
        return box_signature(self.dens, self.r, lead_group=True)

    def uncovered(self, i: int) -> ProductSet:
        """Column i as a point set; 0 is the all-down column."""
        if not 0 <= i <= self.r:
            raise ParamError("column index %d outside 0..%d" % (i, self.r))
        sig = self.group_signature()
        if i == 0:
            head = None
            tail = (self.dens.down,) * self.r
        else:
            y = self.y_list[i - 1]
            head = frozenset(self.dens.add(p, y) for p in self.dens.tile)
            tail = CornerProduct(self.dens, self.r, i).factors()
        return ProductSet(sig, (head,) + tail)

    def construction(self, marked=()) -> Construction:
        """Tiling that misses the all-down column and the marked ones."""
        dens = self.dens
        marked = frozenset(int(i) for i in marked)
        if marked and (min(marked) < 1 or max(marked) > self.r):
            raise ParamError("marked levels outside 1..%d" % self.r)
        g_all = frozenset(dens.box_points())
        sig0 = box_signature(dens, 0, lead_group=True)
        node = ExplicitNode(sig0, [], region=empty_set(sig0))
        for j in range(1, self.r + 1):
            sig = box_signature(dens, j, lead_group=True)
            y = self.y_list[j - 1]
            hosts = frozenset(dens.add(p, y) for p in dens.tile)
            rest_last = drop_block_sig(sig, j)
            rest_first = drop_block_sig(sig, 0)
            outside = FiberNode(
                sig,
                j,
                [
                    (
                        dens.shift,
                        ProductSet(
                            rest_last, (g_all - hosts,) + (dens.carrier,) * (j - 1)
                        ),
                    )
                ],
            )
            index = ProductSet(
                rest_first, (dens.carrier,) * (j - 1) + (dens.shifted,)
            )
            if j in marked:
                index = DiffSet(
                    rest_first,
                    index,
                    ProductSet(rest_first, (dens.down,) * (j - 1) + (dens.up,)),
                )
            hosted = FiberNode(sig, 0, [(y, index)])
            grown = ExtendNode(sig, node, [dens.down])
            holes = [ProductSet(sig, (None,) + (dens.down,) * j)]
            for i in sorted(marked):
                if i > j:
                    break
                ti = frozenset(dens.add(p, self.y_list[i - 1]) for p in dens.tile)
                fac = (dens.down,) * (i - 1) + (dens.up,) + (dens.down,) * (j - i)
                holes.append(ProductSet(sig, (ti,) + fac))
            region = DiffSet(
                sig,
                ProductSet(sig, (None,) + (dens.carrier,) * j),
                UnionSet(sig, tuple(holes)),
            )
            node = UnionNode(sig, [outside, hosted, grown], region=region)
        return node

    def full(self) -> Construction:
        return self.construction(())


def build_blueprint(group, tile, mult, r) -> Blueprint:
    """Level plan for ``mult`` marked laps of the group within r levels."""
    return _blueprint(make_densification(group, tile), mult, r)


def _blueprint(dens: Densification, mult: int, r: int) -> Blueprint:
    if mult < 0:
        raise ParamError("mult must be >= 0")
    size_g = len(dens.box_points())
    if r < mult * size_g:
        raise ParamError("need r >= mult * group size = %d, got %d" % (mult * size_g, r))
    pts = dens.box_points()
    y_list = tuple(pts[(j - 1) % len(pts)] for j in range(1, r + 1))
    return Blueprint(dens, mult, r, y_list)


# ---------------------------------------------------------------------------
# spending plans over group x box^d


def construct_denser(group, tile, d0):
    """Densify once, with a tiler for every admissible hole spend.

    Returns ``(carrier, d, family, tiler)``: over group x box^d, any
    collection S of corner columns from ``family`` with |S| = 1 modulo
    |tile| and |S| <= d0 can be spent, and ``tiler(S)`` tiles everything
    except the columns group x C(i, d) for i in S.  d is the smallest
    dimension whose blueprint absorbs the worst-case spend.
    """
    dens = make_densification(group, tile)
    size_t = len(dens.tile)
    size_g = len(dens.box_points())
    if d0 < 1:
        raise ParamError("d0 must be >= 1")
    d1 = -(-(size_t + size_g) * d0 // size_t)
    family = [CornerProduct(dens, d1, i) for i in range(1, d1 + 1)]
    mm_cache = {}
    mc_cache = {}

    def level_tiling(m):
        # tiles group x box^d1 minus the last m corner columns
        hit = mm_cache.get(m)
        if hit is not None:
            return hit
        r = d1 - m
        laps = (m - 1) // size_t
        bp = _blueprint(dens, laps, r)
        marked = tuple(range(1, laps * size_g + 1))
        sig = box_signature(dens, d1, lead_group=True)
        bulk = ExtendNode(sig, bp.construction(marked), [dens.down] * m)
        children = {}
        for g in dens.box_points():
            js = [0]
            for i in marked:
                y = bp.y_list[i - 1]
                if tuple((a - c) % mod for a, c, mod in zip(g, y, dens.moduli)) in dens.tile:
                    js.append(i)
            assert len(js) == m
            key = tuple(js)
            child = mc_cache.get(key)
            if child is None:
                child = m_csets(dens, r, js)
                mc_cache[key] = child
            children[g] = child
        stack = SliceStackNode(sig, 0, children)
        hole = UnionSet(
            sig,
            tuple(
                ProductSet(sig, (None,) + CornerProduct(dens, d1, i).factors())
                for i in range(r + 1, d1 + 1)
            ),
        )
        region = DiffSet(sig, ProductSet(sig, (None,) + (dens.carrier,) * d1), hole)
        node = UnionNode(sig, [bulk, stack], region=region)
        mm_cache[m] = node
        return node

    def tiler(spent):
        idx = sorted(s.i if isinstance(s, CornerProduct) else int(s) for s in spent)
        m = len(idx)
        if m == 0 or len(set(idx)) != m:
            raise ParamError("corner columns must be distinct and nonempty")
        if idx[0] < 1 or idx[-1] > d1:
            raise ParamError("corner column outside 1..%d" % d1)
        if (m - 1) % size_t != 0:
            raise ParamError(
                "can spend only 1 mod %d corner columns, got %d" % (size_t, m)
            )
        if m > d0:
            raise ParamError("spend of %d columns exceeds the budget %d" % (m, d0))
        node = level_tiling(m)
        r = d1 - m
        if idx == list(range(r + 1, d1 + 1)):
            return node
        chosen = set(idx)
        others = [i for i in range(1, d1 + 1) if i not in chosen]
        perm = [0] * (d1 + 1)
        for j, pos in enumerate(others, start=1):
            perm[j] = pos
        for s, pos in enumerate(idx, start=1):
            perm[r + s] = pos
        out = permute_blocks(node, perm)
        hole = UnionSet(
            out.sig,
            tuple(
                ProductSet(out.sig, (None,) + CornerProduct(dens, d1, i).factors())
                for i in idx
            ),
        )
        out.region = DiffSet(
            out.sig, ProductSet(out.sig, (None,) + (dens.carrier,) * d1), hole
        )
        return out

    return frozenset(dens.carrier), d1, family, tiler


# ---------------------------------------------------------------------------
# deconvolution


class MultiDimFn:
    """Memoized solution g of: sum of g over a tile footprint = rhs.

    The identity sum over tile points y of g(x - y) = rhs(x) holds at
    every x, modulo ``modulus``.  g vanishes on a band just below zero
    on the last axis and grows outward row by row; each row solves a
    one-lower-arity instance whose right-hand side folds in the rows
    already known, through the bottom slice of the tile above the band
    and through the top slice below it.  Values are pure: repeated
    evaluation returns the same residue.

    For one-axis tiles and constant rhs, ``periodic`` holds a purely
    periodic solution of the same identity (not the row solution
    shifted; an independent one read off the recurrence cycle).
    """

    def __init__(self, tile, rhs, modulus):
        pts = _as_points(tile)
        self.arity = len(pts[0])
        if int(modulus) < 1:
            raise ParamError("modulus must be >= 1")
        self.modulus = int(modulus)
        mins = [min(p[a] for p in pts) for a in range(self.arity)]
        self._shift = tuple(mins)
        self._tile = tuple(
            sorted(tuple(c - m for c, m in zip(p, mins)) for p in pts)
        )
        if callable(rhs):
            self._rhs = rhs
            self._constant = None
        else:
            const = int(rhs)
            self._rhs = lambda x: const
            self._constant = const
        self._memo = {}
        self._rows = {}
        self.periodic = None
        if self.arity >= 1:
            self._span = max(p[-1] for p in self._tile)
            self._slices = {}
            for p in self._tile:
                self._slices.setdefault(p[-1], []).append(p[:-1])
        if self.arity == 1 and self._constant is not None:
            per = _periodic_solution(
                [p[0] for p in self._tile], self._constant, self.modulus
            )
            s = self._shift[0] % per.period
            if s:
                vals = tuple(
                    per.values[(j + s) % per.period] for j in range(per.period)
                )
                per = PeriodicFn(per.period, vals, per.modulus)
            self.periodic = per

    def value(self, x) -> int:
        if isinstance(x, int):
            x = (x,)
        x = tuple(int(c) for c in x)
        if len(x) != self.arity:
            raise ParamError("point arity is %d, want %d" % (len(x), self.arity))
        if x in self._memo:
            return self._memo[x]
        v = self._value_shifted(tuple(c + s for c, s in zip(x, self._shift)))
        self._memo[x] = v
        return v

    def _value_shifted(self, x):
        if self.arity == 0:
            return self._rhs(()) % self.modulus
        head, n = x[:-1], x[-1]
        if -self._span <= n <= -1:
            return 0
        row = self._rows.get(n)
        if row is None:
            row = self._build_row(n)
            self._rows[n] = row
        return row.value(head)

    def _row_value(self, n, head):
        if -self._span <= n <= -1:
            return 0
        return self._value_shifted(head + (n,))

    def _build_row(self, n):
        k = self._span
        t = self.modulus
        slices = self._slices
        if n >= 0:
            base = slices[0]

            def rhs(head, n=n):
                total = self._rhs(head + (n,))
                for j, zs in slices.items():
                    if j == 0:
                        continue
                    for z in zs:
                        total -= self._row_value(
                            n - j, tuple(a - c for a, c in zip(head, z))
                        )
                return total % t

        else:
            base = slices[k]

            def rhs(head, n=n):
                total = self._rhs(head + (n + k,))
                for j, zs in slices.items():
                    if j == k:
                        continue
                    for z in zs:
                        total -= self._row_value(
                            n + k - j, tuple(a - c for a, c in zip(head, z))
                        )
                return total % t

        return MultiDimFn(base, rhs, t)


def _periodic_solution(offsets, rhs, t):
    # run the zero-seeded recurrence until the state window repeats; the
    # constant rhs makes any shift of the cycle a solution again
    offs = sorted(offsets)
    if t == 1:
        return PeriodicFn(1, (0,), 1)
    k = offs[-1]
    if k == 0:
        return PeriodicFn(1, (rhs % t,), t)
    taps = [y for y in offs if y > 0]
    state = (0,) * k
    seen = {state: 0}
    vals = []
    while True:
        v = (rhs - sum(state[y - 1] for y in taps)) % t
        vals.append(v)
        state = (v,) + state[:-1]
        idx = seen.get(state)
        if idx is not None:
            lam = len(vals) - idx
            return PeriodicFn(lam, tuple(vals[idx : idx + lam]), t)
        seen[state] = len(vals)


def solve_g(tile, rhs, modulus) -> MultiDimFn:
    """Deconvolve over a tile: the result g satisfies, at every point x,
    sum over tile points y of g(x - y) = rhs(x), modulo ``modulus``.
    ``rhs`` is an integer or a callable on points."""
    return MultiDimFn(tile, rhs, modulus)


# ---------------------------------------------------------------------------
# spending plans along the free axes


class HoleCover:
    """Assign disjoint hole-family slices to lattice points so that the
    union over any tile footprint has size 1 modulo the modulus.

    Slice sizes come from the deconvolution with rhs 1; points whose
    footprints overlap get disjoint slices, so the union over a
    footprint is a plain sum, never larger than |tile| * (modulus - 1).
    One-axis tiles get a fully periodic plan; wider tiles are assigned
    on demand in max-norm shells around the origin.
    """

    def __init__(self, tile, modulus, family, space=None):
        pts = _as_points(tile)
        self._tile = pts
        b = len(pts[0])
        if b < 1:
            raise ParamError("free points need at least one axis")
        self.arity = b
        self.modulus = int(modulus)
        self.family = tuple(family)
        self.space = space
        need = (self.modulus - 1) * len(pts) * len(pts)
        if len(self.family) < need:
            raise ParamError(
                "hole family too small: %d < %d" % (len(self.family), need)
            )
        self.fn = solve_g(pts, 1, self.modulus)
        if b == 1:
            xs = sorted(p[0] for p in pts)
            span = xs[-1] - xs[0]
            period = self.fn.periodic.period
            if span:
                period = lcm(period, 2 * span)
            self.period = period
            diffs = {(a - c) % period for a in xs for c in xs} - {0}
            assign = []
            for n in range(period):
                busy = set()
                for d in diffs:
                    m = (n - d) % period
                    if m < n:
                        busy.update(assign[m])
                assign.append(self._pick(self.fn.periodic.value(n), busy))
            self._assign = assign
        else:
            self.period = None
            self._diffs = sorted(
                {
                    tuple(a - c for a, c in zip(p, q))
                    for p in pts
                    for q in pts
                }
                - {(0,) * b}
            )
            self._assigned = {}
            self._spiral = _spiral_points(b)

    def _pick(self, need, busy):
        take = []
        for j in range(len(self.family)):
            if len(take) == need:
                break
            if j not in busy:
                take.append(j)
        if len(take) != need:
            # unreachable under the family size bound
            raise SpaceError("hole family exhausted")
        return tuple(take)

    def _ensure(self, z):
        while z not in self._assigned:
            w = next(self._spiral)
            busy = set()
            for d in self._diffs:
                got = self._assigned.get(tuple(a - c for a, c in zip(w, d)))
                if got:
                    busy.update(got)
            self._assigned[w] = self._pick(self.fn.value(w), busy)

    def _slice_at(self, z):
        if self.period is not None:
            return self._assign[z[0] % self.period]
        self._ensure(z)
        return self._assigned[z]

    def _norm(self, x):
        if isinstance(x, int):
            x = (x,)
        x = tuple(int(c) for c in x)
        if len(x) != self.arity:
            raise ParamError("point arity is %d, want %d" % (len(x), self.arity))
        return x

    def members(self, z):
        """Family labels owned by lattice point z."""
        return tuple(self.family[j] for j in self._slice_at(self._norm(z)))

    def column(self, x):
        """Union of member slices across the tile footprint ending at x,
        in family order; overlap between slices is an error."""
        x = self._norm(x)
        seen = set()
        for y in self._tile:
            row = self._slice_at(tuple(a - c for a, c in zip(x, y)))
            for j in row:
                if j in seen:
                    raise SpaceError("hole plan overlaps at %r" % (x,))
                seen.add(j)
        return tuple(self.family[j] for j in sorted(seen))


def _spiral_points(b):
    # all of Z^b in growing max-norm shells, lex within each shell
    r = 0
    while True:
        if r == 0:
            yield (0,) * b
        else:
            for p in itertools.product(range(-r, r + 1), repeat=b):
                if max(abs(c) for c in p) == r:
                    yield p
        r += 1


def cover_holes(tile, modulus, family, space=None) -> HoleCover:
    """Spending plan for hole columns along the free axes; see HoleCover."""
    return HoleCover(tile, modulus, family, space)


# ---------------------------------------------------------------------------
# the level-by-level synthesis


class _LazyLevelNode(Construction):
    """One densification level whose free-axis plan is demand-driven.

    Free blocks of width > 1 have no periodic spending plan, so copies
    and per-column box tilings are looked up lazily from the hole cover.
    The node cannot be materialized or serialized; verification samples
    a bounded window through ``locate``.
    """

    __slots__ = ("free_pts", "cover", "tiler", "_col_cache")

    kind = "lazy-level"

    def __init__(self, sig, region, free_pts, cover, tiler):
        self.sig = sig
        self.region = region
        self.free_pts = free_pts
        self.cover = cover
        self.tiler = tiler
        self._col_cache = {}

    def _column(self, x):
        col = self.cover.column(x)
        key = frozenset(cp.i for cp in col)
        child = self._col_cache.get(key)
        if child is None:
            child = self.tiler(col)
            self._col_cache[key] = child
        return child

    def _locate(self, p):
        b = len(self.free_pts[0])
        x, rest = p[:b], p[b:]
        for y in self.free_pts:
            z = tuple(a - c for a, c in zip(x, y))
            for cp in self.cover.members(z):
                fac = cp.factors()
                if all(
                    rest[(j + 1) * b : (j + 2) * b] in fac[j]
                    for j in range(len(fac))
                ):
                    return Placement(0, z + rest)
        pl = self._column(x)._locate(rest)
        return Placement(pl.block + 1, x + pl.offset)

    def iter_placements(self, window=None):
        raise InfiniteSetError("lazy level tilings cannot be enumerated")

    def to_json(self, enc=None):
        raise SpaceError("lazy level tilings have no serialized form")


class _GeneralSynthesis:
    """Grow the residue set to the full box, one densification a level."""

    def __init__(self, tile: TileSpec):
        self.tile = tile
        self.arity = tile.dim
        self.k = tile.k
        self.moduli = (tile.k,) * tile.dim
        self.levels = []
        self._memo = {}

    def claim(self, residues: frozenset):
        """(p, q, construction, free periods) tiling free^p x box^q with
        copies of the free tile and of the residue set."""
        hit = self._memo.get(residues)
        if hit is None:
            hit = self._claim(residues)
            self._memo[residues] = hit
        return hit

    def _claim(self, residues):
        b = self.arity
        a_tile = make_tile(sorted(residues))
        assert set(a_tile.points) == set(residues)  # carriers keep axis mins at 0
        sig_g = SpaceSignature(self.moduli, (Block(0, b, a_tile),))
        box = 1
        for m in self.moduli:
            box *= m
        if len(residues) == box:
            node = ExplicitNode(sig_g, [Placement(0, (0,) * b)], region=full_set(sig_g))
            return (0, 1, node, ())
        t = len(residues)
        d0 = max(t - 1, 1) * self.tile.size ** 2
        dens = make_densification(self.moduli, residues)
        carrier, d1, family, tiler = construct_denser(self.moduli, residues, d0)
        cover = cover_holes(self.tile.points, t, family)
        level = self._level(dens, a_tile, d1, cover, tiler)
        entry = {
            "residues": t,
            "budget": d0,
            "blocks": d1,
            "free_period": cover.period,
        }
        self.levels.append(entry)
        u, v, inner, inner_periods = self.claim(carrier)
        composed = compose(level, inner, d1, v)
        p = d1 * u + 1
        q = d1 * v + 1
        assert composed.sig.n_blocks == 2 + d1 * (u + v)
        perm = [0] * composed.sig.n_blocks
        perm[1] = p
        for grp in range(d1):
            base = 2 + grp * (u + v)
            for j in range(u):
                perm[base + j] = 1 + grp * u + j
            for s in range(v):
                perm[base + u + s] = p + 1 + grp * v + s
        node = permute_blocks(composed, perm)
        node.region = full_set(node.sig)
        if b == 1:
            level_periods = (cover.period,)
        else:
            level_periods = (self.k,) * b
        entry["p"] = p
        entry["q"] = q
        return (p, q, node, level_periods + inner_periods * d1)

    def _level(self, dens, a_tile, d1, cover, tiler):
        b = self.arity
        blocks = [Block(0, b, self.tile)]
        for j in range(d1 + 1):
            lo = b + j * b
            blocks.append(Block(lo, lo + b, a_tile))
        sig = SpaceSignature((None,) * b + self.moduli * (d1 + 1), tuple(blocks))
        region = ProductSet(sig, (None, None) + (dens.carrier,) * d1)
        if b > 1:
            return _LazyLevelNode(sig, region, self.tile.points, cover, tiler)
        rest = drop_block_sig(sig, 0)
        period = cover.period
        entries = []
        children = {}
        col_cache = {}
        for n in range(period):
            labels = cover.members(n)
            if labels:
                parts = tuple(
                    ProductSet(rest, (None,) + cp.factors()) for cp in labels
                )
                idx = parts[0] if len(parts) == 1 else UnionSet(rest, parts)
                entries.append(((n,), idx))
            col = cover.column(n)
            key = frozenset(cp.i for cp in col)
            child = col_cache.get(key)
            if child is None:
                child = tiler(col)
                col_cache[key] = child
            children[(n,)] = child
        x_part = FiberNode(sig, 0, entries, period=period)
        stack = SliceStackNode(sig, 0, children, period=period)
        return UnionNode(sig, [x_part, stack], region=region)


def synthesize_general(tile, limit=None, trace=None) -> Certificate:
    """Tile an arbitrary finite tile by growing its residue set.

    The tile's residues inside the bounding box densify level by level
    until they fill the box; substituting the levels into one another
    and lifting every cyclic axis gives the tiling.  One-axis tiles come
    out periodic on every axis.  Wider tiles get a demand-driven plan on
    the free axes: the certificate still locates and verifies over a
    bounded window, but has no serialized form.

    ``trace``, if given a dict, receives the per-level bookkeeping.
    """
    spec = parse_tile(tile)
    b = spec.dim
    if spec.size == 1:
        sig = SpaceSignature((None,) * b, (Block(0, b, spec),))
        meta = {"pipeline": "general", "d": b, "p": 1, "q": 0, "periodic": True, "levels": []}
        return Certificate(
            sig, (1,) * b, MODE_EXPLICIT, (Placement(0, (0,) * b),), meta
        )
    synth = _GeneralSynthesis(spec)
    p, q, node, periods = synth.claim(frozenset(spec.points))
    lifted = lift(node, (None,) * (p * b) + (spec.k,) * (q * b))
    period = tuple(periods) + (spec.k,) * (q * b)
    meta = {
        "pipeline": "general",
        "d": lifted.sig.n_axes,
        "p": p,
        "q": q,
        "periodic": b == 1,
        "levels": synth.levels,
    }
    if trace is not None:
        trace["p"] = p
        trace["q"] = q
        trace["levels"] = synth.levels
    if not synth.levels:
        # residues fill the box outright; the flat periodic list is small
        return build_certificate(lifted, period, meta, limit=limit)
    return Certificate(lifted.sig, period, MODE_TREE, lifted, meta)
