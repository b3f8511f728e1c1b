"""Lazy tiling constructions.

A Construction represents a family of tile placements partitioning a
region of a product space.  Trees stay lazy: a node answers
``locate(point) -> Placement`` in time proportional to tree depth and
never materializes sibling branches, so spaces with 10^40+ points remain
workable.  ``materialize`` walks the tree independently of ``locate``;
tests cross-check the two on every finite fixture.

Node kinds:

* ``explicit``  - a literal placement list
* ``fiber``     - translates of one tile indexed by a structured point
                  set over the remaining blocks, optionally repeating
                  with a period along a free axis
* ``slice``     - partition by the value of one block, child per value
                  (optionally by residue along a free axis)
* ``union``     - disjoint union of children; the last child is the
                  catch-all so lookups stay cheap
* ``extend``    - a finished tiling crossed with fixed value sets on
                  appended blocks
* ``embed``     - block permutation plus translation
* ``remove``    - a tiling minus finitely many named copies
* ``compose``   - substitution of one tiling into the copies of another
                  (d parallel substitution groups)
* ``lift``      - pull a cyclic tiling back along per-axis reduction
"""
from __future__ import annotations

import os
from itertools import product as _iproduct

from .pointsets import (
    DiffSet,
    ExplicitSet,
    InfiniteSetError,
    NodeRegion,
    PointSet,
    ProductSet,
    UnionSet,
    empty_set,
    full_set,
    pointset_from_json,
)
from .space import (
    Block,
    Placement,
    SpaceError,
    SpaceSignature,
    TileSpec,
    cover,
    make_tile,
    placement_from_json,
    placement_to_json,
    project_tile,
    sig_from_json,
    sig_to_json,
)

DEFAULT_LIMIT = 10**7


def materialization_limit() -> int:
    raw = os.environ.get("TILESMITH_LIMIT")
    if raw:
        try:
            return int(raw)
        except ValueError:
            pass
    return DEFAULT_LIMIT


class LocateError(Exception):
    """A point has no placement in this construction."""


class PointOutsideRegion(LocateError):
    pass


class PointInHole(LocateError):
    pass


def drop_block_sig(sig: SpaceSignature, j: int) -> SpaceSignature:
    """Signature with block j removed (axes renumbered)."""
    b = sig.blocks[j]
    w = b.width
    axes = sig.axes[: b.lo] + sig.axes[b.hi :]
    blocks = []
    for t, blk in enumerate(sig.blocks):
        if t == j:
            continue
        if t < j:
            blocks.append(blk)
        else:
            blocks.append(Block(blk.lo - w, blk.hi - w, blk.tile))
    return SpaceSignature(axes, tuple(blocks))


def _strip_block(p, lo, hi):
    return p[:lo] + p[hi:]


def _insert_block(p, lo, vals):
    return p[:lo] + tuple(vals) + p[lo:]


def _enc_inline(node):
    return node.to_json()


class Construction:
    __slots__ = ("sig", "region")

    kind = "?"

    def locate(self, p) -> Placement:
        """Public entry: validates and wraps the point, then descends."""
        if len(p) != self.sig.n_axes:
            raise SpaceError(
                "point arity %d != %d axes" % (len(p), self.sig.n_axes)
            )
        q = self.sig.reduce(tuple(int(c) for c in p))
        return self._locate(q)

    def _locate(self, p) -> Placement:
        raise NotImplementedError

    def iter_placements(self, window=None):
        raise NotImplementedError

    # NodeRegion delegation hooks; only nodes without a structural region
    # implement these.
    def _region_contains(self, p):
        raise NotImplementedError

    def _region_size(self):
        raise NotImplementedError

    def _region_iter(self):
        raise NotImplementedError

    def to_json(self, enc=_enc_inline):
        raise NotImplementedError


def _window_ok(sig, offset, window):
    if window is None:
        return True
    for a, rng in window.items():
        if offset[a] not in rng:
            return False
    return True


def _drop_axis_window(window, lo, w):
    if window is None:
        return None
    out = {}
    for a, rng in window.items():
        if lo <= a < lo + w:
            continue
        out[a if a < lo else a - w] = rng
    return out


class ExplicitNode(Construction):
    __slots__ = ("placements", "_index")

    kind = "explicit"

    def __init__(self, sig, placements, region=None):
        self.sig = sig
        pls = tuple(sorted(placements))
        self.placements = pls
        index = {}
        for pl in pls:
            for q in cover(pl, sig):
                if q in index:
                    raise SpaceError("explicit placements overlap at %r" % (q,))
                index[q] = pl
        self._index = index
        self.region = region if region is not None else ExplicitSet(sig, index.keys())

    def _locate(self, p):
        try:
            return self._index[p]
        except KeyError:
            raise PointOutsideRegion(repr(p)) from None

    def iter_placements(self, window=None):
        for pl in self.placements:
            if _window_ok(self.sig, pl.offset, window):
                yield pl

    def to_json(self, enc=_enc_inline):
        return {
            "kind": "explicit",
            "placements": [placement_to_json(pl) for pl in self.placements],
            "region": (
                None if isinstance(self.region, NodeRegion) else self.region.to_json()
            ),
        }


class FiberNode(Construction):
    """Copies of the tile of ``tile_block``, one per point of an index set.

    Each entry is (block offset, index set over the remaining blocks): for
    every point s of the index set there is a copy at that block offset
    with the other coordinates pinned to s.  With ``period`` set (1-axis
    free tile block) the entries repeat along that axis.
    """

    __slots__ = ("tile_block", "entries", "period", "_entry_map", "_rest_sig")

    kind = "fiber"

    def __init__(self, sig, tile_block, entries, period=None):
        self.sig = sig
        self.tile_block = tile_block
        bt = sig.blocks[tile_block]
        if period is not None:
            if bt.width != 1 or sig.axes[bt.lo] is not None:
                raise SpaceError("periodic fiber needs a 1-axis free tile block")
            if period < 1:
                raise SpaceError("fiber period must be >= 1")
        self.period = period
        self._rest_sig = drop_block_sig(sig, tile_block)
        ents = []
        seen = set()
        for off, st in entries:
            off = tuple(int(c) for c in off)
            if len(off) != bt.width:
                raise SpaceError("fiber offset arity mismatch")
            if period is not None:
                off = (off[0] % period,)
            if off in seen:
                raise SpaceError("duplicate fiber offset %r" % (off,))
            seen.add(off)
            if st.sig is not self._rest_sig and st.sig != self._rest_sig:
                raise SpaceError("fiber index set over wrong signature")
            ents.append((off, st))
        ents.sort(key=lambda e: e[0])
        self.entries = tuple(ents)
        self._entry_map = dict(ents)
        self.region = NodeRegion(sig, self)

    def _match(self, p):
        bt = self.sig.blocks[self.tile_block]
        mods = self.sig.axes[bt.lo : bt.hi]
        p_tb = p[bt.lo : bt.hi]
        p_rest = _strip_block(p, bt.lo, bt.hi)
        for y in bt.tile.points:
            o = tuple(
                (c - d) if m is None else (c - d) % m
                for c, d, m in zip(p_tb, y, mods)
            )
            key = o if self.period is None else (o[0] % self.period,)
            st = self._entry_map.get(key)
            if st is not None and st.contains(p_rest):
                return Placement(self.tile_block, _insert_block(p_rest, bt.lo, o))
        return None

    def _locate(self, p):
        pl = self._match(p)
        if pl is None:
            raise PointOutsideRegion(repr(p))
        return pl

    def _region_contains(self, p):
        return self._match(p) is not None

    def _region_size(self):
        if self.period is not None:
            raise InfiniteSetError("periodic fiber covers infinitely many points")
        bt = self.sig.blocks[self.tile_block]
        return sum(bt.tile.size * st.size() for _, st in self.entries)

    def _region_iter(self):
        bt = self.sig.blocks[self.tile_block]
        if self.period is not None:
            raise InfiniteSetError("periodic fiber covers infinitely many points")
        mods = self.sig.axes[bt.lo : bt.hi]
        for off, st in self.entries:
            for s in st.iter_points():
                for y in bt.tile.points:
                    v = tuple(
                        (o + c) if m is None else (o + c) % m
                        for o, c, m in zip(off, y, mods)
                    )
                    yield _insert_block(s, bt.lo, v)

    def iter_placements(self, window=None):
        bt = self.sig.blocks[self.tile_block]
        if self.period is None:
            for off, st in self.entries:
                for s in st.iter_points():
                    pl = Placement(self.tile_block, _insert_block(s, bt.lo, off))
                    if _window_ok(self.sig, pl.offset, window):
                        yield pl
            return
        axis = bt.lo
        if window is None or axis not in window:
            raise InfiniteSetError("periodic fiber needs a window on axis %d" % axis)
        rng = window[axis]
        for off, st in self.entries:
            base = off[0] % self.period
            start = rng.start + ((base - rng.start) % self.period)
            for o0 in range(start, rng.stop, self.period):
                for s in st.iter_points():
                    pl = Placement(self.tile_block, _insert_block(s, axis, (o0,)))
                    if _window_ok(self.sig, pl.offset, window):
                        yield pl

    def to_json(self, enc=_enc_inline):
        return {
            "kind": "fiber",
            "tile_block": self.tile_block,
            "period": self.period,
            "entries": [
                {"offset": list(off), "index": st.to_json()} for off, st in self.entries
            ],
        }


class SliceStackNode(Construction):
    """Partition by the value of one block; child constructions live in the
    space without that block.  ``period`` slices a free 1-axis block by
    residue.  ``values`` restricts the stack to a subset of the block's
    values; ``default`` then applies only inside that subset."""

    __slots__ = ("block", "children", "default", "period", "values", "_child_sig")

    kind = "slice"

    def __init__(self, sig, block, children, default=None, period=None, values=None):
        self.sig = sig
        self.block = block
        b = sig.blocks[block]
        if period is not None:
            if b.width != 1 or sig.axes[b.lo] is not None:
                raise SpaceError("periodic slice needs a 1-axis free block")
            if values is not None:
                raise SpaceError("periodic slice cannot restrict values")
        else:
            mods = sig.axes[b.lo : b.hi]
            if any(m is None for m in mods):
                raise SpaceError("cannot slice a free block without a period")
        self.period = period
        self.values = (
            None if values is None else frozenset(tuple(int(c) for c in v) for v in values)
        )
        self._child_sig = drop_block_sig(sig, block)
        norm = {}
        for key, child in children.items():
            key = tuple(int(c) for c in key)
            if self.values is not None and key not in self.values:
                raise SpaceError("slice case %r outside the value set" % (key,))
            if child.sig != self._child_sig:
                raise SpaceError("slice child signature mismatch at %r" % (key,))
            norm[key] = child
        if default is not None and default.sig != self._child_sig:
            raise SpaceError("slice default signature mismatch")
        self.children = norm
        self.default = default
        self.region = NodeRegion(sig, self)

    def _child_for(self, v):
        key = v if self.period is None else (v[0] % self.period,)
        if self.values is not None and key not in self.values:
            return None
        return self.children.get(key, self.default)

    def _locate(self, p):
        b = self.sig.blocks[self.block]
        v = p[b.lo : b.hi]
        child = self._child_for(v)
        if child is None:
            raise PointOutsideRegion(repr(p))
        pl = child._locate(_strip_block(p, b.lo, b.hi))
        blk = pl.block if pl.block < self.block else pl.block + 1
        return Placement(blk, _insert_block(pl.offset, b.lo, v))

    def _region_contains(self, p):
        b = self.sig.blocks[self.block]
        child = self._child_for(p[b.lo : b.hi])
        return child is not None and child.region.contains(_strip_block(p, b.lo, b.hi))

    def _values(self):
        if self.period is not None:
            raise InfiniteSetError("periodic slice spans a free axis")
        if self.values is not None:
            return sorted(self.values)
        return self.sig.block_points(self.block)

    def _region_size(self):
        total = 0
        for v in self._values():
            child = self._child_for(v)
            if child is not None:
                total += child.region.size()
        return total

    def _region_iter(self):
        b = self.sig.blocks[self.block]
        for v in self._values():
            child = self._child_for(v)
            if child is not None:
                for q in child.region.iter_points():
                    yield _insert_block(q, b.lo, v)

    def iter_placements(self, window=None):
        b = self.sig.blocks[self.block]
        sub_window = _drop_axis_window(window, b.lo, b.width)
        if self.period is None:
            values = self._values()
        else:
            if window is None or b.lo not in window:
                raise InfiniteSetError("periodic slice needs a window on axis %d" % b.lo)
            values = [(v,) for v in window[b.lo]]
        for v in values:
            child = self._child_for(v)
            if child is None:
                continue
            for pl in child.iter_placements(sub_window):
                blk = pl.block if pl.block < self.block else pl.block + 1
                yield Placement(blk, _insert_block(pl.offset, b.lo, v))

    def to_json(self, enc=_enc_inline):
        cases = {}
        for key, child in sorted(self.children.items()):
            if self.default is not None and child is self.default:
                continue
            cases[",".join(str(c) for c in key)] = enc(child)
        return {
            "kind": "slice",
            "block": self.block,
            "period": self.period,
            "cases": cases,
            "default": None if self.default is None else enc(self.default),
            "values": (
                None if self.values is None else sorted(list(v) for v in self.values)
            ),
        }


class UnionNode(Construction):
    """Disjoint union.  Children before the last are probed via their
    region test; the last child is the catch-all bulk."""

    __slots__ = ("children",)

    kind = "union"

    def __init__(self, sig, children, region=None):
        self.sig = sig
        self.children = tuple(children)
        if not self.children:
            raise SpaceError("union needs at least one child")
        for c in self.children:
            if c.sig != sig:
                raise SpaceError("union child over a different space")
        self.region = region if region is not None else NodeRegion(sig, self)

    def _locate(self, p):
        for c in self.children[:-1]:
            if c.region.contains(p):
                return c._locate(p)
        return self.children[-1]._locate(p)

    def _region_contains(self, p):
        return any(c.region.contains(p) for c in self.children)

    def _region_size(self):
        return sum(c.region.size() for c in self.children)

    def _region_iter(self):
        for c in self.children:
            yield from c.region.iter_points()

    def iter_placements(self, window=None):
        for c in self.children:
            yield from c.iter_placements(window)

    def to_json(self, enc=_enc_inline):
        return {
            "kind": "union",
            "children": [enc(c) for c in self.children],
            "region": (
                None if isinstance(self.region, NodeRegion) else self.region.to_json()
            ),
        }


class ExtendNode(Construction):
    """Cross a finished tiling with fixed value sets on appended blocks."""

    __slots__ = ("child", "masks", "_child_sig")

    kind = "extend"

    def __init__(self, sig, child, masks):
        self.sig = sig
        self.child = child
        n_new = len(masks)
        if n_new < 1 or n_new >= sig.n_blocks:
            raise SpaceError("extend needs 1..n-1 appended blocks")
        n_old = sig.n_blocks - n_new
        cut = sig.blocks[n_old].lo
        child_sig = SpaceSignature(sig.axes[:cut], sig.blocks[:n_old])
        if child.sig != child_sig:
            raise SpaceError("extend child signature mismatch")
        self._child_sig = child_sig
        norm = []
        for i, m in enumerate(masks):
            if m is not None:
                m = frozenset(tuple(v) for v in m)
            norm.append(m)
        self.masks = tuple(norm)
        self.region = child.region.extended(sig, self.masks)

    def _split(self, p):
        n_old = self.sig.n_blocks - len(self.masks)
        cut = self.sig.blocks[n_old].lo
        return p[:cut], p[cut:]

    def _locate(self, p):
        head, tail = self._split(p)
        n_old = self.sig.n_blocks - len(self.masks)
        for i, m in enumerate(self.masks):
            if m is not None:
                b = self.sig.blocks[n_old + i]
                if p[b.lo : b.hi] not in m:
                    raise PointOutsideRegion(repr(p))
        pl = self.child._locate(head)
        return Placement(pl.block, pl.offset + tail)

    def _tails(self):
        n_old = self.sig.n_blocks - len(self.masks)
        vals = [()]
        for i, m in enumerate(self.masks):
            j = n_old + i
            vs = sorted(m) if m is not None else self.sig.block_points(j)
            vals = [t + v for t in vals for v in vs]
        return vals

    def iter_placements(self, window=None):
        cut = self.sig.blocks[self.sig.n_blocks - len(self.masks)].lo
        head_window = None
        if window is not None:
            head_window = {a: r for a, r in window.items() if a < cut}
        tails = self._tails()
        for pl in self.child.iter_placements(head_window):
            for t in tails:
                out = Placement(pl.block, pl.offset + t)
                if _window_ok(self.sig, out.offset, window):
                    yield out

    def to_json(self, enc=_enc_inline):
        return {
            "kind": "extend",
            "child": enc(self.child),
            "masks": [
                None if m is None else sorted([list(v) for v in m]) for m in self.masks
            ],
        }


class EmbedNode(Construction):
    """Block permutation plus translation."""

    __slots__ = ("child", "block_perm", "offset", "_axis_map", "_inv_axis_map")

    kind = "embed"

    def __init__(self, sig, child, block_perm, offset):
        self.sig = sig
        self.child = child
        perm = tuple(block_perm)
        if sorted(perm) != list(range(sig.n_blocks)) or len(perm) != child.sig.n_blocks:
            raise SpaceError("block permutation must be a bijection")
        self.block_perm = perm
        self.offset = tuple(int(c) for c in offset)
        if len(self.offset) != sig.n_axes:
            raise SpaceError("embed offset arity mismatch")
        axis_map = [None] * child.sig.n_axes
        for j, pj in enumerate(perm):
            cb = child.sig.blocks[j]
            pb = sig.blocks[pj]
            if cb.width != pb.width or cb.tile != pb.tile:
                raise SpaceError("embed block %d shape mismatch" % j)
            if child.sig.axes[cb.lo : cb.hi] != sig.axes[pb.lo : pb.hi]:
                raise SpaceError("embed block %d moduli mismatch" % j)
            for t in range(cb.width):
                axis_map[cb.lo + t] = pb.lo + t
        self._axis_map = tuple(axis_map)
        inv = [None] * sig.n_axes
        for a_c, a_p in enumerate(axis_map):
            inv[a_p] = a_c
        self._inv_axis_map = tuple(inv)
        self.region = NodeRegion(sig, self)

    def _pull(self, p):
        """Parent point -> child point."""
        amap = self._axis_map
        off = self.offset
        axes = self.sig.axes
        q = [0] * len(amap)
        for a_c, a_p in enumerate(amap):
            m = axes[a_p]
            v = p[a_p] - off[a_p]
            q[a_c] = v if m is None else v % m
        return tuple(q)

    def _push_offset(self, o):
        amap = self._axis_map
        off = self.offset
        axes = self.sig.axes
        out = [0] * self.sig.n_axes
        for a_c, a_p in enumerate(amap):
            m = axes[a_p]
            v = o[a_c] + off[a_p]
            out[a_p] = v if m is None else v % m
        return tuple(out)

    def _locate(self, p):
        pl = self.child._locate(self._pull(p))
        return Placement(self.block_perm[pl.block], self._push_offset(pl.offset))

    def _region_contains(self, p):
        return self.child.region.contains(self._pull(p))

    def _region_size(self):
        return self.child.region.size()

    def _region_iter(self):
        for q in self.child.region.iter_points():
            yield self._push_offset(q)

    def iter_placements(self, window=None):
        child_window = None
        if window is not None:
            child_window = {}
            for a_p, rng in window.items():
                a_c = self._inv_axis_map[a_p]
                d = self.offset[a_p]
                child_window[a_c] = range(rng.start - d, rng.stop - d)
        for pl in self.child.iter_placements(child_window):
            yield Placement(self.block_perm[pl.block], self._push_offset(pl.offset))

    def to_json(self, enc=_enc_inline):
        return {
            "kind": "embed",
            "child": enc(self.child),
            "block_perm": list(self.block_perm),
            "offset": list(self.offset),
            "region": (
                None if isinstance(self.region, NodeRegion) else self.region.to_json()
            ),
        }


class RemoveNode(Construction):
    """A tiling with finitely many named copies carved out."""

    __slots__ = ("child", "removed")

    kind = "remove"

    def __init__(self, sig, child, removed):
        self.sig = sig
        self.child = child
        self.removed = frozenset(removed)
        pts = set()
        for pl in self.removed:
            pts.update(cover(pl, sig))
        self.region = DiffSet(sig, child.region, ExplicitSet(sig, pts))

    def _locate(self, p):
        pl = self.child._locate(p)
        if pl in self.removed:
            raise PointInHole(repr(p))
        return pl

    def iter_placements(self, window=None):
        for pl in self.child.iter_placements(window):
            if pl not in self.removed:
                yield pl

    def to_json(self, enc=_enc_inline):
        return {
            "kind": "remove",
            "child": enc(self.child),
            "removed": [placement_to_json(pl) for pl in sorted(self.removed)],
        }


class ComposeNode(Construction):
    """Substitute ``inner`` into the host copies of ``outer``.

    ``outer`` tiles kept-blocks x H^d where H is the shape of its last d
    blocks (the hosts); ``inner`` tiles its whole space, and its last v
    blocks carry the host shape as their tile.  The composed space is
    kept-blocks x (inner space)^d.  Locating descends group d..1: the
    first group whose point sits in a non-carrier copy wins; if every
    group resolves to a carrier copy the outer tiling is consulted at the
    pulled-back point.
    """

    __slots__ = ("outer", "inner", "d", "v", "_n_keep_out", "_n_keep_in", "_group_axes")

    kind = "compose"

    def __init__(self, sig, outer, inner, d, v):
        self.sig = sig
        self.outer = outer
        self.inner = inner
        self.d = d
        self.v = v
        if d < 1 or v < 1:
            raise SpaceError("compose needs d >= 1 host groups and v >= 1 carriers")
        self._n_keep_out = outer.sig.n_blocks - d
        self._n_keep_in = inner.sig.n_blocks - v
        if self._n_keep_out < 0 or self._n_keep_in < 0:
            raise SpaceError("compose block counts out of range")
        host = outer.sig.blocks[self._n_keep_out]
        host_mods = outer.sig.axes[host.lo : host.hi]
        if not isinstance(outer.region, ProductSet):
            raise SpaceError("compose outer region must be a block product")
        host_set = outer.region.per_block[self._n_keep_out]
        for t in range(self._n_keep_out, outer.sig.n_blocks):
            b = outer.sig.blocks[t]
            if b.width != host.width or outer.sig.axes[b.lo : b.hi] != host_mods:
                raise SpaceError("outer host blocks are not uniform")
            if b.tile != host.tile:
                raise SpaceError("outer host blocks carry different tiles")
            if outer.region.per_block[t] != host_set:
                raise SpaceError("outer host blocks have different sub-boxes")
        host_pts = (
            outer.sig.block_points(self._n_keep_out) if host_set is None else host_set
        )
        host_tile = make_tile(host_pts)
        if set(host_tile.points) != set(host_pts):
            # residues double as tile points below, so the sub-box must
            # already touch zero on every axis
            raise SpaceError("outer host sub-box is not min-normalized")
        for t in range(self._n_keep_in, inner.sig.n_blocks):
            b = inner.sig.blocks[t]
            if b.width != host.width or inner.sig.axes[b.lo : b.hi] != host_mods:
                raise SpaceError("inner carrier block %d shape mismatch" % t)
            if b.tile != host_tile:
                raise SpaceError("inner carrier block %d tile mismatch" % t)
        if not _region_is_full(inner.region, inner.sig):
            raise SpaceError("inner must tile its whole space")
        # composed signature: kept outer blocks then d copies of inner
        kept_axes = outer.sig.axes[: host.lo]
        axes = list(kept_axes)
        blocks = [Block(b.lo, b.hi, b.tile) for b in outer.sig.blocks[: self._n_keep_out]]
        group_axes = []
        for g in range(d):
            base = len(axes)
            group_axes.append(base)
            axes.extend(inner.sig.axes)
            for t, b in enumerate(inner.sig.blocks):
                tile = b.tile if t < self._n_keep_in else host.tile
                blocks.append(Block(base + b.lo, base + b.hi, tile))
        want = SpaceSignature(tuple(axes), tuple(blocks))
        if want != sig:
            raise SpaceError("compose signature mismatch")
        self._group_axes = tuple(group_axes)
        per_block = list(outer.region.per_block[: self._n_keep_out])
        per_block.extend([None] * (d * inner.sig.n_blocks))
        self.region = ProductSet(sig, per_block)

    def _group_point(self, p, g):
        base = self._group_axes[g]
        return p[base : base + self.inner.sig.n_axes]

    def _out_block(self, g, inner_block):
        return self._n_keep_out + g * self.inner.sig.n_blocks + inner_block

    def _locate(self, p):
        inner = self.inner
        outer = self.outer
        n_keep_in = self._n_keep_in
        carriers = []
        for g in range(self.d - 1, -1, -1):
            pg = self._group_point(p, g)
            pl = inner._locate(pg)
            if pl.block < n_keep_in:
                base = self._group_axes[g]
                off = p[:base] + pl.offset + p[base + inner.sig.n_axes :]
                return Placement(self._out_block(g, pl.block), off)
            carriers.append((g, pl))
        host0 = outer.sig.blocks[self._n_keep_out]
        kept_cut = host0.lo
        w = [None] * self.d
        for g, pl in carriers:
            b = inner.sig.blocks[pl.block]
            mods = inner.sig.axes[b.lo : b.hi]
            pg = self._group_point(p, g)
            w[g] = tuple(
                (c - o) if m is None else (c - o) % m
                for c, o, m in zip(pg[b.lo : b.hi], pl.offset[b.lo : b.hi], mods)
            )
        omega = p[:kept_cut] + tuple(c for wg in w for c in wg)
        pl_out = outer._locate(omega)
        carrier_of = {g: pl for g, pl in carriers}
        if pl_out.block < self._n_keep_out:
            bo = outer.sig.blocks[pl_out.block]
            off = list(p)
            off[bo.lo : bo.hi] = pl_out.offset[bo.lo : bo.hi]
            return Placement(pl_out.block, tuple(off))
        g0 = pl_out.block - self._n_keep_out
        pl_in = carrier_of[g0]
        b_in = self.inner.sig.blocks[pl_in.block]
        mods = self.inner.sig.axes[b_in.lo : b_in.hi]
        bo = outer.sig.blocks[pl_out.block]
        shifted = tuple(
            (a + o) if m is None else (a + o) % m
            for a, o, m in zip(
                pl_out.offset[bo.lo : bo.hi], pl_in.offset[b_in.lo : b_in.hi], mods
            )
        )
        base = self._group_axes[g0]
        off = list(p)
        off[base + b_in.lo : base + b_in.hi] = shifted
        return Placement(self._out_block(g0, pl_in.block), tuple(off))

    def iter_placements(self, window=None):
        """Full enumeration; intended for small finite spaces.

        Under a window the structural product blows up, so the sweep
        locates every domain point instead and reports each owner once.
        """
        if window is not None:
            ranges = []
            for a, m in enumerate(self.sig.axes):
                if m is not None:
                    ranges.append(range(m))
                elif a in window:
                    ranges.append(window[a])
                else:
                    raise InfiniteSetError("free axis %d needs a window" % a)
            seen = set()
            for q in _iproduct(*ranges):
                try:
                    pl = self._locate(q)
                except LocateError:
                    continue
                if pl not in seen:
                    seen.add(pl)
                    yield pl
            return
        inner, outer = self.inner, self.outer
        in_pls = list(inner.iter_placements())
        keep_pls = [pl for pl in in_pls if pl.block < self._n_keep_in]
        host_pls = [pl for pl in in_pls if pl.block >= self._n_keep_in]
        carrier_pts = set()
        for pl in host_pls:
            carrier_pts.update(cover(pl, inner.sig))
        space_pts = list(full_set(inner.sig).iter_points())
        carrier_list = sorted(carrier_pts)
        if self._n_keep_out:
            kept_blocks = []
            for t in range(self._n_keep_out):
                ent = self.region.per_block[t]
                if ent is None:
                    ent = self.sig.block_points(t)
                kept_blocks.append(sorted(ent))
            kept_pts = [
                tuple(c for v in combo for c in v) for combo in _iproduct(*kept_blocks)
            ]
        else:
            kept_pts = [()]
        for g in range(self.d - 1, -1, -1):
            lowers = [space_pts] * g
            uppers = [carrier_list] * (self.d - 1 - g)
            for pl in keep_pls:
                for kp in kept_pts:
                    for combo in _iproduct(*lowers, *uppers):
                        low = combo[:g]
                        up = combo[g:]
                        parts = list(low) + [pl.offset] + list(up)
                        off = kp + tuple(c for part in parts for c in part)
                        yield Placement(self._out_block(g, pl.block), off)
        for choice in _iproduct(*([host_pls] * self.d)):
            for pl_out in outer.iter_placements():
                if pl_out.block < self._n_keep_out:
                    yield Placement(pl_out.block, self._assemble(pl_out, choice))
                else:
                    yield self._assemble_host(pl_out, choice)

    def _assemble(self, pl_out, choice):
        """Offset for an outer kept-block placement under carrier choice."""
        kept_cut = self.sig.blocks[self._n_keep_out].lo if self._n_keep_out else 0
        out = list(pl_out.offset[:kept_cut])
        for g, pl_in in enumerate(choice):
            b_in = self.inner.sig.blocks[pl_in.block]
            mods = self.inner.sig.axes[b_in.lo : b_in.hi]
            bg = self.outer.sig.blocks[self._n_keep_out + g]
            wg = pl_out.offset[bg.lo : bg.hi]
            piece = list(pl_in.offset)
            piece[b_in.lo : b_in.hi] = [
                (a + o) if m is None else (a + o) % m
                for a, o, m in zip(wg, pl_in.offset[b_in.lo : b_in.hi], mods)
            ]
            out.extend(piece)
        return tuple(out)

    def _assemble_host(self, pl_out, choice):
        g0 = pl_out.block - self._n_keep_out
        off = self._assemble(pl_out, choice)
        return Placement(self._out_block(g0, choice[g0].block), off)

    def to_json(self, enc=_enc_inline):
        # Child regions ship along: the constructor type-checks them, and a
        # structurally rebuilt child may default to a different representation.
        return {
            "kind": "compose",
            "d": self.d,
            "v": self.v,
            "outer": {
                "sig": sig_to_json(self.outer.sig),
                "node": enc(self.outer),
                "region": self.outer.region.to_json(),
            },
            "inner": {
                "sig": sig_to_json(self.inner.sig),
                "node": enc(self.inner),
                "region": self.inner.region.to_json(),
            },
        }


class LiftNode(Construction):
    """Pull a tiling of a cyclic space back along per-axis reduction.

    ``moduli[a]`` is the period of formerly cyclic axis ``a`` (None
    leaves the axis untouched).  Lifted blocks carry integer tiles whose
    reductions are the child tiles; every fiber splits uniquely into
    translates of them because the reduction is injective on the tile.
    """

    __slots__ = ("child", "moduli", "_res_maps")

    kind = "lift"

    def __init__(self, sig, child, moduli, tiles=None):
        self.sig = sig
        self.child = child
        self.moduli = tuple(moduli)
        if len(self.moduli) != sig.n_axes:
            raise SpaceError("lift moduli arity mismatch")
        res_maps = {}
        for j, b in enumerate(sig.blocks):
            lifted = [self.moduli[a] is not None for a in range(b.lo, b.hi)]
            if not any(lifted):
                continue
            if not all(lifted):
                raise SpaceError("block %d is only partly lifted" % j)
            mods = tuple(self.moduli[a] for a in range(b.lo, b.hi))
            ctile = child.sig.blocks[j].tile
            tile = b.tile
            proj, injective = project_tile(tile, mods)
            if not injective:
                raise SpaceError("reduction not injective on the tile of block %d" % j)
            if proj != ctile:
                raise SpaceError("lifted tile of block %d does not reduce to the child tile" % j)
            res_maps[j] = {
                tuple(c % m for c, m in zip(y, mods)): y for y in tile.points
            }
        self._res_maps = res_maps
        if tiles is not None:
            for j, t in tiles.items():
                if sig.blocks[j].tile != t:
                    raise SpaceError("lift tile override mismatch on block %d" % j)
        self.region = NodeRegion(sig, self)

    def _reduce(self, p):
        return tuple(
            c if m is None else c % m for c, m in zip(p, self.moduli)
        )

    def _locate(self, p):
        q = self._reduce(p)
        pl = self.child._locate(q)
        b = self.sig.blocks[pl.block]
        off = list(p)
        rm = self._res_maps.get(pl.block)
        if rm is None:
            # tile block untouched by the lift: its offsets carry over
            off[b.lo : b.hi] = pl.offset[b.lo : b.hi]
        else:
            mods = tuple(self.moduli[a] for a in range(b.lo, b.hi))
            r = tuple(
                (c - o) % m for c, o, m in zip(p[b.lo : b.hi], pl.offset[b.lo : b.hi], mods)
            )
            y = rm[r]
            off[b.lo : b.hi] = [c - t for c, t in zip(p[b.lo : b.hi], y)]
        return Placement(pl.block, tuple(off))

    def _region_contains(self, p):
        return self.child.region.contains(self._reduce(p))

    def _region_size(self):
        raise InfiniteSetError("lifted regions are infinite")

    def _region_iter(self):
        raise InfiniteSetError("lifted regions are infinite")

    def iter_placements(self, window=None):
        lifted_axes = [a for a, m in enumerate(self.moduli) if m is not None]
        if window is None or any(a not in window for a in lifted_axes):
            raise InfiniteSetError("lift enumeration needs a window on lifted axes")
        child_window = None
        if window is not None:
            child_window = {
                a: rng for a, rng in window.items() if self.moduli[a] is None
            } or None
        for pl in self.child.iter_placements(child_window):
            choices = []
            for a in lifted_axes:
                m = self.moduli[a]
                rng = window[a]
                base = pl.offset[a] % m
                start = rng.start + ((base - rng.start) % m)
                choices.append(list(range(start, rng.stop, m)))
            for combo in _iproduct(*choices):
                off = list(pl.offset)
                for a, vv in zip(lifted_axes, combo):
                    off[a] = vv
                yield Placement(pl.block, tuple(off))

    def to_json(self, enc=_enc_inline):
        return {
            "kind": "lift",
            "child": enc(self.child),
            "moduli": [m for m in self.moduli],
        }


def _region_is_full(region, sig):
    return isinstance(region, ProductSet) and all(m is None for m in region.per_block)


def lift(c: Construction, moduli, tiles=None) -> Construction:
    """Lift ``c`` along per-axis reduction.  ``moduli[a]`` = None keeps axis
    ``a``; an integer m turns cyclic axis a (modulus m) into a free axis.
    ``tiles`` optionally names the integer tile per lifted block; the
    default takes the child tile's points verbatim.  Identity lifts return
    the construction unchanged."""
    moduli = tuple(moduli)
    if all(m is None for m in moduli):
        return c
    sig = c.sig
    for a, m in enumerate(moduli):
        if m is not None and sig.axes[a] != m:
            raise SpaceError("axis %d has modulus %r, not %r" % (a, sig.axes[a], m))
    axes = tuple(None if m is not None else sig.axes[a] for a, m in enumerate(moduli))
    blocks = []
    for j, b in enumerate(sig.blocks):
        lifted = [moduli[a] is not None for a in range(b.lo, b.hi)]
        if any(lifted):
            if tiles is not None and j in tiles:
                tile = tiles[j]
            else:
                tile = TileSpec(b.tile.dim, b.tile.points)
            blocks.append(Block(b.lo, b.hi, tile))
        else:
            blocks.append(b)
    new_sig = SpaceSignature(axes, tuple(blocks))
    return LiftNode(new_sig, c, moduli, tiles)


def compose(outer: Construction, inner: Construction, d: int, v: int) -> Construction:
    """Substitute ``inner`` into the d host-block groups of ``outer``
    (see ComposeNode).  d = 0 means no substitution groups: inner is
    returned unchanged."""
    if d == 0:
        return inner
    n_keep_out = outer.sig.n_blocks - d
    host = outer.sig.blocks[n_keep_out]
    axes = list(outer.sig.axes[: host.lo])
    blocks = [Block(b.lo, b.hi, b.tile) for b in outer.sig.blocks[:n_keep_out]]
    n_keep_in = inner.sig.n_blocks - v
    for g in range(d):
        base = len(axes)
        axes.extend(inner.sig.axes)
        for t, b in enumerate(inner.sig.blocks):
            tile = b.tile if t < n_keep_in else host.tile
            blocks.append(Block(base + b.lo, base + b.hi, tile))
    sig = SpaceSignature(tuple(axes), tuple(blocks))
    return ComposeNode(sig, outer, inner, d, v)


def permute_blocks(c: Construction, perm, offset=None) -> Construction:
    """Wrap ``c`` so child block j lands at parent position perm[j]."""
    n = c.sig.n_blocks
    if sorted(perm) != list(range(n)):
        raise SpaceError("not a block permutation")
    order = sorted(range(n), key=lambda j: perm[j])  # parent position -> child block
    axes = []
    blocks = []
    for j in order:
        b = c.sig.blocks[j]
        lo = len(axes)
        axes.extend(c.sig.axes[b.lo : b.hi])
        blocks.append(Block(lo, lo + b.width, b.tile))
    sig = SpaceSignature(tuple(axes), tuple(blocks))
    off = tuple(offset) if offset is not None else (0,) * sig.n_axes
    return EmbedNode(sig, c, tuple(perm), off)


def translate(c: Construction, offset) -> Construction:
    return EmbedNode(c.sig, c, tuple(range(c.sig.n_blocks)), tuple(offset))


def materialize(c: Construction, limit=None, window=None):
    """Complete placement list by structural tree walk, sorted by
    (block, offset).  Guarded by the materialization limit (point count of
    the region or window)."""
    if limit is None:
        limit = materialization_limit()
    if window is None:
        n = c.region.size()
    else:
        n = 1
        for a, m in enumerate(c.sig.axes):
            if m is not None:
                n *= m
            else:
                if a not in window:
                    raise InfiniteSetError("free axis %d needs a window" % a)
                n *= len(window[a])
    if n > limit:
        raise InfiniteSetError(
            "region has %d points, over the materialization limit %d" % (n, limit)
        )
    return sorted(c.iter_placements(window))


def to_json_dag(c: Construction):
    """Serialize with structural sharing: a flat node table plus ref stubs.

    Synthesized trees reuse one sub-construction from many parents (the
    same slice child for every residue with the same column, say); inline
    serialization would copy it per parent.  Each distinct node object is
    written once and parents point at its table index."""
    nodes = []
    ids = {}

    def enc(node):
        idx = ids.get(id(node))
        if idx is None:
            idx = len(nodes)
            ids[id(node)] = idx
            nodes.append(None)
            nodes[idx] = node.to_json(enc)
        return {"kind": "ref", "id": idx}

    root = enc(c)["id"]
    return {"kind": "dag", "nodes": nodes, "root": root}


def _node_from_json(sig, data, deref=None) -> Construction:
    kind = data["kind"]
    if kind == "ref":
        if deref is None:
            raise SpaceError("ref node outside a dag envelope")
        return deref(sig, data["id"])
    if kind == "explicit":
        region = data.get("region")
        if region is not None:
            region = pointset_from_json(sig, region)
        return ExplicitNode(
            sig, [placement_from_json(d) for d in data["placements"]], region
        )
    if kind == "fiber":
        rest = drop_block_sig(sig, data["tile_block"])
        entries = [
            (tuple(e["offset"]), pointset_from_json(rest, e["index"]))
            for e in data["entries"]
        ]
        return FiberNode(sig, data["tile_block"], entries, data.get("period"))
    if kind == "slice":
        child_sig = drop_block_sig(sig, data["block"])
        children = {}
        for key, nd in data["cases"].items():
            kt = tuple(int(x) for x in key.split(",")) if key else ()
            children[kt] = _node_from_json(child_sig, nd, deref)
        default = None
        if data.get("default") is not None:
            default = _node_from_json(child_sig, data["default"], deref)
        values = data.get("values")
        if values is not None:
            values = [tuple(v) for v in values]
        return SliceStackNode(
            sig, data["block"], children, default, data.get("period"), values
        )
    if kind == "union":
        region = data.get("region")
        if region is not None:
            region = pointset_from_json(sig, region)
        return UnionNode(
            sig, [_node_from_json(sig, d, deref) for d in data["children"]], region
        )
    if kind == "extend":
        masks = [
            None if m is None else frozenset(tuple(v) for v in m)
            for m in data["masks"]
        ]
        n_old = sig.n_blocks - len(masks)
        cut = sig.blocks[n_old].lo
        child_sig = SpaceSignature(sig.axes[:cut], sig.blocks[:n_old])
        return ExtendNode(sig, _node_from_json(child_sig, data["child"], deref), masks)
    if kind == "embed":
        # child signature: invert the permutation against the parent layout
        perm = tuple(data["block_perm"])
        child_axes = []
        child_blocks = []
        pos = 0
        inv = [None] * len(perm)
        for j, pj in enumerate(perm):
            inv[pj] = j
        widths = [None] * len(perm)
        tiles = [None] * len(perm)
        for pj, b in enumerate(sig.blocks):
            j = inv[pj]
            widths[j] = b.width
            tiles[j] = (sig.axes[b.lo : b.hi], b.tile)
        for j in range(len(perm)):
            mods, tile = tiles[j]
            lo = pos
            child_axes.extend(mods)
            child_blocks.append(Block(lo, lo + widths[j], tile))
            pos += widths[j]
        child_sig = SpaceSignature(tuple(child_axes), tuple(child_blocks))
        node = EmbedNode(
            sig,
            _node_from_json(child_sig, data["child"], deref),
            perm,
            tuple(data["offset"]),
        )
        region = data.get("region")
        if region is not None:
            node.region = pointset_from_json(sig, region)
        return node
    if kind == "remove":
        removed = [placement_from_json(d) for d in data["removed"]]
        return RemoveNode(sig, _node_from_json(sig, data["child"], deref), removed)
    if kind == "compose":
        outer_sig = sig_from_json(data["outer"]["sig"])
        inner_sig = sig_from_json(data["inner"]["sig"])
        outer = _node_from_json(outer_sig, data["outer"]["node"], deref)
        inner = _node_from_json(inner_sig, data["inner"]["node"], deref)
        if "region" in data["outer"]:
            outer.region = pointset_from_json(outer_sig, data["outer"]["region"])
        if "region" in data["inner"]:
            inner.region = pointset_from_json(inner_sig, data["inner"]["region"])
        return ComposeNode(sig, outer, inner, data["d"], data["v"])
    if kind == "lift":
        moduli = tuple(data["moduli"])
        child_axes = tuple(
            m if m is not None else sig.axes[a] for a, m in enumerate(moduli)
        )
        child_blocks = []
        for j, b in enumerate(sig.blocks):
            if any(moduli[a] is not None for a in range(b.lo, b.hi)):
                mods = tuple(moduli[a] for a in range(b.lo, b.hi))
                proj, _ = project_tile(b.tile, mods)
                child_blocks.append(Block(b.lo, b.hi, proj))
            else:
                child_blocks.append(b)
        child_sig = SpaceSignature(child_axes, tuple(child_blocks))
        return LiftNode(sig, _node_from_json(child_sig, data["child"], deref), moduli)
    raise SpaceError("unknown node kind %r" % kind)


def construction_from_json(sig: SpaceSignature, data) -> Construction:
    if not isinstance(data, dict) or data.get("kind") != "dag":
        return _node_from_json(sig, data)
    table = data["nodes"]
    cache = {}

    def deref(child_sig, idx):
        hit = cache.get(idx)
        if hit is not None:
            if hit.sig != child_sig:
                raise SpaceError("shared node %d decoded under two signatures" % idx)
            return hit
        node = _node_from_json(child_sig, table[idx], deref)
        cache[idx] = node
        return node

    return deref(sig, data["root"])
