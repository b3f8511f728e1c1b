"""Tiles, product spaces, points and placements.

Everything in the engine moves finite point sets (tiles) around product
spaces whose axes are either infinite (Z) or cyclic (Z_k).  A space
signature partitions the axes into contiguous blocks; each block is
tagged with the tile whose axis-embedded translates may occupy it.  A
placement is one such translate: a block index plus a full-length offset
vector.

All types here are immutable and hashable so constructions can share
them freely across threads; nothing mutates after validation.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

Point = tuple  # tuple of ints


class TileError(ValueError):
    """Raised for malformed tile input."""


class SpaceError(ValueError):
    """Raised for malformed space signatures or mismatched points."""


@dataclass(frozen=True)
class TileSpec:
    """A finite nonempty subset of Z^dim, normalized so every axis min is 0.

    ``points`` is kept sorted, which makes the representation canonical:
    equal tiles compare and hash equal.
    """

    dim: int
    points: tuple

    def __post_init__(self):
        if self.dim < 1:
            raise TileError("tile dimension must be >= 1")
        if not self.points:
            raise TileError("tile must be nonempty")
        for p in self.points:
            if len(p) != self.dim:
                raise TileError("ragged tile point %r" % (p,))
        if len(set(self.points)) != len(self.points):
            raise TileError("duplicate tile points")
        for a in range(self.dim):
            if min(p[a] for p in self.points) != 0:
                raise TileError("tile not normalized: axis %d min is not 0" % a)
        if tuple(sorted(self.points)) != self.points:
            raise TileError("tile points not sorted")

    @property
    def size(self) -> int:
        return len(self.points)

    @property
    def extents(self) -> tuple:
        """Per-axis maximum coordinate."""
        return tuple(max(p[a] for p in self.points) for a in range(self.dim))

    @property
    def k(self) -> int:
        """Smallest k with the tile inside the box [0, k)^dim."""
        return max(self.extents) + 1

    def translate_set(self, offset: Sequence[int]) -> frozenset:
        return frozenset(tuple(c + o for c, o in zip(p, offset)) for p in self.points)


def make_tile(points: Iterable[Sequence[int]]) -> TileSpec:
    """Normalize an iterable of integer vectors into a TileSpec."""
    pts = [tuple(int(c) for c in p) for p in points]
    if not pts:
        raise TileError("tile must be nonempty")
    dim = len(pts[0])
    if dim < 1:
        raise TileError("tile points must have at least one coordinate")
    if any(len(p) != dim for p in pts):
        raise TileError("tile points have mixed dimensions")
    if len(set(pts)) != len(pts):
        raise TileError("duplicate tile points")
    mins = [min(p[a] for p in pts) for a in range(dim)]
    shifted = sorted(tuple(c - m for c, m in zip(p, mins)) for p in pts)
    return TileSpec(dim, tuple(shifted))


def parse_tile(text) -> TileSpec:
    """Parse a tile from the X/. string form (1-D) or a JSON-style list of
    equal-length integer vectors (any dimension).

    String form: 'X' marks a cell, '.' a gap; leading and trailing gaps are
    stripped by normalization.  'X.XX' -> {0, 2, 3}.
    """
    if isinstance(text, TileSpec):
        return text
    if isinstance(text, str):
        s = text.strip()
        if s.startswith("[") or s.startswith("{"):
            try:
                data = json.loads(s)
            except json.JSONDecodeError as e:
                raise TileError("bad tile JSON: %s" % e) from None
            return parse_tile(data)
        bad = set(s) - {"X", "."}
        if bad:
            raise TileError("illegal tile characters: %r" % sorted(bad))
        pts = [(j,) for j, ch in enumerate(s) if ch == "X"]
        if not pts:
            raise TileError("empty tile")
        return make_tile(pts)
    if isinstance(text, (list, tuple)):
        if not text:
            raise TileError("empty tile")
        rows = []
        for p in text:
            if not isinstance(p, (list, tuple)):
                raise TileError("tile must be a list of integer vectors")
            rows.append(p)
        return make_tile(rows)
    raise TileError("unsupported tile input %r" % type(text).__name__)


def render_tile(tile: TileSpec):
    """Inverse of parse_tile: X/. string for 1-D tiles, vector list otherwise."""
    if tile.dim == 1:
        top = tile.extents[0]
        cells = {p[0] for p in tile.points}
        return "".join("X" if j in cells else "." for j in range(top + 1))
    return [list(p) for p in tile.points]


def project_tile(tile: TileSpec, moduli: Sequence[int]):
    """Reduce a tile modulo per-axis moduli.

    Returns (projected tile, injective flag).  The projection is injective
    exactly when no two tile points collide after reduction; only then can a
    reduced tiling be lifted back.
    """
    mods = tuple(int(m) for m in moduli)
    if len(mods) != tile.dim:
        raise SpaceError("moduli arity %d != tile dim %d" % (len(mods), tile.dim))
    if any(m < 2 for m in mods):
        raise SpaceError("moduli must be >= 2")
    reduced = {tuple(c % m for c, m in zip(p, mods)) for p in tile.points}
    injective = len(reduced) == tile.size
    return make_tile(reduced), injective


@dataclass(frozen=True)
class Block:
    """A contiguous run of axes [lo, hi) carrying translates of one tile."""

    lo: int
    hi: int
    tile: TileSpec

    @property
    def width(self) -> int:
        return self.hi - self.lo


@dataclass(frozen=True)
class SpaceSignature:
    """Axis moduli (None for a free Z axis) plus the block partition."""

    axes: tuple  # tuple of (None | int >= 2)
    blocks: tuple  # tuple of Block

    def __post_init__(self):
        for m in self.axes:
            if m is not None and (not isinstance(m, int) or m < 2):
                raise SpaceError("cyclic modulus must be an int >= 2, got %r" % (m,))
        pos = 0
        for b in self.blocks:
            if b.lo != pos or b.hi <= b.lo:
                raise SpaceError("blocks must cover the axes contiguously")
            if b.tile.dim != b.width:
                raise SpaceError(
                    "block [%d,%d) carries a %d-dim tile" % (b.lo, b.hi, b.tile.dim)
                )
            pos = b.hi
        if pos != len(self.axes):
            raise SpaceError("blocks cover %d of %d axes" % (pos, len(self.axes)))

    @property
    def n_axes(self) -> int:
        return len(self.axes)

    @property
    def n_blocks(self) -> int:
        return len(self.blocks)

    def free_axes(self) -> tuple:
        return tuple(a for a, m in enumerate(self.axes) if m is None)

    def is_finite(self) -> bool:
        return all(m is not None for m in self.axes)

    def block_moduli(self, j: int) -> tuple:
        b = self.blocks[j]
        return self.axes[b.lo : b.hi]

    def block_coords(self, j: int, p: Point) -> tuple:
        b = self.blocks[j]
        return p[b.lo : b.hi]

    def reduce(self, p: Sequence[int]) -> Point:
        """Wrap cyclic coordinates into [0, modulus)."""
        return tuple(
            c if m is None else c % m for c, m in zip(p, self.axes)
        )

    def contains(self, p: Sequence[int]) -> bool:
        if len(p) != self.n_axes:
            return False
        return all(
            m is None or 0 <= c < m for c, m in zip(p, self.axes)
        )

    def block_points(self, j: int):
        """All points of block j's group, lexicographic. Requires a finite block."""
        mods = self.block_moduli(j)
        if any(m is None for m in mods):
            raise SpaceError("block %d has free axes; cannot enumerate" % j)
        return _box_points(mods)

    def size(self) -> int:
        n = 1
        for m in self.axes:
            if m is None:
                raise SpaceError("space has free axes; size is infinite")
            n *= m
        return n


def _box_points(mods):
    pts = [()]
    for m in mods:
        pts = [p + (v,) for p in pts for v in range(m)]
    return [tuple(p) for p in pts]


class Placement(NamedTuple):
    """One axis-embedded tile copy: block index + full-length offset."""

    block: int
    offset: tuple


def cover(placement: Placement, sig: SpaceSignature) -> tuple:
    """The points occupied by a placement, cyclic axes wrapped.

    Returns the distinct points sorted.  A copy that self-overlaps after
    wrapping yields fewer points than the tile has; verifiers treat that as
    an invalid placement.
    """
    b = sig.blocks[placement.block]
    off = placement.offset
    if len(off) != sig.n_axes:
        raise SpaceError("offset arity %d != axis count %d" % (len(off), sig.n_axes))
    pts = set()
    for t in b.tile.points:
        q = list(off)
        for a, c in zip(range(b.lo, b.hi), t):
            q[a] = off[a] + c
        pts.add(sig.reduce(q))
    return tuple(sorted(pts))


def placement_from_json(data) -> Placement:
    return Placement(int(data["block"]), tuple(int(c) for c in data["offset"]))


def placement_to_json(pl: Placement):
    return {"block": pl.block, "offset": list(pl.offset)}


def tile_to_json(tile: TileSpec):
    if tile.dim == 1:
        return render_tile(tile)
    return [list(p) for p in tile.points]


def tile_from_json(data) -> TileSpec:
    return parse_tile(data)


def sig_to_json(sig: SpaceSignature):
    return {
        "axes": [{"mod": m} for m in sig.axes],
        "blocks": [
            {"from": b.lo, "to": b.hi, "tile": tile_to_json(b.tile)} for b in sig.blocks
        ],
    }


def sig_from_json(data) -> SpaceSignature:
    axes = tuple(a["mod"] for a in data["axes"])
    blocks = tuple(
        Block(int(b["from"]), int(b["to"]), tile_from_json(b["tile"]))
        for b in data["blocks"]
    )
    return SpaceSignature(axes, blocks)


def uniform_signature(n_axes: int, modulus, tile: TileSpec) -> SpaceSignature:
    """n single-axis blocks, all cyclic mod ``modulus`` (or free if None),
    all carrying the same 1-D tile."""
    if tile.dim != 1:
        raise SpaceError("uniform_signature wants a 1-D tile")
    axes = tuple([modulus] * n_axes)
    blocks = tuple(Block(a, a + 1, tile) for a in range(n_axes))
    return SpaceSignature(axes, blocks)
