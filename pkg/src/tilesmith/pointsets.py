"""Structured point sets over a space signature.

Regions and holes in the construction trees are often far too large to
materialize (products like C^d have exponentially many points), so they
are represented structurally: products of per-block subsets, disjoint
unions, differences, and small explicit sets.  Membership tests stay
cheap; sizes and enumeration are exact where finite.

Points fed to ``contains`` are assumed already reduced (cyclic
coordinates in range); the verifiers take care of that.
"""
from __future__ import annotations

from typing import Optional, Sequence

from .space import SpaceSignature, SpaceError


class InfiniteSetError(ValueError):
    pass


class PointSet:
    """Base class. Subclasses are immutable."""

    __slots__ = ("sig",)

    def __init__(self, sig: SpaceSignature):
        self.sig = sig

    def contains(self, p) -> bool:
        raise NotImplementedError

    def size(self) -> int:
        raise NotImplementedError

    def iter_points(self):
        raise NotImplementedError

    def extended(self, new_sig: SpaceSignature, masks: Sequence[Optional[frozenset]]):
        """The same set crossed with fixed per-block value sets appended at
        the end of the signature.  masks[i] is a frozenset of block-point
        tuples for appended block i (None means the full block)."""
        raise NotImplementedError

    def to_json(self):
        raise NotImplementedError


def _block_values(sig, j, mask):
    if mask is not None:
        return sorted(mask)
    return sig.block_points(j)


class ProductSet(PointSet):
    """Product of per-block subsets; None entries mean the whole block."""

    __slots__ = ("per_block",)

    def __init__(self, sig, per_block):
        super().__init__(sig)
        pb = tuple(None if m is None else frozenset(m) for m in per_block)
        if len(pb) != sig.n_blocks:
            raise SpaceError("per_block arity %d != %d blocks" % (len(pb), sig.n_blocks))
        self.per_block = pb

    def contains(self, p):
        sig = self.sig
        for j, mask in enumerate(self.per_block):
            if mask is not None and sig.block_coords(j, p) not in mask:
                return False
        return True

    def size(self):
        n = 1
        for j, mask in enumerate(self.per_block):
            if mask is None:
                mods = self.sig.block_moduli(j)
                if any(m is None for m in mods):
                    raise InfiniteSetError("free block %d unrestricted" % j)
                for m in mods:
                    n *= m
            else:
                n *= len(mask)
        return n

    def iter_points(self):
        sig = self.sig
        values = [_block_values(sig, j, m) for j, m in enumerate(self.per_block)]
        out = [()]
        for vals in values:
            out = [p + v for p in out for v in vals]
        return iter(out)

    def extended(self, new_sig, masks):
        return ProductSet(new_sig, self.per_block + tuple(masks))

    def to_json(self):
        return {
            "kind": "product",
            "blocks": [
                None if m is None else sorted([list(v) for v in m])
                for m in self.per_block
            ],
        }


class ExplicitSet(PointSet):
    __slots__ = ("points",)

    def __init__(self, sig, points):
        super().__init__(sig)
        self.points = frozenset(tuple(p) for p in points)

    def contains(self, p):
        return tuple(p) in self.points

    def size(self):
        return len(self.points)

    def iter_points(self):
        return iter(sorted(self.points))

    def extended(self, new_sig, masks):
        vals = [()]
        for j, m in enumerate(masks):
            j_abs = self.sig.n_blocks + j
            vs = _block_values(new_sig, j_abs, m)
            vals = [p + v for p in vals for v in vs]
        return ExplicitSet(new_sig, {p + tail for p in self.points for tail in vals})

    def to_json(self):
        return {"kind": "points", "points": sorted([list(p) for p in self.points])}


class UnionSet(PointSet):
    """Union of pairwise disjoint parts (disjointness is the builder's
    responsibility; verifiers would surface a violation as double cover)."""

    __slots__ = ("parts",)

    def __init__(self, sig, parts):
        super().__init__(sig)
        self.parts = tuple(parts)

    def contains(self, p):
        return any(part.contains(p) for part in self.parts)

    def size(self):
        return sum(part.size() for part in self.parts)

    def iter_points(self):
        for part in self.parts:
            yield from part.iter_points()

    def extended(self, new_sig, masks):
        return UnionSet(new_sig, tuple(p.extended(new_sig, masks) for p in self.parts))

    def to_json(self):
        return {"kind": "union", "parts": [p.to_json() for p in self.parts]}


class DiffSet(PointSet):
    """base minus removed; by construction removed is a subset of base."""

    __slots__ = ("base", "removed")

    def __init__(self, sig, base, removed):
        super().__init__(sig)
        self.base = base
        self.removed = removed

    def contains(self, p):
        return self.base.contains(p) and not self.removed.contains(p)

    def size(self):
        return self.base.size() - self.removed.size()

    def iter_points(self):
        for p in self.base.iter_points():
            if not self.removed.contains(p):
                yield p

    def extended(self, new_sig, masks):
        return DiffSet(
            new_sig, self.base.extended(new_sig, masks), self.removed.extended(new_sig, masks)
        )

    def to_json(self):
        return {"kind": "diff", "base": self.base.to_json(), "minus": self.removed.to_json()}


class NodeRegion(PointSet):
    """Region defined by a construction node's own cover test.

    Used where the covered set has no compact closed form (fiber families,
    slice stacks).  Never serialized; regions are recomputed from node
    structure on load.
    """

    __slots__ = ("node",)

    def __init__(self, sig, node):
        super().__init__(sig)
        self.node = node

    def contains(self, p):
        return self.node._region_contains(p)

    def size(self):
        return self.node._region_size()

    def iter_points(self):
        return self.node._region_iter()

    def extended(self, new_sig, masks):
        raise SpaceError("node-backed regions cannot be extended")

    def to_json(self):
        raise SpaceError("node-backed regions are not serialized")


def full_set(sig) -> ProductSet:
    return ProductSet(sig, (None,) * sig.n_blocks)


def empty_set(sig) -> ExplicitSet:
    return ExplicitSet(sig, ())


def difference(base: PointSet, removed: PointSet) -> DiffSet:
    return DiffSet(base.sig, base, removed)


def pointset_from_json(sig, data) -> PointSet:
    kind = data["kind"]
    if kind == "product":
        return ProductSet(
            sig,
            tuple(
                None if b is None else frozenset(tuple(v) for v in b)
                for b in data["blocks"]
            ),
        )
    if kind == "points":
        return ExplicitSet(sig, [tuple(p) for p in data["points"]])
    if kind == "union":
        return UnionSet(sig, tuple(pointset_from_json(sig, p) for p in data["parts"]))
    if kind == "diff":
        return DiffSet(
            sig,
            pointset_from_json(sig, data["base"]),
            pointset_from_json(sig, data["minus"]),
        )
    raise SpaceError("unknown point set kind %r" % kind)
