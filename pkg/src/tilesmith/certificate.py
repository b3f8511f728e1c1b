"""Serialized tiling proofs.

A certificate pins down a tiling either as a literal placement list over
one fundamental domain (explicit-periodic) or as a construction tree
(construction).  Serialization is canonical: sorted keys, compact
separators, sorted placements, so equal inputs give byte-identical
files.
"""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

from .construction import (
    Construction,
    construction_from_json,
    materialization_limit,
    materialize,
    to_json_dag,
)
from .pointsets import InfiniteSetError
from .space import (
    Block,
    Placement,
    SpaceError,
    SpaceSignature,
    TileSpec,
    placement_from_json,
    placement_to_json,
    tile_from_json,
    tile_to_json,
)
from .verify import (
    MAX_WITNESSES,
    SplitMix64,
    VerifyReport,
    check_partition,
    verify_exhaustive_construction,
    verify_sampled,
)

MODE_EXPLICIT = "explicit-periodic"
MODE_TREE = "construction"


class CertificateError(ValueError):
    pass


@dataclass(frozen=True)
class Certificate:
    sig: SpaceSignature
    period: tuple  # one entry per free axis, in axis order
    mode: str
    payload: object  # tuple of Placement, or a Construction
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        free = self.sig.free_axes()
        if len(self.period) != len(free):
            raise CertificateError(
                "period has %d entries for %d free axes" % (len(self.period), len(free))
            )
        if any(int(p) < 1 for p in self.period):
            raise CertificateError("periods must be >= 1")
        if self.mode not in (MODE_EXPLICIT, MODE_TREE):
            raise CertificateError("unknown mode %r" % self.mode)
        per = self.period_of_axis()
        for b in self.sig.blocks:
            for t in range(b.width):
                a = b.lo + t
                if a in per:
                    span = max(y[t] for y in b.tile.points) + 1
                    if span > per[a]:
                        raise CertificateError(
                            "tile on axis %d spans %d > period %d" % (a, span, per[a])
                        )
        if self.mode == MODE_EXPLICIT:
            for pl in self.payload:
                for a, c in enumerate(pl.offset):
                    m = self.sig.axes[a]
                    hi = m if m is not None else per[a]
                    if not 0 <= c < hi:
                        raise CertificateError(
                            "placement offset %r leaves the fundamental domain" % (pl,)
                        )
        else:
            if not isinstance(self.payload, Construction):
                raise CertificateError("construction payload must be a tree")
            if self.payload.sig != self.sig:
                raise CertificateError("payload signature differs from certificate space")

    def period_of_axis(self) -> dict:
        return dict(zip(self.sig.free_axes(), self.period))

    def domain_size(self) -> int:
        n = 1
        per = self.period_of_axis()
        for a, m in enumerate(self.sig.axes):
            n *= m if m is not None else per[a]
        return n

    def domain_window(self) -> dict:
        return {a: range(p) for a, p in self.period_of_axis().items()}

    def to_json(self):
        if self.mode == MODE_EXPLICIT:
            payload = [placement_to_json(pl) for pl in sorted(self.payload)]
        else:
            payload = to_json_dag(self.payload)
        return {
            "space": {
                "axes": [m for m in self.sig.axes],
                "blocks": [[b.lo, b.hi] for b in self.sig.blocks],
            },
            "tiles": [tile_to_json(b.tile) for b in self.sig.blocks],
            "period": [int(p) for p in self.period],
            "mode": self.mode,
            "payload": payload,
            "meta": self.meta,
        }


def certificate_from_json(data) -> Certificate:
    try:
        axes = tuple(data["space"]["axes"])
        spans = data["space"]["blocks"]
        tiles = [tile_from_json(t) for t in data["tiles"]]
        if len(spans) != len(tiles):
            raise CertificateError("blocks and tiles disagree in length")
        blocks = tuple(
            Block(int(lo), int(hi), tile) for (lo, hi), tile in zip(spans, tiles)
        )
        sig = SpaceSignature(axes, blocks)
        mode = data["mode"]
        if mode == MODE_EXPLICIT:
            payload = tuple(placement_from_json(d) for d in data["payload"])
        else:
            payload = construction_from_json(sig, data["payload"])
        return Certificate(
            sig=sig,
            period=tuple(int(p) for p in data["period"]),
            mode=mode,
            payload=payload,
            meta=dict(data.get("meta", {})),
        )
    except CertificateError:
        raise
    except (KeyError, TypeError, ValueError, IndexError, SpaceError) as e:
        raise CertificateError("malformed certificate: %s" % e) from e


def canonical_json(data) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"))


def write_certificate(cert: Certificate, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(canonical_json(cert.to_json()))
        fh.write("\n")


def load_certificate(path: str) -> Certificate:
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as e:
            raise CertificateError("not valid JSON: %s" % e) from e
    return certificate_from_json(data)


def build_certificate(c: Construction, period, meta, limit=None) -> Certificate:
    """Wrap a finished construction, flattening to an explicit placement
    list when one fundamental domain fits under the limit."""
    if limit is None:
        limit = materialization_limit()
    free = c.sig.free_axes()
    period = tuple(int(p) for p in period)
    per = dict(zip(free, period))
    n = 1
    for a, m in enumerate(c.sig.axes):
        n *= m if m is not None else per[a]
    if n <= limit:
        window = {a: range(p) for a, p in per.items()} or None
        placements = materialize(c, limit=limit, window=window)
        return Certificate(c.sig, period, MODE_EXPLICIT, tuple(placements), meta)
    return Certificate(c.sig, period, MODE_TREE, c, meta)


def verify_exhaustive(cert, limit=None) -> VerifyReport:
    """Exhaustive partition check of a certificate (or bare construction)
    over one fundamental domain."""
    if isinstance(cert, Construction):
        return verify_exhaustive_construction(cert, limit=limit)
    if limit is None:
        limit = materialization_limit()
    if cert.domain_size() > limit:
        raise InfiniteSetError(
            "fundamental domain has %d points, over the limit %d"
            % (cert.domain_size(), limit)
        )
    per = cert.period_of_axis()
    if cert.mode == MODE_TREE:
        window = cert.domain_window() or None
        return verify_exhaustive_construction(
            cert.payload, limit=limit, window=window, period_of_axis=per or None
        )
    t0 = time.monotonic()
    points = _domain_points(cert)
    owner, violations = check_partition(cert.sig, cert.payload, points, per or None)
    return VerifyReport(
        ok=not violations,
        method="exhaustive",
        covered_count=len(points),
        placement_count=len(cert.payload),
        violations=violations,
        elapsed=time.monotonic() - t0,
    )


def _domain_points(cert: Certificate):
    per = cert.period_of_axis()
    pts = [()]
    for a, m in enumerate(cert.sig.axes):
        hi = m if m is not None else per[a]
        pts = [p + (v,) for p in pts for v in range(hi)]
    return pts


def verify_certificate_sampled(cert, samples, seed=0) -> VerifyReport:
    """Sampled verification; free axes draw from one period."""
    if isinstance(cert, Construction):
        return verify_sampled(cert, samples, seed)
    if cert.mode == MODE_TREE:
        return verify_sampled(
            cert.payload, samples, seed, free_ranges=cert.domain_window()
        )
    # explicit payload: check the wrapped cover index directly
    t0 = time.monotonic()
    per = cert.period_of_axis()
    points = _domain_points(cert)
    owner, violations = check_partition(cert.sig, cert.payload, points, per or None)
    rng = SplitMix64(seed)
    checked = 0
    for _ in range(samples):
        p = points[rng.below(len(points))]
        checked += 1
        if p not in owner and len(violations) < MAX_WITNESSES:
            violations.append({"kind": "uncovered", "point": list(p)})
    return VerifyReport(
        ok=not violations,
        method="sampled",
        covered_count=checked,
        placement_count=len(cert.payload),
        violations=violations,
        samples=samples,
        seed=seed,
        elapsed=time.monotonic() - t0,
    )
