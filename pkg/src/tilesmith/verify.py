"""Partition verification.

Two independent routes:

* exhaustive - walk the structure (materialize), collect every cover,
  and check the covers partition the region point-for-point; then sweep
  locate over all points and demand it agrees with the partition.
* sampled - seeded pseudo-random points, two local checks per point
  (p in cover(locate(p)); locate constant on that cover).  Local
  consistency at every point of a finite region is the same property the
  exhaustive route checks globally.

Reports never raise on a bad tiling; failures come back as witness
entries.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

from .construction import (
    Construction,
    LocateError,
    materialization_limit,
    materialize,
)
from .pointsets import InfiniteSetError, ProductSet
from .space import Placement, cover

MAX_WITNESSES = 20
FREE_SPAN = 1 << 20

M64 = (1 << 64) - 1


class SplitMix64:
    """Deterministic 64-bit generator (splitmix mixing)."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & M64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & M64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & M64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & M64
        return z ^ (z >> 31)

    def below(self, n: int) -> int:
        if n <= 0:
            raise ValueError("below() needs n >= 1")
        bound = M64 + 1 - ((M64 + 1) % n)
        while True:
            r = self.next_u64()
            if r < bound:
                return r % n


@dataclass
class VerifyReport:
    ok: bool
    method: str
    covered_count: int
    placement_count: int
    violations: list = field(default_factory=list)
    samples: int = 0
    seed: int = 0
    elapsed: float = 0.0

    def to_json(self):
        return {
            "ok": self.ok,
            "method": self.method,
            "covered_count": self.covered_count,
            "placement_count": self.placement_count,
            "violations": list(self.violations),
            "samples": self.samples,
            "seed": self.seed,
        }


def _wrap_free(p, period_of_axis):
    return tuple(
        c if period_of_axis.get(a) is None else c % period_of_axis[a]
        for a, c in enumerate(p)
    )


def check_partition(sig, placements, domain_points, period_of_axis=None):
    """Covers of ``placements`` must hit each domain point exactly once.
    Free-axis cover coordinates wrap modulo the period when one is given.
    Returns (point->placement map, violations)."""
    if period_of_axis is None:
        period_of_axis = {}
    owner = {}
    violations = []
    domain = set(domain_points)
    for pl in placements:
        for q in cover(pl, sig):
            if period_of_axis:
                q = _wrap_free(q, period_of_axis)
            if q not in domain:
                if len(violations) < MAX_WITNESSES:
                    violations.append(
                        {"kind": "outside", "point": list(q), "placement": placement_key(pl)}
                    )
                continue
            prev = owner.get(q)
            # each list entry is its own copy: a duplicated placement is
            # a double cover, not a re-statement
            if prev is not None:
                if len(violations) < MAX_WITNESSES:
                    violations.append(
                        {
                            "kind": "overlap",
                            "point": list(q),
                            "placements": [placement_key(prev), placement_key(pl)],
                        }
                    )
                continue
            owner[q] = pl
    if len(owner) != len(domain):
        for q in sorted(domain - owner.keys()):
            if len(violations) >= MAX_WITNESSES:
                break
            violations.append({"kind": "uncovered", "point": list(q)})
    return owner, violations


def placement_key(pl: Placement):
    return [pl.block, list(pl.offset)]


def verify_exhaustive_construction(c: Construction, limit=None, window=None,
                                   period_of_axis=None) -> VerifyReport:
    """Partition + full locate sweep over c's region (or a window of it)."""
    t0 = time.monotonic()
    if limit is None:
        limit = materialization_limit()
    if window is None:
        points = list(c.region.iter_points())
        if len(points) > limit:
            raise InfiniteSetError("region exceeds the limit")
    else:
        points = _window_points(c.sig, window)
        if len(points) > limit:
            raise InfiniteSetError("window exceeds the limit")
    placements = materialize(c, limit=limit, window=window)
    owner, violations = check_partition(c.sig, placements, points, period_of_axis)
    checked = 0
    for q in points:
        want = owner.get(q)
        if want is None:
            continue
        try:
            got = c._locate(q)
        except LocateError:
            got = None
        # locate may answer with a different wrap-copy of the same
        # periodic placement; compare modulo the period
        if got is not None and period_of_axis:
            got = Placement(got.block, _wrap_free(got.offset, period_of_axis))
            want = Placement(want.block, _wrap_free(want.offset, period_of_axis))
        if got != want:
            if len(violations) < MAX_WITNESSES:
                violations.append(
                    {
                        "kind": "locate-mismatch",
                        "point": list(q),
                        "expected": placement_key(want),
                        "got": None if got is None else placement_key(got),
                    }
                )
        checked += 1
    return VerifyReport(
        ok=not violations,
        method="exhaustive",
        covered_count=len(points),
        placement_count=len(placements),
        violations=violations,
        elapsed=time.monotonic() - t0,
    )


def _window_points(sig, window):
    ranges = []
    for a, m in enumerate(sig.axes):
        if m is not None:
            ranges.append(range(m))
        else:
            if a not in window:
                raise InfiniteSetError("free axis %d needs a window" % a)
            ranges.append(window[a])
    pts = [()]
    for r in ranges:
        pts = [p + (v,) for p in pts for v in r]
    return pts


def _sample_point(sig, region, rng, free_ranges, max_tries=10000):
    axes = sig.axes
    if isinstance(region, ProductSet):
        out = [0] * sig.n_axes
        for j, b in enumerate(sig.blocks):
            sub = region.per_block[j]
            if sub is not None:
                pick = sorted(sub)[rng.below(len(sub))]
                out[b.lo : b.hi] = pick
            else:
                for a in range(b.lo, b.hi):
                    out[a] = _sample_axis(axes[a], a, rng, free_ranges)
        return tuple(out)
    for _ in range(max_tries):
        p = tuple(
            _sample_axis(m, a, rng, free_ranges) for a, m in enumerate(axes)
        )
        if region.contains(p):
            return p
    raise InfiniteSetError("region too sparse for rejection sampling")


def _sample_axis(m, a, rng, free_ranges):
    if m is not None:
        return rng.below(m)
    rng_a = free_ranges.get(a) if free_ranges else None
    if rng_a is not None:
        return rng_a.start + rng.below(len(rng_a))
    return rng.below(2 * FREE_SPAN + 1) - FREE_SPAN


def verify_sampled(c: Construction, samples: int, seed: int = 0,
                   free_ranges=None) -> VerifyReport:
    """Seeded local-consistency checks at ``samples`` region points.

    Free axes draw from free_ranges[axis] when given (one period is the
    natural choice), otherwise from a fixed +-2^20 span.
    """
    t0 = time.monotonic()
    rng = SplitMix64(seed)
    violations = []
    checked = 0
    for _ in range(samples):
        p = _sample_point(c.sig, c.region, rng, free_ranges)
        checked += 1
        try:
            pl = c._locate(p)
        except LocateError as e:
            if len(violations) < MAX_WITNESSES:
                violations.append(
                    {"kind": "locate-raised", "point": list(p), "error": str(e)}
                )
            continue
        cov = cover(pl, c.sig)
        if p not in cov:
            if len(violations) < MAX_WITNESSES:
                violations.append(
                    {
                        "kind": "point-not-in-cover",
                        "point": list(p),
                        "placement": placement_key(pl),
                    }
                )
            continue
        for q in cov:
            try:
                pl2 = c._locate(q)
            except LocateError:
                pl2 = None
            if pl2 != pl:
                if len(violations) < MAX_WITNESSES:
                    violations.append(
                        {
                            "kind": "cover-disagrees",
                            "point": list(p),
                            "other": list(q),
                            "placement": placement_key(pl),
                            "other_placement": None if pl2 is None else placement_key(pl2),
                        }
                    )
                break
    return VerifyReport(
        ok=not violations,
        method="sampled",
        covered_count=checked,
        placement_count=0,
        violations=violations,
        samples=samples,
        seed=seed,
        elapsed=time.monotonic() - t0,
    )
