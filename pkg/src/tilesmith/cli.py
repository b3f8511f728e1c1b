"""Command-line front end: synth, verify, decide, render, bound.

Exit codes: 0 success, 1 verification failure or an undecided search,
2 bad input or unreadable/oversized data, 3 synthesis self-check failure.
Output files are canonical JSON with seeds and limits recorded, so
identical invocations write identical bytes.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import asdict, dataclass

from .certificate import (
    canonical_json,
    load_certificate,
    verify_certificate_sampled,
    verify_exhaustive,
    write_certificate,
)
from .construction import materialization_limit
from .oracle import DEFAULT_BUDGET, SearchProblem, decide, density_bound, witness_certificate
from .pointsets import InfiniteSetError
from .render import render_ascii, render_svg
from .space import SpaceError, make_tile, parse_tile
from .synth_general import synthesize_general
from .synth_simple import ParamError, synthesize_simple

SELF_CHECK_SAMPLES = 2000
VERIFY_SAMPLES = 10**4
SHORTCUT_MAX_CELLS = 32


@dataclass(frozen=True)
class RunConfig:
    """What a synth invocation was asked to do; stamped into the output
    so a certificate names the seeds and limits that produced it."""

    subcommand: str
    tile: str
    method: str
    out: str
    seed: int
    samples: int
    limit: int
    budget: int
    trace: bool


def _err(msg) -> None:
    print("tilesmith: %s" % msg, file=sys.stderr)


def _pick_method(spec) -> str:
    box = 1
    for e in spec.extents:
        box *= e + 1
    if spec.size in (1, box):
        return "trivial"
    if spec.dim == 1 and spec.size == spec.extents[0]:
        return "simple"
    return "general"


def _simple_params(spec):
    """Interval length and the 1-based puncture position."""
    if spec.dim != 1:
        raise ParamError("the one-gap pipeline needs a one-axis tile")
    span = spec.extents[0] + 1
    missing = sorted(set(range(span)) - {p[0] for p in spec.points})
    if len(missing) != 1:
        raise ParamError("the one-gap pipeline needs exactly one missing cell")
    return span, missing[0] + 1


def _dimension_bound_text(spec) -> str:
    """Display-only theoretical dimension, never a target: the achieved
    d is what the certificate carries."""
    expo = 100.0 * (spec.dim * math.log(spec.k)) ** 2
    if expo < 30.0:
        return str(math.ceil(math.exp(expo)))
    return "~10^%.1f" % (expo / math.log(10))


def _shortcut_shapes(spec):
    spans = [e + 1 for e in spec.extents]
    if spec.dim == 1:
        m = spans[0]
        while m <= SHORTCUT_MAX_CELLS:
            if m % spec.size == 0:
                yield (m,)
            m += 1
        return
    shapes = []
    for m1 in range(spans[0], SHORTCUT_MAX_CELLS + 1):
        for m2 in range(spans[1], SHORTCUT_MAX_CELLS // m1 + 1):
            if (m1 * m2) % spec.size == 0:
                shapes.append((m1 * m2, m1, m2))
    for _, m1, m2 in sorted(shapes):
        yield (m1, m2)


def _try_shortcut(spec, budget):
    """Small torus search before the pipeline; None when nothing bites."""
    if spec.dim > 2:
        return None
    for shape in _shortcut_shapes(spec):
        prob = SearchProblem(spec, torus=shape)
        res = decide(prob, budget=budget)
        if res.status == "SAT":
            return witness_certificate(prob, res)
    return None


def cmd_synth(args) -> int:
    try:
        spec = parse_tile(args.tile)
    except ValueError as e:
        _err(e)
        return 2
    limit = args.limit if args.limit is not None else materialization_limit()
    trace = {} if args.trace else None

    method = args.method
    cert = None
    try:
        if args.shortcut:
            cert = _try_shortcut(spec, args.budget)
            if cert is not None:
                method = "oracle"
        if cert is None:
            if method == "auto":
                method = _pick_method(spec)
            if method == "simple":
                k, i = _simple_params(spec)
                cert = synthesize_simple(k, i, limit=limit, trace=trace)
            else:
                cert = synthesize_general(args.tile, limit=limit, trace=trace)
    except ValueError as e:
        _err(e)
        return 2

    if cert.domain_size() <= limit:
        report = verify_exhaustive(cert, limit=limit)
    else:
        report = verify_certificate_sampled(cert, args.samples, args.seed)
    if not report.ok:
        _err(
            "self-check failed (%s): %s"
            % (report.method, report.violations[:1] or "no cover")
        )
        return 3

    cfg = RunConfig(
        "synth", args.tile, method, args.out or "", args.seed,
        args.samples, limit, args.budget, args.trace,
    )
    cert.meta["run"] = asdict(cfg)
    cert.meta["self_check"] = report.method
    if args.out:
        try:
            write_certificate(cert, args.out)
        except (OSError, SpaceError) as e:
            _err("cannot write certificate: %s" % e)
            return 2
    if trace is not None:
        if method == "general":
            trace["display_bound"] = _dimension_bound_text(spec)
        print(canonical_json(trace))
    print(
        "tile=%s method=%s d=%d mode=%s"
        % (args.tile, method, cert.meta["d"], cert.mode)
    )
    return 0


def _report_json(report) -> dict:
    d = {
        "ok": report.ok,
        "method": report.method,
        "covered_count": report.covered_count,
        "placement_count": report.placement_count,
        "violations": report.violations,
    }
    if report.samples:
        d["samples"] = report.samples
        d["seed"] = report.seed
    return d


def cmd_verify(args) -> int:
    try:
        cert = load_certificate(args.path)
    except (OSError, ValueError, KeyError, TypeError) as e:
        _err("unreadable certificate: %s" % e)
        return 2
    limit = args.limit if args.limit is not None else materialization_limit()
    mode = args.mode
    if mode == "auto":
        mode = "exhaustive" if cert.domain_size() <= limit else "sampled"
    if mode == "exhaustive":
        try:
            report = verify_exhaustive(cert, limit=limit)
        except InfiniteSetError as e:
            _err("limit exceeded: %s" % e)
            return 2
    else:
        report = verify_certificate_sampled(cert, args.samples, args.seed)
    out = canonical_json(_report_json(report))
    print(out)
    if args.report:
        try:
            with open(args.report, "w") as fh:
                fh.write(out + "\n")
        except OSError as e:
            _err(e)
            return 2
    return 0 if report.ok else 1


def _parse_shape(text, dim):
    parts = [int(s) for s in str(text).lower().split("x")]
    if len(parts) == 1 and dim > 1:
        parts = parts * dim
    return tuple(parts)


def cmd_decide(args) -> int:
    try:
        spec = parse_tile(args.tile)
        if args.dim is not None:
            if args.dim < spec.dim:
                raise SpaceError("--dim below the tile's own dimension")
            spec = make_tile([y + (0,) * (args.dim - spec.dim) for y in spec.points])
        dim = spec.dim
        torus = _parse_shape(args.torus, dim) if args.torus else None
        box = _parse_shape(args.box, dim) if args.box else None
        prob = SearchProblem(
            spec, torus=torus, box=box, symmetry=args.symmetry, overhang=args.overhang
        )
    except ValueError as e:
        _err(e)
        return 2
    res = decide(prob, budget=args.budget)
    out = res.to_json()
    out["budget"] = args.budget
    text = canonical_json(out)
    print(text)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    return 0 if res.status in ("SAT", "UNSAT") else 1


def cmd_render(args) -> int:
    try:
        cert = load_certificate(args.path)
    except (OSError, ValueError, KeyError, TypeError) as e:
        _err("unreadable certificate: %s" % e)
        return 2
    try:
        if args.format == "svg":
            text = render_svg(cert, args.slice)
        else:
            text = render_ascii(cert, args.slice)
    except ValueError as e:
        _err(e)
        return 2
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_bound(args) -> int:
    if args.density:
        if args.k is None or args.d is None:
            _err("--density needs --k and --d")
            return 2
        try:
            res = density_bound(args.k, args.d)
        except ValueError as e:
            _err(e)
            return 2
        res["tile"] = [list(p) for p in res["tile"].points]
        print(canonical_json(res))
        return 0
    if not args.tile:
        _err("need --tile (or --density --k K --d D)")
        return 2
    try:
        spec = parse_tile(args.tile)
    except ValueError as e:
        _err(e)
        return 2
    print(
        "tile=%s n=%d k=%d dimension_bound=%s (display only; synth reports the achieved d)"
        % (args.tile, spec.dim, spec.k, _dimension_bound_text(spec))
    )
    return 0


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="tilesmith",
        description="Constructive tilings of the integer lattice by a finite tile.",
    )
    sub = ap.add_subparsers(dest="subcommand", required=True)

    sp = sub.add_parser("synth", help="Build and self-check a tiling certificate.")
    sp.add_argument("--tile", required=True, help="X/. string (1-D) or JSON vector list.")
    sp.add_argument(
        "--method",
        choices=("auto", "simple", "general"),
        default="auto",
        help="auto picks trivial/simple/general from the tile's shape.",
    )
    sp.add_argument("--out", help="Write canonical certificate JSON here.")
    sp.add_argument("--seed", type=int, default=0, help="Seed for the sampled self-check.")
    sp.add_argument(
        "--samples",
        type=int,
        default=SELF_CHECK_SAMPLES,
        help="Sampled self-check size when the domain exceeds the limit.",
    )
    sp.add_argument(
        "--limit",
        type=int,
        default=None,
        help="Materialization cap (default TILESMITH_LIMIT or 10^7).",
    )
    sp.add_argument(
        "--budget",
        type=int,
        default=DEFAULT_BUDGET,
        help="Node budget for the --shortcut search.",
    )
    sp.add_argument(
        "--shortcut",
        action="store_true",
        help="Try a small torus search first; off by default so the pipeline runs.",
    )
    sp.add_argument("--trace", action="store_true", help="Print pipeline bookkeeping JSON.")
    sp.set_defaults(fn=cmd_synth)

    vp = sub.add_parser("verify", help="Check a certificate file; report JSON on stdout.")
    vp.add_argument("path", help="Certificate JSON file.")
    vp.add_argument(
        "--mode",
        choices=("auto", "exhaustive", "sampled"),
        default="auto",
        help="auto is exhaustive up to the limit, sampled past it.",
    )
    vp.add_argument("--samples", type=int, default=VERIFY_SAMPLES)
    vp.add_argument("--seed", type=int, default=0)
    vp.add_argument("--limit", type=int, default=None, help="Exhaustive domain cap.")
    vp.add_argument("--report", help="Also write the report JSON here.")
    vp.set_defaults(fn=cmd_verify)

    dp = sub.add_parser("decide", help="Exact-cover search on a finite torus or box.")
    dp.add_argument("--tile", required=True)
    dp.add_argument("--torus", help="Moduli, e.g. 4x2.")
    dp.add_argument("--box", help="Extents, e.g. 30 or 6x4.")
    dp.add_argument("--dim", type=int, help="Pad the tile with zero axes up to this dimension.")
    dp.add_argument("--symmetry", choices=("translate", "perm", "full"), default="translate")
    dp.add_argument(
        "--overhang",
        action="store_true",
        help="Box copies may stick out (still must cover the box exactly).",
    )
    dp.add_argument("--budget", type=int, default=DEFAULT_BUDGET, help="Search node cap.")
    dp.add_argument("--out", help="Write the result JSON here.")
    dp.set_defaults(fn=cmd_decide)

    rp = sub.add_parser("render", help="Draw a 2-D slice of a certificate.")
    rp.add_argument("path", help="Certificate JSON file.")
    rp.add_argument(
        "--slice",
        help="Per-axis entries, * keeps an axis: e.g. '*,*,0,1'. Default keeps the first two.",
    )
    rp.add_argument("--format", choices=("ascii", "svg"), default="ascii")
    rp.add_argument("--out", help="Write the drawing here instead of stdout.")
    rp.set_defaults(fn=cmd_render)

    bp = sub.add_parser("bound", help="Dimension display bound, or the density check.")
    bp.add_argument("--tile", help="Tile for the dimension display bound.")
    bp.add_argument("--density", action="store_true", help="Run the density check instead.")
    bp.add_argument("--k", type=int, help="Interval length for --density.")
    bp.add_argument("--d", type=int, help="Dimension for --density.")
    bp.set_defaults(fn=cmd_bound)
    return ap


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    raise SystemExit(main())
