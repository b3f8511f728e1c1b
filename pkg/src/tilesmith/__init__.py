"""tilesmith: constructive lattice tilings with verifiable certificates.

Given a finite set of integer points, the synthesizers build an explicit
tiling of Z^d for a computed d, packaged as a certificate that an
independent verifier (and, on small instances, an independent
exact-cover search) can check.
"""
from .certificate import (
    Certificate,
    build_certificate,
    canonical_json,
    certificate_from_json,
    load_certificate,
    verify_certificate_sampled,
    verify_exhaustive,
    write_certificate,
)
from .construction import (
    Construction,
    LocateError,
    PointInHole,
    PointOutsideRegion,
    compose,
    lift,
    materialize,
)
from .oracle import SearchProblem, SearchResult, decide, density_bound, prove_not_tiles
from .space import Placement, SpaceSignature, TileSpec, cover, make_tile, parse_tile, render_tile
from .synth_general import (
    build_blueprint,
    construct_denser,
    cover_holes,
    m_csets,
    make_densification,
    removed_cset,
    solve_g,
    synthesize_general,
    use_cset,
)
from .synth_simple import ParamError, synthesize_simple
from .verify import SplitMix64, VerifyReport, verify_sampled

__version__ = "0.1.0"

__all__ = [
    "Certificate",
    "Construction",
    "LocateError",
    "ParamError",
    "Placement",
    "PointInHole",
    "PointOutsideRegion",
    "SearchProblem",
    "SearchResult",
    "SpaceSignature",
    "SplitMix64",
    "TileSpec",
    "VerifyReport",
    "build_blueprint",
    "build_certificate",
    "canonical_json",
    "certificate_from_json",
    "compose",
    "construct_denser",
    "cover",
    "cover_holes",
    "decide",
    "density_bound",
    "lift",
    "load_certificate",
    "m_csets",
    "make_densification",
    "make_tile",
    "materialize",
    "parse_tile",
    "prove_not_tiles",
    "removed_cset",
    "render_tile",
    "solve_g",
    "synthesize_general",
    "synthesize_simple",
    "use_cset",
    "verify_certificate_sampled",
    "verify_exhaustive",
    "verify_sampled",
    "write_certificate",
]
