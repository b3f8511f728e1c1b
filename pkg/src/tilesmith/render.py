"""Draw a certificate slice as ASCII letters or an SVG grid.

A slice fixes every axis but one or two; the kept axes sweep one full
period each.  Every placement seen in the sweep gets a letter from a
fixed 26-letter cycle (or a color from a fixed palette), assigned in
row-major scan order so identical invocations draw identical pictures.
"""

from __future__ import annotations

from itertools import product
from string import ascii_uppercase

from .certificate import MODE_TREE, Certificate
from .space import SpaceError
from .verify import check_partition

MAX_CELLS = 100_000

# distinct enough side by side; collisions past 12 are display-only
PALETTE = (
    "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948",
    "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac", "#86bcb6", "#d37295",
)
CELL_PX = 14


def parse_slice(spec, n_axes):
    """Split a ``*,*,0,1`` style spec into kept axes and fixed values.

    ``None`` keeps the first one or two axes and pins the rest at 0.
    """
    if spec is None:
        kept = list(range(min(2, n_axes)))
        return kept, {a: 0 for a in range(n_axes) if a not in kept}
    parts = [s.strip() for s in str(spec).split(",")]
    if len(parts) != n_axes:
        raise SpaceError(
            "slice has %d entries; certificate has %d axes" % (len(parts), n_axes)
        )
    kept = []
    fixed = {}
    for a, tok in enumerate(parts):
        if tok == "*":
            kept.append(a)
        else:
            try:
                fixed[a] = int(tok)
            except ValueError:
                raise SpaceError("slice entry %r is neither * nor an integer" % tok)
    if not 1 <= len(kept) <= 2:
        raise SpaceError("slice keeps %d axes; a drawing needs 1 or 2" % len(kept))
    return kept, fixed


def _axis_extent(cert, a):
    m = cert.sig.axes[a]
    return m if m is not None else cert.period_of_axis()[a]


def _explicit_owner(cert):
    points = [()]
    for a in range(cert.sig.n_axes):
        points = [p + (v,) for p in points for v in range(_axis_extent(cert, a))]
    owner, _ = check_partition(
        cert.sig, cert.payload, points, cert.period_of_axis() or None
    )
    return owner


def slice_owners(cert: Certificate, spec=None):
    """Grid of letter indices for the slice, plus its shape.

    Returns (cols, rows, {(x, y): index}).  A one-axis slice has rows=1.
    Cells no placement claims are left out of the map.
    """
    n = cert.sig.n_axes
    kept, fixed = parse_slice(spec, n)
    extents = [_axis_extent(cert, a) for a in kept]
    cols = extents[0]
    rows = extents[1] if len(kept) == 2 else 1
    if cols * rows > MAX_CELLS:
        raise SpaceError("slice has %d cells, over the %d cap" % (cols * rows, MAX_CELLS))

    per = cert.period_of_axis()
    explicit_owner = None if cert.mode == MODE_TREE else _explicit_owner(cert)

    def owner_at(point):
        if explicit_owner is not None:
            q = list(point)
            for a, v in enumerate(q):
                m = cert.sig.axes[a]
                q[a] = v % (m if m is not None else per[a])
            return explicit_owner.get(tuple(q))
        try:
            return cert.payload.locate(point)
        except SpaceError:
            return None

    index = {}
    grid = {}
    for y, x in product(range(rows), range(cols)):
        p = [0] * n
        for a, v in fixed.items():
            p[a] = v
        p[kept[0]] = x
        if len(kept) == 2:
            p[kept[1]] = y
        pl = owner_at(tuple(p))
        if pl is None:
            continue
        if pl not in index:
            index[pl] = len(index)
        grid[(x, y)] = index[pl]
    return cols, rows, grid


def render_ascii(cert: Certificate, spec=None) -> str:
    """One character per cell; uncovered cells print as dots."""
    cols, rows, grid = slice_owners(cert, spec)
    lines = []
    for y in range(rows):
        lines.append(
            "".join(
                ascii_uppercase[grid[(x, y)] % 26] if (x, y) in grid else "."
                for x in range(cols)
            )
        )
    return "\n".join(lines) + "\n"


def render_svg(cert: Certificate, spec=None) -> str:
    cols, rows, grid = slice_owners(cert, spec)
    w, h = cols * CELL_PX, rows * CELL_PX
    out = [
        '<svg xmlns="http://www.w3.org/2000/svg" width="%d" height="%d" '
        'viewBox="0 0 %d %d">' % (w, h, w, h)
    ]
    out.append('<rect width="%d" height="%d" fill="white"/>' % (w, h))
    for y in range(rows):
        for x in range(cols):
            if (x, y) not in grid:
                continue
            color = PALETTE[grid[(x, y)] % len(PALETTE)]
            out.append(
                '<rect x="%d" y="%d" width="%d" height="%d" fill="%s" '
                'stroke="#333" stroke-width="1"/>'
                % (x * CELL_PX, y * CELL_PX, CELL_PX, CELL_PX, color)
            )
    out.append("</svg>")
    return "\n".join(out) + "\n"
