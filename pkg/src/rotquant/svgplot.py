"""Hand-rolled SVG scatter of per-token squared error.

No imaging dependency: the plot is assembled as text with fixed float
formatting, so identical inputs give byte-identical files and tests can
diff them.  y is log-scaled; zero errors are clamped to a floor a few
decades below anything the quantizer produces on real data.
"""

import numpy as np

from .errors import ShapeError
from .massive import coerce_flags

WIDTH, HEIGHT = 860, 460
LEFT, RIGHT, TOP, BOTTOM = 70, 20, 30, 50
ERROR_FLOOR = 1e-18

BULK_STYLE = 'class="tok" r="2" fill="#4878a8" fill-opacity="0.55"'
MASSIVE_STYLE = 'class="massive" r="3.5" fill="#c23b22"'


def _fmt(v):
    return f"{v:.2f}"


def scatter_svg(per_token, flags=None):
    """Render per-token squared errors to an SVG string.

    flags marks massive tokens with distinct larger markers; None or an
    all-False array draws bulk markers only.
    """
    err = np.asarray(per_token, dtype=np.float64).reshape(-1)
    n = err.shape[0]
    if flags is not None:
        flags = coerce_flags(flags)
        if flags.shape[0] != n:
            raise ShapeError("flags length does not match per-token errors")
    logs = np.log10(np.maximum(err, ERROR_FLOOR))
    if n:
        lo, hi = float(np.floor(logs.min())), float(np.ceil(logs.max()))
    else:
        lo, hi = -1.0, 1.0
    if hi <= lo:
        hi = lo + 1.0

    span_x = WIDTH - LEFT - RIGHT
    span_y = HEIGHT - TOP - BOTTOM

    def px(i):
        frac = i / (n - 1) if n > 1 else 0.5
        return LEFT + frac * span_x

    def py(lv):
        return TOP + (hi - lv) / (hi - lo) * span_y

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<rect x="{LEFT}" y="{TOP}" width="{span_x}" height="{span_y}" '
        'fill="none" stroke="#444444" stroke-width="1"/>',
        f'<text x="{LEFT + span_x / 2:.0f}" y="18" text-anchor="middle" '
        'font-family="monospace" font-size="13">per-token squared error</text>',
        f'<text x="{LEFT + span_x / 2:.0f}" y="{HEIGHT - 12}" text-anchor="middle" '
        'font-family="monospace" font-size="12">token index</text>',
    ]
    for decade in range(int(lo), int(hi) + 1):
        y = _fmt(py(decade))
        parts.append(
            f'<line x1="{LEFT}" y1="{y}" x2="{LEFT + span_x}" y2="{y}" '
            'stroke="#cccccc" stroke-width="0.5" stroke-dasharray="3,3"/>'
        )
        parts.append(
            f'<text x="{LEFT - 6}" y="{y}" text-anchor="end" dominant-baseline="middle" '
            f'font-family="monospace" font-size="11">1e{decade}</text>'
        )
    for k in range(5):
        i = round(k * (n - 1) / 4) if n > 1 else 0
        x = _fmt(px(i))
        parts.append(
            f'<text x="{x}" y="{HEIGHT - 30}" text-anchor="middle" '
            f'font-family="monospace" font-size="11">{i}</text>'
        )
    # bulk first so massive markers stay visible on top
    for t in range(n):
        if flags is None or not flags[t]:
            parts.append(f'<circle cx="{_fmt(px(t))}" cy="{_fmt(py(logs[t]))}" {BULK_STYLE}/>')
    if flags is not None:
        for t in np.flatnonzero(flags):
            parts.append(
                f'<circle cx="{_fmt(px(t))}" cy="{_fmt(py(logs[t]))}" {MASSIVE_STYLE}/>'
            )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_scatter_svg(path, per_token, flags=None):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(scatter_svg(per_token, flags))
