"""Small hand-written SVG 1.1 figures (no plotting dependency).

Coordinates are formatted with fixed precision so the same input always
produces byte-identical documents.
"""

from __future__ import annotations

from xml.sax.saxutils import escape

from .games import STATE_NAMES

PANEL = 180  # plot area edge, px
MARGIN = 40
GAP = 20
COLOURS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf")


def _f(x: float) -> str:
    return f"{x:.2f}"


def _doc(width, height, body) -> str:
    head = (
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">\n'
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>\n'
    )
    return head + "".join(body) + "</svg>\n"


def _text(x, y, s, anchor="middle", size=None, rotate=None) -> str:
    extra = f' font-size="{size}"' if size else ""
    if rotate is not None:
        extra += f' transform="rotate({rotate} {_f(x)} {_f(y)})"'
    return f'<text x="{_f(x)}" y="{_f(y)}" text-anchor="{anchor}"{extra}>{escape(str(s))}</text>\n'


def emit_policy_scatter(records, state_names=STATE_NAMES, title="") -> str:
    """One panel per state: agent 1 vs agent 2 action-0 probability, one point per run."""
    n = len(state_names)
    width = MARGIN + n * (PANEL + GAP) + MARGIN - GAP
    height = PANEL + 2 * MARGIN + 20
    top = MARGIN + 20
    body = []
    if title:
        body.append(_text(width / 2, 18, title, size=13))
    for k, name in enumerate(state_names):
        x0 = MARGIN + k * (PANEL + GAP)
        body.append(
            f'<g id="panel-{escape(name)}">\n'
            f'<rect x="{x0}" y="{top}" width="{PANEL}" height="{PANEL}" fill="none" stroke="black"/>\n'
        )
        body.append(_text(x0 + PANEL / 2, top - 6, name))
        for tick in (0.0, 0.5, 1.0):
            tx = x0 + tick * PANEL
            ty = top + PANEL - tick * PANEL
            body.append(_text(tx, top + PANEL + 12, _f(tick)[:3], size=9))
            body.append(_text(x0 - 4, ty + 3, _f(tick)[:3], anchor="end", size=9))
        for rec in records:
            p1, p2 = rec.final_probs
            cx = x0 + float(p1[k]) * PANEL
            cy = top + PANEL - float(p2[k]) * PANEL
            body.append(
                f'<circle cx="{_f(cx)}" cy="{_f(cy)}" r="3" fill="{COLOURS[k % len(COLOURS)]}" '
                'fill-opacity="0.6"/>\n'
            )
        body.append("</g>\n")
    body.append(_text(width / 2, height - 6, "P(action 0), agent 1"))
    body.append(_text(12, top + PANEL / 2, "agent 2", rotate=-90))
    return _doc(width, height, body)


def emit_tournament_bars(summary: dict, title="") -> str:
    """Bar per learner at its mean return with 95% CI whiskers.

    ``summary`` maps name to ``(mean, ci_low, ci_high, n)`` as produced by
    :meth:`lolalab.tournament.TournamentResult.summary`.
    """
    names = list(summary)
    bar, gap = 40, 20
    plot_h = 220
    width = 2 * MARGIN + max(1, len(names)) * (bar + gap)
    height = plot_h + 2 * MARGIN + 40
    top = MARGIN + 10
    lows = [summary[n][1] for n in names] + [0.0]
    highs = [summary[n][2] for n in names] + [0.0]
    lo, hi = min(lows), max(highs)
    if hi - lo < 1e-9:
        lo, hi = lo - 1.0, hi + 1.0

    def ypos(v):
        return top + (hi - v) / (hi - lo) * plot_h

    body = []
    if title:
        body.append(_text(width / 2, 18, title, size=13))
    zero = ypos(0.0)
    body.append(f'<line x1="{MARGIN}" y1="{_f(zero)}" x2="{width - MARGIN}" y2="{_f(zero)}" stroke="black"/>\n')
    body.append(_text(MARGIN - 4, top + 3, _f(hi), anchor="end", size=9))
    body.append(_text(MARGIN - 4, top + plot_h + 3, _f(lo), anchor="end", size=9))
    for i, name in enumerate(names):
        mean, clo, chi, _ = summary[name]
        x = MARGIN + gap / 2 + i * (bar + gap)
        y1, y2 = sorted((ypos(mean), zero))
        body.append(
            f'<rect x="{_f(x)}" y="{_f(y1)}" width="{bar}" height="{_f(y2 - y1)}" '
            f'fill="{COLOURS[i % len(COLOURS)]}"/>\n'
        )
        cx = x + bar / 2
        body.append(
            f'<line x1="{_f(cx)}" y1="{_f(ypos(clo))}" x2="{_f(cx)}" y2="{_f(ypos(chi))}" stroke="black"/>\n'
        )
        for v in (clo, chi):
            body.append(
                f'<line x1="{_f(cx - 6)}" y1="{_f(ypos(v))}" x2="{_f(cx + 6)}" y2="{_f(ypos(v))}" stroke="black"/>\n'
            )
        body.append(_text(cx, top + plot_h + 26, name, size=10))
    return _doc(width, height, body)
