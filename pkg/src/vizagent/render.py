"""Deterministic SVG rendering of validated plot specs.

The renderer is a pure function of (spec, study): fixed 960x600 canvas,
fixed margins, fixed float formatting, no randomness, no timestamps, so
identical inputs produce identical bytes. Series carrying a running_best
role are computed here from the referenced column rather than stored in
the spec, which keeps specs small and free of derived data.
"""

from __future__ import annotations

from .analysis import min_max_normalize, running_best
from .errors import EmptySeriesError, UnknownColumnError
from .plotspec import PALETTE, Annotation, PlotSpec, SeriesSpec
from .router import RequestClass
from .study import MINIMIZE, Study, column_series, is_feasible

CANVAS_W = 960
CANVAS_H = 600
MARGIN = 60
DASH_ARRAY = "6,4"


def esc(text: str) -> str:
    return (
        text.replace("&", "&amp;")
        .replace("<", "&lt;")
        .replace(">", "&gt;")
        .replace('"', "&quot;")
    )


def fmt_px(v: float) -> str:
    """Pixel coordinates at fixed precision so output is byte-stable."""
    s = f"{float(v):.2f}"
    return "0.00" if s == "-0.00" else s


def fmt_label(v: float) -> str:
    if isinstance(v, int) or float(v).is_integer():
        return str(int(v))
    return format(float(v), ".4g")

_LEFT = MARGIN
_RIGHT = CANVAS_W - MARGIN
_TOP = MARGIN
_BOTTOM = CANVAS_H - MARGIN

_POSITIONS = {
    "top_left": (_LEFT + 10, _TOP + 20, "start"),
    "top_right": (_RIGHT - 10, _TOP + 20, "end"),
    "bottom_left": (_LEFT + 10, _BOTTOM - 10, "start"),
    "bottom_right": (_RIGHT - 10, _BOTTOM - 10, "end"),
}

_INFEASIBLE_FALLBACK = "gray"


def render_svg(spec: PlotSpec, study: Study) -> str:
    for col in spec.columns_used():
        if not study.has_column(col):
            raise UnknownColumnError(f"study {study.id!r} has no column {col!r}")
    parts: list[str] = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{CANVAS_W}" '
        f'height="{CANVAS_H}" viewBox="0 0 {CANVAS_W} {CANVAS_H}" '
        f'font-family="sans-serif">',
        f'<rect width="{CANVAS_W}" height="{CANVAS_H}" fill="#ffffff"/>',
        f'<text x="{CANVAS_W // 2}" y="32" text-anchor="middle" '
        f'font-size="17" fill="#111111">{esc(spec.title)}</text>',
    ]
    if spec.kind is RequestClass.HISTORY:
        parts.extend(_render_history(spec, study))
    elif spec.kind is RequestClass.RELATION2D:
        parts.extend(_render_relation(spec, study))
    else:
        parts.extend(_render_parallel(spec, study))
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


class _Scale:
    """Linear map from a data domain onto a pixel range."""

    def __init__(self, lo: float, hi: float, px_lo: float, px_hi: float) -> None:
        if hi == lo:
            lo, hi = lo - 1.0, hi + 1.0
        self.lo = lo
        self.hi = hi
        self.px_lo = px_lo
        self.px_hi = px_hi

    def __call__(self, v: float) -> float:
        frac = (v - self.lo) / (self.hi - self.lo)
        return self.px_lo + frac * (self.px_hi - self.px_lo)

    def ticks(self, count: int = 5) -> list[float]:
        step = (self.hi - self.lo) / (count - 1)
        return [self.lo + i * step for i in range(count)]


def _line(x1, y1, x2, y2, stroke="#444444", width=1.0, cls=None) -> str:
    c = f' class="{cls}"' if cls else ""
    return (
        f'<line{c} x1="{fmt_px(x1)}" y1="{fmt_px(y1)}" x2="{fmt_px(x2)}" '
        f'y2="{fmt_px(y2)}" stroke="{stroke}" stroke-width="{fmt_px(width)}"/>'
    )


def _text(x, y, content, size=11, anchor="middle", fill="#333333", extra="") -> str:
    return (
        f'<text x="{fmt_px(x)}" y="{fmt_px(y)}" text-anchor="{anchor}" '
        f'font-size="{size}" fill="{fill}"{extra}>{esc(content)}</text>'
    )


def _polyline(points: list[tuple[float, float]], color: str, width: float,
              cls: str, dashed: bool, opacity: float | None = None) -> str:
    coords = " ".join(f"{fmt_px(x)},{fmt_px(y)}" for x, y in points)
    dash = f' stroke-dasharray="{DASH_ARRAY}"' if dashed else ""
    op = f' stroke-opacity="{opacity}"' if opacity is not None else ""
    return (
        f'<polyline class="{cls}" points="{coords}" fill="none" '
        f'stroke="{color}" stroke-width="{fmt_px(width)}"{dash}{op}/>'
    )


def _ring(x: float, y: float, label: str | None = None) -> list[str]:
    out = [
        f'<circle class="best-design-marker" cx="{fmt_px(x)}" cy="{fmt_px(y)}" '
        f'r="8" fill="none" stroke="#111111" stroke-width="2.5"/>'
    ]
    if label:
        out.append(_text(x, y - 12, label, size=10, fill="#111111"))
    return out


def _legend(rows: list[tuple[str, str, bool]]) -> list[str]:
    """Legend box at the top-right: rows of (label, color, dashed)."""
    if not rows:
        return []
    width = 190
    height = 14 + 16 * len(rows)
    x0 = _RIGHT - width - 6
    y0 = _TOP + 6
    out = [
        f'<rect class="legend" x="{fmt_px(x0)}" y="{fmt_px(y0)}" '
        f'width="{width}" height="{height}" fill="#ffffff" '
        f'stroke="#999999" stroke-width="1"/>'
    ]
    for i, (label, color, dashed) in enumerate(rows):
        y = y0 + 16 + 16 * i
        dash = f' stroke-dasharray="{DASH_ARRAY}"' if dashed else ""
        out.append(
            f'<line x1="{fmt_px(x0 + 8)}" y1="{fmt_px(y - 4)}" '
            f'x2="{fmt_px(x0 + 34)}" y2="{fmt_px(y - 4)}" '
            f'stroke="{color}" stroke-width="2"{dash}/>'
        )
        out.append(_text(x0 + 40, y, label, size=10, anchor="start"))
    return out


def _annotation_texts(annotations: tuple[Annotation, ...]) -> list[str]:
    out = []
    for a in annotations:
        if a.kind != "text":
            continue
        x, y, anchor = _POSITIONS[a.position or "top_left"]
        out.append(_text(x, y, a.text or "", size=12, anchor=anchor, fill="#222222"))
    return out


def _series_values(study: Study, column: str) -> list[tuple[int, float]]:
    pairs, _missing = column_series(study, column)
    numeric = [(d, v) for d, v in pairs if isinstance(v, (int, float))]
    return [(d, float(v)) for d, v in numeric]


def _running_best_direction(study: Study, column: str) -> str:
    if study.column_role(column) == "objective":
        return study.objective(column).direction
    return MINIMIZE


# --- history -----------------------------------------------------------


def _render_history(spec: PlotSpec, study: Study) -> list[str]:
    positions = {d.design_id: i + 1 for i, d in enumerate(study.designs)}
    n = len(study.designs)
    x_scale = _Scale(1, max(n, 2), _LEFT, _RIGHT)

    normalized_sides = {a.side for a in spec.axes if a.normalized}

    # Resolve each series to (position, value) pairs up front so axis
    # domains cover exactly what is drawn.
    resolved: list[tuple[SeriesSpec, list[tuple[float, float]]]] = []
    for s in spec.series:
        if s.points is not None:
            pts = [(float(x), float(y)) for x, y in s.points]
        else:
            if not s.columns:
                raise EmptySeriesError(f"series {s.name!r} names no column to plot")
            pairs = _series_values(study, s.columns[0])
            if s.role == "running_best":
                direction = _running_best_direction(study, s.columns[0])
                values = running_best([v for _, v in pairs], direction)
            else:
                values = [v for _, v in pairs]
            if s.axis in normalized_sides:
                values = min_max_normalize(values)
            pts = [
                (float(positions[d]), values[i])
                for i, (d, _) in enumerate(pairs)
            ]
        if not pts:
            raise EmptySeriesError(f"series {s.name!r} has no plottable points")
        resolved.append((s, pts))

    domains: dict[str, list[float]] = {}
    for s, pts in resolved:
        domains.setdefault(s.axis, []).extend(v for _, v in pts)
    scales: dict[str, _Scale] = {}
    for side, values in domains.items():
        scales[side] = _Scale(min(values), max(values), _BOTTOM, _TOP)

    out: list[str] = []
    out.append(_line(_LEFT, _BOTTOM, _RIGHT, _BOTTOM))
    out.append(_line(_LEFT, _TOP, _LEFT, _BOTTOM))
    if "right" in scales:
        out.append(_line(_RIGHT, _TOP, _RIGHT, _BOTTOM))

    seen_ticks: set[int] = set()
    for tick in x_scale.ticks():
        snapped = round(tick)  # design indices are integers; mark and label agree
        if snapped in seen_ticks:
            continue
        seen_ticks.add(snapped)
        x = x_scale(snapped)
        out.append(_line(x, _BOTTOM, x, _BOTTOM + 5))
        out.append(_text(x, _BOTTOM + 18, fmt_label(snapped)))
    for side, scale in sorted(scales.items()):
        axis_x = _LEFT if side == "left" else _RIGHT
        sign = -1 if side == "left" else 1
        anchor = "end" if side == "left" else "start"
        for tick in scale.ticks():
            y = scale(tick)
            out.append(_line(axis_x, y, axis_x + sign * 5, y))
            out.append(_text(axis_x + sign * 8, y + 4, fmt_label(tick), anchor=anchor))

    out.extend(_axis_captions(spec, x_default="Iteration"))

    for s, pts in resolved:
        scale = scales[s.axis]
        px = [(x_scale(x), scale(v)) for x, v in pts]
        cls = "series-data" if s.role == "data" else "series-running-best"
        width = 2.0 if s.role == "data" else 1.3
        out.append(_polyline(px, PALETTE[s.color], width, cls, s.style == "dashed"))

    out.extend(_history_best_markers(spec, study, positions, x_scale, scales, resolved))
    out.extend(_annotation_texts(spec.annotations))
    if spec.legend:
        out.extend(
            _legend([(s.name, PALETTE[s.color], s.style == "dashed") for s, _ in resolved])
        )
    return out


def _history_best_markers(spec, study, positions, x_scale, scales, resolved) -> list[str]:
    out: list[str] = []
    for a in spec.annotations:
        if a.kind != "best_design":
            continue
        design = study.design(a.design_id)
        column = a.column
        if column is None:
            named = [s for s in spec.data_series() if s.columns]
            if named:
                column = named[0].columns[0]
        if column is None:
            continue
        value = design.values.get(column)
        if not isinstance(value, (int, float)):
            continue
        side = next(
            (s.axis for s in spec.data_series() if s.columns and s.columns[0] == column),
            "left",
        )
        if side not in scales:
            continue
        plotted = float(value)
        normalized_sides = {ax.side for ax in spec.axes if ax.normalized}
        if side in normalized_sides:
            raw = [v for _, v in _series_values(study, column)]
            norm = min_max_normalize(raw)
            pairs = _series_values(study, column)
            idx = next(
                (i for i, (d, _) in enumerate(pairs) if d == a.design_id), None
            )
            if idx is None:
                continue
            plotted = norm[idx]
        x = x_scale(positions[a.design_id])
        y = scales[side](plotted)
        out.extend(_ring(x, y, f"best #{a.design_id}"))
    return out


def _axis_captions(spec: PlotSpec, x_default: str) -> list[str]:
    out = []
    bottom_label = x_default
    left_label = None
    right_label = None
    for a in spec.axes:
        if a.side == "bottom":
            bottom_label = a.label
        elif a.side == "left":
            left_label = a.label
        elif a.side == "right":
            right_label = a.label
    out.append(_text((_LEFT + _RIGHT) / 2, CANVAS_H - 14, bottom_label, size=12))
    if left_label:
        out.append(_text(_LEFT, _TOP - 10, left_label, size=12, anchor="start"))
    if right_label:
        out.append(_text(_RIGHT, _TOP - 10, right_label, size=12, anchor="end"))
    return out


# --- relation ----------------------------------------------------------


def _select_ids(study: Study, series: SeriesSpec) -> list[int]:
    selector = series.designs
    all_ids = [d.design_id for d in study.designs]
    if selector is None or selector.select == "all":
        return all_ids
    if selector.select == "feasible":
        return [d for d in all_ids if is_feasible(study, d)]
    if selector.select == "infeasible":
        return [d for d in all_ids if not is_feasible(study, d)]
    known = set(all_ids)
    return [i for i in selector.ids if i in known]


def _blend(frac: float) -> str:
    """Interpolate blue -> orange for numeric color_by values."""
    a = (31, 119, 180)
    b = (255, 127, 14)
    frac = min(max(frac, 0.0), 1.0)
    rgb = tuple(round(a[i] + (b[i] - a[i]) * frac) for i in range(3))
    return "#%02x%02x%02x" % rgb


def _point_colors(study: Study, series: SeriesSpec, ids: list[int]) -> dict[int, str]:
    base = PALETTE[series.color]
    if series.color_by is None:
        return {i: base for i in ids}
    if series.color_by == "feasibility":
        infeasible = PALETTE["red"] if series.color != "red" else PALETTE[_INFEASIBLE_FALLBACK]
        return {
            i: (base if is_feasible(study, i) else infeasible) for i in ids
        }
    values = {d: v for d, v in _series_values(study, series.color_by)}
    present = [values[i] for i in ids if i in values]
    if not present:
        return {i: base for i in ids}
    lo, hi = min(present), max(present)
    span = hi - lo
    colors: dict[int, str] = {}
    for i in ids:
        if i not in values:
            colors[i] = PALETTE["gray"]
        elif span == 0:
            colors[i] = _blend(0.0)
        else:
            colors[i] = _blend((values[i] - lo) / span)
    return colors


def _render_relation(spec: PlotSpec, study: Study) -> list[str]:
    data = spec.data_series()
    xs_all: list[float] = []
    ys_all: list[float] = []
    resolved: list[tuple[SeriesSpec, list[tuple[int, float, float]]]] = []
    for s in data:
        x_col, y_col = s.columns
        x_vals = {d: v for d, v in _series_values(study, x_col)}
        y_vals = {d: v for d, v in _series_values(study, y_col)}
        pts = [
            (i, x_vals[i], y_vals[i])
            for i in _select_ids(study, s)
            if i in x_vals and i in y_vals
        ]
        if not pts:
            raise EmptySeriesError(f"series {s.name!r} has no plottable points")
        xs_all.extend(p[1] for p in pts)
        ys_all.extend(p[2] for p in pts)
        resolved.append((s, pts))

    x_scale = _Scale(min(xs_all), max(xs_all), _LEFT, _RIGHT)
    y_scale = _Scale(min(ys_all), max(ys_all), _BOTTOM, _TOP)

    out = [
        _line(_LEFT, _BOTTOM, _RIGHT, _BOTTOM),
        _line(_LEFT, _TOP, _LEFT, _BOTTOM),
    ]
    for tick in x_scale.ticks():
        x = x_scale(tick)
        out.append(_line(x, _BOTTOM, x, _BOTTOM + 5))
        out.append(_text(x, _BOTTOM + 18, fmt_label(tick)))
    for tick in y_scale.ticks():
        y = y_scale(tick)
        out.append(_line(_LEFT, y, _LEFT - 5, y))
        out.append(_text(_LEFT - 8, y + 4, fmt_label(tick), anchor="end"))
    out.extend(_axis_captions(spec, x_default=data[0].columns[0]))

    best_ids = {a.design_id for a in spec.annotations if a.kind == "best_design"}
    marker_at: list[tuple[float, float, int]] = []
    for s, pts in resolved:
        colors = _point_colors(study, s, [p[0] for p in pts])
        for design_id, xv, yv in pts:
            x, y = x_scale(xv), y_scale(yv)
            out.append(
                f'<circle class="point-data" cx="{fmt_px(x)}" cy="{fmt_px(y)}" '
                f'r="4" fill="{colors[design_id]}" fill-opacity="0.85"/>'
            )
            if design_id in best_ids:
                marker_at.append((x, y, design_id))
    for x, y, design_id in marker_at:
        out.extend(_ring(x, y, f"best #{design_id}"))
    out.extend(_annotation_texts(spec.annotations))

    if spec.legend:
        rows: list[tuple[str, str, bool]] = []
        for s, _pts in resolved:
            if s.color_by == "feasibility":
                infeasible = (
                    PALETTE["red"] if s.color != "red" else PALETTE[_INFEASIBLE_FALLBACK]
                )
                rows.append((f"{s.name} (feasible)", PALETTE[s.color], False))
                rows.append((f"{s.name} (infeasible)", infeasible, False))
            else:
                rows.append((s.name, PALETTE[s.color], False))
        out.extend(_legend(rows))
    return out


# --- parallel ----------------------------------------------------------


def _category_code(study: Study, column: str, value) -> float | None:
    variable = study.variable(column)
    if value in variable.categories:
        return float(variable.categories.index(value))
    return None


def _parallel_value(study: Study, column: str, value) -> float | None:
    if isinstance(value, bool) or value is None:
        return None
    if isinstance(value, (int, float)):
        return float(value)
    if study.column_kind(column) == "categorical":
        return _category_code(study, column, value)
    return None


def _render_parallel(spec: PlotSpec, study: Study) -> list[str]:
    columns = spec.parallel_axes
    k = len(columns)
    axis_x = [_LEFT + i * (_RIGHT - _LEFT) / (k - 1) for i in range(k)]
    if spec.axes:
        axis_normalized = [a.normalized for a in spec.axes]
    else:
        axis_normalized = [False] * k

    raw: dict[str, dict[int, float]] = {}
    for col in columns:
        per: dict[int, float] = {}
        for d in study.designs:
            v = _parallel_value(study, col, d.values.get(col))
            if v is not None:
                per[d.design_id] = v
        if not per:
            raise EmptySeriesError(f"axis {col!r} has no plottable values")
        raw[col] = per

    ranges = {c: (min(raw[c].values()), max(raw[c].values())) for c in columns}
    global_lo = min(r[0] for r in ranges.values())
    global_hi = max(r[1] for r in ranges.values())
    global_scale = _Scale(global_lo, global_hi, _BOTTOM, _TOP)

    def y_for(i: int, col: str, v: float) -> float:
        if axis_normalized[i]:
            lo, hi = ranges[col]
            frac = 0.0 if hi == lo else (v - lo) / (hi - lo)
            return _BOTTOM - frac * (_BOTTOM - _TOP)
        return global_scale(v)

    out: list[str] = []
    for i, col in enumerate(columns):
        out.append(_line(axis_x[i], _TOP, axis_x[i], _BOTTOM, cls="parallel-axis"))
        label = spec.axes[i].label if i < len(spec.axes) else col
        out.append(_text(axis_x[i], CANVAS_H - 38, label, size=11))
        if axis_normalized[i]:
            lo, hi = ranges[col]
            out.append(_text(axis_x[i], _TOP - 6, fmt_label(hi), size=9))
            out.append(_text(axis_x[i], _BOTTOM + 14, fmt_label(lo), size=9))
    if not all(axis_normalized):
        for tick in global_scale.ticks():
            y = global_scale(tick)
            out.append(_line(_LEFT - 5, y, _LEFT, y))
            out.append(_text(_LEFT - 8, y + 4, fmt_label(tick), anchor="end"))

    best_ids = {a.design_id for a in spec.annotations if a.kind == "best_design"}
    series_color = PALETTE[spec.series[0].color]
    drew_any = False
    for d in study.designs:
        pts = []
        complete = True
        for i, col in enumerate(columns):
            v = raw[col].get(d.design_id)
            if v is None:
                complete = False
                break
            pts.append((axis_x[i], y_for(i, col, v)))
        if not complete:
            continue
        drew_any = True
        if d.design_id in best_ids:
            continue  # drawn last, on top
        out.append(_polyline(pts, series_color, 1.0, "design-line", False, opacity=0.45))
    for d in study.designs:
        if d.design_id not in best_ids:
            continue
        pts = []
        complete = True
        for i, col in enumerate(columns):
            v = raw[col].get(d.design_id)
            if v is None:
                complete = False
                break
            pts.append((axis_x[i], y_for(i, col, v)))
        if not complete:
            continue
        out.append(_polyline(pts, PALETTE["red"], 3.0, "best-design-line", False))
        for x, y in pts:
            out.append(
                f'<circle class="best-design-marker" cx="{fmt_px(x)}" '
                f'cy="{fmt_px(y)}" r="5" fill="none" stroke="#111111" '
                f'stroke-width="2"/>'
            )
    if not drew_any:
        raise EmptySeriesError("no design has values on every plotted axis")

    out.extend(_annotation_texts(spec.annotations))
    if spec.legend:
        rows = [(spec.series[0].name, series_color, False)]
        if best_ids:
            rows.append(("best design", PALETTE["red"], False))
        out.extend(_legend(rows))
    return out
