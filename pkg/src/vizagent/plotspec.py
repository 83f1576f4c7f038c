"""Declarative plot specification: grammar, parsing, guideline checks.

Model output is a fenced ``plotspec`` block holding a JSON object. Parsing
it into typed dataclasses separates two failure classes: malformed shape
(SpecParseError) and well-formed but rule-breaking content
(SpecInvariantError). Guideline compliance is a third, softer layer:
check_guidelines returns violations instead of raising, because a spec
that breaks an expert rule is still renderable and the violations are part
of the product's answer.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

from .analysis import AnalysisReport
from .errors import (
    NoSpecBlockError,
    ReportMismatchError,
    SpecInvariantError,
    SpecParseError,
)
from .prompting import GuidelineSet, guidelines_for
from .router import RequestClass

log = logging.getLogger(__name__)

# Symbolic palette: specs name colors, the renderer resolves them. Keeps
# model output free of raw hex values.
PALETTE: dict[str, str] = {
    "blue": "#1f77b4",
    "orange": "#ff7f0e",
    "green": "#2ca02c",
    "red": "#d62728",
    "purple": "#9467bd",
    "gray": "#7f7f7f",
    "teal": "#17becf",
    "gold": "#bcbd22",
}

STYLES = ("solid", "dashed")
ROLES = ("data", "running_best")
SERIES_AXES = ("left", "right")
AXIS_SIDES = ("left", "right", "bottom")
SELECTS = ("all", "feasible", "infeasible", "ids")
ANNOTATION_KINDS = ("best_design", "text")
POSITIONS = ("top_left", "top_right", "bottom_left", "bottom_right")


@dataclass(frozen=True)
class DesignSelector:
    select: str
    ids: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if self.select not in SELECTS:
            raise SpecInvariantError(f"unknown design selector {self.select!r}")
        if self.select == "ids" and not self.ids:
            raise SpecInvariantError("selector 'ids' requires a non-empty id list")
        if self.select != "ids" and self.ids:
            raise SpecInvariantError(f"selector {self.select!r} takes no id list")


@dataclass(frozen=True)
class SeriesSpec:
    name: str
    columns: tuple[str, ...]
    style: str
    color: str
    role: str
    axis: str = "left"
    points: tuple[tuple[float, float], ...] | None = None
    designs: DesignSelector | None = None
    color_by: str | None = None

    def __post_init__(self) -> None:
        if not self.name:
            raise SpecInvariantError("series name must be non-empty")
        if not self.columns and self.points is None and self.designs is None:
            raise SpecInvariantError(
                f"series {self.name!r} is empty: no columns, points or designs"
            )
        if self.style not in STYLES:
            raise SpecInvariantError(f"series {self.name!r}: unknown style {self.style!r}")
        if self.color not in PALETTE:
            raise SpecInvariantError(
                f"series {self.name!r}: color {self.color!r} is not a palette key"
            )
        if self.role not in ROLES:
            raise SpecInvariantError(f"series {self.name!r}: unknown role {self.role!r}")
        if self.axis not in SERIES_AXES:
            raise SpecInvariantError(f"series {self.name!r}: unknown axis {self.axis!r}")


@dataclass(frozen=True)
class AxisSpec:
    label: str
    normalized: bool
    side: str

    def __post_init__(self) -> None:
        if self.side not in AXIS_SIDES:
            raise SpecInvariantError(f"axis {self.label!r}: unknown side {self.side!r}")


@dataclass(frozen=True)
class Annotation:
    kind: str
    design_id: int | None = None
    column: str | None = None
    text: str | None = None
    position: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in ANNOTATION_KINDS:
            raise SpecInvariantError(f"unknown annotation kind {self.kind!r}")
        if self.kind == "best_design" and self.design_id is None:
            raise SpecInvariantError("best_design annotation requires design_id")
        if self.kind == "text" and not self.text:
            raise SpecInvariantError("text annotation requires text")
        if self.position is not None and self.position not in POSITIONS:
            raise SpecInvariantError(f"unknown annotation position {self.position!r}")


@dataclass(frozen=True)
class PlotSpec:
    kind: RequestClass
    title: str
    series: tuple[SeriesSpec, ...]
    axes: tuple[AxisSpec, ...]
    annotations: tuple[Annotation, ...] = ()
    legend: bool = False
    parallel_axes: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        if self.kind not in (
            RequestClass.HISTORY,
            RequestClass.RELATION2D,
            RequestClass.PARALLEL,
        ):
            raise SpecInvariantError(f"unsupported plot kind {self.kind.value!r}")
        if not self.series:
            raise SpecInvariantError("spec must declare at least one series")
        sides = [a.side for a in self.axes]
        if len(sides) != len(set(sides)) and self.kind is not RequestClass.PARALLEL:
            raise SpecInvariantError("duplicate axis side")
        if self.kind is RequestClass.RELATION2D:
            if sorted(sides) != ["bottom", "left"]:
                raise SpecInvariantError(
                    "relation plot requires exactly two position axes: bottom and left"
                )
            for s in self.series:
                if s.role == "data" and len(s.columns) != 2:
                    raise SpecInvariantError(
                        f"relation series {s.name!r} must reference exactly 2 columns"
                    )
        if self.kind is RequestClass.PARALLEL:
            if len(self.parallel_axes) < 3:
                raise SpecInvariantError("parallel plot requires at least 3 axes")
            if len(set(self.parallel_axes)) != len(self.parallel_axes):
                raise SpecInvariantError("parallel_axes must be distinct")
            if self.axes and len(self.axes) != len(self.parallel_axes):
                raise SpecInvariantError(
                    "axes entries must match parallel_axes one to one"
                )
        else:
            if self.parallel_axes:
                raise SpecInvariantError("parallel_axes only apply to parallel plots")
            for s in self.series:
                if s.axis not in sides and s.points is None:
                    raise SpecInvariantError(
                        f"series {s.name!r} targets axis {s.axis!r} "
                        "but no such axis is declared"
                    )

    def data_series(self) -> tuple[SeriesSpec, ...]:
        return tuple(s for s in self.series if s.role == "data")

    def columns_used(self) -> tuple[str, ...]:
        seen: list[str] = []
        for s in self.series:
            for c in s.columns:
                if c not in seen:
                    seen.append(c)
            if s.color_by and s.color_by != "feasibility" and s.color_by not in seen:
                seen.append(s.color_by)
        for c in self.parallel_axes:
            if c not in seen:
                seen.append(c)
        for a in self.annotations:
            if a.column and a.column not in seen:
                seen.append(a.column)
        return tuple(seen)


@dataclass(frozen=True)
class Violation:
    rule_id: str
    severity: str
    message: str
    element: str

    def is_error(self) -> bool:
        return self.severity == "error"


FENCE_TAG = "plotspec"


def extract_fenced_blocks(text: str, tag: str = FENCE_TAG) -> list[tuple[int, str]]:
    """Return (start_line, body) for each fenced block with the given tag."""
    blocks: list[tuple[int, str]] = []
    lines = text.splitlines()
    i = 0
    while i < len(lines):
        if lines[i].strip() == f"```{tag}":
            body: list[str] = []
            for j in range(i + 1, len(lines)):
                if lines[j].strip() == "```":
                    blocks.append((i + 1, "\n".join(body)))
                    i = j
                    break
                body.append(lines[j])
            else:
                raise SpecParseError(
                    f"unterminated {tag} fence", line=i + 1, column=1
                )
        i += 1
    return blocks


def _require(payload: dict, key: str, kind, context: str):
    if key not in payload:
        raise SpecParseError(f"{context}: missing required key {key!r}")
    value = payload[key]
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise SpecParseError(f"{context}: {key!r} must be a number")
        return value
    if not isinstance(value, kind) or (kind is not bool and isinstance(value, bool)):
        raise SpecParseError(f"{context}: {key!r} must be {kind.__name__}")
    return value


def _str_list(value, context: str) -> tuple[str, ...]:
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        raise SpecParseError(f"{context} must be a list of strings")
    return tuple(value)


def _series_from_dict(payload, index: int) -> SeriesSpec:
    ctx = f"series[{index}]"
    if not isinstance(payload, dict):
        raise SpecParseError(f"{ctx} must be an object")
    points = None
    if payload.get("points") is not None:
        raw = payload["points"]
        if not isinstance(raw, list):
            raise SpecParseError(f"{ctx}: points must be a list of [x, y] pairs")
        pts = []
        for p in raw:
            if (
                not isinstance(p, list)
                or len(p) != 2
                or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in p)
            ):
                raise SpecParseError(f"{ctx}: points must be a list of [x, y] pairs")
            pts.append((float(p[0]), float(p[1])))
        points = tuple(pts)
    designs = None
    if payload.get("designs") is not None:
        raw = payload["designs"]
        if not isinstance(raw, dict) or not isinstance(raw.get("select"), str):
            raise SpecParseError(f"{ctx}: designs must be an object with 'select'")
        ids = raw.get("ids", [])
        if not isinstance(ids, list) or not all(
            isinstance(v, int) and not isinstance(v, bool) for v in ids
        ):
            raise SpecParseError(f"{ctx}: designs.ids must be a list of integers")
        designs = DesignSelector(select=raw["select"], ids=tuple(ids))
    color_by = payload.get("color_by")
    if color_by is not None and not isinstance(color_by, str):
        raise SpecParseError(f"{ctx}: color_by must be a string")
    return SeriesSpec(
        name=_require(payload, "name", str, ctx),
        columns=_str_list(payload.get("columns", []), f"{ctx}: columns"),
        style=_require(payload, "style", str, ctx),
        color=_require(payload, "color", str, ctx),
        role=_require(payload, "role", str, ctx),
        axis=payload.get("axis", "left"),
        points=points,
        designs=designs,
        color_by=color_by,
    )


def _axis_from_dict(payload, index: int) -> AxisSpec:
    ctx = f"axes[{index}]"
    if not isinstance(payload, dict):
        raise SpecParseError(f"{ctx} must be an object")
    return AxisSpec(
        label=_require(payload, "label", str, ctx),
        normalized=_require(payload, "normalized", bool, ctx),
        side=_require(payload, "side", str, ctx),
    )


def _annotation_from_dict(payload, index: int) -> Annotation:
    ctx = f"annotations[{index}]"
    if not isinstance(payload, dict):
        raise SpecParseError(f"{ctx} must be an object")
    design_id = payload.get("design_id")
    if design_id is not None and (
        isinstance(design_id, bool) or not isinstance(design_id, int)
    ):
        raise SpecParseError(f"{ctx}: design_id must be an integer")
    for key in ("column", "text", "position"):
        if payload.get(key) is not None and not isinstance(payload[key], str):
            raise SpecParseError(f"{ctx}: {key} must be a string")
    return Annotation(
        kind=_require(payload, "kind", str, ctx),
        design_id=design_id,
        column=payload.get("column"),
        text=payload.get("text"),
        position=payload.get("position"),
    )


def spec_from_dict(payload: dict) -> PlotSpec:
    if not isinstance(payload, dict):
        raise SpecParseError("plot spec must be a JSON object")
    kind_name = _require(payload, "kind", str, "spec")
    try:
        kind = RequestClass(kind_name)
    except ValueError:
        raise SpecParseError(f"spec: unknown kind {kind_name!r}") from None
    raw_series = payload.get("series")
    if not isinstance(raw_series, list):
        raise SpecParseError("spec: 'series' must be a list")
    raw_axes = payload.get("axes", [])
    if not isinstance(raw_axes, list):
        raise SpecParseError("spec: 'axes' must be a list")
    raw_annotations = payload.get("annotations", [])
    if not isinstance(raw_annotations, list):
        raise SpecParseError("spec: 'annotations' must be a list")
    legend = payload.get("legend", False)
    if not isinstance(legend, bool):
        raise SpecParseError("spec: 'legend' must be a boolean")
    return PlotSpec(
        kind=kind,
        title=_require(payload, "title", str, "spec"),
        series=tuple(_series_from_dict(s, i) for i, s in enumerate(raw_series)),
        axes=tuple(_axis_from_dict(a, i) for i, a in enumerate(raw_axes)),
        annotations=tuple(
            _annotation_from_dict(a, i) for i, a in enumerate(raw_annotations)
        ),
        legend=legend,
        parallel_axes=_str_list(
            payload.get("parallel_axes", []), "spec: parallel_axes"
        ),
    )


def parse_llm_output(text: str) -> PlotSpec:
    """Extract and parse the first fenced plotspec block in completion text.

    Extra blocks are ignored with a logged warning; surrounding prose is
    always ignored.
    """
    blocks = extract_fenced_blocks(text)
    if not blocks:
        raise NoSpecBlockError("completion contains no fenced plotspec block")
    if len(blocks) > 1:
        log.warning(
            "completion contains %d plotspec blocks; using the first", len(blocks)
        )
    start_line, body = blocks[0]
    try:
        payload = json.loads(body)
    except json.JSONDecodeError as exc:
        raise SpecParseError(
            f"invalid JSON in plotspec block: {exc.msg}",
            line=start_line + exc.lineno,
            column=exc.colno,
        ) from exc
    return spec_from_dict(payload)


def spec_to_dict(spec: PlotSpec) -> dict:
    def series_dict(s: SeriesSpec) -> dict:
        d = {
            "name": s.name,
            "columns": list(s.columns),
            "style": s.style,
            "color": s.color,
            "role": s.role,
            "axis": s.axis,
        }
        if s.points is not None:
            d["points"] = [[x, y] for x, y in s.points]
        if s.designs is not None:
            d["designs"] = {"select": s.designs.select}
            if s.designs.ids:
                d["designs"]["ids"] = list(s.designs.ids)
        if s.color_by is not None:
            d["color_by"] = s.color_by
        return d

    def annotation_dict(a: Annotation) -> dict:
        d: dict = {"kind": a.kind}
        for key in ("design_id", "column", "text", "position"):
            value = getattr(a, key)
            if value is not None:
                d[key] = value
        return d

    payload: dict = {
        "kind": spec.kind.value,
        "title": spec.title,
        "series": [series_dict(s) for s in spec.series],
        "axes": [
            {"label": a.label, "normalized": a.normalized, "side": a.side}
            for a in spec.axes
        ],
        "annotations": [annotation_dict(a) for a in spec.annotations],
        "legend": spec.legend,
    }
    if spec.parallel_axes:
        payload["parallel_axes"] = list(spec.parallel_axes)
    return payload


def serialize_spec(spec: PlotSpec) -> str:
    """Render a spec back to a fenced block; parse_llm_output inverts this."""
    body = json.dumps(spec_to_dict(spec), indent=2, sort_keys=True)
    return f"```{FENCE_TAG}\n{body}\n```"


def _has_best_design(spec: PlotSpec) -> bool:
    return any(a.kind == "best_design" for a in spec.annotations)


def _check_history(
    spec: PlotSpec, report: AnalysisReport, rules: GuidelineSet
) -> list[Violation]:
    violations: list[Violation] = []
    data = spec.data_series()

    # A best design can only be demanded when the report defines one.
    if report.best and not _has_best_design(spec):
        violations.append(_violation(rules, "H1", "no best-design annotation", "annotations"))
    if len(data) > 2:
        violations.append(
            _violation(rules, "H2", f"{len(data)} data series plotted", "series")
        )
    for s in data:
        status = report.convergence_for(s.columns[0]) if s.columns else None
        if status is None:
            continue
        expected = "solid" if status.converged else "dashed"
        if s.style != expected:
            violations.append(
                _violation(
                    rules,
                    "H3",
                    f"column {s.columns[0]!r} is "
                    f"{'converged' if status.converged else 'not converged'} "
                    f"but styled {s.style}",
                    f"series {s.name!r}",
                )
            )
    if len(data) == 2 and data[0].axis == data[1].axis:
        violations.append(
            _violation(
                rules,
                "H4",
                "two objectives share one axis side",
                f"series {data[0].name!r}, {data[1].name!r}",
            )
        )
    overlay_columns = {
        s.columns[0] for s in spec.series if s.role == "running_best" and s.columns
    }
    for s in data:
        if not s.columns or s.columns[0] in overlay_columns:
            continue
        info = report.column_info(s.columns[0])
        if info is not None and info.role != "objective":
            continue  # the overlay rule speaks about objectives only
        violations.append(
            _violation(
                rules,
                "H5",
                f"no running-best overlay for column {s.columns[0]!r}",
                f"series {s.name!r}",
            )
        )
    distinct = len({s.color for s in data}) == len(data)
    if not spec.legend or not distinct:
        detail = "legend missing" if not spec.legend else "series colors not distinct"
        violations.append(_violation(rules, "H6", detail, "spec"))
    return violations


def _check_relation(
    spec: PlotSpec, report: AnalysisReport, rules: GuidelineSet
) -> list[Violation]:
    violations: list[Violation] = []
    data = spec.data_series()

    for s in data:
        for col in s.columns:
            info = report.column_info(col)
            if info is not None and info.kind == "categorical":
                violations.append(
                    _violation(
                        rules,
                        "R1",
                        f"categorical column {col!r} on a position axis",
                        f"series {s.name!r}",
                    )
                )
    if not any(s.color_by for s in data):
        violations.append(_violation(rules, "R2", "no color encoding declared", "series"))
    if report.best and not _has_best_design(spec):
        violations.append(_violation(rules, "R3", "no best-design annotation", "annotations"))

    pair = data[0].columns if data and len(data[0].columns) == 2 else None
    if pair:
        corr = report.correlation_for(pair[0], pair[1])
        if corr is not None and corr.r is not None:
            mentioned = any(
                a.kind == "text" and a.text and "correlation" in a.text.lower()
                for a in spec.annotations
            )
            if not mentioned:
                violations.append(
                    _violation(
                        rules,
                        "R4",
                        f"correlation of {pair[0]!r} and {pair[1]!r} is defined "
                        "but not annotated",
                        "annotations",
                    )
                )
    return violations


def _check_parallel(
    spec: PlotSpec, report: AnalysisReport, rules: GuidelineSet
) -> list[Violation]:
    violations: list[Violation] = []
    if report.scale_disparity:
        off = [a.label for a in spec.axes if not a.normalized]
        if off or not spec.axes:
            violations.append(
                _violation(
                    rules,
                    "P1",
                    "scale disparity present but axes not normalized: "
                    + (", ".join(off) if off else "no axes declared"),
                    "axes",
                )
            )
    if report.best and not _has_best_design(spec):
        violations.append(_violation(rules, "P2", "no best-design annotation", "annotations"))
    if not spec.legend:
        violations.append(_violation(rules, "P3", "legend missing", "spec"))
    return violations


def _violation(rules: GuidelineSet, rule_id: str, detail: str, element: str) -> Violation:
    rule = rules.rule(rule_id)
    return Violation(
        rule_id=rule_id,
        severity=rule.severity,
        message=f"{rule.text} ({detail})",
        element=element,
    )


def check_guidelines(spec: PlotSpec, report: AnalysisReport) -> list[Violation]:
    """Evaluate every codified rule for the spec's kind against the report.

    Returns an empty list iff the spec is fully compliant; ordering follows
    rule ids, so results are stable for identical inputs.
    """
    known = set(report.column_names())
    missing = [c for c in spec.columns_used() if c not in known]
    if missing:
        raise ReportMismatchError(
            f"spec references columns absent from the report: {', '.join(missing)}"
        )
    rules = guidelines_for(spec.kind)
    if spec.kind is RequestClass.HISTORY:
        found = _check_history(spec, report, rules)
    elif spec.kind is RequestClass.RELATION2D:
        found = _check_relation(spec, report, rules)
    else:
        found = _check_parallel(spec, report, rules)
    return sorted(found, key=lambda v: (v.rule_id, v.element))


def repair_prompt(spec: PlotSpec, violations: list[Violation]) -> str:
    """Addendum for one regeneration attempt, quoting each violated rule."""
    if not violations:
        raise ValueError("repair_prompt requires at least one violation")
    rules = guidelines_for(spec.kind)
    lines = [
        "The previous plot specification violated these guidelines. "
        "Produce a corrected specification that satisfies every one:"
    ]
    ordered = sorted(violations, key=lambda v: (v.rule_id, v.element))
    for i, v in enumerate(ordered, start=1):
        lines.append(f"{i}. {v.rule_id} ({v.element}): {rules.rule(v.rule_id).text}")
    return "\n".join(lines)
