"""Codified simulation-expert rules as pure, deterministic analysis functions.

Every operation here is a referentially transparent function over immutable
inputs, so the structured `AnalysisReport` they feed is byte-stable and safe
to inject into a prompt: same study + same request = same report text.

The convergence criterion is a trailing-window relative range: over the last
W points, (max - min) / max(largest magnitude in window, abs_floor). A series
converged when that ratio drops below rel_tol and at least W points exist.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .errors import (
    NoEligibleDesignError,
    NonFiniteValueError,
    UnknownColumnError,
)
from .study import MAXIMIZE, MINIMIZE, Study, column_series, is_feasible


@dataclass(frozen=True)
class ConvergenceParams:
    """Trailing-window stability criterion configuration."""

    window: int = 10
    rel_tol: float = 0.01
    abs_floor: float = 1e-12

    def __post_init__(self):
        if self.window < 2:
            raise ValueError("window must be >= 2")
        if self.rel_tol <= 0:
            raise ValueError("rel_tol must be positive")
        if self.abs_floor <= 0:
            raise ValueError("abs_floor must be positive")


@dataclass(frozen=True)
class ConvergenceStatus:
    column: str
    converged: bool
    window_used: int
    rel_range: float


@dataclass(frozen=True)
class BestDesign:
    objective: str
    design_id: int
    value: float
    feasible_only: bool


@dataclass(frozen=True)
class CorrelationResult:
    """Pearson coefficient between two columns; r is None when undefined
    (zero variance on either side), never coerced to 0."""

    x: str
    y: str
    r: float | None
    n: int


@dataclass(frozen=True)
class ColumnInfo:
    name: str
    role: str  # variable | objective | response
    kind: str  # numeric | categorical
    direction: str | None = None  # objectives only


@dataclass(frozen=True)
class AnalysisReport:
    """Structured output of the expert rules, ready for prompt injection."""

    study_id: str
    columns: tuple[ColumnInfo, ...]  # requested columns plus all objectives
    convergence: tuple[ConvergenceStatus, ...]
    best: tuple[BestDesign, ...]
    feasible_count: int
    infeasible_count: int
    scale_disparity: bool
    disparity_pairs: tuple[tuple[str, str], ...]
    correlations: tuple[CorrelationResult, ...]
    rendered_text: str = ""

    def column_names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.columns)

    def column_info(self, name: str) -> ColumnInfo | None:
        for c in self.columns:
            if c.name == name:
                return c
        return None

    def convergence_for(self, column: str) -> ConvergenceStatus | None:
        for status in self.convergence:
            if status.column == column:
                return status
        return None

    def best_for(self, objective: str, feasible_only: bool) -> BestDesign | None:
        for b in self.best:
            if b.objective == objective and b.feasible_only == feasible_only:
                return b
        return None

    def correlation_for(self, x: str, y: str) -> CorrelationResult | None:
        for c in self.correlations:
            if {c.x, c.y} == {x, y}:
                return c
        return None

    def to_dict(self) -> dict:
        return {
            "study_id": self.study_id,
            "columns": [
                {"name": c.name, "role": c.role, "kind": c.kind, "direction": c.direction}
                for c in self.columns
            ],
            "convergence": [
                {
                    "column": s.column,
                    "converged": s.converged,
                    "window_used": s.window_used,
                    "rel_range": s.rel_range,
                }
                for s in self.convergence
            ],
            "best": [
                {
                    "objective": b.objective,
                    "design_id": b.design_id,
                    "value": b.value,
                    "feasible_only": b.feasible_only,
                }
                for b in self.best
            ],
            "feasible_count": self.feasible_count,
            "infeasible_count": self.infeasible_count,
            "scale_disparity": self.scale_disparity,
            "disparity_pairs": [list(p) for p in self.disparity_pairs],
            "correlations": [
                {"x": c.x, "y": c.y, "r": c.r, "n": c.n} for c in self.correlations
            ],
            "rendered_text": self.rendered_text,
        }


def _require_finite(series) -> None:
    for v in series:
        if not math.isfinite(v):
            raise NonFiniteValueError(f"series contains non-finite value {v!r}")


def assess_convergence(
    series: list[float], params: ConvergenceParams, column: str = ""
) -> ConvergenceStatus:
    """Decide whether a value history has reached a stable state.

    The relative range is reported even when the series is shorter than the
    window (over the trailing min(len, W) points); `converged` additionally
    requires at least W points.
    """
    if not series:
        raise ValueError("series must be non-empty")
    _require_finite(series)
    window_used = min(len(series), params.window)
    tail = series[-window_used:]
    span = max(tail) - min(tail)
    denom = max(max(abs(v) for v in tail), params.abs_floor)
    rel_range = span / denom
    converged = len(series) >= params.window and rel_range <= params.rel_tol
    return ConvergenceStatus(
        column=column, converged=converged, window_used=window_used, rel_range=rel_range
    )


def running_best(series: list[float], direction: str) -> list[float]:
    """Prefix optimum of a series: element i is the best of series[0..i]."""
    if not series:
        raise ValueError("series must be non-empty")
    _require_finite(series)
    pick = min if direction == MINIMIZE else max
    out: list[float] = []
    best = series[0]
    for v in series:
        best = pick(best, v)
        out.append(best)
    return out


def best_design(study: Study, objective: str, feasible_only: bool = False) -> BestDesign:
    """Best design for one objective, ties broken by the smallest design_id.

    With feasible_only, designs failing any constraint are excluded; if that
    leaves nothing, NoEligibleDesignError is raised.
    """
    direction = study.objective(objective).direction
    series, _ = column_series(study, objective)
    best: tuple[int, float] | None = None
    for design_id, value in series:
        if feasible_only and not is_feasible(study, design_id):
            continue
        if best is None:
            best = (design_id, value)
        elif direction == MINIMIZE and value < best[1]:
            best = (design_id, value)
        elif direction == MAXIMIZE and value > best[1]:
            best = (design_id, value)
    if best is None:
        raise NoEligibleDesignError(
            f"no eligible design for objective {objective!r}"
            + (" (all designs infeasible)" if feasible_only else "")
        )
    return BestDesign(
        objective=objective, design_id=best[0], value=best[1], feasible_only=feasible_only
    )


def pearson_correlation(
    x: list[float | None], y: list[float | None], x_name: str = "x", y_name: str = "y"
) -> CorrelationResult:
    """Product-moment correlation with pairwise deletion of missing values."""
    if len(x) != len(y):
        raise ValueError("series must have equal length")
    pairs = [(a, b) for a, b in zip(x, y) if a is not None and b is not None]
    if len(pairs) < 2:
        raise ValueError("need at least 2 paired values")
    _require_finite([a for a, _ in pairs])
    _require_finite([b for _, b in pairs])
    n = len(pairs)
    mean_x = sum(a for a, _ in pairs) / n
    mean_y = sum(b for _, b in pairs) / n
    sxx = sum((a - mean_x) ** 2 for a, _ in pairs)
    syy = sum((b - mean_y) ** 2 for _, b in pairs)
    sxy = sum((a - mean_x) * (b - mean_y) for a, b in pairs)
    if sxx == 0.0 or syy == 0.0:
        return CorrelationResult(x=x_name, y=y_name, r=None, n=n)
    r = sxy / math.sqrt(sxx * syy)
    r = max(-1.0, min(1.0, r))
    return CorrelationResult(x=x_name, y=y_name, r=r, n=n)


def min_max_normalize(series: list[float]) -> list[float]:
    """Map a series onto [0, 1]; a constant series maps to all zeros so the
    'best' annotation stays on a well-defined band edge."""
    if not series:
        raise ValueError("series must be non-empty")
    _require_finite(series)
    lo, hi = min(series), max(series)
    if hi == lo:
        return [0.0 for _ in series]
    span = hi - lo
    return [(v - lo) / span for v in series]


def detect_scale_disparity(
    series_set: dict[str, list[float]], ratio_threshold: float = 1e3
) -> tuple[bool, list[tuple[str, str]]]:
    """Flag column pairs whose magnitudes differ by more than the threshold.

    Compares max-abs magnitudes pairwise; a pair is offending when the ratio
    of the larger to the smaller strictly exceeds ratio_threshold. Zero-
    magnitude series pair offendingly with any non-zero series.
    """
    if len(series_set) < 2:
        raise ValueError("need at least 2 series")
    magnitudes = {
        name: max((abs(v) for v in values), default=0.0)
        for name, values in series_set.items()
    }
    names = list(series_set)
    offending: list[tuple[str, str]] = []
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            lo, hi = sorted((magnitudes[a], magnitudes[b]))
            if hi == 0.0:
                continue
            if lo == 0.0 or hi / lo > ratio_threshold:
                offending.append((a, b))
    return bool(offending), offending


def _numeric_series(study: Study, column: str) -> list[float]:
    series, _ = column_series(study, column)
    return [v for _, v in series if not isinstance(v, str)]


def _aligned_values(study: Study, column: str) -> list[float | None]:
    out: list[float | None] = []
    for record in study.designs:
        v = record.values[column]
        out.append(None if isinstance(v, str) else v)
    return out


def generate_report(study: Study, request, params: ConvergenceParams | None = None) -> AnalysisReport:
    """Run every codified rule over a study for one classified request.

    Covers all objectives' convergence and best designs, feasibility counts,
    scale disparity across the requested columns, and pairwise correlations
    among the requested numeric columns. The rendered text is a pure function
    of the structured fields.
    """
    params = params or ConvergenceParams()
    requested: tuple[str, ...] = tuple(request.columns)
    for col in requested:
        if not study.has_column(col):
            raise UnknownColumnError(f"study {study.id!r} has no column {col!r}")

    objective_names = [o.name for o in study.objectives]
    covered = list(requested) + [o for o in objective_names if o not in requested]
    columns = tuple(
        ColumnInfo(
            name=c,
            role=study.column_role(c),
            kind=study.column_kind(c),
            direction=(study.objective(c).direction if study.column_role(c) == "objective" else None),
        )
        for c in covered
    )

    numeric_covered = [c for c in covered if study.column_kind(c) == "numeric"]
    convergence = tuple(
        assess_convergence(_numeric_series(study, c), params, column=c)
        for c in numeric_covered
        if _numeric_series(study, c)
    )

    feasibility = [is_feasible(study, d.design_id) for d in study.designs]
    feasible_count = sum(feasibility)
    infeasible_count = len(feasibility) - feasible_count

    best: list[BestDesign] = []
    for o in objective_names:
        if not _numeric_series(study, o):
            continue
        best.append(best_design(study, o, feasible_only=False))
        if feasible_count:
            try:
                best.append(best_design(study, o, feasible_only=True))
            except NoEligibleDesignError:
                pass  # feasible designs exist but none has a value for this objective

    numeric_requested = [c for c in requested if study.column_kind(c) == "numeric"]
    disparity, pairs = False, []
    if len(numeric_requested) >= 2:
        disparity, pairs = detect_scale_disparity(
            {c: _numeric_series(study, c) for c in numeric_requested}
        )

    correlations: list[CorrelationResult] = []
    for i, a in enumerate(numeric_requested):
        for b in numeric_requested[i + 1:]:
            xs, ys = _aligned_values(study, a), _aligned_values(study, b)
            complete = sum(
                1 for va, vb in zip(xs, ys) if va is not None and vb is not None
            )
            if complete < 2:
                # not enough overlap to define r; report it as undefined
                correlations.append(CorrelationResult(x=a, y=b, r=None, n=complete))
            else:
                correlations.append(pearson_correlation(xs, ys, a, b))

    report = AnalysisReport(
        study_id=study.id,
        columns=columns,
        convergence=convergence,
        best=tuple(best),
        feasible_count=feasible_count,
        infeasible_count=infeasible_count,
        scale_disparity=disparity,
        disparity_pairs=tuple(pairs),
        correlations=tuple(correlations),
    )
    return replace(report, rendered_text=render_report_text(report))


def render_report_text(report: AnalysisReport) -> str:
    """Deterministic plain-text rendering with a stable section order:
    Convergence, Best designs, Feasibility, Scale, Correlations."""
    lines: list[str] = [f"Analysis of study '{report.study_id}'"]

    lines.append("")
    lines.append("Convergence:")
    if report.convergence:
        for s in report.convergence:
            verdict = "converged" if s.converged else "not converged"
            lines.append(
                f"- {s.column}: {verdict} "
                f"(relative range {_fmt(s.rel_range)} over last {s.window_used} designs)"
            )
    else:
        lines.append("- no objective series available")

    lines.append("")
    lines.append("Best designs:")
    for b in report.best:
        scope = "feasible designs only" if b.feasible_only else "all designs"
        lines.append(
            f"- {b.objective}: design {b.design_id} with value {_fmt(b.value)} ({scope})"
        )
    if not report.best:
        lines.append("- none identified")

    lines.append("")
    lines.append("Feasibility:")
    lines.append(
        f"- {report.feasible_count} feasible, {report.infeasible_count} infeasible designs"
    )

    lines.append("")
    lines.append("Scale:")
    if report.scale_disparity:
        pair_text = "; ".join(f"{a} vs {b}" for a, b in report.disparity_pairs)
        lines.append(f"- magnitude disparity detected between: {pair_text}")
        lines.append("- normalize shared axes before plotting these columns together")
    else:
        lines.append("- no magnitude disparity among the requested columns")

    lines.append("")
    lines.append("Correlations:")
    if report.correlations:
        for c in report.correlations:
            r_text = "undefined (zero variance)" if c.r is None else _fmt(c.r)
            lines.append(f"- r({c.x}, {c.y}) = {r_text} over {c.n} designs")
    else:
        lines.append("- none computed (fewer than two numeric columns requested)")

    return "\n".join(lines) + "\n"


def _fmt(value: float) -> str:
    # Stable short float formatting for report text; never locale-dependent.
    return format(value, ".6g")
