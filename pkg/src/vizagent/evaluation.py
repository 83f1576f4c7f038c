"""Rubric scoring, aggregation, and cross-system comparison tables.

Scores follow a fixed rubric: one validity bit, four binary code-quality
dimensions whose sum is the 0-4 correctness total, and a 0-3 output
quality grade. Aggregation reports mean, sample standard deviation and
mode per scenario, then summarizes across scenarios with an unweighted
mean of scenario means. Improvement percentages compare summary means
rounded to two decimals, i.e. the precision tables report them at.
"""

from __future__ import annotations

import json
import statistics
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

from .analysis import AnalysisReport
from .errors import (
    DuplicateScoreError,
    EmptyInputError,
    GatewayError,
    SchemaError,
    ScoreParseError,
    VizAgentError,
    ZeroBaselineError,
)
from .gateway import BackendConfig, complete
from .plotspec import check_guidelines, extract_fenced_blocks, parse_llm_output
from .prompting import PromptBundle

SYSTEMS = ("proposed", "baseline")
METRICS = ("validity", "correctness", "output_quality")

_BINARY_DIMS = ("efficiency", "documentation", "exception_handling", "cleanliness")


@dataclass(frozen=True)
class RubricScore:
    scenario: str
    assessor: str
    system: str
    validity: int
    efficiency: int
    documentation: int
    exception_handling: int
    cleanliness: int
    output_quality: int

    def __post_init__(self) -> None:
        if self.system not in SYSTEMS:
            raise SchemaError(f"unknown system {self.system!r}")
        for dim in ("validity",) + _BINARY_DIMS:
            value = getattr(self, dim)
            if isinstance(value, bool) or value not in (0, 1):
                raise SchemaError(f"{dim} must be 0 or 1, got {value!r}")
        oq = self.output_quality
        if isinstance(oq, bool) or not isinstance(oq, int) or not 0 <= oq <= 3:
            raise SchemaError(f"output_quality must be an integer in 0..3, got {oq!r}")

    @property
    def correctness_total(self) -> int:
        return sum(getattr(self, dim) for dim in _BINARY_DIMS)

    def metric_value(self, metric: str) -> int:
        if metric == "validity":
            return self.validity
        if metric == "correctness":
            return self.correctness_total
        if metric == "output_quality":
            return self.output_quality
        raise KeyError(metric)

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "assessor": self.assessor,
            "system": self.system,
            "validity": self.validity,
            "efficiency": self.efficiency,
            "documentation": self.documentation,
            "exception_handling": self.exception_handling,
            "cleanliness": self.cleanliness,
            "output_quality": self.output_quality,
        }


@dataclass(frozen=True)
class AggregateStats:
    mean: float
    sd: float | None  # None marks the undefined case n = 1
    mode: int
    n: int


def aggregate(scores: list[int]) -> AggregateStats:
    """Mean, sample SD and mode of a score multiset.

    SD uses the n-1 denominator and is None for a single observation.
    Mode ties break toward the smaller value, so a split vote never
    overstates quality.
    """
    if not scores:
        raise EmptyInputError("cannot aggregate an empty score list")
    counts = Counter(scores)
    top = max(counts.values())
    mode = min(v for v, c in counts.items() if c == top)
    sd = statistics.stdev(scores) if len(scores) > 1 else None
    return AggregateStats(
        mean=statistics.fmean(scores), sd=sd, mode=mode, n=len(scores)
    )


def improvement(proposed_mean: float, baseline_mean: float) -> int:
    """Percent improvement of proposed over baseline, nearest integer."""
    if baseline_mean <= 0:
        raise ZeroBaselineError("baseline mean must be positive")
    return int(round(100.0 * (proposed_mean - baseline_mean) / baseline_mean))


@dataclass(frozen=True)
class ScenarioTable:
    scenarios: tuple[str, ...]
    cells: dict  # (system, metric, scenario) -> AggregateStats
    summary: dict  # (system, metric) -> float, unweighted mean of scenario means

    def cell(self, system: str, metric: str, scenario: str) -> AggregateStats:
        return self.cells[(system, metric, scenario)]

    def summary_mean(self, system: str, metric: str) -> float:
        return self.summary[(system, metric)]


def scenario_table(scores: list[RubricScore]) -> ScenarioTable:
    """Aggregate rubric scores into a per-scenario, per-metric grid.

    Each (scenario, assessor, system) triple may appear once. The summary
    row weights every scenario equally regardless of assessor count.
    """
    if not scores:
        raise EmptyInputError("cannot tabulate an empty score list")
    seen: set[tuple[str, str, str]] = set()
    for s in scores:
        key = (s.scenario, s.assessor, s.system)
        if key in seen:
            raise DuplicateScoreError(
                f"duplicate score for scenario {s.scenario!r}, "
                f"assessor {s.assessor!r}, system {s.system!r}"
            )
        seen.add(key)

    scenarios = tuple(sorted({s.scenario for s in scores}))
    cells: dict = {}
    summary: dict = {}
    for system in SYSTEMS:
        for metric in METRICS:
            means = []
            for scenario in scenarios:
                values = [
                    s.metric_value(metric)
                    for s in scores
                    if s.system == system and s.scenario == scenario
                ]
                if not values:
                    continue
                stats = aggregate(values)
                cells[(system, metric, scenario)] = stats
                means.append(stats.mean)
            if means:
                summary[(system, metric)] = statistics.fmean(means)
    return ScenarioTable(scenarios=scenarios, cells=cells, summary=summary)


def summarize_scenario_means(
    proposed: dict[str, float], baseline: dict[str, float]
) -> dict:
    """Cross-system summary from per-scenario metric means.

    Returns the two summary means, the overall improvement computed from
    the summary means rounded to report precision (two decimals), and the
    per-scenario improvements for scenarios present on both sides.
    """
    if not proposed or not baseline:
        raise EmptyInputError("both systems need at least one scenario mean")
    proposed_summary = statistics.fmean(proposed.values())
    baseline_summary = statistics.fmean(baseline.values())
    overall = improvement(round(proposed_summary, 2), round(baseline_summary, 2))
    per_scenario = {
        scenario: improvement(round(proposed[scenario], 2), round(baseline[scenario], 2))
        for scenario in sorted(proposed)
        if scenario in baseline
    }
    return {
        "proposed_summary_mean": proposed_summary,
        "baseline_summary_mean": baseline_summary,
        "overall_improvement_pct": overall,
        "per_scenario_improvement_pct": per_scenario,
    }


# --- serialization ------------------------------------------------------


def parse_scores_jsonl(text: str) -> list[RubricScore]:
    scores = []
    for i, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            payload = json.loads(line)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"scores line {i} is not valid JSON: {exc.msg}") from exc
        if not isinstance(payload, dict):
            raise SchemaError(f"scores line {i} must be a JSON object")
        try:
            scores.append(RubricScore(**payload))
        except TypeError as exc:
            raise SchemaError(f"scores line {i}: {exc}") from exc
    return scores


def load_scores_jsonl(path) -> list[RubricScore]:
    return parse_scores_jsonl(Path(path).read_text(encoding="utf-8"))


def save_scores_jsonl(scores: list[RubricScore], path) -> None:
    lines = [json.dumps(s.to_dict(), sort_keys=True) for s in scores]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def table_to_dict(table: ScenarioTable) -> dict:
    cells: dict = {}
    for (system, metric, scenario), stats in table.cells.items():
        cells.setdefault(system, {}).setdefault(metric, {})[scenario] = {
            "mean": stats.mean,
            "sd": stats.sd,
            "mode": stats.mode,
            "n": stats.n,
        }
    summary: dict = {}
    for (system, metric), mean in table.summary.items():
        summary.setdefault(system, {})[metric] = mean
    return {"scenarios": list(table.scenarios), "cells": cells, "summary": summary}


def _fmt_mean(v: float) -> str:
    return f"{v:.2f}"


def table_csv(table: ScenarioTable) -> str:
    rows = ["system,metric,scenario,mean,sd,mode,n"]
    for system in SYSTEMS:
        for metric in METRICS:
            for scenario in table.scenarios:
                stats = table.cells.get((system, metric, scenario))
                if stats is None:
                    continue
                sd = "" if stats.sd is None else f"{stats.sd:.2f}"
                rows.append(
                    f"{system},{metric},{scenario},{_fmt_mean(stats.mean)},"
                    f"{sd},{stats.mode},{stats.n}"
                )
            if (system, metric) in table.summary:
                rows.append(
                    f"{system},{metric},ALL,"
                    f"{_fmt_mean(table.summary[(system, metric)])},,,"
                )
    return "\n".join(rows) + "\n"


def table_text(table: ScenarioTable) -> str:
    out: list[str] = []
    for system in SYSTEMS:
        present = [m for m in METRICS if (system, m) in table.summary]
        if not present:
            continue
        out.append(f"== {system} ==")
        for metric in present:
            out.append(f"  {metric}:")
            out.append("    scenario    mean    sd      mode  n")
            for scenario in table.scenarios:
                stats = table.cells.get((system, metric, scenario))
                if stats is None:
                    continue
                sd = "  -  " if stats.sd is None else f"{stats.sd:.2f} "
                out.append(
                    f"    {scenario:<11} {_fmt_mean(stats.mean):<7} {sd:<7} "
                    f"{stats.mode:<5} {stats.n}"
                )
            out.append(
                f"    mean of scenario means: "
                f"{_fmt_mean(table.summary[(system, metric)])}"
            )
    return "\n".join(out) + "\n"


# --- AI assessor --------------------------------------------------------

SCORE_FENCE_TAG = "score"

DEFAULT_RUBRIC = """\
Assess the following generated visualization artifact. Score it on:
validity (0 or 1: does it parse and run), efficiency (0/1),
documentation (0/1), exception_handling (0/1), cleanliness (0/1), and
output_quality (integer 0-3: one point each for appropriate data
dimensions, effective visual encoding, and highlighting of critical
information). Respond with exactly one fenced block tagged `score`
containing a JSON object with those six keys."""

_SCORE_KEYS = (
    "validity",
    "efficiency",
    "documentation",
    "exception_handling",
    "cleanliness",
    "output_quality",
)


def parse_score_block(text: str, scenario: str, assessor: str, system: str) -> RubricScore:
    blocks = extract_fenced_blocks(text, tag=SCORE_FENCE_TAG)
    if not blocks:
        raise ScoreParseError("assessment contains no fenced score block")
    _line, body = blocks[0]
    try:
        payload = json.loads(body)
    except json.JSONDecodeError as exc:
        raise ScoreParseError(f"score block is not valid JSON: {exc.msg}") from exc
    if not isinstance(payload, dict):
        raise ScoreParseError("score block must hold a JSON object")
    missing = [k for k in _SCORE_KEYS if k not in payload]
    if missing:
        raise ScoreParseError(f"score block missing keys: {', '.join(missing)}")
    values = {}
    for key in _SCORE_KEYS:
        v = payload[key]
        if isinstance(v, bool) or not isinstance(v, int):
            raise ScoreParseError(f"score key {key!r} must be an integer")
        values[key] = v
    try:
        return RubricScore(scenario=scenario, assessor=assessor, system=system, **values)
    except SchemaError as exc:
        raise ScoreParseError(str(exc)) from exc


def _mock_assess(
    artifact_text: str,
    report: AnalysisReport,
    scenario: str,
    assessor: str,
    system: str,
) -> RubricScore:
    try:
        spec = parse_llm_output(artifact_text)
    except VizAgentError:
        return RubricScore(
            scenario=scenario, assessor=assessor, system=system,
            validity=0, efficiency=0, documentation=0,
            exception_handling=0, cleanliness=0, output_quality=0,
        )
    try:
        violations = check_guidelines(spec, report)
        errors = sum(1 for v in violations if v.is_error())
    except VizAgentError:
        errors = 3
    return RubricScore(
        scenario=scenario, assessor=assessor, system=system,
        validity=1, efficiency=1, documentation=1,
        exception_handling=1, cleanliness=1,
        output_quality=max(0, 3 - errors),
    )


def ai_assessor_score(
    artifact_text: str,
    config: BackendConfig,
    scenario: str = "S0",
    assessor: str = "ai",
    system: str = "proposed",
    report: AnalysisReport | None = None,
    rubric_text: str = DEFAULT_RUBRIC,
) -> RubricScore:
    """Score an artifact with an additional automated assessor.

    Mock mode grades locally and deterministically: a parseable spec gets
    validity 1 and output quality 3 minus the number of error-severity
    guideline violations (floor 0), which requires the analysis report.
    Other modes send the rubric through the configured backend and parse
    the returned fenced score block.
    """
    if config.mode == "mock":
        if report is None:
            raise GatewayError("mock assessor requires the analysis report")
        return _mock_assess(artifact_text, report, scenario, assessor, system)
    assembled = f"{rubric_text}\n\n{artifact_text}"
    bundle = PromptBundle(
        system_text=rubric_text,
        guideline_text="",
        report_text="",
        snippet_texts=(),
        user_text=artifact_text,
        assembled=assembled,
    )
    response = complete(bundle, config)
    return parse_score_block(response.text, scenario, assessor, system)
