"""Deterministic prompt assembly.

The final prompt is a pure function of its parts: system text, the plot
kind's guideline rules, the rendered analysis report, retrieved snippets,
and the user request, joined with fixed section delimiters. Byte-stable
assembly is what makes replay fixtures (keyed by prompt fingerprint) and
prompt-size accounting reliable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

from .analysis import AnalysisReport
from .errors import SchemaError, UnsupportedKindError
from .retrieval import Document
from .router import RequestClass

SECTION_DELIMITER = "### SECTION: "

# Appended to the system section so every backend, live or mock, is held to
# the same closed output format.
OUTPUT_CONTRACT = """\
Respond with exactly one fenced code block tagged `plotspec` containing a
JSON object, for example:

```plotspec
{"kind": "history", "title": "...", "series": [...], "axes": [...],
 "annotations": [...], "legend": true}
```

kind is one of "history", "relation2d", "parallel". Each series needs
name, columns, style ("solid" or "dashed"), color (a palette key), role
("data" or "running_best") and axis ("left" or "right"). Axes entries need
label, normalized (boolean) and side ("left", "right" or "bottom").
Parallel plots list their column order under "parallel_axes". Annotations
are {"kind": "best_design", "design_id": ..., "column": ...} or
{"kind": "text", "text": ..., "position": ...}. Palette keys: blue,
orange, green, red, purple, gray, teal, gold. Prose outside the fenced
block is ignored."""

NO_SNIPPETS_MARKER = "(no examples retrieved)"


@dataclass(frozen=True)
class GuidelineRule:
    rule_id: str
    text: str
    severity: str  # "error" | "warning"

    def __post_init__(self) -> None:
        if self.severity not in ("error", "warning"):
            raise SchemaError(f"rule {self.rule_id}: bad severity {self.severity!r}")


@dataclass(frozen=True)
class GuidelineSet:
    kind: RequestClass
    rules: tuple[GuidelineRule, ...]

    def rule(self, rule_id: str) -> GuidelineRule:
        for rule in self.rules:
            if rule.rule_id == rule_id:
                return rule
        raise KeyError(rule_id)

    def rule_ids(self) -> tuple[str, ...]:
        return tuple(r.rule_id for r in self.rules)

    def as_text(self) -> str:
        return "\n".join(f"{r.rule_id}: {r.text}" for r in self.rules)


_GUIDELINE_FILES = {
    RequestClass.HISTORY: "history.json",
    RequestClass.RELATION2D: "relation2d.json",
    RequestClass.PARALLEL: "parallel.json",
}


def _data_dir():
    return resources.files("vizagent").joinpath("guidelines")


@lru_cache(maxsize=None)
def guidelines_for(kind: RequestClass | str) -> GuidelineSet:
    """Load the codified rule set for a plot kind from its data file."""
    if isinstance(kind, str):
        try:
            kind = RequestClass(kind)
        except ValueError:
            raise UnsupportedKindError(f"no guidelines for request class {kind!r}") from None
    if kind not in _GUIDELINE_FILES:
        raise UnsupportedKindError(f"no guidelines for request class {kind.value!r}")
    raw = _data_dir().joinpath(_GUIDELINE_FILES[kind]).read_text(encoding="utf-8")
    payload = json.loads(raw)
    if payload.get("kind") != kind.value:
        raise SchemaError(
            f"guideline file for {kind.value} declares kind {payload.get('kind')!r}"
        )
    rules = tuple(
        GuidelineRule(rule_id=r["id"], text=r["text"], severity=r["severity"])
        for r in payload["rules"]
    )
    if not rules:
        raise SchemaError(f"guideline file for {kind.value} has no rules")
    return GuidelineSet(kind=kind, rules=rules)


def default_system_text() -> str:
    return _data_dir().joinpath("system.txt").read_text(encoding="utf-8").strip()


@dataclass(frozen=True)
class PromptBundle:
    system_text: str
    guideline_text: str
    report_text: str
    snippet_texts: tuple[str, ...]
    user_text: str
    assembled: str
    dropped_snippets: int = 0


def _section(name: str, content: str) -> str:
    return f"{SECTION_DELIMITER}{name}\n{content}"


def _assemble_text(
    system: str,
    guideline_text: str,
    report_text: str,
    snippet_texts: tuple[str, ...],
    user: str,
) -> str:
    snippets_block = "\n\n".join(snippet_texts) if snippet_texts else NO_SNIPPETS_MARKER
    return "\n\n".join(
        [
            _section("system", system + "\n\n" + OUTPUT_CONTRACT),
            _section("guidelines", guideline_text),
            _section("report", report_text),
            _section("snippets", snippets_block),
            _section("user", user),
        ]
    )


def assemble(
    system: str,
    guidelines: GuidelineSet,
    report: AnalysisReport,
    snippets: list[Document],
    user: str,
    max_bytes: int | None = None,
) -> PromptBundle:
    """Join the prompt parts into one delimited, byte-stable text.

    Sections appear in fixed order: system (with the output contract),
    guidelines, report, snippets, user. When max_bytes is given and the
    assembled text exceeds it, snippets are dropped from the lowest rank
    upward; guideline and report sections are never dropped, so the result
    may still exceed the budget once all snippets are gone.
    """
    snippet_texts = tuple(
        f"--- example {i + 1}: {doc.doc_id}\n{doc.text}"
        for i, doc in enumerate(snippets)
    )
    guideline_text = guidelines.as_text()
    report_text = report.rendered_text

    kept = snippet_texts
    assembled = _assemble_text(system, guideline_text, report_text, kept, user)
    dropped = 0
    if max_bytes is not None:
        while kept and len(assembled.encode("utf-8")) > max_bytes:
            kept = kept[:-1]
            dropped += 1
            assembled = _assemble_text(system, guideline_text, report_text, kept, user)
    return PromptBundle(
        system_text=system,
        guideline_text=guideline_text,
        report_text=report_text,
        snippet_texts=kept,
        user_text=user,
        assembled=assembled,
        dropped_snippets=dropped,
    )
