"""Rule-based request classification and column-mention resolution.

The classifier is deterministic keyword matching, not a learned model: the
same (prompt, study) pair always yields the same ClassifiedRequest, which
keeps the pipeline testable offline. Column mentions are grounded against
the study's declared column names with normalized and token-prefix matching.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass

from .study import Study


class RequestClass(enum.Enum):
    HISTORY = "history"
    RELATION2D = "relation2d"
    PARALLEL = "parallel"
    UNSUPPORTED = "unsupported"


@dataclass(frozen=True)
class ClassifiedRequest:
    request_class: RequestClass
    columns: tuple[str, ...]
    raw_prompt: str
    confidence: float
    unresolved_mentions: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "class": self.request_class.value,
            "columns": list(self.columns),
            "raw_prompt": self.raw_prompt,
            "confidence": self.confidence,
            "unresolved_mentions": list(self.unresolved_mentions),
        }


# Pattern table: phrase -> (class, weight). Longer phrases score higher so
# "parallel plot" beats an incidental "plot" elsewhere. Checked on the
# normalized prompt (lowercase, separators collapsed).
_PATTERNS: list[tuple[str, RequestClass, float]] = [
    ("history plot", RequestClass.HISTORY, 0.95),
    ("history", RequestClass.HISTORY, 0.7),
    ("convergence", RequestClass.HISTORY, 0.6),
    ("converged", RequestClass.HISTORY, 0.6),
    ("iteration", RequestClass.HISTORY, 0.5),
    ("over time", RequestClass.HISTORY, 0.4),
    ("relation plot", RequestClass.RELATION2D, 0.95),
    ("2d relation", RequestClass.RELATION2D, 0.95),
    ("scatter", RequestClass.RELATION2D, 0.8),
    ("trade off", RequestClass.RELATION2D, 0.7),
    ("tradeoff", RequestClass.RELATION2D, 0.7),
    ("relation", RequestClass.RELATION2D, 0.5),
    ("versus", RequestClass.RELATION2D, 0.4),
    (" vs ", RequestClass.RELATION2D, 0.4),
    ("parallel plot", RequestClass.PARALLEL, 0.95),
    ("parallel coordinates", RequestClass.PARALLEL, 0.95),
    ("parallel", RequestClass.PARALLEL, 0.7),
    ("radial", RequestClass.PARALLEL, 0.7),
    ("spider", RequestClass.PARALLEL, 0.7),
]

# Words never treated as column mentions: request phrasing, plot vocabulary
# and classifier keywords.
_STOPWORDS = {
    "a", "an", "and", "are", "as", "at", "axis", "between", "can", "chart",
    "check", "code", "convergence", "converged", "coordinates", "create",
    "design", "designs", "diagram", "display", "draw", "for", "from",
    "generate", "graph", "has", "have", "history", "in", "is", "it", "its",
    "iteration", "iterations", "make", "me", "my", "objective", "objectives",
    "of", "off", "on", "over", "parallel", "please", "plot", "plots",
    "python", "radial", "relation", "response", "responses", "scatter",
    "show", "spider", "study", "the", "time", "to", "trade", "tradeoff",
    "variable", "variables", "versus", "vs", "with", "2d",
}

_MIN_PREFIX = 4


def _tokens(text: str) -> list[str]:
    return [t for t in re.split(r"[^a-z0-9]+", text.lower()) if t]


def _tokens_match(a: str, b: str) -> bool:
    if a == b:
        return True
    shorter, longer = sorted((a, b), key=len)
    return len(shorter) >= _MIN_PREFIX and longer.startswith(shorter)


def _mention_matches(mention_tokens: list[str], column_tokens: list[str], prefix: bool) -> bool:
    if len(mention_tokens) != len(column_tokens):
        return False
    if prefix:
        return all(_tokens_match(m, c) for m, c in zip(mention_tokens, column_tokens))
    return mention_tokens == column_tokens


def resolve_columns(prompt: str, study: Study) -> tuple[list[str], list[str]]:
    """Ground column mentions in a prompt against the study's columns.

    Candidate mentions are the comma/'and'-separated phrases left after
    stripping request vocabulary. Matching is case- and separator-
    insensitive, longest mention first; exact normalized matches win over
    token-prefix matches ("torsional" -> "Torsion", minimum 4 shared
    characters). A mention matching two different columns is reported
    unresolved rather than guessed.
    """
    column_tokens = {c: _tokens(c) for c in study.columns()}

    phrases: list[str] = []
    for chunk in re.split(r"[,;.?!]| and | or ", " " + prompt.lower() + " "):
        tokens = [t for t in _tokens(chunk) if t not in _STOPWORDS]
        if tokens:
            phrases.append(" ".join(tokens))

    resolved: list[str] = []
    unresolved: list[str] = []
    for phrase in phrases:
        tokens = phrase.split()
        consumed = [False] * len(tokens)
        # Longest n-grams first so "total mass" is not eaten by "mass".
        for n in range(len(tokens), 0, -1):
            for start in range(0, len(tokens) - n + 1):
                if any(consumed[start:start + n]):
                    continue
                gram = tokens[start:start + n]
                match = _match_gram(gram, column_tokens, resolved)
                if match is not None:
                    resolved.append(match)
                    for i in range(start, start + n):
                        consumed[i] = True
        leftover = [t for t, used in zip(tokens, consumed) if not used]
        if leftover:
            unresolved.append(" ".join(leftover))
    return resolved, unresolved


def _match_gram(
    gram: list[str], column_tokens: dict[str, list[str]], taken: list[str]
) -> str | None:
    for prefix in (False, True):
        candidates = [
            col
            for col, toks in column_tokens.items()
            if col not in taken and _mention_matches(gram, toks, prefix)
        ]
        if len(candidates) == 1:
            return candidates[0]
        if len(candidates) > 1:
            return None  # ambiguous: report unresolved rather than guess
    return None


def _default_columns(kind: RequestClass, study: Study) -> tuple[str, ...]:
    objectives = tuple(o.name for o in study.objectives)
    if kind is RequestClass.HISTORY:
        return objectives
    if kind is RequestClass.RELATION2D:
        return objectives[:2]
    if kind is RequestClass.PARALLEL:
        return tuple(v.name for v in study.variables) + objectives
    return ()


def classify(prompt: str, study: Study) -> ClassifiedRequest:
    """Deterministically classify a prompt and resolve its column mentions.

    Unsupported is a value, not an error: it is returned with confidence 0
    and no columns when no pattern fires. When the prompt names no columns,
    each plot kind falls back to its default set (history: objectives;
    relation: first two objectives; parallel: variables + objectives, padded
    to at least three axes when the user named fewer).
    """
    if not prompt.strip():
        raise ValueError("prompt must be non-empty")
    words = _tokens(prompt)
    singular = [w[:-1] if len(w) > 3 and w.endswith("s") else w for w in words]
    haystacks = (" %s " % " ".join(words), " %s " % " ".join(singular))

    scores: dict[RequestClass, float] = {}
    for phrase, kind, weight in _PATTERNS:
        needle = phrase if phrase.startswith(" ") else f" {phrase} "
        if any(needle in h for h in haystacks):
            scores[kind] = max(scores.get(kind, 0.0), weight)
    if not scores:
        return ClassifiedRequest(
            request_class=RequestClass.UNSUPPORTED,
            columns=(),
            raw_prompt=prompt,
            confidence=0.0,
            unresolved_mentions=(),
        )
    # Deterministic winner: highest weight, ties broken by enum order.
    order = [RequestClass.HISTORY, RequestClass.RELATION2D, RequestClass.PARALLEL]
    winner = max(order, key=lambda k: (scores.get(k, 0.0), -order.index(k)))
    confidence = scores[winner]

    resolved, unresolved = resolve_columns(prompt, study)
    columns = tuple(resolved) if resolved else _default_columns(winner, study)
    if winner is RequestClass.PARALLEL and len(columns) < 3:
        for fallback in _default_columns(RequestClass.PARALLEL, study):
            if fallback not in columns:
                columns = columns + (fallback,)
            if len(columns) >= 3:
                break
    return ClassifiedRequest(
        request_class=winner,
        columns=columns,
        raw_prompt=prompt,
        confidence=confidence,
        unresolved_mentions=tuple(unresolved),
    )
