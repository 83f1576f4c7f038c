"""Local lexical retrieval over domain snippets.

A small TF-IDF cosine index stands in for a neural retriever: at corpus
sizes of tens to hundreds of snippets it ranks well, needs no model
downloads, and is bit-for-bit reproducible. Scores use raw term counts and
IDF = ln((N+1)/(df+1)) + 1, summed in sorted-term order so two builds of
the same corpus agree to the last bit.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from pathlib import Path

from .errors import EmptyCorpusError, IntegrityError, SchemaError
from .router import RequestClass

_TOKEN_SPLIT = re.compile(r"[^a-z0-9]+")


def tokenize(text: str) -> list[str]:
    """Lowercase, split on non-alphanumerics, drop tokens shorter than 2."""
    return [t for t in _TOKEN_SPLIT.split(text.lower()) if len(t) >= 2]


@dataclass(frozen=True)
class Document:
    doc_id: str
    text: str
    tags: tuple[str, ...] = ()
    plot_kind: RequestClass | None = None

    def __post_init__(self) -> None:
        if not self.doc_id:
            raise SchemaError("document id must be non-empty")
        if not self.text.strip():
            raise SchemaError(f"document {self.doc_id!r} has empty text")


@dataclass(frozen=True)
class RetrievalResult:
    doc_id: str
    score: float
    rank: int


class Index:
    """Immutable TF-IDF index; safe to share across threads after build."""

    def __init__(
        self,
        documents: tuple[Document, ...],
        doc_freq: dict[str, int],
        weights: dict[str, dict[str, float]],
        norms: dict[str, float],
    ) -> None:
        self._documents = documents
        self._by_id = {d.doc_id: d for d in documents}
        self._doc_freq = doc_freq
        self._weights = weights
        self._norms = norms

    @property
    def documents(self) -> tuple[Document, ...]:
        return self._documents

    @property
    def doc_count(self) -> int:
        return len(self._documents)

    @property
    def vocabulary(self) -> dict[str, int]:
        return dict(self._doc_freq)

    def document(self, doc_id: str) -> Document:
        return self._by_id[doc_id]

    def idf(self, term: str) -> float:
        df = self._doc_freq.get(term, 0)
        return math.log((self.doc_count + 1) / (df + 1)) + 1.0

    def weights_for(self, doc_id: str) -> dict[str, float]:
        return dict(self._weights[doc_id])

    def norm_for(self, doc_id: str) -> float:
        return self._norms[doc_id]


def build_index(docs: list[Document]) -> Index:
    if not docs:
        raise EmptyCorpusError("cannot build an index over an empty corpus")
    seen: set[str] = set()
    for doc in docs:
        if doc.doc_id in seen:
            raise IntegrityError(f"duplicate document id {doc.doc_id!r}")
        seen.add(doc.doc_id)

    # Canonical order by id: insertion order must not affect the index.
    ordered = tuple(sorted(docs, key=lambda d: d.doc_id))
    counts: dict[str, dict[str, int]] = {}
    doc_freq: dict[str, int] = {}
    for doc in ordered:
        tf: dict[str, int] = {}
        for token in tokenize(doc.text):
            tf[token] = tf.get(token, 0) + 1
        counts[doc.doc_id] = tf
        for term in tf:
            doc_freq[term] = doc_freq.get(term, 0) + 1

    n = len(ordered)
    weights: dict[str, dict[str, float]] = {}
    norms: dict[str, float] = {}
    for doc in ordered:
        vec: dict[str, float] = {}
        square_sum = 0.0
        for term in sorted(counts[doc.doc_id]):
            idf = math.log((n + 1) / (doc_freq[term] + 1)) + 1.0
            w = counts[doc.doc_id][term] * idf
            vec[term] = w
            square_sum += w * w
        weights[doc.doc_id] = vec
        norms[doc.doc_id] = math.sqrt(square_sum)
    return Index(ordered, doc_freq, weights, norms)


def retrieve(
    index: Index,
    query: str,
    k: int = 3,
    plot_kind: RequestClass | None = None,
) -> list[RetrievalResult]:
    """Top-k documents by cosine similarity to the query.

    Query terms absent from the corpus vocabulary are dropped before
    scoring. Documents sharing no term with the query are excluded, so a
    result's score is always positive. Ties break toward the smaller
    document id; extending k keeps earlier ranks unchanged.
    """
    if k < 1:
        raise ValueError("k must be positive")

    q_counts: dict[str, int] = {}
    for token in tokenize(query):
        if token in index.vocabulary:
            q_counts[token] = q_counts.get(token, 0) + 1
    if not q_counts:
        return []

    q_weights: dict[str, float] = {}
    q_square = 0.0
    for term in sorted(q_counts):
        w = q_counts[term] * index.idf(term)
        q_weights[term] = w
        q_square += w * w
    q_norm = math.sqrt(q_square)

    scored: list[tuple[float, str]] = []
    for doc in index.documents:
        if plot_kind is not None and doc.plot_kind is not plot_kind:
            continue
        vec = index.weights_for(doc.doc_id)
        dot = 0.0
        for term in sorted(q_weights):
            if term in vec:
                dot += q_weights[term] * vec[term]
        if dot <= 0.0:
            continue
        scored.append((dot / (q_norm * index.norm_for(doc.doc_id)), doc.doc_id))

    scored.sort(key=lambda pair: (-pair[0], pair[1]))
    return [
        RetrievalResult(doc_id=doc_id, score=score, rank=i + 1)
        for i, (score, doc_id) in enumerate(scored[:k])
    ]


_FRONT_MATTER_KEYS = {"id", "tags", "plot_kind"}


def parse_snippet(text: str, source: str = "<snippet>") -> Document:
    """Parse one snippet file: a ``---`` front-matter header, then content.

    Header lines are ``key: value`` with keys id (required), tags
    (comma-separated) and plot_kind (a plot kind name).
    """
    lines = text.splitlines()
    if not lines or lines[0].strip() != "---":
        raise SchemaError(f"{source}: missing front-matter header")
    fields: dict[str, str] = {}
    body_start = None
    for i, line in enumerate(lines[1:], start=1):
        if line.strip() == "---":
            body_start = i + 1
            break
        if not line.strip():
            continue
        key, sep, value = line.partition(":")
        if not sep:
            raise SchemaError(f"{source}: malformed header line {line!r}")
        key = key.strip()
        if key not in _FRONT_MATTER_KEYS:
            raise SchemaError(f"{source}: unknown header key {key!r}")
        fields[key] = value.strip()
    if body_start is None:
        raise SchemaError(f"{source}: unterminated front-matter header")
    if "id" not in fields:
        raise SchemaError(f"{source}: header missing id")

    kind: RequestClass | None = None
    if fields.get("plot_kind"):
        try:
            kind = RequestClass(fields["plot_kind"])
        except ValueError:
            raise SchemaError(
                f"{source}: unknown plot_kind {fields['plot_kind']!r}"
            ) from None
    tags = tuple(
        t.strip() for t in fields.get("tags", "").split(",") if t.strip()
    )
    body = "\n".join(lines[body_start:]).strip()
    return Document(doc_id=fields["id"], text=body, tags=tags, plot_kind=kind)


def load_corpus_dir(path) -> list[Document]:
    """Load every ``*.md`` snippet under a directory, sorted by filename."""
    root = Path(path)
    docs = []
    for file in sorted(root.glob("*.md")):
        docs.append(parse_snippet(file.read_text(encoding="utf-8"), source=file.name))
    return docs


def save_index(index: Index, path) -> None:
    """Persist the corpus behind an index as one JSON artifact.

    Only the documents are stored: rebuilding from the same corpus is
    guaranteed to reproduce the identical index, so derived statistics
    would be redundant.
    """
    payload = {
        "documents": [
            {
                "id": d.doc_id,
                "text": d.text,
                "tags": list(d.tags),
                "plot_kind": d.plot_kind.value if d.plot_kind else None,
            }
            for d in index.documents
        ]
    }
    Path(path).write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def load_index(path) -> Index:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"index artifact is not valid JSON: {exc}") from exc
    if not isinstance(payload, dict) or "documents" not in payload:
        raise SchemaError("index artifact missing 'documents'")
    docs = []
    for entry in payload["documents"]:
        kind = entry.get("plot_kind")
        docs.append(
            Document(
                doc_id=entry["id"],
                text=entry["text"],
                tags=tuple(entry.get("tags", ())),
                plot_kind=RequestClass(kind) if kind else None,
            )
        )
    return build_index(docs)
