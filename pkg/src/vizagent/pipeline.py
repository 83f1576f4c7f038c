"""End-to-end generation pipeline and result persistence.

One generate call walks: classify -> analysis report -> retrieve ->
assemble prompt -> complete -> parse -> validate -> render. Unsupported
requests short-circuit into a structured refusal before any backend call.
Results are content-addressed JSON + SVG files; the id hashes everything
except timings and the timestamp, so identical pipeline outcomes share an
id across runs.
"""

from __future__ import annotations

import datetime as _dt
import hashlib
import json
import os
import re
import time
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

from .analysis import AnalysisReport, generate_report
from .errors import (
    NoSpecBlockError,
    SpecInvariantError,
    SpecParseError,
    UnknownStudyError,
    VizAgentError,
)
from .gateway import BackendConfig, complete
from .plotspec import (
    PlotSpec,
    Violation,
    check_guidelines,
    parse_llm_output,
    repair_prompt,
    spec_to_dict,
)
from .prompting import assemble, default_system_text, guidelines_for
from .render import render_svg
from .retrieval import (
    Document,
    Index,
    build_index,
    load_corpus_dir,
    parse_snippet,
    retrieve,
)
from .router import ClassifiedRequest, RequestClass, classify
from .study import Study, export_study, load_study

REFUSAL_MESSAGE = (
    "This request does not match a supported visualization. Supported: "
    "history plots (convergence over iterations), 2D relation plots "
    "(scatter of two columns), and parallel coordinate plots."
)

_STAGES = (
    "classify",
    "report",
    "retrieve",
    "prompt",
    "complete",
    "parse",
    "validate",
    "render",
)


@dataclass(frozen=True)
class GenerationResult:
    result_id: str
    study_id: str
    prompt: str
    request: ClassifiedRequest
    report: AnalysisReport | None
    prompt_fingerprint: str | None
    backend: str | None
    completion_text: str | None
    spec: PlotSpec | None
    spec_error: str | None
    violations: tuple[Violation, ...]
    svg: str | None
    render_error: str | None
    refusal: str | None
    timings_ms: dict[str, int]
    created_at: str

    def to_dict(self) -> dict:
        return {
            "result_id": self.result_id,
            "study_id": self.study_id,
            "prompt": self.prompt,
            "request": self.request.to_dict(),
            "report": self.report.to_dict() if self.report else None,
            "prompt_fingerprint": self.prompt_fingerprint,
            "backend": self.backend,
            "completion_text": self.completion_text,
            "spec": spec_to_dict(self.spec) if self.spec else None,
            "spec_error": self.spec_error,
            "violations": [
                {
                    "rule_id": v.rule_id,
                    "severity": v.severity,
                    "message": v.message,
                    "element": v.element,
                }
                for v in self.violations
            ],
            "svg_ref": f"results/{self.result_id}.svg" if self.svg else None,
            "render_error": self.render_error,
            "refusal": self.refusal,
            "timings_ms": dict(self.timings_ms),
            "created_at": self.created_at,
        }


def _result_id(identity: dict) -> str:
    canonical = json.dumps(identity, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def _checked_result_id(result_id: str) -> str:
    if not re.fullmatch(r"[0-9a-f]{16}", result_id):
        raise FileNotFoundError(f"no result {result_id!r}")
    return result_id


def _safe_name(study_id: str) -> str:
    # Study ids are caller-provided; never let one name a path outside the
    # studies directory.
    if re.fullmatch(r"[A-Za-z0-9._-]+", study_id) and study_id not in (".", ".."):
        return study_id
    return hashlib.sha256(study_id.encode("utf-8")).hexdigest()[:16]


def default_corpus() -> list[Document]:
    """Snippets shipped with the package."""
    corpus_dir = resources.files("vizagent").joinpath("corpus")
    docs = []
    for entry in sorted(corpus_dir.iterdir(), key=lambda e: e.name):
        if entry.name.endswith(".md"):
            docs.append(parse_snippet(entry.read_text(encoding="utf-8"), source=entry.name))
    return docs


class _StageClock:
    def __init__(self) -> None:
        self.timings: dict[str, int] = {}
        self._start = 0.0
        self._name = ""

    def start(self, name: str) -> None:
        self._name = name
        self._start = time.perf_counter()

    def stop(self) -> None:
        elapsed = int((time.perf_counter() - self._start) * 1000)
        self.timings[self._name] = self.timings.get(self._name, 0) + elapsed

    def total(self) -> int:
        return sum(self.timings.values())


class Pipeline:
    """Shared immutable state (studies, index, backend) plus result storage.

    Studies and the retrieval index are replaced, never mutated, so
    concurrent generate calls can share one Pipeline.
    """

    def __init__(
        self,
        data_dir,
        backend: BackendConfig | None = None,
        corpus: list[Document] | None = None,
        retrieval_k: int = 3,
    ) -> None:
        self.data_dir = Path(data_dir)
        self.results_dir = self.data_dir / "results"
        self.studies_dir = self.data_dir / "studies"
        self.results_dir.mkdir(parents=True, exist_ok=True)
        self.studies_dir.mkdir(parents=True, exist_ok=True)
        self.backend = backend or BackendConfig(mode="mock")
        self.index: Index = build_index(corpus if corpus is not None else default_corpus())
        self.retrieval_k = retrieval_k
        self.studies: dict[str, Study] = {}
        for path in sorted(self.studies_dir.glob("*.json")):
            try:
                study = load_study(path.read_text(encoding="utf-8"))
            except VizAgentError:
                continue  # a corrupt file must not block service start
            self.studies[study.id] = study

    # -- studies --------------------------------------------------------

    def add_study(self, study: Study, persist: bool = True) -> None:
        self.studies[study.id] = study
        if persist:
            self._write_atomic(
                self.studies_dir / f"{_safe_name(study.id)}.json", export_study(study)
            )

    def add_study_document(self, document: str) -> Study:
        study = load_study(document)
        self.add_study(study)
        return study

    def load_study_file(self, path) -> Study:
        return self.add_study_document(Path(path).read_text(encoding="utf-8"))

    def study(self, study_id: str) -> Study:
        if study_id not in self.studies:
            raise UnknownStudyError(f"no study with id {study_id!r}")
        return self.studies[study_id]

    # -- corpus ---------------------------------------------------------

    def load_corpus(self, path) -> int:
        docs = load_corpus_dir(path)
        self.index = build_index(docs)
        return len(docs)

    # -- generation -----------------------------------------------------

    def handle_generate(
        self,
        study_id: str,
        prompt: str,
        backend: BackendConfig | None = None,
        repair: bool = False,
    ) -> GenerationResult:
        study = self.study(study_id)
        config = backend or self.backend
        clock = _StageClock()

        clock.start("classify")
        request = classify(prompt, study)
        clock.stop()

        if request.request_class is RequestClass.UNSUPPORTED:
            return self._store(
                study_id=study_id,
                prompt=prompt,
                request=request,
                report=None,
                fingerprint=None,
                backend=None,
                completion_text=None,
                spec=None,
                spec_error=None,
                violations=(),
                svg=None,
                render_error=None,
                refusal=REFUSAL_MESSAGE,
                clock=clock,
            )

        clock.start("report")
        report = generate_report(study, request)
        clock.stop()

        clock.start("retrieve")
        hits = retrieve(
            self.index,
            prompt,
            k=self.retrieval_k,
            plot_kind=request.request_class,
        )
        snippets = [self.index.document(h.doc_id) for h in hits]
        clock.stop()

        clock.start("prompt")
        bundle = assemble(
            default_system_text(),
            guidelines_for(request.request_class),
            report,
            snippets,
            prompt,
        )
        clock.stop()

        completion, spec, spec_error, violations, svg, render_error = (
            self._generate_once(bundle, config, report, request, study, clock)
        )
        if (
            repair
            and spec is not None
            and any(v.is_error() for v in violations)
            and config.mode != "mock"
        ):
            clock.start("prompt")
            addendum = repair_prompt(spec, [v for v in violations if v.is_error()])
            retry_bundle = assemble(
                default_system_text(),
                guidelines_for(request.request_class),
                report,
                snippets,
                f"{prompt}\n\n{addendum}",
            )
            clock.stop()
            completion, spec, spec_error, violations, svg, render_error = (
                self._generate_once(retry_bundle, config, report, request, study, clock)
            )
            bundle = retry_bundle

        return self._store(
            study_id=study_id,
            prompt=prompt,
            request=request,
            report=report,
            fingerprint=completion.fingerprint,
            backend=completion.backend,
            completion_text=completion.text,
            spec=spec,
            spec_error=spec_error,
            violations=violations,
            svg=svg,
            render_error=render_error,
            refusal=None,
            clock=clock,
        )

    def _generate_once(self, bundle, config, report, request, study, clock):
        clock.start("complete")
        try:
            completion = complete(bundle, config, report=report, request=request)
        except VizAgentError as exc:
            clock.stop()
            exc.pipeline_stage = "complete"
            raise
        clock.stop()

        spec: PlotSpec | None = None
        spec_error: str | None = None
        violations: tuple[Violation, ...] = ()
        svg: str | None = None
        render_error: str | None = None

        clock.start("parse")
        try:
            spec = parse_llm_output(completion.text)
        except (NoSpecBlockError, SpecParseError, SpecInvariantError) as exc:
            spec_error = f"{type(exc).__name__}: {exc}"
        clock.stop()

        if spec is not None:
            clock.start("validate")
            try:
                violations = tuple(check_guidelines(spec, report))
            except VizAgentError as exc:
                clock.stop()
                exc.pipeline_stage = "validate"
                raise
            clock.stop()

            clock.start("render")
            try:
                svg = render_svg(spec, study)
            except VizAgentError as exc:
                render_error = f"{type(exc).__name__}: {exc}"
            clock.stop()
        return completion, spec, spec_error, violations, svg, render_error

    # -- persistence ----------------------------------------------------

    def _store(
        self,
        study_id,
        prompt,
        request,
        report,
        fingerprint,
        backend,
        completion_text,
        spec,
        spec_error,
        violations,
        svg,
        render_error,
        refusal,
        clock,
    ) -> GenerationResult:
        timings = dict(clock.timings)
        timings["total"] = clock.total()
        created_at = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
        result = GenerationResult(
            result_id="",
            study_id=study_id,
            prompt=prompt,
            request=request,
            report=report,
            prompt_fingerprint=fingerprint,
            backend=backend,
            completion_text=completion_text,
            spec=spec,
            spec_error=spec_error,
            violations=tuple(violations),
            svg=svg,
            render_error=render_error,
            refusal=refusal,
            timings_ms=timings,
            created_at=created_at,
        )
        payload = result.to_dict()
        identity = {
            k: v
            for k, v in payload.items()
            if k not in ("result_id", "svg_ref", "timings_ms", "created_at")
        }
        identity["svg"] = svg
        result = replace(result, result_id=_result_id(identity))
        payload = result.to_dict()

        self._write_atomic(
            self.results_dir / f"{result.result_id}.json",
            json.dumps(payload, indent=2, sort_keys=True) + "\n",
        )
        if svg is not None:
            self._write_atomic(self.results_dir / f"{result.result_id}.svg", svg)
        return result

    def _write_atomic(self, path: Path, content: str) -> None:
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_text(content, encoding="utf-8")
        os.replace(tmp, path)

    def load_result(self, result_id: str) -> dict:
        path = self.results_dir / f"{_checked_result_id(result_id)}.json"
        return json.loads(path.read_text(encoding="utf-8"))

    def load_result_svg(self, result_id: str) -> str:
        path = self.results_dir / f"{_checked_result_id(result_id)}.svg"
        return path.read_text(encoding="utf-8")

    def list_results(self) -> list[str]:
        return sorted(p.stem for p in self.results_dir.glob("*.json"))
