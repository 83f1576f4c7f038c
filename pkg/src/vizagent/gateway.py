"""Pluggable completion backends: live HTTP, recorded replay, template mock.

Every completion is keyed by a fingerprint of the exact prompt bytes.
Replay mode looks responses up by that fingerprint in a JSONL fixture,
which makes the whole pipeline runnable offline from recorded sessions.
Mock mode synthesizes a guideline-compliant spec directly from the
analysis report, so end-to-end tests never need a model at all.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
import urllib.error
import urllib.request
from dataclasses import dataclass

from .analysis import AnalysisReport, BestDesign
from .errors import (
    EmptySeriesError,
    FixtureMissError,
    GatewayError,
    GatewayTimeoutError,
    HttpStatusError,
    MalformedResponseError,
    UnsupportedKindError,
)
from .plotspec import (
    Annotation,
    AxisSpec,
    DesignSelector,
    PlotSpec,
    SeriesSpec,
    serialize_spec,
)
from .prompting import PromptBundle
from .router import ClassifiedRequest, RequestClass

MODES = ("http", "replay", "mock")


@dataclass(frozen=True)
class BackendConfig:
    mode: str = "mock"
    endpoint: str | None = None
    token: str | None = None
    model: str = "default"
    timeout: float = 60.0
    temperature: float = 0.0
    fixture_path: str | None = None
    record_path: str | None = None
    max_concurrency: int = 4

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise GatewayError(f"unknown backend mode {self.mode!r}")
        if self.mode == "http" and not (self.endpoint and self.token):
            raise GatewayError("http mode requires endpoint and token")
        if self.mode == "replay" and not self.fixture_path:
            raise GatewayError("replay mode requires a fixture path")
        if self.max_concurrency < 1:
            raise GatewayError("max_concurrency must be at least 1")

    @classmethod
    def from_env(cls, env=os.environ) -> "BackendConfig":
        return cls(
            mode=env.get("VIZAGENT_LLM_MODE", "mock"),
            endpoint=env.get("VIZAGENT_LLM_ENDPOINT"),
            token=env.get("VIZAGENT_LLM_TOKEN"),
            model=env.get("VIZAGENT_LLM_MODEL", "default"),
            timeout=float(env.get("VIZAGENT_LLM_TIMEOUT", "60")),
            temperature=float(env.get("VIZAGENT_LLM_TEMPERATURE", "0")),
            fixture_path=env.get("VIZAGENT_LLM_FIXTURES"),
            record_path=env.get("VIZAGENT_LLM_RECORD"),
        )


@dataclass(frozen=True)
class CompletionResponse:
    text: str
    backend: str
    latency_ms: int
    fingerprint: str


def prompt_fingerprint(bundle: PromptBundle) -> str:
    return hashlib.sha256(bundle.assembled.encode("utf-8")).hexdigest()


_semaphore_lock = threading.Lock()
_semaphores: dict[tuple[str, int], threading.Semaphore] = {}


def _limiter(config: BackendConfig) -> threading.Semaphore:
    key = (config.endpoint or "", config.max_concurrency)
    with _semaphore_lock:
        if key not in _semaphores:
            _semaphores[key] = threading.Semaphore(config.max_concurrency)
        return _semaphores[key]


_record_lock = threading.Lock()


def complete(
    bundle: PromptBundle,
    config: BackendConfig,
    report: AnalysisReport | None = None,
    request: ClassifiedRequest | None = None,
) -> CompletionResponse:
    """One completion round trip through the configured backend.

    The mock backend does not look at the prompt text; it needs the report
    and classified request the prompt was built from.
    """
    fingerprint = prompt_fingerprint(bundle)
    start = time.perf_counter()
    if config.mode == "mock":
        if report is None or request is None:
            raise GatewayError("mock backend requires report and request")
        text = mock_generate(report, request)
    elif config.mode == "replay":
        text = _replay_lookup(config.fixture_path, fingerprint)
    else:
        text = _http_complete(bundle, config, fingerprint)
    latency_ms = int((time.perf_counter() - start) * 1000)
    return CompletionResponse(
        text=text,
        backend=config.mode,
        latency_ms=latency_ms,
        fingerprint=fingerprint,
    )


def _replay_lookup(fixture_path: str, fingerprint: str) -> str:
    try:
        with open(fixture_path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise GatewayError(f"cannot read replay fixtures: {exc}") from exc
    for i, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedResponseError(
                f"replay fixture line {i} is not valid JSON"
            ) from exc
        if not isinstance(record, dict) or "fingerprint" not in record or "response" not in record:
            raise MalformedResponseError(
                f"replay fixture line {i} lacks fingerprint/response"
            )
        if record["fingerprint"] == fingerprint:
            return record["response"]
    raise FixtureMissError(fingerprint)


def record_fixture(path: str, fingerprint: str, response: str) -> None:
    line = json.dumps({"fingerprint": fingerprint, "response": response})
    with _record_lock:
        with open(path, "a", encoding="utf-8") as fh:
            fh.write(line + "\n")


def _http_complete(bundle: PromptBundle, config: BackendConfig, fingerprint: str) -> str:
    payload = json.dumps(
        {
            "model": config.model,
            "messages": [{"role": "user", "content": bundle.assembled}],
            "temperature": config.temperature,
        }
    ).encode("utf-8")
    req = urllib.request.Request(
        config.endpoint,
        data=payload,
        headers={
            "Content-Type": "application/json",
            "Authorization": f"Bearer {config.token}",
        },
        method="POST",
    )
    with _limiter(config):
        try:
            with urllib.request.urlopen(req, timeout=config.timeout) as resp:
                body = resp.read().decode("utf-8")
        except urllib.error.HTTPError as exc:
            raise HttpStatusError(exc.code, exc.read().decode("utf-8", "replace")) from exc
        except TimeoutError as exc:
            raise GatewayTimeoutError(f"no response within {config.timeout}s") from exc
        except urllib.error.URLError as exc:
            if isinstance(exc.reason, TimeoutError):
                raise GatewayTimeoutError(f"no response within {config.timeout}s") from exc
            raise GatewayError(f"request failed: {exc.reason}") from exc
    try:
        data = json.loads(body)
        text = data["choices"][0]["message"]["content"]
    except (json.JSONDecodeError, KeyError, IndexError, TypeError) as exc:
        raise MalformedResponseError(
            "completion response lacks choices[0].message.content"
        ) from exc
    if not isinstance(text, str):
        raise MalformedResponseError("completion content is not text")
    if config.record_path:
        record_fixture(config.record_path, fingerprint, text)
    return text


# --- template mock ------------------------------------------------------


def _best_for_columns(
    report: AnalysisReport, columns: tuple[str, ...]
) -> BestDesign | None:
    """Best-design entry to highlight: first plotted objective, feasible
    entries preferred; any objective as fallback."""
    scopes = [c for c in columns if any(b.objective == c for b in report.best)]
    if not scopes and report.best:
        scopes = [report.best[0].objective]
    for col in scopes:
        entries = [b for b in report.best if b.objective == col]
        for entry in entries:
            if entry.feasible_only:
                return entry
        return entries[0]
    return None


def _numeric_columns(report: AnalysisReport) -> list[str]:
    return [c.name for c in report.columns if c.kind == "numeric"]


def mock_generate(report: AnalysisReport, request: ClassifiedRequest) -> str:
    """Deterministic, guideline-compliant completion text.

    Useful both as the offline test backend and as a floor for what a live
    model is asked to produce: every rule the checker enforces is honored
    by construction.
    """
    kind = request.request_class
    if kind is RequestClass.UNSUPPORTED:
        raise UnsupportedKindError("mock cannot generate for an unsupported request")
    if kind is RequestClass.HISTORY:
        prose, spec = _mock_history(report, request)
    elif kind is RequestClass.RELATION2D:
        prose, spec = _mock_relation(report, request)
    else:
        prose, spec = _mock_parallel(report, request)
    return f"{prose}\n\n{serialize_spec(spec)}\n"


def _mock_history(report, request) -> tuple[str, PlotSpec]:
    cols = [c for c in request.columns if report.convergence_for(c) is not None]
    if not cols:
        cols = [s.column for s in report.convergence]
    cols = cols[:2]
    if not cols:
        raise EmptySeriesError("no column has history data to plot")

    data_colors = ("blue", "orange")
    overlay_colors = ("gray", "teal")
    series: list[SeriesSpec] = []
    prose_bits: list[str] = []
    for i, col in enumerate(cols):
        status = report.convergence_for(col)
        converged = bool(status and status.converged)
        axis = "left" if i == 0 else "right"
        series.append(
            SeriesSpec(
                name=col,
                columns=(col,),
                style="solid" if converged else "dashed",
                color=data_colors[i],
                role="data",
                axis=axis,
            )
        )
        series.append(
            SeriesSpec(
                name=f"{col} (best so far)",
                columns=(col,),
                style="solid",
                color=overlay_colors[i],
                role="running_best",
                axis=axis,
            )
        )
        prose_bits.append(
            f"{col} is {'converged' if converged else 'not converged'}"
        )

    axes = [AxisSpec(label="Iteration", normalized=False, side="bottom"),
            AxisSpec(label=cols[0], normalized=False, side="left")]
    if len(cols) == 2:
        axes.append(AxisSpec(label=cols[1], normalized=False, side="right"))

    annotations: list[Annotation] = []
    best = _best_for_columns(report, tuple(cols))
    if best is not None:
        annotations.append(
            Annotation(kind="best_design", design_id=best.design_id, column=best.objective)
        )

    spec = PlotSpec(
        kind=RequestClass.HISTORY,
        title=f"Optimization history: {' and '.join(cols)}",
        series=tuple(series),
        axes=tuple(axes),
        annotations=tuple(annotations),
        legend=True,
    )
    prose = (
        "History plot with running-best overlays; convergence status: "
        + "; ".join(prose_bits)
        + "."
    )
    return prose, spec


def _mock_relation(report, request) -> tuple[str, PlotSpec]:
    numeric = set(_numeric_columns(report))
    chosen = [c for c in request.columns if c in numeric][:2]
    for col in _numeric_columns(report):
        if len(chosen) >= 2:
            break
        if col not in chosen:
            chosen.append(col)
    if not chosen:
        raise EmptySeriesError("study has no numeric columns to relate")
    if len(chosen) == 1:
        chosen = [chosen[0], chosen[0]]
    x_col, y_col = chosen[0], chosen[1]

    annotations: list[Annotation] = []
    best = _best_for_columns(report, (x_col, y_col))
    if best is not None:
        annotations.append(Annotation(kind="best_design", design_id=best.design_id))
    corr = report.correlation_for(x_col, y_col)
    corr_note = ""
    if corr is not None and corr.r is not None:
        annotations.append(
            Annotation(
                kind="text",
                text=f"Pearson correlation r = {corr.r:.3f}",
                position="top_left",
            )
        )
        corr_note = f" Pearson correlation r = {corr.r:.3f}."

    spec = PlotSpec(
        kind=RequestClass.RELATION2D,
        title=f"{y_col} vs {x_col}",
        series=(
            SeriesSpec(
                name="designs",
                columns=(x_col, y_col),
                style="solid",
                color="blue",
                role="data",
                axis="left",
                designs=DesignSelector(select="all"),
                color_by="feasibility",
            ),
        ),
        axes=(
            AxisSpec(label=x_col, normalized=False, side="bottom"),
            AxisSpec(label=y_col, normalized=False, side="left"),
        ),
        annotations=tuple(annotations),
        legend=True,
    )
    prose = (
        f"2D relation of {y_col} against {x_col}, colored by feasibility, "
        f"with the optimal design highlighted.{corr_note}"
    )
    return prose, spec


def _mock_parallel(report, request) -> tuple[str, PlotSpec]:
    cols: list[str] = []
    for c in request.columns:
        if c not in cols:
            cols.append(c)
    for c in report.column_names():
        if len(cols) >= 3:
            break
        if c not in cols:
            cols.append(c)

    axes = tuple(AxisSpec(label=c, normalized=True, side="left") for c in cols)
    annotations: list[Annotation] = []
    best = _best_for_columns(report, tuple(cols))
    if best is not None:
        annotations.append(Annotation(kind="best_design", design_id=best.design_id))

    spec = PlotSpec(
        kind=RequestClass.PARALLEL,
        title="Parallel coordinates across the design set",
        series=(
            SeriesSpec(
                name="designs",
                columns=(),
                style="solid",
                color="blue",
                role="data",
                axis="left",
                designs=DesignSelector(select="all"),
            ),
        ),
        axes=axes,
        annotations=tuple(annotations),
        legend=True,
        parallel_axes=tuple(cols),
    )
    prose = (
        f"Parallel coordinates over {len(cols)} normalized axes with the "
        "best design highlighted."
    )
    return prose, spec
