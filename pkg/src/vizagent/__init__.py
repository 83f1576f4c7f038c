"""Prompt-to-plot agent for simulation design studies.

Turns a natural-language request over a design study into a validated,
deterministically rendered SVG: classify the request, analyze the study,
retrieve example snippets, assemble a grounded prompt, call a pluggable
completion backend, then parse, rule-check, and render the returned plot
spec.
"""

from .analysis import (
    AnalysisReport,
    BestDesign,
    ConvergenceParams,
    ConvergenceStatus,
    CorrelationResult,
    assess_convergence,
    best_design,
    detect_scale_disparity,
    generate_report,
    min_max_normalize,
    pearson_correlation,
    running_best,
)
from .errors import (
    ColumnTypeError,
    CsvParseError,
    DuplicateScoreError,
    EmptyCorpusError,
    EmptyInputError,
    EmptySeriesError,
    FixtureMissError,
    GatewayError,
    GatewayTimeoutError,
    HttpStatusError,
    IntegrityError,
    MalformedResponseError,
    NoEligibleDesignError,
    NonFiniteValueError,
    NoSpecBlockError,
    ReportMismatchError,
    SchemaError,
    ScoreParseError,
    SpecInvariantError,
    SpecParseError,
    UnknownColumnError,
    UnknownDesignError,
    UnknownStudyError,
    UnsupportedKindError,
    VizAgentError,
    ZeroBaselineError,
)
from .evaluation import (
    AggregateStats,
    RubricScore,
    ScenarioTable,
    aggregate,
    ai_assessor_score,
    improvement,
    scenario_table,
    summarize_scenario_means,
)
from .gateway import BackendConfig, CompletionResponse, complete, mock_generate
from .pipeline import GenerationResult, Pipeline
from .plotspec import (
    Annotation,
    AxisSpec,
    DesignSelector,
    PlotSpec,
    SeriesSpec,
    Violation,
    check_guidelines,
    parse_llm_output,
    repair_prompt,
    serialize_spec,
)
from .prompting import GuidelineRule, GuidelineSet, PromptBundle, assemble, guidelines_for
from .render import render_svg
from .retrieval import Document, Index, RetrievalResult, build_index, retrieve, tokenize
from .router import ClassifiedRequest, RequestClass, classify, resolve_columns
from .study import (
    ConstraintDef,
    DesignRecord,
    ObjectiveDef,
    Study,
    VariableDef,
    load_csv,
    load_study,
)

__version__ = "0.1.0"

__all__ = [
    "AggregateStats",
    "AnalysisReport",
    "Annotation",
    "AxisSpec",
    "BackendConfig",
    "BestDesign",
    "ClassifiedRequest",
    "ColumnTypeError",
    "CompletionResponse",
    "ConstraintDef",
    "ConvergenceParams",
    "ConvergenceStatus",
    "CorrelationResult",
    "CsvParseError",
    "DesignRecord",
    "DesignSelector",
    "Document",
    "DuplicateScoreError",
    "EmptyCorpusError",
    "EmptyInputError",
    "EmptySeriesError",
    "FixtureMissError",
    "GatewayError",
    "GatewayTimeoutError",
    "GenerationResult",
    "GuidelineRule",
    "GuidelineSet",
    "HttpStatusError",
    "Index",
    "IntegrityError",
    "MalformedResponseError",
    "NoEligibleDesignError",
    "NonFiniteValueError",
    "NoSpecBlockError",
    "ObjectiveDef",
    "Pipeline",
    "PlotSpec",
    "PromptBundle",
    "ReportMismatchError",
    "RequestClass",
    "RetrievalResult",
    "RubricScore",
    "ScenarioTable",
    "SchemaError",
    "ScoreParseError",
    "SeriesSpec",
    "SpecInvariantError",
    "SpecParseError",
    "Study",
    "UnknownColumnError",
    "UnknownDesignError",
    "UnknownStudyError",
    "UnsupportedKindError",
    "VariableDef",
    "Violation",
    "VizAgentError",
    "ZeroBaselineError",
    "aggregate",
    "ai_assessor_score",
    "assemble",
    "assess_convergence",
    "best_design",
    "build_index",
    "check_guidelines",
    "classify",
    "complete",
    "detect_scale_disparity",
    "generate_report",
    "guidelines_for",
    "improvement",
    "load_csv",
    "load_study",
    "min_max_normalize",
    "mock_generate",
    "parse_llm_output",
    "pearson_correlation",
    "render_svg",
    "repair_prompt",
    "resolve_columns",
    "retrieve",
    "running_best",
    "scenario_table",
    "serialize_spec",
    "summarize_scenario_means",
    "tokenize",
]
