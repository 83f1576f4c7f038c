"""Release gate: one test per shipping criterion.

Each test prints a single `[acceptance] ... PASS/FAIL` line (visible even
under captured output) and enforces its own runtime budget.
"""

import json
import math
import random
from collections import Counter
from contextlib import contextmanager
from dataclasses import replace
from time import perf_counter

import pytest

from vizagent.analysis import (
    ConvergenceParams,
    assess_convergence,
    generate_report,
    min_max_normalize,
    pearson_correlation,
    running_best,
)
from vizagent.errors import (
    FixtureMissError,
    SchemaError,
    UnknownColumnError,
    UnsupportedKindError,
)
from vizagent.evaluation import aggregate, summarize_scenario_means
from vizagent.gateway import BackendConfig, complete, mock_generate
from vizagent.pipeline import REFUSAL_MESSAGE, Pipeline
from vizagent.plotspec import SeriesSpec, check_guidelines, parse_llm_output
from vizagent.prompting import assemble, default_system_text, guidelines_for
from vizagent.render import render_svg
from vizagent.retrieval import build_index, load_corpus_dir, retrieve
from vizagent.router import RequestClass, classify
from vizagent.study import load_study

from conftest import FIXTURES, GOLDENS
from genstudy import random_request, random_series, random_study
from test_errors import TRIGGERS, declared_error_classes
from test_retrieval import oracle_scores

SCENARIO_MEANS = json.loads(
    (FIXTURES / "scores" / "scenario_means.json").read_text(encoding="utf-8")
)

PROMPTS = {
    RequestClass.HISTORY: "Please generate a history plot to check convergence.",
    RequestClass.RELATION2D: (
        "please generate python code for 2d relation plot with variables "
        "total mass, first torsional frequency and total cost"
    ),
    RequestClass.PARALLEL: "Please generate a parallel plot.",
}

GOLDEN_FILES = {
    RequestClass.HISTORY: "history.svg",
    RequestClass.RELATION2D: "relation.svg",
    RequestClass.PARALLEL: "parallel.svg",
}


@contextmanager
def criterion(capsys, number, label, budget_s=None):
    start = perf_counter()
    try:
        yield
    except BaseException:
        with capsys.disabled():
            print(f"[acceptance] criterion {number} ({label}): FAIL")
        raise
    elapsed = perf_counter() - start
    over_budget = budget_s is not None and elapsed >= budget_s
    status = "FAIL (over runtime budget)" if over_budget else "PASS"
    with capsys.disabled():
        print(
            f"[acceptance] criterion {number} ({label}): {status}"
            f" in {elapsed:.2f}s"
            + (f" (budget {budget_s:.0f}s)" if budget_s is not None else "")
        )
    if over_budget:
        pytest.fail(f"{label}: {elapsed:.2f}s exceeds {budget_s}s budget")


def test_criterion_1_statistics_regression(capsys):
    with criterion(capsys, 1, "statistics regression", budget_s=1.0):
        summary = summarize_scenario_means(
            SCENARIO_MEANS["proposed"], SCENARIO_MEANS["baseline"]
        )
        assert abs(summary["proposed_summary_mean"] - 2.60) <= 0.005
        assert abs(summary["baseline_summary_mean"] - 0.85) <= 0.005
        assert abs(summary["overall_improvement_pct"] - 206) <= 0.5
        expected = {"S1": 267, "S2": 71, "S3": 450, "S4": 614, "S5": 76}
        for scenario, pct in expected.items():
            assert abs(summary["per_scenario_improvement_pct"][scenario] - pct) <= 1


def test_criterion_2_aggregation_oracle(capsys):
    with criterion(capsys, 2, "aggregation oracle", budget_s=5.0):
        rng = random.Random(20260822)
        for _ in range(1000):
            values = [rng.randint(0, 4) for _ in range(rng.randint(1, 20))]
            stats = aggregate(values)
            n = len(values)
            mean = sum(values) / n
            sd = (
                None if n == 1
                else math.sqrt(sum((v - mean) ** 2 for v in values) / (n - 1))
            )
            counts = Counter(values)
            top = max(counts.values())
            mode = min(v for v, c in counts.items() if c == top)
            assert stats.n == n
            assert stats.mean == mean
            if sd is None:
                assert stats.sd is None
            else:
                assert abs(stats.sd - sd) <= 1e-9
            assert stats.mode == mode

        cell = aggregate([3] * 7 + [4] * 5)
        assert round(cell.mean, 2) == 3.42
        assert round(cell.sd, 2) == 0.51
        assert cell.mode == 3


def test_criterion_3_guideline_compliance(capsys, battery):
    with criterion(capsys, 3, "guideline compliance", budget_s=30.0):
        rng = random.Random(13)
        for i in range(500):
            study = random_study(rng, study_id=f"rand{i}")
            request = random_request(rng, study)
            report = generate_report(study, request)
            spec = parse_llm_output(mock_generate(report, request))
            assert not check_guidelines(spec, report), (
                f"seed case {i}: mock output broke its own rules"
            )

        # mutations flip exactly the rule they target
        request = classify(PROMPTS[RequestClass.HISTORY], battery)
        report = generate_report(battery, request)
        spec = parse_llm_output(mock_generate(report, request))
        assert not check_guidelines(spec, report)

        solidified = replace(spec, series=tuple(
            replace(s, style="solid") for s in spec.series
        ))
        assert [v.rule_id for v in check_guidelines(solidified, report)] == ["H3"]

        extra = SeriesSpec(
            name="Total_Mass (again)", columns=("Total_Mass",),
            style="solid", color="green", role="data", axis="left",
        )
        crowded = replace(spec, series=spec.series + (extra,))
        assert [v.rule_id for v in check_guidelines(crowded, report)] == ["H2"]

        bare = replace(spec, annotations=())
        assert [v.rule_id for v in check_guidelines(bare, report)] == ["H1"]


def test_criterion_4_rule_engine_properties(capsys):
    with criterion(capsys, 4, "rule-engine properties", budget_s=30.0):
        rng = random.Random(4447)

        for _ in range(1000):
            series = random_series(rng)
            direction = rng.choice(("minimize", "maximize"))
            got = running_best(series, direction)
            pick = min if direction == "minimize" else max
            expected = [pick(series[: i + 1]) for i in range(len(series))]
            assert got == expected

        assert pearson_correlation([1, 2, 3, 4], [2, 1, 4, 3]).r == 0.6
        for _ in range(1000):
            n = rng.randint(2, 50)
            x = [rng.uniform(-10, 10) for _ in range(n)]
            y = [rng.uniform(-10, 10) for _ in range(n)]
            got = pearson_correlation(x, y).r
            mx, my = sum(x) / n, sum(y) / n
            sxx = sum((a - mx) ** 2 for a in x)
            syy = sum((b - my) ** 2 for b in y)
            sxy = sum((a - mx) * (b - my) for a, b in zip(x, y))
            if sxx == 0.0 or syy == 0.0:
                assert got is None
            else:
                assert abs(got - sxy / math.sqrt(sxx * syy)) <= 1e-12

        for i in range(1000):
            if i % 3 == 0:
                base = rng.uniform(-5, 5) * rng.choice((1e-3, 1.0, 1e4))
                series = [
                    base + rng.uniform(-1e-4, 1e-4) * max(abs(base), 1.0)
                    for _ in range(rng.randint(1, 40))
                ]
            else:
                series = random_series(rng, n_min=1, n_max=40)
            params = ConvergenceParams(
                window=rng.randint(2, 15),
                rel_tol=rng.choice((0.2, 0.05, 0.01)),
            )
            status = assess_convergence(series, params)
            used = min(len(series), params.window)
            tail = series[-used:]
            span = max(abs(a - b) for a in tail for b in tail)
            denom = max(max(abs(v) for v in tail), params.abs_floor)
            assert status.window_used == used
            assert abs(status.rel_range - span / denom) <= 1e-12
            assert status.converged == (
                len(series) >= params.window and span / denom <= params.rel_tol
            )

        for _ in range(1000):
            series = random_series(rng, n_min=1, n_max=40)
            normalized = min_max_normalize(series)
            assert all(0.0 <= v <= 1.0 for v in normalized)
            if max(series) > min(series):
                assert normalized.index(max(normalized)) == series.index(max(series))


def test_criterion_5_retrieval_determinism(capsys):
    with criterion(capsys, 5, "retrieval determinism", budget_s=5.0):
        docs = load_corpus_dir(FIXTURES / "corpus20")
        assert len(docs) == 20
        index = build_index(docs)

        queries = (
            "history plot convergence",
            "scatter of mass and frequency",
            "parallel axes normalized",
            "legend colors for feasible designs",
            "best design highlight marker",
        )
        for query in queries:
            hits = retrieve(index, query, k=20)
            expected = oracle_scores(docs, query)
            assert {h.doc_id for h in hits} == set(expected)
            for h in hits:
                assert abs(h.score - expected[h.doc_id]) <= 1e-9

        rng = random.Random(99)
        baseline = [
            [(h.doc_id, h.score) for h in retrieve(index, q, k=20)]
            for q in queries
        ]
        for _ in range(5):
            shuffled = list(docs)
            rng.shuffle(shuffled)
            permuted = build_index(shuffled)
            for q, expected_hits in zip(queries, baseline):
                got = [(h.doc_id, h.score) for h in retrieve(permuted, q, k=20)]
                assert got == expected_hits

        for doc in docs:
            hits = retrieve(index, doc.text, k=1, plot_kind=doc.plot_kind)
            assert hits and hits[0].doc_id == doc.doc_id


def test_criterion_6_end_to_end(capsys, tmp_path, battery):
    with criterion(capsys, 6, "end-to-end generation", budget_s=10.0):
        pipeline = Pipeline(tmp_path / "data")
        pipeline.add_study(battery)
        for kind, prompt in PROMPTS.items():
            first = pipeline.handle_generate("battery-pack", prompt)
            second = pipeline.handle_generate("battery-pack", prompt)
            assert first.request.request_class is kind
            assert "converged" in first.report.rendered_text
            assert first.spec is not None and first.spec.kind is kind
            assert not any(v.is_error() for v in first.violations)
            assert first.svg == second.svg
            golden = (GOLDENS / GOLDEN_FILES[kind]).read_text(encoding="utf-8")
            assert first.svg == golden, f"{kind.value} SVG deviates from golden"


def test_criterion_7_robustness(capsys, tmp_path, battery):
    with criterion(capsys, 7, "robustness"):
        with pytest.raises(SchemaError):
            load_study('{"id": "x"}')

        request = classify("history plot", battery)
        report = generate_report(battery, request)
        spec = parse_llm_output(mock_generate(report, request))
        ghost = replace(spec, series=(
            replace(spec.series[0], columns=("Ghost",)),
        ) + spec.series[1:])
        with pytest.raises(UnknownColumnError):
            render_svg(ghost, battery)

        with pytest.raises(UnsupportedKindError):
            guidelines_for("pie")
        pipeline = Pipeline(tmp_path / "data")
        pipeline.add_study(battery)
        refused = pipeline.handle_generate("battery-pack", "plan my holiday")
        assert refused.refusal == REFUSAL_MESSAGE

        fixture = tmp_path / "empty.jsonl"
        fixture.write_text("", encoding="utf-8")
        bundle = assemble(
            default_system_text(), guidelines_for(request.request_class),
            report, [], "history plot",
        )
        with pytest.raises(FixtureMissError):
            complete(bundle, BackendConfig(mode="replay", fixture_path=str(fixture)))

        # the error-injection suite must cover every declared error class
        assert set(declared_error_classes()) == set(TRIGGERS)
