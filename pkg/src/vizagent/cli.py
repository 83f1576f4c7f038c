"""Command-line front door.

Exit codes: 0 success, 1 user error (bad input, unknown study, missing
fixture), 2 unexpected internal failure. Every subcommand accepts --json
for machine-readable output.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .errors import VizAgentError
from .evaluation import (
    load_scores_jsonl,
    scenario_table,
    summarize_scenario_means,
    table_text,
    table_to_dict,
)
from .gateway import MODES, BackendConfig
from .pipeline import Pipeline
from .retrieval import build_index, load_corpus_dir, save_index
from .server import create_server


def _default_data_dir() -> str:
    return os.environ.get("VIZAGENT_DATA_DIR", "vizagent-data")


def _make_pipeline(args) -> Pipeline:
    backend = BackendConfig.from_env()
    if getattr(args, "backend", None):
        from dataclasses import replace

        backend = replace(backend, mode=args.backend)
    return Pipeline(args.data_dir, backend=backend)


def _emit(args, payload: dict, human: str) -> None:
    if args.json:
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(human)


def _cmd_ingest(args) -> int:
    pipeline = _make_pipeline(args)
    study = pipeline.load_study_file(args.path)
    _emit(
        args,
        {"study_id": study.id, "designs": len(study.designs)},
        f"ingested study {study.id!r} ({len(study.designs)} designs)",
    )
    return 0


def _cmd_ask(args) -> int:
    pipeline = _make_pipeline(args)
    result = pipeline.handle_generate(
        args.study_id, args.prompt, repair=args.repair
    )
    svg_path = None
    if result.svg is not None:
        svg_path = args.out or str(pipeline.results_dir / f"{result.result_id}.svg")
        if args.out:
            Path(args.out).write_text(result.svg, encoding="utf-8")
    if args.json:
        print(json.dumps(result.to_dict(), indent=2, sort_keys=True))
        return 0
    if result.refusal:
        print(f"refused: {result.refusal}")
        return 0
    lines = [
        f"result {result.result_id}",
        f"class: {result.request.request_class.value}",
        f"columns: {', '.join(result.request.columns) or '(defaults)'}",
    ]
    if result.spec_error:
        lines.append(f"spec error: {result.spec_error}")
    errors = sum(1 for v in result.violations if v.is_error())
    warnings = len(result.violations) - errors
    lines.append(f"violations: {errors} error(s), {warnings} warning(s)")
    for v in result.violations:
        lines.append(f"  [{v.severity}] {v.rule_id} {v.element}: {v.message}")
    if svg_path:
        lines.append(f"svg: {svg_path}")
    if result.render_error:
        lines.append(f"render error: {result.render_error}")
    print("\n".join(lines))
    return 0


def _cmd_render(args) -> int:
    pipeline = _make_pipeline(args)
    try:
        svg = pipeline.load_result_svg(args.result_id)
    except OSError:
        raise VizAgentError(f"no rendered SVG for result {args.result_id!r}") from None
    if args.out:
        Path(args.out).write_text(svg, encoding="utf-8")
        _emit(args, {"out": args.out}, f"wrote {args.out}")
    else:
        print(svg, end="")
    return 0


def _cmd_eval(args) -> int:
    text = Path(args.scores).read_text(encoding="utf-8")
    means_payload = None
    try:
        parsed = json.loads(text)
        if isinstance(parsed, dict) and "proposed" in parsed and "baseline" in parsed:
            means_payload = parsed
    except json.JSONDecodeError:
        pass

    if means_payload is not None:
        summary = summarize_scenario_means(
            means_payload["proposed"], means_payload["baseline"]
        )
        if args.json:
            print(json.dumps(summary, indent=2, sort_keys=True))
            return 0
        print(
            "output quality means: proposed "
            f"{summary['proposed_summary_mean']:.2f}, baseline "
            f"{summary['baseline_summary_mean']:.2f}"
        )
        print(f"overall improvement: {summary['overall_improvement_pct']}%")
        for scenario, pct in summary["per_scenario_improvement_pct"].items():
            print(f"  {scenario}: {pct}%")
        return 0

    table = scenario_table(load_scores_jsonl(args.scores))
    if args.json:
        print(json.dumps(table_to_dict(table), indent=2, sort_keys=True))
    else:
        print(table_text(table), end="")
    return 0


def _cmd_corpus_index(args) -> int:
    docs = load_corpus_dir(args.path)
    index = build_index(docs)
    payload = {"documents": index.doc_count, "terms": len(index.vocabulary)}
    if args.out:
        save_index(index, args.out)
        payload["out"] = args.out
    _emit(
        args,
        payload,
        f"indexed {index.doc_count} documents, {len(index.vocabulary)} terms"
        + (f" -> {args.out}" if args.out else ""),
    )
    return 0


def _cmd_serve(args) -> int:
    pipeline = _make_pipeline(args)
    server = create_server(
        pipeline, host=args.host, port=args.port, static_dir=args.static
    )
    host, port = server.server_address[:2]
    print(f"serving on http://{host}:{port} (data dir: {pipeline.data_dir})")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vizagent",
        description="Generate validated simulation-study visualizations from prompts.",
    )
    parser.add_argument(
        "--data-dir", default=_default_data_dir(),
        help="directory for persisted studies and results",
    )
    parser.add_argument("--json", action="store_true", help="machine-readable output")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate and register a study file")
    p.add_argument("path")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("ask", help="run the full generate pipeline for a prompt")
    p.add_argument("study_id")
    p.add_argument("prompt")
    p.add_argument("--backend", choices=MODES, help="override backend mode")
    p.add_argument("--out", help="write the rendered SVG here")
    p.add_argument("--repair", action="store_true",
                   help="retry once when error-severity violations remain")
    p.set_defaults(func=_cmd_ask)

    p = sub.add_parser("render", help="print or save a stored result's SVG")
    p.add_argument("result_id")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_render)

    p = sub.add_parser("eval", help="aggregate rubric scores or scenario means")
    p.add_argument("scores", help="JSONL of rubric scores, or JSON of scenario means")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("corpus-index", help="build a retrieval index from snippets")
    p.add_argument("path")
    p.add_argument("--out", help="persist the index to this JSON file")
    p.set_defaults(func=_cmd_corpus_index)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--static", help="directory with the web console bundle")
    p.add_argument("--backend", choices=MODES, help="default backend mode")
    p.set_defaults(func=_cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except VizAgentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # pragma: no cover - unexpected failure path
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
