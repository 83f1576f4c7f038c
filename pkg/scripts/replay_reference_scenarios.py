"""Run the three canonical prompts end to end on the bundled fixture study.

Uses the deterministic mock backend, so output is reproducible offline.
With --goldens-dir the rendered SVGs are written out as regression goldens;
the acceptance suite compares pipeline output byte for byte against them.
"""

from __future__ import annotations

import argparse
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "src"))

from vizagent.pipeline import Pipeline  # noqa: E402
from vizagent.study import load_study  # noqa: E402

SCENARIOS = (
    ("history", "Please generate a history plot to check convergence."),
    (
        "relation",
        "please generate python code for 2d relation plot with variables "
        "total mass, first torsional frequency and total cost",
    ),
    ("parallel", "Please generate a parallel plot."),
)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "--study",
        default=str(REPO / "tests" / "fixtures" / "studies" / "battery-pack.json"),
        help="study JSON file to run against",
    )
    parser.add_argument(
        "--goldens-dir", help="write each rendered SVG to this directory"
    )
    args = parser.parse_args(argv)

    study = load_study(Path(args.study).read_text(encoding="utf-8"))
    with tempfile.TemporaryDirectory() as td:
        pipeline = Pipeline(td)
        pipeline.add_study(study, persist=False)
        for name, prompt in SCENARIOS:
            result = pipeline.handle_generate(study.id, prompt)
            errors = sum(1 for v in result.violations if v.is_error())
            warnings = len(result.violations) - errors
            print(f"[{name}] {prompt!r}")
            print(f"  class: {result.request.request_class.value}")
            print(f"  columns: {', '.join(result.request.columns) or '(defaults)'}")
            print(f"  violations: {errors} error(s), {warnings} warning(s)")
            print(f"  svg: {len(result.svg or '')} bytes, result {result.result_id}")
            if args.goldens_dir:
                target = Path(args.goldens_dir) / f"{name}.svg"
                target.parent.mkdir(parents=True, exist_ok=True)
                target.write_text(result.svg, encoding="utf-8")
                print(f"  wrote {target}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
