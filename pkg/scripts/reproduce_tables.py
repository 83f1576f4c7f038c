"""Rebuild the evaluation aggregates from the checked-in score fixtures.

Prints the per-scenario rubric table from raw JSONL scores, then the
cross-system output-quality summary with overall and per-scenario
improvement percentages.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "src"))

from vizagent.evaluation import (  # noqa: E402
    load_scores_jsonl,
    scenario_table,
    summarize_scenario_means,
    table_text,
)

FIXTURES = REPO / "tests" / "fixtures" / "scores"


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "--scores", default=str(FIXTURES / "rubric_scores.jsonl"),
        help="JSONL file of rubric scores",
    )
    parser.add_argument(
        "--means", default=str(FIXTURES / "scenario_means.json"),
        help="JSON file with per-scenario output-quality means",
    )
    args = parser.parse_args(argv)

    table = scenario_table(load_scores_jsonl(args.scores))
    print(table_text(table))

    means = json.loads(Path(args.means).read_text(encoding="utf-8"))
    summary = summarize_scenario_means(means["proposed"], means["baseline"])
    print("output-quality summary")
    print(f"  proposed mean of scenario means: {summary['proposed_summary_mean']:.2f}")
    print(f"  baseline mean of scenario means: {summary['baseline_summary_mean']:.2f}")
    print(f"  overall improvement: {summary['overall_improvement_pct']}%")
    for scenario, pct in summary["per_scenario_improvement_pct"].items():
        print(f"  {scenario}: {pct}%")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
