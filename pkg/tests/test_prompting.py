import pytest

from vizagent.analysis import generate_report
from vizagent.errors import SchemaError, UnsupportedKindError
from vizagent.prompting import (
    NO_SNIPPETS_MARKER,
    OUTPUT_CONTRACT,
    SECTION_DELIMITER,
    GuidelineRule,
    GuidelineSet,
    assemble,
    default_system_text,
    guidelines_for,
)
from vizagent.retrieval import Document
from vizagent.router import ClassifiedRequest, RequestClass


def make_request(kind=RequestClass.HISTORY, columns=("Total_Mass",)):
    return ClassifiedRequest(
        request_class=kind,
        columns=tuple(columns),
        raw_prompt="synthetic",
        confidence=1.0,
        unresolved_mentions=(),
    )


SNIPPETS = [
    Document(doc_id="s1", text="Use dashed lines before convergence."),
    Document(doc_id="s2", text="Overlay the running best."),
    Document(doc_id="s3", text="Keep the legend outside the data area."),
]


class TestGuidelinesFor:
    def test_history_rules(self):
        rules = guidelines_for(RequestClass.HISTORY)
        assert rules.rule_ids() == ("H1", "H2", "H3", "H4", "H5", "H6")
        assert "no more than 2" in rules.rule("H2").text
        assert "dashed" in rules.rule("H3").text

    def test_relation_rules(self):
        rules = guidelines_for(RequestClass.RELATION2D)
        assert rules.rule_ids() == ("R1", "R2", "R3", "R4")
        assert "color" in rules.rule("R2").text.lower()

    def test_parallel_rules(self):
        rules = guidelines_for(RequestClass.PARALLEL)
        assert rules.rule_ids() == ("P1", "P2", "P3")
        assert "Normalize" in rules.rule("P1").text

    def test_string_argument_matches_enum(self):
        assert guidelines_for("history") == guidelines_for(RequestClass.HISTORY)

    def test_unknown_kind(self):
        for bad in ("unsupported", "UNSUPPORTED", "pie"):
            with pytest.raises(UnsupportedKindError):
                guidelines_for(bad)

    def test_severities_closed_set(self):
        for kind in (RequestClass.HISTORY, RequestClass.RELATION2D, RequestClass.PARALLEL):
            for rule in guidelines_for(kind).rules:
                assert rule.severity in ("error", "warning")

    def test_rule_lookup_miss(self):
        with pytest.raises(KeyError):
            guidelines_for(RequestClass.HISTORY).rule("H99")

    def test_bad_severity_rejected(self):
        with pytest.raises(SchemaError):
            GuidelineRule(rule_id="X1", text="t", severity="fatal")

    def test_as_text_one_line_per_rule(self):
        rules = guidelines_for(RequestClass.PARALLEL)
        lines = rules.as_text().splitlines()
        assert len(lines) == len(rules.rules)
        assert lines[0].startswith("P1: ")


class TestAssemble:
    def bundle(self, battery, snippets=SNIPPETS, max_bytes=None, kind=RequestClass.HISTORY):
        request = make_request(kind)
        report = generate_report(battery, request)
        return assemble(
            default_system_text(),
            guidelines_for(kind),
            report,
            snippets,
            "Please generate a history plot to check convergence.",
            max_bytes=max_bytes,
        )

    def test_deterministic(self, battery):
        assert self.bundle(battery).assembled == self.bundle(battery).assembled

    def test_section_order(self, battery):
        text = self.bundle(battery).assembled
        positions = [text.index(f"{SECTION_DELIMITER}{name}")
                     for name in ("system", "guidelines", "report", "snippets", "user")]
        assert positions == sorted(positions)
        assert text.count(SECTION_DELIMITER) == 5

    def test_output_contract_in_system_section(self, battery):
        text = self.bundle(battery).assembled
        assert OUTPUT_CONTRACT in text
        assert text.index(OUTPUT_CONTRACT) < text.index(f"{SECTION_DELIMITER}guidelines")

    def test_each_rule_text_exactly_once(self, battery):
        text = self.bundle(battery).assembled
        for rule in guidelines_for(RequestClass.HISTORY).rules:
            assert text.count(rule.text) == 1

    def test_report_mentions_convergence_state(self, battery):
        bundle = self.bundle(battery)
        # battery fixture: Total_Mass settles, First_Torsion_Frequency keeps
        # oscillating, so the report carries both words.
        assert "converged" in bundle.report_text
        assert "not converged" in bundle.report_text
        assert bundle.report_text in bundle.assembled

    def test_snippets_numbered_by_rank(self, battery):
        bundle = self.bundle(battery)
        assert bundle.snippet_texts[0].startswith("--- example 1: s1\n")
        assert bundle.snippet_texts[2].startswith("--- example 3: s3\n")

    def test_no_snippets_marker(self, battery):
        bundle = self.bundle(battery, snippets=[])
        assert NO_SNIPPETS_MARKER in bundle.assembled
        assert bundle.dropped_snippets == 0

    def test_user_text_last(self, battery):
        text = self.bundle(battery).assembled
        assert text.endswith(
            f"{SECTION_DELIMITER}user\nPlease generate a history plot to check convergence."
        )

    def test_budget_drops_lowest_rank_first(self, battery):
        full = self.bundle(battery)
        budget = len(full.assembled.encode("utf-8")) - 1
        trimmed = self.bundle(battery, max_bytes=budget)
        assert trimmed.dropped_snippets == 1
        assert trimmed.snippet_texts == full.snippet_texts[:2]
        assert "s3" not in trimmed.assembled
        assert "s1" in trimmed.assembled

    def test_budget_never_drops_report_or_guidelines(self, battery):
        trimmed = self.bundle(battery, max_bytes=10)
        assert trimmed.dropped_snippets == len(SNIPPETS)
        assert trimmed.snippet_texts == ()
        assert NO_SNIPPETS_MARKER in trimmed.assembled
        assert trimmed.report_text in trimmed.assembled
        assert guidelines_for(RequestClass.HISTORY).as_text() in trimmed.assembled

    def test_generous_budget_drops_nothing(self, battery):
        full = self.bundle(battery)
        budgeted = self.bundle(
            battery, max_bytes=len(full.assembled.encode("utf-8"))
        )
        assert budgeted == full

    def test_guideline_set_roundtrip_into_bundle(self, battery):
        bundle = self.bundle(battery, kind=RequestClass.PARALLEL)
        assert bundle.guideline_text == guidelines_for(RequestClass.PARALLEL).as_text()


class TestDefaultSystemText:
    def test_nonempty_and_stable(self):
        text = default_system_text()
        assert text
        assert text == text.strip()
        assert default_system_text() == text
