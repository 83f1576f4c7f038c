import dataclasses
import json

import pytest

from vizagent.analysis import generate_report
from vizagent.errors import EmptySeriesError, UnknownColumnError
from vizagent.gateway import mock_generate
from vizagent.plotspec import (
    Annotation,
    AxisSpec,
    DesignSelector,
    PlotSpec,
    SeriesSpec,
    parse_llm_output,
)
from vizagent.render import render_svg
from vizagent.router import ClassifiedRequest, RequestClass
from vizagent.study import load_study


def make_request(kind=RequestClass.HISTORY, columns=()):
    return ClassifiedRequest(
        request_class=kind,
        columns=tuple(columns),
        raw_prompt="synthetic",
        confidence=1.0,
        unresolved_mentions=(),
    )


def mock_spec(study, kind, columns):
    request = make_request(kind, columns)
    report = generate_report(study, request)
    return parse_llm_output(mock_generate(report, request))


def tiny_study(values, direction="minimize"):
    payload = {
        "id": "tiny",
        "title": "hand-checked",
        "variables": [],
        "objectives": [{"name": "Obj", "direction": direction}],
        "responses": [],
        "constraints": [],
        "designs": [
            {"design_id": i + 1, "values": {"Obj": v}}
            for i, v in enumerate(values)
        ],
    }
    return load_study(json.dumps(payload))


class TestHistory:
    def test_single_column_series_counts(self, battery):
        spec = mock_spec(battery, RequestClass.HISTORY, ("Total_Mass",))
        svg = render_svg(spec, battery)
        assert svg.count('class="series-data"') == 1
        assert svg.count('class="series-running-best"') == 1

    def test_hand_computed_polylines(self):
        study = tiny_study([3.0, 1.0, 2.0])
        spec = PlotSpec(
            kind=RequestClass.HISTORY,
            title="t",
            series=(
                SeriesSpec(name="Obj", columns=("Obj",), style="solid",
                           color="blue", role="data", axis="left"),
                SeriesSpec(name="Obj best", columns=("Obj",), style="solid",
                           color="gray", role="running_best", axis="left"),
            ),
            axes=(AxisSpec(label="Iteration", normalized=False, side="bottom"),
                  AxisSpec(label="Obj", normalized=False, side="left")),
        )
        svg = render_svg(spec, study)
        # x: 1 -> 60, 2 -> 480, 3 -> 900; y over [1, 3]: 3 -> 60, 1 -> 540
        assert 'points="60.00,60.00 480.00,540.00 900.00,300.00"' in svg
        # running best [3, 1, 1]
        assert 'points="60.00,60.00 480.00,540.00 900.00,540.00"' in svg

    def test_dashed_non_converged_series(self, battery):
        spec = mock_spec(
            battery, RequestClass.HISTORY,
            ("Total_Mass", "First_Torsion_Frequency"),
        )
        svg = render_svg(spec, battery)
        dashed = [
            line for line in svg.splitlines()
            if 'class="series-data"' in line and "stroke-dasharray" in line
        ]
        assert len(dashed) == 1
        assert 'stroke-dasharray="6,4"' in dashed[0]

    def test_byte_determinism(self, battery):
        spec = mock_spec(
            battery, RequestClass.HISTORY,
            ("Total_Mass", "First_Torsion_Frequency"),
        )
        assert render_svg(spec, battery) == render_svg(spec, battery)

    def test_integer_x_ticks(self, battery):
        spec = mock_spec(battery, RequestClass.HISTORY, ("Total_Mass",))
        svg = render_svg(spec, battery)
        # 30 designs: tick marks snap to whole design indices
        for label in (">1<", ">8<", ">16<", ">23<", ">30<"):
            assert label in svg

    def test_best_design_ring_labeled(self, battery):
        spec = mock_spec(battery, RequestClass.HISTORY, ("Total_Mass",))
        best = next(a for a in spec.annotations if a.kind == "best_design")
        svg = render_svg(spec, battery)
        assert 'class="best-design-marker"' in svg
        assert f"best #{best.design_id}" in svg

    def test_legend_lists_every_series(self, battery):
        spec = mock_spec(
            battery, RequestClass.HISTORY,
            ("Total_Mass", "First_Torsion_Frequency"),
        )
        svg = render_svg(spec, battery)
        assert svg.count('class="legend"') == 1
        assert "Total_Mass (best so far)" in svg
        assert "First_Torsion_Frequency (best so far)" in svg

    def test_unknown_column(self, battery):
        spec = mock_spec(battery, RequestClass.HISTORY, ("Total_Mass",))
        broken = dataclasses.replace(
            spec,
            series=(dataclasses.replace(spec.series[0], columns=("Ghost",)),)
            + spec.series[1:],
        )
        with pytest.raises(UnknownColumnError) as info:
            render_svg(broken, battery)
        assert "Ghost" in str(info.value)
        assert "battery-pack" in str(info.value)

    def test_all_missing_column_is_empty_series(self):
        study = tiny_study([None, None, None])
        spec = PlotSpec(
            kind=RequestClass.HISTORY,
            title="t",
            series=(SeriesSpec(name="Obj", columns=("Obj",), style="solid",
                               color="blue", role="data", axis="left"),),
            axes=(AxisSpec(label="Obj", normalized=False, side="left"),),
        )
        with pytest.raises(EmptySeriesError):
            render_svg(spec, study)

    def test_empty_points_list_rejected(self, battery):
        spec = PlotSpec(
            kind=RequestClass.HISTORY,
            title="t",
            series=(SeriesSpec(name="pts", columns=(), points=(),
                               style="solid", color="blue", role="data"),),
            axes=(AxisSpec(label="y", normalized=False, side="left"),),
        )
        with pytest.raises(EmptySeriesError):
            render_svg(spec, battery)

    def test_canvas_and_title(self, battery):
        spec = mock_spec(battery, RequestClass.HISTORY, ("Total_Mass",))
        svg = render_svg(spec, battery)
        assert svg.startswith('<svg xmlns="http://www.w3.org/2000/svg" width="960" height="600"')
        assert 'viewBox="0 0 960 600"' in svg
        assert svg.rstrip().endswith("</svg>")

    def test_title_escaped(self, battery):
        spec = mock_spec(battery, RequestClass.HISTORY, ("Total_Mass",))
        spec = dataclasses.replace(spec, title='Mass & <"friends">')
        svg = render_svg(spec, battery)
        assert "Mass &amp; &lt;&quot;friends&quot;&gt;" in svg
        assert '<"friends">' not in svg


class TestRelation:
    def test_feasibility_coloring_counts(self, battery):
        spec = mock_spec(
            battery, RequestClass.RELATION2D, ("Total_Mass", "Total_Cost")
        )
        svg = render_svg(spec, battery)
        assert svg.count('class="point-data"') == len(battery.designs)
        # 18 feasible (series blue), 12 infeasible (red)
        assert svg.count('fill="#1f77b4"') == 18
        assert svg.count('fill="#d62728"') == 12

    def test_legend_splits_feasibility(self, battery):
        spec = mock_spec(
            battery, RequestClass.RELATION2D, ("Total_Mass", "Total_Cost")
        )
        svg = render_svg(spec, battery)
        assert "designs (feasible)" in svg
        assert "designs (infeasible)" in svg

    def test_correlation_note_rendered_top_left(self, battery):
        spec = mock_spec(
            battery, RequestClass.RELATION2D, ("Total_Mass", "Total_Cost")
        )
        note = next(a for a in spec.annotations if a.kind == "text")
        svg = render_svg(spec, battery)
        assert note.text in svg
        assert f'<text x="70.00" y="80.00" text-anchor="start" font-size="12" fill="#222222">{note.text}</text>' in svg

    def test_best_ring_present(self, battery):
        spec = mock_spec(
            battery, RequestClass.RELATION2D, ("Total_Mass", "Total_Cost")
        )
        best = next(a for a in spec.annotations if a.kind == "best_design")
        svg = render_svg(spec, battery)
        assert f"best #{best.design_id}" in svg

    def test_missing_cells_dropped(self, motor):
        # Von_Mises_Stress is missing for one design; that point vanishes
        spec = mock_spec(
            motor, RequestClass.RELATION2D,
            ("Max_Displacement", "Von_Mises_Stress"),
        )
        svg = render_svg(spec, motor)
        assert svg.count('class="point-data"') == len(motor.designs) - 1

    def test_id_selector_outside_study_is_empty(self, battery):
        spec = mock_spec(
            battery, RequestClass.RELATION2D, ("Total_Mass", "Total_Cost")
        )
        broken = dataclasses.replace(
            spec,
            series=(dataclasses.replace(
                spec.series[0], designs=DesignSelector(select="ids", ids=(9999,))
            ),),
        )
        with pytest.raises(EmptySeriesError):
            render_svg(broken, battery)

    def test_determinism(self, battery):
        spec = mock_spec(
            battery, RequestClass.RELATION2D, ("Total_Mass", "Total_Cost")
        )
        assert render_svg(spec, battery) == render_svg(spec, battery)


class TestParallel:
    COLS = ("Cell_Thickness", "Total_Mass", "Total_Cost")

    def test_normalized_axes_show_original_extremes(self, battery):
        spec = mock_spec(battery, RequestClass.PARALLEL, self.COLS)
        svg = render_svg(spec, battery)
        values = {}
        for col in self.COLS:
            present = [
                d.values[col] for d in battery.designs
                if isinstance(d.values.get(col), (int, float))
            ]
            values[col] = (min(present), max(present))
        import vizagent.render as render_mod

        for col in self.COLS:
            lo, hi = values[col]
            assert f">{render_mod.fmt_label(lo)}<" in svg
            assert f">{render_mod.fmt_label(hi)}<" in svg

    def test_design_line_counts(self, battery):
        spec = mock_spec(battery, RequestClass.PARALLEL, self.COLS)
        svg = render_svg(spec, battery)
        # one best design is pulled out of the bundle and drawn on top
        assert svg.count('class="design-line"') == len(battery.designs) - 1
        assert svg.count('class="best-design-line"') == 1

    def test_best_line_drawn_after_bundle(self, battery):
        spec = mock_spec(battery, RequestClass.PARALLEL, self.COLS)
        svg = render_svg(spec, battery)
        assert svg.rindex('class="design-line"') < svg.index('class="best-design-line"')

    def test_best_vertices_ringed(self, battery):
        spec = mock_spec(battery, RequestClass.PARALLEL, self.COLS)
        svg = render_svg(spec, battery)
        assert svg.count('class="best-design-marker"') == len(self.COLS)

    def test_categorical_axis_coded(self, battery):
        cols = ("Material", "Total_Mass", "Total_Cost")
        spec = mock_spec(battery, RequestClass.PARALLEL, cols)
        svg = render_svg(spec, battery)
        # Material codes span 0..2, shown as the axis extremes
        assert ">0<" in svg
        assert ">2<" in svg

    def test_unnormalized_axes_share_global_ticks(self, battery):
        spec = mock_spec(battery, RequestClass.PARALLEL, self.COLS)
        denorm = dataclasses.replace(
            spec,
            axes=tuple(dataclasses.replace(a, normalized=False) for a in spec.axes),
        )
        svg = render_svg(denorm, battery)
        # global tick rail on the left edge replaces per-axis extremes
        assert svg.count('x1="55.00"') >= 5

    def test_axis_without_values(self):
        study = tiny_study([None, None, None])
        spec = PlotSpec(
            kind=RequestClass.PARALLEL,
            title="t",
            series=(SeriesSpec(name="designs", columns=(), style="solid",
                               color="blue", role="data",
                               designs=DesignSelector(select="all")),),
            axes=(),
            parallel_axes=("Obj", "A", "B"),
        )
        with pytest.raises(UnknownColumnError):
            render_svg(spec, study)

    def test_no_complete_design(self):
        payload = {
            "id": "gappy",
            "title": "never complete",
            "variables": [
                {"name": "A", "kind": "continuous", "bounds": [0, 10]},
                {"name": "B", "kind": "continuous", "bounds": [0, 10]},
            ],
            "objectives": [{"name": "Obj", "direction": "minimize"}],
            "responses": [],
            "constraints": [],
            "designs": [
                {"design_id": 1, "values": {"A": 1.0, "B": None, "Obj": 3.0}},
                {"design_id": 2, "values": {"A": None, "B": 2.0, "Obj": 4.0}},
            ],
        }
        study = load_study(json.dumps(payload))
        spec = PlotSpec(
            kind=RequestClass.PARALLEL,
            title="t",
            series=(SeriesSpec(name="designs", columns=(), style="solid",
                               color="blue", role="data",
                               designs=DesignSelector(select="all")),),
            axes=(),
            parallel_axes=("A", "B", "Obj"),
        )
        with pytest.raises(EmptySeriesError) as info:
            render_svg(spec, study)
        assert "every plotted axis" in str(info.value)

    def test_determinism(self, battery):
        spec = mock_spec(battery, RequestClass.PARALLEL, self.COLS)
        assert render_svg(spec, battery) == render_svg(spec, battery)
