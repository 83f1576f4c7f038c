#!/usr/bin/env python3
"""Regenerate the fixture studies under tests/fixtures/studies/.

Deterministic: a fixed seed yields byte-identical JSON, so goldens that
render these studies stay stable. Each study is crafted to exercise one
corner of the pipeline:

  battery-pack   two objectives (one converged, one not), a categorical
                 variable, a cost constraint splitting the designs into
                 feasible and infeasible, and column scales spanning more
                 than three orders of magnitude
  motor-bracket  single objective, no constraints, one missing evaluation
  control-arm    >=-relation constraint and several missing evaluations
"""

from __future__ import annotations

import random
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from vizagent.study import load_study, export_study  # noqa: E402

OUT_DIR = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "studies"


def _round(values: dict, digits: int = 6) -> dict:
    out = {}
    for key, val in values.items():
        out[key] = round(val, digits) if isinstance(val, float) else val
    return out


def battery_pack() -> dict:
    rng = random.Random(20240817)
    materials = ["AL6061", "STEEL", "CFRP"]
    designs = []
    for i in range(1, 31):
        # Total_Mass: decays toward 52 kg; the last ten samples sit inside a
        # +-0.2 band, comfortably under the 1% trailing-window tolerance.
        if i <= 20:
            mass = 82.0 - 1.55 * i + rng.uniform(-1.5, 1.5)
        else:
            mass = 52.0 + rng.uniform(-0.2, 0.2)
        # First_Torsion_Frequency: keeps oscillating +-3 Hz, never converges.
        freq = 38.0 + 0.12 * i + 3.0 * (1 if i % 2 else -1) + rng.uniform(-0.5, 0.5)
        thickness = rng.uniform(0.0012, 0.0095)
        width = rng.uniform(2.0, 10.0)
        cost = 900.0 + 140.0 * thickness * 1000 + rng.uniform(-80.0, 680.0)
        designs.append(
            {
                "design_id": i,
                "values": _round(
                    {
                        "Cell_Thickness": thickness,
                        "Cooling_Channel_Width": width,
                        "Material": materials[rng.randrange(3)],
                        "Total_Mass": mass,
                        "First_Torsion_Frequency": freq,
                        "Total_Cost": cost,
                    }
                ),
            }
        )
    return {
        "id": "battery-pack",
        "title": "Battery pack structural study",
        "variables": [
            {"name": "Cell_Thickness", "kind": "continuous", "bounds": [0.001, 0.01]},
            {"name": "Cooling_Channel_Width", "kind": "continuous", "bounds": [2.0, 10.0]},
            {"name": "Material", "kind": "categorical", "categories": materials},
        ],
        "objectives": [
            {"name": "Total_Mass", "direction": "minimize"},
            {"name": "First_Torsion_Frequency", "direction": "maximize"},
        ],
        "responses": ["Total_Cost"],
        "constraints": [
            {"name": "Max_Cost", "target": "Total_Cost", "relation": "<=", "bound": 1900.0}
        ],
        "designs": designs,
    }


def motor_bracket() -> dict:
    rng = random.Random(4711)
    designs = []
    for i in range(1, 13):
        disp = 4.2 - 0.22 * i + rng.uniform(-0.15, 0.15)
        designs.append(
            {
                "design_id": i,
                "values": _round(
                    {
                        "Rib_Count": float(rng.randrange(2, 9)),
                        "Shell_Thickness": rng.uniform(1.5, 4.0),
                        "Max_Displacement": disp,
                        "Von_Mises_Stress": 180.0 + 30.0 * disp + rng.uniform(-10, 10),
                    }
                ),
            }
        )
    designs[6]["values"]["Von_Mises_Stress"] = None  # a failed extraction
    return {
        "id": "motor-bracket",
        "title": "Motor bracket stiffness study",
        "variables": [
            {"name": "Rib_Count", "kind": "continuous", "bounds": [2.0, 8.0]},
            {"name": "Shell_Thickness", "kind": "continuous", "bounds": [1.5, 4.0]},
        ],
        "objectives": [{"name": "Max_Displacement", "direction": "minimize"}],
        "responses": ["Von_Mises_Stress"],
        "constraints": [],
        "designs": designs,
    }


def control_arm() -> dict:
    rng = random.Random(99173)
    designs = []
    for i in range(1, 26):
        if i <= 15:
            mass = 9.5 - 0.31 * i + rng.uniform(-0.25, 0.25)
        else:
            mass = 4.8 + rng.uniform(-0.02, 0.02)
        stiff = 11000.0 + 420.0 * i + rng.uniform(-300.0, 300.0)
        designs.append(
            {
                "design_id": i,
                "values": _round(
                    {
                        "Arm_Width": rng.uniform(18.0, 42.0),
                        "Arm_Depth": rng.uniform(8.0, 22.0),
                        "Mass": mass,
                        "Stiffness": stiff,
                        "Buckling_Factor": rng.uniform(0.8, 2.4),
                    }
                ),
            }
        )
    for gap in (3, 11, 19):  # simulate crashed solver runs
        designs[gap]["values"]["Buckling_Factor"] = None
    return {
        "id": "control-arm",
        "title": "Suspension control arm sizing",
        "variables": [
            {"name": "Arm_Width", "kind": "continuous", "bounds": [18.0, 42.0]},
            {"name": "Arm_Depth", "kind": "continuous", "bounds": [8.0, 22.0]},
        ],
        "objectives": [
            {"name": "Mass", "direction": "minimize"},
            {"name": "Stiffness", "direction": "maximize"},
        ],
        "responses": ["Buckling_Factor"],
        "constraints": [
            {"name": "No_Buckling", "target": "Buckling_Factor", "relation": ">=", "bound": 1.2}
        ],
        "designs": designs,
    }


def main() -> int:
    OUT_DIR.mkdir(parents=True, exist_ok=True)
    for doc in (battery_pack(), motor_bracket(), control_arm()):
        study = load_study(doc)  # validate before writing
        path = OUT_DIR / f"{study.id}.json"
        path.write_text(export_study(study), encoding="utf-8")
        print(f"wrote {path} ({len(study.designs)} designs)")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
