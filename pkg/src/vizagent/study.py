"""Open study-file model for design-space-exploration runs.

A study is an immutable snapshot of an optimization run: declared variables,
objectives, responses and constraints, plus one record per evaluated design.
Studies are loaded from a JSON document (see `load_study`) or from CSV with a
sidecar role manifest (see `load_csv`), validated once, and shared read-only
afterwards.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

from .errors import (
    ColumnTypeError,
    CsvParseError,
    IntegrityError,
    SchemaError,
    UnknownColumnError,
    UnknownDesignError,
)

Scalar = float | str
CONTINUOUS = "continuous"
CATEGORICAL = "categorical"
MINIMIZE = "minimize"
MAXIMIZE = "maximize"

#: Column name reserved for the ordering key in CSV form.
DESIGN_ID = "design_id"


@dataclass(frozen=True)
class VariableDef:
    """A design variable: continuous with bounds, or categorical with labels."""

    name: str
    kind: str = CONTINUOUS
    bounds: tuple[float, float] | None = None
    categories: tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind not in (CONTINUOUS, CATEGORICAL):
            raise SchemaError(f"variable {self.name!r}: unknown kind {self.kind!r}")
        if self.kind == CONTINUOUS:
            if self.bounds is None:
                raise SchemaError(f"continuous variable {self.name!r} requires bounds")
            lo, hi = self.bounds
            if lo > hi:
                raise IntegrityError(f"variable {self.name!r}: bounds lo > hi")
        elif not self.categories:
            raise SchemaError(f"categorical variable {self.name!r} requires categories")


@dataclass(frozen=True)
class ObjectiveDef:
    name: str
    direction: str

    def __post_init__(self):
        if self.direction not in (MINIMIZE, MAXIMIZE):
            raise SchemaError(
                f"objective {self.name!r}: direction must be "
                f"'{MINIMIZE}' or '{MAXIMIZE}', got {self.direction!r}"
            )


@dataclass(frozen=True)
class ConstraintDef:
    """Feasibility condition on one column: value relation bound."""

    name: str
    target: str
    relation: str  # "<=" or ">="
    bound: float

    def __post_init__(self):
        if self.relation not in ("<=", ">="):
            raise SchemaError(f"constraint {self.name!r}: relation must be '<=' or '>='")

    def holds(self, value: float) -> bool:
        if self.relation == "<=":
            return value <= self.bound
        return value >= self.bound


@dataclass(frozen=True)
class DesignRecord:
    """One evaluated design: ordering key plus a value for every column.

    A missing evaluation is stored explicitly as None, never as an absent key.
    """

    design_id: int
    values: dict[str, Scalar | None] = field(default_factory=dict)


@dataclass(frozen=True)
class Study:
    id: str
    title: str
    variables: tuple[VariableDef, ...]
    objectives: tuple[ObjectiveDef, ...]
    responses: tuple[str, ...]
    constraints: tuple[ConstraintDef, ...]
    designs: tuple[DesignRecord, ...]

    def __post_init__(self):
        _validate_study(self)

    # -- column helpers ------------------------------------------------------

    def columns(self) -> tuple[str, ...]:
        """All column names in declaration order: variables, objectives, responses."""
        return (
            tuple(v.name for v in self.variables)
            + tuple(o.name for o in self.objectives)
            + self.responses
        )

    def has_column(self, name: str) -> bool:
        return name in self.columns()

    def column_role(self, name: str) -> str:
        """Role of a column: 'variable', 'objective' or 'response'."""
        if any(v.name == name for v in self.variables):
            return "variable"
        if any(o.name == name for o in self.objectives):
            return "objective"
        if name in self.responses:
            return "response"
        raise UnknownColumnError(f"study {self.id!r} has no column {name!r}")

    def column_kind(self, name: str) -> str:
        """'numeric' for continuous variables, objectives and responses;
        'categorical' for categorical variables."""
        for v in self.variables:
            if v.name == name:
                return "numeric" if v.kind == CONTINUOUS else "categorical"
        if not self.has_column(name):
            raise UnknownColumnError(f"study {self.id!r} has no column {name!r}")
        return "numeric"

    def numeric_columns(self) -> tuple[str, ...]:
        return tuple(c for c in self.columns() if self.column_kind(c) == "numeric")

    def objective(self, name: str) -> ObjectiveDef:
        for o in self.objectives:
            if o.name == name:
                return o
        raise UnknownColumnError(f"study {self.id!r} has no objective {name!r}")

    def variable(self, name: str) -> VariableDef:
        for v in self.variables:
            if v.name == name:
                return v
        raise UnknownColumnError(f"study {self.id!r} has no variable {name!r}")

    def design(self, design_id: int) -> DesignRecord:
        for d in self.designs:
            if d.design_id == design_id:
                return d
        raise UnknownDesignError(f"study {self.id!r} has no design {design_id}")


def _validate_study(study: Study) -> None:
    if not study.id:
        raise SchemaError("study requires a non-empty id")
    if not study.objectives:
        raise IntegrityError(f"study {study.id!r} declares no objectives")
    if not study.designs:
        raise IntegrityError(f"study {study.id!r} contains no designs")

    names = (
        [v.name for v in study.variables]
        + [o.name for o in study.objectives]
        + list(study.responses)
    )
    seen: set[str] = set()
    for name in names:
        if name == DESIGN_ID:
            raise IntegrityError(f"column name {DESIGN_ID!r} is reserved")
        if name in seen:
            raise IntegrityError(f"duplicate column {name!r} across declarations")
        seen.add(name)
    dup_constraints = {c.name for c in study.constraints}
    if len(dup_constraints) != len(study.constraints):
        raise IntegrityError("duplicate constraint names")
    for c in study.constraints:
        if c.target not in seen:
            raise IntegrityError(
                f"constraint {c.name!r} targets unknown column {c.target!r}"
            )

    prev = None
    for record in study.designs:
        if not isinstance(record.design_id, int) or record.design_id < 0:
            raise IntegrityError(f"design_id {record.design_id!r} is not a non-negative integer")
        if prev is not None and record.design_id <= prev:
            raise IntegrityError(
                f"design_id {record.design_id} does not increase (previous {prev})"
            )
        prev = record.design_id
        for col in names:
            if col not in record.values:
                raise SchemaError(
                    f"design {record.design_id} lacks a value for column {col!r}"
                )
            _check_value(study, col, record.values[col], record.design_id)
        extra = set(record.values) - set(names)
        if extra:
            raise IntegrityError(
                f"design {record.design_id} has undeclared columns {sorted(extra)}"
            )


def _check_value(study: Study, column: str, value: Scalar | None, design_id: int) -> None:
    if value is None:
        return
    kind = study.column_kind(column)
    if kind == "categorical":
        if not isinstance(value, str):
            raise ColumnTypeError(
                f"design {design_id}, column {column!r}: expected a category label, "
                f"got {value!r}"
            )
        if value not in study.variable(column).categories:
            raise ColumnTypeError(
                f"design {design_id}, column {column!r}: {value!r} is not a declared category"
            )
    else:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ColumnTypeError(
                f"design {design_id}, column {column!r}: expected a number, got {value!r}"
            )
        if not math.isfinite(value):
            raise ColumnTypeError(
                f"design {design_id}, column {column!r}: non-finite value"
            )


# -- JSON study documents ----------------------------------------------------

def load_study(document: str | dict) -> Study:
    """Parse and validate a JSON study document.

    Accepts the document text or an already-decoded mapping. All structural
    invariants are checked; the returned Study is immutable.
    """
    if isinstance(document, str):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"study document is not valid JSON: {exc}") from exc
    if not isinstance(document, dict):
        raise SchemaError("study document must be a JSON object")

    for key in ("id", "title", "variables", "objectives", "responses", "constraints", "designs"):
        if key not in document:
            raise SchemaError(f"study document is missing field {key!r}")

    variables = tuple(_load_variable(v) for v in document["variables"])
    objectives = tuple(_load_objective(o) for o in document["objectives"])
    responses = tuple(_require_str(r, "responses entry") for r in document["responses"])
    constraints = tuple(_load_constraint(c) for c in document["constraints"])
    designs = tuple(_load_design(d) for d in document["designs"])
    return Study(
        id=_require_str(document["id"], "id"),
        title=_require_str(document["title"], "title"),
        variables=variables,
        objectives=objectives,
        responses=responses,
        constraints=constraints,
        designs=designs,
    )


def _require_str(value, what: str) -> str:
    if not isinstance(value, str):
        raise SchemaError(f"{what} must be a string, got {value!r}")
    return value


def _load_variable(raw: dict) -> VariableDef:
    if not isinstance(raw, dict) or "name" not in raw:
        raise SchemaError(f"variable entry is missing field 'name': {raw!r}")
    kind = raw.get("kind", CONTINUOUS)
    bounds = raw.get("bounds")
    if bounds is not None:
        if not (isinstance(bounds, (list, tuple)) and len(bounds) == 2):
            raise SchemaError(f"variable {raw['name']!r}: bounds must be a [lo, hi] pair")
        bounds = (float(bounds[0]), float(bounds[1]))
    return VariableDef(
        name=raw["name"],
        kind=kind,
        bounds=bounds,
        categories=tuple(raw.get("categories", ())),
    )


def _load_objective(raw: dict) -> ObjectiveDef:
    if not isinstance(raw, dict) or "name" not in raw or "direction" not in raw:
        raise SchemaError(f"objective entry requires 'name' and 'direction': {raw!r}")
    return ObjectiveDef(name=raw["name"], direction=raw["direction"])


def _load_constraint(raw: dict) -> ConstraintDef:
    for key in ("name", "target", "relation", "bound"):
        if not isinstance(raw, dict) or key not in raw:
            raise SchemaError(f"constraint entry is missing field {key!r}: {raw!r}")
    return ConstraintDef(
        name=raw["name"],
        target=raw["target"],
        relation=raw["relation"],
        bound=float(raw["bound"]),
    )


def _load_design(raw: dict) -> DesignRecord:
    if not isinstance(raw, dict) or "design_id" not in raw or "values" not in raw:
        raise SchemaError(f"design entry requires 'design_id' and 'values': {raw!r}")
    values = raw["values"]
    if not isinstance(values, dict):
        raise SchemaError(f"design {raw['design_id']!r}: values must be an object")
    return DesignRecord(design_id=raw["design_id"], values=dict(values))


def export_study(study: Study) -> str:
    """Serialize a study to its canonical JSON document.

    load_study(export_study(s)) == s for every valid study.
    """
    doc = {
        "id": study.id,
        "title": study.title,
        "variables": [
            {
                "name": v.name,
                "kind": v.kind,
                **({"bounds": list(v.bounds)} if v.bounds is not None else {}),
                **({"categories": list(v.categories)} if v.categories else {}),
            }
            for v in study.variables
        ],
        "objectives": [{"name": o.name, "direction": o.direction} for o in study.objectives],
        "responses": list(study.responses),
        "constraints": [
            {"name": c.name, "target": c.target, "relation": c.relation, "bound": c.bound}
            for c in study.constraints
        ],
        "designs": [
            {"design_id": d.design_id, "values": {c: d.values[c] for c in study.columns()}}
            for d in study.designs
        ],
    }
    return json.dumps(doc, indent=2) + "\n"


# -- CSV ingestion -----------------------------------------------------------

def load_csv(table: str, manifest: str | dict) -> Study:
    """Build a study from delimited text plus a column-role manifest.

    The manifest must carry `roles` assigning every CSV column one of
    design_id / variable / objective:min / objective:max / response. Optional
    keys (id, title, bounds, categories, constraints) make the conversion
    lossless; absent, they are inferred (bounds from the observed range).
    """
    if isinstance(manifest, str):
        try:
            manifest = json.loads(manifest)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"manifest is not valid JSON: {exc}") from exc
    if not isinstance(manifest, dict) or "roles" not in manifest:
        raise SchemaError("manifest is missing field 'roles'")
    roles: dict[str, str] = manifest["roles"]

    reader = csv.reader(io.StringIO(table))
    rows = [row for row in reader if row]
    if not rows:
        raise SchemaError("CSV table is empty")
    header, data_rows = rows[0], rows[1:]
    for col in header:
        if col not in roles:
            raise SchemaError(f"manifest assigns no role to column {col!r}")
    for col in roles:
        if col not in header:
            raise SchemaError(f"manifest role for {col!r} matches no CSV column")

    id_cols = [c for c in header if roles[c] == DESIGN_ID]
    if len(id_cols) != 1:
        raise SchemaError("manifest must assign the design_id role to exactly one column")
    id_col = id_cols[0]

    categories = {k: tuple(v) for k, v in manifest.get("categories", {}).items()}
    bounds = {k: (float(v[0]), float(v[1])) for k, v in manifest.get("bounds", {}).items()}

    directions = {
        "min": MINIMIZE, "minimize": MINIMIZE, "max": MAXIMIZE, "maximize": MAXIMIZE,
    }
    var_cols = [c for c in header if roles[c] == "variable"]
    obj_cols = []
    for c in header:
        if roles[c].startswith("objective:"):
            token = roles[c].split(":", 1)[1]
            if token not in directions:
                raise SchemaError(f"column {c!r}: unknown objective direction {token!r}")
            obj_cols.append((c, directions[token]))
    resp_cols = [c for c in header if roles[c] == "response"]
    known = {id_col, *var_cols, *(c for c, _ in obj_cols), *resp_cols}
    unknown_roles = [c for c in header if c not in known]
    if unknown_roles:
        raise SchemaError(
            f"unknown role {roles[unknown_roles[0]]!r} for column {unknown_roles[0]!r}"
        )

    # Parse cells; categorical columns keep labels, everything else is numeric.
    records: list[DesignRecord] = []
    parsed_numeric: dict[str, list[float]] = {c: [] for c in header if c != id_col}
    for row_index, row in enumerate(data_rows, start=2):
        if len(row) != len(header):
            raise CsvParseError(
                f"row {row_index}: expected {len(header)} cells, got {len(row)}",
                row=row_index,
            )
        values: dict[str, Scalar | None] = {}
        design_id = None
        for col, cell in zip(header, row):
            cell = cell.strip()
            if col == id_col:
                try:
                    design_id = int(cell)
                except ValueError:
                    raise CsvParseError(
                        f"row {row_index}, column {col!r}: {cell!r} is not an integer",
                        row=row_index,
                        column=col,
                    ) from None
            elif cell == "":
                values[col] = None
            elif col in categories:
                values[col] = cell
            else:
                try:
                    values[col] = float(cell)
                except ValueError:
                    raise CsvParseError(
                        f"row {row_index}, column {col!r}: {cell!r} is not a number",
                        row=row_index,
                        column=col,
                    ) from None
                parsed_numeric[col].append(values[col])
        records.append(DesignRecord(design_id=design_id, values=values))

    def var_def(col: str) -> VariableDef:
        if col in categories:
            return VariableDef(col, kind=CATEGORICAL, categories=categories[col])
        if col in bounds:
            b = bounds[col]
        elif parsed_numeric[col]:
            b = (min(parsed_numeric[col]), max(parsed_numeric[col]))
        else:
            b = (0.0, 0.0)
        return VariableDef(col, kind=CONTINUOUS, bounds=b)

    constraints = tuple(_load_constraint(c) for c in manifest.get("constraints", ()))
    return Study(
        id=manifest.get("id", "csv-study"),
        title=manifest.get("title", "CSV import"),
        variables=tuple(var_def(c) for c in var_cols),
        objectives=tuple(ObjectiveDef(c, d) for c, d in obj_cols),
        responses=tuple(resp_cols),
        constraints=constraints,
        designs=tuple(records),
    )


def export_csv(study: Study) -> tuple[str, dict]:
    """Serialize a study to (CSV text, manifest) such that load_csv inverts it."""
    columns = study.columns()
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow([DESIGN_ID, *columns])
    for d in study.designs:
        row: list[str] = [str(d.design_id)]
        for col in columns:
            v = d.values[col]
            if v is None:
                row.append("")
            elif isinstance(v, str):
                row.append(v)
            else:
                row.append(repr(float(v)))
        writer.writerow(row)

    roles: dict[str, str] = {DESIGN_ID: DESIGN_ID}
    for v in study.variables:
        roles[v.name] = "variable"
    for o in study.objectives:
        roles[o.name] = f"objective:{o.direction}"
    for r in study.responses:
        roles[r] = "response"
    manifest = {
        "id": study.id,
        "title": study.title,
        "roles": roles,
        "bounds": {
            v.name: list(v.bounds) for v in study.variables if v.bounds is not None
        },
        "categories": {
            v.name: list(v.categories) for v in study.variables if v.categories
        },
        "constraints": [
            {"name": c.name, "target": c.target, "relation": c.relation, "bound": c.bound}
            for c in study.constraints
        ],
    }
    return out.getvalue(), manifest


# -- queries -----------------------------------------------------------------

def column_series(study: Study, column: str) -> tuple[list[tuple[int, Scalar]], list[int]]:
    """Values of one column in design order.

    Returns (series, missing_ids): the series holds (design_id, value) pairs
    with missing values omitted; missing_ids reports where they were skipped.
    """
    if not study.has_column(column):
        raise UnknownColumnError(f"study {study.id!r} has no column {column!r}")
    series: list[tuple[int, Scalar]] = []
    missing: list[int] = []
    for record in study.designs:
        value = record.values[column]
        if value is None:
            missing.append(record.design_id)
        else:
            series.append((record.design_id, value))
    return series, missing


def is_feasible(study: Study, design_id: int) -> bool:
    """True iff every declared constraint holds for the design.

    A design with a missing value for a constraint target cannot be verified
    and counts as infeasible. With no constraints every design is feasible.
    """
    record = study.design(design_id)
    for constraint in study.constraints:
        value = record.values[constraint.target]
        if value is None or isinstance(value, str):
            return False
        if not constraint.holds(value):
            return False
    return True
