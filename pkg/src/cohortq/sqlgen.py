"""Compile resolved criteria into portable SQL against a mapped schema.

Each criterion line becomes at most one SQL statement selecting distinct
person identifiers. Within a line:

* an entity node queries every mapping target it has; multiple targets
  are combined with UNION (a concept recorded in both a diagnosis table
  and a problem list is found in either);
* tall targets filter the code column to the criterion's codes, pivoted
  targets test the concept's own column;
* numeric filters land on the value column, temporal predicates become
  correlated EXISTS subqueries comparing event timestamps, and age
  becomes birth-date arithmetic against the reference date;
* intersect / union / not render as INTERSECT / UNION / EXCEPT compounds.

Only an ANSI subset is emitted: SELECT / WHERE / EXISTS / IN, compound
set operators, `DATE 'YYYY-MM-DD'` and `TIMESTAMP 'YYYY-MM-DD HH:MM:SS'`
literals, and `expr + INTERVAL 'n' MINUTE` arithmetic. No vendor
functions, and no reference to "now": when a pin date is set it replaces
the current date everywhere and additionally caps every dated table.

The exact text (keyword casing, aliasing, predicate order) is canonical
and frozen by golden files; semantic correctness is established by
executing against the oracle, not by string comparison.
"""

from dataclasses import dataclass
from datetime import date, timedelta
from decimal import Decimal
from enum import Enum
from typing import Optional

from .kb import KnowledgeBase
from .lforms import Polarity
from .reason import ReasonedNode, TemporalFilter
from .smm import MappingTarget, SemanticMetadataMapping, Strategy, TableMapping
from .smm import map_criterion


class UnsupportedFilter(ValueError):
    """A filter shape the portable SQL subset cannot express."""

    def __init__(self, description: str):
        super().__init__(description)
        self.description = description


class NoMappingTargetError(ValueError):
    """The criterion's concepts appear nowhere in the mapped schema."""


_OP_SQL = {"EQ": "=", "GT": ">", "GTEQ": ">=", "LT": "<", "LTEQ": "<=",
           "NEQ": "<>"}

_UNIT_MINUTES = {
    "minute": 1, "minutes": 1, "min": 1,
    "hour": 60, "hours": 60, "hr": 60, "hrs": 60,
    "day": 1440, "days": 1440,
    "week": 10080, "weeks": 10080,
}

_NON_EVENT_FUNCTIONS = ("intersect", "union", "not", "female", "male", "age")


def window_minutes(value: Decimal, unit: Optional[str]) -> int:
    """Normalize a temporal window to whole minutes.

    Month and year windows are rejected: they have no fixed minute length,
    and emitting vendor date arithmetic would leave the portable subset.
    """
    key = (unit or "").strip().lower()
    if key not in _UNIT_MINUTES:
        raise UnsupportedFilter(f"unsupported window unit {unit!r}")
    total = value * _UNIT_MINUTES[key]
    if total != total.to_integral_value():
        raise UnsupportedFilter(f"window of {value} {unit} is not a whole "
                                "number of minutes")
    if total < 0:
        raise UnsupportedFilter("negative window")
    return int(total)


def shift_years(d: date, years: int) -> date:
    """Move a date by whole years, clamping Feb 29 to Feb 28."""
    try:
        return d.replace(year=d.year + years)
    except ValueError:
        return d.replace(year=d.year + years, day=28)


def _quote(text: str) -> str:
    return "'" + text.replace("'", "''") + "'"


def _date_literal(d: date) -> str:
    return f"DATE '{d.isoformat()}'"


@dataclass(frozen=True)
class _Rendered:
    sql: str
    op: Optional[str] = None  # set operator if the statement is a compound


class SqlCompiler:
    """Renders one criterion line. Alias counters restart per line so the
    output is deterministic."""

    def __init__(self, smm: SemanticMetadataMapping, kb: KnowledgeBase,
                 pin_date: Optional[date] = None):
        self.smm = smm
        self.kb = kb
        self.pin_date = pin_date
        self._alias_n = 0
        self._sub_n = 0

    # -- public entry -------------------------------------------------------

    def compile_line(self, node: ReasonedNode) -> str:
        self._alias_n = 0
        self._sub_n = 0
        return self._render(node).sql

    # -- dispatch -----------------------------------------------------------

    def _render(self, node: ReasonedNode) -> _Rendered:
        if not node.is_computable:
            raise UnsupportedFilter(f"non-computable: {node.failure}")
        fn = node.function
        if fn in ("intersect", "union"):
            return self._render_set(node)
        if fn == "not":
            return self._render_not(node)
        if fn in ("female", "male"):
            return self._render_sex(fn)
        if fn == "age":
            return self._render_age(node)
        return self._render_entity(node)

    # -- structure ----------------------------------------------------------

    def _wrap(self, sql: str) -> str:
        alias = f"s{self._sub_n}"
        self._sub_n += 1
        return (f"SELECT {self.smm.person.person_id_column} FROM (\n{sql}\n"
                f") AS {alias}")

    def _splice(self, rendered: _Rendered, op: str) -> str:
        if rendered.op is None or rendered.op == op:
            return rendered.sql
        return self._wrap(rendered.sql)

    def _render_set(self, node: ReasonedNode) -> _Rendered:
        op = "INTERSECT" if node.function == "intersect" else "UNION"
        parts = []
        for child in node.children:
            if op == "UNION" and not child.is_computable:
                continue  # union keeps its computable arms
            parts.append(self._render(child))
        if not parts:
            raise NoMappingTargetError("no computable branch")
        if len(parts) == 1:
            return parts[0]
        chunks = [self._splice(r, op) for r in parts]
        return _Rendered(f"\n{op}\n".join(chunks), op)

    def _render_not(self, node: ReasonedNode) -> _Rendered:
        person = self.smm.person
        inner = self._render(node.children[0])
        inner_sql = inner.sql if inner.op is None else self._wrap(inner.sql)
        base = f"SELECT {person.person_id_column} FROM {person.table}"
        return _Rendered(f"{base}\nEXCEPT\n{inner_sql}", "EXCEPT")

    # -- demographics -------------------------------------------------------

    def _render_sex(self, fn: str) -> _Rendered:
        person = self.smm.person
        value = person.female_value if fn == "female" else person.male_value
        return _Rendered(
            f"SELECT DISTINCT {person.person_id_column} FROM {person.table} "
            f"WHERE {person.gender_column} = {_quote(value)}")

    def _render_age(self, node: ReasonedNode) -> _Rendered:
        person = self.smm.person
        ref = self.pin_date or date.today()
        col = person.birth_date_column
        preds = []
        for nf in node.numeric_filters:
            if nf.value != nf.value.to_integral_value():
                raise UnsupportedFilter(f"non-integer age bound {nf.value}")
            n = int(nf.value)
            at_least_n = _date_literal(shift_years(ref, -n))
            above_n = _date_literal(shift_years(ref, -(n + 1)))
            if nf.op == "GT":
                preds.append(f"{col} <= {above_n}")
            elif nf.op == "GTEQ":
                preds.append(f"{col} <= {at_least_n}")
            elif nf.op == "LT":
                preds.append(f"{col} > {at_least_n}")
            elif nf.op == "LTEQ":
                preds.append(f"{col} > {above_n}")
            elif nf.op == "EQ":
                preds.append(f"{col} > {above_n}")
                preds.append(f"{col} <= {at_least_n}")
            else:  # NEQ
                preds.append(f"({col} <= {above_n} OR {col} > {at_least_n})")
        sql = f"SELECT DISTINCT {person.person_id_column} FROM {person.table}"
        if preds:
            sql += " WHERE " + " AND ".join(preds)
        return _Rendered(sql)

    # -- entities -----------------------------------------------------------

    def _render_entity(self, node: ReasonedNode) -> _Rendered:
        targets = map_criterion(node, self.smm, self.kb)
        if not targets:
            raise NoMappingTargetError(
                f"no mapping target for {node.function} concepts")
        parts = [self._render_target(node, t) for t in targets]
        if len(parts) == 1:
            return _Rendered(parts[0])
        return _Rendered("\nUNION\n".join(parts), "UNION")

    def _render_target(self, node: ReasonedNode, target: MappingTarget) -> str:
        table = target.table
        correlated = bool(node.temporal_filters)
        alias = None
        if correlated:
            alias = f"t{self._alias_n}"
            self._alias_n += 1
        prefix = f"{alias}." if alias else ""

        preds = list(self._concept_preds(node, target, prefix))
        for nf in node.numeric_filters:
            preds.append(self._numeric_pred(nf, target, prefix))
        for tf in node.temporal_filters:
            preds.append(self._exists_window(tf, table, alias))
        if self.pin_date and table.date_column:
            preds.append(self._pin_pred(f"{prefix}{table.date_column}"))

        source = f"{table.table} AS {alias}" if alias else table.table
        sql = f"SELECT DISTINCT {prefix}{table.person_id_column} FROM {source}"
        if preds:
            sql += " WHERE " + " AND ".join(preds)
        return sql

    def _concept_preds(self, node: ReasonedNode, target: MappingTarget,
                       prefix: str):
        table = target.table
        if table.strategy is Strategy.TALL:
            codes = [code for _, code in target.codes]
            yield self._in_clause(f"{prefix}{table.code_column.name}", codes)
        else:
            col = f"{prefix}{target.column.name}"
            if target.column.kind == "flag":
                yield f"{col} = 1"
            elif not node.numeric_filters:
                yield f"{col} IS NOT NULL"
            # a numeric comparison on the value column implies NOT NULL

    @staticmethod
    def _in_clause(column: str, codes: list) -> str:
        quoted = [_quote(c) for c in codes]
        if len(quoted) == 1:
            return f"{column} = {quoted[0]}"
        return f"{column} IN ({', '.join(quoted)})"

    def _numeric_pred(self, nf, target: MappingTarget, prefix: str) -> str:
        table = target.table
        if table.strategy is Strategy.TALL:
            if not table.value_column:
                raise UnsupportedFilter(
                    f"{table.table} has no value column for numeric filters")
            col = f"{prefix}{table.value_column}"
        else:
            if target.column.kind != "value":
                raise UnsupportedFilter(
                    f"numeric filter on coded event column {target.column.name}")
            col = f"{prefix}{target.column.name}"
        return f"{col} {_OP_SQL[nf.op]} {nf.value}"

    def _exists_window(self, tf: TemporalFilter, outer: TableMapping,
                       outer_alias: Optional[str]) -> str:
        anchor = tf.anchor
        if anchor.function in _NON_EVENT_FUNCTIONS:
            raise UnsupportedFilter(
                f"temporal anchor {anchor.function} is not a clinical event")
        if anchor.temporal_filters:
            raise UnsupportedFilter("nested temporal windows")
        if not outer.date_column:
            raise UnsupportedFilter(f"{outer.table} records no event time")
        anchor_targets = map_criterion(anchor, self.smm, self.kb)
        if not anchor_targets:
            raise NoMappingTargetError("temporal anchor has no mapping target")

        outer_date = f"{outer_alias}.{outer.date_column}"
        outer_person = f"{outer_alias}.{outer.person_id_column}"
        clauses = []
        for at in anchor_targets:
            a = at.table
            if not a.date_column:
                raise UnsupportedFilter(f"{a.table} records no event time")
            alias = f"t{self._alias_n}"
            self._alias_n += 1
            p = f"{alias}."
            preds = [f"{p}{a.person_id_column} = {outer_person}"]
            preds.extend(self._concept_preds(anchor, at, p))
            for nf in anchor.numeric_filters:
                preds.append(self._numeric_pred(nf, at, p))
            anchor_date = f"{p}{a.date_column}"
            if tf.direction == "within":
                minutes = window_minutes(tf.window_value, tf.window_unit)
                preds.append(f"{outer_date} >= {anchor_date}")
                preds.append(f"{outer_date} <= {anchor_date} + "
                             f"INTERVAL '{minutes}' MINUTE")
            elif tf.direction == "after":
                preds.append(f"{outer_date} > {anchor_date}")
            else:
                preds.append(f"{outer_date} < {anchor_date}")
            if self.pin_date:
                preds.append(self._pin_pred(anchor_date))
            clauses.append(f"EXISTS (SELECT 1 FROM {a.table} AS {alias} "
                           f"WHERE {' AND '.join(preds)})")
        if len(clauses) == 1:
            return clauses[0]
        return "(" + " OR ".join(clauses) + ")"

    def _pin_pred(self, column: str) -> str:
        # day-inclusive: anything up to the end of the pin date survives
        cutoff = self.pin_date + timedelta(days=1)
        return f"{column} < TIMESTAMP '{cutoff.isoformat()} 00:00:00'"


def compile_line(node: ReasonedNode, smm: SemanticMetadataMapping,
                 kb: KnowledgeBase, pin_date: Optional[date] = None) -> str:
    """One SQL statement selecting the line's distinct person identifiers."""
    return SqlCompiler(smm, kb, pin_date).compile_line(node)


# ---------------------------------------------------------------------------
# trial plans

class LineStatus(Enum):
    EXECUTED = "executed"
    SKIPPED = "skipped"


@dataclass(frozen=True)
class PlanLine:
    line_number: int
    polarity: Polarity
    status: LineStatus
    sql: Optional[str] = None
    concepts_used: tuple = ()
    skip_reason: Optional[str] = None

    def to_dict(self) -> dict:
        return {"line_number": self.line_number,
                "polarity": self.polarity.value,
                "status": self.status.value,
                "sql": self.sql,
                "concepts_used": list(self.concepts_used),
                "skip_reason": self.skip_reason}

    @classmethod
    def from_dict(cls, doc: dict) -> "PlanLine":
        return cls(line_number=doc["line_number"],
                   polarity=Polarity(doc["polarity"]),
                   status=LineStatus(doc["status"]),
                   sql=doc.get("sql"),
                   concepts_used=tuple(doc.get("concepts_used", ())),
                   skip_reason=doc.get("skip_reason"))


@dataclass(frozen=True)
class QueryPlan:
    smm_name: str
    pin_date: Optional[date]
    lines: tuple
    combined_sql: Optional[str] = None

    @property
    def executed(self) -> tuple:
        return tuple(l for l in self.lines if l.status is LineStatus.EXECUTED)

    @property
    def skipped(self) -> tuple:
        return tuple(l for l in self.lines if l.status is LineStatus.SKIPPED)

    def to_dict(self) -> dict:
        return {"smm_name": self.smm_name,
                "pin_date": self.pin_date.isoformat() if self.pin_date else None,
                "lines": [l.to_dict() for l in self.lines],
                "combined_sql": self.combined_sql}

    @classmethod
    def from_dict(cls, doc: dict) -> "QueryPlan":
        pin = doc.get("pin_date")
        return cls(smm_name=doc["smm_name"],
                   pin_date=date.fromisoformat(pin) if pin else None,
                   lines=tuple(PlanLine.from_dict(l) for l in doc["lines"]),
                   combined_sql=doc.get("combined_sql"))


def _collect_concepts(node: ReasonedNode) -> set:
    out = set(node.concepts.members)
    for child in node.children:
        out |= _collect_concepts(child)
    for tf in node.temporal_filters:
        out |= _collect_concepts(tf.anchor)
    return out


def compile_trial(criteria, reasoned, smm: SemanticMetadataMapping,
                  kb: KnowledgeBase,
                  pin_date: Optional[date] = None) -> QueryPlan:
    """Per-line SQL for a whole trial; failures degrade to Skipped lines.

    `criteria` and `reasoned` are aligned lists (inclusion lines first,
    then exclusion, numbered from 1). The combined statement intersects
    the executed inclusion cohorts and subtracts each executed exclusion
    cohort.
    """
    if len(criteria) != len(reasoned):
        raise ValueError("criteria and reasoned lists are misaligned")
    lines = []
    rendered = []  # aligned _Rendered for executed lines, else None
    for i, (crit, node) in enumerate(zip(criteria, reasoned), start=1):
        concepts = tuple(sorted(_collect_concepts(node)))
        if not node.is_computable:
            lines.append(PlanLine(i, crit.polarity, LineStatus.SKIPPED,
                                  concepts_used=concepts,
                                  skip_reason=f"non-computable: {node.failure}"))
            rendered.append(None)
            continue
        compiler = SqlCompiler(smm, kb, pin_date)
        try:
            r = compiler._render(node)
        except NoMappingTargetError as e:
            lines.append(PlanLine(i, crit.polarity, LineStatus.SKIPPED,
                                  concepts_used=concepts,
                                  skip_reason=f"no mapping target: {e}"))
            rendered.append(None)
            continue
        except UnsupportedFilter as e:
            lines.append(PlanLine(i, crit.polarity, LineStatus.SKIPPED,
                                  concepts_used=concepts,
                                  skip_reason=f"unsupported filter: {e.description}"))
            rendered.append(None)
            continue
        lines.append(PlanLine(i, crit.polarity, LineStatus.EXECUTED,
                              sql=r.sql, concepts_used=concepts))
        rendered.append(r)

    combined = _combined_sql(criteria, rendered, smm)
    return QueryPlan(smm_name=smm.name, pin_date=pin_date,
                     lines=tuple(lines), combined_sql=combined)


def _combined_sql(criteria, rendered, smm) -> Optional[str]:
    person_col = smm.person.person_id_column
    wrap_n = 0

    def wrap_if_compound(r: _Rendered, op: str) -> str:
        nonlocal wrap_n
        if r.op is None or r.op == op:
            # EXCEPT chains cannot splice: A EXCEPT (B EXCEPT C) differs
            if r.op == "EXCEPT":
                pass
            else:
                return r.sql
        sql = f"SELECT {person_col} FROM (\n{r.sql}\n) AS c{wrap_n}"
        wrap_n += 1
        return sql

    inclusions = [r for crit, r in zip(criteria, rendered)
                  if r is not None and crit.polarity is Polarity.INCLUSION]
    exclusions = [r for crit, r in zip(criteria, rendered)
                  if r is not None and crit.polarity is Polarity.EXCLUSION]
    if not inclusions:
        return None
    chunks = [wrap_if_compound(r, "INTERSECT") for r in inclusions]
    sql = "\nINTERSECT\n".join(chunks)
    for r in exclusions:
        sql += "\nEXCEPT\n" + wrap_if_compound(r, "__never__")
    return sql
