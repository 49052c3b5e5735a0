"""Synthetic patient databases, SQL execution, and evaluation tooling.

The harness closes the loop around the compiler: it fabricates patient
databases in both bundled schema variants, runs compiled SQL against
sqlite, and re-evaluates the same criteria with an independent in-memory
interpreter so the two routes can be compared. It also computes per-line
recall curves for trial plans against a gold-standard cohort.

Databases are generated from an event model (person demographics plus
dated clinical events drawn from the bundled concept pools), so one
generation run yields row sets for the tall and the pivoted schema that
describe the same patients. Criteria can be planted: a plant forces a
chosen subset of patients to satisfy a criterion, which makes cohort
expectations constructible instead of accidental.
"""

import json
import random
import re
import sqlite3
from dataclasses import dataclass
from datetime import date, datetime, timedelta
from decimal import Decimal, ROUND_HALF_UP
from pathlib import Path
from typing import Iterable, Optional, Sequence

from . import fixture
from . import lforms as lf
from .kb import KnowledgeBase
from .lforms import Criterion, Polarity
from .reason import ReasonedNode
from .sqlgen import LineStatus, QueryPlan

VARIANTS = ("tall", "pivoted")

# default "as of" date: ages and pins are evaluated against this unless
# a caller supplies its own
REFERENCE_DATE = date(2020, 12, 31)

_EVENT_START = datetime(2018, 1, 1, 0, 0)
_EVENT_END = datetime(2020, 12, 30, 23, 59)
_PLANT_START = datetime(2019, 1, 1, 0, 0)
_PLANT_END = datetime(2019, 12, 1, 0, 0)
_BIRTH_START = date(1930, 1, 1)
_BIRTH_END = date(2009, 12, 31)

# background event count ceilings per domain, per patient
_BACKGROUND_MAX = {"condition": 4, "procedure": 2, "drug": 3, "lab": 5}

_MINUTES_PER_UNIT = {
    "minute": 1, "minutes": 1, "min": 1,
    "hour": 60, "hours": 60, "hr": 60, "hrs": 60,
    "day": 1440, "days": 1440,
    "week": 10080, "weeks": 10080,
}


class InfeasiblePlant(ValueError):
    """A plant instruction cannot be satisfied by the generator."""


class EmptyGoldError(ValueError):
    """Recall is undefined against an empty gold-standard cohort."""


# ---------------------------------------------------------------------------
# event model

@dataclass(frozen=True)
class PersonRow:
    person_id: int
    birth_date: date
    gender: str  # "F" or "M"


@dataclass(frozen=True)
class Event:
    """One dated clinical fact about a patient.

    domain selects the family of tables the event lands in; route applies
    to condition events only and says which tall tables record it ("co"
    for condition_occurrence, "pl" for problem_list, "both" for both).
    value is set for lab events and None otherwise.
    """

    person_id: int
    domain: str  # condition / procedure / drug / lab
    cui: str
    when: datetime
    value: Optional[float] = None
    route: str = ""


@dataclass(frozen=True)
class SyntheticDb:
    seed: int
    persons: tuple
    events: tuple

    @property
    def person_ids(self) -> frozenset:
        return frozenset(p.person_id for p in self.persons)

    def person(self, person_id: int) -> PersonRow:
        for p in self.persons:
            if p.person_id == person_id:
                return p
        raise KeyError(person_id)

    def events_for(self, person_id: int) -> list:
        return [e for e in self.events if e.person_id == person_id]

    def extended(self, extra_events: Iterable[Event]) -> "SyntheticDb":
        """A copy with additional events appended (persons unchanged)."""
        return SyntheticDb(self.seed, self.persons,
                           self.events + tuple(extra_events))


@dataclass(frozen=True)
class Plant:
    """Force every listed patient to satisfy the reasoned criterion."""

    node: ReasonedNode
    person_ids: tuple

    def __post_init__(self):
        object.__setattr__(self, "person_ids", tuple(self.person_ids))


_POOL_BY_CUI = {p.cui: p for p in (*fixture.CONDITION_POOL,
                                   *fixture.PROCEDURE_POOL,
                                   *fixture.DRUG_POOL)}
_ANALYTE_BY_CUI = {a.cui: a for a in fixture.LAB_POOL}

_DOMAIN_BY_CUI = {}
for _p in fixture.CONDITION_POOL:
    _DOMAIN_BY_CUI[_p.cui] = "condition"
for _p in fixture.PROCEDURE_POOL:
    _DOMAIN_BY_CUI[_p.cui] = "procedure"
for _p in fixture.DRUG_POOL:
    _DOMAIN_BY_CUI[_p.cui] = "drug"
for _a in fixture.LAB_POOL:
    _DOMAIN_BY_CUI[_a.cui] = "lab"


def _fmt_dt(when: datetime) -> str:
    return when.strftime("%Y-%m-%d %H:%M:%S")


def _rand_dt(rng, start: datetime, end: datetime) -> datetime:
    span = int((end - start).total_seconds() // 60)
    return start + timedelta(minutes=rng.randrange(span + 1))


def _rand_route(rng) -> str:
    roll = rng.random()
    if roll < 0.70:
        return "co"
    if roll < 0.85:
        return "pl"
    return "both"


def _completed_years(reference: date, birth: date) -> int:
    years = reference.year - birth.year
    if (reference.month, reference.day) < (birth.month, birth.day):
        years -= 1
    return years


def _birth_for_age(reference: date, age: int) -> date:
    """A birth date giving exactly `age` completed years at the reference."""
    try:
        return date(reference.year - age, reference.month, reference.day)
    except ValueError:  # reference Feb 29, target year not a leap year
        return date(reference.year - age, reference.month, 28)


# ---------------------------------------------------------------------------
# plant solving

def _solve_numeric(filters, lo: Decimal, hi: Decimal,
                   step: Decimal, label: str) -> Decimal:
    """A value at the given resolution satisfying every filter.

    lo/hi seed the feasible interval (the plausible range); explicit
    bounds from the filters override them outward as well as inward.
    """
    forbidden = set()
    has_bound = False
    for f in filters:
        v = f.value
        if f.op == "EQ":
            lo, hi, has_bound = v, v, True
        elif f.op == "GT":
            lo, has_bound = max(lo, v + step) if has_bound else v + step, True
            hi = max(hi, lo)
        elif f.op == "GTEQ":
            lo, has_bound = max(lo, v) if has_bound else v, True
            hi = max(hi, lo)
        elif f.op == "LT":
            hi, has_bound = min(hi, v - step) if has_bound else v - step, True
            lo = min(lo, hi)
        elif f.op == "LTEQ":
            hi, has_bound = min(hi, v) if has_bound else v, True
            lo = min(lo, hi)
        elif f.op == "NEQ":
            forbidden.add(v)
    if lo > hi:
        raise InfeasiblePlant(f"conflicting numeric bounds on {label}")
    candidate = ((lo + hi) / 2).quantize(step, rounding=ROUND_HALF_UP)
    candidate = min(max(candidate, lo), hi)
    for _ in range(len(forbidden) + 1):
        if candidate not in forbidden:
            break
        candidate = candidate + step if candidate + step <= hi else candidate - step
    ok = {"EQ": lambda a, b: a == b, "NEQ": lambda a, b: a != b,
          "GT": lambda a, b: a > b, "GTEQ": lambda a, b: a >= b,
          "LT": lambda a, b: a < b, "LTEQ": lambda a, b: a <= b}
    for f in filters:
        if not ok[f.op](candidate, f.value):
            raise InfeasiblePlant(
                f"no representable value satisfies the filters on {label}")
    return candidate


class _Generator:
    def __init__(self, rng, n_patients: int, reference_date: date):
        self.rng = rng
        self.reference = reference_date
        self.birth = {}
        self.gender = {}
        self.events = []
        self.forced_gender = {}
        self.forced_age = {}
        for pid in range(1, n_patients + 1):
            span = (_BIRTH_END - _BIRTH_START).days
            self.birth[pid] = _BIRTH_START + timedelta(days=rng.randrange(span + 1))
            self.gender[pid] = "F" if rng.random() < 0.5 else "M"

    # -- background noise ---------------------------------------------------

    def add_background(self, density: float):
        cond_cuis = [p.cui for p in fixture.CONDITION_POOL]
        proc_cuis = [p.cui for p in fixture.PROCEDURE_POOL]
        drug_cuis = [p.cui for p in fixture.DRUG_POOL]
        for pid in sorted(self.birth):
            for domain, cuis in (("condition", cond_cuis),
                                 ("procedure", proc_cuis),
                                 ("drug", drug_cuis)):
                cap = max(0, round(_BACKGROUND_MAX[domain] * density))
                for _ in range(self.rng.randint(0, cap)):
                    cui = self.rng.choice(cuis)
                    route = _rand_route(self.rng) if domain == "condition" else ""
                    self.events.append(Event(
                        pid, domain, cui,
                        _rand_dt(self.rng, _EVENT_START, _EVENT_END),
                        route=route))
            cap = max(0, round(_BACKGROUND_MAX["lab"] * density))
            for _ in range(self.rng.randint(0, cap)):
                analyte = self.rng.choice(fixture.LAB_POOL)
                value = round(self.rng.uniform(analyte.low, analyte.high),
                              analyte.decimals)
                self.events.append(Event(
                    pid, "lab", analyte.cui,
                    _rand_dt(self.rng, _EVENT_START, _EVENT_END),
                    value=value))

    # -- plants -------------------------------------------------------------

    def plant(self, node: ReasonedNode, person_ids):
        for pid in person_ids:
            if pid not in self.birth:
                raise InfeasiblePlant(f"unknown person id {pid}")
            self._plant_node(node, pid)

    def _plant_node(self, node: ReasonedNode, pid: int):
        if not node.is_computable:
            raise InfeasiblePlant(
                f"cannot plant a non-computable criterion: {node.failure}")
        fn = node.function
        if fn == "intersect":
            for child in node.children:
                self._plant_node(child, pid)
        elif fn == "union":
            for child in node.children:
                if child.is_computable:
                    self._plant_node(child, pid)
                    return
            raise InfeasiblePlant("union has no computable branch to plant")
        elif fn == "not":
            raise InfeasiblePlant("cannot plant a negated criterion")
        elif fn in ("female", "male"):
            want = "F" if fn == "female" else "M"
            prior = self.forced_gender.get(pid)
            if prior is not None and prior != want:
                raise InfeasiblePlant("conflicting gender requirements")
            self.forced_gender[pid] = want
            self.gender[pid] = want
        elif fn == "age":
            age = int(_solve_numeric(node.numeric_filters,
                                     Decimal(18), Decimal(90), Decimal(1),
                                     "age"))
            if not 0 <= age <= 120:
                raise InfeasiblePlant(f"implausible planted age {age}")
            prior = self.forced_age.get(pid)
            if prior is not None and prior != age:
                raise InfeasiblePlant("conflicting age requirements")
            self.forced_age[pid] = age
            self.birth[pid] = _birth_for_age(self.reference, age)
        else:
            self._plant_event(node, pid, None)

    def _plant_event(self, node: ReasonedNode, pid: int,
                     at: Optional[datetime]):
        candidates = sorted(c for c in node.concepts.members
                            if c in _DOMAIN_BY_CUI)
        if not candidates:
            raise InfeasiblePlant(
                f"no generatable concept satisfies {node.function}()")
        cui = self.rng.choice(candidates)
        domain = _DOMAIN_BY_CUI[cui]
        value = None
        if domain == "lab":
            analyte = _ANALYTE_BY_CUI[cui]
            step = Decimal(1).scaleb(-analyte.decimals)
            solved = _solve_numeric(node.numeric_filters,
                                    Decimal(str(analyte.low)),
                                    Decimal(str(analyte.high)),
                                    step, analyte.slug)
            value = float(solved)
        elif node.numeric_filters:
            raise InfeasiblePlant(
                f"numeric filter on {node.function}() has no value column")
        when = at or _rand_dt(self.rng, _PLANT_START, _PLANT_END)
        route = _rand_route(self.rng) if domain == "condition" else ""
        self.events.append(Event(pid, domain, cui, when, value=value,
                                 route=route))
        for tf in node.temporal_filters:
            if tf.direction == "within":
                minutes = window_minutes_equivalent(tf.window_value,
                                                    tf.window_unit)
                anchor_at = when - timedelta(minutes=max(1, minutes // 2))
            elif tf.direction == "after":
                anchor_at = when - timedelta(minutes=60)
            else:  # before
                anchor_at = when + timedelta(minutes=60)
            self._plant_event(tf.anchor, pid, anchor_at)

    # -- assembly -----------------------------------------------------------

    def build(self, seed: int) -> SyntheticDb:
        persons = tuple(PersonRow(pid, self.birth[pid], self.gender[pid])
                        for pid in sorted(self.birth))
        return SyntheticDb(seed, persons, tuple(self.events))


def window_minutes_equivalent(value: Optional[Decimal],
                              unit: Optional[str]) -> int:
    """Window length in whole minutes, converted independently of the SQL
    compiler so the two routes do not share arithmetic."""
    if value is None:
        raise ValueError("temporal window has no length")
    key = (unit or "").strip().lower()
    if key not in _MINUTES_PER_UNIT:
        raise ValueError(f"cannot convert unit {unit!r} to minutes")
    total = value * _MINUTES_PER_UNIT[key]
    if total != total.to_integral_value():
        raise ValueError(f"window {value} {unit} is not a whole minute count")
    return int(total)


def generate_db(seed: int, n_patients: int = 200,
                plants: Sequence[Plant] = (),
                density: float = 1.0,
                reference_date: date = REFERENCE_DATE) -> SyntheticDb:
    """Fabricate a deterministic synthetic database.

    Background events are drawn first, then plants are applied; plants
    may overwrite demographics and always append events, so added noise
    can never undo a plant. density scales the background event volume
    (0 disables it entirely).
    """
    rng = random.Random(seed)
    gen = _Generator(rng, n_patients, reference_date)
    gen.add_background(density)
    for plant in plants:
        gen.plant(plant.node, plant.person_ids)
    return gen.build(seed)


# ---------------------------------------------------------------------------
# row derivation: the same event model rendered for each schema variant

def _event_codes(event: Event, kb: KnowledgeBase) -> set:
    """The (system, code) pairs actually written to the tall tables for
    this event. Condition routing decides which code systems appear."""
    concept = kb.concept(event.cui)
    if event.domain == "condition":
        pairs = set()
        if event.route in ("co", "both"):
            pairs.add(("ICD10", concept.codes_in("ICD10")[0]))
        if event.route in ("pl", "both"):
            pairs.add(("SNOMED", concept.codes_in("SNOMED")[0]))
        return pairs
    if event.domain == "procedure":
        return {("SNOMED", concept.codes_in("SNOMED")[0])}
    if event.domain == "drug":
        return {("RXNORM", concept.codes_in("RXNORM")[0])}
    return {("LOINC", _ANALYTE_BY_CUI[event.cui].loinc)}


def tall_columns() -> dict:
    return {
        "person": ("person_id", "birth_date", "gender"),
        "condition_occurrence": ("person_id", "code_system", "code",
                                 "start_datetime"),
        "problem_list": ("person_id", "code_system", "code",
                         "recorded_datetime"),
        "procedure_occurrence": ("person_id", "code_system", "code",
                                 "proc_datetime"),
        "drug_exposure": ("person_id", "code_system", "code",
                          "exposure_datetime"),
        "labs": ("person_id", "loinc_code", "value_num", "unit",
                 "lab_datetime"),
    }


def pivoted_columns() -> dict:
    out = {"person": ("person_id", "birth_date", "gender")}
    for table, pool in (("condition_events", fixture.CONDITION_POOL),
                        ("procedure_events", fixture.PROCEDURE_POOL),
                        ("drug_events", fixture.DRUG_POOL)):
        out[table] = ("person_id", "event_datetime",
                      *(p.slug for p in pool))
    for table in fixture.PIVOTED_LAB_TABLES:
        out[table] = ("person_id", "obs_datetime",
                      *(a.slug for a in fixture.analytes_by_table(table)))
    return out


def tall_rows(db: SyntheticDb, kb: KnowledgeBase) -> dict:
    rows = {name: [] for name in tall_columns()}
    for p in db.persons:
        rows["person"].append((p.person_id, p.birth_date.isoformat(),
                               p.gender))
    for e in db.events:
        stamp = _fmt_dt(e.when)
        concept = kb.concept(e.cui)
        if e.domain == "condition":
            if e.route in ("co", "both"):
                rows["condition_occurrence"].append(
                    (e.person_id, "ICD10", concept.codes_in("ICD10")[0],
                     stamp))
            if e.route in ("pl", "both"):
                rows["problem_list"].append(
                    (e.person_id, "SNOMED", concept.codes_in("SNOMED")[0],
                     stamp))
        elif e.domain == "procedure":
            rows["procedure_occurrence"].append(
                (e.person_id, "SNOMED", concept.codes_in("SNOMED")[0], stamp))
        elif e.domain == "drug":
            rows["drug_exposure"].append(
                (e.person_id, "RXNORM", concept.codes_in("RXNORM")[0], stamp))
        else:
            analyte = _ANALYTE_BY_CUI[e.cui]
            rows["labs"].append((e.person_id, analyte.loinc, e.value,
                                 analyte.unit, stamp))
    return rows


def pivoted_rows(db: SyntheticDb, kb: KnowledgeBase) -> dict:
    del kb  # same signature as tall_rows; codes are not needed here
    columns = pivoted_columns()
    rows = {name: [] for name in columns}
    for p in db.persons:
        rows["person"].append((p.person_id, p.birth_date.isoformat(),
                               p.gender))
    pools = {"condition": ("condition_events", fixture.CONDITION_POOL),
             "procedure": ("procedure_events", fixture.PROCEDURE_POOL),
             "drug": ("drug_events", fixture.DRUG_POOL)}
    for e in db.events:
        stamp = _fmt_dt(e.when)
        if e.domain == "lab":
            analyte = _ANALYTE_BY_CUI[e.cui]
            flags = tuple(e.value if a.cui == e.cui else None
                          for a in fixture.analytes_by_table(analyte.table))
            rows[analyte.table].append((e.person_id, stamp, *flags))
        else:
            table, pool = pools[e.domain]
            flags = tuple(1 if p.cui == e.cui else None for p in pool)
            rows[table].append((e.person_id, stamp, *flags))
    return rows


def variant_rows(db: SyntheticDb, kb: KnowledgeBase, variant: str) -> dict:
    if variant == "tall":
        return tall_rows(db, kb)
    if variant == "pivoted":
        return pivoted_rows(db, kb)
    raise ValueError(f"unknown schema variant {variant!r}")


def variant_ddl(variant: str) -> list:
    if variant == "tall":
        return fixture.tall_ddl()
    if variant == "pivoted":
        return fixture.pivoted_ddl()
    raise ValueError(f"unknown schema variant {variant!r}")


def variant_columns(variant: str) -> dict:
    if variant == "tall":
        return tall_columns()
    if variant == "pivoted":
        return pivoted_columns()
    raise ValueError(f"unknown schema variant {variant!r}")


# ---------------------------------------------------------------------------
# emission: sqlite databases, SQL scripts, delimited files

def build_sqlite(db: SyntheticDb, kb: KnowledgeBase, variant: str,
                 path: str = ":memory:") -> sqlite3.Connection:
    # callers hand these connections to worker threads (the HTTP layer
    # serializes access per database), so do not bind to this thread
    conn = sqlite3.connect(path, check_same_thread=False)
    for statement in variant_ddl(variant):
        conn.execute(statement)
    columns = variant_columns(variant)
    for table, rows in variant_rows(db, kb, variant).items():
        placeholders = ", ".join("?" for _ in columns[table])
        conn.executemany(f"INSERT INTO {table} VALUES ({placeholders})", rows)
    conn.commit()
    return conn


def _sql_literal(value) -> str:
    if value is None:
        return "NULL"
    if isinstance(value, str):
        return "'" + value.replace("'", "''") + "'"
    return str(value)


def render_insert_script(db: SyntheticDb, kb: KnowledgeBase,
                         variant: str) -> str:
    """One executable SQL script: CREATE TABLE statements then INSERTs."""
    parts = [s + ";" for s in variant_ddl(variant)]
    for table, rows in variant_rows(db, kb, variant).items():
        for row in rows:
            values = ", ".join(_sql_literal(v) for v in row)
            parts.append(f"INSERT INTO {table} VALUES ({values});")
    return "\n".join(parts) + "\n"


def _tsv_cell(value) -> str:
    return "" if value is None else str(value)


def write_db_files(db: SyntheticDb, kb: KnowledgeBase, directory) -> list:
    """Write both schema variants under `directory`: a SQL script per
    variant plus one delimited file per table. Returns the paths written."""
    directory = Path(directory)
    written = []
    for variant in VARIANTS:
        script = directory / f"{variant}.sql"
        script.parent.mkdir(parents=True, exist_ok=True)
        script.write_text(render_insert_script(db, kb, variant),
                          encoding="utf-8")
        written.append(script)
        subdir = directory / variant
        subdir.mkdir(parents=True, exist_ok=True)
        columns = variant_columns(variant)
        for table, rows in variant_rows(db, kb, variant).items():
            out = subdir / f"{table}.tsv"
            lines = ["\t".join(columns[table])]
            lines.extend("\t".join(_tsv_cell(v) for v in row) for row in rows)
            out.write_text("\n".join(lines) + "\n", encoding="utf-8")
            written.append(out)
    return written


# ---------------------------------------------------------------------------
# SQL execution against sqlite

_INTERVAL_ADD = re.compile(r"(\S+) \+ INTERVAL '(\d+)' MINUTE\b")
_DATE_LITERAL = re.compile(r"\bDATE '([^']*)'")
_TIMESTAMP_LITERAL = re.compile(r"\bTIMESTAMP '([^']*)'")


def to_sqlite_dialect(sql: str) -> str:
    """Mechanically rewrite the compiler's ANSI constructs for sqlite:
    typed date and timestamp literals become plain strings, and interval
    addition becomes a datetime() call. Nothing else is touched."""
    sql = _INTERVAL_ADD.sub(r"datetime(\1, '+\2 minutes')", sql)
    sql = _DATE_LITERAL.sub(r"'\1'", sql)
    sql = _TIMESTAMP_LITERAL.sub(r"'\1'", sql)
    return sql


def run_sql(conn: sqlite3.Connection, sql: str) -> frozenset:
    return frozenset(row[0] for row in
                     conn.execute(to_sqlite_dialect(sql)).fetchall())


@dataclass(frozen=True)
class PlanExecution:
    """Per-line cohorts for a plan, aligned with plan.lines (None for
    skipped lines), plus the final combined cohort (None when no
    inclusion line executed)."""

    cohorts: tuple
    final: Optional[frozenset]

    def cohort_for(self, line_number: int) -> Optional[frozenset]:
        return self.cohorts[line_number - 1]


def execute_plan(conn: sqlite3.Connection, plan: QueryPlan) -> PlanExecution:
    cohorts = []
    included = None
    excluded = set()
    for line in plan.lines:
        if line.status is not LineStatus.EXECUTED:
            cohorts.append(None)
            continue
        cohort = run_sql(conn, line.sql)
        cohorts.append(cohort)
        if line.polarity is Polarity.INCLUSION:
            included = cohort if included is None else included & cohort
        else:
            excluded |= cohort
    final = None if included is None else frozenset(included - excluded)
    return PlanExecution(tuple(cohorts), final)


# ---------------------------------------------------------------------------
# independent oracle evaluation

def _as_decimal(value: float) -> Decimal:
    return Decimal(str(value))


def _passes_filters(value: Decimal, filters) -> bool:
    for f in filters:
        if f.op == "EQ" and not value == f.value:
            return False
        if f.op == "NEQ" and not value != f.value:
            return False
        if f.op == "GT" and not value > f.value:
            return False
        if f.op == "GTEQ" and not value >= f.value:
            return False
        if f.op == "LT" and not value < f.value:
            return False
        if f.op == "LTEQ" and not value <= f.value:
            return False
    return True


class _Oracle:
    def __init__(self, db: SyntheticDb, kb: KnowledgeBase,
                 pin_date: Optional[date], reference_date: date):
        self.db = db
        self.kb = kb
        self.pin = pin_date
        self.reference = reference_date
        self.universe = db.person_ids
        self.by_person = {}
        for e in db.events:
            if pin_date is not None and e.when.date() > pin_date:
                continue
            self.by_person.setdefault(e.person_id, []).append(e)

    def evaluate(self, node: ReasonedNode) -> frozenset:
        fn = node.function
        if fn == "intersect":
            cohort = self.universe
            for child in node.children:
                cohort = cohort & self.evaluate(child)
            return cohort
        if fn == "union":
            cohort = frozenset()
            for child in node.children:
                if child.is_computable:
                    cohort = cohort | self.evaluate(child)
            return cohort
        if fn == "not":
            return self.universe - self.evaluate(node.children[0])
        if fn in ("female", "male"):
            want = "F" if fn == "female" else "M"
            return frozenset(p.person_id for p in self.db.persons
                             if p.gender == want)
        if fn == "age":
            out = set()
            for p in self.db.persons:
                age = Decimal(_completed_years(self.reference, p.birth_date))
                if _passes_filters(age, node.numeric_filters):
                    out.add(p.person_id)
            return frozenset(out)
        return frozenset(
            pid for pid, events in self.by_person.items()
            if any(self._event_matches(e, node, events) for e in events))

    def _event_matches(self, event: Event, node: ReasonedNode,
                       person_events) -> bool:
        node_codes = set()
        for cui in node.concepts.members:
            node_codes |= self.kb.concept(cui).codes
        if not (_event_codes(event, self.kb) & node_codes):
            return False
        if node.numeric_filters:
            if event.value is None:
                return False
            if not _passes_filters(_as_decimal(event.value),
                                   node.numeric_filters):
                return False
        for tf in node.temporal_filters:
            anchors = [a for a in person_events
                       if self._event_matches(a, tf.anchor, person_events)]
            if tf.direction == "within":
                horizon = timedelta(minutes=window_minutes_equivalent(
                    tf.window_value, tf.window_unit))
                if not any(a.when <= event.when <= a.when + horizon
                           for a in anchors):
                    return False
            elif tf.direction == "after":
                if not any(event.when > a.when for a in anchors):
                    return False
            else:
                if not any(event.when < a.when for a in anchors):
                    return False
        return True


def oracle_eval(node: ReasonedNode, db: SyntheticDb, kb: KnowledgeBase,
                pin_date: Optional[date] = None,
                reference_date: Optional[date] = None) -> frozenset:
    """Evaluate a reasoned criterion directly over the event model.

    This path never consults the schema mappings or the SQL compiler; it
    interprets the criterion against the in-memory events, so it serves
    as an independent check on compiled SQL.
    """
    if not node.is_computable:
        raise ValueError(f"cannot evaluate non-computable criterion: "
                         f"{node.failure}")
    reference = reference_date or pin_date or date.today()
    return frozenset(_Oracle(db, kb, pin_date, reference).evaluate(node))


def oracle_plan(reasoned, db: SyntheticDb, kb: KnowledgeBase,
                plan: QueryPlan) -> PlanExecution:
    """Oracle cohorts for each executed plan line, combined like the SQL
    route: intersect inclusions, then subtract exclusions."""
    cohorts = []
    included = None
    excluded = set()
    for line, node in zip(plan.lines, reasoned):
        if line.status is not LineStatus.EXECUTED:
            cohorts.append(None)
            continue
        cohort = oracle_eval(node, db, kb, pin_date=plan.pin_date)
        cohorts.append(cohort)
        if line.polarity is Polarity.INCLUSION:
            included = cohort if included is None else included & cohort
        else:
            excluded |= cohort
    final = None if included is None else frozenset(included - excluded)
    return PlanExecution(tuple(cohorts), final)


# ---------------------------------------------------------------------------
# recall curves

@dataclass(frozen=True)
class RecallPoint:
    line_number: int
    polarity: Polarity
    status: LineStatus
    cohort_size: int
    recall: float


@dataclass(frozen=True)
class RecallCurve:
    points: tuple
    gold_size: int

    def series(self) -> list:
        return [(p.line_number, p.recall) for p in self.points]

    def to_dict(self) -> dict:
        return {"gold_size": self.gold_size,
                "points": [{"line_number": p.line_number,
                            "polarity": p.polarity.value,
                            "status": p.status.value,
                            "cohort_size": p.cohort_size,
                            "recall": p.recall} for p in self.points]}


def recall_curve(plan: QueryPlan, execution: PlanExecution,
                 universe, gold) -> RecallCurve:
    """Recall of the gold cohort after each criterion line is applied.

    The running cohort starts at the whole universe. Executed inclusion
    lines intersect into it, executed exclusion lines subtract from it,
    and skipped lines leave it unchanged, so each line still yields a
    point and skips are visible as flat segments.
    """
    gold = frozenset(gold)
    if not gold:
        raise EmptyGoldError("gold standard cohort is empty")
    universe = frozenset(universe)
    included = universe
    excluded = frozenset()
    current = universe
    points = []
    for line, cohort in zip(plan.lines, execution.cohorts):
        if line.status is LineStatus.EXECUTED:
            if line.polarity is Polarity.INCLUSION:
                included = included & cohort
            else:
                excluded = excluded | cohort
            current = included - excluded
        points.append(RecallPoint(line.line_number, line.polarity,
                                  line.status, len(current),
                                  len(current & gold) / len(gold)))
    return RecallCurve(tuple(points), len(gold))


def write_recall_curve(curve: RecallCurve, path):
    """Two-column delimited series: line number and recall."""
    lines = [f"{p.line_number}\t{p.recall:.6f}" for p in curve.points]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# trial documents

class TrialFormatError(ValueError):
    pass


@dataclass(frozen=True)
class TrialDocument:
    """A named set of eligibility criteria plus evaluation settings."""

    name: str
    inclusion: tuple
    exclusion: tuple
    description: str = ""
    pin_date: Optional[date] = None
    input_mode: str = "logical_form"

    def criteria(self, catalog=None) -> list:
        """Criterion objects in plan order: inclusions first, then
        exclusions, numbered from 1. Logical forms are parsed only in
        logical_form input mode; other modes leave raw text for the
        translation pipeline."""
        out = []
        number = 1
        for polarity, texts in ((Polarity.INCLUSION, self.inclusion),
                                (Polarity.EXCLUSION, self.exclusion)):
            for text in texts:
                parsed = None
                if self.input_mode == "logical_form":
                    parsed = lf.parse(text, catalog)
                out.append(Criterion(polarity, text, logical_form=parsed,
                                     line_number=number))
                number += 1
        return out


def parse_trial(doc: dict) -> TrialDocument:
    if not isinstance(doc, dict):
        raise TrialFormatError("trial document must be a JSON object")
    name = doc.get("name")
    if not name or not isinstance(name, str):
        raise TrialFormatError("trial document needs a string 'name'")
    mode = doc.get("input_mode", "logical_form")
    if mode not in ("raw_text", "augmented", "logical_form"):
        raise TrialFormatError(f"unknown input_mode {mode!r}")
    pin = doc.get("pin_date")
    pin_date = None
    if pin is not None:
        try:
            pin_date = date.fromisoformat(pin)
        except (TypeError, ValueError):
            raise TrialFormatError(f"bad pin_date {pin!r}") from None
    for key in ("inclusion", "exclusion"):
        lines = doc.get(key, [])
        if not isinstance(lines, list) or \
                not all(isinstance(x, str) for x in lines):
            raise TrialFormatError(f"'{key}' must be a list of strings")
    return TrialDocument(name=name,
                         inclusion=tuple(doc.get("inclusion", [])),
                         exclusion=tuple(doc.get("exclusion", [])),
                         description=doc.get("description", ""),
                         pin_date=pin_date,
                         input_mode=mode)


def load_trial_file(path) -> TrialDocument:
    with open(path, encoding="utf-8") as fh:
        return parse_trial(json.load(fh))


def bundled_trial_names() -> list:
    out = []
    for entry in fixture.data_path("trials").iterdir():
        if entry.name.endswith(".json"):
            out.append(entry.name[:-5])
    return sorted(out)


def load_bundled_trial(name: str) -> TrialDocument:
    return parse_trial(json.loads(
        fixture.read_data_text(f"trials/{name}.json")))
