"""Semantic metadata mappings: declarative descriptions of target schemas.

An SMM document tags the tables and columns of some relational schema with
knowledge-base concepts so criteria can be compiled against it without the
compiler knowing the schema in advance. Two strategies are supported:

* tall: one row per event, with a code column holding terminology codes of
  a single code system. A criterion maps to the table when its concepts
  fall under the table's concept tags; the generated filter enumerates the
  system's codes over the criterion's concepts.
* pivoted: one row per event, one column per concept. A criterion maps to
  each column whose tag concepts it contains; no code filter is needed.

Documents are JSON; see `docs/formats.md` for the full schema. Mappings
are immutable after loading and validation.
"""

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Union

from .kb import CODE_SYSTEMS, KnowledgeBase


class SchemaError(ValueError):
    """A structural problem in an SMM document, with a /path/to/field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path
        self.reason = message


class DuplicateTableError(SchemaError):
    def __init__(self, name: str):
        super().__init__("/tables", f"duplicate table {name!r}")
        self.table = name


class Strategy(Enum):
    TALL = "tall"
    PIVOTED = "pivoted"


@dataclass(frozen=True)
class CodeColumn:
    name: str
    system: str


@dataclass(frozen=True)
class PivotColumn:
    name: str
    concepts: tuple
    kind: str = "value"  # "value" (numeric, NULL = not measured) or "flag" (1 = event)
    unit: Optional[str] = None


@dataclass(frozen=True)
class TableMapping:
    table: str
    strategy: Strategy
    person_id_column: str
    date_column: Optional[str] = None
    concepts: tuple = ()  # tall only: concept tags, matched by subsumption
    code_column: Optional[CodeColumn] = None
    value_column: Optional[str] = None
    columns: tuple = ()  # pivoted only


@dataclass(frozen=True)
class PersonMapping:
    table: str
    person_id_column: str
    birth_date_column: str
    gender_column: str
    female_value: str = "F"
    male_value: str = "M"


@dataclass(frozen=True)
class SemanticMetadataMapping:
    name: str
    person: PersonMapping
    tables: tuple

    def table(self, name: str) -> Optional[TableMapping]:
        for t in self.tables:
            if t.table == name:
                return t
        return None

    def tagged_concepts(self) -> frozenset:
        out = set()
        for t in self.tables:
            out.update(t.concepts)
            for col in t.columns:
                out.update(col.concepts)
        return frozenset(out)


# ---------------------------------------------------------------------------
# loading / validation

def _need(doc: dict, key: str, path: str, kind=None):
    if key not in doc:
        raise SchemaError(f"{path}/{key}", "missing required field")
    value = doc[key]
    if kind is not None and not isinstance(value, kind):
        raise SchemaError(f"{path}/{key}",
                          f"expected {kind.__name__}, got {type(value).__name__}")
    return value


def _cui_list(raw, path: str) -> tuple:
    if not isinstance(raw, list) or not all(isinstance(c, str) for c in raw):
        raise SchemaError(path, "expected a list of concept identifiers")
    return tuple(raw)


def _load_table(doc: dict, path: str) -> TableMapping:
    name = _need(doc, "table", path, str)
    raw_strategy = _need(doc, "strategy", path, str)
    try:
        strategy = Strategy(raw_strategy)
    except ValueError:
        raise SchemaError(f"{path}/strategy",
                          f"unknown strategy {raw_strategy!r}") from None
    person_col = _need(doc, "person_id_column", path, str)
    date_column = doc.get("date_column")

    if strategy is Strategy.TALL:
        concepts = _cui_list(_need(doc, "concepts", path), f"{path}/concepts")
        cc = _need(doc, "code_column", path, dict)
        code_column = CodeColumn(_need(cc, "name", f"{path}/code_column", str),
                                 _need(cc, "system", f"{path}/code_column", str))
        if code_column.system not in CODE_SYSTEMS:
            raise SchemaError(f"{path}/code_column/system",
                              f"unknown code system {code_column.system!r}")
        return TableMapping(table=name, strategy=strategy,
                            person_id_column=person_col, date_column=date_column,
                            concepts=concepts, code_column=code_column,
                            value_column=doc.get("value_column"))

    raw_columns = _need(doc, "columns", path, list)
    columns = []
    for i, col in enumerate(raw_columns):
        cpath = f"{path}/columns/{i}"
        if not isinstance(col, dict):
            raise SchemaError(cpath, "expected an object")
        kind = col.get("kind", "value")
        if kind not in ("value", "flag"):
            raise SchemaError(f"{cpath}/kind", f"unknown column kind {kind!r}")
        columns.append(PivotColumn(
            name=_need(col, "name", cpath, str),
            concepts=_cui_list(_need(col, "concepts", cpath), f"{cpath}/concepts"),
            kind=kind, unit=col.get("unit")))
    return TableMapping(table=name, strategy=strategy, person_id_column=person_col,
                        date_column=date_column, columns=tuple(columns))


def load_smm(document: Union[str, dict]) -> SemanticMetadataMapping:
    """Parse and validate an SMM document (a JSON string or parsed dict)."""
    if isinstance(document, str):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as e:
            raise SchemaError("/", f"not valid JSON: {e}") from None
    if not isinstance(document, dict):
        raise SchemaError("/", "document root must be an object")

    name = _need(document, "name", "", str)
    p = _need(document, "person", "", dict)
    person = PersonMapping(
        table=_need(p, "table", "/person", str),
        person_id_column=_need(p, "person_id_column", "/person", str),
        birth_date_column=_need(p, "birth_date_column", "/person", str),
        gender_column=_need(p, "gender_column", "/person", str),
        female_value=p.get("female_value", "F"),
        male_value=p.get("male_value", "M"))

    raw_tables = _need(document, "tables", "", list)
    tables = []
    seen = set()
    for i, t in enumerate(raw_tables):
        if not isinstance(t, dict):
            raise SchemaError(f"/tables/{i}", "expected an object")
        table = _load_table(t, f"/tables/{i}")
        if table.table in seen:
            raise DuplicateTableError(table.table)
        seen.add(table.table)
        tables.append(table)
    return SemanticMetadataMapping(name=name, person=person, tables=tuple(tables))


def load_smm_file(path) -> SemanticMetadataMapping:
    with open(path, encoding="utf-8") as f:
        return load_smm(f.read())


def check_concepts(smm: SemanticMetadataMapping, kb: KnowledgeBase) -> list[str]:
    """Diagnostics for concept tags the knowledge base does not know.

    Unresolvable tags are tolerated at load time (the schema may be newer
    than the KB); they simply never match a criterion.
    """
    out = []
    for t in smm.tables:
        for cui in t.concepts:
            if cui not in kb.concepts:
                out.append(f"table {t.table}: unknown concept {cui}")
        for col in t.columns:
            for cui in col.concepts:
                if cui not in kb.concepts:
                    out.append(f"column {t.table}.{col.name}: unknown concept {cui}")
    return out


# ---------------------------------------------------------------------------
# criterion -> schema targets

@dataclass(frozen=True)
class MappingTarget:
    """One place in the schema where a criterion's concepts can be found.

    For tall tables, `codes` lists the (system, code) pairs to filter the
    code column to, and `unmapped` lists concepts that carried no code in
    the table's system (they contribute nothing but are surfaced in
    explanations). For pivoted tables, `column` names the matched column.
    """

    table: TableMapping
    codes: tuple = ()
    column: Optional[PivotColumn] = None
    unmapped: tuple = ()


def map_criterion(node, smm: SemanticMetadataMapping,
                  kb: KnowledgeBase) -> list[MappingTarget]:
    """Targets for a resolved node's concept set, in SMM table order.

    Tall tables match when any node concept falls under the table's tags
    (descendant subsumption via the KB). Pivoted columns match by direct
    membership: the reasoner has already descendant-closed the node's
    concepts, so a column tagged with a subtype is matched by a criterion
    naming the parent, and never the other way around.
    """
    members = set(node.concepts.members)
    if not members:
        return []
    targets = []
    for t in smm.tables:
        if t.strategy is Strategy.TALL:
            tagged = set()
            for tag in t.concepts:
                if tag in kb.concepts:
                    tagged |= kb.descendants(tag).members
            hit = members & tagged
            if not hit:
                continue
            system = t.code_column.system
            codes = set()
            unmapped = []
            for cui in sorted(hit):
                concept = kb.concepts.get(cui)
                cui_codes = concept.codes_in(system) if concept else ()
                if cui_codes:
                    codes.update((system, c) for c in cui_codes)
                else:
                    unmapped.append(cui)
            if codes:
                targets.append(MappingTarget(table=t, codes=tuple(sorted(codes)),
                                             unmapped=tuple(unmapped)))
        else:
            for col in t.columns:
                if members & set(col.concepts):
                    targets.append(MappingTarget(table=t, column=col))
    return targets
