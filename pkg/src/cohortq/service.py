"""End-to-end criterion-to-cohort orchestration and its HTTP surface.

The Engine object wires the processing stages together: tag raw text,
translate to logical forms, reason over the knowledge base, apply user
overrides, compile per-line SQL, and optionally run the plan against a
registered database. create_app() exposes the same engine over HTTP for
the command line and the web client. Responses serialize to canonical
JSON (sorted keys, compact separators) so that an in-process call and an
HTTP round trip yield identical bytes; stage timings travel in a
response header rather than the body to keep that property.
"""

import dataclasses
import hashlib
import json
import logging
import os
import sqlite3
import threading
import time
from dataclasses import dataclass, field
from datetime import date
from enum import Enum
from pathlib import Path
from typing import Optional, Union

from . import fixture, frontend, harness
from . import lforms as lf
from .kb import KnowledgeBase
from .lforms import Criterion, Polarity
from .normalize import ConceptNormalizer, Lexicon
from .reason import ReasonedNode, Status, apply_override, explain, reason
from .smm import SemanticMetadataMapping, load_smm
from .sqlgen import LineStatus, QueryPlan, compile_trial

log = logging.getLogger(__name__)

DEFAULT_HOST = "127.0.0.1"
DEFAULT_PORT = 8760

ENV_PORT = "COHORTQ_PORT"
ENV_DATA_DIR = "COHORTQ_DATA_DIR"


class InputMode(Enum):
    RAW_TEXT = "raw_text"
    AUGMENTED = "augmented"
    LOGICAL_FORM = "logical_form"


class UnknownSmmError(ValueError):
    def __init__(self, name: str):
        super().__init__(f"no mapping named {name!r} is loaded")
        self.name = name


class UnknownDatabaseError(ValueError):
    def __init__(self, name: str):
        super().__init__(f"no database named {name!r} is registered")
        self.name = name


class UnknownPlanError(ValueError):
    def __init__(self, plan_id: str):
        super().__init__(f"no generated plan with id {plan_id!r}")
        self.plan_id = plan_id


class MalformedLogicalFormError(ValueError):
    """A logical_form-mode line failed to parse or validate."""

    def __init__(self, line: int, position: Optional[int], detail: str):
        super().__init__(f"line {line}: {detail}")
        self.line = line
        self.position = position
        self.detail = detail


class ExecutionError(RuntimeError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line
        self.message = message


def canonical_json(payload) -> str:
    """The single serialization used for response bodies and plan ids."""
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


# ---------------------------------------------------------------------------
# request / response shapes

@dataclass(frozen=True)
class Override:
    line: int
    path: tuple
    cuis: tuple

    @classmethod
    def from_dict(cls, doc: dict) -> "Override":
        if "line" not in doc:
            raise ValueError("override needs a line number")
        return cls(line=int(doc["line"]),
                   path=tuple(int(p) for p in doc.get("path", [])),
                   cuis=tuple(str(c) for c in doc.get("cuis", [])))

    def to_dict(self) -> dict:
        return {"line": self.line, "path": list(self.path),
                "cuis": list(self.cuis)}


@dataclass(frozen=True)
class QueryRequest:
    smm_name: str
    inclusion: tuple = ()
    exclusion: tuple = ()
    input_mode: InputMode = InputMode.LOGICAL_FORM
    pin_date: Optional[date] = None
    overrides: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "inclusion", tuple(self.inclusion))
        object.__setattr__(self, "exclusion", tuple(self.exclusion))
        object.__setattr__(self, "overrides", tuple(self.overrides))

    @classmethod
    def from_dict(cls, doc: dict) -> "QueryRequest":
        if not isinstance(doc, dict):
            raise ValueError("request body must be an object")
        if "smm_name" not in doc:
            raise ValueError("smm_name is required")
        mode_raw = doc.get("input_mode", InputMode.LOGICAL_FORM.value)
        try:
            mode = InputMode(mode_raw)
        except ValueError:
            allowed = ", ".join(m.value for m in InputMode)
            raise ValueError(f"unknown input_mode {mode_raw!r}; one of {allowed}")
        pin_raw = doc.get("pin_date")
        try:
            pin = date.fromisoformat(pin_raw) if pin_raw else None
        except ValueError:
            raise ValueError(f"pin_date {pin_raw!r} is not an ISO date")
        overrides = tuple(Override.from_dict(o) for o in doc.get("overrides") or [])
        inclusion = doc.get("inclusion") or []
        exclusion = doc.get("exclusion") or []
        for name, block in (("inclusion", inclusion), ("exclusion", exclusion)):
            if not isinstance(block, list) or \
                    not all(isinstance(t, str) for t in block):
                raise ValueError(f"{name} must be a list of strings")
        return cls(smm_name=str(doc["smm_name"]), inclusion=tuple(inclusion),
                   exclusion=tuple(exclusion), input_mode=mode,
                   pin_date=pin, overrides=overrides)

    def to_dict(self) -> dict:
        return {"smm_name": self.smm_name,
                "inclusion": list(self.inclusion),
                "exclusion": list(self.exclusion),
                "input_mode": self.input_mode.value,
                "pin_date": self.pin_date.isoformat() if self.pin_date else None,
                "overrides": [o.to_dict() for o in self.overrides]}


@dataclass(frozen=True)
class ResponseLine:
    line_number: int
    polarity: Polarity
    raw_text: str
    status: LineStatus
    logical_form: Optional[str] = None
    augmented_text: Optional[str] = None
    skip_reason: Optional[str] = None
    explanation: Optional[dict] = None
    sql: Optional[str] = None
    entities: tuple = ()

    def to_dict(self) -> dict:
        return {"line_number": self.line_number,
                "polarity": self.polarity.value,
                "raw_text": self.raw_text,
                "status": self.status.value,
                "logical_form": self.logical_form,
                "augmented_text": self.augmented_text,
                "skip_reason": self.skip_reason,
                "explanation": self.explanation,
                "sql": self.sql,
                "entities": [dict(e) for e in self.entities]}


@dataclass(frozen=True)
class QueryResponse:
    lines: tuple
    plan: QueryPlan
    plan_id: str
    timing: dict = field(compare=False)

    def to_dict(self) -> dict:
        """Body dict; deterministic, excludes timing (see module note)."""
        return {"lines": [l.to_dict() for l in self.lines],
                "plan": self.plan.to_dict(),
                "plan_id": self.plan_id}

    def body(self) -> str:
        return canonical_json(self.to_dict())


@dataclass(frozen=True)
class ExecutionLine:
    line_number: int
    polarity: Polarity
    status: LineStatus
    matched: Optional[int] = None
    persons: Optional[tuple] = None
    skip_reason: Optional[str] = None

    def to_dict(self) -> dict:
        return {"line_number": self.line_number,
                "polarity": self.polarity.value,
                "status": self.status.value,
                "matched": self.matched,
                "persons": None if self.persons is None else list(self.persons),
                "skip_reason": self.skip_reason}


@dataclass(frozen=True)
class ExecutionResult:
    database: str
    lines: tuple
    final_persons: Optional[tuple]
    recall_curve: Optional[dict] = None

    @property
    def final_matched(self) -> Optional[int]:
        return None if self.final_persons is None else len(self.final_persons)

    def to_dict(self) -> dict:
        final = None
        if self.final_persons is not None:
            final = {"matched": len(self.final_persons),
                     "persons": list(self.final_persons)}
        return {"database": self.database,
                "lines": [l.to_dict() for l in self.lines],
                "final": final,
                "recall_curve": self.recall_curve}

    def body(self) -> str:
        return canonical_json(self.to_dict())


# ---------------------------------------------------------------------------
# configuration

@dataclass(frozen=True)
class EngineConfig:
    """File-driven engine setup; every path falls back to bundled data."""

    kb_concepts: Optional[str] = None
    kb_triples: Optional[str] = None
    lexicon: Optional[str] = None
    smm_dir: Optional[str] = None
    database_dir: Optional[str] = None
    static_dir: Optional[str] = None
    host: str = DEFAULT_HOST
    port: int = DEFAULT_PORT

    _KEYS = ("kb_concepts", "kb_triples", "lexicon", "smm_dir",
             "database_dir", "static_dir", "host", "port")

    @classmethod
    def from_file(cls, path) -> "EngineConfig":
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        if not isinstance(doc, dict):
            raise ValueError("configuration file must hold a JSON object")
        unknown = sorted(set(doc) - set(cls._KEYS))
        if unknown:
            raise ValueError(f"unknown configuration keys: {', '.join(unknown)}")
        if "port" in doc:
            doc["port"] = int(doc["port"])
        return cls(**doc)

    def with_env(self, env=None) -> "EngineConfig":
        env = os.environ if env is None else env
        port = self.port
        if env.get(ENV_PORT):
            port = int(env[ENV_PORT])
        data_dir = env.get(ENV_DATA_DIR) or self.database_dir
        return dataclasses.replace(self, database_dir=data_dir, port=port)


# ---------------------------------------------------------------------------
# the engine

class Engine:
    """Shared read-only knowledge plus per-request pipeline state.

    KB, lexicon and mappings are loaded once and never mutated, so
    concurrent generate() calls need no locking. Execution serializes
    per database because the embedded engine's connections are not
    concurrency-safe.
    """

    def __init__(self, kb: KnowledgeBase, lexicon: Lexicon,
                 normalizer: ConceptNormalizer, smms: dict,
                 catalog: Optional[lf.FunctionCatalog] = None):
        self.kb = kb
        self.lexicon = lexicon
        self.normalizer = normalizer
        self.catalog = catalog
        self.smms = dict(smms)
        self._databases = {}
        self._database_paths = {}
        self._db_locks = {}
        self._plans = {}
        self._state_lock = threading.Lock()

    @classmethod
    def from_config(cls, config: EngineConfig) -> "Engine":
        if config.kb_concepts or config.kb_triples:
            if not (config.kb_concepts and config.kb_triples):
                raise ValueError("kb_concepts and kb_triples go together")
            kb = KnowledgeBase.from_text(
                Path(config.kb_concepts).read_text(encoding="utf-8"),
                Path(config.kb_triples).read_text(encoding="utf-8"))
        else:
            kb = fixture.load_kb()
        if config.lexicon:
            lexicon = Lexicon.from_text(
                Path(config.lexicon).read_text(encoding="utf-8"))
        else:
            lexicon = fixture.load_lexicon()
        normalizer = ConceptNormalizer(lexicon, kb)
        smms = {}
        if config.smm_dir:
            for entry in sorted(Path(config.smm_dir).glob("*.json")):
                smm = load_smm(entry.read_text(encoding="utf-8"))
                smms[smm.name] = smm
        else:
            for name in fixture.bundled_smm_names():
                smm = load_smm(fixture.read_bundled_smm(name))
                smms[smm.name] = smm
        engine = cls(kb, lexicon, normalizer, smms)
        if config.database_dir:
            for script in sorted(Path(config.database_dir).glob("*.sql")):
                engine.add_database(script.stem, script)
        return engine

    @classmethod
    def default(cls) -> "Engine":
        return cls.from_config(EngineConfig())

    # -- databases ---------------------------------------------------------

    def add_database(self, name: str,
                     source: Union[sqlite3.Connection, str, Path]) -> None:
        """Register an open connection or a path to an SQL script that
        builds the database when first used."""
        with self._state_lock:
            self._db_locks.setdefault(name, threading.Lock())
            if isinstance(source, sqlite3.Connection):
                self._databases[name] = source
            else:
                self._database_paths[name] = Path(source)

    def database_names(self) -> list:
        with self._state_lock:
            return sorted(set(self._databases) | set(self._database_paths))

    def _connection(self, name: str) -> sqlite3.Connection:
        with self._state_lock:
            conn = self._databases.get(name)
            if conn is not None:
                return conn
            path = self._database_paths.get(name)
        if path is None:
            raise UnknownDatabaseError(name)
        conn = sqlite3.connect(":memory:", check_same_thread=False)
        conn.executescript(path.read_text(encoding="utf-8"))
        with self._state_lock:
            self._databases[name] = conn
        return conn

    def _db_lock(self, name: str) -> threading.Lock:
        with self._state_lock:
            return self._db_locks.setdefault(name, threading.Lock())

    # -- plan cache --------------------------------------------------------

    def plan_for(self, plan_id: str) -> QueryPlan:
        with self._state_lock:
            plan = self._plans.get(plan_id)
        if plan is None:
            raise UnknownPlanError(plan_id)
        return plan

    # -- generation --------------------------------------------------------

    def generate(self, request: QueryRequest) -> QueryResponse:
        smm = self.smms.get(request.smm_name)
        if smm is None:
            raise UnknownSmmError(request.smm_name)
        numbered = [(Polarity.INCLUSION, t) for t in request.inclusion]
        numbered += [(Polarity.EXCLUSION, t) for t in request.exclusion]
        if not numbered:
            raise ValueError("at least one criterion is required")

        timing = {"translate": 0.0, "reason": 0.0, "compile": 0.0}
        criteria = []
        reasoned = []
        for number, (polarity, text) in enumerate(numbered, start=1):
            t0 = time.perf_counter()
            node, failure, aug_text = self._translate_line(
                request.input_mode, number, polarity, text)
            timing["translate"] += time.perf_counter() - t0
            criteria.append(Criterion(polarity=polarity, raw_text=text,
                                      augmented_text=aug_text,
                                      logical_form=node, line_number=number))
            if node is None:
                reasoned.append(self._untranslated(failure))
                continue
            t0 = time.perf_counter()
            reasoned.append(reason(node, self.kb, self.normalizer, self.catalog))
            timing["reason"] += time.perf_counter() - t0

        reasoned = self._apply_overrides(request.overrides, criteria, reasoned)

        t0 = time.perf_counter()
        plan = compile_trial(criteria, reasoned, smm, self.kb,
                             request.pin_date)
        timing["compile"] += time.perf_counter() - t0

        lines = []
        for crit, node, plan_line in zip(criteria, reasoned, plan.lines):
            lines.append(ResponseLine(
                line_number=plan_line.line_number,
                polarity=crit.polarity,
                raw_text=crit.raw_text,
                status=plan_line.status,
                logical_form=(None if crit.logical_form is None
                              else lf.serialize(crit.logical_form)),
                augmented_text=crit.augmented_text,
                skip_reason=plan_line.skip_reason,
                explanation=explain(node, self.kb).to_dict(),
                sql=plan_line.sql,
                entities=tuple(self._entity_listing(node))))

        plan_id = hashlib.sha256(
            canonical_json(plan.to_dict()).encode("utf-8")).hexdigest()
        with self._state_lock:
            self._plans[plan_id] = plan
        timing_ms = {k: round(v * 1000.0, 3) for k, v in timing.items()}
        return QueryResponse(lines=tuple(lines), plan=plan,
                             plan_id=plan_id, timing=timing_ms)

    def _translate_line(self, mode: InputMode, number: int,
                        polarity: Polarity, text: str):
        """(logical form, failure text, augmented text) for one line.

        Logical-form mode raises on bad input because the caller wrote
        the form directly; the text modes degrade to a failure string so
        a single stubborn line never sinks the whole request.
        """
        if mode is InputMode.LOGICAL_FORM:
            try:
                node = lf.parse(text)
            except lf.LfError as e:
                raise MalformedLogicalFormError(number, e.position, str(e))
            problems = lf.validate(node, self.catalog)
            if problems:
                raise MalformedLogicalFormError(
                    number, None, "; ".join(p.message for p in problems))
            return node, None, None
        if mode is InputMode.RAW_TEXT:
            aug, result = frontend.pipeline(text, self.lexicon, polarity,
                                            self.catalog)
            if isinstance(result, frontend.NotTranslatable):
                return None, result.reason, aug.augmented
            return result, None, aug.augmented
        result = frontend.translate(frontend.AugmentedCriterion(text, text),
                                    polarity, self.catalog)
        if isinstance(result, frontend.NotTranslatable):
            return None, result.reason, text
        return result, None, text

    def _untranslated(self, failure: str) -> ReasonedNode:
        return ReasonedNode(source=lf.LfNode("criterion"),
                            status=Status.NON_COMPUTABLE,
                            failure=f"translation failed: {failure}")

    def _entity_listing(self, root: ReasonedNode) -> list:
        """Every override-capable entity node in the line, with its child
        path and resolved concepts. This is what concept-chip editors
        consume: each entry's path feeds straight back into an Override."""
        out = []

        def visit(node: ReasonedNode, path: tuple) -> None:
            named = node.source.quoted_value()
            if named is not None and \
                    node.function not in ("female", "male", "age"):
                concepts = []
                for cui in sorted(node.concepts.members):
                    concept = self.kb.concepts.get(cui)
                    codes = [] if concept is None else \
                        [[s, c] for s, c in sorted(concept.codes)]
                    concepts.append({"cui": cui,
                                     "name": self.kb.name_of(cui),
                                     "codes": codes})
                out.append({"path": list(path), "function": node.function,
                            "text": named, "concepts": concepts})
            for index, child in enumerate(node.children):
                visit(child, path + (index,))

        visit(root, ())
        return out

    def _apply_overrides(self, overrides, criteria, reasoned):
        out = list(reasoned)
        for ov in overrides:
            index = ov.line - 1
            if not 0 <= index < len(out):
                raise ValueError(f"override references unknown line {ov.line}")
            if criteria[index].logical_form is None:
                raise ValueError(
                    f"override targets line {ov.line}, which has no logical form")
            out[index] = apply_override(out[index], ov.path, ov.cuis)
        return out

    # -- execution ---------------------------------------------------------

    def execute(self, plan: QueryPlan, database: str,
                skip_zero_results: bool = False,
                gold=None) -> ExecutionResult:
        conn = self._connection(database)
        cohorts = []
        universe = None
        with self._db_lock(database):
            for line in plan.lines:
                if line.status is not LineStatus.EXECUTED:
                    cohorts.append(None)
                    continue
                try:
                    cohorts.append(harness.run_sql(conn, line.sql))
                except sqlite3.Error as e:
                    raise ExecutionError(line.line_number, str(e))
            if gold is not None:
                universe = self._person_universe(conn, plan.smm_name)

        out_lines = []
        included = None
        excluded = set()
        for line, cohort in zip(plan.lines, cohorts):
            if cohort is None:
                out_lines.append(ExecutionLine(
                    line.line_number, line.polarity, LineStatus.SKIPPED,
                    skip_reason=line.skip_reason))
                continue
            if skip_zero_results and not cohort:
                out_lines.append(ExecutionLine(
                    line.line_number, line.polarity, LineStatus.SKIPPED,
                    matched=0, persons=(),
                    skip_reason="zero results"))
                continue
            out_lines.append(ExecutionLine(
                line.line_number, line.polarity, LineStatus.EXECUTED,
                matched=len(cohort), persons=tuple(sorted(cohort))))
            if line.polarity is Polarity.INCLUSION:
                included = cohort if included is None else included & cohort
            else:
                excluded |= cohort
        final = None if included is None else tuple(sorted(included - excluded))

        curve = None
        if gold is not None:
            curve = self._recall_curve(plan, out_lines, cohorts,
                                       universe, gold)
        return ExecutionResult(database=database, lines=tuple(out_lines),
                               final_persons=final, recall_curve=curve)

    def _person_universe(self, conn: sqlite3.Connection,
                         smm_name: str) -> frozenset:
        smm = self.smms.get(smm_name)
        if smm is None:
            raise ValueError(
                f"recall analysis needs the {smm_name!r} mapping to find "
                "the person table, and no such mapping is loaded")
        sql = (f"SELECT {smm.person.person_id_column} "
               f"FROM {smm.person.table}")
        return frozenset(row[0] for row in conn.execute(sql))

    def _recall_curve(self, plan: QueryPlan, out_lines, cohorts,
                      universe, gold) -> dict:
        """Per-line recall of a gold cohort; statuses reflect any
        zero-result demotions, so demoted lines carry forward."""
        effective = []
        aligned = []
        for plan_line, out_line, cohort in zip(plan.lines, out_lines,
                                               cohorts):
            demoted = out_line.status is not plan_line.status
            effective.append(dataclasses.replace(
                plan_line, status=out_line.status,
                skip_reason=out_line.skip_reason) if demoted else plan_line)
            aligned.append(None if out_line.status is LineStatus.SKIPPED
                           else cohort)
        curve = harness.recall_curve(
            dataclasses.replace(plan, lines=tuple(effective)),
            harness.PlanExecution(tuple(aligned), None),
            universe, gold)
        return curve.to_dict()

    # -- catalogs for the UI ----------------------------------------------

    def smm_listing(self) -> list:
        out = []
        for name in sorted(self.smms):
            smm = self.smms[name]
            out.append({
                "name": name,
                "person_table": smm.person.table,
                "tables": [{"name": t.table, "strategy": t.strategy.value}
                           for t in smm.tables]})
        return out

    def search_concepts(self, query: str, limit: int = 50) -> list:
        needle = query.strip().lower()
        hits = []
        for cui in sorted(self.kb.concepts):
            concept = self.kb.concepts[cui]
            if needle and needle not in concept.preferred_name.lower() \
                    and needle != cui.lower():
                continue
            hits.append({"cui": cui,
                         "name": concept.preferred_name,
                         "semantic_types": sorted(concept.semantic_types),
                         "codes": [[s, c] for s, c in sorted(concept.codes)]})
            if len(hits) >= limit:
                break
        return hits


# ---------------------------------------------------------------------------
# HTTP surface

_ERROR_CODES = {
    UnknownSmmError: "UnknownSmm",
    UnknownDatabaseError: "UnknownDatabase",
    UnknownPlanError: "UnknownPlan",
    MalformedLogicalFormError: "MalformedLogicalForm",
    ExecutionError: "ExecutionError",
    harness.EmptyGoldError: "EmptyGold",
}


def error_payload(exc: Exception) -> dict:
    code = _ERROR_CODES.get(type(exc), "BadRequest")
    payload = {"error": code, "detail": str(exc)}
    if isinstance(exc, MalformedLogicalFormError):
        payload["line"] = exc.line
        payload["position"] = exc.position
    if isinstance(exc, ExecutionError):
        payload["line"] = exc.line
    return payload


def create_app(engine: Optional[Engine] = None,
               static_dir: Optional[str] = None):
    from fastapi import FastAPI, Request
    from fastapi.responses import JSONResponse, PlainTextResponse, Response

    engine = engine or Engine.default()
    app = FastAPI(title="cohortq", docs_url=None, redoc_url=None)
    app.state.engine = engine

    def fail(exc: Exception) -> JSONResponse:
        return JSONResponse(status_code=400, content=error_payload(exc))

    def as_json(body: str, headers: Optional[dict] = None) -> Response:
        return Response(content=body, media_type="application/json",
                        headers=headers or {})

    @app.get("/api/health")
    def health():
        return PlainTextResponse("ok")

    @app.get("/api/smm")
    def smm_listing():
        return as_json(canonical_json(engine.smm_listing()))

    @app.get("/api/concepts")
    def concepts(q: str = ""):
        return as_json(canonical_json(engine.search_concepts(q)))

    @app.get("/api/databases")
    def databases():
        return as_json(canonical_json(engine.database_names()))

    @app.post("/api/queries")
    async def queries(request: Request):
        try:
            doc = await request.json()
        except Exception:
            return fail(ValueError("request body is not valid JSON"))
        try:
            response = engine.generate(QueryRequest.from_dict(doc))
        except (ValueError, lf.LfError) as e:
            return fail(e)
        return as_json(response.body(),
                       {"x-timing-ms": canonical_json(response.timing)})

    @app.post("/api/execute")
    async def execute(request: Request):
        try:
            doc = await request.json()
        except Exception:
            return fail(ValueError("request body is not valid JSON"))
        try:
            if not isinstance(doc, dict) or "database" not in doc:
                raise ValueError("database is required")
            if "plan_id" in doc:
                plan = engine.plan_for(str(doc["plan_id"]))
            elif "plan" in doc:
                plan = QueryPlan.from_dict(doc["plan"])
            else:
                raise ValueError("either plan_id or plan is required")
            gold = doc.get("gold")
            if gold is not None:
                if not isinstance(gold, list) or \
                        any(not isinstance(p, int) for p in gold):
                    raise ValueError("gold must be a list of person ids")
                gold = frozenset(gold)
            result = engine.execute(plan, str(doc["database"]),
                                    bool(doc.get("skip_zero_results", False)),
                                    gold=gold)
        except (KeyError, TypeError) as e:
            return fail(ValueError(f"malformed plan document: {e}"))
        except (ValueError, ExecutionError) as e:
            return fail(e)
        return as_json(result.body())

    if static_dir is not None:
        # mounted after the API routes so /api/* always wins; html=True
        # serves index.html at / for the single-page client
        from fastapi.staticfiles import StaticFiles
        app.mount("/", StaticFiles(directory=str(static_dir), html=True),
                  name="ui")

    return app


def serve(config: EngineConfig) -> None:
    """Blocking uvicorn server over an engine built from `config`."""
    import uvicorn

    app = create_app(Engine.from_config(config), config.static_dir)
    uvicorn.run(app, host=config.host, port=config.port, log_level="warning")
