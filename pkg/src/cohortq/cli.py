"""Command-line front end: parse and convert logical forms, score text
pairs, compile trials to SQL plans, execute plans, generate synthetic
databases, and serve the HTTP API.

Every subcommand is scriptable: no prompts, deterministic output for
fixed inputs, exit 0 on success and 1 on the first failure with a
machine-parsable `error: <Code>: <detail>` line on stderr.
"""

import argparse
import dataclasses
import json
import logging
import sqlite3
import sys
from datetime import date
from pathlib import Path

from . import fixture, harness
from . import lforms as lf
from . import metrics
from .service import (Engine, EngineConfig, InputMode, QueryRequest,
                      serve as serve_app)
from .sqlgen import LineStatus, QueryPlan


def _fail(code: str, detail: str) -> int:
    print(f"error: {code}: {detail}", file=sys.stderr)
    return 1


def _read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    return Path(path).read_text(encoding="utf-8")


def _style(name: str) -> lf.Style:
    return lf.Style(name)


def _load_spans(path) -> list:
    if path is None:
        return None
    return _read_text(path).splitlines()


# ---------------------------------------------------------------------------
# parse / convert

def cmd_parse(args) -> int:
    try:
        text = _read_text(args.file).strip()
    except OSError as e:
        return _fail("Io", str(e))
    style = _style(args.style)
    try:
        if style is not lf.Style.STANDARD:
            text = lf.convert_style(text, style, lf.Style.STANDARD,
                                    span_table=_load_spans(args.spans))
        node = lf.parse(text)
    except lf.LfError as e:
        return _fail(type(e).__name__, str(e))
    problems = lf.validate(node)
    if problems:
        for p in problems:
            print(f"error: Validation: {p.code} {p.message} at {p.path}",
                  file=sys.stderr)
        return 1
    print(lf.serialize(node, pretty=True))
    return 0


def cmd_convert(args) -> int:
    try:
        text = _read_text(args.file).strip()
    except OSError as e:
        return _fail("Io", str(e))
    src, dst = _style(args.from_style), _style(args.to_style)
    try:
        converted = lf.convert_style(text, src, dst,
                                     span_table=_load_spans(args.spans))
    except lf.LfError as e:
        return _fail(type(e).__name__, str(e))
    if dst is lf.Style.SPAN_INDEX and args.emit_spans:
        if src is lf.Style.SPAN_INDEX:
            table = _load_spans(args.spans) or []
        else:
            standard = text if src is lf.Style.STANDARD else \
                lf.convert_style(text, src, lf.Style.STANDARD,
                                 span_table=_load_spans(args.spans))
            table = lf.span_table(standard)
        Path(args.emit_spans).write_text(
            "\n".join(table) + ("\n" if table else ""), encoding="utf-8")
    print(converted)
    return 0


# ---------------------------------------------------------------------------
# score

def cmd_score(args) -> int:
    try:
        lines = _read_text(args.pairs).splitlines()
    except OSError as e:
        return _fail("Io", str(e))
    pairs = []
    for i, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            return _fail("Format",
                         f"line {i}: expected candidate<TAB>reference")
        pairs.append((parts[0], parts[1]))
    if not pairs:
        return _fail("Format", "no pairs to score")
    for candidate, reference in pairs:
        b = metrics.bleu(candidate, reference)
        r = metrics.rouge_l(candidate, reference)
        print(f"bleu={b:.6f}\trouge_l_f1={r.f1:.6f}")
    mean = metrics.corpus_agreement(pairs)
    print(f"corpus_bleu={mean:.6f}\tpairs={len(pairs)}")
    return 0


# ---------------------------------------------------------------------------
# compile / run

def _pin_date(raw):
    if raw is None:
        return None
    try:
        return date.fromisoformat(raw)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{raw!r} is not YYYY-MM-DD")


def cmd_compile(args) -> int:
    try:
        trial = harness.load_trial_file(args.criteria)
    except OSError as e:
        return _fail("Io", str(e))
    except (harness.TrialFormatError, json.JSONDecodeError) as e:
        return _fail("TrialFormat", str(e))
    engine = Engine.default()
    request = QueryRequest(
        smm_name=args.smm,
        inclusion=trial.inclusion,
        exclusion=trial.exclusion,
        input_mode=InputMode(trial.input_mode),
        pin_date=args.pin_date if args.pin_date else trial.pin_date)
    try:
        response = engine.generate(request)
    except ValueError as e:
        return _fail(type(e).__name__, str(e))
    plan_doc = json.dumps(response.plan.to_dict(), indent=2, sort_keys=True)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "plan.json").write_text(plan_doc + "\n", encoding="utf-8")
        written = [out / "plan.json"]
        for line in response.plan.lines:
            if line.status is LineStatus.EXECUTED:
                path = out / f"line{line.line_number}.sql"
                path.write_text(line.sql + "\n", encoding="utf-8")
                written.append(path)
        if response.plan.combined_sql:
            path = out / "combined.sql"
            path.write_text(response.plan.combined_sql + "\n",
                            encoding="utf-8")
            written.append(path)
        for path in written:
            print(path)
    else:
        print(plan_doc)
    for line in response.lines:
        status = line.status.value
        note = f" ({line.skip_reason})" if line.skip_reason else ""
        print(f"line {line.line_number} [{line.polarity.value}]: "
              f"{status}{note}", file=sys.stderr)
    return 0


def _open_database(db_arg: str, plan: QueryPlan) -> sqlite3.Connection:
    path = Path(db_arg)
    if path.is_dir():
        for variant in harness.VARIANTS:
            if variant in plan.smm_name and (path / f"{variant}.sql").exists():
                path = path / f"{variant}.sql"
                break
        else:
            raise FileNotFoundError(
                f"{db_arg} has no script matching mapping {plan.smm_name!r}; "
                "pass an .sql file directly")
    conn = sqlite3.connect(":memory:")
    conn.executescript(path.read_text(encoding="utf-8"))
    return conn


def cmd_run(args) -> int:
    try:
        plan = QueryPlan.from_dict(
            json.loads(_read_text(args.plan)))
    except OSError as e:
        return _fail("Io", str(e))
    except (KeyError, TypeError, ValueError) as e:
        return _fail("PlanFormat", str(e))
    try:
        conn = _open_database(args.db, plan)
    except (OSError, sqlite3.Error) as e:
        return _fail("Database", str(e))
    try:
        execution = harness.execute_plan(conn, plan)
    except sqlite3.Error as e:
        return _fail("Execution", str(e))
    for line, cohort in zip(plan.lines, execution.cohorts):
        if cohort is None:
            print(f"line {line.line_number} [{line.polarity.value}]: "
                  f"skipped ({line.skip_reason})")
        else:
            print(f"line {line.line_number} [{line.polarity.value}]: "
                  f"{len(cohort)} matched")
    if execution.final is None:
        print("final: no executed inclusion line")
    else:
        print(f"final: {len(execution.final)} matched")
        if args.ids:
            for pid in sorted(execution.final):
                print(pid)
    if args.gold:
        try:
            gold = {int(t) for t in _read_text(args.gold).split()}
        except (OSError, ValueError) as e:
            return _fail("Gold", str(e))
        universe = {row[0] for row in
                    conn.execute(f"SELECT {args.person_column} "
                                 f"FROM {args.person_table}")}
        try:
            curve = harness.recall_curve(plan, execution, universe, gold)
        except harness.EmptyGoldError as e:
            return _fail("EmptyGold", str(e))
        if args.curve_out:
            harness.write_recall_curve(curve, args.curve_out)
            print(args.curve_out, file=sys.stderr)
        else:
            for point in curve.points:
                print(f"{point.line_number}\t{point.recall:.6f}")
    return 0


# ---------------------------------------------------------------------------
# gen-db

def cmd_gen_db(args) -> int:
    plants = []
    if args.plant:
        try:
            doc = json.loads(_read_text(args.plant))
        except OSError as e:
            return _fail("Io", str(e))
        except json.JSONDecodeError as e:
            return _fail("PlantFormat", str(e))
        if not isinstance(doc, list):
            return _fail("PlantFormat", "plant file must hold a JSON list")
        kb = fixture.load_kb()
        normalizer = fixture.load_normalizer()
        from .reason import reason
        for i, entry in enumerate(doc, start=1):
            try:
                node = reason(lf.parse(entry["criterion"]), kb, normalizer)
                ids = tuple(int(p) for p in entry["person_ids"])
            except (KeyError, TypeError, ValueError, lf.LfError) as e:
                return _fail("PlantFormat", f"entry {i}: {e}")
            plants.append(harness.Plant(node, ids))
    try:
        db = harness.generate_db(seed=args.seed, n_patients=args.patients,
                                 plants=plants, density=args.density)
    except harness.InfeasiblePlant as e:
        return _fail("InfeasiblePlant", str(e))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for path in harness.write_db_files(db, fixture.load_kb(), out):
        print(path)
    return 0


# ---------------------------------------------------------------------------
# serve

def cmd_serve(args) -> int:
    try:
        config = EngineConfig.from_file(args.config) if args.config \
            else EngineConfig()
    except (OSError, ValueError, json.JSONDecodeError) as e:
        return _fail("Config", str(e))
    if args.host:
        config = dataclasses.replace(config, host=args.host)
    if args.port:
        config = dataclasses.replace(config, port=args.port)
    if args.static:
        config = dataclasses.replace(config, static_dir=args.static)
    config = config.with_env()
    for label, value in (("kb_concepts", config.kb_concepts),
                         ("kb_triples", config.kb_triples),
                         ("lexicon", config.lexicon),
                         ("smm_dir", config.smm_dir),
                         ("database_dir", config.database_dir),
                         ("static_dir", config.static_dir)):
        if value and not Path(value).exists():
            return _fail("Config", f"{label} path does not exist: {value}")
    serve_app(config)
    return 0


# ---------------------------------------------------------------------------
# wiring

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cohortq",
        description="Eligibility criteria to cohort queries.")
    parser.add_argument("--log-level", default="WARNING",
                        choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    sub = parser.add_subparsers(dest="command", required=True)

    style_names = [s.value for s in lf.Style]

    p = sub.add_parser("parse", help="parse and validate a logical form")
    p.add_argument("file", help="logical form file, or - for stdin")
    p.add_argument("--style", default="standard", choices=style_names)
    p.add_argument("--spans", help="span table file (one text per line)")
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("convert", help="convert between surface styles")
    p.add_argument("file")
    p.add_argument("--from", dest="from_style", required=True,
                   choices=style_names)
    p.add_argument("--to", dest="to_style", required=True,
                   choices=style_names)
    p.add_argument("--spans", help="span table file for span-index input")
    p.add_argument("--emit-spans",
                   help="write the span table here for span-index output")
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("score", help="score candidate/reference pairs")
    p.add_argument("--pairs", required=True,
                   help="TSV file: candidate<TAB>reference per line")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("compile", help="compile a trial document to SQL")
    p.add_argument("--criteria", required=True, help="trial JSON file")
    p.add_argument("--smm", required=True, help="mapping name")
    p.add_argument("--pin-date", type=_pin_date, default=None)
    p.add_argument("--out", help="directory for plan.json and SQL files")
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("run", help="execute a compiled plan")
    p.add_argument("--plan", required=True, help="plan.json file")
    p.add_argument("--db", required=True,
                   help="database script file or gen-db output directory")
    p.add_argument("--gold", help="gold cohort file, one person id per line")
    p.add_argument("--curve-out", help="write the recall curve here")
    p.add_argument("--person-table", default="person")
    p.add_argument("--person-column", default="person_id")
    p.add_argument("--ids", action="store_true",
                   help="print final cohort person ids")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("gen-db", help="generate a synthetic database")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--patients", type=int, default=200)
    p.add_argument("--density", type=float, default=1.0)
    p.add_argument("--plant", help="JSON list of {criterion, person_ids}")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_gen_db)

    p = sub.add_parser("serve", help="serve the HTTP API")
    p.add_argument("--config", help="engine configuration JSON file")
    p.add_argument("--host")
    p.add_argument("--port", type=int)
    p.add_argument("--static",
                   help="directory of web client assets to serve at /")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level))
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
