"""Synthetic database generation, SQL-vs-oracle agreement, plan execution,
recall curves, and trial document parsing."""

import random
import sqlite3
from datetime import date, datetime, timedelta
from decimal import Decimal

import pytest

from cohortq import fixture, harness, lforms as lf
from cohortq.harness import (
    EmptyGoldError,
    Event,
    InfeasiblePlant,
    Plant,
    SyntheticDb,
    TrialFormatError,
    build_sqlite,
    execute_plan,
    generate_db,
    load_bundled_trial,
    oracle_eval,
    oracle_plan,
    parse_trial,
    recall_curve,
    run_sql,
    to_sqlite_dialect,
    window_minutes_equivalent,
    write_db_files,
    write_recall_curve,
)
from cohortq.lforms import Polarity
from cohortq.reason import reason
from cohortq.smm import load_smm
from cohortq.sqlgen import LineStatus, compile_line, compile_trial

from helpers import random_pool_criterion

PIN = date(2020, 12, 31)


@pytest.fixture(scope="module")
def kb():
    return fixture.load_kb()


@pytest.fixture(scope="module")
def normalizer():
    return fixture.load_normalizer()


@pytest.fixture(scope="module")
def tall():
    return load_smm(fixture.read_bundled_smm("synthetic_tall"))


@pytest.fixture(scope="module")
def pivoted():
    return load_smm(fixture.read_bundled_smm("synthetic_pivoted"))


def reasoned(text, kb, normalizer):
    return reason(lf.parse(text), kb, normalizer)


# ---------------------------------------------------------------------------
# generation

class TestGeneration:
    def test_same_seed_reproduces_database(self):
        a = generate_db(5, n_patients=30)
        b = generate_db(5, n_patients=30)
        assert a.persons == b.persons
        assert a.events == b.events

    def test_different_seeds_differ(self):
        a = generate_db(5, n_patients=30)
        b = generate_db(6, n_patients=30)
        assert a.events != b.events

    def test_person_shape(self):
        db = generate_db(1, n_patients=25)
        assert [p.person_id for p in db.persons] == list(range(1, 26))
        for p in db.persons:
            assert date(1930, 1, 1) <= p.birth_date <= date(2009, 12, 31)
            assert p.gender in ("F", "M")

    def test_event_shape(self):
        db = generate_db(2, n_patients=40)
        assert db.events
        for e in db.events:
            assert e.when.second == 0
            assert datetime(2018, 1, 1) <= e.when <= datetime(2020, 12, 31)
            assert (e.value is not None) == (e.domain == "lab")
            if e.domain == "condition":
                assert e.route in ("co", "pl", "both")
            else:
                assert e.route == ""

    def test_density_zero_silences_background(self):
        db = generate_db(3, n_patients=20, density=0.0)
        assert db.events == ()

    def test_lab_values_within_plausible_range(self):
        db = generate_db(4, n_patients=50)
        by_cui = {a.cui: a for a in fixture.LAB_POOL}
        for e in db.events:
            if e.domain == "lab":
                analyte = by_cui[e.cui]
                assert analyte.low <= e.value <= analyte.high


# ---------------------------------------------------------------------------
# plants

class TestPlants:
    def test_entity_plant_lands_in_cohort(self, kb, normalizer):
        node = reasoned('cond("asthma")', kb, normalizer)
        db = generate_db(10, n_patients=30, plants=[Plant(node, (3, 7))],
                        density=0.0)
        assert oracle_eval(node, db, kb, pin_date=PIN) == {3, 7}

    def test_lab_plant_respects_filters(self, kb, normalizer):
        node = reasoned('lab("hemoglobin a1c").num_filter('
                        'eq(op(GT), val("9")), eq(op(LT), val("11")))',
                        kb, normalizer)
        db = generate_db(11, n_patients=10, plants=[Plant(node, (1,))],
                        density=0.0)
        labs = [e for e in db.events if e.domain == "lab"]
        assert len(labs) == 1
        assert 9 < labs[0].value < 11
        assert 1 in oracle_eval(node, db, kb, pin_date=PIN)

    def test_demographic_plant_sets_person_fields(self, kb, normalizer):
        node = reasoned('intersect(female(), '
                        'age().num_filter(eq(op(GTEQ), val("70"))))',
                        kb, normalizer)
        db = generate_db(12, n_patients=8, plants=[Plant(node, (2, 5))])
        for pid in (2, 5):
            person = db.person(pid)
            assert person.gender == "F"
            years = PIN.year - person.birth_date.year
            if (PIN.month, PIN.day) < (person.birth_date.month,
                                       person.birth_date.day):
                years -= 1
            assert years >= 70
        assert {2, 5} <= oracle_eval(node, db, kb, pin_date=PIN)

    def test_temporal_plant_places_anchor(self, kb, normalizer):
        node = reasoned('lab("body temperature")'
                        '.num_filter(eq(op(LT), val("34")))'
                        '.within(proc("therapeutic cooling"), val("240"), '
                        'unit("minutes"))', kb, normalizer)
        db = generate_db(13, n_patients=6, plants=[Plant(node, (4,))],
                        density=0.0)
        temp = next(e for e in db.events if e.domain == "lab")
        cooling = next(e for e in db.events if e.domain == "procedure")
        assert cooling.when <= temp.when <= cooling.when + timedelta(minutes=240)
        assert oracle_eval(node, db, kb, pin_date=PIN) == {4}

    def test_union_plant_uses_first_computable_branch(self, kb, normalizer):
        node = reasoned('union(lab("resuscitation"), cond("asthma"))',
                        kb, normalizer)
        db = generate_db(14, n_patients=5, plants=[Plant(node, (1,))],
                        density=0.0)
        assert db.events[0].cui == "C0004096"

    def test_negation_is_infeasible(self, kb, normalizer):
        node = reasoned('not(cond("asthma"))', kb, normalizer)
        with pytest.raises(InfeasiblePlant):
            generate_db(15, n_patients=5, plants=[Plant(node, (1,))])

    def test_non_computable_is_infeasible(self, kb, normalizer):
        node = reasoned('lab("resuscitation")', kb, normalizer)
        with pytest.raises(InfeasiblePlant):
            generate_db(16, n_patients=5, plants=[Plant(node, (1,))])

    def test_conflicting_gender_is_infeasible(self, kb, normalizer):
        node = reasoned('intersect(female(), male())', kb, normalizer)
        with pytest.raises(InfeasiblePlant):
            generate_db(17, n_patients=5, plants=[Plant(node, (1,))])

    def test_unknown_person_is_infeasible(self, kb, normalizer):
        node = reasoned('cond("asthma")', kb, normalizer)
        with pytest.raises(InfeasiblePlant):
            generate_db(18, n_patients=5, plants=[Plant(node, (99,))])

    def test_valueless_numeric_filter_is_infeasible(self, kb, normalizer):
        node = reasoned('cond("asthma").num_filter(eq(op(GT), val("2")))',
                        kb, normalizer)
        with pytest.raises(InfeasiblePlant):
            generate_db(19, n_patients=5, plants=[Plant(node, (1,))])

    def test_contradictory_bounds_are_infeasible(self, kb, normalizer):
        node = reasoned('lab("glucose").num_filter('
                        'eq(op(GT), val("200")), eq(op(LT), val("100")))',
                        kb, normalizer)
        with pytest.raises(InfeasiblePlant):
            generate_db(20, n_patients=5, plants=[Plant(node, (1,))])


# ---------------------------------------------------------------------------
# row derivation and emission

def _manual_db():
    persons = (harness.PersonRow(1, date(1980, 5, 4), "F"),)
    when = datetime(2019, 3, 1, 10, 30)
    events = (
        Event(1, "condition", "C0004096", when, route="co"),
        Event(1, "condition", "C0004096", when, route="pl"),
        Event(1, "condition", "C0004096", when, route="both"),
        Event(1, "lab", "C0202054", when, value=7.5),
    )
    return SyntheticDb(0, persons, events)


class TestRows:
    def test_condition_routing_splits_tall_tables(self, kb):
        rows = harness.tall_rows(_manual_db(), kb)
        assert len(rows["condition_occurrence"]) == 2  # co + both
        assert len(rows["problem_list"]) == 2  # pl + both
        assert rows["condition_occurrence"][0][1:3] == ("ICD10", "J45.909")
        assert rows["problem_list"][0][1:3] == ("SNOMED", "195967001")

    def test_pivoted_rows_one_per_event(self, kb):
        rows = harness.pivoted_rows(_manual_db(), kb)
        assert len(rows["condition_events"]) == 3
        columns = harness.pivoted_columns()["condition_events"]
        idx = columns.index("asthma")
        for row in rows["condition_events"]:
            assert row[idx] == 1
            others = [v for i, v in enumerate(row[2:], start=2)
                      if i != idx]
            assert set(others) == {None}

    def test_lab_rows_in_both_variants(self, kb):
        db = _manual_db()
        tall = harness.tall_rows(db, kb)["labs"]
        assert tall == [(1, "4548-4", 7.5, "%", "2019-03-01 10:30:00")]
        chem = harness.pivoted_rows(db, kb)["chemistry_labs"]
        columns = harness.pivoted_columns()["chemistry_labs"]
        assert len(chem) == 1
        assert chem[0][columns.index("hba1c")] == 7.5

    def test_script_replay_matches_direct_build(self, kb):
        db = generate_db(7, n_patients=20)
        for variant in harness.VARIANTS:
            script = harness.render_insert_script(db, kb, variant)
            replayed = sqlite3.connect(":memory:")
            replayed.executescript(script)
            direct = build_sqlite(db, kb, variant)
            for table in harness.variant_columns(variant):
                a = replayed.execute(f"SELECT COUNT(*) FROM {table}").fetchone()
                b = direct.execute(f"SELECT COUNT(*) FROM {table}").fetchone()
                assert a == b

    def test_write_db_files_layout(self, kb, tmp_path):
        db = generate_db(8, n_patients=5)
        written = write_db_files(db, kb, tmp_path)
        names = {p.relative_to(tmp_path).as_posix() for p in written}
        assert "tall.sql" in names
        assert "pivoted.sql" in names
        assert "tall/person.tsv" in names
        assert "pivoted/chemistry_labs.tsv" in names
        header = (tmp_path / "tall" / "labs.tsv").read_text().splitlines()[0]
        assert header.split("\t") == list(harness.tall_columns()["labs"])

    def test_emission_is_byte_deterministic(self, kb, tmp_path):
        write_db_files(generate_db(9, n_patients=12), kb, tmp_path / "a")
        write_db_files(generate_db(9, n_patients=12), kb, tmp_path / "b")
        for path in sorted((tmp_path / "a").rglob("*")):
            if path.is_file():
                twin = tmp_path / "b" / path.relative_to(tmp_path / "a")
                assert path.read_bytes() == twin.read_bytes()

    def test_tsv_renders_null_as_empty(self, kb, tmp_path):
        write_db_files(_manual_db(), kb, tmp_path)
        body = (tmp_path / "pivoted" / "condition_events.tsv").read_text()
        first_row = body.splitlines()[1].split("\t")
        assert "" in first_row


# ---------------------------------------------------------------------------
# dialect rewriting

class TestDialect:
    def test_date_literal(self):
        assert to_sqlite_dialect("x < DATE '2020-01-02'") == "x < '2020-01-02'"

    def test_timestamp_literal(self):
        sql = "t < TIMESTAMP '2021-01-01 00:00:00'"
        assert to_sqlite_dialect(sql) == "t < '2021-01-01 00:00:00'"

    def test_interval_addition(self):
        sql = "a.x <= t1.y + INTERVAL '240' MINUTE"
        assert to_sqlite_dialect(sql) == "a.x <= datetime(t1.y, '+240 minutes')"

    def test_other_text_untouched(self):
        sql = "SELECT DISTINCT person_id FROM labs WHERE loinc_code = '777-3'"
        assert to_sqlite_dialect(sql) == sql


# ---------------------------------------------------------------------------
# window conversion (independent of the compiler's)

class TestWindowConversion:
    @pytest.mark.parametrize("value,unit,minutes", [
        ("30", "minutes", 30),
        ("4", "hours", 240),
        ("3", "days", 4320),
        ("2", "weeks", 20160),
    ])
    def test_conversions(self, value, unit, minutes):
        assert window_minutes_equivalent(Decimal(value), unit) == minutes

    def test_unknown_unit_rejected(self):
        with pytest.raises(ValueError):
            window_minutes_equivalent(Decimal("1"), "months")

    def test_fractional_minutes_rejected(self):
        with pytest.raises(ValueError):
            window_minutes_equivalent(Decimal("0.5"), "min")


# ---------------------------------------------------------------------------
# SQL and oracle agree

class TestEquivalence:
    @pytest.mark.parametrize("seed", [101, 202, 303])
    def test_random_criteria_agree_on_both_schemas(self, seed, kb, normalizer,
                                                   tall, pivoted):
        rng = random.Random(seed)
        texts = [random_pool_criterion(rng) for _ in range(25)]
        nodes = [reasoned(t, kb, normalizer) for t in texts]
        plants = []
        for node in nodes:
            pids = (rng.randint(1, 150), rng.randint(1, 150))
            try:
                generate_db(0, n_patients=150, plants=[Plant(node, pids)],
                            density=0.0)
            except InfeasiblePlant:
                continue
            plants.append(Plant(node, pids))
        db = generate_db(seed, n_patients=150, plants=plants)
        conns = {"tall": build_sqlite(db, kb, "tall"),
                 "pivoted": build_sqlite(db, kb, "pivoted")}
        docs = {"tall": tall, "pivoted": pivoted}
        for text, node in zip(texts, nodes):
            want = oracle_eval(node, db, kb, pin_date=PIN)
            cohorts = {}
            for variant in harness.VARIANTS:
                sql = compile_line(node, docs[variant], kb, pin_date=PIN)
                cohorts[variant] = run_sql(conns[variant], sql)
                assert cohorts[variant] == want, (variant, text)
            assert cohorts["tall"] == cohorts["pivoted"], text

    def test_unpinned_compilation_agrees(self, kb, normalizer, tall):
        node = reasoned('cond("diabetes")', kb, normalizer)
        db = generate_db(42, n_patients=80)
        conn = build_sqlite(db, kb, "tall")
        got = run_sql(conn, compile_line(node, tall, kb))
        assert got == oracle_eval(node, db, kb)

    def test_two_table_union_equals_member_union(self, kb, normalizer, tall):
        db = generate_db(43, n_patients=120)
        conn = build_sqlite(db, kb, "tall")
        node = reasoned('cond("diabetes")', kb, normalizer)
        combined = run_sql(conn, compile_line(node, tall, kb, pin_date=PIN))

        doc = fixture.tall_smm_doc()
        only = {}
        for keep in ("condition_occurrence", "problem_list"):
            trimmed = dict(doc)
            trimmed["tables"] = [t for t in doc["tables"]
                                 if t["table"] == keep]
            only[keep] = run_sql(conn, compile_line(
                node, load_smm(trimmed), kb, pin_date=PIN))
        assert combined == only["condition_occurrence"] | only["problem_list"]

    def test_pin_date_ignores_later_records(self, kb, normalizer, tall):
        node = reasoned('cond("asthma")', kb, normalizer)
        db = generate_db(44, n_patients=60)
        later = [Event(pid, "condition", "C0004096",
                       datetime(2021, 3, 1, 9, 0), route="both")
                 for pid in range(1, 51)]
        extended = db.extended(later * 2)  # 100 post-pin records
        sql = compile_line(node, tall, kb, pin_date=PIN)
        before = run_sql(build_sqlite(db, kb, "tall"), sql)
        after = run_sql(build_sqlite(extended, kb, "tall"), sql)
        assert before == after
        assert oracle_eval(node, extended, kb, pin_date=PIN) == before
        unpinned = run_sql(build_sqlite(extended, kb, "tall"),
                           compile_line(node, tall, kb))
        assert unpinned >= before | set(range(1, 51))


# ---------------------------------------------------------------------------
# plan execution and recall

def _recall_setup(kb, normalizer, tall):
    trial = load_bundled_trial("six_line_recall")
    criteria = trial.criteria()
    nodes = [reason(c.logical_form, kb, normalizer) for c in criteria]
    gold = tuple(range(1, 11))
    plants = [Plant(n, gold) for n in nodes[:5] if n.is_computable]
    plants.append(Plant(nodes[5], gold[:5]))
    db = generate_db(21, n_patients=40, plants=plants, density=0.0)
    plan = compile_trial(criteria, nodes, tall, kb, pin_date=trial.pin_date)
    return db, plan, nodes, gold


class TestPlanExecution:
    def test_final_cohort_matches_combined_sql(self, kb, normalizer, tall):
        db, plan, _, _ = _recall_setup(kb, normalizer, tall)
        conn = build_sqlite(db, kb, "tall")
        execution = execute_plan(conn, plan)
        assert execution.final == run_sql(conn, plan.combined_sql)

    def test_skipped_lines_have_no_cohort(self, kb, normalizer, tall):
        db, plan, _, _ = _recall_setup(kb, normalizer, tall)
        execution = execute_plan(build_sqlite(db, kb, "tall"), plan)
        assert execution.cohort_for(3) is None
        assert plan.lines[2].status is LineStatus.SKIPPED

    def test_oracle_plan_matches_sql_plan(self, kb, normalizer, tall):
        db, plan, nodes, _ = _recall_setup(kb, normalizer, tall)
        execution = execute_plan(build_sqlite(db, kb, "tall"), plan)
        shadow = oracle_plan(nodes, db, kb, plan)
        assert shadow.cohorts == execution.cohorts
        assert shadow.final == execution.final


class TestRecallCurve:
    def test_constructed_curve_point_for_point(self, kb, normalizer, tall):
        db, plan, _, gold = _recall_setup(kb, normalizer, tall)
        execution = execute_plan(build_sqlite(db, kb, "tall"), plan)
        curve = recall_curve(plan, execution, db.person_ids, gold)
        assert [(p.line_number, p.status, p.cohort_size, p.recall)
                for p in curve.points] == [
            (1, LineStatus.EXECUTED, 10, 1.0),
            (2, LineStatus.EXECUTED, 10, 1.0),
            (3, LineStatus.SKIPPED, 10, 1.0),
            (4, LineStatus.EXECUTED, 10, 1.0),
            (5, LineStatus.EXECUTED, 10, 1.0),
            (6, LineStatus.EXECUTED, 5, 0.5),
        ]

    def test_skip_on_first_line_carries_universe(self, kb, normalizer, tall):
        trial = parse_trial({
            "name": "skip_first", "input_mode": "logical_form",
            "inclusion": ['lab("resuscitation")', 'cond("asthma")'],
        })
        criteria = trial.criteria()
        nodes = [reason(c.logical_form, kb, normalizer) for c in criteria]
        db = generate_db(22, n_patients=30,
                         plants=[Plant(nodes[1], (1, 2))], density=0.0)
        plan = compile_trial(criteria, nodes, tall, kb)
        execution = execute_plan(build_sqlite(db, kb, "tall"), plan)
        curve = recall_curve(plan, execution, db.person_ids, {1, 2})
        assert curve.points[0].cohort_size == 30
        assert curve.points[0].recall == 1.0
        assert curve.points[1].cohort_size == 2

    def test_empty_gold_rejected(self, kb, normalizer, tall):
        db, plan, _, _ = _recall_setup(kb, normalizer, tall)
        execution = execute_plan(build_sqlite(db, kb, "tall"), plan)
        with pytest.raises(EmptyGoldError):
            recall_curve(plan, execution, db.person_ids, set())

    def test_written_series_is_two_columns(self, kb, normalizer, tall,
                                           tmp_path):
        db, plan, _, gold = _recall_setup(kb, normalizer, tall)
        execution = execute_plan(build_sqlite(db, kb, "tall"), plan)
        curve = recall_curve(plan, execution, db.person_ids, gold)
        out = tmp_path / "curve.tsv"
        write_recall_curve(curve, out)
        lines = out.read_text().splitlines()
        assert lines[0] == "1\t1.000000"
        assert lines[5] == "6\t0.500000"
        assert all(len(line.split("\t")) == 2 for line in lines)


# ---------------------------------------------------------------------------
# trial documents

class TestTrialDocuments:
    def test_parse_and_number_criteria(self):
        trial = parse_trial({
            "name": "demo", "pin_date": "2020-06-30",
            "input_mode": "logical_form",
            "inclusion": ["female()", "male()"],
            "exclusion": ["cond(\"asthma\")"],
        })
        criteria = trial.criteria()
        assert [c.line_number for c in criteria] == [1, 2, 3]
        assert [c.polarity for c in criteria] == [
            Polarity.INCLUSION, Polarity.INCLUSION, Polarity.EXCLUSION]
        assert criteria[0].logical_form is not None
        assert trial.pin_date == date(2020, 6, 30)

    def test_raw_text_mode_defers_parsing(self):
        trial = parse_trial({"name": "raw", "input_mode": "raw_text",
                             "inclusion": ["history of asthma"]})
        assert trial.criteria()[0].logical_form is None

    @pytest.mark.parametrize("doc", [
        {"inclusion": []},
        {"name": "x", "input_mode": "chart_review"},
        {"name": "x", "pin_date": "not-a-date"},
        {"name": "x", "inclusion": "female()"},
        {"name": "x", "exclusion": [1]},
    ])
    def test_malformed_documents_rejected(self, doc):
        with pytest.raises(TrialFormatError):
            parse_trial(doc)

    def test_bundled_trials_load(self, kb, normalizer):
        names = harness.bundled_trial_names()
        assert "six_line_recall" in names
        assert "diabetes_elderly" in names
        for name in names:
            trial = load_bundled_trial(name)
            for criterion in trial.criteria():
                if trial.input_mode == "logical_form":
                    assert criterion.logical_form is not None
