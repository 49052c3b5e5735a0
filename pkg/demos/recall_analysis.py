"""Per-line recall against a gold cohort, skipped lines included.

Given a trial and a set of patients known to be eligible, the question
for each criterion line is: after applying the plan up to and including
this line, how much of the gold cohort is still in? A line that filters
out gold patients shows up as a recall drop at its position. Skipped
lines (here, a lab with no mapping) keep the previous value, so the
curve always has one point per line and drops are attributable.

The demo plants ten eligible patients, makes five of them also carry
the exclusion condition, and reads the damage off the curve.

Run with: python3 demos/recall_analysis.py
"""

from cohortq import fixture, harness, lforms
from cohortq.reason import reason
from cohortq.service import Engine, InputMode, QueryRequest

GOLD = tuple(range(1, 11))           # patients we consider truly eligible
CKD_CARRIERS = tuple(range(1, 6))    # half of them also have the exclusion


def planted_database(kb, normalizer):
    trial = harness.load_bundled_trial("six_line_recall")
    plants = []
    for criterion in trial.criteria():
        node = reason(lforms.parse(criterion.raw_text), kb, normalizer)
        if not node.is_computable:
            continue  # the resuscitation line cannot be planted or queried
        who = CKD_CARRIERS if criterion.polarity is lforms.Polarity.EXCLUSION \
            else GOLD
        plants.append(harness.Plant(node, who))
    return trial, harness.generate_db(seed=57, n_patients=40, plants=plants,
                                      density=0.0)


def main() -> None:
    engine = Engine.default()
    trial, db = planted_database(engine.kb, engine.normalizer)
    conn = harness.build_sqlite(db, engine.kb, "tall")
    engine.add_database("planted", conn)

    response = engine.generate(QueryRequest(
        smm_name="synthetic_tall",
        inclusion=trial.inclusion,
        exclusion=trial.exclusion,
        input_mode=InputMode(trial.input_mode),
        pin_date=trial.pin_date))
    execution = engine.execute(response.plan, "planted")

    plan_execution = harness.execute_plan(conn, response.plan)
    curve = harness.recall_curve(response.plan, plan_execution,
                                 universe=frozenset(db.person_ids),
                                 gold=frozenset(GOLD))

    print(f"gold cohort: {len(GOLD)} patients; "
          f"{len(CKD_CARRIERS)} of them carry the exclusion condition")
    print()
    print("line  pol  status    cohort  recall")
    for point, line in zip(curve.points, response.lines):
        recall = f"{point.recall:.3f}"
        size = "-" if point.cohort_size is None else str(point.cohort_size)
        note = f"  ({line.skip_reason})" if line.skip_reason else ""
        print(f"{point.line_number:>4}  {point.polarity.value}  "
              f"{point.status.value:<8}  {size:>6}  {recall:>6}{note}")
    print()
    final = execution.final_persons
    print(f"final cohort: {len(final)} patients -> {sorted(final)}")
    print("the drop at the exclusion line is exactly the five gold "
          "patients who carry chronic kidney disease")


if __name__ == "__main__":
    main()
