"""Narrowing a criterion's concept set with an override.

"diabetes" grounds to the whole diabetes subtree, which is usually what
a trial wants, but sometimes the protocol really does mean one specific
diagnosis. Rather than rewording the criterion until the normalizer
cooperates, callers pin the concept set directly: an override names a
line, a path inside its tree, and the exact CUIs to use (no subtree
expansion is re-applied; what you pin is what compiles). The engine
re-reasons and re-compiles, so the narrowed SQL is a first-class plan,
not a patched string.

This is the mechanism behind chip editing in the web client.

Run with: python3 demos/override_narrowing.py
"""

from cohortq import harness
from cohortq.service import Engine, InputMode, Override, QueryRequest


def show(title, response) -> None:
    line = response.lines[0]
    concepts = response.plan.lines[0].concepts_used
    print(f"-- {title}")
    print(f"   concepts: {', '.join(concepts)}")
    print("   " + line.sql.replace("\n", "\n   "))
    print()


def main() -> None:
    engine = Engine.default()

    base = QueryRequest(smm_name="synthetic_tall",
                        inclusion=('cond("diabetes")',),
                        input_mode=InputMode.LOGICAL_FORM)
    broad = engine.generate(base)
    show("as written: the whole diabetes subtree", broad)

    narrowed = engine.generate(QueryRequest(
        smm_name="synthetic_tall",
        inclusion=('cond("diabetes")',),
        input_mode=InputMode.LOGICAL_FORM,
        overrides=(Override(line=1, path=(), cuis=("C0011860",)),)))
    show("override to C0011860: exactly that concept, nothing else", narrowed)

    # run both plans against the same synthetic population
    db = harness.generate_db(seed=23, n_patients=400, density=0.9)
    conn = harness.build_sqlite(db, engine.kb, "tall")
    engine.add_database("demo", conn)
    broad_run = engine.execute(broad.plan, "demo")
    narrow_run = engine.execute(narrowed.plan, "demo")

    broad_cohort = set(broad_run.final_persons)
    narrow_cohort = set(narrow_run.final_persons)
    print(f"broad cohort:    {len(broad_cohort)} patients")
    print(f"narrowed cohort: {len(narrow_cohort)} patients")
    assert narrow_cohort <= broad_cohort
    print("narrowed cohort is a subset of the broad one, as it must be")


if __name__ == "__main__":
    main()
