"""One criterion, end to end: raw text to a verified patient cohort.

Walks a single eligibility line through every stage the engine runs,
printing the intermediate artifact each time:

  tag entities -> translate to a logical form -> ground concepts in the
  knowledge base -> compile SQL for two different schemas -> execute on
  a synthetic database -> cross-check against the row-level oracle.

Run with: python3 demos/walkthrough.py
"""

from cohortq import fixture, harness, lforms, sqlgen
from cohortq.frontend import augment, translate
from cohortq.reason import explain, reason
from cohortq.smm import load_smm


def banner(title: str) -> None:
    print()
    print(f"== {title} " + "=" * max(0, 60 - len(title)))


def main() -> None:
    kb = fixture.load_kb()
    lexicon = fixture.load_lexicon()
    normalizer = fixture.load_normalizer()

    text = "Patients with type 2 diabetes and no history of chronic kidney disease"
    banner("raw criterion")
    print(text)

    banner("entity tagging")
    aug = augment(text, lexicon)
    print(aug.augmented)

    banner("logical form")
    node = translate(aug)
    print(lforms.serialize(node, pretty=True))

    banner("concept grounding")
    reasoned = reason(node, kb, normalizer)
    print(explain(reasoned, kb).to_text())

    banner("compiled SQL, tall schema")
    tall = load_smm(fixture.read_bundled_smm("synthetic_tall"))
    sql_tall = sqlgen.compile_line(reasoned, tall, kb)
    print(sql_tall)

    banner("compiled SQL, pivoted schema")
    pivoted = load_smm(fixture.read_bundled_smm("synthetic_pivoted"))
    sql_pivoted = sqlgen.compile_line(reasoned, pivoted, kb)
    print(sql_pivoted)

    banner("execution on a synthetic database")
    db = harness.generate_db(seed=11, n_patients=300, density=0.8)
    cohorts = {}
    for name, sql in (("tall", sql_tall), ("pivoted", sql_pivoted)):
        conn = harness.build_sqlite(db, kb, name)
        cohorts[name] = harness.run_sql(conn, sql)
        print(f"{name:>8}: {len(cohorts[name])} of {len(db.person_ids)} "
              "patients match")
        conn.close()

    banner("oracle cross-check")
    oracle = harness.oracle_eval(reasoned, db, kb)
    assert cohorts["tall"] == cohorts["pivoted"] == oracle
    print("SQL cohorts agree with each other and with the row-level "
          f"oracle ({len(oracle)} patients).")


if __name__ == "__main__":
    main()
