"""Mapping-document loading, validation, and criterion-to-schema targeting."""

import json
from types import SimpleNamespace

import pytest

from cohortq import fixture, lforms as lf
from cohortq.kb import ConceptSet
from cohortq.reason import reason
from cohortq.smm import (
    DuplicateTableError,
    SchemaError,
    Strategy,
    check_concepts,
    load_smm,
    map_criterion,
)


@pytest.fixture(scope="module")
def kb():
    return fixture.load_kb()


@pytest.fixture(scope="module")
def normalizer():
    return fixture.load_normalizer()


@pytest.fixture(scope="module")
def tall(kb):
    return load_smm(fixture.read_bundled_smm("synthetic_tall"))


@pytest.fixture(scope="module")
def pivoted(kb):
    return load_smm(fixture.read_bundled_smm("synthetic_pivoted"))


def reasoned(text, kb, normalizer):
    return reason(lf.parse(text), kb, normalizer)


class TestLoading:
    def test_tall_labs_mapping(self, tall):
        labs = tall.table("labs")
        assert labs.strategy is Strategy.TALL
        assert labs.code_column.name == "loinc_code"
        assert labs.code_column.system == "LOINC"
        assert labs.value_column == "value_num"

    def test_pivoted_platelet_column(self, pivoted):
        cbc = pivoted.table("complete_blood_counts")
        assert cbc.strategy is Strategy.PIVOTED
        (col,) = [c for c in cbc.columns if c.name == "platelet_count"]
        assert col.concepts == ("C0362994",)
        assert col.kind == "value"

    def test_person_mapping(self, tall):
        assert tall.person.table == "person"
        assert tall.person.female_value == "F"

    def test_accepts_json_string_or_dict(self):
        doc = fixture.tall_smm_doc()
        assert load_smm(doc).name == load_smm(json.dumps(doc)).name

    def test_missing_person_id_column(self):
        doc = fixture.tall_smm_doc()
        del doc["tables"][0]["person_id_column"]
        with pytest.raises(SchemaError) as err:
            load_smm(doc)
        assert err.value.path == "/tables/0/person_id_column"

    def test_duplicate_table(self):
        doc = fixture.tall_smm_doc()
        doc["tables"].append(doc["tables"][0])
        with pytest.raises(DuplicateTableError):
            load_smm(doc)

    def test_unknown_strategy(self):
        doc = fixture.tall_smm_doc()
        doc["tables"][0]["strategy"] = "wide"
        with pytest.raises(SchemaError) as err:
            load_smm(doc)
        assert "/strategy" in err.value.path

    def test_unknown_code_system(self):
        doc = fixture.tall_smm_doc()
        doc["tables"][0]["code_column"]["system"] = "READ"
        with pytest.raises(SchemaError):
            load_smm(doc)

    def test_bad_pivot_column_kind(self):
        doc = fixture.pivoted_smm_doc()
        doc["tables"][0]["columns"][0]["kind"] = "sparse"
        with pytest.raises(SchemaError):
            load_smm(doc)

    def test_malformed_json(self):
        with pytest.raises(SchemaError):
            load_smm("{not json")

    def test_unknown_concept_tags_are_diagnostics_not_errors(self, kb):
        doc = fixture.tall_smm_doc()
        doc["tables"][0]["concepts"].append("C9999999")
        smm = load_smm(doc)
        notes = check_concepts(smm, kb)
        assert any("C9999999" in n for n in notes)


class TestMapping:
    def test_platelet_tall_single_target(self, kb, normalizer, tall):
        node = reasoned('lab("platelet count")', kb, normalizer)
        (target,) = map_criterion(node, tall, kb)
        assert target.table.table == "labs"
        assert target.codes == (("LOINC", "777-3"),)

    def test_platelet_pivoted_single_target(self, kb, normalizer, pivoted):
        node = reasoned('lab("platelet count")', kb, normalizer)
        (target,) = map_criterion(node, pivoted, kb)
        assert target.table.table == "complete_blood_counts"
        assert target.column.name == "platelet_count"
        assert target.codes == ()

    def test_condition_maps_to_both_code_tables(self, kb, normalizer, tall):
        node = reasoned('cond("diabetes")', kb, normalizer)
        targets = map_criterion(node, tall, kb)
        by_table = {t.table.table: t for t in targets}
        assert set(by_table) == {"condition_occurrence", "problem_list"}
        assert ("ICD10", "E11.9") in by_table["condition_occurrence"].codes
        assert ("SNOMED", "44054006") in by_table["problem_list"].codes
        assert all(s == "ICD10" for s, _ in by_table["condition_occurrence"].codes)

    def test_condition_pivoted_matches_subtype_columns(self, kb, normalizer, pivoted):
        node = reasoned('cond("diabetes")', kb, normalizer)
        targets = map_criterion(node, pivoted, kb)
        names = {t.column.name for t in targets}
        # only pooled subtypes have columns; the family parent has none of its own
        assert {"type_2_diabetes", "type_1_diabetes",
                "type_2_diabetes_renal"} <= names
        assert all(t.table.table == "condition_events" for t in targets)

    def test_subtype_does_not_match_sibling_columns(self, kb, normalizer, pivoted):
        node = reasoned('cond("diabetic kidney disease")', kb, normalizer)
        assert node.concepts.members == {"C2874072"}
        targets = map_criterion(node, pivoted, kb)
        assert {t.column.name for t in targets} == {"type_2_diabetes_renal"}

    def test_bmi_observation_maps_to_labs_only(self, kb, normalizer, tall):
        # BMI sits under the signs-and-symptoms root but has no ICD10 code,
        # so the condition tables contribute nothing and drop out
        node = reasoned('obs("bmi")', kb, normalizer)
        (target,) = map_criterion(node, tall, kb)
        assert target.table.table == "labs"
        assert target.codes == (("LOINC", "39156-5"),)

    def test_unmapped_members_are_reported(self, kb, tall):
        # C0032181 is a platelet concept with no codes at all
        node = SimpleNamespace(concepts=ConceptSet.direct(["C0032181", "C0362994"]))
        (target,) = map_criterion(node, tall, kb)
        assert target.codes == (("LOINC", "777-3"),)
        assert target.unmapped == ("C0032181",)

    def test_empty_concepts_yield_no_targets(self, kb, tall):
        node = SimpleNamespace(concepts=ConceptSet(frozenset()))
        assert map_criterion(node, tall, kb) == []

    def test_drug_maps_to_drug_exposure(self, kb, normalizer, tall, pivoted):
        node = reasoned('drug("metformin")', kb, normalizer)
        (t_tall,) = map_criterion(node, tall, kb)
        assert t_tall.table.table == "drug_exposure"
        assert t_tall.codes == (("RXNORM", "6809"),)
        (t_piv,) = map_criterion(node, pivoted, kb)
        assert t_piv.column.name == "metformin"

    def test_tall_and_pivoted_cover_same_pool(self, kb, tall, pivoted):
        # every pooled concept is reachable in both mappings
        pools = (fixture.CONDITION_POOL + fixture.DRUG_POOL
                 + fixture.PROCEDURE_POOL + fixture.LAB_POOL)
        for p in pools:
            node = SimpleNamespace(concepts=ConceptSet.direct([p.cui]))
            assert map_criterion(node, tall, kb), p.slug
            assert map_criterion(node, pivoted, kb), p.slug
