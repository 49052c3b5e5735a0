"""Bundled fixture world: knowledge base, lexicon, and a synthetic schema.

The package ships a small but realistic clinical vocabulary (about 300
concepts with ICD-10 / SNOMED / LOINC / RXNORM codes, subsumption edges,
and relation triples) plus two views of the same synthetic patient
database:

* a tall schema (OMOP-like): event tables keyed by terminology code;
* a pivoted schema: event tables with one column per concept.

This module owns the definition of that world: loaders for the bundled
data files, the concept pools the database generator draws from, value
ranges for lab analytes, the DDL for both schemas, and builders for the
two semantic metadata mapping documents describing them.
"""

import functools
from dataclasses import dataclass
from importlib import resources

from .kb import KnowledgeBase
from .normalize import ConceptNormalizer, Lexicon

# ---------------------------------------------------------------------------
# bundled data files

def data_path(name: str):
    return resources.files("cohortq.data").joinpath(name)


def read_data_text(name: str) -> str:
    return data_path(name).read_text(encoding="utf-8")


@functools.cache
def load_kb() -> KnowledgeBase:
    return KnowledgeBase.from_text(read_data_text("concepts.tsv"),
                                   read_data_text("triples.tsv"))


@functools.cache
def load_lexicon() -> Lexicon:
    return Lexicon.from_text(read_data_text("lexicon.tsv"))


@functools.cache
def load_normalizer() -> ConceptNormalizer:
    return ConceptNormalizer(load_lexicon(), load_kb())


def bundled_smm_names() -> list[str]:
    out = []
    for entry in data_path("smm").iterdir():
        if entry.name.endswith(".json"):
            out.append(entry.name[:-5])
    return sorted(out)


def read_bundled_smm(name: str) -> str:
    return read_data_text(f"smm/{name}.json")


# ---------------------------------------------------------------------------
# concept pools: what the synthetic database generator can write

@dataclass(frozen=True)
class PoolConcept:
    cui: str
    slug: str  # SQL identifier used for the pivoted flag column
    phrase: str  # lexicon phrase guaranteed to normalize to this concept
    fn: str  # entity function whose semantic gate admits the concept


@dataclass(frozen=True)
class LabAnalyte:
    cui: str
    slug: str
    loinc: str
    table: str  # pivoted table holding this analyte's value column
    unit: str
    low: float
    high: float
    decimals: int
    phrase: str = ""

    @property
    def fn(self) -> str:
        return "lab"


CONDITION_POOL = (
    PoolConcept("C0011860", "type_2_diabetes", "type 2 diabetes", "cond"),
    PoolConcept("C0011854", "type_1_diabetes", "type 1 diabetes", "cond"),
    PoolConcept("C2874072", "type_2_diabetes_renal", "diabetic kidney disease",
                "cond"),
    PoolConcept("C0520679", "obstructive_sleep_apnea", "sleep apnea", "cond"),
    PoolConcept("C0013144", "drowsiness", "drowsiness", "obs"),
    PoolConcept("C0037384", "snoring", "snoring", "obs"),
    PoolConcept("C0004096", "asthma", "asthma", "cond"),
    PoolConcept("C0024117", "copd", "copd", "cond"),
    PoolConcept("C0032285", "pneumonia", "pneumonia", "cond"),
    PoolConcept("C5203670", "covid_19", "covid-19", "cond"),
    PoolConcept("C0026769", "multiple_sclerosis", "multiple sclerosis", "cond"),
    PoolConcept("C0018790", "cardiac_arrest", "cardiac arrest", "cond"),
    PoolConcept("C0018801", "heart_failure", "heart failure", "cond"),
    PoolConcept("C0027051", "myocardial_infarction", "myocardial infarction",
                "cond"),
    PoolConcept("C0004238", "atrial_fibrillation", "atrial fibrillation", "cond"),
    PoolConcept("C0020538", "hypertension", "hypertension", "cond"),
    PoolConcept("C1561643", "chronic_kidney_disease", "chronic kidney disease",
                "cond"),
    PoolConcept("C0011570", "major_depression", "major depression", "cond"),
    PoolConcept("C0003467", "anxiety_disorder", "anxiety disorder", "cond"),
    PoolConcept("C0032961", "pregnancy", "pregnancy", "cond"),
    PoolConcept("C0030920", "peptic_ulcer", "peptic ulcer", "cond"),
    PoolConcept("C0026946", "mycosis", "mycosis", "cond"),
    PoolConcept("C0040034", "thrombocytopenia", "thrombocytopenia", "cond"),
    PoolConcept("C0002871", "anemia", "anemia", "cond"),
    PoolConcept("C0020456", "hyperglycemia", "hyperglycemia", "cond"),
    PoolConcept("C0009421", "coma", "coma", "obs"),
    PoolConcept("C0021400", "influenza", "influenza", "cond"),
    PoolConcept("C0015967", "fever", "fever", "obs"),
    PoolConcept("C0010200", "cough", "cough", "obs"),
    PoolConcept("C0013404", "dyspnea", "dyspnea", "obs"),
    PoolConcept("C0037369", "smoking", "smoking", "obs"),
)

DRUG_POOL = (
    PoolConcept("C0025598", "metformin", "metformin", "drug"),
    PoolConcept("C0021641", "insulin", "insulin", "drug"),
    PoolConcept("C0004057", "aspirin", "aspirin", "drug"),
    PoolConcept("C0043031", "warfarin", "warfarin", "drug"),
    PoolConcept("C4044947", "ocrelizumab", "ocrelizumab", "drug"),
    PoolConcept("C0032952", "prednisone", "prednisone", "drug"),
    PoolConcept("C0001927", "albuterol", "albuterol", "drug"),
    PoolConcept("C0025815", "methylprednisolone", "methylprednisolone", "drug"),
    PoolConcept("C0065374", "lisinopril", "lisinopril", "drug"),
    PoolConcept("C0286651", "atorvastatin", "atorvastatin", "drug"),
    PoolConcept("C0244713", "interferon_beta_1a", "interferon beta-1a", "drug"),
    PoolConcept("C0030842", "penicillin", "penicillin", "drug"),
)

PROCEDURE_POOL = (
    PoolConcept("C0011946", "dialysis", "dialysis", "proc"),
    PoolConcept("C0009378", "colonoscopy", "colonoscopy", "proc"),
    PoolConcept("C0003611", "appendectomy", "appendectomy", "proc"),
    PoolConcept("C0010055", "coronary_artery_bypass", "coronary artery bypass",
                "proc"),
    PoolConcept("C0199470", "mechanical_ventilation", "mechanical ventilation",
                "proc"),
    PoolConcept("C0013216", "chemotherapy", "chemotherapy", "proc"),
    PoolConcept("C0040732", "organ_transplant", "organ transplant", "proc"),
    PoolConcept("C0203597", "therapeutic_cooling", "therapeutic cooling", "proc"),
)

LAB_POOL = (
    LabAnalyte("C0362994", "platelet_count", "777-3", "complete_blood_counts",
               "10*3/uL", 20, 600, 0, "platelet count"),
    LabAnalyte("C0023508", "wbc", "6690-2", "complete_blood_counts",
               "10*3/uL", 1, 20, 1, "white blood cell count"),
    LabAnalyte("C0019046", "hemoglobin", "718-7", "complete_blood_counts",
               "g/dL", 6, 19, 1, "hemoglobin"),
    LabAnalyte("C0201976", "serum_creatinine", "2160-0", "chemistry_labs",
               "mg/dL", 0.3, 4.0, 2, "serum creatinine"),
    LabAnalyte("C0337438", "glucose", "2345-7", "chemistry_labs",
               "mg/dL", 50, 300, 0, "glucose"),
    LabAnalyte("C0037473", "sodium", "2951-2", "chemistry_labs",
               "mmol/L", 120, 155, 0, "sodium"),
    LabAnalyte("C0201836", "alt", "1742-6", "chemistry_labs", "U/L", 5, 150, 0,
               "alanine aminotransferase"),
    LabAnalyte("C0201913", "bilirubin", "1975-2", "chemistry_labs",
               "mg/dL", 0.1, 4.0, 1, "total bilirubin"),
    LabAnalyte("C0202054", "hba1c", "4548-4", "chemistry_labs", "%", 4.0, 13.0, 1,
               "hemoglobin a1c"),
    LabAnalyte("C1278039", "egfr", "33914-3", "chemistry_labs",
               "mL/min", 10, 120, 0, "estimated glomerular filtration rate"),
    LabAnalyte("C0005903", "body_temperature", "8310-5", "vitals",
               "Cel", 30.0, 41.0, 1, "body temperature"),
    LabAnalyte("C1305855", "bmi", "39156-5", "vitals", "kg/m2", 15.0, 50.0, 1,
               "bmi"),
)

PIVOTED_LAB_TABLES = ("complete_blood_counts", "chemistry_labs", "vitals")

# concept tags for the tall tables: a criterion maps to the table when its
# concepts fall under one of these roots
CONDITION_ROOTS = ("C0012634", "C0037088")  # disease; signs and symptoms
PROCEDURE_ROOTS = ("C0087111",)
DRUG_ROOTS = ("C0013227",)
LAB_ROOTS = ("C0022885", "C1305855")  # laboratory procedure; body mass index


def condition_slugs() -> dict[str, str]:
    return {p.cui: p.slug for p in CONDITION_POOL}


def analytes_by_table(table: str) -> list[LabAnalyte]:
    return [a for a in LAB_POOL if a.table == table]


def analyte_for_loinc(loinc: str):
    for a in LAB_POOL:
        if a.loinc == loinc:
            return a
    return None


# ---------------------------------------------------------------------------
# schema DDL

def tall_ddl() -> list[str]:
    """CREATE TABLE statements for the tall (code-keyed) schema."""
    return [
        ("CREATE TABLE person (\n"
         "    person_id INTEGER PRIMARY KEY,\n"
         "    birth_date TEXT NOT NULL,\n"
         "    gender TEXT NOT NULL\n"
         ")"),
        ("CREATE TABLE condition_occurrence (\n"
         "    person_id INTEGER NOT NULL,\n"
         "    code_system TEXT NOT NULL,\n"
         "    code TEXT NOT NULL,\n"
         "    start_datetime TEXT NOT NULL\n"
         ")"),
        ("CREATE TABLE problem_list (\n"
         "    person_id INTEGER NOT NULL,\n"
         "    code_system TEXT NOT NULL,\n"
         "    code TEXT NOT NULL,\n"
         "    recorded_datetime TEXT NOT NULL\n"
         ")"),
        ("CREATE TABLE procedure_occurrence (\n"
         "    person_id INTEGER NOT NULL,\n"
         "    code_system TEXT NOT NULL,\n"
         "    code TEXT NOT NULL,\n"
         "    proc_datetime TEXT NOT NULL\n"
         ")"),
        ("CREATE TABLE drug_exposure (\n"
         "    person_id INTEGER NOT NULL,\n"
         "    code_system TEXT NOT NULL,\n"
         "    code TEXT NOT NULL,\n"
         "    exposure_datetime TEXT NOT NULL\n"
         ")"),
        ("CREATE TABLE labs (\n"
         "    person_id INTEGER NOT NULL,\n"
         "    loinc_code TEXT NOT NULL,\n"
         "    value_num REAL NOT NULL,\n"
         "    unit TEXT NOT NULL,\n"
         "    lab_datetime TEXT NOT NULL\n"
         ")"),
    ]


def _event_flag_table(name: str, pool) -> str:
    cols = [f"    {p.slug} INTEGER" for p in pool]
    return (f"CREATE TABLE {name} (\n"
            "    person_id INTEGER NOT NULL,\n"
            "    event_datetime TEXT NOT NULL,\n"
            + ",\n".join(cols) + "\n)")


def _analyte_value_table(name: str) -> str:
    cols = [f"    {a.slug} REAL" for a in analytes_by_table(name)]
    return (f"CREATE TABLE {name} (\n"
            "    person_id INTEGER NOT NULL,\n"
            "    obs_datetime TEXT NOT NULL,\n"
            + ",\n".join(cols) + "\n)")


def pivoted_ddl() -> list[str]:
    """CREATE TABLE statements for the pivoted (column-per-concept) schema."""
    out = [tall_ddl()[0]]  # person is shared
    out.append(_event_flag_table("condition_events", CONDITION_POOL))
    out.append(_event_flag_table("procedure_events", PROCEDURE_POOL))
    out.append(_event_flag_table("drug_events", DRUG_POOL))
    for table in PIVOTED_LAB_TABLES:
        out.append(_analyte_value_table(table))
    return out


# ---------------------------------------------------------------------------
# semantic metadata mapping documents

def _person_block() -> dict:
    return {"table": "person", "person_id_column": "person_id",
            "birth_date_column": "birth_date", "gender_column": "gender",
            "female_value": "F", "male_value": "M"}


def tall_smm_doc() -> dict:
    return {
        "name": "synthetic_tall",
        "person": _person_block(),
        "tables": [
            {"table": "condition_occurrence", "strategy": "tall",
             "person_id_column": "person_id", "date_column": "start_datetime",
             "concepts": list(CONDITION_ROOTS),
             "code_column": {"name": "code", "system": "ICD10"}},
            {"table": "problem_list", "strategy": "tall",
             "person_id_column": "person_id", "date_column": "recorded_datetime",
             "concepts": list(CONDITION_ROOTS),
             "code_column": {"name": "code", "system": "SNOMED"}},
            {"table": "procedure_occurrence", "strategy": "tall",
             "person_id_column": "person_id", "date_column": "proc_datetime",
             "concepts": list(PROCEDURE_ROOTS),
             "code_column": {"name": "code", "system": "SNOMED"}},
            {"table": "drug_exposure", "strategy": "tall",
             "person_id_column": "person_id", "date_column": "exposure_datetime",
             "concepts": list(DRUG_ROOTS),
             "code_column": {"name": "code", "system": "RXNORM"}},
            {"table": "labs", "strategy": "tall",
             "person_id_column": "person_id", "date_column": "lab_datetime",
             "concepts": list(LAB_ROOTS),
             "code_column": {"name": "loinc_code", "system": "LOINC"},
             "value_column": "value_num"},
        ],
    }


def pivoted_smm_doc() -> dict:
    def flag_columns(pool):
        return [{"name": p.slug, "concepts": [p.cui], "kind": "flag"}
                for p in pool]

    tables = [
        {"table": "condition_events", "strategy": "pivoted",
         "person_id_column": "person_id", "date_column": "event_datetime",
         "columns": flag_columns(CONDITION_POOL)},
        {"table": "procedure_events", "strategy": "pivoted",
         "person_id_column": "person_id", "date_column": "event_datetime",
         "columns": flag_columns(PROCEDURE_POOL)},
        {"table": "drug_events", "strategy": "pivoted",
         "person_id_column": "person_id", "date_column": "event_datetime",
         "columns": flag_columns(DRUG_POOL)},
    ]
    for table in PIVOTED_LAB_TABLES:
        tables.append({
            "table": table, "strategy": "pivoted",
            "person_id_column": "person_id", "date_column": "obs_datetime",
            "columns": [{"name": a.slug, "concepts": [a.cui], "kind": "value",
                         "unit": a.unit} for a in analytes_by_table(table)]})
    return {"name": "synthetic_pivoted", "person": _person_block(),
            "tables": tables}
