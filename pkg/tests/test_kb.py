"""Knowledge base tests.

Descendant closure is checked against an independent breadth-first
closure written directly over the edge list, on randomly generated DAGs.
Template queries are checked on a small hand-built graph where every
expected answer is read off the triples by eye.
"""

import random
from collections import defaultdict, deque

import pytest

from cohortq import kb as kbmod

MINI_CONCEPTS = """\
# cui\tname\tsemtypes\tcodes
C0004096\tasthma\tdsyn\tICD10:J45.909;SNOMED:195967001
C0025815\tmethylprednisolone\tphsu\tRXNORM:6902
C0026946\tmycosis\tdsyn\tICD10:B49
C0035203\trespiratory function\tphsf\t
C0010200\tcough\tsosy\tICD10:R05
C0001927\talbuterol\tphsu\tRXNORM:435
C0024117\tcopd\tdsyn\tICD10:J44.9
C0362994\tplatelet count auto\tlbtr\tLOINC:777-3
C0040034\tthrombocytopenia\tdsyn\tICD10:D69.6
C0011849\tdiabetes mellitus\tdsyn\tSNOMED:73211009
C0011860\ttype 2 diabetes\tdsyn\tICD10:E11.9
C2874072\tt2dm with kidney complications\tdsyn\tICD10:E11.2
"""

MINI_TRIPLES = """\
C0004096\taffects\tC0035203
C0024117\taffects\tC0035203
C0025815\ttreats\tC0004096
C0001927\ttreats\tC0004096
C0026946\tcontraindicated_with\tC0025815
C0004096\thas_symptom\tC0010200
C0362994\tlab_maps_to_phenotype\tC0040034\tlow
C0011860\tisa\tC0011849
C2874072\tisa\tC0011860
"""


@pytest.fixture()
def mini_kb():
    return kbmod.KnowledgeBase.from_text(MINI_CONCEPTS, MINI_TRIPLES)


# -- loading and validation -------------------------------------------------

def test_load_from_files(tmp_path, mini_kb):
    cpath = tmp_path / "concepts.tsv"
    tpath = tmp_path / "triples.tsv"
    cpath.write_text(MINI_CONCEPTS)
    tpath.write_text(MINI_TRIPLES)
    loaded = kbmod.KnowledgeBase.load(cpath, tpath)
    assert set(loaded.concepts) == set(mini_kb.concepts)
    assert loaded.concept("C0004096").codes == frozenset(
        {("ICD10", "J45.909"), ("SNOMED", "195967001")})


def test_unknown_predicate_reports_line():
    with pytest.raises(kbmod.UnknownPredicateError) as err:
        kbmod.KnowledgeBase.from_text(MINI_CONCEPTS, "C0004096\tcures\tC0010200\n")
    assert err.value.line == 1


def test_triple_with_undeclared_concept_rejected():
    with pytest.raises(kbmod.KbParseError):
        kbmod.KnowledgeBase.from_text(MINI_CONCEPTS, "C9999999\tisa\tC0004096\n")


def test_lab_qualifier_vocabulary_enforced():
    bad = "C0362994\tlab_maps_to_phenotype\tC0040034\tsideways\n"
    with pytest.raises(kbmod.KbParseError):
        kbmod.KnowledgeBase.from_text(MINI_CONCEPTS, bad)


def test_qualifier_on_plain_predicate_rejected():
    bad = "C0011860\tisa\tC0011849\thigh\n"
    with pytest.raises(kbmod.KbParseError):
        kbmod.KnowledgeBase.from_text(MINI_CONCEPTS, bad)


def test_duplicate_concept_rejected():
    dup = MINI_CONCEPTS + "C0004096\tasthma again\tdsyn\t\n"
    with pytest.raises(kbmod.KbParseError):
        kbmod.KnowledgeBase.from_text(dup, MINI_TRIPLES)


def test_isa_cycle_detected():
    cyclic = MINI_TRIPLES + "C0011849\tisa\tC2874072\n"
    with pytest.raises(kbmod.CycleDetectedError):
        kbmod.KnowledgeBase.from_text(MINI_CONCEPTS, cyclic)


def test_bad_code_system_rejected():
    with pytest.raises(kbmod.KbParseError):
        kbmod.KnowledgeBase.from_text("C1\tx\tdsyn\tMESH:D001\n", "")


# -- descendant closure -----------------------------------------------------

def test_descendants_reflexive_and_transitive(mini_kb):
    closure = mini_kb.descendants("C0011849")
    assert closure.members == {"C0011849", "C0011860", "C2874072"}
    assert "C0011849" in closure  # reflexive
    grandchild = closure.paths_for("C2874072")
    assert len(grandchild) == 1
    path = grandchild[0].path
    assert [t.subject for t in path] == ["C2874072", "C0011860"]
    assert [t.object for t in path] == ["C0011860", "C0011849"]


def test_descendants_of_leaf_is_self(mini_kb):
    closure = mini_kb.descendants("C2874072")
    assert closure.members == {"C2874072"}
    assert closure.provenance[0].rule == "self"


def test_descendants_unknown_concept(mini_kb):
    with pytest.raises(kbmod.UnknownConceptError):
        mini_kb.descendants("C0000000")


def _bfs_closure(edges: list[tuple[str, str]], root: str) -> set[str]:
    """Independent oracle: child sets by plain BFS over (child, parent) pairs."""
    children = defaultdict(set)
    for child, parent in edges:
        children[parent].add(child)
    seen = {root}
    queue = deque([root])
    while queue:
        current = queue.popleft()
        for child in children[current]:
            if child not in seen:
                seen.add(child)
                queue.append(child)
    return seen


def _random_dag(rng: random.Random, max_nodes: int = 200):
    n = rng.randint(2, max_nodes)
    names = [f"N{i:03d}" for i in range(n)]
    edges = []
    for i in range(1, n):
        for parent in rng.sample(range(i), k=rng.randint(0, min(i, 3))):
            edges.append((names[i], names[parent]))
    return names, edges


@pytest.mark.parametrize("seed", range(10))
def test_descendants_match_bfs_closure_on_random_dags(seed):
    rng = random.Random(seed)
    names, edges = _random_dag(rng)
    concepts = [kbmod.Concept(n, n.lower()) for n in names]
    triples = [kbmod.Triple(child, "isa", parent) for child, parent in edges]
    kb = kbmod.KnowledgeBase(concepts, triples)
    for root in rng.sample(names, k=min(8, len(names))):
        got = kb.descendants(root)
        assert got.members == _bfs_closure(edges, root)
        assert len(got.provenance) >= len(got.members)


# -- query templates --------------------------------------------------------

def test_drugs_treating(mini_kb):
    out = mini_kb.query("drugs_treating", {"conditions": {"C0004096"}})
    assert out.members == {"C0025815", "C0001927"}


def test_conditions_affecting(mini_kb):
    out = mini_kb.query("conditions_affecting",
                        {"function": kbmod.ConceptSet.direct(["C0035203"])})
    assert out.members == {"C0004096", "C0024117"}


def test_symptoms_of(mini_kb):
    out = mini_kb.query("symptoms_of", {"conditions": {"C0004096"}})
    assert out.members == {"C0010200"}


def test_contraindications_for_drugs(mini_kb):
    out = mini_kb.query("contraindications_for_drugs", {"drugs": {"C0025815"}})
    assert out.members == {"C0026946"}


def test_phenotypes_for_lab(mini_kb):
    out = mini_kb.query("phenotypes_for_lab", {"loinc_code": "777-3", "flag": "low"})
    assert out.members == {"C0040034"}
    assert mini_kb.query("phenotypes_for_lab",
                         {"loinc_code": "0000-0", "flag": "low"}).members == frozenset()
    assert mini_kb.query("phenotypes_for_lab",
                         {"loinc_code": "777-3", "flag": "high"}).members == frozenset()


def test_unknown_template(mini_kb):
    with pytest.raises(kbmod.UnknownTemplateError):
        mini_kb.query("drugs_curing", {"conditions": set()})


def test_template_with_unknown_concept(mini_kb):
    with pytest.raises(kbmod.UnknownConceptError):
        mini_kb.query("drugs_treating", {"conditions": {"C7777777"}})


def test_three_hop_contraindication_chain(mini_kb):
    out = mini_kb.contraindications_to_drugs_for_conditions_affecting("C0035203")
    assert out.members == {"C0026946"}
    paths = out.paths_for("C0026946")
    expected = (
        kbmod.Triple("C0004096", "affects", "C0035203"),
        kbmod.Triple("C0025815", "treats", "C0004096"),
        kbmod.Triple("C0026946", "contraindicated_with", "C0025815"),
    )
    assert any(p.path == expected for p in paths)
    # every provenance path is a well-formed 3-hop chain
    for p in paths:
        assert len(p.path) == 3
        assert [t.predicate for t in p.path] == ["affects", "treats", "contraindicated_with"]


# -- lookups ----------------------------------------------------------------

def test_codes_for_collects_sorted_unique(mini_kb):
    codes = mini_kb.codes_for(["C0011860", "C2874072", "C0035203"], "ICD10")
    assert codes == ["E11.2", "E11.9"]


def test_loinc_codes(mini_kb):
    assert mini_kb.loinc_codes_for(["C0362994", "C0004096"]) == ["777-3"]


def test_search_matches_name_substring(mini_kb):
    hits = mini_kb.search("diabetes")
    assert [c.cui for c in hits][:1] == ["C0011860"] or "C0011849" in [c.cui for c in hits]
    assert all("diabetes" in c.preferred_name or "diabetes" in c.cui.lower()
               for c in hits)


def test_search_empty_query(mini_kb):
    assert mini_kb.search("   ") == []
