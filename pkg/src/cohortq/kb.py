"""In-memory biomedical knowledge base: concepts, triples, graph queries.

Two delimited files back the store. The concept file declares one concept
per line::

    cui <TAB> preferred name <TAB> semtype,semtype <TAB> SYSTEM:code;SYSTEM:code

and the triple file one edge per line::

    subject_cui <TAB> predicate <TAB> object_cui [<TAB> qualifier]

Predicates are fixed: isa, treats, contraindicated_with, affects,
has_symptom, lab_maps_to_phenotype (the last carries a qualifier from
{high, low, abnormal, normal}). The isa edges must form a DAG; descendant
closure is reflexive and transitive. Query templates are parameterized
set-to-set lookups over single predicates, and one composed template walks
the three-hop chain condition→drug→contraindication.
"""

from dataclasses import dataclass, field
from typing import Iterable, Optional

PREDICATES = ("isa", "treats", "contraindicated_with", "affects",
              "has_symptom", "lab_maps_to_phenotype")
CODE_SYSTEMS = ("ICD10", "SNOMED", "LOINC", "RXNORM")
LAB_QUALIFIERS = ("high", "low", "abnormal", "normal")


class KbParseError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None):
        super().__init__(f"line {line}: {message}" if line else message)
        self.line = line


class UnknownPredicateError(KbParseError):
    pass


class CycleDetectedError(ValueError):
    def __init__(self, cycle: list[str]):
        super().__init__("isa cycle: " + " -> ".join(cycle))
        self.cycle = cycle


class UnknownConceptError(KeyError):
    def __init__(self, cui: str):
        super().__init__(cui)
        self.cui = cui


class UnknownTemplateError(KeyError):
    pass


@dataclass(frozen=True)
class Concept:
    cui: str
    preferred_name: str
    semantic_types: frozenset = frozenset()
    codes: frozenset = frozenset()  # of (system, code) pairs

    def codes_in(self, system: str) -> list[str]:
        return sorted(code for sys_, code in self.codes if sys_ == system)


@dataclass(frozen=True)
class Triple:
    subject: str
    predicate: str
    object: str
    qualifier: Optional[str] = None


@dataclass(frozen=True)
class ProvenanceEntry:
    """Why a cui is in a ConceptSet: the rule that admitted it and the
    triple path that the rule walked (empty for direct membership)."""

    cui: str
    rule: str
    path: tuple = ()


@dataclass(frozen=True)
class ConceptSet:
    """A set of cuis with per-member provenance."""

    members: frozenset
    provenance: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "members", frozenset(self.members))
        object.__setattr__(self, "provenance", tuple(self.provenance))

    def __contains__(self, cui: str) -> bool:
        return cui in self.members

    def __len__(self) -> int:
        return len(self.members)

    def __bool__(self) -> bool:
        return bool(self.members)

    def paths_for(self, cui: str) -> list[ProvenanceEntry]:
        return [p for p in self.provenance if p.cui == cui]

    @classmethod
    def direct(cls, cuis: Iterable[str], rule: str = "direct") -> "ConceptSet":
        cuis = frozenset(cuis)
        return cls(cuis, tuple(ProvenanceEntry(c, rule) for c in sorted(cuis)))


def _parse_codes(text: str, line: int) -> frozenset:
    codes = set()
    for chunk in filter(None, (c.strip() for c in text.split(";"))):
        system, sep, code = chunk.partition(":")
        if not sep or not code:
            raise KbParseError(f"bad code entry {chunk!r}", line)
        if system not in CODE_SYSTEMS:
            raise KbParseError(f"unknown code system {system!r}", line)
        codes.add((system, code))
    return frozenset(codes)


def _data_lines(text: str):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line and not line.startswith("#"):
            yield lineno, line


class KnowledgeBase:
    def __init__(self, concepts: Iterable[Concept], triples: Iterable[Triple]):
        self.concepts: dict[str, Concept] = {}
        for c in concepts:
            if c.cui in self.concepts:
                raise KbParseError(f"duplicate concept {c.cui}")
            self.concepts[c.cui] = c
        self.triples: list[Triple] = list(triples)
        self._by_subject: dict[tuple, list[Triple]] = {}
        self._by_object: dict[tuple, list[Triple]] = {}
        for t in self.triples:
            if t.predicate not in PREDICATES:
                raise UnknownPredicateError(f"unknown predicate {t.predicate!r}")
            for endpoint in (t.subject, t.object):
                if endpoint not in self.concepts:
                    raise KbParseError(f"triple references undeclared concept {endpoint}")
            if t.predicate == "lab_maps_to_phenotype":
                if t.qualifier not in LAB_QUALIFIERS:
                    raise KbParseError(
                        f"lab_maps_to_phenotype qualifier must be one of {LAB_QUALIFIERS}, "
                        f"got {t.qualifier!r}")
            elif t.qualifier is not None:
                raise KbParseError(f"{t.predicate} does not take a qualifier")
            self._by_subject.setdefault((t.predicate, t.subject), []).append(t)
            self._by_object.setdefault((t.predicate, t.object), []).append(t)
        self._check_isa_acyclic()
        self._descendant_cache: dict[str, ConceptSet] = {}

    # -- loading ------------------------------------------------------------

    @classmethod
    def load(cls, concepts_path, triples_path) -> "KnowledgeBase":
        with open(concepts_path, encoding="utf-8") as fh:
            concepts = list(cls._parse_concepts(fh.read()))
        with open(triples_path, encoding="utf-8") as fh:
            triples = list(cls._parse_triples(fh.read()))
        return cls(concepts, triples)

    @classmethod
    def from_text(cls, concepts_text: str, triples_text: str) -> "KnowledgeBase":
        return cls(cls._parse_concepts(concepts_text), cls._parse_triples(triples_text))

    @staticmethod
    def _parse_concepts(text: str):
        for lineno, line in _data_lines(text):
            parts = line.split("\t")
            if len(parts) < 2:
                raise KbParseError("concept line needs cui and name", lineno)
            cui, name = parts[0].strip(), parts[1].strip()
            semtypes = frozenset(filter(None, (s.strip() for s in parts[2].split(",")))) \
                if len(parts) > 2 else frozenset()
            codes = _parse_codes(parts[3], lineno) if len(parts) > 3 else frozenset()
            yield Concept(cui, name, semtypes, codes)

    @staticmethod
    def _parse_triples(text: str):
        for lineno, line in _data_lines(text):
            parts = [p.strip() for p in line.split("\t")]
            if len(parts) not in (3, 4):
                raise KbParseError("triple line needs 3 or 4 fields", lineno)
            if parts[1] not in PREDICATES:
                raise UnknownPredicateError(f"unknown predicate {parts[1]!r}", lineno)
            yield Triple(parts[0], parts[1], parts[2],
                         parts[3] if len(parts) == 4 else None)

    # -- structure ----------------------------------------------------------

    def _check_isa_acyclic(self):
        state: dict[str, int] = {}  # 1 = in progress, 2 = done
        stack_path: list[str] = []

        def visit(cui: str):
            state[cui] = 1
            stack_path.append(cui)
            for t in self._by_subject.get(("isa", cui), ()):
                nxt = t.object
                mark = state.get(nxt)
                if mark == 1:
                    cycle = stack_path[stack_path.index(nxt):] + [nxt]
                    raise CycleDetectedError(cycle)
                if mark is None:
                    visit(nxt)
            stack_path.pop()
            state[cui] = 2

        for cui in self.concepts:
            if cui not in state:
                visit(cui)

    def concept(self, cui: str) -> Concept:
        try:
            return self.concepts[cui]
        except KeyError:
            raise UnknownConceptError(cui) from None

    def name_of(self, cui: str) -> str:
        c = self.concepts.get(cui)
        return c.preferred_name if c else cui

    def descendants(self, cui: str) -> ConceptSet:
        """Reflexive-transitive closure of inverse isa, with edge paths.

        The path stored for each member is the triple chain from that
        member up to the queried root (member-first order).
        """
        if cui not in self.concepts:
            raise UnknownConceptError(cui)
        cached = self._descendant_cache.get(cui)
        if cached is not None:
            return cached
        provenance = [ProvenanceEntry(cui, "self")]
        paths: dict[str, tuple] = {cui: ()}
        frontier = [cui]
        while frontier:
            nxt: list[str] = []
            for parent in frontier:
                for t in self._by_object.get(("isa", parent), ()):
                    child = t.subject
                    if child in paths:
                        continue
                    paths[child] = (t,) + paths[parent]
                    provenance.append(ProvenanceEntry(child, "isa_descendant", paths[child]))
                    nxt.append(child)
            frontier = nxt
        result = ConceptSet(frozenset(paths), tuple(provenance))
        self._descendant_cache[cui] = result
        return result

    def expand(self, cuis: Iterable[str]) -> ConceptSet:
        """Union of descendant closures over several roots."""
        members: set[str] = set()
        provenance: list[ProvenanceEntry] = []
        for cui in cuis:
            closure = self.descendants(cui)
            for entry in closure.provenance:
                if entry.cui not in members or entry.cui == cui:
                    provenance.append(entry)
            members |= closure.members
        return ConceptSet(frozenset(members), tuple(provenance))

    # -- query templates ----------------------------------------------------

    def _edge_lookup(self, predicate: str, keys: Iterable[str], by_object: bool,
                     rule: str, extend: Optional[ConceptSet] = None) -> ConceptSet:
        """Collect the far endpoints of `predicate` edges touching `keys`.

        When `extend` is given, each key's existing provenance paths are
        prefixed onto the new edge, composing multi-hop paths.
        """
        index = self._by_object if by_object else self._by_subject
        members: set[str] = set()
        provenance: list[ProvenanceEntry] = []
        for key in keys:
            if key not in self.concepts:
                raise UnknownConceptError(key)
            for t in index.get((predicate, key), ()):
                found = t.subject if by_object else t.object
                members.add(found)
                base_paths = [p.path for p in extend.paths_for(key)] if extend else [()]
                for base in base_paths:
                    provenance.append(ProvenanceEntry(found, rule, tuple(base) + (t,)))
        return ConceptSet(frozenset(members), tuple(provenance))

    def query(self, template: str, bindings: dict) -> ConceptSet:
        """Run a named parameterized template.

        Templates and their bindings:
          drugs_treating(conditions)            treats edges, drug side
          contraindications_for_drugs(drugs)    contraindicated_with, condition side
          conditions_affecting(function)        affects edges, condition side
          symptoms_of(conditions)               has_symptom edges, symptom side
          phenotypes_for_lab(loinc_code, flag)  lab_maps_to_phenotype with qualifier
        """
        def need(key: str):
            if key not in bindings:
                raise KeyError(f"template {template!r} needs binding {key!r}")
            return bindings[key]

        if template == "drugs_treating":
            keys = _as_cuis(need("conditions"))
            return self._edge_lookup("treats", keys, by_object=True, rule=template,
                                     extend=_as_conceptset(need("conditions")))
        if template == "contraindications_for_drugs":
            keys = _as_cuis(need("drugs"))
            return self._edge_lookup("contraindicated_with", keys, by_object=True,
                                     rule=template, extend=_as_conceptset(need("drugs")))
        if template == "conditions_affecting":
            keys = _as_cuis(need("function"))
            return self._edge_lookup("affects", keys, by_object=True, rule=template,
                                     extend=_as_conceptset(need("function")))
        if template == "symptoms_of":
            keys = _as_cuis(need("conditions"))
            return self._edge_lookup("has_symptom", keys, by_object=False, rule=template,
                                     extend=_as_conceptset(need("conditions")))
        if template == "phenotypes_for_lab":
            loinc = need("loinc_code")
            flag = need("flag")
            labs = [c.cui for c in self.concepts.values() if ("LOINC", loinc) in c.codes]
            members: set[str] = set()
            provenance = []
            for lab_cui in labs:
                for t in self._by_subject.get(("lab_maps_to_phenotype", lab_cui), ()):
                    if t.qualifier == flag:
                        members.add(t.object)
                        provenance.append(ProvenanceEntry(t.object, template, (t,)))
            return ConceptSet(frozenset(members), tuple(provenance))
        raise UnknownTemplateError(template)

    def contraindications_to_drugs_for_conditions_affecting(self, function_cui: str) -> ConceptSet:
        """Three-hop chain: conditions affecting a physiologic function, the
        drugs treating those conditions, and the contraindications to those
        drugs. Each result member carries full triple paths
        (affects edge, treats edge, contraindicated_with edge).
        """
        conditions = self.query("conditions_affecting",
                                {"function": ConceptSet.direct([function_cui])})
        drugs = self.query("drugs_treating", {"conditions": conditions})
        return self.query("contraindications_for_drugs", {"drugs": drugs})

    # -- small lookups used by the service and codegen ----------------------

    def search(self, text: str, limit: int = 20) -> list[Concept]:
        """Case-insensitive substring search over names and cuis."""
        needle = text.strip().lower()
        if not needle:
            return []
        hits = [c for c in self.concepts.values()
                if needle in c.preferred_name.lower() or needle in c.cui.lower()]
        hits.sort(key=lambda c: (len(c.preferred_name), c.cui))
        return hits[:limit]

    def codes_for(self, cuis: Iterable[str], system: str) -> list[str]:
        """Sorted unique codes of `system` across the given concepts."""
        out: set[str] = set()
        for cui in cuis:
            concept = self.concepts.get(cui)
            if concept:
                out.update(concept.codes_in(system))
        return sorted(out)

    def loinc_codes_for(self, cuis: Iterable[str]) -> list[str]:
        return self.codes_for(cuis, "LOINC")


def _as_conceptset(value) -> ConceptSet:
    if isinstance(value, ConceptSet):
        return value
    if isinstance(value, str):
        return ConceptSet.direct([value])
    return ConceptSet.direct(value)


def _as_cuis(value) -> list[str]:
    if isinstance(value, ConceptSet):
        return sorted(value.members)
    if isinstance(value, str):
        return [value]
    return sorted(value)
