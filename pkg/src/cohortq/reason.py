"""Resolve logical-form trees against the knowledge base.

Walks a criterion tree inside-out and attaches to every expression node a
status plus the concept set it denotes:

* named entities go through the concept normalizer, then descendant
  expansion (a criterion naming "diabetes" matches every subtype);
* reasoning predicates (treats / affects / contraindication / caused_by)
  run knowledge-base templates over their argument's concepts, composing
  provenance paths hop by hop, and intersect with the entity's own
  concepts when it is also named;
* value predicates become numeric filters, temporal predicates become
  window filters with a reasoned anchor;
* anything unresolvable is marked NonComputable with a reason, so a trial
  run can skip that criterion line instead of failing.

The result trees are immutable; user overrides produce edited copies.
"""

from dataclasses import dataclass, replace
from decimal import Decimal, InvalidOperation
from enum import Enum
from typing import Optional

from . import lforms as lf
from .kb import ConceptSet, KnowledgeBase, ProvenanceEntry
from .normalize import ConceptNormalizer, NoLoincMappingError

# semantic types each entity function will accept from the lexicon
ENTITY_SEMTYPES = {
    "cond": frozenset({"dsyn"}),
    "obs": frozenset({"fndg", "sosy", "phsf"}),
    "proc": frozenset({"topp"}),
    "drug": frozenset({"phsu"}),
    "lab": frozenset({"lbtr"}),
    "allergy": frozenset({"dsyn", "phsu"}),
}

REASONING_PREDICATES = {
    "affects": ("conditions_affecting", "function"),
    "treats": ("drugs_treating", "conditions"),
    "contraindication": ("contraindications_for_drugs", "drugs"),
    "caused_by": ("symptoms_of", "conditions"),
}

TEMPORAL_PREDICATES = ("before", "after", "within")


class Status(Enum):
    RESOLVED = "resolved"
    STRUCTURAL = "structural"
    NON_COMPUTABLE = "non_computable"


class InvalidPathError(ValueError):
    pass


@dataclass(frozen=True)
class NumericFilter:
    op: str  # one of lforms.OPERATORS
    value: Decimal
    unit: Optional[str] = None


@dataclass(frozen=True)
class TemporalFilter:
    direction: str  # before / after / within
    anchor: "ReasonedNode"
    window_value: Optional[Decimal] = None
    window_unit: Optional[str] = None


_EMPTY = ConceptSet(frozenset())


@dataclass(frozen=True)
class ReasonedNode:
    source: lf.LfNode
    status: Status
    concepts: ConceptSet = _EMPTY
    children: tuple = ()
    numeric_filters: tuple = ()
    temporal_filters: tuple = ()
    failure: Optional[str] = None

    @property
    def is_computable(self) -> bool:
        return self.status is not Status.NON_COMPUTABLE

    @property
    def function(self) -> str:
        return self.source.function


def _expand(kb: KnowledgeBase, base: ConceptSet) -> ConceptSet:
    """Descendant-close a concept set, keeping its existing provenance and
    adding isa entries for every newly admitted subtype."""
    members = set(base.members)
    provenance = list(base.provenance)
    for cui in sorted(base.members):
        closure = kb.descendants(cui)
        for entry in closure.provenance:
            if entry.rule == "self":
                continue
            if entry.cui not in members:
                members.add(entry.cui)
            provenance.append(entry)
    return ConceptSet(frozenset(members), tuple(provenance))


def _intersect(a: ConceptSet, b: ConceptSet) -> ConceptSet:
    members = a.members & b.members
    provenance = tuple(p for p in a.provenance + b.provenance if p.cui in members)
    return ConceptSet(members, provenance)


def _structural_status(function: str, children: tuple) -> tuple[Status, Optional[str]]:
    if function == "union":
        if any(c.is_computable for c in children):
            return Status.STRUCTURAL, None
        return Status.NON_COMPUTABLE, "no computable branch in union"
    # intersect and not: one bad part poisons the whole
    for i, child in enumerate(children):
        if not child.is_computable:
            return Status.NON_COMPUTABLE, f"argument {i} non-computable: {child.failure}"
    return Status.STRUCTURAL, None


class Reasoner:
    def __init__(self, kb: KnowledgeBase, normalizer: ConceptNormalizer,
                 catalog: Optional[lf.FunctionCatalog] = None):
        self.kb = kb
        self.normalizer = normalizer
        self.catalog = catalog or lf.default_catalog()

    def reason(self, node: lf.LfNode, trace: Optional[list] = None) -> ReasonedNode:
        """Resolve a criterion tree. `trace`, when given, records function
        names in completion order (children always before parents)."""
        result = self._reason(node, trace)
        return result

    def _reason(self, node: lf.LfNode, trace: Optional[list]) -> ReasonedNode:
        entry = self.catalog.get(node.function)
        if entry is None:
            out = ReasonedNode(node, Status.NON_COMPUTABLE,
                               failure=f"unknown function {node.function!r}")
        elif entry.kind is lf.FunctionKind.STRUCTURAL:
            out = self._reason_structural(node, trace)
        elif entry.kind is lf.FunctionKind.DEMOGRAPHIC:
            out = self._reason_demographic(node, trace)
        elif entry.kind is lf.FunctionKind.ENTITY:
            out = self._reason_entity(node, trace)
        else:
            out = ReasonedNode(node, Status.NON_COMPUTABLE,
                               failure=f"{node.function} cannot stand alone")
        if trace is not None:
            trace.append(node.function)
        return out

    def _reason_structural(self, node: lf.LfNode, trace) -> ReasonedNode:
        children = tuple(self._reason(a, trace) for a in node.args
                         if isinstance(a, lf.LfNode))
        status, failure = _structural_status(node.function, children)
        return ReasonedNode(node, status, children=children, failure=failure)

    def _reason_demographic(self, node: lf.LfNode, trace) -> ReasonedNode:
        filters, problem = self._numeric_filters(node)
        if problem:
            return ReasonedNode(node, Status.NON_COMPUTABLE, failure=problem)
        return ReasonedNode(node, Status.RESOLVED, numeric_filters=filters)

    def _reason_entity(self, node: lf.LfNode, trace) -> ReasonedNode:
        named = node.quoted_value()
        base: Optional[ConceptSet] = None

        if named is not None:
            if node.function == "lab":
                try:
                    cand = self.normalizer.normalize_lab(named)
                except NoLoincMappingError:
                    return ReasonedNode(
                        node, Status.NON_COMPUTABLE,
                        failure=f'lab normalization failure: "{named}"')
                base = ConceptSet(frozenset({cand.cui}),
                                  (ProvenanceEntry(cand.cui, "normalization"),))
            else:
                allowed = ENTITY_SEMTYPES.get(node.function)
                candidates = self.normalizer.normalize(named, allowed)
                if not candidates:
                    return ReasonedNode(
                        node, Status.NON_COMPUTABLE,
                        failure=f'normalization failure: "{named}"')
                base = ConceptSet(
                    frozenset(c.cui for c in candidates),
                    tuple(ProvenanceEntry(c.cui, "normalization") for c in candidates))
            base = _expand(self.kb, base)

        numeric_filters, problem = self._numeric_filters(node)
        if problem:
            return ReasonedNode(node, Status.NON_COMPUTABLE, failure=problem)

        temporal_filters = []
        for pred in node.predicates:
            if pred.function in REASONING_PREDICATES:
                resolved, failure = self._apply_reasoning(pred, base, trace)
                if failure:
                    return ReasonedNode(node, Status.NON_COMPUTABLE, failure=failure)
                base = resolved
            elif pred.function in TEMPORAL_PREDICATES:
                tf, failure = self._temporal_filter(pred, trace)
                if failure:
                    return ReasonedNode(node, Status.NON_COMPUTABLE, failure=failure)
                temporal_filters.append(tf)

        if base is None:
            return ReasonedNode(node, Status.NON_COMPUTABLE,
                                failure="unnamed entity with no reasoning predicate")
        if not base:
            return ReasonedNode(node, Status.NON_COMPUTABLE,
                                failure="no concepts resolved")
        return ReasonedNode(node, Status.RESOLVED, concepts=base,
                            numeric_filters=tuple(numeric_filters),
                            temporal_filters=tuple(temporal_filters))

    def _apply_reasoning(self, pred: lf.LfNode, base: Optional[ConceptSet], trace):
        template, binding = REASONING_PREDICATES[pred.function]
        if not pred.args or not isinstance(pred.args[0], lf.LfNode):
            return None, f"{pred.function} needs an expression argument"
        arg = self._reason(pred.args[0], trace)
        if not arg.is_computable:
            return None, f"{pred.function} argument non-computable: {arg.failure}"
        result = _expand(self.kb, self.kb.query(template, {binding: arg.concepts}))
        combined = result if base is None else _intersect(base, result)
        return combined, None

    def _numeric_filters(self, node: lf.LfNode):
        filters = []
        for pred in node.predicates:
            if pred.function != "num_filter":
                continue
            unit = None
            body = list(pred.args)
            if body and isinstance(body[-1], lf.LfNode) and body[-1].function == "unit":
                unit_node = body.pop()
                unit = unit_node.args[0].text if unit_node.args else None
            for eq in body:
                if not isinstance(eq, lf.LfNode) or eq.function != "eq" or len(eq.args) != 2:
                    return (), "malformed num_filter"
                op_node, val_node = eq.args
                if not (isinstance(op_node, lf.LfNode) and op_node.args
                        and isinstance(op_node.args[0], lf.Symbol)):
                    return (), "malformed num_filter operator"
                raw = val_node.args[0].text if (isinstance(val_node, lf.LfNode)
                                                and val_node.args) else None
                try:
                    value = Decimal(raw)
                except (InvalidOperation, TypeError):
                    return (), f'non-numeric filter value "{raw}"'
                filters.append(NumericFilter(op_node.args[0].name, value, unit))
        return tuple(filters), None

    def _temporal_filter(self, pred: lf.LfNode, trace):
        anchor = self._reason(pred.args[0], trace)
        if not anchor.is_computable:
            return None, f"temporal anchor non-computable: {anchor.failure}"
        if pred.function == "within":
            if len(pred.args) != 3:
                return None, "within needs expression, val, unit"
            val_node, unit_node = pred.args[1], pred.args[2]
            try:
                value = Decimal(val_node.args[0].text)
            except (InvalidOperation, IndexError, AttributeError):
                return None, "malformed window value"
            unit = unit_node.args[0].text if (isinstance(unit_node, lf.LfNode)
                                              and unit_node.args) else None
            return TemporalFilter("within", anchor, value, unit), None
        return TemporalFilter(pred.function, anchor), None


def reason(node: lf.LfNode, kb: KnowledgeBase, normalizer: ConceptNormalizer,
           catalog: Optional[lf.FunctionCatalog] = None,
           trace: Optional[list] = None) -> ReasonedNode:
    return Reasoner(kb, normalizer, catalog).reason(node, trace)


# ---------------------------------------------------------------------------
# overrides

def apply_override(root: ReasonedNode, path: tuple, cuis, *,
                   rule: str = "user_override") -> ReasonedNode:
    """Replace the concept set of the entity node at `path` (a sequence of
    child indices from the root) and re-derive ancestor statuses. The
    input tree is left untouched; shared subtrees are reused.
    """
    path = tuple(path)
    if path:
        index = path[0]
        if not 0 <= index < len(root.children):
            raise InvalidPathError(f"no child {index} under {root.function}")
        new_child = apply_override(root.children[index], path[1:], cuis, rule=rule)
        children = root.children[:index] + (new_child,) + root.children[index + 1:]
        if root.children and root.status in (Status.STRUCTURAL, Status.NON_COMPUTABLE):
            status, failure = _structural_status(root.function, children)
            return replace(root, children=children, status=status, failure=failure)
        return replace(root, children=children)

    entry_concepts = ConceptSet.direct(cuis, rule=rule)
    if root.children and not root.concepts:
        raise InvalidPathError(f"{root.function} is not an entity node")
    if root.function in ("female", "male", "age"):
        raise InvalidPathError(f"{root.function} carries no concepts to override")
    if not entry_concepts:
        return replace(root, concepts=entry_concepts, status=Status.NON_COMPUTABLE,
                       failure="override removed all concepts")
    return replace(root, concepts=entry_concepts, status=Status.RESOLVED, failure=None)


# ---------------------------------------------------------------------------
# explanations

@dataclass(frozen=True)
class ExplanationTree:
    label: str
    details: tuple = ()
    children: tuple = ()

    def to_dict(self) -> dict:
        return {"label": self.label, "details": list(self.details),
                "children": [c.to_dict() for c in self.children]}

    def to_text(self, indent: int = 0) -> str:
        pad = "  " * indent
        lines = [pad + self.label]
        lines.extend(pad + "  - " + d for d in self.details)
        lines.extend(c.to_text(indent + 1) for c in self.children)
        return "\n".join(lines)


def _format_path(kb: KnowledgeBase, path) -> str:
    return "; ".join(
        f"{kb.name_of(t.subject)} -[{t.predicate}]-> {kb.name_of(t.object)}"
        for t in path)


def explain(node: ReasonedNode, kb: KnowledgeBase) -> ExplanationTree:
    """Human-readable account of how each node resolved."""
    head = node.function
    named = node.source.quoted_value()
    if named is not None:
        head += f'("{named}")'
    if node.status is Status.NON_COMPUTABLE:
        label = f"{head} - skipped: {node.failure}"
    elif node.status is Status.STRUCTURAL:
        label = f"{head} - structural"
    else:
        n = len(node.concepts)
        label = f"{head} - resolved" + (f", {n} concept(s)" if n else "")

    details = []
    for cui in sorted(node.concepts.members):
        concept = kb.concepts.get(cui)
        codes = " ".join(f"{s}:{c}" for s, c in sorted(concept.codes)) if concept else ""
        name = kb.name_of(cui)
        details.append(f"{cui} {name}" + (f" [{codes}]" if codes else ""))
        for entry in node.concepts.paths_for(cui):
            if entry.path:
                details.append(f"  via {entry.rule}: {_format_path(kb, entry.path)}")
    for f in node.numeric_filters:
        details.append(f"filter: value {f.op} {f.value}" + (f" {f.unit}" if f.unit else ""))
    for t in node.temporal_filters:
        if t.direction == "within":
            details.append(f"window: within {t.window_value} {t.window_unit} after "
                           f"{t.anchor.function}")
        else:
            details.append(f"window: {t.direction} {t.anchor.function}")

    children = [explain(c, kb) for c in node.children]
    children.extend(explain(t.anchor, kb) for t in node.temporal_filters)
    return ExplanationTree(label, tuple(details), tuple(children))
