"""Text frontend: entity tagging and pattern-based criterion translation.

Two deterministic stages stand in for model-driven language processing.
augment() runs a longest-match lexicon tagger over raw criterion text and
rewrites each recognized span as an entity call, producing "augmented"
text like ``cond("Diabetics") who obs("smoke")``. translate() then maps
augmented text onto logical-form trees for a documented inventory of
sentence shapes (conjunction, alternation, negation, comparators on age
and lab values, and a within-window temporal form). Anything outside the
inventory comes back as a NotTranslatable value carrying the reason, so
callers can fall back to a hand-written logical form.

Both stages are pure functions of their inputs; the module keeps no
state, which is what lets a model-backed translator replace it behind
the same two signatures.
"""

import logging
import re
from dataclasses import dataclass
from typing import Optional, Union

from . import lforms as lf
from .lforms import LfNode, Polarity, Quoted, Symbol
from .normalize import Lexicon

log = logging.getLogger(__name__)

# semantic type to entity function; earlier rows win when a phrase
# carries several types
_KIND_BY_SEMTYPE = (
    ("dsyn", "cond"),
    ("topp", "proc"),
    ("phsu", "drug"),
    ("lbtr", "lab"),
    ("fndg", "obs"),
    ("sosy", "obs"),
    ("phsf", "obs"),
)

_ENTITY_FUNCTIONS = ("cond", "obs", "proc", "drug", "lab", "allergy")

# regions the tagger must never re-enter: existing call syntax
_FROZEN_RE = re.compile(
    r'(?:cond|obs|proc|drug|lab|allergy)\(\s*"[^"]*"\s*\)'
    r'|(?:age|female|male)\(\s*\)')

_SCAN_TOKEN_RE = re.compile(r"[A-Za-z0-9]+|[^\sA-Za-z0-9]")


@dataclass(frozen=True)
class TaggedSpan:
    start: int
    end: int
    function: str


@dataclass(frozen=True)
class AugmentedCriterion:
    """Raw criterion text alongside its entity-tagged rendering."""

    original: str
    augmented: str
    spans: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "spans", tuple(self.spans))


def render_span(function: str, text: str) -> str:
    return f'{function}("{text}")'


def _kind_for(entries) -> Optional[str]:
    types = set()
    for entry in entries:
        types |= entry.semantic_types
    for semtype, function in _KIND_BY_SEMTYPE:
        if semtype in types:
            return function
    return None


def augment(text: str, lexicon: Lexicon) -> AugmentedCriterion:
    """Tag lexicon entities in raw criterion text.

    Matching is longest-first, left to right, and non-overlapping, over
    the same token stream the normalizer uses, so span boundaries always
    fall on token edges and the tagged text is preserved verbatim inside
    the call. Already-tagged regions are left alone, which makes the
    operation idempotent.
    """
    if not text:
        raise ValueError("cannot augment empty text")
    frozen = [m.span() for m in _FROZEN_RE.finditer(text)]

    def in_frozen(start: int, end: int) -> bool:
        return any(start < f_end and end > f_start
                   for f_start, f_end in frozen)

    tokens = [(m.start(), m.end(), m.group(0).lower())
              for m in _SCAN_TOKEN_RE.finditer(text)
              if not in_frozen(m.start(), m.end())]
    spans = []
    i = 0
    while i < len(tokens):
        matched = None
        limit = min(lexicon.max_phrase_tokens, len(tokens) - i)
        for width in range(limit, 0, -1):
            window = tokens[i:i + width]
            start, end = window[0][0], window[-1][1]
            if in_frozen(start, end):
                continue
            entries = lexicon.lookup(tuple(t[2] for t in window))
            if not entries:
                continue
            function = _kind_for(entries)
            if function is None:
                continue
            matched = (TaggedSpan(start, end, function), width)
            break
        if matched:
            spans.append(matched[0])
            i += matched[1]
        else:
            i += 1

    parts = []
    cursor = 0
    for span in spans:
        parts.append(text[cursor:span.start])
        parts.append(render_span(span.function, text[span.start:span.end]))
        cursor = span.end
    parts.append(text[cursor:])
    return AugmentedCriterion(text, "".join(parts), tuple(spans))


# ---------------------------------------------------------------------------
# translation

@dataclass(frozen=True)
class NotTranslatable:
    """Returned when no documented pattern covers the augmented text."""

    reason: str


_OPERATOR_WORDS = {"over": "GT", "under": "LT"}
_OPERATOR_SYMBOLS = {">": "GT", ">=": "GTEQ", "=>": "GTEQ",
                     "<": "LT", "<=": "LTEQ", "=<": "LTEQ", "=": "EQ"}

_STOPWORDS = frozenset((
    "a", "an", "and", "are", "be", "diagnosed", "documented", "has",
    "have", "having", "history", "in", "is", "known", "of", "patient",
    "patients", "prior", "subject", "subjects", "the", "to", "was",
    "were", "who", "with",
))
# "and" never reaches the stopword check (it is a connective); it sits in
# the set only so membership tests in documentation examples read sanely

_NEGATION_WORDS = frozenset(("no", "without"))
_WINDOW_UNIT_WORDS = frozenset((
    "minute", "minutes", "min", "mins", "hour", "hours", "day", "days",
    "week", "weeks", "month", "months", "year", "years",
))
_UNIT_VOCAB = frozenset((
    "mg/dl", "g/dl", "mmol/l", "meq/l", "u/l", "%", "kg/m2", "ml/min",
    "10*3/ul", "cel", "kg", "cm", "mmhg",
))
_FEMALE_WORDS = frozenset(("women", "woman", "female", "females"))
_MALE_WORDS = frozenset(("men", "man", "male", "males"))

_CALL_RE = re.compile(
    r'(?P<fn>cond|obs|proc|drug|lab|allergy)\(\s*"(?P<text>[^"]*)"\s*\)'
    r'|(?P<zero>age|female|male)\(\s*\)')
_TRANSLATE_TOKEN_RE = re.compile(
    r'>=|=>|=<|<=|>|<|=|,|\d+(?:\.\d+)?|%|[A-Za-z][A-Za-z0-9*/-]*')


@dataclass
class _Tok:
    kind: str  # entity / age / word / comp / number / comma
    text: str = ""
    node: Optional[LfNode] = None


def _lex_augmented(text: str) -> list:
    tokens = []
    cursor = 0
    for call in _CALL_RE.finditer(text):
        for m in _TRANSLATE_TOKEN_RE.finditer(text, cursor, call.start()):
            tokens.append(_classify(m.group(0)))
        if call.group("zero"):
            name = call.group("zero")
            if name == "age":
                tokens.append(_Tok("age", "age"))
            else:
                tokens.append(_Tok("entity", name, LfNode(name)))
        else:
            node = LfNode(call.group("fn"), (Quoted(call.group("text")),))
            tokens.append(_Tok("entity", call.group("fn"), node))
        cursor = call.end()
    for m in _TRANSLATE_TOKEN_RE.finditer(text, cursor):
        tokens.append(_classify(m.group(0)))
    return tokens


def _classify(raw: str) -> _Tok:
    if raw == ",":
        return _Tok("comma", raw)
    if raw in _OPERATOR_SYMBOLS:
        return _Tok("comp", raw)
    if raw[0].isdigit():
        return _Tok("number", raw)
    lowered = raw.lower()
    if lowered == "age":
        return _Tok("age", raw)
    if lowered in _FEMALE_WORDS:
        return _Tok("entity", raw, LfNode("female"))
    if lowered in _MALE_WORDS:
        return _Tok("entity", raw, LfNode("male"))
    return _Tok("word", raw)


def _num_filter(op: str, number: str,
                unit: Optional[str] = None) -> LfNode:
    args = [LfNode("eq", (LfNode("op", (Symbol(op),)),
                          LfNode("val", (Quoted(number),))))]
    if unit is not None:
        args.append(LfNode("unit", (Quoted(unit),)))
    return LfNode("num_filter", tuple(args))


class _PatternError(Exception):
    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


class _SegmentReducer:
    """Reduce one connective-free token run to a list of nodes."""

    def __init__(self, tokens: list):
        self.tokens = tokens
        self.i = 0
        self.nodes = []
        self.negate_next = False

    def peek(self, offset: int = 0) -> Optional[_Tok]:
        index = self.i + offset
        return self.tokens[index] if index < len(self.tokens) else None

    def _operator_at(self, offset: int) -> Optional[str]:
        t = self.peek(offset)
        if t is None:
            return None
        if t.kind == "comp":
            return _OPERATOR_SYMBOLS[t.text]
        if t.kind == "word" and t.text.lower() in _OPERATOR_WORDS:
            return _OPERATOR_WORDS[t.text.lower()]
        return None

    def _consume_descriptors(self) -> Optional[str]:
        """Swallow words trailing a comparator's number; the first one
        that looks like a measurement unit is returned."""
        unit = None
        while True:
            t = self.peek()
            if t is None or t.kind != "word":
                return unit
            lowered = t.text.lower()
            if lowered in _NEGATION_WORDS or lowered == "within":
                return unit
            if self._operator_at(0):
                return unit
            if unit is None and lowered in _UNIT_VOCAB:
                unit = t.text
            self.i += 1

    def _comparator_filter(self) -> Optional[LfNode]:
        op = self._operator_at(0)
        number = self.peek(1)
        if op is None or number is None or number.kind != "number":
            return None
        self.i += 2
        unit = self._consume_descriptors()
        return _num_filter(op, number.text, unit)

    def _filter_after_entity(self) -> Optional[LfNode]:
        """Comparator lookahead that may cross filler words, so shapes
        like 'Cooled to < 34' still read as a filter on the entity."""
        save = self.i
        while True:
            t = self.peek()
            if t is None or t.kind != "word":
                break
            lowered = t.text.lower()
            if lowered not in _STOPWORDS or lowered in _OPERATOR_WORDS:
                break
            self.i += 1
        filt = self._comparator_filter()
        if filt is None:
            self.i = save
        return filt

    def _attach(self, node: LfNode) -> None:
        if self.negate_next:
            node = LfNode("not", (node,))
            self.negate_next = False
        self.nodes.append(node)

    def _temporal(self) -> None:
        if not self.nodes:
            raise _PatternError("temporal window has no preceding entity")
        number = self.peek(1)
        unit = self.peek(2)
        if number is None or number.kind != "number" or \
                unit is None or unit.kind != "word" or \
                unit.text.lower() not in _WINDOW_UNIT_WORDS:
            raise _PatternError('"within" must be followed by a window '
                                "length and unit")
        self.i += 3
        t = self.peek()
        if t is not None and t.kind == "word" and t.text.lower() == "of":
            self.i += 1
        anchor = self.peek()
        if anchor is None or anchor.kind != "entity":
            raise _PatternError('"within" window needs an anchor entity')
        self.i += 1
        predicate = LfNode("within", (anchor.node,
                                      LfNode("val", (Quoted(number.text),)),
                                      LfNode("unit", (Quoted(unit.text),))))
        outer = self.nodes[-1]
        self.nodes[-1] = LfNode(outer.function, outer.args,
                                outer.predicates + (predicate,))

    def reduce(self) -> list:
        while self.i < len(self.tokens):
            t = self.tokens[self.i]
            if t.kind == "entity":
                self.i += 1
                node = t.node
                filt = self._filter_after_entity()
                if filt is not None:
                    if node.function not in ("lab", "age"):
                        raise _PatternError(
                            f"comparator after {node.function}() is not a "
                            "documented pattern")
                    node = LfNode(node.function, node.args,
                                  node.predicates + (filt,))
                self._attach(node)
            elif t.kind == "age":
                self.i += 1
                filt = self._filter_after_entity()
                node = LfNode("age")
                if filt is not None:
                    node = LfNode("age", (), (filt,))
                self._attach(node)
            elif t.kind == "comp" or (t.kind == "word" and
                                      t.text.lower() in _OPERATOR_WORDS):
                nxt = self.peek(1)
                if nxt is not None and nxt.kind == "age":
                    # "over age 65": rewrite to age-first and re-process
                    self.tokens[self.i], self.tokens[self.i + 1] = \
                        self.tokens[self.i + 1], self.tokens[self.i]
                    continue
                raise _PatternError(
                    f"comparator {t.text!r} is not adjacent to age or a "
                    "lab entity")
            elif t.kind == "word":
                lowered = t.text.lower()
                if lowered in _NEGATION_WORDS:
                    self.negate_next = True
                    self.i += 1
                elif lowered == "within":
                    self._temporal()
                elif lowered in _STOPWORDS:
                    self.i += 1
                else:
                    raise _PatternError(f"unrecognized text {t.text!r}")
            elif t.kind == "number":
                raise _PatternError(f"number {t.text!r} without a "
                                    "comparator")
            else:
                raise _PatternError(f"unexpected token {t.text!r}")
        if self.negate_next:
            raise _PatternError("negation with nothing to negate")
        return self.nodes


def _merge_gender_pairs(items: list, seps: list) -> None:
    """Collapse adjacent female/male mentions into a union; eligibility
    prose joins the two sexes with "and" even though set semantics need
    a union."""
    i = 0
    while i < len(items) - 1:
        pair = {items[i].function, items[i + 1].function}
        if pair == {"female", "male"} and \
                not items[i].predicates and not items[i + 1].predicates:
            items[i] = LfNode("union", (items[i], items[i + 1]))
            del items[i + 1]
            del seps[i]
        else:
            i += 1


def translate(aug: AugmentedCriterion,
              polarity: Polarity = Polarity.INCLUSION,
              catalog: Optional[lf.FunctionCatalog] = None
              ) -> Union[LfNode, NotTranslatable]:
    """Map augmented criterion text onto a logical-form tree.

    Augmented text that already parses as a complete logical form is
    accepted as-is. Otherwise the documented patterns apply: entities
    joined by "and" or commas intersect, "or" unions, "no history of X"
    negates (inclusion lines only), comparator phrases beside age or lab
    entities become numeric filters, and "within N UNIT of X" becomes a
    temporal window. Everything else returns NotTranslatable with the
    blocking reason.
    """
    text = aug.augmented if isinstance(aug, AugmentedCriterion) else str(aug)
    try:
        direct = lf.parse(text, catalog)
    except lf.LfError:
        direct = None
    if direct is not None and not lf.validate(direct, catalog):
        return direct

    tokens = _lex_augmented(text)
    if not any(t.kind in ("entity", "age") for t in tokens):
        return _give_up(aug, "no recognizable entities")

    segments = [[]]
    separators = []
    for t in tokens:
        if t.kind == "comma" or (t.kind == "word" and
                                 t.text.lower() in ("and", "or")):
            connective = "or" if t.text.lower() == "or" else "and"
            if not segments[-1]:
                # ", and" style doubled connective: keep the stronger word
                if separators and connective == "or":
                    separators[-1] = "or"
                continue
            separators.append(connective)
            segments.append([])
        else:
            segments[-1].append(t)

    items = []
    item_seps = []
    try:
        for index, segment in enumerate(segments):
            if not segment:
                raise _PatternError("dangling connective")
            reduced = _SegmentReducer(segment).reduce()
            if not reduced:
                raise _PatternError("connective joins no entities")
            for j, node in enumerate(reduced):
                if items:
                    if j == 0:
                        item_seps.append(separators[index - 1])
                    else:
                        item_seps.append("and")
                items.append(node)
    except _PatternError as err:
        return _give_up(aug, err.reason)

    if polarity is Polarity.EXCLUSION and \
            any(n.function == "not" for n in items):
        return _give_up(aug, "negated phrase inside an exclusion line")

    _merge_gender_pairs(items, item_seps)

    if len(items) == 1:
        result = items[0]
    elif all(s == "and" for s in item_seps):
        result = LfNode("intersect", tuple(items))
    elif all(s == "or" for s in item_seps):
        result = LfNode("union", tuple(items))
    else:
        return _give_up(aug, "mixed connectives need a hand-written "
                             "logical form")

    issues = lf.validate(result, catalog)
    if issues:
        return _give_up(aug, f"translated tree is invalid: {issues[0]}")
    return result


def _give_up(aug, reason: str) -> NotTranslatable:
    original = aug.original if isinstance(aug, AugmentedCriterion) else aug
    log.info("not translatable: %s (criterion %r)", reason, original)
    return NotTranslatable(reason)


def pipeline(text: str, lexicon: Lexicon,
             polarity: Polarity = Polarity.INCLUSION,
             catalog: Optional[lf.FunctionCatalog] = None):
    """Raw text straight to a logical form (or NotTranslatable)."""
    aug = augment(text, lexicon)
    return aug, translate(aug, polarity, catalog)
