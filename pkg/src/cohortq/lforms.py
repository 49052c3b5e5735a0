"""Logical forms for eligibility criteria.

The criteria language is a small expression DSL: function calls with
positional arguments, plus predicate calls chained onto an expression with
a dot. A typical criterion line::

    intersect(cond("Diabetic"), union(female(), male()), age().num_filter(eq(op(GT), val("65"))))

This module owns the concrete syntax end to end: tokenizer, function
catalog, recursive-descent parser, canonical serializer (compact and
pretty), validation diagnostics, the two alternative surface styles
(shift-reduce bracket form and span-index form) with lossless conversion
between them, and the 8-line annotation file layout used for criterion
corpora.
"""

import re
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from typing import Iterable, Optional, Union


# ---------------------------------------------------------------------------
# errors

class LfError(Exception):
    """Base class for logical-form errors. Carries a character position."""

    def __init__(self, message: str, position: Optional[int] = None):
        super().__init__(message)
        self.position = position


class UnterminatedStringError(LfError):
    pass


class IllegalCharacterError(LfError):
    def __init__(self, char: str, position: int):
        super().__init__(f"illegal character {char!r} at position {position}", position)
        self.char = char


class LfSyntaxError(LfError):
    def __init__(self, expected: str, found: str, position: Optional[int]):
        super().__init__(f"expected {expected}, found {found} at position {position}", position)
        self.expected = expected
        self.found = found


class UnknownFunctionError(LfError):
    def __init__(self, name: str, position: Optional[int] = None):
        super().__init__(f"unknown function {name!r}", position)
        self.name = name


class ArityError(LfError):
    def __init__(self, name: str, got: int, min_arity: int, max_arity: Optional[int],
                 position: Optional[int] = None):
        allowed = str(min_arity) if min_arity == (max_arity if max_arity is not None else -1) \
            else f"{min_arity}..{'*' if max_arity is None else max_arity}"
        super().__init__(f"{name} takes {allowed} argument(s), got {got}", position)
        self.name = name
        self.got = got
        self.min_arity = min_arity
        self.max_arity = max_arity


class MalformedStyleError(LfError):
    pass


class MissingSpanTableError(LfError):
    def __init__(self):
        super().__init__("span-index source requires a span table", None)


class SpanIndexOutOfRangeError(LfError):
    def __init__(self, index: int, table_size: int):
        super().__init__(f"span reference @{index} outside table of {table_size} span(s)", None)
        self.index = index


class AnnotationFormatError(LfError):
    pass


# ---------------------------------------------------------------------------
# tokens

class TokenKind(Enum):
    IDENT = "identifier"
    STRING = "string"
    LPAREN = "("
    RPAREN = ")"
    LBRACKET = "["
    RBRACKET = "]"
    COMMA = ","
    DOT = "."
    WS = "whitespace"


@dataclass(frozen=True)
class Token:
    """One lexeme.

    ``text`` is the raw source slice, so concatenating token texts in order
    reproduces the input exactly. For STRING tokens ``value`` holds the
    content with quotes stripped and escapes resolved.
    """

    kind: TokenKind
    text: str
    position: int
    value: Optional[str] = None


_PUNCT = {
    "(": TokenKind.LPAREN,
    ")": TokenKind.RPAREN,
    "[": TokenKind.LBRACKET,
    "]": TokenKind.RBRACKET,
    ",": TokenKind.COMMA,
    ".": TokenKind.DOT,
}
_WS_RE = re.compile(r"\s+")
_IDENT_RE = re.compile(r"@[0-9]+|[A-Za-z_][A-Za-z0-9_]*")

FUNCTION_NAME_RE = re.compile(r"[a-z_][a-z0-9_]*")
OPERATORS = ("EQ", "GT", "GTEQ", "LT", "LTEQ", "NEQ")


def tokenize(text: str) -> list[Token]:
    """Split source text into tokens, keeping whitespace runs as WS tokens.

    Raises UnterminatedStringError or IllegalCharacterError on bad input.
    """
    tokens: list[Token] = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        m = _WS_RE.match(text, i)
        if m:
            tokens.append(Token(TokenKind.WS, m.group(), i))
            i = m.end()
            continue
        if ch in _PUNCT:
            tokens.append(Token(_PUNCT[ch], ch, i))
            i += 1
            continue
        if ch == '"':
            j = i + 1
            parts: list[str] = []
            closed = False
            while j < n:
                c = text[j]
                if c == "\\" and j + 1 < n and text[j + 1] in ('"', "\\"):
                    parts.append(text[j + 1])
                    j += 2
                elif c == '"':
                    closed = True
                    break
                else:
                    parts.append(c)
                    j += 1
            if not closed:
                raise UnterminatedStringError(f"unterminated string at position {i}", i)
            tokens.append(Token(TokenKind.STRING, text[i:j + 1], i, value="".join(parts)))
            i = j + 1
            continue
        m = _IDENT_RE.match(text, i)
        if m:
            tokens.append(Token(TokenKind.IDENT, m.group(), i))
            i = m.end()
            continue
        raise IllegalCharacterError(ch, i)
    return tokens


# ---------------------------------------------------------------------------
# AST

@dataclass(frozen=True)
class Quoted:
    """A quoted literal argument.

    ``span_index`` is the 0-based position of this quoted span among all
    quoted spans of the criterion, counted left to right in the source.
    The parser fills it in; it is deliberately excluded from equality so
    that programmatically built trees compare equal to parsed ones.
    """

    text: str
    span_index: Optional[int] = field(default=None, compare=False)


@dataclass(frozen=True)
class Symbol:
    """A bare identifier argument, e.g. the GT in op(GT)."""

    name: str


@dataclass(frozen=True)
class SpanRef:
    """A placeholder argument @k used by the span-index style."""

    index: int


Arg = Union["LfNode", Quoted, Symbol, SpanRef]


@dataclass(frozen=True)
class LfNode:
    """A function call with arguments and chained predicate calls."""

    function: str
    args: tuple = ()
    predicates: tuple = ()

    def __post_init__(self):
        # accept lists for ergonomic construction, store tuples
        object.__setattr__(self, "args", tuple(self.args))
        object.__setattr__(self, "predicates", tuple(self.predicates))

    def quoted_value(self) -> Optional[str]:
        """Text of this node's first quoted argument, if any."""
        for a in self.args:
            if isinstance(a, Quoted):
                return a.text
        return None


def walk(node: LfNode):
    """Yield node and every descendant call, depth first, args before predicates."""
    yield node
    for a in node.args:
        if isinstance(a, LfNode):
            yield from walk(a)
    for p in node.predicates:
        yield from walk(p)


# ---------------------------------------------------------------------------
# function catalog

class FunctionKind(Enum):
    ENTITY = "entity"
    DEMOGRAPHIC = "demographic"
    STRUCTURAL = "structural"
    VALUE = "value"
    COMPARISON = "comparison"
    PREDICATE = "predicate"


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    kind: FunctionKind
    min_arity: int
    max_arity: Optional[int]  # None = unbounded
    chainable: bool

    def arity_ok(self, n: int) -> bool:
        if n < self.min_arity:
            return False
        return self.max_arity is None or n <= self.max_arity


class CatalogError(ValueError):
    pass


class FunctionCatalog:
    """The set of known functions, loadable from a declarative text file."""

    def __init__(self, entries: Iterable[CatalogEntry]):
        self._entries: dict[str, CatalogEntry] = {}
        for e in entries:
            if e.name in self._entries:
                raise CatalogError(f"duplicate catalog entry {e.name!r}")
            if not FUNCTION_NAME_RE.fullmatch(e.name):
                raise CatalogError(f"bad function name {e.name!r}")
            self._entries[e.name] = e

    def __contains__(self, name: str) -> bool:
        return name in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def get(self, name: str) -> Optional[CatalogEntry]:
        return self._entries.get(name)

    def names(self) -> list[str]:
        return sorted(self._entries)

    def entries(self) -> list[CatalogEntry]:
        return [self._entries[n] for n in self.names()]

    def extend(self, other: "FunctionCatalog") -> "FunctionCatalog":
        """New catalog with other's entries added; other wins on name clash."""
        merged = dict(self._entries)
        merged.update(other._entries)
        return FunctionCatalog(merged.values())

    @classmethod
    def from_text(cls, text: str) -> "FunctionCatalog":
        entries = []
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 5:
                raise CatalogError(f"line {lineno}: expected 5 fields, got {len(parts)}")
            name, kind_s, lo_s, hi_s, chain_s = parts
            try:
                kind = FunctionKind(kind_s)
            except ValueError:
                raise CatalogError(f"line {lineno}: unknown kind {kind_s!r}") from None
            if not lo_s.isdigit():
                raise CatalogError(f"line {lineno}: bad min arity {lo_s!r}")
            if hi_s != "*" and not hi_s.isdigit():
                raise CatalogError(f"line {lineno}: bad max arity {hi_s!r}")
            if chain_s not in ("yes", "no"):
                raise CatalogError(f"line {lineno}: chainable must be yes/no, got {chain_s!r}")
            hi = None if hi_s == "*" else int(hi_s)
            if hi is not None and hi < int(lo_s):
                raise CatalogError(f"line {lineno}: max arity below min arity")
            entries.append(CatalogEntry(name, kind, int(lo_s), hi, chain_s == "yes"))
        return cls(entries)

    @classmethod
    def from_file(cls, path) -> "FunctionCatalog":
        with open(path, encoding="utf-8") as fh:
            return cls.from_text(fh.read())


_default_catalog: Optional[FunctionCatalog] = None


def default_catalog() -> FunctionCatalog:
    """The catalog bundled with the package (data/functions.catalog)."""
    global _default_catalog
    if _default_catalog is None:
        text = resources.files("cohortq.data").joinpath("functions.catalog").read_text("utf-8")
        _default_catalog = FunctionCatalog.from_text(text)
    return _default_catalog


# ---------------------------------------------------------------------------
# parsing

class _TokenStream:
    def __init__(self, tokens: list[Token]):
        self.tokens = [t for t in tokens if t.kind is not TokenKind.WS]
        self.pos = 0

    def peek(self, ahead: int = 0) -> Optional[Token]:
        i = self.pos + ahead
        return self.tokens[i] if i < len(self.tokens) else None

    def next(self) -> Optional[Token]:
        t = self.peek()
        if t is not None:
            self.pos += 1
        return t

    def expect(self, kind: TokenKind) -> Token:
        t = self.next()
        if t is None:
            raise LfSyntaxError(kind.value, "end of input", None)
        if t.kind is not kind:
            raise LfSyntaxError(kind.value, repr(t.text), t.position)
        return t


class _Parser:
    def __init__(self, tokens: list[Token], catalog: FunctionCatalog,
                 allow_span_refs: bool = False):
        self.stream = _TokenStream(tokens)
        self.catalog = catalog
        self.allow_span_refs = allow_span_refs
        self.span_counter = 0

    def parse(self) -> LfNode:
        node = self.expression()
        trailing = self.stream.peek()
        if trailing is not None:
            raise LfSyntaxError("end of input", repr(trailing.text), trailing.position)
        return node

    def expression(self) -> LfNode:
        node = self.call()
        predicates = []
        while (t := self.stream.peek()) is not None and t.kind is TokenKind.DOT:
            self.stream.next()
            predicates.append(self.call())
        if predicates:
            node = LfNode(node.function, node.args, tuple(predicates))
        return node

    def call(self) -> LfNode:
        name_tok = self.stream.expect(TokenKind.IDENT)
        entry = self.catalog.get(name_tok.text)
        if entry is None:
            raise UnknownFunctionError(name_tok.text, name_tok.position)
        self.stream.expect(TokenKind.LPAREN)
        args: list[Arg] = []
        t = self.stream.peek()
        if t is not None and t.kind is not TokenKind.RPAREN:
            args.append(self.argument())
            while (t := self.stream.peek()) is not None and t.kind is TokenKind.COMMA:
                self.stream.next()
                args.append(self.argument())
        self.stream.expect(TokenKind.RPAREN)
        if not entry.arity_ok(len(args)):
            raise ArityError(entry.name, len(args), entry.min_arity, entry.max_arity,
                             name_tok.position)
        return LfNode(name_tok.text, tuple(args))

    def argument(self) -> Arg:
        t = self.stream.peek()
        if t is None:
            raise LfSyntaxError("argument", "end of input", None)
        if t.kind is TokenKind.STRING:
            self.stream.next()
            q = Quoted(t.value if t.value is not None else "", span_index=self.span_counter)
            self.span_counter += 1
            return q
        if t.kind is TokenKind.IDENT:
            if t.text.startswith("@"):
                if not self.allow_span_refs:
                    raise LfSyntaxError("argument", repr(t.text), t.position)
                self.stream.next()
                return SpanRef(int(t.text[1:]))
            nxt = self.stream.peek(1)
            if nxt is not None and nxt.kind is TokenKind.LPAREN:
                return self.expression()
            self.stream.next()
            return Symbol(t.text)
        raise LfSyntaxError("argument", repr(t.text), t.position)


def parse(text: str, catalog: Optional[FunctionCatalog] = None) -> LfNode:
    """Parse standard-style source text into an LfNode tree.

    Unknown function names and arity violations are rejected here; deeper
    shape rules (argument kinds, predicate placement) are reported by
    validate() so that programmatically built trees get the same checks.
    """
    return _Parser(tokenize(text), catalog or default_catalog()).parse()


# ---------------------------------------------------------------------------
# serialization

def _escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


def _render_arg(arg: Arg) -> str:
    if isinstance(arg, LfNode):
        return _render(arg)
    if isinstance(arg, Quoted):
        return f'"{_escape(arg.text)}"'
    if isinstance(arg, Symbol):
        return arg.name
    if isinstance(arg, SpanRef):
        return f"@{arg.index}"
    raise TypeError(f"not a logical-form argument: {arg!r}")


def _render(node: LfNode) -> str:
    head = f"{node.function}({', '.join(_render_arg(a) for a in node.args)})"
    return head + "".join("." + _render(p) for p in node.predicates)


def serialize(node: LfNode, pretty: bool = False) -> str:
    """Render a tree back to canonical standard-style text.

    Compact mode emits no whitespace except one space after each comma.
    Pretty mode, when the root call has two or more arguments, puts each
    root argument on its own 4-space-indented line with the closing paren
    on its own line; nested calls stay compact.
    """
    if not pretty or len(node.args) < 2:
        return _render(node)
    lines = [f"{node.function}("]
    for i, a in enumerate(node.args):
        comma = "," if i < len(node.args) - 1 else ""
        lines.append(f"    {_render_arg(a)}{comma}")
    lines.append(")" + "".join("." + _render(p) for p in node.predicates))
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# validation

@dataclass(frozen=True)
class Diagnostic:
    """One validation finding. ``path`` locates the node, e.g. intersect/2/age."""

    code: str
    message: str
    path: str


_EXPR_KINDS = (FunctionKind.ENTITY, FunctionKind.DEMOGRAPHIC, FunctionKind.STRUCTURAL)


class _Validator:
    def __init__(self, catalog: FunctionCatalog):
        self.catalog = catalog
        self.diagnostics: list[Diagnostic] = []

    def report(self, code: str, message: str, path: str):
        self.diagnostics.append(Diagnostic(code, message, path))

    def node_kind(self, arg: Arg) -> Optional[FunctionKind]:
        if isinstance(arg, LfNode):
            entry = self.catalog.get(arg.function)
            return entry.kind if entry else None
        return None

    def check(self, node: LfNode, path: str, as_predicate: bool):
        entry = self.catalog.get(node.function)
        if entry is None:
            self.report("unknown-function", f"unknown function {node.function!r}", path)
            for a in node.args:
                if isinstance(a, LfNode):
                    self.check(a, f"{path}/?", as_predicate=False)
            return
        if not entry.arity_ok(len(node.args)):
            hi = "*" if entry.max_arity is None else entry.max_arity
            allowed = str(entry.min_arity) if entry.min_arity == entry.max_arity else f"{entry.min_arity}..{hi}"
            self.report("arity", f"{node.function} got {len(node.args)} allowed {allowed}", path)
        if entry.kind is FunctionKind.PREDICATE and not as_predicate:
            self.report("predicate-position",
                        f"{node.function} is a predicate and only valid after '.'", path)
        if entry.kind is not FunctionKind.PREDICATE and as_predicate:
            self.report("chaining", f"{node.function} is not a predicate", path)
        self.check_args(node, entry, path)
        if node.predicates and not entry.chainable:
            self.report("chaining", f"{node.function} does not accept chained predicates", path)
        for i, p in enumerate(node.predicates):
            self.check(p, f"{path}.{i}/{p.function}", as_predicate=True)

    def check_args(self, node: LfNode, entry: CatalogEntry, path: str):
        name = node.function
        if entry.kind is FunctionKind.ENTITY:
            for a in node.args:
                if not isinstance(a, (Quoted, SpanRef)):
                    self.report("argument-kind",
                                f"argument of {name} must be a quoted value", path)
            return
        if entry.kind is FunctionKind.DEMOGRAPHIC:
            return  # arity 0 already enforced
        if entry.kind is FunctionKind.STRUCTURAL:
            for i, a in enumerate(node.args):
                kind = self.node_kind(a)
                if not isinstance(a, LfNode) or kind not in _EXPR_KINDS and kind is not None:
                    self.report("argument-kind",
                                f"argument {i} of {name} must be an expression", path)
                if isinstance(a, LfNode):
                    self.check(a, f"{path}/{i}/{a.function}", as_predicate=False)
            return
        if name == "val" or name == "unit":
            for a in node.args:
                if not isinstance(a, (Quoted, SpanRef)):
                    self.report("argument-kind", f"argument of {name} must be a quoted value", path)
            return
        if name == "op":
            for a in node.args:
                if not isinstance(a, Symbol) or a.name not in OPERATORS:
                    self.report("operator",
                                f"argument of op must be one of {', '.join(OPERATORS)}", path)
            return
        if name == "eq":
            shapes = ("op", "val")
            for i, a in enumerate(node.args):
                want = shapes[i] if i < len(shapes) else None
                if not isinstance(a, LfNode) or a.function != want:
                    self.report("argument-kind", "eq takes op then val", path)
                elif isinstance(a, LfNode):
                    self.check(a, f"{path}/{i}/{a.function}", as_predicate=False)
            return
        if name == "num_filter":
            args = list(node.args)
            tail_unit = (args and isinstance(args[-1], LfNode) and args[-1].function == "unit")
            body = args[:-1] if tail_unit else args
            if tail_unit:
                self.check(args[-1], f"{path}/{len(args) - 1}/unit", as_predicate=False)
            if not body:
                self.report("argument-kind", "num_filter needs at least one eq", path)
            for i, a in enumerate(body):
                if not isinstance(a, LfNode) or a.function != "eq":
                    self.report("argument-kind",
                                "num_filter arguments must be eq calls (plus optional trailing unit)",
                                path)
                else:
                    self.check(a, f"{path}/{i}/eq", as_predicate=False)
            return
        if name == "within":
            want = ("expression", "val", "unit")
            for i, a in enumerate(node.args):
                if i >= len(want):
                    break
                if want[i] == "expression":
                    if not isinstance(a, LfNode) or self.node_kind(a) not in _EXPR_KINDS:
                        self.report("argument-kind", "within's first argument must be an expression", path)
                    elif isinstance(a, LfNode):
                        self.check(a, f"{path}/{i}/{a.function}", as_predicate=False)
                else:
                    if not isinstance(a, LfNode) or a.function != want[i]:
                        self.report("argument-kind",
                                    f"within argument {i} must be {want[i]}", path)
                    else:
                        self.check(a, f"{path}/{i}/{want[i]}", as_predicate=False)
            return
        # generic predicates taking expression arguments: caused_by, treats,
        # affects, contraindication, before, after, if_then
        for i, a in enumerate(node.args):
            if not isinstance(a, LfNode) or self.node_kind(a) not in _EXPR_KINDS:
                self.report("argument-kind", f"argument {i} of {name} must be an expression", path)
            elif isinstance(a, LfNode):
                self.check(a, f"{path}/{i}/{a.function}", as_predicate=False)


def validate(node: LfNode, catalog: Optional[FunctionCatalog] = None) -> list[Diagnostic]:
    """Structural checks beyond syntax. Returns diagnostics; empty means valid."""
    v = _Validator(catalog or default_catalog())
    v.check(node, node.function, as_predicate=False)
    return v.diagnostics


# ---------------------------------------------------------------------------
# surface styles

class Style(Enum):
    STANDARD = "standard"
    SHIFT_REDUCE = "shift-reduce"
    SPAN_INDEX = "span-index"


def _parse_shift_reduce(text: str, catalog: FunctionCatalog) -> LfNode:
    stream = _TokenStream(tokenize(text))
    counter = [0]

    def expression() -> LfNode:
        node = call()
        predicates = []
        while (t := stream.peek()) is not None and t.kind is TokenKind.DOT:
            stream.next()
            predicates.append(call())
        if predicates:
            node = LfNode(node.function, node.args, tuple(predicates))
        return node

    def call() -> LfNode:
        stream.expect(TokenKind.LBRACKET)
        name_tok = stream.expect(TokenKind.IDENT)
        entry = catalog.get(name_tok.text)
        if entry is None:
            raise UnknownFunctionError(name_tok.text, name_tok.position)
        args: list[Arg] = []
        while True:
            t = stream.peek()
            if t is None:
                raise LfSyntaxError("]", "end of input", None)
            if t.kind is TokenKind.RBRACKET:
                raise LfSyntaxError(f"trailing name {name_tok.text!r}", "']'", t.position)
            if t.kind is TokenKind.IDENT:
                nxt = stream.peek(1)
                if nxt is not None and nxt.kind is TokenKind.RBRACKET:
                    if t.text != name_tok.text:
                        raise LfSyntaxError(f"trailing name {name_tok.text!r}",
                                            repr(t.text), t.position)
                    stream.next()
                    stream.next()
                    break
                if t.text.isupper():
                    stream.next()
                    args.append(Symbol(t.text))
                    continue
                raise LfSyntaxError("argument or trailing name", repr(t.text), t.position)
            if t.kind is TokenKind.STRING:
                stream.next()
                args.append(Quoted(t.value if t.value is not None else "",
                                   span_index=counter[0]))
                counter[0] += 1
                continue
            if t.kind is TokenKind.LBRACKET:
                args.append(expression())
                continue
            raise LfSyntaxError("argument or trailing name", repr(t.text), t.position)
        if not entry.arity_ok(len(args)):
            raise ArityError(entry.name, len(args), entry.min_arity, entry.max_arity,
                             name_tok.position)
        return LfNode(name_tok.text, tuple(args))

    node = expression()
    trailing = stream.peek()
    if trailing is not None:
        raise LfSyntaxError("end of input", repr(trailing.text), trailing.position)
    return node


def _render_shift_reduce(node: LfNode) -> str:
    parts = [node.function]
    for a in node.args:
        if isinstance(a, LfNode):
            parts.append(_render_shift_reduce(a))
        else:
            parts.append(_render_arg(a))
    head = "[" + " ".join(parts) + f" {node.function}]"
    return head + "".join("." + _render_shift_reduce(p) for p in node.predicates)


def _collect_spans(node: LfNode) -> list[str]:
    """Quoted texts in serialization order (which equals source order)."""
    spans: list[str] = []

    def visit(n: LfNode):
        for a in n.args:
            if isinstance(a, Quoted):
                spans.append(a.text)
            elif isinstance(a, LfNode):
                visit(a)
        for p in n.predicates:
            visit(p)

    visit(node)
    return spans


def _substitute(node: LfNode, table: Optional[list]) -> LfNode:
    """Replace SpanRef leaves with Quoted text from the span table."""

    def sub_arg(a: Arg) -> Arg:
        if isinstance(a, SpanRef):
            if table is None:
                raise MissingSpanTableError()
            if not 0 <= a.index < len(table):
                raise SpanIndexOutOfRangeError(a.index, len(table))
            return Quoted(str(table[a.index]), span_index=a.index)
        if isinstance(a, LfNode):
            return visit(a)
        return a

    def visit(n: LfNode) -> LfNode:
        return LfNode(n.function, tuple(sub_arg(a) for a in n.args),
                      tuple(visit(p) for p in n.predicates))

    return visit(node)


def _to_span_refs(node: LfNode) -> LfNode:
    """Replace Quoted leaves with sequential SpanRef placeholders."""
    counter = [0]

    def visit(n: LfNode) -> LfNode:
        new_args: list[Arg] = []
        for a in n.args:
            if isinstance(a, Quoted):
                new_args.append(SpanRef(counter[0]))
                counter[0] += 1
            elif isinstance(a, LfNode):
                new_args.append(visit(a))
            else:
                new_args.append(a)
        return LfNode(n.function, tuple(new_args), tuple(visit(p) for p in n.predicates))

    return visit(node)


def _has_span_refs(node: LfNode) -> bool:
    for n in walk(node):
        for a in n.args:
            if isinstance(a, SpanRef):
                return True
    return False


def convert_style(text: str, from_style: Style, to_style: Style,
                  span_table: Optional[list] = None,
                  catalog: Optional[FunctionCatalog] = None) -> str:
    """Convert criterion text between surface styles.

    Output is always the canonical compact rendering of the target style,
    so converting a style to itself canonicalizes whitespace. A span table
    (list of span texts, position k backing @k) is required whenever
    span-index input must be realized back into literal text.
    """
    cat = catalog or default_catalog()
    try:
        if from_style is Style.SHIFT_REDUCE:
            node = _parse_shift_reduce(text, cat)
        else:
            node = _Parser(tokenize(text), cat,
                           allow_span_refs=from_style is Style.SPAN_INDEX).parse()
    except (MissingSpanTableError, SpanIndexOutOfRangeError):
        raise
    except LfError as exc:
        raise MalformedStyleError(f"{from_style.value} input: {exc}", exc.position) from exc

    if to_style is Style.SPAN_INDEX:
        if not _has_span_refs(node):
            node = _to_span_refs(node)
        return _render(node)
    node = _substitute(node, span_table) if _has_span_refs(node) else node
    if to_style is Style.SHIFT_REDUCE:
        return _render_shift_reduce(node)
    return _render(node)


def span_table(text: str, catalog: Optional[FunctionCatalog] = None) -> list[str]:
    """Quoted spans of a standard-style criterion, in @-index order."""
    return _collect_spans(parse(text, catalog))


# ---------------------------------------------------------------------------
# criteria and annotation files

class Polarity(Enum):
    INCLUSION = "INC"
    EXCLUSION = "EXC"


@dataclass
class Criterion:
    """One eligibility criterion line with its annotation layers."""

    polarity: Polarity
    raw_text: str
    augmented_text: Optional[str] = None
    logical_form: Optional[LfNode] = None
    line_number: int = 1


def parse_annotation(text: str, catalog: Optional[FunctionCatalog] = None) -> Criterion:
    """Read the annotation layout: line 1 polarity (EXC/INC), line 3 raw
    text, line 5 augmented text, line 7 onward the logical form (which may
    be pretty-printed across lines). Lines 2, 4 and 6 are blank spacers.
    """
    lines = text.splitlines()
    if not lines:
        raise AnnotationFormatError("empty annotation", None)
    tag = lines[0].strip()
    try:
        polarity = Polarity(tag)
    except ValueError:
        raise AnnotationFormatError(
            f"line 1 must be EXC or INC, got {tag!r}", None) from None
    if len(lines) < 3 or not lines[2].strip():
        raise AnnotationFormatError("line 3 (raw text) missing", None)
    raw = lines[2].strip()
    augmented = lines[4].strip() if len(lines) > 4 and lines[4].strip() else None
    lf_text = "\n".join(lines[6:]).strip() if len(lines) > 6 else ""
    lf = parse(lf_text, catalog) if lf_text else None
    return Criterion(polarity, raw, augmented, lf)


def read_annotation(path, catalog: Optional[FunctionCatalog] = None) -> Criterion:
    with open(path, encoding="utf-8") as fh:
        return parse_annotation(fh.read(), catalog)


def format_annotation(criterion: Criterion) -> str:
    lines = [criterion.polarity.value, "", criterion.raw_text, "",
             criterion.augmented_text or "", ""]
    if criterion.logical_form is not None:
        lines.append(serialize(criterion.logical_form, pretty=True))
    return "\n".join(lines) + "\n"


def write_annotation(path, criterion: Criterion):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_annotation(criterion))
