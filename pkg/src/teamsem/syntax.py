"""Formula syntax trees, parser, printer and syntactic analyses.

Formulas are kept in Negation Normal Form: negation occurs only inside
literals, and dependency atoms, global disjunction and the possibility
operator are never negated.  The parser accepts `~` over flat subformulas
and pushes it down to literals; anything else is rejected.

Surface grammar (ASCII):

    formula   := gdisj
    gdisj     := tdisj ('<|>' tdisj)*
    tdisj     := conj ('|' conj)*
    conj      := unary ('&' unary)*
    unary     := 'E' var unary | 'A' var unary | '<>' unary
               | '~' unary | atom
    atom      := 'TT' | 'FF' | '(' formula ')'
               | Rel '(' var (',' var)* ')'          -- capitalised name
               | depname ['^' Pred] '(' group (';' group)* ')'
               | var '=' var | var '!=' var

Variables are lowercase identifiers; relation symbols start with an
uppercase letter; dependency names are the registered lowercase names
(`const`, `dep`, `inc`, ...) plus `fo:<name>` for user-defined ones.
Identifiers starting with `_` are reserved for generated fresh variables
and rejected in user input.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterator, Mapping

from .errors import ArityMismatchError, ParseError


# ---------------------------------------------------------------------------
# Tree node types
# ---------------------------------------------------------------------------

class Formula:
    """Base class for formula nodes; all nodes are immutable."""

    __slots__ = ()


@dataclass(frozen=True)
class Truth(Formula):
    """The constant TT, satisfied by every team."""


@dataclass(frozen=True)
class Falsum(Formula):
    """The constant FF, satisfied exactly by the empty team."""


@dataclass(frozen=True)
class RelationLiteral(Formula):
    name: str
    args: tuple[str, ...]
    positive: bool = True


@dataclass(frozen=True)
class EqualityLiteral(Formula):
    left: str
    right: str
    positive: bool = True


@dataclass(frozen=True)
class DependencyAtom(Formula):
    """An atom `name(g1 ; g2 ; ...)`, optionally relativized to a unary
    predicate (`name^P(...)`)."""

    name: str
    groups: tuple[tuple[str, ...], ...]
    relativizer: str | None = None

    @property
    def args(self) -> tuple[str, ...]:
        return tuple(v for g in self.groups for v in g)

    @property
    def widths(self) -> tuple[int, ...]:
        return tuple(len(g) for g in self.groups)


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class TensorOr(Formula):
    """Team-splitting disjunction (the `|` connective)."""

    left: Formula
    right: Formula


@dataclass(frozen=True)
class GlobalOr(Formula):
    """Global disjunction `<|>`: the whole team satisfies one disjunct."""

    left: Formula
    right: Formula


@dataclass(frozen=True)
class Exists(Formula):
    var: str
    body: Formula


@dataclass(frozen=True)
class Forall(Formula):
    var: str
    body: Formula


@dataclass(frozen=True)
class Possibly(Formula):
    """`<>`: some non-empty subteam satisfies the body."""

    body: Formula


# Shapes of the built-in dependency atoms the grammar knows about.
# Value: (number of groups, fixed widths or None, groups must be equal width).
_BUILTIN_SHAPES: dict[str, tuple[int, tuple[int, ...] | None, bool]] = {
    "const": (1, None, False),
    "nonconst": (1, None, False),
    "ne": (1, None, False),
    "all": (1, None, False),
    "u": (1, None, False),
    "neq1": (1, None, False),
    "dep": (2, None, False),
    "indep": (3, None, False),
    "inc": (2, None, True),
    "ninc": (2, None, True),
    "lo2": (1, (3,), False),
    "lo3": (1, (3,), False),
}

BUILTIN_ATOM_NAMES = frozenset(_BUILTIN_SHAPES)


# ---------------------------------------------------------------------------
# Tokenizer
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<gdisj><\|>)
  | (?P<diamond><>)
  | (?P<neq>!=)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*(:[A-Za-z_][A-Za-z0-9_]*)?)
  | (?P<punct>[()&|~=;,^])
""", re.VERBOSE)


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    pos: int


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", column=pos)
        kind = m.lastgroup or "punct"
        if kind == "ident" and m.group("ident") is None:
            kind = "punct"
        if kind != "ws":
            tokens.append(_Token(kind, m.group(0), pos))
        pos = m.end()
    tokens.append(_Token("eof", "", len(text)))
    return tokens


def _is_variable(name: str) -> bool:
    return name[0].islower() and ":" not in name


def _is_relation_symbol(name: str) -> bool:
    return name[0].isupper() and name not in ("E", "A", "TT", "FF")


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

class _Parser:
    def __init__(self, tokens: list[_Token], fo_names: frozenset[str] | None):
        self.tokens = tokens
        self.i = 0
        self.fo_names = fo_names

    def peek(self) -> _Token:
        return self.tokens[self.i]

    def next(self) -> _Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, text: str) -> _Token:
        tok = self.next()
        if tok.text != text:
            raise ParseError(f"expected {text!r}, found {tok.text or 'end of input'!r}",
                             column=tok.pos)
        return tok

    def fail(self, message: str) -> ParseError:
        return ParseError(message, column=self.peek().pos)

    # grammar levels -------------------------------------------------------

    def formula(self) -> Formula:
        node = self.tdisj()
        while self.peek().text == "<|>":
            self.next()
            node = GlobalOr(node, self.tdisj())
        return node

    def tdisj(self) -> Formula:
        node = self.conj()
        while self.peek().text == "|":
            self.next()
            node = TensorOr(node, self.conj())
        return node

    def conj(self) -> Formula:
        node = self.unary()
        while self.peek().text == "&":
            self.next()
            node = And(node, self.unary())
        return node

    def unary(self) -> Formula:
        tok = self.peek()
        if tok.text == "E" or tok.text == "A":
            self.next()
            var = self.variable()
            body = self.unary()
            return Exists(var, body) if tok.text == "E" else Forall(var, body)
        if tok.text == "<>":
            self.next()
            return Possibly(self.unary())
        if tok.text == "~":
            self.next()
            pos = tok.pos
            inner = self.unary()
            try:
                return negate_flat(inner)
            except ParseError as exc:
                raise ParseError(str(exc), column=pos) from None
        return self.atom()

    def variable(self) -> str:
        tok = self.next()
        if tok.kind != "ident" or not _is_variable(tok.text):
            raise ParseError(f"expected a variable, found {tok.text!r}", column=tok.pos)
        if tok.text.startswith("_"):
            raise ParseError(f"identifier {tok.text!r} is reserved for fresh variables",
                             column=tok.pos)
        return tok.text

    def atom(self) -> Formula:
        tok = self.peek()
        if tok.text == "(":
            self.next()
            node = self.formula()
            self.expect(")")
            return node
        if tok.text == "TT":
            self.next()
            return Truth()
        if tok.text == "FF":
            self.next()
            return Falsum()
        if tok.kind != "ident":
            raise self.fail(f"expected a formula, found {tok.text or 'end of input'!r}")
        name = self.next().text
        if name.startswith("_"):
            raise ParseError(f"identifier {name!r} is reserved for fresh variables",
                             column=tok.pos)
        if self.peek().text == "^" or (self.peek().text == "(" and not _is_relation_symbol(name)):
            return self.dependency_atom(name, tok.pos)
        if self.peek().text == "(":
            return self.relation_literal(name)
        # bare identifier: must start an (in)equality literal
        if not _is_variable(name):
            raise ParseError(f"unknown syntax near {name!r}", column=tok.pos)
        op = self.next()
        if op.text == "=":
            return EqualityLiteral(name, self.variable())
        if op.text == "!=":
            return EqualityLiteral(name, self.variable(), positive=False)
        raise ParseError(f"expected '=' or '!=' after {name!r}", column=op.pos)

    def relation_literal(self, name: str) -> Formula:
        self.expect("(")
        args = [self.variable()]
        while self.peek().text == ",":
            self.next()
            args.append(self.variable())
        self.expect(")")
        return RelationLiteral(name, tuple(args))

    def dependency_atom(self, name: str, pos: int) -> Formula:
        relativizer = None
        if self.peek().text == "^":
            self.next()
            rel_tok = self.next()
            if rel_tok.kind != "ident" or not _is_relation_symbol(rel_tok.text):
                raise ParseError("relativizer must be a predicate symbol", column=rel_tok.pos)
            relativizer = rel_tok.text
        self.expect("(")
        groups = [self.group()]
        while self.peek().text == ";":
            self.next()
            groups.append(self.group())
        self.expect(")")
        atom = DependencyAtom(name, tuple(groups), relativizer)
        self.check_shape(atom, pos)
        return atom

    def group(self) -> tuple[str, ...]:
        vars_ = [self.variable()]
        while self.peek().text == ",":
            self.next()
            vars_.append(self.variable())
        return tuple(vars_)

    def check_shape(self, atom: DependencyAtom, pos: int) -> None:
        name = atom.name
        if name.startswith("fo:"):
            if len(atom.groups) != 1:
                raise ParseError(f"{name} takes a single argument group", column=pos)
            if self.fo_names is not None and name[3:] not in self.fo_names:
                raise ParseError(f"unknown dependency {name!r}", column=pos)
            return
        shape = _BUILTIN_SHAPES.get(name)
        if shape is None:
            raise ParseError(f"unknown dependency {name!r}", column=pos)
        n_groups, fixed, equal = shape
        if len(atom.groups) != n_groups:
            raise ParseError(
                f"{name} takes {n_groups} argument group(s), got {len(atom.groups)}",
                column=pos)
        if fixed is not None and atom.widths != fixed:
            raise ParseError(
                f"{name} takes argument widths {fixed}, got {atom.widths}", column=pos)
        if equal and len(set(atom.widths)) != 1:
            raise ParseError(f"{name} needs argument groups of equal width", column=pos)


def parse(text: str, fo_names: frozenset[str] | None = None) -> Formula:
    """Parse formula text into an NNF tree.

    `fo_names`: names of registered FO-defined dependencies, used to
    validate `fo:<name>` atoms eagerly; when None the check is deferred
    to evaluation time.
    """
    parser = _Parser(_tokenize(text), fo_names)
    node = parser.formula()
    tok = parser.peek()
    if tok.kind != "eof":
        raise ParseError(f"trailing input {tok.text!r}", column=tok.pos)
    return node


# ---------------------------------------------------------------------------
# Negation (NNF push-down), printing, analyses
# ---------------------------------------------------------------------------

def negate_flat(formula: Formula) -> Formula:
    """Classical negation pushed to the literals.

    Only valid over flat subformulas; raises ParseError on dependency
    atoms, global disjunction and the possibility operator, which have no
    NNF negation.
    """
    if isinstance(formula, Truth):
        return Falsum()
    if isinstance(formula, Falsum):
        return Truth()
    if isinstance(formula, RelationLiteral):
        return RelationLiteral(formula.name, formula.args, not formula.positive)
    if isinstance(formula, EqualityLiteral):
        return EqualityLiteral(formula.left, formula.right, not formula.positive)
    if isinstance(formula, And):
        return TensorOr(negate_flat(formula.left), negate_flat(formula.right))
    if isinstance(formula, TensorOr):
        return And(negate_flat(formula.left), negate_flat(formula.right))
    if isinstance(formula, Exists):
        return Forall(formula.var, negate_flat(formula.body))
    if isinstance(formula, Forall):
        return Exists(formula.var, negate_flat(formula.body))
    if isinstance(formula, DependencyAtom):
        raise ParseError("negation over dependency atom is not NNF-expressible")
    if isinstance(formula, GlobalOr):
        raise ParseError("negation over global disjunction is not NNF-expressible")
    if isinstance(formula, Possibly):
        raise ParseError("negation over possibility operator is not NNF-expressible")
    raise TypeError(f"unknown formula node {formula!r}")


_PRECEDENCE = {GlobalOr: 1, TensorOr: 2, And: 3}


def _render(formula: Formula, parent_prec: int) -> str:
    if isinstance(formula, Truth):
        return "TT"
    if isinstance(formula, Falsum):
        return "FF"
    if isinstance(formula, RelationLiteral):
        body = f"{formula.name}({','.join(formula.args)})"
        return body if formula.positive else "~" + body
    if isinstance(formula, EqualityLiteral):
        op = "=" if formula.positive else "!="
        return f"{formula.left} {op} {formula.right}"
    if isinstance(formula, DependencyAtom):
        name = formula.name
        if formula.relativizer is not None:
            name += f"^{formula.relativizer}"
        groups = " ; ".join(",".join(g) for g in formula.groups)
        return f"{name}({groups})"
    if isinstance(formula, (Exists, Forall)):
        quant = "E" if isinstance(formula, Exists) else "A"
        return f"{quant} {formula.var} {_render_tight(formula.body)}"
    if isinstance(formula, Possibly):
        return f"<> {_render_tight(formula.body)}"
    prec = _PRECEDENCE[type(formula)]
    op = {GlobalOr: "<|>", TensorOr: "|", And: "&"}[type(formula)]
    left = _render(formula.left, prec)          # type: ignore[attr-defined]
    right = _render(formula.right, prec + 1)    # type: ignore[attr-defined]
    text = f"{left} {op} {right}"
    return f"({text})" if prec < parent_prec else text


def _render_tight(body: Formula) -> str:
    # quantifiers and <> bind their immediate subformula
    if isinstance(body, (And, TensorOr, GlobalOr)):
        return "(" + _render(body, 0) + ")"
    return _render(body, 0)


def to_text(formula: Formula) -> str:
    """Render a formula; `parse(to_text(f))` is structurally `f`."""
    return _render(formula, 0)


def children(formula: Formula) -> tuple[Formula, ...]:
    if isinstance(formula, (And, TensorOr, GlobalOr)):
        return (formula.left, formula.right)
    if isinstance(formula, (Exists, Forall)):
        return (formula.body,)
    if isinstance(formula, Possibly):
        return (formula.body,)
    return ()


def subformulas(formula: Formula) -> Iterator[Formula]:
    """Pre-order traversal, the node itself included."""
    yield formula
    for child in children(formula):
        yield from subformulas(child)


def free_variables(formula: Formula) -> frozenset[str]:
    if isinstance(formula, (Truth, Falsum)):
        return frozenset()
    if isinstance(formula, RelationLiteral):
        return frozenset(formula.args)
    if isinstance(formula, EqualityLiteral):
        return frozenset((formula.left, formula.right))
    if isinstance(formula, DependencyAtom):
        return frozenset(formula.args)
    if isinstance(formula, (And, TensorOr, GlobalOr)):
        return free_variables(formula.left) | free_variables(formula.right)
    if isinstance(formula, (Exists, Forall)):
        return free_variables(formula.body) - {formula.var}
    if isinstance(formula, Possibly):
        return free_variables(formula.body)
    raise TypeError(f"unknown formula node {formula!r}")


def all_variables(formula: Formula) -> frozenset[str]:
    """Free and bound variables together (for fresh-name generation)."""
    out: set[str] = set()
    for node in subformulas(formula):
        if isinstance(node, RelationLiteral):
            out.update(node.args)
        elif isinstance(node, EqualityLiteral):
            out.update((node.left, node.right))
        elif isinstance(node, DependencyAtom):
            out.update(node.args)
        elif isinstance(node, (Exists, Forall)):
            out.add(node.var)
    return frozenset(out)


def relation_symbols(formula: Formula) -> dict[str, int]:
    """Relation symbols with their arities, relativizer predicates included."""
    out: dict[str, int] = {}
    for node in subformulas(formula):
        if isinstance(node, RelationLiteral):
            prior = out.setdefault(node.name, len(node.args))
            if prior != len(node.args):
                raise ArityMismatchError(
                    f"relation {node.name} used with arities {prior} and {len(node.args)}")
        elif isinstance(node, DependencyAtom) and node.relativizer is not None:
            prior = out.setdefault(node.relativizer, 1)
            if prior != 1:
                raise ArityMismatchError(
                    f"relativizer {node.relativizer} must be unary")
    return out


def dependency_atoms(formula: Formula) -> Iterator[DependencyAtom]:
    for node in subformulas(formula):
        if isinstance(node, DependencyAtom):
            yield node


def is_flat(formula: Formula) -> bool:
    """True when the formula is plain first order: no dependency atoms,
    no global disjunction, no possibility operator."""
    return not any(
        isinstance(node, (DependencyAtom, GlobalOr, Possibly))
        for node in subformulas(formula))


@dataclass(frozen=True)
class SyntacticFlags:
    """Closure information derived from a formula's atoms.

    The atom flags hold vacuously for flat formulas; they are read off the
    registry's verified per-dependency closure flags, never guessed.
    """

    is_flat: bool
    atoms_downwards_closed: bool
    atoms_union_closed: bool
    atoms_empty_team: bool
    occurring_dependencies: frozenset[str] = field(default_factory=frozenset)


def flags(formula: Formula, registry) -> SyntacticFlags:
    """Compute SyntacticFlags against a dependency registry.

    Relativized atoms inherit downwards/union closure from the underlying
    dependency but never the empty team property (the relativizing
    predicate may be empty).
    """
    flat = True
    down = True
    union = True
    etp = True
    names: set[str] = set()
    for node in subformulas(formula):
        if isinstance(node, (GlobalOr, Possibly)):
            flat = False
        elif isinstance(node, DependencyAtom):
            flat = False
            dep = registry.resolve(node)
            names.add(dep.name)
            down &= dep.downwards
            union &= dep.union
            etp &= dep.empty_team if node.relativizer is None else False
    return SyntacticFlags(flat, down, union, etp, frozenset(names))
