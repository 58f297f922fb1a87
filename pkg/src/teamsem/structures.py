"""Finite relational structures and classical (Tarskian) evaluation.

Universe elements are canonical integers 0..n-1; labels are surface syntax
only.  Relations are bitsets over the tuple index space: a k-tuple maps to
its big-endian mixed-radix integer, so lexicographic tuple order equals
numeric index order and subset tests are single mask comparisons.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping

from . import syntax
from .budget import DEFAULT_RELATION_BITS
from .errors import (ArityMismatchError, BindingError, NotFlatError,
                     ParseError, ResourceExhausted)

Assignment = Mapping[str, int]


def tuple_index(t: tuple[int, ...], n: int) -> int:
    idx = 0
    for v in t:
        idx = idx * n + v
    return idx


def index_tuple(idx: int, arity: int, n: int) -> tuple[int, ...]:
    out = [0] * arity
    for i in range(arity - 1, -1, -1):
        idx, out[i] = divmod(idx, n)
    return tuple(out)


@dataclass(frozen=True)
class Relation:
    """A set of arity-length tuples over universe 0..universe_size-1."""

    universe_size: int
    arity: int
    mask: int = 0

    def __post_init__(self):
        if self.arity < 1:
            raise ArityMismatchError("relations must have arity >= 1")
        if self.universe_size < 1:
            raise ValueError("universe must be non-empty")
        if self.mask < 0 or self.mask >> (self.universe_size ** self.arity):
            raise BindingError("relation bitset exceeds the tuple space")

    @classmethod
    def from_tuples(cls, universe_size: int, arity: int,
                    tuples: Iterable[tuple[int, ...]]) -> Relation:
        mask = 0
        for t in tuples:
            if len(t) != arity:
                raise ArityMismatchError(f"tuple {t} does not have arity {arity}")
            if any(not (0 <= v < universe_size) for v in t):
                raise BindingError(f"tuple {t} has elements outside the universe")
            mask |= 1 << tuple_index(t, universe_size)
        return cls(universe_size, arity, mask)

    @classmethod
    def empty(cls, universe_size: int, arity: int) -> Relation:
        return cls(universe_size, arity, 0)

    @classmethod
    def full(cls, universe_size: int, arity: int) -> Relation:
        return cls(universe_size, arity, (1 << universe_size ** arity) - 1)

    def __len__(self) -> int:
        return self.mask.bit_count()

    def __bool__(self) -> bool:
        return self.mask != 0

    def __contains__(self, t: tuple[int, ...]) -> bool:
        if len(t) != self.arity or any(not (0 <= v < self.universe_size) for v in t):
            return False
        return bool(self.mask >> tuple_index(t, self.universe_size) & 1)

    def tuples(self) -> tuple[tuple[int, ...], ...]:
        """All tuples in lexicographic order."""
        n, mask, out = self.universe_size, self.mask, []
        while mask:
            low = mask & -mask
            out.append(index_tuple(low.bit_length() - 1, self.arity, n))
            mask ^= low
        return tuple(out)

    def __iter__(self) -> Iterator[tuple[int, ...]]:
        return iter(self.tuples())

    def _check_compatible(self, other: Relation) -> None:
        if (self.universe_size, self.arity) != (other.universe_size, other.arity):
            raise ArityMismatchError("relations over different tuple spaces")

    def issubset(self, other: Relation) -> bool:
        self._check_compatible(other)
        return self.mask & ~other.mask == 0

    def union(self, other: Relation) -> Relation:
        self._check_compatible(other)
        return Relation(self.universe_size, self.arity, self.mask | other.mask)

    def with_tuple(self, t: tuple[int, ...]) -> Relation:
        return self.union(Relation.from_tuples(self.universe_size, self.arity, [t]))

    def proper_supersets(self) -> Iterator[Relation]:
        """All S with self ⊊ S, by ascending added-tuple bit pattern."""
        space = self.universe_size ** self.arity
        free = ((1 << space) - 1) & ~self.mask
        extra = (0 - free) & free  # smallest non-empty submask of free
        while extra:
            yield Relation(self.universe_size, self.arity, self.mask | extra)
            extra = (extra - free) & free

    def subsets(self) -> Iterator[Relation]:
        """All S ⊆ self, the empty relation first, self last."""
        sub = 0
        while True:
            yield Relation(self.universe_size, self.arity, sub)
            sub = (sub - self.mask) & self.mask
            if sub == 0:
                return

    def project(self, positions: tuple[int, ...]) -> frozenset[tuple[int, ...]]:
        return frozenset(tuple(t[i] for i in positions) for t in self.tuples())


def enumerate_relations(universe_size: int, arity: int, include_empty: bool = True,
                        max_bits: int = DEFAULT_RELATION_BITS) -> Iterator[Relation]:
    """Yield every subset of universe^arity exactly once, ordered by the
    characteristic bit pattern (so the empty relation comes first)."""
    if universe_size < 1 or arity < 1:
        raise ValueError("universe_size and arity must be >= 1")
    bits = universe_size ** arity
    if bits > max_bits:
        raise ResourceExhausted(
            f"relation space 2^{bits} exceeds the 2^{max_bits} enumeration budget")
    start = 0 if include_empty else 1
    for mask in range(start, 1 << bits):
        yield Relation(universe_size, arity, mask)


@dataclass(frozen=True)
class Signature:
    """Relation symbols with arities; names unique, arities >= 1."""

    symbols: tuple[tuple[str, int], ...]

    def __post_init__(self):
        names = [name for name, _ in self.symbols]
        if len(set(names)) != len(names):
            raise ValueError("duplicate relation symbol")
        for name, arity in self.symbols:
            if arity < 1:
                raise ArityMismatchError(f"symbol {name} has arity {arity}; 0-ary "
                                         "relations are not supported")

    def arity(self, name: str) -> int:
        for sym, arity in self.symbols:
            if sym == name:
                return arity
        raise KeyError(name)

    def as_dict(self) -> dict[str, int]:
        return dict(self.symbols)


class Structure:
    """A finite structure: universe 0..size-1 plus named relations.

    Immutable after construction.  Universes of size < 2 are rejected
    unless `allow_small` is set; the two-element minimum is what the
    global-disjunction encoding and the E construction rely on.
    """

    __slots__ = ("size", "relations", "labels")

    def __init__(self, size: int, relations: Mapping[str, Relation] | None = None,
                 labels: tuple[str, ...] | None = None, allow_small: bool = False):
        if size < 1:
            raise ValueError("universe must be non-empty")
        if size < 2 and not allow_small:
            raise ValueError("universe has fewer than two elements "
                             "(pass allow_small=True to permit this)")
        if labels is not None:
            if len(labels) != size or len(set(labels)) != size:
                raise ParseError("labels must be distinct and match the universe size")
        rels = dict(relations or {})
        for name, rel in rels.items():
            if rel.universe_size != size:
                raise BindingError(f"relation {name} is over a different universe")
        self.size = size
        self.relations = rels
        self.labels = labels

    def __eq__(self, other) -> bool:
        return (isinstance(other, Structure) and self.size == other.size
                and self.relations == other.relations)

    def __repr__(self) -> str:
        rels = ", ".join(f"{k}/{v.arity}" for k, v in sorted(self.relations.items()))
        return f"Structure(size={self.size}, rels=[{rels}])"

    def universe(self) -> range:
        return range(self.size)

    def signature(self) -> Signature:
        return Signature(tuple(sorted((k, v.arity) for k, v in self.relations.items())))

    def relation(self, name: str) -> Relation:
        try:
            return self.relations[name]
        except KeyError:
            raise BindingError(f"structure has no relation {name!r}") from None

    def with_relation(self, name: str, rel: Relation) -> Structure:
        rels = dict(self.relations)
        rels[name] = rel
        return Structure(self.size, rels, self.labels, allow_small=self.size < 2)

    def label_of(self, element: int) -> str:
        return self.labels[element] if self.labels else str(element)


# ---------------------------------------------------------------------------
# Tarskian evaluation
# ---------------------------------------------------------------------------

def tarski_eval(structure: Structure, assignment: Assignment,
                formula: syntax.Formula) -> bool:
    """Classical satisfaction for first order (flat) formulas.

    Raises NotFlatError on dependency atoms, global disjunction or the
    possibility operator, and BindingError on unbound free variables.
    """
    if isinstance(formula, syntax.Truth):
        return True
    if isinstance(formula, syntax.Falsum):
        return False
    if isinstance(formula, syntax.RelationLiteral):
        rel = structure.relation(formula.name)
        if rel.arity != len(formula.args):
            raise ArityMismatchError(
                f"relation {formula.name} has arity {rel.arity}, "
                f"applied to {len(formula.args)} arguments")
        t = tuple(_lookup(assignment, v) for v in formula.args)
        return (t in rel) == formula.positive
    if isinstance(formula, syntax.EqualityLiteral):
        same = _lookup(assignment, formula.left) == _lookup(assignment, formula.right)
        return same == formula.positive
    if isinstance(formula, syntax.And):
        return (tarski_eval(structure, assignment, formula.left)
                and tarski_eval(structure, assignment, formula.right))
    if isinstance(formula, syntax.TensorOr):
        return (tarski_eval(structure, assignment, formula.left)
                or tarski_eval(structure, assignment, formula.right))
    if isinstance(formula, syntax.Exists):
        return any(tarski_eval(structure, {**assignment, formula.var: m}, formula.body)
                   for m in structure.universe())
    if isinstance(formula, syntax.Forall):
        return all(tarski_eval(structure, {**assignment, formula.var: m}, formula.body)
                   for m in structure.universe())
    raise NotFlatError(f"{type(formula).__name__} is not a first order construct")


def _lookup(assignment: Assignment, var: str) -> int:
    try:
        return assignment[var]
    except KeyError:
        raise BindingError(f"variable {var!r} is not bound") from None


# ---------------------------------------------------------------------------
# Model files
# ---------------------------------------------------------------------------

def _parse_element(token: str, structure_size: int,
                   label_map: Mapping[str, int] | None, lineno: int) -> int:
    token = token.strip()
    if label_map is not None:
        if token not in label_map:
            raise ParseError(f"unknown element label {token!r}", line=lineno)
        return label_map[token]
    try:
        value = int(token)
    except ValueError:
        raise ParseError(f"element {token!r} is not an integer "
                         "(this model has a numeric universe)", line=lineno) from None
    if not (0 <= value < structure_size):
        raise ParseError(f"element {value} outside universe of size {structure_size}",
                         line=lineno)
    return value


def _split_tuples(body: str, lineno: int) -> list[str]:
    """Split '{(0,1), (1,0)}' or '{a, b}' into tuple chunks."""
    body = body.strip()
    if not (body.startswith("{") and body.endswith("}")):
        raise ParseError("relation body must be enclosed in { }", line=lineno)
    inner = body[1:-1].strip()
    if not inner:
        return []
    chunks, depth, cur = [], 0, []
    for ch in inner:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth < 0:
                raise ParseError("unbalanced parentheses in relation body", line=lineno)
        if ch == "," and depth == 0:
            chunks.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    if depth != 0:
        raise ParseError("unbalanced parentheses in relation body", line=lineno)
    chunks.append("".join(cur))
    return [c.strip() for c in chunks]


def load_structure(text: str, allow_small: bool = False) -> Structure:
    """Parse a model file (see the README for the grammar)."""
    size: int | None = None
    labels: tuple[str, ...] | None = None
    label_map: dict[str, int] | None = None
    relations: dict[str, Relation] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if size is None:
            if not line.startswith("universe"):
                raise ParseError("first non-comment line must declare the universe",
                                 line=lineno)
            _, _, rhs = line.partition("=")
            rhs = rhs.strip()
            if not rhs:
                raise ParseError("empty universe declaration", line=lineno)
            if rhs.isdigit():
                size = int(rhs)
            else:
                labels = tuple(tok.strip() for tok in rhs.split(","))
                if any(not lab for lab in labels):
                    raise ParseError("empty label in universe declaration", line=lineno)
                size = len(labels)
                label_map = {lab: i for i, lab in enumerate(labels)}
                if len(label_map) != size:
                    raise ParseError("duplicate label in universe declaration", line=lineno)
            if size < 1:
                raise ParseError("universe must be non-empty", line=lineno)
            continue
        if line.startswith("universe"):
            raise ParseError("duplicate universe declaration", line=lineno)
        if not line.startswith("rel "):
            raise ParseError(f"unrecognized line {line!r}", line=lineno)
        head, _, body = line[4:].partition("=")
        name, _, arity_text = head.strip().partition("/")
        name = name.strip()
        if not name or not arity_text.strip().isdigit():
            raise ParseError("relation head must look like 'rel Name/arity'", line=lineno)
        arity = int(arity_text)
        if arity < 1:
            raise ParseError("relation arity must be >= 1", line=lineno)
        if name in relations:
            raise ParseError(f"duplicate relation {name!r}", line=lineno)
        tuples = []
        for chunk in _split_tuples(body, lineno):
            if chunk.startswith("(") and chunk.endswith(")"):
                parts = chunk[1:-1].split(",")
            else:
                parts = [chunk]
            if len(parts) != arity:
                raise ParseError(f"tuple {chunk!r} does not have arity {arity}",
                                 line=lineno)
            tuples.append(tuple(_parse_element(p, size, label_map, lineno)
                                for p in parts))
        relations[name] = Relation.from_tuples(size, arity, tuples)
    if size is None:
        raise ParseError("model file declares no universe")
    return Structure(size, relations, labels, allow_small=allow_small)


def print_structure(structure: Structure) -> str:
    """Canonical model-file text; load_structure inverts it."""
    if structure.labels is not None:
        lines = ["universe = " + ",".join(structure.labels)]
    else:
        lines = [f"universe = {structure.size}"]
    for name in sorted(structure.relations):
        rel = structure.relations[name]
        rendered = []
        for t in rel.tuples():
            labels = [structure.label_of(v) for v in t]
            rendered.append(labels[0] if rel.arity == 1 else "(" + ",".join(labels) + ")")
        lines.append(f"rel {name}/{rel.arity} = {{{', '.join(rendered)}}}")
    return "\n".join(lines) + "\n"


def all_structures(signature: Mapping[str, int], size: int,
                   max_bits: int = DEFAULT_RELATION_BITS,
                   allow_small: bool = False) -> Iterator[Structure]:
    """Every structure of the given size over the signature, in a fixed
    order (product of per-symbol bitset enumerations, symbols sorted)."""
    names = sorted(signature)
    streams = [enumerate_relations(size, signature[name], max_bits=max_bits)
               for name in names]
    for combo in itertools.product(*streams):
        yield Structure(size, dict(zip(names, combo)), allow_small=allow_small)


def count_structures(signature: Mapping[str, int], size: int) -> int:
    total = 1
    for arity in signature.values():
        total *= 1 << (size ** arity)
    return total
