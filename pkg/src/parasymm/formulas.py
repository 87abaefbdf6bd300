"""Vocabularies, terms and quantifier-free formulas.

Everything here is immutable and hashable.  Formulas are plain trees over a
small set of atom kinds:

* ``Atom``     -- a predicate applied to terms (structure predicates as well as
  automaton predicates; the two are told apart by the predicate name set the
  caller supplies, not by the object itself),
* ``Eq``       -- term equality,
* ``DataAtom`` -- ``mu(t) = value``, used by assertions and invariant bodies,
* ``LocAtom``  -- ``loc(t) = location``, used by extended assertions.

``mu`` and ``loc`` are reserved symbol names.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Optional, Union

CLOSURE_DEPTH_BOUND = 64

RESERVED_SYMBOLS = frozenset({"mu", "loc", "and", "or", "not", "true", "false", "distinct"})


class FormulaError(Exception):
    pass


@dataclass(frozen=True)
class Vocabulary:
    """Predicate and function symbols with arities (constants are 0-ary functions)."""

    predicates: tuple[tuple[str, int], ...]
    functions: tuple[tuple[str, int], ...]

    def __post_init__(self):
        names = [n for n, _ in self.predicates] + [n for n, _ in self.functions]
        if len(set(names)) != len(names):
            raise FormulaError("vocabulary symbol names must be unique")
        bad = set(names) & RESERVED_SYMBOLS
        if bad:
            raise FormulaError(f"reserved symbol names used in vocabulary: {sorted(bad)}")

    @property
    def predicate_arity(self) -> dict[str, int]:
        return dict(self.predicates)

    @property
    def function_arity(self) -> dict[str, int]:
        return dict(self.functions)


# ---------------------------------------------------------------------------
# Terms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Apply:
    fn: str
    args: tuple["Term", ...] = ()


@dataclass(frozen=True)
class NodeConst:
    """A concrete node of a structure, embedded in a term position."""

    node: object


Term = Union[Var, Apply, NodeConst]


def term_vars(t: Term) -> set[str]:
    if isinstance(t, Var):
        return {t.name}
    if isinstance(t, Apply):
        out: set[str] = set()
        for a in t.args:
            out |= term_vars(a)
        return out
    return set()


def term_height(t: Term) -> int:
    if isinstance(t, Apply) and t.args:
        return 1 + max(term_height(a) for a in t.args)
    return 0 if not isinstance(t, Apply) else 1


def subst_term(t: Term, sigma: Mapping[str, Term]) -> Term:
    if isinstance(t, Var):
        return sigma.get(t.name, t)
    if isinstance(t, Apply):
        return Apply(t.fn, tuple(subst_term(a, sigma) for a in t.args))
    return t


# ---------------------------------------------------------------------------
# Formulas
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Top:
    pass


@dataclass(frozen=True)
class Bottom:
    pass


@dataclass(frozen=True)
class Atom:
    pred: str
    args: tuple[Term, ...] = ()


@dataclass(frozen=True)
class Eq:
    left: Term
    right: Term


@dataclass(frozen=True)
class DataAtom:
    term: Term
    value: int


@dataclass(frozen=True)
class LocAtom:
    term: Term
    location: str


@dataclass(frozen=True)
class Not:
    arg: "Formula"


@dataclass(frozen=True)
class And:
    args: tuple["Formula", ...]


@dataclass(frozen=True)
class Or:
    args: tuple["Formula", ...]


Formula = Union[Top, Bottom, Atom, Eq, DataAtom, LocAtom, Not, And, Or]

TRUE = Top()
FALSE = Bottom()

AtomLike = (Atom, Eq, DataAtom, LocAtom)


def conj(args: Iterable[Formula]) -> Formula:
    """Flattening conjunction with unit/absorbing simplification."""
    out: list[Formula] = []
    for a in args:
        if isinstance(a, Bottom):
            return FALSE
        if isinstance(a, Top):
            continue
        if isinstance(a, And):
            out.extend(a.args)
        else:
            out.append(a)
    seen: list[Formula] = []
    for a in out:
        if a not in seen:
            seen.append(a)
    if not seen:
        return TRUE
    if len(seen) == 1:
        return seen[0]
    return And(tuple(seen))


def disj(args: Iterable[Formula]) -> Formula:
    out: list[Formula] = []
    for a in args:
        if isinstance(a, Top):
            return TRUE
        if isinstance(a, Bottom):
            continue
        if isinstance(a, Or):
            out.extend(a.args)
        else:
            out.append(a)
    seen: list[Formula] = []
    for a in out:
        if a not in seen:
            seen.append(a)
    if not seen:
        return FALSE
    if len(seen) == 1:
        return seen[0]
    return Or(tuple(seen))


def neg(f: Formula) -> Formula:
    if isinstance(f, Top):
        return FALSE
    if isinstance(f, Bottom):
        return TRUE
    if isinstance(f, Not):
        return f.arg
    return Not(f)


def formula_vars(f: Formula) -> set[str]:
    if isinstance(f, (Top, Bottom)):
        return set()
    if isinstance(f, Atom):
        out: set[str] = set()
        for t in f.args:
            out |= term_vars(t)
        return out
    if isinstance(f, Eq):
        return term_vars(f.left) | term_vars(f.right)
    if isinstance(f, (DataAtom, LocAtom)):
        return term_vars(f.term)
    if isinstance(f, Not):
        return formula_vars(f.arg)
    return set().union(*(formula_vars(a) for a in f.args)) if f.args else set()


def formula_nodes(f: Formula) -> list:
    """Nodes occurring in the formula, in first-occurrence order."""
    out: list = []

    def walk_term(t: Term):
        if isinstance(t, NodeConst):
            if t.node not in out:
                out.append(t.node)
        elif isinstance(t, Apply):
            for a in t.args:
                walk_term(a)

    def walk(g: Formula):
        if isinstance(g, Atom):
            for t in g.args:
                walk_term(t)
        elif isinstance(g, Eq):
            walk_term(g.left)
            walk_term(g.right)
        elif isinstance(g, (DataAtom, LocAtom)):
            walk_term(g.term)
        elif isinstance(g, Not):
            walk(g.arg)
        elif isinstance(g, (And, Or)):
            for a in g.args:
                walk(a)

    walk(f)
    return out


def substitute(f: Formula, sigma: Mapping[str, Term]) -> Formula:
    """Simultaneous substitution of terms for variables."""
    if isinstance(f, (Top, Bottom)):
        return f
    if isinstance(f, Atom):
        return Atom(f.pred, tuple(subst_term(t, sigma) for t in f.args))
    if isinstance(f, Eq):
        return Eq(subst_term(f.left, sigma), subst_term(f.right, sigma))
    if isinstance(f, DataAtom):
        return DataAtom(subst_term(f.term, sigma), f.value)
    if isinstance(f, LocAtom):
        return LocAtom(subst_term(f.term, sigma), f.location)
    if isinstance(f, Not):
        return Not(substitute(f.arg, sigma))
    if isinstance(f, And):
        return And(tuple(substitute(a, sigma) for a in f.args))
    return Or(tuple(substitute(a, sigma) for a in f.args))


def is_positive_in(f: Formula, q_names: Iterable[str]) -> bool:
    """True iff every occurrence of a predicate from q_names is positive."""
    qn = set(q_names)

    def walk(g: Formula, pos: bool) -> bool:
        if isinstance(g, Atom) and g.pred in qn:
            return pos
        if isinstance(g, Not):
            return walk(g.arg, not pos)
        if isinstance(g, (And, Or)):
            return all(walk(a, pos) for a in g.args)
        return True

    return walk(f, True)


def nnf(f: Formula) -> Formula:
    """Negation normal form; negations end up only on atoms."""
    if isinstance(f, Not):
        g = f.arg
        if isinstance(g, Top):
            return FALSE
        if isinstance(g, Bottom):
            return TRUE
        if isinstance(g, Not):
            return nnf(g.arg)
        if isinstance(g, And):
            return disj([nnf(Not(a)) for a in g.args])
        if isinstance(g, Or):
            return conj([nnf(Not(a)) for a in g.args])
        return f
    if isinstance(f, And):
        return conj([nnf(a) for a in f.args])
    if isinstance(f, Or):
        return disj([nnf(a) for a in f.args])
    return f


# Cubes are frozensets of literals; a literal is an atom or Not(atom).
Cube = frozenset


def literal_key(lit: Formula):
    neg_flag, atom = (1, lit.arg) if isinstance(lit, Not) else (0, lit)
    return (format_formula(atom), neg_flag)


def cube_key(c: Cube):
    return (len(c), tuple(sorted(literal_key(l) for l in c)))


def to_dnf(f: Formula, q_names: Iterable[str] = ()) -> list[Cube]:
    """Cubes of the disjunctive normal form of ``f``.

    Requires every predicate from ``q_names`` to occur positively.  Bottom
    yields no cubes, Top a single empty cube.  Cubes are deduplicated and
    canonically ordered.
    """
    if not is_positive_in(f, q_names):
        raise FormulaError("negative occurrence of an automaton predicate")
    g = nnf(f)

    def walk(h: Formula) -> list[frozenset]:
        if isinstance(h, Bottom):
            return []
        if isinstance(h, Top):
            return [frozenset()]
        if isinstance(h, Or):
            out = []
            for a in h.args:
                out.extend(walk(a))
            return out
        if isinstance(h, And):
            cubes = [frozenset()]
            for a in h.args:
                sub = walk(a)
                cubes = [c | d for c in cubes for d in sub]
                if not cubes:
                    return []
            return cubes
        # literal
        return [frozenset([h])]

    cubes = walk(g)
    out: list[Cube] = []
    seen = set()
    for c in cubes:
        if c not in seen:
            seen.add(c)
            out.append(c)
    out.sort(key=cube_key)
    return out


def dualize(f: Formula, renaming: Mapping[str, str]) -> Formula:
    """Syntactic negation with renamed duals standing in for negated q-atoms.

    ``renaming`` maps each automaton predicate to its dual name.  The result is
    positive in the dual names and semantically equivalent to ``Not(f)`` when
    each dual atom is interpreted as the negation of its source atom.
    """
    if not is_positive_in(f, renaming.keys()):
        raise FormulaError("dualize requires a positive formula")

    def walk(g: Formula) -> Formula:
        # returns the dual (negation) of g
        if isinstance(g, Top):
            return FALSE
        if isinstance(g, Bottom):
            return TRUE
        if isinstance(g, Atom) and g.pred in renaming:
            return Atom(renaming[g.pred], g.args)
        if isinstance(g, AtomLike):
            return Not(g)
        if isinstance(g, Not):
            return nnf(g.arg)
        if isinstance(g, And):
            return disj([walk(a) for a in g.args])
        return conj([walk(a) for a in g.args])

    return walk(nnf(f))


# ---------------------------------------------------------------------------
# Ground evaluation
# ---------------------------------------------------------------------------

def eval_term(t: Term, structure, env: Optional[Mapping[str, object]] = None, _depth: int = 0):
    """Evaluate a term to a node of ``structure``."""
    if _depth > CLOSURE_DEPTH_BOUND:
        raise FormulaError("term evaluation exceeded the closure depth bound")
    if isinstance(t, Var):
        if env is None or t.name not in env:
            raise FormulaError(f"unbound variable {t.name}")
        return env[t.name]
    if isinstance(t, NodeConst):
        if not structure.contains(t.node):
            raise FormulaError(f"node {t.node!r} not in the carrier of {structure.name}")
        return t.node
    args = tuple(eval_term(a, structure, env, _depth + 1) for a in t.args)
    return structure.apply_fn(t.fn, args)


def eval_ground(f: Formula, structure, env: Optional[Mapping[str, object]] = None) -> bool:
    """Truth value of a formula without automaton/data/location atoms."""
    if isinstance(f, Top):
        return True
    if isinstance(f, Bottom):
        return False
    if isinstance(f, Atom):
        args = tuple(eval_term(t, structure, env) for t in f.args)
        return structure.holds(f.pred, args)
    if isinstance(f, Eq):
        return eval_term(f.left, structure, env) == eval_term(f.right, structure, env)
    if isinstance(f, (DataAtom, LocAtom)):
        raise FormulaError("data/location atoms have no interpretation in a bare structure")
    if isinstance(f, Not):
        return not eval_ground(f.arg, structure, env)
    if isinstance(f, And):
        return all(eval_ground(a, structure, env) for a in f.args)
    return any(eval_ground(a, structure, env) for a in f.args)


# ---------------------------------------------------------------------------
# Text syntax: prefix operators, atoms p(t1,...) written (p t1 ...),
# node constants #<encoding>.  Not a stability-guaranteed format except where
# the file schemas pin it down.
# ---------------------------------------------------------------------------

def format_term(t: Term, encode_node: Callable[[object], str] = str) -> str:
    if isinstance(t, Var):
        return t.name
    if isinstance(t, NodeConst):
        return "#" + encode_node(t.node)
    if not t.args:
        return t.fn
    return "(" + " ".join([t.fn] + [format_term(a, encode_node) for a in t.args]) + ")"


def format_formula(f: Formula, encode_node: Callable[[object], str] = str) -> str:
    ft = lambda t: format_term(t, encode_node)
    if isinstance(f, Top):
        return "true"
    if isinstance(f, Bottom):
        return "false"
    if isinstance(f, Atom):
        if not f.args:
            return "(" + f.pred + ")"
        return "(" + " ".join([f.pred] + [ft(t) for t in f.args]) + ")"
    if isinstance(f, Eq):
        return f"(= {ft(f.left)} {ft(f.right)})"
    if isinstance(f, DataAtom):
        return f"(= (mu {ft(f.term)}) {f.value})"
    if isinstance(f, LocAtom):
        return f"(= (loc {ft(f.term)}) {f.location})"
    if isinstance(f, Not):
        return f"(not {format_formula(f.arg, encode_node)})"
    op = "and" if isinstance(f, And) else "or"
    return "(" + " ".join([op] + [format_formula(a, encode_node) for a in f.args]) + ")"


_TOKEN_RE = re.compile(r"\(|\)|[^\s()]+")


def _tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text)


def _read_sexp(tokens: list[str], pos: int):
    if pos >= len(tokens):
        raise FormulaError("unexpected end of input")
    tok = tokens[pos]
    if tok == "(":
        items = []
        pos += 1
        while pos < len(tokens) and tokens[pos] != ")":
            item, pos = _read_sexp(tokens, pos)
            items.append(item)
        if pos >= len(tokens):
            raise FormulaError("unbalanced parentheses")
        return items, pos + 1
    if tok == ")":
        raise FormulaError("unexpected ')'")
    return tok, pos + 1


class FormulaParser:
    """Parser for the textual syntax, bound to a vocabulary.

    ``parse_node`` decodes the text after ``#``; ``locations`` enables loc
    atoms and ``extra_predicates`` admits automaton predicates.
    """

    def __init__(self, vocabulary: Vocabulary,
                 parse_node: Optional[Callable[[str], object]] = None,
                 extra_predicates: Optional[Mapping[str, int]] = None,
                 locations: Iterable[str] = ()):
        self.vocab = vocabulary
        self.parse_node = parse_node
        self.fn_arity = vocabulary.function_arity
        self.pred_arity = dict(vocabulary.predicate_arity)
        if extra_predicates:
            self.pred_arity.update(extra_predicates)
        self.locations = set(locations)

    def term(self, text: str) -> Term:
        sexp, pos = _read_sexp(_tokenize(text), 0)
        return self._term(sexp)

    def formula(self, text: str) -> Formula:
        tokens = _tokenize(text)
        sexp, pos = _read_sexp(tokens, 0)
        if pos != len(tokens):
            raise FormulaError("trailing input after formula")
        return self._formula(sexp)

    def _term(self, sexp) -> Term:
        if isinstance(sexp, str):
            if sexp.startswith("#"):
                if self.parse_node is None:
                    raise FormulaError("no node parser available for node constants")
                return NodeConst(self.parse_node(sexp[1:]))
            if sexp in self.fn_arity:
                if self.fn_arity[sexp] != 0:
                    raise FormulaError(f"function {sexp} expects arguments")
                return Apply(sexp)
            return Var(sexp)
        head, *args = sexp
        if head not in self.fn_arity:
            raise FormulaError(f"unknown function symbol {head}")
        if self.fn_arity[head] != len(args):
            raise FormulaError(f"arity mismatch for {head}")
        return Apply(head, tuple(self._term(a) for a in args))

    def _formula(self, sexp) -> Formula:
        if isinstance(sexp, str):
            if sexp == "true":
                return TRUE
            if sexp == "false":
                return FALSE
            raise FormulaError(f"unexpected token {sexp}")
        if not sexp:
            raise FormulaError("empty expression")
        head = sexp[0]
        args = sexp[1:]
        if head == "and":
            return conj([self._formula(a) for a in args])
        if head == "or":
            return disj([self._formula(a) for a in args])
        if head == "not":
            if len(args) != 1:
                raise FormulaError("not takes one argument")
            return neg(self._formula(args[0]))
        if head == "=":
            if len(args) != 2:
                raise FormulaError("= takes two arguments")
            left, right = args
            if isinstance(left, list) and left and left[0] == "mu":
                if len(left) != 2 or not isinstance(right, str):
                    raise FormulaError("malformed data atom")
                return DataAtom(self._term(left[1]), int(right))
            if isinstance(left, list) and left and left[0] == "loc":
                if len(left) != 2 or not isinstance(right, str):
                    raise FormulaError("malformed location atom")
                if self.locations and right not in self.locations:
                    raise FormulaError(f"unknown location {right}")
                return LocAtom(self._term(left[1]), right)
            return Eq(self._term(left), self._term(right))
        if head == "distinct":
            if len(args) != 2:
                raise FormulaError("distinct takes two arguments")
            return Not(Eq(self._term(args[0]), self._term(args[1])))
        if isinstance(head, str) and head in self.pred_arity:
            if self.pred_arity[head] != len(args):
                raise FormulaError(f"arity mismatch for predicate {head}")
            return Atom(head, tuple(self._term(a) for a in args))
        raise FormulaError(f"unknown operator or predicate {head}")
