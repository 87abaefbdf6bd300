"""Constructive translations into predicate automata.

``program_to_pa`` mirrors the reversed control structure of the program: a
nullary run-tracking symbol regenerates itself while checking the letter's
enabledness class and source location, unary location symbols thread the
per-node control flow backwards, and a nullary error obligation discharges at
a letter targeting the error location.

``basis_to_pa`` turns a normal-form basis into an automaton whose predicates
are canonical names of the basis assertions (one symbol per assertion shape,
nodes abstracted into arguments) and whose transitions guard each triple by
the defining formula of its node tuple's symmetry class.
"""

from __future__ import annotations

from typing import Iterable, Optional, Sequence

from .automata import AutomatonError, PredicateAutomaton
from .formulas import (
    And,
    Atom,
    Bottom,
    DataAtom,
    FALSE,
    Eq,
    Formula,
    NodeConst,
    Not,
    Or,
    Top,
    TRUE,
    Var,
    conj,
    disj,
    format_formula,
    formula_nodes,
    substitute,
)
from .hoare import BoundProgram, HoareTriple
from .topology import Structure, class_formula, minimal_terms

RUN_SYMBOL = "@I"
ERR_SYMBOL = "@err"


class TranslateError(Exception):
    pass


# ---------------------------------------------------------------------------
# Error runs of the (limit) program
# ---------------------------------------------------------------------------

def _enabled_class_formula(bound: BoundProgram, name: str) -> Formula:
    """Disjunction of class-defining formulas of the classes running ``name``,
    with the class variable renamed to v0."""
    parts = []
    for cls in bound.classes:
        if name in bound.spec.code.get(cls.class_id, ()):
            parts.append(substitute(cls.formula, {"u1": Var("v0")}))
    return disj(parts)


def program_to_pa(bound: BoundProgram) -> PredicateAutomaton:
    """Monadic automaton recognizing the syntactic error runs."""
    spec = bound.spec
    for cls in bound.classes:
        if cls.class_id not in spec.code:
            raise TranslateError(f"class {cls.class_id} has no code-map entry")
    predicates: dict[str, int] = {loc: 1 for loc in spec.locations}
    predicates[RUN_SYMBOL] = 0
    predicates[ERR_SYMBOL] = 0
    v0, v1 = Var("v0"), Var("v1")
    delta: dict[tuple[str, str], Formula] = {}
    for name, cmd in bound.spec.commands.items():
        delta[(RUN_SYMBOL, name)] = conj(
            [Atom(RUN_SYMBOL), Atom(cmd.src, (v0,)), _enabled_class_formula(bound, name)]
        )
        for loc in spec.locations:
            keep = And((Not(Eq(v1, v0)), Atom(loc, (v1,))))
            if loc == cmd.tgt:
                delta[(loc, name)] = Or((And((Eq(v1, v0), Atom(cmd.src, (v0,)))), keep))
            else:
                delta[(loc, name)] = keep
        delta[(ERR_SYMBOL, name)] = TRUE if cmd.tgt == spec.l_err else Atom(ERR_SYMBOL)
    return PredicateAutomaton(
        structure=bound.structure,
        commands=spec.commands.keys(),
        predicates=predicates,
        delta=delta,
        start=And((Atom(RUN_SYMBOL), Atom(ERR_SYMBOL))),
        accepting={RUN_SYMBOL, spec.l_init},
    )


# ---------------------------------------------------------------------------
# Canonical names for assertions
# ---------------------------------------------------------------------------

def canonical_shape(f: Formula, structure: Structure) -> tuple[str, tuple]:
    """Shape text with placeholder arguments plus the node argument tuple.

    Two assertions get the same shape exactly when one is the other with nodes
    renamed; sibling conjuncts/disjuncts are ordered node-blindly so the shape
    is invariant under renaming.
    """

    def blind(g: Formula) -> str:
        return format_formula(g, encode_node=lambda n: "_")

    def normalize(g: Formula) -> Formula:
        if isinstance(g, Not):
            return Not(normalize(g.arg))
        if isinstance(g, (And, Or)):
            kids = [normalize(a) for a in g.args]
            kids.sort(key=lambda a: (blind(a), tuple(structure.node_key(x) for x in formula_nodes(a))))
            return type(g)(tuple(kids))
        return g

    norm = normalize(f)
    nodes = tuple(formula_nodes(norm))
    index = {x: i for i, x in enumerate(nodes)}
    # placeholders render as #0, #1, ... through the node-constant syntax
    shape = format_formula(norm, encode_node=lambda n: str(index[n]))
    return shape, nodes


def shape_symbol(shape: str) -> str:
    return f"[{shape}]"


BOTTOM_SYMBOL = shape_symbol("false")
ZERO_SYMBOL = shape_symbol("(= (mu #0) 0)")


def split_pre(f: Formula) -> list[Formula]:
    if isinstance(f, Top):
        return []
    if isinstance(f, And):
        return list(f.args)
    return [f]


# ---------------------------------------------------------------------------
# Proof-space languages of normal-form bases
# ---------------------------------------------------------------------------

def basis_to_pa(bound: BoundProgram, basis: Sequence[HoareTriple]) -> PredicateAutomaton:
    """Automaton recognizing the language of the proof space the basis generates."""
    T = bound.structure
    predicates: dict[str, int] = {BOTTOM_SYMBOL: 0}
    by_key: dict[tuple[str, str], list[Formula]] = {}
    provenance: dict = {}

    for idx, triple in enumerate(basis):
        if len(triple.word) != 1:
            raise TranslateError(f"triple {idx}: basis triples carry a single command")
        if isinstance(triple.post, And):
            raise TranslateError(f"triple {idx}: conjunctive post; normalize the basis first")
        name, b = triple.word[0]
        post_shape, post_nodes = canonical_shape(triple.post, T)
        post_sym = shape_symbol(post_shape)
        arity = len(post_nodes)
        if predicates.setdefault(post_sym, arity) != arity:
            raise TranslateError(f"canonical name {post_sym} used at two arities")
        anchor = (b,) + post_nodes
        terms = minimal_terms(T, anchor)
        rename = {f"u{i + 1}": Var(f"v{i}") for i in range(len(anchor))}
        chi = substitute(class_formula(T, anchor), rename)
        parts: list[Formula] = []
        for pre in split_pre(triple.pre):
            pre_shape, pre_nodes = canonical_shape(pre, T)
            pre_sym = shape_symbol(pre_shape)
            pre_arity = len(pre_nodes)
            if predicates.setdefault(pre_sym, pre_arity) != pre_arity:
                raise TranslateError(f"canonical name {pre_sym} used at two arities")
            args = []
            for a in pre_nodes:
                if a not in terms:
                    raise TranslateError(
                        f"triple {idx}: pre node {T.encode_node(a)} is not generated by "
                        "the command and post nodes; the basis is not in normal form"
                    )
                args.append(substitute_term_vars(terms[a], rename))
            parts.append(Atom(pre_sym, tuple(args)))
        parts.append(chi)
        key = (post_sym, name)
        by_key.setdefault(key, []).append(conj(parts))
        provenance.setdefault(key, []).append(idx)

    delta = {key: disj(forms) for key, forms in by_key.items()}
    return PredicateAutomaton(
        structure=T,
        commands=bound.spec.commands.keys(),
        predicates=predicates,
        delta=delta,
        start=Atom(BOTTOM_SYMBOL),
        accepting=frozenset(),
        provenance=provenance,
    )


def substitute_term_vars(t, rename: dict):
    from .formulas import Apply, Var as V

    if isinstance(t, V):
        return rename.get(t.name, t)
    if isinstance(t, Apply):
        return Apply(t.fn, tuple(substitute_term_vars(a, rename) for a in t.args))
    return t


def add_initialization(A: PredicateAutomaton) -> PredicateAutomaton:
    """Accept configurations of zero-equality obligations, which the all-zero
    initial valuation discharges at the start of a run."""
    predicates = dict(A.predicates)
    delta = dict(A.delta)
    if ZERO_SYMBOL not in predicates:
        predicates[ZERO_SYMBOL] = 1  # isolated: nothing transitions into it
        for sigma in A.commands:
            delta[(ZERO_SYMBOL, sigma)] = FALSE
    return PredicateAutomaton(
        structure=A.structure,
        commands=A.commands,
        predicates=predicates,
        delta=delta,
        start=A.start,
        accepting=A.accepting | {ZERO_SYMBOL},
        provenance=A.provenance,
    )
