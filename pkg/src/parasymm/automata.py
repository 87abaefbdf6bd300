"""Predicate automata parameterized by a topology structure.

An automaton is the 5-tuple of a finite relational vocabulary Q (disjoint
from the structure's), the indexed-command alphabet, a syntactic transition
function into positive quantifier-free formulas, a closed positive start
formula, and accepting symbols.  Words are read right to left; configurations
are finite sets of ground Q-atoms.

Serialized via the versioned JSON schema ``parasymm-pa/1``.
"""

from __future__ import annotations

import json
from typing import Iterable, Optional, Sequence

from .formulas import (
    And,
    Atom,
    Bottom,
    Eq,
    FALSE,
    Formula,
    FormulaParser,
    NodeConst,
    Not,
    Or,
    Top,
    TRUE,
    conj,
    disj,
    dualize,
    eval_ground,
    format_formula,
    formula_nodes,
    formula_vars,
    is_positive_in,
    substitute,
    to_dnf,
)
from .programs import Letter
from .topology import Structure, parse_structure, structure_selector

PA_SCHEMA = "parasymm-pa/1"


class AutomatonError(Exception):
    pass


# A configuration is a frozenset of ground atoms (symbol, node tuple).
Config = frozenset


def config_key(structure: Structure, config: Config):
    return tuple(
        sorted((q, tuple(structure.node_key(a) for a in args)) for q, args in config)
    )


def config_support(config: Config, structure: Structure) -> tuple:
    nodes = {a for _, args in config for a in args}
    return tuple(sorted(nodes, key=structure.node_key))


def format_config(structure: Structure, config: Config) -> str:
    parts = [
        q + ("(" + ",".join(structure.encode_node(a) for a in args) + ")" if args else "")
        for q, args in sorted(config, key=lambda t: (t[0], t[1]))
    ]
    return "{" + ", ".join(parts) + "}"


class PredicateAutomaton:
    def __init__(self, structure: Structure, commands: Iterable[str],
                 predicates: dict[str, int], delta: dict[tuple[str, str], Formula],
                 start: Formula, accepting: Iterable[str],
                 provenance: Optional[dict] = None):
        self.structure = structure
        self.commands = tuple(sorted(set(commands)))
        self.predicates = dict(predicates)
        self.delta = dict(delta)
        self.start = start
        self.accepting = frozenset(accepting)
        self.provenance = provenance or {}
        self._validate()

    def _validate(self):
        vocab_names = {n for n, _ in self.structure.vocabulary.predicates}
        vocab_names |= {n for n, _ in self.structure.vocabulary.functions}
        clash = set(self.predicates) & vocab_names
        if clash:
            raise AutomatonError(f"automaton predicates clash with the vocabulary: {sorted(clash)}")
        if not self.accepting <= set(self.predicates):
            raise AutomatonError("accepting symbols outside the predicate vocabulary")
        for q in self.predicates:
            for sigma in self.commands:
                self.delta.setdefault((q, sigma), FALSE)
        for (q, sigma), f in self.delta.items():
            if q not in self.predicates or sigma not in self.commands:
                raise AutomatonError(f"transition for unknown ({q}, {sigma})")
            allowed = {f"v{i}" for i in range(self.predicates[q] + 1)}
            if not formula_vars(f) <= allowed:
                raise AutomatonError(f"free variables of delta({q},{sigma}) exceed v0..v{self.predicates[q]}")
            if not is_positive_in(f, self.predicates):
                raise AutomatonError(f"delta({q},{sigma}) is not positive")
            if formula_nodes(f):
                raise AutomatonError("transition formulas may not contain node constants")
        if formula_vars(self.start):
            raise AutomatonError("start formula must be closed")
        if not is_positive_in(self.start, self.predicates):
            raise AutomatonError("start formula is not positive")
        if formula_nodes(self.start):
            raise AutomatonError("start formula may not contain node constants")

    @property
    def arity(self) -> int:
        return max(self.predicates.values(), default=0)

    @property
    def monadic(self) -> bool:
        return self.arity <= 1

    def is_accepting(self, config: Config) -> bool:
        return all(q in self.accepting for q, _ in config)


# ---------------------------------------------------------------------------
# Semantics
# ---------------------------------------------------------------------------

def _discharge(A: PredicateAutomaton, f: Formula) -> Formula:
    """Evaluate node terms and interpreted atoms; keep ground Q-atoms."""
    if isinstance(f, (Top, Bottom)):
        return f
    if isinstance(f, Atom) and f.pred in A.predicates:
        nodes = tuple(
            NodeConst(eval_ground_term(A.structure, t)) for t in f.args
        )
        return Atom(f.pred, nodes)
    if isinstance(f, (Atom, Eq)):
        return TRUE if eval_ground(f, A.structure) else FALSE
    if isinstance(f, Not):
        sub = _discharge(A, f.arg)
        if isinstance(sub, Top):
            return FALSE
        if isinstance(sub, Bottom):
            return TRUE
        return Not(sub)
    if isinstance(f, And):
        return conj([_discharge(A, a) for a in f.args])
    if isinstance(f, Or):
        return disj([_discharge(A, a) for a in f.args])
    raise AutomatonError(f"unexpected formula node {f!r}")


def eval_ground_term(structure: Structure, t):
    from .formulas import eval_term

    return eval_term(t, structure)


def semantic_delta(A: PredicateAutomaton, atom: tuple[str, tuple], letter: Letter) -> Formula:
    """The transition formula instantiated at a ground atom and letter."""
    q, args = atom
    name, node = letter
    if q not in A.predicates:
        raise AutomatonError(f"unknown symbol {q}")
    if name not in A.commands:
        raise AutomatonError(f"unknown command {name}")
    if not A.structure.contains(node):
        raise AutomatonError("letter node outside the carrier")
    sigma = {"v0": NodeConst(node)}
    sigma.update({f"v{i + 1}": NodeConst(a) for i, a in enumerate(args)})
    return _discharge(A, substitute(A.delta[(q, name)], sigma))


def _cube_to_config(A: PredicateAutomaton, cube) -> Optional[Config]:
    atoms = []
    for lit in cube:
        if isinstance(lit, Atom) and lit.pred in A.predicates:
            atoms.append((lit.pred, tuple(t.node for t in lit.args)))
        else:
            raise AutomatonError(f"undischarged literal {lit!r} in a cube")
    return frozenset(atoms)


def initial_configs(A: PredicateAutomaton) -> list[Config]:
    f = _discharge(A, A.start)
    return _configs_of(A, f)


def _configs_of(A: PredicateAutomaton, f: Formula) -> list[Config]:
    configs = []
    seen = set()
    for cube in to_dnf(f, A.predicates):
        c = _cube_to_config(A, cube)
        if c not in seen:
            seen.add(c)
            configs.append(c)
    configs.sort(key=lambda c: config_key(A.structure, c))
    return configs


def successors(A: PredicateAutomaton, config: Config, letter: Letter,
               delta_cache: Optional[dict] = None) -> list[Config]:
    """Cubes of the DNF of the conjoined semantic transitions, in canonical order."""
    parts = []
    for atom in sorted(config, key=lambda t: (t[0], tuple(map(A.structure.node_key, t[1])))):
        if delta_cache is not None:
            key = (atom, letter)
            f = delta_cache.get(key)
            if f is None:
                f = semantic_delta(A, atom, letter)
                delta_cache[key] = f
        else:
            f = semantic_delta(A, atom, letter)
        if isinstance(f, Bottom):
            return []
        parts.append(f)
    return _configs_of(A, conj(parts))


def accepts(A: PredicateAutomaton, word: Sequence[Letter]) -> bool:
    """Right-to-left acceptance by depth-first search over cube choices."""
    word = list(word)
    memo: dict = {}
    delta_cache: dict = {}

    def rec(r: int, config: Config) -> bool:
        key = (r, config)
        if key in memo:
            return memo[key]
        if r == 0:
            result = A.is_accepting(config)
        else:
            result = any(
                rec(r - 1, c2) for c2 in successors(A, config, word[r - 1], delta_cache)
            )
        memo[key] = result
        return result

    return any(rec(len(word), c) for c in initial_configs(A))


# ---------------------------------------------------------------------------
# Closure constructions
# ---------------------------------------------------------------------------

def _rename_predicates(f: Formula, renaming: dict[str, str]) -> Formula:
    if isinstance(f, Atom) and f.pred in renaming:
        return Atom(renaming[f.pred], f.args)
    if isinstance(f, Not):
        return Not(_rename_predicates(f.arg, renaming))
    if isinstance(f, And):
        return And(tuple(_rename_predicates(a, renaming) for a in f.args))
    if isinstance(f, Or):
        return Or(tuple(_rename_predicates(a, renaming) for a in f.args))
    return f


def intersect(A: PredicateAutomaton, B: PredicateAutomaton) -> PredicateAutomaton:
    """Product-free intersection: union the vocabularies, conjoin the starts."""
    if A.structure != B.structure:
        raise AutomatonError("intersection needs automata over the same structure")
    if set(A.commands) != set(B.commands):
        raise AutomatonError("intersection needs a common alphabet")
    clash = set(A.predicates) & set(B.predicates)
    ren_a = {q: f"{q}#1" for q in clash}
    ren_b = {q: f"{q}#2" for q in clash}

    def remap(preds, delta, start, accepting, ren):
        preds2 = {ren.get(q, q): ar for q, ar in preds.items()}
        delta2 = {
            (ren.get(q, q), s): _rename_predicates(f, ren) for (q, s), f in delta.items()
        }
        return preds2, delta2, _rename_predicates(start, ren), {ren.get(q, q) for q in accepting}

    pa, da, sa, fa = remap(A.predicates, A.delta, A.start, A.accepting, ren_a)
    pb, db, sb, fb = remap(B.predicates, B.delta, B.start, B.accepting, ren_b)
    return PredicateAutomaton(
        structure=A.structure,
        commands=A.commands,
        predicates={**pa, **pb},
        delta={**da, **db},
        start=conj([sa, sb]),
        accepting=fa | fb,
        provenance={"left": A.provenance, "right": B.provenance, "renamed": sorted(clash)},
    )


def complement(A: PredicateAutomaton) -> PredicateAutomaton:
    """Dualized automaton accepting exactly the rejected words."""
    renaming = {q: f"!{q}" for q in A.predicates}
    predicates = {renaming[q]: ar for q, ar in A.predicates.items()}
    delta = {
        (renaming[q], sigma): dualize(A.delta[(q, sigma)], renaming)
        for q in A.predicates
        for sigma in A.commands
    }
    accepting = {renaming[q] for q in A.predicates if q not in A.accepting}
    return PredicateAutomaton(
        structure=A.structure,
        commands=A.commands,
        predicates=predicates,
        delta=delta,
        start=dualize(A.start, renaming),
        accepting=accepting,
    )


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def dump_pa(A: PredicateAutomaton) -> dict:
    return {
        "schema": PA_SCHEMA,
        "topology": structure_selector(A.structure),
        "commands": list(A.commands),
        "predicates": dict(sorted(A.predicates.items())),
        "delta": {
            f"{q}|{sigma}": format_formula(A.delta[(q, sigma)], A.structure.encode_node)
            for (q, sigma) in sorted(A.delta)
        },
        "start": format_formula(A.start, A.structure.encode_node),
        "accepting": sorted(A.accepting),
    }


def load_pa(data, structure: Optional[Structure] = None) -> PredicateAutomaton:
    if isinstance(data, str):
        data = json.loads(data)
    if data.get("schema", PA_SCHEMA) != PA_SCHEMA:
        raise AutomatonError(f"unsupported schema {data.get('schema')!r}")
    if structure is None:
        structure = parse_structure(data["topology"])
    parser = FormulaParser(
        structure.vocabulary,
        parse_node=structure.parse_node,
        extra_predicates=data["predicates"],
    )
    delta = {}
    for key, text in data["delta"].items():
        q, _, sigma = key.partition("|")
        delta[(q, sigma)] = parser.formula(text)
    return PredicateAutomaton(
        structure=structure,
        commands=data["commands"],
        predicates=data["predicates"],
        delta=delta,
        start=parser.formula(data["start"]),
        accepting=data["accepting"],
    )
