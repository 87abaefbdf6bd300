"""Hoare triples in a universal structure.

Assertions are propositional formulas over atoms ``mu(node) = value``;
extended assertions additionally use ``loc(node) = location`` and ground node
atoms.  Triple validity quantifies exhaustively over valuation pairs related
by the global semantics on the neighbourhood of the mentioned nodes, which is
exact for the Boolean data domains handled here.

Basis files use the versioned JSON schema ``parasymm-basis/1``.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .formulas import (
    And,
    Atom,
    Bottom,
    DataAtom,
    Eq,
    FALSE,
    Formula,
    FormulaParser,
    LocAtom,
    NodeConst,
    Not,
    Or,
    Top,
    TRUE,
    conj,
    disj,
    eval_term,
    format_formula,
    formula_nodes,
    nnf,
)
from .programs import Instance, Letter, ProgramSpec, UpdateTable
from .topology import Structure, EqClass, eq_classes, local_iso, neighbourhood

BASIS_SCHEMA = "parasymm-basis/1"


class HoareError(Exception):
    pass


@dataclass(frozen=True)
class HoareTriple:
    pre: Formula
    word: tuple[Letter, ...]
    post: Formula

    def nodes(self) -> list:
        out = list(formula_nodes(self.pre))
        for _, v in self.word:
            if v not in out:
                out.append(v)
        for x in formula_nodes(self.post):
            if x not in out:
                out.append(x)
        return out

    def anchor(self) -> tuple:
        """The tuple (pre nodes, word nodes, post nodes) the symmetry rule acts on."""
        return (
            tuple(formula_nodes(self.pre))
            + tuple(v for _, v in self.word)
            + tuple(formula_nodes(self.post))
        )


class BoundProgram:
    """A program spec bound to a (possibly infinite) structure.

    Resolves per-node enabledness, rw cells and update rows through the
    reference structure's 1-dimensional class representatives.
    """

    def __init__(self, spec: ProgramSpec, structure: Structure, reference: Structure):
        self.spec = spec
        self.structure = structure
        self.reference = reference
        self.classes = eq_classes(reference, 1)
        self._class_cache: dict = {}

    def class_id(self, node) -> Optional[str]:
        if node in self._class_cache:
            return self._class_cache[node]
        cid = None
        for cls in self.classes:
            if local_iso(self.structure, (node,), self.reference, cls.representative):
                cid = cls.class_id
                break
        self._class_cache[node] = cid
        return cid

    def enabled(self, node) -> tuple[str, ...]:
        cid = self.class_id(node)
        if cid is None:
            return ()
        return self.spec.code.get(cid, ())

    def cells(self, name: str, node) -> tuple:
        cmd = self.spec.commands[name]
        return tuple(eval_term(t, self.structure, env={"v": node}) for t in cmd.rw)

    def rows(self, name: str, node) -> UpdateTable:
        cid = self.class_id(node)
        return self.spec.commands[name].updates[cid]

    def letters_at(self, nodes: Iterable) -> list[Letter]:
        out = []
        for name in sorted(self.spec.commands):
            for x in nodes:
                if name in self.enabled(x):
                    out.append((name, x))
        return out


# ---------------------------------------------------------------------------
# Assertion evaluation and validity
# ---------------------------------------------------------------------------

def eval_assertion(f: Formula, structure: Structure, mu: dict,
                   lam: Optional[dict] = None) -> bool:
    if isinstance(f, Top):
        return True
    if isinstance(f, Bottom):
        return False
    if isinstance(f, DataAtom):
        return mu[eval_term(f.term, structure)] == f.value
    if isinstance(f, LocAtom):
        if lam is None:
            raise HoareError("location atom in a standard assertion")
        return lam[eval_term(f.term, structure)] == f.location
    if isinstance(f, Atom):
        return structure.holds(f.pred, tuple(eval_term(t, structure) for t in f.args))
    if isinstance(f, Eq):
        return eval_term(f.left, structure) == eval_term(f.right, structure)
    if isinstance(f, Not):
        return not eval_assertion(f.arg, structure, mu, lam)
    if isinstance(f, And):
        return all(eval_assertion(a, structure, mu, lam) for a in f.args)
    return any(eval_assertion(a, structure, mu, lam) for a in f.args)


def has_loc_atoms(f: Formula) -> bool:
    if isinstance(f, LocAtom):
        return True
    if isinstance(f, Not):
        return has_loc_atoms(f.arg)
    if isinstance(f, (And, Or)):
        return any(has_loc_atoms(a) for a in f.args)
    return False


def triple_valid(bound: BoundProgram, triple: HoareTriple, extended: bool = False) -> bool:
    """Exhaustive validity over all valuation (and location-map) pairs."""
    if len(triple.word) > 1:
        raise HoareError("validity is implemented for words of length at most one")
    T = bound.structure
    domain = list(bound.spec.data_domain)
    V = neighbourhood(T, triple.nodes())
    if not extended and (has_loc_atoms(triple.pre) or has_loc_atoms(triple.post)):
        raise HoareError("extended triple checked without extended=True")

    if triple.word:
        name, v = triple.word[0]
        if name not in bound.enabled(v):
            return True  # empty semantics
        cells = bound.cells(name, v)
        rows = bound.rows(name, v)
        cmd = bound.spec.commands[name]
    else:
        cells, rows, cmd = (), None, None

    lam_domains: list[tuple[dict, dict]] = []
    if extended:
        locs = bound.spec.locations
        for combo in itertools.product(locs, repeat=len(V)):
            lam = dict(zip(V, combo))
            if cmd is None:
                lam_domains.append((lam, lam))
            else:
                if lam[v] != cmd.src:
                    continue
                lam2 = dict(lam)
                lam2[v] = cmd.tgt
                lam_domains.append((lam, lam2))
    else:
        lam_domains.append((None, None))

    for combo in itertools.product(domain, repeat=len(V)):
        mu = dict(zip(V, combo))
        if cmd is None:
            mu2 = mu
        else:
            out = rows.get(tuple(mu[c] for c in cells))
            if out is None:
                continue
            mu2 = dict(mu)
            for c, val in zip(cells, out):
                mu2[c] = val
        for lam, lam2 in lam_domains:
            if eval_assertion(triple.pre, T, mu, lam) and not eval_assertion(
                triple.post, T, mu2, lam2
            ):
                return False
    return True


# ---------------------------------------------------------------------------
# S-param
# ---------------------------------------------------------------------------

def map_nodes(f: Formula, mapping: dict) -> Formula:
    """Rename node constants through a mapping."""

    def mt(t):
        if isinstance(t, NodeConst):
            return NodeConst(mapping[t.node])
        if hasattr(t, "args") and hasattr(t, "fn"):
            return type(t)(t.fn, tuple(mt(a) for a in t.args))
        return t

    if isinstance(f, (Top, Bottom)):
        return f
    if isinstance(f, Atom):
        return Atom(f.pred, tuple(mt(t) for t in f.args))
    if isinstance(f, Eq):
        return Eq(mt(f.left), mt(f.right))
    if isinstance(f, DataAtom):
        return DataAtom(mt(f.term), f.value)
    if isinstance(f, LocAtom):
        return LocAtom(mt(f.term), f.location)
    if isinstance(f, Not):
        return Not(map_nodes(f.arg, mapping))
    if isinstance(f, And):
        return And(tuple(map_nodes(a, mapping) for a in f.args))
    return Or(tuple(map_nodes(a, mapping) for a in f.args))


def sparam(structure: Structure, triple: HoareTriple, target: Sequence,
           target_structure: Optional[Structure] = None) -> HoareTriple:
    """Rename a valid triple along the local isomorphism to a symmetric tuple."""
    src = triple.anchor()
    tgt_structure = target_structure if target_structure is not None else structure
    iso = local_iso(structure, src, tgt_structure, tuple(target))
    if iso is None:
        raise HoareError("target tuple is not locally symmetric to the triple's tuple")
    m = iso.mapping
    return HoareTriple(
        pre=map_nodes(triple.pre, m),
        word=tuple((name, m[v]) for name, v in triple.word),
        post=map_nodes(triple.post, m),
    )


# ---------------------------------------------------------------------------
# Normal form
# ---------------------------------------------------------------------------

def fix_data_value(f: Formula, node, value: int) -> Formula:
    """Specialize every mu(node) atom to the given value."""
    if isinstance(f, DataAtom) and isinstance(f.term, NodeConst) and f.term.node == node:
        return TRUE if f.value == value else FALSE
    if isinstance(f, Not):
        sub = fix_data_value(f.arg, node, value)
        if isinstance(sub, Top):
            return FALSE
        if isinstance(sub, Bottom):
            return TRUE
        return Not(sub)
    if isinstance(f, And):
        return conj([fix_data_value(a, node, value) for a in f.args])
    if isinstance(f, Or):
        return disj([fix_data_value(a, node, value) for a in f.args])
    return f


def is_normal(structure: Structure, triple: HoareTriple) -> bool:
    if len(triple.word) != 1 or isinstance(triple.post, And):
        return False
    b = triple.word[0][1]
    allowed = set(neighbourhood(structure, [b] + formula_nodes(triple.post)))
    return all(x in allowed for x in formula_nodes(triple.pre))


def normalize(bound: BoundProgram, triple: HoareTriple) -> list[HoareTriple]:
    """Split conjunctive posts and existentially eliminate redundant pre nodes.

    The conjunction of the returned triples' contracts is equivalent to the
    input; each output is in normal form.
    """
    if len(triple.word) != 1:
        raise HoareError("normalization applies to single-command triples")
    (name, b) = triple.word[0]
    posts = list(triple.post.args) if isinstance(triple.post, And) else [triple.post]
    domain = list(bound.spec.data_domain)
    out: list[HoareTriple] = []
    for post in posts:
        if isinstance(post, Top):
            continue
        pre = triple.pre
        allowed = set(neighbourhood(bound.structure, [b] + formula_nodes(post)))
        for x in formula_nodes(pre):
            if x not in allowed:
                pre = disj([fix_data_value(pre, x, d) for d in domain])
        t = HoareTriple(pre, triple.word, post)
        if t not in out:
            out.append(t)
    return out


# ---------------------------------------------------------------------------
# Maximal Boolean basis
# ---------------------------------------------------------------------------

def max_boolean_basis(bound: BoundProgram) -> list[HoareTriple]:
    """The basis behind the completeness argument for Boolean programs.

    Per class representative: (1) update rows as weakest-precondition triples
    for every written cell, (2) frame triples for every pair class whose
    second node is outside the rw cells, (3) blocking triples for undefined
    rows, (4) a bottom-propagation triple per command.  Every emitted triple
    is valid, single-command and in normal form.
    """
    T = bound.structure
    if T != bound.reference:
        raise HoareError("maximal basis must be built over the reference structure")
    domain = list(bound.spec.data_domain)
    basis: list[HoareTriple] = []

    for cls in bound.classes:
        (a,) = cls.representative
        for name in bound.enabled(a):
            cells = bound.cells(name, a)
            rows = bound.rows(name, a)
            letter = ((name, a),)
            for key in itertools.product(domain, repeat=len(cells)):
                out = rows.get(key)
                pre = conj([DataAtom(NodeConst(c), x) for c, x in zip(cells, key)])
                if out is None:
                    basis.append(HoareTriple(pre, letter, FALSE))
                else:
                    for c, x in zip(cells, out):
                        basis.append(HoareTriple(pre, letter, DataAtom(NodeConst(c), x)))
            # bottom propagation keeps infeasibility derivable across letters
            # that execute after the blocking step of a run
            basis.append(HoareTriple(FALSE, letter, FALSE))

    for cls in eq_classes(T, 2):
        a, b = cls.representative
        for name in bound.enabled(a):
            if b in bound.cells(name, a):
                continue
            for x in domain:
                atom = DataAtom(NodeConst(b), x)
                basis.append(HoareTriple(atom, ((name, a),), atom))
    return basis


# ---------------------------------------------------------------------------
# Bounded proof search (test oracle for the proof-space automaton)
# ---------------------------------------------------------------------------

def split_conjuncts(f: Formula) -> frozenset:
    if isinstance(f, Top):
        return frozenset()
    if isinstance(f, And):
        return frozenset(f.args)
    return frozenset([f])


def _shape_and_nodes(f: Formula) -> tuple[str, tuple]:
    nodes = tuple(formula_nodes(f))
    index = {x: i for i, x in enumerate(nodes)}
    text = format_formula(f, encode_node=lambda n: f"?{index[n]}")
    return text, nodes


DERIVABLE = "derivable"
NOT_DERIVABLE = "not-derivable"
BOUND_EXCEEDED = "bound-exceeded"


def derive_member(bound: BoundProgram, basis: Sequence[HoareTriple],
                  word: Sequence[Letter], max_sets: int = 5000) -> str:
    """Bounded backward proof search for {true} word {false}.

    Uses only sequencing with combinatorial entailment (conjunct inclusion),
    conjunction, and the symmetry rule applied to basis triples.  Intended as
    an independent oracle for the proof-space automaton translation; requires
    a normal-form basis.
    """
    T = bound.structure
    by_cmd: dict[str, list[tuple[HoareTriple, str, tuple]]] = {}
    for t in basis:
        if len(t.word) != 1:
            raise HoareError("derive_member expects a single-command basis")
        shape, post_nodes = _shape_and_nodes(t.post)
        by_cmd.setdefault(t.word[0][0], []).append((t, shape, post_nodes))

    def discharge(obligation: Formula, letter: Letter) -> list[frozenset]:
        name, node = letter
        shape, ob_nodes = _shape_and_nodes(obligation)
        options = []
        for t, t_shape, t_nodes in by_cmd.get(name, ()):
            if t_shape != shape:
                continue
            src = (t.word[0][1],) + t_nodes
            tgt = (node,) + ob_nodes
            iso = local_iso(T, src, T, tgt)
            if iso is None:
                continue
            pre = map_nodes(t.pre, iso.mapping)
            options.append(split_conjuncts(pre))
        return options

    sets: set[frozenset] = {frozenset([FALSE])}
    budget = max_sets
    for letter in reversed(list(word)):
        new_sets: set[frozenset] = set()
        for S in sets:
            option_lists = []
            feasible = True
            for ob in S:
                opts = discharge(ob, letter)
                if not opts:
                    feasible = False
                    break
                option_lists.append(opts)
            if not feasible:
                continue
            for choice in itertools.product(*option_lists):
                merged = frozenset().union(*choice) if choice else frozenset()
                new_sets.add(merged)
                budget -= 1
                if budget < 0:
                    return BOUND_EXCEEDED
        # keep subset-minimal obligation sets
        minimal = [s for s in new_sets if not any(o < s for o in new_sets)]
        sets = set(minimal)
        if not sets:
            return NOT_DERIVABLE
    return DERIVABLE if any(not s for s in sets) else NOT_DERIVABLE


# ---------------------------------------------------------------------------
# Basis files
# ---------------------------------------------------------------------------

def dump_basis(basis: Sequence[HoareTriple], structure: Structure) -> dict:
    enc = structure.encode_node
    out = []
    for t in basis:
        if len(t.word) != 1:
            raise HoareError("basis files hold single-command triples")
        name, v = t.word[0]
        out.append(
            {
                "pre": format_formula(t.pre, enc),
                "cmd": {"name": name, "node": enc(v)},
                "post": format_formula(t.post, enc),
            }
        )
    return {"schema": BASIS_SCHEMA, "triples": out}


def load_basis(data, structure: Structure) -> list[HoareTriple]:
    if isinstance(data, str):
        data = json.loads(data)
    if data.get("schema", BASIS_SCHEMA) != BASIS_SCHEMA:
        raise HoareError(f"unsupported schema {data.get('schema')!r}")
    parser = FormulaParser(structure.vocabulary, parse_node=structure.parse_node)
    out = []
    for entry in data["triples"]:
        out.append(
            HoareTriple(
                pre=parser.formula(entry["pre"]),
                word=((entry["cmd"]["name"], structure.parse_node(entry["cmd"]["node"])),),
                post=parser.formula(entry["post"]),
            )
        )
    return out
