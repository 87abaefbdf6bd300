"""Universally quantified inductive invariants and their Hoare-triple content.

An invariant of width k has a node-quantifier-free body over u1..uk mixing
node atoms, data atoms mu(term)=value and location atoms loc(term)=location.
Checking it against a finite instance enumerates every (location map,
valuation) pair; the enumeration is bit-packed into numpy vectors because the
joint space grows like (|L|*|D|)^|carrier|.

Invariant files are JSON objects {"width": k, "body": "<formula text>"}.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

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
    eval_ground,
    eval_term,
    formula_nodes,
    formula_vars,
    neg,
    substitute,
)
from .hoare import HoareError, HoareTriple, eval_assertion
from .programs import Instance
from .topology import Structure


@dataclass(frozen=True)
class AshcroftInvariant:
    width: int
    body: Formula

    def __post_init__(self):
        expected = {f"u{i + 1}" for i in range(self.width)}
        free = formula_vars(self.body)
        if not free <= expected:
            raise HoareError(f"body uses variables outside u1..u{self.width}: {sorted(free)}")


def load_invariant(data, parser: FormulaParser) -> AshcroftInvariant:
    if isinstance(data, str):
        data = json.loads(data)
    return AshcroftInvariant(width=int(data["width"]), body=parser.formula(data["body"]))


def ground_assertion(f: Formula, structure: Structure) -> Formula:
    """Evaluate node terms and interpreted node atoms away.

    Data and location atoms keep a bare node constant; node-vocabulary atoms
    become truth constants.  Requires a closed formula.
    """
    if isinstance(f, (Top, Bottom)):
        return f
    if isinstance(f, DataAtom):
        return DataAtom(NodeConst(eval_term(f.term, structure)), f.value)
    if isinstance(f, LocAtom):
        return LocAtom(NodeConst(eval_term(f.term, structure)), f.location)
    if isinstance(f, (Atom, Eq)):
        return TRUE if eval_ground(f, structure) else FALSE
    if isinstance(f, Not):
        return neg(ground_assertion(f.arg, structure))
    if isinstance(f, And):
        return conj([ground_assertion(a, structure) for a in f.args])
    return disj([ground_assertion(a, structure) for a in f.args])


def instantiate_body(inv: AshcroftInvariant, structure: Structure, nodes: Sequence) -> Formula:
    sigma = {f"u{i + 1}": NodeConst(x) for i, x in enumerate(nodes)}
    return ground_assertion(substitute(inv.body, sigma), structure)


# ---------------------------------------------------------------------------
# Bit-packed state space
# ---------------------------------------------------------------------------

class StateSpace:
    """All (location map, valuation) pairs of a finite instance as indices.

    A per-node digit packs (location, value); state index is the mixed-radix
    combination over the carrier in node order.
    """

    MAX_STATES = 64_000_000

    def __init__(self, instance: Instance):
        self.instance = instance
        self.nodes = instance.nodes
        self.n = len(self.nodes)
        self.locs = list(instance.spec.locations)
        self.loc_index = {l: i for i, l in enumerate(self.locs)}
        self.D = 1 << instance.spec.bitwidth
        self.s = len(self.locs) * self.D
        self.total = self.s ** self.n
        if self.total > self.MAX_STATES:
            raise HoareError(f"state space of {self.total} states is too large")
        idx = np.arange(self.total, dtype=np.int64)
        self.loc_digit = []
        self.val_digit = []
        for i in range(self.n):
            digit = (idx // self.s**i) % self.s
            self.loc_digit.append((digit // self.D).astype(np.int32))
            self.val_digit.append((digit % self.D).astype(np.int32))

    def decode(self, index: int) -> tuple[dict, dict]:
        lam, mu = {}, {}
        for i, x in enumerate(self.nodes):
            digit = (index // self.s**i) % self.s
            lam[x] = self.locs[digit // self.D]
            mu[x] = digit % self.D
        return lam, mu

    def truth(self, assertion: Formula) -> np.ndarray:
        """Boolean vector of the grounded assertion over all states."""
        parts = assertion.args if isinstance(assertion, And) else (assertion,)
        vec = np.ones(self.total, dtype=bool)
        for part in parts:
            vec &= self._truth_part(part)
        return vec

    def _truth_part(self, f: Formula) -> np.ndarray:
        involved = formula_nodes(f)
        positions = [self.instance.node_pos[x] for x in involved]
        m = len(involved)
        table = np.zeros(self.s**m, dtype=bool)
        for combo in itertools.product(range(self.s), repeat=m):
            lam = {x: self.locs[d // self.D] for x, d in zip(involved, combo)}
            mu = {x: d % self.D for x, d in zip(involved, combo)}
            if eval_assertion(f, self.instance.structure, mu, lam):
                key = sum(d * self.s**j for j, d in enumerate(combo))
                table[key] = True
        if m == 0:
            return np.full(self.total, bool(table[0]))
        sub = np.zeros(self.total, dtype=np.int64)
        for j, i in enumerate(positions):
            sub += (self.loc_digit[i].astype(np.int64) * self.D + self.val_digit[i]) * self.s**j
        return table[sub]

    def step_masks(self, name: str, node) -> tuple[np.ndarray, np.ndarray]:
        """(enabled mask, successor index array) for an indexed command."""
        inst = self.instance
        cmd = inst.spec.commands[name]
        i = inst.node_pos[node]
        cells = inst.rw_nodes[(name, node)]
        positions = [inst.node_pos[c] for c in cells]
        m = len(cells)
        defined = np.zeros(self.D**m, dtype=bool)
        outs = np.zeros((self.D**m, m), dtype=np.int64)
        for key, out in inst.rows[(name, node)].items():
            if out is None:
                continue
            kidx = sum(v * self.D**j for j, v in enumerate(key))
            defined[kidx] = True
            outs[kidx] = out
        key_vec = np.zeros(self.total, dtype=np.int64)
        for j, p in enumerate(positions):
            key_vec += self.val_digit[p].astype(np.int64) * self.D**j
        enabled = (self.loc_digit[i] == self.loc_index[cmd.src]) & defined[key_vec]
        delta = np.full(
            self.total,
            (self.loc_index[cmd.tgt] - self.loc_index[cmd.src]) * self.D * self.s**i,
            dtype=np.int64,
        )
        for j, p in enumerate(positions):
            delta += (outs[key_vec, j] - self.val_digit[p]) * self.s**p
        succ = np.arange(self.total, dtype=np.int64) + delta
        return enabled, np.where(enabled, succ, 0)  # disabled entries hold a dummy index

    def all_at(self, location: str) -> np.ndarray:
        vec = np.ones(self.total, dtype=bool)
        li = self.loc_index[location]
        for i in range(self.n):
            vec &= self.loc_digit[i] == li
        return vec

    def some_at(self, location: str) -> np.ndarray:
        vec = np.zeros(self.total, dtype=bool)
        li = self.loc_index[location]
        for i in range(self.n):
            vec |= self.loc_digit[i] == li
        return vec


# ---------------------------------------------------------------------------
# Invariant checking (Initialization / Continuation / Safety)
# ---------------------------------------------------------------------------

@dataclass
class AshcroftReport:
    init: bool
    cont: bool
    safe: bool
    counterexample: Optional[dict] = None

    @property
    def holds(self) -> bool:
        return self.init and self.cont and self.safe


def _instantiations(inv: AshcroftInvariant, instance: Instance) -> list[tuple[tuple, Formula]]:
    return [
        (tup, instantiate_body(inv, instance.structure, tup))
        for tup in itertools.product(instance.nodes, repeat=inv.width)
    ]


def ashcroft_check(instance: Instance, inv: AshcroftInvariant) -> AshcroftReport:
    """Exhaustively check the three defining conditions on a finite instance."""
    space = StateSpace(instance)
    bodies = _instantiations(inv, instance)
    phi = np.ones(space.total, dtype=bool)
    for _, body in bodies:
        phi &= space.truth(body)

    def cx(kind, index, letter=None):
        lam, mu = space.decode(int(index))
        out = {
            "condition": kind,
            "locations": {instance.structure.encode_node(x): l for x, l in lam.items()},
            "values": {instance.structure.encode_node(x): v for x, v in mu.items()},
        }
        if letter is not None:
            out["letter"] = instance.format_letter(letter)
        return out

    report = AshcroftReport(init=True, cont=True, safe=True)
    init_viol = space.all_at(instance.spec.l_init) & ~phi
    if init_viol.any():
        report.init = False
        report.counterexample = cx("init", np.flatnonzero(init_viol)[0])

    for letter in instance.letters():
        enabled, succ = space.step_masks(*letter)
        viol = phi & enabled & ~phi[succ]
        if viol.any():
            report.cont = False
            if report.counterexample is None:
                report.counterexample = cx("cont", np.flatnonzero(viol)[0], letter)
            break

    safe_viol = phi & space.some_at(instance.spec.l_err)
    if safe_viol.any():
        report.safe = False
        if report.counterexample is None:
            report.counterexample = cx("safe", np.flatnonzero(safe_viol)[0])
    return report


# ---------------------------------------------------------------------------
# Triple extraction and de-extension
# ---------------------------------------------------------------------------

def extract_triples(instance: Instance, inv: AshcroftInvariant) -> list[HoareTriple]:
    """The extended-triple families induced by an invariant on a finite instance."""
    S = instance.nodes
    pre_init = conj([LocAtom(NodeConst(a), instance.spec.l_init) for a in S])
    bodies = _instantiations(inv, instance)
    phi_conj = conj([body for _, body in bodies])
    out: list[HoareTriple] = []
    for _, body in bodies:
        out.append(HoareTriple(pre_init, (), body))
    for letter in instance.letters():
        for _, body in bodies:
            out.append(HoareTriple(phi_conj, (letter,), body))
    for b in S:
        out.append(HoareTriple(phi_conj, (), Not(LocAtom(NodeConst(b), instance.spec.l_err))))
    return out


def validate_extracted(instance: Instance, inv: AshcroftInvariant) -> list[bool]:
    """Vectorized extended validity for each triple of extract_triples, in order."""
    space = StateSpace(instance)
    bodies = _instantiations(inv, instance)
    truths = [space.truth(body) for _, body in bodies]
    phi = np.ones(space.total, dtype=bool)
    for t in truths:
        phi &= t
    results: list[bool] = []
    init_mask = space.all_at(instance.spec.l_init)
    for t in truths:
        results.append(bool(not (init_mask & ~t).any()))
    for letter in instance.letters():
        enabled, succ = space.step_masks(*letter)
        pre_mask = phi & enabled
        for t in truths:
            results.append(bool(not (pre_mask & ~t[succ]).any()))
    for b in instance.nodes:
        i = instance.node_pos[b]
        at_err = space.loc_digit[i] == space.loc_index[instance.spec.l_err]
        results.append(bool(not (phi & at_err).any()))
    return results


def _loc_substitute(f: Formula, lam: dict) -> Formula:
    if isinstance(f, LocAtom):
        node = f.term.node if isinstance(f.term, NodeConst) else None
        if node is None:
            raise HoareError("de-extension needs grounded location atoms")
        return TRUE if lam[node] == f.location else FALSE
    if isinstance(f, Not):
        return neg(_loc_substitute(f.arg, lam))
    if isinstance(f, And):
        return conj([_loc_substitute(a, lam) for a in f.args])
    if isinstance(f, Or):
        return disj([_loc_substitute(a, lam) for a in f.args])
    return f


def _forced_locations(pre: Formula) -> Optional[dict]:
    """Location constraints appearing as top-level conjuncts of the pre."""
    forced: dict = {}
    parts = pre.args if isinstance(pre, And) else (pre,)
    for part in parts:
        if isinstance(part, LocAtom) and isinstance(part.term, NodeConst):
            node = part.term.node
            if node in forced and forced[node] != part.location:
                return None
            forced[node] = part.location
    return forced


def deextend(triple: HoareTriple, spec, nontrivial_only: bool = False) -> list[HoareTriple]:
    """Standard triples obtained by substituting concrete location maps.

    One output per pair of location maps over the triple's nodes threaded by
    its word.  With ``nontrivial_only`` the enumeration is restricted to maps
    satisfying the pre's top-level location conjuncts (the rest simplify to a
    false pre) and the outputs are deduplicated.
    """
    nodes = triple.nodes()
    locs = spec.locations
    forced: dict = {}
    if nontrivial_only:
        got = _forced_locations(triple.pre)
        if got is None:
            return []
        forced = got
    if triple.word:
        (name, v) = triple.word[0]
        cmd = spec.commands[name]
        if forced.get(v, cmd.src) != cmd.src:
            return []
        forced = dict(forced)
        forced[v] = cmd.src
    free = [x for x in nodes if x not in forced]
    out: list[HoareTriple] = []
    for combo in itertools.product(locs, repeat=len(free)):
        lam = dict(forced)
        lam.update(zip(free, combo))
        if triple.word:
            lam2 = dict(lam)
            lam2[triple.word[0][1]] = spec.commands[triple.word[0][0]].tgt
        else:
            lam2 = lam
        t = HoareTriple(
            _loc_substitute(triple.pre, lam),
            triple.word,
            _loc_substitute(triple.post, lam2),
        )
        if nontrivial_only:
            if isinstance(t.pre, Bottom) or isinstance(t.post, Top):
                continue
            if t in out:
                continue
        out.append(t)
    return out
