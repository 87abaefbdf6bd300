"""Concrete topology structures and the local-symmetry machinery.

Provides the star and forest families together with their infinite limit
structures, rings, generated substructures, and the operations built on local
isomorphisms: neighbourhood closure, the local-symmetry decision, defining
formulas for equivalence classes, class enumeration, constraint solving over
limit carriers, downward-closure enumeration and the configuration covering
pre-order.

Node text encodings (stable, versioned with the file schemas):
star ``C`` / ``T<i>``, ring ``P<i>`` / ``E<i>``, forest ``F<tree>:<p1.p2...>``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Optional, Sequence

from .formulas import (
    CLOSURE_DEPTH_BOUND,
    And,
    Apply,
    Atom,
    Eq,
    Formula,
    Not,
    Var,
    conj,
    eval_ground,
    formula_nodes,
    formula_vars,
    Vocabulary,
)


class TopologyError(Exception):
    pass


class ClosureBoundExceeded(TopologyError):
    pass


# ---------------------------------------------------------------------------
# Nodes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StarNode:
    index: int  # -1 is the hub holding the shared variable


@dataclass(frozen=True)
class RingNode:
    kind: str  # 'P' process or 'E' data
    index: int


@dataclass(frozen=True)
class ForestNode:
    tree: int
    path: tuple[int, ...]

    @property
    def depth(self) -> int:
        return len(self.path)

    @property
    def is_rect(self) -> bool:
        return len(self.path) % 2 == 0


STAR_VOCAB = Vocabulary(predicates=(), functions=(("g", 0),))
RING_VOCAB = Vocabulary(predicates=(("d", 1), ("p", 1)), functions=(("l", 1), ("r", 1)))


def forest_vocabulary(height: int) -> Vocabulary:
    preds = tuple((f"p{i}", 2) for i in range(-1, height))
    return Vocabulary(predicates=preds, functions=(("u", 1), ("d", 1)))


# ---------------------------------------------------------------------------
# Structures
# ---------------------------------------------------------------------------

class Structure:
    """A logical structure over a node vocabulary.

    Subclasses fix the carrier (finite list or symbolic infinite carrier with a
    validity predicate) and interpret every symbol.  Instances are immutable.
    """

    vocabulary: Vocabulary
    finite: bool
    homogeneous: bool
    name: str

    @property
    def key(self) -> tuple:
        raise NotImplementedError

    def nodes(self) -> list:
        raise TopologyError(f"{self.name} has an infinite carrier")

    def contains(self, node) -> bool:
        raise NotImplementedError

    def apply_fn(self, fn: str, args: tuple):
        raise NotImplementedError

    def holds(self, pred: str, args: tuple) -> bool:
        raise NotImplementedError

    def encode_node(self, node) -> str:
        raise NotImplementedError

    def parse_node(self, text: str):
        raise NotImplementedError

    def node_key(self, node) -> tuple:
        raise NotImplementedError

    def extensions(self, anchor: tuple) -> list:
        """One node per local-symmetry class of ``anchor + (b,)`` extensions."""
        return _finite_extensions(self, anchor)

    def __hash__(self):
        return hash(self.key)

    def __eq__(self, other):
        return isinstance(other, Structure) and self.key == other.key

    def __repr__(self):
        return self.name


class _StarBase(Structure):
    vocabulary = STAR_VOCAB
    homogeneous = True

    def apply_fn(self, fn, args):
        if fn == "g" and not args:
            return StarNode(-1)
        raise TopologyError(f"unknown function {fn}/{len(args)}")

    def holds(self, pred, args):
        raise TopologyError(f"unknown predicate {pred}")

    def encode_node(self, node) -> str:
        return "C" if node.index == -1 else f"T{node.index}"

    def parse_node(self, text: str):
        if text == "C":
            node = StarNode(-1)
        elif text.startswith("T"):
            node = StarNode(int(text[1:]))
        else:
            raise TopologyError(f"bad star node {text!r}")
        if not self.contains(node):
            raise TopologyError(f"node {text!r} outside {self.name}")
        return node

    def node_key(self, node):
        return (node.index,)

    def extensions(self, anchor):
        out = [StarNode(-1)]
        fresh = -1
        for a in anchor:
            if a.index >= 0 and a not in out:
                out.append(a)
                fresh = max(fresh, a.index)
        out.append(StarNode(fresh + 1))
        return out


class StarLimit(_StarBase):
    """Hub plus countably many thread nodes."""

    finite = False
    name = "star-limit"

    @property
    def key(self):
        return ("star-limit",)

    def contains(self, node) -> bool:
        return isinstance(node, StarNode) and node.index >= -1


class Star(_StarBase):
    finite = True

    def __init__(self, n_threads: int):
        if n_threads < 1:
            raise TopologyError("star needs at least one thread")
        self.n = n_threads
        self.name = f"star({n_threads})"

    @property
    def key(self):
        return ("star", self.n)

    def contains(self, node) -> bool:
        return isinstance(node, StarNode) and -1 <= node.index < self.n

    def nodes(self):
        return [StarNode(i) for i in range(-1, self.n)]

    def extensions(self, anchor):
        out = [StarNode(-1)]
        used = set()
        for a in anchor:
            if a.index >= 0 and a not in out:
                out.append(a)
                used.add(a.index)
        for i in range(self.n):
            if i not in used:
                out.append(StarNode(i))
                break
        return out


class Ring(Structure):
    """Alternating process/data ring: l(P_i) = E_i, r(P_i) = E_{i+1 mod n}.

    Data nodes are fixed points of both functions.  Not homogeneous (local
    isomorphisms between data pairs at different distances do not extend).
    """

    vocabulary = RING_VOCAB
    finite = True
    homogeneous = False

    def __init__(self, n: int):
        if n < 2:
            raise TopologyError("ring needs at least two process nodes")
        self.n = n
        self.name = f"ring({n})"

    @property
    def key(self):
        return ("ring", self.n)

    def contains(self, node) -> bool:
        return (
            isinstance(node, RingNode)
            and node.kind in ("P", "E")
            and 0 <= node.index < self.n
        )

    def nodes(self):
        out = []
        for i in range(self.n):
            out.append(RingNode("E", i))
        for i in range(self.n):
            out.append(RingNode("P", i))
        return out

    def apply_fn(self, fn, args):
        if fn not in ("l", "r") or len(args) != 1:
            raise TopologyError(f"unknown function {fn}/{len(args)}")
        (x,) = args
        if x.kind == "E":
            return x
        if fn == "l":
            return RingNode("E", x.index)
        return RingNode("E", (x.index + 1) % self.n)

    def holds(self, pred, args):
        if len(args) != 1:
            raise TopologyError(f"unknown predicate {pred}/{len(args)}")
        (x,) = args
        if pred == "d":
            return x.kind == "E"
        if pred == "p":
            return x.kind == "P"
        raise TopologyError(f"unknown predicate {pred}")

    def encode_node(self, node) -> str:
        return f"{node.kind}{node.index}"

    def parse_node(self, text: str):
        if not text or text[0] not in ("P", "E"):
            raise TopologyError(f"bad ring node {text!r}")
        node = RingNode(text[0], int(text[1:]))
        if not self.contains(node):
            raise TopologyError(f"node {text!r} outside {self.name}")
        return node

    def node_key(self, node):
        return (node.kind, node.index)


class _ForestBase(Structure):
    """Forests of fixed height; rectangles at even depths are u/d fixed points.

    Paths record branch choices from the root; only even positions (rectangle
    levels) may branch, circles have exactly one rectangle child at index 0.
    """

    def __init__(self, height: int):
        if height < 3 or height % 2 == 0:
            raise TopologyError("forest height must be odd and at least 3")
        self.height = height
        self.vocabulary = forest_vocabulary(height)

    def _valid_path(self, path: tuple[int, ...]) -> bool:
        if len(path) > self.height - 1:
            return False
        return all(b == 0 for i, b in enumerate(path) if i % 2 == 1) and all(
            b >= 0 for b in path
        )

    def apply_fn(self, fn, args):
        if fn not in ("u", "d") or len(args) != 1:
            raise TopologyError(f"unknown function {fn}/{len(args)}")
        (x,) = args
        if x.is_rect:
            return x
        if fn == "u":
            return ForestNode(x.tree, x.path[:-1])
        return ForestNode(x.tree, x.path + (0,))

    def holds(self, pred, args):
        if not pred.startswith("p") or len(args) != 2:
            raise TopologyError(f"unknown predicate {pred}/{len(args)}")
        i = int(pred[1:])
        x, y = args
        return lca_depth(x, y) == i

    def encode_node(self, node) -> str:
        return f"F{node.tree}:" + ".".join(str(b) for b in node.path)

    def parse_node(self, text: str):
        if not text.startswith("F") or ":" not in text:
            raise TopologyError(f"bad forest node {text!r}")
        head, _, tail = text.partition(":")
        path = tuple(int(b) for b in tail.split(".")) if tail else ()
        node = ForestNode(int(head[1:]), path)
        if not self.contains(node):
            raise TopologyError(f"node {text!r} outside {self.name}")
        return node

    def node_key(self, node):
        return (node.tree, len(node.path), node.path)


def lca_depth(x: ForestNode, y: ForestNode) -> int:
    """Depth of the lowest common ancestor; -1 for nodes of different trees."""
    if x.tree != y.tree:
        return -1
    n = 0
    for a, b in zip(x.path, y.path):
        if a != b:
            break
        n += 1
    return n


class ForestLimit(_ForestBase):
    """Countably many trees with unbounded rectangle branching."""

    finite = False
    homogeneous = True

    def __init__(self, height: int):
        super().__init__(height)
        self.name = f"forest-limit({height})"

    @property
    def key(self):
        return ("forest-limit", self.height)

    def contains(self, node) -> bool:
        return isinstance(node, ForestNode) and node.tree >= 0 and self._valid_path(node.path)

    def extensions(self, anchor):
        return _forest_extensions(self, anchor, trees=None, branching=None)


class Forest(_ForestBase):
    finite = True
    homogeneous = True

    def __init__(self, height: int, branching: int, n_trees: int):
        super().__init__(height)
        if branching < 1 or n_trees < 1:
            raise TopologyError("forest needs positive branching and tree count")
        self.branching = branching
        self.n_trees = n_trees
        self.name = f"forest({height},k={branching},l={n_trees})"

    @property
    def key(self):
        return ("forest", self.height, self.branching, self.n_trees)

    def contains(self, node) -> bool:
        if not isinstance(node, ForestNode) or not (0 <= node.tree < self.n_trees):
            return False
        if not self._valid_path(node.path):
            return False
        return all(b < self.branching for i, b in enumerate(node.path) if i % 2 == 0)

    def nodes(self):
        out = []
        for t in range(self.n_trees):
            level = [()]
            out.append(ForestNode(t, ()))
            for depth in range(1, self.height):
                nxt = []
                for p in level:
                    branches = range(self.branching) if (depth - 1) % 2 == 0 else (0,)
                    for b in branches:
                        nxt.append(p + (b,))
                for p in nxt:
                    out.append(ForestNode(t, p))
                level = nxt
        out.sort(key=self.node_key)
        return out

    def extensions(self, anchor):
        return _forest_extensions(self, anchor, trees=self.n_trees, branching=self.branching)


class Substructure(Structure):
    """A structure restricted to a function-closed subset of a parent carrier."""

    finite = True
    homogeneous = False

    def __init__(self, parent: Structure, carrier: Iterable):
        self.parent = parent
        self.carrier = frozenset(carrier)
        self.vocabulary = parent.vocabulary
        for fn, ar in parent.vocabulary.functions:
            for args in itertools.product(sorted(self.carrier, key=parent.node_key), repeat=ar):
                if parent.apply_fn(fn, args) not in self.carrier:
                    raise TopologyError("carrier is not closed under functions")
        self.name = f"sub[{','.join(sorted(parent.encode_node(x) for x in self.carrier))}]({parent.name})"

    @property
    def key(self):
        return ("sub", self.parent.key, tuple(sorted(self.parent.encode_node(x) for x in self.carrier)))

    def contains(self, node) -> bool:
        return node in self.carrier

    def nodes(self):
        return sorted(self.carrier, key=self.parent.node_key)

    def apply_fn(self, fn, args):
        return self.parent.apply_fn(fn, args)

    def holds(self, pred, args):
        return self.parent.holds(pred, args)

    def encode_node(self, node):
        return self.parent.encode_node(node)

    def parse_node(self, text):
        node = self.parent.parse_node(text)
        if node not in self.carrier:
            raise TopologyError(f"node {text!r} outside substructure carrier")
        return node

    def node_key(self, node):
        return self.parent.node_key(node)


def _forest_extensions(forest: _ForestBase, anchor: tuple, trees: Optional[int],
                       branching: Optional[int]) -> list:
    """Extension representatives for forests: one witness per class of
    ``anchor + (b,)``, enumerated from ancestor prefixes, fresh divergences
    below shared prefixes, and a fresh tree."""
    h = forest.height
    out: list[ForestNode] = []
    seen: set[ForestNode] = set()

    def emit(node: ForestNode):
        if node not in seen and forest.contains(node):
            seen.add(node)
            out.append(node)

    def pad(path: tuple[int, ...], depth: int) -> tuple[int, ...]:
        return path + (0,) * (depth - len(path))

    by_tree: dict[int, list[ForestNode]] = {}
    for a in anchor:
        by_tree.setdefault(a.tree, []).append(a)

    for t in sorted(by_tree):
        paths = [a.path for a in by_tree[t]]
        prefixes = sorted({p[:j] for p in paths for j in range(len(p) + 1)}, key=lambda q: (len(q), q))
        for pre in prefixes:
            emit(ForestNode(t, pre))  # ancestors and the anchor nodes themselves
            if len(pre) >= h - 1:
                continue
            extending = [p[len(pre)] for p in paths if len(p) > len(pre) and p[: len(pre)] == pre]
            if len(pre) % 2 == 0:
                delta = max(extending, default=-1) + 1
                if branching is not None and delta >= branching:
                    continue
                for depth in range(len(pre) + 1, h):
                    emit(ForestNode(t, pad(pre + (delta,), depth)))
            elif not extending:
                # a circle with nothing below it in the anchor: descend its
                # single rectangle child and keep going
                for depth in range(len(pre) + 1, h):
                    emit(ForestNode(t, pad(pre + (0,), depth)))

    fresh_tree = max(by_tree, default=-1) + 1
    if trees is None or fresh_tree < trees:
        for depth in range(h):
            emit(ForestNode(fresh_tree, pad((), depth)))
    return out


def _finite_extensions(structure: Structure, anchor: tuple) -> list:
    out: list = []
    for b in structure.nodes():
        tup = anchor + (b,)
        if not any(local_iso(structure, anchor + (c,), structure, tup) for c in out):
            out.append(b)
    return out


# ---------------------------------------------------------------------------
# Selector strings (used by the CLI and file formats)
# ---------------------------------------------------------------------------

def structure_selector(structure: Structure) -> str:
    key = structure.key
    if key[0] == "star-limit":
        return "star"
    if key[0] == "star":
        return f"star:{key[1]}"
    if key[0] == "ring":
        return f"ring:{key[1]}"
    if key[0] == "forest-limit":
        return f"forest:{key[1]}"
    if key[0] == "forest":
        return f"forest:{key[1]}:{key[2]}:{key[3]}"
    raise TopologyError(f"{structure.name} has no selector form")


def parse_structure(selector: str) -> Structure:
    """Parse a topology selector: ``star[:n]``, ``ring:n``, ``forest:h[:k:l]``."""
    parts = selector.split(":")
    kind = parts[0]
    args = [int(x) for x in parts[1:]]
    if kind == "star":
        return StarLimit() if not args else Star(args[0])
    if kind == "ring":
        if not args:
            raise TopologyError("ring selector needs a size: ring:n")
        return Ring(args[0])
    if kind == "forest":
        if len(args) == 1:
            return ForestLimit(args[0])
        if len(args) == 3:
            return Forest(args[0], args[1], args[2])
        raise TopologyError("forest selector is forest:h or forest:h:k:l")
    raise TopologyError(f"unknown topology selector {selector!r}")


# ---------------------------------------------------------------------------
# Neighbourhoods and local isomorphisms
# ---------------------------------------------------------------------------

def neighbourhood(structure: Structure, nodes: Iterable) -> list:
    """Smallest superset of ``nodes`` closed under every function symbol."""
    closed = set()
    for x in nodes:
        if not structure.contains(x):
            raise TopologyError(f"node {x!r} outside {structure.name}")
        closed.add(x)
    for fn, ar in structure.vocabulary.functions:
        if ar == 0:
            closed.add(structure.apply_fn(fn, ()))
    fns = [(f, a) for f, a in structure.vocabulary.functions if a > 0]
    for _ in range(CLOSURE_DEPTH_BOUND):
        frontier = sorted(closed, key=structure.node_key)
        new = set()
        for fn, ar in fns:
            for args in itertools.product(frontier, repeat=ar):
                y = structure.apply_fn(fn, args)
                if y not in closed:
                    new.add(y)
        if not new:
            return frontier
        closed |= new
    raise ClosureBoundExceeded(f"neighbourhood closure exceeded {CLOSURE_DEPTH_BOUND} rounds")


@dataclass(frozen=True)
class LocalIso:
    """The unique isomorphism N(source) -> N(target) mapping source to target."""

    source: tuple
    target: tuple
    pairs: tuple[tuple[object, object], ...]

    @property
    def mapping(self) -> dict:
        return dict(self.pairs)

    def __getitem__(self, node):
        return dict(self.pairs)[node]


def local_iso(s1: Structure, ta: Sequence, s2: Structure, tb: Sequence) -> Optional[LocalIso]:
    """The local isomorphism from ``ta`` to ``tb``, or None if not symmetric."""
    if s1.vocabulary != s2.vocabulary:
        raise TopologyError("vocabulary mismatch between structures")
    ta, tb = tuple(ta), tuple(tb)
    if len(ta) != len(tb):
        return None
    return _local_iso_cached(s1, ta, s2, tb)


@lru_cache(maxsize=1 << 18)
def _local_iso_cached(s1, ta, s2, tb):
    m: dict = {}

    def add(x, y) -> bool:
        if x in m:
            return m[x] == y
        m[x] = y
        return True

    for x, y in zip(ta, tb):
        if not (s1.contains(x) and s2.contains(y)):
            raise TopologyError("tuple node outside its structure")
        if not add(x, y):
            return None
    for fn, ar in s1.vocabulary.functions:
        if ar == 0 and not add(s1.apply_fn(fn, ()), s2.apply_fn(fn, ())):
            return None
    fns = [(f, a) for f, a in s1.vocabulary.functions if a > 0]
    for _ in range(CLOSURE_DEPTH_BOUND):
        grew = False
        for fn, ar in fns:
            for args in itertools.product(sorted(m, key=s1.node_key), repeat=ar):
                x = s1.apply_fn(fn, args)
                y = s2.apply_fn(fn, tuple(m[a] for a in args))
                if x in m:
                    if m[x] != y:
                        return None
                else:
                    m[x] = y
                    grew = True
        if not grew:
            break
    else:
        raise ClosureBoundExceeded("local isomorphism closure exceeded the depth bound")
    if len(set(m.values())) != len(m):
        return None
    dom = sorted(m, key=s1.node_key)
    for pred, ar in s1.vocabulary.predicates:
        for args in itertools.product(dom, repeat=ar):
            if s1.holds(pred, args) != s2.holds(pred, tuple(m[a] for a in args)):
                return None
    return LocalIso(ta, tb, tuple(sorted(m.items(), key=lambda kv: s1.node_key(kv[0]))))


def locally_symmetric(s1: Structure, ta: Sequence, s2: Structure, tb: Sequence) -> bool:
    return local_iso(s1, ta, s2, tb) is not None


# ---------------------------------------------------------------------------
# Class formulas and class enumeration
# ---------------------------------------------------------------------------

def minimal_terms(structure: Structure, tup: Sequence) -> dict:
    """Minimal-height defining terms (over u1..uk) for every generated element."""
    terms: dict = {}
    for i, a in enumerate(tup):
        if a not in terms:
            terms[a] = Var(f"u{i + 1}")
    for fn, ar in structure.vocabulary.functions:
        if ar == 0:
            c = structure.apply_fn(fn, ())
            terms.setdefault(c, Apply(fn))
    fns = sorted((f, a) for f, a in structure.vocabulary.functions if a > 0)
    for _ in range(CLOSURE_DEPTH_BOUND):
        new: dict = {}
        frontier = sorted(terms, key=structure.node_key)
        for fn, ar in fns:
            for args in itertools.product(frontier, repeat=ar):
                b = structure.apply_fn(fn, args)
                if b not in terms and b not in new:
                    new[b] = Apply(fn, tuple(terms[a] for a in args))
        if not new:
            return terms
        terms.update(new)
    raise ClosureBoundExceeded("term closure exceeded the depth bound")


def class_formula(structure: Structure, tup: Sequence) -> Formula:
    """A quantifier-free formula defining the local-symmetry class of ``tup``.

    Conjoins the anchor equations, pairwise disequalities of generated
    elements, all predicate facts and negations, and all function facts.  For
    any structure over the same vocabulary and any tuple b of matching length,
    the formula holds of b exactly when ``tup`` and b are locally symmetric.
    """
    tup = tuple(tup)
    terms = minimal_terms(structure, tup)
    elems = sorted(terms, key=structure.node_key)
    parts: list[Formula] = []
    for i, a in enumerate(tup):
        v = Var(f"u{i + 1}")
        if terms[a] != v:
            parts.append(Eq(terms[a], v))
    for x, y in itertools.combinations(elems, 2):
        parts.append(Not(Eq(terms[x], terms[y])))
    for pred, ar in sorted(structure.vocabulary.predicates):
        for args in itertools.product(elems, repeat=ar):
            atom = Atom(pred, tuple(terms[a] for a in args))
            parts.append(atom if structure.holds(pred, args) else Not(atom))
    for fn, ar in sorted(structure.vocabulary.functions):
        for args in itertools.product(elems, repeat=ar):
            c = structure.apply_fn(fn, args)
            lhs = Apply(fn, tuple(terms[a] for a in args))
            if lhs != terms[c]:
                parts.append(Eq(lhs, terms[c]))
    return conj(parts)


@dataclass(frozen=True)
class EqClass:
    dimension: int
    representative: tuple
    formula: Formula
    class_id: str


def class_id_of(structure: Structure, tup: Sequence) -> str:
    return ",".join(structure.encode_node(x) for x in tup)


def eq_classes(structure: Structure, dimension: int) -> list[EqClass]:
    """Representatives and defining formulas for all d-tuple classes."""
    if dimension < 1:
        raise TopologyError("dimension must be positive")
    if structure.finite:
        reps: list[tuple] = []
        for tup in itertools.product(structure.nodes(), repeat=dimension):
            if not any(local_iso(structure, rep, structure, tup) for rep in reps):
                reps.append(tup)
    else:
        reps = [()]
        for _ in range(dimension):
            reps = [rep + (b,) for rep in reps for b in structure.extensions(rep)]
    return [
        EqClass(dimension, rep, class_formula(structure, rep), class_id_of(structure, rep))
        for rep in reps
    ]


def classify(structure: Structure, node, classes: Iterable[EqClass],
             reference: Optional[Structure] = None) -> Optional[EqClass]:
    """The 1-tuple class of ``node`` among ``classes`` (from ``reference``)."""
    ref = reference if reference is not None else structure
    for cls in classes:
        if local_iso(structure, (node,), ref, cls.representative):
            return cls
    return None


# ---------------------------------------------------------------------------
# Constraint solving over limit structures
# ---------------------------------------------------------------------------

def solve(structure: Structure, phi: Formula):
    """A node satisfying ``phi`` (one free variable), or None.

    Candidates are drawn from the neighbourhood of the node constants in
    ``phi`` and from fresh nodes in every structured relation to them, which
    exhausts the relationship patterns because quantifier-free truth is a
    class invariant of the extended tuple.
    """
    fvs = formula_vars(phi)
    if len(fvs) != 1:
        raise TopologyError(f"solve expects exactly one free variable, got {sorted(fvs)}")
    (var,) = fvs
    consts = tuple(formula_nodes(phi))
    if structure.finite:
        candidates = structure.nodes()
    else:
        candidates = list(neighbourhood(structure, consts))
        for b in structure.extensions(consts):
            if b not in candidates:
                candidates.append(b)
    for b in candidates:
        if eval_ground(phi, structure, env={var: b}):
            return b
    return None


# ---------------------------------------------------------------------------
# Downward closure
# ---------------------------------------------------------------------------

def _node_profile(structure: Structure, x) -> tuple:
    preds = tuple(
        structure.holds(p, (x,)) for p, ar in sorted(structure.vocabulary.predicates) if ar == 1
    )
    fixed = tuple(
        structure.apply_fn(f, (x,)) == x
        for f, ar in sorted(structure.vocabulary.functions)
        if ar == 1
    )
    return preds + fixed


def structures_isomorphic(s1: Structure, s2: Structure) -> bool:
    """Full isomorphism test via local_iso over carrier orderings."""
    if s1.vocabulary != s2.vocabulary:
        return False
    n1, n2 = s1.nodes(), s2.nodes()
    if len(n1) != len(n2):
        return False
    prof1 = [_node_profile(s1, x) for x in n1]
    prof2 = [_node_profile(s2, x) for x in n2]
    if sorted(prof1) != sorted(prof2):
        return False
    groups: dict[tuple, list] = {}
    for x, p in zip(n2, prof2):
        groups.setdefault(p, []).append(x)

    def backtrack(i: int, used: set, image: list) -> bool:
        if i == len(n1):
            return local_iso(s1, tuple(n1), s2, tuple(image)) is not None
        for y in groups.get(prof1[i], ()):
            if y not in used:
                used.add(y)
                image.append(y)
                if backtrack(i + 1, used, image):
                    return True
                image.pop()
                used.discard(y)
        return False

    return backtrack(0, set(), [])


def sub_k(structure: Structure, k: int) -> list[Substructure]:
    """Substructures generated by k (not necessarily distinct) nodes, deduplicated
    up to isomorphism."""
    if not structure.finite:
        raise TopologyError("sub_k needs a finite structure")
    reps: list[Substructure] = []
    seen_carriers = set()
    for gens in itertools.combinations_with_replacement(structure.nodes(), k):
        carrier = frozenset(neighbourhood(structure, gens))
        if carrier in seen_carriers:
            continue
        seen_carriers.add(carrier)
        sub = Substructure(structure, carrier)
        if not any(structures_isomorphic(sub, r) for r in reps):
            reps.append(sub)
    return reps


# ---------------------------------------------------------------------------
# Configuration covering
# ---------------------------------------------------------------------------

def covers(structure: Structure, small: Iterable[tuple], big: Iterable[tuple]) -> bool:
    """Whether an automorphism maps every atom of ``small`` into ``big``.

    Atoms are (symbol, node-tuple) pairs.  Implemented as a search for an
    injective map between the supports that is a local isomorphism (which a
    homogeneous structure extends to an automorphism).
    """
    if not structure.homogeneous:
        raise TopologyError(f"{structure.name} is not flagged homogeneous")
    small = list(small)
    big_set = set(big)
    for q, args in small:
        if not args and (q, args) not in big_set:
            return False
    s_support = sorted({x for _, args in small for x in args}, key=structure.node_key)
    b_support = sorted({x for _, args in big_set for x in args}, key=structure.node_key)
    if len(s_support) > len(b_support):
        return False
    if not s_support:
        return True
    s_index = {x: i for i, x in enumerate(s_support)}
    # atoms indexed by the highest support position they mention, so each can
    # be checked as soon as its nodes are all assigned
    atoms_at: dict[int, list[tuple]] = {i: [] for i in range(len(s_support))}
    for q, args in small:
        if args:
            atoms_at[max(s_index[x] for x in args)].append((q, args))

    def backtrack(i: int, image: list, used: set) -> bool:
        if i == len(s_support):
            return local_iso(structure, tuple(s_support), structure, tuple(image)) is not None
        for y in b_support:
            if y in used:
                continue
            image.append(y)
            used.add(y)
            mapping = dict(zip(s_support[: i + 1], image))
            ok = all(
                (q, tuple(mapping[x] for x in args)) in big_set for q, args in atoms_at[i]
            )
            if ok and backtrack(i + 1, image, used):
                return True
            image.pop()
            used.discard(y)
        return False

    return backtrack(0, [], set())
