"""Backward-coverability emptiness for predicate automata.

Worklist search from the initial cubes: a dequeued configuration is expanded
only if no closed configuration covers into it, successors are enumerated per
representative letter node (one witness node per symmetry class of the
support extended by one), and reaching an accepting configuration yields the
witness word.  Sound and complete for non-emptiness; termination is empirical
and guarded by step and support limits.
"""

from __future__ import annotations

from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Optional

from .automata import (
    Config,
    PredicateAutomaton,
    config_key,
    config_support,
    initial_configs,
    successors,
)
from .programs import Letter
from .topology import covers

EMPTY = "empty"
NONEMPTY = "nonempty"
UNKNOWN = "unknown"

DEFAULT_MAX_STEPS = 100_000
DEFAULT_MAX_SUPPORT = 32


@dataclass
class EmptinessResult:
    verdict: str
    witness: Optional[tuple[Letter, ...]] = None
    expansions: int = 0
    enqueued: int = 0
    pruned: int = 0

    @property
    def empty(self) -> bool:
        return self.verdict == EMPTY


def repr_succ(A: PredicateAutomaton, config: Config,
              delta_cache: Optional[dict] = None) -> list[tuple[Letter, Config]]:
    """Successors under one representative letter per extension class of the support."""
    support = config_support(config, A.structure)
    out: list[tuple[Letter, Config]] = []
    for b in A.structure.extensions(support):
        for name in A.commands:
            for c2 in successors(A, config, (name, b), delta_cache):
                out.append(((name, b), c2))
    return out


class _CoverIndex:
    """Closed configurations with cheap necessary-condition prefiltering."""

    def __init__(self, structure, use_covering: bool):
        self.structure = structure
        self.use_covering = use_covering
        self.entries: list[tuple[Config, frozenset, Counter, int]] = []
        self.exact: set[Config] = set()

    @staticmethod
    def _digest(config: Config) -> tuple[frozenset, Counter, int]:
        nullary = frozenset(q for q, args in config if not args)
        counts = Counter(q for q, _ in config)
        support = len({a for _, args in config for a in args})
        return nullary, counts, support

    def add(self, config: Config):
        self.exact.add(config)
        self.entries.append((config,) + self._digest(config))

    def covers_into(self, config: Config) -> bool:
        if config in self.exact:
            return True
        if not self.use_covering:
            return False
        nullary, counts, support = self._digest(config)
        for old, old_nullary, old_counts, old_support in reversed(self.entries):
            if old_support > support or not old_nullary <= nullary:
                continue
            if any(old_counts[q] > counts.get(q, 0) for q in old_counts):
                continue
            if covers(self.structure, old, config):
                return True
        return False


def check_emptiness(A: PredicateAutomaton, max_steps: int = DEFAULT_MAX_STEPS,
                    max_support: int = DEFAULT_MAX_SUPPORT,
                    pruning: bool = True) -> EmptinessResult:
    """Semi-algorithm for emptiness; NonEmpty answers carry a witness word."""
    use_covering = pruning and A.structure.homogeneous
    closed = _CoverIndex(A.structure, use_covering)
    parents: dict[Config, Optional[tuple[Config, Letter]]] = {}
    delta_cache: dict = {}

    def witness_for(config: Config, letter: Optional[Letter]) -> tuple[Letter, ...]:
        trail = [] if letter is None else [letter]
        cur = config
        while parents[cur] is not None:
            prev, let = parents[cur]
            trail.append(let)
            cur = prev
        return tuple(trail)  # trail is built back-to-front, i.e. in word order

    result = EmptinessResult(verdict=UNKNOWN)
    queue: deque[Config] = deque()
    for c in initial_configs(A):
        if A.is_accepting(c):
            return EmptinessResult(NONEMPTY, witness=(), expansions=0)
        if c not in parents:
            parents[c] = None
            queue.append(c)
    result.enqueued = len(queue)

    truncated = False
    while queue:
        config = queue.popleft()
        if closed.covers_into(config):
            result.pruned += 1
            continue
        result.expansions += 1
        if result.expansions > max_steps:
            return result
        for letter, succ in repr_succ(A, config, delta_cache):
            if succ in parents or succ in closed.exact:
                continue
            parents[succ] = (config, letter)
            if A.is_accepting(succ):
                result.verdict = NONEMPTY
                result.witness = witness_for(config, letter)
                return result
            if len(config_support(succ, A.structure)) > max_support:
                truncated = True
                continue
            queue.append(succ)
            result.enqueued += 1
        closed.add(config)
    result.verdict = UNKNOWN if truncated else EMPTY
    return result


INCLUDED = "included"
COUNTEREXAMPLE = "counterexample"


@dataclass
class InclusionResult:
    verdict: str  # included | counterexample | unknown
    counterexample: Optional[tuple[Letter, ...]] = None
    emptiness: Optional[EmptinessResult] = None


def inclusion_check(A_P: PredicateAutomaton, A_H: PredicateAutomaton,
                    max_steps: int = DEFAULT_MAX_STEPS,
                    max_support: int = DEFAULT_MAX_SUPPORT,
                    pruning: bool = True) -> InclusionResult:
    """L(A_P) included in L(A_H), decided through emptiness of the gap automaton."""
    from .automata import complement, intersect

    gap = intersect(A_P, complement(A_H))
    res = check_emptiness(gap, max_steps=max_steps, max_support=max_support, pruning=pruning)
    if res.verdict == EMPTY:
        return InclusionResult(INCLUDED, emptiness=res)
    if res.verdict == NONEMPTY:
        return InclusionResult(COUNTEREXAMPLE, counterexample=res.witness, emptiness=res)
    return InclusionResult(UNKNOWN, emptiness=res)
