"""Parameterized Boolean programs, instantiation and the explicit-state oracle.

A program is a finite command set over locations, with per-class deterministic
update tables on the cells named by each command's rw terms (one term variable
``v`` for the executing node).  Guarded commands are encoded as table
partiality: a missing row blocks.

Program spec files use the versioned JSON schema ``parasymm-prog/1``.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional

from .formulas import FormulaParser, Term, Var, eval_term, format_term, term_vars
from .topology import EqClass, Structure, eq_classes, local_iso

PROG_SCHEMA = "parasymm-prog/1"

Letter = tuple[str, object]  # (command name, node)


class ProgramError(Exception):
    pass


Row = tuple[int, ...]
UpdateTable = dict[Row, Optional[Row]]  # None blocks


@dataclass
class Command:
    name: str
    src: str
    tgt: str
    rw: tuple[Term, ...]
    updates: dict[str, UpdateTable]  # per ≃-class id of the executing node


class ProgramSpec:
    def __init__(self, locations: Iterable[str], l_init: str, l_err: str,
                 bitwidth: int, commands: Iterable[Command],
                 code: Mapping[str, tuple[str, ...]]):
        self.locations = tuple(locations)
        self.l_init = l_init
        self.l_err = l_err
        self.bitwidth = bitwidth
        self.commands = {c.name: c for c in commands}
        self.code = {k: tuple(v) for k, v in code.items()}
        self._validate()

    @property
    def data_domain(self) -> range:
        return range(1 << self.bitwidth)

    def _validate(self):
        locs = set(self.locations)
        if len(locs) != len(self.locations):
            raise ProgramError("duplicate locations")
        if self.l_init not in locs or self.l_err not in locs:
            raise ProgramError("init/err location missing")
        if self.l_init == self.l_err:
            raise ProgramError("init location equals the error location")
        if self.bitwidth < 1:
            raise ProgramError("bitwidth must be positive")
        top = 1 << self.bitwidth
        for c in self.commands.values():
            if c.src not in locs or c.tgt not in locs:
                raise ProgramError(f"command {c.name}: unknown location")
            if c.src == self.l_err:
                raise ProgramError(f"command {c.name}: the error location must be a sink")
            for t in c.rw:
                if term_vars(t) - {"v"}:
                    raise ProgramError(f"command {c.name}: rw terms must use only v")
            for cid, table in c.updates.items():
                for key, out in table.items():
                    if len(key) != len(c.rw) or (out is not None and len(out) != len(c.rw)):
                        raise ProgramError(f"command {c.name}: row width mismatch")
                    vals = key + (out or ())
                    if any(x < 0 or x >= top for x in vals):
                        raise ProgramError(f"command {c.name}: value outside the data domain")
        for cid, names in self.code.items():
            for n in names:
                if n not in self.commands:
                    raise ProgramError(f"code map names unknown command {n}")
                if cid not in self.commands[n].updates:
                    raise ProgramError(f"command {n} enabled on class {cid} without a table")


# ---------------------------------------------------------------------------
# JSON io
# ---------------------------------------------------------------------------

def _parse_row(text: str) -> Row:
    return tuple(int(x) for x in text.split(",")) if text else ()


def _format_row(row: Row) -> str:
    return ",".join(str(x) for x in row)


def load_program(data, parser: FormulaParser) -> ProgramSpec:
    """Load a program spec from a dict or JSON text (schema parasymm-prog/1)."""
    if isinstance(data, str):
        data = json.loads(data)
    if data.get("schema", PROG_SCHEMA) != PROG_SCHEMA:
        raise ProgramError(f"unsupported schema {data.get('schema')!r}")
    commands = []
    for entry in data["commands"]:
        updates: dict[str, UpdateTable] = {}
        for cid, table in entry.get("updates", {}).items():
            rows: UpdateTable = {}
            for key, out in table.items():
                rows[_parse_row(key)] = None if out == "block" else _parse_row(out)
            updates[cid] = rows
        commands.append(
            Command(
                name=entry["name"],
                src=entry["src"],
                tgt=entry["tgt"],
                rw=tuple(parser.term(t) for t in entry["rw"]),
                updates=updates,
            )
        )
    return ProgramSpec(
        locations=data["locations"],
        l_init=data["init"],
        l_err=data["err"],
        bitwidth=data["bitwidth"],
        commands=commands,
        code={k: tuple(v) for k, v in data["code"].items()},
    )


def load_program_file(path, parser: FormulaParser) -> ProgramSpec:
    with open(path) as fh:
        return load_program(fh.read(), parser)


def dump_program(spec: ProgramSpec) -> dict:
    return {
        "schema": PROG_SCHEMA,
        "locations": list(spec.locations),
        "init": spec.l_init,
        "err": spec.l_err,
        "bitwidth": spec.bitwidth,
        "commands": [
            {
                "name": c.name,
                "src": c.src,
                "tgt": c.tgt,
                "rw": [format_term(t) for t in c.rw],
                "updates": {
                    cid: {
                        _format_row(k): ("block" if out is None else _format_row(out))
                        for k, out in sorted(table.items())
                    }
                    for cid, table in sorted(c.updates.items())
                },
            }
            for c in spec.commands.values()
        ],
        "code": {cid: list(names) for cid, names in sorted(spec.code.items())},
    }


# ---------------------------------------------------------------------------
# Instantiation
# ---------------------------------------------------------------------------

GlobalState = tuple[tuple[str, ...], tuple[int, ...]]  # locations, values per node


class Instance:
    """A program spec bound to a finite structure."""

    def __init__(self, spec: ProgramSpec, structure: Structure, reference: Structure):
        self.spec = spec
        self.structure = structure
        self.reference = reference
        self.nodes = structure.nodes()
        self.node_pos = {x: i for i, x in enumerate(self.nodes)}
        self.node_class: dict = {}
        self.enabled: dict = {}
        self.rw_nodes: dict[tuple[str, object], tuple] = {}
        self.rows: dict[tuple[str, object], UpdateTable] = {}

        ref_classes = eq_classes(reference, 1)
        by_id = {c.class_id: c for c in ref_classes}
        for cid in spec.code:
            if cid not in by_id:
                continue  # a class of another family member; unused here
        for x in self.nodes:
            cls = None
            for c in ref_classes:
                if local_iso(structure, (x,), reference, c.representative):
                    cls = c
                    break
            if cls is None or cls.class_id not in spec.code:
                raise ProgramError(
                    f"node {structure.encode_node(x)} has no code-map entry"
                )
            self.node_class[x] = cls.class_id
            self.enabled[x] = spec.code[cls.class_id]
            for name in self.enabled[x]:
                cmd = spec.commands[name]
                cells = tuple(eval_term(t, structure, env={"v": x}) for t in cmd.rw)
                if len(set(cells)) != len(cells):
                    raise ProgramError(
                        f"rw terms of {name} alias at node {structure.encode_node(x)}"
                    )
                self.rw_nodes[(name, x)] = cells
                self.rows[(name, x)] = cmd.updates[cls.class_id]

    # -- semantics ---------------------------------------------------------

    def initial_state(self) -> GlobalState:
        n = len(self.nodes)
        return ((self.spec.l_init,) * n, (0,) * n)

    def letters(self) -> list[Letter]:
        out = []
        for name in sorted(self.spec.commands):
            for x in self.nodes:
                if name in self.enabled[x]:
                    out.append((name, x))
        return out

    def step(self, state: GlobalState, letter: Letter) -> Optional[GlobalState]:
        name, x = letter
        if x not in self.node_pos:
            raise ProgramError("letter node outside the carrier")
        if name not in self.enabled.get(x, ()):
            return None
        cmd = self.spec.commands[name]
        locs, vals = state
        i = self.node_pos[x]
        if locs[i] != cmd.src:
            return None
        cells = self.rw_nodes[(name, x)]
        key = tuple(vals[self.node_pos[c]] for c in cells)
        out = self.rows[(name, x)].get(key)
        if out is None:
            return None
        new_vals = list(vals)
        for c, val in zip(cells, out):
            new_vals[self.node_pos[c]] = val
        new_locs = list(locs)
        new_locs[i] = cmd.tgt
        return (tuple(new_locs), tuple(new_vals))

    def is_error_state(self, state: GlobalState) -> bool:
        return self.spec.l_err in state[0]

    def format_letter(self, letter: Letter) -> str:
        return f"{letter[0]}@{self.structure.encode_node(letter[1])}"


def instantiate(spec: ProgramSpec, structure: Structure, reference: Structure) -> Instance:
    return Instance(spec, structure, reference)


# ---------------------------------------------------------------------------
# Explicit-state oracle
# ---------------------------------------------------------------------------

@dataclass
class OracleResult:
    verdict: str  # safe | unsafe | bound-exceeded
    witness: Optional[tuple[Letter, ...]] = None
    states: int = 0


def oracle_check(instance: Instance, max_states: int = 1_000_000) -> OracleResult:
    """Breadth-first exploration from the zero-initialized state.

    Unsafe verdicts carry a minimal-length feasible trace into the error
    location; the BFS order is deterministic, so witnesses are reproducible.
    """
    init = instance.initial_state()
    letters = instance.letters()
    parents: dict[GlobalState, Optional[tuple[GlobalState, Letter]]] = {init: None}
    if instance.is_error_state(init):
        return OracleResult("unsafe", (), 1)
    queue = deque([init])
    while queue:
        state = queue.popleft()
        for letter in letters:
            succ = instance.step(state, letter)
            if succ is None or succ in parents:
                continue
            parents[succ] = (state, letter)
            if instance.is_error_state(succ):
                trace = []
                cur: Optional[GlobalState] = succ
                while parents[cur] is not None:
                    prev, let = parents[cur]
                    trace.append(let)
                    cur = prev
                return OracleResult("unsafe", tuple(reversed(trace)), len(parents))
            if len(parents) > max_states:
                return OracleResult("bound-exceeded", None, len(parents))
            queue.append(succ)
    return OracleResult("safe", None, len(parents))


def location_run(instance: Instance, trace: Iterable[Letter]) -> Optional[tuple[str, ...]]:
    """Final location map if the trace is a syntactic run from l_init, else None."""
    locs = [instance.spec.l_init] * len(instance.nodes)
    for name, x in trace:
        if name not in instance.spec.commands:
            raise ProgramError(f"unknown command {name}")
        if name not in instance.enabled.get(x, ()):
            return None
        cmd = instance.spec.commands[name]
        i = instance.node_pos[x]
        if locs[i] != cmd.src:
            return None
        locs[i] = cmd.tgt
    return tuple(locs)


def is_error_run(instance: Instance, trace: Iterable[Letter]) -> bool:
    """Syntactic-run membership plus the terminal error condition."""
    final = location_run(instance, trace)
    return final is not None and instance.spec.l_err in final


def run_feasible(instance: Instance, trace: Iterable[Letter]) -> bool:
    """Whether the trace executes from the zero-initialized state."""
    trace = list(trace)
    if location_run(instance, trace) is None:
        return False
    state = instance.initial_state()
    for letter in trace:
        state = instance.step(state, letter)
        if state is None:
            return False
    return True
