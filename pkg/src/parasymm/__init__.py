"""parasymm: safety verification of parameterized programs over symmetric topologies."""

from .formulas import (
    And,
    Apply,
    Atom,
    Bottom,
    DataAtom,
    Eq,
    FALSE,
    Formula,
    FormulaError,
    FormulaParser,
    LocAtom,
    NodeConst,
    Not,
    Or,
    Top,
    TRUE,
    Var,
    Vocabulary,
    conj,
    disj,
    dualize,
    eval_ground,
    format_formula,
    format_term,
    substitute,
    to_dnf,
)
from .topology import (
    EqClass,
    Forest,
    ForestLimit,
    ForestNode,
    LocalIso,
    Ring,
    RingNode,
    Star,
    StarLimit,
    StarNode,
    Structure,
    Substructure,
    TopologyError,
    class_formula,
    covers,
    eq_classes,
    local_iso,
    locally_symmetric,
    neighbourhood,
    parse_structure,
    solve,
    structure_selector,
    sub_k,
)
from .programs import (
    Command,
    Instance,
    OracleResult,
    ProgramError,
    ProgramSpec,
    instantiate,
    is_error_run,
    load_program,
    load_program_file,
    oracle_check,
    run_feasible,
)
from .hoare import (
    BoundProgram,
    HoareError,
    HoareTriple,
    derive_member,
    load_basis,
    dump_basis,
    max_boolean_basis,
    normalize,
    sparam,
    triple_valid,
)
from .ashcroft import (
    AshcroftInvariant,
    AshcroftReport,
    ashcroft_check,
    deextend,
    extract_triples,
    load_invariant,
    validate_extracted,
)
from .automata import (
    AutomatonError,
    PredicateAutomaton,
    accepts,
    complement,
    dump_pa,
    initial_configs,
    intersect,
    load_pa,
    semantic_delta,
    successors,
)
from .translate import add_initialization, basis_to_pa, program_to_pa, TranslateError
from .emptiness import (
    EmptinessResult,
    InclusionResult,
    check_emptiness,
    inclusion_check,
    repr_succ,
)

__version__ = "0.1.0"
