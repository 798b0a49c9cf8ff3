"""Pricing, hedging and rational stopping for game contracts on binomial
lattices under nonlinear funding, with brute-force and pathwise verification.
"""

from .errors import (
    ConfigError,
    ContractInvariantViolated,
    ContractionViolated,
    DegenerateLattice,
    EngineError,
    InvalidParameters,
    InvalidPenalty,
    InvalidStoppingRule,
    NonConvergence,
    NonFiniteInput,
    NonFiniteState,
    ObstacleOrderViolated,
    OutOfRange,
    TerminalOutOfBand,
    TooLarge,
    TooManyPaths,
)
from .lattice import (
    BenchmarkAccount,
    Lattice,
    NodeProcess,
    TimeGrid,
    benchmark_profile,
    benchmark_wealth,
    build_lattice,
    node_expectation,
    read_node_process,
    write_node_process,
)
from .generators import (
    CustomGenerator,
    DifferentialRates,
    LinearRate,
    ZeroGenerator,
    contraction_ok,
    eval_g,
)
from .stopping import StoppingRule, path_moves, path_up_counts
from .drbsde import (
    DrbsdeInputs,
    DrbsdeSolution,
    GamePayoff,
    evaluate_stopped,
    require_contraction,
    solve_bsde,
    solve_drbsde,
)
from .dynkin import (
    GameValueReport,
    SaddleDiagnosis,
    enumerate_rules,
    game_value_brute,
    interior_nodes,
    rule_count,
    rule_from_id,
    rule_to_id,
    saddle_check,
    snell_inf_for_maximizer,
    snell_sup_for_minimizer,
)
from .pricing import (
    ContractSpec,
    PartyView,
    QuoteResult,
    acceptable_price,
    builtin_game_bond,
    builtin_israeli_put,
    counterparty_obstacles,
    game_payoff,
    hedger_obstacles,
    side_obstacles,
)
from .replication import (
    BatteryReport,
    BreakEvenReport,
    ConditionReport,
    RationalStopReport,
    ReplicationReport,
    WealthPath,
    classify_quadruplet,
    forward_wealth,
    rule_from_region,
    solution_path,
    stopping_time_battery,
    verify_break_even,
    verify_rational_cancellation,
    verify_replication,
)
from .config import ModelBundle, build_bundle, load_config

__version__ = "0.1.0"

__all__ = [
    "BatteryReport",
    "BenchmarkAccount",
    "BreakEvenReport",
    "ConditionReport",
    "ConfigError",
    "ContractInvariantViolated",
    "ContractSpec",
    "ContractionViolated",
    "CustomGenerator",
    "DegenerateLattice",
    "DifferentialRates",
    "DrbsdeInputs",
    "DrbsdeSolution",
    "EngineError",
    "GamePayoff",
    "GameValueReport",
    "InvalidParameters",
    "InvalidPenalty",
    "InvalidStoppingRule",
    "Lattice",
    "LinearRate",
    "ModelBundle",
    "NodeProcess",
    "NonConvergence",
    "NonFiniteInput",
    "NonFiniteState",
    "ObstacleOrderViolated",
    "OutOfRange",
    "PartyView",
    "QuoteResult",
    "RationalStopReport",
    "ReplicationReport",
    "SaddleDiagnosis",
    "StoppingRule",
    "TerminalOutOfBand",
    "TimeGrid",
    "TooLarge",
    "TooManyPaths",
    "WealthPath",
    "ZeroGenerator",
    "acceptable_price",
    "benchmark_profile",
    "benchmark_wealth",
    "build_bundle",
    "build_lattice",
    "builtin_game_bond",
    "builtin_israeli_put",
    "classify_quadruplet",
    "contraction_ok",
    "counterparty_obstacles",
    "enumerate_rules",
    "eval_g",
    "evaluate_stopped",
    "forward_wealth",
    "game_payoff",
    "game_value_brute",
    "hedger_obstacles",
    "interior_nodes",
    "load_config",
    "node_expectation",
    "path_moves",
    "path_up_counts",
    "read_node_process",
    "require_contraction",
    "rule_count",
    "rule_from_id",
    "rule_from_region",
    "rule_to_id",
    "saddle_check",
    "side_obstacles",
    "snell_inf_for_maximizer",
    "snell_sup_for_minimizer",
    "solution_path",
    "solve_bsde",
    "solve_drbsde",
    "stopping_time_battery",
    "verify_break_even",
    "verify_rational_cancellation",
    "verify_replication",
    "write_node_process",
]
