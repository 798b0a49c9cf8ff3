"""Brute-force stopped-game oracle over enumerated stopping rules.

Rules are enumerated as bitmasks over interior nodes sorted by
(step, up_count); the terminal row is always marked.  The oracle computes

    upper_value = min over minimizer rules of max over maximizer rules
    lower_value = max over maximizer rules of min over minimizer rules

by two independent routes: joint enumeration of rule pairs (vectorized over
a pairs matrix, used whenever the pair count fits the cap) and a per-rule
dynamic program where the opponent plays optimally node by node.  Both
routes share the solvers' implicit one-step arithmetic, so agreement with
the reflected backward solve is a genuine cross-check, not a tautology.

Naming follows the hedger orientation (sigma = minimizer, tau = maximizer);
for counterparty games the same engine applies with the counterparty's
exercise in the minimizer seat.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .drbsde import GamePayoff, _implicit_row
from .errors import TooLarge
from .generators import Generator
from .lattice import Lattice, NodeProcess
from .stopping import StoppingRule

__all__ = [
    "MAX_INTERIOR_NODES",
    "DEFAULT_PAIR_LIMIT",
    "GameValueReport",
    "SaddleDiagnosis",
    "interior_nodes",
    "rule_count",
    "enumerate_rules",
    "rule_from_id",
    "rule_to_id",
    "game_value_brute",
    "saddle_check",
    "sup_values_by_minimizer_rule",
    "inf_values_by_maximizer_rule",
    "stopped_values_for_maximizer_rules",
    "snell_sup_for_minimizer",
    "snell_inf_for_maximizer",
]

MAX_INTERIOR_NODES = 15
DEFAULT_PAIR_LIMIT = 10_000_000


def interior_nodes(n_steps: int) -> list[tuple[int, int]]:
    """Interior (step, up_count) pairs in enumeration order."""
    return [(k, j) for k in range(n_steps) for j in range(k + 1)]


def rule_count(n_steps: int) -> int:
    """Number of stopping rules per player."""
    return 1 << (n_steps * (n_steps + 1) // 2)


def _require_enumerable(n_steps: int) -> int:
    m = n_steps * (n_steps + 1) // 2
    if m > MAX_INTERIOR_NODES:
        raise TooLarge(
            f"{1 << m} stopping rules per player ({m} interior nodes) exceed the "
            f"{1 << MAX_INTERIOR_NODES} cap"
        )
    return m


def rule_from_id(n_steps: int, rid: int) -> StoppingRule:
    """Decode a rule bitmask; bit i marks the i-th interior node."""
    nodes = interior_nodes(n_steps)
    marked = [nodes[i] for i in range(len(nodes)) if (rid >> i) & 1]
    return StoppingRule.from_nodes(n_steps, marked)


def rule_to_id(rule: StoppingRule) -> int:
    rid = 0
    for i, (k, j) in enumerate(interior_nodes(rule.n_steps)):
        if rule.marks(k, j):
            rid |= 1 << i
    return rid


def enumerate_rules(lat: Lattice) -> Iterator[StoppingRule]:
    """All stopping rules in bitmask order; raises TooLarge beyond the cap."""
    m = _require_enumerable(lat.n_steps)
    for rid in range(1 << m):
        yield rule_from_id(lat.n_steps, rid)


@dataclass(frozen=True, eq=False)
class GameValueReport:
    """Both one-sided game values and canonical optimizers over enumerated rules."""

    upper_value: float
    lower_value: float
    argmin_sigma: StoppingRule
    argmax_tau: StoppingRule
    rule_count: int


@dataclass(frozen=True)
class SaddleDiagnosis:
    """Comparison of a backward-solve value against the brute-force game values."""

    matches_upper: bool
    has_value: bool
    gap_to_solution: float
    value_gap: float


def _node_bits(ids: np.ndarray, bit_index: int) -> np.ndarray:
    return ((ids >> bit_index) & 1).astype(bool)


def _per_rule_dp(
    lat: Lattice,
    gen: Generator,
    cashflow_increments: NodeProcess,
    payoff: GamePayoff,
    minimizer: bool,
) -> np.ndarray:
    """For every rule of one player, the opponent's best response value at the root.

    minimizer=True enumerates the minimizer's rules (returns per-rule sup),
    minimizer=False the maximizer's (per-rule inf).
    """
    n, dt, q = lat.n_steps, lat.dt, lat.q
    m = _require_enumerable(n)
    ids = np.arange(1 << m, dtype=np.int64)
    nodes = interior_nodes(n)
    bit_of = {node: i for i, node in enumerate(nodes)}

    tie_t = payoff.on_tie.row(n)
    vals = [np.full(ids.shape, tie_t[j]) for j in range(n + 1)]
    for k in range(n - 1, -1, -1):
        s_next = lat.spot.row(k + 1)
        s_row = lat.spot.row(k)
        new_vals = []
        for j in range(k + 1):
            z = (vals[j + 1] - vals[j]) / (s_next[j + 1] - s_next[j])
            e = q * vals[j + 1] + (1.0 - q) * vals[j]
            rhs = e - cashflow_increments.at(k, j)
            cont, _, _ = _implicit_row(gen, k * dt, rhs, z, s_row[j], dt)
            lo = payoff.on_lower.at(k, j)
            hi = payoff.on_upper.at(k, j)
            tie = payoff.on_tie.at(k, j)
            bit = _node_bits(ids, bit_of[(k, j)])
            if minimizer:
                stopped = max(tie, hi)  # opponent may force the tie, never gains
                free = np.maximum(lo, cont)
            else:
                stopped = min(tie, lo)
                free = np.minimum(hi, cont)
            new_vals.append(np.where(bit, stopped, free))
        vals = new_vals
    return vals[0]


def sup_values_by_minimizer_rule(
    lat: Lattice, gen: Generator, cashflow_increments: NodeProcess, payoff: GamePayoff
) -> np.ndarray:
    """sup over maximizer behaviour of the stopped value, per minimizer rule id."""
    return _per_rule_dp(lat, gen, cashflow_increments, payoff, minimizer=True)


def inf_values_by_maximizer_rule(
    lat: Lattice, gen: Generator, cashflow_increments: NodeProcess, payoff: GamePayoff
) -> np.ndarray:
    """inf over minimizer behaviour of the stopped value, per maximizer rule id."""
    return _per_rule_dp(lat, gen, cashflow_increments, payoff, minimizer=False)


def _pair_matrix(
    lat: Lattice,
    gen: Generator,
    cashflow_increments: NodeProcess,
    payoff: GamePayoff,
    sigma_ids: np.ndarray,
    tau_ids: np.ndarray,
) -> np.ndarray:
    """Root values for every (minimizer rule, maximizer rule) pair, vectorized jointly."""
    n, dt, q = lat.n_steps, lat.dt, lat.q
    nodes = interior_nodes(n)
    bit_of = {node: i for i, node in enumerate(nodes)}
    shape = (sigma_ids.shape[0], tau_ids.shape[0])

    tie_t = payoff.on_tie.row(n)
    vals = [np.full(shape, tie_t[j]) for j in range(n + 1)]
    for k in range(n - 1, -1, -1):
        s_next = lat.spot.row(k + 1)
        s_row = lat.spot.row(k)
        new_vals = []
        for j in range(k + 1):
            z = (vals[j + 1] - vals[j]) / (s_next[j + 1] - s_next[j])
            e = q * vals[j + 1] + (1.0 - q) * vals[j]
            rhs = e - cashflow_increments.at(k, j)
            cont, _, _ = _implicit_row(gen, k * dt, rhs, z, s_row[j], dt)
            sig = _node_bits(sigma_ids, bit_of[(k, j)])[:, None]
            tau = _node_bits(tau_ids, bit_of[(k, j)])[None, :]
            node_val = np.where(
                sig & tau,
                payoff.on_tie.at(k, j),
                np.where(sig, payoff.on_upper.at(k, j),
                         np.where(tau, payoff.on_lower.at(k, j), cont)),
            )
            new_vals.append(node_val)
        vals = new_vals
    return vals[0]


def stopped_values_for_maximizer_rules(
    lat: Lattice,
    gen: Generator,
    cashflow_increments: NodeProcess,
    payoff: GamePayoff,
    sigma: StoppingRule,
) -> np.ndarray:
    """Stopped value against a fixed minimizer rule, for every maximizer rule id."""
    m = _require_enumerable(lat.n_steps)
    sigma_ids = np.array([rule_to_id(sigma)], dtype=np.int64)
    tau_ids = np.arange(1 << m, dtype=np.int64)
    return _pair_matrix(lat, gen, cashflow_increments, payoff, sigma_ids, tau_ids)[0]


def _optimal_stop_dp(
    lat: Lattice,
    gen: Generator,
    cashflow_increments: NodeProcess,
    payoff: GamePayoff,
    rule: StoppingRule,
    rule_is_minimizer: bool,
) -> float:
    """Best-response value against a fixed rule by scalar dynamic programming."""
    n, dt, q = lat.n_steps, lat.dt, lat.q
    vals = payoff.on_tie.row(n).copy()
    for k in range(n - 1, -1, -1):
        s_next = lat.spot.row(k + 1)
        z = (vals[1:] - vals[:-1]) / (s_next[1:] - s_next[:-1])
        e = q * vals[1:] + (1.0 - q) * vals[:-1]
        rhs = e - cashflow_increments.row(k)
        cont, _, _ = _implicit_row(gen, k * dt, rhs, z, lat.spot.row(k), dt)
        marked = rule.row(k)
        lo, hi = payoff.on_lower.row(k), payoff.on_upper.row(k)
        tie = payoff.on_tie.row(k)
        if rule_is_minimizer:
            vals = np.where(marked, np.maximum(tie, hi), np.maximum(lo, cont))
        else:
            vals = np.where(marked, np.minimum(tie, lo), np.minimum(hi, cont))
    return float(vals[0])


def snell_sup_for_minimizer(
    lat: Lattice, gen: Generator, cashflow_increments: NodeProcess,
    payoff: GamePayoff, sigma: StoppingRule,
) -> float:
    """sup over all maximizer stopping behaviour against the fixed minimizer rule."""
    return _optimal_stop_dp(lat, gen, cashflow_increments, payoff, sigma, rule_is_minimizer=True)


def snell_inf_for_maximizer(
    lat: Lattice, gen: Generator, cashflow_increments: NodeProcess,
    payoff: GamePayoff, tau: StoppingRule,
) -> float:
    """inf over all minimizer stopping behaviour against the fixed maximizer rule."""
    return _optimal_stop_dp(lat, gen, cashflow_increments, payoff, tau, rule_is_minimizer=False)


def _canonical_optimizer(values: np.ndarray, target: float, n_steps: int) -> StoppingRule:
    """Among rules attaining target exactly, pick fewest marks then lexicographic node list."""
    cands = np.nonzero(values == target)[0]
    pops = np.bitwise_count(cands.astype(np.uint64))
    cands = cands[pops == pops.min()]
    best = min(cands, key=lambda rid: _bit_tuple(int(rid)))
    return rule_from_id(n_steps, int(best))


def _bit_tuple(rid: int) -> tuple[int, ...]:
    return tuple(i for i in range(rid.bit_length()) if (rid >> i) & 1)


def game_value_brute(
    lat: Lattice,
    gen: Generator,
    cashflow_increments: NodeProcess,
    payoff: GamePayoff,
    pair_limit: int = DEFAULT_PAIR_LIMIT,
) -> GameValueReport:
    """Both game values over all enumerated rule pairs, with canonical optimizers.

    Uses joint pair enumeration when the pair count fits pair_limit and the
    per-rule dynamic program otherwise; when both run their results are
    cross-checked before reporting.
    """
    n = lat.n_steps
    m = _require_enumerable(n)
    n_rules = 1 << m

    sup_dp = sup_values_by_minimizer_rule(lat, gen, cashflow_increments, payoff)
    inf_dp = inf_values_by_maximizer_rule(lat, gen, cashflow_increments, payoff)
    sup_vals, inf_vals = sup_dp, inf_dp

    if n_rules * n_rules <= pair_limit:
        ids = np.arange(n_rules, dtype=np.int64)
        pairs = _pair_matrix(lat, gen, cashflow_increments, payoff, ids, ids)
        sup_pairs = pairs.max(axis=1)
        inf_pairs = pairs.min(axis=0)
        scale = 1.0 + float(np.max(np.abs(sup_pairs)))
        assert float(np.max(np.abs(sup_pairs - sup_dp))) <= 1e-10 * scale, (
            "pair enumeration and per-rule dynamic program disagree"
        )
        assert float(np.max(np.abs(inf_pairs - inf_dp))) <= 1e-10 * scale, (
            "pair enumeration and per-rule dynamic program disagree"
        )
        sup_vals, inf_vals = sup_pairs, inf_pairs

    upper_value = float(sup_vals.min())
    lower_value = float(inf_vals.max())
    return GameValueReport(
        upper_value=upper_value,
        lower_value=lower_value,
        argmin_sigma=_canonical_optimizer(sup_vals, upper_value, n),
        argmax_tau=_canonical_optimizer(inf_vals, lower_value, n),
        rule_count=n_rules,
    )


def saddle_check(report: GameValueReport, y0: float, tol: float = 1e-10) -> SaddleDiagnosis:
    """Flags for value existence and agreement of the backward solve with the game."""
    gap = abs(y0 - report.upper_value)
    value_gap = abs(report.upper_value - report.lower_value)
    return SaddleDiagnosis(
        matches_upper=gap <= tol,
        has_value=value_gap <= tol,
        gap_to_solution=gap,
        value_gap=value_gap,
    )
