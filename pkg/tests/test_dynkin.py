"""Brute-force game values against the solver, with canonical optimizers."""

import numpy as np
import pytest

from gamehedge import (
    GamePayoff,
    NodeProcess,
    StoppingRule,
    TimeGrid,
    TooLarge,
    ZeroGenerator,
    acceptable_price,
    build_lattice,
    builtin_israeli_put,
    enumerate_rules,
    evaluate_stopped,
    game_payoff,
    game_value_brute,
    interior_nodes,
    rule_count,
    rule_from_id,
    rule_to_id,
    saddle_check,
    side_obstacles,
    snell_sup_for_minimizer,
)
from conftest import random_instance


def test_rule_counts():
    assert rule_count(1) == 2
    assert rule_count(2) == 8
    assert rule_count(5) == 32768


def test_interior_nodes_order():
    assert interior_nodes(2) == [(0, 0), (1, 0), (1, 1)]


def test_enumeration_guard():
    lat = build_lattice(100.0, 1.2, 0.8, TimeGrid(horizon=1.0, n_steps=6))
    with pytest.raises(TooLarge):
        list(enumerate_rules(lat))


def test_rule_id_round_trip():
    for rid in range(rule_count(3)):
        rule = rule_from_id(3, rid)
        assert rule_to_id(rule) == rid


def test_enumerate_rules_yields_all(one_step_lattice):
    rules = list(enumerate_rules(one_step_lattice))
    assert len(rules) == 2
    assert {r.marks(0, 0) for r in rules} == {True, False}
    assert all(r.marks(1, 0) and r.marks(1, 1) for r in rules)


def instance_a_game(lat, contract, view):
    gen = ZeroGenerator()
    inputs = side_obstacles(contract, view, gen, lat)
    payoff = game_payoff(contract, view, lat)
    return gen, inputs, payoff


def test_instance_a_oracle(one_step_lattice, one_step_put, hedger_view):
    gen, inputs, payoff = instance_a_game(one_step_lattice, one_step_put, hedger_view)
    report = game_value_brute(one_step_lattice, gen, inputs.cashflow_increments, payoff)
    assert report.upper_value == pytest.approx(5.0, abs=1e-12)
    assert report.lower_value == pytest.approx(5.0, abs=1e-12)
    assert report.rule_count == 2
    assert report.argmin_sigma.marks(0, 0)
    assert not report.argmax_tau.marks(0, 0)


def test_instance_a_saddle(one_step_lattice, one_step_put, hedger_view):
    gen, inputs, payoff = instance_a_game(one_step_lattice, one_step_put, hedger_view)
    report = game_value_brute(one_step_lattice, gen, inputs.cashflow_increments, payoff)
    diag = saddle_check(report, 5.0, tol=1e-10)
    assert diag.matches_upper and diag.has_value
    off = saddle_check(report, 4.9, tol=1e-10)
    assert not off.matches_upper


def test_slack_payoff_reduces_to_expectation(one_step_lattice):
    # stopping early is never beneficial: minimizer sees a huge upper payoff,
    # maximizer a hugely negative lower payoff, so both wait for the terminal
    term = np.array([20.0, 0.0])
    payoff = GamePayoff(
        on_lower=NodeProcess.from_rows([np.array([-1e6]), term]),
        on_upper=NodeProcess.from_rows([np.array([1e6]), term]),
        on_tie=NodeProcess.from_rows([np.array([0.0]), term]),
    )
    report = game_value_brute(
        one_step_lattice, ZeroGenerator(), NodeProcess.zeros(1), payoff
    )
    assert report.upper_value == pytest.approx(10.0, abs=1e-12)
    assert report.lower_value == pytest.approx(10.0, abs=1e-12)
    # canonical optimizers mark nothing early (fewest marks tie-break)
    assert report.argmin_sigma.marked_nodes() == ((1, 0), (1, 1))
    assert report.argmax_tau.marked_nodes() == ((1, 0), (1, 1))


def american_put_value(lat, strike):
    """Independent optimal-stopping induction for the plain American put."""
    n, q = lat.n_steps, lat.q
    v = np.maximum(strike - lat.spot.row(n), 0.0)
    for k in range(n - 1, -1, -1):
        cont = q * v[1:] + (1.0 - q) * v[:-1]
        v = np.maximum(strike - lat.spot.row(k), cont)
    return float(v[0])


def test_large_penalty_equals_american_put():
    lat = build_lattice(100.0, 1.2, 0.8, TimeGrid(horizon=1.0, n_steps=4))
    contract = builtin_israeli_put(lat, strike=100.0, penalty=30.0)
    from gamehedge import BenchmarkAccount, PartyView

    view = PartyView(side="hedger", endowment=0.0, acct=BenchmarkAccount(0.0, 0.0))
    gen, inputs, payoff = instance_a_game(lat, contract, view)
    report = game_value_brute(lat, gen, inputs.cashflow_increments, payoff)
    assert report.upper_value == pytest.approx(american_put_value(lat, 100.0), abs=1e-12)
    # cancellation is dead weight at this penalty: the canonical minimizer
    # rule marks no interior node
    assert report.argmin_sigma.marked_nodes() == tuple(
        (4, j) for j in range(5)
    )


def test_oracle_equals_drbsde_on_random_instances(rng):
    for _ in range(15):
        lat, gen, contract, views = random_instance(rng, 4)
        for side in ("hedger", "counterparty"):
            quote = acceptable_price(contract, views[side], gen, lat)
            inputs = side_obstacles(contract, views[side], gen, lat)
            payoff = game_payoff(contract, views[side], lat)
            report = game_value_brute(lat, gen, inputs.cashflow_increments, payoff)
            assert report.upper_value >= report.lower_value - 1e-12
            diag = saddle_check(report, quote.y0, tol=1e-10)
            assert diag.matches_upper, (side, quote.y0, report.upper_value)


def test_first_contact_rule_attains_value(rng):
    from gamehedge.replication import rule_from_region

    for _ in range(10):
        lat, gen, contract, views = random_instance(rng, 4)
        quote = acceptable_price(contract, views["hedger"], gen, lat)
        payoff = game_payoff(contract, views["hedger"], lat)
        cash = quote.inputs.cashflow_increments
        sigma = rule_from_region(lat.n_steps, quote.region_sigma)
        sup_against = snell_sup_for_minimizer(lat, gen, cash, payoff, sigma)
        assert sup_against == pytest.approx(quote.y0, abs=1e-10)


def test_obstacle_monotonicity(one_step_lattice, one_step_put, hedger_view):
    gen, inputs, payoff = instance_a_game(one_step_lattice, one_step_put, hedger_view)
    base = game_value_brute(one_step_lattice, gen, inputs.cashflow_increments, payoff)

    def raised(proc, amount):
        return NodeProcess.from_rows([proc.row(k) + amount for k in range(proc.n_steps + 1)])

    higher = GamePayoff(
        on_lower=payoff.on_lower, on_upper=raised(payoff.on_upper, 1.0), on_tie=payoff.on_tie
    )
    up_report = game_value_brute(one_step_lattice, gen, inputs.cashflow_increments, higher)
    assert up_report.upper_value >= base.upper_value - 1e-12


def test_stopped_value_matches_evaluate(one_step_lattice, one_step_put, hedger_view):
    gen, inputs, payoff = instance_a_game(one_step_lattice, one_step_put, hedger_view)
    root = StoppingRule.from_nodes(1, [(0, 0)])
    never = StoppingRule.never_early(1)
    cash = inputs.cashflow_increments
    from gamehedge.dynkin import stopped_values_for_maximizer_rules

    vals = stopped_values_for_maximizer_rules(one_step_lattice, gen, cash, payoff, root)
    # maximizer rule ids: bit for node (0,0); id 0 waits, id 1 stops at root
    assert vals[0] == pytest.approx(evaluate_stopped(one_step_lattice, gen, cash, payoff, root, never))
    assert vals[1] == pytest.approx(evaluate_stopped(one_step_lattice, gen, cash, payoff, root, root))
