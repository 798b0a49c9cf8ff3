"""Contracts, party views and acceptable prices.

A contract is three hedger-signed payoff processes plus a cumulative flow:

* ``Xh``  received by the hedger if the hedger cancels first (it pays the
  counterparty a premium, so typically the most negative),
* ``Xc``  received if the counterparty exercises first,
* ``Xbar`` received on a simultaneous stop, squeezed between the other two,
* ``dA``  hedger-signed flow accrued over each step.

The hedger's acceptable price is the extra initial wealth that lets it stay
benchmark-safe whatever the counterparty does; the counterparty's is the
largest premium it can pay and stay benchmark-safe itself.  Both come from
the same doubly reflected backward solve, with obstacles built from the
benchmark wealth of the respective endowment:

* hedger:        lower = Vb - Xc, upper = Vb - Xh, terminal = Vb - Xbar
* counterparty:  lower = Xh + Vb, upper = Xc + Vb, terminal = Xbar + Vb

and the counterparty pays the flow, so its cashflow is -dA.  The price is
y0 - x for the hedger and x - y0 for the counterparty.

Stopping regions are reported as raw equality sets of the solved value
against the obstacles (region_sigma, region_tau) and as strict-positivity
sets of the reflection pushes (region_bar_sigma, region_bar_tau); for a
counterparty quote the sigma regions track the hedger's cancellation at the
lower obstacle and the tau regions the counterparty's exercise at the upper.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .drbsde import DrbsdeInputs, DrbsdeSolution, GamePayoff, solve_drbsde
from .errors import (
    ContractInvariantViolated,
    InvalidParameters,
    InvalidPenalty,
    NonFiniteInput,
)
from .generators import Generator
from .lattice import BenchmarkAccount, Lattice, NodeProcess, benchmark_profile

__all__ = [
    "ContractSpec",
    "PartyView",
    "QuoteResult",
    "hedger_obstacles",
    "counterparty_obstacles",
    "game_payoff",
    "acceptable_price",
    "builtin_israeli_put",
    "builtin_game_bond",
]

SIDES = ("hedger", "counterparty")


@dataclass(frozen=True, eq=False)
class ContractSpec:
    """Game contract payoffs; construction enforces the admissibility inequalities.

    The tie band at the terminal row is deliberately left to the backward
    solver's terminal check, which sees exactly the same inequality after
    the benchmark shift.
    """

    Xh: NodeProcess
    Xc: NodeProcess
    Xbar: NodeProcess
    dA: NodeProcess

    def __post_init__(self) -> None:
        n = self.Xh.n_steps
        for name, proc in (("Xc", self.Xc), ("Xbar", self.Xbar), ("dA", self.dA)):
            if proc.n_steps != n:
                raise ContractInvariantViolated(f"{name} has {proc.n_steps} steps, Xh has {n}")
        for k in range(n + 1):
            xh, xc = self.Xh.row(k), self.Xc.row(k)
            bad = np.nonzero(~(xh < xc))[0]
            if bad.size:
                j = int(bad[0])
                raise ContractInvariantViolated(
                    f"cancellation payoff must stay strictly below exercise payoff; "
                    f"at node ({k}, {j}): Xh={xh[j]!r}, Xc={xc[j]!r}"
                )
        for k in range(n):  # interior tie band; terminal row checked at solve time
            xh, xc, xm = self.Xh.row(k), self.Xc.row(k), self.Xbar.row(k)
            bad = np.nonzero((xm < xh) | (xm > xc))[0]
            if bad.size:
                j = int(bad[0])
                raise ContractInvariantViolated(
                    f"tie payoff must lie between Xh and Xc; at node ({k}, {j}): "
                    f"Xh={xh[j]!r}, Xbar={xm[j]!r}, Xc={xc[j]!r}"
                )
        if np.any(self.dA.row(n) != 0.0):
            raise ContractInvariantViolated("dA terminal row must be zero (flows accrue per step)")

    @property
    def n_steps(self) -> int:
        return self.Xh.n_steps


@dataclass(frozen=True)
class PartyView:
    """Which side is being priced, with its endowment and benchmark account."""

    side: str
    endowment: float
    acct: BenchmarkAccount

    def __post_init__(self) -> None:
        if self.side not in SIDES:
            raise InvalidParameters(f"side must be one of {SIDES}, got {self.side!r}")
        if not math.isfinite(self.endowment):
            raise NonFiniteInput("endowment must be finite")


def _check_shapes(contract: ContractSpec, lat: Lattice) -> None:
    if contract.n_steps != lat.n_steps:
        raise InvalidParameters(
            f"contract has {contract.n_steps} steps, lattice has {lat.n_steps}"
        )


def hedger_obstacles(
    contract: ContractSpec, view: PartyView, gen: Generator, lat: Lattice
) -> DrbsdeInputs:
    """Reflected-solve data for the hedger's minimal benchmark-safe wealth."""
    if view.side != "hedger":
        raise InvalidParameters(f"hedger_obstacles needs a hedger view, got {view.side!r}")
    _check_shapes(contract, lat)
    vb = benchmark_profile(view.acct, view.endowment, lat.grid)
    n = lat.n_steps
    lower = NodeProcess.from_rows([vb[k] - contract.Xc.row(k) for k in range(n + 1)])
    upper = NodeProcess.from_rows([vb[k] - contract.Xh.row(k) for k in range(n + 1)])
    terminal = vb[n] - contract.Xbar.row(n)
    return DrbsdeInputs(
        lower=lower, upper=upper, terminal=terminal,
        cashflow_increments=contract.dA, gen=gen, lat=lat,
    )


def counterparty_obstacles(
    contract: ContractSpec, view: PartyView, gen: Generator, lat: Lattice
) -> DrbsdeInputs:
    """Reflected-solve data for the counterparty's minimal benchmark-safe wealth."""
    if view.side != "counterparty":
        raise InvalidParameters(
            f"counterparty_obstacles needs a counterparty view, got {view.side!r}"
        )
    _check_shapes(contract, lat)
    vb = benchmark_profile(view.acct, view.endowment, lat.grid)
    n = lat.n_steps
    lower = NodeProcess.from_rows([contract.Xh.row(k) + vb[k] for k in range(n + 1)])
    upper = NodeProcess.from_rows([contract.Xc.row(k) + vb[k] for k in range(n + 1)])
    terminal = contract.Xbar.row(n) + vb[n]
    cash = NodeProcess.from_rows([-contract.dA.row(k) for k in range(n + 1)])
    return DrbsdeInputs(
        lower=lower, upper=upper, terminal=terminal,
        cashflow_increments=cash, gen=gen, lat=lat,
    )


def side_obstacles(
    contract: ContractSpec, view: PartyView, gen: Generator, lat: Lattice
) -> DrbsdeInputs:
    builder = hedger_obstacles if view.side == "hedger" else counterparty_obstacles
    return builder(contract, view, gen, lat)


def game_payoff(contract: ContractSpec, view: PartyView, lat: Lattice) -> GamePayoff:
    """Stopped-game payoff rows matching the side's obstacles, tie rows included.

    Interior ties never help the stopping player (the tie row sits inside
    the band), so the game value agrees with the reflected solve that only
    sees the tie at the terminal step; that agreement is itself a test.
    """
    _check_shapes(contract, lat)
    vb = benchmark_profile(view.acct, view.endowment, lat.grid)
    n = lat.n_steps
    if view.side == "hedger":
        rows = lambda proc: NodeProcess.from_rows([vb[k] - proc.row(k) for k in range(n + 1)])
        return GamePayoff(on_lower=rows(contract.Xc), on_upper=rows(contract.Xh),
                          on_tie=rows(contract.Xbar))
    rows = lambda proc: NodeProcess.from_rows([proc.row(k) + vb[k] for k in range(n + 1)])
    return GamePayoff(on_lower=rows(contract.Xh), on_upper=rows(contract.Xc),
                      on_tie=rows(contract.Xbar))


@dataclass(frozen=True, eq=False)
class QuoteResult:
    """Price with the solved field and the stopping regions backing it.

    Regions are node sets: region_sigma / region_tau are obstacle-equality
    sets for the quote side's cancel / exercise times, region_bar_sigma /
    region_bar_tau the strict-push sets behind the corresponding barred
    times.  ``inputs`` is retained so verifiers replay exactly what was
    solved.
    """

    side: str
    endowment: float
    price: float
    solution: DrbsdeSolution
    inputs: DrbsdeInputs
    region_sigma: tuple[tuple[int, int], ...]
    region_tau: tuple[tuple[int, int], ...]
    region_bar_sigma: tuple[tuple[int, int], ...]
    region_bar_tau: tuple[tuple[int, int], ...]

    @property
    def y0(self) -> float:
        return self.solution.Y.at(0, 0)


def _equality_region(
    Y: NodeProcess, obstacle: NodeProcess, tol: float
) -> tuple[tuple[int, int], ...]:
    out = []
    for k in range(Y.n_steps + 1):
        y, ob = Y.row(k), obstacle.row(k)
        hit = np.abs(y - ob) <= tol * (1.0 + np.abs(y))
        out.extend((k, j) for j in np.nonzero(hit)[0])
    return tuple(out)


def _positive_region(proc: NodeProcess) -> tuple[tuple[int, int], ...]:
    out = []
    for k in range(proc.n_steps + 1):
        out.extend((k, j) for j in np.nonzero(proc.row(k) > 0.0)[0])
    return tuple(out)


def acceptable_price(
    contract: ContractSpec,
    view: PartyView,
    gen: Generator,
    lat: Lattice,
    region_tol: float = 1e-9,
) -> QuoteResult:
    """Solve the side's reflected system and report price plus stopping regions."""
    inputs = side_obstacles(contract, view, gen, lat)
    sol = solve_drbsde(inputs)
    y0 = sol.Y.at(0, 0)
    eq_upper = _equality_region(sol.Y, inputs.upper, region_tol)
    eq_lower = _equality_region(sol.Y, inputs.lower, region_tol)
    pos_du = _positive_region(sol.dU)
    pos_dl = _positive_region(sol.dL)
    if view.side == "hedger":
        price = y0 - view.endowment
        region_sigma, region_tau = eq_upper, eq_lower
        region_bar_sigma, region_bar_tau = pos_du, pos_dl
    else:
        # the hedger's cancel presses the counterparty value at the lower
        # obstacle, the counterparty's own exercise at the upper
        price = view.endowment - y0
        region_sigma, region_tau = eq_lower, eq_upper
        region_bar_sigma, region_bar_tau = pos_dl, pos_du
    return QuoteResult(
        side=view.side,
        endowment=view.endowment,
        price=price,
        solution=sol,
        inputs=inputs,
        region_sigma=region_sigma,
        region_tau=region_tau,
        region_bar_sigma=region_bar_sigma,
        region_bar_tau=region_bar_tau,
    )


def builtin_israeli_put(lat: Lattice, strike: float, penalty: float) -> ContractSpec:
    """Cancellable put: exercise pays intrinsic, cancellation adds a penalty, tie pays intrinsic."""
    if not math.isfinite(strike) or strike <= 0.0:
        raise InvalidParameters(f"strike must be positive and finite, got {strike!r}")
    if not math.isfinite(penalty) or penalty <= 0.0:
        raise InvalidPenalty(f"penalty must be strictly positive, got {penalty!r}")
    n = lat.n_steps
    xc_rows = [-np.maximum(strike - lat.spot.row(k), 0.0) for k in range(n + 1)]
    xc = NodeProcess.from_rows(xc_rows)
    xh = NodeProcess.from_rows([row - penalty for row in xc_rows])
    return ContractSpec(Xh=xh, Xc=xc, Xbar=xc, dA=NodeProcess.zeros(n))


def builtin_game_bond(
    lat: Lattice, face: float, coupon: float, call_penalty: float, put_discount: float
) -> ContractSpec:
    """Callable/puttable bond: issuer calls at face plus penalty, holder puts at a discount."""
    if not math.isfinite(face) or face <= 0.0:
        raise InvalidParameters(f"face must be positive and finite, got {face!r}")
    if not math.isfinite(coupon) or coupon < 0.0:
        raise InvalidParameters(f"coupon must be nonnegative and finite, got {coupon!r}")
    if not math.isfinite(call_penalty) or call_penalty <= 0.0:
        raise InvalidPenalty(f"call penalty must be strictly positive, got {call_penalty!r}")
    if not math.isfinite(put_discount) or not 0.0 <= put_discount < face:
        raise InvalidParameters(
            f"put discount must satisfy 0 <= discount < face, got {put_discount!r}"
        )
    n = lat.n_steps
    xh = NodeProcess.constant(n, -(face + call_penalty))
    xc = NodeProcess.constant(n, -(face - put_discount))
    xbar = NodeProcess.constant(n, -face)
    da_rows = [np.full(k + 1, -coupon) for k in range(n)] + [np.zeros(n + 1)]
    return ContractSpec(Xh=xh, Xc=xc, Xbar=xbar, dA=NodeProcess.from_rows(da_rows))
