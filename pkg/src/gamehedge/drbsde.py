"""Backward solvers on the lattice: plain and doubly reflected value recursions.

One backward step from row k+1 to row k does, per node:

1. hedge slope  z = (y_up - y_dn) / (s_up - s_dn)
2. expectation  e = q*y_up + (1-q)*y_dn
3. implicit solve of  v = e - cashflow_k + g(t_k, v, z, s_k)*dt
4. (reflected only) project v into [lower_k, upper_k], recording the
   one-sided pushes dL = (lower - v)^+ and dU = ((v v lower) - upper)^+.

The implicit solve is a pure fixed-point iteration; for builtin generators
the start point already solves the piecewise-linear equation exactly, so one
confirming sweep suffices.  The recorded pushes satisfy dL * dU = 0 node by
node because the obstacles never touch.

``evaluate_stopped`` prices the same stream under externally imposed
stopping rules instead of reflection: first marked node wins, simultaneous
marks pay the tie row, and unmarked regions continue by the identical
implicit step, so its values are directly comparable with the reflected
solution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    ContractionViolated,
    InvalidStoppingRule,
    NonConvergence,
    NonFiniteInput,
    ObstacleOrderViolated,
    OutOfRange,
    TerminalOutOfBand,
)
from .generators import Generator, contraction_ok, eval_g, implicit_start
from .lattice import Lattice, NodeProcess
from .stopping import StoppingRule

__all__ = [
    "FIXED_POINT_TOL",
    "MAX_FIXED_POINT_ITER",
    "DrbsdeInputs",
    "DrbsdeSolution",
    "GamePayoff",
    "solve_bsde",
    "solve_drbsde",
    "evaluate_stopped",
]

FIXED_POINT_TOL = 1e-12
MAX_FIXED_POINT_ITER = 200


@dataclass(frozen=True, eq=False)
class DrbsdeInputs:
    """Validated problem data for the doubly reflected backward solve."""

    lower: NodeProcess
    upper: NodeProcess
    terminal: np.ndarray
    cashflow_increments: NodeProcess
    gen: Generator
    lat: Lattice

    def __post_init__(self) -> None:
        n = self.lat.n_steps
        for name, proc in (
            ("lower", self.lower),
            ("upper", self.upper),
            ("cashflow_increments", self.cashflow_increments),
        ):
            if proc.n_steps != n:
                raise OutOfRange(f"{name} has {proc.n_steps} steps, lattice has {n}")
        term = np.array(self.terminal, dtype=np.float64)
        if term.shape != (n + 1,):
            raise OutOfRange(f"terminal must have {n + 1} entries, got shape {term.shape}")
        if not np.isfinite(term).all():
            raise NonFiniteInput("terminal data contains non-finite values")
        term.flags.writeable = False
        object.__setattr__(self, "terminal", term)
        for k in range(n + 1):
            lo, hi = self.lower.row(k), self.upper.row(k)
            bad = np.nonzero(~(lo < hi))[0]
            if bad.size:
                j = int(bad[0])
                raise ObstacleOrderViolated(
                    f"lower must stay strictly below upper; at node ({k}, {j}): "
                    f"lower={lo[j]!r}, upper={hi[j]!r}"
                )
        lo_t, hi_t = self.lower.row(n), self.upper.row(n)
        bad = np.nonzero((term < lo_t) | (term > hi_t))[0]
        if bad.size:
            j = int(bad[0])
            raise TerminalOutOfBand(
                f"terminal value at node ({n}, {j}) is {term[j]!r}, "
                f"outside [{lo_t[j]!r}, {hi_t[j]!r}]"
            )

    @property
    def n_steps(self) -> int:
        return self.lat.n_steps


@dataclass(frozen=True, eq=False)
class DrbsdeSolution:
    """Value, hedge slope and reflection increments; terminal rows of Z, dL, dU are zero."""

    Y: NodeProcess
    Z: NodeProcess
    dL: NodeProcess
    dU: NodeProcess
    residual_max: float
    iterations_max: int


def _implicit_row(gen: Generator, t: float, rhs, z, s, dt: float):
    """Solve v = rhs + g(t, v, z, s)*dt by fixed-point iteration on a whole row.

    Returns (v, residual, iterations).  The exit test bounds the true
    residual because one extra application contracts the gap by dt*L_y < 1.
    """
    v = implicit_start(gen, t, rhs, z, s, dt)
    delta = np.inf
    for it in range(1, MAX_FIXED_POINT_ITER + 1):
        v_new = rhs + eval_g(gen, t, v, z, s) * dt
        delta = float(np.max(np.abs(v_new - v)))
        v = v_new
        if delta <= FIXED_POINT_TOL:
            residual = float(np.max(np.abs(v - (rhs + eval_g(gen, t, v, z, s) * dt))))
            return v, residual, it
    raise NonConvergence(
        f"implicit step did not reach {FIXED_POINT_TOL:g} within "
        f"{MAX_FIXED_POINT_ITER} iterations (last change {delta:g}); "
        "declared Lipschitz bounds are likely understated"
    )


def require_contraction(gen: Generator, lat: Lattice) -> None:
    """Reject step sizes for which the implicit step contracts too slowly or loses monotonicity."""
    s_max = float(np.max(lat.spot.row(lat.n_steps)))
    if not contraction_ok(gen, lat.dt, s_max):
        raise ContractionViolated(
            f"dt={lat.dt:g} with Lipschitz bounds (y={gen.lipschitz_y:g}, "
            f"z={gen.lipschitz_z:g}) is not a contraction; refine the grid"
        )
    # z-sensitivity must not overturn the branch weights, else the one-step
    # map stops being monotone in the continuation values.
    spread = lat.u - lat.d
    limit = min(lat.q, 1.0 - lat.q)
    ratio = lat.dt * gen.lipschitz_z / spread
    if ratio > limit:
        raise ContractionViolated(
            f"one-step monotonicity fails: dt*L_z/(u-d) = {ratio:g} "
            f"exceeds min(q, 1-q) = {limit:g}; refine the grid"
        )


def _slope_and_expectation(lat: Lattice, y_next: np.ndarray, k: int):
    s_next = lat.spot.row(k + 1)
    z = (y_next[1:] - y_next[:-1]) / (s_next[1:] - s_next[:-1])
    e = lat.q * y_next[1:] + (1.0 - lat.q) * y_next[:-1]
    return z, e


def _check_terminal(lat: Lattice, terminal) -> np.ndarray:
    term = np.asarray(terminal, dtype=np.float64)
    if term.shape != (lat.n_steps + 1,):
        raise OutOfRange(f"terminal must have {lat.n_steps + 1} entries, got shape {term.shape}")
    if not np.isfinite(term).all():
        raise NonFiniteInput("terminal data contains non-finite values")
    return term


def solve_bsde(
    lat: Lattice, gen: Generator, terminal, cashflow_increments: NodeProcess
) -> tuple[NodeProcess, NodeProcess]:
    """Unreflected backward solve; returns the value and hedge-slope processes."""
    term = _check_terminal(lat, terminal)
    if cashflow_increments.n_steps != lat.n_steps:
        raise OutOfRange("cashflow_increments shape does not match the lattice")
    require_contraction(gen, lat)
    n, dt = lat.n_steps, lat.dt
    y_rows: list[np.ndarray] = [np.empty(0)] * (n + 1)
    z_rows: list[np.ndarray] = [np.empty(0)] * (n + 1)
    y_rows[n] = term.copy()
    z_rows[n] = np.zeros(n + 1)
    for k in range(n - 1, -1, -1):
        z, e = _slope_and_expectation(lat, y_rows[k + 1], k)
        rhs = e - cashflow_increments.row(k)
        v, _, _ = _implicit_row(gen, k * dt, rhs, z, lat.spot.row(k), dt)
        y_rows[k] = np.asarray(v, dtype=np.float64)
        z_rows[k] = np.asarray(z, dtype=np.float64)
    return NodeProcess.from_rows(y_rows), NodeProcess.from_rows(z_rows)


def solve_drbsde(inputs: DrbsdeInputs) -> DrbsdeSolution:
    """Doubly reflected backward solve with per-node Skorokhod bookkeeping."""
    lat, gen = inputs.lat, inputs.gen
    require_contraction(gen, lat)
    n, dt = lat.n_steps, lat.dt
    y_rows: list[np.ndarray] = [np.empty(0)] * (n + 1)
    z_rows = [np.zeros(k + 1) for k in range(n + 1)]
    dl_rows = [np.zeros(k + 1) for k in range(n + 1)]
    du_rows = [np.zeros(k + 1) for k in range(n + 1)]
    y_rows[n] = inputs.terminal.copy()
    residual_max = 0.0
    iterations_max = 0
    for k in range(n - 1, -1, -1):
        z, e = _slope_and_expectation(lat, y_rows[k + 1], k)
        rhs = e - inputs.cashflow_increments.row(k)
        v, res, its = _implicit_row(gen, k * dt, rhs, z, lat.spot.row(k), dt)
        residual_max = max(residual_max, res)
        iterations_max = max(iterations_max, its)
        lo, hi = inputs.lower.row(k), inputs.upper.row(k)
        y_rows[k] = np.minimum(hi, np.maximum(lo, v))
        dl_rows[k] = np.maximum(lo - v, 0.0)
        du_rows[k] = np.maximum(np.maximum(v, lo) - hi, 0.0)
        z_rows[k] = np.asarray(z, dtype=np.float64)
    return DrbsdeSolution(
        Y=NodeProcess.from_rows(y_rows),
        Z=NodeProcess.from_rows(z_rows),
        dL=NodeProcess.from_rows(dl_rows),
        dU=NodeProcess.from_rows(du_rows),
        residual_max=residual_max,
        iterations_max=iterations_max,
    )


@dataclass(frozen=True, eq=False)
class GamePayoff:
    """Stopped-game payoff rows: minimizer stops on the upper row, maximizer on the lower, ties in between."""

    on_lower: NodeProcess
    on_upper: NodeProcess
    on_tie: NodeProcess

    def __post_init__(self) -> None:
        n = self.on_lower.n_steps
        if self.on_upper.n_steps != n or self.on_tie.n_steps != n:
            raise OutOfRange("payoff rows disagree on the number of steps")
        for k in range(n + 1):
            lo, hi, tie = self.on_lower.row(k), self.on_upper.row(k), self.on_tie.row(k)
            if not ((lo <= tie) & (tie <= hi)).all():
                raise ObstacleOrderViolated(
                    f"need on_lower <= on_tie <= on_upper at every node, violated at step {k}"
                )

    @property
    def n_steps(self) -> int:
        return self.on_lower.n_steps


def evaluate_stopped(
    lat: Lattice,
    gen: Generator,
    cashflow_increments: NodeProcess,
    payoff: GamePayoff,
    sigma: StoppingRule,
    tau: StoppingRule,
) -> float:
    """Root value of the stream stopped by the given rule pair.

    sigma is the minimizer's rule (pays the upper row when it stops alone),
    tau the maximizer's (lower row); simultaneous stops pay the tie row.
    Unstopped nodes continue by the same implicit step as the solvers.
    """
    n, dt = lat.n_steps, lat.dt
    for name, obj in (("payoff", payoff), ("cashflow_increments", cashflow_increments),
                      ("sigma", sigma), ("tau", tau)):
        if obj.n_steps != n:
            raise InvalidStoppingRule(f"{name} has {obj.n_steps} steps, lattice has {n}")
    require_contraction(gen, lat)
    vals = payoff.on_tie.row(n).copy()
    for k in range(n - 1, -1, -1):
        z, e = _slope_and_expectation(lat, vals, k)
        rhs = e - cashflow_increments.row(k)
        cont, _, _ = _implicit_row(gen, k * dt, rhs, z, lat.spot.row(k), dt)
        sig, tau_m = sigma.row(k), tau.row(k)
        vals = np.where(
            sig & tau_m,
            payoff.on_tie.row(k),
            np.where(sig, payoff.on_upper.row(k), np.where(tau_m, payoff.on_lower.row(k), cont)),
        )
    return float(vals[0])
