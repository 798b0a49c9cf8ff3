"""Nonlinear funding generators g(t, y, z, s) and their Lipschitz metadata.

The generator is the drift of the wealth/value recursion: over one step the
value picks up ``-g * dt``.  Builtins cover the flat market (zero), a single
funding rate, and split lend/borrow rates applied to the cash position
``y - z*s``.  User generators supply a callable plus explicit Lipschitz
bounds in y and in z (the z bound is per unit of z times spot, matching the
builtins).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .errors import NonFiniteInput, OutOfRange

__all__ = [
    "ZeroGenerator",
    "LinearRate",
    "DifferentialRates",
    "CustomGenerator",
    "Generator",
    "eval_g",
    "contraction_ok",
    "implicit_start",
]


@dataclass(frozen=True)
class ZeroGenerator:
    """g = 0: linear risk-neutral market."""

    @property
    def lipschitz_y(self) -> float:
        return 0.0

    @property
    def lipschitz_z(self) -> float:
        return 0.0


@dataclass(frozen=True)
class LinearRate:
    """g = -r * (y - z*s): one funding rate for credit and debit."""

    rate: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.rate):
            raise NonFiniteInput("rate must be finite")
        if self.rate < 0.0:
            raise OutOfRange(f"rate must be nonnegative, got {self.rate}")

    @property
    def lipschitz_y(self) -> float:
        return self.rate

    @property
    def lipschitz_z(self) -> float:
        return self.rate


@dataclass(frozen=True)
class DifferentialRates:
    """g = -r_lend*(y - z*s)^+ + r_borrow*(y - z*s)^-: split funding rates."""

    r_lend: float
    r_borrow: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.r_lend) and math.isfinite(self.r_borrow)):
            raise NonFiniteInput("rates must be finite")
        if not 0.0 <= self.r_lend <= self.r_borrow:
            raise OutOfRange(
                f"need 0 <= r_lend <= r_borrow, got r_lend={self.r_lend}, r_borrow={self.r_borrow}"
            )

    @property
    def lipschitz_y(self) -> float:
        return max(self.r_lend, self.r_borrow)

    @property
    def lipschitz_z(self) -> float:
        return max(self.r_lend, self.r_borrow)


@dataclass(frozen=True)
class CustomGenerator:
    """User-supplied pure mapping (t, y, z, s) -> g with declared Lipschitz bounds."""

    fn: Callable[[float, float, float, float], float]
    lipschitz_y: float
    lipschitz_z: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.lipschitz_y) and math.isfinite(self.lipschitz_z)):
            raise NonFiniteInput("declared Lipschitz bounds must be finite")
        if self.lipschitz_y < 0.0 or self.lipschitz_z < 0.0:
            raise OutOfRange("declared Lipschitz bounds must be nonnegative")


Generator = Union[ZeroGenerator, LinearRate, DifferentialRates, CustomGenerator]


def _check_finite(name: str, value) -> None:
    ok = np.isfinite(value).all() if isinstance(value, np.ndarray) else math.isfinite(value)
    if not ok:
        raise NonFiniteInput(f"{name} must be finite")


def eval_g(gen: Generator, t: float, y, z, s):
    """Evaluate the generator; y, z, s may be scalars or broadcastable arrays."""
    _check_finite("t", t)
    _check_finite("y", y)
    _check_finite("z", z)
    _check_finite("s", s)
    if isinstance(gen, ZeroGenerator):
        return np.zeros(np.broadcast(y, z, s).shape) if _any_array(y, z, s) else 0.0
    if isinstance(gen, LinearRate):
        return -gen.rate * (y - z * s)
    if isinstance(gen, DifferentialRates):
        cash = y - z * s
        if isinstance(cash, np.ndarray):
            return np.where(cash >= 0.0, -gen.r_lend * cash, -gen.r_borrow * cash)
        return -gen.r_lend * cash if cash >= 0.0 else -gen.r_borrow * cash
    if isinstance(gen, CustomGenerator):
        if _any_array(y, z, s):
            yb, zb, sb = np.broadcast_arrays(np.asarray(y, float), np.asarray(z, float), np.asarray(s, float))
            out = np.empty(yb.shape)
            flat = zip(yb.reshape(-1), zb.reshape(-1), sb.reshape(-1))
            out.reshape(-1)[:] = [gen.fn(t, yi, zi, si) for yi, zi, si in flat]
            if not np.isfinite(out).all():
                raise NonFiniteInput("custom generator returned a non-finite value")
            return out
        val = float(gen.fn(t, y, z, s))
        if not math.isfinite(val):
            raise NonFiniteInput("custom generator returned a non-finite value")
        return val
    raise OutOfRange(f"unknown generator type {type(gen).__name__}")


def _any_array(*vals) -> bool:
    return any(isinstance(v, np.ndarray) for v in vals)


def contraction_ok(gen: Generator, dt: float, s_max: float) -> bool:
    """True iff the implicit one-step map is a contraction at step size dt.

    The z bound is slope-invariant (the spot scale cancels against the
    hedge-slope denominator), so s_max does not enter numerically; it is kept
    for signature stability.  For the builtin generators the test reduces to
    dt * max(r_lend, r_borrow) < 1.
    """
    if dt <= 0.0 or not math.isfinite(dt):
        raise OutOfRange(f"dt must be positive and finite, got {dt}")
    del s_max
    return dt * gen.lipschitz_y < 1.0 and dt * gen.lipschitz_z < 1.0


def implicit_start(gen: Generator, t: float, rhs, z, s, dt: float):
    """Initial guess for the fixed-point solve of v = rhs + g(t, v, z, s)*dt.

    For the builtins this is the exact solution (the equation is piecewise
    linear in v and the cash sign equals sign(rhs - z*s)), so the iteration
    that follows only has to confirm it.  Custom generators start at rhs.
    """
    if isinstance(gen, ZeroGenerator):
        return rhs if isinstance(rhs, np.ndarray) else float(rhs)
    if isinstance(gen, LinearRate):
        r = gen.rate
        return (rhs + r * z * s * dt) / (1.0 + r * dt)
    if isinstance(gen, DifferentialRates):
        zs = z * s
        lend = (rhs + gen.r_lend * zs * dt) / (1.0 + gen.r_lend * dt)
        borrow = (rhs + gen.r_borrow * zs * dt) / (1.0 + gen.r_borrow * dt)
        if isinstance(rhs, np.ndarray) or isinstance(zs, np.ndarray):
            return np.where(np.asarray(rhs - zs) >= 0.0, lend, borrow)
        return lend if rhs - zs >= 0.0 else borrow
    return rhs if isinstance(rhs, np.ndarray) else float(rhs)
