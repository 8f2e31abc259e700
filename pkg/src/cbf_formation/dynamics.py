"""Damped double-integrator robot in port-Hamiltonian form.

Each robot obeys ``z' = x``, ``x' = -a x + u`` with Hamiltonian ``H = |x|^2 / 2``,
resistive structure ``R = a I`` and input map ``g = I`` (so the output is the
velocity). The structure matrix vanishes for this model.

The energy helpers accept arrays with a trailing axis of length 2, so a whole
team of robots can be evaluated at once with shape ``(n_robots, 2)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

FloatArray = NDArray[np.float64]


@dataclass(frozen=True)
class RobotParams:
    """Physical parameters shared by all robots.

    Attributes:
        damping: viscous damping ``a`` in 1/s, strictly positive.
        dim: spatial dimension, fixed at 2.
    """

    damping: float = 1.0
    dim: int = 2

    def __post_init__(self) -> None:
        if not np.isfinite(self.damping) or self.damping <= 0.0:
            raise ValueError(f"damping must be > 0, got {self.damping}")
        if self.dim != 2:
            raise ValueError("only planar robots (dim=2) are supported")


@dataclass(frozen=True)
class RobotState:
    """Planar position ``z`` (m) and velocity ``x`` (m/s) of one robot."""

    z: FloatArray
    x: FloatArray

    def __post_init__(self) -> None:
        z = np.asarray(self.z, dtype=np.float64).reshape(2)
        x = np.asarray(self.x, dtype=np.float64).reshape(2)
        if not (np.all(np.isfinite(z)) and np.all(np.isfinite(x))):
            raise ValueError("robot state must be finite")
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "x", x)

    @classmethod
    def at_rest(cls, z: ArrayLike) -> RobotState:
        return cls(np.asarray(z, dtype=np.float64), np.zeros(2))


def _velocity(state: RobotState | ArrayLike) -> FloatArray:
    if isinstance(state, RobotState):
        return state.x
    return np.asarray(state, dtype=np.float64)


def hamiltonian(state: RobotState | ArrayLike) -> float | FloatArray:
    """Kinetic energy ``|x|^2 / 2``.

    Accepts a :class:`RobotState` or a raw velocity array ``(..., 2)``.
    """
    x = _velocity(state)
    return 0.5 * np.sum(x * x, axis=-1)


def output(state: RobotState | ArrayLike) -> FloatArray:
    """Port output ``y = g^T dH/dx = x`` (the velocity, copied)."""
    return np.array(_velocity(state), dtype=np.float64, copy=True)


def dissipation_power(params: RobotParams, state: RobotState | ArrayLike) -> float | FloatArray:
    """Power lost to damping, ``a |x|^2``; never negative."""
    x = _velocity(state)
    return params.damping * np.sum(x * x, axis=-1)


def state_derivative(
    params: RobotParams, state: RobotState, u: ArrayLike
) -> tuple[FloatArray, FloatArray]:
    """Return ``(dz/dt, dx/dt) = (x, -a x + u)``."""
    u = np.asarray(u, dtype=np.float64)
    return state.x.copy(), -params.damping * state.x + u


def _rhs(a: float, x: FloatArray, u: FloatArray) -> tuple[FloatArray, FloatArray]:
    return x, -a * x + u


def rk4_step(
    params: RobotParams, z: FloatArray, x: FloatArray, u: FloatArray, dt: float
) -> tuple[FloatArray, FloatArray]:
    """One classical Runge-Kutta step with ``u`` held constant.

    Works on arrays of any leading shape; this is the vectorised kernel used by
    the simulator. Inputs are not validated here.
    """
    a = params.damping
    half = 0.5 * dt
    dz1, dx1 = _rhs(a, x, u)
    dz2, dx2 = _rhs(a, x + half * dx1, u)
    dz3, dx3 = _rhs(a, x + half * dx2, u)
    dz4, dx4 = _rhs(a, x + dt * dx3, u)
    z_new = z + (dt / 6.0) * (dz1 + 2.0 * dz2 + 2.0 * dz3 + dz4)
    x_new = x + (dt / 6.0) * (dx1 + 2.0 * dx2 + 2.0 * dx3 + dx4)
    return z_new, x_new


def integrate_step(params: RobotParams, state: RobotState, u: ArrayLike, dt: float) -> RobotState:
    """Advance one robot by ``dt`` under a zero-order-hold input ``u``.

    Raises:
        ValueError: if ``dt`` is not a positive finite number or ``u`` is not finite.
    """
    if not np.isfinite(dt) or dt <= 0.0:
        raise ValueError(f"dt must be > 0, got {dt}")
    u = np.asarray(u, dtype=np.float64).reshape(2)
    if not np.all(np.isfinite(u)):
        raise ValueError("input u must be finite")
    z, x = rk4_step(params, state.z, state.x, u, dt)
    return RobotState(z, x)
