"""Continuous-time dynamical systems behind the discrete methods.

Each model is a first-order vector field in the blocks (x, v, gamma):
plain gradient flow, gradient flow rescaled by a time-scaling factor
obeying gamma' = mu - gamma, the heavy-ball system, the vanishing-damping
second-order system in its first-order form, and the gradient-corrected
accelerated flow with an extra -beta grad f damping term.  A fixed-step
RK4 integrator produces reference trajectories, and a decay checker
confirms the Lyapunov bounds along them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Callable, Optional

import numpy as np

from .problems import ProblemOracle

FLOW_KINDS = ("gradient", "scaled_gradient", "heavy_ball", "avd_r3", "hnag")

# Block layout per kind: which of (v, gamma) the state carries.
_HAS_V = {"gradient": False, "scaled_gradient": False, "heavy_ball": True,
          "avd_r3": True, "hnag": True}
_HAS_GAMMA = {"gradient": False, "scaled_gradient": True, "heavy_ball": False,
              "avd_r3": True, "hnag": True}


class FlowError(ValueError):
    """Invalid flow model or state."""


class DivergenceError(RuntimeError):
    """Integration produced NaN/Inf; carries the last valid state."""

    def __init__(self, message: str, last_state: "FlowState"):
        super().__init__(message)
        self.last_state = last_state


@dataclass
class FlowState:
    t: float
    x: np.ndarray
    v: Optional[np.ndarray] = None
    gamma: Optional[float] = None

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        if self.v is not None:
            self.v = np.asarray(self.v, dtype=float)
        if self.gamma is not None and self.gamma <= 0:
            raise FlowError("gamma must be positive when present")


@dataclass(frozen=True)
class FlowModel:
    kind: str
    oracle: ProblemOracle
    beta_fn: Callable[[float], float] = dc_field(default=None)  # type: ignore

    def __post_init__(self):
        if self.kind not in FLOW_KINDS:
            raise FlowError(f"unknown flow kind: {self.kind!r}")
        if self.kind == "heavy_ball" and self.oracle.mu <= 0:
            raise FlowError("heavy_ball flow requires mu > 0")
        if self.beta_fn is None:
            lip = self.oracle.lip
            object.__setattr__(self, "beta_fn", lambda t: 1.0 / lip)

    @property
    def has_v(self) -> bool:
        return _HAS_V[self.kind]

    @property
    def has_gamma(self) -> bool:
        return _HAS_GAMMA[self.kind]


def _deriv(x, v=None, gamma=None) -> FlowState:
    # Derivative slots skip __post_init__: a gamma derivative may be negative.
    st = FlowState.__new__(FlowState)
    st.t, st.x, st.v = 1.0, np.asarray(x, dtype=float), v
    st.gamma = None if gamma is None else float(gamma)
    return st


def field(model: FlowModel, state: FlowState) -> FlowState:
    """Time derivative of the state; the t slot of the result is dt/dt = 1."""
    x = state.x
    oracle = model.oracle
    if model.has_v and state.v is None:
        raise FlowError(f"{model.kind} flow needs a v block")
    if model.has_gamma and state.gamma is None:
        raise FlowError(f"{model.kind} flow needs a gamma block")
    g = oracle.grad_h(x)
    if model.kind == "gradient":
        return _deriv(-g)
    if model.kind == "scaled_gradient":
        return _deriv(-g / state.gamma, gamma=oracle.mu - state.gamma)
    v = state.v
    if model.kind == "heavy_ball":
        return _deriv(v - x, v=x - v - g / oracle.mu)
    if model.kind == "avd_r3":
        sg = math.sqrt(state.gamma)
        return _deriv(sg * (v - x), v=-g / sg, gamma=-state.gamma * sg)
    beta = model.beta_fn(state.t)
    return _deriv(v - x - beta * g,
                  v=(oracle.mu / state.gamma) * (x - v) - g / state.gamma,
                  gamma=oracle.mu - state.gamma)


def _pack(model: FlowModel, state: FlowState) -> np.ndarray:
    parts = [state.x]
    if model.has_v:
        parts.append(state.v)
    if model.has_gamma:
        parts.append(np.array([state.gamma]))
    return np.concatenate(parts)


def _unpack(model: FlowModel, t: float, y: np.ndarray) -> FlowState:
    n = model.oracle.dim
    x = y[:n]
    v = y[n:2 * n] if model.has_v else None
    gamma = float(y[-1]) if model.has_gamma else None
    st = FlowState.__new__(FlowState)
    st.t, st.x, st.v, st.gamma = t, x, v, gamma
    return st


def _rhs(model: FlowModel, t: float, y: np.ndarray) -> np.ndarray:
    return _pack(model, field(model, _unpack(model, t, y)))


def integrate(model: FlowModel, state0: FlowState, t_end: float, dt: float):
    """Classical RK4 with a fixed step, sampled every step.

    Returns the list of FlowState including state0.  Raises DivergenceError
    carrying the last finite state if the trajectory blows up.
    """
    if dt <= 0 or t_end <= state0.t:
        raise FlowError("need dt > 0 and t_end > t0")
    n_steps = max(1, int(round((t_end - state0.t) / dt)))
    h = (t_end - state0.t) / n_steps
    y = _pack(model, state0)
    t = state0.t
    out = [state0]
    for _ in range(n_steps):
        k1 = _rhs(model, t, y)
        k2 = _rhs(model, t + 0.5 * h, y + 0.5 * h * k1)
        k3 = _rhs(model, t + 0.5 * h, y + 0.5 * h * k2)
        k4 = _rhs(model, t + h, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t += h
        if not np.all(np.isfinite(y)):
            raise DivergenceError(f"integration diverged at t={t:.6g}", out[-1])
        out.append(_unpack(model, t, y))
    return out


def continuous_decay_check(model: FlowModel, lyapunov, state0: FlowState,
                           t_end: float, dt: float, rel_tol: float = 1e-3) -> dict:
    """Integrate and compare the Lyapunov value against its decay bound.

    The bound accumulates the decay-rate integral along the trajectory by
    the trapezoid rule: exponential decay exp(-int c) for exponent q = 1,
    the algebraic closure ((q-1) int c + L0^(1-q))^(1/(1-q)) for q > 1.
    """
    from . import lyapunov as lyap_mod

    traj = integrate(model, state0, t_end, dt)
    params = lyapunov.strong_params
    if params is None:
        raise FlowError("Lyapunov spec has no decay parameters attached")
    oracle = model.oracle
    l0 = lyap_mod.evaluate(lyapunov, oracle, traj[0])
    q = params.q
    integral = 0.0
    c_prev = params.c(traj[0])
    rows = []
    first_bad = None
    max_excess = 0.0
    for prev, st in zip(traj, traj[1:]):
        c_now = params.c(st)
        integral += 0.5 * (c_prev + c_now) * (st.t - prev.t)
        c_prev = c_now
        val = lyap_mod.evaluate(lyapunov, oracle, st)
        if q == 1.0:
            bound = l0 * math.exp(-integral)
        else:
            bound = ((q - 1.0) * integral + l0 ** (1.0 - q)) ** (1.0 / (1.0 - q))
        excess = (val - bound) / (abs(bound) + 1e-300)
        max_excess = max(max_excess, excess)
        if excess > rel_tol and first_bad is None:
            first_bad = st.t
        err = float(np.linalg.norm(st.x - oracle.x_star))
        rows.append((st.t, val, bound, err, st.gamma if st.gamma is not None else ""))
    return {
        "pass": first_bad is None,
        "rel_tol": rel_tol,
        "first_violation_t": first_bad,
        "max_rel_excess": max_excess,
        "rows": rows,
    }
