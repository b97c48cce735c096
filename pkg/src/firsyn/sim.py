"""Closed-loop rollout for empirical stability checks.

Simulates the plant under an FIR law (pre-time outputs fixed to zero)
and under a dynamic controller; with a zero initial controller state the
two are behaviorally identical.  A divergence guard truncates runaway
trajectories instead of overflowing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError, DimensionError
from .sysmodel import DynamicController, FirGains, StateSpaceSystem

DIVERGENCE_FACTOR = 1e12


@dataclass(frozen=True, eq=False)
class Trajectory:
    """States x(0..K), inputs u(0..K-1), outputs y(0..K-1).  When the
    divergence guard fires, ``diverged_at`` is the index of the offending
    state and the arrays stop there."""

    states: np.ndarray
    inputs: np.ndarray
    outputs: np.ndarray
    diverged_at: int | None = None

    @property
    def diverged(self) -> bool:
        return self.diverged_at is not None


def _check_x0(sys: StateSpaceSystem, x0) -> np.ndarray:
    vec = np.asarray(x0, dtype=float).reshape(-1)
    if vec.size != sys.n:
        raise DimensionError(f"x0 has {vec.size} entries, expected {sys.n}")
    if not np.all(np.isfinite(vec)):
        raise ContractError("x0 contains NaN or infinite entries")
    return vec


def simulate_fir(sys: StateSpaceSystem, f: FirGains, x0, steps: int) -> Trajectory:
    """Roll out ``u(k) = sum_i F_i y(k-i)`` with zero pre-time outputs."""
    if steps < 1:
        raise ContractError("steps must be >= 1")
    if (f.m, f.p) != (sys.m, sys.p):
        raise DimensionError("gain dimensions do not match the plant")
    x = _check_x0(sys, x0)
    ell, p = f.order, sys.p
    tail_gain = np.hstack(f.gains[1:]) if ell else np.zeros((sys.m, 0))
    history = np.zeros(ell * p)
    guard = DIVERGENCE_FACTOR * np.linalg.norm(x)
    states, inputs, outputs = [x], [], []
    diverged_at = None
    for k in range(steps):
        y = sys.C @ x
        u = f.gains[0] @ y + tail_gain @ history
        x_next = sys.A @ x + sys.B @ u
        inputs.append(u)
        outputs.append(y)
        states.append(x_next)
        if np.linalg.norm(x_next) > guard:
            diverged_at = k + 1
            break
        if ell:
            history = np.concatenate([y, history[:-p]])
        x = x_next
    return Trajectory(
        states=np.array(states),
        inputs=np.array(inputs),
        outputs=np.array(outputs),
        diverged_at=diverged_at,
    )


def simulate_dynamic(
    sys: StateSpaceSystem,
    ctl: DynamicController,
    x0,
    xhat0,
    steps: int,
) -> Trajectory:
    """Roll out the plant in closed loop with ``xhat(k+1) = H xhat + G y,
    u = E xhat + D y``."""
    if steps < 1:
        raise ContractError("steps must be >= 1")
    if ctl.m != sys.m or ctl.p != sys.p:
        raise DimensionError("controller dimensions do not match the plant")
    x = _check_x0(sys, x0)
    xhat = np.asarray(xhat0, dtype=float).reshape(-1)
    if xhat.size != ctl.state_dim:
        raise DimensionError(
            f"xhat0 has {xhat.size} entries, expected {ctl.state_dim}"
        )
    guard = DIVERGENCE_FACTOR * np.linalg.norm(x)
    states, inputs, outputs = [x], [], []
    diverged_at = None
    for k in range(steps):
        y = sys.C @ x
        u = ctl.D @ y + ctl.E @ xhat
        x_next = sys.A @ x + sys.B @ u
        inputs.append(u)
        outputs.append(y)
        states.append(x_next)
        if np.linalg.norm(x_next) > guard:
            diverged_at = k + 1
            break
        xhat = ctl.H @ xhat + ctl.G @ y
        x = x_next
    return Trajectory(
        states=np.array(states),
        inputs=np.array(inputs),
        outputs=np.array(outputs),
        diverged_at=diverged_at,
    )


def decay_check(t: Trajectory, ratio_threshold: float) -> bool:
    """True iff the final state norm is at most ``ratio_threshold`` times
    the initial one (trivially true for a zero start, false for a
    truncated divergent run)."""
    if ratio_threshold < 0:
        raise ContractError("ratio_threshold must be nonnegative")
    if t.diverged:
        return False
    start = np.linalg.norm(t.states[0])
    if start == 0.0:
        return True
    return bool(np.linalg.norm(t.states[-1]) <= ratio_threshold * start)
