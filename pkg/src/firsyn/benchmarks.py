"""Benchmark system registry.

Four classic test plants spanning the interesting design regimes:

* ``system1``/``system2`` -- SISO transfer functions (z-2)/((z-3)(z-4))
  and (z-2)/(z(z-3)).  Both are stabilizable, but only the first has the
  parity interlacing property: between its real unstable zeros (2 and,
  being strictly proper, infinity) lie two real unstable poles.  The
  second has one pole (at 3) between 2 and infinity, so no stable -- and
  hence no FIR -- controller can stabilize it.
* ``system3`` -- the linearized batch reactor benchmark, discretized with
  a 0.1 sampling period (matrices stored to the printed two-decimal
  precision).  Static output feedback cannot stabilize it, an FIR law of
  order 1 can.
* ``system4`` -- a three-state, two-input plant that static output
  feedback stabilizes, and the only one of the four where the convexified
  output-feedback LMI is feasible.

The expected outcomes recorded here are what ``firsyn bench`` re-checks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .analysis import StrongStabilizability
from .sysmodel import StateSpaceSystem, TransferFunction, tf_to_ss


@dataclass(frozen=True, eq=False)
class BenchmarkEntry:
    id: str
    model: object  # StateSpaceSystem | TransferFunction
    strong_stabilizability: StrongStabilizability
    convex_order0_feasible: bool
    minimal_stabilizing_order: int | None  # None: no stabilizing FIR order


def _system1() -> TransferFunction:
    return TransferFunction(num=[1.0, -2.0], den=np.polymul([1.0, -3.0], [1.0, -4.0]))


def _system2() -> TransferFunction:
    return TransferFunction(num=[1.0, -2.0], den=np.polymul([1.0, -3.0], [1.0, 0.0]))


def _system3() -> StateSpaceSystem:
    return StateSpaceSystem(
        A=[[1.18, 0.00, 0.51, -0.40],
           [-0.05, 0.66, -0.01, 0.06],
           [0.08, 0.34, 0.56, 0.38],
           [0.00, 0.34, 0.09, 0.85]],
        B=[[0.00], [0.47], [0.21], [0.21]],
        C=[[0.0, 1.0, 0.0, 0.0],
           [1.0, 0.0, 1.0, -1.0]],
    )


def _system4() -> StateSpaceSystem:
    return StateSpaceSystem(
        A=[[1.0, -0.3, 0.6],
           [0.0, 0.0, 1.0],
           [0.29, -0.8, 1.0]],
        B=[[1.0, 0.0], [0.0, 1.0], [1.0, 0.0]],
        C=[[1.0, 1.0, 0.0]],
    )


def registry() -> dict[str, BenchmarkEntry]:
    """Read-only registry of the benchmark systems and their expected
    outcomes."""
    return {
        "system1": BenchmarkEntry(
            id="system1",
            model=_system1(),
            strong_stabilizability=StrongStabilizability.NECESSARY_CONDITION_HOLDS,
            convex_order0_feasible=False,
            minimal_stabilizing_order=0,
        ),
        "system2": BenchmarkEntry(
            id="system2",
            model=_system2(),
            strong_stabilizability=StrongStabilizability.FAILS,
            convex_order0_feasible=False,
            minimal_stabilizing_order=None,
        ),
        "system3": BenchmarkEntry(
            id="system3",
            model=_system3(),
            strong_stabilizability=StrongStabilizability.NOT_APPLICABLE_MIMO,
            convex_order0_feasible=False,
            minimal_stabilizing_order=1,
        ),
        "system4": BenchmarkEntry(
            id="system4",
            model=_system4(),
            strong_stabilizability=StrongStabilizability.NOT_APPLICABLE_MIMO,
            convex_order0_feasible=True,
            minimal_stabilizing_order=0,
        ),
    }


def realize(model) -> StateSpaceSystem:
    """State-space form of a registry model (transfer functions go through
    the controllable-canonical realization)."""
    if isinstance(model, StateSpaceSystem):
        return model
    if isinstance(model, TransferFunction):
        return tf_to_ss(model)
    raise TypeError(f"cannot realize {type(model).__name__}")
