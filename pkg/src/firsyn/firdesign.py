"""Non-convex FIR synthesis by spectral-radius minimization.

The design objective is the closed-loop spectral radius as a function of
the flattened gain vector; it is nonsmooth (the gradient can even be
locally unbounded near eigenvalue coalescence), so both local searches
are derivative free:

* ``DIRECT_SEARCH`` -- compass pattern search with step expansion and
  contraction.  When the full coordinate poll fails, a handful of random
  unit directions are polled at the same step before contracting; plain
  coordinate polling is known to stall on spectral-radius kinks.
* ``EVOLUTIONARY`` -- a (mu+lambda) evolution strategy with log-normal
  self-adaptive mutation steps.

:func:`optimize_order` runs a fixed number of independent local searches
(multi-start), optionally seeded from a lower-order design padded with a
zero block (padding preserves closed-loop eigenvalues and adds zeros, so
a feasible design can never be lost by raising the order).
:func:`order_sweep` chains warm starts across orders and enforces the
resulting monotonicity as a post-check.

Every run derives its own random stream from (seed, order, run index),
so results are reproducible and independent of worker scheduling.
"""

from __future__ import annotations

import enum
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import matlib
from .errors import ContractError, ConvergenceError, FirsynError
from .sysmodel import DynamicController, FirGains, StateSpaceSystem, pad_gains

STEP_TOL = 1e-10
SIGMA_TOL = 1e-12
MONOTONICITY_TOL = 1e-9
DEFAULT_EVAL_BUDGET_PER_PARAM = 20000
WORKER_ENV_VAR = "FIRSYN_WORKERS"
TAIL_REL_TOL = 1e-14
TAIL_MAX_TERMS = 100_000


class SearchMethod(enum.Enum):
    DIRECT_SEARCH = "direct"
    EVOLUTIONARY = "evolutionary"


@dataclass(frozen=True)
class OptimizerConfig:
    runs_per_order: int = 10
    max_evals_per_run: int | None = None  # None: budget per parameter applies
    init_scale: float = 1.0
    seed: int = 0
    stability_margin: float = 0.0
    method: SearchMethod = SearchMethod.DIRECT_SEARCH

    def __post_init__(self):
        if self.runs_per_order < 1:
            raise ContractError("runs_per_order must be >= 1")
        if self.max_evals_per_run is not None and self.max_evals_per_run < 1:
            raise ContractError("max_evals_per_run must be >= 1")
        if self.init_scale <= 0:
            raise ContractError("init_scale must be positive")
        if self.stability_margin < 0:
            raise ContractError("stability_margin must be nonnegative")


@dataclass(frozen=True, eq=False)
class DesignOutcome:
    order: int
    best_gains: FirGains
    best_rho: float
    per_run_rhos: tuple
    median_rho: float
    evals_used: int

    @property
    def stabilizing(self) -> bool:
        return self.best_rho < 1.0


def default_workers() -> int:
    """Worker count for multi-start runs: FIRSYN_WORKERS overrides the
    number of available cores."""
    env = os.environ.get(WORKER_ENV_VAR)
    if env:
        count = int(env)
        if count < 1:
            raise ContractError(f"{WORKER_ENV_VAR} must be a positive integer")
        return count
    return os.cpu_count() or 1


def _unflatten(vec: np.ndarray, order: int, m: int, p: int) -> FirGains:
    blocks = vec.reshape(order + 1, m, p)
    return FirGains(tuple(blocks[i].copy() for i in range(order + 1)))


def _flatten(f: FirGains) -> np.ndarray:
    return np.concatenate([g.ravel() for g in f.gains])


class _SpectralRadiusObjective:
    """rho(closed loop) over the flattened gain vector, with the constant
    shift/identity blocks preassembled."""

    def __init__(self, sys: StateSpaceSystem, order: int):
        if order < 0:
            raise ContractError("order must be nonnegative")
        self.sys = sys
        self.order = order
        self.n_params = sys.m * sys.p * (order + 1)
        n, p = sys.n, sys.p
        dim = n + order * p
        base = np.zeros((dim, dim))
        if order >= 1:
            base[n:n + p, :n] = sys.C
            if order >= 2:
                base[n + p:, n:n + (order - 1) * p] = np.eye((order - 1) * p)
        self._base = base

    def __call__(self, vec: np.ndarray) -> float:
        sys = self.sys
        n, p = sys.n, sys.p
        blocks = vec.reshape(self.order + 1, sys.m, p)
        phi = self._base.copy()
        phi[:n, :n] = sys.A + (sys.B @ blocks[0]) @ sys.C
        for i in range(1, self.order + 1):
            phi[:n, n + (i - 1) * p:n + i * p] = sys.B @ blocks[i]
        return float(np.max(np.abs(np.linalg.eigvals(phi))))


def objective(sys: StateSpaceSystem, order: int, gains_vector) -> float:
    """Closed-loop spectral radius for a flattened gain vector
    (F_0 first, each block row-major)."""
    fn = _SpectralRadiusObjective(sys, order)
    vec = np.asarray(gains_vector, dtype=float).reshape(-1)
    if vec.size != fn.n_params:
        raise ContractError(
            f"gain vector has {vec.size} entries, expected {fn.n_params}"
        )
    return fn(vec)


def _pattern_search(fn, x0, rng, max_evals, step0, step_tol=STEP_TOL):
    """Compass search with expansion/contraction and random-direction
    rescue polls on coordinate-poll failure."""
    x = x0.copy()
    fx = fn(x)
    evals = 1
    step = step0
    d = x.size
    while evals < max_evals and step > step_tol:
        improved = False
        for i in range(d):
            for sign in (1.0, -1.0):
                if evals >= max_evals:
                    break
                trial = x.copy()
                trial[i] += sign * step
                ft = fn(trial)
                evals += 1
                if ft < fx:
                    x, fx = trial, ft
                    improved = True
        if not improved:
            for _ in range(d):
                if evals >= max_evals:
                    break
                direction = rng.standard_normal(d)
                norm = np.linalg.norm(direction)
                if norm == 0.0:
                    continue
                trial = x + (step / norm) * direction
                ft = fn(trial)
                evals += 1
                if ft < fx:
                    x, fx = trial, ft
                    improved = True
                    break
        step = step * 2.0 if improved else step * 0.5
    return x, fx, evals


def _evolution_strategy(fn, x0, rng, max_evals, sigma0, mu=5, lam=10,
                        sigma_tol=SIGMA_TOL):
    """(mu+lambda) evolution strategy with self-adaptive mutation step."""
    d = x0.size
    tau = 1.0 / np.sqrt(2.0 * d)
    population = [(fn(x0), x0.copy(), sigma0)]
    evals = 1
    while len(population) < mu and evals < max_evals:
        x = x0 + sigma0 * rng.standard_normal(d)
        population.append((fn(x), x, sigma0))
        evals += 1
    population.sort(key=lambda entry: entry[0])
    while evals + lam <= max_evals:
        offspring = []
        for _ in range(lam):
            _, parent_x, parent_sigma = population[rng.integers(len(population))]
            sigma = parent_sigma * np.exp(tau * rng.standard_normal())
            x = parent_x + sigma * rng.standard_normal(d)
            offspring.append((fn(x), x, sigma))
            evals += 1
        population = sorted(population + offspring, key=lambda entry: entry[0])[:mu]
        if max(entry[2] for entry in population) < sigma_tol:
            break
    best = population[0]
    return best[1], best[0], evals


def _initial_point(rng, n_params, warm_vec, run_index, runs_per_order, init_scale):
    """Run starting point: the padded warm start goes to run 0 verbatim,
    about a third of the runs perturb it, the rest are fresh Gaussians."""
    if warm_vec is not None:
        if run_index == 0:
            return warm_vec.copy()
        if run_index <= runs_per_order // 3:
            return warm_vec + 0.1 * init_scale * rng.standard_normal(n_params)
    return init_scale * rng.standard_normal(n_params)


def _run_local_search(args):
    sys, order, cfg, run_index, warm_vec = args
    fn = _SpectralRadiusObjective(sys, order)
    max_evals = cfg.max_evals_per_run or DEFAULT_EVAL_BUDGET_PER_PARAM * fn.n_params
    rng = np.random.default_rng(
        [cfg.seed & 0xFFFFFFFFFFFFFFFF, order, run_index]
    )
    x0 = _initial_point(rng, fn.n_params, warm_vec, run_index,
                        cfg.runs_per_order, cfg.init_scale)
    if cfg.method is SearchMethod.EVOLUTIONARY:
        x, fx, evals = _evolution_strategy(
            fn, x0, rng, max_evals, sigma0=cfg.init_scale
        )
    else:
        x, fx, evals = _pattern_search(fn, x0, rng, max_evals, step0=cfg.init_scale)
    return x, fx, evals


def optimize_order(
    sys: StateSpaceSystem,
    order: int,
    cfg: OptimizerConfig,
    warm: FirGains | None = None,
    workers: int | None = None,
) -> DesignOutcome:
    """Multi-start spectral-radius minimization at a fixed FIR order.

    With a warm start of order ``order - 1``, its zero-padded gain vector
    is evaluated verbatim by run 0 (so the achievable optimum can never
    regress past it), a few runs perturb it, and the remaining runs use
    fresh random initial gains.  Results are reproducible from
    ``cfg.seed`` regardless of the worker count.  An unstabilized outcome
    (best_rho >= 1) is a valid result, not an error.
    """
    if warm is not None:
        if warm.order != order - 1:
            raise ContractError(
                f"warm start has order {warm.order}, expected {order - 1}"
            )
        if (warm.m, warm.p) != (sys.m, sys.p):
            raise ContractError("warm start gain dimensions do not match the plant")
        warm_vec = _flatten(pad_gains(warm))
    else:
        warm_vec = None
    if workers is None:
        workers = default_workers()
    tasks = [(sys, order, cfg, r, warm_vec) for r in range(cfg.runs_per_order)]
    if workers > 1 and cfg.runs_per_order > 1:
        with ProcessPoolExecutor(max_workers=min(workers, cfg.runs_per_order)) as pool:
            results = list(pool.map(_run_local_search, tasks))
    else:
        results = [_run_local_search(task) for task in tasks]
    rhos = tuple(float(r[1]) for r in results)
    best_index = int(np.argmin(rhos))  # ties resolve to the lowest run index
    best_x = results[best_index][0]
    return DesignOutcome(
        order=order,
        best_gains=_unflatten(best_x, order, sys.m, sys.p),
        best_rho=rhos[best_index],
        per_run_rhos=rhos,
        median_rho=float(np.median(rhos)),
        evals_used=int(sum(r[2] for r in results)),
    )


def order_sweep(
    sys: StateSpaceSystem,
    max_order: int,
    cfg: OptimizerConfig,
    workers: int | None = None,
) -> list[DesignOutcome]:
    """Sequential sweep over FIR orders 0..max_order.

    Each order's best gains seed the next order's warm start (stabilizing
    or not, so the padded candidate is always in the evaluated set), which
    makes the best achieved objective non-increasing; that monotonicity is
    enforced as a post-check.
    """
    if max_order < 0:
        raise ContractError("max_order must be nonnegative")
    outcomes: list[DesignOutcome] = []
    warm = None
    for order in range(max_order + 1):
        outcome = optimize_order(sys, order, cfg, warm=warm, workers=workers)
        if outcomes and outcome.best_rho > outcomes[-1].best_rho + MONOTONICITY_TOL:
            raise FirsynError(
                "order sweep lost monotonicity: "
                f"rho({order}) = {outcome.best_rho:.12g} > "
                f"rho({order - 1}) = {outcomes[-1].best_rho:.12g}"
            )
        outcomes.append(outcome)
        warm = outcome.best_gains
    return outcomes


def _controller_spectral_radius(ctl: DynamicController) -> float:
    if ctl.state_dim == 0:
        return 0.0
    return matlib.spectral_radius(ctl.H)


def fir_approximate(ctl: DynamicController, order: int) -> FirGains:
    """Rectangular-window FIR truncation of a stable dynamic controller:
    F_0 = D and F_i = E H^{i-1} G for i = 1..order."""
    if order < 0:
        raise ContractError("order must be nonnegative")
    if _controller_spectral_radius(ctl) >= 1.0:
        raise ContractError(
            "controller state matrix is not Schur stable; the windowed "
            "truncation would diverge"
        )
    gains = [ctl.D.copy()]
    impulse = ctl.G.copy()
    for _ in range(order):
        gains.append(ctl.E @ impulse)
        impulse = ctl.H @ impulse
    return FirGains(tuple(gains))


def approximation_tail(ctl: DynamicController, order: int) -> float:
    """Upper bound on the impulse-response mass dropped by an order-
    ``order`` rectangular-window truncation: sum_{i>=order} ||E H^i G||_2.

    Summation stops once terms fall below ``TAIL_REL_TOL`` of the partial
    sum (after at least dim(H)+1 terms, so nilpotent leading zeros cannot
    end the sum early); the term count is capped."""
    if order < 0:
        raise ContractError("order must be nonnegative")
    if _controller_spectral_radius(ctl) >= 1.0:
        raise ContractError("controller state matrix is not Schur stable")
    impulse = ctl.G.copy()
    for _ in range(order):
        impulse = ctl.H @ impulse
    total = 0.0
    min_terms = ctl.state_dim + 1
    for count in range(TAIL_MAX_TERMS):
        term = float(np.linalg.norm(ctl.E @ impulse, 2)) if ctl.state_dim else 0.0
        total += term
        if count + 1 >= min_terms and term <= TAIL_REL_TOL * total:
            return total
        impulse = ctl.H @ impulse
    raise ConvergenceError(
        f"tail summation did not converge within {TAIL_MAX_TERMS} terms "
        f"(partial sum {total:.6e})"
    )
