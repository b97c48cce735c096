"""Affine matrix-inequality feasibility engine and convex design paths.

Three design-related facilities live here:

* :func:`lyapunov_verify` -- a discrete Lyapunov (Stein) certificate
  ``Phi' P Phi - P = -I`` via a vectorized linear solve; a positive
  definite ``P`` certifies Schur stability independently of any
  eigenvalue computation.
* :func:`state_feedback_design` -- the classical always-feasible LMI for
  static state feedback on the augmented plant, with change of variables
  ``W = P^{-1}``, ``L = K W`` and reconstruction ``K = L W^{-1}``.
* :func:`sof_convex_design` -- the convexified static-output-feedback
  LMI with the extra substitution ``M C = C W`` and reconstruction
  ``F = N M^{-1}``.  This convexification is restrictive by design: it
  can be (and for most benchmark plants is) infeasible even when a
  stabilizing gain exists, and once infeasible at order 0 it stays
  infeasible at every higher FIR order.

Feasibility problems are stored as an explicit affine map (constant block
plus one symmetric coefficient block per scalar variable) together with
linear equality constraints.  :func:`solve_feasibility` maximizes the
smallest eigenvalue of the mapped matrix with cvxpy and only ever reports
``FEASIBLE`` for a point whose eigenvalue margin and equality residual
are re-verified independently of the solver; ``NUMERICALLY_INFEASIBLE``
is a heuristic verdict, never a proof.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import cvxpy as cp
import numpy as np

from . import matlib
from .errors import (
    ContractError,
    ConvergenceError,
    DegenerateSolutionError,
    SingularMatrixError,
)
from .sysmodel import AugmentedPlant, FirGains, StateSpaceSystem, augment, closed_loop

# Margin required of a certified feasible point, scaled by the constant
# block; equality residuals are held to EQ_TOL (scaled by the rhs).
FEAS_MARGIN_SCALE = 1e-6
EQ_TOL_SCALE = 1e-6
# Search box keeping the eigenvalue maximization bounded for problems
# whose feasible cone is scale invariant.
VARIABLE_BOUND = 1e6
MARGIN_CAP = 1e4
# Invertibility threshold for the M block of the output-feedback design.
M_INVERTIBILITY_TOL = 1e-8


class FeasibilityStatus(enum.Enum):
    FEASIBLE = "feasible"
    NUMERICALLY_INFEASIBLE = "numerically-infeasible"


@dataclass(frozen=True, eq=False)
class FeasibilityProblem:
    """Affine symmetric-matrix map plus linear equality constraints.

    ``matrix_map(x) = constant + sum_i x[i] * coefficients[i]`` must be
    positive definite; ``eq_lhs @ x = eq_rhs`` must hold exactly.
    ``variable_labels`` ties scalar variables to their structured blocks.
    """

    constant: np.ndarray
    coefficients: np.ndarray
    eq_lhs: np.ndarray
    eq_rhs: np.ndarray
    variable_labels: tuple = ()

    def __post_init__(self):
        const = matlib.as_square(self.constant, "constant block")
        coeffs = np.asarray(self.coefficients, dtype=float)
        if coeffs.ndim != 3 or coeffs.shape[1:] != const.shape:
            raise ContractError(
                f"coefficient stack must be (k, {const.shape[0]}, {const.shape[0]})"
            )
        for idx, block in enumerate((const, *coeffs)):
            skew = np.abs(block - block.T).max() if block.size else 0.0
            if skew > 1e-12 * (1.0 + np.abs(block).max()):
                raise ContractError(f"coefficient block {idx - 1} is not symmetric")
        k = coeffs.shape[0]
        lhs = np.asarray(self.eq_lhs, dtype=float).reshape(-1, k) if k else np.zeros((0, 0))
        rhs = np.asarray(self.eq_rhs, dtype=float).reshape(-1)
        if lhs.shape[0] != rhs.shape[0]:
            raise ContractError("equality lhs/rhs row counts differ")
        labels = tuple(self.variable_labels) or tuple(f"x{i}" for i in range(k))
        if len(labels) != k:
            raise ContractError("one label per scalar variable required")
        object.__setattr__(self, "constant", const)
        object.__setattr__(self, "coefficients", coeffs)
        object.__setattr__(self, "eq_lhs", lhs)
        object.__setattr__(self, "eq_rhs", rhs)
        object.__setattr__(self, "variable_labels", labels)

    @property
    def decision_dim(self) -> int:
        return self.coefficients.shape[0]

    def matrix_map(self, x) -> np.ndarray:
        vec = np.asarray(x, dtype=float).reshape(self.decision_dim)
        return self.constant + np.tensordot(vec, self.coefficients, axes=1)


@dataclass(frozen=True, eq=False)
class FeasibilityResult:
    status: FeasibilityStatus
    variables: np.ndarray | None
    achieved_margin: float
    iterations: int
    restarts: int

    @property
    def feasible(self) -> bool:
        return self.status is FeasibilityStatus.FEASIBLE


def default_feasibility_margin(problem: FeasibilityProblem) -> float:
    scale = np.linalg.norm(problem.constant, 2) if problem.constant.size else 0.0
    return FEAS_MARGIN_SCALE * (1.0 + scale)


def solve_feasibility(
    problem: FeasibilityProblem,
    eps_feas: float | None = None,
    budget: int = 5000,
) -> FeasibilityResult:
    """Search for x with ``matrix_map(x) >= eps_feas * I`` and exact
    equalities.

    The smallest eigenvalue of the mapped matrix is maximized subject to
    the equality constraints (plus a large search box so the problem stays
    bounded).  A FEASIBLE verdict requires the returned point to pass an
    independent eigenvalue re-check at margin ``eps_feas`` and an equality
    residual check; anything else is NUMERICALLY_INFEASIBLE.
    """
    if eps_feas is None:
        eps_feas = default_feasibility_margin(problem)
    k = problem.decision_dim
    s = problem.constant.shape[0]
    x = cp.Variable(k)
    t = cp.Variable()
    flat = problem.coefficients.reshape(k, s * s)
    mvec = flat.T @ x + problem.constant.ravel()
    mexpr = cp.reshape(mvec, (s, s), order="C")
    msym = (mexpr + mexpr.T) / 2
    constraints = [
        msym - t * np.eye(s) >> 0,
        cp.norm(x, 2) <= VARIABLE_BOUND,
        t <= MARGIN_CAP,
    ]
    if problem.eq_lhs.shape[0]:
        constraints.append(problem.eq_lhs @ x == problem.eq_rhs)
    prob = cp.Problem(cp.Maximize(t), constraints)

    iterations = 0
    restarts = 0
    solved = False
    for solver, opts in (
        (cp.CLARABEL, {"max_iter": budget}),
        (cp.SCS, {"max_iters": budget}),
    ):
        try:
            prob.solve(solver=solver, **opts)
        except cp.error.SolverError:
            restarts += 1
            continue
        stats = prob.solver_stats
        if stats is not None and stats.num_iters is not None:
            iterations += int(stats.num_iters)
        if x.value is not None:
            solved = True
            break
        restarts += 1
    if not solved:
        return FeasibilityResult(
            status=FeasibilityStatus.NUMERICALLY_INFEASIBLE,
            variables=None,
            achieved_margin=-np.inf,
            iterations=iterations,
            restarts=restarts,
        )

    point = np.asarray(x.value, dtype=float).reshape(k)
    # Certificate re-check, independent of the solver's own report.
    margin = matlib.sym_eig_extremes(problem.matrix_map(point))[0]
    if problem.eq_lhs.shape[0]:
        residual = np.abs(problem.eq_lhs @ point - problem.eq_rhs).max()
        eq_tol = EQ_TOL_SCALE * (1.0 + np.abs(problem.eq_rhs).max(initial=0.0))
    else:
        residual, eq_tol = 0.0, np.inf
    certified = margin >= eps_feas and residual <= eq_tol
    return FeasibilityResult(
        status=FeasibilityStatus.FEASIBLE if certified else FeasibilityStatus.NUMERICALLY_INFEASIBLE,
        variables=point if certified else None,
        achieved_margin=float(margin),
        iterations=iterations,
        restarts=restarts,
    )


def lyapunov_verify(phi) -> np.ndarray | None:
    """Solve ``Phi' P Phi - P = -I``; return P if positive definite.

    The Stein equation is solved by vectorization (a Kronecker linear
    system); a nonempty result certifies Schur stability.  Eigenvalue
    pairs with product one make the operator singular.
    """
    arr = matlib.as_square(phi, "Phi")
    n = arr.shape[0]
    if n == 0:
        raise ContractError("empty matrix has no Lyapunov certificate")
    # Row-major vec: vec(A X B) = kron(A, B') vec(X).
    op = np.kron(arr.T, arr.T) - np.eye(n * n)
    rhs = -np.eye(n).ravel()
    try:
        p = matlib.solve_linear(op, rhs).reshape(n, n)
    except SingularMatrixError as exc:
        raise SingularMatrixError(
            f"Stein operator singular (eigenvalue product at 1): {exc}"
        ) from exc
    p = (p + p.T) / 2.0
    if matlib.sym_eig_extremes(p)[0] > 0.0:
        return p
    return None


def _symmetric_basis(dim: int):
    """Upper-triangle scalar parameterization of a symmetric dim x dim
    matrix: yields (label, direction)."""
    for i in range(dim):
        for j in range(i, dim):
            direction = np.zeros((dim, dim))
            direction[i, j] = 1.0
            direction[j, i] = 1.0
            yield f"[{i},{j}]", direction


def _full_basis(rows: int, cols: int):
    for i in range(rows):
        for j in range(cols):
            direction = np.zeros((rows, cols))
            direction[i, j] = 1.0
            yield f"[{i},{j}]", direction


def _lyap_lmi_block(a: np.ndarray, w_dir: np.ndarray) -> np.ndarray:
    """Contribution of a W-direction to [[W, A W + ...], [..., W]]."""
    dim = a.shape[0]
    block = np.zeros((2 * dim, 2 * dim))
    block[:dim, :dim] = w_dir
    block[dim:, dim:] = w_dir
    top = a @ w_dir
    block[:dim, dim:] = top
    block[dim:, :dim] = top.T
    return block


def _input_lmi_block(b_term: np.ndarray) -> np.ndarray:
    """Contribution of an off-diagonal term to the same block form."""
    dim = b_term.shape[0]
    block = np.zeros((2 * dim, 2 * dim))
    block[:dim, dim:] = b_term
    block[dim:, :dim] = b_term.T
    return block


def state_feedback_design(
    aug: AugmentedPlant, eps_feas: float | None = None, budget: int = 5000
) -> np.ndarray:
    """Stabilizing static state-feedback gain for the augmented plant.

    Solves ``[[W, A W + B L], [(A W + B L)', W]] > 0`` with the trace of W
    normalized, reconstructs ``K = L W^{-1}`` and re-verifies both the
    closed-loop spectral radius and the Lyapunov inequality with
    ``P = W^{-1}``.  Feasibility is guaranteed for stabilizable pairs, so
    failure raises :class:`ConvergenceError`.
    """
    a, b = aug.A, aug.B
    dim = a.shape[0]
    m = b.shape[1]
    labels = []
    coeffs = []
    n_w = dim * (dim + 1) // 2
    for label, w_dir in _symmetric_basis(dim):
        labels.append("W" + label)
        coeffs.append(_lyap_lmi_block(a, w_dir))
    for label, l_dir in _full_basis(m, dim):
        labels.append("L" + label)
        coeffs.append(_input_lmi_block(b @ l_dir))
    k = len(coeffs)
    # Normalization trace(W) = dim removes the scale invariance.
    eq = np.zeros((1, k))
    pos = 0
    for i in range(dim):
        for j in range(i, dim):
            if i == j:
                eq[0, pos] = 1.0
            pos += 1
    problem = FeasibilityProblem(
        constant=np.zeros((2 * dim, 2 * dim)),
        coefficients=np.stack(coeffs),
        eq_lhs=eq,
        eq_rhs=np.array([float(dim)]),
        variable_labels=tuple(labels),
    )
    result = solve_feasibility(problem, eps_feas=eps_feas, budget=budget)
    if not result.feasible:
        raise ConvergenceError(
            "state-feedback LMI did not reach a certified point "
            f"(margin {result.achieved_margin:.3e}); the augmented pair may "
            "not be stabilizable or the budget was too small"
        )
    w = _unpack_symmetric(result.variables[:n_w], dim)
    l_block = result.variables[n_w:].reshape(m, dim)
    gain = matlib.solve_linear(w, l_block.T).T
    _verify_lyapunov_pair(a + b @ gain, w, "state-feedback design")
    return gain


def _unpack_symmetric(values: np.ndarray, dim: int) -> np.ndarray:
    out = np.zeros((dim, dim))
    pos = 0
    for i in range(dim):
        for j in range(i, dim):
            out[i, j] = values[pos]
            out[j, i] = values[pos]
            pos += 1
    return out


def _verify_lyapunov_pair(phi: np.ndarray, w: np.ndarray, what: str) -> np.ndarray:
    """Check W > 0 and Phi' P Phi - P < 0 for P = W^{-1}; returns P."""
    if matlib.sym_eig_extremes(w)[0] <= 0.0:
        raise DegenerateSolutionError(f"{what}: W is not positive definite")
    p = matlib.solve_linear(w, np.eye(w.shape[0]))
    p = (p + p.T) / 2.0
    decrement = phi.T @ p @ phi - p
    if matlib.sym_eig_extremes((decrement + decrement.T) / 2.0)[1] >= 0.0:
        raise DegenerateSolutionError(
            f"{what}: reconstructed Lyapunov certificate failed re-verification"
        )
    return p


def try_decompose(k_gain, c_aug, tol: float = 1e-8) -> np.ndarray | None:
    """Solve ``F C = K`` by least squares; None unless the residual is
    below ``tol * ||K||`` (state feedback is output-realizable only when K
    lies in the row space of C)."""
    k_arr = matlib.as_matrix(k_gain, "K")
    c_arr = matlib.as_matrix(c_aug, "C")
    if c_arr.shape[1] != k_arr.shape[1]:
        raise ContractError("K and C must share their column dimension")
    f_t, *_ = np.linalg.lstsq(c_arr.T, k_arr.T, rcond=None)
    f = f_t.T
    residual = np.linalg.norm(f @ c_arr - k_arr)
    if residual > tol * max(np.linalg.norm(k_arr), 1e-300):
        return None
    return f


def sof_convex_design(
    sys: StateSpaceSystem,
    order: int,
    eps_feas: float | None = None,
    budget: int = 5000,
) -> FirGains | None:
    """Convexified static-output-feedback design of an FIR law.

    Builds the LMI ``[[W, A W + B N C], [..., W]] > 0`` on the augmented
    plant with the coupling ``M C = C W`` and trace normalization, then
    reconstructs ``F = N M^{-1}`` and re-verifies the closed loop
    (spectral radius and Lyapunov inequality with ``P = W^{-1}``).
    Returns None on a NUMERICALLY_INFEASIBLE verdict.  A certified
    feasible point with a singular M block raises
    :class:`DegenerateSolutionError`.
    """
    aug = augment(sys, order)
    a, b, c = aug.A, aug.B, aug.C
    dim = a.shape[0]
    m = b.shape[1]
    q = c.shape[0]
    labels = []
    coeffs = []
    eq_cols = []
    n_w = dim * (dim + 1) // 2
    n_m = q * q
    # Coupling rows: vec(M C - C W) = 0, one row per entry of a q x dim matrix.
    for label, w_dir in _symmetric_basis(dim):
        labels.append("W" + label)
        coeffs.append(_lyap_lmi_block(a, w_dir))
        eq_cols.append(-(c @ w_dir).ravel())
    for label, m_dir in _full_basis(q, q):
        labels.append("M" + label)
        coeffs.append(np.zeros((2 * dim, 2 * dim)))
        eq_cols.append((m_dir @ c).ravel())
    for label, n_dir in _full_basis(m, q):
        labels.append("N" + label)
        coeffs.append(_input_lmi_block(b @ n_dir @ c))
        eq_cols.append(np.zeros(q * dim))
    k = len(coeffs)
    eq_lhs = np.zeros((q * dim + 1, k))
    eq_lhs[:q * dim, :] = np.column_stack(eq_cols)
    eq_rhs = np.zeros(q * dim + 1)
    pos = 0
    for i in range(dim):
        for j in range(i, dim):
            if i == j:
                eq_lhs[q * dim, pos] = 1.0
            pos += 1
    eq_rhs[q * dim] = float(dim)
    problem = FeasibilityProblem(
        constant=np.zeros((2 * dim, 2 * dim)),
        coefficients=np.stack(coeffs),
        eq_lhs=eq_lhs,
        eq_rhs=eq_rhs,
        variable_labels=tuple(labels),
    )
    result = solve_feasibility(problem, eps_feas=eps_feas, budget=budget)
    if not result.feasible:
        return None
    w = _unpack_symmetric(result.variables[:n_w], dim)
    m_block = result.variables[n_w:n_w + n_m].reshape(q, q)
    n_block = result.variables[n_w + n_m:].reshape(m, q)
    sv = np.linalg.svd(m_block, compute_uv=False)
    if sv[-1] < M_INVERTIBILITY_TOL * sv[0]:
        raise DegenerateSolutionError(
            "feasible point has a numerically singular M block "
            f"(smallest sv {sv[-1]:.3e}); gain reconstruction aborted"
        )
    f_stacked = matlib.solve_linear(m_block.T, n_block.T).T
    p = sys.p
    gains = FirGains(tuple(f_stacked[:, i * p:(i + 1) * p] for i in range(order + 1)))
    phi = closed_loop(sys, gains)
    if matlib.spectral_radius(phi) >= 1.0:
        raise DegenerateSolutionError(
            "reconstructed gain failed the closed-loop spectral radius check"
        )
    _verify_lyapunov_pair(phi, w, "output-feedback design")
    return gains
