"""Existence and stability analysis.

Schur stability, PBH stabilizability/detectability tests, pole/zero
extraction, and the SISO parity-interlacing-property (PIP) decision that
gates strong stabilizability.  An FIR feedback law is itself a stable
system, so a plant can only be FIR-stabilizable if it is stabilizable by
a stable controller; for SISO plants that is equivalent to the PIP: the
number of real unstable poles between consecutive real unstable zeros
(counting the zero at infinity of a strictly proper plant) must be even.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import matlib
from .errors import ContractError
from .sysmodel import StateSpaceSystem, TransferFunction, augment

# A pole/zero counts as "unstable real" when it is real (within the
# realness tolerance) and exceeds 1 by more than this margin; values whose
# distance to the classification boundary is below the margin are reported
# as borderline instead of being silently classified.
PIP_BOUNDARY_TOL = 1e-9
REALNESS_TOL = 1e-8
CANCEL_TOL = 1e-8


class StrongStabilizability(enum.Enum):
    NECESSARY_CONDITION_HOLDS = "necessary-condition-holds"
    FAILS = "fails"
    NOT_APPLICABLE_MIMO = "not-applicable-mimo"


@dataclass(frozen=True)
class PipReport:
    """Outcome of the parity-interlacing test.

    ``unstable_real_zeros`` is sorted ascending with ``math.inf`` appended
    for strictly proper systems.  ``interval_pole_counts`` holds one
    ``((lo, hi), count)`` pair per consecutive-zero open interval; the
    property holds iff every count is even.  Roots too close to a
    classification boundary land in ``borderline`` and cancelled pole/zero
    pairs in ``cancellations``.
    """

    holds: bool
    unstable_real_zeros: tuple
    interval_pole_counts: tuple
    unstable_real_poles: tuple
    borderline: tuple = ()
    cancellations: tuple = ()


def is_schur(m, margin: float = 0.0) -> bool:
    """True iff the spectral radius is strictly below ``1 - margin``."""
    if margin < 0:
        raise ContractError("margin must be nonnegative")
    return matlib.spectral_radius(m) < 1.0 - margin


def _pbh_full_rank(a: np.ndarray, b: np.ndarray, lam: complex, tol: float) -> bool:
    """rank(lam*I - a | b) == n, evaluated over the reals.

    The complex pencil is embedded as [[Re, -Im], [Im, Re]], whose rank is
    exactly twice the complex rank, keeping the kernel real-only.
    """
    n = a.shape[0]
    pencil = np.hstack([lam * np.eye(n) - a, b.astype(complex)])
    real_embed = np.block(
        [[pencil.real, -pencil.imag], [pencil.imag, pencil.real]]
    )
    return matlib.rank(real_embed, tol) == 2 * n


def pbh_stabilizable(sys: StateSpaceSystem, tol: float = 1e-9) -> bool:
    """PBH test: every eigenvalue of A with |lambda| >= 1 must keep
    (lam*I - A | B) at full row rank."""
    for lam in matlib.eigenvalues(sys.A):
        if abs(lam) >= 1.0 and not _pbh_full_rank(sys.A, sys.B, lam, tol):
            return False
    return True


def pbh_detectable(sys: StateSpaceSystem, tol: float = 1e-9) -> bool:
    """Dual PBH test on (A^T, C^T)."""
    for lam in matlib.eigenvalues(sys.A):
        if abs(lam) >= 1.0 and not _pbh_full_rank(sys.A.T, sys.C.T, lam, tol):
            return False
    return True


def augmented_stabilizable_check(sys: StateSpaceSystem, order: int, tol: float = 1e-9) -> bool:
    """PBH stabilizability of the augmented pair.

    Augmentation only adds zero eigenvalues, so this must agree with
    ``pbh_stabilizable(sys)``; the operation exists as a cross-check, not
    a shortcut.
    """
    aug = augment(sys, order)
    for lam in matlib.eigenvalues(aug.A):
        if abs(lam) >= 1.0 and not _pbh_full_rank(aug.A, aug.B, lam, tol):
            return False
    return True


def poles_zeros(tf: TransferFunction):
    """(poles, zeros, zero_at_infinity) of a SISO transfer function."""
    poles = matlib.poly_roots(tf.den) if tf.den.size >= 2 else np.empty(0, complex)
    zeros = matlib.poly_roots(tf.num) if tf.num.size >= 2 else np.empty(0, complex)
    return poles, zeros, tf.strictly_proper


def _cancel_common_roots(poles, zeros, tol):
    """Greedily cancel pole/zero pairs closer than ``tol`` (relative)."""
    poles = list(poles)
    kept_zeros = []
    cancelled = []
    for z in zeros:
        best = None
        for i, pole in enumerate(poles):
            if abs(z - pole) <= tol * (1.0 + abs(z)):
                if best is None or abs(z - pole) < abs(z - poles[best]):
                    best = i
        if best is None:
            kept_zeros.append(z)
        else:
            cancelled.append(poles.pop(best))
    return poles, kept_zeros, cancelled


def _classify_unstable_real(values, realness_tol):
    """Split roots into (unstable real, borderline).

    A root is unstable real when its imaginary part is negligible and its
    real part exceeds 1 + PIP_BOUNDARY_TOL.  Roots within the boundary
    band around the threshold, or with a small-but-not-negligible
    imaginary part next to it, are flagged as borderline.
    """
    selected = []
    borderline = []
    for v in values:
        scale = 1.0 + abs(v.real)
        is_real = abs(v.imag) <= realness_tol * scale
        near_real = abs(v.imag) <= 1e3 * realness_tol * scale
        if is_real:
            if v.real > 1.0 + PIP_BOUNDARY_TOL:
                selected.append(float(v.real))
            elif abs(v.real - 1.0) <= PIP_BOUNDARY_TOL:
                borderline.append(complex(v))
        elif near_real and v.real > 1.0:
            borderline.append(complex(v))
    return sorted(selected), borderline


def pip_check(tf: TransferFunction, tol: float = REALNESS_TOL) -> PipReport:
    """Parity-interlacing test for a SISO transfer function.

    Common num/den roots are cancelled first (PIP is a property of the
    irreducible transfer function).  The zero list gets an infinity
    sentinel when the system is strictly proper; pole multiplicity counts
    toward its interval.  With fewer than two unstable real zeros the
    property holds vacuously.
    """
    poles_raw, zeros_raw, strictly_proper = poles_zeros(tf)
    poles, zeros, cancelled = _cancel_common_roots(poles_raw, zeros_raw, CANCEL_TOL)
    unstable_poles, borderline_p = _classify_unstable_real(poles, tol)
    unstable_zeros, borderline_z = _classify_unstable_real(zeros, tol)
    zero_list = list(unstable_zeros)
    if strictly_proper:
        zero_list.append(math.inf)
    counts = []
    for lo, hi in zip(zero_list, zero_list[1:]):
        count = sum(1 for pole in unstable_poles if lo < pole < hi)
        counts.append(((lo, hi), count))
    holds = all(count % 2 == 0 for _, count in counts)
    return PipReport(
        holds=holds,
        unstable_real_zeros=tuple(zero_list),
        interval_pole_counts=tuple(counts),
        unstable_real_poles=tuple(unstable_poles),
        borderline=tuple(borderline_p + borderline_z),
        cancellations=tuple(cancelled),
    )


def siso_transfer_function(sys: StateSpaceSystem) -> TransferFunction:
    """Transfer function C (zI - A)^{-1} B of a SISO state-space plant.

    Uses the determinant identity
    ``det(zI - A + B C) = det(zI - A) (1 + C (zI - A)^{-1} B)`` so the
    numerator comes out of two characteristic polynomials.
    """
    if sys.m != 1 or sys.p != 1:
        raise ContractError("transfer function extraction needs a SISO system")
    den = np.poly(sys.A)
    num = np.poly(sys.A - sys.B @ sys.C) - den
    return TransferFunction(num=num, den=den)


def strong_stabilizability_gate(model) -> StrongStabilizability:
    """Necessary-condition gate for the existence of a stabilizing FIR law.

    SISO models are decided through :func:`pip_check`; MIMO state-space
    models return ``NOT_APPLICABLE_MIMO`` (no discrete-time MIMO parity
    test is implemented here).
    """
    if isinstance(model, TransferFunction):
        tf = model
    elif isinstance(model, StateSpaceSystem):
        if model.m != 1 or model.p != 1:
            return StrongStabilizability.NOT_APPLICABLE_MIMO
        tf = siso_transfer_function(model)
    else:
        raise ContractError(f"unsupported model type {type(model).__name__}")
    if pip_check(tf).holds:
        return StrongStabilizability.NECESSARY_CONDITION_HOLDS
    return StrongStabilizability.FAILS
