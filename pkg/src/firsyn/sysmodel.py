"""Plant and controller data model.

A discrete-time plant ``x(k+1) = A x(k) + B u(k), y(k) = C x(k)`` under an
FIR feedback law ``u(k) = sum_i F_i y(k-i)`` admits two equivalent
reformulations that this module materializes:

* an *augmented plant* whose state stacks the plant state with the last
  ``ell`` outputs, turning the FIR law into static output feedback with
  the stacked gain ``(F_0 F_1 ... F_ell)``;
* a *dynamic controller* ``xhat(k+1) = H xhat + G y, u = E xhat + D y``
  whose state matrix ``H`` is the nilpotent block down-shift.

Both reformulations close the loop to the same matrix, assembled by
:func:`closed_loop` / :func:`closed_loop_dynamic`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError, DimensionError
from .matlib import as_matrix, poly_trim


@dataclass(frozen=True, eq=False)
class StateSpaceSystem:
    """Discrete-time plant matrices (A, B, C), unit sample period."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray

    def __post_init__(self):
        a = as_matrix(self.A, "A")
        b = as_matrix(self.B, "B")
        c = as_matrix(self.C, "C")
        if a.shape[0] != a.shape[1]:
            raise DimensionError(f"A must be square, got {a.shape}")
        if b.shape[0] != a.shape[0]:
            raise DimensionError(f"B has {b.shape[0]} rows, expected {a.shape[0]}")
        if c.shape[1] != a.shape[0]:
            raise DimensionError(f"C has {c.shape[1]} columns, expected {a.shape[0]}")
        object.__setattr__(self, "A", a)
        object.__setattr__(self, "B", b)
        object.__setattr__(self, "C", c)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @property
    def p(self) -> int:
        return self.C.shape[0]


@dataclass(frozen=True, eq=False)
class TransferFunction:
    """Proper SISO transfer function num(z)/den(z), coefficients highest
    degree first."""

    num: np.ndarray
    den: np.ndarray

    def __post_init__(self):
        num = poly_trim(self.num)
        den = poly_trim(self.den)
        if not np.any(den):
            raise ContractError("denominator polynomial is zero")
        if num.size > den.size:
            raise ContractError(
                f"improper transfer function: deg(num)={num.size - 1} > deg(den)={den.size - 1}"
            )
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)

    @property
    def strictly_proper(self) -> bool:
        return self.num.size < self.den.size or not np.any(self.num)


@dataclass(frozen=True, eq=False)
class FirGains:
    """Ordered FIR gain list (F_0, ..., F_ell); all blocks are m x p."""

    gains: tuple

    def __post_init__(self):
        if len(self.gains) == 0:
            raise ContractError("FirGains needs at least F_0")
        blocks = tuple(as_matrix(g, f"F_{i}") for i, g in enumerate(self.gains))
        shape = blocks[0].shape
        for i, g in enumerate(blocks):
            if g.shape != shape:
                raise DimensionError(f"F_{i} has shape {g.shape}, expected {shape}")
        object.__setattr__(self, "gains", blocks)

    @property
    def order(self) -> int:
        return len(self.gains) - 1

    @property
    def m(self) -> int:
        return self.gains[0].shape[0]

    @property
    def p(self) -> int:
        return self.gains[0].shape[1]


@dataclass(frozen=True, eq=False)
class AugmentedPlant:
    """Augmented matrices for a plant whose state carries the last ``order``
    outputs.  ``A`` is (n+ell*p) square, ``B`` stacks B over zeros and ``C``
    is blockdiag(C, I_{ell*p})."""

    order: int
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    n: int
    m: int
    p: int


@dataclass(frozen=True, eq=False)
class DynamicController:
    """Linear dynamic output-feedback controller (H, G, E, D)."""

    H: np.ndarray
    G: np.ndarray
    E: np.ndarray
    D: np.ndarray

    def __post_init__(self):
        h = as_matrix(self.H, "H")
        g = as_matrix(self.G, "G")
        e = as_matrix(self.E, "E")
        d = as_matrix(self.D, "D")
        if h.shape[0] != h.shape[1]:
            raise DimensionError(f"H must be square, got {h.shape}")
        if g.shape[0] != h.shape[0]:
            raise DimensionError("G must have as many rows as H")
        if e.shape[1] != h.shape[0]:
            raise DimensionError("E must have as many columns as H")
        if d.shape != (e.shape[0], g.shape[1]):
            raise DimensionError(f"D must be {e.shape[0]}x{g.shape[1]}, got {d.shape}")
        object.__setattr__(self, "H", h)
        object.__setattr__(self, "G", g)
        object.__setattr__(self, "E", e)
        object.__setattr__(self, "D", d)

    @property
    def state_dim(self) -> int:
        return self.H.shape[0]

    @property
    def p(self) -> int:
        return self.G.shape[1]

    @property
    def m(self) -> int:
        return self.E.shape[0]


def augment(sys: StateSpaceSystem, order: int) -> AugmentedPlant:
    """Augmented plant of the given FIR order.

    The augmented state is ``(x; y(k-1); ...; y(k-order))``; for order 0
    the plant is returned unchanged.  The shift/identity sub-blocks are
    exact 0/1 entries.
    """
    if order < 0:
        raise ContractError("order must be nonnegative")
    n, m, p = sys.n, sys.m, sys.p
    dim = n + order * p
    a = np.zeros((dim, dim))
    a[:n, :n] = sys.A
    if order >= 1:
        a[n:n + p, :n] = sys.C
        if order >= 2:
            a[n + p:, n:n + (order - 1) * p] = np.eye((order - 1) * p)
    b = np.zeros((dim, m))
    b[:n, :] = sys.B
    c = np.zeros(((order + 1) * p, dim))
    c[:p, :n] = sys.C
    if order >= 1:
        c[p:, n:] = np.eye(order * p)
    return AugmentedPlant(order=order, A=a, B=b, C=c, n=n, m=m, p=p)


def stack_gains(f: FirGains) -> np.ndarray:
    """Horizontal concatenation (F_0 F_1 ... F_ell), the static gain on the
    augmented output."""
    return np.hstack(f.gains)


def pad_gains(f: FirGains, blocks: int = 1) -> FirGains:
    """Append ``blocks`` zero gain blocks, raising the order without
    changing the feedback law."""
    if blocks < 0:
        raise ContractError("blocks must be nonnegative")
    zero = np.zeros((f.m, f.p))
    return FirGains(f.gains + tuple(zero.copy() for _ in range(blocks)))


def to_dynamic(f: FirGains) -> DynamicController:
    """Dynamic-controller form of an FIR law.

    ``H`` is the block down-shift (nilpotent: H^order == 0 exactly),
    ``G = (I_p; 0)``, ``E = (F_1 ... F_ell)`` and ``D = F_0``.  For order 0
    the controller is memoryless: H, G, E are empty and D = F_0.
    """
    ell, m, p = f.order, f.m, f.p
    h = np.zeros((ell * p, ell * p))
    if ell >= 2:
        h[p:, :(ell - 1) * p] = np.eye((ell - 1) * p)
    g = np.zeros((ell * p, p))
    if ell >= 1:
        g[:p, :] = np.eye(p)
    e = np.hstack(f.gains[1:]) if ell >= 1 else np.zeros((m, 0))
    return DynamicController(H=h, G=g, E=e, D=f.gains[0].copy())


def closed_loop(sys: StateSpaceSystem, f: FirGains) -> np.ndarray:
    """Closed-loop matrix of the plant under the FIR law, read as static
    output feedback on the augmented plant.

    Block layout (order ell, dim n + ell*p)::

        [ A + B F_0 C   B F_1  ...  B F_ell ]
        [ C             0      ...  0       ]
        [ 0             I_p         0       ]
        [ ...                  ...          ]
    """
    if (f.m, f.p) != (sys.m, sys.p):
        raise DimensionError(
            f"gain blocks are {f.m}x{f.p}, plant needs {sys.m}x{sys.p}"
        )
    n, p = sys.n, sys.p
    ell = f.order
    dim = n + ell * p
    phi = np.zeros((dim, dim))
    phi[:n, :n] = sys.A + (sys.B @ f.gains[0]) @ sys.C
    if ell >= 1:
        # One product over the concatenated tail so this route and the
        # dynamic-controller route perform identical float operations.
        phi[:n, n:] = sys.B @ np.hstack(f.gains[1:])
        phi[n:n + p, :n] = sys.C
        if ell >= 2:
            phi[n + p:, n:n + (ell - 1) * p] = np.eye((ell - 1) * p)
    return phi


def closed_loop_dynamic(sys: StateSpaceSystem, ctl: DynamicController) -> np.ndarray:
    """Closed-loop matrix of the plant under a dynamic controller::

        [ A + B D C   B E ]
        [ G C         H   ]
    """
    if ctl.m != sys.m or ctl.p != sys.p:
        raise DimensionError(
            f"controller is {ctl.m}x{ctl.p}, plant needs {sys.m}x{sys.p}"
        )
    n = sys.n
    h = ctl.state_dim
    out = np.zeros((n + h, n + h))
    out[:n, :n] = sys.A + (sys.B @ ctl.D) @ sys.C
    if h:
        out[:n, n:] = sys.B @ ctl.E
        out[n:, :n] = ctl.G @ sys.C
        out[n:, n:] = ctl.H
    return out


def tf_to_ss(tf: TransferFunction) -> StateSpaceSystem:
    """Controllable-canonical realization of a strictly proper transfer
    function; state dimension equals deg(den).

    Plants here have no direct feedthrough, so a biproper input (equal
    numerator and denominator degree) is rejected.
    """
    den = tf.den / tf.den[0]
    num = tf.num / tf.den[0]
    n = den.size - 1
    if num.size == den.size and np.any(num):
        raise ContractError(
            "biproper transfer function has a direct feedthrough term; "
            "plants are strictly proper"
        )
    if n == 0:
        raise ContractError("static transfer function has no state dynamics")
    a = np.zeros((n, n))
    a[0, :] = -den[1:]
    if n > 1:
        a[1:, :-1] = np.eye(n - 1)
    b = np.zeros((n, 1))
    b[0, 0] = 1.0
    c = np.zeros((1, n))
    c[0, n - num.size:] = num
    return StateSpaceSystem(A=a, B=b, C=c)
