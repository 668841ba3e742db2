"""The quantum linear system model and its system-theoretic checks.

A QLS is the triple (S, C, Omega): field squeezing/scattering S (symplectic,
2m x 2m), coupling C (2m x 2n) and Hamiltonian Omega (2n x 2n), with the
derived drift matrix

    A = -1/2 C^b C - i J_n Omega.

The pair (A, C) is physically realizable iff A + A^b + C^b C = 0, which holds
by construction here.  The transfer function

    Xi(s) = 1 - C (s - A)^{-1} C^b S

is symplectic on the imaginary axis, and two minimal stable systems share a
transfer function iff they are related by a symplectic gauge transformation
C -> C T^b, J Omega -> T J Omega T^b.
"""

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .algebra import (
    TOL_NUM,
    TOL_STRUCT,
    Delta,
    du_blocks,
    flat_adjoint,
    is_doubled_up,
    is_symplectic,
    jmat,
)

RANK_TOL = 1e-10   # relative singular-value cutoff for rank decisions
STAB_TOL = 1e-12   # strict-inequality margin for the Hurwitz test


@dataclass(frozen=True)
class QLSystem:
    """A quantum linear system (S, C, Omega) in the doubled-up representation.

    Validated at construction: S symplectic, C and Omega doubled-up,
    Omega_- Hermitian and Omega_+ symmetric.  Instances are immutable.
    """

    S: np.ndarray
    C: np.ndarray
    Omega: np.ndarray

    def __post_init__(self):
        S = np.asarray(self.S, dtype=complex)
        C = np.asarray(self.C, dtype=complex)
        Om = np.asarray(self.Omega, dtype=complex)
        object.__setattr__(self, "S", S)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "Omega", Om)
        if C.shape != (S.shape[0], Om.shape[0]):
            raise ValueError(
                f"incompatible shapes: S {S.shape}, C {C.shape}, Omega {Om.shape}"
            )
        if not is_symplectic(S):
            raise ValueError("S is not symplectic")
        if not is_doubled_up(C):
            raise ValueError("C is not doubled-up")
        if not is_doubled_up(Om):
            raise ValueError("Omega is not doubled-up")
        om, op = du_blocks(Om)
        scale = max(1.0, np.linalg.norm(Om))
        if np.linalg.norm(om - om.conj().T) > TOL_STRUCT * scale * 10:
            raise ValueError("Omega_- must be Hermitian")
        if np.linalg.norm(op - op.T) > TOL_STRUCT * scale * 10:
            raise ValueError("Omega_+ must be symmetric")

    @property
    def n(self):
        """System mode count."""
        return self.Omega.shape[0] // 2

    @property
    def m(self):
        """Field channel count."""
        return self.S.shape[0] // 2

    @property
    def A(self):
        """Drift matrix -1/2 C^b C - i J Omega."""
        return drift_matrix(self)

    @property
    def is_passive(self):
        """True when C_+, Omega_+ and S_+ all vanish."""
        tol = 1e-12 * max(
            1.0, np.linalg.norm(self.C) + np.linalg.norm(self.Omega) + np.linalg.norm(self.S)
        )
        return all(
            np.linalg.norm(du_blocks(M)[1]) <= tol for M in (self.C, self.Omega, self.S)
        )

    @staticmethod
    def passive(S_minus, C_minus, Omega_minus):
        """Build a passive system from the non-doubled (S_-, C_-, Omega_-) triple."""
        S_minus = np.atleast_2d(np.asarray(S_minus, dtype=complex))
        C_minus = np.atleast_2d(np.asarray(C_minus, dtype=complex))
        Omega_minus = np.atleast_2d(np.asarray(Omega_minus, dtype=complex))
        return QLSystem(S=Delta(S_minus), C=Delta(C_minus), Omega=Delta(Omega_minus))

    @staticmethod
    def from_blocks(C_minus, C_plus, Omega_minus, Omega_plus, S=None):
        """Build a system from the four coupling/Hamiltonian blocks (S defaults to 1)."""
        C = Delta(C_minus, C_plus)
        Om = Delta(Omega_minus, Omega_plus)
        if S is None:
            S = np.eye(C.shape[0], dtype=complex)
        return QLSystem(S=np.asarray(S, dtype=complex), C=C, Omega=Om)


@dataclass(frozen=True)
class StateSpace:
    """A plain (A, B, C, D) quadruple; possibly non-physical."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray

    def __post_init__(self):
        for name in ("A", "B", "C", "D"):
            object.__setattr__(self, name, np.atleast_2d(np.asarray(getattr(self, name), dtype=complex)))
        n = self.A.shape[0]
        if self.A.shape[1] != n or self.B.shape[0] != n or self.C.shape[1] != n:
            raise ValueError("incompatible state-space dimensions")
        if self.D.shape != (self.C.shape[0], self.B.shape[1]):
            raise ValueError("incompatible feedthrough dimensions")

    def transfer(self, s):
        """Evaluate D + C (s - A)^{-1} B by dense solve."""
        n = self.A.shape[0]
        X = np.linalg.solve(s * np.eye(n) - self.A, self.B)
        return self.D + self.C @ X


def drift_matrix(sys):
    """Drift matrix A = -1/2 C^b C - i J Omega of a QLSystem."""
    n = sys.n
    return -0.5 * flat_adjoint(sys.C) @ sys.C - 1j * jmat(n) @ sys.Omega


def check_pr(A, C, tol=TOL_NUM):
    """Physical realizability: || A + A^b + C^b C || <= tol (relative)."""
    A = np.asarray(A, dtype=complex)
    C = np.asarray(C, dtype=complex)
    resid = A + flat_adjoint(A) + flat_adjoint(C) @ C
    scale = max(1.0, np.linalg.norm(A) + np.linalg.norm(C) ** 2)
    return np.linalg.norm(resid) / scale <= tol


def transfer_function(sys, s):
    """Transfer function Xi(s) = (1 - C (s - A)^{-1} C^b) S.

    Scattering multiplies from the right so that Xi -> S as |s| -> inf.
    Raises ValueError when s is (numerically) on the spectrum of A.
    """
    A = sys.A
    n2 = A.shape[0]
    eigs = np.linalg.eigvals(A)
    if n2 and np.min(np.abs(eigs - s)) < 1e-12 * max(1.0, np.max(np.abs(eigs))):
        raise ValueError(f"s = {s} is a pole of the transfer function")
    if n2 == 0:
        return sys.S.copy()
    X = np.linalg.solve(s * np.eye(n2) - A, flat_adjoint(sys.C))
    return (np.eye(sys.S.shape[0], dtype=complex) - sys.C @ X) @ sys.S


def controllability_matrix(A, B):
    """[B, AB, ..., A^{n-1} B]."""
    A = np.asarray(A, dtype=complex)
    B = np.atleast_2d(np.asarray(B, dtype=complex))
    blocks, acc = [], B
    for _ in range(A.shape[0]):
        blocks.append(acc)
        acc = A @ acc
    return np.hstack(blocks)


def observability_matrix(C, A):
    """[C; CA; ...; C A^{n-1}]."""
    A = np.asarray(A, dtype=complex)
    C = np.atleast_2d(np.asarray(C, dtype=complex))
    blocks, acc = [], C
    for _ in range(A.shape[0]):
        blocks.append(acc)
        acc = acc @ A
    return np.vstack(blocks)


def _full_rank(M, rank_tol=RANK_TOL):
    sv = np.linalg.svd(M, compute_uv=False)
    if sv[0] == 0:
        return False
    return np.sum(sv > rank_tol * sv[0]) == min(M.shape)


def is_minimal(sys, rank_tol=RANK_TOL):
    """Minimality via full rank of the observability matrix of (C, A).

    Observability and controllability are equivalent for QLSs, so one test
    suffices.
    """
    return _full_rank(observability_matrix(sys.C, sys.A), rank_tol)


def is_hurwitz(sys, stab_tol=STAB_TOL):
    """True iff every eigenvalue of A satisfies Re(lambda) < -stab_tol."""
    return bool(np.max(np.linalg.eigvals(sys.A).real) < -stab_tol)


def spectral_gap(sys):
    """min |Re(lambda)| over the spectrum of A; 1/gap is the stabilisation time."""
    return float(np.min(np.abs(np.linalg.eigvals(sys.A).real)))


def _omega_from_drift(A, C):
    """Recover Omega = i J (A + 1/2 C^b C), symmetrising away numerical noise."""
    n = A.shape[0] // 2
    Om = 1j * jmat(n) @ (A + 0.5 * flat_adjoint(C) @ C)
    om, op = du_blocks(Om)
    om = 0.5 * (om + om.conj().T)
    op = 0.5 * (op + op.T)
    return Delta(om, op)


def series_product(first, second):
    """Series interconnection: output of `first` feeds `second`.

    The composite transfer function is Xi_second(s) Xi_first(s).  Modes are
    concatenated (first system's modes first); channel counts must agree.
    """
    if first.m != second.m:
        raise ValueError(f"channel counts differ: {first.m} vs {second.m}")
    n1, n2 = first.n, second.n
    S2C1 = second.S @ first.C
    Cm = np.hstack([du_blocks(S2C1)[0], du_blocks(second.C)[0]])
    Cp = np.hstack([du_blocks(S2C1)[1], du_blocks(second.C)[1]])
    C = Delta(Cm, Cp)
    S = second.S @ first.S

    X = -flat_adjoint(second.C) @ second.S @ first.C  # mode-coupling block
    A1, A2 = first.A, second.A
    Am = np.block(
        [
            [du_blocks(A1)[0], np.zeros((n1, n2))],
            [du_blocks(X)[0], du_blocks(A2)[0]],
        ]
    )
    Ap = np.block(
        [
            [du_blocks(A1)[1], np.zeros((n1, n2))],
            [du_blocks(X)[1], du_blocks(A2)[1]],
        ]
    )
    A = Delta(Am, Ap)
    return QLSystem(S=S, C=C, Omega=_omega_from_drift(A, C))


def concatenate(a, b):
    """Concatenation: systems side by side, block-diagonal in modes and channels."""
    def blockdiag(Ma, Mb):
        ra, ca = Ma.shape
        rb, cb = Mb.shape
        out = np.zeros((ra + rb, ca + cb), dtype=complex)
        out[:ra, :ca] = Ma
        out[ra:, ca:] = Mb
        return out

    parts = {}
    for name in ("S", "C", "Omega"):
        Ma, Mb = getattr(a, name), getattr(b, name)
        parts[name] = Delta(
            blockdiag(du_blocks(Ma)[0], du_blocks(Mb)[0]),
            blockdiag(du_blocks(Ma)[1], du_blocks(Mb)[1]),
        )
    return QLSystem(S=parts["S"], C=parts["C"], Omega=parts["Omega"])


def gauge_transform(sys, T, tol=TOL_NUM):
    """Symplectic change of system basis: C' = C T^b, J Omega' = T J Omega T^b.

    Leaves the transfer function invariant (S unchanged).
    """
    T = np.asarray(T, dtype=complex)
    if not is_symplectic(T, tol=max(tol, 1e-7)):
        raise ValueError("gauge transformation must be symplectic")
    n = sys.n
    J = jmat(n)
    C2 = sys.C @ flat_adjoint(T)
    JOm2 = T @ J @ sys.Omega @ flat_adjoint(T)
    Om2 = J @ JOm2
    om, op = du_blocks(Om2)
    Om2 = Delta(0.5 * (om + om.conj().T), 0.5 * (op + op.T))
    return QLSystem(S=sys.S, C=C2, Omega=Om2)


def default_grid(sys, points=41, avoid=1e-6):
    """Laplace-axis test grid s = -i w, log-spaced from the spectral structure.

    Frequencies span [1e-2 * gap, 1e2 * ||A||] symmetrically plus w = 0,
    nudged off any pole by `avoid`.
    """
    A = sys.A
    gap = max(spectral_gap(sys), 1e-6)
    top = max(np.linalg.norm(A), 10 * gap)
    w = np.logspace(np.log10(1e-2 * gap), np.log10(1e2 * top), points // 2)
    omegas = np.concatenate([-w[::-1], [0.0], w])
    eigs = np.linalg.eigvals(A)
    out = []
    for om in omegas:
        s = -1j * om
        if np.min(np.abs(eigs - s)) < avoid:
            s -= avoid * 1j
        out.append(s)
    return np.array(out)


def tf_equal(a, b, grid=None, tol=1e-8):
    """Max transfer-function deviation over a grid, compared against tol.

    The grid defaults to the union of both systems' default grids.
    """
    if a.m != b.m:
        raise ValueError("channel counts differ")
    if grid is None:
        grid = np.concatenate([default_grid(a), default_grid(b)])
    dev = 0.0
    for s in grid:
        dev = max(dev, np.linalg.norm(transfer_function(a, s) - transfer_function(b, s)))
    return dev <= tol


@dataclass(frozen=True)
class ParamFamily:
    """One-parameter family of systems theta -> QLSystem.

    ``fd_step`` is the central finite-difference step used for derivatives;
    it defaults to 1e-6 * max(1, |theta|) at evaluation time when zero.
    """

    evaluate: Callable[[float], QLSystem]
    fd_step: float = 0.0

    def step(self, theta):
        if self.fd_step > 0:
            return self.fd_step
        return 1e-6 * max(1.0, abs(theta))

    def derivatives(self, theta):
        """Central finite differences (dC, dOmega) at theta."""
        h = self.step(theta)
        hi, lo = self.evaluate(theta + h), self.evaluate(theta - h)
        dC = (hi.C - lo.C) / (2 * h)
        dOm = (hi.Omega - lo.Omega) / (2 * h)
        return dC, dOm
