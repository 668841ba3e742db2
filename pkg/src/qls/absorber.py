"""Coherent quantum absorbers: dual systems that purify the stationary state.

Given a globally minimal system driven by vacuum, the dual is a second
system, cascaded after the first, chosen so that the joint stationary state
is pure; the cascade then has trivial power spectrum and the output equals
the input.  In the basis where the stationary covariance is thermal,
P = diag(N+1, N), the joint pure state is a product of two-mode squeezed
pairs with off-diagonal block Q (built from M_i = sqrt(N_i (N_i+1))), and
the dual couplings follow in closed form:

    C2^b V_vac = P Q^{-1} C1^b V_vac,
    A2 = Q P^{-1} A1 P Q^{-1} + C2^b C1 P Q^{-1}.

The dual inherits the drift spectrum of the original system, so it is
automatically stable.
"""

from dataclasses import dataclass

import numpy as np

from .algebra import Delta, du_blocks, flat_adjoint, jmat, williamson
from .model import QLSystem, check_pr, default_grid, gauge_transform, is_hurwitz, series_product
from .stationary import (
    GM_TOL,
    InputCovariance,
    power_spectrum,
    solve_lyapunov,
    vacuum_covariance,
)


@dataclass(frozen=True)
class AbsorberResult:
    """Dual system, the series cascade, its purity defect and the basis change."""

    dual: QLSystem
    combined: QLSystem
    purity_residual: float
    basis_transform: np.ndarray


def canonicalize_stationary(sys, gm_tol=GM_TOL):
    """Rotate the system basis so its vacuum stationary state is thermal-diagonal.

    Returns {"sys": rotated system, "transform": symplectic, "occupations": N_i}.
    The thermal occupations are sorted ascending and must all be strictly
    positive (global minimality), otherwise ValueError is raised.
    """
    if not is_hurwitz(sys):
        raise ValueError("system must be Hurwitz")
    state = solve_lyapunov(sys, InputCovariance.vacuum(sys.m))
    res = williamson(state.P, sys.n)
    scale = max(1.0, float(np.linalg.norm(state.P)))
    if np.min(res.symplectic_eigenvalues) <= gm_tol * scale:
        raise ValueError(
            "system is not globally minimal for vacuum input "
            f"(min occupation {np.min(res.symplectic_eigenvalues):.3e})"
        )
    rotated = gauge_transform(sys, res.transform)
    return {
        "sys": rotated,
        "transform": res.transform,
        "occupations": res.symplectic_eigenvalues,
    }


def _one_mode_dual(sys):
    """Closed-form dual of a one-mode system: C2 from swapped scaled couplings."""
    Cm, Cp = du_blocks(sys.C)
    r = np.linalg.norm(Cm) / np.linalg.norm(Cp)
    C2m = -r * Cp
    C2p = -Cp if r == 0 else -(1.0 / r) * Cm
    A2 = jmat(1) @ sys.A.conj() @ jmat(1)
    C2 = Delta(C2m, C2p)
    Om2 = 1j * jmat(1) @ (A2 + 0.5 * flat_adjoint(C2) @ C2)
    om, op = du_blocks(Om2)
    return QLSystem.from_blocks(C2m, C2p, 0.5 * (om + om.conj().T), 0.5 * (op + op.T))


def dual_system(sys, gm_tol=GM_TOL):
    """Coherent quantum absorber of a globally minimal, Hurwitz system (vacuum input).

    Works in the canonical thermal basis; the pure joint extension pairs
    canonical mode i of the system with mode i of the dual (ascending
    occupations).  Returns an AbsorberResult; ``combined`` is the cascade of
    the canonical system into the dual.
    """
    canon = canonicalize_stationary(sys, gm_tol=gm_tol)
    sys1 = canon["sys"]
    n, m = sys1.n, sys1.m
    occ = canon["occupations"]
    Nd = np.diag(occ)
    Md = np.diag(np.sqrt(occ * (occ + 1.0)))
    P = np.block(
        [[Nd + np.eye(n), np.zeros((n, n))], [np.zeros((n, n)), Nd]]
    ).astype(complex)
    Q = np.block([[np.zeros((n, n)), Md], [Md, np.zeros((n, n))]]).astype(complex)

    A1, C1 = sys1.A, sys1.C
    PQinv = P @ np.linalg.inv(Q)
    rhs = PQinv @ flat_adjoint(C1) @ vacuum_covariance(m)
    # read C2 off the nonzero (first m) columns: C2^b V_vac = [[C2-^dag, 0], [-C2+^dag, 0]]
    X1 = rhs[:n, :m]
    X2 = rhs[n:, :m]
    C2m = X1.conj().T
    C2p = -X2.conj().T
    C2 = Delta(C2m, C2p)
    if np.linalg.norm(flat_adjoint(C2) @ vacuum_covariance(m) - rhs) > 1e-8 * max(
        1.0, np.linalg.norm(rhs)
    ):
        raise RuntimeError("dual coupling does not assemble to a doubled-up matrix")
    QPinv = Q @ np.linalg.inv(P)
    A2 = QPinv @ A1 @ PQinv + flat_adjoint(C2) @ C1 @ PQinv
    Om2 = 1j * jmat(n) @ (A2 + 0.5 * flat_adjoint(C2) @ C2)
    om, op = du_blocks(Om2)
    dual = QLSystem.from_blocks(C2m, C2p, 0.5 * (om + om.conj().T), 0.5 * (op + op.T))
    if not check_pr(dual.A, dual.C, tol=1e-7):
        raise RuntimeError("dual system violates physical realizability")
    combined = series_product(sys1, dual)
    report = verify_absorber(sys1, dual)
    return AbsorberResult(
        dual=dual,
        combined=combined,
        purity_residual=report["purity_residual"],
        basis_transform=canon["transform"],
    )


def verify_absorber(sys, dual, grid=None):
    """Purity and output-triviality defects of the cascade sys -> dual.

    Returns {"purity_residual": max symplectic eigenvalue of the combined
    stationary state, "ps_residual": max grid deviation of the combined power
    spectrum from V_vac}.
    """
    combined = series_product(sys, dual)
    vac = InputCovariance.vacuum(sys.m)
    state = solve_lyapunov(combined, vac)
    purity = float(np.max(state.symplectic_spectrum))
    if grid is None:
        grid = default_grid(combined, 21)
    Vv = vacuum_covariance(sys.m)
    ps_resid = max(
        float(np.linalg.norm(power_spectrum(combined, vac, s) - Vv)) for s in grid
    )
    return {"purity_residual": purity, "ps_residual": ps_resid}
