"""Finite-difference solver for the transformed potential problem.

The electric potential, posed on the deformed region between the ground plate
and the membrane, is pulled back to the fixed rectangle (-1,1)x(0,1) where it
satisfies a variable-coefficient elliptic equation L_u(phi) = 0 with boundary
data phi = eta.  This module discretizes L_u with centred differences, solves
it by Jacobi iteration, and extracts the membrane-edge flux phi_eta(x, 1) that
forces the elastic problem.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .core import (
    Deflection,
    Grid,
    InvalidGridError,
    NoConvergenceError,
    Potential,
    QuenchedStateError,
    Tolerances,
)


@dataclass(frozen=True)
class OperatorCoefficients:
    """Coefficients of L_u phi = a_xx phi_xx + a_xeta phi_xeta + a_etaeta phi_etaeta + a_eta phi_eta.

    a_xx is the constant eps^2; the others vary over the grid.  Each varying
    coefficient separates into an x-profile times a power of eta, which the
    iteration kernels exploit; the full 2-D arrays are exposed for inspection
    and residual evaluation.
    """

    a_xx: float
    a_xeta: np.ndarray    # shape (nx+1, neta+1)
    a_etaeta: np.ndarray
    a_eta: np.ndarray


def _coefficient_profiles(defl: Deflection, eps: float):
    """x-profiles r = u_x/(1+u), s = 1/(1+u)^2, c = eps^2(2r^2 - u_xx/(1+u)).

    With eta_j = j*deta the node coefficients are a_xeta = -2 eps^2 eta r,
    a_etaeta = s + eps^2 eta^2 r^2, a_eta = eta c.
    """
    if defl.min_gap <= 0.0:
        raise QuenchedStateError("membrane touches the ground plate: min(1+u) <= 0")
    h = 1.0 + defl.u
    r = defl.ux / h
    s = 1.0 / (h * h)
    c = eps * eps * (2.0 * r * r - defl.uxx / h)
    return r, s, c


def operator_coefficients(defl: Deflection, eps: float, grid: Grid) -> OperatorCoefficients:
    """Assemble the full coefficient fields of L_u on the grid."""
    r, s, c = _coefficient_profiles(defl, eps)
    eta = grid.eta[None, :]
    e2 = eps * eps
    return OperatorCoefficients(
        a_xx=e2,
        a_xeta=-2.0 * e2 * eta * r[:, None],
        a_etaeta=s[:, None] + e2 * eta * eta * (r * r)[:, None],
        a_eta=eta * c[:, None],
    )


def apply_operator(phi: Potential, defl: Deflection, eps: float, grid: Grid) -> np.ndarray:
    """Evaluate the discrete L_u phi at interior nodes (zeros on the boundary).

    Uses centred second differences for phi_xx and phi_etaeta, a centred first
    difference for phi_eta, and the four-point centred stencil for phi_xeta.
    """
    co = operator_coefficients(defl, eps, grid)
    p = phi.phi
    dx, deta = grid.dx, grid.deta
    out = np.zeros_like(p)
    pxx = (p[2:, 1:-1] - 2.0 * p[1:-1, 1:-1] + p[:-2, 1:-1]) / (dx * dx)
    pee = (p[1:-1, 2:] - 2.0 * p[1:-1, 1:-1] + p[1:-1, :-2]) / (deta * deta)
    pe = (p[1:-1, 2:] - p[1:-1, :-2]) / (2.0 * deta)
    pxe = (p[2:, 2:] - p[2:, :-2] - p[:-2, 2:] + p[:-2, :-2]) / (4.0 * dx * deta)
    out[1:-1, 1:-1] = (co.a_xx * pxx
                       + co.a_xeta[1:-1, 1:-1] * pxe
                       + co.a_etaeta[1:-1, 1:-1] * pee
                       + co.a_eta[1:-1, 1:-1] * pe)
    return out


@numba.njit(cache=True)
def _jacobi_core(phi, new, r, s, c, eps, dx, deta, tol, max_iter):  # pragma: no cover - jit
    """Jacobi iteration until the diagonally scaled residual max-norm <= tol.

    Each sweep solves the stencil equation for the centre value with
    neighbours frozen, writing into the scratch array `new`.  The scaled
    residual of the current iterate equals the max increment of the next
    sweep, so convergence is tested before a sweep is adopted; a warm start at
    the fixed point exits after zero sweeps.  Returns (sweeps, residual) with
    sweeps = -1 if max_iter was exhausted.
    """
    nx = phi.shape[0] - 1
    neta = phi.shape[1] - 1
    e2 = eps * eps
    cx = e2 / (dx * dx)
    res = 0.0
    for it in range(max_iter + 1):
        res = 0.0
        for i in range(1, nx):
            axe_i = -2.0 * e2 * r[i]
            ci = c[i]
            for j in range(1, neta):
                eta = j * deta
                a_ee = s[i] + e2 * eta * eta * r[i] * r[i]
                ce = a_ee / (deta * deta)
                diag = 2.0 * cx + 2.0 * ce
                off = (cx * (phi[i + 1, j] + phi[i - 1, j])
                       + ce * (phi[i, j + 1] + phi[i, j - 1])
                       + axe_i * eta * (phi[i + 1, j + 1] - phi[i + 1, j - 1]
                                        - phi[i - 1, j + 1] + phi[i - 1, j - 1])
                       / (4.0 * dx * deta)
                       + eta * ci * (phi[i, j + 1] - phi[i, j - 1]) / (2.0 * deta))
                v = off / diag
                new[i, j] = v
                d = abs(v - phi[i, j])
                if d > res:
                    res = d
        if res <= tol:
            return it, res
        for i in range(1, nx):
            for j in range(1, neta):
                phi[i, j] = new[i, j]
    return -1, res


@numba.njit(cache=True)
def jacobi_sweeps(phi, r, s, c, eps, dx, deta, tol, max_iter):  # pragma: no cover - jit
    """Allocating front end for _jacobi_core; see there for semantics."""
    new = np.empty_like(phi)
    return _jacobi_core(phi, new, r, s, c, eps, dx, deta, tol, max_iter)


def solve_potential(defl: Deflection, eps: float, grid: Grid,
                    tol: Tolerances = Tolerances(),
                    init: Potential | None = None) -> Potential:
    """Solve L_u phi = 0 with phi = eta on the rectangle boundary.

    The initial iterate is `init` when given (warm start), else phi = eta.
    The boundary rows/columns are set once and never touched by the sweeps,
    so phi = eta holds there bit-exactly.  Deterministic fixed sweep order.
    """
    r, s, c = _coefficient_profiles(defl, eps)
    if init is not None:
        phi = init.phi.copy()
    else:
        phi = np.tile(grid.eta, (grid.nx + 1, 1))
    phi[0, :] = grid.eta
    phi[-1, :] = grid.eta
    phi[:, 0] = 0.0
    phi[:, -1] = 1.0
    it, res = jacobi_sweeps(phi, r, s, c, eps, grid.dx, grid.deta,
                            tol.jacobi_tol, tol.jacobi_max_iter)
    if it < 0:
        raise NoConvergenceError(
            f"Jacobi iteration stalled: residual {res:.3e} > {tol.jacobi_tol:.1e} "
            f"after {tol.jacobi_max_iter} sweeps", residual=res)
    return Potential(phi=phi)


def boundary_flux(phi: Potential, grid: Grid) -> np.ndarray:
    """phi_eta(x_i, 1) by the second-order one-sided stencil at the top edge."""
    if grid.neta < 2:
        raise InvalidGridError("boundary flux needs neta >= 2")
    p = phi.phi
    return (3.0 * p[:, -1] - 4.0 * p[:, -2] + p[:, -3]) / (2.0 * grid.deta)


def untransform_potential(phi: Potential, defl: Deflection, grid: Grid) -> np.ndarray:
    """Map grid samples back to the physical deformed region.

    Returns an array of rows (x, z, psi) with z = (1 + u(x))*eta - 1, ordered
    row-major over eta then x, suitable for contour plotting in the strip
    between the ground plate z = -1 and the membrane z = u(x).
    """
    if defl.min_gap <= 0.0:
        raise QuenchedStateError("membrane touches the ground plate: min(1+u) <= 0")
    x = grid.x
    eta = grid.eta
    h = 1.0 + defl.u
    xs = np.repeat(x, eta.size)
    zs = (h[:, None] * eta[None, :] - 1.0).ravel()
    return np.column_stack([xs, zs, phi.phi.ravel()])
