"""Stationary coupled solver: shooting + Picard, bifurcation curve, pull-in.

The stationary membrane satisfies the two-point boundary value problem

    u'' = lambda (1 + eps^2 u'^2) / (1 + u)^2 * q(x)^2,   u(-1) = u(1) = 0,

where q = |phi_eta(x, 1)| is the membrane-edge flux of the potential solved on
the current deformed geometry.  Shooting on the initial slope s = u'(-1)
solves the BVP for a frozen flux; a Picard iteration alternates the shoot with
a fresh potential solve until u stops changing.  Below the fold two solutions
coexist (a shallow and a deep one); bisection on existence of the shallow
solution locates the static pull-in voltage.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .core import (
    BracketError,
    Deflection,
    Grid,
    NoSolutionError,
    Potential,
    Tolerances,
)
from .potential import boundary_flux, solve_potential

_BISECT_LO = 0.05
_BISECT_HI = 1.0


@dataclass(frozen=True)
class Branch:
    """Selects the shallow (Upper) or deep (Lower) stationary solution.

    slope_bracket is the nominal initial-slope interval associated with the
    branch.  Near the fold both roots of u(1; s) can sit inside (-1.5, 0), so
    the search tells the branches apart by scan direction over (scan_lo,
    scan_hi) rather than by the nominal partition alone: the Upper root is the
    first sign change met coming down from s = 0, the Lower root the first met
    coming up from s = -3.
    """

    tag: str
    slope_bracket: tuple[float, float]
    scan_lo: float
    scan_hi: float
    scan_samples: int
    from_high: bool


UPPER = Branch(tag="Upper", slope_bracket=(-1.5, 0.0),
               scan_lo=-1.5, scan_hi=0.0, scan_samples=16, from_high=True)
LOWER = Branch(tag="Lower", slope_bracket=(-3.0, -1.5),
               scan_lo=-3.0, scan_hi=0.0, scan_samples=31, from_high=False)


@dataclass(frozen=True)
class StationaryState:
    """A converged stationary pair (u, phi) at a given lambda."""

    defl: Deflection
    phi: Potential
    lam: float
    residual: float      # final Picard change in u, max norm
    u0: float            # u at the node x = 0, the bifurcation parameter
    branch: str
    picard_sweeps: int


@numba.njit(cache=True)
def _shoot_once(s0, lam, eps, q2, dx, quench_delta):  # pragma: no cover - jit
    """One classical 4th-order shot of the slope IVP across the interval.

    q2 holds the squared flux at the nodes; half-step values are averages of
    the adjacent nodes.  Returns (ok, u(1), profile); ok = False if the
    trajectory dives to within quench_delta of the plate.
    """
    nx = q2.shape[0] - 1
    u = np.zeros(nx + 1)
    uu = 0.0
    v = s0
    e2 = eps * eps
    for i in range(nx):
        q2a = q2[i]
        q2m = 0.5 * (q2[i] + q2[i + 1])
        q2b = q2[i + 1]
        du1 = v
        dv1 = lam * (1.0 + e2 * v * v) / ((1.0 + uu) ** 2) * q2a
        u2 = uu + 0.5 * dx * du1
        v2 = v + 0.5 * dx * dv1
        if 1.0 + u2 <= quench_delta:
            return False, 0.0, u
        du2 = v2
        dv2 = lam * (1.0 + e2 * v2 * v2) / ((1.0 + u2) ** 2) * q2m
        u3 = uu + 0.5 * dx * du2
        v3 = v + 0.5 * dx * dv2
        if 1.0 + u3 <= quench_delta:
            return False, 0.0, u
        du3 = v3
        dv3 = lam * (1.0 + e2 * v3 * v3) / ((1.0 + u3) ** 2) * q2m
        u4 = uu + dx * du3
        v4 = v + dx * dv3
        if 1.0 + u4 <= quench_delta:
            return False, 0.0, u
        du4 = v4
        dv4 = lam * (1.0 + e2 * v4 * v4) / ((1.0 + u4) ** 2) * q2b
        uu = uu + dx * (du1 + 2.0 * du2 + 2.0 * du3 + du4) / 6.0
        v = v + dx * (dv1 + 2.0 * dv2 + 2.0 * dv3 + dv4) / 6.0
        if 1.0 + uu <= quench_delta:
            return False, 0.0, u
        u[i + 1] = uu
    return True, uu, u


def _endpoint(s0, lam, eps, q2, dx, qd):
    """u(1; s0), with a shot that hits the plate counted as -inf (went down)."""
    ok, uend, _ = _shoot_once(s0, lam, eps, q2, dx, qd)
    return uend if ok else -np.inf


def _find_sign_change(lam, eps, q2, dx, qd, lo, hi, n, from_high):
    """First sign change of u(1; s) met while scanning [lo, hi] from one end."""
    ss = np.linspace(lo, hi, n)
    if from_high:
        ss = ss[::-1]
    f_prev = _endpoint(ss[0], lam, eps, q2, dx, qd)
    for k in range(1, len(ss)):
        f_k = _endpoint(ss[k], lam, eps, q2, dx, qd)
        a = f_prev if np.isfinite(f_prev) else -1.0
        b = f_k if np.isfinite(f_k) else -1.0
        if a * b <= 0.0:
            return ss[k - 1], ss[k], a, b
        f_prev = f_k
    return None


def _minimize_endpoint(lam, eps, q2, dx, qd, lo, hi, iters=60):
    """Golden-section minimum of u(1; s) over [lo, hi].

    Close to the fold the dip of u(1; s) below zero is narrower than the scan
    spacing, so the equispaced scan can miss both roots; the minimum locates
    the dip whenever it exists.
    """
    g = 0.5 * (np.sqrt(5.0) - 1.0)
    a, b = lo, hi
    c1 = b - g * (b - a)
    c2 = a + g * (b - a)
    f1 = _endpoint(c1, lam, eps, q2, dx, qd)
    f2 = _endpoint(c2, lam, eps, q2, dx, qd)
    for _ in range(iters):
        if f1 <= f2:
            b, c2, f2 = c2, c1, f1
            c1 = b - g * (b - a)
            f1 = _endpoint(c1, lam, eps, q2, dx, qd)
        else:
            a, c1, f1 = c1, c2, f2
            c2 = a + g * (b - a)
            f2 = _endpoint(c2, lam, eps, q2, dx, qd)
    s = 0.5 * (a + b)
    return s, _endpoint(s, lam, eps, q2, dx, qd)


def shoot_deflection(flux: np.ndarray, lam: float, eps: float, grid: Grid,
                     branch: Branch = UPPER,
                     tol: Tolerances = Tolerances()) -> Deflection:
    """Solve the elastic BVP for a frozen flux profile by shooting.

    Scans the branch's slope range for a sign change of u(1; s), then bisects
    on s until |u(1)| <= shoot_tol.  Raises NoSolutionError when every sampled
    slope either crashes into the plate or no sign change exists (the branch
    does not exist at this lambda).
    """
    q = np.abs(np.asarray(flux, dtype=float))
    q2 = q * q
    if q2.shape[0] != grid.nx + 1:
        raise NoSolutionError(f"flux length {q2.shape[0]} does not match grid nx={grid.nx}")
    if lam == 0.0:
        return Deflection.flat(grid.nx)
    dx, qd = grid.dx, tol.quench_delta
    br = _find_sign_change(lam, eps, q2, dx, qd, branch.scan_lo, branch.scan_hi,
                           branch.scan_samples, branch.from_high)
    if br is None:
        # near the fold the dip of u(1; s) is narrower than the scan spacing;
        # bracket its zero crossings from the minimum instead
        smin, fmin = _minimize_endpoint(lam, eps, q2, dx, qd,
                                        branch.scan_lo, branch.scan_hi)
        if fmin < 0.0:
            if branch.from_high:
                fhi = _endpoint(branch.scan_hi, lam, eps, q2, dx, qd)
                if fhi > 0.0:
                    br = (smin, branch.scan_hi, fmin, fhi)
            else:
                flo = _endpoint(branch.scan_lo, lam, eps, q2, dx, qd)
                if flo > 0.0:
                    br = (branch.scan_lo, smin, flo, fmin)
    if br is None:
        raise NoSolutionError(
            f"no slope in [{branch.scan_lo}, {branch.scan_hi}] shoots back to "
            f"u(1) = 0 at lambda = {lam} ({branch.tag} branch absent)")
    lo, hi, flo, fhi = br
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        ok, um, uprof = _shoot_once(mid, lam, eps, q2, dx, qd)
        if not ok:
            um = -1.0
        if ok and abs(um) <= tol.shoot_tol:
            uprof[-1] = 0.0  # pin the endpoint; |u(1)| <= shoot_tol already
            return Deflection.from_values(uprof, dx)
        if um * flo <= 0.0:
            hi, fhi = mid, um
        else:
            lo, flo = mid, um
    raise NoSolutionError(
        f"slope bisection failed to reach |u(1)| <= {tol.shoot_tol} at lambda = {lam}")


def solve_stationary(lam: float, eps: float, grid: Grid,
                     branch: Branch = UPPER,
                     tol: Tolerances = Tolerances()) -> StationaryState:
    """Picard iteration coupling the shoot with the potential solve.

    Starts from the flat-limit flux q = 1; each sweep shoots u for the current
    flux, re-solves phi on the new geometry (warm-started from the previous
    phi), and blends the refreshed flux into the current one.  Stops when the
    max-norm change in u between sweeps is at most picard_tol.  Near the fold
    the undamped flux update can overshoot the shooting fold even though a
    stationary state exists, so on failure the iteration restarts with
    stronger flux under-relaxation (blend 0.5, then 0.25) before giving up.
    """
    if lam == 0.0:
        return StationaryState(defl=Deflection.flat(grid.nx),
                               phi=Potential.initial(grid), lam=0.0,
                               residual=0.0, u0=0.0, branch=branch.tag,
                               picard_sweeps=1)
    relax_values = (1.0, 0.5, 0.25)
    last_error: Exception | None = None
    for relax in relax_values:
        phi = Potential.initial(grid)
        flux = np.ones(grid.nx + 1)
        u_old = None
        change_old = np.inf
        growth = 0
        try:
            for sweep in range(1, tol.picard_max_iter + 1):
                defl = shoot_deflection(flux, lam, eps, grid, branch, tol)
                u_new = defl.u
                if u_old is not None:
                    change = float(np.max(np.abs(u_new - u_old)))
                    if change <= tol.picard_tol:
                        return StationaryState(
                            defl=defl, phi=phi, lam=lam, residual=change,
                            u0=float(defl.u[grid.nx // 2]), branch=branch.tag,
                            picard_sweeps=sweep)
                    growth = growth + 1 if change > change_old else 0
                    if growth >= 5 and relax == 1.0:
                        raise NoSolutionError(
                            f"Picard diverging at lambda = {lam} ({branch.tag})")
                    change_old = change
                u_old = u_new
                phi = solve_potential(defl, eps, grid, tol, init=phi)
                flux = relax * boundary_flux(phi, grid) + (1.0 - relax) * flux
            raise NoSolutionError(
                f"Picard did not converge in {tol.picard_max_iter} sweeps at "
                f"lambda = {lam} ({branch.tag})")
        except NoSolutionError as err:
            last_error = err
            continue
    raise last_error


def find_static_pullin(eps: float, grid: Grid,
                       tol: Tolerances = Tolerances()) -> float:
    """Static pull-in voltage: largest lambda with a shallow stationary solution.

    Bisection on existence over [0.05, 1.0]; a probe "exists" when
    solve_stationary converges on the Upper branch.  Returns the bracket
    midpoint once the width is at most bisect_tol.
    """
    lo, hi = _BISECT_LO, _BISECT_HI
    if not _exists(lo, eps, grid, tol):
        raise BracketError(f"no stationary solution at lambda = {lo}; bracket invalid")
    if _exists(hi, eps, grid, tol):
        raise BracketError(f"stationary solution still exists at lambda = {hi}; bracket invalid")
    while hi - lo > tol.bisect_tol:
        mid = 0.5 * (lo + hi)
        if _exists(mid, eps, grid, tol):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _exists(lam: float, eps: float, grid: Grid, tol: Tolerances) -> bool:
    try:
        solve_stationary(lam, eps, grid, UPPER, tol)
        return True
    except NoSolutionError:
        return False


def bifurcation_curve(eps: float, grid: Grid, n_points: int = 32,
                      tol: Tolerances = Tolerances()) -> list[tuple[float, float, str]]:
    """Sample (lambda, u(0)) along both stationary branches up to the fold.

    Locates the pull-in value first, then sweeps lambda from pullin/n_points
    towards the fold with geometrically shrinking spacing (the curve turns
    there, so resolution is concentrated near it).  Points where a branch
    solve fails are skipped, leaving gaps rather than aborting the sweep.
    Returns points sorted by branch then lambda.
    """
    if n_points < 8:
        raise ValueError("n_points must be >= 8")
    lam_star = find_static_pullin(eps, grid, tol)
    d_max = lam_star * (1.0 - 1.0 / n_points)
    d_min = 10.0 * tol.bisect_tol
    offsets = d_max * (d_min / d_max) ** (np.arange(n_points) / (n_points - 1.0))
    lams = lam_star - offsets
    points: list[tuple[float, float, str]] = []
    for branch in (UPPER, LOWER):
        for lam in lams:
            try:
                st = solve_stationary(float(lam), eps, grid, branch, tol)
            except NoSolutionError:
                continue
            points.append((float(lam), st.u0, branch.tag))
    points.sort(key=lambda p: (p[2] != "Upper", p[0]))
    return points
