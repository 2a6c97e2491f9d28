"""Time-dependent membrane dynamics coupled to the potential solve.

Two explicit schemes advance the membrane from rest: forward Euler for the
overdamped (heat) equation

    u_t = u_xx - lambda (1 + eps^2 u_x^2) / (1 + u)^2 |phi_eta(x,1)|^2

and a centred three-level scheme for the damped wave equation

    gamma u_tt + u_t = u_xx - lambda (1 + eps^2 u_x^2) / (1 + u)^2 |phi_eta(x,1)|^2.

After every step the potential is re-solved on the new geometry with the
previous solution as warm start, so the flux tracks the motion.  A run either
settles to a steady state (time-rate below tolerance), quenches (membrane
approaches the plate and the forcing blows up), or hits the time horizon.
Bisection on lambda over this classification locates the dynamic pull-in
voltage.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .core import (
    BracketError,
    Deflection,
    Grid,
    InconclusiveError,
    InvalidConfigError,
    NoConvergenceError,
    Params,
    Potential,
    QuenchedStateError,
    Tolerances,
)
from .potential import _jacobi_core, boundary_flux, solve_potential

HEAT = "heat"
WAVE = "wave"

_BISECT_LO = 0.05
_BISECT_HI = 1.0

# _advance status codes
_RUNNING = 0
_QUENCHED = 1
_STEADY = 2
_JACOBI_FAIL = 3
_NONFINITE = 4
_DIVERGED = 5


@dataclass(frozen=True)
class DynState:
    """Snapshot of an evolution: membrane, previous level, potential, flux."""

    t: float
    u_curr: Deflection
    u_prev: Deflection | None
    phi: Potential
    flux: np.ndarray

    @classmethod
    def from_rest(cls, grid: Grid) -> "DynState":
        return cls(t=0.0, u_curr=Deflection.flat(grid.nx), u_prev=None,
                   phi=Potential.initial(grid), flux=np.ones(grid.nx + 1))


@dataclass(frozen=True)
class Outcome:
    """Classification of a dynamic run.

    kind       -- 'Steady', 'Quenched', or 'Undecided'
    t_event    -- time of classification (t_max when undecided)
    final_u0   -- u(0) at classification
    trajectory -- sampled rows (t, u0, min_u)
    snapshots  -- optional full profiles (t, u array) at requested times
    """

    kind: str
    t_event: float
    final_u0: float
    trajectory: np.ndarray
    snapshots: list[tuple[float, np.ndarray]]


@numba.njit(cache=True)
def _advance(u, u_prev, phi, scratch, flux, lam, eps, gamma, wave, coupled,
             dx, deta, dt, step0, nsteps, sample_every,
             jacobi_tol, jacobi_max, quench_delta, steady_rate_tol,
             prev_rate, traj, ti):  # pragma: no cover - jit
    """Advance nsteps explicit steps in place, classifying as it goes.

    Rows (t, u0, min_u) are appended to traj every sample_every global steps
    (global step index = step0 + local step).  Returns
    (status, steps_done, rate, ti): status 0 means all steps were taken
    without an event; otherwise the run stopped at the reported local step.
    """
    nx = u.shape[0] - 1
    e2 = eps * eps
    inv2dx = 1.0 / (2.0 * dx)
    invdx2 = 1.0 / (dx * dx)
    ux = np.empty(nx + 1)
    uxx = np.empty(nx + 1)
    r = np.empty(nx + 1)
    s = np.empty(nx + 1)
    c = np.empty(nx + 1)
    unew = np.empty(nx + 1)
    a_new = gamma / (dt * dt) + 1.0 / (2.0 * dt) if wave else 0.0
    for i in range(1, nx):
        ux[i] = (u[i + 1] - u[i - 1]) * inv2dx
        uxx[i] = (u[i + 1] - 2.0 * u[i] + u[i - 1]) * invdx2
    ux[0] = (-3.0 * u[0] + 4.0 * u[1] - u[2]) * inv2dx
    ux[nx] = (3.0 * u[nx] - 4.0 * u[nx - 1] + u[nx - 2]) * inv2dx
    uxx[0] = uxx[1]
    uxx[nx] = uxx[nx - 1]
    rate = prev_rate
    for k in range(1, nsteps + 1):
        unew[0] = 0.0
        unew[nx] = 0.0
        rate_new = 0.0
        min_gap = 1.0
        max_abs = 0.0
        finite = True
        for i in range(1, nx):
            h = 1.0 + u[i]
            f = uxx[i] - lam * (1.0 + e2 * ux[i] * ux[i]) / (h * h) * flux[i] * flux[i]
            if wave:
                v = (f + (2.0 * gamma / (dt * dt)) * u[i]
                     - (gamma / (dt * dt)) * u_prev[i]
                     + u_prev[i] / (2.0 * dt)) / a_new
            else:
                v = u[i] + dt * f
            unew[i] = v
            if not np.isfinite(v):
                finite = False
            d = abs(v - u[i])
            if d > rate_new:
                rate_new = d
            g = 1.0 + v
            if g < min_gap:
                min_gap = g
            if abs(v) > max_abs:
                max_abs = v if v > 0.0 else -v
        rate_new /= dt
        if not finite:
            return _NONFINITE, k, rate_new, ti
        if wave:
            for i in range(1, nx):
                u_prev[i] = u[i]
        for i in range(1, nx):
            u[i] = unew[i]
        if min_gap <= quench_delta:
            traj[ti, 0] = (step0 + k) * dt
            traj[ti, 1] = u[nx // 2]
            traj[ti, 2] = min_gap - 1.0
            ti += 1
            return _QUENCHED, k, rate_new, ti
        if max_abs > 10.0:
            return _DIVERGED, k, rate_new, ti
        steady = rate_new <= steady_rate_tol
        if wave:
            steady = steady and rate <= steady_rate_tol
        rate = rate_new
        # refresh derivatives of the adopted level (also feeds the next forcing)
        for i in range(1, nx):
            ux[i] = (u[i + 1] - u[i - 1]) * inv2dx
            uxx[i] = (u[i + 1] - 2.0 * u[i] + u[i - 1]) * invdx2
        ux[0] = (-3.0 * u[0] + 4.0 * u[1] - u[2]) * inv2dx
        ux[nx] = (3.0 * u[nx] - 4.0 * u[nx - 1] + u[nx - 2]) * inv2dx
        uxx[0] = uxx[1]
        uxx[nx] = uxx[nx - 1]
        if coupled:
            for i in range(nx + 1):
                h = 1.0 + u[i]
                r[i] = ux[i] / h
                s[i] = 1.0 / (h * h)
                c[i] = e2 * (2.0 * r[i] * r[i] - uxx[i] / h)
            it, _res = _jacobi_core(phi, scratch, r, s, c, eps, dx, deta,
                                    jacobi_tol, jacobi_max)
            if it < 0:
                return _JACOBI_FAIL, k, rate_new, ti
            neta = phi.shape[1] - 1
            for i in range(nx + 1):
                flux[i] = (3.0 * phi[i, neta] - 4.0 * phi[i, neta - 1]
                           + phi[i, neta - 2]) / (2.0 * deta)
        if (step0 + k) % sample_every == 0:
            traj[ti, 0] = (step0 + k) * dt
            traj[ti, 1] = u[nx // 2]
            traj[ti, 2] = min_gap - 1.0
            ti += 1
        if steady:
            return _STEADY, k, rate_new, ti
    return _RUNNING, nsteps, rate, ti


def _forcing(u: np.ndarray, ux: np.ndarray, uxx: np.ndarray, flux: np.ndarray,
             lam: float, eps: float) -> np.ndarray:
    """Right-hand side u_xx - lambda (1 + eps^2 u_x^2)/(1+u)^2 flux^2."""
    return uxx - lam * (1.0 + eps * eps * ux * ux) / (1.0 + u) ** 2 * flux * flux


def _check_heat_stability(grid: Grid):
    if grid.dt <= 0.0:
        raise InvalidConfigError("heat stepping needs dt > 0")
    if grid.dt > grid.dx ** 2 / 2.0 + 1e-15:
        raise InvalidConfigError(
            f"explicit diffusion step unstable: dt = {grid.dt} > dx^2/2 = {grid.dx ** 2 / 2.0}")


def _wave_first_level(u0: Deflection, flux: np.ndarray, lam: float, eps: float,
                      gamma: float, dt: float) -> np.ndarray:
    """Second time level for a start from rest: u1 = u0 + dt^2/(2 gamma) * F(u0)."""
    f = _forcing(u0.u, u0.ux, u0.uxx, flux, lam, eps)
    u1 = u0.u + dt * dt / (2.0 * gamma) * f
    u1[0] = u1[-1] = 0.0
    return u1


def _refresh_potential(u: np.ndarray, eps: float, grid: Grid, tol: Tolerances,
                       phi: Potential) -> tuple[Potential, np.ndarray]:
    defl = Deflection.from_values(u, grid.dx)
    phi = solve_potential(defl, eps, grid, tol, init=phi)
    return phi, boundary_flux(phi, grid)


def _evolve_impl(lam: float, eps: float, gamma: float, grid: Grid, wave: bool,
                 tol: Tolerances, sample_every: int,
                 snapshot_times: list[float] | None,
                 coupled: bool) -> Outcome:
    """Shared driver behind evolve and the zero-aspect reference evolution."""
    dt = grid.dt
    if wave:
        if gamma <= 0.0:
            raise InvalidConfigError("wave stepping needs gamma > 0; use the heat scheme for gamma = 0")
        if dt <= 0.0:
            raise InvalidConfigError("wave stepping needs dt > 0")
    else:
        _check_heat_stability(grid)
    if sample_every < 1:
        raise InvalidConfigError("sample_every must be >= 1")
    nx = grid.nx
    total_steps = int(np.ceil(tol.t_max / dt))
    snap_steps = sorted({int(round(t / dt)) for t in (snapshot_times or [])
                         if 0.0 <= t <= tol.t_max})
    u = np.zeros(nx + 1)
    u_prev = np.zeros(nx + 1)
    phi = Potential.initial(grid)
    phi_arr = phi.phi.copy()
    scratch = np.empty_like(phi_arr)
    flux = np.ones(nx + 1)
    traj = np.empty((total_steps // sample_every + len(snap_steps) + 8, 3))
    traj[0] = (0.0, 0.0, 0.0)
    ti = 1
    snapshots: list[tuple[float, np.ndarray]] = []
    step = 0
    if 0 in snap_steps:
        snapshots.append((0.0, u.copy()))
        snap_steps = [k for k in snap_steps if k > 0]
    prev_rate = np.inf
    if wave:
        # start from rest: a one-sided second-order first step
        u = _wave_first_level(Deflection.flat(nx), flux, lam, eps, gamma, dt)
        prev_rate = float(np.max(np.abs(u - u_prev))) / dt
        if coupled:
            phi, flux = _refresh_potential(u, eps, grid, tol, phi)
            phi_arr = phi.phi.copy()
            flux = np.asarray(flux).copy()
        step = 1
        if snap_steps and snap_steps[0] == 1:
            snapshots.append((dt, u.copy()))
            snap_steps = snap_steps[1:]
    status = _RUNNING
    while step < total_steps:
        stop = snap_steps[0] if snap_steps else total_steps
        status, done, prev_rate, ti = _advance(
            u, u_prev, phi_arr, scratch, flux, lam, eps, gamma, wave, coupled,
            grid.dx, grid.deta, dt, step, stop - step, sample_every,
            tol.jacobi_tol, tol.jacobi_max_iter, tol.quench_delta,
            tol.steady_rate_tol, prev_rate, traj, ti)
        step += done
        if status != _RUNNING:
            break
        if snap_steps and step == snap_steps[0]:
            snapshots.append((step * dt, u.copy()))
            snap_steps = snap_steps[1:]
    t_event = step * dt
    u0 = float(u[nx // 2])
    traj[ti] = (t_event, u0, float(np.min(u)))
    ti += 1
    trajectory = traj[:ti].copy()
    if status == _JACOBI_FAIL:
        raise NoConvergenceError(
            f"potential solve stalled during time stepping at t = {t_event:.6g}")
    if status == _DIVERGED:
        raise InvalidConfigError(
            f"time stepping diverged (max|u| > 10) at t = {t_event:.6g}: "
            f"reduce dt (wave scheme stability)")
    if status in (_QUENCHED, _NONFINITE):
        kind = "Quenched"
    elif status == _STEADY:
        kind = "Steady"
    else:
        kind = "Undecided"
        t_event = tol.t_max
    return Outcome(kind=kind, t_event=t_event, final_u0=u0,
                   trajectory=trajectory, snapshots=snapshots)


def evolve(params: Params, grid: Grid, equation: str = HEAT,
           tol: Tolerances = Tolerances(), sample_every: int = 100,
           snapshot_times: list[float] | None = None) -> Outcome:
    """Run the coupled dynamics from rest and classify the outcome.

    Steps until the membrane either gets within quench_delta of the plate
    (Quenched), the discrete time-rate of u falls below steady_rate_tol --
    for the wave scheme on two consecutive steps -- (Steady), or t reaches
    t_max (Undecided).  The trajectory is sampled every sample_every steps;
    full profiles are stored at the requested snapshot times.
    """
    if equation not in (HEAT, WAVE):
        raise InvalidConfigError(f"unknown equation {equation!r}")
    return _evolve_impl(params.lam, params.epsilon, params.gamma, grid,
                        equation == WAVE, tol, sample_every, snapshot_times,
                        coupled=True)


def _single_step(state: DynState, params: Params, grid: Grid, tol: Tolerances,
                 wave: bool) -> DynState:
    if state.u_curr.min_gap <= tol.quench_delta:
        raise QuenchedStateError("membrane already within quench_delta of the plate")
    dt = grid.dt
    nx = grid.nx
    if wave and state.u_prev is None:
        u_new = _wave_first_level(state.u_curr, state.flux, params.lam,
                                  params.epsilon, params.gamma, dt)
    else:
        u = state.u_curr.u.copy()
        u_prev = state.u_prev.u.copy() if state.u_prev is not None else np.zeros(nx + 1)
        phi_arr = state.phi.phi.copy()
        scratch = np.empty_like(phi_arr)
        flux = state.flux.copy()
        traj = np.empty((4, 3))
        status, _done, _rate, _ti = _advance(
            u, u_prev, phi_arr, scratch, flux, params.lam, params.epsilon,
            params.gamma, wave, False, grid.dx, grid.deta, dt, 0, 1,
            2 ** 62, tol.jacobi_tol, tol.jacobi_max_iter, tol.quench_delta,
            tol.steady_rate_tol, np.inf, traj, 0)
        if status == _DIVERGED:
            raise InvalidConfigError("time stepping diverged: reduce dt")
        u_new = u
    phi, flux = _refresh_potential(u_new, params.epsilon, grid, tol, state.phi)
    return DynState(t=state.t + dt, u_curr=Deflection.from_values(u_new, grid.dx),
                    u_prev=state.u_curr if wave else None, phi=phi,
                    flux=np.asarray(flux))


def step_heat(state: DynState, params: Params, grid: Grid,
              tol: Tolerances = Tolerances()) -> DynState:
    """One forward-Euler step of the heat dynamics plus a potential refresh."""
    _check_heat_stability(grid)
    return _single_step(state, params, grid, tol, wave=False)


def step_wave(state: DynState, params: Params, grid: Grid,
              tol: Tolerances = Tolerances()) -> DynState:
    """One centred step of the damped wave dynamics plus a potential refresh.

    When state.u_prev is missing the step is the one-sided start from rest.
    """
    if params.gamma <= 0.0:
        raise InvalidConfigError("wave stepping needs gamma > 0; use step_heat for gamma = 0")
    if grid.dt <= 0.0:
        raise InvalidConfigError("wave stepping needs dt > 0")
    return _single_step(state, params, grid, tol, wave=True)


def find_dynamic_pullin(eps: float, gamma: float, equation: str, grid: Grid,
                        tol: Tolerances = Tolerances()) -> float:
    """Dynamic pull-in voltage by bisection on the evolve classification.

    Steady probes raise the lower bound, Quenched probes lower the upper
    bound; an Undecided probe aborts with the probe lambda and horizon so the
    caller can raise t_max.  Returns the midpoint of the final bracket.
    """
    lo, hi = _BISECT_LO, _BISECT_HI

    def classify(lam: float) -> str:
        out = _evolve_impl(lam, eps, gamma, grid, equation == WAVE, tol,
                           sample_every=2 ** 62, snapshot_times=None, coupled=True)
        if out.kind == "Undecided":
            raise InconclusiveError(
                f"evolution still undecided at lambda = {lam} after t_max = "
                f"{tol.t_max}; raise t_max", lam=lam, t_max=tol.t_max)
        return out.kind

    if classify(lo) != "Steady":
        raise BracketError(f"run already quenches at lambda = {lo}; bracket invalid")
    if classify(hi) != "Quenched":
        raise BracketError(f"run still settles at lambda = {hi}; bracket invalid")
    while hi - lo > tol.bisect_tol:
        mid = 0.5 * (lo + hi)
        if classify(mid) == "Steady":
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
