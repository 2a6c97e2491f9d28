"""Zero-aspect-ratio and lumped spring-mass reference models.

When the gap-to-length ratio vanishes the potential is explicit,
psi = (1+z)/(1+u), and the membrane equations decouple from the elliptic
solve, with unit flux forcing -lambda/(1+u)^2.  These reduced models reuse the
exact same shooting and time-stepping machinery as the full solver and serve
as independent oracles for it, alongside a classic mass-spring-capacitor ODE
showing the same pull-in phenomenology.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    Deflection,
    Grid,
    InconclusiveError,
    InvalidConfigError,
    QuenchedStateError,
    Tolerances,
)
from .dynamics import Outcome, _evolve_impl
from .statics import UPPER, Branch, shoot_deflection


def small_aspect_potential(u_val: float, z: float) -> float:
    """Explicit zero-aspect potential (1+z)/(1+u) between plate and membrane."""
    if u_val <= -1.0:
        raise QuenchedStateError("membrane at or below the plate: u <= -1")
    if not (-1.0 <= z <= u_val):
        raise InvalidConfigError(f"z = {z} outside the gap [-1, {u_val}]")
    return (1.0 + z) / (1.0 + u_val)


def _grid_from_dx(dx: float, dt: float = 0.0) -> Grid:
    nx = int(round(2.0 / dx))
    nx += nx % 2
    return Grid(nx=nx, neta=8, dt=dt)


def small_aspect_static(lam: float, dx: float, branch: Branch = UPPER,
                        tol: Tolerances = Tolerances()) -> Deflection:
    """Shooting solution of u'' = lambda/(1+u)^2, u(+-1) = 0.

    Identical machinery to the coupled solver with the flux frozen at 1 and
    zero aspect ratio; raises NoSolutionError past the fold.
    """
    grid = _grid_from_dx(dx)
    flux = np.ones(grid.nx + 1)
    return shoot_deflection(flux, lam, 0.0, grid, branch, tol)


def small_aspect_evolve(lam: float, gamma: float, dx: float, dt: float,
                        tol: Tolerances = Tolerances(),
                        sample_every: int = 100,
                        snapshot_times: list[float] | None = None) -> Outcome:
    """Evolve the zero-aspect membrane equation from rest and classify it.

    Shares the steppers of the coupled dynamics with the flux hard-wired to 1
    (no elliptic solve); gamma = 0 selects the heat scheme.
    """
    grid = _grid_from_dx(dx, dt)
    return _evolve_impl(lam, 0.0, gamma, grid, wave=gamma > 0.0, tol=tol,
                        sample_every=sample_every, snapshot_times=snapshot_times,
                        coupled=False)


def small_aspect_pullin(gamma: float, dx: float, dt: float,
                        tol: Tolerances = Tolerances()) -> float:
    """Dynamic pull-in voltage of the zero-aspect model by bisection."""
    grid = _grid_from_dx(dx, dt)
    lo, hi = 0.05, 1.0
    while hi - lo > tol.bisect_tol:
        mid = 0.5 * (lo + hi)
        out = _evolve_impl(mid, 0.0, gamma, grid, wave=gamma > 0.0, tol=tol,
                           sample_every=2 ** 62, snapshot_times=None,
                           coupled=False)
        if out.kind == "Steady":
            lo = mid
        elif out.kind == "Quenched":
            hi = mid
        else:
            raise InconclusiveError(
                f"evolution undecided at lambda = {mid}; raise t_max",
                lam=mid, t_max=tol.t_max)
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class SpringParams:
    """Mass-spring-capacitor parameters m x'' + b x' + k x = lam/(d0 - x)^2."""

    m: float
    b: float
    k: float
    d0: float
    lam: float

    def __post_init__(self):
        if self.m < 0.0 or self.b <= 0.0 or self.k <= 0.0 or self.d0 <= 0.0 \
                or self.lam < 0.0:
            raise InvalidConfigError("need m >= 0, b > 0, k > 0, d0 > 0, lam >= 0")


def spring_simulate(p: SpringParams, dt: float, t_max: float,
                    tol: Tolerances = Tolerances(),
                    delta: float = 1e-2) -> tuple[np.ndarray, Outcome]:
    """Integrate the spring ODE from rest with a classical 4th-order stepper.

    m = 0 degenerates to the overdamped first-order equation
    b x' = lam/(d0-x)^2 - k x.  Quench when the gap d0 - x shrinks to
    delta*d0; steady when |x'| + |x''| drops below steady_rate_tol.
    Returns (trajectory rows (t, x, v), Outcome with u0 meaning x).
    """
    if dt <= 0.0 or t_max <= 0.0:
        raise InvalidConfigError("need dt > 0 and t_max > 0")

    def accel(x, v):
        return (p.lam / (p.d0 - x) ** 2 - p.k * x - p.b * v) / p.m

    def vel_od(x):
        return (p.lam / (p.d0 - x) ** 2 - p.k * x) / p.b

    n = int(np.ceil(t_max / dt))
    traj = np.empty((n + 1, 3))
    x, v = 0.0, 0.0
    traj[0] = (0.0, 0.0, 0.0)
    kind, t_event = "Undecided", t_max
    i = 0
    for i in range(1, n + 1):
        if p.m == 0.0:
            k1 = vel_od(x)
            k2 = vel_od(x + 0.5 * dt * k1)
            k3 = vel_od(x + 0.5 * dt * k2)
            k4 = vel_od(x + dt * k3)
            x = x + dt * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
            v = vel_od(x) if p.d0 - x > 0 else np.inf
            rate = abs(v)
        else:
            kx1, kv1 = v, accel(x, v)
            kx2, kv2 = v + 0.5 * dt * kv1, accel(x + 0.5 * dt * kx1, v + 0.5 * dt * kv1)
            kx3, kv3 = v + 0.5 * dt * kv2, accel(x + 0.5 * dt * kx2, v + 0.5 * dt * kv2)
            kx4, kv4 = v + dt * kv3, accel(x + dt * kx3, v + dt * kv3)
            x = x + dt * (kx1 + 2 * kx2 + 2 * kx3 + kx4) / 6.0
            v = v + dt * (kv1 + 2 * kv2 + 2 * kv3 + kv4) / 6.0
            rate = abs(v) + (abs(accel(x, v)) if p.d0 - x > 0 else np.inf)
        t = i * dt
        traj[i] = (t, x, v)
        if not np.isfinite(x) or p.d0 - x <= delta * p.d0:
            kind, t_event = "Quenched", t
            break
        if rate <= tol.steady_rate_tol:
            kind, t_event = "Steady", t
            break
    traj = traj[:i + 1].copy()
    out = Outcome(kind=kind, t_event=t_event, final_u0=float(x),
                  trajectory=traj, snapshots=[])
    return traj, out
