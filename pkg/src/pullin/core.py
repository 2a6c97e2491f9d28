"""Shared domain types, grids, and finite-difference stencils.

All solver modules build on the small value types defined here: physical
parameters, the discretization of the fixed rectangle (-1,1)x(0,1), membrane
deflection profiles with their derived derivatives, the transformed electric
potential, and the tolerance bundle that controls every iterative procedure.
Instances are immutable after construction and safe to share.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np


# ---------------------------------------------------------------------------
# Errors
# ---------------------------------------------------------------------------

class PullinError(Exception):
    """Base class for all solver errors."""


class InvalidGridError(PullinError):
    """Grid or vector too small / inconsistent for the requested stencil."""


class InvalidConfigError(PullinError):
    """A parameter, tolerance, or scheme configuration violates its invariants."""


class QuenchedStateError(PullinError):
    """An operation received a membrane state with min(1+u) <= 0."""


class NoConvergenceError(PullinError):
    """An iteration cap was reached before the stopping criterion was met."""

    def __init__(self, message: str, residual: float = np.nan):
        super().__init__(message)
        self.residual = residual


class NoSolutionError(PullinError):
    """No stationary solution exists for the requested parameters/branch."""


class BracketError(PullinError):
    """A bisection bracket failed to enclose the sought threshold."""


class InconclusiveError(PullinError):
    """A dynamic run hit the time horizon without quenching or settling."""

    def __init__(self, message: str, lam: float = np.nan, t_max: float = np.nan):
        super().__init__(message)
        self.lam = lam
        self.t_max = t_max


# ---------------------------------------------------------------------------
# Value types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Params:
    """Physical parameters of one problem instance.

    epsilon -- aspect ratio (gap height over device half-length scale)
    lam     -- voltage parameter, proportional to the applied voltage squared
    gamma   -- ratio of inertial to damping forces (0 for the heat flow)
    """

    epsilon: float
    lam: float
    gamma: float = 0.0

    def __post_init__(self):
        if not (0.0 <= self.epsilon < 1.0):
            raise InvalidConfigError(f"epsilon must be in [0, 1), got {self.epsilon}")
        if self.lam < 0.0:
            raise InvalidConfigError(f"lambda must be >= 0, got {self.lam}")
        if self.gamma < 0.0:
            raise InvalidConfigError(f"gamma must be >= 0, got {self.gamma}")


@dataclass(frozen=True)
class Grid:
    """Uniform discretization of the rectangle (-1,1)x(0,1) plus a time step.

    Node counts are stored (not spacings) so that nx*dx = 2 and neta*deta = 1
    hold exactly: x_i = -1 + i*dx for i = 0..nx, eta_j = j*deta for j = 0..neta.
    nx must be even so a node sits exactly at x = 0.
    """

    nx: int
    neta: int
    dt: float = 0.0

    def __post_init__(self):
        if self.nx < 8 or self.neta < 8:
            raise InvalidGridError(f"need nx >= 8 and neta >= 8, got {self.nx}, {self.neta}")
        if self.nx % 2 != 0:
            raise InvalidGridError(f"nx must be even (node at x = 0), got {self.nx}")
        if self.dt < 0.0:
            raise InvalidConfigError(f"dt must be >= 0, got {self.dt}")

    @property
    def dx(self) -> float:
        return 2.0 / self.nx

    @property
    def deta(self) -> float:
        return 1.0 / self.neta

    @property
    def x(self) -> np.ndarray:
        return -1.0 + self.dx * np.arange(self.nx + 1)

    @property
    def eta(self) -> np.ndarray:
        return self.deta * np.arange(self.neta + 1)

    @classmethod
    def from_spacing(cls, dx: float, deta: float, dt: float = 0.0) -> "Grid":
        """Build the grid whose node counts best match the given spacings."""
        nx = int(round(2.0 / dx))
        nx += nx % 2
        neta = int(round(1.0 / deta))
        return cls(nx=nx, neta=neta, dt=dt)

    def with_dt(self, dt: float) -> "Grid":
        return replace(self, dt=dt)


@dataclass(frozen=True)
class Tolerances:
    """Stopping criteria for every iterative procedure.

    jacobi_tol      -- diagonally scaled residual max-norm for the potential solve
    picard_tol      -- max-norm change in u between coupling sweeps
    shoot_tol       -- |u(1)| target for the shooting root-find
    bisect_tol      -- final lambda-bracket width for threshold searches
    quench_delta    -- run classified quenched once min(1+u) <= quench_delta
    steady_rate_tol -- max|u_t| threshold for steady-state classification
    t_max           -- time horizon for dynamic runs
    """

    jacobi_tol: float = 1e-8
    jacobi_max_iter: int = 500_000
    picard_tol: float = 1e-8
    picard_max_iter: int = 300
    shoot_tol: float = 1e-10
    bisect_tol: float = 1e-5
    quench_delta: float = 1e-2
    steady_rate_tol: float = 1e-6
    t_max: float = 100.0

    def __post_init__(self):
        for name in ("jacobi_tol", "picard_tol", "shoot_tol", "bisect_tol",
                     "quench_delta", "steady_rate_tol", "t_max"):
            if getattr(self, name) <= 0.0:
                raise InvalidConfigError(f"{name} must be > 0")
        if self.jacobi_max_iter <= 0 or self.picard_max_iter <= 0:
            raise InvalidConfigError("iteration caps must be > 0")


# ---------------------------------------------------------------------------
# Derivative stencils
# ---------------------------------------------------------------------------

def first_derivative(v: np.ndarray, dx: float) -> np.ndarray:
    """Second-order first derivative: centred inside, one-sided at the ends."""
    v = np.asarray(v, dtype=float)
    if v.shape[0] < 3:
        raise InvalidGridError("first_derivative needs at least 3 nodes")
    out = np.empty_like(v)
    out[1:-1] = (v[2:] - v[:-2]) / (2.0 * dx)
    out[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * dx)
    out[-1] = (3.0 * v[-1] - 4.0 * v[-2] + v[-3]) / (2.0 * dx)
    return out


def second_derivative(v: np.ndarray, dx: float) -> np.ndarray:
    """Centred second derivative at interior nodes.

    Endpoint entries are copies of the nearest interior value; they are never
    consumed (boundary u and phi values are pinned by the boundary conditions).
    """
    v = np.asarray(v, dtype=float)
    if v.shape[0] < 3:
        raise InvalidGridError("second_derivative needs at least 3 nodes")
    out = np.empty_like(v)
    out[1:-1] = (v[2:] - 2.0 * v[1:-1] + v[:-2]) / (dx * dx)
    out[0] = out[1]
    out[-1] = out[-2]
    return out


@dataclass(frozen=True)
class Deflection:
    """Membrane profile u(x_i) with derived first and second derivatives."""

    u: np.ndarray
    ux: np.ndarray
    uxx: np.ndarray

    def __post_init__(self):
        if self.u[0] != 0.0 or self.u[-1] != 0.0:
            raise InvalidConfigError("deflection must vanish at x = -1 and x = 1")

    @classmethod
    def from_values(cls, u: np.ndarray, dx: float) -> "Deflection":
        u = np.ascontiguousarray(u, dtype=float)
        d = cls(u=u, ux=first_derivative(u, dx), uxx=second_derivative(u, dx))
        return d

    @classmethod
    def flat(cls, nx: int) -> "Deflection":
        z = np.zeros(nx + 1)
        return cls(u=z, ux=z.copy(), uxx=z.copy())

    @property
    def min_gap(self) -> float:
        """Smallest distance 1 + u between membrane and ground plate."""
        return float(1.0 + np.min(self.u))


@dataclass(frozen=True)
class Potential:
    """Transformed electric potential phi(x_i, eta_j) on the rectangle grid."""

    phi: np.ndarray  # shape (nx+1, neta+1)

    @classmethod
    def initial(cls, grid: Grid) -> "Potential":
        """phi(x, eta) = eta, the exact flat-membrane / zero-aspect solution."""
        return cls(phi=np.tile(grid.eta, (grid.nx + 1, 1)))
