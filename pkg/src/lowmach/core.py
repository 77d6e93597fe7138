"""Core domain types: equation of state, grids, fluid states, scheme parameters.

All types are immutable after construction and safe to share between
threads.  States validate positivity/finiteness on construction; scheme
parameters are validated explicitly through :func:`validate_params` so that
invalid parameter sets can still be constructed and inspected.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidStateError, ParamError


@dataclass(frozen=True)
class EquationOfState:
    """Power-law pressure p(rho) = lambda_coeff * rho**gamma.

    ``gamma = 1`` (linear pressure) is permitted.
    """

    lambda_coeff: float = 1.0
    gamma: float = 2.0

    def __post_init__(self):
        if not (self.lambda_coeff > 0.0 and np.isfinite(self.lambda_coeff)):
            raise InvalidStateError("lambda_coeff must be positive and finite")
        if not (self.gamma >= 1.0 and np.isfinite(self.gamma)):
            raise InvalidStateError("gamma must be >= 1")

    def pressure(self, rho):
        """Pressure at density rho (scalar or array); rho must be > 0."""
        rho = np.asarray(rho, dtype=float)
        if np.any(rho <= 0.0) or not np.all(np.isfinite(rho)):
            raise InvalidStateError("pressure requires strictly positive density")
        return self.lambda_coeff * rho**self.gamma

    def pressure_derivative(self, rho):
        """dp/drho = lambda_coeff * gamma * rho**(gamma-1); rho must be > 0."""
        rho = np.asarray(rho, dtype=float)
        if np.any(rho <= 0.0) or not np.all(np.isfinite(rho)):
            raise InvalidStateError("pressure_derivative requires strictly positive density")
        return self.lambda_coeff * self.gamma * rho ** (self.gamma - 1.0)


def pressure(eos: EquationOfState, rho):
    return eos.pressure(rho)


def pressure_derivative(eos: EquationOfState, rho):
    return eos.pressure_derivative(rho)


@dataclass(frozen=True)
class Grid1D:
    """Uniform periodic 1D grid on [a, b] with m cells.

    Cell centers sit at x_j = a + (j + 1/2) dx; index arithmetic wraps
    modulo m.
    """

    a: float
    b: float
    m: int

    def __post_init__(self):
        if not (np.isfinite(self.a) and np.isfinite(self.b) and self.b > self.a):
            raise InvalidStateError("grid requires finite endpoints with b > a")
        if self.m < 1:
            raise InvalidStateError("grid requires at least one cell")

    @property
    def dx(self) -> float:
        return (self.b - self.a) / self.m

    def cell_centers(self) -> np.ndarray:
        return self.a + (np.arange(self.m) + 0.5) * self.dx

    def wrap(self, j: int) -> int:
        return j % self.m


@dataclass(frozen=True)
class Grid2D:
    """Uniform periodic grid on the unit square with m1 x m2 cells."""

    m1: int
    m2: int

    def __post_init__(self):
        if self.m1 < 4 or self.m2 < 4:
            raise InvalidStateError("2D grid requires m1, m2 >= 4")

    @property
    def dx(self) -> float:
        return 1.0 / self.m1

    @property
    def dy(self) -> float:
        return 1.0 / self.m2

    def cell_centers(self):
        x = (np.arange(self.m1) + 0.5) * self.dx
        y = (np.arange(self.m2) + 0.5) * self.dy
        return x, y


def _frozen_array(values, name):
    arr = np.array(values, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise InvalidStateError(f"{name} must be finite")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class FluidState1D:
    """Cell-centered density and momentum on a periodic 1D grid."""

    rho: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        rho = _frozen_array(self.rho, "rho")
        q = _frozen_array(self.q, "q")
        if rho.ndim != 1 or rho.shape != q.shape:
            raise InvalidStateError("rho and q must be 1D arrays of equal length")
        if np.any(rho <= 0.0):
            bad = int(np.argmin(rho))
            raise InvalidStateError(f"non-positive density at cell {bad}")
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "q", q)

    @property
    def m(self) -> int:
        return self.rho.shape[0]

    def velocity(self) -> np.ndarray:
        return self.q / self.rho


@dataclass(frozen=True)
class FluidState2D:
    """Cell-centered density and momentum components on a periodic 2D grid.

    Arrays are indexed [i, j] with i along x and j along y.
    """

    rho: np.ndarray
    q1: np.ndarray
    q2: np.ndarray

    def __post_init__(self):
        rho = _frozen_array(self.rho, "rho")
        q1 = _frozen_array(self.q1, "q1")
        q2 = _frozen_array(self.q2, "q2")
        if rho.ndim != 2 or rho.shape != q1.shape or rho.shape != q2.shape:
            raise InvalidStateError("rho, q1, q2 must be 2D arrays of equal shape")
        if np.any(rho <= 0.0):
            flat = int(np.argmin(rho))
            bad = np.unravel_index(flat, rho.shape)
            raise InvalidStateError(f"non-positive density at cell {bad}")
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "q1", q1)
        object.__setattr__(self, "q2", q2)

    @property
    def shape(self):
        return self.rho.shape

    def velocity(self):
        return self.q1 / self.rho, self.q2 / self.rho


@dataclass(frozen=True)
class DtPolicy:
    """Time step policy: fixed dt, or adaptive from the explicit-part CFL
    condition dt = sigma * dx / max(|u| + sqrt(alpha p'))."""

    kind: str
    dt: float | None = None

    @classmethod
    def fixed(cls, dt: float) -> "DtPolicy":
        return cls(kind="fixed", dt=float(dt))

    @classmethod
    def adaptive(cls) -> "DtPolicy":
        return cls(kind="adaptive")


@dataclass(frozen=True)
class SchemeParams:
    """Knobs of the semi-implicit scheme.

    epsilon is the scaled Mach number; alpha the pressure-splitting
    parameter (alpha <= 1/epsilon^2, the equality giving a fully explicit
    pressure); sigma the Courant number for the explicit part.
    """

    epsilon: float
    alpha: float = 1.0
    sigma: float = 0.5
    dt_policy: DtPolicy = field(default_factory=DtPolicy.adaptive)
    newton_tol: float = 1e-12
    newton_max_iter: int = 50
    linear_tol: float = 1e-11


def validate_params(p: SchemeParams) -> None:
    """Raise :class:`ParamError` (with a stable ``code``) on the first
    violated invariant; return None when all hold."""
    if not (np.isfinite(p.epsilon) and p.epsilon > 0.0):
        raise ParamError("epsilon-not-positive", f"epsilon must be in (0, inf), got {p.epsilon}")
    if not (np.isfinite(p.alpha) and p.alpha >= 0.0):
        raise ParamError("alpha-negative", f"alpha must be >= 0, got {p.alpha}")
    if p.alpha > 1.0 / p.epsilon**2:
        raise ParamError(
            "alpha-exceeds-bound",
            f"alpha={p.alpha} exceeds 1/epsilon^2={1.0 / p.epsilon**2}",
        )
    if not (0.0 < p.sigma < 1.0):
        raise ParamError("sigma-out-of-range", f"sigma must be in (0,1), got {p.sigma}")
    if p.dt_policy.kind not in ("fixed", "adaptive"):
        raise ParamError("dt-policy-unknown", f"unknown dt policy {p.dt_policy.kind!r}")
    if p.dt_policy.kind == "fixed" and not (p.dt_policy.dt is not None and p.dt_policy.dt > 0.0):
        raise ParamError("dt-not-positive", "fixed dt policy requires dt > 0")
    if not (p.newton_tol > 0.0):
        raise ParamError("newton-tol-not-positive", "newton_tol must be > 0")
    if p.newton_max_iter < 1:
        raise ParamError("newton-max-iter-not-positive", "newton_max_iter must be >= 1")
    if not (p.linear_tol > 0.0):
        raise ParamError("linear-tol-not-positive", "linear_tol must be > 0")
