"""Per-step elliptic solves on periodic grids.

Each time step of the semi-implicit scheme requires the density at the new
time level from a screened-diffusion equation

    rho - beta * div(mobility * grad rho)  =  rhs,

with beta = (1 - alpha eps^2) dt^2 / eps^2 and mobility the pressure
derivative frozen at the old density (or, for the nonlinear variant, the
pressure itself under the second difference).  Three 1D variants:

* LD -- three-point stencil, one cyclic tridiagonal solve;
* L  -- five-point stride-2 stencil; even and odd sublattices decouple
  into two independent cyclic tridiagonal solves (cell count must be even);
* NL -- nonlinear stride-2 system in p(rho), solved by Newton iteration
  with the exact power-law Jacobian (stride-2 operator with p' at the
  stencil points of the current iterate).

The 2D solves use a conjugate-gradient iteration on the symmetric
positive-definite operator; the wide (stride-2) stencil decouples into four
independent sublattice problems.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import EquationOfState
from .errors import (
    NewtonDivergenceError,
    PositivityError,
    SolverFailureError,
    UnsupportedGridError,
)
from .tridiag import PeriodicTridiagonalSystem, solve_periodic_tridiagonal

# CG is run tighter than the nominal contract so that the telescoping
# conservation identities survive the linear solve at the 1e-12 level.
_CG_RTOL_CAP = 1e-13


@dataclass(frozen=True)
class EllipticCoefficients:
    """beta >= 0 and the per-cell mobility p'(rho^n) > 0."""

    beta: float
    mobility: np.ndarray

    def __post_init__(self):
        mob = np.asarray(self.mobility, dtype=float)
        if not (np.isfinite(self.beta) and self.beta >= 0.0):
            raise ValueError(f"beta must be >= 0, got {self.beta}")
        if np.any(mob <= 0.0) or not np.all(np.isfinite(mob)):
            raise ValueError("mobility must be strictly positive and finite")
        object.__setattr__(self, "mobility", mob)


def beta_coefficient(epsilon: float, alpha: float, dt: float) -> float:
    """(1 - alpha eps^2) dt^2 / eps^2; zero at the fully explicit limit
    alpha = 1/eps^2."""
    return max((1.0 - alpha * epsilon**2), 0.0) * dt**2 / epsilon**2


def solve_elliptic_ld_1d(rho_n, dphi, coeff: EllipticCoefficients, dx: float,
                         linear_tol: float = 1e-11) -> np.ndarray:
    """Three-point variant:

    rho_j - (beta/dx^2) [ p'_{j+1} (rho_{j+1}-rho_j) - p'_j (rho_j-rho_{j-1}) ] = dphi_j
    """
    dphi = np.asarray(dphi, dtype=float)
    if coeff.beta == 0.0:
        return dphi.copy()
    mob = coeff.mobility
    b = coeff.beta / dx**2
    mob_e = np.roll(mob, -1)  # p'(rho^n_{j+1}) on the east interface
    sub = -b * mob
    sup = -b * mob_e
    diag = 1.0 + b * (mob_e + mob)
    # Constants lie in the diffusion operator's kernel: solving for the
    # deviation from dphi[0] keeps exactly-constant inputs exact fixed
    # points (free-stream preservation to the bit).
    shift = dphi[0]
    sys = PeriodicTridiagonalSystem(sub=sub, diag=diag, sup=sup, rhs=dphi - shift)
    return solve_periodic_tridiagonal(sys, linear_tol=linear_tol) + shift


def _sublattice_solve(mob_e, mob_w, rhs, b4, linear_tol):
    """One stride-2 sublattice: rows j couple j-2, j, j+2 with mobilities at
    the midpoints j+-1.  Inputs are already restricted to the sublattice."""
    sub = -b4 * mob_w
    sup = -b4 * mob_e
    diag = 1.0 + b4 * (mob_e + mob_w)
    sys = PeriodicTridiagonalSystem(sub=sub, diag=diag, sup=sup, rhs=rhs)
    return solve_periodic_tridiagonal(sys, linear_tol=linear_tol)


def solve_elliptic_l_1d(rho_n, dphi, coeff: EllipticCoefficients, dx: float,
                        linear_tol: float = 1e-11) -> np.ndarray:
    """Five-point stride-2 variant:

    rho_j - (beta/(4 dx^2)) [ p'_{j+1} (rho_{j+2}-rho_j) - p'_{j-1} (rho_j-rho_{j-2}) ] = dphi_j

    Couples only same-parity cells; requires an even cell count.
    """
    dphi = np.asarray(dphi, dtype=float)
    m = dphi.shape[0]
    if m % 2 != 0:
        raise UnsupportedGridError("stride-2 elliptic variant requires an even cell count")
    if coeff.beta == 0.0:
        return dphi.copy()
    mob = coeff.mobility
    b4 = coeff.beta / (4.0 * dx**2)
    shift = dphi[0]
    rhs = dphi - shift
    out = np.empty(m)
    for parity in (0, 1):
        cells = np.arange(parity, m, 2)
        mob_e = mob[(cells + 1) % m]
        mob_w = mob[(cells - 1) % m]
        out[cells] = _sublattice_solve(mob_e, mob_w, rhs[cells], b4, linear_tol)
    return out + shift


def _stride2_pressure_term(p_vals, dx):
    """(p_{j+2} - 2 p_j + p_{j-2}) / (4 dx^2), periodic."""
    return (np.roll(p_vals, -2) - 2.0 * p_vals + np.roll(p_vals, 2)) / (4.0 * dx**2)


def solve_elliptic_nl_1d(rho_n, dphi, coeff: EllipticCoefficients, eos: EquationOfState,
                         dx: float, newton_tol: float = 1e-12, newton_max_iter: int = 50,
                         linear_tol: float = 1e-11):
    """Nonlinear stride-2 variant: find rho with

    G(rho) = rho - beta * (p(rho)_{j+2} - 2 p(rho)_j + p(rho)_{j-2})/(4 dx^2) - dphi = 0

    by Newton iteration started from rho_n.  Returns (rho, iterations).
    """
    rho_n = np.asarray(rho_n, dtype=float)
    dphi = np.asarray(dphi, dtype=float)
    m = dphi.shape[0]
    if m % 2 != 0:
        raise UnsupportedGridError("stride-2 elliptic variant requires an even cell count")
    if coeff.beta == 0.0:
        return dphi.copy(), 1

    def residual(r):
        return r - coeff.beta * _stride2_pressure_term(eos.pressure(r), dx) - dphi

    rho = rho_n.copy()
    scale = max(1.0, float(np.max(np.abs(dphi))))
    for it in range(1, newton_max_iter + 1):
        if np.any(rho <= 0.0):
            bad = int(np.argmin(rho))
            raise PositivityError(bad, f"Newton iterate non-positive at cell {bad}")
        g = residual(rho)
        # Exact Jacobian of the power law: stride-2 operator with p' at the
        # stencil points of the current iterate; still even/odd decoupled.
        delta = _solve_newton_jacobian(eos.pressure_derivative(rho), -g,
                                       coeff.beta / (4.0 * dx**2), linear_tol)
        rho = rho + delta
        converged = np.max(np.abs(delta)) <= newton_tol
        if not converged:
            if np.any(rho <= 0.0):
                bad = int(np.argmin(rho))
                raise PositivityError(bad, f"Newton iterate non-positive at cell {bad}")
            converged = np.max(np.abs(residual(rho))) <= newton_tol * scale
        if converged:
            if np.any(rho <= 0.0):
                bad = int(np.argmin(rho))
                raise PositivityError(bad, f"Newton solution non-positive at cell {bad}")
            return rho, it
    raise NewtonDivergenceError(
        f"Newton did not converge in {newton_max_iter} iterations "
        f"(last increment {np.max(np.abs(delta)):.3e})"
    )


def _solve_newton_jacobian(dp, rhs, b4, linear_tol):
    """Solve (I - b4 * S2 diag(dp)) delta = rhs per parity sublattice, where
    row j couples dp_{j-2} delta_{j-2} - 2 dp_j delta_j + dp_{j+2} delta_{j+2}."""
    m = rhs.shape[0]
    out = np.empty(m)
    for parity in (0, 1):
        cells = np.arange(parity, m, 2)
        sub = -b4 * dp[(cells - 2) % m]
        sup = -b4 * dp[(cells + 2) % m]
        diag = 1.0 + 2.0 * b4 * dp[cells]
        sys = PeriodicTridiagonalSystem(sub=sub, diag=diag, sup=sup, rhs=rhs[cells])
        out[cells] = solve_periodic_tridiagonal(sys, linear_tol=linear_tol)
    return out


def apply_elliptic_operator_1d(variant: str, rho, rho_n, coeff: EllipticCoefficients,
                               eos: EquationOfState, dx: float) -> np.ndarray:
    """Left-hand side of the variant's elliptic equation, for residual checks."""
    rho = np.asarray(rho, dtype=float)
    if variant == "nl":
        return rho - coeff.beta * _stride2_pressure_term(eos.pressure(rho), dx)
    mob = coeff.mobility
    if variant == "l":
        b4 = coeff.beta / (4.0 * dx**2)
        term = np.roll(mob, -1) * (np.roll(rho, -2) - rho) - np.roll(mob, 1) * (rho - np.roll(rho, 2))
        return rho - b4 * term
    if variant == "ld":
        b = coeff.beta / dx**2
        term = np.roll(mob, -1) * (np.roll(rho, -1) - rho) - mob * (rho - np.roll(rho, 1))
        return rho - b * term
    raise ValueError(f"unknown variant {variant!r}")


# ---------------------------------------------------------------------------
# 2D solves

def _cg(matvec, b, rtol, maxiter):
    """Plain conjugate gradients for an SPD operator; returns (x, iters)."""
    b = b.ravel()
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros_like(b), 0
    x = b.copy()
    r = b - matvec(x)
    p = r.copy()
    rr = float(r @ r)
    tol2 = (rtol * bnorm) ** 2
    it = 0
    while rr > tol2:
        if it >= maxiter:
            raise SolverFailureError(
                f"CG failed to converge in {maxiter} iterations "
                f"(residual {np.sqrt(rr) / bnorm:.3e})"
            )
        ap = matvec(p)
        pap = float(p @ ap)
        if pap <= 0.0 or not np.isfinite(pap):
            raise SolverFailureError("CG breakdown: operator not positive definite")
        alpha = rr / pap
        x += alpha * p
        r -= alpha * ap
        rr_new = float(r @ r)
        p = r + (rr_new / rr) * p
        rr = rr_new
        it += 1
    return x, it


def _reduced_matvec(shape, b_x, b_y, mob):
    """Operator of the reduced (5-point) 2D stencil acting on flattened fields.

    x-part: b_x [ p'_{i+1,j}(rho_{i+1,j}-rho_ij) - p'_ij(rho_ij-rho_{i-1,j}) ],
    analogous y-part; interface mobilities sit at the higher-index cell.
    """
    mob_e = np.roll(mob, -1, axis=0)
    mob_n = np.roll(mob, -1, axis=1)

    def matvec(v):
        r = v.reshape(shape)
        term_x = mob_e * (np.roll(r, -1, axis=0) - r) - mob * (r - np.roll(r, 1, axis=0))
        term_y = mob_n * (np.roll(r, -1, axis=1) - r) - mob * (r - np.roll(r, 1, axis=1))
        return (r - b_x * term_x - b_y * term_y).ravel()

    return matvec


def _wide_sublattice_matvec(shape, b_x4, b_y4, mob_e, mob_w, mob_n, mob_s):
    """Operator of one stride-2 sublattice of the wide stencil; restricted
    fields couple to nearest sublattice neighbours with midpoint mobilities."""

    def matvec(v):
        r = v.reshape(shape)
        term_x = mob_e * (np.roll(r, -1, axis=0) - r) - mob_w * (r - np.roll(r, 1, axis=0))
        term_y = mob_n * (np.roll(r, -1, axis=1) - r) - mob_s * (r - np.roll(r, 1, axis=1))
        return (r - b_x4 * term_x - b_y4 * term_y).ravel()

    return matvec


def solve_elliptic_2d(rho_n, dphi, coeff: EllipticCoefficients, dx: float, dy: float,
                      stencil: str = "reduced", linear_tol: float = 1e-11,
                      maxiter: int | None = None):
    """Solve the 2D screened-diffusion system on a periodic grid.

    ``stencil`` is "wide" (stride-2 in each direction, requires even cell
    counts, decouples into 4 sublattice problems) or "reduced" (5-point).
    Returns (rho, cg_iterations).
    """
    dphi = np.asarray(dphi, dtype=float)
    m1, m2 = dphi.shape
    if maxiter is None:
        maxiter = 10 * m1 * m2
    if coeff.beta == 0.0:
        return dphi.copy(), 0
    rtol = min(linear_tol, _CG_RTOL_CAP)
    mob = coeff.mobility
    # Deviation-from-constant solve: exact free-stream preservation.
    shift = dphi.flat[0]
    rhs = dphi - shift

    if stencil == "reduced":
        b_x = coeff.beta / dx**2
        b_y = coeff.beta / dy**2
        matvec = _reduced_matvec((m1, m2), b_x, b_y, mob)
        x, iters = _cg(matvec, rhs.ravel(), rtol, maxiter)
        return x.reshape(m1, m2) + shift, iters

    if stencil == "wide":
        if m1 % 2 != 0 or m2 % 2 != 0:
            raise UnsupportedGridError("wide 2D stencil requires even cell counts")
        b_x4 = coeff.beta / (4.0 * dx**2)
        b_y4 = coeff.beta / (4.0 * dy**2)
        out = np.empty_like(dphi)
        total_iters = 0
        for px in (0, 1):
            for py in (0, 1):
                ii = np.arange(px, m1, 2)
                jj = np.arange(py, m2, 2)
                sub_shape = (ii.size, jj.size)
                mob_e = mob[(ii + 1) % m1][:, jj]
                mob_w = mob[(ii - 1) % m1][:, jj]
                mob_n = mob[np.ix_(ii, (jj + 1) % m2)]
                mob_s = mob[np.ix_(ii, (jj - 1) % m2)]
                matvec = _wide_sublattice_matvec(sub_shape, b_x4, b_y4,
                                                 mob_e, mob_w, mob_n, mob_s)
                x, iters = _cg(matvec, rhs[np.ix_(ii, jj)].ravel(), rtol, maxiter)
                out[np.ix_(ii, jj)] = x.reshape(sub_shape)
                total_iters += iters
        return out + shift, total_iters

    raise ValueError(f"unknown 2D stencil {stencil!r}")


def apply_elliptic_operator_2d(stencil: str, rho, coeff: EllipticCoefficients,
                               dx: float, dy: float) -> np.ndarray:
    """Left-hand side of the 2D elliptic equation, for residual checks."""
    rho = np.asarray(rho, dtype=float)
    mob = coeff.mobility
    if stencil == "reduced":
        matvec = _reduced_matvec(rho.shape, coeff.beta / dx**2, coeff.beta / dy**2, mob)
        return matvec(rho.ravel()).reshape(rho.shape)
    if stencil == "wide":
        b_x4 = coeff.beta / (4.0 * dx**2)
        b_y4 = coeff.beta / (4.0 * dy**2)
        mob_e = np.roll(mob, -1, axis=0)
        mob_w = np.roll(mob, 1, axis=0)
        mob_n = np.roll(mob, -1, axis=1)
        mob_s = np.roll(mob, 1, axis=1)
        term_x = mob_e * (np.roll(rho, -2, axis=0) - rho) - mob_w * (rho - np.roll(rho, 2, axis=0))
        term_y = mob_n * (np.roll(rho, -2, axis=1) - rho) - mob_s * (rho - np.roll(rho, 2, axis=1))
        return rho - b_x4 * term_x - b_y4 * term_y
    raise ValueError(f"unknown 2D stencil {stencil!r}")
