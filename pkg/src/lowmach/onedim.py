"""1D spatial operators and time steppers on periodic grids.

Three steppers share the local Lax-Friedrichs machinery:

* :func:`step_ap_1d` -- semi-implicit scheme: the density flux carries the
  new-time momentum average and the stiff pressure gradient is implicit,
  which after elimination yields one elliptic solve for the new density
  (variant NL, L or LD) followed by an explicit momentum update;
* :func:`step_explicit_llf_1d` -- fully explicit LLF for the unsplit
  system, with the full pressure p/eps^2 in the momentum flux and wave
  speeds u +- sqrt(p')/eps;
* :func:`step_ice_1d` -- predictor/corrector baseline: pressureless LLF
  predictor, then an implicit pressure correction solved on the
  three-point stencil.

Interface speeds always use old-time values.  All steppers are pure
(state in, state out) and conservative under the periodic wrap.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from math import ceil

import numpy as np

from .core import EquationOfState, FluidState1D, SchemeParams, validate_params
from .diagnostics import total_variation
from .elliptic import (
    EllipticCoefficients,
    apply_elliptic_operator_1d,
    beta_coefficient,
    solve_elliptic_l_1d,
    solve_elliptic_ld_1d,
    solve_elliptic_nl_1d,
)
from .errors import InstabilityError, NoStableDtError, NumericsError, PositivityError


class SchemeVariant(Enum):
    """Which elliptic reduction the semi-implicit step solves."""

    NL = "nl"
    L = "l"
    LD = "ld"


@dataclass(frozen=True)
class StepReport:
    """Per-step diagnostics (totals refer to the post-step state)."""

    max_wave_speed: float
    mass_total: float
    momentum_total: float
    consistency_residual: float
    newton_iters: int
    linear_iters: int
    dt_used: float
    momentum2_total: float = 0.0


def wave_speeds(eos: EquationOfState, rho, u, alpha: float):
    """(u - sqrt(alpha p'), u + sqrt(alpha p')); equal to u when alpha = 0."""
    s = np.sqrt(alpha * eos.pressure_derivative(rho))
    return u - s, u + s


def interface_speed(lambda_cell_j, lambda_cell_j1):
    """Local maximal wave speed at the interface between two cells."""
    return np.maximum(lambda_cell_j, lambda_cell_j1)


def _cell_max_speed(eos, rho, u, alpha):
    return np.abs(u) + np.sqrt(alpha * eos.pressure_derivative(rho))


def _interface_fluxes(rho, q, eos, alpha):
    """Explicit interface fluxes at j+1/2 for all j (index j holds j+1/2).

    f1 = (q_j + q_{j+1})/2 - A/2 (rho_{j+1} - rho_j)
    f2 = (g_j + g_{j+1})/2 - A/2 (q_{j+1} - q_j),  g = rho u^2 + alpha p
    """
    u = q / rho
    cell_max = _cell_max_speed(eos, rho, u, alpha)
    a = interface_speed(cell_max, np.roll(cell_max, -1))
    g = q * u + alpha * eos.pressure(rho)
    f1 = 0.5 * (q + np.roll(q, -1)) - 0.5 * a * (np.roll(rho, -1) - rho)
    f2 = 0.5 * (g + np.roll(g, -1)) - 0.5 * a * (np.roll(q, -1) - q)
    return f1, f2, a, cell_max


def llf_flux_pair(state: FluidState1D, eos: EquationOfState, alpha: float, j: int):
    """Explicit parts (f1, f2) of the numerical flux at interface j+1/2.

    The implicit new-time momentum average of the density flux is excluded;
    it is eliminated through the momentum update when assembling the
    elliptic system.
    """
    f1, f2, _, _ = _interface_fluxes(state.rho, state.q, eos, alpha)
    j = j % state.m
    return float(f1[j]), float(f2[j])


def _dphi_from_fluxes(rho, f1, f2, dt, dx):
    df2 = (f2 - np.roll(f2, 1)) / dx  # Df2_j = (f2_{j+1/2} - f2_{j-1/2})/dx
    return (
        rho
        - (dt / dx) * (f1 - np.roll(f1, 1))
        + (dt**2 / (2.0 * dx)) * (np.roll(df2, -1) - np.roll(df2, 1))
    )


def assemble_dphi_1d(state: FluidState1D, eos: EquationOfState, params: SchemeParams,
                     dt: float, dx: float) -> np.ndarray:
    """Right-hand side of the per-step elliptic equation, from old-time fluxes."""
    f1, f2, _, _ = _interface_fluxes(state.rho, state.q, eos, params.alpha)
    return _dphi_from_fluxes(state.rho, f1, f2, dt, dx)


def _momentum_from_fluxes(q, f2, p_new, coeff_c, dt, dx):
    df2 = (f2 - np.roll(f2, 1)) / dx
    dp = np.roll(p_new, -1) - np.roll(p_new, 1)
    return q - dt * df2 - coeff_c * (dt / (2.0 * dx)) * dp


def momentum_update_1d(state_n: FluidState1D, rho_np1, eos: EquationOfState,
                       params: SchemeParams, dt: float, dx: float) -> np.ndarray:
    """q^{n+1} = q^n - dt Df2(old fluxes) - (1-alpha eps^2)/eps^2 * dt/(2dx) *
    (p(rho^{n+1})_{j+1} - p(rho^{n+1})_{j-1})."""
    rho_np1 = np.asarray(rho_np1, dtype=float)
    _, f2, _, _ = _interface_fluxes(state_n.rho, state_n.q, eos, params.alpha)
    c = (1.0 - params.alpha * params.epsilon**2) / params.epsilon**2
    return _momentum_from_fluxes(state_n.q, f2, eos.pressure(rho_np1), c, dt, dx)


def _check_new_density(rho_new):
    if not np.all(np.isfinite(rho_new)):
        raise InstabilityError("non-finite density after step")
    if np.any(rho_new <= 0.0):
        bad = int(np.argmin(rho_new))
        raise PositivityError(bad, f"density lost positivity at cell {bad}")


def _as_variant(variant) -> SchemeVariant:
    if isinstance(variant, SchemeVariant):
        return variant
    return SchemeVariant(str(variant).lower())


def step_ap_1d(state: FluidState1D, eos: EquationOfState, params: SchemeParams,
               variant, dt: float, dx: float):
    """One semi-implicit step; returns (new_state, StepReport).

    The report's consistency_residual is the max-norm residual of the
    coupled update: the density row evaluated through the variant's
    elliptic operator (in density units) and the momentum row through its
    defining update (in momentum units).
    """
    variant = _as_variant(variant)
    validate_params(params)
    if not dt > 0.0:
        raise ValueError("dt must be positive")

    rho, q = state.rho, state.q
    f1, f2, _, cell_max = _interface_fluxes(rho, q, eos, params.alpha)
    dphi = _dphi_from_fluxes(rho, f1, f2, dt, dx)
    beta = beta_coefficient(params.epsilon, params.alpha, dt)
    coeff = EllipticCoefficients(beta=beta, mobility=eos.pressure_derivative(rho))

    newton_iters = 0
    if variant is SchemeVariant.LD:
        rho_new = solve_elliptic_ld_1d(rho, dphi, coeff, dx, params.linear_tol)
    elif variant is SchemeVariant.L:
        rho_new = solve_elliptic_l_1d(rho, dphi, coeff, dx, params.linear_tol)
    else:
        rho_new, newton_iters = solve_elliptic_nl_1d(
            rho, dphi, coeff, eos, dx,
            newton_tol=params.newton_tol,
            newton_max_iter=params.newton_max_iter,
            linear_tol=params.linear_tol,
        )
    _check_new_density(rho_new)

    c = (1.0 - params.alpha * params.epsilon**2) / params.epsilon**2
    p_new = eos.pressure(rho_new)
    q_new = _momentum_from_fluxes(q, f2, p_new, c, dt, dx)
    if not np.all(np.isfinite(q_new)):
        raise InstabilityError("non-finite momentum after step")

    r_density = apply_elliptic_operator_1d(variant.value, rho_new, rho, coeff, eos, dx) - dphi
    df2 = (f2 - np.roll(f2, 1)) / dx
    r_momentum = q_new - (q - dt * df2 - c * (dt / (2.0 * dx)) * (np.roll(p_new, -1) - np.roll(p_new, 1)))
    residual = max(np.max(np.abs(r_density)), np.max(np.abs(r_momentum)))

    new_state = FluidState1D(rho=rho_new, q=q_new)
    report = StepReport(
        max_wave_speed=float(np.max(cell_max)),
        mass_total=float(np.sum(rho_new) * dx),
        momentum_total=float(np.sum(q_new) * dx),
        consistency_residual=float(residual),
        newton_iters=newton_iters,
        linear_iters=0,
        dt_used=dt,
    )
    return new_state, report


def step_explicit_llf_1d(state: FluidState1D, eos: EquationOfState, params: SchemeParams,
                         dt: float, dx: float):
    """Fully explicit LLF step for the unsplit system; wave speeds and the
    momentum flux carry the full 1/eps^2 pressure."""
    if not dt > 0.0:
        raise ValueError("dt must be positive")
    eps = params.epsilon
    if not eps > 0.0:
        raise ValueError("epsilon must be positive")

    rho, q = state.rho, state.q
    u = q / rho
    cell_max = np.abs(u) + np.sqrt(eos.pressure_derivative(rho)) / eps
    a = interface_speed(cell_max, np.roll(cell_max, -1))
    h = q * u + eos.pressure(rho) / eps**2
    flux1 = 0.5 * (q + np.roll(q, -1)) - 0.5 * a * (np.roll(rho, -1) - rho)
    flux2 = 0.5 * (h + np.roll(h, -1)) - 0.5 * a * (np.roll(q, -1) - q)
    rho_new = rho - (dt / dx) * (flux1 - np.roll(flux1, 1))
    q_new = q - (dt / dx) * (flux2 - np.roll(flux2, 1))

    _check_new_density(rho_new)
    if not np.all(np.isfinite(q_new)):
        raise InstabilityError("non-finite momentum after step")

    new_state = FluidState1D(rho=rho_new, q=q_new)
    report = StepReport(
        max_wave_speed=float(np.max(cell_max)),
        mass_total=float(np.sum(rho_new) * dx),
        momentum_total=float(np.sum(q_new) * dx),
        consistency_residual=0.0,
        newton_iters=0,
        linear_iters=0,
        dt_used=dt,
    )
    return new_state, report


def step_ice_1d(state: FluidState1D, eos: EquationOfState, params: SchemeParams,
                dt: float, dx: float):
    """Predictor/corrector step: pressureless LLF predictor, then the
    implicit pressure correction reduced to a three-point elliptic solve
    with coefficient dt^2/eps^2 and mobility p'(rho^n), followed by the
    centered explicit momentum correction."""
    if not dt > 0.0:
        raise ValueError("dt must be positive")
    eps = params.epsilon

    rho, q = state.rho, state.q
    u = q / rho
    # The predictor system carries no pressure; its wave speeds are u alone.
    cell_max = np.abs(u)
    a = interface_speed(cell_max, np.roll(cell_max, -1))
    g = q * u
    f1 = 0.5 * (q + np.roll(q, -1)) - 0.5 * a * (np.roll(rho, -1) - rho)
    f2 = 0.5 * (g + np.roll(g, -1)) - 0.5 * a * (np.roll(q, -1) - q)
    rho_star = rho - (dt / dx) * (f1 - np.roll(f1, 1))
    q_star = q - (dt / dx) * (f2 - np.roll(f2, 1))
    if not (np.all(np.isfinite(rho_star)) and np.all(np.isfinite(q_star))):
        raise InstabilityError("non-finite predictor state")

    coeff = EllipticCoefficients(beta=dt**2 / eps**2, mobility=eos.pressure_derivative(rho))
    rho_new = solve_elliptic_ld_1d(rho, rho_star, coeff, dx, params.linear_tol)
    _check_new_density(rho_new)

    p_new = eos.pressure(rho_new)
    q_new = q_star - (dt / eps**2) * (np.roll(p_new, -1) - np.roll(p_new, 1)) / (2.0 * dx)
    if not np.all(np.isfinite(q_new)):
        raise InstabilityError("non-finite momentum after step")

    r_density = apply_elliptic_operator_1d("ld", rho_new, rho, coeff, eos, dx) - rho_star
    residual = float(np.max(np.abs(r_density)))

    new_state = FluidState1D(rho=rho_new, q=q_new)
    report = StepReport(
        max_wave_speed=float(np.max(cell_max)),
        mass_total=float(np.sum(rho_new) * dx),
        momentum_total=float(np.sum(q_new) * dx),
        consistency_residual=residual,
        newton_iters=0,
        linear_iters=0,
        dt_used=dt,
    )
    return new_state, report


def ap_stepper(variant):
    """Stepper callable for scans/runs: (state, eos, params, dt, dx) -> (state, report)."""
    variant = _as_variant(variant)

    def stepper(state, eos, params, dt, dx):
        return step_ap_1d(state, eos, params, variant, dt, dx)

    return stepper


def max_stable_dt_scan(initial: FluidState1D, eos: EquationOfState, params: SchemeParams,
                       stepper, T: float, dt_lo: float, dt_hi: float, dx: float,
                       bisection_iters: int = 12) -> float:
    """Largest stable dt in [dt_lo, dt_hi] found by bisection.

    A trial integrates to time T with fixed dt (final step overshooting)
    and counts as unstable on NaN/Inf, solver failure, or either conserved
    component exceeding 10x its initial scale.  (The momentum cap matters
    in the low Mach regime, where the implicit pressure keeps the density
    bounded while an unstable explicit part blows up the momentum.)  On top
    of the blow-up caps, a trial whose end-state total variation exceeds
    3x that of the dt_lo reference run is rejected: near the margin the
    scheme develops grid-scale oscillations long before they amplify to
    blow-up within T, and the usable time step is the non-oscillatory one.
    """
    if not dt_lo < dt_hi:
        raise ValueError("dt_lo must be < dt_hi")
    rho_cap = 10.0 * float(np.max(initial.rho))
    q_cap = 10.0 * max(float(np.max(np.abs(initial.q))), float(np.max(initial.rho)))

    def run_trial(dt):
        state = initial
        try:
            for _ in range(ceil(T / dt)):
                state, _ = stepper(state, eos, params, dt, dx)
                if float(np.max(state.rho)) > rho_cap:
                    return None
                if float(np.max(np.abs(state.q))) > q_cap:
                    return None
        except NumericsError:
            return None
        return total_variation(state.rho), total_variation(state.q)

    reference = run_trial(dt_lo)
    if reference is None:
        raise NoStableDtError(f"dt_lo = {dt_lo} is already unstable")
    tv_rho_cap = 3.0 * reference[0]
    tv_q_cap = 3.0 * reference[1]

    def is_stable(dt):
        tv = run_trial(dt)
        return tv is not None and tv[0] <= tv_rho_cap and tv[1] <= tv_q_cap

    if is_stable(dt_hi):
        return dt_hi
    lo, hi = dt_lo, dt_hi
    for _ in range(bisection_iters):
        mid = 0.5 * (lo + hi)
        if is_stable(mid):
            lo = mid
        else:
            hi = mid
    return lo
