"""2D operators and stepper: directional speeds, the elliptic right-hand
side against a term-by-term loop oracle, conservation, and symmetry."""

import numpy as np
import pytest

from lowmach import (
    EquationOfState,
    FluidState2D,
    SchemeParams,
    assemble_dphi_2d,
    directional_speeds_2d,
    discrete_divergence_2d,
    step_ap_2d,
)
from lowmach.presets import example3_eos, example3_grid, example3_state

EOS2 = EquationOfState(1.0, 2.0)


def random_state_2d(rng, m1, m2, q_amp=0.4):
    rho = rng.uniform(0.6, 1.4, (m1, m2))
    q1 = q_amp * rng.standard_normal((m1, m2))
    q2 = q_amp * rng.standard_normal((m1, m2))
    return FluidState2D(rho=rho, q1=q1, q2=q2)


def test_directional_speeds_examples():
    shape = (6, 6)
    at_rest = FluidState2D(rho=np.ones(shape), q1=np.zeros(shape), q2=np.zeros(shape))
    sp = directional_speeds_2d(at_rest, EOS2, 0.0)
    assert np.all(sp.a_x == 0.0) and np.all(sp.a_y == 0.0)

    moving = FluidState2D(rho=np.ones(shape), q1=np.full(shape, 3.0), q2=np.full(shape, -4.0))
    sp = directional_speeds_2d(moving, EOS2, 0.0)
    assert np.allclose(sp.a_x, 4.0) and np.allclose(sp.a_y, 4.0)

    sp = directional_speeds_2d(at_rest, EOS2, 1.0)
    assert np.allclose(sp.a_x, np.sqrt(2)) and np.allclose(sp.a_y, np.sqrt(2))


# ---------------------------------------------------------------------------
# Dphi oracle: pure loops, term by term


def dphi2_oracle(rho, q1, q2, eos, alpha, dt, dx, dy):
    m1, m2 = rho.shape
    u1, u2 = q1 / rho, q2 / rho
    p = eos.pressure(rho)
    s = np.sqrt(alpha * eos.pressure_derivative(rho))
    cell = np.maximum(np.abs(u1), np.abs(u2)) + s

    def ax(i, j):  # A at (i+1/2, j)
        return max(cell[i % m1, j % m2], cell[(i + 1) % m1, j % m2])

    def ay(i, j):
        return max(cell[i % m1, j % m2], cell[i % m1, (j + 1) % m2])

    def dxc(f, i, j):
        return (f((i + 1) % m1, j) - f((i - 1) % m1, j)) / (2 * dx)

    def dyc(f, i, j):
        return (f(i, (j + 1) % m2) - f(i, (j - 1) % m2)) / (2 * dy)

    def val(arr):
        return lambda i, j: arr[i % m1, j % m2]

    def diss_x(arr):
        def inner(i, j):
            dm = (arr[i % m1, j % m2] - arr[(i - 1) % m1, j % m2]) / dx
            dp = (arr[(i + 1) % m1, j % m2] - arr[i % m1, j % m2]) / dx
            return 0.5 * (ax(i - 1, j) * dm - ax(i, j) * dp)
        return inner

    def diss_y(arr):
        def inner(i, j):
            dm = (arr[i % m1, j % m2] - arr[i % m1, (j - 1) % m2]) / dy
            dp = (arr[i % m1, (j + 1) % m2] - arr[i % m1, j % m2]) / dy
            return 0.5 * (ay(i, j - 1) * dm - ay(i, j) * dp)
        return inner

    g1 = rho * u1**2 + alpha * p
    g2 = rho * u2**2 + alpha * p
    w = rho * u1 * u2

    out = np.empty((m1, m2))
    for i in range(m1):
        for j in range(m2):
            first = (
                dxc(val(q1), i, j) + dyc(val(q2), i, j)
                + diss_x(rho)(i, j) + diss_y(rho)(i, j)
            )
            second = (
                dxc(lambda a, b: dxc(val(g1), a, b), i, j)
                + dyc(lambda a, b: dyc(val(g2), a, b), i, j)
                + dxc(lambda a, b: dyc(val(w), a, b), i, j)
                + dyc(lambda a, b: dxc(val(w), a, b), i, j)
                + dxc(diss_x(q1), i, j)
                + dyc(diss_x(q2), i, j)
                + dxc(diss_y(q1), i, j)
                + dyc(diss_y(q2), i, j)
            )
            out[i, j] = rho[i, j] - dt * first + dt**2 * second
    return out


def test_dphi2_constant_state():
    shape = (6, 8)
    st = FluidState2D(rho=np.full(shape, 1.2), q1=np.zeros(shape), q2=np.zeros(shape))
    params = SchemeParams(epsilon=0.5, alpha=1.0)
    out = assemble_dphi_2d(st, EOS2, params, 0.01, 1 / 6, 1 / 8)
    assert np.array_equal(out, np.full(shape, 1.2))


def test_dphi2_dt_zero():
    rng = np.random.default_rng(0)
    st = random_state_2d(rng, 6, 6)
    params = SchemeParams(epsilon=0.5, alpha=1.0)
    out = assemble_dphi_2d(st, EOS2, params, 0.0, 1 / 6, 1 / 6)
    assert np.allclose(out, st.rho, rtol=0, atol=1e-15)


def test_dphi2_matches_oracle_benchmark():
    grid = example3_grid(20, 20)
    st = example3_state(grid, 0.8)
    params = SchemeParams(epsilon=0.8, alpha=0.0)
    out = assemble_dphi_2d(st, example3_eos(), params, 1 / 80, grid.dx, grid.dy)
    oracle = dphi2_oracle(st.rho, st.q1, st.q2, example3_eos(), 0.0, 1 / 80, grid.dx, grid.dy)
    assert np.max(np.abs(out - oracle)) <= 1e-12


def test_dphi2_matches_oracle_random():
    rng = np.random.default_rng(1)
    for _ in range(5):
        m1, m2 = int(rng.choice([6, 8])), int(rng.choice([6, 10]))
        st = random_state_2d(rng, m1, m2)
        alpha = float(rng.uniform(0, 1.5))
        params = SchemeParams(epsilon=0.7, alpha=alpha)
        dt = float(rng.uniform(0.001, 0.01))
        out = assemble_dphi_2d(st, EOS2, params, dt, 1 / m1, 1 / m2)
        oracle = dphi2_oracle(st.rho, st.q1, st.q2, EOS2, alpha, dt, 1 / m1, 1 / m2)
        assert np.max(np.abs(out - oracle)) <= 1e-12


def test_dphi2_literal_vs_symmetric_small_difference():
    grid = example3_grid(16, 16)
    st = example3_state(grid, 0.3)
    params = SchemeParams(epsilon=0.3, alpha=1.0)
    dt = 1 / 80
    lit = assemble_dphi_2d(st, EOS2, params, dt, grid.dx, grid.dy, literal=True)
    sym = assemble_dphi_2d(st, EOS2, params, dt, grid.dx, grid.dy, literal=False)
    gap = np.max(np.abs(lit - sym))
    assert 0 < gap < 0.1  # far below the O(1) density scale
    # halving dt cuts the gap by ~4 (it is an O(dt^2 dx) term)
    lit2 = assemble_dphi_2d(st, EOS2, params, dt / 2, grid.dx, grid.dy, literal=True)
    sym2 = assemble_dphi_2d(st, EOS2, params, dt / 2, grid.dx, grid.dy, literal=False)
    assert np.max(np.abs(lit2 - sym2)) <= 0.3 * gap


# ---------------------------------------------------------------------------
# stepper


@pytest.mark.parametrize("stencil", ["wide", "reduced"])
def test_step_2d_free_stream_exact(stencil):
    shape = (8, 8)
    st = FluidState2D(rho=np.full(shape, 1.3), q1=np.zeros(shape), q2=np.zeros(shape))
    params = SchemeParams(epsilon=0.2, alpha=1.0)
    out, rep = step_ap_2d(st, EOS2, params, stencil, 0.005, 1 / 8, 1 / 8)
    assert np.array_equal(out.rho, st.rho)
    assert np.array_equal(out.q1, st.q1) and np.array_equal(out.q2, st.q2)
    assert rep.consistency_residual == 0.0


@pytest.mark.parametrize("stencil", ["wide", "reduced"])
def test_step_2d_conservation(stencil):
    rng = np.random.default_rng(7)
    for _ in range(10):
        st = random_state_2d(rng, 16, 16)
        eps = float(rng.uniform(0.1, 1.0))
        params = SchemeParams(epsilon=eps, alpha=min(1.0, 0.9 / eps**2))
        dt = 0.2 / (16 * 4.0)
        out, _ = step_ap_2d(st, EOS2, params, stencil, dt, 1 / 16, 1 / 16)
        assert abs(np.sum(out.rho) - np.sum(st.rho)) <= 1e-12 * np.sum(st.rho)
        assert abs(np.sum(out.q1) - np.sum(st.q1)) <= 1e-12 * max(1.0, abs(np.sum(st.q1)))
        assert abs(np.sum(out.q2) - np.sum(st.q2)) <= 1e-12 * max(1.0, abs(np.sum(st.q2)))


@pytest.mark.parametrize("stencil", ["wide", "reduced"])
def test_step_2d_consistency_residual(stencil):
    rng = np.random.default_rng(8)
    for _ in range(5):
        st = random_state_2d(rng, 12, 12, q_amp=0.3)
        eps = float(rng.uniform(0.05, 1.0))
        params = SchemeParams(epsilon=eps, alpha=0.0)
        dt = 0.2 / (12 * 4.0)
        out, rep = step_ap_2d(st, EOS2, params, stencil, dt, 1 / 12, 1 / 12)
        scale = max(1.0, float(np.max(out.rho)))
        assert rep.consistency_residual <= 10 * params.linear_tol * scale


def test_step_2d_flux_form_identity_linear_eos():
    # With a linear pressure law the frozen-mobility wide operator is exact,
    # so the returned pair must satisfy the flux-form density update with
    # the implicit momentum average: the literal elliptic right-hand side IS
    # the exact elimination of the coupled scheme.
    from lowmach.twodim import _diss_x, _diss_y, _dxc, _dyc

    rng = np.random.default_rng(5)
    m = 12
    eos1 = EquationOfState(1.0, 1.0)
    st = random_state_2d(rng, m, m, q_amp=0.3)
    params = SchemeParams(epsilon=0.4, alpha=1.0)
    dt, dx, dy = 0.002, 1 / m, 1 / m
    out, _ = step_ap_2d(st, eos1, params, "wide", dt, dx, dy)
    sp = directional_speeds_2d(st, eos1, params.alpha)
    flux_div = _dxc(out.q1, dx) + _dyc(out.q2, dy)
    diss = _diss_x(st.rho, sp.a_x, dx) + _diss_y(st.rho, sp.a_y, dy)
    resid = out.rho - st.rho + dt * (flux_div + diss)
    assert np.max(np.abs(resid)) <= 1e-12


def test_step_2d_transpose_symmetry():
    rng = np.random.default_rng(9)
    m = 12
    st = random_state_2d(rng, m, m)
    flipped = FluidState2D(rho=st.rho.T.copy(), q1=st.q2.T.copy(), q2=st.q1.T.copy())
    params = SchemeParams(epsilon=0.3, alpha=1.0)
    dt = 0.004
    dphi = assemble_dphi_2d(st, EOS2, params, dt, 1 / m, 1 / m)
    dphi_f = assemble_dphi_2d(flipped, EOS2, params, dt, 1 / m, 1 / m)
    assert np.array_equal(dphi.T, dphi_f)
    for stencil in ("wide", "reduced"):
        a, _ = step_ap_2d(st, EOS2, params, stencil, dt, 1 / m, 1 / m)
        b, _ = step_ap_2d(flipped, EOS2, params, stencil, dt, 1 / m, 1 / m)
        assert np.max(np.abs(a.rho.T - b.rho)) <= 1e-12
        assert np.max(np.abs(a.q1.T - b.q2)) <= 1e-12
        assert np.max(np.abs(a.q2.T - b.q1)) <= 1e-12


def test_step_2d_fluctuation_scaling():
    grid = example3_grid(20, 20)
    params_template = dict(alpha=0.0, sigma=0.9)
    for eps in (0.1, 0.01):
        st = example3_state(grid, eps)
        params = SchemeParams(epsilon=eps, **params_template)
        out, _ = step_ap_2d(st, example3_eos(), params, "reduced", 1 / 80, grid.dx, grid.dy)
        fluct = np.max(np.abs(out.rho - np.mean(out.rho))) / eps**2
        assert fluct <= 10.0


def test_step_2d_benchmark_run_divergence():
    grid = example3_grid(20, 20)
    st = example3_state(grid, 0.05)
    params = SchemeParams(epsilon=0.05, alpha=0.0)
    for _ in range(80):
        st, _ = step_ap_2d(st, example3_eos(), params, "reduced", 1 / 80, grid.dx, grid.dy)
    div = np.max(np.abs(discrete_divergence_2d(st, grid.dx, grid.dy)))
    # pinned regression: C * (dx*dt + eps^2) with C = 50
    assert div <= 50.0 * (grid.dx * (1 / 80) + 0.05**2)
