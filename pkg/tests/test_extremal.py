import csv
import io

import numpy as np
import pytest
from hypothesis import given, strategies as st

from valueregion.extremal import (
    DegenerateTarget,
    ExtremalBranch,
    ExtremalState,
    extremal_driving_complex,
    extremal_driving_value,
    extremal_to_target,
    first_integral,
    hamiltonian,
    integrate_extremal,
    integrate_reduced,
    log_derivative_test,
    optimal_u,
    phi0_from_C,
    pontryagin_rhs,
    quadrature_endpoint,
    solve_C,
)
from valueregion.loewner import integrate
from valueregion.ode import SolverConfig
from valueregion.region import Branch, RegionSpec, a_pm, big_R, gamma_arc, omega_pm

LN4 = np.log(4.0)


def states():
    return st.builds(lambda x1, x2, a, r: ExtremalState(x1, x2, r * np.cos(a), r * np.sin(a)),
                     st.floats(-2, 2), st.floats(-1.4, 1.4), st.floats(-np.pi, np.pi),
                     st.floats(0.1, 10))


def test_hamiltonian_examples():
    s = ExtremalState(0.3, 0.0, 1.0, 0.0)
    assert hamiltonian(s, 0) == 0
    assert hamiltonian(s, 2) == 1


@given(states())
def test_optimal_u_maximizes(state):
    u_star = optimal_u(state)
    assert abs(abs(u_star - 1) - 1) < 1e-15
    circle = 1 + np.exp(1j * np.linspace(0, 2 * np.pi, 2000))
    best = max(hamiltonian(state, u) for u in circle)
    h_star = hamiltonian(state, u_star)
    assert h_star >= best - 1e-12 * max(1, abs(best))
    # the Hamiltonian is linear in u, so no interior point does better
    assert h_star >= hamiltonian(state, 1.0) - 1e-12


def test_optimal_u_examples():
    x2 = 0.4
    s = ExtremalState(0, x2, np.cos(-x2), np.sin(-x2))
    assert abs(optimal_u(s) - 2) < 1e-15
    s = ExtremalState(0, x2, np.cos(np.pi - x2), np.sin(np.pi - x2))
    assert abs(optimal_u(s)) < 1e-15
    assert abs(optimal_u(ExtremalState(0, 0, 0, 1)) - (1 + 1j)) < 1e-15
    with pytest.raises(ValueError):
        ExtremalState(0, 0, 0, 0)


def test_rhs_on_fixed_direction():
    x2 = 0.3
    dx1, dx2, dp1, dp2 = pontryagin_rhs(ExtremalState(0, x2, np.cos(x2), np.sin(x2)))
    assert abs(dx1 - 1) < 1e-15 and abs(dx2) < 1e-15 and dp1 == 0 and abs(dp2) < 1e-15


@given(states())
def test_rhs_is_hamiltonian(state):
    """Velocities are dH/dpsi and the adjoint moves by -dH/dx2 at the optimal control."""
    u = optimal_u(state)
    h = 1e-6

    def H(x2=state.x2, p1=state.psi1, p2=state.psi2):
        return hamiltonian(ExtremalState(state.x1, x2, p1, p2), u)

    dx1, dx2, dp1, dp2 = pontryagin_rhs(state)
    scale = np.hypot(state.psi1, state.psi2) / np.cos(state.x2) ** 2
    assert abs((H(p1=state.psi1 + h) - H(p1=state.psi1 - h)) / (2 * h) - dx1) < 1e-6 * max(1, abs(dx1))
    assert abs((H(p2=state.psi2 + h) - H(p2=state.psi2 - h)) / (2 * h) - dx2) < 1e-6 * max(1, abs(dx2))
    assert abs(-(H(x2=state.x2 + h) - H(x2=state.x2 - h)) / (2 * h) - dp2) < 1e-6 * max(1, scale)
    assert dp1 == 0


def test_first_integral_examples():
    assert first_integral(0.37, 0.37) == 1
    assert abs(first_integral(0.0, np.pi / 6) - 1 / 3) < 1e-15
    with pytest.raises(ZeroDivisionError):
        first_integral(0.0, -np.pi / 2)


def test_solve_C_examples():
    spec = RegionSpec(0j, LN4)
    q = solve_C(spec, 0.25)
    assert abs(q.C - np.log(1.5) / np.log(2.5)) < 1e-14
    assert abs(q.B1 - np.log(0.75)) < 1e-15 and abs(q.B2 - np.log(1.25)) < 1e-15
    assert abs(q.C - 0.44251) < 1e-5
    assert abs(q.endpoint_x1 - 1.302674) < 1e-6
    assert abs(q.endpoint_x1 - (LN4 / 2 + np.sqrt(np.log(2.25) * np.log(6.25)) / 2)) < 1e-14
    q = solve_C(RegionSpec(0.2 + 0.4j, 1.3), np.sin(0.4))
    assert abs(q.C - 1) < 1e-15 and abs(q.endpoint_x1 - (0.2 + 1.3)) < 1e-14


def test_solve_C_limits():
    spec = RegionSpec.from_disk(0.5j, LN4)
    am, ap = a_pm(spec)
    q = solve_C(spec, ap - 1e-9)
    assert q.C < 1e-6
    assert abs(q.endpoint_x1 - spec.x1_0 - spec.T / 2) < 1e-3
    for bad in (ap, am, ap + 0.01):
        with pytest.raises(DegenerateTarget):
            solve_C(spec, bad)


@given(st.floats(-1.4, 1.4), st.floats(-1.5, 1.5), st.floats(0.05, 3), st.floats(0.001, 0.999))
def test_quadrature_identities(x2, x1, T, frac):
    spec = RegionSpec(complex(x1, x2), T)
    am, ap = a_pm(spec)
    s = am + frac * (ap - am)
    if not am < s < ap:
        return
    q = solve_C(spec, s)
    assert q.C > 0
    assert q.growth_margin > 0
    R = big_R(s, spec)
    assert abs(q.endpoint_x1 - (spec.x1_0 + T / 2 + np.sqrt(R))) < 1e-12 * max(1, abs(q.endpoint_x1))
    if abs(q.C - 1) > 1e-6:
        assert abs(q.endpoint_x1_from_C - q.endpoint_x1) < 1e-8


def test_phi0_examples():
    assert abs(phi0_from_C(0.3, 1.0) - 0.3) < 1e-15
    assert abs(phi0_from_C(0.0, 1 / 3) - np.pi / 6) < 1e-15


@given(st.floats(-1.4, 1.4), st.floats(0.01, 100))
def test_phi0_round_trip(x2, C):
    assert abs(first_integral(x2, phi0_from_C(x2, C)) - C) < 1e-12 * max(1, C)


def test_psizero_reaches_omega_plus():
    spec = RegionSpec(0j, LN4)
    tr = integrate_extremal(spec, ExtremalBranch.PSI_ZERO_UP)
    w_minus, w_plus = omega_pm(spec)
    assert abs(tr.endpoint - w_plus) < 1e-10
    assert abs(tr.endpoint - complex(np.log(2), np.pi / 6)) < 1e-10
    lam = tr.driving().values
    np.testing.assert_allclose(lam, np.exp(-spec.x1_0 - tr.times / 2), rtol=1e-10)
    down = integrate_extremal(spec, ExtremalBranch.PSI_ZERO_DOWN)
    assert abs(down.endpoint - w_minus) < 1e-10
    np.testing.assert_allclose(down.driving().values, -np.exp(-tr.times / 2), rtol=1e-10)


def test_psizero_endpoints_are_arc_ends(figure_spec):
    arc = gamma_arc(figure_spec, Branch.PLUS, 3).points
    assert abs(integrate_extremal(figure_spec, ExtremalBranch.PSI_ZERO_UP).endpoint - arc[-1]) < 1e-10
    assert abs(integrate_extremal(figure_spec, ExtremalBranch.PSI_ZERO_DOWN).endpoint - arc[0]) < 1e-10


def test_C_one_gives_translation():
    spec = RegionSpec.from_disk(0.5j, LN4)
    tr = integrate_extremal(spec, ExtremalBranch.PSI_PLUS, phi0_from_C(spec.x2_0, 1.0))
    assert abs(tr.endpoint - (spec.zeta0 + spec.T)) < 1e-10
    assert np.max(np.abs(tr.driving().values)) < 1e-15


def test_quarter_target_example():
    spec = RegionSpec(0j, LN4)
    tr, q = extremal_to_target(spec, 0.25)
    assert abs(tr.endpoint - complex(1.3026748014745873, np.arcsin(0.25))) < 1e-8
    assert abs(tr.endpoint.real - q.endpoint_x1) < 1e-8


@pytest.mark.parametrize("branch", list(Branch))
def test_three_way_endpoint_and_first_integral(figure_spec, branch):
    spec = figure_spec
    am, ap = a_pm(spec)
    for s in np.linspace(am, ap, 7)[1:-1]:
        if branch is Branch.MINUS and abs(s - spec.s0) < 0.05 * (ap - am):
            continue
        tr, q = extremal_to_target(spec, s, branch)
        quad = q.endpoint_x1 if branch is Branch.PLUS else q.endpoint_x1_minus
        assert abs(tr.endpoint.real - quad) < 1e-8
        assert abs(quad - quadrature_endpoint(spec, s, branch)) < 1e-12
        assert abs(np.sin(tr.endpoint.imag) - s) < 1e-8
        I = tr.first_integral()
        assert np.max(np.abs(I - q.C)) < 1e-8 * max(1, q.C)


def test_reduced_matches_full():
    spec = RegionSpec.from_disk(0.3 + 0.5j, 1.2)
    q = solve_C(spec, 0.5 * sum(a_pm(spec)) + 0.1)
    phi0 = phi0_from_C(spec.x2_0, q.C)
    full = integrate_extremal(spec, ExtremalBranch.PSI_PLUS, phi0)
    ts, ys = integrate_reduced(spec, phi0)
    assert np.max(np.abs(full.x1 - ys[:, 0])) < 1e-9
    assert np.max(np.abs(full.x2 - ys[:, 1])) < 1e-9
    assert np.max(np.abs(full.phi - ys[:, 2])) < 1e-9


def test_driving_closed_forms_agree():
    rng = np.random.default_rng(2)
    y = np.stack([rng.uniform(-1, 1, 200), rng.uniform(-1.4, 1.4, 200),
                  rng.uniform(0.1, 1, 200), rng.uniform(-1, 1, 200)])
    a = extremal_driving_value(y)
    b = extremal_driving_complex(y)
    assert np.max(np.abs(b.imag)) < 1e-12 * np.max(np.abs(a))
    np.testing.assert_allclose(b.real, a, rtol=1e-12, atol=1e-12)


def test_driving_examples():
    x1 = 0.7
    for x2 in (-1.0, 0.0, 0.6):
        assert abs(extremal_driving_value(ExtremalState(x1, x2, np.cos(x2), np.sin(x2)))) < 1e-16
        assert abs(extremal_driving_value(ExtremalState(x1, x2, 0, 1)) - np.exp(-x1)) < 1e-15
        assert abs(extremal_driving_value(ExtremalState(x1, x2, 0, -1)) + np.exp(-x1)) < 1e-15


def test_log_derivative_relation():
    spec = RegionSpec(0j, LN4)
    for s in (-0.3, 0.2, 0.4):
        tr, _ = extremal_to_target(spec, s)
        _, lhs, rhs = log_derivative_test(tr)
        assert np.max(np.abs(lhs - rhs)) < 1e-5
    tr = integrate_extremal(spec, ExtremalBranch.PSI_ZERO_UP)
    _, lhs, rhs = log_derivative_test(tr)
    assert np.max(np.abs(lhs)) < 1e-8 and np.max(np.abs(rhs)) < 1e-8


def test_log_derivative_rejects_zero_driving():
    spec = RegionSpec(0j, LN4)
    tr = integrate_extremal(spec, ExtremalBranch.PSI_PLUS, 0.0)
    with pytest.raises(ValueError):
        log_derivative_test(tr)


@pytest.mark.parametrize("branch", list(Branch))
def test_replay_through_loewner(branch):
    spec = RegionSpec.from_disk(0.5j, LN4)
    tr, _ = extremal_to_target(spec, 0.6, branch)
    replay = integrate(spec.zeta0, tr.driving().as_driving(), SolverConfig()).endpoint
    assert abs(replay - tr.endpoint) < 1e-7


def test_driving_csv():
    tr = integrate_extremal(RegionSpec(0j, LN4), ExtremalBranch.PSI_ZERO_UP, n_samples=5)
    rows = list(csv.reader(io.StringIO(tr.driving().to_csv())))
    assert rows[0] == ["t", "lambda_star"] and len(rows) == 6
    assert abs(float(rows[1][1]) - 1.0) < 1e-15


def test_branch_sign_bookkeeping():
    spec = RegionSpec.from_disk(0.5j, LN4)
    tr, _ = extremal_to_target(spec, 0.3)
    assert not tr.crosses_half_pi
    assert tr.driving().sign_changes in (0, 1)
