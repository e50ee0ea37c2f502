import csv
import io

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from valueregion.conformal import DomainError, cayley
from valueregion.extremal import ExtremalBranch, extremal_to_target, integrate_extremal
from valueregion.loewner import AtomicMeasure, disk_rhs, integrate
from valueregion.ode import IntegrationError, SolverConfig
from valueregion.region import Branch, RegionSpec
from valueregion.slit import (
    CircularArcParams,
    DrivingFunction,
    _integrate_ab_system,
    ab_closed_form,
    build_chordal_frame,
    chordal_rhs,
    circular_lambda,
    default_a0,
    fit_circle,
    fit_circular_family,
    halfplane_rhs,
    integrate_ab,
    integrate_chordal,
    integrate_single_atom_disk,
    moebius_frame,
    moebius_frame_inv,
    pullback,
    single_atom_disk_rhs,
    slit_geometry,
    theta_to_lambda,
)

LN4 = np.log(4.0)
disk_pts = st.builds(lambda r, a: r * np.exp(1j * a), st.floats(0, 0.95), st.floats(-np.pi, np.pi))
thetas = st.floats(0.05, np.pi - 0.05).flatmap(lambda x: st.sampled_from([x, -x]))


def random_driving(rng, T=None):
    """Smooth one-signed driving ``s (c0 + c1 sin(f t + p))`` with ``c0 > |c1|``."""
    T = float(rng.uniform(0.3, 1.5)) if T is None else T
    c0 = rng.uniform(0.4, 2.0)
    c1 = rng.uniform(-0.9, 0.9) * c0
    f, p = rng.uniform(0.5, 4.0), rng.uniform(0, 2 * np.pi)
    s = rng.choice([-1.0, 1.0])
    return DrivingFunction(lambda t: s * (c0 + c1 * np.sin(f * np.asarray(t) + p)), T)


# elementary fields

def test_theta_to_lambda_values():
    assert abs(theta_to_lambda(np.pi / 2) + 1) < 1e-15
    assert abs(theta_to_lambda(-np.pi / 2) - 1) < 1e-15
    with pytest.raises(DomainError):
        theta_to_lambda(0.0)


@given(thetas)
def test_theta_to_lambda_matches_cayley(th):
    k = np.exp(1j * th)
    assert abs(theta_to_lambda(th) - 1j * (1 + k) / (1 - k)) < 1e-12 * (1 + abs(theta_to_lambda(th)))


@given(disk_pts)
def test_single_atom_pi_limit(w):
    assert abs(single_atom_disk_rhs(w, np.pi) - (1 - w * w) / 2) < 1e-14


@given(thetas)
def test_single_atom_at_origin(th):
    assert abs(single_atom_disk_rhs(0, th) - 0.25 * (1 - np.exp(1j * th))) < 1e-15


@given(disk_pts, thetas)
def test_single_atom_matches_loewner(w, th):
    m = AtomicMeasure([np.exp(1j * th)], [1.0])
    ref = disk_rhs(w, m)
    assert abs(single_atom_disk_rhs(w, th) - ref) < 1e-14 * max(1, abs(ref))


def test_single_atom_rejects_theta_zero():
    with pytest.raises(DomainError):
        single_atom_disk_rhs(0.1, 0.0)


def test_halfplane_examples():
    assert halfplane_rhs(2 + 3j, 0.0) == 2 + 3j
    assert abs(halfplane_rhs(1j, 1.0) - (-1 + 1j) / 2) < 1e-15


@given(disk_pts, thetas)
def test_halfplane_conjugacy(w, th):
    lam = theta_to_lambda(th)
    lhs = 2j / (1 - w) ** 2 * single_atom_disk_rhs(w, th)
    rhs = halfplane_rhs(cayley(w), lam)
    assert abs(lhs - rhs) < 1e-12 * max(1, abs(rhs))


def test_chordal_rhs_examples():
    assert abs(chordal_rhs(1j, 0.0) - 2j) < 1e-15
    big = chordal_rhs(1e6 + 1j, 0.0)
    assert abs(big) < 3e-6
    with pytest.raises(ZeroDivisionError):
        chordal_rhs(np.array([0.5 + 0j]), 0.5)


@given(st.floats(-5, 5), st.floats(1e-3, 5), st.floats(-5, 5))
def test_chordal_field_raises_imaginary_part(x, y, xi):
    # Im 2/(xi - w) = 2 y / |xi - w|^2 > 0
    assert chordal_rhs(complex(x, y), xi).imag > 0


# driving functions

def test_driving_validation():
    with pytest.raises(DomainError):
        DrivingFunction(lambda t: np.sin(3 * np.asarray(t)), 2.0)
    with pytest.raises(DomainError):
        DrivingFunction(lambda t: np.cos(3 * np.asarray(t)), 2.0)
    with pytest.raises(DomainError), np.errstate(divide="ignore"):
        DrivingFunction(lambda t: 1 / (np.asarray(t) - 0.5), 1.0)
    d = DrivingFunction.from_theta(lambda t: np.full_like(np.asarray(t, float), np.pi / 2), 1.0)
    assert abs(d.lam(0.3) + 1) < 1e-15
    assert abs(d.kappa(0.3) - 1j) < 1e-15


# chordal frame

@pytest.mark.parametrize("lam0", [0.7, -1.3, 2.0])
def test_frame_constant_driving(lam0):
    T = 1.1
    d = DrivingFunction(lambda t: np.full_like(np.asarray(t, float), lam0), T)
    fr = build_chordal_frame(d)
    t = np.linspace(0, T, 7)
    np.testing.assert_allclose(fr.xi(t), 1 / lam0 + t / lam0, atol=1e-12)
    assert abs(fr.tau_total - T / (2 * lam0 ** 2)) < 1e-12
    assert abs(fr.C_total - T / lam0) < 1e-12
    assert fr.tau_of_t(0.0) == 0.0


@pytest.mark.parametrize("C1", [0.5, -1.0, 3.0])
def test_frame_exponential_driving(C1):
    T = LN4
    fr = build_chordal_frame(CircularArcParams(C1, 0.0).driving(T))
    assert abs(fr.tau_total - np.expm1(T) / (2 * C1 ** 2)) < 1e-10 * max(1, fr.tau_total)
    assert abs(fr.C_total - 2 * np.expm1(T / 2) / C1) < 1e-10


def test_frame_time_change_round_trip():
    d = random_driving(np.random.default_rng(3))
    fr = build_chordal_frame(d)
    t = np.linspace(0, d.T, 31)
    np.testing.assert_allclose(fr.t_of_tau(fr.tau_of_t(t)), t, atol=1e-8)


def test_frame_monotone_on_random_drivings():
    rng = np.random.default_rng(11)
    for _ in range(100):
        fr = build_chordal_frame(random_driving(rng), n=51)
        assert fr.tau[0] == 0.0
        assert np.all(np.diff(fr.tau) > 0)


# transform chain

def test_chordal_keeps_upper_half_plane():
    d = random_driving(np.random.default_rng(5))
    _, w_hat, _ = integrate_chordal(d, 0.2 - 0.3j)
    assert w_hat.imag > cayley(0.2 - 0.3j).imag


def test_full_chain_matches_disk_form():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(20):
        d = random_driving(rng)
        z = rng.uniform(0, 0.9, 20) * np.exp(1j * rng.uniform(-np.pi, np.pi, 20))
        ref = integrate_single_atom_disk(d, z)
        got, _, _ = integrate_chordal(d, z)
        worst = max(worst, float(np.max(np.abs(got - ref))))
    assert worst < 1e-7


def test_chordal_scalar_input():
    d = CircularArcParams(1.0, 0.0).driving(0.5)
    w, w_hat, fr = integrate_chordal(d, 0.1j)
    assert isinstance(w, complex) and isinstance(w_hat, complex)
    assert abs(w - integrate_single_atom_disk(d, 0.1j)) < 1e-9


# circular family

def test_circular_lambda_examples():
    t = np.linspace(0, 2, 9)
    np.testing.assert_allclose(circular_lambda(CircularArcParams(1.7, 0.0), t),
                               1.7 * np.exp(-t / 2), rtol=1e-15)
    p = CircularArcParams(0.8, 0.6)
    assert abs(p.lam(0.0) - 0.8 * 1.6 ** 3) < 1e-14
    assert abs(CircularArcParams(2.0, 0.0).log_derivative(0.0) + 0.5) < 1e-15
    with pytest.raises(DomainError):
        CircularArcParams(0.0, 1.0)
    with pytest.raises(DomainError):
        circular_lambda(CircularArcParams(1.0, 2.0), -1.0)


@given(st.floats(-3, 3), st.floats(0.01, 2))
def test_log_derivative_matches_finite_difference(C2, t):
    p = CircularArcParams(1.0, C2)
    h = 1e-5
    fd = (np.log(abs(p.lam(t + h))) - np.log(abs(p.lam(t - h)))) / (2 * h)
    assert abs(fd - p.log_derivative(t)) < 1e-6 * max(1, abs(fd))


def test_k0_value():
    for C2 in (-2.0, 0.0, 0.4, 1.0, 3.0):
        assert abs(CircularArcParams(1.0, C2).k(0.0) - (1 - C2) / 2) < 1e-15


def test_circular_lambda_matches_psizero():
    for z0 in (0.5j, 0j, 0.3 - 0.2j):
        spec = RegionSpec.from_disk(z0, LN4)
        for branch, sign in ((ExtremalBranch.PSI_ZERO_UP, 1), (ExtremalBranch.PSI_ZERO_DOWN, -1)):
            tr = integrate_extremal(spec, branch)
            p = CircularArcParams(sign * np.exp(-spec.x1_0), 0.0)
            np.testing.assert_allclose(tr.driving().values, p.lam(tr.times), rtol=1e-10, atol=0)


# (a, b) system

@pytest.mark.parametrize("a0", [0.5, 1.0, -2.0])
def test_ab_closed_form(a0):
    p = CircularArcParams(np.sign(a0), 0.0)
    ab = integrate_ab(p, 2.0, a0=a0)
    a, b = ab_closed_form(a0, ab.times)
    np.testing.assert_allclose(ab.a, a, rtol=1e-12)
    np.testing.assert_allclose(ab.b, b, rtol=1e-12)
    res, positive = ab.side_residuals()
    assert res < 1e-12 and positive
    np.testing.assert_allclose(ab.k, 0.5, rtol=1e-12)
    # the closed form solves the system exactly
    da, db = a / 4, b / 4
    np.testing.assert_allclose(da, a ** 3 / b ** 2, rtol=1e-14)
    np.testing.assert_allclose(db, -3 * a + b + 3 * a ** 2 / b, rtol=1e-14)


@pytest.mark.parametrize("C1,C2", [(1.0, 0.4), (-0.7, 0.8), (2.0, -0.5), (0.3, 1.0), (-1.0, 1.5)])
def test_ab_side_conditions_generic(C1, C2):
    ab = integrate_ab(CircularArcParams(C1, C2), 1.5)
    res, positive = ab.side_residuals()
    assert res < 1e-8
    assert positive


def test_ab_ratio_equation():
    # k = a/b obeys k' = -k (2k - 1)(k - 1) exactly when lambda'/lambda = 1 - 3k
    p = CircularArcParams(1.0, 0.4)
    ab = integrate_ab(p, 1.5, n=1501)
    k = ab.k
    dk = np.gradient(k, ab.times, edge_order=2)
    rhs = -k * (2 * k - 1) * (k - 1)
    assert np.max(np.abs(dk - rhs)[2:-2]) < 1e-5


def test_default_a0_convention():
    for C1, C2 in ((1.0, 0.4), (-1.0, 0.4), (1.0, 3.0), (-2.0, -0.5)):
        p = CircularArcParams(C1, C2)
        a0, b0 = default_a0(p)
        assert abs(abs(a0) - 1) < 1e-15
        assert b0 * p.lam(0.0) > 0
        assert abs(a0 / b0 - p.k(0.0)) < 1e-15
    a0, b0 = default_a0(CircularArcParams(-1.0, 1.0))
    assert a0 == 0.0 and b0 == -1.0


def test_ab_at_interpolates():
    ab = integrate_ab(CircularArcParams(1.0, 0.0), 1.0, a0=1.0)
    a, b = ab.at(0.37)
    assert abs(a - np.exp(0.37 / 4)) < 1e-10 and abs(b - 2 * np.exp(0.37 / 4)) < 1e-10


@pytest.mark.parametrize("C1,C2", [(1.0, -5.0), (1.0, 10.0), (-0.5, 0.3)])
def test_b_never_vanishes(C1, C2):
    # b'/b = 1 - 3k + 3k^2 > 0 identically, so b keeps the sign of b(0)
    p = CircularArcParams(C1, C2)
    ab = integrate_ab(p, 3.0, n=7)
    for t, b in zip(ab.times, ab.b):
        growth = quad(lambda s: 1 - 3 * p.k(s) + 3 * p.k(s) ** 2, 0, t, epsabs=1e-13)[0]
        assert abs(b - ab.b[0] * np.exp(growth)) < 1e-9 * abs(b)
    assert np.all(np.sign(ab.b) == np.sign(ab.b[0]))


def test_explicit_scale_needs_nonzero_k0():
    with pytest.raises(DomainError):
        integrate_ab(CircularArcParams(1.0, 1.0), 2.0, a0=1.0)


# Moebius frame

@given(disk_pts, st.floats(-3, 3).filter(lambda x: abs(x) > 0.1))
def test_moebius_affine_case(w, lam):
    assert abs(moebius_frame(lam, 0.0, 1.0, w) - (lam * cayley(w) - 1)) < 1e-12 * (1 + abs(cayley(w)))


@given(disk_pts, st.floats(0.1, 5))
def test_moebius_homogeneity(w, rho):
    lam, a, b = 1.3, 0.4, 0.9
    y = moebius_frame(lam, a, b, w)
    assert abs(moebius_frame(lam, rho * a, rho * b, w) - y / rho) < 1e-12 * max(1, abs(y))


@given(disk_pts)
def test_moebius_round_trip(w):
    lam, a, b = -0.8, 0.3, -1.1
    y = moebius_frame(lam, a, b, w)
    assert abs(moebius_frame_inv(lam, a, b, y) - w) < 1e-10


@pytest.mark.parametrize("C1,C2", [(0.7, 0.4), (-1.0, 0.0), (1.2, -0.3)])
def test_moebius_conservation(C1, C2):
    p = CircularArcParams(C1, C2)
    T = 1.2
    ab = integrate_ab(p, T)
    z = np.array([0.3 + 0.2j, -0.5j, 0.1 - 0.6j])
    tr = integrate(z, p.driving(T).as_smooth_driving(), SolverConfig(), coords="disk",
                   t_eval=ab.times)
    wt = moebius_frame(p.lam(ab.times)[:, None], ab.a[:, None], ab.b[:, None], tr.states)
    drift = wt ** 2 + ab.q[:, None] - wt[0] ** 2
    assert np.max(np.abs(drift)) < 1e-8


def test_running_integral_matches_system():
    p = CircularArcParams(0.9, 0.2)
    ab = integrate_ab(p, 1.0)
    _, _, q = _integrate_ab_system(p, ab.times, ab.a[0], ab.b[0], None)
    np.testing.assert_allclose(ab.q, q, rtol=1e-14)
    assert ab.q[0] == 0.0 and np.all(np.diff(ab.q) > 0)


# slit geometry

@pytest.mark.parametrize("T", [np.log(2.0), LN4, np.log(6.0)])
@pytest.mark.parametrize("a0", [0.5, 1.0, 2.0])
def test_slit_QT_closed_form(T, a0):
    g = slit_geometry(CircularArcParams(1.0, 0.0), T, a0=a0)
    assert abs(g.Q_T - (1 - np.exp(-T / 2)) / a0 ** 2) < 1e-10


@pytest.mark.parametrize("C1,C2", [(1.0, 0.0), (-0.6, 0.0), (0.8, 0.5)])
def test_slit_scale_invariance(C1, C2):
    p = CircularArcParams(C1, C2)
    ref = slit_geometry(p, LN4, a0=np.sign(C1)).disk_samples
    for a0 in (0.5, 2.0):
        got = slit_geometry(p, LN4, a0=a0 * np.sign(C1)).disk_samples
        assert np.max(np.abs(got - ref)) < 1e-10


@pytest.mark.parametrize("C1,C2", [(1.0, 0.0), (-1.0, 0.0), (0.5, 0.3), (-2.0, -0.4), (1.0, 1.0)])
def test_slit_circular_and_orthogonal(C1, C2):
    g = slit_geometry(CircularArcParams(C1, C2), LN4)
    assert g.Q_T > 0
    assert abs(abs(g.base) - 1) < 1e-12
    assert np.all(np.abs(g.disk_samples[1:]) < 1)
    assert g.circularity_residual() < 1e-6
    assert g.orthogonality_defect() < 1e-4
    assert g.base_angle() < 1e-4


def test_C2_one_closed_form():
    # lambda = 8 C1 e^t, so k = 0: a = 0 and b = b0 e^t
    p = CircularArcParams(0.5, 1.0)
    np.testing.assert_allclose(p.lam(np.array([0.0, 1.0])), [4.0, 4 * np.e], rtol=1e-15)
    ab = integrate_ab(p, 1.0)
    assert np.all(ab.a == 0)
    np.testing.assert_allclose(ab.b, np.exp(ab.times), rtol=1e-12)
    g = slit_geometry(p, 1.0)
    assert abs(g.Q_T - (1 - np.exp(-2.0))) < 1e-12


def test_fit_circle_examples():
    pts = 2 + 1j + 3 * np.exp(1j * np.linspace(0, 2, 9))
    kind, c, r = fit_circle(pts)
    assert kind == "circle" and abs(c - (2 + 1j)) < 1e-12 and abs(r - 3) < 1e-12
    assert fit_circle(np.linspace(0, 1, 5) * (1 + 1j))[0] == "line"


def test_slit_exports():
    g = slit_geometry(CircularArcParams(1.0, 0.0), LN4, n=5)
    rows = list(csv.reader(io.StringIO(g.to_csv())))
    assert rows[0] == ["height", "re", "im"] and len(rows) == 6
    np.testing.assert_allclose([complex(float(r[1]), float(r[2])) for r in rows[1:]],
                               g.disk_samples, atol=1e-15)
    path = g.svg_path(100)
    assert path.startswith("M ") and path.count(" L ") == 4 and "-0.000000" not in path


def test_slit_agrees_with_flow_image():
    """The computed slit is where the image of the flow is missing."""
    p = CircularArcParams(1.0, 0.4)
    T = LN4
    d = p.driving(T)
    g = slit_geometry(p, T, n=40)
    # slit points are swept to the unit circle by the backward flow
    inner = g.disk_samples[1:-1]
    back = pullback(d, inner)
    assert np.max(1 - np.abs(back)) < 1e-5
    # points just off the slit return to the open disk with room to spare
    normal = 1j * np.gradient(g.disk_samples)[1:-1]
    normal /= np.abs(normal)
    for side in (1, -1):
        off = inner + side * 1e-3 * normal
        assert np.min(1 - np.abs(pullback(d, off))) > 1e-6


def test_image_grows_in_t():
    """Slit points of ``f`` lie in ``phi_{t,T}(D)`` for more of the slit as ``t`` grows."""
    p = CircularArcParams(-0.8, 0.0)
    T = 1.0
    d = p.driving(T).as_smooth_driving()
    pts = slit_geometry(p, T, n=30).disk_samples[1:-1]

    def inside(t):
        count = 0
        for w in pts:
            try:
                back = integrate(w, d, t_span=(T, t), coords="disk").endpoint
            except (IntegrationError, DomainError):
                continue
            count += bool(1 - abs(back) > 1e-6)
        return count

    counts = [inside(t) for t in (0.0, 0.25, 0.5, 0.75, 0.95)]
    assert counts == sorted(counts)
    assert counts[0] == 0 and counts[-1] > counts[0]


# fit dichotomy

def test_fit_recovers_family():
    t = np.linspace(0, LN4, 201)
    for C1, C2 in ((1.3, 0.0), (-0.5, 0.7), (2.0, -0.4), (0.4, 2.5)):
        c1, c2, res = fit_circular_family(t, circular_lambda(CircularArcParams(C1, C2), t))
        assert res < 1e-10
        assert abs(c1 - C1) < 1e-6 * abs(C1) and abs(c2 - C2) < 1e-6 * max(1, abs(C2))


def test_fit_psizero_and_generic():
    spec = RegionSpec.from_disk(0.5j, LN4)
    tr = integrate_extremal(spec, ExtremalBranch.PSI_ZERO_UP)
    c1, c2, res = fit_circular_family(tr.times, tr.driving().values)
    assert res < 1e-10 and abs(c1 - np.exp(-spec.x1_0)) < 1e-8 and abs(c2) < 1e-8
    tr, _ = extremal_to_target(spec, 0.3, Branch.PLUS)
    assert fit_circular_family(tr.times, tr.driving().values)[2] > 1e-3
