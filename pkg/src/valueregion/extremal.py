"""Maximum-principle extremals of the strip control system.

State ``(x1, x2)`` with adjoint ``(psi1, psi2)``; ``phi = arg(psi1 + i psi2)``.
The maximizing control is ``u* = 1 + exp(i(x2 + phi))`` and along extremals

    dx1/dt  = (cos phi + cos x2) / (2 cos x2)
    dx2/dt  = (sin phi - sin x2) / (2 cos x2)
    dpsi1/dt = 0
    dpsi2/dt = (sin phi - sin x2) / (2 cos^2 x2) * |psi|

``psi1`` is normalized to -1, 0 or 1. The ``psi1 = 1`` family sweeps the arc
``GammaPlus``, ``psi1 = -1`` sweeps ``GammaMinus`` and ``psi1 = 0`` gives the
two common endpoints.
"""

import csv
import enum
import io
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .loewner import SmoothDriving, Trajectory
from .ode import SolverConfig, rk4_step, solve
from .region import Branch, a_pm, big_R

__all__ = [
    "ExtremalBranch",
    "ExtremalState",
    "QuadratureSolution",
    "ExtremalDriving",
    "ExtremalTrajectory",
    "DegenerateTarget",
    "hamiltonian",
    "optimal_u",
    "pontryagin_rhs",
    "pontryagin_field",
    "first_integral",
    "solve_C",
    "phi0_from_C",
    "initial_adjoint",
    "integrate_extremal",
    "integrate_reduced",
    "extremal_to_target",
    "extremal_driving_value",
    "extremal_driving_complex",
    "log_derivative_test",
]

# Targets this close to a_pm are sent to the psi1 = 0 family.
ENDPOINT_SNAP = 1e-8


class DegenerateTarget(ValueError):
    """Target height at or beyond ``a_pm``: no ``psi1 = +-1`` extremal reaches it."""


class ExtremalBranch(enum.Enum):
    PSI_PLUS = "PsiPlus"
    PSI_MINUS = "PsiMinus"
    PSI_ZERO_UP = "PsiZero-up"
    PSI_ZERO_DOWN = "PsiZero-down"


@dataclass(frozen=True)
class ExtremalState:
    x1: float
    x2: float
    psi1: float
    psi2: float

    def __post_init__(self):
        if self.psi1 == 0 and self.psi2 == 0:
            raise ValueError("adjoint vector must not vanish")

    @property
    def phi(self):
        return float(np.arctan2(self.psi2, self.psi1))

    @property
    def zeta(self):
        return complex(self.x1, self.x2)

    def as_array(self):
        return np.array([self.x1, self.x2, self.psi1, self.psi2])

    @classmethod
    def from_array(cls, y):
        return cls(*map(float, y))


@dataclass(frozen=True)
class QuadratureSolution:
    """Closed-form solution of the ``psi1 = +-1`` family hitting a target height.

    ``endpoint_x1`` is the ``GammaPlus`` abscissa; the ``psi1 = -1`` extremal
    with the same constant ends at :attr:`endpoint_x1_minus`.
    """

    C: float
    B1: float
    B2: float
    target_sin_x2: float
    endpoint_x1: float
    T: float
    x1_0: float

    @property
    def endpoint_x1_minus(self):
        return 2 * self.x1_0 + self.T - self.endpoint_x1

    @property
    def endpoint_x1_from_C(self):
        """The same abscissa from the unreduced quadrature, an internal check."""
        if self.C == 1:
            return self.x1_0 + self.T
        rc = np.sqrt(self.C)
        return self.x1_0 + (self.B1 - rc * self.B2) / (rc - 1)

    @property
    def growth_margin(self):
        """``T + 2 B1``, positive along every solution."""
        return self.T + 2 * self.B1


@dataclass(frozen=True)
class ExtremalDriving:
    """Samples of the single moving atom ``lambda*(t)`` of an extremal control."""

    times: np.ndarray
    values: np.ndarray

    def spline(self):
        return CubicSpline(self.times, self.values)

    def as_driving(self, mass=1.0):
        """Continuous driving for :func:`valueregion.loewner.integrate`."""
        sp = self.spline()
        return SmoothDriving(sp, (float(self.times[0]), float(self.times[-1])), mass)

    @property
    def sign_changes(self):
        s = np.sign(self.values)
        return int(np.count_nonzero(s[1:] * s[:-1] < 0))

    def to_csv(self, stream=None):
        out = stream or io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["t", "lambda_star"])
        for t, v in zip(self.times, self.values):
            writer.writerow([f"{t:.17g}", f"{v:.17g}"])
        return out.getvalue() if stream is None else None


@dataclass(frozen=True)
class ExtremalTrajectory:
    """Sampled extremal: ``states`` rows are ``(x1, x2, psi1, psi2)``."""

    branch: ExtremalBranch
    times: np.ndarray
    states: np.ndarray

    @property
    def x1(self):
        return self.states[:, 0]

    @property
    def x2(self):
        return self.states[:, 1]

    @property
    def phi(self):
        """Adjoint angle, unwrapped along the trajectory."""
        return np.unwrap(np.arctan2(self.states[:, 3], self.states[:, 2]))

    @property
    def endpoint(self):
        return complex(self.states[-1, 0], self.states[-1, 1])

    @property
    def crosses_half_pi(self):
        """True if ``phi`` crosses ``+-pi/2``, i.e. ``psi1`` changes sign."""
        p = self.states[:, 2]
        return bool(np.any(np.sign(p[1:]) * np.sign(p[:-1]) < 0))

    def strip_trajectory(self):
        return Trajectory(self.times, self.x1 + 1j * self.x2, "strip")

    def driving(self):
        return ExtremalDriving(self.times, extremal_driving_value(self.states.T))

    def first_integral(self):
        """``I(x2, phi)`` along the trajectory (``psi1 = +-1`` only)."""
        # psi1 = -1 has phi = pi - beta with the same sine, so I is unchanged
        return first_integral(self.x2, self.phi)


def hamiltonian(state, u):
    """``Re(u e^{-i x2} (psi1 - i psi2)) / (2 cos x2)``."""
    return float(np.real(u * np.exp(-1j * state.x2) * (state.psi1 - 1j * state.psi2))
                 / (2 * np.cos(state.x2)))


def optimal_u(state):
    """Maximizer ``1 + exp(i(x2 + phi))`` of the Hamiltonian over ``|u - 1| <= 1``."""
    if state.psi1 == 0 and state.psi2 == 0:
        raise ValueError("zero adjoint vector")
    return 1 + np.exp(1j * (state.x2 + state.phi))


def pontryagin_field(y):
    """Extremal vector field on stacked arrays ``y = (x1, x2, psi1, psi2)``."""
    x1, x2, p1, p2 = y
    norm = np.hypot(p1, p2)
    cos_phi = p1 / norm
    sin_phi = p2 / norm
    c = np.cos(x2)
    s = np.sin(x2)
    dx1 = (cos_phi + c) / (2 * c)
    dx2 = (sin_phi - s) / (2 * c)
    dp2 = (sin_phi - s) / (2 * c * c) * norm
    return np.array([dx1, dx2, np.zeros_like(dx1), dp2])


def pontryagin_rhs(state):
    """Time derivative of an :class:`ExtremalState`, as a tuple."""
    return tuple(float(v) for v in pontryagin_field(state.as_array()))


def first_integral(x2, phi):
    """``(1 - sin phi)/(1 + sin phi) * (1 + sin x2)/(1 - sin x2)``."""
    sp = np.sin(phi)
    if np.any(sp == -1):
        raise ZeroDivisionError("sin(phi) = -1 is a pole of the first integral")
    sx = np.sin(x2)
    return (1 - sp) / (1 + sp) * (1 + sx) / (1 - sx)


def solve_C(spec, target_sin_x2):
    """First-integral constant and endpoint for the extremal ending at height ``target``.

    Inverts ``B1 - C B2 = (C - 1) T/2`` at ``t = T``; the endpoint abscissa
    is ``x1_0 + T/2 + sqrt((T + 2 B1)(T + 2 B2))/2``.
    """
    a_minus, a_plus = a_pm(spec)
    s = float(target_sin_x2)
    if not a_minus < s < a_plus:
        raise DegenerateTarget(
            f"target {s!r} not strictly inside ({a_minus!r}, {a_plus!r}); "
            "use the psi1 = 0 branch")
    s0 = spec.s0
    T = spec.T
    B1 = float(np.log1p((s0 - s) / (1 - s0)))
    B2 = float(np.log1p((s - s0) / (1 + s0)))
    C = (B1 + T / 2) / (B2 + T / 2)
    prod = (T + 2 * B1) * (T + 2 * B2)
    x1 = spec.x1_0 + 0.5 * (T + np.sqrt(max(prod, 0.0)))
    return QuadratureSolution(float(C), B1, B2, s, float(x1), T, spec.x1_0)


def phi0_from_C(x2_0, C):
    """Initial adjoint angle with ``first_integral(x2_0, phi0) == C``."""
    if not C > 0:
        raise ValueError("C must be positive")
    s = np.sin(x2_0)
    K = C * (1 - s) / (1 + s)
    return float(np.arcsin((1 - K) / (1 + K)))


def initial_adjoint(branch, phi0=None):
    """Normalized ``(psi1, psi2)`` at ``t = 0`` for a branch.

    For ``PSI_MINUS`` the angle ``phi0`` is that of the mirrored adjoint
    ``(1, -psi2)``: both families share ``x2(t)`` and the first integral.
    """
    branch = ExtremalBranch(branch)
    if branch is ExtremalBranch.PSI_ZERO_UP:
        return 0.0, 1.0
    if branch is ExtremalBranch.PSI_ZERO_DOWN:
        return 0.0, -1.0
    if phi0 is None or not abs(phi0) < np.pi / 2:
        raise ValueError("psi1 = +-1 branches need phi0 in (-pi/2, pi/2)")
    if branch is ExtremalBranch.PSI_PLUS:
        return 1.0, float(np.tan(phi0))
    return -1.0, float(np.tan(phi0))


def integrate_extremal(spec, branch, phi0=None, cfg=None, n_samples=401, psi=None):
    """Integrate the full ``(x, psi)`` extremal system over ``[0, T]``.

    Either ``phi0`` (the normalized adjoint is built by
    :func:`initial_adjoint`) or an explicit ``psi = (psi1, psi2)`` is given.
    Returns an :class:`ExtremalTrajectory` sampled at ``n_samples`` equally
    spaced times.
    """
    branch = ExtremalBranch(branch)
    cfg = cfg or SolverConfig()
    if psi is None:
        psi = initial_adjoint(branch, phi0)
    y0 = np.array([spec.x1_0, spec.x2_0, psi[0], psi[1]], dtype=float)
    t_eval = np.linspace(0.0, spec.T, n_samples)

    def field(t, y):
        return pontryagin_field(y)

    def in_strip(y):
        return abs(y[1]) < np.pi / 2

    ts, ys = solve(field, 0.0, spec.T, y0, cfg, t_eval=t_eval, domain=in_strip)
    return ExtremalTrajectory(branch, ts, ys)


def integrate_reduced(spec, phi0, cfg=None, n_samples=401):
    """The ``psi1 = 1`` family in ``(x1, x2, phi)`` using ``dphi = cos(phi)/cos(x2) dx2``."""
    cfg = cfg or SolverConfig()

    def field(t, y):
        x1, x2, phi = y
        c = np.cos(x2)
        dx2 = (np.sin(phi) - np.sin(x2)) / (2 * c)
        return np.array([(np.cos(phi) + c) / (2 * c), dx2, np.cos(phi) / c * dx2])

    t_eval = np.linspace(0.0, spec.T, n_samples)
    return solve(field, 0.0, spec.T, np.array([spec.x1_0, spec.x2_0, phi0]), cfg, t_eval=t_eval)


def extremal_to_target(spec, target_sin_x2, branch=Branch.PLUS, cfg=None, n_samples=401):
    """Extremal ending on the arc ``branch`` at height ``arcsin(target_sin_x2)``.

    Targets within ``ENDPOINT_SNAP`` of ``a_pm`` use the ``psi1 = 0`` branch.
    Returns ``(trajectory, quadrature)``; the quadrature is ``None`` on the
    ``psi1 = 0`` branch.
    """
    branch = Branch(branch)
    a_minus, a_plus = a_pm(spec)
    s = float(target_sin_x2)
    if s >= a_plus - ENDPOINT_SNAP:
        return integrate_extremal(spec, ExtremalBranch.PSI_ZERO_UP, cfg=cfg, n_samples=n_samples), None
    if s <= a_minus + ENDPOINT_SNAP:
        return integrate_extremal(spec, ExtremalBranch.PSI_ZERO_DOWN, cfg=cfg, n_samples=n_samples), None
    quad = solve_C(spec, s)
    phi0 = phi0_from_C(spec.x2_0, quad.C)
    eb = ExtremalBranch.PSI_PLUS if branch is Branch.PLUS else ExtremalBranch.PSI_MINUS
    return integrate_extremal(spec, eb, phi0, cfg, n_samples), quad


def extremal_driving_value(y):
    """``lambda* = e^{-x1} sin((phi - x2)/2) / cos((phi + x2)/2)``.

    ``y`` is an :class:`ExtremalState` or stacked ``(x1, x2, psi1, psi2)``.
    """
    if isinstance(y, ExtremalState):
        y = y.as_array()
    x1, x2, p1, p2 = (np.asarray(v, dtype=float) for v in y)
    phi = np.arctan2(p2, p1)
    den = np.cos((phi + x2) / 2)
    if np.any(den == 0):
        raise ZeroDivisionError("phi + x2 = +-pi: the atom sits at kappa = 1")
    out = np.exp(-x1) * np.sin((phi - x2) / 2) / den
    return out.item() if out.ndim == 0 else out


def extremal_driving_complex(y):
    """The unsimplified form ``(1 - 2 cos x2/(e^{-i x2} + e^{i phi})) / (i e^{x1 + i x2})``."""
    if isinstance(y, ExtremalState):
        y = y.as_array()
    x1, x2, p1, p2 = (np.asarray(v, dtype=float) for v in y)
    phi = np.arctan2(p2, p1)
    out = (1 - 2 * np.cos(x2) / (np.exp(-1j * x2) + np.exp(1j * phi))) / (1j * np.exp(x1 + 1j * x2))
    return out.item() if out.ndim == 0 else out


def log_derivative_test(traj, h=1e-4, interior=slice(1, -1)):
    """Compare ``(1 + 2 d/dt log lambda*)^2`` with ``cos^2 phi / cos^2 x2``.

    The derivative is a central difference: from each sampled state the
    extremal flow is advanced by ``+-h`` with one RK4 step, whose local error
    ``O(h^5)`` is far below the ``O(h^2)`` difference error.

    Returns ``(times, lhs, rhs)``.
    """
    def field(t, y):
        return pontryagin_field(y)

    times = traj.times[interior]
    states = traj.states[interior].T
    lam = extremal_driving_value(states)
    if np.any(lam == 0):
        raise ValueError("lambda* vanishes in the window; log-derivative undefined")
    fwd = rk4_step(field, 0.0, states, h)
    bwd = rk4_step(field, 0.0, states, -h)
    lf = np.log(np.abs(extremal_driving_value(fwd)))
    lb = np.log(np.abs(extremal_driving_value(bwd)))
    dlog = (lf - lb) / (2 * h)
    lhs = (1 + 2 * dlog) ** 2
    x2 = states[1]
    phi = np.arctan2(states[3], states[2])
    rhs = (np.cos(phi) / np.cos(x2)) ** 2
    return times, lhs, rhs


def quadrature_endpoint(spec, target_sin_x2, branch=Branch.PLUS):
    """Closed-form arc abscissa, ``x1_0 + T/2 +- sqrt(R)``."""
    branch = Branch(branch)
    return spec.x1_0 + spec.T / 2 + branch.sign * np.sqrt(big_R(target_sin_x2, spec))
