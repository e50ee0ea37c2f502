"""Single-atom evolutions and the slits they cut out of the disk.

A single unit atom at ``exp(i theta(t))`` gives, after ``omega = H(w)`` with
the Cayley map ``H``, the half-plane equation ``domega/dt = omega/(1 - lambda omega)``
with ``lambda = H(exp(i theta))``. Shifting by ``S(t) = int_0^t ds/lambda`` and
changing time to ``tau = v(t) = 1/2 int_0^t ds/lambda^2`` turns it into the
chordal Loewner equation ``dw/dtau = 2/(xi - w)`` with ``xi = 1/lambda + S``.

The circular family ``lambda = C1 e^{-t/2} (C2 e^{t/2} + sqrt(C2^2 (e^t - 1) + 1))^3``
produces circular slits orthogonal to the unit circle; their geometry is
recovered from the Moebius frame ``H_t`` with real coefficients ``a(t), b(t)``.
"""

import csv
import io
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import least_squares, minimize_scalar

from .conformal import DomainError, cayley, cayley_inv
from .loewner import SmoothDriving, integrate
from .ode import IntegrationError, SolverConfig, solve

__all__ = [
    "DrivingFunction",
    "ChordalFrame",
    "CircularArcParams",
    "ABSolution",
    "SlitGeometry",
    "theta_to_lambda",
    "single_atom_disk_rhs",
    "halfplane_rhs",
    "chordal_rhs",
    "build_chordal_frame",
    "integrate_single_atom_disk",
    "integrate_chordal",
    "circular_lambda",
    "integrate_ab",
    "ab_closed_form",
    "moebius_frame",
    "moebius_frame_inv",
    "slit_geometry",
    "fit_circle",
    "fit_circular_family",
    "pullback",
]


def theta_to_lambda(theta):
    """``i(1 + e^{i theta})/(1 - e^{i theta}) = -cot(theta/2)``."""
    theta = np.asarray(theta, dtype=float)
    if np.any(theta == 0):
        raise DomainError("theta = 0 puts the atom at the excluded point 1")
    out = -1.0 / np.tan(theta / 2)
    return out.item() if out.ndim == 0 else out


def single_atom_disk_rhs(w, theta):
    """``1/4 (1-w)^2 (1+w) (1 - e^{i theta})/(1 + e^{i theta} w)``."""
    if np.any(np.asarray(theta) == 0):
        raise DomainError("theta = 0 is excluded")
    k = np.exp(1j * np.asarray(theta, dtype=float))
    w = np.asarray(w, dtype=complex)
    out = 0.25 * (1 - w) ** 2 * (1 + w) * (1 - k) / (1 + k * w)
    return out.item() if out.ndim == 0 else out


def halfplane_rhs(omega, lam):
    """``omega / (1 - lambda omega)``, the single-atom field in the upper half-plane."""
    omega = np.asarray(omega, dtype=complex)
    out = omega / (1 - np.asarray(lam, dtype=float) * omega)
    return out.item() if out.ndim == 0 else out


def chordal_rhs(w_hat, xi):
    """Chordal Loewner field ``2/(xi - w)``."""
    w_hat = np.asarray(w_hat, dtype=complex)
    if np.any(w_hat == xi):
        raise ZeroDivisionError("trajectory hit the driving point")
    out = 2.0 / (xi - w_hat)
    return out.item() if out.ndim == 0 else out


@dataclass(frozen=True)
class DrivingFunction:
    """Continuous nonvanishing ``lambda : [0, T] -> R``.

    ``lam`` must accept arrays. ``smooth`` records the regularity class the
    caller vouches for (``"C1"``, ``"analytic"``, ...).
    """

    lam: Callable
    T: float
    smooth: str = "C1"

    def __post_init__(self):
        grid = np.linspace(0.0, self.T, 2001)
        values = np.asarray(self.lam(grid), dtype=float)
        if not np.all(np.isfinite(values)) or np.any(values == 0) or \
                np.any(np.sign(values[1:]) != np.sign(values[:-1])):
            raise DomainError("driving function must be finite and nonvanishing on [0, T]")

    @classmethod
    def from_theta(cls, theta, T, smooth="C1"):
        return cls(lambda t: theta_to_lambda(theta(t)), T, smooth)

    def kappa(self, t):
        lam = np.asarray(self.lam(t), dtype=float)
        return (lam - 1j) / (lam + 1j)

    def as_smooth_driving(self):
        return SmoothDriving(self.lam, (0.0, self.T))


@dataclass(frozen=True)
class ChordalFrame:
    """Quadratures ``S(t) = int ds/lambda`` and ``v(t) = 1/2 int ds/lambda^2``.

    Stored on a grid and interpolated by cubic Hermite splines with the exact
    derivatives ``1/lambda`` and ``1/(2 lambda^2)``; ``t_of_tau`` inverts the
    strictly increasing ``v`` the same way.
    """

    times: np.ndarray
    shift: np.ndarray
    tau: np.ndarray
    lam_values: np.ndarray
    lam: Optional[Callable] = None

    def omega_shift(self, t):
        return CubicHermiteSpline(self.times, self.shift, 1 / self.lam_values)(t)

    def tau_of_t(self, t):
        return CubicHermiteSpline(self.times, self.tau, 0.5 / self.lam_values ** 2)(t)

    def t_of_tau(self, tau):
        return CubicHermiteSpline(self.tau, self.times, 2 * self.lam_values ** 2)(tau)

    def xi(self, t):
        if self.lam is not None:
            lam = np.asarray(self.lam(t), dtype=float)
        else:
            lam = np.interp(t, self.times, self.lam_values)
        return 1 / lam + self.omega_shift(t)

    @property
    def C_total(self):
        return float(self.shift[-1])

    @property
    def tau_total(self):
        return float(self.tau[-1])


def build_chordal_frame(driving, cfg=None, n=401):
    """Compute the shift and time-change quadratures of ``driving`` on ``n`` nodes."""
    cfg = cfg or SolverConfig(rel_tol=1e-12, abs_tol=1e-14)
    times = np.linspace(0.0, driving.T, n)
    lam = np.asarray(driving.lam(times), dtype=float)
    if np.any(lam == 0):
        raise DomainError("driving function vanishes")

    def field(t, y):
        l = float(driving.lam(t))
        return np.array([1 / l, 0.5 / l ** 2])

    _, ys = solve(field, 0.0, driving.T, np.zeros(2), cfg, t_eval=times)
    if np.any(np.diff(ys[:, 1]) <= 0):
        raise DomainError("time change is not strictly increasing")
    return ChordalFrame(times, ys[:, 0], ys[:, 1], lam, driving.lam)


def integrate_single_atom_disk(driving, z, cfg=None):
    """Endpoint ``w_z(T)`` of the single-atom disk equation."""
    return integrate(np.asarray(z, dtype=complex), driving.as_smooth_driving(), cfg,
                     coords="disk").endpoint


def integrate_chordal(driving, z, cfg=None, frame=None):
    """Endpoint of the chordal equation from ``H(z)``, mapped back to the disk.

    The chordal equation is integrated in ``tau``-time on the augmented state
    ``(w_hat, t, S)`` with ``dt/dtau = 2 lambda(t)^2`` and ``dS/dtau = 2 lambda(t)``,
    so ``xi(tau) = 1/lambda(t) + S`` is exact without interpolating ``v^{-1}``.
    Returns ``(w_T, w_hat_T, frame)`` with ``w_T = H^{-1}(w_hat_T - C)``.
    """
    cfg = cfg or SolverConfig()
    frame = frame or build_chordal_frame(driving)
    scalar = np.ndim(z) == 0
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    n = z.size

    def field(tau, y):
        w_hat = y[:n]
        t = y[n].real
        lam = float(driving.lam(min(max(t, 0.0), driving.T)))
        xi = 1 / lam + y[n + 1].real
        out = np.empty_like(y)
        out[:n] = 2.0 / (xi - w_hat)
        out[n] = 2 * lam ** 2
        out[n + 1] = 2 * lam
        return out

    y0 = np.concatenate([cayley(z), [0.0, 0.0]]).astype(complex)
    _, ys = solve(field, 0.0, frame.tau_total, y0, cfg)
    w_hat_T = ys[-1, :n]
    t_end = ys[-1, n].real
    if abs(t_end - driving.T) > 1e-8 * max(1.0, driving.T):
        raise IntegrationError(f"time change mismatch: reached t = {t_end!r}")
    w_T = cayley_inv(w_hat_T - frame.C_total)
    if scalar:
        return complex(w_T[0]), complex(w_hat_T[0]), frame
    return w_T, w_hat_T, frame


@dataclass(frozen=True)
class CircularArcParams:
    """Constants of the circular-slit family, ``C1 != 0``."""

    C1: float
    C2: float

    def __post_init__(self):
        if self.C1 == 0:
            raise DomainError("C1 must be nonzero")

    def lam(self, t):
        return circular_lambda(self, t)

    def log_derivative(self, t):
        """``lambda'/lambda = -1/2 + 3 C2 e^{t/2} / (2 sqrt(C2^2 (e^t - 1) + 1))``."""
        t = np.asarray(t, dtype=float)
        root = np.sqrt(self.C2 ** 2 * np.expm1(t) + 1)
        return -0.5 + 1.5 * self.C2 * np.exp(t / 2) / root

    def k(self, t):
        """The ratio ``a/b`` forced by ``lambda'/lambda = 1 - 3 a/b``."""
        return (1 - self.log_derivative(t)) / 3

    def driving(self, T):
        return DrivingFunction(self.lam, T, "analytic")


def circular_lambda(params, t):
    """``C1 e^{-t/2} (C2 e^{t/2} + sqrt(C2^2 (e^t - 1) + 1))^3``."""
    t = np.asarray(t, dtype=float)
    rad = params.C2 ** 2 * np.expm1(t) + 1
    if np.any(rad < 0):
        raise DomainError("negative radicand")
    out = params.C1 * np.exp(-t / 2) * (params.C2 * np.exp(t / 2) + np.sqrt(rad)) ** 3
    return out.item() if out.ndim == 0 else out


@dataclass(frozen=True)
class ABSolution:
    """Solution ``(a(t), b(t))`` of ``a' = a^3/b^2, b' = -3a + b + 3a^2/b``."""

    params: CircularArcParams
    times: np.ndarray
    a: np.ndarray
    b: np.ndarray
    q: np.ndarray

    @property
    def Q_T(self):
        """``2 int_0^T b^{-2} dt``."""
        return float(self.q[-1])

    @property
    def k(self):
        return self.a / self.b

    def side_residuals(self):
        """Max of ``|lambda'/lambda - (1 - 3a/b)|`` and whether ``b lambda > 0`` holds."""
        log_d = self.params.log_derivative(self.times)
        res = np.max(np.abs(log_d - (1 - 3 * self.k)))
        positive = bool(np.all(self.b * self.params.lam(self.times) > 0))
        return float(res), positive

    def at(self, t):
        sa = CubicHermiteSpline(self.times, self.a, self.a ** 3 / self.b ** 2)
        sb = CubicHermiteSpline(self.times, self.b,
                                -3 * self.a + self.b + 3 * self.a ** 2 / self.b)
        return float(sa(t)), float(sb(t))


def default_a0(params):
    """Normalization ``|a(0)| = 1`` with ``b(0) lambda(0) > 0``.

    ``k(0) = (1 - C2)/2``; when it vanishes (``C2 = 1``) the slit is a straight
    segment, ``a`` is identically zero and ``b(0)`` is normalized instead.
    """
    k0 = float(params.k(0.0))
    lam0 = float(params.lam(0.0))
    if k0 == 0:
        return 0.0, float(np.sign(lam0))
    b0 = np.sign(lam0) / abs(k0)
    return float(k0 * b0), float(b0)


def _integrate_ab_system(params, times, a0, b0, cfg):
    cfg = cfg or SolverConfig(rel_tol=1e-12, abs_tol=1e-14)

    def field(t, y):
        a, b, _ = y
        return np.array([a ** 3 / b ** 2, -3 * a + b + 3 * a ** 2 / b, 2 / b ** 2])

    def ok(y):
        return np.isfinite(y).all() and abs(y[1]) > 1e-12

    try:
        _, ys = solve(field, 0.0, float(times[-1]), np.array([a0, b0, 0.0]), cfg,
                      t_eval=times, domain=ok)
    except IntegrationError as exc:
        raise IntegrationError(f"(a, b) system blew up: {exc}") from exc
    return ys[:, 0], ys[:, 1], ys[:, 2]


def integrate_ab(params, T, a0=None, cfg=None, n=401):
    """Integrate the ``(a, b)`` system on ``[0, T]``.

    ``a0`` fixes the scale (any nonzero multiple gives the same slit); by
    default :func:`default_a0`. ``b(0)`` follows from the side condition at
    ``t = 0``. The running integral ``2 int_0^t b^{-2}`` is carried along.
    """
    if a0 is None:
        a0, b0 = default_a0(params)
    else:
        k0 = float(params.k(0.0))
        if k0 == 0:
            raise DomainError("k(0) = 0: fix the scale through b(0) instead")
        b0 = a0 / k0
    times = np.linspace(0.0, T, n)
    a, b, q = _integrate_ab_system(params, times, a0, b0, cfg)
    return ABSolution(params, times, a, b, q)


def ab_closed_form(a0, t):
    """Exact solution for ``C2 = 0``: ``a = a0 e^{t/4}``, ``b = 2 a0 e^{t/4}``."""
    g = a0 * np.exp(np.asarray(t, dtype=float) / 4)
    return g, 2 * g


def moebius_frame(lam_t, a_t, b_t, w):
    """``H_t(w) = (lambda H(w) - 1) / (a (lambda H(w) - 1) + b)``."""
    x = lam_t * cayley(w) - 1
    den = a_t * x + b_t
    if np.any(den == 0):
        raise ZeroDivisionError("pole of the Moebius frame")
    return x / den


def moebius_frame_inv(lam_t, a_t, b_t, y):
    """Inverse of :func:`moebius_frame`; ``y`` may lie on the real axis."""
    y = np.asarray(y, dtype=complex)
    x = y * b_t / (1 - y * a_t)
    omega = (x + 1) / lam_t
    return (omega - 1j) / (omega + 1j)


@dataclass(frozen=True)
class SlitGeometry:
    Q_T: float
    tip: complex
    base: complex
    disk_samples: np.ndarray
    heights: np.ndarray
    frame: tuple = (1.0, 0.0, 1.0)

    def circle(self):
        return fit_circle(self.disk_samples)

    def circularity_residual(self):
        """Max deviation of the samples from the circle through three of them."""
        kind, centre, radius = self.circle()
        pts = self.disk_samples
        if kind == "line":
            d = pts - pts[0]
            direction = (pts[-1] - pts[0]) / abs(pts[-1] - pts[0])
            return float(np.max(np.abs((d * direction.conjugate()).imag)))
        return float(np.max(np.abs(np.abs(pts - centre) - radius)))

    def orthogonality_defect(self):
        """``| |c|^2 - 1 - r^2 |`` for the fitted circle; distance of the line from 0."""
        kind, centre, radius = self.circle()
        if kind == "line":
            p, q = self.disk_samples[0], self.disk_samples[-1]
            return float(abs(((0 - p) * (q - p).conjugate()).imag) / abs(q - p))
        return float(abs(abs(centre) ** 2 - 1 - radius ** 2))

    def base_angle(self):
        """Angle between the slit tangent at its base and the radius there."""
        lam_t, a_t, b_t = self.frame
        # d/dh of H_T^{-1}(i h) at h = 0, by the chain rule through the frame
        omega = 1 / lam_t
        tangent = 1j * (b_t / lam_t) * 2j / (omega + 1j) ** 2
        ang = np.angle(tangent / self.base)
        return float(min(abs(ang), abs(abs(ang) - np.pi)))

    def to_csv(self, stream=None):
        out = stream or io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["height", "re", "im"])
        for h, p in zip(self.heights, self.disk_samples):
            writer.writerow([f"{h:.17g}", f"{p.real:.17g}", f"{p.imag:.17g}"])
        return out.getvalue() if stream is None else None

    def svg_path(self, scale=1.0):
        def xy(p):
            # y flipped for SVG; round first so -0 never appears
            return " ".join(f"{round(v * scale, 6) + 0.0:.6f}" for v in (p.real, -p.imag))

        pts = self.disk_samples
        return " ".join([f"M {xy(pts[0])}"] + [f"L {xy(p)}" for p in pts[1:]])


def slit_geometry(params, T, cfg=None, n=50, a0=None):
    """Slit ``H_T^{-1}([0, i sqrt(Q_T)])`` of the circular family.

    Returns the disk samples ordered from the base on the unit circle to the
    tip inside the disk.
    """
    ab = integrate_ab(params, T, a0, cfg)
    Q = ab.Q_T
    if not Q > 0:
        raise IntegrationError("Q_T must be positive")
    lam_T = float(params.lam(T))
    a_T, b_T = float(ab.a[-1]), float(ab.b[-1])
    heights = np.linspace(0.0, np.sqrt(Q), n)
    samples = moebius_frame_inv(lam_T, a_T, b_T, 1j * heights)
    return SlitGeometry(Q, complex(samples[-1]), complex(samples[0]), samples, heights,
                        (lam_T, a_T, b_T))


def fit_circle(points):
    """Circle through the first, middle and last point.

    Returns ``("circle", centre, radius)`` or ``("line", None, inf)`` for
    collinear points.
    """
    p1, p2, p3 = points[0], points[len(points) // 2], points[-1]
    d = 2 * ((p1.real * (p2.imag - p3.imag) + p2.real * (p3.imag - p1.imag)
              + p3.real * (p1.imag - p2.imag)))
    scale = max(abs(p1 - p2), abs(p2 - p3), abs(p1 - p3)) ** 2
    if abs(d) <= 1e-12 * scale:
        return "line", None, np.inf
    a1, a2, a3 = abs(p1) ** 2, abs(p2) ** 2, abs(p3) ** 2
    ux = (a1 * (p2.imag - p3.imag) + a2 * (p3.imag - p1.imag) + a3 * (p1.imag - p2.imag)) / d
    uy = (a1 * (p3.real - p2.real) + a2 * (p1.real - p3.real) + a3 * (p2.real - p1.real)) / d
    centre = complex(ux, uy)
    return "circle", centre, abs(p1 - centre)


def _family_shape(C2, t):
    rad = C2 ** 2 * np.expm1(t) + 1
    return np.exp(-t / 2) * (C2 * np.exp(t / 2) + np.sqrt(rad)) ** 3


def fit_circular_family(times, values, u_max=10.0, n_grid=4001):
    """Least-squares fit of ``(C1, C2)`` to samples of a driving function.

    ``C1`` enters linearly and is eliminated in closed form. ``C2`` ranges
    over the whole real line through ``C2 = sinh(u)``, ``|u| <= u_max``: a
    grid search followed by a bounded scalar refinement. Returns
    ``(C1, C2, residual)`` with the residual relative to ``||values||``.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    norm = np.linalg.norm(values)
    if norm == 0:
        raise ValueError("cannot fit the zero function")

    def rel_residual(u):
        g = _family_shape(np.sinh(u), times)
        gg = g @ g
        if not np.isfinite(gg) or gg == 0:
            return np.inf, 0.0
        c1 = float(g @ values / gg)
        return np.linalg.norm(values - c1 * g) / norm, c1

    grid = np.linspace(-u_max, u_max, n_grid)
    with np.errstate(over="ignore", invalid="ignore"):
        errs = np.array([rel_residual(u)[0] for u in grid])
    j = int(np.argmin(errs))
    lo = grid[max(j - 1, 0)]
    hi = grid[min(j + 1, grid.size - 1)]
    res = minimize_scalar(lambda u: rel_residual(u)[0], bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-14})
    u = float(res.x) if res.fun < errs[j] else float(grid[j])

    def resid_vec(p):
        g = _family_shape(np.sinh(p[0]), times)
        return (values - (g @ values / (g @ g)) * g) / norm

    # polish on the residual vector; the scalar search only resolves the
    # minimum of the norm to about sqrt(eps)
    polished = least_squares(resid_vec, [u], xtol=1e-15, ftol=1e-15, gtol=1e-15)
    if np.linalg.norm(polished.fun) <= rel_residual(u)[0]:
        u = float(polished.x[0])
    err, C1 = rel_residual(u)
    return C1, float(np.sinh(u)), float(err)


def pullback(driving, w, cfg=None):
    """Flow ``w`` backward from ``T`` to ``0`` along the single-atom disk equation.

    Points of ``f(D)`` return to the open disk; points of the slit are swept
    to the unit circle (the solver either fails or lands at ``|w| ~ 1``).
    """
    traj = integrate(np.asarray(w, dtype=complex), driving.as_smooth_driving(), cfg,
                     t_span=(driving.T, 0.0), coords="disk")
    return traj.endpoint
