"""Controllable Loewner-Kufarev equation for self-maps fixing -1 and 1.

Three coordinate forms of the same ODE:

* disk:  ``dw/dt = 1/4 (1-w)^2 (1+w) q(w, t)`` with
  ``q(w) = sum m_j (1-k_j)/(1+k_j w)``, atoms ``k_j`` on the circle minus 1;
* strip: ``dzeta/dt = sum m_j / (1 - i lambda_j e^zeta)`` after ``zeta = log((1+w)/(1-w))``
  and ``lambda = i(1+k)/(1-k)``;
* control: ``dx1/dt + i dx2/dt = u e^{-i x2} / (2 cos x2)`` with ``|u - 1| <= 1``.

The strip form has no singular factors and is used for production runs; the
disk form is kept as an independent check.
"""

import csv
import io
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .conformal import DomainError, strip_map, strip_map_inv
from .ode import IntegrationError, SolverConfig, solve

__all__ = [
    "AtomicMeasure",
    "ControlSchedule",
    "SmoothDriving",
    "Trajectory",
    "herglotz_q",
    "disk_rhs",
    "kappa_to_lambda",
    "lambda_to_kappa",
    "strip_rhs",
    "u_rhs",
    "u_from_measure",
    "integrate",
    "integrate_u",
    "evolution_compose",
]

_UNIT_TOL = 1e-12
_MASS_TOL = 1e-12


def kappa_to_lambda(kappa):
    """``i(1+k)/(1-k)``; real for unimodular ``k != 1``."""
    kappa = np.asarray(kappa, dtype=complex)
    if np.any(kappa == 1):
        raise DomainError("kappa = 1 is a pole")
    lam = 1j * (1 + kappa) / (1 - kappa)
    return lam.real.item() if lam.ndim == 0 else lam.real


def lambda_to_kappa(lam):
    """Inverse of :func:`kappa_to_lambda`, ``(lambda - i)/(lambda + i)``."""
    lam = np.asarray(lam, dtype=float)
    k = (lam - 1j) / (lam + 1j)
    return k.item() if k.ndim == 0 else k


@dataclass(frozen=True)
class AtomicMeasure:
    """Finite positive measure on the unit circle without an atom at 1."""

    positions: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        pos = np.atleast_1d(np.asarray(self.positions, dtype=complex))
        mass = np.atleast_1d(np.asarray(self.masses, dtype=float))
        if pos.shape != mass.shape or pos.ndim != 1:
            raise ValueError("positions and masses must be 1-d of equal length")
        if np.any(np.abs(np.abs(pos) - 1) > _UNIT_TOL):
            raise DomainError("atoms must lie on the unit circle")
        if np.any(pos == 1):
            raise DomainError("atom at kappa = 1 is not allowed")
        if np.any(mass < 0):
            raise DomainError("masses must be nonnegative")
        if mass.sum() > 1 + _MASS_TOL:
            raise DomainError("total mass exceeds 1")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "masses", mass)

    @classmethod
    def from_lambdas(cls, lambdas, masses):
        return cls(lambda_to_kappa(np.atleast_1d(lambdas)), masses)

    @classmethod
    def empty(cls):
        return cls(np.zeros(0, complex), np.zeros(0))

    @property
    def lambdas(self):
        return kappa_to_lambda(self.positions) if self.positions.size else np.zeros(0)

    @property
    def total_mass(self):
        return float(self.masses.sum())

    @property
    def is_probability(self):
        return abs(self.total_mass - 1) <= _MASS_TOL


@dataclass(frozen=True)
class ControlSchedule:
    """Piecewise-constant atomic control in strip parameters.

    ``lambdas`` and ``masses`` have shape ``(P, k)`` for one schedule or
    ``(N, P, k)`` for a batch of ``N`` schedules sharing the breakpoints.
    Piece ``i`` is active on ``[breakpoints[i], breakpoints[i+1]]``.
    """

    breakpoints: np.ndarray
    lambdas: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float)
        lam = np.asarray(self.lambdas, dtype=float)
        mass = np.asarray(self.masses, dtype=float)
        if bp.ndim != 1 or bp.size < 2 or np.any(np.diff(bp) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        if lam.shape != mass.shape or lam.ndim not in (2, 3):
            raise ValueError("lambdas and masses must share shape (P, k) or (N, P, k)")
        if lam.shape[-2] != bp.size - 1:
            raise ValueError("one measure per interval required")
        if not np.all(np.isfinite(lam)):
            raise DomainError("atoms at kappa = 1 (infinite lambda) are not allowed")
        if np.any(mass < 0) or np.any(mass.sum(axis=-1) > 1 + _MASS_TOL):
            raise DomainError("each piece needs nonnegative mass of total at most 1")
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "lambdas", lam)
        object.__setattr__(self, "masses", mass)

    @classmethod
    def from_measures(cls, breakpoints, measures):
        k = max(1, max(m.positions.size for m in measures))
        lam = np.zeros((len(measures), k))
        mass = np.zeros((len(measures), k))
        for i, m in enumerate(measures):
            lam[i, :m.positions.size] = m.lambdas
            mass[i, :m.positions.size] = m.masses
        return cls(breakpoints, lam, mass)

    @classmethod
    def constant(cls, measure, T):
        return cls.from_measures([0.0, T], [measure])

    @property
    def n_pieces(self):
        return self.breakpoints.size - 1

    @property
    def batched(self):
        return self.lambdas.ndim == 3

    @property
    def t_span(self):
        return float(self.breakpoints[0]), float(self.breakpoints[-1])

    def piece(self, i):
        return self.lambdas[..., i, :], self.masses[..., i, :]

    def measure(self, i, sample=None):
        lam, mass = self.piece(i)
        if sample is not None:
            lam, mass = lam[sample], mass[sample]
        return AtomicMeasure.from_lambdas(lam, mass)

    def sample(self, n):
        """The ``n``-th schedule of a batch."""
        return ControlSchedule(self.breakpoints, self.lambdas[n], self.masses[n])

    def total_mass(self):
        return self.masses.sum(axis=-1)


@dataclass(frozen=True)
class SmoothDriving:
    """Single atom moving continuously: ``lambda(t)`` with constant mass."""

    lam: Callable
    t_span: tuple
    mass: float = 1.0

    @property
    def breakpoints(self):
        return np.asarray(self.t_span, dtype=float)


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    coords: str = "strip"

    @property
    def endpoint(self):
        return self.states[-1]

    def to_csv(self, stream=None):
        """Rows ``t,re,im,coords``; a batch gets one block per sample."""
        out = stream or io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["t", "re", "im", "coords"])
        states = self.states.reshape(self.times.size, -1)
        for j in range(states.shape[1]):
            for t, s in zip(self.times, states[:, j]):
                writer.writerow([f"{t:.17g}", f"{s.real:.17g}", f"{s.imag:.17g}", self.coords])
        return out.getvalue() if stream is None else None


def herglotz_q(z, measure):
    """``sum m_j (1 - k_j)/(1 + k_j z)`` for an atomic measure."""
    z = np.asarray(z, dtype=complex)
    if np.any(~(np.abs(z) < 1)):
        raise DomainError("z must lie in the open unit disk")
    if np.any(measure.positions == 1):
        raise DomainError("atom at kappa = 1")
    k = measure.positions
    q = np.sum(measure.masses * (1 - k) / (1 + k * z[..., None]), axis=-1)
    return q.item() if q.ndim == 0 else q


def disk_rhs(w, measure):
    w = np.asarray(w, dtype=complex)
    out = 0.25 * (1 - w) ** 2 * (1 + w) * herglotz_q(w, measure)
    return out.item() if np.ndim(out) == 0 else out


def _disk_field(w, lambdas, masses):
    k = (lambdas - 1j) / (lambdas + 1j)
    q = np.sum(masses * (1 - k) / (1 + k * w[..., None]), axis=-1)
    return 0.25 * (1 - w) ** 2 * (1 + w) * q


def _strip_field(zeta, lambdas, masses):
    e = np.exp(zeta)[..., None]
    return np.sum(masses / (1 - 1j * lambdas * e), axis=-1)


def strip_rhs(zeta, lambdas, masses):
    """``sum m_j / (1 - i lambda_j e^zeta)``.

    ``lambdas``/``masses`` broadcast against ``zeta[..., None]``.
    """
    zeta = np.asarray(zeta, dtype=complex)
    out = _strip_field(zeta, np.asarray(lambdas, float), np.asarray(masses, float))
    return out.item() if np.ndim(out) == 0 else out


def u_from_measure(zeta, lambdas, masses):
    """The complex control ``u = 2 e^{i x2} cos(x2) * strip_rhs``."""
    zeta = np.asarray(zeta, dtype=complex)
    x2 = zeta.imag
    return 2 * np.exp(1j * x2) * np.cos(x2) * strip_rhs(zeta, lambdas, masses)


def u_rhs(x1, x2, u):
    """Velocity ``(dx1, dx2)`` of the control form for a control ``u``."""
    u = complex(u) if np.ndim(u) == 0 else np.asarray(u, complex)
    t = np.tan(x2)
    dx1 = 0.5 * np.real(u) + 0.5 * t * np.imag(u)
    dx2 = 0.5 * np.imag(u) - 0.5 * t * np.real(u)
    return dx1, dx2


def _strip_step_limit(t, y):
    c = np.min(np.cos(np.asarray(y).imag)) if np.size(y) else 1.0
    return 0.5 * c if c < 0.05 else np.inf


def _in_strip(y):
    return bool(np.all(np.abs(np.asarray(y).imag) < np.pi / 2))


def _in_disk(y):
    return bool(np.all(np.abs(y) < 1))


def _pieces(schedule, t0, t1):
    """Sub-intervals of ``[t0, t1]`` cut at the schedule breakpoints."""
    bp = schedule.breakpoints
    lo, hi = bp[0], bp[-1]
    if t0 < lo - 1e-15 or t1 > hi + 1e-15:
        raise ValueError("schedule does not cover the requested time span")
    cuts = [t0] + [b for b in bp[1:-1] if t0 < b < t1] + [t1]
    out = []
    for a, b in zip(cuts[:-1], cuts[1:]):
        i = int(np.clip(np.searchsorted(bp, 0.5 * (a + b)) - 1, 0, bp.size - 2))
        out.append((a, b, i))
    return out


def integrate(start, schedule, cfg=None, t_span=None, coords="strip", t_eval=None):
    """Integrate the controlled equation and return the :class:`Trajectory`.

    Parameters
    ----------
    start : complex or array
        Initial state(s) in ``coords`` (strip point or disk point). A batch
        schedule needs one start per sample.
    schedule : ControlSchedule or SmoothDriving
    t_span : (float, float), optional
        Defaults to the full schedule span. Integration restarts exactly at
        every breakpoint inside the span.
    coords : {"strip", "disk"}
    t_eval : array_like, optional
        Report times; by default the accepted steps are returned.
    """
    cfg = cfg or SolverConfig()
    if coords not in ("strip", "disk"):
        raise ValueError("coords must be 'strip' or 'disk'")
    field = _strip_field if coords == "strip" else _disk_field
    domain = _in_strip if coords == "strip" else _in_disk
    limit = _strip_step_limit if coords == "strip" else None
    t0, t1 = t_span if t_span is not None else schedule.t_span
    y = np.asarray(start, dtype=complex)
    if not domain(y):
        raise DomainError(f"start outside the {coords} domain")

    if isinstance(schedule, SmoothDriving):
        def rhs(t, state):
            lam = np.asarray(schedule.lam(t), dtype=float)[..., None]
            return field(state, lam, np.full(lam.shape, schedule.mass))
        ts, ys = solve(rhs, t0, t1, y, cfg, t_eval=t_eval, step_limit=limit, domain=domain)
        return Trajectory(ts, ys, coords)

    if t1 < t0:
        raise ValueError("piecewise schedules integrate forward only")
    times, states = [np.array([t0])], [y[None].copy()]
    t_eval = None if t_eval is None else np.asarray(t_eval, dtype=float)
    for a, b, i in _pieces(schedule, t0, t1):
        lam, mass = schedule.piece(i)

        def rhs(t, state, lam=lam, mass=mass):
            return field(state, lam, mass)

        if t_eval is None:
            sub_eval = None
        else:
            inner = t_eval[(t_eval > a) & (t_eval < b)]
            sub_eval = np.concatenate([inner, [b]])
        try:
            ts, ys = solve(rhs, a, b, y, cfg, t_eval=sub_eval, step_limit=limit, domain=domain)
        except IntegrationError as exc:
            raise IntegrationError(f"piece {i} on [{a:.6g}, {b:.6g}]: {exc}") from exc
        y = ys[-1]
        keep = slice(1, None) if sub_eval is None else slice(None)
        times.append(ts[keep])
        states.append(ys[keep])
    ts = np.concatenate(times)
    ys = np.concatenate(states)
    if t_eval is not None:
        sel = np.isin(ts, t_eval)
        ts, ys = ts[sel], ys[sel]
    return Trajectory(ts, ys, coords)


def integrate_u(start, control, t_span, cfg=None, t_eval=None):
    """Integrate the control form with a feedback control ``u = control(t, zeta)``.

    ``start`` is a strip point; the trajectory is reported in strip coordinates.
    """
    cfg = cfg or SolverConfig()
    y = np.asarray(start, dtype=complex)
    if not _in_strip(y):
        raise DomainError("start outside the strip")

    def rhs(t, z):
        u = control(t, z)
        return u * np.exp(-1j * z.imag) / (2 * np.cos(z.imag))

    ts, ys = solve(rhs, t_span[0], t_span[1], y, cfg, t_eval=t_eval,
                   step_limit=_strip_step_limit, domain=_in_strip)
    return Trajectory(ts, ys, "strip")


def evolution_compose(schedule, cfg, s, t, start, coords="strip"):
    """The evolution family ``phi_{s,t}`` applied to ``start``."""
    if s == t:
        return np.asarray(start, dtype=complex).copy()
    return integrate(start, schedule, cfg, t_span=(s, t), coords=coords).endpoint


def to_disk(states):
    return strip_map_inv(states)


def to_strip(states):
    return strip_map(states)
