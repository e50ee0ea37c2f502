"""Closed-form value region in strip coordinates.

For a base point ``zeta0 = x1_0 + i x2_0`` in the strip and ``T > 0`` the
region is

    a_minus <= sin x2 <= a_plus,   |x1 - x1_0 - T/2| <= sqrt(R(sin x2))

bounded by the two arcs ``GammaPlus`` (``+sqrt R``) and ``GammaMinus``
(``-sqrt R``) meeting at ``omega_pm = x1_0 + T/2 + i arcsin a_pm``.
"""

import csv
import enum
import io
from dataclasses import dataclass

import numpy as np
from .conformal import DomainError, JuliaDisk, strip_map, strip_map_inv

__all__ = [
    "RegionSpec",
    "Branch",
    "Verdict",
    "BoundaryArcSample",
    "a_pm",
    "big_R",
    "gamma_x1",
    "gamma_point",
    "gamma_arc",
    "omega_pm",
    "omega0",
    "boundary_curve",
    "signed_margin",
    "classify",
    "contains",
    "region_in_disk",
    "corollary_bound",
    "goryainov_disk_contains",
    "goryainov_disk_circle",
    "julia_disks",
    "arcs_to_csv",
]

DEFAULT_TOL = 1e-9
_CLAMP = 1e-14


@dataclass(frozen=True)
class RegionSpec:
    """One value-region problem: base point ``zeta0`` in the strip and ``T > 0``."""

    zeta0: complex
    T: float

    def __post_init__(self):
        object.__setattr__(self, "zeta0", complex(self.zeta0))
        object.__setattr__(self, "T", float(self.T))
        if not self.T > 0:
            raise DomainError("T must be positive")
        if not abs(self.zeta0.imag) < np.pi / 2:
            raise DomainError("zeta0 must lie in the strip |Im| < pi/2")

    @classmethod
    def from_disk(cls, z0, T):
        return cls(strip_map(z0), T)

    @property
    def x1_0(self):
        return self.zeta0.real

    @property
    def x2_0(self):
        return self.zeta0.imag

    @property
    def s0(self):
        return np.sin(self.zeta0.imag)

    @property
    def z0(self):
        return strip_map_inv(self.zeta0)

    def with_T(self, T):
        return RegionSpec(self.zeta0, T)


class Branch(enum.Enum):
    PLUS = "GammaPlus"
    MINUS = "GammaMinus"

    @property
    def sign(self):
        return 1.0 if self is Branch.PLUS else -1.0


class Verdict(enum.IntEnum):
    INTERIOR = 0
    BOUNDARY = 1
    OUTSIDE = 2
    EXCLUDED_BASE_POINT = 3

    @property
    def admitted(self):
        """Interior or boundary, i.e. a legitimate value of the functional."""
        return self in (Verdict.INTERIOR, Verdict.BOUNDARY)


@dataclass(frozen=True)
class BoundaryArcSample:
    branch: Branch
    points: np.ndarray
    x2_grid: np.ndarray

    @property
    def sin_x2(self):
        return np.sin(self.x2_grid)


def _one_minus_a_plus(spec):
    # 1 - a_plus = e^{-T/2}(1 - sin x2_0), exact form avoids cancellation
    return np.exp(-spec.T / 2) * (1 - spec.s0)


def _one_plus_a_minus(spec):
    return np.exp(-spec.T / 2) * (1 + spec.s0)


def a_pm(spec):
    """Return ``(a_minus, a_plus)``, the bounds on ``sin x2`` over the region."""
    shrink = np.exp(-spec.T / 2)
    spread = -np.expm1(-spec.T / 2)
    return shrink * spec.s0 - spread, shrink * spec.s0 + spread


def big_R(a, spec):
    """``log((1-a)/(1-a_plus)) * log((1+a)/(1+a_minus))`` for a in [a_minus, a_plus].

    Values within 1e-14 of an endpoint are clamped onto it, so the result is
    exactly zero there.
    """
    a_minus, a_plus = a_pm(spec)
    a = np.asarray(a, dtype=float)
    if np.any(a < a_minus - _CLAMP) or np.any(a > a_plus + _CLAMP):
        raise DomainError("a outside [a_minus, a_plus]")
    a = np.clip(a, a_minus, a_plus)
    a = np.where(a_plus - a <= _CLAMP, a_plus, a)
    a = np.where(a - a_minus <= _CLAMP, a_minus, a)
    first = np.log1p((a_plus - a) / _one_minus_a_plus(spec))
    second = np.log1p((a - a_minus) / _one_plus_a_minus(spec))
    r = np.maximum(first * second, 0.0)
    return r.item() if r.ndim == 0 else r


def gamma_x1(spec, sin_x2, branch):
    """Real part of the arc ``branch`` at height ``arcsin(sin_x2)``."""
    branch = Branch(branch)
    return spec.x1_0 + spec.T / 2 + branch.sign * np.sqrt(big_R(sin_x2, spec))


def gamma_point(spec, x2, branch):
    x2 = np.asarray(x2, dtype=float)
    out = gamma_x1(spec, np.sin(x2), branch) + 1j * x2
    return out.item() if np.ndim(out) == 0 else out


def gamma_arc(spec, branch, n):
    """``n`` points of one boundary arc on a uniform grid in ``sin x2``.

    The grid runs from ``a_minus`` to ``a_plus`` so the first and last points
    are the common endpoints ``omega_minus`` and ``omega_plus``.
    """
    if n < 2:
        raise ValueError("need at least two points")
    branch = Branch(branch)
    a_minus, a_plus = a_pm(spec)
    s = np.linspace(a_minus, a_plus, n)
    s[0], s[-1] = a_minus, a_plus
    x2 = np.arcsin(s)
    points = gamma_x1(spec, s, branch) + 1j * x2
    return BoundaryArcSample(branch, points, x2)


def omega_pm(spec):
    """Common endpoints ``(omega_minus, omega_plus)`` of the two arcs."""
    a_minus, a_plus = a_pm(spec)
    mid = spec.x1_0 + spec.T / 2
    return complex(mid, np.arcsin(a_minus)), complex(mid, np.arcsin(a_plus))


def omega0(spec):
    """``zeta0 + T``, the image under the hyperbolic automorphism."""
    return spec.zeta0 + spec.T


def boundary_curve(spec, theta):
    """Closed smooth parametrization of the region boundary, theta in [0, 2pi).

    ``sin x2 = c + r cos(theta)`` with the sign of ``sin(theta)`` selecting the
    arc; the square-root behaviour of ``sqrt R`` at the endpoints is cancelled
    by this choice of parameter.
    """
    a_minus, a_plus = a_pm(spec)
    theta = np.asarray(theta, dtype=float)
    c = 0.5 * (a_plus + a_minus)
    r = 0.5 * (a_plus - a_minus)
    s = np.clip(c + r * np.cos(theta), a_minus, a_plus)
    sign = np.where(np.sin(theta) >= 0, 1.0, -1.0)
    return spec.x1_0 + spec.T / 2 + sign * np.sqrt(big_R(s, spec)) + 1j * np.arcsin(s)


def _inside(spec, zeta):
    """Inequality test with the horizontal condition in squared form."""
    a_minus, a_plus = a_pm(spec)
    s = np.sin(zeta.imag)
    vertical = (s >= a_minus) & (s <= a_plus) & (np.abs(zeta.imag) < np.pi / 2)
    r = np.zeros_like(s)
    r[vertical] = big_R(s[vertical], spec)
    dx = zeta.real - spec.x1_0 - spec.T / 2
    return vertical & (dx * dx <= r)


_N_COARSE = 2048
_N_ZOOM = 64
_ZOOM_LEVELS = 4


def _boundary_distance(spec, zeta):
    theta = np.linspace(0.0, 2 * np.pi, _N_COARSE + 1)
    curve = boundary_curve(spec, theta)
    curve[-1] = curve[0]
    p0 = curve[:-1]
    seg = curve[1:] - p0
    seg_len2 = np.maximum(np.abs(seg) ** 2, 1e-300)

    dist = np.empty(zeta.shape, dtype=float)
    best_k = np.empty(zeta.shape, dtype=int)
    chunk = 256
    for start in range(0, zeta.size, chunk):
        z = zeta[start:start + chunk, None]
        u = np.clip(((z - p0) * seg.conj()).real / seg_len2, 0.0, 1.0)
        d = np.abs(z - (p0 + u * seg))
        k = np.argmin(d, axis=1)
        best_k[start:start + chunk] = k
        dist[start:start + chunk] = d[np.arange(k.size), k]

    # zoom in on the nearest segment; each finer polyline replaces the coarser
    # one, since a chord on the concave side sits closer than the curve itself
    h = 2 * np.pi / _N_COARSE
    idx = np.arange(zeta.size)
    centre = theta[best_k[idx]] + 0.5 * h
    local = np.linspace(-1.0, 1.0, _N_ZOOM + 1)
    for _ in range(_ZOOM_LEVELS):
        if idx.size == 0:
            break
        grid = centre[:, None] + 2 * h * local[None, :]
        pts = boundary_curve(spec, grid)
        q0 = pts[:, :-1]
        qs = pts[:, 1:] - q0
        z = zeta[idx, None]
        u = np.clip(((z - q0) * qs.conj()).real / np.maximum(np.abs(qs) ** 2, 1e-300), 0.0, 1.0)
        d = np.abs(z - (q0 + u * qs))
        k = np.argmin(d, axis=1)
        rows = np.arange(idx.size)
        dist[idx] = d[rows, k]
        centre = 0.5 * (grid[rows, k] + grid[rows, k + 1])
        h = 4 * h / _N_ZOOM
    return dist


def signed_margin(spec, zeta):
    """Euclidean distance from ``zeta`` to the region boundary, positive inside."""
    zeta = np.atleast_1d(np.asarray(zeta, dtype=complex))
    dist = _boundary_distance(spec, zeta.ravel()).reshape(zeta.shape)
    return np.where(_inside(spec, zeta), dist, -dist)


def classify(spec, zeta, tol=DEFAULT_TOL):
    """Vectorized membership: returns ``(verdict_codes, signed_margins)``.

    A point within ``tol`` of ``zeta0`` is the excluded base point; otherwise
    it is on the boundary when within ``tol`` of either arc, interior when
    inside by more than ``tol``, and outside otherwise.
    """
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    zeta = np.atleast_1d(np.asarray(zeta, dtype=complex))
    margin = signed_margin(spec, zeta)
    verdict = np.where(margin > tol, Verdict.INTERIOR,
                       np.where(margin >= -tol, Verdict.BOUNDARY, Verdict.OUTSIDE))
    verdict = np.where(np.abs(zeta - spec.zeta0) <= tol, Verdict.EXCLUDED_BASE_POINT, verdict)
    return verdict.astype(int), margin


def contains(spec, zeta, tol=DEFAULT_TOL):
    """Membership verdict for a single strip point."""
    verdict, _ = classify(spec, [zeta], tol)
    return Verdict(int(verdict[0]))


def region_in_disk(spec, z, tol=DEFAULT_TOL):
    """Membership of a disk point in the region pulled back to the disk."""
    return contains(spec, strip_map(z), tol)


def corollary_bound(a, b):
    """``max((1+a)/(1+b), (1-a)/(1-b))`` for a, b in (-1, 1)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(np.abs(a) >= 1) or np.any(np.abs(b) >= 1):
        raise DomainError("arguments must lie in (-1, 1)")
    out = np.maximum((1 + a) / (1 + b), (1 - a) / (1 - b))
    return out.item() if out.ndim == 0 else out


def goryainov_disk_circle(T):
    """Center and radius of the closed disk with diameter ``[0, tanh(T/2)]``."""
    c = np.tanh(T / 2)
    return c / 2, c / 2


def goryainov_disk_contains(T, w, tol=0.0):
    """Membership in the value region of ``f(0)`` over non-univalent self-maps.

    The closed disk with diameter ``[0, tanh(T/2)]`` minus the point 0.
    """
    if not T > 0:
        raise DomainError("T must be positive")
    center, radius = goryainov_disk_circle(T)
    w = np.asarray(w, dtype=complex)
    out = (np.abs(w - center) <= radius) & (np.abs(w) > tol)
    return out.item() if out.ndim == 0 else out


def julia_disks(spec):
    """The two horodisks bounding the region in the disk.

    ``D1`` at the attracting point 1 (angular derivative at most 1) and ``D2``
    at -1 with angular derivative ``e^T``, both with base point ``z0``.
    """
    z0 = spec.z0
    return JuliaDisk(1, 1.0, z0), JuliaDisk(-1, np.exp(spec.T), z0)


def arcs_to_csv(spec, n, stream=None):
    """Write both arcs as rows ``branch,x2,x1,sin_x2``; returns the text."""
    out = stream or io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["branch", "x2", "x1", "sin_x2"])
    for branch in (Branch.PLUS, Branch.MINUS):
        arc = gamma_arc(spec, branch, n)
        for x2, p in zip(arc.x2_grid, arc.points):
            writer.writerow([branch.value, f"{x2:.17g}", f"{p.real:.17g}",
                             f"{np.sin(x2):.17g}"])
    return out.getvalue() if stream is None else None
