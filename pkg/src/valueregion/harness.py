"""Randomized and deterministic experiments over the whole pipeline.

Each experiment returns an :class:`ExperimentReport`. Reports serialize to
line-oriented text and CSV; both omit wall time so that equal seeds give
byte-identical output.
"""

import csv
import enum
import io
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .conformal import hyperbolic_automorphism, julia_ratio, strip_map_inv
from .extremal import ExtremalBranch, extremal_to_target, integrate_extremal, quadrature_endpoint
from .loewner import ControlSchedule, integrate, kappa_to_lambda
from .ode import IntegrationError, SolverConfig
from .region import (
    Branch,
    RegionSpec,
    Verdict,
    a_pm,
    boundary_curve,
    classify,
    corollary_bound,
    goryainov_disk_circle,
    julia_disks,
    omega0,
    omega_pm,
)

__all__ = [
    "MeasureClass",
    "ExperimentConfig",
    "ExperimentReport",
    "GUARD_ARC",
    "random_schedule",
    "sample_rng",
    "containment_experiment",
    "attainment_experiment",
    "corollary_experiment",
    "goryainov_comparison",
    "julia_experiment",
    "refinement_sequence",
]

GUARD_ARC = 1e-6
_CHUNK = 2500


class MeasureClass(enum.Enum):
    PROBABILITY = "probability"
    SUB_PROBABILITY = "sub-probability"


@dataclass(frozen=True)
class ExperimentConfig:
    spec: RegionSpec
    n_samples: int = 1000
    n_pieces: int = 4
    atoms_per_piece: int = 3
    seed: int = 0
    solver: SolverConfig = field(default_factory=SolverConfig)
    measure_class: MeasureClass = MeasureClass.PROBABILITY
    margin_tol: Optional[float] = None

    def __post_init__(self):
        for name in ("n_samples", "n_pieces", "atoms_per_piece"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be at least 1")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        object.__setattr__(self, "measure_class", MeasureClass(self.measure_class))

    @property
    def tol(self):
        """Admissible negative margin, ten times the solver tolerance by default."""
        return self.margin_tol if self.margin_tol is not None else 10 * self.solver.rel_tol


@dataclass
class ExperimentReport:
    name: str
    verdicts: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    margins: np.ndarray = field(default_factory=lambda: np.zeros(0))
    failures: list = field(default_factory=list)
    stats: dict = field(default_factory=dict)
    wall_time: float = 0.0

    @property
    def passed(self):
        return not self.failures

    @property
    def worst_margin(self):
        return float(np.min(self.margins)) if self.margins.size else float("nan")

    def to_text(self):
        lines = [f"experiment {self.name}", f"samples {self.verdicts.size}"]
        if self.margins.size:
            lines.append(f"worst_margin {self.worst_margin:.17g}")
            counts = np.bincount(self.verdicts, minlength=len(Verdict))
            lines += [f"verdict {v.name} {counts[v]}" for v in Verdict]
        for key in sorted(self.stats):
            val = self.stats[key]
            lines.append(f"stat {key} {val:.17g}" if isinstance(val, float) else f"stat {key} {val}")
        lines.append(f"failures {len(self.failures)}")
        for f in sorted(self.failures, key=lambda d: d.get("index", -1)):
            lines.append("failure " + " ".join(f"{k}={_fmt(v)}" for k, v in sorted(f.items())))
        lines.append("PASS" if self.passed else "FAIL")
        return "\n".join(lines) + "\n"

    def to_csv(self):
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["index", "verdict", "margin"])
        for i, (v, m) in enumerate(zip(self.verdicts, self.margins)):
            writer.writerow([i, Verdict(int(v)).name, f"{m:.17g}"])
        return out.getvalue()


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return f"{v:.17g}"
    if isinstance(v, (complex, np.complexfloating)):
        return f"{v.real:.17g}{v.imag:+.17g}j"
    if isinstance(v, np.ndarray):
        return "[" + ",".join(_fmt(x) for x in v.ravel()) + "]"
    return str(v)


def sample_rng(seed, index):
    """Independent stream for sample ``index`` of a run seeded by ``seed``."""
    return np.random.default_rng([int(seed), int(index)])


def _draw(rng, cfg):
    P, k = cfg.n_pieces, cfg.atoms_per_piece
    theta = rng.uniform(GUARD_ARC, 2 * np.pi - GUARD_ARC, size=(P, k))
    masses = rng.dirichlet(np.ones(k), size=P)
    if cfg.measure_class is MeasureClass.SUB_PROBABILITY:
        masses = masses * rng.uniform(0.0, 1.0, size=(P, 1))
    else:
        # Dirichlet draws sum to 1 only up to rounding; fix the last atom
        masses[:, -1] = 1 - masses[:, :-1].sum(axis=1)
    return kappa_to_lambda(np.exp(1j * theta)), masses


def random_schedule(cfg, indices=None):
    """Batched piecewise-constant schedule with one row per sample index.

    Sample ``i`` depends only on ``(cfg.seed, i)``.
    """
    indices = range(cfg.n_samples) if indices is None else indices
    lams, masses = zip(*(_draw(sample_rng(cfg.seed, i), cfg) for i in indices))
    bp = np.linspace(0.0, cfg.spec.T, cfg.n_pieces + 1)
    return ControlSchedule(bp, np.stack(lams), np.stack(masses))


def _endpoints(spec, schedule, solver):
    n = schedule.lambdas.shape[0]
    out = np.empty(n, dtype=complex)
    for lo in range(0, n, _CHUNK):
        sub = ControlSchedule(schedule.breakpoints, schedule.lambdas[lo:lo + _CHUNK],
                              schedule.masses[lo:lo + _CHUNK])
        start = np.full(sub.lambdas.shape[0], spec.zeta0, dtype=complex)
        out[lo:lo + _CHUNK] = integrate(start, sub, solver).endpoint
    return out


def containment_experiment(cfg):
    """Integrate random admissible controls and classify every endpoint."""
    t0 = time.perf_counter()
    spec = cfg.spec
    schedule = random_schedule(cfg)
    ends = _endpoints(spec, schedule, cfg.solver)
    verdicts, margins = classify(spec, ends, tol=cfg.tol)
    verdicts = np.asarray(verdicts, dtype=int)
    margins = np.asarray(margins, dtype=float)
    probability = cfg.measure_class is MeasureClass.PROBABILITY
    report = ExperimentReport(f"containment[{cfg.measure_class.value}]", verdicts, margins)
    for i in range(verdicts.size):
        v = Verdict(verdicts[i])
        bad = v is Verdict.OUTSIDE or margins[i] < -cfg.tol
        if probability and v is Verdict.EXCLUDED_BASE_POINT:
            bad = True
        if bad:
            report.failures.append({
                "index": i, "seed": cfg.seed, "verdict": v.name, "margin": margins[i],
                "endpoint": ends[i], "lambdas": schedule.lambdas[i], "masses": schedule.masses[i],
            })
    report.stats["min_distance_to_zeta0"] = float(np.min(np.abs(ends - spec.zeta0)))
    report.wall_time = time.perf_counter() - t0
    return report


def _targets(spec, n, branch, edge=1e-3, base_gap=0.05):
    """``n`` target heights on an arc, away from its ends by ``edge`` of its width.

    On ``GammaMinus`` a band of relative width ``base_gap`` around the base
    point is skipped: the extremal to ``zeta0`` itself drives its atom into
    ``kappa = 1``.
    """
    a_minus, a_plus = a_pm(spec)
    width = a_plus - a_minus
    if branch is Branch.PLUS:
        return np.linspace(a_minus + edge * width, a_plus - edge * width, n)
    s = np.linspace(a_minus + edge * width, a_plus - edge * width, 4 * n)
    s = s[np.abs(s - spec.s0) > base_gap * width]
    return s[np.round(np.linspace(0, s.size - 1, n)).astype(int)]


def attainment_experiment(spec, n_targets=50, cfg=None, replay_tol=1e-6, tol=1e-7):
    """Hit ``n_targets`` points of each arc with extremal controls and replay them."""
    t0 = time.perf_counter()
    cfg = cfg or SolverConfig()
    report = ExperimentReport("attainment")
    worst = {"target": 0.0, "quadrature": 0.0, "replay": 0.0}
    idx = 0
    margins = []
    for branch in (Branch.PLUS, Branch.MINUS):
        for s in _targets(spec, n_targets, branch):
            target = complex(quadrature_endpoint(spec, s, branch), np.arcsin(s))
            entry = {"index": idx, "branch": branch.value, "target": target}
            idx += 1
            try:
                traj, quad = extremal_to_target(spec, s, branch, cfg)
                end = traj.endpoint
                quad_x1 = quad.endpoint_x1 if branch is Branch.PLUS else quad.endpoint_x1_minus
                replay = integrate(spec.zeta0, traj.driving().as_driving(), cfg).endpoint
            except (IntegrationError, ZeroDivisionError, ValueError) as exc:
                entry["error"] = str(exc)
                report.failures.append(entry)
                continue
            errs = {"target": abs(end - target), "quadrature": abs(end.real - quad_x1),
                    "replay": abs(complex(replay) - end)}
            for k, v in errs.items():
                worst[k] = max(worst[k], v)
            margins.append(-max(errs["target"], errs["quadrature"]))
            if errs["target"] > tol or errs["quadrature"] > tol or errs["replay"] > replay_tol:
                entry.update(errs)
                report.failures.append(entry)

    # the two ends of the arcs and the translate of the base point
    zero = _special_targets(spec, cfg)
    for k, v in zero.items():
        report.stats[k] = v
        if v > tol:
            report.failures.append({"index": idx, "check": k, "error": v})
            idx += 1
    for k, v in worst.items():
        report.stats[f"max_{k}_error"] = v
    report.margins = np.asarray(margins)
    report.verdicts = np.full(report.margins.size, int(Verdict.BOUNDARY))
    report.wall_time = time.perf_counter() - t0
    return report


def _special_targets(spec, cfg):
    w_minus, w_plus = omega_pm(spec)
    up = integrate_extremal(spec, ExtremalBranch.PSI_ZERO_UP, cfg=cfg).endpoint
    down = integrate_extremal(spec, ExtremalBranch.PSI_ZERO_DOWN, cfg=cfg).endpoint
    sched = ControlSchedule(np.array([0.0, spec.T]), np.zeros((1, 1)), np.ones((1, 1)))
    auto = complex(integrate(spec.zeta0, sched, cfg).endpoint)
    auto_disk = hyperbolic_automorphism(spec.T, spec.z0)
    return {
        "omega_plus_error": abs(up - w_plus),
        "omega_minus_error": abs(down - w_minus),
        "omega0_error": abs(auto - omega0(spec)),
        "automorphism_disk_error": abs(strip_map_inv(auto) - auto_disk),
    }


def corollary_experiment(spec, samples=1000, seed=0, solver=None, tol=1e-9):
    """Check ``e^{T/2} >= L(sin x2_0, sin x2(T))`` on random probability-class endpoints.

    Also records the two equality cases: the automorphism (``L = 1``) and the
    ``psi1 = 0`` extremals (``L = e^{T/2}``).
    """
    t0 = time.perf_counter()
    solver = solver or SolverConfig()
    cfg = ExperimentConfig(spec, n_samples=samples, seed=seed, solver=solver)
    ends = _endpoints(spec, random_schedule(cfg), solver)
    bound = np.exp(spec.T / 2)
    L = corollary_bound(spec.s0, np.sin(ends.imag))
    margins = bound - L
    report = ExperimentReport("corollary", np.zeros(margins.size, dtype=int), margins)
    for i in np.flatnonzero(margins < -tol):
        report.failures.append({"index": int(i), "seed": seed, "margin": margins[i],
                                "endpoint": ends[i]})
    L_auto = corollary_bound(spec.s0, spec.s0)
    report.stats["automorphism_L"] = float(L_auto)
    if L_auto != 1.0:
        report.failures.append({"index": -1, "check": "L(a, a) = 1", "value": L_auto})
    for name, branch in (("up", ExtremalBranch.PSI_ZERO_UP), ("down", ExtremalBranch.PSI_ZERO_DOWN)):
        end = integrate_extremal(spec, branch, cfg=solver).endpoint
        gap = abs(corollary_bound(spec.s0, np.sin(end.imag)) - bound)
        report.stats[f"psizero_{name}_equality_gap"] = float(gap)
        if gap > tol:
            report.failures.append({"index": -1, "check": f"psizero-{name} equality", "gap": gap})
    report.wall_time = time.perf_counter() - t0
    return report


def julia_experiment(spec, n=200, rtol=1e-12):
    """Boundary points of the region lie in both horodisks ``D1`` and ``D2``.

    The margin of a point is the relative slack ``1 - ratio/level`` of the
    tighter of the two disks.
    """
    t0 = time.perf_counter()
    theta = np.linspace(0.0, 2 * np.pi, n, endpoint=False)
    pts = strip_map_inv(boundary_curve(spec, theta))
    d1, d2 = julia_disks(spec)
    slack = np.minimum(1 - julia_ratio(d1.sigma, pts) / d1.level,
                       1 - julia_ratio(d2.sigma, pts) / d2.level)
    report = ExperimentReport("julia", np.zeros(n, dtype=int), slack)
    for i in np.flatnonzero(slack < -rtol):
        report.failures.append({"index": int(i), "theta": theta[i], "slack": slack[i]})
    report.wall_time = time.perf_counter() - t0
    return report


def goryainov_comparison(T, samples=400, near=1e-6):
    """Compare the region boundary for ``z0 = 0`` with the disk of the
    Koebe-type estimate, whose boundary passes through ``0`` and ``l^{-1}(T)``.

    The margin of a sample is its Euclidean distance inside that disk. Samples
    farther than ``near`` from both common points must have positive margin.
    """
    t0 = time.perf_counter()
    spec = RegionSpec(0j, T)
    theta = np.linspace(0.0, 2 * np.pi, samples, endpoint=False)
    pts = strip_map_inv(boundary_curve(spec, theta))
    # the base point is excluded from the region but lies on its closure
    pts = np.concatenate([pts, [0j]])
    centre, radius = goryainov_disk_circle(T)
    margin = radius - np.abs(pts - centre)
    common = np.array([0.0, np.tanh(T / 2)])
    dist_common = np.min(np.abs(pts[:, None] - common[None, :]), axis=1)
    away = dist_common > near
    report = ExperimentReport("goryainov", np.zeros(pts.size, dtype=int), margin)
    for i in np.flatnonzero(away & (margin <= 0)):
        report.failures.append({"index": int(i), "point": pts[i], "margin": margin[i]})
    report.stats["min_margin_away"] = float(np.min(margin[away])) if away.any() else float("nan")
    report.stats["common_point_margin_max"] = float(np.max(np.abs(margin[~away]))) if (~away).any() else 0.0
    report.stats["tip_margin"] = float(radius - abs(common[1] - centre))
    report.wall_time = time.perf_counter() - t0
    return report


def refinement_sequence(spec, seed=0, levels=5, base_pieces=4, atoms=2, solver=None):
    """Endpoints of piecewise-constant approximations of one smooth random control.

    Piece ``j`` of level ``m`` freezes the control at the midpoint of its
    interval; level ``m`` has ``base_pieces * 2**m`` pieces. Returns
    ``(n_pieces, endpoints)``; successive differences should shrink at
    least twofold.
    """
    solver = solver or SolverConfig()
    rng = sample_rng(seed, 0)
    modes = 3
    a = rng.normal(size=(atoms, modes))
    b = rng.normal(size=(atoms, modes))
    offset = rng.uniform(0.5, 2 * np.pi - 0.5, size=atoms)
    w = rng.uniform(0.5, 1.5, size=atoms)

    def control(t):
        t = np.atleast_1d(t)[:, None, None]
        k = np.arange(1, modes + 1)
        wave = (a * np.sin(k * t) + b * np.cos(k * t)).sum(axis=-1) / (2 * modes)
        theta = offset + np.clip(wave, -0.4, 0.4)
        mass = w * (1 + 0.3 * np.sin(t[..., 0] + offset))
        mass = mass / mass.sum(axis=-1, keepdims=True)
        return kappa_to_lambda(np.exp(1j * theta)), mass

    counts, ends = [], []
    for m in range(levels):
        P = base_pieces * 2 ** m
        bp = np.linspace(0.0, spec.T, P + 1)
        lam, mass = control(0.5 * (bp[1:] + bp[:-1]))
        end = integrate(spec.zeta0, ControlSchedule(bp, lam, mass), solver).endpoint
        counts.append(P)
        ends.append(complex(end))
    return np.array(counts), np.array(ends)
