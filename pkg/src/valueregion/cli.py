"""Command-line front end: CSV data, SVG figures and verification suites.

Exit status is 0 on success, 1 when a verification suite fails and 2 on a
usage error.
"""

import argparse
import csv
import io
import os
import re
import sys
from dataclasses import dataclass, field

import numpy as np

from . import harness
from .conformal import DomainError, julia_disk_circle, strip_map_inv
from .extremal import ExtremalBranch, extremal_driving_value, extremal_to_target, integrate_extremal
from .loewner import ControlSchedule, integrate
from .ode import IntegrationError, SolverConfig
from .region import (
    Branch,
    RegionSpec,
    boundary_curve,
    gamma_arc,
    goryainov_disk_circle,
    julia_disks,
    omega0,
    omega_pm,
)
from .slit import CircularArcParams, slit_geometry

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
VIEW = 1.05
SHOW_FLAGS = ("region", "D1", "D2", "goryainov_disk", "gamma_labels")
_PALETTE = ("#1f4e79", "#b03a2e", "#1e8449", "#7d3c98", "#af601a")


class UsageError(ValueError):
    pass


def parse_T(text):
    """``"ln4"`` style literals or plain decimals; must be positive."""
    text = str(text).strip()
    m = re.fullmatch(r"ln\(?([0-9.eE+-]+)\)?", text)
    try:
        T = float(np.log(float(m.group(1)))) if m else float(text)
    except ValueError:
        raise UsageError(f"cannot parse T from {text!r}") from None
    if not np.isfinite(T) or T <= 0:
        raise UsageError(f"T must be positive, got {text!r}")
    return T


def parse_z0(text):
    """Disk point written as ``"re,im"``."""
    parts = str(text).split(",")
    try:
        if len(parts) != 2:
            raise ValueError
        z = complex(float(parts[0]), float(parts[1]))
    except ValueError:
        raise UsageError(f"z0 must look like 're,im', got {text!r}") from None
    if not abs(z) < 1:
        raise UsageError("z0 must lie in the open unit disk")
    return z


def _f(x):
    return f"{x:.17g}"


def _write(text, out):
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(out, "w", newline="\n") as fh:
            fh.write(text)


# region

def region_csv(spec, n):
    """Both arcs with ``n`` samples each, in strip and disk coordinates."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["branch", "x2", "x1", "disk_re", "disk_im"])
    for branch in (Branch.PLUS, Branch.MINUS):
        arc = gamma_arc(spec, branch, n)
        disk = np.asarray(strip_map_inv(arc.points))
        for zeta, z in zip(arc.points, disk):
            w.writerow([branch.value, _f(zeta.imag), _f(zeta.real), _f(z.real), _f(z.imag)])
    return buf.getvalue()


def cmd_region(args):
    if args.n < 2:
        raise UsageError("--n must be at least 2")
    _write(region_csv(RegionSpec.from_disk(args.z0, args.T), args.n), args.out)
    return EXIT_OK


# simulate

def builtin_schedule(name, spec, seed=0):
    """Schedules by name: ``automorphism``, ``psizero-up``, ``psizero-down``, ``random:<seed>``."""
    if name == "automorphism":
        return ControlSchedule(np.array([0.0, spec.T]), np.zeros((1, 1)), np.ones((1, 1)))
    if name in ("psizero-up", "psizero-down"):
        branch = ExtremalBranch.PSI_ZERO_UP if name.endswith("up") else ExtremalBranch.PSI_ZERO_DOWN
        return integrate_extremal(spec, branch).driving().as_driving()
    m = re.fullmatch(r"random(?::(\d+))?", name)
    if m:
        s = int(m.group(1)) if m.group(1) else seed
        cfg = harness.ExperimentConfig(spec, n_samples=1, seed=s)
        return harness.random_schedule(cfg).sample(0)
    raise UsageError(f"unknown schedule {name!r}")


def read_schedule(path):
    """CSV with header ``t0,t1,lambda,mass``; rows sharing ``(t0, t1)`` form one piece."""
    pieces = {}
    try:
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                key = (float(row["t0"]), float(row["t1"]))
                pieces.setdefault(key, []).append((float(row["lambda"]), float(row["mass"])))
    except (OSError, KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"cannot read schedule {path!r}: {exc}") from None
    if not pieces:
        raise UsageError("empty schedule file")
    keys = sorted(pieces)
    for (a, b), (c, _) in zip(keys[:-1], keys[1:]):
        if b != c:
            raise UsageError("schedule pieces must be contiguous")
    k = max(len(v) for v in pieces.values())
    lam = np.zeros((len(keys), k))
    mass = np.zeros((len(keys), k))
    for i, key in enumerate(keys):
        for j, (l, m) in enumerate(pieces[key]):
            lam[i, j], mass[i, j] = l, m
    bp = np.array([keys[0][0]] + [b for _, b in keys])
    return ControlSchedule(bp, lam, mass)


def cmd_simulate(args):
    spec = RegionSpec.from_disk(args.z0, args.T)
    if os.path.exists(args.schedule) or args.schedule.endswith(".csv"):
        schedule = read_schedule(args.schedule)
        if abs(schedule.t_span[1] - spec.T) > 1e-12 or schedule.t_span[0] != 0:
            raise UsageError("schedule file must cover [0, T]")
    else:
        schedule = builtin_schedule(args.schedule, spec, args.seed)
    cfg = SolverConfig(rel_tol=args.tol, abs_tol=args.tol * 1e-2)
    t_eval = np.linspace(0.0, spec.T, args.n)
    traj = integrate(spec.zeta0, schedule, cfg, t_eval=t_eval)
    _write(traj.to_csv(), args.out)
    return EXIT_OK


# extremal

_EXTREMAL_BRANCHES = {
    "plus": Branch.PLUS, "minus": Branch.MINUS,
    "psizero-up": ExtremalBranch.PSI_ZERO_UP, "psizero-down": ExtremalBranch.PSI_ZERO_DOWN,
}


def extremal_csv(traj):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "x1", "x2", "psi1", "psi2", "phi", "lambda_star"])
    lam = extremal_driving_value(traj.states.T)
    for t, row, phi, l in zip(traj.times, traj.states, traj.phi, lam):
        w.writerow([_f(t)] + [_f(v) for v in row] + [_f(phi), _f(l)])
    return buf.getvalue()


def cmd_extremal(args):
    spec = RegionSpec.from_disk(args.z0, args.T)
    cfg = SolverConfig(rel_tol=args.tol, abs_tol=args.tol * 1e-2)
    branch = _EXTREMAL_BRANCHES[args.branch]
    if isinstance(branch, ExtremalBranch):
        traj = integrate_extremal(spec, branch, cfg=cfg, n_samples=args.n)
    else:
        if args.target is None:
            raise UsageError("--target (sin x2 at time T) is required for plus/minus")
        traj, _ = extremal_to_target(spec, args.target, branch, cfg, args.n)
    _write(extremal_csv(traj), args.out)
    return EXIT_OK


# slit

def slit_svg(geom, size=512):
    lines = _svg_open(size)
    lines.append(_circle(0j, 1.0, "#000000", 0.004))
    lines.append(f'<path d="{geom.svg_path()}" fill="none" stroke="#b03a2e" stroke-width="0.008"/>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def cmd_slit(args):
    cfg = SolverConfig(rel_tol=min(args.tol, 1e-10), abs_tol=1e-14)
    geom = slit_geometry(CircularArcParams(args.C1, args.C2), args.T, cfg, n=args.n)
    _write(slit_svg(geom) if args.format == "svg" else geom.to_csv(), args.out)
    return EXIT_OK


# verify

SUITES = ("containment", "attainment", "corollary", "julia", "goryainov", "refinement")


def run_suite(name, spec, seed=0, scale=1.0, solver=None):
    """Run one suite; returns an :class:`ExperimentReport`."""
    solver = solver or SolverConfig()
    n = max(1, int(round(1000 * scale)))
    if name == "containment":
        return harness.containment_experiment(
            harness.ExperimentConfig(spec, n_samples=n, seed=seed, solver=solver))
    if name == "attainment":
        return harness.attainment_experiment(spec, max(2, int(round(50 * scale))), solver)
    if name == "corollary":
        return harness.corollary_experiment(spec, n, seed, solver)
    if name == "julia":
        return harness.julia_experiment(spec, max(8, int(round(200 * scale))))
    if name == "goryainov":
        return harness.goryainov_comparison(spec.T, max(8, int(round(400 * scale))))
    if name == "refinement":
        counts, ends = harness.refinement_sequence(spec, seed, solver=solver)
        d = np.abs(np.diff(ends))
        ratios = d[:-1] / d[1:]
        rep = harness.ExperimentReport("refinement")
        for i, r in enumerate(ratios):
            rep.stats[f"ratio_{counts[i + 1]}_{counts[i + 2]}"] = float(r)
            if not r >= 2:
                rep.failures.append({"index": i, "ratio": float(r)})
        return rep
    raise UsageError(f"unknown suite {name!r}")


def cmd_verify(args):
    spec = RegionSpec.from_disk(args.z0, args.T)
    names = SUITES if args.suite == "all" else (args.suite,)
    if not args.scale > 0:
        raise UsageError("--scale must be positive")
    solver = SolverConfig(rel_tol=args.tol, abs_tol=args.tol * 1e-2)
    reports = [run_suite(n, spec, args.seed, args.scale, solver) for n in names]
    _write("".join(r.to_text() for r in reports), args.out)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAIL


# figure

@dataclass(frozen=True)
class FigureSpec:
    z0: complex
    T_list: tuple
    show: frozenset = field(default_factory=lambda: frozenset(("region", "D1", "D2")))
    output: str = "-"
    size: int = 512

    def __post_init__(self):
        if not self.T_list:
            raise UsageError("T_list must be nonempty")
        unknown = set(self.show) - set(SHOW_FLAGS)
        if unknown:
            raise UsageError(f"unknown show flags {sorted(unknown)}")


def figure_panels():
    """The two standard panels: ``z0 = i/2`` for three times, ``z0 = 0`` with the extra disk."""
    left = FigureSpec(0.5j, (np.log(2), np.log(4), np.log(6)),
                      frozenset(("region", "D1", "D2", "gamma_labels")))
    right = FigureSpec(0j, (np.log(6),), frozenset(("region", "goryainov_disk", "gamma_labels")))
    return left, right


def _svg_open(size):
    v = VIEW
    return [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="{-v} {-v} {2 * v} {2 * v}">',
    ]


def _c(x):
    """Six decimals without a negative zero, for stable golden files."""
    return f"{round(float(x), 6) + 0.0:.6f}"


def _pt(z):
    # SVG's y axis points down
    return f"{_c(z.real)} {_c(-z.imag)}"


def _circle(centre, radius, stroke, width, dash=None, cls=None):
    extra = f' stroke-dasharray="{dash}"' if dash else ""
    extra += f' class="{cls}"' if cls else ""
    return (f'<circle cx="{_c(centre.real)}" cy="{_c(-centre.imag)}" r="{_c(radius)}" '
            f'fill="none" stroke="{stroke}" stroke-width="{width}"{extra}/>')


def region_outline(spec, n=720):
    """Closed boundary of the region in disk coordinates."""
    theta = np.linspace(0.0, 2 * np.pi, n, endpoint=False)
    return np.asarray(strip_map_inv(boundary_curve(spec, theta)))


def render_figure(fig):
    lines = _svg_open(fig.size)
    lines.append(_circle(0j, 1.0, "#000000", 0.004, cls="unit-circle"))
    for i, T in enumerate(fig.T_list):
        spec = RegionSpec.from_disk(fig.z0, T)
        colour = _PALETTE[i % len(_PALETTE)]
        if "region" in fig.show:
            pts = region_outline(spec)
            d = "M " + " L ".join(_pt(p) for p in pts) + " Z"
            lines.append(f'<path class="region" data-T="{T:.12g}" d="{d}" fill="{colour}" '
                         f'fill-opacity="0.15" stroke="{colour}" stroke-width="0.006"/>')
        d1, d2 = julia_disks(spec)
        if "D1" in fig.show and i == 0:
            c, r = julia_disk_circle(d1)
            lines.append(_circle(c, r, "#555555", 0.004, "0.02 0.015", cls="D1"))
        if "D2" in fig.show:
            c, r = julia_disk_circle(d2)
            lines.append(_circle(c, r, colour, 0.004, "0.02 0.015", cls="D2"))
        if "goryainov_disk" in fig.show:
            c, r = goryainov_disk_circle(T)
            lines.append(_circle(complex(c), r, "#7d3c98", 0.004, "0.006 0.012", cls="goryainov"))
        if "gamma_labels" in fig.show:
            w_minus, w_plus = omega_pm(spec)
            for label, zeta in (("ω+", w_plus), ("ω-", w_minus), ("ω0", omega0(spec))):
                z = strip_map_inv(zeta)
                lines.append(f'<circle cx="{_c(z.real)}" cy="{_c(-z.imag)}" r="0.012" fill="{colour}"/>')
                lines.append(f'<text x="{_c(z.real + 0.02)}" y="{_c(-z.imag - 0.02)}" '
                             f'font-size="0.06" fill="{colour}">{label}</text>')
    z = complex(fig.z0)
    if fig.show:
        lines.append(f'<circle class="base-point" cx="{_c(z.real)}" cy="{_c(-z.imag)}" r="0.012" fill="#000000"/>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def cmd_figure(args):
    if args.panel in ("left", "right"):
        left, right = figure_panels()
        fig = left if args.panel == "left" else right
        if args.size != fig.size:
            fig = FigureSpec(fig.z0, fig.T_list, fig.show, fig.output, args.size)
    else:
        if args.z0 is None or not args.T_list:
            raise UsageError("custom figures need --z0 and --T")
        show = frozenset(s for s in args.show.split(",") if s) if args.show is not None \
            else frozenset(("region", "D1", "D2"))
        fig = FigureSpec(args.z0, tuple(args.T_list), show, args.out or "-", args.size)
    _write(render_figure(fig), args.out)
    return EXIT_OK


# argument parsing

def _typed(fn):
    def wrap(text):
        try:
            return fn(text)
        except UsageError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None
    wrap.__name__ = fn.__name__
    return wrap


def build_parser():
    p = argparse.ArgumentParser(prog="valueregion", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, need_T=True, z0_default="0,0"):
        sp.add_argument("--z0", type=_typed(parse_z0), default=parse_z0(z0_default),
                        help="base point 're,im' in the unit disk")
        if need_T:
            sp.add_argument("--T", type=_typed(parse_T), required=True,
                            help="time, e.g. 1.5 or ln4")
        sp.add_argument("--out", default=None, help="output file (default stdout)")

    sp = sub.add_parser("region", help="boundary arcs as CSV")
    common(sp)
    sp.add_argument("--n", type=int, default=256)
    sp.set_defaults(func=cmd_region)

    sp = sub.add_parser("simulate", help="integrate a control schedule")
    common(sp)
    sp.add_argument("--schedule", default="automorphism",
                    help="automorphism, psizero-up, psizero-down, random:<seed> or a CSV file")
    sp.add_argument("--n", type=int, default=101, help="output samples")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--tol", type=float, default=1e-10)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("extremal", help="Pontryagin extremal to a boundary point")
    common(sp)
    sp.add_argument("--branch", choices=sorted(_EXTREMAL_BRANCHES), default="plus")
    sp.add_argument("--target", type=float, default=None, help="sin x2 at time T")
    sp.add_argument("--n", type=int, default=401)
    sp.add_argument("--tol", type=float, default=1e-10)
    sp.set_defaults(func=cmd_extremal)

    sp = sub.add_parser("slit", help="circular slit of the one-atom family")
    sp.add_argument("--C1", type=float, required=True)
    sp.add_argument("--C2", type=float, required=True)
    sp.add_argument("--T", type=_typed(parse_T), required=True)
    sp.add_argument("--n", type=int, default=50)
    sp.add_argument("--tol", type=float, default=1e-10)
    sp.add_argument("--format", choices=("csv", "svg"), default="csv")
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_slit)

    sp = sub.add_parser("verify", help="run verification suites")
    common(sp, z0_default="0,0.5")
    sp.add_argument("suite", choices=SUITES + ("all",))
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--scale", type=float, default=1.0, help="multiplier on sample counts")
    sp.add_argument("--tol", type=float, default=1e-10)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("figure", help="SVG of regions and horodisks")
    sp.add_argument("--panel", choices=("left", "right", "custom"), default="custom")
    sp.add_argument("--z0", type=_typed(parse_z0), default=None)
    sp.add_argument("--T", dest="T_list", type=_typed(parse_T), action="append", default=[],
                    help="repeat for several times")
    sp.add_argument("--show", default=None, help="comma list of " + ",".join(SHOW_FLAGS))
    sp.add_argument("--size", type=int, default=512)
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_figure)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"valueregion: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DomainError, IntegrationError) as exc:
        print(f"valueregion: error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
