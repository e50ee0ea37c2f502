"""Explicit Runge-Kutta integration for batches of real or complex states.

The integrators advance a whole array of independent states with one shared
step size and control the error in the max norm, so every component is held
to the requested tolerance (a mean-square norm would let one bad trajectory
hide behind many good ones).
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

__all__ = ["SolverConfig", "IntegrationError", "solve", "rk4_step"]


class IntegrationError(RuntimeError):
    """Raised when a trajectory leaves its domain or the step size collapses."""


@dataclass(frozen=True)
class SolverConfig:
    """Step and tolerance policy shared by every ODE operation.

    ``method`` is ``"dopri5"`` (adaptive embedded Dormand-Prince 5(4)) or
    ``"rk4-richardson"`` (fixed-step RK4 with local Richardson extrapolation,
    step ``fixed_step``).
    """

    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step: float = np.inf
    method: str = "dopri5"
    fixed_step: float = 1e-3

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be positive")
        if not self.max_step > 0:
            raise ValueError("max_step must be positive")
        if self.method not in ("dopri5", "rk4-richardson"):
            raise ValueError(f"unknown method {self.method!r}")
        if not self.fixed_step > 0:
            raise ValueError("fixed_step must be positive")

    def tightened(self, factor=0.5):
        """Same policy with both tolerances multiplied by ``factor``."""
        return SolverConfig(self.rel_tol * factor, self.abs_tol * factor,
                            self.max_step, self.method, self.fixed_step * factor)


# Dormand-Prince 5(4) tableau.
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640,
                -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4


def rk4_step(f, t, y, h):
    """One classical Runge-Kutta step of size ``h`` (may be negative)."""
    k1 = f(t, y)
    k2 = f(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = f(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = f(t + h, y + h * k3)
    return y + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def _dopri_step(f, t, y, h, k1):
    ks = [k1]
    for i in range(1, 7):
        dy = sum(a * k for a, k in zip(_A[i], ks) if a != 0.0)
        ks.append(f(t + _C[i] * h, y + h * dy))
    y_new = y + h * sum(b * k for b, k in zip(_B5, ks) if b != 0.0)
    err = h * sum(e * k for e, k in zip(_E, ks) if e != 0.0)
    return y_new, err, ks[6]


def _error_norm(err, y, y_new, cfg):
    scale = cfg.abs_tol + cfg.rel_tol * np.maximum(np.abs(y), np.abs(y_new))
    with np.errstate(invalid="ignore"):
        ratio = np.abs(err) / scale
    if ratio.size == 0:
        return 0.0
    worst = np.max(ratio)
    return np.inf if not np.isfinite(worst) else float(worst)


def solve(f: Callable, t0: float, t1: float, y0, cfg: Optional[SolverConfig] = None,
          t_eval=None, step_limit: Optional[Callable] = None,
          domain: Optional[Callable] = None):
    """Integrate ``dy/dt = f(t, y)`` from ``t0`` to ``t1``.

    Parameters
    ----------
    f : callable
        Right-hand side ``f(t, y)`` acting on the whole state array.
    y0 : array_like
        Initial state, any shape, real or complex.
    t_eval : array_like, optional
        Monotone times in ``[t0, t1]`` at which to report the state. Steps are
        clipped so these times are hit exactly. Defaults to every accepted step.
    step_limit : callable, optional
        ``step_limit(t, y) -> float``; an extra cap on the step size near
        stiff regions.
    domain : callable, optional
        ``domain(y) -> bool``; a step landing outside is rejected and retried
        with a smaller step.

    Returns
    -------
    ts : ndarray
    ys : ndarray of shape ``(len(ts),) + y0.shape``
    """
    cfg = cfg or SolverConfig()
    y = np.array(y0, dtype=np.result_type(np.asarray(y0).dtype, float), copy=True)
    t0 = float(t0)
    t1 = float(t1)
    span = t1 - t0
    if span == 0.0:
        return np.array([t0]), y[None].copy()
    direction = 1.0 if span > 0 else -1.0

    if t_eval is None:
        stops = np.array([t1])
        record_all = True
    else:
        stops = np.asarray(t_eval, dtype=float)
        if np.any(direction * np.diff(stops) < 0):
            raise ValueError("t_eval must be monotone in the integration direction")
        if np.any(direction * (stops - t0) < 0) or np.any(direction * (stops - t1) > 0):
            raise ValueError("t_eval outside the integration interval")
        record_all = False

    ts = [t0]
    ys = [y.copy()]
    if not record_all and stops.size and stops[0] == t0:
        stop_idx = 1
    else:
        stop_idx = 0
        if not record_all:
            ts, ys = [], []

    if cfg.method == "rk4-richardson":
        return _solve_rk4(f, t0, y, stops, stop_idx, record_all, ts, ys, cfg,
                          direction, domain)

    t = t0
    k1 = np.asarray(f(t, y))
    h = min(cfg.max_step, 0.01 * abs(span), 0.05)
    h_min = 1e-14 * max(1.0, abs(t0), abs(t1))
    n_reject = 0
    final = stops[-1] if stops.size else t1
    while stop_idx < stops.size and direction * (final - t) > 0:
        target = stops[stop_idx]
        h_cap = cfg.max_step
        if step_limit is not None:
            h_cap = min(h_cap, step_limit(t, y))
        h = min(h, h_cap)
        remaining = abs(target - t)
        hits_stop = h >= remaining * (1 - 1e-12)
        if hits_stop:
            h = remaining
        y_new, err, k_last = _dopri_step(f, t, y, direction * h, k1)
        err_norm = _error_norm(err, y, y_new, cfg)
        if domain is not None and err_norm <= 1.0 and not domain(y_new):
            err_norm = np.inf
        if err_norm <= 1.0:
            t = target if hits_stop else t + direction * h
            y = y_new
            k1 = k_last
            n_reject = 0
            if record_all or hits_stop:
                ts.append(t)
                ys.append(y.copy())
            if hits_stop:
                stop_idx += 1
            factor = 5.0 if err_norm == 0 else min(5.0, max(0.2, 0.9 * err_norm ** -0.2))
            if not hits_stop or factor < 1.0:
                h = h * factor
        else:
            n_reject += 1
            factor = 0.2 if not np.isfinite(err_norm) else max(0.1, 0.9 * err_norm ** -0.25)
            h = h * factor
            if h < h_min or n_reject > 60:
                raise IntegrationError(
                    f"step size collapsed at t={t:.17g} (h={h:.3g}); "
                    "state probably left its domain")
    return np.array(ts), np.array(ys)


def _solve_rk4(f, t0, y, stops, stop_idx, record_all, ts, ys, cfg, direction,
               domain):
    t = t0
    final = stops[-1] if stops.size else t0
    h_nominal = min(cfg.fixed_step, cfg.max_step)
    while stop_idx < stops.size and direction * (final - t) > 0:
        target = stops[stop_idx]
        remaining = abs(target - t)
        h = min(h_nominal, remaining)
        hits_stop = h >= remaining * (1 - 1e-12)
        if hits_stop:
            h = remaining
        hs = direction * h
        coarse = rk4_step(f, t, y, hs)
        half = rk4_step(f, t, y, 0.5 * hs)
        fine = rk4_step(f, t + 0.5 * hs, half, 0.5 * hs)
        y = fine + (fine - coarse) / 15.0
        if not np.all(np.isfinite(y)) or (domain is not None and not domain(y)):
            raise IntegrationError(f"state left its domain near t={t:.17g}")
        t = target if hits_stop else t + hs
        if record_all or hits_stop:
            ts.append(t)
            ys.append(y.copy())
        if hits_stop:
            stop_idx += 1
    return np.array(ts), np.array(ys)
