"""Regularized Newton-type flow for fixed a.

Integrates  v' = -(F'(v) + aI)^-1 [F(v) + a v - h]  with an adaptive
embedded Dormand-Prince 4(5) pair.  Along the exact flow the residual
norm g(t) = ||F(v)+av-h|| obeys g(t) = g(0) e^-t regardless of F, the
velocity obeys ||v'|| <= (g(0)/a) e^-t, and the tail obeys
||v(t)-v(inf)|| <= (g(0)/a) e^-t.  The verifiers below check a computed
trace against all three laws, so integrator error is directly visible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np

from .gallery import Operator, evaluate, jacobian
from .linalg import SingularSystemError, solve_regularized
from .validation import ValidatorReport

__all__ = [
    "FlowConfig",
    "FlowTrace",
    "RegularizedSolution",
    "MonotoneBoundError",
    "residual",
    "dsm_rhs",
    "integrate_flow",
    "verify_decay",
    "verify_vdot_bound",
    "verify_tail_bound",
    "check_uniqueness",
    "trace_to_csv",
    "trace_from_csv",
    "TRACE_CSV_HEADER",
]

TRACE_CSV_HEADER = "t,g,g_theory,vdot_norm,vdot_bound,step_size"


class MonotoneBoundError(ArithmeticError):
    """||v'|| exceeded g/a: the operator is not monotone at this point."""


@dataclass(frozen=True)
class FlowConfig:
    ode_rel_tol: float = 1e-8  # local error per unit time, relative to max(||v||, 1)
    residual_tol: float = 1e-10
    max_time: Optional[float] = None  # None: ln(g0/residual_tol) + 5
    initial_step: float = 1e-2
    min_step: float = 1e-12
    max_step: float = 1.0

    def __post_init__(self):
        if not (0 < self.min_step <= self.initial_step <= self.max_step):
            raise ValueError("need 0 < min_step <= initial_step <= max_step")
        if self.ode_rel_tol <= 0 or self.residual_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_time is not None and self.max_time <= 0:
            raise ValueError("max_time must be positive")


@dataclass
class FlowTrace:
    a: float
    g0: float
    ode_rel_tol: float
    # rows (t, g, g_theory, vdot_norm, vdot_bound, step_size), one per accepted step
    records: list[tuple[float, float, float, float, float, float]] = field(default_factory=list)
    states: list[np.ndarray] = field(default_factory=list)  # v(t) per record, not serialized
    terminated_by: str = "max_time_reached"

    def append(self, t: float, v: np.ndarray, g: float, vdot_norm: float, step: float):
        g_theory = self.g0 * math.exp(-t)
        vdot_bound = self.g0 / self.a * math.exp(-t)
        self.records.append((t, g, g_theory, vdot_norm, vdot_bound, step))
        self.states.append(v.copy())


@dataclass(frozen=True)
class RegularizedSolution:
    a: float
    u_a: np.ndarray
    residual: float
    trace: FlowTrace

    @property
    def converged(self) -> bool:
        return self.trace.terminated_by == "residual_tol_reached"


def residual(op: Operator, a: float, h, v) -> float:
    """||F(v) + a v - h||."""
    if a <= 0:
        raise ValueError("regularization parameter a must be positive")
    h = np.asarray(h, dtype=float)
    v = np.asarray(v, dtype=float)
    return float(np.linalg.norm(evaluate(op, v) + a * v - h))


def dsm_rhs(op: Operator, a: float, h, v) -> np.ndarray:
    """-(F'(v) + aI)^-1 [F(v) + a v - h], with the velocity bound asserted."""
    if a <= 0:
        raise ValueError("regularization parameter a must be positive")
    h = np.asarray(h, dtype=float)
    v = np.asarray(v, dtype=float)
    r = evaluate(op, v) + a * v - h
    w = -solve_regularized(jacobian(op, v), a, r)
    g = float(np.linalg.norm(r))
    wnorm = float(np.linalg.norm(w))
    if wnorm > (g / a) * (1.0 + 1e-6) + 1e-300:
        raise MonotoneBoundError(
            f"||v'|| = {wnorm:.6e} > g/a = {g / a:.6e} at a flow point; "
            f"{op.name} is not monotone there"
        )
    return w


# Dormand-Prince 4(5) tableau; 5th-order solution propagated, FSAL
_DP_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_DP_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_DP_B5 = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
_DP_B4 = (5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40)
_DP_E = tuple(b5 - b4 for b5, b4 in zip(_DP_B5, _DP_B4))
_DP_A_ARR = [np.array(row) for row in _DP_A]
_DP_B5_ARR = np.array(_DP_B5)
_DP_E_ARR = np.array(_DP_E)

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0
# landing margin past the predicted time-to-tolerance, so the final
# accepted step ends just below residual_tol
_LANDING = 0.05


@lru_cache(maxsize=None)
def _decay_step_cap(rel_tol: float) -> float:
    """Largest h with |R(-h) - e^-h| <= rel_tol * h, R the 5th-order stability fn.

    The residual vector contracts exactly like e^-t along the flow, so an
    accepted step multiplies it by R(-h).  The embedded error estimate shrinks
    with the residual, so late in the flow it stops constraining the step and
    the controller would otherwise grow h to max_step, where the per-step
    relative defect |R(-h) - e^-h| dwarfs rel_tol.  Capping h here keeps the
    relative residual drift at rel_tol per unit time over the whole trace.
    """

    def defect(hh: float) -> float:
        k = np.empty(7)
        for i in range(7):
            k[i] = -(1.0 + hh * float(_DP_A_ARR[i] @ k[:i]))
        ratio = 1.0 + hh * float(_DP_B5_ARR @ k)
        return abs(ratio - math.exp(-hh)) - rel_tol * hh

    lo, hi = 1e-3, 1e-3
    while defect(hi) < 0.0 and hi < 16.0:
        lo, hi = hi, 2.0 * hi
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if defect(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return lo


def integrate_flow(
    op: Operator, a: float, h, v0, cfg: FlowConfig
) -> RegularizedSolution:
    """Follow the flow from v0 until g <= residual_tol or the horizon.

    Accepted steps land exactly on t = 1 when the flow crosses it, so a
    trace record at t = 1 is always available for the decay-law check.
    """
    h_vec = np.asarray(h, dtype=float)
    v = np.asarray(v0, dtype=float).copy()
    rhs = lambda x: dsm_rhs(op, a, h_vec, x)

    g = residual(op, a, h_vec, v)
    trace = FlowTrace(a=a, g0=g, ode_rel_tol=cfg.ode_rel_tol)
    max_time = cfg.max_time
    if max_time is None:
        max_time = math.log(max(g, cfg.residual_tol) / cfg.residual_tol) + 5.0 if g > cfg.residual_tol else 1.0

    try:
        k1 = rhs(v)
    except SingularSystemError:
        trace.append(0.0, v, g, float("nan"), 0.0)
        trace.terminated_by = "solver_error"
        return RegularizedSolution(a=a, u_a=v, residual=g, trace=trace)

    trace.append(0.0, v, g, float(np.linalg.norm(k1)), 0.0)
    if g <= cfg.residual_tol:
        trace.terminated_by = "residual_tol_reached"
        return RegularizedSolution(a=a, u_a=v, residual=g, trace=trace)

    t = 0.0
    step = cfg.initial_step
    err_prev = 1.0
    n = v.shape[0]
    step_cap = min(cfg.max_step, _decay_step_cap(cfg.ode_rel_tol))
    while True:
        # clamp the attempted step: global cap, horizon, t=1 checkpoint,
        # and the predicted landing time ln(g/tol) + margin
        step = min(step, step_cap, max_time - t)
        if t < 1.0 < t + step:
            step = 1.0 - t
        t_land = math.log(g / cfg.residual_tol) + _LANDING
        if t_land > 0:
            step = min(step, t_land)
        if step < cfg.min_step:
            trace.terminated_by = "step_underflow"
            break

        try:
            k = np.empty((7, n))
            k[0] = k1
            for i in range(1, 7):
                vi = v + step * (_DP_A_ARR[i] @ k[:i])
                k[i] = rhs(vi)
            v5 = v + step * (_DP_B5_ARR @ k)
            err_vec = step * (_DP_E_ARR @ k)
        except SingularSystemError:
            trace.terminated_by = "solver_error"
            break

        scale = cfg.ode_rel_tol * step * max(float(np.linalg.norm(v5)), 1.0)
        err = float(np.linalg.norm(err_vec)) / scale
        if err <= 1.0:
            t += step
            v = v5
            g = residual(op, a, h_vec, v)
            k1 = k[6]  # FSAL: stage 7 is the rhs at the accepted point
            trace.append(t, v, g, float(np.linalg.norm(k1)), step)
            # PI controller (order-5 exponents)
            err = max(err, 1e-10)
            factor = _SAFETY * err ** -0.14 * err_prev**0.08
            err_prev = err
            step *= min(_MAX_FACTOR, max(_MIN_FACTOR, factor))
            if g <= cfg.residual_tol:
                trace.terminated_by = "residual_tol_reached"
                break
            if t >= max_time - 1e-14:
                trace.terminated_by = "max_time_reached"
                break
        else:
            step *= max(_MIN_FACTOR, _SAFETY * err**-0.2)

    return RegularizedSolution(a=a, u_a=v, residual=g, trace=trace)


def verify_decay(trace: FlowTrace, tol_factor: float = 100.0) -> ValidatorReport:
    """Check |g(t) - g0 e^-t| <= tol_factor * ode_rel_tol * g0 on every record."""
    if not trace.records:
        raise ValueError("empty trace")
    budget = tol_factor * trace.ode_rel_tol * trace.g0
    worst = 0.0
    for t, g, g_theory, *_ in trace.records:
        dev = abs(g - g_theory) / budget
        worst = max(worst, dev)
    return ValidatorReport(
        passed=worst <= 1.0, samples_checked=len(trace.records), worst_value=worst
    )


def verify_vdot_bound(trace: FlowTrace, slack: float = 1e-6) -> ValidatorReport:
    """Check ||v'|| <= (g0/a) e^-t (1+slack) on every record."""
    if not trace.records:
        raise ValueError("empty trace")
    worst = 0.0
    for _, _, _, vdot_norm, vdot_bound, _ in trace.records:
        worst = max(worst, vdot_norm / vdot_bound)
    return ValidatorReport(
        passed=worst <= 1.0 + slack, samples_checked=len(trace.records), worst_value=worst
    )


def verify_tail_bound(
    op: Operator, a: float, h, trace: FlowTrace, u_a, slack: float = 1e-3
) -> ValidatorReport:
    """Check ||v(t) - u_a|| <= (g0/a) e^-t (1+slack), u_a standing in for v(inf)."""
    if not trace.records or len(trace.states) != len(trace.records):
        raise ValueError("trace must carry states (not available after CSV round-trip)")
    u_a = np.asarray(u_a, dtype=float)
    worst = 0.0
    for (t, *_), v in zip(trace.records, trace.states):
        bound = trace.g0 / a * math.exp(-t)
        worst = max(worst, float(np.linalg.norm(v - u_a)) / bound)
    return ValidatorReport(
        passed=worst <= 1.0 + slack, samples_checked=len(trace.records), worst_value=worst
    )


def check_uniqueness(
    op: Operator, a: float, h, starts, cfg: FlowConfig
) -> ValidatorReport:
    """Flow from several starts; all limits must agree within 10*residual_tol/a."""
    if len(starts) < 2:
        raise ValueError("need at least 2 starts")
    sols = []
    for v0 in starts:
        sol = integrate_flow(op, a, h, v0, cfg)
        if not sol.converged:
            return ValidatorReport(
                passed=False,
                samples_checked=len(sols),
                worst_value=float("inf"),
                witness=(np.asarray(v0, dtype=float), sol.u_a),
                evidence={},
            )
        sols.append(sol.u_a)
    worst = 0.0
    pair = (sols[0], sols[1])
    for i in range(len(sols)):
        for j in range(i + 1, len(sols)):
            d = float(np.linalg.norm(sols[i] - sols[j]))
            if d > worst:
                worst = d
                pair = (sols[i], sols[j])
    tol = 10.0 * cfg.residual_tol / a
    return ValidatorReport(
        passed=worst <= tol,
        samples_checked=len(starts),
        worst_value=worst,
        witness=None if worst <= tol else pair,
    )


def trace_to_csv(trace: FlowTrace, path) -> None:
    lines = [TRACE_CSV_HEADER]
    for rec in trace.records:
        lines.append(",".join(f"{x:.17g}" for x in rec))
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def trace_from_csv(path, a: float, ode_rel_tol: float = 1e-8) -> FlowTrace:
    """Rebuild a trace (without states) from its CSV serialization."""
    with open(path) as f:
        header = f.readline().strip()
        if header != TRACE_CSV_HEADER:
            raise ValueError(f"unexpected trace header {header!r}")
        records = []
        for line in f:
            line = line.strip()
            if not line:
                continue
            vals = tuple(float(x) for x in line.split(","))
            if len(vals) != 6:
                raise ValueError(f"malformed trace row {line!r}")
            records.append(vals)
    if not records:
        raise ValueError("empty trace file")
    return FlowTrace(
        a=a, g0=records[0][1], ode_rel_tol=ode_rel_tol, records=records, states=[]
    )
