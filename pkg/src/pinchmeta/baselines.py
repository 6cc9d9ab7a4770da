"""Non-meta baselines and the minimum-power search.

Every solver works on a fixed set of Monte Carlo disk draws (common random
numbers), so the feasible region it sees is a deterministic function of its
stream.

For a fixed antenna position the outage constraint on n draws is met exactly
when at most floor(eps * n) draws have SNR below the threshold. That makes the
least feasible power an order statistic of the squared distances, which the
solver computes directly. The secrecy constraint is then met by a safeguarded
Newton/bisection search on log P.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from . import kernels
from .channel import ControlDecision, WaveguideGeometry
from .errors import DomainError
from .meta import inner_adapt
from .policy import PolicyObjective, init_params
from .stochastic import DiskDraws
from .tasks import PilotSet, Task


class BaselineKind(enum.Enum):
    CONVENTIONAL_OPT = "conventional_opt"
    STATIC_ANTENNA = "static_antenna"
    POWER_ONLY = "power_only"
    SCRATCH_LEARNER = "scratch_learner"


@dataclass(frozen=True)
class BaselineSettings:
    n_mc: int = 10_000
    starts: int = 16
    max_iter: int = 60
    static_x: float | None = None  # None -> L/2
    static_power: float | None = None  # None -> P_max
    power_only_x: float | None = None  # None -> L/2
    bisect_rtol: float = 1e-6
    outage_target: float | None = None  # None -> task.req.epsilon


class PowerPoint(NamedTuple):
    power_w: float
    feasible: bool
    merit: float
    dmerit_dx: float


class MinPowerSolver:
    """Least power meeting outage and average-secrecy constraints at given x_pa."""

    def __init__(self, task: Task, draws: DiskDraws, epsilon: float | None = None,
                 rtol: float = 1e-10):
        self.task = task
        self.px, self.py = draws.points(task.disk)
        self.n = self.px.shape[0]
        self.d2 = task.geom.height_d**2
        self.k0 = task.env.gain_to_snr
        self.gamma_th = 2.0**task.req.r_th - 1.0
        eps = task.req.epsilon if epsilon is None else epsilon
        self.allowed = int(math.floor(eps * self.n + 1e-9))
        self.r_sec = task.req.r_sec
        self.p_max = task.req.p_max
        self.rtol = rtol
        self.evaluations = 0

    def outage_count(self, x, power):
        return kernels.outage_count(self.px, self.py, x, self.d2, power * self.k0, self.gamma_th)

    def outage_power(self, x):
        """(least P with outage count <= allowed, d log P / dx)."""
        if self.gamma_th <= 0.0 or self.allowed >= self.n:
            return 0.0, 0.0
        value, j = kernels.kth_largest_dist2(self.px, self.py, x, self.d2, self.allowed + 1)
        power = self.gamma_th * value / self.k0
        # rounding can leave the boundary draw a hair under the threshold
        for _ in range(64):
            if self.outage_count(x, power) <= self.allowed:
                break
            power = math.nextafter(power, math.inf) * (1.0 + 1e-15)
        return power, -2.0 * (self.px[j] - x) / value

    def secrecy(self, x, power):
        e = self.task.eve
        return kernels.secrecy_value_grad(self.px, self.py, e[0], e[1], x, self.d2, self.k0, power)

    def _secrecy_root(self, x, p_lo):
        """Least P in (p_lo, p_max] with h(P) >= r_sec, given h(p_lo) < r_sec <= h(p_max)."""
        lo = math.log(max(p_lo, self.p_max * 1e-18))
        hi = math.log(self.p_max)
        s = 0.5 * (lo + hi)
        for _ in range(200):
            h, h_p, _ = self.secrecy(x, math.exp(s))
            f = h - self.r_sec
            if f >= 0.0:
                hi = s
            else:
                lo = s
            if hi - lo <= self.rtol:
                break
            slope = h_p * math.exp(s)
            s_new = s - f / slope if slope > 0 else 0.5 * (lo + hi)
            if not (lo < s_new < hi):
                s_new = 0.5 * (lo + hi)
            elif abs(s_new - s) < 0.5 * self.rtol:
                # Newton has converged from one side; probe just across the root
                s_new = hi - 0.5 * self.rtol if f >= 0.0 else lo + 0.5 * self.rtol
            s = s_new
        return math.exp(hi)

    def evaluate(self, x) -> PowerPoint:
        """Least feasible power at x, and a merit (log power when feasible).

        Infeasible positions get merit log(P_max) + 1 + violation, so any
        feasible position beats every infeasible one.
        """
        self.evaluations += 1
        p_out, dlog_out = self.outage_power(x)
        h, h_p, h_x = self.secrecy(x, p_out) if p_out > 0 else (0.0, 0.0, 0.0)
        if p_out <= self.p_max:
            if h >= self.r_sec:
                return PowerPoint(p_out, True, math.log(max(p_out, 1e-300)), dlog_out)
            h_m, _, hx_m = self.secrecy(x, self.p_max)
            if h_m >= self.r_sec:
                p = self._secrecy_root(x, p_out)
                _, hp_r, hx_r = self.secrecy(x, p)
                dlog = -hx_r / (hp_r * p) if hp_r > 0 else 0.0
                return PowerPoint(p, True, math.log(p), dlog)
            deficit, ddef = self.r_sec - h_m, -hx_m
        else:
            h_m, _, hx_m = self.secrecy(x, self.p_max)
            deficit, ddef = max(self.r_sec - h_m, 0.0), (-hx_m if h_m < self.r_sec else 0.0)
        excess = max(math.log(p_out / self.p_max), 0.0) if p_out > 0 else 0.0
        merit = math.log(self.p_max) + 1.0 + excess + deficit
        dmerit = (dlog_out if excess > 0 else 0.0) + ddef
        return PowerPoint(self.p_max, False, merit, dmerit)


def _bracket(solver, a, pa, b, pb, x_tol):
    """Bisect on the sign of the merit slope between a and b; keep the best point seen."""
    best = (a, pa) if pa.merit <= pb.merit else (b, pb)
    while abs(b - a) > x_tol:
        m = 0.5 * (a + b)
        pm = solver.evaluate(m)
        if pm.merit < best[1].merit:
            best = (m, pm)
        if pm.dmerit_dx == 0.0:
            break
        if (pm.dmerit_dx > 0.0) == (pb.dmerit_dx > 0.0):
            b, pb = m, pm
        else:
            a, pa = m, pm
    return best


def _pgd(solver: MinPowerSolver, x0, length, max_iter, x_tol=1e-6):
    """Projected gradient descent on the merit.

    Barzilai-Borwein step lengths with Armijo backtracking. The merit is
    piecewise smooth (the order statistic switches draws), so descent tends to
    zigzag across a kink; as soon as a trial point flips the slope sign the
    minimizer is bracketed and located by slope-sign bisection to ``x_tol``.
    """
    x = x0
    pt = solver.evaluate(x)
    eta = 1.0
    for _ in range(max_iter):
        if pt.dmerit_dx == 0.0:
            break
        x_new = min(max(x - eta * pt.dmerit_dx, 0.0), length)
        if abs(x_new - x) < x_tol:
            break
        new = solver.evaluate(x_new)
        if new.dmerit_dx * pt.dmerit_dx < 0.0:
            return _bracket(solver, x, pt, x_new, new, x_tol)
        if new.merit <= pt.merit + 1e-4 * pt.dmerit_dx * (x_new - x):
            s_k, y_k = x_new - x, new.dmerit_dx - pt.dmerit_dx
            eta = min(max(s_k / y_k, 1e-6), 1e3) if s_k * y_k > 0 else min(eta * 2.0, 1e3)
            x, pt = x_new, new
        else:
            eta *= 0.25
    return x, pt


def _rank(pt: PowerPoint, idx: int):
    return (not pt.feasible, pt.merit, idx)


def conventional_optimize(task: Task, settings: BaselineSettings = BaselineSettings(),
                          rng=None, draws: DiskDraws | None = None) -> ControlDecision:
    """Minimum-power decision with full knowledge of the uncertainty model.

    Multi-start projected gradient descent over x_pa, each point scored by the
    least power meeting the Monte Carlo outage constraint and the expected
    secrecy constraint. Ties break on start index.
    """
    if draws is None:
        if rng is None:
            raise DomainError("conventional_optimize needs rng or draws")
        draws = DiskDraws.generate(settings.n_mc, rng)
    solver = MinPowerSolver(task, draws, settings.outage_target)
    length = task.geom.length_L
    starts = np.linspace(0.0, length, settings.starts) if settings.starts > 1 else [length / 2]
    best = None
    for idx, x0 in enumerate(starts):
        x, pt = _pgd(solver, float(x0), length, settings.max_iter)
        if best is None or _rank(pt, idx) < _rank(best[1], best[2]):
            best = (x, pt, idx)
    x, pt, _ = best
    return ControlDecision(float(x), float(pt.power_w), pt.feasible)


def static_decision(geom: WaveguideGeometry, p_max: float,
                    settings: BaselineSettings = BaselineSettings()) -> ControlDecision:
    """Fixed antenna and fixed power, independent of the task."""
    x = geom.length_L / 2.0 if settings.static_x is None else settings.static_x
    p = p_max if settings.static_power is None else settings.static_power
    return ControlDecision(float(x), float(p))


def power_only(task: Task, settings: BaselineSettings = BaselineSettings(), rng=None,
               draws: DiskDraws | None = None) -> ControlDecision:
    """Antenna held at the static position; power from the same min-power search."""
    if draws is None:
        if rng is None:
            raise DomainError("power_only needs rng or draws")
        draws = DiskDraws.generate(settings.n_mc, rng)
    x = task.geom.length_L / 2.0 if settings.power_only_x is None else settings.power_only_x
    pt = MinPowerSolver(task, draws, settings.outage_target).evaluate(x)
    return ControlDecision(float(x), pt.power_w, pt.feasible)


def scratch_learner(task: Task, pilots: PilotSet, alpha: float, steps: int, seed: int,
                    objective: PolicyObjective | None = None) -> ControlDecision:
    """Same loss and update rule as the meta methods, from a fresh random init."""
    if steps < 1:
        raise DomainError("scratch learner needs at least one step")
    objective = objective or PolicyObjective()
    theta = init_params(objective.spec, seed)
    theta = inner_adapt(theta, task, pilots, alpha, steps, objective)
    return objective.decision(theta, task)


class MinPower(NamedTuple):
    power_w: float
    feasible: bool
    x_pa: float


def min_power_at(x_pa: float, task: Task, target_outage: float, draws: DiskDraws,
                 rtol: float = 1e-6) -> MinPower:
    """Bisection on log P for the least power with outage <= target_outage.

    Stops when hi/lo <= 1 + rtol and returns hi, so P*(1 - 2*rtol) is
    guaranteed infeasible on the same draws.
    """
    px, py = draws.points(task.disk)
    d2 = task.geom.height_d**2
    k0 = task.env.gain_to_snr
    gamma_th = 2.0**task.req.r_th - 1.0
    p_max = task.req.p_max
    allowed = target_outage * px.shape[0]

    def ok(p):
        return kernels.outage_count(px, py, x_pa, d2, p * k0, gamma_th) <= allowed + 1e-9

    if ok(0.0):
        return MinPower(0.0, True, x_pa)
    if not ok(p_max):
        return MinPower(p_max, False, x_pa)
    lo, hi = p_max * 1e-18, p_max
    if ok(lo):
        return MinPower(lo, True, x_pa)
    while hi / lo > 1.0 + rtol:
        mid = math.sqrt(lo * hi)
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return MinPower(hi, True, x_pa)


def min_power_for_reliability(scheme, task: Task, one_minus_eps: float,
                              settings: BaselineSettings = BaselineSettings(), rng=None,
                              draws: DiskDraws | None = None) -> MinPower:
    """Least power reaching reliability 1 - eps at the scheme's antenna position.

    ``scheme`` is either an x_pa value or a callable ``(task, target_outage)
    -> ControlDecision`` whose x_pa is used.
    """
    if not (0.0 < one_minus_eps < 1.0):
        raise DomainError("target reliability must lie in (0, 1)")
    if draws is None:
        if rng is None:
            raise DomainError("min_power_for_reliability needs rng or draws")
        draws = DiskDraws.generate(settings.n_mc, rng)
    target = 1.0 - one_minus_eps
    if callable(scheme):
        x_pa = scheme(task, target).x_pa
    else:
        x_pa = float(scheme)
    return min_power_at(x_pa, task, target, draws, settings.bisect_rtol)


SchemeFn = Callable[[Task, float], ControlDecision]
