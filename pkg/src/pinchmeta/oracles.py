"""Independent reference computations and the bundled oracle checks.

Nothing here goes through :mod:`pinchmeta.kernels`: disk expectations use a
deterministic polar midpoint rule written directly on the channel formulas,
gradients are checked against central finite differences, and the meta
updates against closed forms on analytic stubs.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .baselines import BaselineSettings, conventional_optimize
from .channel import ControlDecision, Vec3
from .meta import MetaConfig, maml_task_gradient
from .policy import GradResult, PolicyObjective, fd_hvp, init_params
from .rng import RngStream
from .stochastic import (
    DiskDraws,
    UncertaintyDisk,
    outage_from_points,
    secrecy_from_points,
)
from .tasks import LossWeights, Requirements, Task, TaskDistribution, sample_task, simulate_pilots

# ---------------------------------------------------------------------------
# disk quadrature


def polar_grid(disk: UncertaintyDisk, n_rho: int = 400, n_phi: int = 400):
    """Midpoint nodes and normalized area weights over the disk."""
    r = disk.radius_m
    if r == 0.0:
        return np.array([disk.center[0]]), np.array([disk.center[1]]), np.array([1.0])
    rho = (np.arange(n_rho) + 0.5) / n_rho * r
    phi = (np.arange(n_phi) + 0.5) / n_phi * 2.0 * np.pi
    rr, pp = np.meshgrid(rho, phi, indexing="ij")
    w = np.broadcast_to(rho[:, None], rr.shape).ravel()
    w = w / w.sum()
    return (disk.center[0] + (rr * np.cos(pp)).ravel(),
            disk.center[1] + (rr * np.sin(pp)).ravel(), w)


def _rates_at(decision, px, py, env, geom):
    dist2 = (px - decision.x_pa) ** 2 + py**2 + geom.height_d**2
    gain = env.wavelength_m**2 / ((4.0 * np.pi) ** 2 * dist2)
    return np.log2(1.0 + decision.power_w * gain / env.noise_power_w)


def _eve_rate(decision, eve, env, geom):
    return float(_rates_at(decision, np.array([eve[0]]), np.array([eve[1]]), env, geom)[0])


def quad_outage(decision, disk, env, geom, r_th, n_rho=400, n_phi=400) -> float:
    px, py, w = polar_grid(disk, n_rho, n_phi)
    return float(np.sum(w * (_rates_at(decision, px, py, env, geom) < r_th)))


def quad_secrecy(decision, disk, eve, env, geom, n_rho=400, n_phi=400, clipped=False) -> float:
    px, py, w = polar_grid(disk, n_rho, n_phi)
    gap = _rates_at(decision, px, py, env, geom) - _eve_rate(decision, eve, env, geom)
    if clipped:
        gap = np.maximum(gap, 0.0)
    return float(np.sum(w * gap))


def quad_secrecy_outage(decision, disk, eve, env, geom, r_sec, n_rho=400, n_phi=400) -> float:
    px, py, w = polar_grid(disk, n_rho, n_phi)
    gap = _rates_at(decision, px, py, env, geom) - _eve_rate(decision, eve, env, geom)
    return float(np.sum(w * (np.maximum(gap, 0.0) < r_sec)))


def quad_mean_rate(decision, disk, env, geom, n_rho=400, n_phi=400) -> float:
    px, py, w = polar_grid(disk, n_rho, n_phi)
    return float(np.sum(w * _rates_at(decision, px, py, env, geom)))


def quad_hinge_loss(decision, task: Task, weights: LossWeights, n_rho=400, n_phi=400) -> float:
    """Disk expectation of outage hinge + lambda * secrecy hinge (no power term)."""
    px, py, w = polar_grid(task.disk, n_rho, n_phi)
    r_user = _rates_at(decision, px, py, task.env, task.geom)
    r_eve = _eve_rate(decision, task.eve, task.env, task.geom)
    h = np.maximum(task.req.r_th - r_user, 0.0) + weights.lambda_sec * np.maximum(
        task.req.r_sec - (r_user - r_eve), 0.0)
    return float(np.sum(w * h))


def closed_form_power(task: Task, x_pa: float) -> float:
    """Power putting the rate at the estimated position exactly on r_th."""
    dist2 = (task.user_est[0] - x_pa) ** 2 + task.user_est[1] ** 2 + task.geom.height_d**2
    gain = task.env.wavelength_m**2 / ((4.0 * math.pi) ** 2 * dist2)
    return task.env.noise_power_w * (2.0**task.req.r_th - 1.0) / gain


# ---------------------------------------------------------------------------
# analytic stubs for the meta-learning updates


class QuadraticStub:
    """L(theta) = c/2 * |theta|^2, ignoring task and pilots."""

    def __init__(self, c: float):
        self.c = float(c)

    def loss_and_grad(self, theta, task=None, pilots=None):
        theta = np.asarray(theta, dtype=np.float64)
        return GradResult(0.5 * self.c * float(theta @ theta), self.c * theta)

    def hvp(self, theta, v, task=None, pilots=None, eps=None):
        return fd_hvp(lambda th: self.loss_and_grad(th).grad, theta, v, eps)

    def sample_pilots(self, task, n, rng):
        return None


class QuarticStub(QuadraticStub):
    """L(theta) = 1/4 * sum theta^4; exact Hessian diag(3 theta^2)."""

    def loss_and_grad(self, theta, task=None, pilots=None):
        theta = np.asarray(theta, dtype=np.float64)
        return GradResult(0.25 * float(np.sum(theta**4)), theta**3)

    def exact_hvp(self, theta, v):
        return 3.0 * np.asarray(theta) ** 2 * np.asarray(v)


# ---------------------------------------------------------------------------
# finite differences and hinge kinks


def reference_policy_loss(theta, objective: PolicyObjective, task: Task, pilots) -> np.longdouble:
    """Policy loss recomputed in extended precision from the channel formulas.

    Independent of the kernels; long double keeps the roundoff of a
    step-1e-5 central difference well below the 1e-5 relative target.
    """
    ld = np.longdouble
    th = np.asarray(theta, dtype=ld)
    a = objective.features(task).astype(ld)
    sizes = [int(v) for v in objective.spec.sizes]
    p = 0
    for k, (nin, nout) in enumerate(zip(sizes[:-1], sizes[1:])):
        w = th[p:p + nin * nout].reshape(nout, nin)
        b = th[p + nin * nout:p + nin * nout + nout]
        p += nin * nout + nout
        z = w @ a + b
        a = np.tanh(z) if k < len(sizes) - 2 else z
    s = 1 / (1 + np.exp(-a))
    x = ld(task.geom.length_L) * s[0]
    power = ld(task.req.p_max) * s[1]
    k0 = ld(task.env.wavelength_m) ** 2 / ((4 * ld(np.pi)) ** 2 * ld(task.env.noise_power_w))
    d2 = ld(task.geom.height_d) ** 2

    def rate_at(ux, uy):
        return np.log1p(power * k0 / ((ux - x) ** 2 + uy**2 + d2)) / np.log(ld(2))

    r_user = rate_at(np.asarray(pilots.px, dtype=ld), np.asarray(pilots.py, dtype=ld))
    r_eve = rate_at(ld(task.eve[0]), ld(task.eve[1]))
    hinge = np.maximum(ld(task.req.r_th) - r_user, 0) + ld(objective.weights.lambda_sec) * np.maximum(
        ld(task.req.r_sec) - (r_user - r_eve), 0)
    return np.mean(hinge) + ld(objective.weights.mu_power) * power / ld(task.req.p_max)


def central_difference(f, theta, index, step=1e-5):
    e = np.zeros_like(theta)
    e[index] = step
    return float((f(theta + e) - f(theta - e)) / (2 * step))


def hinge_arguments(decision: ControlDecision, task: Task, pilots) -> np.ndarray:
    r_user = _rates_at(decision, pilots.px, pilots.py, task.env, task.geom)
    r_eve = _eve_rate(decision, task.eve, task.env, task.geom)
    return np.concatenate([task.req.r_th - r_user, task.req.r_sec - (r_user - r_eve)])


def near_kink(objective: PolicyObjective, theta, index, task, pilots, step=1e-5, tol=1e-6) -> bool:
    """True if the finite-difference stencil at this coordinate touches a hinge kink."""
    args = []
    for s in (-step, 0.0, step):
        t = theta.copy()
        t[index] += s
        args.append(hinge_arguments(objective.decision(t, task), task, pilots))
    a = np.vstack(args)
    crosses = np.any(np.sign(a) != np.sign(a[1]), axis=0)
    return bool(np.any(crosses) or np.any(np.abs(a[1]) < tol))


def relative_error(a, b, floor=1e-6):
    return abs(a - b) / max(abs(a), abs(b), floor)


# ---------------------------------------------------------------------------
# bundled checks


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float
    threshold: float
    seconds: float
    detail: str = ""
    extra: dict = field(default_factory=dict)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"[{status}] {self.name}: {self.value:.3e} (limit {self.threshold:.1e}, "
                f"{self.seconds:.1f}s) {self.detail}").rstrip()


def random_policy_case(rng: RngStream, dist: TaskDistribution, spec_obj: PolicyObjective):
    """A random (theta, task, pilots) triple with a spread of hinge activity."""
    gen = rng.generator()
    theta = init_params(spec_obj.spec, int(gen.integers(2**31)))
    theta = theta + gen.normal(0.0, 0.02, theta.shape)
    task = sample_task(dist, gen)
    pilots = simulate_pilots(task, int(gen.integers(5, 21)), gen)
    return theta, task, pilots


def check_gradients(n_pairs=100, n_coords=20, step=1e-5, tol=1e-5, seed=0,
                    scale_floor=1e-6) -> CheckResult:
    """Reverse-mode gradient against central differences of the long-double loss.

    Per-coordinate error is |g - fd| / max(|g|, |fd|, scale_floor * |g|_inf):
    components six orders below the largest one are at the float64 roundoff
    of the gradient itself and are judged on the gradient's scale. Pairs whose
    gradient is identically zero (all hinges inactive, no power penalty) are
    redrawn.
    """
    t0 = time.perf_counter()
    root = RngStream(seed, 101)
    dist = TaskDistribution()
    worst = 0.0
    checked = skipped = redrawn = 0
    for k in range(n_pairs):
        for attempt in range(100):
            rng = root.child(k, attempt)
            gen = rng.child("w").generator()
            weights = LossWeights(0.5, float(gen.choice([0.0, 0.05, 0.5])))
            obj = PolicyObjective(weights=weights)
            theta, task, pilots = random_policy_case(rng, dist, obj)
            grad = obj.loss_and_grad(theta, task, pilots).grad
            g_inf = float(np.max(np.abs(grad)))
            if g_inf > 0.0:
                break
            redrawn += 1
        theta_ld = theta.astype(np.longdouble)
        f = lambda th: reference_policy_loss(th, obj, task, pilots)  # noqa: E731
        for i in gen.choice(theta.shape[0], n_coords, replace=False):
            if near_kink(obj, theta, i, task, pilots, step):
                skipped += 1
                continue
            fd = central_difference(f, theta_ld, i, step)
            worst = max(worst, relative_error(grad[i], fd, scale_floor * g_inf))
            checked += 1
    return CheckResult("gradient vs central differences", worst < tol, worst, tol,
                       time.perf_counter() - t0,
                       f"{checked} coords checked, {skipped} near kinks skipped, "
                       f"{redrawn} flat pairs redrawn")


def slack_secrecy_task(gen, dist: TaskDistribution, margin=0.3) -> Task:
    """Random radius-0 task whose secrecy constraint is slack at the closed-form optimum."""
    for _ in range(10_000):
        t = sample_task(dist, gen).with_radius(0.0)
        x = min(max(t.user_est[0], 0.0), t.geom.length_L)
        d = ControlDecision(x, closed_form_power(t, x))
        gap = _rates_at(d, np.array([t.user_est[0]]), np.array([t.user_est[1]]),
                        t.env, t.geom)[0] - _eve_rate(d, t.eve, t.env, t.geom)
        if gap >= t.req.r_sec + margin:
            return t
    raise RuntimeError("could not draw a slack-secrecy task")


def check_closed_form_power(n_tasks=100, seed=0, x_tol=1e-3, p_rtol=1e-3) -> CheckResult:
    t0 = time.perf_counter()
    root = RngStream(seed, 202)
    gen = root.generator()
    dist = TaskDistribution()
    settings = BaselineSettings()
    worst_x = worst_p = 0.0
    for k in range(n_tasks):
        task = slack_secrecy_task(gen, dist)
        dec = conventional_optimize(task, settings, root.child(k))
        x_star = min(max(task.user_est[0], 0.0), task.geom.length_L)
        p_star = closed_form_power(task, x_star)
        worst_x = max(worst_x, abs(dec.x_pa - x_star))
        worst_p = max(worst_p, abs(dec.power_w - p_star) / p_star)
    passed = worst_x <= x_tol and worst_p <= p_rtol
    return CheckResult("conventional vs closed-form power", passed, worst_p, p_rtol,
                       time.perf_counter() - t0, f"max |dx|={worst_x:.2e} m (limit {x_tol:g})")


def random_estimator_scene(gen, dist: TaskDistribution):
    """Task with r_u > 0 and a decision whose outage is typically non-trivial."""
    task = sample_task(dist, gen)
    task = task.with_radius(float(gen.uniform(0.2, dist.radius_range[1])))
    x = float(gen.uniform(0.0, task.geom.length_L))
    power = closed_form_power(task, x) * math.exp(float(gen.uniform(-0.5, 1.0)))
    return task, ControlDecision(x, min(power, task.req.p_max))


def check_estimators(n_scenes=50, n=100_000, seed=0, p_tol=0.01, s_tol=0.02) -> CheckResult:
    t0 = time.perf_counter()
    root = RngStream(seed, 303)
    gen = root.generator()
    dist = TaskDistribution()
    worst_p = worst_s = 0.0
    for k in range(n_scenes):
        task, dec = random_estimator_scene(gen, dist)
        px, py = DiskDraws.generate(n, root.child(k)).points(task.disk)
        env, geom = task.env, task.geom
        mc_out = outage_from_points(dec, px, py, env, geom, task.req.r_th)
        signed, _, sec_out, _ = secrecy_from_points(dec, px, py, task.eve, env, geom, task.req.r_sec)
        worst_p = max(worst_p,
                      abs(mc_out - quad_outage(dec, task.disk, env, geom, task.req.r_th)),
                      abs(sec_out - quad_secrecy_outage(dec, task.disk, task.eve, env, geom,
                                                        task.req.r_sec)))
        worst_s = max(worst_s, abs(signed - quad_secrecy(dec, task.disk, task.eve, env, geom)))
    passed = worst_p <= p_tol and worst_s <= s_tol
    return CheckResult("MC estimators vs 400x400 quadrature", passed, worst_p, p_tol,
                       time.perf_counter() - t0,
                       f"max secrecy-rate diff {worst_s:.2e} bps/Hz (limit {s_tol:g})")


def check_maml_analytics(tol=1e-6) -> CheckResult:
    """Meta-gradients on c/2 theta^2 against c(1-ac)^2 theta and c(1-ac) theta."""
    t0 = time.perf_counter()
    worst = 0.0
    for c, alpha, theta in [(2.0, 0.1, 1.5), (0.5, 0.01, -3.0), (4.0, 0.05, 0.7), (1.0, 0.3, 2.0)]:
        stub = QuadraticStub(c)
        th = np.array([theta])
        for order, expected in (("second", c * (1 - alpha * c) ** 2 * theta),
                                ("first", c * (1 - alpha * c) * theta)):
            cfg = MetaConfig(inner_lr=alpha, inner_steps=1, order=order)
            g, _, _ = maml_task_gradient(th, None, cfg, stub, None, None)
            worst = max(worst, abs(g[0] - expected) / abs(expected))
    # finite-difference HVP error on a non-quadratic loss: O(eps^2) with eps=1e-4(1+|theta|)
    quart = QuarticStub(1.0)
    gen = np.random.default_rng(7)
    hvp_err = 0.0
    for _ in range(20):
        th = gen.normal(size=8)
        v = gen.normal(size=8)
        exact = quart.exact_hvp(th, v)
        hvp_err = max(hvp_err, float(np.linalg.norm(quart.hvp(th, v) - exact) / np.linalg.norm(exact)))
    passed = worst <= tol and hvp_err <= 1e-5
    return CheckResult("MAML meta-gradient analytics", passed, worst, tol,
                       time.perf_counter() - t0, f"quartic HVP rel. err {hvp_err:.1e} (limit 1e-5)")


def run_oracle_suite(seed=0) -> list[CheckResult]:
    return [check_gradients(seed=seed), check_closed_form_power(seed=seed),
            check_estimators(seed=seed), check_maml_analytics()]


__all__ = [name for name in dir() if not name.startswith("_")] + ["Vec3", "Requirements"]
