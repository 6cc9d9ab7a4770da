"""MAML and Reptile meta-training, plus online few-shot adaptation.

Meta routines are written against an *objective* exposing
``loss_and_grad(theta, task, pilots)``, ``hvp(theta, v, task, pilots)`` and
``sample_pilots(task, n, rng)``. :class:`~pinchmeta.policy.PolicyObjective` is
the real one; the analytic quadratic stub in :mod:`pinchmeta.oracles` exercises the
same code paths.
"""
from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import DivergenceError, DomainError, InvalidParameterError, NumericalError
from .policy import PolicyObjective, init_params
from .rng import RngStream
from .tasks import Task, TaskDistribution, sample_tasks

DIVERGENCE_LIMIT = 1e6


@dataclass(frozen=True)
class MetaConfig:
    inner_lr: float = 0.01
    meta_lr: float = 0.001
    batch_size: int = 20
    inner_steps: int = 1
    train_tasks: int = 2000
    val_tasks: int = 500
    order: str = "second"
    reptile_step: float = 1.0
    n_support: int = 10
    n_query: int = 64
    val_every: int = 10

    def __post_init__(self):
        if not (self.inner_lr > 0 and self.meta_lr > 0):
            raise InvalidParameterError("learning rates must be > 0")
        if self.batch_size < 1 or self.inner_steps < 1:
            raise InvalidParameterError("batch_size and inner_steps must be >= 1")
        if self.order not in ("first", "second"):
            raise InvalidParameterError(f"order must be 'first' or 'second', got {self.order!r}")
        if self.n_support < 1 or self.n_query < 1:
            raise InvalidParameterError("pilot counts must be >= 1")

    @property
    def meta_steps(self) -> int:
        return max(1, self.train_tasks // self.batch_size)


@dataclass
class TraceRow:
    iteration: int
    pre_loss: float
    post_loss: float
    grad_norm: float
    ms: float


@dataclass
class TrainTrace:
    rows: list = field(default_factory=list)
    validation: list = field(default_factory=list)  # (iteration, mean post-adaptation loss)

    def append(self, row: TraceRow):
        if self.rows and row.iteration <= self.rows[-1].iteration:
            raise ValueError("trace iterations must increase")
        self.rows.append(row)

    def __len__(self):
        return len(self.rows)

    def to_csv(self, path, timing: bool = False) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["iteration", "pre_loss", "post_loss", "grad_norm", "ms"])
            for r in self.rows:
                w.writerow([r.iteration, f"{r.pre_loss:.9g}", f"{r.post_loss:.9g}",
                            f"{r.grad_norm:.9g}", f"{r.ms if timing else 0.0:.9g}"])

    def validation_to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["iteration", "val_post_loss"])
            for it, v in self.validation:
                w.writerow([it, f"{v:.9g}"])


def _adapt_trajectory(params, task, pilots, alpha, steps, objective):
    """Plain gradient steps; returns final params, visited params and losses."""
    if steps < 0:
        raise DomainError("number of adaptation steps must be >= 0")
    theta = params
    thetas = [theta]
    losses = []
    for _ in range(steps):
        res = objective.loss_and_grad(theta, task, pilots)
        losses.append(res.loss)
        theta = theta - alpha * res.grad
        thetas.append(theta)
    return theta, thetas, losses


def inner_adapt(params, task, pilots, alpha, steps, objective=None):
    objective = objective or PolicyObjective()
    return _adapt_trajectory(params, task, pilots, alpha, steps, objective)[0]


def _task_streams(rng: RngStream, i: int):
    s = rng.child(i)
    return s.child("support"), s.child("query")


def maml_task_gradient(params, task, config: MetaConfig, objective, support, query):
    """Meta-gradient of one task's query loss through K support steps.

    Second order: g <- (I - alpha H_k) g backwards along the adaptation path,
    with one finite-difference HVP per step. First order keeps only the
    query gradient at the adapted point.
    """
    alpha = config.inner_lr
    theta_k, thetas, losses = _adapt_trajectory(params, task, support, alpha,
                                                config.inner_steps, objective)
    q = objective.loss_and_grad(theta_k, task, query)
    g = q.grad
    if config.order == "second":
        for theta in reversed(thetas[:-1]):
            g = g - alpha * objective.hvp(theta, g, task, support)
    return g, losses[0], q.loss


def maml_meta_step(params, tasks, config: MetaConfig, rng: RngStream, objective=None,
                   iteration: int = 0):
    """One MAML update over a batch; returns (new params, trace row)."""
    if len(tasks) < 1:
        raise DomainError("a meta batch needs at least one task")
    objective = objective or PolicyObjective()
    t0 = time.perf_counter()
    meta_grad = np.zeros_like(params)
    pre = post = 0.0
    for i, task in enumerate(tasks):
        s_rng, q_rng = _task_streams(rng, i)
        support = objective.sample_pilots(task, config.n_support, s_rng)
        query = objective.sample_pilots(task, config.n_query, q_rng)
        g, lp, lq = maml_task_gradient(params, task, config, objective, support, query)
        meta_grad = meta_grad + g
        pre += lp
        post += lq
    new = params - config.meta_lr * meta_grad
    row = TraceRow(iteration, pre / len(tasks), post / len(tasks),
                   float(np.linalg.norm(meta_grad)), (time.perf_counter() - t0) * 1e3)
    return new, row


def _reptile_step(params, tasks, config, rng, objective, iteration=0):
    if len(tasks) < 1:
        raise DomainError("a meta batch needs at least one task")
    t0 = time.perf_counter()
    delta = np.zeros_like(params)
    pre = post = 0.0
    for i, task in enumerate(tasks):
        s_rng, q_rng = _task_streams(rng, i)
        support = objective.sample_pilots(task, config.n_support, s_rng)
        adapted, _, losses = _adapt_trajectory(params, task, support, config.inner_lr,
                                               config.inner_steps, objective)
        delta = delta + (adapted - params)
        pre += losses[0]
        query = objective.sample_pilots(task, config.n_query, q_rng)
        post += objective.loss_and_grad(adapted, task, query).loss
    step = config.reptile_step * delta / len(tasks)
    row = TraceRow(iteration, pre / len(tasks), post / len(tasks),
                   float(np.linalg.norm(step)), (time.perf_counter() - t0) * 1e3)
    return params + step, row


def reptile_meta_step(params, tasks, config: MetaConfig, rng: RngStream, objective=None):
    """theta <- theta + reptile_step * mean_i(theta'_i - theta)."""
    return _reptile_step(params, tasks, config, rng, objective or PolicyObjective())[0]


def validation_loss(params, val_tasks, config: MetaConfig, rng: RngStream, objective) -> float:
    """Mean query loss after K support steps over a fixed task set."""
    total = 0.0
    for i, task in enumerate(val_tasks):
        s_rng, q_rng = _task_streams(rng, i)
        support = objective.sample_pilots(task, config.n_support, s_rng)
        adapted = _adapt_trajectory(params, task, support, config.inner_lr,
                                    config.inner_steps, objective)[0]
        query = objective.sample_pilots(task, config.n_query, q_rng)
        total += objective.loss_and_grad(adapted, task, query).loss
    return total / len(val_tasks)


def meta_train(config: MetaConfig, dist: TaskDistribution, rng: RngStream, objective=None,
               method: str = "maml", init=None, progress=None):
    """Run meta-training over ``config.train_tasks`` freshly sampled tasks.

    Returns (params, trace). Validation on a fixed held-out set is recorded
    before the first step, every ``val_every`` steps and after the last.
    """
    if method not in ("maml", "reptile"):
        raise InvalidParameterError(f"unknown meta method {method!r}")
    objective = objective or PolicyObjective(y_max=dist.y_max, r_max=dist.r_max)
    params = init if init is not None else init_params(objective.spec, rng.child("init").int_seed())
    task_gen = rng.child("train").generator()
    val_tasks = sample_tasks(dist, config.val_tasks, rng.child("val")) if config.val_tasks else []
    val_rng = rng.child("val-pilots")
    trace = TrainTrace()

    def validate(it):
        if val_tasks:
            trace.validation.append((it, validation_loss(params, val_tasks, config, val_rng, objective)))

    validate(0)
    for it in range(1, config.meta_steps + 1):
        batch = sample_tasks(dist, config.batch_size, task_gen)
        step_rng = rng.child("step", it)
        if method == "maml":
            params, row = maml_meta_step(params, batch, config, step_rng, objective, it)
        else:
            params, row = _reptile_step(params, batch, config, step_rng, objective, it)
        trace.append(row)
        if not (math.isfinite(row.pre_loss) and math.isfinite(row.post_loss)) or \
                max(row.pre_loss, row.post_loss) > DIVERGENCE_LIMIT:
            raise DivergenceError(f"meta-training diverged at iteration {it}", trace)
        if config.val_every and it % config.val_every == 0 and it != config.meta_steps:
            validate(it)
        if progress is not None:
            progress(it, row)
    validate(config.meta_steps)
    return params, trace


def online_adapt(params, task: Task, n_pilots: int, alpha: float, steps: int, rng,
                 objective=None):
    """Few-shot adaptation on a new task.

    Returns the adapted decision and the K+1 pilot losses seen along the way
    (the first is the pre-adaptation loss).
    """
    objective = objective or PolicyObjective()
    pilots = objective.sample_pilots(task, n_pilots, rng)
    theta, _, losses = _adapt_trajectory(params, task, pilots, alpha, steps, objective)
    losses.append(objective.loss_and_grad(theta, task, pilots).loss)
    for v in losses:
        if not math.isfinite(v):
            raise NumericalError(f"non-finite adaptation loss on task {task.key()}")
    return objective.decision(theta, task), losses
