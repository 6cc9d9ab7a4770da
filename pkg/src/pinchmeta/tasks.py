"""Tasks, pilot simulation, feature encoding and the hinge task loss."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .channel import (
    ControlDecision,
    RadioEnv,
    Vec3,
    WaveguideGeometry,
    antenna_position,
    channel_gain,
    derive_radio_env,
    rate,
)
from .errors import DomainError, InvalidParameterError
from .stochastic import as_generator, unit_disk_draws, UncertaintyDisk


@dataclass(frozen=True)
class Requirements:
    """System-wide link requirements shared by every task."""

    r_th: float = 2.0
    r_sec: float = 0.5
    epsilon: float = 0.05
    p_max: float = 1.0

    def __post_init__(self):
        if self.r_th < 0 or self.r_sec < 0:
            raise InvalidParameterError("rate targets must be >= 0")
        if not (0.0 < self.epsilon < 1.0):
            raise InvalidParameterError("epsilon must lie in (0, 1)")
        if not (self.p_max > 0):
            raise InvalidParameterError("p_max must be > 0")


def default_env() -> RadioEnv:
    return derive_radio_env(28e9, 100e6, -174.0)


@dataclass(frozen=True)
class Task:
    user_est: Vec3
    radius_m: float
    eve: Vec3
    env: RadioEnv = field(default_factory=default_env)
    geom: WaveguideGeometry = field(default_factory=WaveguideGeometry)
    req: Requirements = field(default_factory=Requirements)

    def __post_init__(self):
        if self.user_est[2] != 0.0 or self.eve[2] != 0.0:
            raise DomainError("user and eavesdropper must be on the ground plane")
        if not (self.radius_m >= 0):
            raise DomainError(f"negative uncertainty radius {self.radius_m}")

    @property
    def disk(self) -> UncertaintyDisk:
        return UncertaintyDisk(self.user_est, self.radius_m)

    def with_radius(self, radius_m: float) -> "Task":
        return Task(self.user_est, radius_m, self.eve, self.env, self.geom, self.req)

    def key(self) -> tuple:
        return (self.user_est[0], self.user_est[1], self.radius_m, self.eve[0], self.eve[1])


@dataclass(frozen=True)
class TaskDistribution:
    """Independent uniform ranges for every task field.

    Eve is redrawn until she is at least ``min_separation`` from the user
    estimate.
    """

    x_range: tuple = (0.0, 5.0)
    y_range: tuple = (1.0, 6.0)
    radius_range: tuple = (0.0, 2.0)
    eve_x_range: tuple = (0.0, 5.0)
    eve_y_range: tuple = (1.0, 6.0)
    min_separation: float = 0.5
    env: RadioEnv = field(default_factory=default_env)
    geom: WaveguideGeometry = field(default_factory=WaveguideGeometry)
    req: Requirements = field(default_factory=Requirements)

    def __post_init__(self):
        for name in ("x_range", "y_range", "radius_range", "eve_x_range", "eve_y_range"):
            lo, hi = getattr(self, name)
            if not (math.isfinite(lo) and math.isfinite(hi) and lo <= hi):
                raise InvalidParameterError(f"{name} must be a non-empty interval, got {(lo, hi)}")
        if self.radius_range[0] < 0:
            raise InvalidParameterError("radius_range must be within [0, inf)")

    @property
    def y_max(self) -> float:
        return max(abs(self.y_range[1]), abs(self.eve_y_range[1]), 1e-9)

    @property
    def r_max(self) -> float:
        return max(self.radius_range[1], 1e-9)


def sample_task(dist: TaskDistribution, rng) -> Task:
    gen = as_generator(rng)
    xu = gen.uniform(*dist.x_range)
    yu = gen.uniform(*dist.y_range)
    ru = gen.uniform(*dist.radius_range)
    for _ in range(1000):
        xe = gen.uniform(*dist.eve_x_range)
        ye = gen.uniform(*dist.eve_y_range)
        if math.hypot(xe - xu, ye - yu) >= dist.min_separation:
            break
    else:
        raise InvalidParameterError("could not place eve at the minimum separation")
    return Task(Vec3(float(xu), float(yu), 0.0), float(ru), Vec3(float(xe), float(ye), 0.0),
                dist.env, dist.geom, dist.req)


def sample_tasks(dist: TaskDistribution, n: int, rng) -> list[Task]:
    gen = as_generator(rng)
    return [sample_task(dist, gen) for _ in range(n)]


@dataclass(frozen=True)
class PilotSet:
    """Pilot measurements: sampled true positions and gains at the probing antenna.

    The loss re-evaluates gains from ``px, py`` at whatever antenna position
    is being scored; ``gains_user``/``gain_eve`` record what the probe saw.
    """

    px: np.ndarray
    py: np.ndarray
    gains_user: np.ndarray
    gain_eve: float
    probe_x: float

    def __len__(self):
        return self.px.shape[0]

    @property
    def positions(self) -> list[Vec3]:
        return [Vec3(float(x), float(y), 0.0) for x, y in zip(self.px, self.py)]


def simulate_pilots(task: Task, n_pilots: int, rng, probe_x: float | None = None,
                    noise_db: float = 0.0) -> PilotSet:
    """Draw n_pilots true positions and measure their gains.

    ``noise_db`` > 0 applies multiplicative log-normal measurement noise with
    that standard deviation (in dB) to the recorded gains.
    """
    if n_pilots < 1:
        raise DomainError("n_pilots must be >= 1")
    gen = as_generator(rng)
    wx, wy = unit_disk_draws(n_pilots, gen)
    px = task.user_est[0] + task.radius_m * wx
    py = task.user_est[1] + task.radius_m * wy
    if probe_x is None:
        probe_x = task.geom.length_L / 2.0
    phi = antenna_position(probe_x, task.geom)
    gains = np.array([channel_gain(Vec3(x, y, 0.0), phi, task.env) for x, y in zip(px, py)])
    g_eve = channel_gain(task.eve, phi, task.env)
    if noise_db > 0:
        gains = gains * 10.0 ** (gen.normal(0.0, noise_db, n_pilots) / 10.0)
    return PilotSet(px, py, gains, g_eve, float(probe_x))


def encode_features(task: Task, y_max: float = 6.0, r_max: float = 2.0) -> np.ndarray:
    L = task.geom.length_L
    return np.array([task.user_est[0] / L, task.user_est[1] / y_max, task.radius_m / r_max,
                     task.eve[0] / L, task.eve[1] / y_max])


@dataclass(frozen=True)
class LossWeights:
    lambda_sec: float = 0.5
    mu_power: float = 0.05

    def __post_init__(self):
        for v in (self.lambda_sec, self.mu_power):
            if not (math.isfinite(v) and v >= 0):
                raise InvalidParameterError("loss weights must be finite and >= 0")


def _user_rate(decision, u_hat, env, geom):
    g = channel_gain(u_hat, antenna_position(decision.x_pa, geom), env)
    return float(rate(decision.power_w * g / env.noise_power_w))


def outage_loss(decision: ControlDecision, u_hat: Vec3, env, geom, r_th) -> float:
    return max(r_th - _user_rate(decision, u_hat, env, geom), 0.0)


def secrecy_loss(decision: ControlDecision, u_hat: Vec3, eve: Vec3, env, geom, r_sec) -> float:
    gap = _user_rate(decision, u_hat, env, geom) - _user_rate(decision, eve, env, geom)
    return max(r_sec - gap, 0.0)


def task_loss_grad(decision: ControlDecision, task: Task, px, py, weights: LossWeights):
    """Pilot-mean hinge loss plus power penalty, with d/dx_pa and d/dP."""
    if len(px) == 0:
        raise DomainError("task loss needs at least one pilot")
    return kernels.pilot_loss_grad(
        np.asarray(px, dtype=np.float64), np.asarray(py, dtype=np.float64),
        task.eve[0], task.eve[1], decision.x_pa, decision.power_w,
        task.geom.height_d**2, task.env.gain_to_snr, task.req.p_max,
        task.req.r_th, task.req.r_sec, weights.lambda_sec, weights.mu_power)


def task_loss(decision: ControlDecision, task: Task, pilots: PilotSet, weights: LossWeights) -> float:
    return task_loss_grad(decision, task, pilots.px, pilots.py, weights)[0]


TASK_CSV_COLUMNS = ("x_u", "y_u", "r_u", "x_e", "y_e")


def save_tasks_csv(tasks, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TASK_CSV_COLUMNS)
        for t in tasks:
            w.writerow([repr(float(v)) for v in t.key()])


def load_tasks_csv(path, env=None, geom=None, req=None) -> list[Task]:
    env = env or default_env()
    geom = geom or WaveguideGeometry()
    req = req or Requirements()
    out = []
    with open(Path(path), newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(h.strip() for h in header) != TASK_CSV_COLUMNS:
            raise InvalidParameterError(f"unexpected task CSV header {header}")
        for row in reader:
            if not row:
                continue
            xu, yu, ru, xe, ye = (float(v) for v in row)
            out.append(Task(Vec3(xu, yu, 0.0), ru, Vec3(xe, ye, 0.0), env, geom, req))
    return out
