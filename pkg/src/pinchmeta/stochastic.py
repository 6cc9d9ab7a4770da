"""Monte Carlo evaluation over the user-location uncertainty disk.

The true position is uniform over a disk around the estimate. Samples are
built from *unit-disk* draws scaled by the radius, so one stream gives common
random numbers across radii, powers and antenna positions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .channel import ControlDecision, RadioEnv, Vec3, WaveguideGeometry
from .errors import DomainError
from .rng import RngStream


@dataclass(frozen=True)
class UncertaintyDisk:
    center: Vec3
    radius_m: float

    def __post_init__(self):
        if not (self.radius_m >= 0 and math.isfinite(self.radius_m)):
            raise DomainError(f"radius must be >= 0, got {self.radius_m}")
        if self.center[2] != 0.0:
            raise DomainError("uncertainty disk must lie on the ground plane (z = 0)")


@dataclass(frozen=True)
class EvalSettings:
    n_samples: int = 100_000
    r_th_bpshz: float = 2.0
    r_sec_bpshz: float = 0.5
    epsilon: float = 0.05

    def __post_init__(self):
        if self.n_samples < 1:
            raise DomainError("n_samples must be >= 1")
        if not (0.0 < self.epsilon < 1.0):
            raise DomainError("epsilon must lie in (0, 1)")


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"expected RngStream or numpy Generator, got {type(rng).__name__}")


def unit_disk_draws(n: int, rng) -> tuple[np.ndarray, np.ndarray]:
    """n points uniform on the unit disk (radius sqrt(U), angle uniform)."""
    gen = as_generator(rng)
    u = gen.random(n)
    v = gen.random(n)
    rho = np.sqrt(u)
    ang = 2.0 * np.pi * v
    return rho * np.cos(ang), rho * np.sin(ang)


@dataclass(frozen=True)
class DiskDraws:
    """Reusable unit-disk draws; ``points(disk)`` maps them onto a disk."""

    wx: np.ndarray
    wy: np.ndarray

    @classmethod
    def generate(cls, n: int, rng) -> "DiskDraws":
        return cls(*unit_disk_draws(n, rng))

    @property
    def n(self) -> int:
        return self.wx.shape[0]

    def points(self, disk: UncertaintyDisk) -> tuple[np.ndarray, np.ndarray]:
        c = disk.center
        return c[0] + disk.radius_m * self.wx, c[1] + disk.radius_m * self.wy


def sample_user_position(disk: UncertaintyDisk, rng) -> Vec3:
    wx, wy = unit_disk_draws(1, rng)
    return Vec3(disk.center[0] + disk.radius_m * float(wx[0]),
                disk.center[1] + disk.radius_m * float(wy[0]), 0.0)


def _check(decision: ControlDecision, geom: WaveguideGeometry, n: int):
    decision.validate(geom)
    if n < 1:
        raise DomainError("n must be >= 1")


def _snr_scale(decision, env):
    # SNR at horizontal-plus-height squared distance D is snr_scale / D
    return decision.power_w * env.gain_to_snr


def eve_snr(decision: ControlDecision, eve: Vec3, env: RadioEnv, geom: WaveguideGeometry) -> float:
    d2 = (eve[0] - decision.x_pa) ** 2 + eve[1] ** 2 + (eve[2] - geom.height_d) ** 2
    return _snr_scale(decision, env) / d2


def outage_from_points(decision, px, py, env, geom, r_th) -> float:
    gamma_th = 2.0**r_th - 1.0
    count = kernels.outage_count(px, py, decision.x_pa, geom.height_d**2,
                                 _snr_scale(decision, env), gamma_th)
    return count / px.shape[0]


def secrecy_from_points(decision, px, py, eve, env, geom, r_sec):
    """(signed mean log-ratio, clipped mean secrecy, secrecy outage, mean rate)."""
    return kernels.secrecy_stats(px, py, decision.x_pa, geom.height_d**2,
                                 _snr_scale(decision, env),
                                 eve_snr(decision, eve, env, geom), r_sec)


def outage_probability(decision, disk, env, geom, r_th, n, rng) -> float:
    """Fraction of n sampled true positions whose rate falls below r_th."""
    _check(decision, geom, n)
    px, py = DiskDraws.generate(n, rng).points(disk)
    return outage_from_points(decision, px, py, env, geom, r_th)


def expected_secrecy_rate(decision, disk, eve, env, geom, n, rng, clipped=False) -> float:
    """Mean of log2((1+snr_user)/(1+snr_eve)) over the disk.

    The signed mean is the left-hand side of the average secrecy constraint.
    With ``clipped=True`` the per-sample rate is floored at zero first, which
    is the reported secrecy rate.
    """
    _check(decision, geom, n)
    px, py = DiskDraws.generate(n, rng).points(disk)
    signed, clip, _, _ = secrecy_from_points(decision, px, py, eve, env, geom, 0.0)
    return clip if clipped else signed


def secrecy_outage_probability(decision, disk, eve, env, geom, r_sec, n, rng) -> float:
    _check(decision, geom, n)
    px, py = DiskDraws.generate(n, rng).points(disk)
    return secrecy_from_points(decision, px, py, eve, env, geom, r_sec)[2]


def rate_samples(decision, disk, env, geom, n, rng) -> np.ndarray:
    _check(decision, geom, n)
    px, py = DiskDraws.generate(n, rng).points(disk)
    return kernels.rates(px, py, decision.x_pa, geom.height_d**2, _snr_scale(decision, env))


def evaluate_all(decision, disk, eve, env, geom, r_th, r_sec, draws: DiskDraws) -> dict:
    """Every reported metric for one decision on one set of draws."""
    decision.validate(geom)
    px, py = draws.points(disk)
    signed, clip, sec_out, mean_rate = secrecy_from_points(decision, px, py, eve, env, geom, r_sec)
    return {
        "outage": outage_from_points(decision, px, py, env, geom, r_th),
        "mean_secrecy_signed": signed,
        "mean_secrecy_bpshz": clip,
        "secrecy_outage": sec_out,
        "mean_rate_bpshz": mean_rate,
    }
