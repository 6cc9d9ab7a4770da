"""Free-space line-of-sight channel between the pinching antenna and a ground receiver.

All quantities are SI and double precision. dB values are converted to linear
units once, in :func:`derive_radio_env`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import DomainError, InvalidParameterError, SingularityError

SPEED_OF_LIGHT = 299_792_458.0


class Vec3(NamedTuple):
    x: float
    y: float
    z: float

    def distance(self, other: "Vec3") -> float:
        return math.sqrt(
            (self.x - other.x) ** 2 + (self.y - other.y) ** 2 + (self.z - other.z) ** 2
        )


@dataclass(frozen=True)
class WaveguideGeometry:
    length_L: float = 5.0
    height_d: float = 3.0

    def __post_init__(self):
        if not (self.length_L > 0 and math.isfinite(self.length_L)):
            raise InvalidParameterError(f"waveguide length must be > 0, got {self.length_L}")
        if not (self.height_d > 0 and math.isfinite(self.height_d)):
            raise InvalidParameterError(f"waveguide height must be > 0, got {self.height_d}")


@dataclass(frozen=True)
class RadioEnv:
    carrier_hz: float
    bandwidth_hz: float
    noise_psd_dbm_hz: float
    wavelength_m: float = field(init=False)
    noise_power_w: float = field(init=False)

    def __post_init__(self):
        for name in ("carrier_hz", "bandwidth_hz"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise InvalidParameterError(f"{name} must be finite and positive, got {v}")
        if not math.isfinite(self.noise_psd_dbm_hz):
            raise InvalidParameterError("noise_psd_dbm_hz must be finite")
        object.__setattr__(self, "wavelength_m", SPEED_OF_LIGHT / self.carrier_hz)
        object.__setattr__(
            self,
            "noise_power_w",
            10.0 ** ((self.noise_psd_dbm_hz - 30.0) / 10.0) * self.bandwidth_hz,
        )

    @property
    def friis_constant(self) -> float:
        """lambda^2 / (4 pi)^2, so that gain = friis_constant / distance^2."""
        return self.wavelength_m**2 / (4.0 * math.pi) ** 2

    @property
    def gain_to_snr(self) -> float:
        """friis_constant / noise power: SNR = P * gain_to_snr / distance^2."""
        return self.friis_constant / self.noise_power_w


@dataclass(frozen=True)
class ControlDecision:
    """Antenna coordinate along the waveguide and transmit power.

    ``feasible`` is False when a solver could not meet the constraints and
    returned its least-violating candidate instead.
    """

    x_pa: float
    power_w: float
    feasible: bool = True

    def validate(self, geom: WaveguideGeometry, p_max: float | None = None) -> None:
        if not (0.0 <= self.x_pa <= geom.length_L):
            raise DomainError(f"x_pa={self.x_pa} outside [0, {geom.length_L}]")
        if not (self.power_w >= 0.0) or (p_max is not None and self.power_w > p_max):
            raise DomainError(f"power {self.power_w} W outside [0, {p_max}]")


def derive_radio_env(carrier_hz: float, bandwidth_hz: float, noise_psd_dbm_hz: float) -> RadioEnv:
    return RadioEnv(float(carrier_hz), float(bandwidth_hz), float(noise_psd_dbm_hz))


def antenna_position(x_pa: float, geom: WaveguideGeometry) -> Vec3:
    if not (0.0 <= x_pa <= geom.length_L):
        raise DomainError(f"x_pa={x_pa} outside [0, {geom.length_L}]")
    return Vec3(float(x_pa), 0.0, geom.height_d)


def _checked_distance(z: Vec3, phi: Vec3) -> float:
    r = Vec3(*z).distance(Vec3(*phi))
    if r == 0.0:
        raise SingularityError(f"receiver {tuple(z)} coincides with antenna")
    return r


def channel_gain(z: Vec3, phi: Vec3, env: RadioEnv) -> float:
    """|h|^2 = lambda^2 / ((4 pi)^2 ||z - phi||^2)."""
    r = _checked_distance(z, phi)
    return env.friis_constant / (r * r)


def channel_coefficient(z: Vec3, phi: Vec3, env: RadioEnv) -> complex:
    r = _checked_distance(z, phi)
    amplitude = math.sqrt(env.friis_constant) / r
    # reduce the phase before exp so large r/lambda keeps full precision
    phase = -2.0 * math.pi * math.fmod(r / env.wavelength_m, 1.0)
    return amplitude * complex(math.cos(phase), math.sin(phase))


def snr(power_w: float, gain: float, env: RadioEnv) -> float:
    if power_w < 0:
        raise DomainError(f"negative transmit power {power_w}")
    return power_w * gain / env.noise_power_w


def rate(snr_linear):
    """Achievable rate log2(1 + snr) in bps/Hz; accepts scalars or arrays."""
    return np.log1p(snr_linear) / math.log(2.0)


def secrecy_rate(snr_user, snr_eve):
    return np.maximum(rate(snr_user) - rate(snr_eve), 0.0)


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)
