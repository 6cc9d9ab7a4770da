import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pinchmeta.channel import (
    ControlDecision,
    Vec3,
    WaveguideGeometry,
    antenna_position,
    channel_coefficient,
    channel_gain,
    derive_radio_env,
    rate,
    secrecy_rate,
    snr,
)
from pinchmeta.errors import DomainError, InvalidParameterError, SingularityError

coord = st.floats(-20, 20, allow_nan=False)


def test_wavelength_and_noise(env):
    assert env.wavelength_m == pytest.approx(1.0707e-2, rel=1e-4)
    assert env.noise_power_w == pytest.approx(3.981e-13, rel=1e-3)
    one_hz = derive_radio_env(28e9, 1.0, -174.0)
    assert one_hz.noise_power_w == pytest.approx(10**-20.4, rel=1e-12)


@pytest.mark.parametrize("bad", [(0.0, 1e8, -174), (28e9, 0.0, -174), (math.inf, 1e8, -174),
                                 (28e9, math.nan, -174), (28e9, 1e8, math.nan)])
def test_env_rejects_bad_inputs(bad):
    with pytest.raises(InvalidParameterError):
        derive_radio_env(*bad)


def test_geometry_validation():
    with pytest.raises(InvalidParameterError):
        WaveguideGeometry(0.0, 3.0)
    with pytest.raises(InvalidParameterError):
        WaveguideGeometry(5.0, -1.0)


@pytest.mark.parametrize("x", [0.0, 2.5, 5.0])
def test_antenna_position(geom, x):
    assert antenna_position(x, geom) == Vec3(x, 0.0, 3.0)


@pytest.mark.parametrize("x", [-1e-9, 5.0 + 1e-9])
def test_antenna_position_out_of_range(geom, x):
    with pytest.raises(DomainError):
        antenna_position(x, geom)


def test_gain_examples(env):
    phi = Vec3(2.0, 0.0, 3.0)
    g = channel_gain(Vec3(2.0, 0.0, 0.0), phi, env)
    assert g == pytest.approx(8.066e-8, rel=1e-3)
    assert g == pytest.approx(env.wavelength_m**2 / ((4 * math.pi) ** 2 * 9.0), rel=1e-14)
    far = channel_gain(Vec3(2.0, 0.0, -3.0), phi, env)
    assert far == pytest.approx(g / 4, rel=1e-14)
    tilted = channel_gain(Vec3(2.0, 1.0, 0.0), phi, env)
    assert tilted == pytest.approx(env.friis_constant / 10.0, rel=1e-14)


def test_gain_singularity(env):
    with pytest.raises(SingularityError):
        channel_gain(Vec3(1.0, 0.0, 3.0), Vec3(1.0, 0.0, 3.0), env)
    with pytest.raises(SingularityError):
        channel_coefficient(Vec3(1.0, 0.0, 3.0), Vec3(1.0, 0.0, 3.0), env)


def test_coefficient_phase(env):
    lam = env.wavelength_m
    phi = Vec3(0.0, 0.0, 0.0)
    for k, expected in ((37, 0.0), (12.5, math.pi)):
        h = channel_coefficient(Vec3(k * lam, 0.0, 0.0), phi, env)
        ang = math.atan2(h.imag, h.real) % (2 * math.pi)
        dist = min(abs(ang - expected), 2 * math.pi - abs(ang - expected))
        assert dist < 1e-6


@settings(max_examples=100, deadline=None)
@given(coord, coord, coord, coord, coord, st.floats(0.1, 10))
def test_coefficient_matches_gain(x, y, z, ax, ay, az):
    env = derive_radio_env(28e9, 100e6, -174.0)
    zp, phi = Vec3(x, y, z), Vec3(ax, ay, z + az)
    assert abs(channel_coefficient(zp, phi, env)) ** 2 == pytest.approx(
        channel_gain(zp, phi, env), rel=1e-12)


@settings(max_examples=100, deadline=None)
@given(coord, coord, coord, coord, coord, st.floats(0.1, 10))
def test_inverse_square(x, y, z, ax, ay, az):
    env = derive_radio_env(28e9, 100e6, -174.0)
    zp, phi = Vec3(x, y, z), Vec3(ax, ay, z + az)
    r2 = zp.distance(phi) ** 2
    assert channel_gain(zp, phi, env) * r2 == pytest.approx(
        env.wavelength_m**2 / (4 * math.pi) ** 2, rel=1e-12)


def test_snr(env):
    assert snr(1.0, 8.066e-8, env) == pytest.approx(2.026e5, rel=1e-3)
    assert snr(0.0, 8.066e-8, env) == 0.0
    with pytest.raises(DomainError):
        snr(-1.0, 1e-8, env)


@settings(max_examples=50, deadline=None)
@given(st.floats(1e-6, 1e3), st.floats(1e-12, 1e-3), st.floats(0.1, 100))
def test_snr_linear_in_power(p, g, c):
    env = derive_radio_env(28e9, 100e6, -174.0)
    assert snr(c * p, g, env) == pytest.approx(c * snr(p, g, env), rel=1e-14)


def test_rate_examples():
    assert rate(1.0) == 1.0
    assert rate(0.0) == 0.0
    assert rate(2.026e5) == pytest.approx(17.63, abs=0.01)


def test_secrecy_examples():
    assert secrecy_rate(7.0, 7.0) == 0.0
    assert secrecy_rate(3.0, 1.0) == pytest.approx(1.0, abs=1e-15)
    assert secrecy_rate(1.0, 3.0) == 0.0


@settings(max_examples=100, deadline=None)
@given(st.floats(0, 1e9), st.floats(0, 1e9))
def test_rates_nonnegative(a, b):
    assert rate(a) >= 0
    assert secrecy_rate(a, b) >= 0


def test_secrecy_monotone_in_power(env):
    powers = np.geomspace(1e-9, 1.0, 200)
    gu, ge = 5e-8, 1e-8
    s = secrecy_rate(powers * gu / env.noise_power_w, powers * ge / env.noise_power_w)
    assert np.all(np.diff(s) >= 0)
    s_weak = secrecy_rate(powers * ge / env.noise_power_w, powers * gu / env.noise_power_w)
    assert np.all(s_weak == 0)


def test_decision_validate(geom):
    ControlDecision(0.0, 0.0).validate(geom, 1.0)
    ControlDecision(5.0, 1.0).validate(geom, 1.0)
    with pytest.raises(DomainError):
        ControlDecision(5.1, 0.5).validate(geom)
    with pytest.raises(DomainError):
        ControlDecision(1.0, 1.5).validate(geom, 1.0)
    with pytest.raises(DomainError):
        ControlDecision(1.0, math.nan).validate(geom)
