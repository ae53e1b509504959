import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from swefvs.core import (
    PhysConstants,
    UnitNormal,
    celerity,
    flux_1d,
    flux_2d,
    normal_flux,
    rotate,
    rotate_back,
    rotate_back_flux,
    split_flux_1d,
    split_flux_2d,
    velocity,
)

depths = st.floats(1e-3, 10.0)
speeds = st.floats(-20.0, 20.0)
angles = st.floats(-math.pi, math.pi)


def test_celerity_values():
    assert celerity(1.0, 9.81) == pytest.approx(3.132092, abs=1e-6)
    assert celerity(0.0) == 0.0
    assert celerity(0.1, 9.81) == pytest.approx(0.990454, abs=1e-6)


def test_celerity_rejects_negative_depth():
    with pytest.raises(ValueError):
        celerity(-1.0)


def test_gravity_must_be_positive():
    assert PhysConstants().g == 9.81
    with pytest.raises(ValueError):
        PhysConstants(0.0).check()


def test_velocity_is_zero_below_dry_tolerance():
    u = velocity(np.array([0.0, 1e-11, 2.0]), np.array([1.0, 1.0, 4.0]))
    np.testing.assert_array_equal(u, [0.0, 0.0, 2.0])


def test_flux_1d_examples():
    np.testing.assert_allclose(flux_1d([1.0, 0.0, 1.0]), [0.0, 4.905, 0.0], rtol=1e-15)
    np.testing.assert_array_equal(flux_1d([0.0, 0.0, 0.0]), [0.0, 0.0, 0.0])
    np.testing.assert_allclose(flux_1d([1.0, 2.0, 0.5]), [2.0, 8.905, 1.0], rtol=1e-15)


def test_split_flux_1d_examples():
    fa, fp = split_flux_1d([1.0, 0.0, 1.0])
    np.testing.assert_array_equal(fa, [0.0, 0.0, 0.0])
    np.testing.assert_allclose(fp, [0.0, 4.905, 0.0], rtol=1e-15)
    fa, fp = split_flux_1d([1.0, 2.0, 0.5])
    np.testing.assert_allclose(fa, [0.0, 4.0, 1.0], rtol=1e-15)
    np.testing.assert_allclose(fp, [2.0, 4.905, 0.0], rtol=1e-15)
    fa, fp = split_flux_1d([0.0, 0.0, 0.0])
    assert not fa.any() and not fp.any()


@settings(max_examples=200, deadline=None)
@given(depths, speeds, st.floats(0.0, 1.0))
def test_split_flux_1d_sums_exactly(h, u, psi):
    q = np.array([h, h * u, h * psi])
    fa, fp = split_flux_1d(q)
    np.testing.assert_array_equal(fa + fp, flux_1d(q))


def test_flux_2d_examples():
    fx, fy = flux_2d([1.0, 0.0, 0.0])
    np.testing.assert_allclose(fx, [0.0, 4.905, 0.0], rtol=1e-15)
    np.testing.assert_allclose(fy, [0.0, 0.0, 4.905], rtol=1e-15)
    fx, fy = flux_2d([2.0, 2.0, 0.0])
    np.testing.assert_allclose(fx, [2.0, 21.62, 0.0], rtol=1e-15)
    np.testing.assert_allclose(fy, [0.0, 0.0, 19.62], rtol=1e-15)


@settings(max_examples=200, deadline=None)
@given(depths, speeds, speeds)
def test_split_flux_2d_sums_exactly(h, u, v):
    q = np.array([h, h * u, h * v])
    (fxa, fxp), (fya, fyp) = split_flux_2d(q)
    fx, fy = flux_2d(q)
    np.testing.assert_array_equal(fxa + fxp, fx)
    np.testing.assert_array_equal(fya + fyp, fy)


def test_dry_state_gives_zero_fluxes():
    fx, fy = flux_2d([0.0, 0.0, 0.0])
    assert not fx.any() and not fy.any()


def test_rotate_examples():
    q = np.array([1.0, 2.0, 3.0])
    np.testing.assert_array_equal(rotate(q, (1.0, 0.0)), q)
    np.testing.assert_allclose(rotate(q, (0.0, 1.0)), [1.0, 3.0, -2.0], atol=1e-15)
    np.testing.assert_array_equal(rotate_back_flux(q, (1.0, 0.0)), q)


def test_rotate_rejects_non_unit_normal():
    with pytest.raises(ValueError):
        rotate([1.0, 0.0, 0.0], (1.0, 1.0))


def test_unit_normal_angle():
    n = UnitNormal.from_angle(0.3)
    assert n.nx ** 2 + n.ny ** 2 == pytest.approx(1.0, abs=1e-14)
    assert n.theta == pytest.approx(0.3, abs=1e-15)


def test_rotation_roundtrip_random():
    rng = np.random.default_rng(1)
    q = rng.uniform(-5, 5, (3, 100))
    q[0] = np.abs(q[0])
    theta = rng.uniform(-np.pi, np.pi, 100)
    n = (np.cos(theta), np.sin(theta))
    np.testing.assert_allclose(rotate_back(rotate(q, n), n), q, rtol=0, atol=1e-14 * 5)


@settings(max_examples=300, deadline=None)
@given(depths, speeds, speeds, angles)
def test_rotational_invariance(h, u, v, theta):
    q = np.array([h, h * u, h * v])
    n = (math.cos(theta), math.sin(theta))
    fx, _ = flux_2d(rotate(q, n))
    lhs = rotate_back_flux(fx, n)
    rhs = normal_flux(q, n)
    scale = np.max(np.abs(flux_2d(q)))
    np.testing.assert_allclose(lhs, rhs, rtol=0, atol=1e-13 * scale)
