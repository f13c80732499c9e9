import math

import numpy as np
import pytest

from magpic import kernels
from magpic.errors import DomainError
from magpic.kernels import (
    GAMMA,
    IDENTITY,
    ROT,
    Mat2,
    ScaleParams,
    drift_matrix,
    exb_matrix,
    radial_wave_profile,
    resolvent_coeffs,
    rot90_cw,
    uniform_profile,
    velocity_resolvent,
)


def bench_params(eps=2.0**-4, tau=1.0, sigma=1.0, dt=math.pi / 30.0):
    return ScaleParams(epsilon=eps, tau=tau, sigma=sigma, dt=dt)


def mat_close(m, arr, tol):
    return np.max(np.abs(m.as_array() - np.asarray(arr))) <= tol


class TestRotation:
    def test_unit_vectors(self):
        assert np.allclose(rot90_cw([1.0, 0.0]), [0.0, -1.0])
        assert np.allclose(rot90_cw([0.0, 1.0]), [1.0, 0.0])

    def test_square_is_minus_identity(self):
        w = np.array([0.3, 0.2])
        assert np.array_equal(rot90_cw(rot90_cw(w)), -w)
        assert (ROT @ ROT) == Mat2(-1.0, 0.0, 0.0, -1.0)

    def test_skew(self):
        assert ROT.T == -ROT


class TestScaleParams:
    def test_derived_ratios(self):
        p = bench_params(eps=0.25, dt=0.5)
        assert p.delta == 0.5 / 0.25
        assert p.lambda_ == 0.5 / 0.25**2

    def test_derived_track_mutation(self):
        p = bench_params()
        p.dt = 0.1
        assert p.delta == 0.1 / p.epsilon
        assert p.lambda_ == 0.1 / p.epsilon**2

    def test_positivity(self):
        with pytest.raises(DomainError):
            ScaleParams(epsilon=-1.0, tau=1.0, sigma=1.0, dt=0.1)
        with pytest.raises(DomainError):
            ScaleParams(epsilon=1.0, tau=1.0, sigma=-0.5, dt=0.1)
        with pytest.raises(DomainError):
            ScaleParams(epsilon=1.0, tau=1.0, sigma=1.0, dt=0.0)


class TestVelocityResolvent:
    def test_formal_zero_step_limit_is_identity(self):
        a, c = resolvent_coeffs(1.7, 0.0, 0.0)
        assert (a, c) == (1.0, 0.0)

    def test_inverse_identity(self):
        p = bench_params()
        prof = radial_wave_profile(p.epsilon)
        for x in ([0.3, 0.2], [1.0, -2.0], [5.0, 5.0]):
            m = velocity_resolvent(np.asarray(x), prof, p)
            b = float(prof.eval(np.asarray(x), p.epsilon))
            fwd = Mat2(1.0 + p.delta / p.tau, 0.0, 0.0, 1.0 + p.delta / p.tau) \
                - ROT.scaled(p.lambda_ * b)
            assert (fwd @ m - IDENTITY).max_norm() <= 1e-12

    def test_against_dense_inverse(self):
        # Independent oracle: assemble the 2x2 system and invert it densely.
        p = bench_params()
        x = np.array([0.3, 0.2])
        prof = uniform_profile(1.0)
        m = velocity_resolvent(x, prof, p)
        fwd = np.array(
            [[1.0 + p.delta / p.tau, -p.lambda_], [p.lambda_, 1.0 + p.delta / p.tau]]
        )
        assert mat_close(m, np.linalg.inv(fwd), 1e-14)

    def test_stage_variant_against_dense_inverse(self):
        p = bench_params()
        x = np.array([0.3, 0.2])
        prof = uniform_profile(1.0)
        m = velocity_resolvent(x, prof, p, weight=GAMMA)
        gd, gl = GAMMA * p.delta, GAMMA * p.lambda_
        fwd = np.array([[1.0 + gd / p.tau, -gl], [gl, 1.0 + gd / p.tau]])
        assert mat_close(m, np.linalg.inv(fwd), 1e-14)

    def test_stage_weight_constant(self):
        assert GAMMA == 1.0 - 1.0 / math.sqrt(2.0)


class TestDriftMatrix:
    def test_zero_eps_uniform_field(self):
        prof = uniform_profile(2.0)
        r = drift_matrix(np.zeros(2), prof, eps=0.0, tau=1.0)
        assert np.allclose(r @ np.array([1.0, 0.0]), [0.0, -0.5])
        assert mat_close(r, ROT.scaled(0.5).as_array(), 0.0)

    def test_pure_friction_limit(self):
        # Field passes through zero at the evaluation point: R collapses to
        # (eps tau / eps^2) I = I for eps = tau = 1.
        prof = kernels.MagneticProfile(btilde=lambda y: 1.0 - y[..., 0], b0=1.0)
        r = drift_matrix(np.array([1.0, 0.0]), prof, eps=1.0, tau=1.0)
        assert mat_close(r, np.eye(2), 0.0)

    def test_degenerate_denominator(self):
        with pytest.raises(DomainError):
            kernels.drift_coeffs(0.0, 0.0, 1.0)

    def test_matches_uniform_limit(self):
        for b0 in (1.0, -2.0, 0.7):
            r = drift_matrix(np.array([3.0, -1.0]), uniform_profile(b0), 0.0, 2.0)
            assert (r - exb_matrix(b0)).max_norm() == 0.0

    def test_resolvent_drift_identity(self):
        # lam*M - R == -M @ R at the quoted benchmark point.
        p = bench_params(eps=2.0**-3)
        prof = radial_wave_profile(p.epsilon)
        x = np.array([0.3, 0.2])
        m = velocity_resolvent(x, prof, p)
        r = drift_matrix(x, prof, p.epsilon, p.tau)
        lhs = m.scaled(p.lambda_) - r
        assert (lhs - (-(m @ r))).max_norm() <= 1e-10


class TestExbMatrix:
    def test_unit_field(self):
        assert exb_matrix(1.0) == ROT

    def test_negative_field(self):
        assert np.allclose(exb_matrix(-2.0) @ np.array([0.0, 1.0]), [-0.5, 0.0])

    def test_zero_rejected(self):
        with pytest.raises(DomainError):
            exb_matrix(0.0)


class TestRandomizedProperties:
    def _draws(self, n=1000, seed=20260809):
        rng = np.random.default_rng(seed)
        eps = 10.0 ** rng.uniform(-8, 0, n)
        tau = 10.0 ** rng.uniform(-2, 2, n)
        dt = 10.0 ** rng.uniform(-3, 0, n)
        b = rng.uniform(0.5, 2.0, n) * rng.choice([-1.0, 1.0], n)
        x = rng.uniform(-5, 5, (n, 2))
        return eps, tau, dt, b, x

    def test_resolvent_inverses_hold(self):
        eps, tau, dt, b, x = self._draws()
        for k in range(len(eps)):
            p = ScaleParams(epsilon=eps[k], tau=tau[k], sigma=1.0, dt=dt[k])
            prof = uniform_profile(b[k])
            for w in (1.0, GAMMA):
                m = velocity_resolvent(x[k], prof, p, weight=w)
                d = 1.0 + w * p.delta / p.tau
                fwd = Mat2(d, 0.0, 0.0, d) - ROT.scaled(w * p.lambda_ * b[k])
                assert (fwd @ m - IDENTITY).max_norm() <= 1e-12

    def test_resolvent_drift_identity_randomized(self):
        eps, tau, dt, b, x = self._draws()
        for k in range(len(eps)):
            p = ScaleParams(epsilon=eps[k], tau=tau[k], sigma=1.0, dt=dt[k])
            prof = uniform_profile(b[k])
            m = velocity_resolvent(x[k], prof, p)
            r = drift_matrix(x[k], prof, p.epsilon, p.tau)
            lhs = m.scaled(p.lambda_) - r
            assert (lhs - (-(m @ r))).max_norm() <= 1e-10


def test_drift_matrix_limit_rate():
    # || R - K/b0 || should shrink like (eps^s tau^2 + eps^2 + eps tau) /
    # (eps^2 + tau^2) with s = 1 for the radial-wave profile.
    rng = np.random.default_rng(7)
    xs = rng.uniform(-5, 5, (64, 2))
    tau = 1.0
    eps_list = 2.0 ** -np.arange(1, 11)
    worst = []
    bound = []
    for eps in eps_list:
        prof = radial_wave_profile(eps)
        r0 = exb_matrix(prof.b0)
        gap = max(
            (drift_matrix(x, prof, eps, tau) - r0).max_norm() for x in xs
        )
        worst.append(gap)
        bound.append((eps * tau**2 + eps**2 + eps * tau) / (eps**2 + tau**2))
    worst = np.array(worst)
    bound = np.array(bound)
    assert np.all(worst <= 1.5 * bound)
    slope = np.polyfit(np.log(eps_list), np.log(worst), 1)[0]
    assert 0.8 <= slope <= 1.2


def test_radial_wave_profile_values():
    prof = radial_wave_profile(2.0**-3)
    assert float(prof.eval(np.zeros(2), 2.0**-3)) == 1.0
    x = np.array([np.pi / 2.0, 0.0])
    assert abs(float(prof.eval(x, 2.0**-3)) - (1.0 + 2.0**-3)) < 1e-15


def test_uniform_profile_constant():
    prof = uniform_profile(3.0)
    pts = np.random.default_rng(0).uniform(-9, 9, (50, 2))
    assert np.all(prof.eval(pts, 0.3) == 3.0)
