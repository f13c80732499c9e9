import math

import numpy as np
import pytest

from magpic import pushers
from magpic.fields import harmonic_trap, ElectricField
from magpic.kernels import (
    GAMMA,
    MagneticProfile,
    ScaleParams,
    radial_wave_profile,
    rot90_cw,
    uniform_profile,
)
from magpic.pushers import (
    GCState,
    NoiseDraw,
    PhaseState,
    apsi1,
    apsi1_step,
    apsi2,
    apsi2_step,
    em_step,
    euler_maruyama,
    gc_drift_euler,
    gc_euler,
    gc_euler_step,
    gc_si2,
)

BENCH_X0 = np.array([0.3, 0.2])
BENCH_V0 = np.array([-0.7, 0.08])


def zero_field_profile():
    # b-tilde identically zero; the reference value is unused by the pushers.
    return MagneticProfile(btilde=lambda y: np.zeros(np.shape(y)[:-1]), b0=1.0)


def zero_e():
    return ElectricField.from_function(lambda x: np.zeros_like(x))


def bench_params(eps=2.0**-4, tau=1.0, sigma=1.0, dt=math.pi / 30.0):
    return ScaleParams(epsilon=eps, tau=tau, sigma=sigma, dt=dt)


# Independent oracles: assemble the block systems densely and solve them.

def dense_apsi1(x, v, efield, profile, p, xi):
    b = float(profile.eval(x, p.epsilon))
    K = np.array([[0.0, 1.0], [-1.0, 0.0]])
    I = np.eye(2)
    A = np.zeros((4, 4))
    A[:2, :2] = I
    A[:2, 2:] = -p.delta * I
    A[2:, 2:] = (1.0 + p.delta / p.tau) * I - p.lambda_ * b * K
    kick = math.sqrt(2.0 * p.sigma * p.delta / p.tau) * xi
    rhs = np.concatenate([x, v + p.delta * efield.evaluate(x) + kick])
    sol = np.linalg.solve(A, rhs)
    return sol[:2], sol[2:]


def dense_apsi2(x, v, efield, profile, p, xi):
    K = np.array([[0.0, 1.0], [-1.0, 0.0]])
    I = np.eye(2)
    gd = GAMMA * p.delta

    def stage_matrix(bval):
        A = np.zeros((4, 4))
        A[:2, :2] = I
        A[:2, 2:] = -gd * I
        A[2:, 2:] = (1.0 + gd / p.tau) * I - GAMMA * p.lambda_ * bval * K
        return A

    b0 = float(profile.eval(x, p.epsilon))
    rhs1 = np.concatenate([x, v + gd * efield.evaluate(x)])
    s1 = np.linalg.solve(stage_matrix(b0), rhs1)
    v1 = s1[2:]
    f1 = efield.evaluate(x) + (b0 / p.epsilon) * (K @ v1) - v1 / p.tau
    x2 = x + (p.delta / (2.0 * GAMMA)) * v1
    b2 = float(profile.eval(x2, p.epsilon))
    kick = math.sqrt(2.0 * p.sigma * p.delta / p.tau) * xi
    rhs2 = np.concatenate([
        x + (1.0 - GAMMA) * p.delta * v1,
        v + (1.0 - GAMMA) * p.delta * f1 + gd * efield.evaluate(x2) + kick,
    ])
    s2 = np.linalg.solve(stage_matrix(b2), rhs2)
    return s2[:2], s2[2:]


# Scaled residuals of the defining relations (backward-error style): each
# relation is evaluated as written and normalized by its largest term.

def apsi1_residuals(x, v, x_new, v_new, efield, profile, p, xi):
    b = float(profile.eval(x, p.epsilon))
    kick = math.sqrt(2.0 * p.sigma * p.delta / p.tau) * xi
    terms_v = [v, p.delta * efield.evaluate(x), p.lambda_ * b * rot90_cw(v_new),
               (p.delta / p.tau) * v_new, kick]
    r_x = x_new - x - p.delta * v_new
    r_v = v_new - sum(terms_v[:3]) + terms_v[3] - terms_v[4]
    scale_x = max(1.0, *(float(np.max(np.abs(t))) for t in (x, p.delta * v_new)))
    scale_v = max(1.0, *(float(np.max(np.abs(t))) for t in terms_v))
    return float(np.max(np.abs(r_x))) / scale_x, float(np.max(np.abs(r_v))) / scale_v


def apsi2_residuals(x, v, x_new, v_new, stages, efield, profile, p, xi):
    # The stage forces are substituted textually, so each relation is linear
    # in the unknowns and its residual is scaled by its largest term.
    b0 = float(profile.eval(x, p.epsilon))
    gd = GAMMA * p.delta
    gl = GAMMA * p.lambda_
    od = (1.0 - GAMMA) * p.delta
    ol = (1.0 - GAMMA) * p.lambda_
    v1, x1, x2 = stages["v1"], stages["x1"], stages["x2"]
    e0 = efield.evaluate(x)
    e2 = efield.evaluate(x2)
    b2 = float(profile.eval(x2, p.epsilon))
    kick = math.sqrt(2.0 * p.sigma * p.delta / p.tau) * xi

    rels = [
        (x1 - x - gd * v1, [x, gd * v1]),
        (v1 - v - gd * e0 - gl * b0 * rot90_cw(v1) + (gd / p.tau) * v1,
         [v, gd * e0, gl * b0 * rot90_cw(v1), (gd / p.tau) * v1]),
        (x_new - x - od * v1 - gd * v_new, [x, od * v1, gd * v_new]),
        (v_new - v - od * e0 - ol * b0 * rot90_cw(v1) + (od / p.tau) * v1
         - gd * e2 - gl * b2 * rot90_cw(v_new) + (gd / p.tau) * v_new - kick,
         [v, od * e0, ol * b0 * rot90_cw(v1), (od / p.tau) * v1, gd * e2,
          gl * b2 * rot90_cw(v_new), (gd / p.tau) * v_new, kick]),
    ]
    out = []
    for resid, terms in rels:
        scale = max(1.0, *(float(np.max(np.abs(t))) for t in terms))
        out.append(float(np.max(np.abs(resid))) / scale)
    return out


class TestApsi1:
    def test_pure_friction(self):
        p = ScaleParams(epsilon=1.0, tau=1.0, sigma=0.0, dt=0.5)
        x, v = apsi1(np.zeros(2), np.array([1.5, 0.0]), zero_e(),
                     zero_field_profile(), p, np.zeros(2))
        assert np.allclose(v, [1.0, 0.0], atol=1e-15)
        assert np.allclose(x, [0.5, 0.0], atol=1e-15)

    def test_against_dense_block_solve(self):
        p = bench_params()
        prof = radial_wave_profile(p.epsilon)
        ef = harmonic_trap()
        xi = np.array([0.5, -0.25])
        x_new, v_new = apsi1(BENCH_X0, BENCH_V0, ef, prof, p, xi)
        x_ref, v_ref = dense_apsi1(BENCH_X0, BENCH_V0, ef, prof, p, xi)
        assert np.max(np.abs(x_new - x_ref)) <= 1e-13
        assert np.max(np.abs(v_new - v_ref)) <= 1e-13

    def test_defining_relations_hold(self):
        p = bench_params(sigma=0.0)
        prof = radial_wave_profile(p.epsilon)
        ef = harmonic_trap()
        x_new, v_new = apsi1(BENCH_X0, BENCH_V0, ef, prof, p, np.zeros(2))
        rx, rv = apsi1_residuals(BENCH_X0, BENCH_V0, x_new, v_new, ef, prof, p,
                                 np.zeros(2))
        assert rx <= 1e-12 and rv <= 1e-12

    def test_wrapper_matches_core(self):
        p = bench_params()
        prof = radial_wave_profile(p.epsilon)
        xi = NoiseDraw(np.array([0.1, -0.3]))
        s = apsi1_step(PhaseState(BENCH_X0, BENCH_V0), harmonic_trap(), prof, p, xi)
        x, v = apsi1(BENCH_X0, BENCH_V0, harmonic_trap(), prof, p, xi.xi)
        assert np.array_equal(s.x, x) and np.array_equal(s.v, v)

    def test_batch_matches_scalar(self):
        p = bench_params()
        prof = radial_wave_profile(p.epsilon)
        rng = np.random.default_rng(11)
        xs = rng.uniform(-2, 2, (40, 2))
        vs = rng.uniform(-1, 1, (40, 2))
        xis = rng.normal(size=(40, 2))
        bx, bv = apsi1(xs, vs, harmonic_trap(), prof, p, xis)
        for k in (0, 13, 39):
            sx, sv = apsi1(xs[k], vs[k], harmonic_trap(), prof, p, xis[k])
            assert np.max(np.abs(bx[k] - sx)) <= 1e-15
            assert np.max(np.abs(bv[k] - sv)) <= 1e-15


class TestApsi2:
    def test_friction_only_closed_form(self):
        p = ScaleParams(epsilon=1.0, tau=1.0, sigma=0.0, dt=0.5)
        x0 = np.array([0.2, -0.1])
        v0 = np.array([1.0, -2.0])
        gd = GAMMA * p.delta
        v1 = v0 / (1.0 + gd / p.tau)
        f1 = -v1 / p.tau
        v_ref = (v0 + (1.0 - GAMMA) * p.delta * f1) / (1.0 + gd / p.tau)
        x_ref = x0 + (1.0 - GAMMA) * p.delta * v1 + gd * v_ref
        x_new, v_new = apsi2(x0, v0, zero_e(), zero_field_profile(), p, np.zeros(2))
        assert np.max(np.abs(v_new - v_ref)) <= 1e-14
        assert np.max(np.abs(x_new - x_ref)) <= 1e-14

    def test_against_dense_two_stage_solve(self):
        p = bench_params()
        prof = radial_wave_profile(p.epsilon)
        ef = harmonic_trap()
        xi = np.array([0.5, -0.25])
        x_new, v_new = apsi2(BENCH_X0, BENCH_V0, ef, prof, p, xi)
        x_ref, v_ref = dense_apsi2(BENCH_X0, BENCH_V0, ef, prof, p, xi)
        assert np.max(np.abs(x_new - x_ref)) <= 1e-12
        assert np.max(np.abs(v_new - v_ref)) <= 1e-12

    def test_agrees_with_apsi1_to_second_order(self):
        # Nonstiff single step: schemes differ by O(dt^2).
        prof = radial_wave_profile(1.0)
        ef = harmonic_trap()
        gaps = []
        dts = [1e-2, 5e-3, 2.5e-3]
        for dt in dts:
            p = ScaleParams(epsilon=1.0, tau=1.0, sigma=0.0, dt=dt)
            x1, v1 = apsi1(BENCH_X0, BENCH_V0, ef, prof, p, np.zeros(2))
            x2, v2 = apsi2(BENCH_X0, BENCH_V0, ef, prof, p, np.zeros(2))
            gaps.append(max(np.max(np.abs(x1 - x2)), np.max(np.abs(v1 - v2))))
        order = np.polyfit(np.log(dts), np.log(gaps), 1)[0]
        assert order >= 1.8

    def test_wrapper_matches_core(self):
        p = bench_params()
        prof = radial_wave_profile(p.epsilon)
        xi = NoiseDraw(np.array([0.4, 0.2]))
        s = apsi2_step(PhaseState(BENCH_X0, BENCH_V0), harmonic_trap(), prof, p, xi)
        x, v = apsi2(BENCH_X0, BENCH_V0, harmonic_trap(), prof, p, xi.xi)
        assert np.array_equal(s.x, x) and np.array_equal(s.v, v)


class TestSubstitutionProperty:
    def test_residuals_over_random_inputs(self):
        rng = np.random.default_rng(42)
        n = 1000
        eps = 10.0 ** rng.uniform(-8, 0, n)
        tau = 10.0 ** rng.uniform(-1, 1, n)
        sig = rng.uniform(0.0, 2.0, n)
        ef = harmonic_trap()
        worst = 0.0
        for k in range(n):
            p = ScaleParams(epsilon=eps[k], tau=tau[k], sigma=sig[k], dt=math.pi / 30)
            prof = radial_wave_profile(eps[k])
            x = rng.uniform(-2, 2, 2)
            v = rng.uniform(-2, 2, 2)
            xi = rng.normal(size=2)
            x1, v1 = apsi1(x, v, ef, prof, p, xi)
            assert np.all(np.isfinite(x1)) and np.all(np.isfinite(v1))
            worst = max(worst, *apsi1_residuals(x, v, x1, v1, ef, prof, p, xi))
            x2, v2, st = apsi2(x, v, ef, prof, p, xi, return_stages=True)
            assert np.all(np.isfinite(x2)) and np.all(np.isfinite(v2))
            worst = max(worst, *apsi2_residuals(x, v, x2, v2, st, ef, prof, p, xi))
        assert worst <= 1e-12

    def test_extreme_stiffness_stays_bounded(self):
        # eps down to 1e-8 at fixed dt: outputs finite with bounded velocity.
        ef = harmonic_trap()
        for eps in (1e-4, 1e-6, 1e-8):
            p = ScaleParams(epsilon=eps, tau=1.0, sigma=1.0, dt=math.pi / 30)
            prof = radial_wave_profile(eps)
            x, v = BENCH_X0.copy(), BENCH_V0.copy()
            rng = np.random.default_rng(3)
            for _ in range(100):
                x, v = apsi1(x, v, ef, prof, p, rng.normal(size=2))
                assert np.all(np.isfinite(x)) and np.all(np.isfinite(v))
                assert np.linalg.norm(v) < 1e3
            x, v = BENCH_X0.copy(), BENCH_V0.copy()
            for _ in range(100):
                x, v = apsi2(x, v, ef, prof, p, rng.normal(size=2))
                assert np.all(np.isfinite(x)) and np.all(np.isfinite(v))
                assert np.linalg.norm(v) < 1e3


class TestEulerMaruyama:
    def test_pure_friction(self):
        p = ScaleParams(epsilon=1.0, tau=1.0, sigma=0.0, dt=0.1)
        x, v = euler_maruyama(np.zeros(2), np.array([1.0, 0.0]), zero_e(),
                              zero_field_profile(), p, np.zeros(2))
        assert np.allclose(v, [0.9, 0.0], atol=1e-16)

    def test_free_streaming(self):
        p = ScaleParams(epsilon=1.0, tau=1e12, sigma=0.0, dt=0.1)
        x0, v0 = np.array([1.0, 2.0]), np.array([0.5, -0.5])
        x, v = euler_maruyama(x0, v0, zero_e(), zero_field_profile(), p, np.zeros(2))
        assert np.max(np.abs(x - (x0 + p.delta * v0))) <= 1e-16
        assert np.max(np.abs(v - v0)) <= 1e-10

    def test_agrees_with_apsi1_at_small_steps(self):
        # Shared noise path, nonstiff eps: trajectories differ by O(dt).
        prof = radial_wave_profile(1.0)
        ef = harmonic_trap()
        gaps = []
        dts = [4e-3, 2e-3, 1e-3]
        for dt in dts:
            p = ScaleParams(epsilon=1.0, tau=1.0, sigma=1.0, dt=dt)
            n = int(round(0.5 / dt))
            rng = np.random.default_rng(8)
            xa = xb = np.array([0.3, 0.2])
            va = vb = np.array([-0.7, 0.08])
            for _ in range(n):
                xi = rng.normal(size=2) / math.sqrt(dt) * math.sqrt(dt)
                xa, va = apsi1(xa, va, ef, prof, p, xi)
                xb, vb = euler_maruyama(xb, vb, ef, prof, p, xi)
            gaps.append(np.max(np.abs(xa - xb)))
        assert gaps[0] > gaps[1] > gaps[2]
        order = np.polyfit(np.log(dts), np.log(gaps), 1)[0]
        assert order >= 0.7

    def test_wrapper(self):
        p = ScaleParams(epsilon=1.0, tau=1.0, sigma=0.0, dt=0.1)
        s = em_step(PhaseState(np.zeros(2), np.ones(2)), zero_e(),
                    zero_field_profile(), p, NoiseDraw(np.zeros(2)))
        assert np.allclose(s.v, [0.9, 0.9])


def rotation_exact(u0, t):
    # Exact flow of du/dt = K(-u): u(t) = cos(t) u0 - sin(t) K u0.
    return math.cos(t) * u0 - math.sin(t) * rot90_cw(u0)


class TestGuidingCenter:
    def test_euler_single_step(self):
        dt = math.pi / 30.0
        u = gc_euler(np.array([0.3, 0.2]), harmonic_trap(), 1.0, dt)
        assert np.allclose(u, [0.3 - 0.2 * dt, 0.2 + 0.3 * dt], atol=1e-16)

    def test_zero_drift(self):
        u0 = np.array([1.0, -1.0])
        assert np.array_equal(gc_euler(u0, zero_e(), 1.0, 0.1), u0)
        assert np.array_equal(gc_si2(u0, zero_e(), 1.0, 0.1), u0)

    def test_zero_b0_rejected(self):
        from magpic.errors import DomainError
        with pytest.raises(DomainError):
            gc_euler(np.zeros(2), harmonic_trap(), 0.0, 0.1)
        with pytest.raises(DomainError):
            gc_si2(np.zeros(2), harmonic_trap(), 0.0, 0.1)

    def test_euler_first_order_against_rotation(self):
        u0 = np.array([0.3, 0.2])
        errs = []
        steps = [60, 120, 240]
        for n in steps:
            dt = math.pi / n
            u = u0.copy()
            for _ in range(n):
                u = gc_euler(u, harmonic_trap(), 1.0, dt)
            errs.append(np.linalg.norm(u - rotation_exact(u0, math.pi)))
        order = np.polyfit(np.log([math.pi / n for n in steps]), np.log(errs), 1)[0]
        assert 0.85 <= order <= 1.15

    def test_si2_second_order_against_rotation(self):
        u0 = np.array([0.3, 0.2])
        errs = []
        steps = [60, 120, 240]
        for n in steps:
            dt = math.pi / n
            u = u0.copy()
            for _ in range(n):
                u = gc_si2(u, harmonic_trap(), 1.0, dt)
            errs.append(np.linalg.norm(u - rotation_exact(u0, math.pi)))
        order = np.polyfit(np.log([math.pi / n for n in steps]), np.log(errs), 1)[0]
        assert 1.85 <= order <= 2.15

    def test_si2_single_step_hand_evaluation(self):
        u0 = np.array([1.0, 0.0])
        dt = 0.1
        k0 = rot90_cw(-u0)
        u1 = u0 + dt / (2.0 * GAMMA) * k0
        k1 = rot90_cw(-u1)
        ref = u0 + (1.0 - GAMMA) * dt * k0 + GAMMA * dt * k1
        assert np.max(np.abs(gc_si2(u0, harmonic_trap(), 1.0, dt) - ref)) <= 1e-16

    def test_drift_euler_collapses_to_uniform_limit(self):
        u0 = np.array([10.0, 14.0])
        a = gc_drift_euler(u0, harmonic_trap(), uniform_profile(1.0), 0.0, 1.0,
                           math.pi / 30)
        b = gc_euler(u0, harmonic_trap(), 1.0, math.pi / 30)
        assert np.max(np.abs(a - b)) <= 1e-15

    def test_drift_euler_single_step_formula(self):
        eps, tau, dt = 2.0**-4, 1.0, math.pi / 30.0
        prof = radial_wave_profile(eps)
        u0 = np.array([10.0, 14.0])
        b = float(prof.eval(u0, eps))
        K = np.array([[0.0, 1.0], [-1.0, 0.0]])
        R = (b * tau**2 * K + eps * tau * np.eye(2)) / ((b * tau) ** 2 + eps**2)
        ref = u0 + dt * (R @ (-u0))
        got = gc_drift_euler(u0, harmonic_trap(), prof, eps, tau, dt)
        assert np.max(np.abs(got - ref)) <= 1e-14

    def test_step_wrapper(self):
        g = gc_euler_step(GCState(np.array([0.3, 0.2])), harmonic_trap(), 1.0, 0.1)
        assert isinstance(g, GCState)


class TestThermalization:
    def test_stationary_velocity_variance(self):
        # Homogeneous APSI1 run: per-component velocity variance approaches
        # sigma with an O(dt/(eps*tau)) bias; dt = 0.02 keeps it inside 5%.
        dt = 0.02
        n_steps = 100_000
        burn = 20_000
        lanes = 16
        prof = uniform_profile(1.0)
        ef = zero_e()
        for sigma in (0.5, 1.0, 2.0):
            p = ScaleParams(epsilon=1.0, tau=1.0, sigma=sigma, dt=dt)
            rng = np.random.default_rng(1000 + int(10 * sigma))
            xi_all = rng.normal(size=(n_steps, lanes, 2))
            x = np.zeros((lanes, 2))
            v = np.zeros((lanes, 2))
            acc = 0.0
            cnt = 0
            for n in range(n_steps):
                x, v = apsi1(x, v, ef, prof, p, xi_all[n])
                if n >= burn:
                    acc += float(np.mean(v**2))
                    cnt += 1
            var = acc / cnt
            assert abs(var - sigma) / sigma < 0.05
