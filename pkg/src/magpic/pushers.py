"""Single-particle time integrators.

The two semi-implicit schemes stay stable and accurate uniformly in the
stiffness parameter; the explicit Euler-Maruyama discretization of the same
SDE is kept as a cross-check oracle valid only when dt resolves eps**2.
Three integrators for the guiding-center limit models accompany them.

All cores are written against (..., 2) arrays so one code path serves a
single particle, an ensemble, or a bundle of Brownian paths.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .kernels import (
    GAMMA,
    apply_coeffs,
    drift_coeffs,
    resolvent_coeffs,
    rot90_cw,
)


@dataclass
class PhaseState:
    """Position and velocity of one marker."""

    x: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.float64)
        self.v = np.asarray(self.v, dtype=np.float64)
        if not (np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.v))):
            raise DomainError("phase state must be finite")


@dataclass
class GCState:
    """Guiding-center position evolved by the limit models."""

    u: np.ndarray

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=np.float64)
        if not np.all(np.isfinite(self.u)):
            raise DomainError("guiding-center state must be finite")


@dataclass
class NoiseDraw:
    """One 2-vector of standard normal samples from a keyed stream."""

    xi: np.ndarray

    def __post_init__(self):
        self.xi = np.asarray(self.xi, dtype=np.float64)


def noise_amplitude(p):
    """Velocity kick amplitude sqrt(2*sigma*delta/tau) of one step."""
    return np.sqrt(2.0 * p.sigma * p.delta / p.tau)


def apsi1(x, v, efield, profile, p, xi):
    """First-order semi-implicit step; returns (x_next, v_next).

    v_next solves the implicit relation
        v_next = v + delta*E(x) + lam*b(x)*K v_next - (delta/tau) v_next + kick
    via the closed-form resolvent, then x_next = x + delta*v_next.
    """
    e0 = efield.evaluate(x)
    bv = profile.eval(x, p.epsilon)
    a, c = resolvent_coeffs(bv, p.delta / p.tau, p.lambda_)
    rhs = v + p.delta * e0 + noise_amplitude(p) * xi
    v_next = apply_coeffs(a, c, rhs)
    return x + p.delta * v_next, v_next


def apsi2(x, v, efield, profile, p, xi, return_stages=False):
    """Two-stage second-order semi-implicit step with additive noise.

    Stage one solves the gamma-weighted implicit block at x; the auxiliary
    point x2 = x + (delta/2 gamma) v1 relocates the field and the resolvent
    for stage two.  The noise being additive, no Milstein correction term
    appears beyond the Gaussian kick.
    """
    gd = GAMMA * p.delta
    e0 = efield.evaluate(x)
    b0v = profile.eval(x, p.epsilon)
    a1, c1 = resolvent_coeffs(b0v, gd / p.tau, GAMMA * p.lambda_)
    v1 = apply_coeffs(a1, c1, v + gd * e0)
    f1 = e0 + (np.asarray(b0v)[..., None] / p.epsilon) * rot90_cw(v1) - v1 / p.tau

    x2 = x + (p.delta / (2.0 * GAMMA)) * v1
    e2 = efield.evaluate(x2)
    b2v = profile.eval(x2, p.epsilon)
    a2, c2 = resolvent_coeffs(b2v, gd / p.tau, GAMMA * p.lambda_)
    rhs = v + (1.0 - GAMMA) * p.delta * f1 + gd * e2 + noise_amplitude(p) * xi
    v_next = apply_coeffs(a2, c2, rhs)
    x_next = x + (1.0 - GAMMA) * p.delta * v1 + gd * v_next
    if return_stages:
        stages = {"x1": x + gd * v1, "v1": v1, "x2": x2, "f1": f1, "e2": e2}
        return x_next, v_next, stages
    return x_next, v_next


def euler_maruyama(x, v, efield, profile, p, xi):
    """Explicit Euler-Maruyama step; only meaningful for dt << eps**2."""
    e0 = efield.evaluate(x)
    bv = profile.eval(x, p.epsilon)
    bterm = np.asarray(bv)[..., None] / p.epsilon * rot90_cw(v)
    v_next = v + p.delta * (e0 + bterm - v / p.tau) + noise_amplitude(p) * xi
    return x + p.delta * v, v_next


def gc_euler(u, efield, b0, dt):
    """Forward Euler on the uniform-field guiding-center model."""
    if b0 == 0.0:
        raise DomainError("b0 must be nonzero")
    return u + (dt / b0) * rot90_cw(efield.evaluate(u))


def gc_si2(u, efield, b0, dt):
    """Two-stage companion discretization of the guiding-center model."""
    if b0 == 0.0:
        raise DomainError("b0 must be nonzero")
    k0 = rot90_cw(efield.evaluate(u)) / b0
    u1 = u + (dt / (2.0 * GAMMA)) * k0
    k1 = rot90_cw(efield.evaluate(u1)) / b0
    return u + (1.0 - GAMMA) * dt * k0 + GAMMA * dt * k1


def gc_drift_euler(u, efield, profile, eps, tau, dt):
    """Forward Euler on the guiding-center model with the full drift matrix."""
    bv = profile.eval(u, eps)
    a, c = drift_coeffs(bv, eps, tau)
    return u + dt * apply_coeffs(a, c, efield.evaluate(u))


# Single-state wrappers over the array cores.

def apsi1_step(s, efield, profile, p, xi):
    x, v = apsi1(s.x, s.v, efield, profile, p, xi.xi)
    return PhaseState(x=x, v=v)


def apsi2_step(s, efield, profile, p, xi):
    x, v = apsi2(s.x, s.v, efield, profile, p, xi.xi)
    return PhaseState(x=x, v=v)


def em_step(s, efield, profile, p, xi):
    x, v = euler_maruyama(s.x, s.v, efield, profile, p, xi.xi)
    return PhaseState(x=x, v=v)


def gc_euler_step(g, efield, b0, dt):
    return GCState(u=gc_euler(g.u, efield, b0, dt))


def gc_si2_step(g, efield, b0, dt):
    return GCState(u=gc_si2(g.u, efield, b0, dt))


def gc_drift_euler_step(g, efield, profile, eps, tau, dt):
    return GCState(u=gc_drift_euler(g.u, efield, profile, eps, tau, dt))
