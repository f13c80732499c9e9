"""Scale parameters and the 2x2 matrix kernels every integrator is built from.

The kernels are the clockwise rotation generator K, the semi-implicit velocity
resolvent M (and its stage-weighted variant), the drift-response matrix R that
maps the electric field to the gyro-averaged drift velocity, and its uniform
field limit K/b0.  All of them are plain closed forms; nothing is cached
because the entries depend on position through the magnetic profile.
"""

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError

#: Stage weight of the two-stage semi-implicit scheme, kept at full precision.
GAMMA = 1.0 - 1.0 / math.sqrt(2.0)

_DEGENERATE = 1e-300


@dataclass
class ScaleParams:
    """Stiffness scales of a run: epsilon, relaxation time, diffusion, step.

    ``delta`` and ``lambda_`` are derived on every access, so mutating a field
    keeps them consistent.
    """

    epsilon: float
    tau: float
    sigma: float
    dt: float

    def __setattr__(self, name, value):
        if name in ("epsilon", "tau", "dt"):
            if not value > 0.0:
                raise DomainError(f"{name} must be strictly positive, got {value!r}")
        elif name == "sigma":
            if not value >= 0.0:
                raise DomainError(f"sigma must be nonnegative, got {value!r}")
        object.__setattr__(self, name, float(value))

    @property
    def delta(self):
        """dt / epsilon."""
        return self.dt / self.epsilon

    @property
    def lambda_(self):
        """dt / epsilon**2."""
        return self.dt / (self.epsilon * self.epsilon)


@dataclass
class MagneticProfile:
    """Scalar magnetic profile evaluated on the slow spatial scale.

    ``btilde`` maps a point (or an (..., 2) array of points) on the slow scale
    to the field strength; evaluation at a particle position x goes through
    ``eval(x, eps)`` which applies the maximal-ordering composition
    btilde(eps * x).  ``s_exponent`` records how fast the field approaches its
    reference value b0 as eps shrinks.
    """

    btilde: Callable
    b0: float
    s_exponent: float = 1.0

    def __post_init__(self):
        if self.b0 == 0.0:
            raise DomainError("profile reference value b0 must be nonzero")
        if not self.s_exponent > 0.0:
            raise DomainError("s_exponent must be positive")

    def eval(self, x, eps):
        """Field strength btilde(eps * x); scalar for a single point."""
        return self.btilde(eps * np.asarray(x, dtype=np.float64))


def uniform_profile(b0):
    """Profile of a uniform magnetic field: btilde == b0 everywhere."""
    b0 = float(b0)

    def btilde(y):
        y = np.asarray(y, dtype=np.float64)
        return np.full(y.shape[:-1], b0)

    return MagneticProfile(btilde=btilde, b0=b0, s_exponent=1.0)


def radial_wave_profile(eps, amplitude=1.0):
    """Benchmark profile whose field at position x is 1 + eps*sin(|x|).

    Stored on the slow scale, so eval(x, eps) recovers 1 + eps*sin(|x|) and
    the deviation from b0 = 1 is O(eps**1).
    """
    eps = float(eps)
    amp = float(amplitude)

    def btilde(y):
        y = np.asarray(y, dtype=np.float64)
        r = np.sqrt(y[..., 0] ** 2 + y[..., 1] ** 2)
        return 1.0 + eps * amp * np.sin(r / eps)

    return MagneticProfile(btilde=btilde, b0=1.0, s_exponent=1.0)


@dataclass(frozen=True)
class Mat2:
    """Dense 2x2 real matrix with exact elementwise arithmetic."""

    a11: float
    a12: float
    a21: float
    a22: float

    def __matmul__(self, other):
        if isinstance(other, Mat2):
            return Mat2(
                self.a11 * other.a11 + self.a12 * other.a21,
                self.a11 * other.a12 + self.a12 * other.a22,
                self.a21 * other.a11 + self.a22 * other.a21,
                self.a21 * other.a12 + self.a22 * other.a22,
            )
        w = np.asarray(other, dtype=np.float64)
        return np.stack(
            [self.a11 * w[..., 0] + self.a12 * w[..., 1],
             self.a21 * w[..., 0] + self.a22 * w[..., 1]],
            axis=-1,
        )

    def __add__(self, other):
        return Mat2(self.a11 + other.a11, self.a12 + other.a12,
                    self.a21 + other.a21, self.a22 + other.a22)

    def __sub__(self, other):
        return Mat2(self.a11 - other.a11, self.a12 - other.a12,
                    self.a21 - other.a21, self.a22 - other.a22)

    def __neg__(self):
        return Mat2(-self.a11, -self.a12, -self.a21, -self.a22)

    def scaled(self, c):
        return Mat2(c * self.a11, c * self.a12, c * self.a21, c * self.a22)

    @property
    def T(self):
        return Mat2(self.a11, self.a21, self.a12, self.a22)

    def as_array(self):
        return np.array([[self.a11, self.a12], [self.a21, self.a22]])

    def max_norm(self):
        return max(abs(self.a11), abs(self.a12), abs(self.a21), abs(self.a22))


#: Clockwise rotation generator: K @ w = (w2, -w1), K squared = -I.
ROT = Mat2(0.0, 1.0, -1.0, 0.0)
IDENTITY = Mat2(1.0, 0.0, 0.0, 1.0)


def rot90_cw(w):
    """Apply the rotation generator: (w1, w2) -> (w2, -w1), any batch shape."""
    w = np.asarray(w, dtype=np.float64)
    return np.stack([w[..., 1], -w[..., 0]], axis=-1)


def resolvent_coeffs(bvals, delta_over_tau, lam):
    """Coefficients (a, c) of the velocity resolvent a*I + c*K.

    The resolvent inverts (1 + delta_over_tau)*I - lam*b*K.  Ratios are taken
    raw (stage weight already applied) so the formal dt -> 0 limit is
    expressible.
    """
    d = 1.0 + delta_over_tau
    lb = lam * np.asarray(bvals, dtype=np.float64)
    den = d * d + lb * lb
    return d / den, lb / den


def apply_coeffs(a, c, w):
    """Multiply (a*I + c*K) into a batch of 2-vectors."""
    return np.stack(
        [a * w[..., 0] + c * w[..., 1], -c * w[..., 0] + a * w[..., 1]],
        axis=-1,
    )


def velocity_resolvent(x, profile, p, weight=1.0):
    """Resolvent of the semi-implicit velocity update at position x.

    ``weight`` scales both stiffness ratios; 1 gives the single-stage matrix,
    GAMMA the stage matrix of the two-stage scheme.
    """
    bval = float(profile.eval(x, p.epsilon))
    a, c = resolvent_coeffs(bval, weight * p.delta / p.tau, weight * p.lambda_)
    return Mat2(a, c, -c, a)


def drift_coeffs(bvals, eps, tau):
    """Coefficients (a, c) of the drift-response matrix a*I + c*K."""
    bvals = np.asarray(bvals, dtype=np.float64)
    bt = bvals * tau
    den = bt * bt + eps * eps
    if np.any(den <= _DEGENERATE):
        raise DomainError(
            "drift matrix denominator (b*tau)**2 + eps**2 is degenerate"
        )
    return eps * tau / den, bvals * tau * tau / den


def drift_matrix(x, profile, eps, tau):
    """Drift-response matrix at position x: maps E to the drift velocity."""
    bval = float(profile.eval(x, eps))
    a, c = drift_coeffs(bval, eps, tau)
    return Mat2(float(a), float(c), -float(c), float(a))


def exb_matrix(b0):
    """Uniform-field drift matrix K/b0 of the guiding-center limit."""
    if b0 == 0.0:
        raise DomainError("b0 must be nonzero")
    inv = 1.0 / b0
    return Mat2(0.0, inv, -inv, 0.0)
