"""Moments, conserved functionals, error metrics, and convergence fits.

The energy/entropy balance coefficients follow the 2D+2V phase space of this
code (2*sigma*Q and 2*Q), not the 3D forms; raw functionals are reported and
balance residuals use the dimension-corrected coefficients.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .engine import scatter_to_grid
from .errors import DiagnosticError, DomainError
from .fields import ScalarField, VectorField, interp_scalar
from .kernels import apply_coeffs, drift_coeffs


@dataclass
class ConservedReport:
    """Charge, energy, and optional entropy estimate at one time."""

    Q: float
    H: float
    t: float
    S_est: float | None = None


def moments(ensemble, grid, workers=1):
    """Charge density and current density of the alive particles."""
    idx = ensemble.alive_indices()
    pts = ensemble.x[idx]
    if not np.all(grid.contains(pts)):
        raise DomainError(
            "alive particle outside the grid domain; run boundary handling first"
        )
    w = ensemble.weight[idx]
    rho_vals = scatter_to_grid(grid, pts, w, workers)
    j_vals = scatter_to_grid(grid, pts, w[:, None] * ensemble.v[idx], workers)
    return ScalarField(grid, rho_vals), VectorField(grid, j_vals)


def total_charge(ensemble):
    """Sum of alive weights."""
    return ensemble.alive_weight()


def field_energy(efield):
    """0.5 * trapezoidal integral of |E|^2 over the grid."""
    g = efield.grid
    e2 = np.sum(efield.values**2, axis=-1)
    return 0.5 * float(np.sum(e2 * g.node_area_weights()) * g.hx * g.hy)


def total_energy(ensemble, efield):
    """Kinetic plus field energy: 0.5 sum(w |v|^2) + 0.5 trapz(|E|^2)."""
    idx = ensemble.alive_indices()
    kinetic = 0.5 * float(
        np.sum(ensemble.weight[idx] * np.sum(ensemble.v[idx] ** 2, axis=1))
    )
    return kinetic + field_energy(efield)


@dataclass
class HistogramSpec:
    """Coarse 4D binning of phase space for the entropy estimate."""

    nbins: int = 16
    x_bounds: tuple = ((-8.0, 8.0), (-8.0, 8.0))
    v_bounds: tuple = ((-4.0, 4.0), (-4.0, 4.0))


def entropy_estimate(ensemble, spec=None):
    """Histogram estimate of integral(f ln f) over phase space.

    Empty cells contribute nothing; the estimate is invariant under particle
    relabeling and grows when the same mass concentrates into fewer cells.
    """
    spec = spec or HistogramSpec()
    idx = ensemble.alive_indices()
    sample = np.column_stack([ensemble.x[idx], ensemble.v[idx]])
    bounds = list(spec.x_bounds) + list(spec.v_bounds)
    hist, edges = np.histogramdd(
        sample, bins=spec.nbins, range=bounds, weights=ensemble.weight[idx]
    )
    vol = math.prod((b[1] - b[0]) / spec.nbins for b in bounds)
    dens = hist[hist > 0.0] / vol
    return float(np.sum(dens * np.log(dens)) * vol)


def slow_manifold_deviation(x_prev, v, efield, profile, eps, tau):
    """Distance from the drift manifold: v/eps - R(x_prev) E(x_prev)."""
    x_prev = np.asarray(x_prev, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    a, c = drift_coeffs(profile.eval(x_prev, eps), eps, tau)
    return v / eps - apply_coeffs(a, c, efield.evaluate(x_prev))


def traj_error(x_n, u_n):
    """Componentwise absolute trajectory difference."""
    return np.abs(np.asarray(x_n, dtype=np.float64) - np.asarray(u_n, dtype=np.float64))


@dataclass
class PathBundle:
    """Streaming accumulator over Brownian paths (Welford mean/variance)."""

    n_paths: int = 0
    _mean: np.ndarray = field(default_factory=lambda: np.zeros(2))
    _m2: np.ndarray = field(default_factory=lambda: np.zeros(2))
    max_noise: float = 0.0
    terminal: list = field(default_factory=list)

    def add(self, x_terminal):
        x = np.asarray(x_terminal, dtype=np.float64)
        self.terminal.append(x.copy())
        self.n_paths += 1
        delta = x - self._mean
        self._mean = self._mean + delta / self.n_paths
        self._m2 = self._m2 + delta * (x - self._mean)

    def add_many(self, xs):
        for x in np.asarray(xs, dtype=np.float64):
            self.add(x)

    def record_noise(self, xi):
        self.max_noise = max(self.max_noise, float(np.max(np.abs(xi))))

    @property
    def mean(self):
        return self._mean.copy()

    @property
    def variance(self):
        if self.n_paths < 2:
            raise DiagnosticError("variance needs at least 2 paths")
        return self._m2 / (self.n_paths - 1)

    @property
    def sem(self):
        return np.sqrt(self.variance / self.n_paths)


def expectation_error(bundle, u_n):
    """|E(x_k) - u_k| per component with the Monte Carlo standard error."""
    if bundle.n_paths < 2:
        raise DiagnosticError("expectation error needs at least 2 paths")
    err = np.abs(bundle.mean - np.asarray(u_n, dtype=np.float64))
    return err, bundle.sem


@dataclass
class ErrorSeries:
    """Error values over a strictly monotone abscissa (eps or dt)."""

    abscissae: np.ndarray
    errors: np.ndarray

    def __post_init__(self):
        self.abscissae = np.asarray(self.abscissae, dtype=np.float64)
        self.errors = np.asarray(self.errors, dtype=np.float64)
        if self.abscissae.shape != self.errors.shape or self.abscissae.ndim != 1:
            raise DiagnosticError("abscissae and errors must be 1D and aligned")
        d = np.diff(self.abscissae)
        if not (np.all(d > 0.0) or np.all(d < 0.0)):
            raise DiagnosticError("abscissae must be strictly monotone")
        if np.any(self.errors < 0.0):
            raise DiagnosticError("errors must be nonnegative")


@dataclass
class SlopeFit:
    slope: float
    ci95: float
    intercept: float
    n_used: int
    excluded: list


def convergence_slope(series, noise_floor=None):
    """Least-squares log-log slope with a 95% interval.

    Points with error below the declared noise floor (scalar or per-point)
    are excluded from the fit and reported in the result.
    """
    a = series.abscissae
    e = series.errors
    if noise_floor is None:
        keep = np.ones(len(a), dtype=bool)
    else:
        floor = np.broadcast_to(np.asarray(noise_floor, dtype=np.float64), e.shape)
        keep = e >= floor
    keep &= e > 0.0
    excluded = list(np.flatnonzero(~keep))
    n = int(keep.sum())
    if n < 3:
        raise DiagnosticError(f"slope fit needs at least 3 usable points, got {n}")
    lx = np.log(a[keep])
    ly = np.log(e[keep])
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    sxx = float(np.sum((lx - lx.mean()) ** 2))
    if n > 2 and sxx > 0.0:
        s2 = float(np.sum(resid**2)) / (n - 2)
        ci = float(stats.t.ppf(0.975, n - 2)) * math.sqrt(s2 / sxx)
    else:
        ci = 0.0
    return SlopeFit(float(slope), ci, float(intercept), n, excluded)


def ring_mode_amplitude(values, thetas, l):
    """Relative Fourier amplitude of mode l from samples on a circle."""
    values = np.asarray(values, dtype=np.float64)
    mean = float(np.mean(values))
    if not abs(mean) > 1e-300:
        raise DiagnosticError("mean density on the ring vanishes")
    coef = np.mean(values * np.exp(-1j * l * np.asarray(thetas)))
    return float(2.0 * np.abs(coef) / mean)


def mode_amplitude(rho, l, band, n_angles=256):
    """Azimuthal mode-l amplitude of the density at the band's central radius.

    Samples the field bilinearly at n_angles uniform angles; for a density
    c*(1 + alpha cos(l theta)) on the ring this returns alpha.
    """
    if l < 1:
        raise DiagnosticError("mode number must be a positive integer")
    if n_angles < 256:
        raise DiagnosticError("need at least 256 sample angles")
    r_c = 0.5 * (band[0] + band[1])
    thetas = 2.0 * np.pi * np.arange(n_angles) / n_angles
    pts = r_c * np.stack([np.cos(thetas), np.sin(thetas)], axis=-1)
    return ring_mode_amplitude(interp_scalar(rho, pts), thetas, l)
