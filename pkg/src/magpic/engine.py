"""Particle ensemble: initialization, deposition, boundaries, and the PIC step.

Particles are stored structure-of-arrays.  Deposition accumulates per-worker
private buffers merged in a fixed order, so a run is bit-reproducible for a
given (seed, worker count).  Gaussian kicks come from counter-based streams
keyed by (master seed, particle id, step index), making the push independent
of scheduling as well.
"""

import time
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import pushers, streams
from .errors import ConfigError, DomainError
from .fields import ElectricField, Grid2D, ScalarField, bilinear_corners
from .poisson import e_from_phi, solve_poisson_full

#: Velocity box half-width used to truncate initialization sampling.
VELOCITY_BOX = 4.0

_SCHEMES = ("apsi1", "apsi2")


@dataclass
class Particle:
    """Read-only view of one marker, for inspection and tests."""

    state: pushers.PhaseState
    weight: float
    id: int
    alive: bool


@dataclass
class Ensemble:
    x: np.ndarray          # (n, 2) positions
    v: np.ndarray          # (n, 2) velocities
    weight: np.ndarray     # (n,) immutable charge weights
    alive: np.ndarray      # (n,) bool
    ids: np.ndarray        # (n,) stable ids for stream derivation
    total_weight0: float
    rng_seed: int
    step_index: int = 0

    @property
    def n_total(self):
        return self.x.shape[0]

    def alive_indices(self):
        return np.flatnonzero(self.alive)

    def alive_weight(self):
        return float(np.sum(self.weight[self.alive]))

    def particle(self, i):
        return Particle(
            state=pushers.PhaseState(x=self.x[i].copy(), v=self.v[i].copy()),
            weight=float(self.weight[i]),
            id=int(self.ids[i]),
            alive=bool(self.alive[i]),
        )

    @classmethod
    def from_arrays(cls, x, v, weight, rng_seed):
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        v = np.atleast_2d(np.asarray(v, dtype=np.float64))
        weight = np.asarray(weight, dtype=np.float64).reshape(-1)
        n = x.shape[0]
        if v.shape != (n, 2) or weight.shape != (n,):
            raise DomainError("ensemble arrays must agree in length")
        if np.any(weight < 0.0):
            raise DomainError("weights must be nonnegative")
        return cls(
            x=x.copy(), v=v.copy(), weight=weight.copy(),
            alive=np.ones(n, dtype=bool), ids=np.arange(n, dtype=np.int64),
            total_weight0=float(weight.sum()), rng_seed=int(rng_seed),
        )


@dataclass
class DiocotronInit:
    """Annular initial density with an azimuthal mode-l perturbation."""

    r_minus: float = 3.5
    r_plus: float = 6.5
    alpha_pert: float = 0.2
    l_modes: int = 5
    sigma_v: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.r_minus < self.r_plus:
            raise ConfigError("r_minus", "need 0 < r_minus < r_plus")
        if not 0.0 <= self.alpha_pert < 1.0:
            raise ConfigError("alpha_pert", "must lie in [0, 1)")
        if self.l_modes < 1:
            raise ConfigError("l_modes", "must be a positive integer")
        if not self.sigma_v > 0.0:
            raise ConfigError("sigma_v", "must be positive")

    @property
    def r_center(self):
        return 0.5 * (self.r_minus + self.r_plus)


def annulus_density(init, pts):
    """Initial spatial density: (1 + alpha cos(l theta)) exp(-4 (r - rc)^2) on the annulus."""
    pts = np.asarray(pts, dtype=np.float64)
    r = np.sqrt(pts[..., 0] ** 2 + pts[..., 1] ** 2)
    theta = np.arctan2(pts[..., 1], pts[..., 0])
    val = (1.0 + init.alpha_pert * np.cos(init.l_modes * theta)) * np.exp(
        -4.0 * (r - init.r_center) ** 2
    )
    return np.where((r >= init.r_minus) & (r <= init.r_plus), val, 0.0)


@lru_cache(maxsize=16)
def _annulus_charge_cached(r_minus, r_plus, alpha, l, n_cells):
    # Midpoint rule in polar coordinates; the integrand is smooth there.
    r = r_minus + (r_plus - r_minus) * (np.arange(n_cells) + 0.5) / n_cells
    th = 2.0 * np.pi * (np.arange(n_cells) + 0.5) / n_cells
    rc = 0.5 * (r_minus + r_plus)
    radial = np.exp(-4.0 * (r - rc) ** 2) * r
    azimuthal = 1.0 + alpha * np.cos(l * th)
    dr = (r_plus - r_minus) / n_cells
    dth = 2.0 * np.pi / n_cells
    return float(np.sum(radial) * dr * np.sum(azimuthal) * dth)


def annulus_charge(init, n_cells=512):
    """Total initial charge by 2D midpoint quadrature at n_cells**2 resolution."""
    return _annulus_charge_cached(
        init.r_minus, init.r_plus, init.alpha_pert, init.l_modes, n_cells
    )


def sample_initial(init, n_particles, seed):
    """Sample the initial ensemble from the annular distribution.

    Positions are drawn proportional to the perturbed annulus density by
    rejection against the flat envelope (1 + alpha); velocities are bivariate
    normal with variance sigma_v per component, redrawn while outside the
    velocity box.  Every marker carries the same weight Q_tot / n_particles.
    """
    if n_particles < 1:
        raise ConfigError("n_particles", "must be at least 1")
    ss = np.random.SeedSequence(seed)
    rng_pos, rng_vel = [np.random.default_rng(s) for s in ss.spawn(2)]

    envelope = 1.0 + init.alpha_pert
    accepted = []
    n_done = 0
    n_proposed = 0
    while n_done < n_particles:
        batch = max(16384, int(1.3 * (n_particles - n_done) / 0.2))
        rr = np.sqrt(rng_pos.uniform(init.r_minus**2, init.r_plus**2, batch))
        th = rng_pos.uniform(0.0, 2.0 * np.pi, batch)
        pts = np.stack([rr * np.cos(th), rr * np.sin(th)], axis=-1)
        u = rng_pos.uniform(0.0, envelope, batch)
        keep = pts[u < annulus_density(init, pts)]
        n_proposed += batch
        if n_proposed >= 100_000 and (n_done + len(keep)) / n_proposed < 1e-4:
            raise ConfigError(
                "init", "rejection acceptance rate below 1e-4; density nearly "
                "vanishes on the proposal annulus"
            )
        accepted.append(keep)
        n_done += len(keep)
    x = np.concatenate(accepted)[:n_particles]

    v = rng_vel.normal(0.0, np.sqrt(init.sigma_v), size=(n_particles, 2))
    bad = np.max(np.abs(v), axis=1) > VELOCITY_BOX
    while np.any(bad):
        v[bad] = rng_vel.normal(0.0, np.sqrt(init.sigma_v), size=(int(bad.sum()), 2))
        bad = np.max(np.abs(v), axis=1) > VELOCITY_BOX

    w = np.full(n_particles, annulus_charge(init) / n_particles)
    return Ensemble.from_arrays(x, v, w, rng_seed=seed)


def _chunk_slices(n, workers):
    bounds = np.linspace(0, n, workers + 1).astype(int)
    return [slice(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def scatter_to_grid(grid, pts, vals, workers=1):
    """Bilinear scatter of per-particle values to nodes, density-normalized.

    Node (i, j) receives sum(w * val) / (hx * hy * area_weight) where the
    area weight is the trapezoidal control-area fraction, so the weighted
    nodal sum reproduces sum(vals) exactly for any particle placement.
    ``vals`` may be (n,) or (n, k) for k components.
    """
    pts = np.asarray(pts, dtype=np.float64)
    vals = np.asarray(vals, dtype=np.float64)
    i0, j0, fx, fy = bilinear_corners(grid, pts)
    flat = i0 * grid.ny + j0
    ncomp = 1 if vals.ndim == 1 else vals.shape[1]
    acc = np.zeros((ncomp, grid.nx * grid.ny))
    for sl in _chunk_slices(len(pts), max(1, workers)):
        idx = np.concatenate([flat[sl], flat[sl] + grid.ny,
                              flat[sl] + 1, flat[sl] + grid.ny + 1])
        wq = np.concatenate([
            (1.0 - fx[sl]) * (1.0 - fy[sl]), fx[sl] * (1.0 - fy[sl]),
            (1.0 - fx[sl]) * fy[sl], fx[sl] * fy[sl],
        ])
        for k in range(ncomp):
            vk = vals[sl] if vals.ndim == 1 else vals[sl, k]
            acc[k] += np.bincount(idx, weights=wq * np.tile(vk, 4),
                                  minlength=grid.nx * grid.ny)
    area = grid.hx * grid.hy * grid.node_area_weights()
    fields = acc.reshape(ncomp, grid.nx, grid.ny) / area
    return fields[0] if vals.ndim == 1 else np.moveaxis(fields, 0, -1)


def deposit_charge(ensemble, grid, workers=1):
    """Charge density of the alive particles on the grid."""
    idx = ensemble.alive_indices()
    pts = ensemble.x[idx]
    if not np.all(grid.contains(pts)):
        raise DomainError(
            "alive particle outside the grid domain; run boundary handling first"
        )
    vals = scatter_to_grid(grid, pts, ensemble.weight[idx], workers)
    return ScalarField(grid, vals)


def apply_boundary(ensemble, grid):
    """Absorb particles strictly outside the closed domain; returns the count."""
    idx = ensemble.alive_indices()
    outside = ~grid.contains(ensemble.x[idx])
    gone = idx[outside]
    ensemble.alive[gone] = False
    return int(gone.size)


@dataclass
class StepReport:
    removed: int
    removed_weight: float
    residual: float
    wall_time: float
    kinetic_energy: float
    rho: ScalarField
    phi: ScalarField
    efield: ElectricField


def pic_step(ensemble, grid, pcfg, p, profile, scheme="apsi1", workers=1):
    """One full PIC cycle: absorb, deposit, solve, interpolate, push.

    The field is frozen within the step and evaluated at pre-push positions.
    If the field solve fails the ensemble is left untouched.
    """
    if scheme not in _SCHEMES:
        raise ConfigError("scheme", f"must be one of {_SCHEMES}, got {scheme!r}")
    t0 = time.perf_counter()

    idx = ensemble.alive_indices()
    inside = grid.contains(ensemble.x[idx])
    survivors = idx[inside]
    gone = idx[~inside]
    removed_weight = float(np.sum(ensemble.weight[gone]))

    pts = ensemble.x[survivors]
    vals = scatter_to_grid(grid, pts, ensemble.weight[survivors], workers)
    rho = ScalarField(grid, vals)
    sol = solve_poisson_full(rho, pcfg)  # on failure the ensemble is unmodified
    efield = ElectricField.from_grid(e_from_phi(sol.phi, pcfg.bc))

    xi = streams.normal_pairs(
        ensemble.rng_seed, ensemble.ids[survivors], ensemble.step_index,
        n_lanes=ensemble.n_total,
    )
    vel = ensemble.v[survivors]
    kinetic = 0.5 * float(
        np.sum(ensemble.weight[survivors] * np.sum(vel**2, axis=1))
    )
    push = pushers.apsi1 if scheme == "apsi1" else pushers.apsi2
    x_new, v_new = push(pts, vel, efield, profile, p, xi)

    ensemble.alive[gone] = False
    ensemble.x[survivors] = x_new
    ensemble.v[survivors] = v_new
    ensemble.step_index += 1

    return StepReport(
        removed=int(gone.size), removed_weight=removed_weight,
        residual=sol.residual, wall_time=time.perf_counter() - t0,
        kinetic_energy=kinetic, rho=rho, phi=sol.phi, efield=efield,
    )
