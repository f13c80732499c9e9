"""Field solve: -lap(phi) = rho - rho0 on the mesh, then E = -grad(phi).

The spatial operator is the standard second-order 5-point Laplacian.  The
Dirichlet problem is solved by a cached sparse LU factorization (the operator
only depends on the grid, so the self-consistent loop factors once); the
periodic problem is solved exactly in Fourier space with a zero-mean gauge.
Whatever the method, the returned potential is checked against the discrete
residual contract.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .errors import ConfigError, DomainError, SolverError
from .fields import Grid2D, ScalarField, VectorField

_BCS = ("dirichlet", "periodic")
_RHO0_MODES = ("zero", "spatial-mean")


@dataclass
class PoissonConfig:
    bc: str = "dirichlet"
    rho0_mode: str = "spatial-mean"
    tol: float = 1e-10
    max_iter: int = 10_000

    def __post_init__(self):
        if self.bc not in _BCS:
            raise ConfigError("bc", f"must be one of {_BCS}, got {self.bc!r}")
        if self.rho0_mode not in _RHO0_MODES:
            raise ConfigError(
                "rho0_mode", f"must be one of {_RHO0_MODES}, got {self.rho0_mode!r}"
            )
        if self.bc == "periodic" and self.rho0_mode != "spatial-mean":
            raise ConfigError(
                "rho0_mode", "periodic boundary requires rho0_mode='spatial-mean'"
            )
        if not self.tol > 0.0:
            raise ConfigError("tol", "must be positive")
        if self.max_iter < 1:
            raise ConfigError("max_iter", "must be at least 1")


class PoissonSolution(NamedTuple):
    phi: ScalarField
    residual: float
    rho0: float


_lu_cache = {}


def _dirichlet_lu(grid):
    key = (grid.nx, grid.ny, grid.hx, grid.hy)
    lu = _lu_cache.get(key)
    if lu is None:
        mx, my = grid.nx - 2, grid.ny - 2
        ex = np.ones(mx)
        ey = np.ones(my)
        dxx = sp.diags([-ex[:-1], 2.0 * ex, -ex[:-1]], [-1, 0, 1]) / grid.hx**2
        dyy = sp.diags([-ey[:-1], 2.0 * ey, -ey[:-1]], [-1, 0, 1]) / grid.hy**2
        a = sp.kron(dxx, sp.identity(my)) + sp.kron(sp.identity(mx), dyy)
        lu = splu(a.tocsc())
        _lu_cache[key] = lu
    return lu


def _apply_lap_dirichlet(grid, phi):
    """-lap_h phi on interior nodes, phi = 0 outside the boundary ring."""
    out = (2.0 * phi[1:-1, 1:-1] - phi[:-2, 1:-1] - phi[2:, 1:-1]) / grid.hx**2
    out += (2.0 * phi[1:-1, 1:-1] - phi[1:-1, :-2] - phi[1:-1, 2:]) / grid.hy**2
    return out


def _apply_lap_periodic(grid, phi_u):
    """-lap_h on the unique-node array with wrapped neighbors."""
    out = (2.0 * phi_u - np.roll(phi_u, 1, axis=0) - np.roll(phi_u, -1, axis=0)) / grid.hx**2
    out += (2.0 * phi_u - np.roll(phi_u, 1, axis=1) - np.roll(phi_u, -1, axis=1)) / grid.hy**2
    return out


def background_density(rho, cfg):
    """The neutralizing background rho0 implied by the config."""
    if cfg.rho0_mode == "zero":
        return 0.0
    g = rho.grid
    if cfg.bc == "dirichlet":
        w = g.node_area_weights()
        return float(np.sum(rho.values * w) / np.sum(w))
    return float(np.mean(rho.values[:-1, :-1]))


def solve_poisson_full(rho, cfg):
    """Solve -lap(phi) = rho - rho0; returns potential, residual and rho0."""
    g = rho.grid
    rho0 = background_density(rho, cfg)
    src = rho.values - rho0
    # A source at roundoff level relative to rho is zero for all purposes.
    floor = 1e-13 * max(1.0, float(np.linalg.norm(rho.values)))

    if cfg.bc == "dirichlet":
        rhs = src[1:-1, 1:-1].reshape(-1)
        scale = float(np.linalg.norm(rhs))
        if scale <= floor:
            phi = ScalarField(g, np.zeros((g.nx, g.ny)))
            return PoissonSolution(phi, 0.0, rho0)
        sol = _dirichlet_lu(g).solve(rhs)
        phi_vals = np.zeros((g.nx, g.ny))
        phi_vals[1:-1, 1:-1] = sol.reshape(g.nx - 2, g.ny - 2)
        res = float(
            np.linalg.norm(_apply_lap_dirichlet(g, phi_vals) - src[1:-1, 1:-1])
            / scale
        )
        if not res <= cfg.tol:
            raise SolverError(
                f"Dirichlet solve missed tolerance {cfg.tol:g}", residual=res
            )
        return PoissonSolution(ScalarField(g, phi_vals), res, rho0)

    # Periodic: nodes nx-1 / ny-1 duplicate node 0; solve on the unique block.
    mx, my = g.nx - 1, g.ny - 1
    src_u = src[:-1, :-1]
    mean = float(np.mean(src_u))
    if abs(mean) > 1e-12:
        raise DomainError(
            f"periodic source must have zero mean, got {mean:.3e}"
        )
    scale = float(np.linalg.norm(src_u))
    if scale <= floor:
        phi = ScalarField(g, np.zeros((g.nx, g.ny)))
        return PoissonSolution(phi, 0.0, rho0)
    kx = 2.0 * np.pi * np.fft.fftfreq(mx)
    ky = 2.0 * np.pi * np.fft.fftfreq(my)
    lam = (
        (2.0 - 2.0 * np.cos(kx))[:, None] / g.hx**2
        + (2.0 - 2.0 * np.cos(ky))[None, :] / g.hy**2
    )
    lam[0, 0] = 1.0
    src_hat = np.fft.fft2(src_u - mean)
    phi_hat = src_hat / lam
    phi_hat[0, 0] = 0.0  # zero-mean gauge
    phi_u = np.real(np.fft.ifft2(phi_hat))
    phi_u -= np.mean(phi_u)
    res = float(np.linalg.norm(_apply_lap_periodic(g, phi_u) - src_u) / scale)
    if not res <= cfg.tol:
        raise SolverError(
            f"periodic solve missed tolerance {cfg.tol:g}", residual=res
        )
    phi_vals = np.zeros((g.nx, g.ny))
    phi_vals[:-1, :-1] = phi_u
    phi_vals[-1, :-1] = phi_u[0, :]
    phi_vals[:-1, -1] = phi_u[:, 0]
    phi_vals[-1, -1] = phi_u[0, 0]
    return PoissonSolution(ScalarField(g, phi_vals), res, rho0)


def solve_poisson(rho, cfg):
    """Potential of -lap(phi) = rho - rho0 meeting the residual contract."""
    return solve_poisson_full(rho, cfg).phi


def e_from_phi(phi, bc="dirichlet"):
    """E = -grad(phi) at second order: central inside, one-sided or wrapped at edges."""
    g = phi.grid
    v = phi.values
    ex = np.empty_like(v)
    ey = np.empty_like(v)
    if bc == "dirichlet":
        ex[1:-1, :] = (v[2:, :] - v[:-2, :]) / (2.0 * g.hx)
        ex[0, :] = (-3.0 * v[0, :] + 4.0 * v[1, :] - v[2, :]) / (2.0 * g.hx)
        ex[-1, :] = (3.0 * v[-1, :] - 4.0 * v[-2, :] + v[-3, :]) / (2.0 * g.hx)
        ey[:, 1:-1] = (v[:, 2:] - v[:, :-2]) / (2.0 * g.hy)
        ey[:, 0] = (-3.0 * v[:, 0] + 4.0 * v[:, 1] - v[:, 2]) / (2.0 * g.hy)
        ey[:, -1] = (3.0 * v[:, -1] - 4.0 * v[:, -2] + v[:, -3]) / (2.0 * g.hy)
    elif bc == "periodic":
        u = v[:-1, :-1]
        exu = (np.roll(u, -1, axis=0) - np.roll(u, 1, axis=0)) / (2.0 * g.hx)
        eyu = (np.roll(u, -1, axis=1) - np.roll(u, 1, axis=1)) / (2.0 * g.hy)
        ex[:-1, :-1] = exu
        ex[-1, :-1] = exu[0, :]
        ex[:-1, -1] = exu[:, 0]
        ex[-1, -1] = exu[0, 0]
        ey[:-1, :-1] = eyu
        ey[-1, :-1] = eyu[0, :]
        ey[:-1, -1] = eyu[:, 0]
        ey[-1, -1] = eyu[0, 0]
    else:
        raise ConfigError("bc", f"must be one of {_BCS}, got {bc!r}")
    return VectorField(g, np.stack([-ex, -ey], axis=-1))
