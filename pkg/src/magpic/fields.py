"""Electric field sources and the uniform rectangular mesh.

Two field variants exist: analytic closures for the single-particle benchmark
and grid-backed fields interpolated bilinearly for the self-consistent loop.
The bilinear weights here are the same ones the deposition uses, which keeps
particle-grid coupling adjoint.
"""

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class Grid2D:
    """Vertex-centered uniform mesh: node (i, j) sits at (xmin + i*hx, ymin + j*hy)."""

    xmin: float
    xmax: float
    ymin: float
    ymax: float
    nx: int
    ny: int

    def __post_init__(self):
        if self.nx < 3 or self.ny < 3:
            raise DomainError("grid needs at least 3 nodes per axis")
        if not (self.xmax > self.xmin and self.ymax > self.ymin):
            raise DomainError("grid bounds must be ordered")

    @property
    def hx(self):
        return (self.xmax - self.xmin) / (self.nx - 1)

    @property
    def hy(self):
        return (self.ymax - self.ymin) / (self.ny - 1)

    def x_nodes(self):
        return self.xmin + self.hx * np.arange(self.nx)

    def y_nodes(self):
        return self.ymin + self.hy * np.arange(self.ny)

    def contains(self, pts):
        """Boolean mask of points inside the closed domain."""
        pts = np.asarray(pts)
        return (
            (pts[..., 0] >= self.xmin) & (pts[..., 0] <= self.xmax)
            & (pts[..., 1] >= self.ymin) & (pts[..., 1] <= self.ymax)
        )

    def node_area_weights(self):
        """Trapezoidal control-area fractions: 1 inside, 1/2 on edges, 1/4 at corners."""
        wx = np.ones(self.nx)
        wx[0] = wx[-1] = 0.5
        wy = np.ones(self.ny)
        wy[0] = wy[-1] = 0.5
        return np.outer(wx, wy)


@dataclass
class ScalarField:
    """Nodal scalar values, shape (nx, ny), indexed [x-index, y-index]."""

    grid: Grid2D
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (self.grid.nx, self.grid.ny):
            raise DomainError(
                f"scalar field shape {self.values.shape} does not match grid "
                f"({self.grid.nx}, {self.grid.ny})"
            )
        if not np.all(np.isfinite(self.values)):
            raise DomainError("scalar field contains non-finite values")


@dataclass
class VectorField:
    """Nodal 2-vector values, shape (nx, ny, 2)."""

    grid: Grid2D
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (self.grid.nx, self.grid.ny, 2):
            raise DomainError(
                f"vector field shape {self.values.shape} does not match grid "
                f"({self.grid.nx}, {self.grid.ny}, 2)"
            )
        if not np.all(np.isfinite(self.values)):
            raise DomainError("vector field contains non-finite values")


def bilinear_corners(grid, pts):
    """Cell indices and fractional offsets of query points.

    Returns (i0, j0, fx, fy) with fx, fy in [0, 1]; the four interpolation /
    deposition weights are (1-fx)(1-fy), fx(1-fy), (1-fx)fy, fx*fy on nodes
    (i0, j0), (i0+1, j0), (i0, j0+1), (i0+1, j0+1).  Raises if any point is
    outside the closed domain.
    """
    pts = np.asarray(pts, dtype=np.float64)
    if not np.all(grid.contains(pts)):
        raise DomainError("query point outside the grid domain")
    gx = (pts[..., 0] - grid.xmin) / grid.hx
    gy = (pts[..., 1] - grid.ymin) / grid.hy
    i0 = np.clip(np.floor(gx).astype(np.intp), 0, grid.nx - 2)
    j0 = np.clip(np.floor(gy).astype(np.intp), 0, grid.ny - 2)
    return i0, j0, gx - i0, gy - j0


def interp_scalar(field, pts):
    """Bilinear interpolation of a scalar field at points (..., 2)."""
    g = field.grid
    i0, j0, fx, fy = bilinear_corners(g, pts)
    v = field.values
    return (
        v[i0, j0] * (1.0 - fx) * (1.0 - fy)
        + v[i0 + 1, j0] * fx * (1.0 - fy)
        + v[i0, j0 + 1] * (1.0 - fx) * fy
        + v[i0 + 1, j0 + 1] * fx * fy
    )


def interp_vector(field, pts):
    """Bilinear interpolation of a vector field at points (..., 2)."""
    g = field.grid
    i0, j0, fx, fy = bilinear_corners(g, pts)
    v = field.values
    w00 = ((1.0 - fx) * (1.0 - fy))[..., None]
    w10 = (fx * (1.0 - fy))[..., None]
    w01 = ((1.0 - fx) * fy)[..., None]
    w11 = (fx * fy)[..., None]
    return (
        v[i0, j0] * w00 + v[i0 + 1, j0] * w10
        + v[i0, j0 + 1] * w01 + v[i0 + 1, j0 + 1] * w11
    )


@dataclass
class ElectricField:
    """Electric field source: analytic closure or grid-backed interpolation."""

    fn: Callable | None = None
    field: VectorField | None = None

    def __post_init__(self):
        if (self.fn is None) == (self.field is None):
            raise DomainError("exactly one of fn / field must be set")

    @property
    def kind(self):
        return "analytic" if self.fn is not None else "grid"

    @classmethod
    def from_function(cls, fn):
        return cls(fn=fn)

    @classmethod
    def from_grid(cls, field):
        return cls(field=field)

    def evaluate(self, pts):
        pts = np.asarray(pts, dtype=np.float64)
        if self.fn is not None:
            return np.asarray(self.fn(pts), dtype=np.float64)
        return interp_vector(self.field, pts)


def eval_E(field, x):
    """Electric field value at x; grid variant requires x inside the domain."""
    return field.evaluate(x)


def eval_b(profile, x, eps):
    """Magnetic field strength at position x under maximal ordering."""
    return profile.eval(x, eps)


def harmonic_trap():
    """The benchmark closure E(x) = -x."""
    return ElectricField.from_function(lambda x: -x)
