"""Mean-surface interpolators over median-polish effects.

Two ways to extend the fitted node means off the lattice: a piecewise-linear
scheme that interpolates the row and column effect vectors independently
(extending the boundary pair linearly outside the grid), and a biharmonic
Green-function spline fitted through node means, which bends smoothly
instead of creasing along grid lines.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lu_solve
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist

from .errors import DataError, DuplicateLocationError, GreenSingularityError
from .median_polish import MedianPolishFit
from .numerics import factor_checked
from .spatial_core import GridLattice, _frozen


def green_function(m, r):
    """Fundamental solution phi_m of the biharmonic operator in dimension m.

    phi_1 = r^3, phi_2 = r^2 (ln r - 1), phi_3 = r, phi_4 = ln r,
    phi_5 = 1/r, phi_6 = 1/r^2.  The origin value is the continuous limit 0
    for m <= 3; for m >= 4 the function is unbounded there and r = 0 raises
    GreenSingularityError.  Accepts scalar or array r (elementwise).
    """
    if m not in (1, 2, 3, 4, 5, 6):
        raise DataError(f"green function dimension must be 1..6, got {m}")
    r = np.asarray(r, dtype=np.float64)
    if np.any(r < 0):
        raise DataError("negative distance")
    at_zero = r == 0
    if m >= 4 and np.any(at_zero):
        raise GreenSingularityError(f"green function m={m} is unbounded at r=0")
    with np.errstate(divide="ignore", invalid="ignore"):
        if m == 1:
            g = r**3
        elif m == 2:
            g = np.where(at_zero, 0.0, r * r * (np.log(np.where(at_zero, 1.0, r)) - 1.0))
        elif m == 3:
            g = r.copy()
        elif m == 4:
            g = np.log(r)
        elif m == 5:
            g = 1.0 / r
        else:
            g = 1.0 / (r * r)
    return g if g.ndim else float(g)


@dataclass(frozen=True)
class BiharmonicModel:
    """A Green-function spline w(s) = sum_j strengths[j] phi_m(|s - c_j|).

    centers is (N, d) with pairwise-distinct rows; dimension selects the
    Green function (normally d itself); regularization records the ridge
    term used at fit time.
    """

    dimension: int
    centers: np.ndarray
    strengths: np.ndarray
    regularization: float = 0.0

    def __post_init__(self):
        centers = np.atleast_2d(np.asarray(self.centers, dtype=np.float64))
        if centers.ndim != 2 or centers.shape[0] < 1:
            raise DataError(f"centers must be (N, d), got {centers.shape}")
        strengths = np.asarray(self.strengths, dtype=np.float64).ravel()
        if len(strengths) != centers.shape[0]:
            raise DataError("one strength per center required")
        if self.dimension not in (1, 2, 3, 4, 5, 6):
            raise DataError(f"dimension must be 1..6, got {self.dimension}")
        if not np.all(np.isfinite(centers)):
            raise DataError("non-finite center")
        if not np.all(np.isfinite(strengths)):
            raise DataError("non-finite strength")
        if self.regularization < 0:
            raise DataError("regularization must be nonnegative")
        _reject_duplicate_rows(centers)
        object.__setattr__(self, "centers", _frozen(centers))
        object.__setattr__(self, "strengths", _frozen(strengths))

    @property
    def n_centers(self):
        return self.centers.shape[0]


def _reject_duplicate_rows(centers):
    pairs = cKDTree(centers).query_pairs(r=0.0, output_type="ndarray")
    if len(pairs):
        i, j = min(tuple(sorted(p)) for p in pairs)
        raise DuplicateLocationError(f"centers {i} and {j} coincide")


def _as_points(s, d):
    """Coerce a query (Location2D, scalar, or array) to an (M, d) array."""
    if hasattr(s, "x") and hasattr(s, "y"):
        pts = np.array([[s.x, s.y]], dtype=np.float64)
    else:
        pts = np.asarray(s, dtype=np.float64)
        if pts.ndim == 0:
            pts = pts.reshape(1, 1)
        elif pts.ndim == 1:
            # one point of dimension d, or a column of 1-D points
            pts = pts.reshape(1, -1) if len(pts) == d else pts.reshape(-1, 1)
    if pts.shape[1] != d:
        raise DataError(f"query dimension {pts.shape[1]} does not match centers ({d})")
    return pts


def biharmonic_fit(centers, values, regularization=0.0, dimension=None):
    """Fit spline strengths through values at centers.

    Solves (G + eps I) alpha = values with G_ij = phi_m(|c_i - c_j|).  With
    regularization 0 the spline interpolates the values exactly.  All-zero
    values short-circuit to the zero spline (no solve, so a lone center with
    value 0 is fine while a lone nonzero center raises SingularSystemError,
    its 1x1 system being 0 * alpha = w).

    Args:
        centers: (N,) for 1-D or (N, d) array, pairwise distinct.
        values: N reals.
        regularization: ridge term eps >= 0 added to the diagonal.
        dimension: Green-function index; defaults to the spatial dimension d.

    Raises:
        DuplicateLocationError, SingularSystemError, DataError.
    """
    centers = np.asarray(centers, dtype=np.float64)
    if centers.ndim == 1:
        centers = centers[:, None]
    values = np.asarray(values, dtype=np.float64).ravel()
    if centers.ndim != 2 or centers.shape[0] != len(values):
        raise DataError("centers and values disagree in length")
    if not np.all(np.isfinite(values)):
        raise DataError("non-finite value")
    if dimension is None:
        dimension = centers.shape[1]
    if regularization < 0:
        raise DataError("regularization must be nonnegative")

    _reject_duplicate_rows(centers)

    if np.all(values == 0):
        strengths = np.zeros(len(values))
        return BiharmonicModel(dimension, centers, strengths, float(regularization))

    g = green_function(dimension, cdist(centers, centers))
    if regularization:
        g = g + regularization * np.eye(len(values))
    lu_piv, _ = factor_checked(g, "green-function system")
    strengths = lu_solve(lu_piv, values, check_finite=False)
    return BiharmonicModel(dimension, centers, strengths, float(regularization))


def biharmonic_eval(model, s):
    """Spline value at one location (Location2D, scalar for 1-D, or array)."""
    return float(biharmonic_eval_many(model, _as_points(s, model.centers.shape[1]))[0])


def biharmonic_eval_many(model, points):
    """Spline values at an (M, d) array of locations."""
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    r = cdist(points, model.centers)
    return green_function(model.dimension, r) @ model.strengths


@dataclass(frozen=True)
class LinearMeanModel:
    """Separable piecewise-linear mean: overall + row effect + column effect.

    Each effect vector is linearly interpolated along its own axis between
    adjacent lattice nodes; outside the lattice the boundary pair's line is
    extended.
    """

    fit: MedianPolishFit
    lattice: GridLattice

    def __post_init__(self):
        if self.fit.p != self.lattice.p or self.fit.q != self.lattice.q:
            raise DataError(
                f"fit is {self.fit.p} x {self.fit.q} but lattice is "
                f"{self.lattice.p} x {self.lattice.q}"
            )


def _interp_effect(coords, effects, t):
    """Piecewise-linear effect value at positions t, extending end pairs."""
    idx = np.clip(np.searchsorted(coords, t, side="left") - 1, 0, len(coords) - 2)
    x0 = coords[idx]
    x1 = coords[idx + 1]
    w = (t - x0) / (x1 - x0)
    return effects[idx] + w * (effects[idx + 1] - effects[idx])


def linear_mean_at(model, s):
    """Mean-surface value at one Location2D."""
    return float(linear_mean_many(model, np.array([[s.x, s.y]]))[0])


def linear_mean_many(model, points):
    """Mean-surface values at an (M, 2) array of locations."""
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if points.shape[1] != 2:
        raise DataError(f"expected (M, 2) points, got {points.shape}")
    fit = model.fit
    lat = model.lattice
    col_part = _interp_effect(lat.x_coords, fit.col_effects, points[:, 0])
    row_part = _interp_effect(lat.y_coords, fit.row_effects, points[:, 1])
    return fit.overall + row_part + col_part
