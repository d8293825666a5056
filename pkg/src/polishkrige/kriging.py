"""Semivariogram estimation and ordinary kriging on a 2-D scatter.

The empirical semivariogram is the method-of-moments estimator on distance
bins; parametric models (spherical, exponential, gaussian) are fitted by
pair-count-weighted least squares.  Ordinary kriging solves the augmented
covariance system with a Lagrange multiplier enforcing weights that sum to
one, so predictions are unbiased for an unknown constant mean.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import lu_solve
from scipy.optimize import minimize
from scipy.spatial.distance import cdist, pdist

from .errors import DataError, PolishKrigeError
from .numerics import factor_checked
from .spatial_core import _frozen

FAMILIES = ("spherical", "exponential", "gaussian")


@dataclass(frozen=True)
class EmpiricalVariogram:
    """Binned method-of-moments semivariance estimates.

    Bins with no pairs are dropped, so the three arrays have equal length
    with pair_counts >= 1 everywhere; max_lag is the binning cutoff.
    """

    lag_centers: np.ndarray
    gamma: np.ndarray
    pair_counts: np.ndarray
    max_lag: float

    def __post_init__(self):
        object.__setattr__(self, "lag_centers", _frozen(self.lag_centers))
        object.__setattr__(self, "gamma", _frozen(self.gamma))
        counts = np.ascontiguousarray(self.pair_counts, dtype=np.int64)
        counts.flags.writeable = False
        object.__setattr__(self, "pair_counts", counts)

    @property
    def n_bins(self):
        return len(self.lag_centers)


@dataclass(frozen=True)
class VariogramModel:
    """A stationary isotropic semivariogram with sill nugget + partial_sill.

    range is the practical range for the exponential and gaussian families
    (95% of the sill is reached at h = range) and the exact range for the
    spherical.  degenerate flags the all-zero fit returned for data with no
    variability; it is a warning marker, not an error.
    """

    family: str
    nugget: float
    partial_sill: float
    range: float
    degenerate: bool = False

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise DataError(f"unknown variogram family {self.family!r}")
        if not (self.nugget >= 0 and self.partial_sill >= 0):
            raise DataError("nugget and partial sill must be nonnegative")
        if not self.range > 0:
            raise DataError("variogram range must be positive")

    @property
    def sill(self):
        return self.nugget + self.partial_sill


@dataclass(frozen=True)
class KrigingWeights:
    weights: np.ndarray
    lagrange: float

    def __post_init__(self):
        object.__setattr__(self, "weights", _frozen(self.weights))


@dataclass(frozen=True)
class KrigingPrediction:
    value: float
    variance: float


def empirical_semivariogram(scatter, n_bins=15, max_lag=None):
    """Bin squared value differences by pair distance.

    gamma[b] = sum of (z_i - z_j)^2 over pairs in bin b, divided by twice the
    pair count.  Bins are equal-width over (0, max_lag]; centers are bin
    midpoints; empty bins are dropped.

    Args:
        scatter: ScatterSet with n >= 2.
        n_bins: number of distance bins (>= 1).
        max_lag: binning cutoff; default is half the largest pair distance.

    Raises:
        DataError: fewer than 2 points, bad parameters, or no pair within
            max_lag.
    """
    if scatter.n < 2:
        raise DataError("variogram needs at least 2 observations")
    if n_bins < 1:
        raise DataError("n_bins must be at least 1")

    d = pdist(scatter.coords)
    sq = pdist(scatter.values[:, None], metric="sqeuclidean")
    if max_lag is None:
        max_lag = 0.5 * float(d.max())
    if not max_lag > 0:
        raise DataError("max_lag must be positive")

    keep = (d > 0) & (d <= max_lag)
    if not keep.any():
        raise DataError(f"no point pair within max_lag {max_lag:g}")

    width = max_lag / n_bins
    idx = np.minimum(np.ceil(d[keep] / width).astype(int) - 1, n_bins - 1)
    counts = np.bincount(idx, minlength=n_bins)
    sums = np.bincount(idx, weights=sq[keep], minlength=n_bins)

    retained = counts > 0
    centers = (np.flatnonzero(retained) + 0.5) * width
    gamma = sums[retained] / (2.0 * counts[retained])
    return EmpiricalVariogram(centers, gamma, counts[retained], float(max_lag))


def _model_gamma(family, nugget, psill, rng, h):
    u = h / rng
    if family == "spherical":
        shape = np.where(u >= 1.0, 1.0, 1.5 * u - 0.5 * u**3)
    elif family == "exponential":
        shape = 1.0 - np.exp(-3.0 * u)
    else:
        shape = 1.0 - np.exp(-3.0 * u**2)
    return nugget + psill * shape


def semivariance(model, h):
    """gamma(h) for a fitted model; gamma(0) = 0, limit h->0+ = nugget."""
    h = np.asarray(h, dtype=np.float64)
    if np.any(h < 0):
        raise DataError("negative lag distance")
    g = np.where(
        h == 0,
        0.0,
        _model_gamma(model.family, model.nugget, model.partial_sill, model.range, h),
    )
    return g if g.ndim else float(g)


def covariance(model, h):
    """C(h) = sill - gamma(h); C(0) is the full sill including the nugget."""
    return model.sill - semivariance(model, h)


def fit_variogram(emp, family="spherical"):
    """Fit a variogram model to binned estimates by weighted least squares.

    The objective is sum over bins of pair_count * (gamma_hat - gamma_model)^2.
    A coarse deterministic grid over nugget, partial sill (both in
    [0, max gamma_hat]) and range ((0, max_lag]) seeds a Nelder-Mead
    refinement, so the result is reproducible bit-for-bit.

    All-zero estimates short-circuit to the degenerate zero model with the
    warning flag set.  Raises DataError for an unknown family or fewer than
    3 occupied bins.
    """
    if family not in FAMILIES:
        raise DataError(f"unknown variogram family {family!r}")
    if np.all(emp.gamma == 0):
        return VariogramModel(family, 0.0, 0.0, emp.max_lag, degenerate=True)
    if emp.n_bins < 3:
        raise DataError(f"variogram fit needs at least 3 occupied bins, got {emp.n_bins}")

    h = emp.lag_centers
    w = emp.pair_counts.astype(np.float64)
    gmax = float(emp.gamma.max())

    def objective(params):
        nugget, psill, rng = params
        if nugget < 0 or psill < 0 or rng <= 0:
            return np.inf
        resid = emp.gamma - _model_gamma(family, nugget, psill, rng, h)
        return float(np.dot(w, resid * resid))

    # coarse grid, evaluated in closed form: expanding the weighted SSE in
    # (nugget, psill) leaves per-range moments of the unit-sill shape curve
    nuggets = np.linspace(0.0, gmax, 9)
    psills = np.linspace(0.0, gmax, 9)
    ranges = emp.max_lag * np.arange(1, 13) / 12.0
    shapes = np.stack([_model_gamma(family, 0.0, 1.0, r0, h) for r0 in ranges])
    m_gg = float(np.dot(w, emp.gamma * emp.gamma))
    m_g = float(np.dot(w, emp.gamma))
    m_w = float(w.sum())
    m_gs = shapes @ (w * emp.gamma)
    m_s = shapes @ w
    m_ss = (shapes * shapes) @ w
    n_g = nuggets[:, None, None]
    p_g = psills[None, :, None]
    sse = (
        m_gg
        - 2.0 * n_g * m_g
        - 2.0 * p_g * m_gs
        + n_g * n_g * m_w
        + 2.0 * n_g * p_g * m_s
        + p_g * p_g * m_ss
    )
    i, j, r_i = np.unravel_index(int(np.argmin(sse)), sse.shape)
    start = np.array([nuggets[i], psills[j], ranges[r_i]])

    res = minimize(
        objective,
        x0=start,
        method="Nelder-Mead",
        bounds=[(0.0, 2 * gmax), (0.0, 2 * gmax), (1e-3 * emp.max_lag, emp.max_lag)],
        options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 4000, "maxfev": 6000},
    )
    nugget, psill, rng = res.x
    return VariogramModel(family, max(float(nugget), 0.0), max(float(psill), 0.0), float(rng))


class KrigingSystem:
    """Factorized ordinary-kriging system for one scatter and model.

    Builds and factors the (n+1) x (n+1) augmented matrix once; solving for
    any number of targets then costs one triangular solve each.  Read-only
    after construction.
    """

    def __init__(self, scatter, model):
        coords = scatter.coords
        n = scatter.n
        a = np.empty((n + 1, n + 1))
        a[:n, :n] = covariance(model, cdist(coords, coords))
        a[n, :n] = 1.0
        a[:n, n] = 1.0
        a[n, n] = 0.0
        self.scatter = scatter
        self.model = model
        self._lu, self.rcond = factor_checked(a, "ordinary-kriging system")

    def _rhs(self, targets):
        targets = np.atleast_2d(np.asarray(targets, dtype=np.float64))
        n = self.scatter.n
        b = np.empty((n + 1, targets.shape[0]))
        b[:n] = covariance(self.model, cdist(self.scatter.coords, targets))
        b[n] = 1.0
        return b

    def weights_many(self, targets):
        """Solve for several targets at once; returns (m, n+1) of lambda, mu."""
        sol = lu_solve(self._lu, self._rhs(targets), check_finite=False)
        return sol.T

    def weights_for(self, target):
        sol = self.weights_many([(target.x, target.y)])[0]
        return KrigingWeights(weights=sol[:-1], lagrange=float(sol[-1]))

    def predict_many(self, targets):
        """Predicted values and variances at an (m, 2) target array."""
        targets = np.atleast_2d(np.asarray(targets, dtype=np.float64))
        b = self._rhs(targets)
        sol = lu_solve(self._lu, b, check_finite=False)
        lam = sol[:-1]
        mu = sol[-1]
        values = lam.T @ self.scatter.values
        variances = covariance(self.model, 0.0) - np.einsum("im,im->m", lam, b[:-1]) - mu
        bad = variances < -1e-9
        if bad.any():
            raise PolishKrigeError(
                f"negative kriging variance {variances[bad].min():.3e} "
                "(inconsistent covariance model)"
            )
        return values, np.maximum(variances, 0.0)


def ok_solve(scatter, model, target, neighborhood=None):
    """Ordinary-kriging weights for one target.

    neighborhood, if given, restricts the system to the k nearest scatter
    points (weights for excluded points are zero).  Raises
    SingularSystemError when the augmented matrix is not solvable (duplicate
    geometry or an identically zero covariance model with n > 1).
    """
    sub, back = _neighborhood_subset(scatter, target, neighborhood)
    ws = KrigingSystem(sub, model).weights_for(target)
    if back is None:
        return ws
    lam = np.zeros(scatter.n)
    lam[back] = ws.weights
    return KrigingWeights(weights=lam, lagrange=ws.lagrange)


def ok_predict(scatter, model, target, neighborhood=None):
    """Ordinary-kriging value and variance at one target location."""
    sub, _ = _neighborhood_subset(scatter, target, neighborhood)
    values, variances = KrigingSystem(sub, model).predict_many([(target.x, target.y)])
    return KrigingPrediction(value=float(values[0]), variance=float(variances[0]))


def _neighborhood_subset(scatter, target, neighborhood):
    from .spatial_core import ScatterSet

    if neighborhood is None or neighborhood >= scatter.n:
        return scatter, None
    if neighborhood < 1:
        raise DataError("neighborhood must be at least 1")
    d = np.hypot(scatter.coords[:, 0] - target.x, scatter.coords[:, 1] - target.y)
    order = np.argsort(d, kind="stable")[:neighborhood]
    idx = np.sort(order)
    sub = ScatterSet(scatter.coords[idx], scatter.values[idx])
    return sub, idx
