"""MPK and IMPK surface predictors and their cross-validation.

Both methods decompose the gridded data by median polish and krige the
residuals; they differ only in how the fitted node means are carried off
the lattice.  MPK interpolates the effect vectors piecewise-linearly, IMPK
passes a biharmonic spline through the node means at the observed cells.
Prediction is mean plus kriged residual; reported variance is the kriging
variance of the residual part (the mean surface is treated as fixed).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import DataError, PolishKrigeError
from .kriging import (
    FAMILIES,
    KrigingPrediction,
    KrigingSystem,
    empirical_semivariogram,
    fit_variogram,
    ok_predict,
)
from .mean_surface import (
    LinearMeanModel,
    biharmonic_eval_many,
    biharmonic_fit,
    linear_mean_many,
)
from .median_polish import decompose, residuals_as_scatter
from .spatial_core import GridLattice, Location2D, _frozen

METHODS = ("mpk", "impk")


@dataclass(frozen=True)
class FitConfig:
    """Knobs of the fitting pipeline, with reproducible defaults.

    mp_tol / max_lag of None mean the data-driven defaults (1e-9 times the
    data spread, half the maximum pair distance).  freeze_variogram makes
    cross-validation reuse the full-data variogram in every fold instead of
    refitting.  neighborhood, if set, restricts each residual-kriging solve
    to that many nearest residuals.
    """

    method: str = "mpk"
    family: str = "spherical"
    n_bins: int = 15
    max_lag: float = None
    mp_tol: float = None
    max_sweeps: int = 100
    epsilon: float = 0.0
    freeze_variogram: bool = False
    neighborhood: int = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise DataError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.family not in FAMILIES:
            raise DataError(f"unknown variogram family {self.family!r}")
        if self.n_bins < 1:
            raise DataError("n_bins must be at least 1")
        if self.max_sweeps < 1:
            raise DataError("max_sweeps must be at least 1")
        if self.epsilon < 0:
            raise DataError("epsilon must be nonnegative")
        if self.max_lag is not None and not self.max_lag > 0:
            raise DataError("max_lag must be positive")
        if self.mp_tol is not None and not self.mp_tol > 0:
            raise DataError("mp_tol must be positive")
        if self.neighborhood is not None and self.neighborhood < 1:
            raise DataError("neighborhood must be at least 1")


class SurfaceModel:
    """A fitted predictor: mean component + residual kriging inputs.

    Immutable after fit; predict calls are pure and thread-safe.  The
    ordinary-kriging factorization over the residual scatter is built once
    and shared across targets (skipped when the variogram is degenerate,
    in which case the residual part is identically zero).
    """

    def __init__(self, method, mean_component, polish, residual_scatter, variogram,
                 source_grid, config):
        self.method = method
        self.mean_component = mean_component
        self.polish = polish
        self.residual_scatter = residual_scatter
        self.variogram = variogram
        self.source_grid = source_grid
        self.config = config
        if variogram.degenerate or config.neighborhood is not None:
            self._system = None
        else:
            self._system = KrigingSystem(residual_scatter, variogram)

    def mean_at(self, points):
        """Mean-surface values at an (M, 2) array of locations."""
        if self.method == "mpk":
            return linear_mean_many(self.mean_component, points)
        return biharmonic_eval_many(self.mean_component, points)


def fit(grid, method, config=None, variogram=None):
    """Fit a SurfaceModel of the requested method to a GridTable.

    Runs median polish, builds the mean component (linear effect model for
    mpk; biharmonic spline through the node means at observed cells for
    impk), extracts the residual scatter, and fits its variogram.  A
    pre-fitted variogram may be supplied to skip estimation (used by
    cross-validation with freeze_variogram).  Deterministic for fixed
    inputs.
    """
    if method not in METHODS:
        raise DataError(f"method must be one of {METHODS}, got {method!r}")
    config = config or FitConfig()
    if config.method != method:
        config = replace(config, method=method)

    polish = decompose(grid, tol=config.mp_tol, max_sweeps=config.max_sweeps)
    residual_scatter = residuals_as_scatter(polish, grid.lattice)

    if method == "mpk":
        mean_component = LinearMeanModel(polish, grid.lattice)
    else:
        node_means = polish.node_mean_grid()
        rows, cols = np.nonzero(grid.present_mask)
        mean_component = biharmonic_fit(
            residual_scatter.coords,
            node_means[rows, cols],
            regularization=config.epsilon,
        )

    if variogram is None:
        emp = empirical_semivariogram(
            residual_scatter, n_bins=config.n_bins, max_lag=config.max_lag
        )
        variogram = fit_variogram(emp, family=config.family)

    return SurfaceModel(
        method=method,
        mean_component=mean_component,
        polish=polish,
        residual_scatter=residual_scatter,
        variogram=variogram,
        source_grid=grid,
        config=config,
    )


def predict_many(model, points):
    """Values and variances at an (M, 2) array of target locations."""
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    mean = model.mean_at(points)
    if model._system is not None:
        resid, var = model._system.predict_many(points)
    elif model.variogram.degenerate:
        resid = np.zeros(len(points))
        var = np.zeros(len(points))
    else:
        resid = np.empty(len(points))
        var = np.empty(len(points))
        for i, (x, y) in enumerate(points):
            p = ok_predict(
                model.residual_scatter,
                model.variogram,
                Location2D(x, y),
                neighborhood=model.config.neighborhood,
            )
            resid[i] = p.value
            var[i] = p.variance
    return mean + resid, var


def predict(model, s):
    """Prediction (value and residual-kriging variance) at one Location2D."""
    values, variances = predict_many(model, np.array([[s.x, s.y]]))
    return KrigingPrediction(value=float(values[0]), variance=float(variances[0]))


@dataclass(frozen=True)
class PredictionGrid:
    """Predicted values and variances on a uniform output lattice."""

    lattice: GridLattice
    values: np.ndarray
    variances: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values))
        object.__setattr__(self, "variances", _frozen(self.variances))
        shape = (self.lattice.p, self.lattice.q)
        if self.values.shape != shape or self.variances.shape != shape:
            raise DataError("grid arrays do not match the lattice shape")
        if np.any(self.variances < 0):
            raise DataError("negative variance in prediction grid")


def predict_grid(model, resolution):
    """Predict on a (rows, cols) uniform lattice over the source bounding box.

    The output lattice spans exactly the source lattice's extent; values and
    variances are laid out row-major (row index changes slowest).
    """
    p_out, q_out = resolution
    if p_out < 2 or q_out < 2:
        raise DataError("output resolution must be at least 2 x 2")
    src = model.source_grid.lattice
    xs = np.linspace(src.x_coords[0], src.x_coords[-1], q_out)
    ys = np.linspace(src.y_coords[0], src.y_coords[-1], p_out)
    gx, gy = np.meshgrid(xs, ys)
    points = np.column_stack([gx.ravel(), gy.ravel()])
    values, variances = predict_many(model, points)
    return PredictionGrid(
        lattice=GridLattice(xs, ys),
        values=values.reshape(p_out, q_out),
        variances=variances.reshape(p_out, q_out),
    )


@dataclass(frozen=True)
class CvRecord:
    location: Location2D
    observed: float
    predicted: float
    error: float


@dataclass(frozen=True)
class SkippedFold:
    location: Location2D
    reason: str


@dataclass(frozen=True)
class CvReport:
    """Leave-one-out results: one record per completed fold, in row-major
    cell order, plus the folds that could not run and why."""

    method: str
    per_point: tuple
    skipped: tuple
    rmse: float
    config: FitConfig

    @property
    def n_folds(self):
        return len(self.per_point)


def rmse(errors):
    """Root mean squared error of a nonempty error sequence."""
    errors = np.asarray(errors, dtype=np.float64)
    if errors.size == 0:
        raise DataError("rmse of an empty error list")
    return float(np.sqrt(np.mean(errors * errors)))


def loocv(grid, method, config=None):
    """Leave-one-out cross-validation with a full per-fold refit.

    Every present cell is deleted in turn (row-major order), the entire
    pipeline is refitted on the remaining cells, and the deleted value is
    predicted at its node.  Folds whose deletion would empty a row or a
    column are skipped and reported, as are folds whose refit fails; both
    appear in the report's skipped list with a reason.
    """
    config = config or FitConfig()
    if config.method != method:
        config = replace(config, method=method)

    frozen_variogram = None
    if config.freeze_variogram:
        frozen_variogram = fit(grid, method, config).variogram

    present = grid.present_mask
    row_counts = present.sum(axis=1)
    col_counts = present.sum(axis=0)
    lat = grid.lattice

    records = []
    skipped = []
    for k, l in zip(*np.nonzero(present)):
        node = lat.node(k, l)
        if row_counts[k] < 2:
            skipped.append(SkippedFold(node, f"deletion empties row {k}"))
            continue
        if col_counts[l] < 2:
            skipped.append(SkippedFold(node, f"deletion empties column {l}"))
            continue
        observed = float(grid.cells[k, l])
        try:
            reduced = grid.drop_cell(k, l)
            model = fit(reduced, method, config, variogram=frozen_variogram)
            pred = predict(model, node)
        except PolishKrigeError as exc:
            skipped.append(SkippedFold(node, f"{exc.category}: {exc}"))
            continue
        records.append(
            CvRecord(
                location=node,
                observed=observed,
                predicted=pred.value,
                error=pred.value - observed,
            )
        )

    if not records:
        raise DataError("no completed cross-validation folds")
    return CvReport(
        method=method,
        per_point=tuple(records),
        skipped=tuple(skipped),
        rmse=rmse([r.error for r in records]),
        config=config,
    )
