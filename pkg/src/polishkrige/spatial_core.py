"""Data model for scattered 2-D observations and grid lattices.

Provides CSV ingestion, grid-structure inference from scattered coordinates
(snapping to a lattice), and point-in-cell lookup.  All containers are
immutable after construction (backing arrays are frozen) and safe to share
across threads for reading.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import DataError, DuplicateLocationError, GridStructureError


def _frozen(a):
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Location2D:
    """A site s = (x, y) in the plane; both coordinates must be finite."""

    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise DataError(f"non-finite location ({self.x}, {self.y})")


@dataclass(frozen=True)
class Observation:
    """A finite response value attached to a location."""

    location: Location2D
    value: float

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise DataError(f"non-finite value at {self.location}")


class ScatterSet:
    """An ordered set of observations with pairwise-distinct locations.

    Internally array-backed: ``coords`` is (n, 2) and ``values`` is (n,).
    Distinctness is enforced within ``distance_tol`` (default: 1e-9 times the
    larger coordinate span, so text round-trip noise never splits a point but
    real neighbours never merge).
    """

    def __init__(self, coords, values, distance_tol=None):
        coords = np.atleast_2d(np.asarray(coords, dtype=np.float64))
        values = np.asarray(values, dtype=np.float64).ravel()
        if coords.ndim != 2 or coords.shape[1] != 2:
            raise DataError(f"coords must be (n, 2), got {coords.shape}")
        if coords.shape[0] != values.shape[0]:
            raise DataError("coords and values length mismatch")
        if coords.shape[0] < 1:
            raise DataError("scatter set needs at least one observation")
        if not np.all(np.isfinite(coords)):
            raise DataError("non-finite coordinate in scatter set")
        if not np.all(np.isfinite(values)):
            raise DataError("non-finite value in scatter set")

        if distance_tol is None:
            distance_tol = 1e-9 * _coordinate_span(coords)
        pair = _closest_pair_within(coords, distance_tol)
        if pair is not None:
            i, j = pair
            err = DuplicateLocationError(
                f"observations {i} and {j} share location "
                f"({coords[i, 0]:g}, {coords[i, 1]:g}) within tolerance {distance_tol:g}"
            )
            err.pair = (i, j)
            raise err

        self.coords = _frozen(coords)
        self.values = _frozen(values)
        self.distance_tol = float(distance_tol)

    @property
    def n(self):
        return self.coords.shape[0]

    @property
    def observations(self):
        """The observations as objects, in insertion order."""
        return [
            Observation(Location2D(x, y), v)
            for (x, y), v in zip(self.coords, self.values)
        ]

    @classmethod
    def from_observations(cls, obs, distance_tol=None):
        coords = [(o.location.x, o.location.y) for o in obs]
        values = [o.value for o in obs]
        return cls(coords, values, distance_tol=distance_tol)

    def __len__(self):
        return self.n

    def __eq__(self, other):
        if not isinstance(other, ScatterSet):
            return NotImplemented
        return np.array_equal(self.coords, other.coords) and np.array_equal(
            self.values, other.values
        )


def _coordinate_span(coords):
    spans = coords.max(axis=0) - coords.min(axis=0)
    return float(spans.max())


def _closest_pair_within(coords, tol):
    if coords.shape[0] < 2:
        return None
    pairs = cKDTree(coords).query_pairs(r=tol, output_type="ndarray")
    if len(pairs) == 0:
        return None
    i, j = min((tuple(sorted(p)) for p in pairs))
    return int(i), int(j)


@dataclass(frozen=True)
class GridLattice:
    """Strictly increasing column (x) and row (y) coordinates of a lattice."""

    x_coords: np.ndarray
    y_coords: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x_coords", _frozen(self.x_coords))
        object.__setattr__(self, "y_coords", _frozen(self.y_coords))
        for name, c in (("x", self.x_coords), ("y", self.y_coords)):
            if c.ndim != 1 or len(c) < 2:
                raise GridStructureError(
                    f"lattice needs at least 2 distinct {name} coordinates, got {len(c)}"
                )
            if not np.all(np.isfinite(c)):
                raise GridStructureError(f"non-finite lattice {name} coordinate")
            if not np.all(np.diff(c) > 0):
                raise GridStructureError(f"lattice {name} coordinates not strictly increasing")

    @property
    def q(self):
        """Number of columns."""
        return len(self.x_coords)

    @property
    def p(self):
        """Number of rows."""
        return len(self.y_coords)

    def node(self, k, l):
        """Location of the lattice node at row k, column l (0-based)."""
        return Location2D(float(self.x_coords[l]), float(self.y_coords[k]))


class GridTable:
    """A p x q table of optionally-missing values on a GridLattice.

    Missing cells are NaN.  Every row and every column must contain at least
    one present value (medians must exist downstream).
    """

    def __init__(self, lattice, cells):
        cells = np.asarray(cells, dtype=np.float64)
        if cells.shape != (lattice.p, lattice.q):
            raise GridStructureError(
                f"cells shape {cells.shape} does not match lattice "
                f"({lattice.p} rows, {lattice.q} cols)"
            )
        present = ~np.isnan(cells)
        empty_rows = np.flatnonzero(~present.any(axis=1))
        if empty_rows.size:
            raise GridStructureError(f"rows {empty_rows.tolist()} are entirely missing")
        empty_cols = np.flatnonzero(~present.any(axis=0))
        if empty_cols.size:
            raise GridStructureError(f"columns {empty_cols.tolist()} are entirely missing")
        if np.any(np.isinf(cells)):
            raise GridStructureError("infinite cell value")
        self.lattice = lattice
        self.cells = _frozen(cells)

    @property
    def present_mask(self):
        return ~np.isnan(self.cells)

    @property
    def n_present(self):
        return int(self.present_mask.sum())

    def to_scatter(self):
        """Present cells as a ScatterSet, row-major (row index outer)."""
        rows, cols = np.nonzero(self.present_mask)
        coords = np.column_stack(
            [self.lattice.x_coords[cols], self.lattice.y_coords[rows]]
        )
        return ScatterSet(coords, self.cells[rows, cols])

    def drop_cell(self, k, l):
        """A copy of this table with cell (row k, col l) made missing.

        Raises GridStructureError if the deletion would empty row k or
        column l.
        """
        if not self.present_mask[k, l]:
            raise GridStructureError(f"cell ({k}, {l}) is already missing")
        cells = np.array(self.cells)
        cells[k, l] = np.nan
        return GridTable(self.lattice, cells)


@dataclass(frozen=True)
class CsvOptions:
    """Column mapping and delimiter for observation CSV files."""

    x_col: str = "x"
    y_col: str = "y"
    z_col: str = "z"
    delimiter: str = ","


def load_observations_csv(path, options=None):
    """Read one observation per data row from a delimited text file.

    The first non-blank line is a header naming the columns; blank lines are
    ignored.  Row order is preserved.

    Args:
        path: file to read.
        options: CsvOptions with column names and delimiter (defaults to
            columns ``x,y,z`` and a comma).

    Returns:
        ScatterSet with one observation per data row.

    Raises:
        DataError: missing/unreadable file, missing column, or a non-numeric
            field (the message names the offending file line).
        DuplicateLocationError: two rows share a location within tolerance
            (the message names both file lines).
    """
    options = options or CsvOptions()
    try:
        fh = open(path, "r", newline="")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc

    coords = []
    values = []
    line_numbers = []
    with fh:
        reader = csv.reader(fh, delimiter=options.delimiter)
        header = None
        for line_no, row in enumerate(reader, start=1):
            if not row or all(not field.strip() for field in row):
                continue
            if header is None:
                header = [h.strip() for h in row]
                try:
                    ix = header.index(options.x_col)
                    iy = header.index(options.y_col)
                    iz = header.index(options.z_col)
                except ValueError:
                    raise DataError(
                        f"{path}: header {header} lacks required columns "
                        f"({options.x_col}, {options.y_col}, {options.z_col})"
                    ) from None
                continue
            try:
                x = float(row[ix])
                y = float(row[iy])
                z = float(row[iz])
            except (ValueError, IndexError) as exc:
                raise DataError(f"{path}: line {line_no}: non-numeric or short row") from exc
            coords.append((x, y))
            values.append(z)
            line_numbers.append(line_no)

    if header is None or not coords:
        raise DataError(f"{path}: no data rows")

    try:
        return ScatterSet(coords, values)
    except DuplicateLocationError as exc:
        i, j = exc.pair
        raise DuplicateLocationError(
            f"{path}: lines {line_numbers[i]} and {line_numbers[j]} share a location"
        ) from None


def _snap_axis(values, tol):
    """Cluster 1-D coordinates within tol; returns (nodes, index per value)."""
    order = np.argsort(values, kind="stable")
    sorted_vals = values[order]
    breaks = np.flatnonzero(np.diff(sorted_vals) > tol)
    starts = np.concatenate([[0], breaks + 1])
    ends = np.concatenate([breaks + 1, [len(sorted_vals)]])
    nodes = np.array([sorted_vals[a:b].mean() for a, b in zip(starts, ends)])
    idx = np.empty(len(values), dtype=np.intp)
    for node_i, (a, b) in enumerate(zip(starts, ends)):
        idx[order[a:b]] = node_i
    return nodes, idx


def to_grid(scatter, snap_tolerance=None):
    """Recover the lattice underlying a scattered sample and fill a GridTable.

    Distinct x (and y) coordinates are clustered within ``snap_tolerance``
    (default: 1e-9 times the coordinate span) and each cluster becomes a
    lattice node at the cluster mean; unvisited cells are missing.

    Raises:
        DuplicateLocationError: two observations snap to the same cell.
        GridStructureError: fewer than 2 distinct coordinates on an axis.
    """
    if snap_tolerance is None:
        snap_tolerance = 1e-9 * _coordinate_span(scatter.coords)

    x_nodes, col_idx = _snap_axis(scatter.coords[:, 0], snap_tolerance)
    y_nodes, row_idx = _snap_axis(scatter.coords[:, 1], snap_tolerance)
    if len(x_nodes) < 2 or len(y_nodes) < 2:
        raise GridStructureError(
            f"grid needs at least 2 distinct coordinates per axis, got "
            f"{len(x_nodes)} x and {len(y_nodes)} y"
        )

    lattice = GridLattice(x_nodes, y_nodes)
    cells = np.full((lattice.p, lattice.q), np.nan)
    seen = {}
    for obs_i, (k, l) in enumerate(zip(row_idx, col_idx)):
        if (k, l) in seen:
            raise DuplicateLocationError(
                f"observations {seen[(k, l)]} and {obs_i} snap to the same "
                f"grid cell (row {k}, col {l})"
            )
        seen[(k, l)] = obs_i
        cells[k, l] = scatter.values[obs_i]
    return GridTable(lattice, cells)


@dataclass(frozen=True)
class CellRef:
    """A lattice cell reference plus inside/outside classification.

    ``col``/``row`` are 0-based indices of the cell's lower-left node, always
    within 0..q-2 and 0..p-2; for outside points they reference the boundary
    cell whose node pair extends linearly (column pair (0, 1) for x below the
    grid, (q-2, q-1) above, likewise in y).  ``x_side``/``y_side`` are -1, 0
    or +1 for below / inside / above the lattice extent on that axis.
    """

    col: int
    row: int
    x_side: int
    y_side: int

    @property
    def inside(self):
        return self.x_side == 0 and self.y_side == 0


def _axis_cell(coords, v):
    n = len(coords)
    if v < coords[0]:
        return 0, -1
    if v > coords[-1]:
        return n - 2, 1
    # ties at a node go to the lower-index cell; v == coords[-1] lands in n-2
    idx = int(np.searchsorted(coords, v, side="left")) - 1
    return max(0, min(idx, n - 2)), 0


def cell_containing(lattice, s):
    """Locate the lattice cell holding (or designated for extrapolating) s.

    Inside the hull returns the cell with x_l <= s.x <= x_{l+1} and
    y_k <= s.y <= y_{k+1}, ties to the lower cell.  Outside, the returned
    cell is the adjacent boundary pair and the side flags say which edges
    were crossed.  Total over finite locations.
    """
    l, x_side = _axis_cell(lattice.x_coords, s.x)
    k, y_side = _axis_cell(lattice.y_coords, s.y)
    return CellRef(col=l, row=k, x_side=x_side, y_side=y_side)
