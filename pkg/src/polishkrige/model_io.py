"""Plain-text serialization of fitted surface models.

The format is versioned and self-describing: a signature line, a method
line, then bracketed sections of whitespace-separated key/value or record
lines.  Floats are written with repr, which round-trips exactly, so
save -> load -> save is byte-identical.
"""

from __future__ import annotations

import numpy as np

from .errors import ModelFormatError
from .kriging import VariogramModel
from .mean_surface import BiharmonicModel, LinearMeanModel
from .median_polish import MedianPolishFit, residuals_as_scatter
from .predictor import FitConfig, SurfaceModel
from .spatial_core import GridLattice, GridTable

SIGNATURE = "polishkrige-model 1"


def _fmt(v):
    return repr(float(v))


def _fmt_opt(v):
    return "none" if v is None else repr(v) if isinstance(v, float) else str(v)


def _vector(values):
    return " ".join(_fmt(v) for v in values)


def save_model(model, path):
    """Write a SurfaceModel to a versioned text file."""
    grid = model.source_grid
    lat = grid.lattice
    polish = model.polish
    vg = model.variogram
    cfg = model.config

    lines = [SIGNATURE, f"method {model.method}"]
    lines.append("[lattice]")
    lines.append(f"x {_vector(lat.x_coords)}")
    lines.append(f"y {_vector(lat.y_coords)}")

    lines.append("[grid]")
    for k, l in zip(*np.nonzero(grid.present_mask)):
        lines.append(f"{k} {l} {_fmt(grid.cells[k, l])}")

    lines.append("[polish]")
    lines.append(f"overall {_fmt(polish.overall)}")
    lines.append(f"row_effects {_vector(polish.row_effects)}")
    lines.append(f"col_effects {_vector(polish.col_effects)}")
    lines.append(f"sweeps {polish.sweeps}")
    lines.append(f"converged {int(polish.converged)}")

    lines.append("[residuals]")
    mask = ~np.isnan(polish.residuals)
    for k, l in zip(*np.nonzero(mask)):
        lines.append(f"{k} {l} {_fmt(polish.residuals[k, l])}")

    lines.append("[variogram]")
    lines.append(f"family {vg.family}")
    lines.append(f"nugget {_fmt(vg.nugget)}")
    lines.append(f"partial_sill {_fmt(vg.partial_sill)}")
    lines.append(f"range {_fmt(vg.range)}")
    lines.append(f"degenerate {int(vg.degenerate)}")

    if model.method == "impk":
        spline = model.mean_component
        lines.append("[spline]")
        lines.append(f"epsilon {_fmt(spline.regularization)}")
        for (x, y), a in zip(spline.centers, spline.strengths):
            lines.append(f"center {_fmt(x)} {_fmt(y)} {_fmt(a)}")

    lines.append("[config]")
    lines.append(f"family {cfg.family}")
    lines.append(f"n_bins {cfg.n_bins}")
    lines.append(f"max_lag {_fmt_opt(cfg.max_lag)}")
    lines.append(f"mp_tol {_fmt_opt(cfg.mp_tol)}")
    lines.append(f"max_sweeps {cfg.max_sweeps}")
    lines.append(f"epsilon {_fmt(cfg.epsilon)}")
    lines.append(f"freeze_variogram {int(cfg.freeze_variogram)}")
    lines.append(f"neighborhood {_fmt_opt(cfg.neighborhood)}")

    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _split_sections(lines):
    sections = {}
    current = None
    for line_no, raw in lines:
        if raw.startswith("[") and raw.endswith("]"):
            current = raw[1:-1]
            if current in sections:
                raise ModelFormatError(f"line {line_no}: repeated section [{current}]")
            sections[current] = []
        elif current is None:
            raise ModelFormatError(f"line {line_no}: content before first section")
        else:
            sections[current].append((line_no, raw))
    return sections


def _keyed(section_lines, section):
    out = {}
    for line_no, raw in section_lines:
        key, _, rest = raw.partition(" ")
        if not rest:
            raise ModelFormatError(f"line {line_no}: bad entry in [{section}]")
        out[key] = rest
    return out


def _cells_from_records(section_lines, p, q, section):
    cells = np.full((p, q), np.nan)
    for line_no, raw in section_lines:
        parts = raw.split()
        try:
            k, l, v = int(parts[0]), int(parts[1]), float(parts[2])
        except (ValueError, IndexError):
            raise ModelFormatError(f"line {line_no}: bad record in [{section}]") from None
        if not (0 <= k < p and 0 <= l < q):
            raise ModelFormatError(f"line {line_no}: cell ({k}, {l}) outside {p} x {q}")
        cells[k, l] = v
    return cells


def _opt_float(text):
    return None if text == "none" else float(text)


def _opt_int(text):
    return None if text == "none" else int(text)


def load_model(path):
    """Read a SurfaceModel back from a file written by save_model.

    Raises ModelFormatError for a missing file, wrong signature, or any
    malformed section; messages carry the offending line number.
    """
    try:
        with open(path, "r") as fh:
            raw_lines = fh.read().splitlines()
    except OSError as exc:
        raise ModelFormatError(f"cannot read model file {path}: {exc}") from exc

    lines = [(i, ln.strip()) for i, ln in enumerate(raw_lines, start=1)]
    lines = [(i, ln) for i, ln in lines if ln]
    if not lines or lines[0][1] != SIGNATURE:
        raise ModelFormatError(f"{path}: not a {SIGNATURE!r} file")
    if len(lines) < 2 or not lines[1][1].startswith("method "):
        raise ModelFormatError(f"{path}: missing method line")
    method = lines[1][1].split(" ", 1)[1]
    if method not in ("mpk", "impk"):
        raise ModelFormatError(f"{path}: unknown method {method!r}")

    sections = _split_sections(lines[2:])
    required = ["lattice", "grid", "polish", "residuals", "variogram", "config"]
    if method == "impk":
        required.append("spline")
    for name in required:
        if name not in sections:
            raise ModelFormatError(f"{path}: missing section [{name}]")

    try:
        latkv = _keyed(sections["lattice"], "lattice")
        lattice = GridLattice(
            np.array([float(t) for t in latkv["x"].split()]),
            np.array([float(t) for t in latkv["y"].split()]),
        )
        p, q = lattice.p, lattice.q

        grid = GridTable(lattice, _cells_from_records(sections["grid"], p, q, "grid"))

        pkv = _keyed(sections["polish"], "polish")
        polish = MedianPolishFit(
            overall=float(pkv["overall"]),
            row_effects=np.array([float(t) for t in pkv["row_effects"].split()]),
            col_effects=np.array([float(t) for t in pkv["col_effects"].split()]),
            residuals=_cells_from_records(sections["residuals"], p, q, "residuals"),
            sweeps=int(pkv["sweeps"]),
            converged=bool(int(pkv["converged"])),
        )
        if len(polish.row_effects) != p or len(polish.col_effects) != q:
            raise ModelFormatError(f"{path}: effect lengths do not match the lattice")

        vkv = _keyed(sections["variogram"], "variogram")
        variogram = VariogramModel(
            family=vkv["family"],
            nugget=float(vkv["nugget"]),
            partial_sill=float(vkv["partial_sill"]),
            range=float(vkv["range"]),
            degenerate=bool(int(vkv["degenerate"])),
        )

        ckv = _keyed(sections["config"], "config")
        config = FitConfig(
            method=method,
            family=ckv["family"],
            n_bins=int(ckv["n_bins"]),
            max_lag=_opt_float(ckv["max_lag"]),
            mp_tol=_opt_float(ckv["mp_tol"]),
            max_sweeps=int(ckv["max_sweeps"]),
            epsilon=float(ckv["epsilon"]),
            freeze_variogram=bool(int(ckv["freeze_variogram"])),
            neighborhood=_opt_int(ckv["neighborhood"]),
        )

        if method == "mpk":
            mean_component = LinearMeanModel(polish, lattice)
        else:
            eps = None
            centers = []
            strengths = []
            for line_no, raw in sections["spline"]:
                parts = raw.split()
                if parts[0] == "epsilon":
                    eps = float(parts[1])
                elif parts[0] == "center" and len(parts) == 4:
                    centers.append((float(parts[1]), float(parts[2])))
                    strengths.append(float(parts[3]))
                else:
                    raise ModelFormatError(f"line {line_no}: bad entry in [spline]")
            if eps is None or not centers:
                raise ModelFormatError(f"{path}: incomplete [spline] section")
            mean_component = BiharmonicModel(2, np.array(centers), np.array(strengths), eps)
    except ModelFormatError:
        raise
    except (KeyError, ValueError) as exc:
        raise ModelFormatError(f"{path}: malformed model file ({exc})") from exc

    return SurfaceModel(
        method=method,
        mean_component=mean_component,
        polish=polish,
        residual_scatter=residuals_as_scatter(polish, lattice),
        variogram=variogram,
        source_grid=grid,
        config=config,
    )
