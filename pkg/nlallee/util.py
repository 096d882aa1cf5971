"""File formats: CSV tables, snapshot matrices and gnuplot phase-diagram matrices."""
import logging
import os
import re

import numpy as np
import pandas as pd

from nlallee.errors import DomainError
from nlallee.experiments import OutcomeKind, SweepResult
from nlallee.grid import Grid
from nlallee.integrate import Trajectory
from nlallee.model import ModelParams, StateField, total_mass

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"

SWEEP_COLUMNS = ["alpha", "L", "label", "N_half", "N_end", "wall_ms"]
TRAJECTORY_COLUMNS = ["t", "N", "sup_u"]

#: Numeric codes for the gnuplot phase-diagram matrix.
LABEL_CODES = {
    OutcomeKind.EXTINCTION: 0,
    OutcomeKind.PROBABLE_EXTINCTION: 1,
    OutcomeKind.PROBABLE_PERSISTENCE: 2,
    OutcomeKind.PERSISTENCE: 3,
    OutcomeKind.INDETERMINATE: -1,
}

_HEADER = re.compile(r"(\w+)=(\S+)")


def write_csv(frame: pd.DataFrame, path, footer=()):
    """Write `frame` with 17 significant digits, then `# `-prefixed footer lines."""
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    if footer:
        with open(path, "a") as f:
            for line in footer:
                f.write(f"# {line}\n")
    logger.info("wrote %s", path)


def read_csv(path) -> pd.DataFrame:
    return pd.read_csv(path, comment="#")


def trajectory_frame(traj: Trajectory) -> pd.DataFrame:
    return pd.DataFrame({"t": traj.times, "N": traj.mass_series, "sup_u": traj.sup_series}, columns=TRAJECTORY_COLUMNS)


def sweep_frame(result: SweepResult) -> pd.DataFrame:
    return pd.DataFrame.from_records(list(result.records()), columns=SWEEP_COLUMNS)


def snapshot_filename(t: float) -> str:
    return f"snapshot_t{t:.6g}.dat"


def write_snapshot(state: StateField, path):
    """One row per x node, one column per trait node, 17 significant digits."""
    grid = state.grid
    header = (
        f"t={state.t!r} nx={grid.nx} ntheta={grid.ntheta} x_lo={grid.x_lo!r} "
        f"dx={grid.dx!r} dtheta={grid.dtheta!r} theta_min={grid.theta_min!r}"
    )
    np.savetxt(path, state.u, fmt=FLOAT_FORMAT, header=header, comments="# ")


def read_snapshot_header(path) -> dict:
    with open(path) as f:
        first = f.readline()
    if not first.startswith("#"):
        raise DomainError(f"{path} has no snapshot header.")
    return dict(_HEADER.findall(first))


def read_snapshot(path, params: ModelParams) -> StateField:
    header = read_snapshot_header(path)
    try:
        nx, ntheta = int(header["nx"]), int(header["ntheta"])
        x_lo, dx = float(header["x_lo"]), float(header["dx"])
        t = float(header["t"])
    except KeyError as exc:
        raise DomainError(f"{path}: snapshot header lacks {exc}.") from exc

    u = np.loadtxt(path, comments="#", ndmin=2)
    if u.shape != (nx, ntheta):
        raise DomainError(f"{path}: data has shape {u.shape}, header says ({nx}, {ntheta}).")
    grid = Grid(x_lo, x_lo + dx * (nx - 1), nx, ntheta, params.theta_min, params.theta_max)
    return StateField(t=t, u=u, params=params, grid=grid)


def read_snapshots(directory, params: ModelParams) -> Trajectory:
    """Trajectory rebuilt from the snapshot files in `directory`, ordered by time."""
    states = [
        read_snapshot(os.path.join(directory, name), params)
        for name in os.listdir(directory)
        if name.startswith("snapshot_") and name.endswith(".dat")
    ]
    if not states:
        raise DomainError(f"no snapshot files in {directory}.")
    states.sort(key=lambda state: state.t)

    traj = Trajectory()
    for state in states:
        traj.times.append(state.t)
        traj.snapshots.append(state)
        traj.mass_series.append(total_mass(state))
        traj.sup_series.append(float(state.u.max()))
        traj.min_series.append(float(state.u.min()))
    return traj


def write_gnuplot_matrix(result: SweepResult, path):
    """gnuplot `matrix nonuniform` layout: L along columns, alpha along rows, label codes as values."""
    codes = np.array([[LABEL_CODES[outcome.label] for outcome in row] for row in result.labels], dtype=float)
    matrix = np.empty((len(result.alpha_values) + 1, len(result.L_values) + 1))
    matrix[0, 0] = len(result.L_values)
    matrix[0, 1:] = result.L_values
    matrix[1:, 0] = result.alpha_values
    matrix[1:, 1:] = codes
    np.savetxt(
        path,
        matrix,
        fmt=FLOAT_FORMAT,
        header="codes: " + ", ".join(f"{kind.value}={code}" for kind, code in LABEL_CODES.items()),
        comments="# ",
    )
