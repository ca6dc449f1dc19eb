"""Trajectory container and its CSV surface.

Columns: t_fs, re_rho_{ij}/im_rho_{ij} for all i <= j, purity, max_rank,
ttn_size, wall_ms.  The CSV is written row by row and flushed so a crashed
run leaves a parseable prefix.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np


@dataclass
class TrajectoryRow:
    t: float
    rho: np.ndarray
    max_rank: int
    size: int
    wall_ms: float = 0.0

    @property
    def purity(self) -> float:
        return float(np.real(np.trace(self.rho @ self.rho)))


@dataclass
class Trajectory:
    rows: list[TrajectoryRow] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def times(self) -> np.ndarray:
        return np.array([r.t for r in self.rows])

    @property
    def rhos(self) -> np.ndarray:
        return np.array([r.rho for r in self.rows])

    @property
    def purities(self) -> np.ndarray:
        return np.array([r.purity for r in self.rows])

    def max_rho_diff(self, other: "Trajectory") -> float:
        """Max element-wise density-matrix difference on shared sample times."""
        ta, tb = self.times, other.times
        n = min(len(ta), len(tb))
        if not np.allclose(ta[:n], tb[:n], atol=1e-9):
            raise ValueError("trajectories sampled at different times")
        return float(np.max(np.abs(self.rhos[:n] - other.rhos[:n])))


def header(dim: int) -> list[str]:
    cols = ["t_fs"]
    for i in range(dim):
        for j in range(i, dim):
            cols += [f"re_rho_{i}{j}", f"im_rho_{i}{j}"]
    cols += ["purity", "max_rank", "ttn_size", "wall_ms"]
    return cols


def format_row(row: TrajectoryRow) -> str:
    dim = row.rho.shape[0]
    vals = [f"{row.t:.10g}"]
    for i in range(dim):
        for j in range(i, dim):
            vals += [f"{row.rho[i, j].real:.17g}", f"{row.rho[i, j].imag:.17g}"]
    vals += [f"{row.purity:.17g}", str(row.max_rank), str(row.size), f"{row.wall_ms:.3f}"]
    return ",".join(vals)


class CsvWriter:
    """Append-only writer; every row is flushed as it lands."""

    def __init__(self, stream: io.TextIOBase, dim: int):
        self.stream = stream
        self.dim = dim
        self.stream.write(",".join(header(dim)) + "\n")
        self.stream.flush()

    def write(self, row: TrajectoryRow):
        self.stream.write(format_row(row) + "\n")
        self.stream.flush()


def write_csv(path, traj: Trajectory):
    dim = traj.rows[0].rho.shape[0]
    with open(path, "w") as fh:
        w = CsvWriter(fh, dim)
        for row in traj.rows:
            w.write(row)


def read_csv(path) -> Trajectory:
    with open(path) as fh:
        cols = fh.readline().strip().split(",")
        pairs = [c[len("re_rho_") :] for c in cols if c.startswith("re_rho_")]
        dim = max(int(p[0]) for p in pairs) + 1
        rows = []
        for line in fh:
            parts = line.strip().split(",")
            if len(parts) != len(cols):
                continue  # truncated trailing line from a crash
            vals = dict(zip(cols, parts))
            rho = np.zeros((dim, dim), dtype=complex)
            for p in pairs:
                i, j = int(p[0]), int(p[1])
                rho[i, j] = complex(float(vals[f"re_rho_{p}"]), float(vals[f"im_rho_{p}"]))
                if i != j:
                    rho[j, i] = np.conj(rho[i, j])
            rows.append(
                TrajectoryRow(
                    float(vals["t_fs"]),
                    rho,
                    int(vals["max_rank"]),
                    int(vals["ttn_size"]),
                    float(vals["wall_ms"]),
                )
            )
    return Trajectory(rows)
