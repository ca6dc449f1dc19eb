"""Brute-force dense propagation of the full extended density tensor.

The entire hierarchy is stored as one complex tensor with axes
(ket, bra, ladder_1, ..., ladder_K); the generator is applied term by term
through mode-wise matrix products.  This is the ground-truth engine for
small instances: it shares the SopGenerator with the tensor-network path, so
comparisons isolate the network machinery rather than the physics assembly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .generator import SopGenerator
from .kernels import mode_apply
from .rk import integrate
from .trajectory import Trajectory, TrajectoryRow

DENSE_GUARD = 10**7


@dataclass
class DenseEdo:
    """The uncompressed hierarchy tensor with its time stamp."""

    omega: np.ndarray  # shape (M, M, N_1, ..., N_K)
    time: float = 0.0

    @property
    def dim(self) -> int:
        return self.omega.shape[0]

    def rho(self) -> np.ndarray:
        return np.ascontiguousarray(self.omega[(slice(None), slice(None)) + (0,) * (self.omega.ndim - 2)])


def initial_edo(rho0: np.ndarray, depths) -> DenseEdo:
    rho0 = np.asarray(rho0, dtype=complex)
    m = rho0.shape[0]
    shape = (m, m) + tuple(depths)
    if np.prod(shape) > DENSE_GUARD:
        raise ValueError(f"dense hierarchy of {np.prod(shape)} elements exceeds guard {DENSE_GUARD}")
    omega = np.zeros(shape, dtype=complex)
    omega[(slice(None), slice(None)) + (0,) * len(depths)] = rho0
    return DenseEdo(omega)


def dense_rhs(omega: np.ndarray, gen: SopGenerator, t: float) -> np.ndarray:
    """Apply the generator to the dense tensor, term by term."""
    if omega.size > DENSE_GUARD:
        raise ValueError("dense hierarchy exceeds guard")
    out = np.zeros_like(omega)
    for term in gen.terms:
        work = omega
        if term.h_gt is not None:
            work = mode_apply(term.h_gt, work, 0)
        if term.h_lt is not None:
            work = mode_apply(term.h_lt, work, 1)
        if term.h_mode is not None:
            work = mode_apply(term.h_mode, work, 2 + term.k)
        s = term.scalar(t)
        if s != 1.0:
            work = work * s
        out += work
    return out


def dense_run(
    gen: SopGenerator,
    rho0: np.ndarray,
    t_end: float,
    output_dt: float,
    rtol: float = 1e-9,
    atol: float = 1e-11,
) -> Trajectory:
    """Reference trajectory at tight tolerances (the oracle for acceptance)."""
    edo = initial_edo(rho0, gen.depths)
    n_out = int(round(t_end / output_dt)) if output_dt > 0 else 0
    times = [i * output_dt for i in range(n_out + 1)] if n_out else [0.0]
    rows = [TrajectoryRow(0.0, edo.rho(), max_rank=0, size=edo.omega.size, wall_ms=0.0)]
    y = [edo.omega]
    h = None
    for t0, t1 in zip(times[:-1], times[1:]):
        def f(t, ys):
            return [dense_rhs(ys[0], gen, t)]

        y, h = integrate(f, y, t0, t1, rtol=rtol, atol=atol, h0=h)
        rows.append(TrajectoryRow(t1, _rho_of(y[0]), max_rank=0, size=y[0].size, wall_ms=0.0))
    return Trajectory(rows)


def _rho_of(omega: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(omega[(slice(None), slice(None)) + (0,) * (omega.ndim - 2)])
