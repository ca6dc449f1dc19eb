"""Embedded Dormand-Prince 5(4) integrator on lists of complex tensors.

One lightweight stepper serves both the simultaneous integration of all core
tensors and the tiny sub-steps inside the splitting propagators.  The state
is a list of ndarrays; the right-hand side receives (t, list) and returns a
matching list.  Steps may run backward (t_end < t0).  The propagated solution
is 5th order with a 4th-order error estimate and standard proportional step
control.
"""

from __future__ import annotations

import numpy as np

# Dormand-Prince coefficients (FSAL: the 7th stage equals the next first).
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4

MIN_STEP_FS = 1e-7


class StepSizeUnderflow(RuntimeError):
    """Step control pushed |h| below the minimum step."""

    def __init__(self, t: float, h: float):
        super().__init__(f"integrator step underflow at t={t:.6g} fs (h={h:.3e} fs)")
        self.t = t
        self.h = h


def _err_norm(err, y0, y1, rtol, atol):
    num = 0.0
    count = 0
    for e, a, b in zip(err, y0, y1):
        scale = atol + rtol * np.maximum(np.abs(a), np.abs(b))
        num += float(np.sum((np.abs(e) / scale) ** 2))
        count += e.size
    return np.sqrt(num / max(count, 1))


def integrate(
    f,
    y0: list,
    t0: float,
    t_end: float,
    rtol: float = 1e-5,
    atol: float = 1e-7,
    h0: float | None = None,
    max_step: float = np.inf,
    min_step: float = MIN_STEP_FS,
    project=None,
):
    """Integrate to t_end; returns (y, last_h) with last_h reusable.

    ``project``, when given, maps the state back onto its constraint
    manifold after every accepted step (projected Runge-Kutta); the
    first-same-as-last stage is recomputed at the projected point.
    Raises StepSizeUnderflow when error control drives |h| below min_step.
    """
    span = t_end - t0
    if span == 0.0:
        return [np.array(y, copy=True) for y in y0], h0
    direction = 1.0 if span > 0 else -1.0
    h = abs(h0) if h0 else min(abs(span), max(10 * min_step, 1e-3))
    h = min(h, abs(span), max_step)

    t = t0
    y = [np.asarray(a, dtype=complex) for a in y0]
    k1 = f(t, y)
    while (t_end - t) * direction > 1e-14 * max(abs(t), abs(t_end), 1.0):
        h = min(h, abs(t_end - t))
        if h < min_step:
            raise StepSizeUnderflow(t, h)
        hs = direction * h
        ks = [k1]
        for i in range(1, 7):
            yi = [
                y[j] + hs * sum(_A[i][m] * ks[m][j] for m in range(i))
                for j in range(len(y))
            ]
            if i == 6:
                y5 = yi  # b5 row equals the a-coefficients of the last stage
            ks.append(f(t + _C[i] * hs, yi))
        err = [
            hs * sum(_E[m] * ks[m][j] for m in range(7) if _E[m] != 0.0)
            for j in range(len(y))
        ]
        enorm = _err_norm(err, y, y5, rtol, atol)
        if enorm <= 1.0:
            t = t + hs
            if project is not None:
                y = project(y5)
                k1 = f(t, y)
            else:
                y = y5
                k1 = ks[6]  # FSAL
            factor = 5.0 if enorm == 0.0 else min(5.0, max(0.2, 0.9 * enorm ** -0.2))
        else:
            factor = max(0.2, 0.9 * enorm ** -0.2)
            k1 = ks[0]
        h = min(h * factor, max_step)
    return y, h
