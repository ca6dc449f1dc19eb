"""Time propagation: direct integration, one-site and two-site splitting.

Three interchangeable schemes advance the network state:

* ``direct``: all cores integrated simultaneously with the embedded
  Runge-Kutta pair on the regularized equations (floored singular values).
* ``ps1``: fixed-rank second-order splitting; the root tensor travels a
  depth-first round trip, each core gets two half steps and each bond matrix
  two backward half steps per full step.
* ``ps2``: adaptive-rank variant; height-increasing moves build the order-4
  two-site block, propagate it and split it back with a truncated SVD whose
  kept count is twice the number of singular values above the tolerance,
  capped by the configured maximum rank.

The mixed strategy runs ps2 until any bond reaches the switch rank, then
hands the (non-uniform) ranks to the direct integrator.
"""

from __future__ import annotations

import logging
import time as _time
from dataclasses import dataclass, field

import numpy as np

from .envs import EdgeEnv, GroupedGenerator, apply_generator, branch_env, direct_rhs, down_envs
from .generator import SopGenerator
from .kernels import mode_apply
from .rk import StepSizeUnderflow, integrate
from .trajectory import Trajectory, TrajectoryRow
from .ttn import TtnState, check_semiunitary, extract_rho, reorthonormalize, svd_fixed

log = logging.getLogger("ttnheom")


@dataclass
class IntegratorConfig:
    rtol: float = 1e-5
    atol: float = 1e-7
    epsilon: float = 1e-4
    h0: float | None = None
    max_step: float = np.inf
    min_step: float = 1e-7
    # Projected integration: re-orthonormalize after accepted steps (exact
    # on the represented tensor). 0 disables the projection.
    reorth_every: int = 1
    warn_drift: float = 1e-8


@dataclass
class PsConfig:
    delta: float = 0.1
    svd_tol: float = 1e-7
    max_rank: int | None = None
    rank_headroom: int = 2
    rtol: float = 1e-5
    atol: float = 1e-7
    min_step: float = 1e-9


@dataclass
class MixedConfig:
    ps2: PsConfig = field(default_factory=PsConfig)
    direct: IntegratorConfig = field(default_factory=IntegratorConfig)
    switch_rank: int = 60


class PropagationAbort(RuntimeError):
    def __init__(self, message: str, t: float):
        super().__init__(message)
        self.t = t


# -- direct integration ----------------------------------------------------


def step_direct(state: TtnState, gg: GroupedGenerator, cfg: IntegratorConfig, t_end: float, h0=None):
    """Advance the state in place to t_end; returns the last step size.

    The integration is projected: after every accepted step the cores are
    re-orthonormalized, which is exact on the represented tensor and keeps
    the branch environments consistent with the gauge the equations assume.
    """
    topo = state.topology

    def f(t, tensors):
        work = TtnState(topo, tensors, t)
        return direct_rhs(work, gg, t, cfg.epsilon)

    def project(tensors):
        work = TtnState(topo, list(tensors), state.time)
        reorthonormalize(work)
        return work.tensors

    try:
        y, h = integrate(
            f,
            state.tensors,
            state.time,
            t_end,
            rtol=cfg.rtol,
            atol=cfg.atol,
            h0=h0 or cfg.h0,
            max_step=cfg.max_step,
            min_step=cfg.min_step,
            project=project if cfg.reorth_every else None,
        )
    except StepSizeUnderflow as exc:
        raise PropagationAbort(str(exc), exc.t) from exc
    state.tensors = y
    state.time = t_end
    drift = max(check_semiunitary(state).values(), default=0.0)
    if drift > cfg.warn_drift:
        log.warning("semi-unitarity drift %.2e at t=%.3f fs", drift, t_end)
    return h


# -- splitting propagators ---------------------------------------------------


class Sweep:
    """Working context of one splitting step: tensors, envs, moving root."""

    def __init__(self, state: TtnState, gg: GroupedGenerator, cfg: PsConfig, adaptive: bool):
        self.state = state
        self.topo = state.topology
        self.gg = gg
        self.cfg = cfg
        self.adaptive = adaptive
        self.t0 = state.time  # generator frozen at the step start
        self.root = 0
        self.envs: dict = {}

    # environment handling

    def refresh_down_envs(self):
        self.envs = down_envs(self.state, self.gg)

    def ctx(self, node: int, axis: int):
        leg = self.topo.nodes[node][axis]
        if leg.kind == "mode":
            return ("mode", leg.ref)
        if leg.kind == "ket":
            return ("ket",)
        if leg.kind == "bra":
            return ("bra",)
        if leg.kind == "dummy":
            return ("dummy",)
        neighbor = self.topo.parent[node] if axis == 0 else leg.ref
        return ("env", self.envs[(node, neighbor)])

    def ctxs(self, node: int):
        return [self.ctx(node, ax) for ax in range(3)]

    # elementary operations

    def prop_node(self, node: int, tau: float):
        if tau == 0.0:
            return
        ctxs = self.ctxs(node)

        def f(_, ys):
            return [apply_generator(ys[0], ctxs, self.gg, self.t0)]

        try:
            y, _ = integrate(
                f, [self.state.tensors[node]], 0.0, tau,
                rtol=self.cfg.rtol, atol=self.cfg.atol, h0=abs(tau),
                min_step=self.cfg.min_step,
            )
        except StepSizeUnderflow as exc:
            raise PropagationAbort(f"splitting substep underflow at node {node}", self.t0) from exc
        self.state.tensors[node] = y[0]

    def move1(self, r: int, s: int, tau: float):
        topo = self.topo
        ax_rs = topo.bond_axis(r, s)
        ax_sr = topo.bond_axis(s, r)
        t_r = self.state.tensors[r]
        mat = np.moveaxis(t_r, ax_rs, -1).reshape(-1, t_r.shape[ax_rs])
        w, sig, vh = svd_fixed(mat)
        b = len(sig)
        shape = [d for i, d in enumerate(t_r.shape) if i != ax_rs] + [b]
        u_r = np.moveaxis(w.reshape(shape), -1, ax_rs)
        self.state.tensors[r] = u_r
        self.envs[(s, r)] = branch_env(u_r, self.ctxs(r), ax_rs, self.gg)
        m = sig[:, None] * vh  # (b, old R_s)
        if tau != 0.0:
            ctxs = [("env", self.envs[(s, r)]), ("env", self.envs[(r, s)])]

            def f(_, ys):
                return [apply_generator(ys[0], ctxs, self.gg, self.t0)]

            try:
                y, _ = integrate(
                    f, [m], 0.0, tau, rtol=self.cfg.rtol, atol=self.cfg.atol,
                    h0=abs(tau), min_step=self.cfg.min_step,
                )
            except StepSizeUnderflow as exc:
                raise PropagationAbort(f"bond substep underflow at bond ({r},{s})", self.t0) from exc
            m = y[0]
        self.state.tensors[s] = mode_apply(m, self.state.tensors[s], ax_sr)
        self.envs.pop((r, s), None)
        self.root = s

    def move2(self, r: int, s: int, tau: float):
        topo = self.topo
        ax_rs = topo.bond_axis(r, s)
        ax_sr = topo.bond_axis(s, r)
        t_r, t_s = self.state.tensors[r], self.state.tensors[s]
        block = np.tensordot(t_r, t_s, axes=([ax_rs], [ax_sr]))
        ctxs = [self.ctx(r, ax) for ax in range(3) if ax != ax_rs] + [
            self.ctx(s, ax) for ax in range(3) if ax != ax_sr
        ]
        if tau != 0.0:
            def f(_, ys):
                return [apply_generator(ys[0], ctxs, self.gg, self.t0)]

            try:
                y, _ = integrate(
                    f, [block], 0.0, tau, rtol=self.cfg.rtol, atol=self.cfg.atol,
                    h0=abs(tau), min_step=self.cfg.min_step,
                )
            except StepSizeUnderflow as exc:
                raise PropagationAbort(f"two-site substep underflow at bond ({r},{s})", self.t0) from exc
            block = y[0]
        nr = block.ndim - 2  # axes belonging to the r side
        rows = int(np.prod(block.shape[:nr]))
        mat = block.reshape(rows, -1)
        w, sig, vh = svd_fixed(mat)
        if self.adaptive:
            n_keep = int(np.count_nonzero(sig >= self.cfg.svd_tol))
            keep = max(1, self.cfg.rank_headroom * max(n_keep, 1))
            if self.cfg.max_rank:
                keep = min(keep, self.cfg.max_rank)
            keep = min(keep, len(sig))
            self.truncation_weight = float(np.sum(sig[keep:] ** 2))
        else:
            keep = len(sig)
        shape_r = [d for i, d in enumerate(t_r.shape) if i != ax_rs] + [keep]
        u_r = np.moveaxis(w[:, :keep].reshape(shape_r), -1, ax_rs)
        self.state.tensors[r] = u_r
        self.envs[(s, r)] = branch_env(u_r, self.ctxs(r), ax_rs, self.gg)
        shape_s = [keep] + [d for i, d in enumerate(t_s.shape) if i != ax_sr]
        a_s = np.moveaxis((sig[:keep, None] * vh[:keep]).reshape(shape_s), 0, ax_sr)
        self.state.tensors[s] = a_s
        self.envs.pop((r, s), None)
        self.root = s


def _ps_step(state: TtnState, gg: GroupedGenerator, cfg: PsConfig, adaptive: bool):
    """One full second-order splitting step (forward sweep then its mirror)."""
    sweep = Sweep(state, gg, cfg, adaptive)
    sweep.refresh_down_envs()
    topo = state.topology
    path = topo.dfs_path()
    n = len(path)
    half = 0.5 * cfg.delta
    heights = topo.heights

    # forward: descend with pure re-gauging, ascend with node (+) / bond (-)
    for i in range(n - 1):
        r, s = path[i], path[i + 1]
        if heights[r] < heights[s]:
            sweep.move1(r, s, 0.0)
        elif not adaptive:
            sweep.prop_node(r, half)
            sweep.move1(r, s, -half)
        else:
            sweep.move2(r, s, half)
            sweep.prop_node(s, -half)
    sweep.prop_node(0, half)

    # backward: exact mirror of the forward sweep
    sweep.prop_node(0, half)
    for i in range(n - 1, 0, -1):
        r, s = path[i], path[i - 1]
        if heights[r] < heights[s]:
            if not adaptive:
                sweep.move1(r, s, -half)
                sweep.prop_node(s, half)
            else:
                sweep.prop_node(r, -half)
                sweep.move2(r, s, half)
        else:
            sweep.move1(r, s, 0.0)
    state.time += cfg.delta
    return state


def step_ps1(state: TtnState, gg: GroupedGenerator, cfg: PsConfig):
    return _ps_step(state, gg, cfg, adaptive=False)


def step_ps2(state: TtnState, gg: GroupedGenerator, cfg: PsConfig):
    return _ps_step(state, gg, cfg, adaptive=True)


# -- orchestration -----------------------------------------------------------


@dataclass
class Schedule:
    t_end: float
    output_dt: float


def run(
    state: TtnState,
    gen: SopGenerator,
    strategy: str,
    schedule: Schedule,
    integrator: IntegratorConfig | None = None,
    ps: PsConfig | None = None,
    mixed: MixedConfig | None = None,
    on_sample=None,
) -> Trajectory:
    """Propagate and sample the trajectory every ``output_dt``.

    ``on_sample(state, row)`` fires after each sampled point (used for CSV
    streaming and checkpointing).  A propagation abort surfaces as
    PropagationAbort after the partial trajectory has been delivered through
    ``on_sample``.
    """
    gg = GroupedGenerator.from_sop(gen)
    integrator = integrator or IntegratorConfig()
    ps = ps or PsConfig()
    mixed = mixed or MixedConfig(ps2=ps, direct=integrator)
    traj = Trajectory()
    t_start = state.time
    wall0 = _time.perf_counter()
    last_wall = wall0

    def sample():
        nonlocal last_wall
        now = _time.perf_counter()
        row = TrajectoryRow(
            t=state.time,
            rho=extract_rho(state),
            max_rank=state.max_rank(),
            size=state.size(),
            wall_ms=(now - last_wall) * 1e3,
        )
        last_wall = now
        _sanity(row)
        traj.rows.append(row)
        if on_sample:
            on_sample(state, row)

    sample()
    if schedule.t_end <= t_start:
        return traj

    n_out = max(1, int(round((schedule.t_end - t_start) / schedule.output_dt)))
    out_times = [t_start + (i + 1) * schedule.output_dt for i in range(n_out)]
    out_times[-1] = schedule.t_end

    h_carry = None
    switched = strategy != "mixed"
    mode = {"direct": "direct", "ps1": "ps1", "ps2": "ps2", "mixed": "ps2"}[strategy]
    ps_active = ps if strategy != "mixed" else mixed.ps2
    int_active = integrator if strategy != "mixed" else mixed.direct

    for t_next in out_times:
        if mode == "direct":
            h_carry = step_direct(state, gg, int_active, t_next, h_carry)
        else:
            stepper = step_ps1 if mode == "ps1" else step_ps2
            span = t_next - state.time
            n_sub = max(1, int(np.ceil(span / ps_active.delta - 1e-9)))
            sub = span / n_sub
            cfg = PsConfig(**{**ps_active.__dict__, "delta": sub})
            for _ in range(n_sub):
                stepper(state, gg, cfg)
                if (
                    strategy == "mixed"
                    and not switched
                    and state.max_rank() >= mixed.switch_rank
                ):
                    switched = True
                    mode = "direct"
                    log.info(
                        "mixed strategy: rank %d reached %d at t=%.3f fs; switching to direct",
                        state.max_rank(), mixed.switch_rank, state.time,
                    )
                    break
            state.time = t_next if abs(state.time - t_next) < 1e-9 else state.time
            if mode == "direct" and state.time < t_next - 1e-9:
                h_carry = step_direct(state, gg, int_active, t_next, h_carry)
        sample()
    return traj


def _sanity(row: TrajectoryRow):
    m = row.rho.shape[0]
    tr = np.trace(row.rho)
    if abs(tr - 1) > 1e-5:
        log.warning("trace deviates by %.2e at t=%.3f fs", abs(tr - 1), row.t)
    if row.purity < 1.0 / m - 0.05:
        log.warning("purity %.4f below the maximally mixed floor at t=%.3f fs", row.purity, row.t)
