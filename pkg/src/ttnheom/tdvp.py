"""Variational equations of motion for the network cores.

Per-term reference implementation of the right-hand sides: the recursive
mean-field matrices transported leaves-to-root, the bond-space overlap
matrices built root-to-leaves, the root equation, and the regularized
semi-unitary equations obtained by factorizing the running root tensor down
every bond and flooring the singular values.

Everything here is written directly against the recursion structure with
plain einsums; the production engine in ``envs`` reproduces these results
with grouped terms and is cross-checked against this module.  Caches raise
on out-of-order access: mean fields must be built leaves-to-root, overlap
chains root-to-leaves.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .generator import SopGenerator, SopTerm
from .ttn import TtnState, svd_fixed


class _OrderedCache(dict):
    """Dict that refuses reads of entries that were never computed."""

    def __init__(self, label: str):
        super().__init__()
        self.label = label

    def __missing__(self, key):
        raise AssertionError(f"{self.label} read out of order: {key!r} not yet computed")


@dataclass
class MeanFieldCache:
    """f[(m, s)]: environment of branch s for term m; None means identity."""

    f: _OrderedCache = field(default_factory=lambda: _OrderedCache("mean field"))

    def get(self, m: int, s: int):
        return self.f[(m, s)]


@dataclass
class DensityCache:
    d: _OrderedCache = field(default_factory=lambda: _OrderedCache("overlap matrix"))
    dm: _OrderedCache = field(default_factory=lambda: _OrderedCache("term overlap matrix"))


@dataclass
class RegularizedCache:
    """Per-bond factors of the running root plus floored inverse data."""

    w: dict[int, np.ndarray] = field(default_factory=dict)
    sigma: dict[int, np.ndarray] = field(default_factory=dict)
    v: dict[int, np.ndarray] = field(default_factory=dict)
    dbar: _OrderedCache = field(default_factory=lambda: _OrderedCache("regularized chain"))
    achain: dict[int, np.ndarray] = field(default_factory=dict)
    epsilon: float = 1e-4


def _term_factor(term: SopTerm, mf: MeanFieldCache, topo, s: int, axis: int):
    """F factor of a term on one lower leg of node s (None = identity)."""
    leg = topo.nodes[s][axis]
    if leg.kind == "mode":
        return term.h_mode if term.k == leg.ref else None
    if leg.kind == "bond":
        return mf.get(id(term), leg.ref)
    return None  # dummy


def _apply(mat, ten, axis):
    if mat is None:
        return ten
    return np.moveaxis(np.tensordot(mat, ten, axes=(1, axis)), 0, axis)


def build_mean_fields(state: TtnState, gen: SopGenerator, t: float) -> MeanFieldCache:
    """Leaves-to-root sweep of the per-term branch environments."""
    topo = state.topology
    mf = MeanFieldCache()
    for s in range(topo.n_nodes() - 1, 0, -1):
        u = state.tensors[s]
        for term in gen.terms:
            f2 = _term_factor(term, mf, topo, s, 1)
            f3 = _term_factor(term, mf, topo, s, 2)
            if f2 is None and f3 is None:
                mf.f[(id(term), s)] = None
                continue
            x = _apply(f2, u, 1)
            x = _apply(f3, x, 2)
            mf.f[(id(term), s)] = np.einsum("abc,dbc->ad", u.conj(), x)
    return mf


def root_rhs(state: TtnState, mf: MeanFieldCache, gen: SopGenerator, t: float) -> np.ndarray:
    """dA0 = sum_m (h> x h< x f_m) A0."""
    topo = state.topology
    a0 = state.tensors[0]
    out = np.zeros_like(a0)
    for term in gen.terms:
        x = _apply(term.h_gt, a0, 0)
        x = _apply(term.h_lt, x, 1)
        if topo.n_bonds:
            x = _apply(mf.get(id(term), 1), x, 2)
        s = term.scalar(t)
        out += x if s == 1.0 else s * x
    return out


def build_density(state: TtnState, mf: MeanFieldCache, gen: SopGenerator, t: float) -> DensityCache:
    """Root-to-leaves sweep of the bond overlap matrices D and D_m."""
    topo = state.topology
    dc = DensityCache()
    if not topo.n_bonds:
        return dc
    a0 = state.tensors[0]
    dc.d[1] = np.einsum("ija,ijb->ab", a0, a0.conj())
    for term in gen.terms:
        x = _apply(term.h_gt, a0, 0)
        x = _apply(term.h_lt, x, 1)
        s = term.scalar(t)
        dc.dm[(id(term), 1)] = s * np.einsum("ija,ijb->ab", x, a0.conj())
    for s in range(1, topo.n_nodes()):
        u = state.tensors[s]
        for axis in (1, 2):
            leg = topo.nodes[s][axis]
            if leg.kind != "bond":
                continue
            child = leg.ref
            other = 2 if axis == 1 else 1
            if axis == 2:
                dc.d[child] = np.einsum("aeb,ac,ced->bd", u, dc.d[s], u.conj())
            else:
                dc.d[child] = np.einsum("abe,ac,cde->bd", u, dc.d[s], u.conj())
            for term in gen.terms:
                f_side = _term_factor(term, mf, topo, s, other)
                x = _apply(f_side, u, other)
                dmr = dc.dm[(id(term), s)]
                if axis == 2:
                    dc.dm[(id(term), child)] = np.einsum("aeb,ac,ced->bd", x, dmr, u.conj())
                else:
                    dc.dm[(id(term), child)] = np.einsum("abe,ac,cde->bd", x, dmr, u.conj())
    return dc


def build_regularized(
    state: TtnState, mf: MeanFieldCache, gen: SopGenerator, t: float, epsilon: float = 1e-4
) -> RegularizedCache:
    """Root-to-leaves factorization of the running root tensor.

    At every bond the current root factor is thin-SVDed across that bond,
    the per-term cross overlaps are transported, and the singular triple is
    stored for the floored inverse used by ``su_rhs_regularized``.
    """
    topo = state.topology
    rc = RegularizedCache(epsilon=epsilon)
    if not topo.n_bonds:
        return rc
    a0 = state.tensors[0]
    m = topo.dim
    w, sig, vh = svd_fixed(a0.reshape(m * m, -1))
    rc.w[1], rc.sigma[1], rc.v[1] = w.reshape(m, m, -1), sig, vh.conj().T
    for term in gen.terms:
        x = _apply(term.h_gt, a0, 0)
        x = _apply(term.h_lt, x, 1)
        s0 = term.scalar(t)
        rc.dbar[(id(term), 1)] = s0 * np.einsum("ija,ijb->ab", x, rc.w[1].conj())
    rc.achain[1] = np.einsum("b,ab,axy->bxy", sig, rc.v[1].conj(), state.tensors[1])

    for s in range(1, topo.n_nodes()):
        for axis in (1, 2):
            leg = topo.nodes[s][axis]
            if leg.kind != "bond":
                continue
            child = leg.ref
            other = 2 if axis == 1 else 1
            ach = rc.achain[s]
            mat = np.moveaxis(ach, axis, -1).reshape(-1, ach.shape[axis])
            w, sig, vh = svd_fixed(mat)
            wt = np.moveaxis(
                w.reshape([d for i, d in enumerate(ach.shape) if i != axis] + [len(sig)]),
                -1,
                axis,
            )
            rc.w[child], rc.sigma[child], rc.v[child] = wt, sig, vh.conj().T
            u = state.tensors[s]
            for term in gen.terms:
                f_side = _term_factor(term, mf, topo, s, other)
                x = _apply(f_side, u, other)
                dbr = rc.dbar[(id(term), s)]
                if axis == 2:
                    rc.dbar[(id(term), child)] = np.einsum("aeb,ac,ced->bd", x, dbr, wt.conj())
                else:
                    rc.dbar[(id(term), child)] = np.einsum("abe,ac,cde->bd", x, dbr, wt.conj())
            rc.achain[child] = np.einsum(
                "b,ab,axy->bxy", sig, rc.v[child].conj(), state.tensors[child]
            )
    return rc


def su_rhs_regularized(
    state: TtnState,
    mf: MeanFieldCache,
    rc: RegularizedCache,
    gen: SopGenerator,
    t: float,
) -> dict[int, np.ndarray]:
    """dU per node via the floored-inverse equations; the projector part
    (subtraction of the own-branch mean field) keeps the gauge condition."""
    topo = state.topology
    out: dict[int, np.ndarray] = {}
    for s in range(1, topo.n_nodes()):
        u = state.tensors[s]
        du = np.zeros_like(u)
        inv = 1.0 / np.maximum(rc.sigma[s], rc.epsilon)
        v = rc.v[s]
        for term in gen.terms:
            f2 = _term_factor(term, mf, topo, s, 1)
            f3 = _term_factor(term, mf, topo, s, 2)
            fo = mf.get(id(term), s)
            if f2 is None and f3 is None and fo is None:
                continue
            cm = np.einsum("pb,b,ab->pa", rc.dbar[(id(term), s)], inv, v)
            x = _apply(f2, u, 1)
            x = _apply(f3, x, 2)
            if fo is not None:
                x = x - np.einsum("abc,ad->dbc", u, fo)
            elif f2 is None and f3 is None:
                continue
            du += np.einsum("pa,pbc->abc", cm, x)
        out[s] = du
    return out


def assemble_dense_derivative(state: TtnState, da0: np.ndarray, dus: dict[int, np.ndarray]) -> np.ndarray:
    """Product-rule contraction of the per-core derivatives (test helper)."""
    from .ttn import dense_edo

    total = None
    work = state.copy()
    originals = [t.copy() for t in state.tensors]
    for node in range(state.topology.n_nodes()):
        for i, t0 in enumerate(originals):
            work.tensors[i] = t0
        work.tensors[node] = da0 if node == 0 else dus[node]
        piece = dense_edo(work)
        total = piece if total is None else total + piece
    return total
