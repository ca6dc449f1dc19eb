"""Tree tensor network state over the extended density tensor.

The network has one unconstrained root tensor holding the two system indexes
plus the first bond, and order-3 semi-unitary tensors for everything else.
Node ids are sorted by height (distance from the root in bonds) with ties
broken by the parent's leg order; bond ``s`` connects node ``s`` to its
parent and always sits in the first index slot of node ``s``.  Degenerate
trees (one or zero features) carry size-1 dummy legs so every core stays
order 3.
"""

from __future__ import annotations

import hashlib
import io
import json
import struct
from dataclasses import dataclass

import numpy as np

from .kernels import matricize, mode_apply, unmatricize

DENSE_GUARD = 10**7

KET, BRA, MODE, BOND, DUMMY = "ket", "bra", "mode", "bond", "dummy"


@dataclass(frozen=True)
class Leg:
    """One tensor index: its role, reference (feature or bond id) and size.

    Bond legs carry size 0 here; actual bond dimensions live in the state
    tensors and may change during adaptive propagation.
    """

    kind: str
    ref: int = 0
    size: int = 0


class TreeTopology:
    """Immutable tree over the core tensors.

    ``nodes[s]`` is the 3-tuple of legs of core tensor ``s``; node 0 is the
    root with legs (ket, bra, bond 1).
    """

    def __init__(self, nodes: list[tuple[Leg, ...]], dim: int, depths: tuple[int, ...]):
        self.nodes = tuple(tuple(legs) for legs in nodes)
        self.dim = dim
        self.depths = tuple(depths)
        self.n_features = len(depths)
        self._derive()

    # -- construction helpers -------------------------------------------------

    def _derive(self):
        n = len(self.nodes)
        bond_ends: dict[int, list[int]] = {}
        mode_owner: dict[int, tuple[int, int]] = {}
        for s, legs in enumerate(self.nodes):
            if len(legs) != 3:
                raise ValueError("every core tensor must have exactly 3 legs")
            for ax, leg in enumerate(legs):
                if leg.kind == BOND:
                    bond_ends.setdefault(leg.ref, []).append(s)
                elif leg.kind == MODE:
                    if leg.ref in mode_owner:
                        raise ValueError(f"feature {leg.ref} appears on two nodes")
                    mode_owner[leg.ref] = (s, ax)
        if set(mode_owner) != set(range(self.n_features)):
            raise ValueError("every feature index must appear exactly once")
        if self.nodes[0][0].kind != KET or self.nodes[0][1].kind != BRA:
            raise ValueError("root must hold (ket, bra, bond)")
        for b, ends in bond_ends.items():
            if len(ends) != 2:
                raise ValueError(f"bond {b} must connect exactly two nodes")
            if b not in ends:
                raise ValueError("bond ids must equal their child node id")
        self.mode_owner = mode_owner
        self.n_bonds = len(bond_ends)
        if self.n_bonds != n - 1:
            raise ValueError("bond count must be node count - 1 (tree)")

        self.parent = [-1] * n
        self.parent_axis = [-1] * n  # axis of the parent pointing to the child
        self.children: list[list[int]] = [[] for _ in range(n)]
        self.heights = [0] * n
        for b, ends in sorted(bond_ends.items()):
            p = ends[0] if ends[1] == b else ends[1]
            c = b
            self.parent[c] = p
            self.children[p].append(c)
            self.parent_axis[c] = next(
                ax for ax, leg in enumerate(self.nodes[p]) if leg.kind == BOND and leg.ref == b
            )
            if self.nodes[c][0].kind != BOND or self.nodes[c][0].ref != b:
                raise ValueError(f"bond {b} must be the first leg of node {b}")
        for p in range(n):
            self.children[p].sort(key=lambda c: self.parent_axis[c])
        # heights by BFS; ids must already be height-sorted
        order = [0]
        for s in order:
            for c in self.children[s]:
                self.heights[c] = self.heights[s] + 1
                order.append(c)
        if len(order) != n:
            raise ValueError("topology graph is not connected")
        if any(self.heights[i] > self.heights[j] for i, j in zip(range(n - 1), range(1, n))):
            raise ValueError("node ids must be sorted by height")

        # directed-edge tables: what lies beyond edge (u -> v)
        self.features_beyond: dict[tuple[int, int], frozenset[int]] = {}
        self.sys_beyond: dict[tuple[int, int], bool] = {}

        def collect(v: int, block: int) -> set[int]:
            found = {leg.ref for leg in self.nodes[v] if leg.kind == MODE}
            for w in self._adjacent(v):
                if w != block:
                    found |= collect(w, v)
            return found

        all_feats = set(range(self.n_features))
        for c in range(1, n):
            p = self.parent[c]
            below = frozenset(collect(c, p))
            self.features_beyond[(p, c)] = below
            self.features_beyond[(c, p)] = frozenset(all_feats - below)
            self.sys_beyond[(p, c)] = False
            self.sys_beyond[(c, p)] = True

    def _adjacent(self, s: int) -> list[int]:
        out = [self.parent[s]] if s else []
        return out + self.children[s]

    def bond_axis(self, s: int, neighbor: int) -> int:
        """Axis of node s along the bond to an adjacent node."""
        if neighbor == self.parent[s]:
            return 0
        return self.parent_axis[neighbor]

    def n_nodes(self) -> int:
        return len(self.nodes)

    def leg_size(self, leg: Leg, ranks) -> int:
        if leg.kind == BOND:
            return ranks[leg.ref]
        return leg.size

    def dfs_path(self) -> list[int]:
        """Round trip from the root crossing every bond exactly twice."""

        def walk(s: int) -> list[int]:
            seq = [s]
            for c in self.children[s]:
                seq += walk(c) + [s]
            return seq

        return walk(0)

    def to_json(self) -> str:
        doc = {
            "dim": self.dim,
            "depths": list(self.depths),
            "nodes": [[[leg.kind, leg.ref, leg.size] for leg in legs] for legs in self.nodes],
        }
        return json.dumps(doc, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "TreeTopology":
        doc = json.loads(text)
        nodes = [tuple(Leg(k, r, s) for k, r, s in legs) for legs in doc["nodes"]]
        return cls(nodes, int(doc["dim"]), tuple(doc["depths"]))

    def digest(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()


def make_topology(kind: str, depths, dim: int, adjacency=None) -> TreeTopology:
    """Build a train, a balanced tree, or an explicit topology.

    ``depths`` is the list of ladder truncations, one per feature, in the
    feature order of the bath decomposition.  ``adjacency`` (explicit kind)
    is a list of leg-name lists like ``["bond:a", "mode:3", "bond:b"]`` with
    one node containing ``"ket"`` and ``"bra"``; nodes and bonds are
    renumbered canonically.
    """
    depths = tuple(int(n) for n in depths)
    k = len(depths)
    m = int(dim)
    if kind == "train":
        return _train(depths, m)
    if kind in ("balanced", "balanced_tree"):
        return _balanced(depths, m)
    if kind == "explicit":
        if adjacency is None:
            raise ValueError("explicit topology needs an adjacency list")
        return _explicit(adjacency, depths, m)
    raise ValueError(f"unknown topology kind {kind!r}")


def _root_legs() -> tuple[Leg, Leg, Leg]:
    return (Leg(KET), Leg(BRA), Leg(BOND, 1))


def _mode(depths, key: int) -> Leg:
    return Leg(MODE, key, depths[key])


def _train(depths, m) -> TreeTopology:
    k = len(depths)
    if k == 0:
        return TreeTopology([(Leg(KET, 0, m), Leg(BRA, 0, m), Leg(DUMMY, 0, 1))], m, depths)
    nodes = [(Leg(KET, 0, m), Leg(BRA, 0, m), Leg(BOND, 1))]
    if k == 1:
        nodes.append((Leg(BOND, 1), _mode(depths, 0), Leg(DUMMY, 0, 1)))
    else:
        for s in range(1, k - 1):
            nodes.append((Leg(BOND, s), _mode(depths, s - 1), Leg(BOND, s + 1)))
        nodes.append((Leg(BOND, k - 1), _mode(depths, k - 2), _mode(depths, k - 1)))
    return TreeTopology(nodes, m, depths)


def _balanced(depths, m) -> TreeTopology:
    k = len(depths)
    if k == 0:
        return _train(depths, m)
    if k <= 2:
        return _train(depths, m)
    groups = [tuple(range(i, min(i + 2, k))) for i in range(0, k, 2)]

    def build(gs):
        if len(gs) == 1:
            return ("leaf", gs[0])
        mid = (len(gs) + 1) // 2
        return ("int", build(gs[:mid]), build(gs[mid:]))

    tree = build(groups)
    # breadth-first numbering: height order, ties by parent leg position
    nodes: list[tuple[Leg, ...]] = [_root_legs()]
    assign: dict[int, tuple] = {1: tree}
    child_ids: dict[int, list[int]] = {}
    next_id = 2
    bfs = [(1, tree)]
    for nid, st in bfs:
        if st[0] == "int":
            child_ids[nid] = [next_id, next_id + 1]
            for off, sub in enumerate((st[1], st[2])):
                assign[next_id + off] = sub
                bfs.append((next_id + off, sub))
            next_id += 2
    for nid in sorted(assign):
        st = assign[nid]
        if st[0] == "leaf":
            grp = st[1]
            if len(grp) == 2:
                nodes.append((Leg(BOND, nid), _mode(depths, grp[0]), _mode(depths, grp[1])))
            else:
                nodes.append((Leg(BOND, nid), _mode(depths, grp[0]), Leg(DUMMY, 0, 1)))
        else:
            left, right = child_ids[nid]
            nodes.append((Leg(BOND, nid), Leg(BOND, left), Leg(BOND, right)))
    return TreeTopology(nodes, m, depths)


def _explicit(adjacency, depths, m) -> TreeTopology:
    parsed = []
    for legs in adjacency:
        row = []
        for name in legs:
            if name == "ket":
                row.append((KET, 0))
            elif name == "bra":
                row.append((BRA, 0))
            elif name == "dummy":
                row.append((DUMMY, 0))
            elif name.startswith("mode:"):
                row.append((MODE, int(name.split(":", 1)[1])))
            elif name.startswith("bond:"):
                row.append((BOND, name.split(":", 1)[1]))
            else:
                raise ValueError(f"unknown leg spec {name!r}")
        parsed.append(row)
    roots = [i for i, row in enumerate(parsed) if any(k == KET for k, _ in row)]
    if len(roots) != 1:
        raise ValueError("exactly one node must hold the system legs")
    # adjacency by bond label
    label_ends: dict[str, list[int]] = {}
    for i, row in enumerate(parsed):
        for kind, ref in row:
            if kind == BOND:
                label_ends.setdefault(ref, []).append(i)
    for label, ends in label_ends.items():
        if len(ends) != 2:
            raise ValueError(f"bond {label!r} must appear on exactly two nodes")
    # BFS renumber
    old_root = roots[0]
    new_of = {old_root: 0}
    order = [old_root]
    parent_of = {old_root: None}
    for u in order:
        row = parsed[u]
        for kind, ref in row:
            if kind != BOND:
                continue
            other = _other_end(label_ends, ref, u)
            if other not in new_of:
                new_of[other] = len(new_of)
                parent_of[other] = u
                order.append(other)
    if len(new_of) != len(parsed):
        raise ValueError("topology graph is cyclic or disconnected")
    nodes: list[tuple[Leg, ...]] = []
    for old in order:
        row = parsed[old]
        new = new_of[old]
        legs: list[Leg] = []
        if new == 0:
            legs = [Leg(KET, 0, m), Leg(BRA, 0, m)]
            rest = [x for x in row if x[0] not in (KET, BRA)]
        else:
            parent_label = next(
                ref for kind, ref in row if kind == BOND and new_of[_other_end(label_ends, ref, old)] == new_of[parent_of[old]] and _other_end(label_ends, ref, old) == parent_of[old]
            )
            legs = [Leg(BOND, new)]
            rest = [x for x in row if not (x[0] == BOND and x[1] == parent_label)]
        for kind, ref in rest:
            if kind == MODE:
                legs.append(_mode(depths, ref))
            elif kind == DUMMY:
                legs.append(Leg(DUMMY, 0, 1))
            elif kind == BOND:
                child = _other_end(label_ends, ref, old)
                legs.append(Leg(BOND, new_of[child]))
            else:
                raise ValueError("system legs only allowed on the root")
        nodes.append(tuple(legs))
    pairs = sorted(zip([new_of[o] for o in order], nodes))
    return TreeTopology([n for _, n in pairs], m, depths)


def _other_end(label_ends, ref, here):
    a, b = label_ends[ref]
    return b if a == here else a


# -- state ---------------------------------------------------------------


class TtnState:
    """Root tensor plus semi-unitary cores; the sole mutable dynamical object."""

    def __init__(self, topology: TreeTopology, tensors: list[np.ndarray], time: float = 0.0):
        self.topology = topology
        self.tensors = [np.asarray(t, dtype=complex) for t in tensors]
        self.time = time

    def copy(self) -> "TtnState":
        return TtnState(self.topology, [t.copy() for t in self.tensors], self.time)

    def ranks(self) -> dict[int, int]:
        return {s: self.tensors[s].shape[0] for s in range(1, self.topology.n_nodes())}

    def max_rank(self) -> int:
        r = self.ranks()
        return max(r.values()) if r else 1

    def size(self) -> int:
        return int(sum(t.size for t in self.tensors))


def page_pairs(d2: int, d3: int):
    """Anti-diagonal enumeration (0,0),(1,0),(0,1),(2,0),(1,1),(0,2),..."""
    for diag in range(d2 + d3 - 1):
        for beta in range(min(diag, d2 - 1), -1, -1):
            gamma = diag - beta
            if gamma < d3:
                yield beta, gamma


def init_state(topology: TreeTopology, rho0: np.ndarray, ranks) -> TtnState:
    """Separable initial state: rho0 on the root, unit pages elsewhere.

    Each semi-unitary tensor page ``a`` holds a single 1 at the ``a``-th
    anti-diagonal position, which makes the cores exactly semi-unitary and
    balances the two lower legs.
    """
    rho0 = np.asarray(rho0, dtype=complex)
    m = topology.dim
    if rho0.shape != (m, m):
        raise ValueError("initial density matrix has the wrong shape")
    if np.max(np.abs(rho0 - rho0.conj().T)) > 1e-10 or abs(np.trace(rho0) - 1) > 1e-10:
        raise ValueError("rho0 is not a density matrix (hermiticity/trace)")
    if np.min(np.linalg.eigvalsh(0.5 * (rho0 + rho0.conj().T))) < -1e-10:
        raise ValueError("rho0 is not a density matrix (negative eigenvalue)")

    if isinstance(ranks, int):
        ranks = uniform_ranks(topology, ranks)
    ranks = dict(ranks)
    n = topology.n_nodes()
    tensors: list[np.ndarray] = [None] * n
    for s in range(n - 1, 0, -1):
        legs = topology.nodes[s]
        d2 = topology.leg_size(legs[1], ranks)
        d3 = topology.leg_size(legs[2], ranks)
        r = ranks[s]
        if r < 1 or r > d2 * d3:
            raise ValueError(f"rank {r} of bond {s} exceeds capacity {d2 * d3}")
        u = np.zeros((r, d2, d3), dtype=complex)
        for a, (b, g) in zip(range(r), page_pairs(d2, d3)):
            u[a, b, g] = 1.0
        tensors[s] = u
    if topology.n_bonds:
        root = np.zeros((m, m, ranks[1]), dtype=complex)
        root[:, :, 0] = rho0
    else:
        root = rho0.reshape(m, m, 1)
    tensors[0] = root
    return TtnState(topology, tensors)


def uniform_ranks(topology: TreeTopology, r: int) -> dict[int, int]:
    """Clamp a uniform requested rank to each bond's useful capacity.

    The binding bound is the smaller of the open-index products on the two
    sides of the bond; ranks beyond it add directions the dynamics can never
    populate (and that the regularized integrator would have to floor).
    """
    side: dict[int, int] = {}
    for s in range(topology.n_nodes() - 1, 0, -1):
        below = 1
        for leg in topology.nodes[s][1:]:
            below *= side[leg.ref] if leg.kind == BOND else max(leg.size, 1)
        side[s] = below
    total_open = topology.dim**2
    for d in topology.depths:
        total_open *= d
    ranks: dict[int, int] = {}
    for s in range(1, topology.n_nodes()):
        cap = min(side[s], total_open // max(side[s], 1))
        ranks[s] = max(1, min(r, cap))
    return ranks


def extract_rho(state: TtnState) -> np.ndarray:
    """Reduced density matrix without rebuilding the full tensor."""
    topo = state.topology
    n = topo.n_nodes()
    tvec: dict[int, np.ndarray] = {}
    for s in range(n - 1, 0, -1):
        u = state.tensors[s]
        legs = topo.nodes[s]
        v2 = _closing_vector(legs[1], tvec, u.shape[1])
        v3 = _closing_vector(legs[2], tvec, u.shape[2])
        tvec[s] = np.einsum("abc,b,c->a", u, v2, v3)
    root = state.tensors[0]
    if topo.n_bonds:
        return np.einsum("ija,a->ij", root, tvec[1])
    return root[:, :, 0].copy()


def _closing_vector(leg: Leg, tvec, size: int) -> np.ndarray:
    if leg.kind == MODE:
        v = np.zeros(size, dtype=complex)
        v[0] = 1.0
        return v
    if leg.kind == DUMMY:
        return np.ones(1, dtype=complex)
    return tvec[leg.ref]


def check_semiunitary(state: TtnState) -> dict[int, float]:
    """Max deviation of each core from row-orthonormality over its lower legs."""
    out = {}
    for s in range(1, state.topology.n_nodes()):
        u = state.tensors[s]
        mat = u.reshape(u.shape[0], -1)
        out[s] = float(np.max(np.abs(mat @ mat.conj().T - np.eye(u.shape[0]))))
    return out


def size_of(state: TtnState) -> int:
    return state.size()


def dense_edo(state: TtnState, guard: int = DENSE_GUARD) -> np.ndarray:
    """Contract the whole network into Omega[i, j, n_1, ..., n_K] (test-scale)."""
    topo = state.topology
    total = topo.dim**2 * int(np.prod([float(d) for d in topo.depths])) if topo.depths else topo.dim**2
    if total > guard:
        raise ValueError(f"dense tensor of {total} elements exceeds guard {guard}")

    def branch(s: int):
        arr = state.tensors[s]
        descs = [("parent", 0)] + [(topo.nodes[s][ax], ax) for ax in (1, 2)]
        opens = [topo.nodes[s][1], topo.nodes[s][2]]
        # contract children one at a time; tensordot appends the child's
        # remaining axes at the end
        done = False
        axes_desc = list(opens)
        while True:
            pos = next(
                (i for i, leg in enumerate(axes_desc) if leg.kind == BOND),
                None,
            )
            if pos is None:
                break
            leg = axes_desc[pos]
            sub, sub_desc = branch(leg.ref)
            arr = np.tensordot(arr, sub, axes=([pos + 1], [0]))
            axes_desc = axes_desc[:pos] + axes_desc[pos + 1 :] + sub_desc
        return arr, axes_desc

    root = state.tensors[0]
    if not topo.n_bonds:
        return root[:, :, 0].copy()
    sub, desc = branch(1)
    omega = np.tensordot(root, sub, axes=([2], [0]))  # axes (i, j, *desc)
    # order mode axes by feature id, squeeze dummies
    keep = [i for i, leg in enumerate(desc) if leg.kind == MODE]
    dummies = [i for i, leg in enumerate(desc) if leg.kind == DUMMY]
    order = sorted(keep, key=lambda i: desc[i].ref)
    omega = np.transpose(omega, [0, 1] + [2 + i for i in order] + [2 + i for i in dummies])
    if dummies:
        omega = omega.reshape(omega.shape[: 2 + len(order)])
    return omega


def svd_fixed(mat: np.ndarray):
    """Thin SVD with the phase of each left vector's largest entry fixed.

    Makes the decomposition deterministic across runs so that identical
    manifests reproduce identical trajectories.
    """
    w, s, vh = np.linalg.svd(mat, full_matrices=False)
    idx = np.argmax(np.abs(w), axis=0)
    piv = w[idx, np.arange(w.shape[1])]
    phase = np.where(np.abs(piv) > 0, piv / np.maximum(np.abs(piv), 1e-300), 1.0)
    w = w * phase.conj()[None, :]
    vh = vh * phase[:, None]
    return w, s, vh


def decompose_dense(omega: np.ndarray, topology: TreeTopology, ranks=None) -> TtnState:
    """Hierarchical SVD of a dense tensor onto a given topology (test-scale).

    Splits root first, then recursively isolates each child branch; with
    ``ranks=None`` keeps full (thin) ranks so the round trip through
    ``dense_edo`` is exact to roundoff.
    """
    topo = topology
    k = topo.n_features
    if not topo.n_bonds:
        return TtnState(topo, [omega.reshape(topo.dim, topo.dim, 1)])
    mode_axes = {kf: 2 + kf for kf in range(k)}

    tensors: list[np.ndarray] = [None] * topo.n_nodes()

    m = topo.dim
    mat = omega.reshape(m * m, -1)
    w, s, vh = svd_fixed(mat)
    r1 = min(len(s), ranks[1]) if ranks else len(s)
    tensors[0] = (w[:, :r1] * s[:r1]).reshape(m, m, r1)
    branch = vh[:r1].reshape((r1,) + omega.shape[2:])  # axes (a1, n_0, ..., n_{K-1})

    def split(node: int, arr: np.ndarray, feats: list[int]):
        # arr axes: (bond, modes in `feats` order)
        legs = topo.nodes[node]
        parts = []
        for ax in (1, 2):
            leg = legs[ax]
            if leg.kind == BOND:
                child = leg.ref
                sub_feats = sorted(topo.features_beyond[(node, child)])
                positions = [1 + feats.index(f) for f in sub_feats]
                rest = [0] + [1 + i for i, f in enumerate(feats) if f not in sub_feats]
                mat = np.transpose(arr, positions + rest).reshape(
                    int(np.prod([arr.shape[p] for p in positions])), -1
                )
                w, s, vh = svd_fixed(mat)
                r = min(len(s), ranks[child]) if ranks else len(s)
                iso = w[:, :r]  # (modes of child, b)
                sub = np.ascontiguousarray(iso.T).reshape((r,) + tuple(arr.shape[p] for p in positions))
                # remove the child's modes from arr by projecting onto the isometry
                arrm = np.transpose(arr, rest + positions).reshape(-1, iso.shape[0])
                arr_new = (arrm @ iso.conj()).reshape(
                    tuple(arr.shape[p] for p in rest) + (r,)
                )
                # axes now: (bond, other modes..., child_bond at end)
                new_feats = [f for f in feats if f not in sub_feats]
                parts.append((ax, "bond", child, sub, sub_feats))
                arr = arr_new
                feats = new_feats + [("bond", child)]
            elif leg.kind == MODE:
                parts.append((ax, "mode", leg.ref, None, None))
            else:
                parts.append((ax, "dummy", None, None, None))
        # arrange arr axes to (bond, leg1, leg2)
        axis_of = {}
        for i, f in enumerate(feats):
            axis_of[f] = 1 + i
        perm = [0]
        final_shape = []
        for ax, kind2, ref, _, _ in parts:
            if kind2 == "mode":
                perm.append(axis_of[ref])
            elif kind2 == "bond":
                perm.append(axis_of[("bond", ref)])
            else:
                perm.append(None)
        cur = arr
        if perm[2] is None:  # dummy on the third leg
            cur = np.transpose(arr, [0, perm[1]])[..., None]
        else:
            cur = np.transpose(arr, [p for p in perm if p is not None])
        tensors[node] = cur
        for ax, kind2, ref, sub, sub_feats in parts:
            if kind2 == "bond":
                split(ref, sub, list(sub_feats))

    split(1, branch, list(range(k)))
    state = TtnState(topo, tensors)
    if ranks:
        # truncation breaks row orthonormality of the ancestors; repair it
        # without changing the represented tensor
        reorthonormalize(state)
    return state


def reorthonormalize(state: TtnState):
    """Restore exact semi-unitarity, pushing the residuals into the root."""
    topo = state.topology
    for s in range(topo.n_nodes() - 1, 0, -1):
        u = state.tensors[s]
        mat = u.reshape(u.shape[0], -1)
        q, r = np.linalg.qr(mat.conj().T, mode="reduced")  # mat^H = q r
        state.tensors[s] = np.ascontiguousarray(q.conj().T).reshape(u.shape)
        l = r.conj().T  # mat = l @ q^H; push l into the parent bond slot
        p = topo.parent[s]
        ax = topo.parent_axis[s]
        state.tensors[p] = mode_apply(l.T, state.tensors[p], ax)


# -- checkpoint ----------------------------------------------------------

_MAGIC = b"TTNH"
_VERSION = 1


def save_checkpoint(path, state: TtnState, extra: dict | None = None):
    header = {
        "version": _VERSION,
        "topology": json.loads(state.topology.to_json()),
        "topology_hash": state.topology.digest(),
        "time": state.time,
        "shapes": [list(t.shape) for t in state.tensors],
        "extra": extra or {},
    }
    blob = json.dumps(header).encode()
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<II", _VERSION, len(blob)))
        fh.write(blob)
        for t in state.tensors:
            fh.write(np.ascontiguousarray(t, dtype="<c16").tobytes())


def load_checkpoint(path) -> tuple[TtnState, dict]:
    with open(path, "rb") as fh:
        if fh.read(4) != _MAGIC:
            raise ValueError("not a checkpoint file")
        version, hlen = struct.unpack("<II", fh.read(8))
        if version != _VERSION:
            raise ValueError(f"unsupported checkpoint version {version}")
        header = json.loads(fh.read(hlen).decode())
        topo = TreeTopology.from_json(json.dumps(header["topology"]))
        tensors = []
        for shape in header["shapes"]:
            count = int(np.prod(shape))
            buf = fh.read(count * 16)
            tensors.append(np.frombuffer(buf, dtype="<c16").reshape(shape).astype(complex))
    state = TtnState(topo, tensors, time=float(header["time"]))
    return state, header.get("extra", {})
