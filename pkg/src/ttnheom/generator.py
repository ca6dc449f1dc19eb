"""Sum-of-product generator of the hierarchical dynamics.

The equation of motion for the extended density tensor is assembled as a sum
of terms, each a product of small matrices acting on the system-ket index,
the system-bra index and at most one ladder index.  Every feature contributes
five terms (number, two raising, two lowering) and each Hamiltonian summand
two (ket and bra side).  All scalars and the cm^-1 -> rad/fs conversion are
folded into the stored matrices, so integrating dT/dt = L T directly in fs is
correct; time dependence enters only through scalar envelopes multiplying the
Hamiltonian terms.

Matrix conventions: a superoperator X rho acts as the matrix X on the ket
index, while rho X acts as conj(X) on the bra index (for the Hermitian
operators used here, conj(X) = X^T).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .bath import FeatureSet
from .units import CM_PER_INVFS

HERMITICITY_TOL = 1e-12


def _check_hermitian(mat: np.ndarray, name: str):
    if np.max(np.abs(mat - mat.conj().T)) > HERMITICITY_TOL:
        raise ValueError(f"{name} must be Hermitian to {HERMITICITY_TOL}")


def make_envelope(spec: dict) -> Callable[[float], float]:
    """Build a scalar envelope from its config form.

    Supported kinds: ``constant`` (amplitude), ``sinusoid`` (amplitude,
    frequency in rad/fs, phase) and ``gaussian_pulse`` (amplitude, center fs,
    width fs).
    """
    kind = spec.get("kind", "constant")
    amp = float(spec.get("amplitude", 1.0))
    if kind == "constant":
        return lambda t: amp
    if kind == "sinusoid":
        freq = float(spec["frequency"])
        phase = float(spec.get("phase", 0.0))
        return lambda t: amp * math.sin(freq * t + phase)
    if kind == "gaussian_pulse":
        center = float(spec["center"])
        width = float(spec["width"])
        return lambda t: amp * math.exp(-0.5 * ((t - center) / width) ** 2)
    raise ValueError(f"unknown envelope kind {kind!r}")


@dataclass(frozen=True)
class Drive:
    envelope: dict
    matrix: np.ndarray


@dataclass
class SystemModel:
    """System Hamiltonian, drives and coupling operators (all cm^-1)."""

    dim: int
    h0: np.ndarray
    couplings: dict[str, np.ndarray]
    drives: list[Drive] = field(default_factory=list)

    def __post_init__(self):
        self.h0 = np.asarray(self.h0, dtype=complex)
        if self.h0.shape != (self.dim, self.dim):
            raise ValueError("h0 shape mismatch")
        _check_hermitian(self.h0, "h0")
        self.couplings = {k: np.asarray(v, dtype=complex) for k, v in self.couplings.items()}
        for cid, q in self.couplings.items():
            if q.shape != (self.dim, self.dim):
                raise ValueError(f"coupling {cid!r} shape mismatch")
            _check_hermitian(q, f"coupling {cid!r}")
        for d in self.drives:
            m = np.asarray(d.matrix, dtype=complex)
            if m.shape != (self.dim, self.dim):
                raise ValueError("drive matrix shape mismatch")
            _check_hermitian(m, "drive matrix")

    def hamiltonian_summands(self) -> list[tuple[Callable[[float], float], np.ndarray]]:
        out = [(make_envelope({"kind": "constant"}), self.h0)]
        for d in self.drives:
            out.append((make_envelope(d.envelope), np.asarray(d.matrix, dtype=complex)))
        return out


@dataclass(frozen=True)
class BexcitonSpace:
    """Truncation depths and metric scalars, one per feature."""

    depths: tuple[int, ...]
    metric_z: tuple[complex, ...]

    def __post_init__(self):
        if len(self.depths) != len(self.metric_z):
            raise ValueError("depths and metric length mismatch")
        if any(n < 2 for n in self.depths):
            raise ValueError("every depth must be at least 2")
        if any(z == 0 for z in self.metric_z):
            raise ValueError("metric scalars must be nonzero")


def default_metric(features: FeatureSet) -> list[complex]:
    """z_k = i sqrt(Re c_k), falling back to i sqrt(|c_k|) when Re c_k <= 0."""
    out = []
    for f in features.features:
        base = f.c.real if f.c.real > 0 else abs(f.c)
        out.append(1j * math.sqrt(base))
    return out


def make_space(features: FeatureSet, depths, metric=None) -> BexcitonSpace:
    k = len(features)
    if isinstance(depths, int):
        depths = (depths,) * k
    depths = tuple(int(n) for n in depths)
    if len(depths) != k:
        raise ValueError("need one depth per feature")
    z = tuple(metric) if metric is not None else tuple(default_metric(features))
    return BexcitonSpace(depths, z)


def ladder_ops(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Truncated raising/lowering matrices on an n-level ladder.

    raise[m+1, m] = sqrt(m+1), lower[m-1, m] = sqrt(m); the top rung has no
    raising target, which is where the truncated commutator deviates from
    the identity.
    """
    if n < 2:
        raise ValueError("ladder depth must be at least 2")
    sq = np.sqrt(np.arange(1.0, n))
    up = np.zeros((n, n), dtype=complex)
    dn = np.zeros((n, n), dtype=complex)
    up[np.arange(1, n), np.arange(n - 1)] = sq
    dn[np.arange(n - 1), np.arange(1, n)] = sq
    return up, dn


@dataclass(frozen=True)
class SopTerm:
    """One product term: optional system factors plus one ladder factor.

    ``None`` factors are implicit identities and are skipped by every
    contraction kernel.  ``k`` is the feature whose ladder index the term
    touches (None for Hamiltonian terms), ``envelope`` the scalar drive
    handle (None means the constant 1).
    """

    h_gt: np.ndarray | None
    h_lt: np.ndarray | None
    k: int | None
    h_mode: np.ndarray | None
    envelope: Callable[[float], float] | None = None
    kind: str = ""
    coupling_id: str = ""

    @property
    def time_dependent(self) -> bool:
        return self.envelope is not None

    def scalar(self, t: float) -> float:
        return 1.0 if self.envelope is None else self.envelope(t)


@dataclass
class SopGenerator:
    """The assembled sum-of-product generator, in rad/fs."""

    terms: list[SopTerm]
    dim: int
    depths: tuple[int, ...]
    coupling_ids: tuple[str, ...]  # per feature
    couplings: dict[str, np.ndarray]  # raw, dimensionless
    ham_summands: list[tuple[Callable[[float], float], np.ndarray]]  # rad/fs
    features: FeatureSet
    metric_z: tuple[complex, ...]
    # Per-feature ladder-side matrices with all scalars folded (rad/fs):
    mode_num: list[np.ndarray]
    mode_qket: list[np.ndarray]
    mode_qbra: list[np.ndarray]

    def __len__(self) -> int:
        return len(self.terms)


def build_generator(model: SystemModel, features: FeatureSet, space: BexcitonSpace) -> SopGenerator:
    """Assemble the 5K + 2*(Hamiltonian summands) product terms.

    Per feature k the five terms are the pure-ladder number term, the two
    raising terms entering with amplitudes c_k / z_k (ket) and -cbar_k / z_k
    (bra), and the two lowering terms with -z_k (ket) and +z_k (bra).  The
    Hamiltonian contributes -i H on the ket side and +i conj(H) on the bra
    side for each summand.
    """
    k_count = len(features)
    if len(space.depths) != k_count:
        raise ValueError("one depth per feature required")
    for f in features.features:
        if f.coupling_id not in model.couplings:
            raise KeyError(f"feature coupling {f.coupling_id!r} not in model couplings")

    terms: list[SopTerm] = []
    ham = []
    for env, mat in model.hamiltonian_summands():
        mk = -1j * mat / CM_PER_INVFS
        mb = 1j * mat.conj() / CM_PER_INVFS
        ham.append((env, mat / CM_PER_INVFS))
        terms.append(SopTerm(mk, None, None, None, envelope=env, kind="ham_ket"))
        terms.append(SopTerm(None, mb, None, None, envelope=env, kind="ham_bra"))

    mode_num, mode_qket, mode_qbra = [], [], []
    for k, f in enumerate(features.features):
        n = space.depths[k]
        z = space.metric_z[k]
        up, dn = ladder_ops(n)
        num = np.diag(np.arange(n, dtype=complex))
        q = model.couplings[f.coupling_id]
        qc = q.conj()
        m_num = (f.gamma_exp / CM_PER_INVFS) * num
        m_up_ket = (f.c / z / CM_PER_INVFS) * up
        m_up_bra = (-f.c_bar / z / CM_PER_INVFS) * up
        m_dn_ket = (-z / CM_PER_INVFS) * dn
        m_dn_bra = (z / CM_PER_INVFS) * dn
        terms.append(SopTerm(None, None, k, m_num, kind="num", coupling_id=f.coupling_id))
        terms.append(SopTerm(q, None, k, m_up_ket, kind="up_ket", coupling_id=f.coupling_id))
        terms.append(SopTerm(None, qc, k, m_up_bra, kind="up_bra", coupling_id=f.coupling_id))
        terms.append(SopTerm(q, None, k, m_dn_ket, kind="dn_ket", coupling_id=f.coupling_id))
        terms.append(SopTerm(None, qc, k, m_dn_bra, kind="dn_bra", coupling_id=f.coupling_id))
        mode_num.append(m_num)
        mode_qket.append(m_up_ket + m_dn_ket)
        mode_qbra.append(m_up_bra + m_dn_bra)

    return SopGenerator(
        terms=terms,
        dim=model.dim,
        depths=space.depths,
        coupling_ids=tuple(f.coupling_id for f in features.features),
        couplings={cid: np.asarray(q, dtype=complex) for cid, q in model.couplings.items()},
        ham_summands=ham,
        features=features,
        metric_z=space.metric_z,
        mode_num=mode_num,
        mode_qket=mode_qket,
        mode_qbra=mode_qbra,
    )
