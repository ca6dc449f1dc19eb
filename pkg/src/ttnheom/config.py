"""Declarative run specification: TOML parsing, validation, manifest.

Matrices are nested arrays whose entries are numbers or [re, im] pairs; any
matrix-valued field also accepts a JSON string for machine-precision
payloads.  All energies are cm^-1 and all times fs.  ``load_runspec``
validates before any allocation and raises ConfigError with a field path.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from . import __version__
from .bath import BROWNIAN, DRUDE_LORENTZ, FeatureSet, SpectralComponent, decompose
from .generator import Drive, SystemModel, build_generator, make_space
from .propagate import IntegratorConfig, MixedConfig, PsConfig, Schedule
from .ttn import TreeTopology, make_topology
from .units import CM_PER_INVFS


class ConfigError(ValueError):
    pass


def _fail(path: str, msg: str):
    raise ConfigError(f"{path}: {msg}")


def parse_matrix(value, path: str) -> np.ndarray:
    if isinstance(value, str):
        try:
            value = json.loads(value)
        except json.JSONDecodeError as exc:
            _fail(path, f"invalid JSON matrix: {exc}")

    def entry(x):
        if isinstance(x, (int, float)):
            return complex(x)
        if isinstance(x, list) and len(x) == 2 and all(isinstance(v, (int, float)) for v in x):
            return complex(x[0], x[1])
        _fail(path, f"matrix entry {x!r} is not a number or [re, im] pair")

    if not isinstance(value, list) or not value or not isinstance(value[0], list):
        _fail(path, "expected a nested array")
    rows = [[entry(x) for x in row] for row in value]
    mat = np.array(rows, dtype=complex)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        _fail(path, f"expected a square matrix, got shape {mat.shape}")
    return mat


def parse_vector(value, path: str) -> np.ndarray:
    if isinstance(value, str):
        try:
            value = json.loads(value)
        except json.JSONDecodeError as exc:
            _fail(path, f"invalid JSON vector: {exc}")
    if not isinstance(value, list) or not value:
        _fail(path, "expected an array")
    out = []
    for x in value:
        if isinstance(x, (int, float)):
            out.append(complex(x))
        elif isinstance(x, list) and len(x) == 2:
            out.append(complex(x[0], x[1]))
        else:
            _fail(path, f"vector entry {x!r} is not a number or [re, im] pair")
    return np.array(out, dtype=complex)


@dataclass
class RunSpec:
    model: SystemModel
    rho0: np.ndarray
    features: FeatureSet
    depths: tuple[int, ...]
    topology: TreeTopology
    ranks: int | list
    strategy: str
    integrator: IntegratorConfig
    ps: PsConfig
    mixed: MixedConfig
    schedule: Schedule
    seed: int
    output_dir: Path
    checkpoint_interval_s: float
    resolved: dict = field(default_factory=dict)

    def build_generator(self):
        space = make_space(self.features, self.depths)
        return build_generator(self.model, self.features, space)


def load_runspec(path, overrides: dict | None = None) -> RunSpec:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    with open(path, "rb") as fh:
        doc = tomllib.load(fh)
    return runspec_from_dict(doc, overrides or {}, base=path.parent)


def runspec_from_dict(doc: dict, overrides: dict | None = None, base: Path = Path(".")) -> RunSpec:
    overrides = overrides or {}
    doc = json.loads(json.dumps(doc))  # deep copy, normalized types

    sysd = doc.get("system") or _fail("system", "section missing")
    dim = int(sysd.get("dim") or _fail("system.dim", "missing"))
    h0 = parse_matrix(sysd.get("h0", [[0.0] * dim] * dim), "system.h0")
    couplings = {}
    for cid, spec in (sysd.get("couplings") or {}).items():
        mat = spec.get("matrix") if isinstance(spec, dict) else spec
        couplings[cid] = parse_matrix(mat, f"system.couplings.{cid}")
    drives = []
    for i, d in enumerate(sysd.get("drives", [])):
        drives.append(
            Drive(envelope=d.get("envelope", {"kind": "constant"}),
                  matrix=parse_matrix(d["matrix"], f"system.drives[{i}].matrix"))
        )
    init = sysd.get("initial") or _fail("system.initial", "section missing")
    if "rho0" in init:
        rho0 = parse_matrix(init["rho0"], "system.initial.rho0")
    elif "psi0" in init:
        vec = parse_vector(init["psi0"], "system.initial.psi0")
        vec = vec / np.linalg.norm(vec)
        rho0 = np.outer(vec, vec.conj())
    else:
        _fail("system.initial", "needs rho0 or psi0")

    bathd = doc.get("bath") or _fail("bath", "section missing")
    cid = bathd.get("coupling_id", "Q")
    if "features" in bathd:
        features = FeatureSet.from_json(
            json.dumps(
                {
                    "temperature": bathd.get("temperature", 0.0),
                    "n_pade": bathd.get("n_pade", 0),
                    "features": bathd["features"],
                }
            )
        )
    elif "feature_table" in bathd:
        table_path = base / bathd["feature_table"]
        if not table_path.exists():
            _fail("bath.feature_table", f"{table_path} does not exist")
        features = FeatureSet.from_json(table_path.read_text())
    else:
        comps = []
        for i, c in enumerate(bathd.get("components", [])):
            kind = c.get("kind")
            if kind == DRUDE_LORENTZ:
                comps.append(SpectralComponent(kind, float(c["lambda"]), float(c["gamma"])))
            elif kind == BROWNIAN:
                comps.append(
                    SpectralComponent(kind, float(c["lambda"]), float(c["gamma"]),
                                      omega_eff=float(c["omega_eff"]))
                )
            else:
                _fail(f"bath.components[{i}].kind", f"unknown kind {kind!r}")
        temperature = float(bathd.get("temperature") or _fail("bath.temperature", "missing"))
        features = decompose(comps, temperature, int(bathd.get("n_pade", 0)), coupling_id=cid)
    for f in features.features:
        if f.coupling_id not in couplings:
            _fail("bath", f"feature coupling {f.coupling_id!r} not among system couplings")

    spaced = doc.get("space", {})
    k = len(features)
    depth_override = overrides.get("depth")
    if depth_override is not None:
        depths = (int(depth_override),) * k
    elif "depths" in spaced:
        depths = tuple(int(n) for n in spaced["depths"])
        if len(depths) != k:
            _fail("space.depths", f"need {k} entries, got {len(depths)}")
    else:
        depths = (int(spaced.get("depth", 2)),) * k

    topod = doc.get("topology", {})
    kind = topod.get("kind", "balanced")
    if kind == "json":
        topology = TreeTopology.from_json(json.dumps(topod["json"]))
    else:
        topology = make_topology(kind, depths, dim, adjacency=topod.get("nodes"))
    if overrides.get("rank") is not None:
        ranks = int(overrides["rank"])
    elif "ranks" in topod:
        ranks = {i + 1: int(r) for i, r in enumerate(topod["ranks"])}
        if len(ranks) != topology.n_bonds:
            _fail("topology.ranks", f"need {topology.n_bonds} entries")
    else:
        ranks = int(topod.get("rank", 1))

    propd = doc.get("propagator", {})
    strategy = overrides.get("propagator") or propd.get("strategy", "mixed")
    if strategy not in ("direct", "ps1", "ps2", "mixed"):
        _fail("propagator.strategy", f"unknown strategy {strategy!r}")
    dd = propd.get("direct", {})
    eps = overrides["epsilon"] if overrides.get("epsilon") is not None else dd.get("epsilon", 1e-4)
    integ = IntegratorConfig(
        rtol=float(dd.get("rtol", 1e-5)),
        atol=float(dd.get("atol", 1e-7)),
        epsilon=float(eps),
        h0=dd.get("h0"),
        max_step=float(dd.get("max_step", np.inf)),
        reorth_every=int(dd.get("reorth_every", 1)),
    )
    pd = propd.get("ps", {})
    stol = overrides["svd_tol"] if overrides.get("svd_tol") is not None else pd.get("svd_tol", 1e-7)
    psc = PsConfig(
        delta=float(pd.get("delta", 0.1)),
        svd_tol=float(stol),
        max_rank=int(overrides["max_rank"]) if overrides.get("max_rank") is not None
        else (int(pd["max_rank"]) if "max_rank" in pd else None),
        rank_headroom=int(pd.get("rank_headroom", 2)),
        rtol=float(pd.get("rtol", 1e-5)),
        atol=float(pd.get("atol", 1e-7)),
    )
    md = propd.get("mixed", {})
    mixed = MixedConfig(ps2=psc, direct=integ, switch_rank=int(md.get("switch_rank", 60)))

    sched = doc.get("schedule") or _fail("schedule", "section missing")
    t_end = overrides.get("t_end") if overrides.get("t_end") is not None else sched.get("t_end")
    if t_end is None:
        _fail("schedule.t_end", "missing")
    output_dt = overrides.get("dt") if overrides.get("dt") is not None else sched.get("output_dt")
    if output_dt is None:
        _fail("schedule.output_dt", "missing")
    t_end, output_dt = float(t_end), float(output_dt)
    if t_end < 0 or output_dt <= 0:
        _fail("schedule", "t_end must be >= 0 and output_dt > 0")

    outdir = Path(overrides.get("output") or doc.get("output_dir", "out"))

    resolved = {
        "system": {
            "dim": dim,
            "h0": _mat_json(h0),
            "couplings": {c: _mat_json(q) for c, q in couplings.items()},
            "drives": [
                {"envelope": d.envelope, "matrix": _mat_json(np.asarray(d.matrix, dtype=complex))}
                for d in drives
            ],
            "rho0": _mat_json(rho0),
        },
        "bath": {
            "temperature": features.temperature,
            "n_pade": features.n_pade,
            "coupling_id": cid,
            "features": json.loads(features.to_json())["features"],
        },
        "space": {"depths": list(depths)},
        "topology": {"kind": kind, "json": json.loads(topology.to_json()), "ranks": ranks if isinstance(ranks, int) else list(ranks.values())},
        "propagator": {
            "strategy": strategy,
            "direct": {k2: (None if v is None else (v if np.isfinite(v) else "inf")) if isinstance(v, float) else v for k2, v in integ.__dict__.items()},
            "ps": psc.__dict__,
            "mixed": {"switch_rank": mixed.switch_rank},
        },
        "schedule": {"t_end": t_end, "output_dt": output_dt},
        "seed": int(doc.get("seed", 0)),
        "units": {"cm_per_invfs": CM_PER_INVFS},
    }

    model = SystemModel(dim, h0, couplings, drives)
    return RunSpec(
        model=model,
        rho0=rho0,
        features=features,
        depths=depths,
        topology=topology,
        ranks=ranks,
        strategy=strategy,
        integrator=integ,
        ps=psc,
        mixed=mixed,
        schedule=Schedule(t_end, output_dt),
        seed=int(doc.get("seed", 0)),
        output_dir=outdir,
        checkpoint_interval_s=float(doc.get("checkpoint_interval_s", 0.0)),
        resolved=resolved,
    )


def _mat_json(mat: np.ndarray):
    return [[[float(x.real), float(x.imag)] for x in row] for row in mat]


def manifest_dict(spec: RunSpec, extra: dict | None = None) -> dict:
    import scipy

    doc = {
        "ttnheom_version": __version__,
        "numpy_version": np.__version__,
        "scipy_version": scipy.__version__,
        "config": spec.resolved,
        "topology_hash": spec.topology.digest(),
    }
    if extra:
        doc.update(extra)
    return doc
