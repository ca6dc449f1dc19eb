"""Command line entry point.

Subcommands: ``run`` executes a config and writes trajectory.csv plus
manifest.json, ``features`` prints the decomposed bath feature table,
``verify`` runs the built-in oracle suite, ``resume`` continues from a
checkpoint.  Exit codes: 0 success, 2 config/schema violation, 3
propagation abort (a parseable CSV prefix is retained).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from .config import ConfigError, RunSpec, load_runspec, manifest_dict
from .propagate import PropagationAbort, run
from .trajectory import CsvWriter
from .ttn import init_state, load_checkpoint, save_checkpoint

log = logging.getLogger("ttnheom")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="ttnheom", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a run spec")
    _add_run_args(p_run)

    p_feat = sub.add_parser("features", help="print the bath feature table")
    p_feat.add_argument("--config", required=True)
    p_feat.add_argument("--output", help="write JSON here instead of stdout")

    p_ver = sub.add_parser("verify", help="run the built-in oracle suite")
    p_ver.add_argument("--suite", choices=["small", "full"], default="small")

    p_res = sub.add_parser("resume", help="continue from a checkpoint")
    p_res.add_argument("--checkpoint", required=True)
    p_res.add_argument("--output", help="output directory (defaults to the checkpoint's)")

    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")

    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "features":
            return _cmd_features(args)
        if args.command == "verify":
            from .verify import run_suite

            return run_suite(args.suite)
        if args.command == "resume":
            return _cmd_resume(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    return 0


def _add_run_args(p):
    p.add_argument("--config", required=True)
    p.add_argument("--propagator", choices=["direct", "ps1", "ps2", "mixed"])
    p.add_argument("--rank", type=int)
    p.add_argument("--depth", type=int)
    p.add_argument("--dt", type=float, help="output sampling interval (fs)")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--svd-tol", dest="svd_tol", type=float)
    p.add_argument("--max-rank", dest="max_rank", type=int)
    p.add_argument("--t-end", dest="t_end", type=float)
    p.add_argument("--output")


def _overrides(args) -> dict:
    keys = ("propagator", "rank", "depth", "dt", "epsilon", "svd_tol", "max_rank", "t_end", "output")
    out = {k: getattr(args, k) for k in keys if getattr(args, k, None) is not None}
    for k, v in out.items():
        log.info("flag override: %s = %s", k, v)
    return out


def _cmd_features(args) -> int:
    spec = load_runspec(args.config)
    text = spec.features.to_json()
    if args.output:
        Path(args.output).write_text(text)
    else:
        print(text)
    return 0


def _cmd_run(args) -> int:
    spec = load_runspec(args.config, _overrides(args))
    state = init_state(spec.topology, spec.rho0, spec.ranks)
    return _execute(spec, state, fresh=True)


def _cmd_resume(args) -> int:
    state, extra = load_checkpoint(args.checkpoint)
    if "runspec" not in extra:
        print("checkpoint does not embed a run spec", file=sys.stderr)
        return 2
    from .config import runspec_from_dict

    spec = runspec_from_dict(extra["runspec"], {"output": args.output} if args.output else {})
    return _execute(spec, state, fresh=False)


def _execute(spec: RunSpec, state, fresh: bool) -> int:
    gen = spec.build_generator()
    outdir = spec.output_dir
    outdir.mkdir(parents=True, exist_ok=True)
    csv_path = outdir / "trajectory.csv"
    ckpt_path = outdir / "checkpoint.ttnh"
    manifest_path = outdir / "manifest.json"

    raw_config = _raw_config(spec)
    mode = "w" if fresh else "a"
    t_begin = time.perf_counter()
    last_ckpt = t_begin
    status = 0
    with open(csv_path, mode) as fh:
        writer = CsvWriter(fh, spec.model.dim) if fresh else _AppendWriter(fh)

        def on_sample(st, row):
            nonlocal last_ckpt
            if not fresh and row.t <= state_start + 1e-12:
                return  # resumed runs already logged this sample
            writer.write(row)
            now = time.perf_counter()
            if spec.checkpoint_interval_s and now - last_ckpt >= spec.checkpoint_interval_s:
                save_checkpoint(ckpt_path, st, {"runspec": raw_config})
                last_ckpt = now

        state_start = state.time
        try:
            run(
                state,
                gen,
                spec.strategy,
                spec.schedule,
                integrator=spec.integrator,
                ps=spec.ps,
                mixed=spec.mixed,
                on_sample=on_sample,
            )
        except PropagationAbort as exc:
            log.error("propagation aborted at t=%.4f fs: %s", exc.t, exc)
            status = 3

    save_checkpoint(ckpt_path, state, {"runspec": raw_config})
    digest = hashlib.sha256(csv_path.read_bytes()).hexdigest()
    manifest = manifest_dict(
        spec,
        {
            "status": "aborted" if status else "completed",
            "final_time_fs": state.time,
            "wall_s": time.perf_counter() - t_begin,
            "trajectory_sha256": digest,
            "checkpoint": ckpt_path.name,
        },
    )
    manifest_path.write_text(json.dumps(manifest, indent=2))
    return status


class _AppendWriter:
    def __init__(self, fh):
        self.fh = fh

    def write(self, row):
        from .trajectory import format_row

        self.fh.write(format_row(row) + "\n")
        self.fh.flush()


def _raw_config(spec: RunSpec) -> dict:
    """Config dict that reproduces this run when fed back through the loader."""
    cfg = json.loads(json.dumps(spec.resolved))
    sys_cfg = cfg["system"]
    doc = {
        "system": {
            "dim": sys_cfg["dim"],
            "h0": sys_cfg["h0"],
            "couplings": {c: {"matrix": m} for c, m in sys_cfg["couplings"].items()},
            "drives": sys_cfg["drives"],
            "initial": {"rho0": sys_cfg["rho0"]},
        },
        "bath": {
            "temperature": cfg["bath"]["temperature"],
            "n_pade": cfg["bath"]["n_pade"],
            "coupling_id": cfg["bath"]["coupling_id"],
            "features": cfg["bath"]["features"],
        },
        "space": cfg["space"],
        "topology": {"kind": "json", "json": cfg["topology"]["json"]},
        "propagator": {
            "strategy": cfg["propagator"]["strategy"],
            "direct": {
                k: v for k, v in cfg["propagator"]["direct"].items() if v not in (None, "inf")
            },
            "ps": {k: v for k, v in cfg["propagator"]["ps"].items() if v is not None},
            "mixed": cfg["propagator"]["mixed"],
        },
        "schedule": cfg["schedule"],
        "seed": cfg["seed"],
        "output_dir": str(spec.output_dir),
    }
    ranks = cfg["topology"]["ranks"]
    if isinstance(ranks, int):
        doc["topology"]["rank"] = ranks
    else:
        doc["topology"]["ranks"] = ranks
    return doc


if __name__ == "__main__":
    sys.exit(main())
