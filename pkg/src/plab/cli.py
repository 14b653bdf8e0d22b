"""plab command line: seeded experiment configs in, deterministic reports out.

Subcommands: emx | coarse | compress | quantum | feasible.  Each accepts
--config FILE (a JSON experiment config) with flags overriding config keys.
Reports are JSON {config, metrics, sweep?, wall_clock_s, version} written
atomically; floats are pinned to 12 significant digits so identical
(config, seed) runs produce byte-identical reports apart from wall_clock_s.
The default seed is 20177.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import __version__, coarse, compression, feasibility, quantum
from .emx import (
    FinSupportDist,
    IndexedDomain,
    quantile_learn,
    sample_complexity,
    verify_guarantee,
)
from .tasks import TaskSpec

DEFAULT_SEED = 20177
KINDS = ("emx", "coarse", "compress", "quantum", "feasible-lp", "feasible-sdp")
_REQUIRED = {
    "emx": ("dist",),
    "coarse": ("dist",),
    "compress": ("mode",),
    "quantum": ("gamma",),
    "feasible-lp": ("task",),
    "feasible-sdp": ("task", "states"),
}


@dataclass
class ExperimentConfig:
    kind: str
    parameters: dict = field(default_factory=dict)
    seed: int = DEFAULT_SEED
    out: str | None = None

    def validate(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r} (known: {', '.join(KINDS)})")
        missing = [k for k in _REQUIRED[self.kind] if self.parameters.get(k) is None]
        if missing:
            raise ValueError(f"{self.kind} config missing required parameters: {', '.join(missing)}")

    def to_json(self) -> dict:
        return {"kind": self.kind, "parameters": dict(self.parameters), "seed": self.seed, "out": self.out}

    @classmethod
    def from_json(cls, obj: dict) -> "ExperimentConfig":
        return cls(
            kind=obj.get("kind", ""),
            parameters=dict(obj.get("parameters", {})),
            seed=int(obj.get("seed", DEFAULT_SEED)),
            out=obj.get("out"),
        )


@dataclass
class RunReport:
    config: dict
    metrics: dict
    sweep: list[dict] | None
    wall_clock_s: float
    version: str

    def to_json(self) -> dict:
        out = {
            "config": _pin(self.config),
            "metrics": _pin(self.metrics),
            "wall_clock_s": _pin(self.wall_clock_s),
            "version": self.version,
        }
        if self.sweep is not None:
            out["sweep"] = _pin(self.sweep)
        return out


def _pin(obj):
    """Normalize a report payload: floats to 12 significant digits, exact
    rationals to strings, numpy scalars unwrapped."""
    if isinstance(obj, dict):
        return {str(k): _pin(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_pin(v) for v in obj]
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, (bool, type(None), str, int)):
        return obj
    if isinstance(obj, (float, np.floating)):
        return float(f"{float(obj):.12g}")
    if isinstance(obj, np.integer):
        return int(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__} in a report")


def write_report(report: RunReport, path: str) -> None:
    """Serialize deterministically and write via temp file + rename."""
    text = json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n"
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def emit_table(report: RunReport, path: str, fmt: str = "csv") -> None:
    """One CSV row per sweep point; header keys come from the first row."""
    if fmt != "csv":
        raise ValueError(f"unsupported table format {fmt!r}")
    if not report.sweep:
        raise ValueError("report has no sweep to tabulate")
    rows = _pin(report.sweep)
    header = list(rows[0].keys())
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=header)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def _load_json(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _frac(value, default: str) -> Fraction:
    return Fraction(str(value if value is not None else default))


def _guarantee_metrics(report) -> dict:
    return {
        "d": report.d,
        "empirical_rate": report.empirical_rate,
        "ci_halfwidth": report.ci_halfwidth,
        "bound": report.bound,
    }


def _run_emx(params: dict, seed: int):
    dist = FinSupportDist.from_json(_load_json(params["dist"]))
    eps = _frac(params.get("epsilon"), "1/3")
    dlt = _frac(params.get("delta"), "1/3")
    trials = int(params.get("trials", 1000))
    dom = IndexedDomain(dist.support)
    learner = lambda s: quantile_learn(s, dom)  # noqa: E731
    d = int(params["d"]) if params.get("d") is not None else sample_complexity(eps, dlt)
    metrics = dict(_guarantee_metrics(verify_guarantee(learner, dist, eps, dlt, d, trials, seed)))
    metrics["sample_complexity"] = sample_complexity(eps, dlt)
    sweep = None
    if params.get("sweep_d"):
        sweep = [
            {"d": dd, **_guarantee_metrics(verify_guarantee(learner, dist, eps, dlt, dd, trials, seed))}
            for dd in params["sweep_d"]
        ]
    return metrics, sweep


def _run_coarse(params: dict, seed: int):
    raw = _load_json(params["dist"])
    dist = FinSupportDist([float(x) for x in raw["labels"]], raw["weights"])
    eps = _frac(params.get("epsilon"), "1/3")
    dlt = _frac(params.get("delta"), "1/3")
    trials = int(params.get("trials", 1000))
    d = int(params["d"]) if params.get("d") is not None else sample_complexity(eps, dlt)

    def run_bits(bits: int) -> dict:
        pi = coarse.UniformBinsMap(bits)
        learner = lambda s: coarse.coarse_learn(s, pi, eps, dlt)  # noqa: E731
        rep = verify_guarantee(learner, dist, eps, dlt, d, trials, seed)
        return {"bits": bits, **_guarantee_metrics(rep)}

    metrics = run_bits(int(params.get("bits", 8)))
    sweep = [run_bits(int(b)) for b in params["sweep_bits"]] if params.get("sweep_bits") else None
    return metrics, sweep


def _run_compress(params: dict, seed: int):
    mode = params["mode"]
    if mode == "demo":
        labels = params["domain"]
        pair = tuple(params["pair"])
        if len(pair) != 2:
            raise ValueError("demo mode wants exactly two points")
        dom = IndexedDomain(labels)
        kept = compression.compress_two_to_one(pair[0], pair[1], dom)
        scheme = compression.two_to_one_scheme(dom)
        sub = compression.check_monotone_coverage(scheme, pair)
        reconstructed = sorted(scheme.reconstruct((kept,)).elements, key=dom.idx)
        return {
            "input": list(pair),
            "chosen_subtuple": list(sub) if sub is not None else None,
            "reconstructed": reconstructed,
            "covered": sub is not None,
        }, None
    if mode == "lemma1":
        dist = FinSupportDist.from_json(_load_json(params["dist"]))
        eps = _frac(params.get("epsilon"), "1/3")
        dlt = _frac(params.get("delta"), "1/3")
        m = int(params.get("m", 1))
        trials = int(params.get("trials", 2000))
        need = compression.required_n(m)
        dom = IndexedDomain(dist.support)
        scheme = compression.segment_scheme(dom, m)
        learner = lambda s: compression.compression_learner(scheme, s, dom)  # noqa: E731

        def run_n(n: int) -> dict:
            rep = verify_guarantee(learner, dist, eps, dlt, n, trials, seed)
            return {
                "n": n,
                "empirical_rate": rep.empirical_rate,
                "ci_halfwidth": rep.ci_halfwidth,
                "target_rate": 1.0 - float(dlt),
            }

        n = int(params["n"]) if params.get("n") is not None else need
        metrics = {"m": m, "required_n": need, **run_n(n)}
        sweep = [run_n(int(v)) for v in params["sweep_n"]] if params.get("sweep_n") else None
        return metrics, sweep
    raise ValueError(f"unknown compress mode {mode!r}")


def _discrimination_point(gamma: float, d: int, delta) -> dict:
    psi0 = quantum.DensityMatrix.pure([1.0, 0.0])
    psi1 = quantum.DensityMatrix.pure([gamma, math.sqrt(max(0.0, 1.0 - gamma * gamma))])
    povm = quantum.helstrom_povm(psi0, psi1, d)
    point = {
        "gamma": gamma,
        "copies": d,
        "trace_distance": quantum.trace_distance(
            quantum.tensor_power(psi0, d), quantum.tensor_power(psi1, d)
        ),
        "formula": quantum.pure_distance_formula(gamma, d),
        "bound": quantum.helstrom_bound(psi0, psi1, d),
        "achieved": quantum.discrimination_sum(povm, psi0, psi1, d),
        "delta_min": quantum.delta_min(gamma, d),
    }
    if delta is not None:
        point["d_min"] = quantum.copies_min(gamma, float(delta))
    return point


def _run_quantum(params: dict, seed: int):
    op = params.get("op", "discriminate")
    if op != "discriminate":
        raise ValueError(f"unknown quantum operation {op!r}")
    gamma = float(params["gamma"])
    d = int(params.get("copies", 1))
    delta = params.get("delta")
    metrics = _discrimination_point(gamma, d, delta)
    sweep = None
    if params.get("sweep_gamma"):
        sweep = [
            {k: v for k, v in _discrimination_point(float(g), d, delta).items() if k != "copies"}
            for g in params["sweep_gamma"]
        ]
    elif params.get("sweep_copies"):
        sweep = [
            {k: v for k, v in _discrimination_point(gamma, int(dd), delta).items() if k != "gamma"}
            for dd in params["sweep_copies"]
        ]
    return metrics, sweep


def _run_feasible_lp(params: dict, seed: int):
    task = TaskSpec.from_json(_load_json(params["task"]))
    poly = (
        feasibility.PolytopeSpec.from_json(_load_json(params["polytope"]))
        if params.get("polytope")
        else feasibility.kernel_polytope(task)
    )
    eps = _frac(params.get("epsilon"), "1/2")
    dlt = _frac(params.get("delta"), "1/5")
    rows = feasibility.build_pl_constraints(task, eps, dlt)
    result = feasibility.lp_feasible(poly, rows)
    metrics: dict = {"verdict": "feasible" if result.feasible else "infeasible"}
    if result.feasible:
        metrics["witness"] = {k: str(v) for k, v in result.witness.items()}
    return metrics, None


def _run_feasible_sdp(params: dict, seed: int):
    task = TaskSpec.from_json(_load_json(params["task"]))
    states_dir = params["states"]
    states = []
    for theta in task.thetas:
        path = os.path.join(states_dir, f"{theta}.json")
        if not os.path.exists(path):
            raise ValueError(f"missing state file for environment {theta!r}: {path}")
        states.append(quantum.DensityMatrix.from_json(_load_json(path)))
    eps = _frac(params.get("epsilon"), "1/2")
    dlt = _frac(params.get("delta"), "1/5")
    d = int(params.get("copies", 1))
    result = feasibility.sdp_feasible(states, task, eps, dlt, d=d)
    metrics: dict = {"verdict": result.verdict, "sweeps": result.sweeps}
    if result.residual is not None:
        metrics["residual"] = result.residual
    if result.certificate is not None:
        metrics["certificate"] = result.certificate
    if result.witness is not None:
        metrics["witness"] = result.witness.to_json()
    return metrics, None


_RUNNERS = {
    "emx": _run_emx,
    "coarse": _run_coarse,
    "compress": _run_compress,
    "quantum": _run_quantum,
    "feasible-lp": _run_feasible_lp,
    "feasible-sdp": _run_feasible_sdp,
}


def run_config(cfg: ExperimentConfig) -> RunReport:
    """Validate, dispatch, time, and assemble the report."""
    cfg.validate()
    t0 = time.perf_counter()
    metrics, sweep = _RUNNERS[cfg.kind](cfg.parameters, cfg.seed)
    return RunReport(
        config=cfg.to_json(),
        metrics=metrics,
        sweep=sweep,
        wall_clock_s=time.perf_counter() - t0,
        version=__version__,
    )


def _int_list(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def _float_list(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _str_list(text: str) -> list[str]:
    return [v.strip() for v in text.split(",") if v.strip()]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="plab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON experiment config; flags override its keys")
        p.add_argument("--seed", type=int, help=f"RNG seed (default {DEFAULT_SEED})")
        p.add_argument("--out", help="report path (default: print to stdout)")
        p.add_argument("--table", help="also write the sweep as CSV to this path")

    p = sub.add_parser("emx", help="quantile-learner guarantee runs")
    common(p)
    p.add_argument("--epsilon")
    p.add_argument("--delta")
    p.add_argument("--dist", help="distribution JSON file")
    p.add_argument("--trials", type=int)
    p.add_argument("--d", type=int)
    p.add_argument("--sweep-d", type=_int_list, dest="sweep_d")

    p = sub.add_parser("coarse", help="finite-precision learning runs")
    common(p)
    p.add_argument("--bits", type=int)
    p.add_argument("--epsilon")
    p.add_argument("--delta")
    p.add_argument("--dist")
    p.add_argument("--trials", type=int)
    p.add_argument("--d", type=int)
    p.add_argument("--sweep-bits", type=_int_list, dest="sweep_bits")

    p = sub.add_parser("compress", help="compression demos and ERM runs")
    common(p)
    p.add_argument("--mode", choices=("demo", "lemma1"))
    p.add_argument("--domain", type=_str_list, help="comma-separated domain labels (demo)")
    p.add_argument("--pair", type=_str_list, help="two comma-separated points (demo)")
    p.add_argument("--m", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--dist")
    p.add_argument("--trials", type=int)
    p.add_argument("--epsilon")
    p.add_argument("--delta")
    p.add_argument("--sweep-n", type=_int_list, dest="sweep_n")

    p = sub.add_parser("quantum", help="quantum discrimination bounds")
    qsub = p.add_subparsers(dest="quantum_op", required=True)
    q = qsub.add_parser("discriminate", help="two-state discrimination summary")
    common(q)
    q.add_argument("--gamma", type=float)
    q.add_argument("--copies", type=int)
    q.add_argument("--delta", type=float)
    q.add_argument("--sweep-gamma", type=_float_list, dest="sweep_gamma")
    q.add_argument("--sweep-copies", type=_int_list, dest="sweep_copies")

    p = sub.add_parser("feasible", help="LP/SDP feasibility deciders")
    fsub = p.add_subparsers(dest="feasible_op", required=True)
    f = fsub.add_parser("lp", help="exact rational feasibility")
    common(f)
    f.add_argument("--task")
    f.add_argument("--polytope")
    f.add_argument("--epsilon")
    f.add_argument("--delta")
    f = fsub.add_parser("sdp", help="POVM feasibility for d-copy models")
    common(f)
    f.add_argument("--task")
    f.add_argument("--states", help="directory with one <theta>.json state per environment")
    f.add_argument("--copies", type=int)
    f.add_argument("--epsilon")
    f.add_argument("--delta")
    return parser


_PARAM_KEYS = {
    "emx": ("epsilon", "delta", "dist", "trials", "d", "sweep_d"),
    "coarse": ("bits", "epsilon", "delta", "dist", "trials", "d", "sweep_bits"),
    "compress": ("mode", "domain", "pair", "m", "n", "dist", "trials", "epsilon", "delta", "sweep_n"),
    "quantum": ("gamma", "copies", "delta", "sweep_gamma", "sweep_copies"),
    "feasible-lp": ("task", "polytope", "epsilon", "delta"),
    "feasible-sdp": ("task", "states", "copies", "epsilon", "delta"),
}


def _config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    if args.command == "quantum":
        kind = "quantum"
    elif args.command == "feasible":
        kind = f"feasible-{args.feasible_op}"
    else:
        kind = args.command
    cfg = (
        ExperimentConfig.from_json(_load_json(args.config))
        if args.config
        else ExperimentConfig(kind=kind)
    )
    if cfg.kind != kind:
        raise ValueError(f"config kind {cfg.kind!r} does not match subcommand {kind!r}")
    for key in _PARAM_KEYS[kind]:
        value = getattr(args, key, None)
        if value is not None:
            cfg.parameters[key] = value
    if kind == "quantum":
        cfg.parameters.setdefault("op", args.quantum_op)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out is not None:
        cfg.out = args.out
    return cfg


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _config_from_args(args)
        report = run_config(cfg)
    except (ValueError, KeyError, OSError, quantum.ResourceCapError) as exc:
        print(f"plab: error: {exc}", file=sys.stderr)
        return 1
    if cfg.out:
        write_report(report, cfg.out)
    else:
        print(json.dumps(report.to_json(), indent=2, sort_keys=True))
    if args.table:
        try:
            emit_table(report, args.table)
        except ValueError as exc:
            print(f"plab: error: {exc}", file=sys.stderr)
            return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
