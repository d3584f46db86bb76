"""Command-line entry point: ``apmqec <command> ...``.

Every command writes machine-readable outputs into ``--out`` (default: the
current directory) together with ``manifest.json``. The manifest digest is
a SHA-256 over the command, its normalized arguments, the digests of its
input files and the tool version; every JSON output embeds it, text
outputs carry it in a comment line, and the manifest lists the SHA-256 of
every output file. Wall-clock time is recorded in the manifest only, so
reruns with the same inputs produce byte-identical outputs.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import AlistParseError, ConstructionError, DomainError, StructureError

COMMANDS = ("build-code", "check-code", "search", "distance", "compile-moves",
            "estimate-time", "simulate", "decode", "throughput", "report")


class UsageError(Exception):
    """Malformed input; the message names the offending field."""


def _sha(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _canon(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


@dataclass
class RunManifest:
    command: str
    args: dict
    inputs: dict[str, str]
    seed: int | None = None
    version: str = __version__
    outputs: dict[str, str] = field(default_factory=dict)
    wall_clock: float = 0.0

    @property
    def digest(self) -> str:
        return _sha(_canon({"command": self.command, "args": self.args, "inputs": self.inputs,
                            "seed": self.seed, "version": self.version}).encode())

    def to_json(self) -> dict:
        return {"command": self.command, "digest": self.digest, "args": self.args,
                "inputs": self.inputs, "seed": self.seed, "version": self.version,
                "outputs": self.outputs, "wall_clock_s": self.wall_clock}


class Run:
    """Collects outputs of one command and writes the manifest."""

    def __init__(self, args: argparse.Namespace, inputs: list[str], skip=("out", "func", "threads")):
        self.out = Path(args.out)
        self.out.mkdir(parents=True, exist_ok=True)
        kept = {k: v for k, v in sorted(vars(args).items()) if k not in skip and k not in inputs}
        files = {}
        for k in inputs:
            v = getattr(args, k, None)
            if v is not None:
                files[k] = _sha(Path(v).read_bytes())
                kept[k] = Path(v).name
        self.manifest = RunManifest(args.command, kept, files, getattr(args, "seed", None))
        self.t0 = time.perf_counter()

    @property
    def digest(self) -> str:
        return self.manifest.digest

    def write_json(self, name: str, obj) -> Path:
        data = dict(obj) if isinstance(obj, dict) else {"data": obj}
        data["manifest_digest"] = self.digest
        return self.write_bytes(name, (json.dumps(data, indent=2, sort_keys=True) + "\n").encode())

    def write_text(self, name: str, text: str, comment: str | None = "#") -> Path:
        if comment:
            text = f"{comment} manifest {self.digest}\n" + text
        return self.write_bytes(name, text.encode())

    def write_bytes(self, name: str, data: bytes) -> Path:
        path = self.out / name
        path.write_bytes(data)
        self.manifest.outputs[name] = _sha(data)
        return path

    def register(self, name: str) -> None:
        self.manifest.outputs[name] = _sha((self.out / name).read_bytes())

    def finish(self) -> None:
        self.manifest.wall_clock = round(time.perf_counter() - self.t0, 3)
        (self.out / "manifest.json").write_text(json.dumps(self.manifest.to_json(), indent=2) + "\n")


def _load_json(path: str, what: str) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise UsageError(f"{what}: file {path!r} not found") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{what}: {path!r} is not valid JSON ({exc})") from None


def _spec(args):
    from .codes import CodeSpec, load_fixture
    if getattr(args, "spec", None):
        obj = _load_json(args.spec, "--spec")
        try:
            return CodeSpec.from_json(obj)
        except KeyError as exc:
            raise UsageError(f"--spec: missing field {exc.args[0]!r}") from None
        except (DomainError, TypeError, ValueError) as exc:
            raise UsageError(f"--spec: {exc}") from None
    if getattr(args, "fixture", None):
        try:
            return load_fixture(args.fixture)
        except (FileNotFoundError, ModuleNotFoundError, DomainError):
            raise UsageError(f"--fixture: no shipped fixture for P={args.fixture}") from None
    raise UsageError("one of --spec or --fixture is required")


def _ordering(args):
    from .search import DEFAULT_ORDERING, parse_ordering
    if not getattr(args, "ordering", None):
        return DEFAULT_ORDERING
    try:
        return parse_ordering(args.ordering.split(","))
    except DomainError as exc:
        raise UsageError(f"--ordering: {exc}") from None


# ---------------------------------------------------------------- commands

def cmd_build_code(args) -> int:
    from .codes import build_check_matrices, export_alist, tanner_girth
    spec = _spec(args)
    run = Run(args, ["spec"])
    code = build_check_matrices(spec)
    summary = {"P": spec.P, "n": code.n, "k": code.k, "rank_x": code.rank_x,
               "rank_z": code.rank_z, "css": code.is_css(), "d_upper": spec.d_upper}
    if args.girth:
        summary["girth"] = min(tanner_girth(code.h_x), tanner_girth(code.h_z))
    run.write_bytes("h_x.alist", export_alist(code.h_x).encode())
    run.write_bytes("h_z.alist", export_alist(code.h_z).encode())
    run.write_json("code.json", summary)
    run.finish()
    print(f"[[{code.n},{code.k}]] code from P={spec.P}: rank H_X={code.rank_x}, "
          f"rank H_Z={code.rank_z}, CSS={code.is_css()}")
    return 0


def cmd_check_code(args) -> int:
    from .codes import build_check_matrices, import_alist
    from .gf2 import gf2_rank
    if args.h_x or args.h_z:
        if not (args.h_x and args.h_z):
            raise UsageError("--h-x and --h-z must be given together")
        hx = import_alist(Path(args.h_x).read_text())
        hz = import_alist(Path(args.h_z).read_text())
        if hx.cols != hz.cols:
            raise UsageError(f"--h-z: {hz.cols} columns but H_X has {hx.cols}")
        bad = np.argwhere((hx @ hz.T).to_dense())
        if len(bad):
            r, c = bad[0]
            print(f"error: H_X row {r} and H_Z row {c} overlap oddly ({len(bad)} failing pairs)",
                  file=sys.stderr)
            return 1
        k = hx.cols - gf2_rank(hx) - gf2_rank(hz)
        print(f"CSS orthogonality holds; n={hx.cols}, k={k}")
        return 0
    spec = _spec(args)
    try:
        code = build_check_matrices(spec)
    except ConstructionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"CSS orthogonality holds; n={code.n}, k={code.k}")
    return 0


def cmd_search(args) -> int:
    from .search import SearchConfig, search
    obj = _load_json(args.config, "--config")
    if args.seeds is not None:
        obj["seeds"] = args.seeds
    obj.setdefault("base_seed", args.seed)
    try:
        config = SearchConfig.from_json(obj)
    except (DomainError, TypeError) as exc:
        raise UsageError(f"--config: {exc}") from None
    run = Run(args, ["config"])
    found = search(config, assess=not args.no_assess)
    lines = "".join(_canon(c.to_json()) + "\n" for c in found)
    run.write_text("candidates.jsonl", lines, comment=None)
    run.write_json("search.json", {"config": config.to_json(), "survivors": len(found),
                                   "seeds": len(config.seed_list)})
    run.finish()
    print(f"{len(found)} of {len(config.seed_list)} seeds survived")
    return 0


def cmd_distance(args) -> int:
    from .codes import build_check_matrices
    from .distance import distance_upper_bound
    spec = _spec(args)
    run = Run(args, ["spec"])
    code = build_check_matrices(spec)
    rep = distance_upper_bound(code, args.trials, seed=args.seed)
    run.write_json("distance.json", rep.to_json())
    run.finish()
    print(f"d <= {rep.d_upper} (d_X <= {rep.d_x_upper}, d_Z <= {rep.d_z_upper}) "
          f"after {args.trials} trials per basis")
    return 0


def _layout(args, spec):
    from .aod import crt_layout, default_layout, row_major_layout
    if args.layout == "auto":
        return default_layout(spec)
    if args.layout == "crt":
        return crt_layout(spec.P, 3, spec.P // 3)
    if args.layout == "row-major":
        return row_major_layout(spec.P, 3)
    raise UsageError(f"--layout: unknown layout {args.layout!r}")


def cmd_compile_moves(args) -> int:
    from .aod import frames, transition_schedule
    spec = _spec(args)
    run = Run(args, ["spec"])
    layout = _layout(args, spec)
    scheds = transition_schedule(spec, _ordering(args), layout, wrap=args.wrap)
    run.write_json("schedules.json", {"layout": layout.to_json(),
                                      "schedules": [s.to_json() for s in scheds]})
    if args.frames:
        rows = ["schedule,step,qubit,row,col"]
        for i, s in enumerate(scheds):
            for k, pos in enumerate(frames(layout, s)):
                rows += [f"{i},{k},{q},{r},{c}" for q, (r, c) in enumerate(pos)]
        run.write_text("frames.csv", "\n".join(rows) + "\n")
    run.finish()
    for s in scheds:
        print(f"{s.label:8s} {s.strategy:9s} " + " ".join(
            f"{st.kind}({st.amount})" if st.kind.endswith("Shift") else st.kind for st in s.steps))
    return 0


def cmd_estimate_time(args) -> int:
    from .motion import MotionConfig, se_round_time
    spec = _spec(args)
    try:
        config = MotionConfig(n_aod_pairs=args.aod_pairs, acceleration=args.acceleration)
    except DomainError as exc:
        raise UsageError(f"--aod-pairs/--acceleration: {exc}") from None
    run = Run(args, ["spec"])
    rep = se_round_time(spec, _ordering(args), config, _layout(args, spec))
    run.write_json("timing.json", rep.to_json())
    run.write_text("timing.csv", rep.to_csv())
    run.finish()
    w, h = rep.footprint
    print(f"SE round {rep.total:.0f} us with {args.aod_pairs} AOD pairs; footprint {w:g} x {h:g} um")
    return 0


def cmd_simulate(args) -> int:
    from .codes import build_check_matrices
    from .simulate import NoiseModel, build_memory_experiment, sample, write_dem, write_shots
    spec = _spec(args)
    if not 0 <= args.p <= 1:
        raise UsageError("--p must lie in [0, 1]")
    if args.shots < 1:
        raise UsageError("--shots must be >= 1")
    run = Run(args, ["spec"])
    code = build_check_matrices(spec)
    noise = NoiseModel(args.noise, args.p)
    exp = build_memory_experiment(code, args.rounds, args.basis, noise)
    run.write_text("experiment.dem", write_dem(exp))
    batch = sample(exp, args.shots, seed=args.seed)
    write_shots(batch, run.out / "shots.bin", manifest=run.digest)
    run.register("shots.bin")
    run.write_json("simulate.json", {"n": code.n, "k": code.k, "rounds": args.rounds,
                                     "basis": args.basis, "noise": noise.to_json(),
                                     "detectors": exp.n_detectors,
                                     "mechanisms": exp.n_mechanisms, "shots": args.shots})
    run.finish()
    print(f"{args.shots} shots, {exp.n_detectors} detectors, {exp.n_mechanisms} mechanisms")
    return 0


def cmd_decode(args) -> int:
    from .decoders import (BpConfig, MleBudget, RelayConfig, TierConfig,
                           hierarchical_decode, rate_metrics)
    from .simulate import read_dem, read_shots
    problem = read_dem(Path(args.dem).read_text())
    batch, header = read_shots(args.shots)
    if batch.syndromes.shape[1] != problem.n_detectors:
        raise UsageError(f"--shots: {batch.syndromes.shape[1]} detectors per shot, "
                         f"model has {problem.n_detectors}")
    try:
        config = TierConfig(BpConfig(args.bp_iters, args.min_sum, args.ms_scaling),
                            RelayConfig(legs=args.relay_legs, leg_iters=args.relay_iters,
                                        min_sum=args.min_sum, ms_scaling=args.ms_scaling),
                            MleBudget(time_limit=args.mle_time, backend=args.mle_backend),
                            tiers=args.tiers)
    except (ValueError, DomainError) as exc:
        raise UsageError(f"decoder config: {exc}") from None
    run = Run(args, ["dem", "shots"])
    outcomes, stats = hierarchical_decode(problem, batch.syndromes, batch.observables,
                                          config, seed=args.seed)
    lines = "".join(_canon({"shot": i, **o.to_json()}) + "\n" for i, o in enumerate(outcomes))
    run.write_text("outcomes.jsonl", lines, comment=None)
    summary = stats.to_json()
    if args.rounds:
        k = problem.observables.rows
        summary["rates"] = {str(t): rate_metrics(stats.failures[t], stats.shots, args.rounds, k)
                            for t in (1, 2, 3)}
    run.write_json("decode.json", summary)
    run.finish()
    q = stats.q
    print(f"{stats.shots} shots: q2={q[1]:.4g} q3={q[2]:.4g} failures "
          + " ".join(f"T{t}={stats.failures[t]}" for t in (1, 2, 3)))
    return 0


def cmd_throughput(args) -> int:
    from .decoders import ThroughputModel, throughput
    obj = _load_json(args.model, "--model")
    try:
        model = ThroughputModel.from_json(obj)
    except (DomainError, TypeError) as exc:
        raise UsageError(f"--model: {exc}") from None
    run = Run(args, ["model"])
    res = throughput(model)
    run.write_json("throughput.json", res)
    run.finish()
    line = f"t_bar = {res['t_bar'] * 1e9:.4g} ns, F = {res['F']:.3g}"
    if "backlog_probability" in res:
        line += f", backlog over {res['backlog_rounds']} rounds = {res['backlog_probability']:.3g}"
    print(line)
    return 0


def cmd_report(args) -> int:
    from .aod import transition_schedule
    from .codes import build_check_matrices, tanner_girth
    from .motion import MotionConfig, se_round_time
    from .search import column_structure
    spec = _spec(args)
    run = Run(args, ["spec"])
    code = build_check_matrices(spec)
    out = {"code": {"n": code.n, "k": code.k, "d_upper": spec.d_upper,
                    "girth": min(tanner_girth(code.h_x), tanner_girth(code.h_z))},
           "column_structure": column_structure(spec)}
    layout = _layout(args, spec)
    scheds = transition_schedule(spec, _ordering(args), layout)
    out["transitions"] = [{"label": s.label, "strategy": s.strategy, "kinds": s.kinds()}
                          for s in scheds]
    if layout.provenance == "exponent":
        out["se_round_us"] = {str(n): se_round_time(spec, _ordering(args),
                                                    MotionConfig(n_aod_pairs=n), layout).total
                              for n in (2, 4)}
    run.write_json("report.json", out)
    run.finish()
    cs = out["column_structure"]
    print(f"[[{code.n},{code.k},<={spec.d_upper}]] girth {out['code']['girth']}; "
          f"{len(cs['inside'])}/12 column components inside an abelian subgroup "
          f"with factors {cs['invariant_factors']}")
    return 0


# ---------------------------------------------------------------- parser

def _common(p: argparse.ArgumentParser, spec: bool = True, seed: bool = False):
    p.add_argument("--out", default=".", help="output directory")
    if spec:
        g = p.add_mutually_exclusive_group()
        g.add_argument("--spec", help="code spec JSON")
        g.add_argument("--fixture", type=int, help="shipped spec by P (96, 192, 384)")
    if seed:
        p.add_argument("--seed", type=int, default=0, help="root seed for all randomness")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="apmqec", description="APM-based qLDPC toolkit")
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("--threads", type=int, default=None, help="numba worker threads")
    sub = ap.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("build-code", help="build H_X/H_Z and write alist files")
    _common(p)
    p.add_argument("--girth", action="store_true", help="also compute the Tanner girth")
    p.set_defaults(func=cmd_build_code)

    p = sub.add_parser("check-code", help="check CSS orthogonality of a spec or alist pair")
    _common(p)
    p.add_argument("--h-x", dest="h_x")
    p.add_argument("--h-z", dest="h_z")
    p.set_defaults(func=cmd_check_code)

    p = sub.add_parser("search", help="randomized constrained spec search")
    _common(p, spec=False, seed=True)
    p.add_argument("--config", required=True, help="search config JSON")
    p.add_argument("--seeds", type=int, help="override the number of seeds")
    p.add_argument("--no-assess", action="store_true", help="skip distance and capacity checks")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("distance", help="randomized distance upper bound")
    _common(p, seed=True)
    p.add_argument("--trials", type=int, default=200)
    p.set_defaults(func=cmd_distance)

    for name, func, help_ in (("compile-moves", cmd_compile_moves, "compile transitions to AOD moves"),
                              ("estimate-time", cmd_estimate_time, "SE round time estimate"),
                              ("report", cmd_report, "code, group-structure and timing summary")):
        p = sub.add_parser(name, help=help_)
        _common(p)
        p.add_argument("--ordering", help="comma-separated map names, e.g. F0,F5,...,G0")
        p.add_argument("--layout", default="auto", choices=("auto", "crt", "row-major"))
        if name == "compile-moves":
            p.add_argument("--wrap", action="store_true", help="include the wrap into the next round")
            p.add_argument("--frames", action="store_true", help="dump per-step atom coordinates")
        if name == "estimate-time":
            p.add_argument("--aod-pairs", type=int, default=2)
            p.add_argument("--acceleration", type=float, default=5500.0, help="m/s^2")
        p.set_defaults(func=func)

    p = sub.add_parser("simulate", help="sample a phenomenological memory experiment")
    _common(p, seed=True)
    p.add_argument("--rounds", type=int, default=32)
    p.add_argument("--basis", choices=("X", "Z"), default="Z")
    p.add_argument("--noise", choices=("phenomenological", "code_capacity"), default="phenomenological")
    p.add_argument("--p", type=float, required=True, help="depolarizing strength")
    p.add_argument("--shots", type=int, default=1000)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("decode", help="hierarchical decoding of a shot file")
    _common(p, spec=False, seed=True)
    p.add_argument("--dem", required=True)
    p.add_argument("--shots", required=True)
    p.add_argument("--tiers", type=int, default=3)
    p.add_argument("--bp-iters", type=int, default=200)
    p.add_argument("--min-sum", action="store_true")
    p.add_argument("--ms-scaling", type=float, default=1.0)
    p.add_argument("--relay-legs", type=int, default=30)
    p.add_argument("--relay-iters", type=int, default=60)
    p.add_argument("--mle-backend", choices=("bnb", "milp"), default="bnb")
    p.add_argument("--mle-time", type=float, default=60.0)
    p.add_argument("--rounds", type=int, help="rounds per shot, for per-round rates")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("throughput", help="decoder throughput arithmetic")
    _common(p, spec=False)
    p.add_argument("--model", required=True, help="throughput model JSON")
    p.set_defaults(func=cmd_throughput)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command is None:
        ap.print_help(sys.stderr)
        return 2
    if args.threads:
        import numba
        numba.set_num_threads(args.threads)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (DomainError, StructureError, AlistParseError, ConstructionError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
