"""Command-line front end.

    evospi partition --numbers 1,2,5,6,7,9 --k 6 --seed 1
    evospi maxcut --instance g.txt --backend noisy --sigma 0.01
    evospi oracle --numbers 2,4,5,6,9
    evospi export-patterns --spins=+1,-1
    evospi sweep --n-from 10 --n-to 100 --n-step 10 --trials 20
    evospi noise --numbers 2,4,5,6,9 --sigmas 0,0.01,0.1

Exit status: 0 success, 2 iteration budget exhausted before the oracle
optimum was reached, 1 any error.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import bench, problems
from .evolve import GaConfig, RunAborted, run
from .spi import IdealBackend, NoiseModel, NoisyBackend, pattern_from_spins, replay_load, write_pbm, write_pgm

log = logging.getLogger("evospi")

COMMANDS = ("partition", "maxcut", "sweep", "noise", "oracle", "export-patterns")
EXIT_OK, EXIT_ERROR, EXIT_BUDGET = 0, 1, 2


class CliUsageError(ValueError):
    def __init__(self, message, flag=None):
        super().__init__(f"{flag}: {message}" if flag else message)
        self.flag = flag


@dataclass
class CliConfig:
    command: str
    instance_path: str | None = None
    inline_numbers: list | None = None
    random_n: int | None = None
    instance_seed: int = 0
    kind: str = "partition"
    spins: list | None = None
    k: int = 6
    elites: int | None = None
    mutation_rate: float = 0.1
    max_iters: int = 20
    seed: int = 0
    backend: str = "ideal"
    sigma: float = 0.01
    bits: int = 12
    offset: float = 0.0
    replay: str | None = None
    out_dir: str = "out"
    format: str = "csv"
    export: bool = False
    n_from: int = 10
    n_to: int = 200
    n_step: int = 10
    trials: int = 20
    instances: str = "auto"
    full: bool = False
    sigmas: list = field(default_factory=lambda: [0.0, 0.01, 0.1, 1.0])
    workers: int = 1

    def ga(self, target=None) -> GaConfig:
        return GaConfig(
            population_k=self.k,
            elites_j=self.elites,
            mutation_rate=self.mutation_rate,
            max_iterations=self.max_iters,
            target=target,
            master_seed=self.seed,
        )

    def argv(self) -> list:
        """Flags that reproduce this run (output directory excluded)."""
        args = [self.command]
        if self.inline_numbers is not None:
            args += ["--numbers", ",".join(str(x) for x in self.inline_numbers)]
        if self.instance_path is not None:
            args += ["--instance", self.instance_path]
        if self.random_n is not None:
            args += ["--random-n", str(self.random_n), "--instance-seed", str(self.instance_seed)]
        if self.command in ("oracle", "export-patterns") and self.random_n is not None:
            args += ["--kind", self.kind]
        if self.spins is not None:
            args += ["--spins=" + ",".join(f"{v:+d}" for v in self.spins)]
        if self.command in ("partition", "maxcut", "sweep", "noise"):
            args += ["--k", str(self.k)]
            if self.elites is not None:
                args += ["--elites", str(self.elites)]
            args += ["--mutation-rate", repr(self.mutation_rate), "--max-iters", str(self.max_iters),
                     "--seed", str(self.seed)]
        if self.command in ("partition", "maxcut"):
            args += ["--backend", self.backend]
            if self.backend == "noisy":
                args += ["--sigma", repr(self.sigma), "--bits", str(self.bits), "--offset", repr(self.offset)]
            if self.backend == "replay":
                args += ["--replay", self.replay]
            if self.export:
                args += ["--export"]
        if self.command == "sweep":
            args += ["--n-from", str(self.n_from), "--n-to", str(self.n_to), "--n-step", str(self.n_step),
                     "--trials", str(self.trials), "--instances", self.instances]
            if self.full:
                args += ["--full"]
        if self.command == "noise":
            args += ["--sigmas", ",".join(repr(s) for s in self.sigmas), "--trials", str(self.trials),
                     "--bits", str(self.bits), "--offset", repr(self.offset)]
        args += ["--format", self.format]
        return args


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliUsageError(message)


def _int_list(text):
    try:
        return [int(tok) for tok in text.replace(" ", "").split(",") if tok]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text):
    try:
        return [float(tok) for tok in text.replace(" ", "").split(",") if tok]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="evospi", description="Ising machine on simulated single-pixel imaging.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    common = _Parser(add_help=False)
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("--format", choices=("csv", "json"), default="csv")

    source = _Parser(add_help=False)
    source.add_argument("--numbers", type=_int_list, help="inline partition set, e.g. 1,2,5,6,7,9")
    source.add_argument("--instance", help="instance file (first line 'partition' or 'maxcut')")
    source.add_argument("--random-n", type=int, help="generate a random instance of this size")
    source.add_argument("--instance-seed", type=int, default=0)

    ga = _Parser(add_help=False)
    ga.add_argument("--k", type=int, default=6, help="population size K")
    ga.add_argument("--elites", type=int, help="elites kept per iteration J (default max(1, K//3))")
    ga.add_argument("--mutation-rate", type=float, default=0.1)
    ga.add_argument("--max-iters", type=int)
    ga.add_argument("--seed", type=int, default=0)
    ga.add_argument("--workers", type=int, default=1)

    detector = _Parser(add_help=False)
    detector.add_argument("--backend", choices=("ideal", "noisy", "replay"), default="ideal")
    detector.add_argument("--sigma", type=float)
    detector.add_argument("--bits", type=int)
    detector.add_argument("--offset", type=float)
    detector.add_argument("--replay", help="intensity trace, one value per line")
    detector.add_argument("--export", action="store_true", help="write best pattern (PBM) and weight image (PGM)")

    sub.add_parser("partition", parents=[common, source, ga, detector], help="solve a number partition")
    sub.add_parser("maxcut", parents=[common, source, ga, detector], help="solve a max cut")

    p = sub.add_parser("oracle", parents=[common, source], help="exact optimum by enumeration")
    p.add_argument("--kind", choices=("partition", "maxcut"), default="partition")

    p = sub.add_parser("export-patterns", parents=[common, source], help="write PBM pattern for a spin vector")
    p.add_argument("--kind", choices=("partition", "maxcut"), default="partition")
    p.add_argument("--spins", required=True, type=_int_list, help="e.g. --spins=+1,-1,+1")

    p = sub.add_parser("sweep", parents=[common, ga], help="iterations-to-solve versus N")
    p.add_argument("--n-from", type=int, default=10)
    p.add_argument("--n-to", type=int)
    p.add_argument("--n-step", type=int, default=10)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--instances", choices=("auto", "perfect"), default="auto")
    p.add_argument("--full", action="store_true", help="lift the desk-scale cap (N up to 400)")

    p = sub.add_parser("noise", parents=[common, source, ga], help="success rate versus detector noise")
    p.add_argument("--sigmas", type=_float_list, default=[0.0, 0.01, 0.1, 1.0])
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--bits", type=int, default=12)
    p.add_argument("--offset", type=float, default=0.0)
    return parser


def parse_args(argv) -> CliConfig:
    """Parse and validate ``argv``; raises CliUsageError naming the bad flag."""
    ns = _build_parser().parse_args(list(argv))
    cfg = CliConfig(command=ns.command, out_dir=ns.out, format=ns.format)

    if hasattr(ns, "numbers"):
        given = [f for f, v in (("--numbers", ns.numbers), ("--instance", ns.instance), ("--random-n", ns.random_n))
                 if v is not None]
        if len(given) > 1:
            raise CliUsageError(f"conflicting instance sources {' and '.join(given)}", given[1])
        needs_source = ns.command != "export-patterns"
        if needs_source and not given:
            raise CliUsageError("one of --numbers, --instance or --random-n is required", "--numbers")
        if ns.numbers is not None and ns.command == "maxcut":
            raise CliUsageError("maxcut takes --instance or --random-n", "--numbers")
        if ns.random_n is not None and ns.random_n < 2:
            raise CliUsageError("must be >= 2", "--random-n")
        cfg.inline_numbers = ns.numbers
        cfg.instance_path = ns.instance
        cfg.random_n = ns.random_n
        cfg.instance_seed = ns.instance_seed
    if hasattr(ns, "kind"):
        cfg.kind = ns.kind
    if hasattr(ns, "spins"):
        if len(ns.spins) < 2 or any(v not in (1, -1) for v in ns.spins):
            raise CliUsageError("need at least two values, each +1 or -1", "--spins")
        cfg.spins = ns.spins

    if hasattr(ns, "k"):
        default_iters = bench.SWEEP_CAP if ns.command == "sweep" else 20
        cfg.k, cfg.elites, cfg.mutation_rate, cfg.seed, cfg.workers = (
            ns.k, ns.elites, ns.mutation_rate, ns.seed, ns.workers)
        cfg.max_iters = default_iters if ns.max_iters is None else ns.max_iters
        if cfg.k < 2:
            raise CliUsageError("population_k must be >= 2", "--k")
        if cfg.elites is not None and not 1 <= cfg.elites < cfg.k:
            raise CliUsageError(f"elites must satisfy 1 <= J < K={cfg.k}", "--elites")
        if not 0.0 <= cfg.mutation_rate <= 1.0:
            raise CliUsageError("must be in [0, 1]", "--mutation-rate")
        if cfg.max_iters < 1:
            raise CliUsageError("must be >= 1", "--max-iters")
        if not 0 <= cfg.seed < 2**64:
            raise CliUsageError("must be a 64-bit unsigned integer", "--seed")
        if cfg.workers < 1:
            raise CliUsageError("must be >= 1", "--workers")

    if hasattr(ns, "backend"):
        cfg.backend = ns.backend
        cfg.export = ns.export
        if ns.backend != "noisy":
            for flag, value in (("--sigma", ns.sigma), ("--bits", ns.bits), ("--offset", ns.offset)):
                if value is not None:
                    raise CliUsageError("only valid with --backend noisy", flag)
        if ns.backend == "replay" and ns.replay is None:
            raise CliUsageError("--backend replay needs a trace file", "--replay")
        if ns.replay is not None and ns.backend != "replay":
            raise CliUsageError("only valid with --backend replay", "--replay")
        cfg.replay = ns.replay
        if ns.sigma is not None:
            cfg.sigma = ns.sigma
        if ns.bits is not None:
            cfg.bits = ns.bits
        if ns.offset is not None:
            cfg.offset = ns.offset
    elif ns.command == "noise":
        cfg.sigmas, cfg.trials, cfg.bits, cfg.offset = ns.sigmas, ns.trials, ns.bits, ns.offset
        if not cfg.sigmas or any(s < 0 for s in cfg.sigmas):
            raise CliUsageError("sigmas must be non-empty and >= 0", "--sigmas")
        if cfg.trials < 1:
            raise CliUsageError("must be >= 1", "--trials")
    if cfg.sigma < 0:
        raise CliUsageError("must be >= 0", "--sigma")
    if not 0 <= cfg.bits <= 16:
        raise CliUsageError("must be in [0, 16]", "--bits")
    if cfg.offset < 0:
        raise CliUsageError("must be >= 0", "--offset")

    if ns.command == "sweep":
        cfg.full = ns.full
        cfg.n_from, cfg.n_step, cfg.trials, cfg.instances = ns.n_from, ns.n_step, ns.trials, ns.instances
        cfg.n_to = ns.n_to if ns.n_to is not None else (400 if ns.full else bench.DESK_MAX_N)
        if cfg.n_from < 2:
            raise CliUsageError("must be >= 2", "--n-from")
        if cfg.n_step < 1:
            raise CliUsageError("must be >= 1", "--n-step")
        if cfg.trials < 1:
            raise CliUsageError("must be >= 1", "--trials")
        if cfg.n_to > bench.DESK_MAX_N and not cfg.full:
            raise CliUsageError(f"values above {bench.DESK_MAX_N} need --full", "--n-to")
    return cfg


# -- execution ----------------------------------------------------------------------

def load_instance(cfg: CliConfig, kind: str | None = None):
    kind = kind or cfg.kind
    if cfg.inline_numbers is not None:
        return problems.NumberPartitionInstance(tuple(cfg.inline_numbers))
    if cfg.instance_path is not None:
        inst = problems.read_instance(cfg.instance_path)
        if cfg.command in ("partition", "maxcut") and inst.kind != cfg.command:
            raise ValueError(f"{cfg.instance_path}: holds a {inst.kind} instance, command is {cfg.command}")
        return inst
    if cfg.random_n is not None:
        if kind == "maxcut":
            return problems.random_maxcut(cfg.random_n, cfg.instance_seed)
        return problems.random_partition(cfg.random_n, cfg.instance_seed)
    return None


def _jsonable(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, float) and math.isnan(x):
        return None
    return x


def _instance_record(inst):
    if isinstance(inst, problems.NumberPartitionInstance):
        return {"numbers": list(inst.numbers)}
    return {"weights": inst.weights.tolist()}


def _groups(s, inst):
    sol = problems.decode(s, inst)
    if isinstance(sol, problems.PartitionSolution):
        return {"groups": [list(sol.group_a), list(sol.group_b)], "sums": [sol.sum_a, sol.sum_b],
                "objective": sol.error}
    return {"groups": [list(sol.group_a), list(sol.group_b)], "objective": sol.cut_value}


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2, default=_jsonable) + "\n", encoding="utf-8")


def _write_table(cfg, kind, rows, out: Path) -> Path:
    if cfg.format == "json":
        return bench.write_json(kind, rows, out / f"{kind}.json")
    path = bench.write_csv(kind, rows, out / f"{kind}.csv")
    bench.write_gnuplot(kind, path)
    return path


def _solve(cfg: CliConfig, out: Path) -> int:
    inst = load_instance(cfg, cfg.command)
    image = problems.encode(inst)
    oracle = None
    if inst.n <= problems.MAX_ORACLE_N:
        oracle, _ = problems.brute_force(inst)
    else:
        log.info("n = %d exceeds the oracle bound %d; running without a target", inst.n, problems.MAX_ORACLE_N)
    ga = cfg.ga(target=oracle)

    if cfg.backend == "noisy":
        backend = NoisyBackend(image, NoiseModel(cfg.sigma, cfg.bits, cfg.offset), seed=cfg.seed)
    elif cfg.backend == "replay":
        backend = replay_load(cfg.replay)
    else:
        backend = IdealBackend(image)

    try:
        result = run(inst, backend, ga)
        history = result.history
    except RunAborted as exc:
        _write_table(cfg, "curve", [bench.CurvePoint(h.iteration, h.decoded_quality, h.best_intensity, ())
                                    for h in exc.history], out)
        raise
    curve = [bench.CurvePoint(h.iteration, h.decoded_quality, h.best_intensity, ()) for h in history]
    curve_path = _write_table(cfg, "curve", curve, out)

    best = {"spins": [int(v) for v in result.final], "intensity": result.final_intensity}
    best.update(_groups(result.final, inst))
    payload = {
        "problem": inst.kind,
        "n": inst.n,
        "instance": _instance_record(inst),
        "config": {
            "ga": {
                "population_k": ga.population_k,
                "elites_j": ga.elites_j,
                "mutation_rate": ga.mutation_rate,
                "max_iterations": ga.max_iterations,
                "target": ga.target,
                "master_seed": ga.master_seed,
            },
            "backend": {"kind": cfg.backend, "sigma": cfg.sigma, "bits": cfg.bits, "offset": cfg.offset,
                        "replay": cfg.replay},
            "format": cfg.format,
            "argv": cfg.argv(),
        },
        "seed": cfg.seed,
        "history_path": curve_path.name,
        "best": best,
        "converged_at": result.converged_at,
        "oracle": None,
    }
    if oracle is not None:
        payload["oracle"] = {"value": oracle, "matched": problems.reaches(best["objective"], oracle, inst)}

    if cfg.export:
        write_pbm(pattern_from_spins(result.final), out / "best_pattern.pbm")
        write_pgm(image, out / "weights.pgm")
    _write_json(out / "result.json", payload)

    print(f"{inst.kind} n={inst.n}: objective {best['objective']} groups {best['groups']}")
    if oracle is not None:
        print(f"oracle optimum {oracle}; converged_at {result.converged_at}")
        if result.converged_at is None:
            return EXIT_BUDGET
    return EXIT_OK


def _oracle(cfg: CliConfig, out: Path) -> int:
    inst = load_instance(cfg)
    value, witness = problems.brute_force(inst)
    rec = {"problem": inst.kind, "n": inst.n, "value": value, "spins": [int(v) for v in witness]}
    rec.update({k: v for k, v in _groups(witness, inst).items() if k != "objective"})
    print(f"optimum: {value}")
    print("witness: " + " ".join(f"{int(v):+d}" for v in witness))
    print(f"groups: {rec['groups'][0]} | {rec['groups'][1]}")
    _write_json(out / "oracle.json", rec)
    return EXIT_OK


def _export(cfg: CliConfig, out: Path) -> int:
    pattern = pattern_from_spins(cfg.spins)
    write_pbm(pattern, out / "pattern.pbm")
    inst = load_instance(cfg)
    if inst is not None:
        if inst.n != len(cfg.spins):
            raise ValueError(f"--spins has {len(cfg.spins)} values but the instance has n = {inst.n}")
        write_pgm(problems.encode(inst), out / "weights.pgm")
    print(f"wrote {out / 'pattern.pbm'}")
    return EXIT_OK


def _sweep(cfg: CliConfig, out: Path) -> int:
    rows = bench.scaling_sweep(
        cfg.n_from, cfg.n_to, cfg.n_step, cfg.trials, cfg.ga(),
        sweep_seed=cfg.seed, instances=cfg.instances, workers=cfg.workers, allow_large=cfg.full,
    )
    path = _write_table(cfg, "sweep", rows, out)
    for n in sorted({r.n for r in rows}):
        its = [r.iterations_to_solve for r in rows if r.n == n and r.solved]
        unsolved = sum(1 for r in rows if r.n == n and not r.solved)
        med = float(np.median(its)) if its else float("nan")
        print(f"N={n:4d} median iterations {med:8.1f} unsolved {unsolved}")
    print(f"wrote {path}")
    return EXIT_OK


def _noise(cfg: CliConfig, out: Path) -> int:
    inst = load_instance(cfg)
    rows = bench.noise_robustness(inst, cfg.sigmas, cfg.trials, cfg.ga(), bits=cfg.bits, offset=cfg.offset,
                                  workers=cfg.workers)
    path = _write_table(cfg, "noise", rows, out)
    for r in rows:
        print(f"sigma={r.sigma:<8g} success {r.success_rate:.2f} mean iterations {r.mean_iterations:.2f}")
    print(f"wrote {path}")
    return EXIT_OK


_DISPATCH = {
    "partition": _solve,
    "maxcut": _solve,
    "oracle": _oracle,
    "export-patterns": _export,
    "sweep": _sweep,
    "noise": _noise,
}


def execute(cfg: CliConfig) -> int:
    out = Path(cfg.out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        return _DISPATCH[cfg.command](cfg, out)
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"evospi: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = parse_args(argv)
    except CliUsageError as exc:
        _build_parser().print_usage(sys.stderr)
        print(f"evospi: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    logging.basicConfig(level=logging.INFO if "-v" in argv or "--verbose" in argv else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return execute(cfg)


if __name__ == "__main__":
    sys.exit(main())
