"""Command-line entry point: GTP serving, self-play, sweeps, benchmarks, probes.

One executable, five subcommands:

  parago gtp       --threads 4 --budget-ms 1000 --affinity compact
  parago selfplay  --threads 2 --threads-b 1 --budget-playouts 1000 --games 100
  parago sweep     --threads 2,4,8 --games 200 --budget-playouts 1000 --out sweep.csv
  parago bench     --bench kernel --threads 1,2,4 --affinity compact,scatter
  parago probe     --probe tree-size --budget-playouts 10000

Any flag may also come from a key=value config file (--config FILE); explicit
command-line flags win.  The MCTS_AFFINITY environment variable mirrors
--affinity (command line wins).  Outputs are written atomically (temp file +
rename) together with a .meta.json provenance sidecar.  Exit codes: 0 ok,
1 usage error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
import tempfile
from dataclasses import dataclass
from typing import List, Optional, Sequence

from . import __version__
from .affinity import AffinityPolicy, host_topology
from .bench import (
    BENCH_CSV_HEADER,
    KernelSpec,
    bench_csv,
    games_per_second_probe,
    run_bandwidth,
    run_kernel,
    tree_size_probe,
)
from .mcts import LockMode, Playouts, SearchConfig, WallTime
from .tournament import (
    MATCH_CSV_HEADER,
    EnginePairing,
    SweepPoint,
    doubling_sweep,
    gtp_serve,
    run_match,
    sweep_csv,
)

log = logging.getLogger(__name__)

COMMANDS = ("gtp", "selfplay", "sweep", "bench", "probe")


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    search: SearchConfig
    board_size: int = 9
    komi: float = 6.0
    games: int = 100
    threads_b: Optional[int] = None
    sweep_points: List[int] = dataclasses.field(default_factory=list)
    bench_kind: str = "kernel"
    probe_kind: str = "tree-size"
    kernel: Optional[KernelSpec] = None
    bench_threads: List[int] = dataclasses.field(default_factory=lambda: [1])
    bench_policies: List[AffinityPolicy] = dataclasses.field(
        default_factory=lambda: [AffinityPolicy.NONE]
    )
    output_path: Optional[str] = None
    log_level: str = "warning"


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems become exit code 1, not 2
        raise UsageError(message)


def _read_config_file(path: str) -> dict:
    values = {}
    try:
        with open(path) as f:
            for raw in f:
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise UsageError(f"config file line not key=value: {raw.strip()!r}")
                key, val = line.split("=", 1)
                values[key.strip()] = val.strip()
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}") from exc
    return values


def _build_parser() -> _Parser:
    parser = _Parser(prog="parago", description=__doc__, add_help=True)
    parser.add_argument("--version", action="version", version=f"parago {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, add_help=True)
        p.add_argument("--config", help="key=value file supplying defaults for any flag")
        p.add_argument("--threads", help="thread count (comma list for sweep/bench)")
        p.add_argument("--budget-ms", type=float, help="wall-time budget per move (ms)")
        p.add_argument("--budget-playouts", type=int, help="playout budget per move")
        p.add_argument("--lock", choices=["local", "free"], help="tree expansion discipline")
        p.add_argument("--affinity", help="compact|balanced|scatter|none (comma list for bench)")
        p.add_argument("--board-size", type=int)
        p.add_argument("--komi", type=float)
        p.add_argument("--games", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--exploration-c", type=float)
        p.add_argument("--virtual-loss", type=int)
        p.add_argument("--out", help="output path (CSV or JSON)")
        p.add_argument("--log-level", choices=["debug", "info", "warning", "error"])
        if name == "selfplay":
            p.add_argument("--threads-b", type=int, help="engine B thread count (default: same)")
        if name == "bench":
            p.add_argument("--bench", choices=["kernel", "bandwidth"])
            p.add_argument("--element-type", choices=["float64", "int32"])
            p.add_argument("--length", type=int, help="array length in elements")
            p.add_argument("--reps", type=int, help="kernel passes over the arrays")
        if name == "probe":
            p.add_argument("--probe", choices=["tree-size", "games-per-sec"])
    return parser


def _merged(args: argparse.Namespace, key: str, file_vals: dict, parse=str, default=None):
    """Resolution order: command line, config file, default."""
    cli = getattr(args, key.replace("-", "_"), None)
    if cli is not None:
        return cli
    if key in file_vals:
        raw = file_vals[key]
        try:
            return parse(raw)
        except ValueError as exc:
            raise UsageError(f"bad config value {key}={raw!r}: {exc}") from exc
    return default


def _parse_int_list(text) -> List[int]:
    if isinstance(text, int):
        return [text]
    try:
        return [int(part) for part in str(text).split(",") if part != ""]
    except ValueError as exc:
        raise UsageError(f"bad thread list {text!r}") from exc


def parse_args(argv: Sequence[str]) -> RunConfig:
    """argv (without the program name) to a validated RunConfig."""
    args = _build_parser().parse_args(list(argv))
    file_vals = _read_config_file(args.config) if args.config else {}

    budget_ms = _merged(args, "budget-ms", file_vals, float)
    budget_playouts = _merged(args, "budget-playouts", file_vals, int)
    if budget_ms is not None and budget_playouts is not None:
        raise UsageError("conflicting budgets: give --budget-ms or --budget-playouts, not both")
    if budget_playouts is not None:
        budget = Playouts(budget_playouts)
    elif budget_ms is not None:
        budget = WallTime(budget_ms)
    else:
        budget = Playouts(1000)

    affinity_raw = _merged(
        args, "affinity", file_vals, str, os.environ.get("MCTS_AFFINITY", "none")
    )
    lock_raw = _merged(args, "lock", file_vals, str, "free")
    threads_raw = _merged(args, "threads", file_vals, str, "1")
    thread_list = _parse_int_list(threads_raw)

    policies = [AffinityPolicy.parse(p) for p in str(affinity_raw).split(",") if p]
    if not policies:
        policies = [AffinityPolicy.NONE]

    try:
        search = SearchConfig(
            threads=thread_list[0],
            budget=budget,
            lock_mode=LockMode(lock_raw),
            affinity=policies[0],
            exploration_c=_merged(args, "exploration-c", file_vals, float, 0.7),
            virtual_loss_size=_merged(args, "virtual-loss", file_vals, int, 1),
            seed=_merged(args, "seed", file_vals, int, 0),
            komi=_merged(args, "komi", file_vals, float, 6.0),
        )
        search.validate()
    except (ValueError, TypeError) as exc:
        raise UsageError(str(exc)) from exc

    cfg = RunConfig(
        command=args.command,
        search=search,
        board_size=_merged(args, "board-size", file_vals, int, 9),
        komi=search.komi,
        games=_merged(args, "games", file_vals, int, 100),
        output_path=_merged(args, "out", file_vals, str),
        log_level=_merged(args, "log-level", file_vals, str, "warning"),
    )
    if cfg.command == "sweep":
        cfg.sweep_points = thread_list
    if cfg.command == "selfplay":
        cfg.threads_b = _merged(args, "threads-b", file_vals, int, search.threads)
    if cfg.command == "bench":
        cfg.bench_kind = _merged(args, "bench", file_vals, str, "kernel")
        cfg.bench_threads = thread_list
        cfg.bench_policies = policies
        default_len = (1 << 14) if cfg.bench_kind == "kernel" else (1 << 26)
        default_reps = 1000 if cfg.bench_kind == "kernel" else 1
        cfg.kernel = KernelSpec(
            element_type=_merged(args, "element-type", file_vals, str, "float64"),
            array_length=_merged(args, "length", file_vals, int, default_len),
            repetitions=_merged(args, "reps", file_vals, int, default_reps),
            threads=thread_list[0],
            affinity=policies[0],
        )
        try:
            cfg.kernel.validate()
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    if cfg.command == "probe":
        cfg.probe_kind = _merged(args, "probe", file_vals, str, "tree-size")
    if not (2 <= cfg.board_size <= 19):
        raise UsageError("board size must be in 2..19")
    if cfg.games < 1:
        raise UsageError("games must be >= 1")
    return cfg


def atomic_write_text(path: str, text: str) -> None:
    """Write via a temp file and rename so interrupted runs leave no partial file."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".parago-")
    try:
        with os.fdopen(fd, "w") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _provenance(cfg: RunConfig) -> dict:
    topo = host_topology()
    search = dataclasses.asdict(cfg.search)
    search["budget"] = repr(cfg.search.budget)
    search["lock_mode"] = cfg.search.lock_mode.value
    search["affinity"] = cfg.search.affinity.value
    echo = {
        "command": cfg.command,
        "search": search,
        "board_size": cfg.board_size,
        "games": cfg.games,
        "sweep_points": cfg.sweep_points,
        "bench_kind": cfg.bench_kind,
        "probe_kind": cfg.probe_kind,
        "output_path": cfg.output_path,
    }
    return {
        "version": __version__,
        "seed": cfg.search.seed,
        "host": {"cores": topo.cores, "smt": topo.smt_ways},
        "run_config": echo,
    }


def _emit(cfg: RunConfig, text: str) -> None:
    if cfg.output_path:
        atomic_write_text(cfg.output_path, text)
        atomic_write_text(
            cfg.output_path + ".meta.json", json.dumps(_provenance(cfg), indent=2) + "\n"
        )
        log.info("wrote %s", cfg.output_path)
    else:
        sys.stdout.write(text)


def _run_selfplay(cfg: RunConfig) -> None:
    engine_a = cfg.search
    engine_b = cfg.search.with_(threads=cfg.threads_b or cfg.search.threads)
    pairing = EnginePairing(
        engine_a=engine_a,
        engine_b=engine_b,
        games=cfg.games,
        komi=cfg.komi,
        board_size=cfg.board_size,
    )
    stats, _ = run_match(pairing, seed=cfg.search.seed)
    point = SweepPoint(n_threads=engine_a.threads, stats=stats)
    _emit(cfg, MATCH_CSV_HEADER + "\n" + point.csv_row() + "\n")
    print(
        f"selfplay: {stats.wins_a}-{stats.losses_a}-{stats.draws} over {stats.games} games, "
        f"w={stats.win_rate:.3f} CI=[{stats.ci_low:.3f},{stats.ci_high:.3f}]",
        file=sys.stderr,
    )


def _run_sweep(cfg: RunConfig) -> None:
    points = doubling_sweep(
        cfg.sweep_points,
        games_per_point=cfg.games,
        per_thread_budget=cfg.search.budget,
        board_size=cfg.board_size,
        komi=cfg.komi,
        base_config=cfg.search,
        seed=cfg.search.seed,
    )
    _emit(cfg, sweep_csv(points))
    total = sum(p.stats.games for p in points)
    print(f"sweep: {len(points)} points, {total} games total", file=sys.stderr)


def _run_bench(cfg: RunConfig) -> None:
    rows = []
    for threads in cfg.bench_threads:
        for policy in cfg.bench_policies:
            spec = dataclasses.replace(cfg.kernel, threads=threads, affinity=policy)
            result = run_kernel(spec) if cfg.bench_kind == "kernel" else run_bandwidth(spec)
            rows.append((cfg.bench_kind, result))
    _emit(cfg, bench_csv(rows))


def _run_probe(cfg: RunConfig) -> None:
    payload = {"probe": cfg.probe_kind, "seed": cfg.search.seed}
    if cfg.probe_kind == "tree-size":
        payload["nodes"] = tree_size_probe(cfg.search)
    else:
        rate, stats = games_per_second_probe(cfg.search)
        payload["playouts"] = stats.playouts
        payload["max_depth"] = stats.max_depth
        payload["nodes"] = stats.nodes
        if isinstance(cfg.search.budget, WallTime):
            # timing-based fields only for wall-time budgets, so playout-mode
            # output is byte-reproducible
            payload["playouts_per_sec"] = round(rate, 3)
    _emit(cfg, json.dumps(payload, indent=2) + "\n")


def main(cfg: RunConfig) -> int:
    """Dispatch a parsed RunConfig; returns the process exit code."""
    logging.basicConfig(level=cfg.log_level.upper())
    try:
        if cfg.command == "gtp":
            gtp_serve(cfg.search.with_(komi=cfg.komi))
        elif cfg.command == "selfplay":
            _run_selfplay(cfg)
        elif cfg.command == "sweep":
            _run_sweep(cfg)
        elif cfg.command == "bench":
            _run_bench(cfg)
        elif cfg.command == "probe":
            _run_probe(cfg)
        else:
            raise UsageError(f"unknown command {cfg.command!r}")
    except UsageError:
        raise
    except Exception as exc:
        print(f"parago {cfg.command}: error: {exc}", file=sys.stderr)
        return 2
    return 0


def entry(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        cfg = parse_args(argv)
    except UsageError as exc:
        print(f"parago: usage error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    try:
        return main(cfg)
    except UsageError as exc:
        print(f"parago: usage error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(entry())
