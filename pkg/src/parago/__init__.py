"""parago: tree-parallel Monte Carlo tree search for small-board Go.

A shared-tree UCT engine with virtual loss (local-lock and lock-free
expansion variants), a self-play doubling-tournament harness with
confidence-interval statistics, thread-affinity scheduling policies, and
arithmetic/bandwidth microbenchmarks for studying how the search scales
on shared-memory multicore hosts.
"""

__version__ = "0.1.0"

from .affinity import (
    AffinityMap,
    AffinityPolicy,
    HostTopology,
    compute_affinity_map,
    host_topology,
    pin_current_thread,
)
from .bench import (
    BenchError,
    BenchResult,
    KernelSpec,
    bandwidth_sweep,
    bench_csv,
    games_per_second_probe,
    kernel_sweep,
    run_bandwidth,
    run_kernel,
    second_move_position,
    tree_size_probe,
)
from .board import (
    Board,
    Color,
    GameFinishedError,
    GameResult,
    GoError,
    IllegalMoveError,
    Move,
    Winner,
    apply_move,
    game_record_text,
    legal_moves,
    point_to_vertex,
    score,
    vertex_to_point,
)
from .gtp import GtpSession
from .mcts import (
    LockMode,
    Playouts,
    SearchConfig,
    SearchStats,
    SearchTree,
    WallTime,
    backpropagate,
    playout,
    search,
    select_child,
)
from .parallel import (
    SearchResult,
    expansion_race,
    parallel_search,
    run_metadata,
    run_search,
)
from .tournament import (
    EnginePairing,
    GameRecord,
    MatchStats,
    SweepPoint,
    confidence_interval,
    doubling_sweep,
    gtp_serve,
    play_game,
    run_match,
    sweep_csv,
)

__all__ = [
    "__version__",
    # board / rules
    "Board", "Color", "Winner", "Move", "GameResult",
    "GoError", "IllegalMoveError", "GameFinishedError",
    "legal_moves", "apply_move", "score",
    "point_to_vertex", "vertex_to_point", "game_record_text",
    # search
    "SearchConfig", "SearchStats", "SearchTree", "Playouts", "WallTime", "LockMode",
    "select_child", "playout", "backpropagate", "search",
    "SearchResult", "run_search", "parallel_search", "expansion_race", "run_metadata",
    # affinity
    "AffinityPolicy", "AffinityMap", "HostTopology",
    "compute_affinity_map", "host_topology", "pin_current_thread",
    # tournament
    "MatchStats", "EnginePairing", "GameRecord", "SweepPoint",
    "confidence_interval", "play_game", "run_match", "doubling_sweep", "sweep_csv",
    "gtp_serve", "GtpSession",
    # bench
    "KernelSpec", "BenchResult", "BenchError",
    "run_kernel", "run_bandwidth", "kernel_sweep", "bandwidth_sweep", "bench_csv",
    "games_per_second_probe", "tree_size_probe", "second_move_position",
]
