"""Tree parallelization: many threads, one shared search tree, virtual loss.

``run_search`` spawns ``config.threads`` OS threads that all execute the
nogil search kernel against the same tree arrays.  Playout budgets are a
single shared atomic countdown, so the total is exact regardless of thread
count; wall-time budgets use a shared stop flag set by the coordinating
thread (each worker may finish the iteration it is in, so totals can
overshoot by at most one playout per thread).

Thread placement follows the configured affinity policy when the host
exposes enough logical processors; otherwise the search proceeds unpinned
and records that in the stats.
"""

from __future__ import annotations

import logging
import threading
import time
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from . import _board_kernels as bk
from . import _search_kernels as sk
from .affinity import AffinityPolicy, compute_affinity_map, host_topology, pin_current_thread
from .board import Board, GameFinishedError, Move
from .mcts import Playouts, SearchConfig, SearchStats, SearchTree, WallTime, _mix64

__all__ = [
    "SearchResult",
    "run_search",
    "parallel_search",
    "expansion_race",
    "run_metadata",
]

log = logging.getLogger(__name__)

_WALLTIME_SENTINEL = 1 << 62
_MAX_DEFAULT_CAPACITY = 24_000_000
_WALLTIME_PLAYOUTS_PER_MS = 80  # sizing overestimate, not a prediction


@dataclass
class SearchResult:
    move: Move
    stats: SearchStats
    tree: SearchTree


def _tree_capacity(board: Board, config: SearchConfig) -> int:
    n2 = board.size * board.size
    if config.max_nodes is not None:
        cap = config.max_nodes
    elif isinstance(config.budget, Playouts):
        # each playout expands at most one leaf, creating <= n2+1 children
        cap = (config.budget.count + 2) * (n2 + 1) + 64
        cap = min(cap, _MAX_DEFAULT_CAPACITY)
    else:
        est = int(config.budget.milliseconds * _WALLTIME_PLAYOUTS_PER_MS) + 512
        cap = min(est * (n2 + 1), _MAX_DEFAULT_CAPACITY)
    return max(cap, (n2 + 2) * config.threads + 1)


class _WorkerBuffers:
    """Thread-private board copy, scratch space, and descent path."""

    def __init__(self, board: Board, path_cap: int):
        n2 = board.size * board.size
        self.cells = np.zeros_like(board._cells)
        self.idx = np.zeros_like(board._idx)
        self.data = np.zeros_like(board._data)
        self.visited = np.zeros(n2, dtype=np.int64)
        self.stack = np.zeros(n2, dtype=np.int32)
        self.capbuf = np.zeros(n2, dtype=np.int32)
        self.perm = np.zeros(n2, dtype=np.int16)
        self.vstamp = np.zeros(1, dtype=np.int64)
        self.path = np.zeros(path_cap, dtype=np.int32)


def _resolve_pinning(config: SearchConfig) -> Tuple[Optional[list], dict]:
    """OS cpu id per thread under the policy, or None when pinning is off."""
    topo = host_topology()
    meta = {"cores": topo.cores, "smt": topo.smt_ways}
    if config.affinity is AffinityPolicy.NONE:
        return None, meta
    if config.threads > topo.cores * topo.smt_ways:
        log.warning(
            "affinity %s requested for %d threads but host has %d logical cpus; running unpinned",
            config.affinity.value, config.threads, topo.cores * topo.smt_ways,
        )
        return None, meta
    amap = compute_affinity_map(config.threads, topo.cores, topo.smt_ways, config.affinity)
    return [topo.os_cpu(i) for i in amap.assignments], meta


def run_search(board: Board, config: SearchConfig) -> SearchResult:
    """Run the (possibly parallel) search and keep the tree for inspection."""
    config.validate()
    if board.game_over:
        raise GameFinishedError()
    T = config.threads
    n2 = board.size * board.size
    tree = SearchTree(board.size, _tree_capacity(board, config), T)

    remaining = np.zeros(1, dtype=np.int64)
    stop_flag = np.zeros(1, dtype=np.int64)
    tstats = np.zeros(T * sk.TS_STRIDE, dtype=np.int64)
    rng_state = np.zeros(T * 8, dtype=np.uint64)
    for t in range(T):
        rng_state[t * 8] = np.uint64(_mix64((config.seed ^ t) & 0xFFFFFFFFFFFFFFFF))

    path_cap = 4 * n2 + 64
    buffers = [_WorkerBuffers(board, path_cap) for _ in range(T)]
    cpu_ids, topo_meta = _resolve_pinning(config)
    pin_results: List[bool] = [False] * T

    def kernel_args(tid: int):
        b = buffers[tid]
        return (
            tree.visits, tree.rew2, tree.vloss, tree.state, tree.lock,
            tree.first, tree.nch, tree.move, tree.npub,
            tree.cursors, tree.slab_hi, tid, config.lock_mode.kernel_code,
            remaining, stop_flag, tstats,
            board._cells, board._idx, board._data,
            b.cells, b.idx, b.data, b.visited, b.stack, b.capbuf, b.perm, b.vstamp, b.path,
            rng_state,
            float(config.exploration_c), config.virtual_loss_size,
            config.expansion_threshold, float(config.komi),
        )

    # compile before spawning so workers never contend on the jit lock
    sk.search_worker(*kernel_args(0))

    if isinstance(config.budget, Playouts):
        remaining[0] = config.budget.count
        deadline = None
    else:
        remaining[0] = _WALLTIME_SENTINEL
        deadline = config.budget.milliseconds / 1000.0

    def worker(tid: int):
        if cpu_ids is not None:
            try:
                pin_results[tid] = pin_current_thread(cpu_ids[tid])
            except OSError as exc:  # never abort a search over a pin failure
                log.warning("thread %d pin to cpu %s failed: %s", tid, cpu_ids[tid], exc)
        sk.search_worker(*kernel_args(tid))

    threads = [threading.Thread(target=worker, args=(t,), daemon=True) for t in range(T)]
    t0 = time.perf_counter()
    for th in threads:
        th.start()
    if deadline is not None:
        leftover = deadline - (time.perf_counter() - t0)
        if leftover > 0:
            time.sleep(leftover)
        stop_flag[0] = 1
    for th in threads:
        th.join()
    elapsed_ms = (time.perf_counter() - t0) * 1000.0

    per_thread = tuple(int(tstats[t * sk.TS_STRIDE + sk.TS_PLAYOUTS]) for t in range(T))
    spins = tuple(int(tstats[t * sk.TS_STRIDE + sk.TS_LOCK_SPINS]) for t in range(T))
    skips = sum(int(tstats[t * sk.TS_STRIDE + sk.TS_EXPAND_SKIPS]) for t in range(T))
    max_depth = max(int(tstats[t * sk.TS_STRIDE + sk.TS_MAX_DEPTH]) for t in range(T))

    move = _chosen_move(tree, board)
    stats = SearchStats(
        playouts=sum(per_thread),
        elapsed_ms=elapsed_ms,
        nodes=tree.node_count,
        max_depth=max_depth,
        chosen_move=move,
        per_thread_playouts=per_thread,
        lock_spins=spins,
        expansion_skips=skips,
        pinning_effective=cpu_ids is not None and all(pin_results),
    )
    return SearchResult(move=move, stats=stats, tree=tree)


def _chosen_move(tree: SearchTree, board: Board) -> Move:
    kids = list(tree.children(0))
    if kids:
        counts = tree.visits[kids]
        return tree.move_of(kids[int(np.argmax(counts))])
    # budget too small to expand the root: fall back to the first legal move
    return board.legal_moves()[0]


def parallel_search(board: Board, config: SearchConfig) -> Tuple[Move, SearchStats]:
    """Shared-tree search with ``config.threads`` workers; returns the most
    visited root child and the run statistics."""
    result = run_search(board, config)
    return result.move, result.stats


def run_metadata(config: SearchConfig, stats: SearchStats) -> dict:
    """Machine-readable run description (JSON-serializable)."""
    topo = host_topology()
    return {
        "threads": config.threads,
        "lock_mode": config.lock_mode.value,
        "affinity": config.affinity.value,
        "topology": {"cores": topo.cores, "smt": topo.smt_ways},
        "pinning_effective": stats.pinning_effective,
        "per_thread_playouts": list(stats.per_thread_playouts),
    }


@dataclass
class RaceOutcome:
    publications: np.ndarray  # per raced node
    child_counts: np.ndarray
    states: np.ndarray
    child_moves: list  # list of int arrays, one per raced node


def expansion_race(
    board: Board,
    threads: int,
    lock_mode,
    repetitions: int,
) -> RaceOutcome:
    """Stress the expansion discipline: ``threads`` workers race, barrier-
    synchronized, to expand the same fresh node, ``repetitions`` times.

    Returns the per-node publication counts and published child lists so
    callers can assert exactly-one publication and duplicate-free children.
    """
    n2 = board.size * board.size
    # raced nodes occupy ids 0..repetitions-1; slabs start above them
    per_slab = (max(repetitions, 2) // 2) * (n2 + 1) + n2 + 2
    capacity = repetitions + threads * per_slab + 1
    tree = SearchTree(board.size, capacity + 1, 1)  # reuse array layout only
    tree = _retarget_slabs(tree, repetitions, threads, per_slab)

    bar = np.zeros(2, dtype=np.int64)
    cellsT = np.tile(board._cells, (threads, 1))
    idxT = np.tile(board._idx, (threads, 1))
    dataT = np.tile(board._data, (threads, 1))
    visitedT = np.zeros((threads, n2), dtype=np.int64)
    stackT = np.zeros((threads, n2), dtype=np.int32)
    capbufT = np.zeros((threads, n2), dtype=np.int32)
    vstampT = np.zeros((threads, 1), dtype=np.int64)

    code = lock_mode.kernel_code

    def worker(tid: int):
        sk.expand_race_worker(
            tree.state, tree.lock, tree.first, tree.nch, tree.move, tree.npub,
            tree.cursors, tree.slab_hi, tid, code, threads, repetitions, bar,
            cellsT, idxT, dataT, visitedT, stackT, capbufT, vstampT,
        )

    # precompile with a zero-rep call so the race is not skewed by jit
    sk.expand_race_worker(
        tree.state, tree.lock, tree.first, tree.nch, tree.move, tree.npub,
        tree.cursors, tree.slab_hi, 0, code, 1, 0, bar,
        cellsT, idxT, dataT, visitedT, stackT, capbufT, vstampT,
    )

    workers = [threading.Thread(target=worker, args=(t,), daemon=True) for t in range(threads)]
    for th in workers:
        th.start()
    for th in workers:
        th.join()

    moves = []
    for r in range(repetitions):
        base = int(tree.first[r])
        moves.append(np.array(tree.move[base : base + int(tree.nch[r])]))
    return RaceOutcome(
        publications=tree.npub[:repetitions].copy(),
        child_counts=tree.nch[:repetitions].copy(),
        states=tree.state[:repetitions].copy(),
        child_moves=moves,
    )


def _retarget_slabs(tree: SearchTree, reserved: int, threads: int, per_slab: int) -> SearchTree:
    tree.threads = threads
    tree.slab_lo = np.array([reserved + t * per_slab for t in range(threads)], dtype=np.int64)
    tree.slab_hi = np.array([reserved + (t + 1) * per_slab for t in range(threads)], dtype=np.int64)
    tree.cursors = np.zeros(threads * 8, dtype=np.int64)
    tree.cursors[::8] = tree.slab_lo
    return tree
