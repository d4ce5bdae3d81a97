"""UCT search: configuration, node statistics, and the sequential entry point.

The search tree lives in flat numpy arrays (``SearchTree``) shared by every
worker thread; this module defines the tree view, the UCB1 child selection,
the random playout and the backup rule, and a ``search`` wrapper for the
single-threaded case.  Multi-threaded execution is in ``parago.parallel``;
both run the identical kernel, so one worker degenerates exactly to the
sequential algorithm.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import _board_kernels as bk
from . import _search_kernels as sk
from .affinity import AffinityPolicy
from .board import Board, GameFinishedError, Move, point_to_vertex

__all__ = [
    "Playouts",
    "WallTime",
    "LockMode",
    "SearchConfig",
    "SearchStats",
    "SearchTree",
    "select_child",
    "playout",
    "backpropagate",
    "search",
]


@dataclass(frozen=True)
class Playouts:
    """Fixed simulation budget, shared by all threads via an atomic countdown."""

    count: int


@dataclass(frozen=True)
class WallTime:
    """Per-move wall-clock budget in milliseconds."""

    milliseconds: float


class LockMode(enum.Enum):
    LOCAL_LOCK = "local"
    LOCK_FREE = "free"

    @property
    def kernel_code(self) -> int:
        return sk.LOCK_LOCAL if self is LockMode.LOCAL_LOCK else sk.LOCK_FREE


@dataclass(frozen=True)
class SearchConfig:
    threads: int = 1
    budget: object = field(default_factory=lambda: Playouts(1000))
    lock_mode: LockMode = LockMode.LOCK_FREE
    affinity: AffinityPolicy = AffinityPolicy.NONE
    exploration_c: float = 0.7
    virtual_loss_size: int = 1
    expansion_threshold: int = 1
    seed: int = 0
    komi: float = 6.0
    max_nodes: Optional[int] = None

    def validate(self) -> None:
        if not (1 <= self.threads <= 1024):
            raise ValueError("threads must be in 1..1024")
        if isinstance(self.budget, Playouts):
            if self.budget.count <= 0:
                raise ValueError("empty budget")
        elif isinstance(self.budget, WallTime):
            if self.budget.milliseconds <= 0:
                raise ValueError("empty budget")
        else:
            raise TypeError("budget must be Playouts or WallTime")
        if self.exploration_c <= 0:
            raise ValueError("exploration_c must be > 0")
        if self.virtual_loss_size < 1:
            raise ValueError("virtual_loss_size must be >= 1")
        if self.expansion_threshold < 1:
            raise ValueError("expansion_threshold must be >= 1")

    def with_(self, **kw) -> "SearchConfig":
        return replace(self, **kw)


@dataclass(frozen=True)
class SearchStats:
    """Per-search counters; CSV row is playouts,elapsed_ms,nodes,max_depth,chosen_move."""

    playouts: int
    elapsed_ms: float
    nodes: int
    max_depth: int
    chosen_move: Move
    per_thread_playouts: Tuple[int, ...] = ()
    lock_spins: Tuple[int, ...] = ()
    expansion_skips: int = 0
    pinning_effective: bool = False

    CSV_HEADER = "playouts,elapsed_ms,nodes,max_depth,chosen_move"

    def csv_row(self, size: int = 9) -> str:
        vertex = point_to_vertex(self.chosen_move.point, size)
        return f"{self.playouts},{self.elapsed_ms:.3f},{self.nodes},{self.max_depth},{vertex}"

    def deterministic_fields(self) -> tuple:
        """Everything except wall-clock time, for reproducibility checks."""
        return (
            self.playouts,
            self.nodes,
            self.max_depth,
            self.chosen_move,
            self.per_thread_playouts,
        )


class SearchTree:
    """Structure-of-arrays UCT tree; node 0 is the root.

    ``total_reward`` is stored in half-points (draw = 1) so all updates are
    integer atomics; the float view divides by two.
    """

    def __init__(self, board_size: int, capacity: int, threads: int):
        if capacity > 2**31 - 2:
            raise ValueError("tree capacity exceeds int32 indexing")
        self.board_size = board_size
        self.capacity = capacity
        self.threads = threads
        self.visits = np.zeros(capacity, dtype=np.int32)
        self.rew2 = np.zeros(capacity, dtype=np.int32)
        self.vloss = np.zeros(capacity, dtype=np.int32)
        self.state = np.zeros(capacity, dtype=np.int32)
        self.lock = np.zeros(capacity, dtype=np.int32)
        self.first = np.zeros(capacity, dtype=np.int32)
        self.nch = np.zeros(capacity, dtype=np.int32)
        self.move = np.full(capacity, sk.MOVE_NONE, dtype=np.int16)
        self.npub = np.zeros(capacity, dtype=np.int32)
        # per-thread arena slabs: [slab_lo[t], slab_hi[t]) with padded cursors
        slab = (capacity - 1) // threads
        if slab < 1:
            raise ValueError("capacity too small for thread count")
        self.slab_lo = np.array([1 + t * slab for t in range(threads)], dtype=np.int64)
        self.slab_hi = np.array([1 + (t + 1) * slab for t in range(threads)], dtype=np.int64)
        self.cursors = np.zeros(threads * 8, dtype=np.int64)
        self.cursors[::8] = self.slab_lo

    @property
    def node_count(self) -> int:
        return int(1 + (self.cursors[::8] - self.slab_lo).sum())

    def total_reward(self, i: int) -> float:
        return float(self.rew2[i]) * 0.5

    def children(self, i: int) -> range:
        if self.state[i] != sk.EXPANDED:
            return range(0)
        base = int(self.first[i])
        return range(base, base + int(self.nch[i]))

    def move_of(self, i: int) -> Optional[Move]:
        m = int(self.move[i])
        if m == sk.MOVE_NONE:
            return None
        if m == sk.MOVE_PASS:
            return Move.pass_()
        return Move.play(m // self.board_size, m % self.board_size)

    def walk(self):
        """Yield node ids reachable from the root, depth-first."""
        stack = [0]
        while stack:
            i = stack.pop()
            yield i
            stack.extend(self.children(i))

    def validate_structure(self, root_board: Board) -> int:
        """Post-search consistency walk; returns the number of reachable nodes.

        Checks single publication, child-move legality and distinctness, and
        that reachable allocated nodes account for the whole arena usage.
        """
        reachable = 0

        def visit(i: int, board: Board) -> int:
            nonlocal reachable
            reachable += 1
            state = int(self.state[i])
            if state != sk.EXPANDED:
                assert self.npub[i] == 0, f"unpublished node {i} has publications"
                return 0
            assert self.npub[i] == 1, f"node {i} published {self.npub[i]} times"
            kids = list(self.children(i))
            assert kids, f"expanded node {i} has no children"
            legal = board.legal_moves()
            moves = [self.move_of(k) for k in kids]
            assert len(set(moves)) == len(moves), f"duplicate children at {i}"
            assert set(moves) == set(legal), f"children != legal moves at {i}"
            for k in kids:
                visit(k, board.play(self.move_of(k)))
            return 0

        visit(0, root_board)
        assert reachable == self.node_count, (
            f"unreachable arena nodes: walked {reachable}, allocated {self.node_count}"
        )
        return reachable


def _mix64(x: int) -> int:
    """splitmix64 finalizer; used to derive decorrelated seeds."""
    x = (x + 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
    return x ^ (x >> 31)


def select_child(tree: SearchTree, node: int, c: float) -> int:
    """Index (among the node's children) of the UCB1-preferred child."""
    if tree.state[node] != sk.EXPANDED or tree.nch[node] < 1:
        raise ValueError("select on leaf")
    best = sk.select_child(tree.visits, tree.rew2, tree.vloss, tree.first, tree.nch, node, c)
    return int(best) - int(tree.first[node])


def playout(board: Board, seed: int, komi: float = 6.0) -> float:
    """One uniform random playout from ``board``; reward for the player to move.

    Returns 1.0 / 0.5 / 0.0 for win / draw / loss under area scoring.
    """
    n2 = board.size * board.size
    cells = board._cells.copy()
    idx = board._idx.copy()
    data = board._data.copy()
    visited = np.zeros(n2, dtype=np.int64)
    stack = np.zeros(n2, dtype=np.int32)
    capbuf = np.zeros(n2, dtype=np.int32)
    perm = np.zeros(n2, dtype=np.int16)
    vstamp = np.zeros(1, dtype=np.int64)
    rs = np.array([_mix64(seed)], dtype=np.uint64)
    halves = bk.playout(cells, idx, data, visited, stack, capbuf, perm, vstamp, rs, komi, 3 * n2)
    return halves / 2.0


def backpropagate(tree: SearchTree, path: Sequence[int], reward: float) -> None:
    """Add one visit along root-to-leaf ``path``, crediting ``reward`` to the
    root and the complement to alternating plies."""
    r2 = int(round(reward * 2))
    if not (0 <= r2 <= 2) or r2 != reward * 2:
        raise ValueError("reward must be one of 0, 0.5, 1")
    if len(path) < 1 or path[0] != 0:
        raise ValueError("path must run root -> leaf")
    arr = np.asarray(path, dtype=np.int32)
    sk.backprop_path(tree.visits, tree.rew2, tree.vloss, arr, len(path) - 1, r2, 0)


def search(board: Board, config: SearchConfig) -> Tuple[Move, SearchStats]:
    """Sequential UCT search; requires ``config.threads == 1``."""
    if config.threads != 1:
        raise ValueError("sequential search requires threads=1; use parallel_search")
    from .parallel import run_search

    result = run_search(board, config)
    return result.move, result.stats
