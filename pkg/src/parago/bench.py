"""Microbenchmarks and search probes.

The arithmetic kernel is the multiply-add loop ``c[j] = a[j]*b[j] + c[j]``
over three arrays, run by N threads on disjoint contiguous chunks (padded to
cache-line boundaries) for a fixed number of passes.  With a=1 and b=2 every
element ends at exactly 2*repetitions, so the checksum doubles as a race and
dead-code detector.  Small arrays measure arithmetic throughput, arrays well
beyond the last-level cache measure memory bandwidth.

The probes instrument the engine itself at the second move of a game:
playouts per second under a wall-clock budget, and the size the search tree
reaches for a given budget.
"""

from __future__ import annotations

import logging
import threading
import time
from dataclasses import dataclass, field
from glob import glob
from typing import List, Optional, Sequence, Tuple

import numpy as np
from numba import njit

from .affinity import AffinityPolicy, compute_affinity_map, host_topology, pin_current_thread
from .board import Board, Move
from .mcts import SearchConfig, SearchStats
from .parallel import parallel_search, run_search

__all__ = [
    "KernelSpec",
    "BenchResult",
    "BenchError",
    "run_kernel",
    "run_bandwidth",
    "kernel_sweep",
    "bandwidth_sweep",
    "bench_csv",
    "BENCH_CSV_HEADER",
    "games_per_second_probe",
    "tree_size_probe",
    "second_move_position",
    "last_level_cache_bytes",
]

log = logging.getLogger(__name__)

BENCH_CSV_HEADER = "benchmark,threads,policy,element_type,ops_per_sec,bytes_per_sec,checksum_ok"

_CACHE_LINE_ELEMENTS = 16  # chunk boundaries aligned to 64B lines or better
_DEFAULT_BANDWIDTH_LENGTH = 1 << 26


class BenchError(RuntimeError):
    pass


@dataclass(frozen=True)
class KernelSpec:
    element_type: str = "float64"  # or "int32"
    array_length: int = 1 << 14
    repetitions: int = 1000
    threads: int = 1
    affinity: AffinityPolicy = AffinityPolicy.NONE

    def validate(self) -> None:
        if self.element_type not in ("float64", "int32"):
            raise ValueError("element_type must be float64 or int32")
        if self.array_length < 1:
            raise ValueError("array_length must be >= 1")
        if self.repetitions < 0:
            raise ValueError("repetitions must be >= 0")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")
        if self.element_type == "int32" and 2 * self.repetitions >= 2**31:
            raise ValueError("repetitions overflow int32 elements")

    @property
    def dtype(self):
        return np.float64 if self.element_type == "float64" else np.int32


@dataclass(frozen=True)
class BenchResult:
    ops_per_sec: float
    bytes_per_sec: float
    threads: int
    affinity: AffinityPolicy
    element_type: str
    checksum: float
    checksum_ok: bool
    elapsed_s: float

    def csv_row(self, benchmark: str) -> str:
        return (
            f"{benchmark},{self.threads},{self.affinity.value},{self.element_type},"
            f"{self.ops_per_sec:.6g},{self.bytes_per_sec:.6g},{int(self.checksum_ok)}"
        )


@njit(nogil=True, cache=True)
def _fma_f64(a, b, c, lo, hi, reps):
    for _ in range(reps):
        for j in range(lo, hi):
            c[j] = a[j] * b[j] + c[j]


@njit(nogil=True, cache=True)
def _fma_i32(a, b, c, lo, hi, reps):
    for _ in range(reps):
        for j in range(lo, hi):
            c[j] = a[j] * b[j] + c[j]


def _chunks(length: int, threads: int) -> List[Tuple[int, int]]:
    """Disjoint contiguous chunks with boundaries on cache-line multiples."""
    base = length // threads
    bounds = [0]
    for t in range(1, threads):
        cut = t * base
        cut -= cut % _CACHE_LINE_ELEMENTS
        bounds.append(min(cut, length))
    bounds.append(length)
    return [(bounds[i], bounds[i + 1]) for i in range(threads)]


def _pin_plan(spec: KernelSpec) -> Optional[List[int]]:
    if spec.affinity is AffinityPolicy.NONE:
        return None
    topo = host_topology()
    if spec.threads > topo.cores * topo.smt_ways:
        raise ValueError("oversubscribed: more threads than logical processors with pinning on")
    amap = compute_affinity_map(spec.threads, topo.cores, topo.smt_ways, spec.affinity)
    return [topo.os_cpu(i) for i in amap.assignments]


def _run_fma(spec: KernelSpec) -> BenchResult:
    spec.validate()
    dtype = spec.dtype
    a = np.ones(spec.array_length, dtype=dtype)
    b = np.full(spec.array_length, 2, dtype=dtype)
    c = np.zeros(spec.array_length, dtype=dtype)
    kernel = _fma_f64 if spec.element_type == "float64" else _fma_i32
    kernel(a, b, c, 0, 0, 0)  # compile outside the timed region

    cpu_ids = _pin_plan(spec)
    chunks = _chunks(spec.array_length, spec.threads)
    start = threading.Barrier(spec.threads + 1)
    done = threading.Barrier(spec.threads + 1)

    def worker(tid: int):
        if cpu_ids is not None:
            pin_current_thread(cpu_ids[tid])
        lo, hi = chunks[tid]
        start.wait()
        kernel(a, b, c, lo, hi, spec.repetitions)
        done.wait()

    threads = [threading.Thread(target=worker, args=(t,), daemon=True) for t in range(spec.threads)]
    for th in threads:
        th.start()
    start.wait()
    t0 = time.perf_counter()
    done.wait()
    elapsed = time.perf_counter() - t0
    for th in threads:
        th.join()

    expected = 2 * spec.repetitions
    if spec.element_type == "int32":
        ok = bool((c == expected).all())
        checksum = float(c.sum(dtype=np.int64))
    else:
        tol = spec.repetitions * np.spacing(float(max(expected, 1)))
        ok = bool((np.abs(c - float(expected)) <= tol).all())
        checksum = float(c.sum())
    if not ok:
        raise BenchError("kernel miscompiled/raced: checksum mismatch")

    ops = spec.array_length * spec.repetitions
    elsize = np.dtype(dtype).itemsize
    ops_per_sec = ops / elapsed if ops and elapsed > 0 else 0.0
    bytes_per_sec = 4 * elsize * ops / elapsed if ops and elapsed > 0 else 0.0
    return BenchResult(
        ops_per_sec=ops_per_sec,
        bytes_per_sec=bytes_per_sec,
        threads=spec.threads,
        affinity=spec.affinity,
        element_type=spec.element_type,
        checksum=checksum,
        checksum_ok=ok,
        elapsed_s=elapsed,
    )


def run_kernel(spec: KernelSpec) -> BenchResult:
    """Arithmetic-throughput run: ops/sec counts one multiply-add per element
    per pass, aggregated over all threads' chunks."""
    return _run_fma(spec)


def last_level_cache_bytes() -> int:
    """Best-effort LLC size of cpu0; 32 MiB when sysfs is unreadable."""
    best = 0
    try:
        for path in glob("/sys/devices/system/cpu/cpu0/cache/index*/size"):
            with open(path) as f:
                text = f.read().strip()
            if text.endswith("K"):
                size = int(text[:-1]) * 1024
            elif text.endswith("M"):
                size = int(text[:-1]) * 1024 * 1024
            else:
                size = int(text)
            best = max(best, size)
    except (OSError, ValueError):
        pass
    return best or (32 << 20)


def run_bandwidth(spec: Optional[KernelSpec] = None) -> BenchResult:
    """Memory-bandwidth run of the same kernel: 4 accesses per element per
    pass (read a, b, c and write c).  Arrays should exceed 4x the last-level
    cache; the default spec uses 2^26 float64 elements."""
    if spec is None:
        spec = KernelSpec(array_length=_DEFAULT_BANDWIDTH_LENGTH, repetitions=1)
    footprint = 3 * spec.array_length * np.dtype(spec.dtype).itemsize
    if footprint < 4 * last_level_cache_bytes():
        log.warning(
            "bandwidth arrays (%d MiB) fit within 4x LLC; results will be cache-resident",
            footprint >> 20,
        )
    return _run_fma(spec)


def kernel_sweep(
    threads_list: Sequence[int],
    policies: Sequence[AffinityPolicy],
    element_type: str = "float64",
    array_length: int = 1 << 14,
    repetitions: int = 1000,
) -> List[Tuple[KernelSpec, BenchResult]]:
    out = []
    for threads in threads_list:
        for policy in policies:
            spec = KernelSpec(element_type, array_length, repetitions, threads, policy)
            out.append((spec, run_kernel(spec)))
    return out


def bandwidth_sweep(
    threads_list: Sequence[int],
    policies: Sequence[AffinityPolicy],
    array_length: int = _DEFAULT_BANDWIDTH_LENGTH,
    repetitions: int = 1,
) -> List[Tuple[KernelSpec, BenchResult]]:
    out = []
    for threads in threads_list:
        for policy in policies:
            spec = KernelSpec("float64", array_length, repetitions, threads, policy)
            out.append((spec, run_bandwidth(spec)))
    return out


def bench_csv(rows: Sequence[Tuple[str, BenchResult]]) -> str:
    lines = [BENCH_CSV_HEADER]
    lines.extend(result.csv_row(name) for name, result in rows)
    return "\n".join(lines) + "\n"


def second_move_position(size: int = 9) -> Board:
    """Opening position after one fixed center move: the probes measure the
    search that produces the game's second move."""
    board = Board(size)
    return board.play(Move.play(size // 2, size // 2))


def games_per_second_probe(
    config: SearchConfig, position: Optional[Board] = None
) -> Tuple[float, SearchStats]:
    """Playouts completed per second while choosing the second move."""
    board = position if position is not None else second_move_position()
    move, stats = parallel_search(board, config)
    rate = stats.playouts / (stats.elapsed_ms / 1000.0) if stats.elapsed_ms > 0 else 0.0
    return rate, stats


def tree_size_probe(config: SearchConfig, position: Optional[Board] = None) -> int:
    """Number of nodes in the search tree after the second-move search."""
    board = position if position is not None else second_move_position()
    result = run_search(board, config)
    return result.stats.nodes
