"""Thread-affinity policies: compact, balanced, scatter.

``compute_affinity_map`` is a pure function over an explicit
(cores, smt_ways) topology, so every policy is testable without the target
hardware; ``pin_current_thread`` applies a placement to the calling thread
where the OS supports it.  Logical processor ids are numbered
``core * smt_ways + smt_slot``; ``host_topology`` builds the translation to
the running host's OS cpu numbers from sysfs.

Policies: compact fills each core's SMT slots before touching the next core
(maximizes cache sharing), scatter round-robins threads across cores
(maximizes core utilization), balanced spreads threads so per-core counts
differ by at most one while keeping consecutive threads adjacent.
"""

from __future__ import annotations

import enum
import logging
import os
from dataclasses import dataclass
from glob import glob
from typing import List, Tuple

__all__ = [
    "AffinityPolicy",
    "AffinityMap",
    "compute_affinity_map",
    "HostTopology",
    "host_topology",
    "pin_current_thread",
]

log = logging.getLogger(__name__)


class AffinityPolicy(enum.Enum):
    COMPACT = "compact"
    BALANCED = "balanced"
    SCATTER = "scatter"
    NONE = "none"

    @classmethod
    def parse(cls, name: str) -> "AffinityPolicy":
        try:
            return cls(name.strip().lower())
        except ValueError:
            raise ValueError(f"unknown affinity policy {name!r}") from None


@dataclass(frozen=True)
class AffinityMap:
    """assignments[t] is the logical processor id of thread t."""

    assignments: Tuple[int, ...]
    topology: Tuple[int, int]  # (cores, smt_ways)

    def core_of(self, thread: int) -> int:
        return self.assignments[thread] // self.topology[1]

    def per_core_counts(self) -> List[int]:
        cores, smt = self.topology
        counts = [0] * cores
        for proc in self.assignments:
            counts[proc // smt] += 1
        return counts


def compute_affinity_map(
    threads: int, cores: int, smt_ways: int, policy: AffinityPolicy
) -> AffinityMap:
    """Deterministic thread-to-logical-processor assignment under ``policy``."""
    if cores < 1 or smt_ways < 1:
        raise ValueError("cores and smt_ways must be >= 1")
    if threads < 0:
        raise ValueError("threads must be >= 0")
    if policy is AffinityPolicy.NONE:
        return AffinityMap(assignments=(), topology=(cores, smt_ways))
    if threads > cores * smt_ways:
        raise ValueError(
            f"oversubscribed: {threads} threads > {cores} cores x {smt_ways} SMT"
        )
    ids: List[int] = []
    if policy is AffinityPolicy.COMPACT:
        # core t // smt fills completely before the next core gets a thread
        ids = [t for t in range(threads)]
    elif policy is AffinityPolicy.SCATTER:
        ids = [(t % cores) * smt_ways + (t // cores) for t in range(threads)]
    elif policy is AffinityPolicy.BALANCED:
        slot_used = [0] * cores
        for t in range(threads):
            core = (t * cores) // threads
            ids.append(core * smt_ways + slot_used[core])
            slot_used[core] += 1
    return AffinityMap(assignments=tuple(ids), topology=(cores, smt_ways))


@dataclass(frozen=True)
class HostTopology:
    cores: int
    smt_ways: int
    cpu_table: Tuple[Tuple[int, ...], ...]  # cpu_table[core][slot] -> OS cpu id

    def os_cpu(self, logical_id: int) -> int:
        core, slot = divmod(logical_id, self.smt_ways)
        row = self.cpu_table[core]
        return row[slot % len(row)]

    @property
    def logical_cpus(self) -> int:
        return sum(len(row) for row in self.cpu_table)


def host_topology() -> HostTopology:
    """Physical core / SMT layout of this host, from sysfs when available."""
    groups = {}
    try:
        for path in glob("/sys/devices/system/cpu/cpu[0-9]*/topology/core_id"):
            cpu = int(path.split("/cpu")[2].split("/")[0])
            with open(path) as f:
                core_id = int(f.read().strip())
            pkg_path = path.replace("core_id", "physical_package_id")
            with open(pkg_path) as f:
                pkg = int(f.read().strip())
            groups.setdefault((pkg, core_id), []).append(cpu)
    except OSError:
        groups = {}
    if not groups:
        n = os.cpu_count() or 1
        return HostTopology(cores=n, smt_ways=1, cpu_table=tuple((i,) for i in range(n)))
    table = tuple(tuple(sorted(cpus)) for _, cpus in sorted(groups.items()))
    smt = max(len(row) for row in table)
    return HostTopology(cores=len(table), smt_ways=smt, cpu_table=table)


def pin_current_thread(processor_id: int) -> bool:
    """Restrict the calling thread to one OS logical processor.

    Returns True when the pin took effect; on platforms without affinity
    support this logs a warning and reports False without failing.  An id
    the OS rejects raises OSError.
    """
    if not hasattr(os, "sched_setaffinity"):
        log.warning("thread pinning unsupported on this platform; continuing unpinned")
        return False
    ncpu = os.cpu_count() or 1
    if not (0 <= processor_id < ncpu):
        raise OSError(f"processor id {processor_id} out of range (host has {ncpu})")
    os.sched_setaffinity(0, {processor_id})
    return True
