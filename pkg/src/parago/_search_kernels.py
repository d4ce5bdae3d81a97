"""Numba kernels for the shared UCT search tree.

The tree is a structure-of-arrays indexed by node id; node 0 is the root.
Every worker thread runs ``search_worker`` in one nogil call: descend by
UCB1 while adding virtual loss, expand leaves under the configured lock
discipline, play out on a thread-private board copy, then backpropagate and
remove the virtual loss.  All counter updates are atomic read-modify-write
(LLVM ``atomicrmw``), so increments are never lost even though selection may
observe counters mid-update.

Node storage uses per-thread arena slabs: a thread bumps only its own
cursor, and a child block becomes visible to other threads only through the
expansion-state publication protocol, so published nodes are never moved or
reclaimed while a search runs.
"""

import math

import numpy as np
from numba import njit

from . import _board_kernels as bk
from ._atomics import (
    atomic_add_i32,
    atomic_add_i64,
    atomic_cas_i32,
    atomic_load_i32_acquire,
    atomic_xchg_i32_release,
    sched_yield,
)

# expansion states
UNEXPANDED = 0
EXPANDING = 1
EXPANDED = 2

# lock modes
LOCK_LOCAL = 0
LOCK_FREE = 1

MOVE_PASS = -1
MOVE_NONE = -2

# per-thread stats slots (stride 16 in the tstats array)
TS_PLAYOUTS = 0
TS_MAX_DEPTH = 1
TS_LOCK_SPINS = 2
TS_EXPAND_SKIPS = 3
TS_STRIDE = 16

# Lock-free losers spin only briefly for the winner's publication (it is a
# handful of stores away); after that they play out from the node instead of
# waiting, which keeps oversubscribed hosts productive.
_LOSER_SPIN_LIMIT = 2_000


@njit(nogil=True, cache=True)
def select_child(visits, rew2, vloss, first, nch, node, c):
    """UCB1 child of ``node`` (absolute node id), virtual losses as losses.

    Score = reward / n_eff + c * sqrt(ln(parent n_eff) / n_eff) with
    n_eff = visits + virtual_loss.  Unvisited children score +inf and ties
    break to the lowest child index.
    """
    base = first[node]
    n = nch[node]
    pe = visits[node] + vloss[node]
    if pe < 1:
        pe = 1
    lg = math.log(pe)
    best = base
    best_score = -1e300
    for k in range(n):
        ch = base + k
        ne = visits[ch] + vloss[ch]
        if ne <= 0:
            score = math.inf
        else:
            score = (rew2[ch] * 0.5) / ne + c * math.sqrt(lg / ne)
        if score > best_score:
            best_score = score
            best = ch
    return best


@njit(nogil=True, cache=True)
def _build_children(cells, idx, data, visited, stack, capbuf, vstamp, nmove, blk):
    """Write the legal child moves (row-major plays, then pass) at ``blk``."""
    n2 = data[bk.D_SIZE] * data[bk.D_SIZE]
    cnt = 0
    for p in range(n2):
        if bk.move_code(cells, idx, data, p, False, visited, stack, capbuf, vstamp) == bk.LEGAL:
            nmove[blk + cnt] = p
            cnt += 1
    nmove[blk + cnt] = MOVE_PASS
    return cnt + 1


@njit(nogil=True, cache=True)
def expand_local(
    nstate, nlock, first, nch, nmove, npub, cursors, slab_hi, tid,
    cells, idx, data, visited, stack, capbuf, vstamp,
    node,
):
    """Per-node mutual exclusion: exactly one thread creates the children.

    Returns (node_is_expanded, spin_count).
    """
    spins = 0
    while atomic_cas_i32(nlock, node, 0, 1) != 0:
        spins += 1
    ok = True
    if atomic_load_i32_acquire(nstate, node) != EXPANDED:
        n2 = data[bk.D_SIZE] * data[bk.D_SIZE]
        cur = cursors[tid * 8]
        if slab_hi - cur < n2 + 1:
            ok = False  # arena slab exhausted; leave the node unexpanded
        else:
            cnt = _build_children(cells, idx, data, visited, stack, capbuf, vstamp, nmove, cur)
            first[node] = cur
            nch[node] = cnt
            cursors[tid * 8] = cur + cnt
            atomic_add_i32(npub, node, 1)
            atomic_xchg_i32_release(nstate, node, EXPANDED)
    atomic_xchg_i32_release(nlock, node, 0)
    return ok, spins


@njit(nogil=True, cache=True)
def expand_lockfree(
    nstate, nlock, first, nch, nmove, npub, cursors, slab_hi, tid,
    cells, idx, data, visited, stack, capbuf, vstamp,
    node,
):
    """Optimistic expansion: racers build candidate child blocks in their own
    arenas and a single compare-exchange on the expansion state picks the
    winner; losers abandon their uncommitted block and briefly wait for the
    winner's publication.

    Returns (node_is_expanded, spin_count).
    """
    if atomic_load_i32_acquire(nstate, node) != UNEXPANDED:
        # someone else already owns this expansion; skip the wasted build
        spins = 0
        while atomic_load_i32_acquire(nstate, node) != EXPANDED and spins < _LOSER_SPIN_LIMIT:
            spins += 1
        return atomic_load_i32_acquire(nstate, node) == EXPANDED, spins
    n2 = data[bk.D_SIZE] * data[bk.D_SIZE]
    cur = cursors[tid * 8]
    if slab_hi - cur < n2 + 1:
        return False, 0
    cnt = _build_children(cells, idx, data, visited, stack, capbuf, vstamp, nmove, cur)
    old = atomic_cas_i32(nstate, node, UNEXPANDED, EXPANDING)
    if old == UNEXPANDED:
        first[node] = cur
        nch[node] = cnt
        cursors[tid * 8] = cur + cnt
        atomic_add_i32(npub, node, 1)
        atomic_xchg_i32_release(nstate, node, EXPANDED)
        return True, 0
    spins = 0
    while atomic_load_i32_acquire(nstate, node) != EXPANDED and spins < _LOSER_SPIN_LIMIT:
        spins += 1
    return atomic_load_i32_acquire(nstate, node) == EXPANDED, spins


@njit(nogil=True, cache=True)
def backprop_path(visits, rew2, vloss, path, depth, credit_root2, vloss_size):
    """Add one visit along path[0..depth], alternating the credit each ply
    (half-point units), and take back the traversal's virtual loss."""
    cr = credit_root2
    for i in range(depth + 1):
        atomic_add_i32(visits, path[i], 1)
        atomic_add_i32(rew2, path[i], cr)
        if vloss_size != 0:
            atomic_add_i32(vloss, path[i], -vloss_size)
        cr = 2 - cr


@njit(nogil=True, cache=True)
def search_worker(
    visits, rew2, vloss, nstate, nlock, first, nch, nmove, npub,
    cursors, slab_his, tid, lock_mode,
    remaining, stop_flag, tstats,
    root_cells, root_idx, root_data,
    cells, idx, data, visited, stack, capbuf, perm, vstamp, path,
    rng_state,
    c_explore, vloss_size, expand_threshold, komi,
):
    size = root_data[bk.D_SIZE]
    n2 = size * size
    playout_cap = 3 * n2
    rs = rng_state[tid * 8 : tid * 8 + 1]
    slab_hi = slab_his[tid]
    path_cap = path.shape[0] - 1

    nplayouts = 0
    max_depth = 0
    tot_spins = 0
    skips = 0

    while True:
        if stop_flag[0] != 0:
            break
        if atomic_add_i64(remaining, 0, -1) <= 0:
            break
        bk.copy_state(root_cells, root_idx, root_data, cells, idx, data)
        node = 0
        depth = 0
        path[0] = 0
        atomic_add_i32(vloss, 0, vloss_size)
        while depth < path_cap:
            if data[bk.D_PASSES] >= 2:
                break  # terminal inside the tree; score it directly
            st = atomic_load_i32_acquire(nstate, node)
            if st == EXPANDED:
                ch = select_child(visits, rew2, vloss, first, nch, node, c_explore)
                atomic_add_i32(vloss, ch, vloss_size)
                depth += 1
                path[depth] = ch
                mv = nmove[ch]
                if mv < 0:
                    bk.apply_pass(data)
                else:
                    bk.move_code(cells, idx, data, mv, True, visited, stack, capbuf, vstamp)
                node = ch
            else:
                if visits[node] >= expand_threshold:
                    if lock_mode == LOCK_LOCAL:
                        ok, sp = expand_local(
                            nstate, nlock, first, nch, nmove, npub, cursors, slab_hi,
                            tid, cells, idx, data, visited, stack, capbuf, vstamp, node,
                        )
                    else:
                        ok, sp = expand_lockfree(
                            nstate, nlock, first, nch, nmove, npub, cursors, slab_hi,
                            tid, cells, idx, data, visited, stack, capbuf, vstamp, node,
                        )
                    tot_spins += sp
                    if ok and atomic_load_i32_acquire(nstate, node) == EXPANDED:
                        continue  # descend one step into the fresh children
                    skips += 1
                break
        r2 = bk.playout(cells, idx, data, visited, stack, capbuf, perm, vstamp, rs, komi, playout_cap)
        if depth % 2 == 0:
            credit_root = 2 - r2
        else:
            credit_root = r2
        backprop_path(visits, rew2, vloss, path, depth, credit_root, vloss_size)
        nplayouts += 1
        if depth > max_depth:
            max_depth = depth

    base = tid * TS_STRIDE
    tstats[base + TS_PLAYOUTS] = nplayouts
    tstats[base + TS_MAX_DEPTH] = max_depth
    tstats[base + TS_LOCK_SPINS] = tot_spins
    tstats[base + TS_EXPAND_SKIPS] = skips


# The race harness oversubscribes cores on purpose, so its barrier yields
# the timeslice after a short spin.  The ctypes pointer makes these two
# kernels uncacheable; they are small and compile quickly.
@njit(nogil=True, cache=False)
def _barrier_wait(bar, nthreads):
    # centralized phase barrier; bar[0] = arrival count, bar[1] = phase
    phase = atomic_add_i64(bar, 1, 0)
    arrived = atomic_add_i64(bar, 0, 1) + 1
    if arrived == nthreads:
        atomic_add_i64(bar, 0, -nthreads)
        atomic_add_i64(bar, 1, 1)
    else:
        spins = 0
        while atomic_add_i64(bar, 1, 0) == phase:
            spins += 1
            if spins > 200:
                sched_yield()
                spins = 0


@njit(nogil=True, cache=False)
def expand_race_worker(
    nstate, nlock, first, nch, nmove, npub,
    cursors, slab_his, tid, lock_mode, nthreads, reps, bar,
    cellsT, idxT, dataT, visitedT, stackT, capbufT, vstampT,
):
    """Stress harness: all threads race to expand node r, for r in 0..reps."""
    cells = cellsT[tid]
    idx = idxT[tid]
    data = dataT[tid]
    visited = visitedT[tid]
    stack = stackT[tid]
    capbuf = capbufT[tid]
    vstamp = vstampT[tid]
    slab_hi = slab_his[tid]
    for r in range(reps):
        _barrier_wait(bar, nthreads)
        if lock_mode == LOCK_LOCAL:
            expand_local(
                nstate, nlock, first, nch, nmove, npub, cursors, slab_hi,
                tid, cells, idx, data, visited, stack, capbuf, vstamp, r,
            )
        else:
            expand_lockfree(
                nstate, nlock, first, nch, nmove, npub, cursors, slab_hi,
                tid, cells, idx, data, visited, stack, capbuf, vstamp, r,
            )
        _barrier_wait(bar, nthreads)
