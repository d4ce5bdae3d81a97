"""Numba board kernels: rules state, legality, capture, scoring, playouts.

A position is three flat arrays so it can be copied with three memcpys and
handed to nogil kernels:

  cells: int8[size*size]      point colors (0 empty, 1 black, 2 white)
  idx:   int16[2*size*size]   empty-point list + reverse index
  data:  int64[...]           header, hash-history list, open-address table

The ``data`` header records the side to move, consecutive passes, prisoner
counts, move count, current Zobrist hash, and history bookkeeping; the
history list holds every distinct position hash seen since game start and
the open-addressing table gives O(1) superko membership tests.

Liberty checks use early-exit flood fills with a version-stamped ``visited``
array (no per-candidate clearing): a group that turns out to be captured has
necessarily been traversed in full, so its members fall out of the same
probe.  All kernels are ``nogil`` so search workers run truly in parallel.
"""

import numpy as np
from numba import njit

from .zobrist import TABLE as _ZOB
from .zobrist import TABLE_SALT as _SALT

EMPTY = 0
BLACK = 1
WHITE = 2

PASS = -1

# legality codes
LEGAL = 0
OCCUPIED = 1
SUICIDE = 2
SUPERKO = 3
FINISHED = 4

# data[] header slots
D_SIZE = 0
D_TO_MOVE = 1
D_PASSES = 2
D_PRIS_B = 3  # stones captured by black
D_PRIS_W = 4
D_MOVES = 5
D_HASH = 6
D_HIST_N = 7
D_EMP_N = 8
D_OVERFLOW = 9
D_HIST_CAP = 10
D_TAB_MASK = 11
D_HDR = 16

_MAX_EDGE = 19
_MIX = np.int64(0x2545F4914F6CDD1D)


def history_capacity(size: int) -> int:
    # full game (3*size^2 cap) + tree descent + playout, with slack
    return 12 * size * size + 32


def table_capacity(size: int) -> int:
    cap = 1
    while cap < 2 * history_capacity(size):
        cap *= 2
    return cap


def data_length(size: int) -> int:
    return D_HDR + history_capacity(size) + table_capacity(size)


def new_board_arrays(size: int):
    """Allocate and initialise the three state arrays for an empty board."""
    n2 = size * size
    cells = np.zeros(n2, dtype=np.int8)
    idx = np.zeros(2 * n2, dtype=np.int16)
    data = np.zeros(data_length(size), dtype=np.int64)
    data[D_SIZE] = size
    data[D_HIST_CAP] = history_capacity(size)
    data[D_TAB_MASK] = table_capacity(size) - 1
    board_clear(cells, idx, data)
    return cells, idx, data


@njit(nogil=True, cache=True)
def copy_state(src_cells, src_idx, src_data, dst_cells, dst_idx, dst_data):
    dst_cells[:] = src_cells
    dst_idx[:] = src_idx
    dst_data[:] = src_data


@njit(nogil=True, cache=True)
def _tab_has(data, h):
    mask = data[D_TAB_MASK]
    base = D_HDR + data[D_HIST_CAP]
    sv = h ^ _SALT
    s = (sv * _MIX) & mask
    while True:
        v = data[base + s]
        if v == 0:
            return False
        if v == sv:
            return True
        s = (s + 1) & mask


@njit(nogil=True, cache=True)
def _tab_add(data, h):
    mask = data[D_TAB_MASK]
    base = D_HDR + data[D_HIST_CAP]
    sv = h ^ _SALT
    s = (sv * _MIX) & mask
    while True:
        v = data[base + s]
        if v == sv:
            return False
        if v == 0:
            data[base + s] = sv
            return True
        s = (s + 1) & mask


@njit(nogil=True, cache=True)
def _hist_record(data, h):
    """Record the current position hash if it has not occurred before."""
    if _tab_add(data, h):
        n = data[D_HIST_N]
        if n < data[D_HIST_CAP]:
            data[D_HDR + n] = h
            data[D_HIST_N] = n + 1
        else:
            data[D_OVERFLOW] = 1


@njit(nogil=True, cache=True)
def board_clear(cells, idx, data):
    """Reset to an empty board, keeping size and capacity fields."""
    size = data[D_SIZE]
    n2 = size * size
    for p in range(n2):
        cells[p] = EMPTY
        idx[p] = p
        idx[n2 + p] = p
    data[D_TO_MOVE] = BLACK
    data[D_PASSES] = 0
    data[D_PRIS_B] = 0
    data[D_PRIS_W] = 0
    data[D_MOVES] = 0
    data[D_HASH] = 0
    data[D_HIST_N] = 0
    data[D_EMP_N] = n2
    data[D_OVERFLOW] = 0
    for i in range(D_HDR, data.shape[0]):
        data[i] = 0
    _hist_record(data, 0)


@njit(nogil=True, cache=True, inline="always")
def _zidx(p, size):
    return (p // size) * _MAX_EDGE + (p % size)


@njit(nogil=True, cache=True)
def _emp_add(idx, data, q):
    n2 = data[D_SIZE] * data[D_SIZE]
    n = data[D_EMP_N]
    idx[n] = q
    idx[n2 + q] = n
    data[D_EMP_N] = n + 1


@njit(nogil=True, cache=True)
def _emp_remove(idx, data, q):
    n2 = data[D_SIZE] * data[D_SIZE]
    pos = idx[n2 + q]
    last = data[D_EMP_N] - 1
    m = idx[last]
    idx[pos] = m
    idx[n2 + m] = pos
    data[D_EMP_N] = last
    idx[n2 + q] = -1


@njit(nogil=True, cache=True)
def _probe_group(cells, size, start, visited, stack, stamp, capbuf, capbase):
    """Liberty probe of the group at ``start`` with early exit.

    Returns -1 as soon as a liberty is found.  Otherwise the group was
    traversed in full: its member count is returned and the members are
    stored at capbuf[capbase:capbase+count].  Visited cells are marked with
    ``stamp``; a group that was fully traversed stays fully marked, so a
    repeated probe from another neighbor short-circuits correctly.
    """
    color = cells[start]
    stack[0] = start
    visited[start] = stamp
    n = 1
    head = 0
    while head < n:
        x = stack[head]
        head += 1
        r = x // size
        c = x % size
        for d in range(4):
            if d == 0:
                if r == 0:
                    continue
                q = x - size
            elif d == 1:
                if r == size - 1:
                    continue
                q = x + size
            elif d == 2:
                if c == 0:
                    continue
                q = x - 1
            else:
                if c == size - 1:
                    continue
                q = x + 1
            v = cells[q]
            if v == EMPTY:
                return -1
            if v == color and visited[q] != stamp:
                visited[q] = stamp
                stack[n] = q
                n += 1
    for k in range(n):
        capbuf[capbase + k] = stack[k]
    return n


@njit(nogil=True, cache=True)
def move_code(cells, idx, data, p, do_apply, visited, stack, capbuf, vstamp):
    """Classify a play at point ``p``; apply it when legal and requested.

    Returns LEGAL/OCCUPIED/SUICIDE/SUPERKO/FINISHED.  With do_apply=False
    the state is left untouched.
    """
    if data[D_PASSES] >= 2:
        return FINISHED
    if cells[p] != EMPTY:
        return OCCUPIED
    size = data[D_SIZE]
    me = data[D_TO_MOVE]
    opp = 3 - me

    cells[p] = me  # speculative placement
    vstamp[0] += 1
    stamp = vstamp[0]

    ncap = 0
    empty_nbr = False
    r = p // size
    c = p % size
    for d in range(4):
        if d == 0:
            if r == 0:
                continue
            q = p - size
        elif d == 1:
            if r == size - 1:
                continue
            q = p + size
        elif d == 2:
            if c == 0:
                continue
            q = p - 1
        else:
            if c == size - 1:
                continue
            q = p + 1
        v = cells[q]
        if v == EMPTY:
            empty_nbr = True
        elif v == opp and visited[q] != stamp:
            cnt = _probe_group(cells, size, q, visited, stack, stamp, capbuf, ncap)
            if cnt > 0:
                ncap += cnt

    if ncap == 0 and not empty_nbr:
        vstamp[0] += 1
        if _probe_group(cells, size, p, visited, stack, vstamp[0], capbuf, 0) > 0:
            cells[p] = EMPTY
            return SUICIDE

    h2 = data[D_HASH] ^ _ZOB[me - 1, _zidx(p, size)]
    for k in range(ncap):
        h2 ^= _ZOB[opp - 1, _zidx(capbuf[k], size)]
    # a position can only repeat once a capture has ever removed a stone
    if ncap > 0 or data[D_PRIS_B] + data[D_PRIS_W] > 0:
        if _tab_has(data, h2):
            cells[p] = EMPTY
            return SUPERKO

    if not do_apply:
        cells[p] = EMPTY
        return LEGAL

    for k in range(ncap):
        q = capbuf[k]
        cells[q] = EMPTY
        _emp_add(idx, data, q)
    if me == BLACK:
        data[D_PRIS_B] += ncap
    else:
        data[D_PRIS_W] += ncap
    _emp_remove(idx, data, p)
    data[D_HASH] = h2
    data[D_TO_MOVE] = opp
    data[D_PASSES] = 0
    data[D_MOVES] += 1
    _hist_record(data, h2)
    return LEGAL


@njit(nogil=True, cache=True)
def apply_pass(data):
    if data[D_PASSES] >= 2:
        return FINISHED
    data[D_TO_MOVE] = 3 - data[D_TO_MOVE]
    data[D_PASSES] += 1
    data[D_MOVES] += 1
    return LEGAL


@njit(nogil=True, cache=True)
def legal_codes(cells, idx, data, visited, stack, capbuf, vstamp, out):
    """Fill out[p] with the legality code of playing at p; return legal count."""
    n2 = data[D_SIZE] * data[D_SIZE]
    n = 0
    for p in range(n2):
        code = move_code(cells, idx, data, p, False, visited, stack, capbuf, vstamp)
        out[p] = code
        if code == LEGAL:
            n += 1
    return n


@njit(nogil=True, cache=True)
def area_counts(cells, size, marks, stack):
    """Tromp-Taylor areas: (black stones + black-only regions, same for white).

    ``marks`` is scratch (cleared here); callers may hand in any int buffer
    that is free at scoring time.
    """
    n2 = size * size
    black = 0
    white = 0
    for i in range(n2):
        marks[i] = 0
    for p in range(n2):
        v = cells[p]
        if v == BLACK:
            black += 1
        elif v == WHITE:
            white += 1
        elif marks[p] == 0:
            # flood the empty region, noting which colors border it
            stack[0] = p
            marks[p] = 1
            length = 1
            head = 0
            saw_b = False
            saw_w = False
            while head < length:
                q = stack[head]
                head += 1
                r = q // size
                c = q % size
                for d in range(4):
                    if d == 0:
                        if r == 0:
                            continue
                        t = q - size
                    elif d == 1:
                        if r == size - 1:
                            continue
                        t = q + size
                    elif d == 2:
                        if c == 0:
                            continue
                        t = q - 1
                    else:
                        if c == size - 1:
                            continue
                        t = q + 1
                    w = cells[t]
                    if w == EMPTY:
                        if marks[t] == 0:
                            marks[t] = 1
                            stack[length] = t
                            length += 1
                    elif w == BLACK:
                        saw_b = True
                    else:
                        saw_w = True
            if saw_b and not saw_w:
                black += length
            elif saw_w and not saw_b:
                white += length
    return black, white


@njit(nogil=True, cache=True, inline="always")
def _next_u64(rs):
    # splitmix64
    s = rs[0] + np.uint64(0x9E3779B97F4A7C15)
    rs[0] = s
    z = s
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@njit(nogil=True, cache=True, inline="always")
def _rand_below(rs, n):
    return np.int64(_next_u64(rs) % np.uint64(n))


@njit(nogil=True, cache=True)
def is_true_eye(cells, size, p, me):
    """Single-point true eye of ``me``: all orthogonals friendly, diagonals safe."""
    r = p // size
    c = p % size
    if r > 0 and cells[p - size] != me:
        return False
    if r < size - 1 and cells[p + size] != me:
        return False
    if c > 0 and cells[p - 1] != me:
        return False
    if c < size - 1 and cells[p + 1] != me:
        return False
    opp = 3 - me
    bad = 0
    edge = 0
    for dr in range(-1, 2, 2):
        for dc in range(-1, 2, 2):
            rr = r + dr
            cc = c + dc
            if rr < 0 or rr >= size or cc < 0 or cc >= size:
                edge += 1
            elif cells[rr * size + cc] == opp:
                bad += 1
    if edge > 0:
        return bad == 0
    return bad <= 1


@njit(nogil=True, cache=True)
def score_reward_halves(cells, data, for_player, komi, marks, stack):
    """Game outcome for ``for_player`` in half-points: 2 win, 1 draw, 0 loss."""
    size = data[D_SIZE]
    black, white = area_counts(cells, size, marks, stack)
    margin = black - white - komi
    if margin > 0.0:
        winner = BLACK
    elif margin < 0.0:
        winner = WHITE
    else:
        return 1
    if winner == for_player:
        return 2
    return 0


@njit(nogil=True, cache=True)
def playout(cells, idx, data, visited, stack, capbuf, perm, vstamp, rs, komi, move_cap):
    """Uniform random playout (eye-fills excluded) from the current position.

    Mutates the state in place and returns the outcome in half-points for the
    player to move at entry.
    """
    start = data[D_TO_MOVE]
    size = data[D_SIZE]
    done = 0
    while data[D_PASSES] < 2 and done < move_cap:
        me = data[D_TO_MOVE]
        ne = data[D_EMP_N]
        for k in range(ne):
            perm[k] = idx[k]
        played = False
        k = 0
        while k < ne:
            j = k + _rand_below(rs, ne - k)
            tmp = perm[k]
            perm[k] = perm[j]
            perm[j] = tmp
            p = perm[k]
            if not is_true_eye(cells, size, p, me):
                if move_code(cells, idx, data, p, True, visited, stack, capbuf, vstamp) == LEGAL:
                    played = True
                    break
            k += 1
        if not played:
            apply_pass(data)
        done += 1
    return score_reward_halves(cells, data, start, komi, capbuf, stack)
