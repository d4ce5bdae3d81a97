"""Straight-line reimplementation of the random playout policy.

Used as a statistical oracle: same rules (via oracle_go), same policy
(uniform over legal non-eye-filling moves, pass otherwise, 3*size^2 move
cap), independent code and RNG.
"""

import random

import oracle_go as og


def is_true_eye(grid, size, p, me):
    r, c = divmod(p, size)
    for q in og.neighbors(size, p):
        if grid[q] != me:
            return False
    opp = 3 - me
    bad = 0
    edge = 0
    for dr in (-1, 1):
        for dc in (-1, 1):
            rr, cc = r + dr, c + dc
            if not (0 <= rr < size and 0 <= cc < size):
                edge += 1
            elif grid[rr * size + cc] == opp:
                bad += 1
    return bad == 0 if edge > 0 else bad <= 1


def playout(pos: og.OraclePosition, rng: random.Random, komi: float) -> float:
    """Reward in {0, 0.5, 1} for the player to move at entry."""
    start = pos.to_move
    cap = 3 * pos.size * pos.size
    done = 0
    while pos.passes < 2 and done < cap:
        empties = [p for p in range(pos.size * pos.size) if pos.grid[p] == og.EMPTY]
        rng.shuffle(empties)
        chosen = None
        for p in empties:
            if is_true_eye(pos.grid, pos.size, p, pos.to_move):
                continue
            if og.move_status(pos, p) is None:
                chosen = p
                break
        pos = og.apply(pos, chosen)
        done += 1
    m = og.margin(pos, komi=komi)
    if m == 0:
        return 0.5
    winner = og.BLACK if m > 0 else og.WHITE
    return 1.0 if winner == start else 0.0
