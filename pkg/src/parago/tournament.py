"""Self-play tournament referee: paired engines, alternating colors,
win rates with normal-approximation confidence bounds, doubling sweeps.

The headline experiment pits an engine with doubled resources (2x threads,
and in playout mode 2x playouts) against the single-resource version; the
resulting win rate is the *effective speedup* signal, as opposed to the raw
playouts-per-second *efficiency* measured by the benchmarks.  Draws count as
half a win (two draws = a loss plus a win).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

from .board import Board, Color, GameResult, Move, Winner, game_record_text, score
from .mcts import Playouts, SearchConfig, SearchStats, WallTime, _mix64
from .parallel import parallel_search

__all__ = [
    "Z_95",
    "confidence_interval",
    "MatchStats",
    "EnginePairing",
    "GameRecord",
    "play_game",
    "run_match",
    "SweepPoint",
    "doubling_sweep",
    "sweep_csv",
    "MATCH_CSV_HEADER",
    "gtp_serve",
]

log = logging.getLogger(__name__)

Z_95 = 1.96

MATCH_CSV_HEADER = "n_threads,games,wins,losses,draws,w,ci_low,ci_high"


def confidence_interval(
    wins: int, draws: int, games: int, z: float = Z_95
) -> Tuple[float, float, float]:
    """Win rate and its z-level confidence bounds, draws counted half.

    w = (wins + draws/2) / games; half-width h = z * sqrt(w(1-w)/games);
    the interval is clamped to [0, 1].
    """
    if games == 0:
        raise ValueError("empty sample")
    if wins < 0 or draws < 0 or wins + draws > games:
        raise ValueError("wins + draws must not exceed games")
    w = (wins + 0.5 * draws) / games
    h = z * math.sqrt(w * (1.0 - w) / games)
    return w, max(0.0, w - h), min(1.0, w + h)


@dataclass(frozen=True)
class MatchStats:
    games: int
    wins_a: int
    losses_a: int
    draws: int
    win_rate: float
    ci_low: float
    ci_high: float
    z: float = Z_95

    @classmethod
    def from_counts(cls, wins_a: int, losses_a: int, draws: int, z: float = Z_95) -> "MatchStats":
        games = wins_a + losses_a + draws
        w, lo, hi = confidence_interval(wins_a, draws, games, z)
        return cls(games, wins_a, losses_a, draws, w, lo, hi, z)

    @property
    def ci_excludes_even(self) -> bool:
        return self.ci_low > 0.5 or self.ci_high < 0.5


@dataclass(frozen=True)
class EnginePairing:
    engine_a: SearchConfig
    engine_b: SearchConfig
    games: int = 100
    komi: float = 6.0
    board_size: int = 9
    move_budget: Optional[object] = None  # overrides both engines when set
    alternate_colors: bool = True

    def validate(self) -> None:
        if self.games < 1:
            raise ValueError("games must be >= 1")
        self.engine_a.validate()
        self.engine_b.validate()


@dataclass
class GameRecord:
    moves: List[Move]
    result: GameResult
    a_color: Color
    stats_a: List[SearchStats] = field(default_factory=list)
    stats_b: List[SearchStats] = field(default_factory=list)
    forfeited_by: Optional[Color] = None

    def winner_is_a(self) -> Optional[bool]:
        if self.result.winner is Winner.DRAW:
            return None
        return int(self.result.winner) == int(self.a_color)

    def record_text(self, size: int) -> str:
        return game_record_text(self.moves, self.result, size)


def play_game(pairing: EnginePairing, a_plays: Color, seed: int) -> GameRecord:
    """Referee one game; engine A takes ``a_plays``; both sides alternate
    genmoves until two passes or the 3*size^2 move cap."""
    pairing.validate()
    board = Board(pairing.board_size)
    configs = {
        a_plays: pairing.engine_a,
        a_plays.opponent: pairing.engine_b,
    }
    moves: List[Move] = []
    stats_a: List[SearchStats] = []
    stats_b: List[SearchStats] = []
    cap = 3 * pairing.board_size * pairing.board_size
    ply = 0
    while not board.game_over and ply < cap:
        color = board.to_move
        cfg = configs[color]
        if pairing.move_budget is not None:
            cfg = cfg.with_(budget=pairing.move_budget)
        cfg = cfg.with_(komi=pairing.komi, seed=_mix64(seed ^ (ply * 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF))
        move, stats = parallel_search(board, cfg)
        (stats_a if color == a_plays else stats_b).append(stats)
        if not board.is_legal(move):
            # a rules/search bug, not a game outcome: forfeit and flag it
            log.error("engine playing %s produced illegal move %s; forfeiting", color.name, move)
            result = GameResult(
                winner=Winner(int(color.opponent)), margin=0.0, komi=pairing.komi
            )
            return GameRecord(moves, result, a_plays, stats_a, stats_b, forfeited_by=color)
        board = board.play(move)
        moves.append(move)
        ply += 1
    result = score(board, pairing.komi)
    return GameRecord(moves, result, a_plays, stats_a, stats_b)


def run_match(
    pairing: EnginePairing, seed: int = 0, keep_records: bool = False
) -> Tuple[MatchStats, List[GameRecord]]:
    """Play the full pairing; colors alternate game by game when enabled."""
    pairing.validate()
    wins = losses = draws = 0
    records: List[GameRecord] = []
    for g in range(pairing.games):
        a_color = Color.BLACK
        if pairing.alternate_colors and g % 2 == 1:
            a_color = Color.WHITE
        rec = play_game(pairing, a_color, seed=_mix64((seed << 1) ^ g))
        outcome = rec.winner_is_a()
        if outcome is None:
            draws += 1
        elif outcome:
            wins += 1
        else:
            losses += 1
        if keep_records:
            records.append(rec)
    return MatchStats.from_counts(wins, losses, draws), records


@dataclass(frozen=True)
class SweepPoint:
    n_threads: int
    stats: MatchStats

    def csv_row(self) -> str:
        s = self.stats
        return (
            f"{self.n_threads},{s.games},{s.wins_a},{s.losses_a},{s.draws},"
            f"{s.win_rate:.6f},{s.ci_low:.6f},{s.ci_high:.6f}"
        )


def doubling_sweep(
    thread_points: Sequence[int],
    games_per_point: int,
    per_thread_budget,
    board_size: int = 9,
    komi: float = 6.0,
    base_config: Optional[SearchConfig] = None,
    seed: int = 0,
    equal_strength: bool = False,
) -> List[SweepPoint]:
    """n-threads versus n/2-threads match at every point in ``thread_points``.

    With a ``Playouts`` budget each side receives budget*threads playouts per
    move (resources scale with the thread count); with ``WallTime`` both
    sides get the same clock and the extra threads are the doubled resource.
    A point of 1 is read as the 2-vs-1 pairing; other odd points are
    rejected.  ``equal_strength`` pits the n/2 configuration against itself
    (the null experiment).
    """
    base = base_config or SearchConfig()
    points: List[SweepPoint] = []
    for n in thread_points:
        if n == 1:
            hi, lo = 2, 1
        elif n >= 2 and n % 2 == 0:
            hi, lo = n, n // 2
        else:
            raise ValueError(f"sweep point {n} must be even (or 1 for the 2-vs-1 pairing)")

        def budget_for(threads: int):
            if isinstance(per_thread_budget, Playouts):
                return Playouts(per_thread_budget.count * threads)
            if isinstance(per_thread_budget, WallTime):
                return per_thread_budget
            raise TypeError("per_thread_budget must be Playouts or WallTime")

        engine_b = base.with_(threads=lo, budget=budget_for(lo))
        engine_a = engine_b if equal_strength else base.with_(threads=hi, budget=budget_for(hi))
        pairing = EnginePairing(
            engine_a=engine_a,
            engine_b=engine_b,
            games=games_per_point,
            komi=komi,
            board_size=board_size,
        )
        stats, _ = run_match(pairing, seed=_mix64(seed ^ (n * 0xD1B54A32D192ED03)))
        points.append(SweepPoint(n_threads=n, stats=stats))
    return points


def sweep_csv(points: Sequence[SweepPoint]) -> str:
    lines = [MATCH_CSV_HEADER]
    lines.extend(p.csv_row() for p in points)
    return "\n".join(lines) + "\n"


def gtp_serve(config: SearchConfig, instream=None, outstream=None) -> None:
    """Serve the engine over the Go Text Protocol on stdio (or given streams)."""
    from .gtp import GtpSession

    GtpSession(config).serve(instream, outstream)
