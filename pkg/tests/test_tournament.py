"""Referee tests: confidence intervals, game play, matches, doubling sweep."""

import math
import random

import mpmath
import numpy as np
import pytest

from parago.board import Board, Color, Winner
from parago.mcts import Playouts, SearchConfig, WallTime
from parago.tournament import (
    MATCH_CSV_HEADER,
    EnginePairing,
    MatchStats,
    SweepPoint,
    confidence_interval,
    doubling_sweep,
    play_game,
    run_match,
    sweep_csv,
)

mpmath.mp.dps = 50


def ci_oracle(wins, draws, games, z="1.96"):
    w = (mpmath.mpf(wins) + mpmath.mpf(draws) / 2) / games
    h = mpmath.mpf(z) * mpmath.sqrt(w * (1 - w) / games)
    return w, max(mpmath.mpf(0), w - h), min(mpmath.mpf(1), w + h)


class TestConfidenceInterval:
    def test_even_match(self):
        w, lo, hi = confidence_interval(50, 0, 100)
        assert w == 0.5
        assert lo == pytest.approx(0.402, abs=5e-4)
        assert hi == pytest.approx(0.598, abs=5e-4)

    def test_all_wins_degenerate_variance(self):
        w, lo, hi = confidence_interval(100, 0, 100)
        assert (w, lo, hi) == (1.0, 1.0, 1.0)

    def test_draws_count_half(self):
        w, lo, hi = confidence_interval(57, 2, 100)
        assert w == pytest.approx(0.58)
        ow, olo, ohi = ci_oracle(57, 2, 100)
        assert abs(lo - float(olo)) < 1e-12
        assert abs(hi - float(ohi)) < 1e-12
        assert hi == pytest.approx(0.58 + 0.0967, abs=2e-4)

    def test_against_oracle_random_triples(self):
        rng = random.Random(5)
        for _ in range(500):
            n = rng.randint(1, 5000)
            x = rng.randint(0, n)
            d = rng.randint(0, n - x)
            w, lo, hi = confidence_interval(x, d, n)
            ow, olo, ohi = ci_oracle(x, d, n)
            assert abs(w - float(ow)) < 1e-12
            assert abs(lo - float(olo)) < 1e-12
            assert abs(hi - float(ohi)) < 1e-12

    def test_quadrupling_games_halves_width_exactly(self):
        w1, lo1, hi1 = confidence_interval(30, 0, 80)
        w4, lo4, hi4 = confidence_interval(120, 0, 320)
        assert w1 == w4
        # the half-width itself halves exactly (power-of-two scaling commutes
        # with IEEE rounding through /n, sqrt, and *z)
        h1 = 1.96 * math.sqrt(w1 * (1 - w1) / 80)
        h4 = 1.96 * math.sqrt(w4 * (1 - w4) / 320)
        assert h1 == 2 * h4
        # the published bounds only differ by the final w +/- h rounding
        assert hi1 - w1 == pytest.approx(2 * (hi4 - w4), rel=1e-14)
        assert w1 - lo1 == pytest.approx(2 * (w4 - lo4), rel=1e-14)

    def test_empty_sample(self):
        with pytest.raises(ValueError, match="empty sample"):
            confidence_interval(0, 0, 0)
        with pytest.raises(ValueError):
            confidence_interval(5, 6, 10)

    def test_estimator_mean_and_variance(self):
        # w over simulated matches behaves as E(w)=p, Var(w)=p(1-p)/n
        rng = np.random.default_rng(11)
        n = 10_000
        matches = 1_000
        for p in (0.3, 0.5, 0.7):
            ws = rng.binomial(n, p, size=matches) / n
            assert abs(ws.mean() - p) < 0.01
            target = p * (1 - p) / n
            assert abs(ws.var(ddof=1) - target) < 0.1 * target

    def test_coverage_near_nominal(self):
        rng = np.random.default_rng(7)
        p = 0.6
        n = 100
        hits = 0
        sims = 1_000
        for _ in range(sims):
            x = int(rng.binomial(n, p))
            _, lo, hi = confidence_interval(x, 0, n)
            if lo <= p <= hi:
                hits += 1
        assert 0.93 <= hits / sims <= 0.97


class TestMatchStats:
    def test_from_counts_invariants(self):
        s = MatchStats.from_counts(12, 6, 2)
        assert s.games == 20
        assert s.wins_a + s.losses_a + s.draws == s.games
        assert 0.0 <= s.ci_low <= s.win_rate <= s.ci_high <= 1.0

    def test_csv_row_shape(self):
        p = SweepPoint(4, MatchStats.from_counts(30, 18, 2))
        row = p.csv_row()
        assert row.split(",")[0] == "4"
        assert len(row.split(",")) == len(MATCH_CSV_HEADER.split(","))


def tiny_cfg(threads=1, playouts=20, **kw):
    return SearchConfig(threads=threads, budget=Playouts(playouts), **kw)


class TestPlayGame:
    def test_smoke_single_playout_engines(self):
        pairing = EnginePairing(
            engine_a=tiny_cfg(playouts=1),
            engine_b=tiny_cfg(playouts=1),
            games=1,
            komi=6.0,
            board_size=5,
        )
        rec = play_game(pairing, Color.BLACK, seed=3)
        assert rec.result.winner in (Winner.BLACK, Winner.WHITE, Winner.DRAW)
        assert rec.forfeited_by is None
        assert len(rec.moves) >= 2
        assert len(rec.stats_a) + len(rec.stats_b) == len(rec.moves)

    def test_game_respects_move_cap(self):
        pairing = EnginePairing(
            engine_a=tiny_cfg(playouts=2),
            engine_b=tiny_cfg(playouts=2),
            games=1,
            board_size=3,
        )
        rec = play_game(pairing, Color.BLACK, seed=1)
        assert len(rec.moves) <= 3 * 9

    def test_record_text_emitted(self):
        pairing = EnginePairing(
            engine_a=tiny_cfg(playouts=1), engine_b=tiny_cfg(playouts=1), games=1, board_size=5
        )
        rec = play_game(pairing, Color.BLACK, seed=4)
        text = rec.record_text(5)
        assert text.splitlines()[-1].startswith("RE ")
        assert text.splitlines()[0].startswith("B ")

    def test_move_budget_override(self):
        pairing = EnginePairing(
            engine_a=tiny_cfg(playouts=999),
            engine_b=tiny_cfg(playouts=999),
            games=1,
            board_size=5,
            move_budget=Playouts(3),
        )
        rec = play_game(pairing, Color.BLACK, seed=2)
        assert all(s.playouts == 3 for s in rec.stats_a + rec.stats_b)


class TestRunMatch:
    def test_color_alternation_balanced(self):
        pairing = EnginePairing(
            engine_a=tiny_cfg(playouts=1),
            engine_b=tiny_cfg(playouts=1),
            games=9,
            board_size=3,
        )
        stats, records = run_match(pairing, seed=6, keep_records=True)
        as_black = sum(1 for r in records if r.a_color is Color.BLACK)
        as_white = len(records) - as_black
        assert abs(as_black - as_white) <= 1
        assert stats.games == 9

    def test_identical_engines_hover_at_half(self):
        # same config and seeds with colors swapped across games: the match
        # CI must contain 0.5 (the statistical oracle is the CI itself)
        pairing = EnginePairing(
            engine_a=tiny_cfg(playouts=16, seed=0),
            engine_b=tiny_cfg(playouts=16, seed=0),
            games=200,
            komi=6.0,
            board_size=5,
        )
        stats, _ = run_match(pairing, seed=12)
        assert stats.ci_low <= 0.5 <= stats.ci_high

    def test_gross_budget_mismatch_decides_match(self):
        # 2000 playouts vs 50 on 5x5: the bigger budget must win the majority
        pairing = EnginePairing(
            engine_a=tiny_cfg(playouts=2000),
            engine_b=tiny_cfg(playouts=50),
            games=50,
            komi=6.0,
            board_size=5,
        )
        stats, _ = run_match(pairing, seed=8)
        assert stats.wins_a + 0.5 * stats.draws > stats.games / 2


class TestDoublingSweep:
    def test_null_experiment_contains_half(self):
        points = doubling_sweep(
            [2],
            games_per_point=120,
            per_thread_budget=Playouts(12),
            board_size=5,
            komi=6.0,
            seed=3,
            equal_strength=True,
        )
        s = points[0].stats
        assert s.ci_low <= 0.5 <= s.ci_high

    def test_csv_format(self):
        points = doubling_sweep(
            [2, 4],
            games_per_point=4,
            per_thread_budget=Playouts(4),
            board_size=3,
            seed=1,
        )
        text = sweep_csv(points)
        lines = text.strip().splitlines()
        assert lines[0] == MATCH_CSV_HEADER
        assert len(lines) == 3
        assert lines[1].split(",")[0] == "2"
        assert lines[2].split(",")[0] == "4"

    def test_odd_points_rejected(self):
        with pytest.raises(ValueError):
            doubling_sweep([3], 2, Playouts(2), board_size=3)

    def test_point_one_is_two_vs_one(self):
        points = doubling_sweep([1], 2, Playouts(2), board_size=3, seed=5)
        assert points[0].n_threads == 1
        assert points[0].stats.games == 2

    def test_walltime_budget_shared(self):
        points = doubling_sweep(
            [2],
            games_per_point=1,
            per_thread_budget=WallTime(30),
            board_size=3,
            seed=2,
        )
        assert points[0].stats.games == 1
