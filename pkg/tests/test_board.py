"""Rules engine tests, cross-checked against the brute-force oracle."""

import itertools
import random

import numpy as np
import pytest

import oracle_go as og
from parago import (
    Board,
    Color,
    GameFinishedError,
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


def play_seq(size, points):
    """Apply a list of (row, col) / None moves starting from an empty board."""
    b = Board(size)
    for pt in points:
        b = b.play(Move.pass_() if pt is None else Move.play(*pt))
    return b


class TestLegalMoves:
    def test_empty_9x9_has_82_moves(self):
        assert len(Board(9).legal_moves()) == 82

    def test_row_major_order_then_pass(self):
        moves = Board(3).legal_moves()
        assert moves[-1].is_pass
        points = [m.point for m in moves[:-1]]
        assert points == sorted(points)

    def test_finished_game_rejects_queries(self):
        b = play_seq(5, [None, None])
        with pytest.raises(GameFinishedError):
            b.legal_moves()
        with pytest.raises(IllegalMoveError) as e:
            b.play(Move.play(0, 0))
        assert e.value.reason == "finished"

    def test_ko_recapture_excluded(self):
        # Build the classic ko shape, B captures at (2,3); the immediate
        # White recapture at (2,2) would recreate the previous position.
        b = play_seq(
            5,
            [
                (2, 1), (1, 3),
                (1, 2), (3, 3),
                (3, 2), (2, 4),
                (4, 4), (2, 2),  # W takes the ko point
                (2, 3),          # B captures the ko stone
            ],
        )
        assert b.to_move is Color.WHITE
        assert b.stone_at(2, 2) is Color.EMPTY
        assert b.move_legality(Move.play(2, 2)) == "superko"
        assert Move.play(2, 2) not in b.legal_moves()
        # oracle agrees, reached by replaying and hashing every position
        pos = og.initial(5)
        for pt in [(2, 1), (1, 3), (1, 2), (3, 3), (3, 2), (2, 4), (4, 4), (2, 2), (2, 3)]:
            pos = og.apply(pos, pt[0] * 5 + pt[1])
        assert og.move_status(pos, 2 * 5 + 2) == "superko"


class TestApplyMove:
    def test_pass_flips_player_only(self):
        b = Board(9)
        b2 = b.play(Move.pass_())
        assert np.array_equal(b2.grid, b.grid)
        assert b2.to_move is Color.WHITE
        assert b2.consecutive_passes == 1

    def test_capture_on_diamond(self):
        # White stone in the center of a 5-point diamond, one liberty left.
        b = play_seq(5, [(1, 2), (2, 2), (3, 2), (4, 4), (2, 1)])
        assert b.to_move is Color.WHITE
        b = b.play(Move.pass_())
        captured = b.play(Move.play(2, 3))
        assert captured.stone_at(2, 2) is Color.EMPTY
        assert captured.prisoners[Color.BLACK] == 1
        assert captured.prisoners[Color.WHITE] == 0
        # flood-fill oracle on the same sequence
        pos = og.initial(5)
        for pt in [(1, 2), (2, 2), (3, 2), (4, 4), (2, 1), None, (2, 3)]:
            pos = og.apply(pos, None if pt is None else pt[0] * 5 + pt[1])
        assert pos.grid[2 * 5 + 2] == og.EMPTY
        assert pos.prisoners_black == 1

    def test_suicide_rejected(self):
        # Black playing inside White's eye at (0,0) captures nothing and dies.
        b = play_seq(3, [(2, 2), (0, 1), (2, 1), (1, 0)])
        assert b.to_move is Color.BLACK
        assert b.move_legality(Move.play(0, 0)) == "suicide"
        with pytest.raises(IllegalMoveError) as e:
            b.play(Move.play(0, 0))
        assert e.value.reason == "suicide"

    def test_occupied_rejected(self):
        b = play_seq(5, [(2, 2)])
        assert b.move_legality(Move.play(2, 2)) == "occupied"

    def test_play_returns_new_board(self):
        b = Board(5)
        b2 = b.play(Move.play(0, 0))
        assert b.stone_at(0, 0) is Color.EMPTY
        assert b2.stone_at(0, 0) is Color.BLACK
        assert b2.move_count == b.move_count + 1

    def test_stone_conservation_random_games(self):
        rng = random.Random(7)
        for _ in range(10):
            b = Board(5)
            for _ in range(60):
                if b.game_over:
                    break
                moves = b.legal_moves()
                m = rng.choice(moves)
                before = int((b.grid != 0).sum())
                pris_before = sum(b.prisoners.values())
                b = b.play(m)
                after = int((b.grid != 0).sum())
                captured = sum(b.prisoners.values()) - pris_before
                if m.is_pass:
                    assert after == before
                else:
                    assert after == before + 1 - captured

    def test_superko_never_repeats_positions(self):
        rng = random.Random(11)
        for _ in range(5):
            b = Board(4)
            seen = {b.grid.tobytes()}
            for _ in range(48):
                if b.game_over:
                    break
                plays = [m for m in b.legal_moves() if not m.is_pass]
                if not plays:
                    break
                b = b.play(rng.choice(plays))
                key = b.grid.tobytes()
                assert key not in seen
                seen.add(key)


class TestScoring:
    def test_empty_board_komi_decides(self):
        result = score(Board(9), komi=6.0)
        assert result.winner is Winner.WHITE
        assert result.margin == -6.0

    def test_full_black_grid(self):
        grid = np.full((9, 9), int(Color.BLACK), dtype=np.int8)
        result = score(Board.from_grid(grid), komi=6.0)
        assert result.winner is Winner.BLACK
        assert result.margin == 75.0

    def test_asymmetric_enclosures_match_oracle(self):
        # Black walls off two points, White one; margin frozen from the
        # independent region-enumeration oracle (3 + 2) - (2 + 1) = +2.
        grid = np.array(
            [
                [0, 2, 1],  # row 0: white-territory corner at (0,0)
                [2, 1, 0],  # row 1
                [0, 1, 0],  # row 2: (2,0) is a neutral point
            ],
            dtype=np.int8,
        )
        flat = tuple(int(v) for v in grid.reshape(-1))
        assert og.grid_is_legal(flat, 3)
        assert og.margin(flat, 3, komi=0.0) == 2.0
        result = score(Board.from_grid(grid), komi=0.0)
        assert result.margin == 2.0
        assert result.winner is Winner.BLACK

    def test_all_3x3_grids_against_oracle(self):
        # Exhaustive agreement on every legal 3x3 stone arrangement.
        boards = 0
        for combo in itertools.product((0, 1, 2), repeat=9):
            if not og.grid_is_legal(combo, 3):
                continue
            boards += 1
            ob, ow = og.area_score(combo, 3)
            grid = np.array(combo, dtype=np.int8).reshape(3, 3)
            result = score(Board.from_grid(grid), komi=0.0)
            assert result.margin == float(ob - ow), combo
        assert boards > 10_000

    def test_draw_iff_zero_margin(self):
        grid = np.zeros((4, 4), dtype=np.int8)
        grid[0, 0] = Color.BLACK
        grid[3, 3] = Color.WHITE
        # one stone each, rest neutral: margin 0 at komi 0
        result = score(Board.from_grid(grid), komi=0.0)
        assert result.winner is Winner.DRAW
        assert result.margin == 0.0


class TestOracleEquivalence:
    def enumerate_and_compare(self, size, depth):
        """Walk every move path to `depth`, comparing engine and oracle."""
        n2 = size * size
        checked = [0]

        def recurse(board, pos, d):
            engine_over = board.game_over
            assert engine_over == (pos.passes >= 2)
            if engine_over:
                with pytest.raises(GameFinishedError):
                    board.legal_moves()
                return
            engine_legal = {m.point for m in board.legal_moves() if not m.is_pass}
            for p in range(n2):
                status = og.move_status(pos, p)
                point = divmod(p, size)
                assert (point in engine_legal) == (status is None), (d, point, status)
                if status is not None:
                    assert board.move_legality(Move.play(*point)) == status
            assert score(board, komi=0.0).margin == og.margin(pos, komi=0.0)
            checked[0] += 1
            if d == depth:
                return
            for point in sorted(engine_legal) + [None]:
                mv = Move.pass_() if point is None else Move.play(*point)
                nxt = board.play(mv)
                npos = og.apply(pos, None if point is None else point[0] * size + point[1])
                assert nxt.to_move == npos.to_move
                assert nxt.consecutive_passes == npos.passes
                assert tuple(int(v) for v in nxt.grid.reshape(-1)) == npos.grid
                assert nxt.prisoners[Color.BLACK] == npos.prisoners_black
                assert nxt.prisoners[Color.WHITE] == npos.prisoners_white
                recurse(nxt, npos, d + 1)

        recurse(Board(size), og.initial(size), 0)
        return checked[0]

    def test_3x3_exhaustive_depth_3(self):
        assert self.enumerate_and_compare(3, 3) > 100


class TestFormats:
    def test_vertex_roundtrip(self):
        assert point_to_vertex((4, 4), 9) == "E5"
        assert point_to_vertex((0, 0), 9) == "A1"
        assert point_to_vertex((8, 8), 9) == "J9"  # column 'I' is skipped
        assert point_to_vertex(None, 9) == "pass"
        assert vertex_to_point("e5", 9) == (4, 4)
        assert vertex_to_point("PASS", 9) is None
        with pytest.raises(ValueError):
            vertex_to_point("K1", 9)

    def test_game_record_text(self):
        moves = [Move.play(4, 4), Move.pass_(), Move.play(2, 6)]
        b = Board(9)
        for m in moves:
            b = b.play(m)
        result = score(b, komi=6.0)
        text = game_record_text(moves, result, 9)
        lines = text.splitlines()
        assert lines[0] == "B E5"
        assert lines[1] == "W pass"
        assert lines[2] == "B G3"
        assert lines[3].startswith("RE ")

    def test_module_level_ops(self):
        b = Board(5)
        assert len(legal_moves(b)) == 26
        b2 = apply_move(b, Move.play(1, 1))
        assert b2.stone_at(1, 1) is Color.BLACK
