"""Go rules engine: boards, moves, legality, Tromp-Taylor area scoring.

Chinese (area) rules as used by the search and the tournament referee:
suicide is forbidden, whole-board position repetition is forbidden
(positional superko, 64-bit Zobrist hashing), two consecutive passes end
the game, and score = own stones + empty regions bordering only one color.

Boards are value-semantic snapshots: ``play`` returns a new board and never
mutates the receiver, so a board may be shared freely between threads.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, List, Optional, Tuple

import numpy as np

from . import _board_kernels as bk
from . import zobrist

__all__ = [
    "Color",
    "Winner",
    "Move",
    "Board",
    "GameResult",
    "GoError",
    "IllegalMoveError",
    "GameFinishedError",
    "legal_moves",
    "apply_move",
    "score",
    "point_to_vertex",
    "vertex_to_point",
    "game_record_text",
]

COLUMN_LETTERS = "ABCDEFGHJKLMNOPQRST"  # GTP convention: no 'I'


class Color(enum.IntEnum):
    EMPTY = 0
    BLACK = 1
    WHITE = 2

    @property
    def opponent(self) -> "Color":
        if self is Color.EMPTY:
            raise ValueError("EMPTY has no opponent")
        return Color.WHITE if self is Color.BLACK else Color.BLACK


class Winner(enum.IntEnum):
    DRAW = 0
    BLACK = 1
    WHITE = 2


class GoError(Exception):
    """Base class for rules-engine errors."""


class IllegalMoveError(GoError):
    """A move violated a rule; ``reason`` is one of occupied/suicide/superko/finished."""

    def __init__(self, reason: str, move: Optional["Move"] = None):
        self.reason = reason
        self.move = move
        super().__init__(f"illegal move: {reason}" + (f" ({move})" if move else ""))


class GameFinishedError(GoError):
    def __init__(self):
        super().__init__("game finished")


_REASONS = {
    bk.OCCUPIED: "occupied",
    bk.SUICIDE: "suicide",
    bk.SUPERKO: "superko",
    bk.FINISHED: "finished",
}


@dataclass(frozen=True)
class Move:
    """A play at (row, col) or a pass (``point is None``)."""

    point: Optional[Tuple[int, int]]

    @classmethod
    def play(cls, row: int, col: int) -> "Move":
        return cls((row, col))

    @classmethod
    def pass_(cls) -> "Move":
        return cls(None)

    @property
    def is_pass(self) -> bool:
        return self.point is None

    def __repr__(self) -> str:
        if self.is_pass:
            return "Move(pass)"
        return f"Move({self.point[0]},{self.point[1]})"


@dataclass(frozen=True)
class GameResult:
    """Area-scoring outcome; margin is black area - white area - komi."""

    winner: Winner
    margin: float
    komi: float

    @property
    def re_string(self) -> str:
        """Result in game-record form: ``B+3``, ``W+6.5`` or ``0`` for a draw."""
        if self.winner is Winner.DRAW:
            return "0"
        side = "B" if self.winner is Winner.BLACK else "W"
        return f"{side}+{abs(self.margin):g}"


def point_to_vertex(point: Optional[Tuple[int, int]], size: int) -> str:
    """GTP vertex for a point; row 0 is the bottom row ('A1' = (0, 0))."""
    if point is None:
        return "pass"
    row, col = point
    return f"{COLUMN_LETTERS[col]}{row + 1}"


def vertex_to_point(vertex: str, size: int) -> Optional[Tuple[int, int]]:
    v = vertex.strip().upper()
    if v == "PASS":
        return None
    col = COLUMN_LETTERS.index(v[0])
    row = int(v[1:]) - 1
    if not (0 <= row < size and 0 <= col < size):
        raise ValueError(f"vertex {vertex!r} off a {size}x{size} board")
    return (row, col)


class Board:
    """Immutable-by-convention snapshot of a game: grid, history, captures."""

    __slots__ = ("_cells", "_idx", "_data")

    def __init__(self, size: int = 9):
        if not (2 <= size <= 19):
            raise ValueError("board size must be in 2..19")
        self._cells, self._idx, self._data = bk.new_board_arrays(size)

    # -- construction helpers ------------------------------------------------

    @classmethod
    def _wrap(cls, cells, idx, data) -> "Board":
        b = cls.__new__(cls)
        b._cells, b._idx, b._data = cells, idx, data
        return b

    def copy(self) -> "Board":
        return Board._wrap(self._cells.copy(), self._idx.copy(), self._data.copy())

    def with_to_move(self, color: Color) -> "Board":
        """Same position with ``color`` to move (the GTP free-turn rule);
        the position hash is unchanged since superko is positional."""
        nxt = self.copy()
        nxt._data[bk.D_TO_MOVE] = int(color)
        return nxt

    @classmethod
    def from_grid(cls, grid, to_move: Color = Color.BLACK) -> "Board":
        """Board with an arbitrary stone arrangement (no capture validation).

        History contains only the given position.  Intended for scoring tests
        and fixed positions; reachable-game invariants are not checked.
        """
        grid = np.asarray(grid, dtype=np.int8)
        size = grid.shape[0]
        if grid.shape != (size, size):
            raise ValueError("grid must be square")
        b = cls(size)
        flat = grid.reshape(-1)
        h = np.int64(0)
        for p in range(size * size):
            color = int(flat[p])
            if color == Color.EMPTY:
                continue
            b._cells[p] = color
            bk._emp_remove(b._idx, b._data, p)
            h ^= np.int64(zobrist.stone_key(color, p // size, p % size))
        b._data[bk.D_HASH] = h
        b._data[bk.D_TO_MOVE] = int(to_move)
        # reset history to just this position
        b._data[bk.D_HIST_N] = 0
        b._data[bk.D_HDR :] = 0
        bk._hist_record(b._data, b._data[bk.D_HASH])
        return b

    @classmethod
    def from_moves(cls, size: int, moves: Iterable["Move"]) -> "Board":
        b = cls(size)
        for m in moves:
            b = b.play(m)
        return b

    # -- queries ---------------------------------------------------------------

    @property
    def size(self) -> int:
        return int(self._data[bk.D_SIZE])

    @property
    def to_move(self) -> Color:
        return Color(int(self._data[bk.D_TO_MOVE]))

    @property
    def consecutive_passes(self) -> int:
        return int(self._data[bk.D_PASSES])

    @property
    def game_over(self) -> bool:
        return self._data[bk.D_PASSES] >= 2

    @property
    def move_count(self) -> int:
        return int(self._data[bk.D_MOVES])

    @property
    def prisoners(self) -> dict:
        return {
            Color.BLACK: int(self._data[bk.D_PRIS_B]),
            Color.WHITE: int(self._data[bk.D_PRIS_W]),
        }

    @property
    def position_hash(self) -> int:
        return int(self._data[bk.D_HASH])

    @property
    def position_history(self) -> frozenset:
        n = int(self._data[bk.D_HIST_N])
        return frozenset(int(h) for h in self._data[bk.D_HDR : bk.D_HDR + n])

    @property
    def grid(self) -> np.ndarray:
        return self._cells.reshape(self.size, self.size).copy()

    def stone_at(self, row: int, col: int) -> Color:
        return Color(int(self._cells[row * self.size + col]))

    def _scratch(self):
        n2 = self.size * self.size
        return (
            np.zeros(n2, dtype=np.int64),
            np.zeros(n2, dtype=np.int32),
            np.zeros(n2, dtype=np.int32),
            np.zeros(1, dtype=np.int64),
        )

    def move_legality(self, move: Move) -> Optional[str]:
        """None when the move is legal, else the violated rule's name."""
        if self.game_over:
            return "finished"
        if move.is_pass:
            return None
        row, col = move.point
        if not (0 <= row < self.size and 0 <= col < self.size):
            raise ValueError(f"point {move.point} off a {self.size}x{self.size} board")
        visited, stack, capbuf, vstamp = self._scratch()
        code = bk.move_code(
            self._cells,
            self._idx,
            self._data,
            row * self.size + col,
            False,
            visited,
            stack,
            capbuf,
            vstamp,
        )
        return _REASONS.get(int(code))

    def is_legal(self, move: Move) -> bool:
        return self.move_legality(move) is None

    def legal_moves(self) -> List[Move]:
        """All legal moves, plays in row-major order, then Pass."""
        if self.game_over:
            raise GameFinishedError()
        visited, stack, capbuf, vstamp = self._scratch()
        codes = np.empty(self.size * self.size, dtype=np.int32)
        bk.legal_codes(self._cells, self._idx, self._data, visited, stack, capbuf, vstamp, codes)
        moves = [
            Move.play(p // self.size, p % self.size)
            for p in range(self.size * self.size)
            if codes[p] == bk.LEGAL
        ]
        moves.append(Move.pass_())
        return moves

    # -- updates -----------------------------------------------------------------

    def play(self, move: Move) -> "Board":
        """Apply a legal move, returning the successor board."""
        if self.game_over:
            raise IllegalMoveError("finished", move)
        nxt = self.copy()
        if move.is_pass:
            bk.apply_pass(nxt._data)
            return nxt
        row, col = move.point
        if not (0 <= row < self.size and 0 <= col < self.size):
            raise ValueError(f"point {move.point} off a {self.size}x{self.size} board")
        visited, stack, capbuf, vstamp = self._scratch()
        code = int(
            bk.move_code(
                nxt._cells,
                nxt._idx,
                nxt._data,
                row * self.size + col,
                True,
                visited,
                stack,
                capbuf,
                vstamp,
            )
        )
        if code != bk.LEGAL:
            raise IllegalMoveError(_REASONS[code], move)
        return nxt

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Board)
            and np.array_equal(self._cells, other._cells)
            and self._data[bk.D_TO_MOVE] == other._data[bk.D_TO_MOVE]
            and self._data[bk.D_PASSES] == other._data[bk.D_PASSES]
            and self.position_history == other.position_history
        )

    def __hash__(self):
        return hash((self._cells.tobytes(), self.position_hash, int(self._data[bk.D_TO_MOVE])))

    def __str__(self) -> str:
        chars = {0: ".", 1: "X", 2: "O"}
        rows = []
        for r in range(self.size - 1, -1, -1):
            cells = " ".join(chars[int(self._cells[r * self.size + c])] for c in range(self.size))
            rows.append(f"{r + 1:2d} {cells}")
        rows.append("   " + " ".join(COLUMN_LETTERS[: self.size]))
        return "\n".join(rows)


def legal_moves(board: Board) -> List[Move]:
    return board.legal_moves()


def apply_move(board: Board, move: Move) -> Board:
    return board.play(move)


def score(board: Board, komi: float = 6.0) -> GameResult:
    """Tromp-Taylor area score of the position as it stands."""
    n2 = board.size * board.size
    marks = np.zeros(n2, dtype=np.int32)
    stack = np.zeros(n2, dtype=np.int32)
    black, white = bk.area_counts(board._cells, board.size, marks, stack)
    margin = float(black - white) - komi
    if margin > 0:
        winner = Winner.BLACK
    elif margin < 0:
        winner = Winner.WHITE
    else:
        winner = Winner.DRAW
    return GameResult(winner=winner, margin=margin, komi=komi)


def game_record_text(moves: Iterable[Move], result: GameResult, size: int) -> str:
    """Plain-text game record: one ``B E5`` / ``W pass`` line per move, then ``RE B+3``."""
    lines = []
    color = "B"
    for m in moves:
        lines.append(f"{color} {point_to_vertex(m.point, size)}")
        color = "W" if color == "B" else "B"
    lines.append(f"RE {result.re_string}")
    return "\n".join(lines) + "\n"
