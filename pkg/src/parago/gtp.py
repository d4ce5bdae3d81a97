"""Go Text Protocol front end.

Line-oriented text protocol on stdio: success responses are ``= <text>``
and failures ``? <message>``, each terminated by a blank line.  Supported
commands: protocol_version, name, version, boardsize, clear_board, komi,
play, genmove, quit.  Anything else answers ``? unknown command`` and the
session continues.
"""

from __future__ import annotations

import sys
from typing import Optional, TextIO

from . import __version__
from .board import Board, Color, IllegalMoveError, Move, point_to_vertex, vertex_to_point
from .mcts import SearchConfig, _mix64
from .parallel import parallel_search

__all__ = ["GtpSession"]

_COLOR_NAMES = {"b": Color.BLACK, "black": Color.BLACK, "w": Color.WHITE, "white": Color.WHITE}


class GtpSession:
    """One GTP conversation: owns a board, a komi, and the engine config."""

    def __init__(self, config: Optional[SearchConfig] = None, board_size: int = 9):
        self.config = config or SearchConfig()
        self.board = Board(board_size)
        self.komi = self.config.komi
        self.finished = False
        self._genmoves = 0

    # -- protocol plumbing ---------------------------------------------------

    def process(self, line: str) -> Optional[str]:
        """Handle one input line; returns the full response (with trailing
        blank line), or None for lines that get no response."""
        line = line.split("#", 1)[0].strip()
        if not line:
            return None
        parts = line.split()
        cmd_id = ""
        if parts[0].isdigit():
            cmd_id = parts[0]
            parts = parts[1:]
            if not parts:
                return self._err(cmd_id, "syntax error")
        cmd, args = parts[0].lower(), parts[1:]
        handler = getattr(self, f"_cmd_{cmd}", None)
        if handler is None:
            return self._err(cmd_id, "unknown command")
        try:
            return handler(cmd_id, args)
        except (ValueError, IndexError):
            return self._err(cmd_id, "syntax error")

    def serve(self, instream: Optional[TextIO] = None, outstream: Optional[TextIO] = None) -> None:
        instream = instream or sys.stdin
        outstream = outstream or sys.stdout
        for line in instream:
            response = self.process(line)
            if response is not None:
                outstream.write(response)
                outstream.flush()
            if self.finished:
                break

    @staticmethod
    def _ok(cmd_id: str, text: str = "") -> str:
        head = f"={cmd_id}" if cmd_id else "="
        return f"{head} {text}\n\n" if text else f"{head}\n\n"

    @staticmethod
    def _err(cmd_id: str, message: str) -> str:
        head = f"?{cmd_id}" if cmd_id else "?"
        return f"{head} {message}\n\n"

    # -- commands ------------------------------------------------------------

    def _cmd_protocol_version(self, cmd_id, args):
        return self._ok(cmd_id, "2")

    def _cmd_name(self, cmd_id, args):
        return self._ok(cmd_id, "parago")

    def _cmd_version(self, cmd_id, args):
        return self._ok(cmd_id, __version__)

    def _cmd_boardsize(self, cmd_id, args):
        size = int(args[0])
        if not (2 <= size <= 19):
            return self._err(cmd_id, "unacceptable size")
        self.board = Board(size)
        return self._ok(cmd_id)

    def _cmd_clear_board(self, cmd_id, args):
        self.board = Board(self.board.size)
        return self._ok(cmd_id)

    def _cmd_komi(self, cmd_id, args):
        self.komi = float(args[0])
        return self._ok(cmd_id)

    def _cmd_play(self, cmd_id, args):
        color = _COLOR_NAMES.get(args[0].lower())
        if color is None:
            return self._err(cmd_id, "syntax error")
        try:
            point = vertex_to_point(args[1], self.board.size)
        except ValueError:
            return self._err(cmd_id, "illegal move")
        move = Move(point)
        board = self._board_to_move(color)
        try:
            self.board = board.play(move)
        except IllegalMoveError:
            return self._err(cmd_id, "illegal move")
        return self._ok(cmd_id)

    def _cmd_genmove(self, cmd_id, args):
        color = _COLOR_NAMES.get(args[0].lower())
        if color is None:
            return self._err(cmd_id, "syntax error")
        board = self._board_to_move(color)
        if board.game_over:
            return self._ok(cmd_id, "pass")
        self._genmoves += 1
        cfg = self.config.with_(komi=self.komi, seed=_mix64(self.config.seed ^ self._genmoves))
        move, _ = parallel_search(board, cfg)
        self.board = board.play(move)
        return self._ok(cmd_id, point_to_vertex(move.point, self.board.size))

    def _cmd_quit(self, cmd_id, args):
        self.finished = True
        return self._ok(cmd_id)

    def _board_to_move(self, color: Color) -> Board:
        """GTP allows either side to move next; flip the turn when needed."""
        if self.board.to_move is color or self.board.game_over:
            return self.board
        return self.board.with_to_move(color)
