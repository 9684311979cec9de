"""Referee win checks and the built-in classical strategies."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..geometry import Configuration, Kind, Line, build_doily, mermin_square, questions_LL, questions_PL


class UnknownStrategy(KeyError):
    pass


def check_win_LL(ans_a: Sequence[int], ans_b: Sequence[int], pos_a: int, pos_b: int) -> bool:
    return ans_a[pos_a] == ans_b[pos_b]


def check_win_PL(a: int, triple_b: Sequence[int], pos: int) -> bool:
    return a == triple_b[pos]


@dataclass(frozen=True)
class ClassicalStrategy:
    """Pre-agreed answer tables.

    ``alice_lines``/``bob_lines`` map a line index to a point -> ±1 table for
    that line, so any ordering of the line can be answered.  With
    ``randomize_negative`` set, every negative line is instead answered with
    +1 everywhere except one uniformly chosen point, drawn afresh per question.
    """

    name: str
    config: Configuration
    alice_lines: dict[int, dict[int, int]] = field(default_factory=dict)
    alice_points: dict[int, int] = field(default_factory=dict)
    bob_lines: dict[int, dict[int, int]] = field(default_factory=dict)
    randomize_negative: bool = False

    def __post_init__(self) -> None:
        for table in (self.alice_lines, self.bob_lines):
            for i, vals in table.items():
                ln = self.config.lines[i]
                if self.randomize_negative and ln.sign < 0:
                    continue
                if int(np.prod([vals[p] for p in ln.points])) != ln.sign:
                    raise ValueError(f"{self.name}: table for line {i} breaks its parity")

    def answer(self, player: str, line: Line, rng: np.random.Generator | None = None) -> tuple[int, ...]:
        """Triple for ``line`` in its stored order."""
        idx = self.config.line_index(line)
        if self.randomize_negative and line.sign < 0:
            if rng is None:
                raise ValueError("randomized strategy needs an rng")
            minus = line.points[int(rng.integers(3))]
            return tuple(-1 if p == minus else 1 for p in line.points)
        table = (self.alice_lines if player == "alice" else self.bob_lines)[idx]
        return tuple(table[p] for p in line.points)

    def point_answer(self, point: int) -> int:
        return self.alice_points[point]


def _table(line: Line, values: Sequence[int]) -> dict[int, int]:
    return dict(zip(line.points, values))


def table1_grid(config: Configuration | None = None) -> ClassicalStrategy:
    """Rows (1,1,1), (-1,1,-1), (1,-1,-1); columns (1,-1,1), (1,1,-1), (1,-1,1).

    Alice and Bob only disagree at the bottom-right cell.  Alice's point
    values in the point-line game are her row entries.  Needs a grid whose
    rows are positive and columns negative.
    """
    config = config or mermin_square()
    if config.kind is not Kind.GRID or [ln.sign for ln in config.lines] != [1, 1, 1, -1, -1, -1]:
        raise ValueError("table1_grid needs a grid with positive rows and negative columns")
    rows = [(1, 1, 1), (-1, 1, -1), (1, -1, -1)]
    cols = [(1, -1, 1), (1, 1, -1), (1, -1, 1)]
    alice = {r: _table(config.lines[r], rows[r]) for r in range(3)}
    bob = {r: _table(config.lines[r], rows[r]) for r in range(3)}
    bob.update({3 + c: _table(config.lines[3 + c], cols[c]) for c in range(3)})
    points = {3 * r + c: rows[r][c] for r in range(3) for c in range(3)}
    return ClassicalStrategy("table1_grid", config, alice, points, bob)


def all_plus_doily(config: Configuration | None = None) -> ClassicalStrategy:
    """+1 on positive lines, a single random -1 on negative lines; Alice's points all +1."""
    config = config or build_doily()
    plus = {i: {p: 1 for p in ln.points} for i, ln in enumerate(config.lines) if ln.sign > 0}
    points = {p: 1 for p in range(config.num_points)}
    return ClassicalStrategy("all_plus_doily", config, plus, points, dict(plus), randomize_negative=True)


BUILTIN = {"table1_grid": table1_grid, "all_plus_doily": all_plus_doily}


def builtin_strategy(name: str, config: Configuration | None = None) -> ClassicalStrategy:
    try:
        factory = BUILTIN[name]
    except KeyError:
        raise UnknownStrategy(f"unknown strategy {name!r}; choose from {sorted(BUILTIN)}") from None
    return factory(config)


# ---------------------------------------------------------------------------
# vectorized play


def _player_values(strategy: ClassicalStrategy, player: str, lines: list[Line], points: list[int], n: int,
                   rng: np.random.Generator) -> np.ndarray:
    """Values each question's player gives at its common point, for ``n`` plays per question."""
    out = np.empty((len(lines), n), dtype=np.int8)
    for k, (ln, p) in enumerate(zip(lines, points)):
        if strategy.randomize_negative and ln.sign < 0:
            # -1 lands on the asked point with probability 1/3
            out[k] = np.where(rng.integers(0, 3, size=n) == ln.position(p), -1, 1)
        else:
            idx = strategy.config.line_index(ln)
            table = strategy.alice_lines if player == "alice" else strategy.bob_lines
            out[k] = table[idx][p]
    return out


def play_cells_LL(strategy: ClassicalStrategy, cells: list[tuple[Line, Line]], shots: int,
                  rng: np.random.Generator) -> np.ndarray:
    """Wins per cell when each line-line question is played ``shots`` times."""
    common = [(la.key & lb.key) for la, lb in cells]
    pts = [next(iter(c)) for c in common]
    a = _player_values(strategy, "alice", [c[0] for c in cells], pts, shots, rng)
    b = _player_values(strategy, "bob", [c[1] for c in cells], pts, shots, rng)
    return (a == b).sum(axis=1)


def play_cells_PL(strategy: ClassicalStrategy, cells: list[tuple[int, Line]], shots: int,
                  rng: np.random.Generator) -> np.ndarray:
    a = np.array([[strategy.point_answer(p)] for p, _ in cells], dtype=np.int8)
    b = _player_values(strategy, "bob", [ln for _, ln in cells], [p for p, _ in cells], shots, rng)
    return (a == b).sum(axis=1)


def sample_classical(strategy: ClassicalStrategy, scenario: str, n_questions: int, seed: int = 0) -> tuple[int, int]:
    """Play ``n_questions`` uniformly drawn questions; return (wins, plays)."""
    rng = np.random.default_rng(seed)
    config = strategy.config
    qs = questions_LL(config) if scenario == "ll" else questions_PL(config)
    counts = np.bincount(rng.integers(0, len(qs), size=n_questions), minlength=len(qs))
    wins = 0
    for q, c in zip(qs, counts):
        if not c:
            continue
        if scenario == "ll":
            wins += int(play_cells_LL(strategy, [q], int(c), rng)[0])
        else:
            wins += int(play_cells_PL(strategy, [q], int(c), rng)[0])
    return wins, n_questions
