"""Referee, classical strategies and bounds, and quantum game orchestration."""

from .bounds import ClassicalSolution, classical_value, solve, solve_grid_ll, solve_ll, solve_pl
from .referee import (
    Cell,
    GameError,
    GameResult,
    GameSpec,
    InvariantViolation,
    cell_count,
    full_experiment,
    iter_cells,
    referee_play,
)
from .strategies import (
    ClassicalStrategy,
    UnknownStrategy,
    builtin_strategy,
    check_win_LL,
    check_win_PL,
    sample_classical,
)

__all__ = [
    "Cell",
    "ClassicalSolution",
    "ClassicalStrategy",
    "GameError",
    "GameResult",
    "GameSpec",
    "InvariantViolation",
    "UnknownStrategy",
    "builtin_strategy",
    "cell_count",
    "check_win_LL",
    "check_win_PL",
    "classical_value",
    "full_experiment",
    "iter_cells",
    "referee_play",
    "sample_classical",
    "solve",
    "solve_grid_ll",
    "solve_ll",
    "solve_pl",
]
