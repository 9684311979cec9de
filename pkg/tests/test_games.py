import itertools
import json
from fractions import Fraction

import numpy as np
import pytest

from qgames.circuits import PointLineUnsupported
from qgames.games import (
    GameError,
    GameSpec,
    builtin_strategy,
    check_win_LL,
    check_win_PL,
    classical_value,
    iter_cells,
    referee_play,
    sample_classical,
    solve,
    solve_ll,
)
from qgames.games.bounds import score_ll, score_pl, sign_flip_masks
from qgames.games.referee import cell_count
from qgames.games.strategies import UnknownStrategy, all_plus_doily, table1_grid
from qgames.geometry import build_doily, enumerate_grids, mermin_square, mermin_test_grid, questions_LL, questions_PL
from qgames.simulator import NoiseModel
from qgames.transpile import LAGOS_PL_LAYOUT, lagos_map

DOILY = build_doily()


def triples(sign):
    return [t for t in itertools.product((1, -1), repeat=3) if t[0] * t[1] * t[2] == sign]


# ---------------------------------------------------------------------------
# independent brute-force oracles


def brute_grid_ll(grid):
    rows, cols = grid.rows(), grid.columns()
    best = 0
    for a in itertools.product(*(triples(r.sign) for r in rows)):
        for b in itertools.product(*(triples(c.sign) for c in cols)):
            best = max(best, sum(a[r][c] == b[c][r] for r in range(3) for c in range(3)))
    return Fraction(best, 9)


def brute_pl(config):
    n = config.num_points
    vals = 1 - 2 * ((np.arange(2**n)[:, None] >> np.arange(n)) & 1)
    total = np.zeros(2**n, dtype=int)
    for ln in config.lines:
        pts = vals[:, list(ln.points)]
        total += np.max([(pts == np.array(t)).sum(axis=1) for t in triples(ln.sign)], axis=0)
    return Fraction(int(total.max()), 3 * len(config.lines))


class TestClassicalValues:
    @pytest.mark.parametrize("grid", [mermin_square(), mermin_test_grid(), *enumerate_grids(DOILY)[:3]])
    def test_grid_ll(self, grid):
        assert classical_value(grid, "ll") == brute_grid_ll(grid) == Fraction(8, 9)

    @pytest.mark.parametrize("grid", [mermin_square(), mermin_test_grid()])
    def test_grid_pl(self, grid):
        assert classical_value(grid, "pl") == brute_pl(grid) == Fraction(17, 18)

    def test_doily_pl(self):
        assert classical_value(DOILY, "pl") == brute_pl(DOILY) == Fraction(14, 15)

    def test_doily_ll_witness(self):
        sol = solve(DOILY, "ll")
        assert sol.value >= Fraction(13, 15)
        # re-score the witness with code that shares nothing with the solver
        for tables in (sol.alice_lines, sol.bob_lines):
            assert set(tables) == set(range(15))
            for i, t in tables.items():
                assert int(np.prod(t)) == DOILY.lines[i].sign
        wins = 0
        for la, lb in questions_LL(DOILY):
            (p,) = la.key & lb.key
            ia, ib = DOILY.lines.index(la), DOILY.lines.index(lb)
            wins += sol.alice_lines[ia][la.points.index(p)] == sol.bob_lines[ib][lb.points.index(p)]
        assert Fraction(wins, 90) == sol.value

    def test_doily_ll_value(self):
        assert classical_value(DOILY, "ll") == Fraction(8, 9)

    def test_doily_ll_symmetry_does_not_change_optimum(self):
        assert solve_ll(DOILY, symmetry=False).wins == solve_ll(DOILY, symmetry=True).wins

    def test_general_solver_on_grid(self):
        for g in (mermin_square(), enumerate_grids(DOILY)[5]):
            assert solve_ll(g).value == brute_grid_ll(g)

    def test_sign_flip_masks(self):
        masks = sign_flip_masks(DOILY)
        assert len(masks) == 16
        for m in masks:
            assert all(sum(m[p] for p in ln.points) % 2 == 0 for ln in DOILY.lines)

    def test_witness_json(self):
        d = solve(mermin_square(), "pl").to_dict(mermin_square())
        json.dumps(d)
        assert d["wins"] == 17


class TestStrategies:
    def test_table1_exact(self):
        s = table1_grid()
        alice = {i: tuple(s.alice_lines[i][p] for p in s.config.lines[i].points) for i in range(3)}
        bob = {i: tuple(s.bob_lines[i][p] for p in s.config.lines[i].points) for i in range(3, 6)}
        assert Fraction(score_ll(s.config, alice, bob), 9) == Fraction(8, 9)
        bob_all = {i: tuple(s.bob_lines[i][p] for p in s.config.lines[i].points) for i in range(6)}
        assert Fraction(score_pl(s.config, s.alice_points, bob_all), 18) == Fraction(17, 18)

    def test_table1_needs_matching_grid(self):
        with pytest.raises(ValueError):
            table1_grid(mermin_test_grid())

    def test_all_plus_exact_expectation(self):
        # negative lines are pairwise disjoint; -1 lands on the asked point with probability 1/3
        s = all_plus_doily()
        ll = sum(Fraction(2, 3) if (la.sign < 0) != (lb.sign < 0) else Fraction(1) for la, lb in questions_LL(DOILY))
        pl = sum(Fraction(2, 3) if ln.sign < 0 else Fraction(1) for _, ln in questions_PL(DOILY))
        assert ll / 90 == Fraction(13, 15)
        assert pl / 45 == Fraction(14, 15)
        assert s.randomize_negative

    @pytest.mark.parametrize("scenario, target", [("ll", Fraction(13, 15)), ("pl", Fraction(14, 15))])
    def test_all_plus_sampled(self, scenario, target):
        n = 200_000
        wins, plays = sample_classical(all_plus_doily(), scenario, n, seed=4)
        p = float(target)
        assert abs(wins / plays - p) <= 4 * np.sqrt(p * (1 - p) / n)

    def test_unknown(self):
        with pytest.raises(UnknownStrategy):
            builtin_strategy("nope")

    def test_win_checks(self):
        assert check_win_LL((1, -1, -1), (-1, 1, -1), 2, 2)
        assert not check_win_LL((1, -1, -1), (-1, 1, -1), 0, 0)
        assert check_win_PL(-1, (1, -1, -1), 2)


class TestCells:
    @pytest.mark.parametrize(
        "config, scenario, n",
        [(DOILY, "ll", 540), (DOILY, "pl", 270), (mermin_test_grid(), "ll", 54), (mermin_test_grid(), "pl", 108)],
    )
    def test_counts(self, config, scenario, n):
        assert cell_count(config, scenario) == n
        assert len(list(iter_cells(config, scenario))) == n

    def test_total_shots_doily_pl(self):
        assert cell_count(DOILY, "pl") * 8192 == 2_211_840

    def test_canonical(self):
        assert cell_count(DOILY, "ll", "canonical") == 90


class TestReferee:
    @pytest.mark.parametrize(
        "game, scenario, method",
        [("doily", "ll", "unitary"), ("doily", "ll", "delegation"), ("doily", "pl", "delegation"),
         ("grid", "ll", "unitary"), ("grid", "pl", "delegation")],
    )
    def test_noiseless_perfect(self, game, scenario, method):
        config = DOILY if game == "doily" else mermin_test_grid()
        res = referee_play(GameSpec(config, scenario, method, shots=64, orderings="canonical"))
        assert res.sigma == 1
        assert res.advantage

    def test_unitary_pl_rejected(self):
        with pytest.raises(PointLineUnsupported):
            GameSpec(DOILY, "pl", "unitary")

    @pytest.mark.parametrize("kw", [{"scenario": "xx"}, {"method": "magic"}, {"shots": 0}, {"orderings": "some"},
                                    {"layout": {0: 0}}])
    def test_bad_specs(self, kw):
        args = {"geometry": DOILY, "scenario": "ll", "method": "delegation", **kw}
        with pytest.raises(GameError):
            GameSpec(**args)

    def test_deterministic_bytes(self):
        spec = GameSpec(DOILY, "ll", "delegation", shots=32, seed=5, noise=NoiseModel(0.01, 0.02, 0.02),
                        orderings="canonical")
        assert referee_play(spec).to_json() == referee_play(spec).to_json()

    def test_seed_matters(self):
        base = dict(geometry=DOILY, scenario="ll", method="delegation", shots=32, noise=NoiseModel(0, 0.05, 0.05),
                    orderings="canonical")
        assert referee_play(GameSpec(seed=1, **base)).wins != referee_play(GameSpec(seed=2, **base)).wins

    def test_classical_through_referee(self):
        res = referee_play(GameSpec(mermin_square(), "ll", "classical:table1_grid", shots=10))
        assert res.sigma == Fraction(8, 9)
        assert not res.advantage

    def test_result_record(self):
        res = referee_play(GameSpec(DOILY, "pl", "delegation", shots=16, orderings="canonical"), date="2024-01-01")
        d = json.loads(res.to_json())
        assert d["sigma"]["numerator"] == d["sigma"]["denominator"]
        assert d["omega"] == {"numerator": 14, "denominator": 15, "value": 14 / 15}
        assert d["cell_count"] == 45
        assert d["metadata"]["date"] == "2024-01-01"
        assert "date" not in referee_play(GameSpec(DOILY, "pl", "delegation", shots=16,
                                                   orderings="canonical")).to_dict()["metadata"]

    def test_routing_recorded(self):
        spec = GameSpec(DOILY, "pl", "delegation", shots=16, orderings="canonical",
                        coupling_map=lagos_map(), layout=LAGOS_PL_LAYOUT)
        res = referee_play(spec)
        assert res.routing["swaps"] == 0
        assert res.sigma == 1

    def test_per_ordering(self):
        res = referee_play(GameSpec(mermin_test_grid(), "ll", "unitary", shots=8))
        assert res.per_ordering() == {k: 1.0 for k in range(6)}
