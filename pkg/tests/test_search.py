"""Hill-climbing target generation against a brute-force reference."""
import numpy as np
import pytest

from roverplan import (CellPath, SearchGrid, accumulated_probability,
                       lhc_gw_conv, lhc_path, lhc_step, load_targets_csv,
                       save_targets_csv)

from oracles import best_warmed_path, distinct_cell_score, greedy_climb


def grid_of(values) -> SearchGrid:
    return SearchGrid((0.0, 0.0), 5.0, np.asarray(values, dtype=float))


class TestLhcStep:
    def test_unique_max_wins(self):
        vals = np.zeros((3, 3))
        vals[0, 1] = 0.1
        vals[1, 2] = 0.9
        vals[2, 0] = 0.3
        assert lhc_step(vals, (1, 1)) == (1, 2)

    def test_tie_broken_by_blur(self):
        # two tied neighbours; (1, 3) sits next to a heavy region
        vals = np.zeros((5, 5))
        vals[1, 1] = 0.5
        vals[1, 3] = 0.5
        vals[0, 4] = 3.0
        assert lhc_step(vals.copy(), (1, 2)) == (1, 3)
        # heavy region moved next to the other candidate flips the choice
        vals2 = np.zeros((5, 5))
        vals2[1, 1] = 0.5
        vals2[1, 3] = 0.5
        vals2[0, 0] = 3.0
        assert lhc_step(vals2, (1, 2)) == (1, 1)

    def test_total_tie_lowest_row_major(self):
        vals = np.zeros((3, 3))
        assert lhc_step(vals, (1, 1)) == (0, 0)
        assert lhc_step(vals, (0, 0)) == (0, 1)

    def test_departed_cell_zeroed(self):
        vals = np.full((3, 3), 0.2)
        vals[1, 1] = 0.9
        lhc_step(vals, (1, 1))
        assert vals[1, 1] == 0.0

    def test_single_cell_grid_rejected(self):
        with pytest.raises(ValueError):
            lhc_step(np.ones((1, 1)), (0, 0))


class TestLhcPath:
    def test_budget_sets_length(self):
        path = lhc_path(grid_of(np.random.default_rng(0).uniform(size=(6, 6))),
                        (3, 3), budget=1)
        assert len(path.cells) == 2

    def test_point_mass_attracts_first_move(self):
        vals = np.zeros((5, 5))
        vals[2, 3] = 1.0
        path = lhc_path(grid_of(vals), (2, 2), budget=3)
        assert path.cells[1] == (2, 3)

    def test_source_grid_untouched(self):
        vals = np.random.default_rng(1).uniform(size=(6, 6))
        grid = grid_of(vals)
        lhc_path(grid, (0, 0), budget=8)
        assert np.array_equal(grid.values, vals)

    def test_matches_reference_walk(self):
        for seed in range(8):
            vals = np.random.default_rng(seed).uniform(size=(5, 5))
            path = lhc_path(grid_of(vals), (2, 2), budget=6)
            assert list(path.cells) == greedy_climb(vals, (2, 2), 6)

    def test_adjacency_validated(self):
        with pytest.raises(ValueError):
            CellPath(cells=((0, 0), (2, 2)), budget=4)


class TestAccumulatedProbability:
    def test_full_coverage_equals_total(self):
        vals = np.random.default_rng(2).uniform(size=(3, 3))
        cells = []
        for r in range(3):
            cols = range(3) if r % 2 == 0 else range(2, -1, -1)
            cells.extend((r, c) for c in cols)
        path = CellPath(cells=tuple(cells), budget=len(cells))
        assert accumulated_probability(path, grid_of(vals)) == pytest.approx(
            float(vals.sum()), rel=1e-12)

    def test_revisit_counts_once(self):
        vals = np.zeros((3, 3))
        vals[0, 0], vals[0, 1] = 0.4, 0.3
        loop = CellPath(cells=((0, 0), (0, 1), (0, 0)), budget=3)
        once = CellPath(cells=((0, 0), (0, 1)), budget=2)
        g = grid_of(vals)
        assert accumulated_probability(loop, g) == \
            accumulated_probability(once, g)

    def test_simple_sum(self):
        vals = np.zeros((3, 3))
        vals[1, 0], vals[1, 1], vals[1, 2] = 0.2, 0.3, 0.1
        path = CellPath(cells=((1, 0), (1, 1), (1, 2)), budget=2)
        assert accumulated_probability(path, grid_of(vals)) == \
            pytest.approx(0.6, abs=1e-15)


class TestLhcGwConv:
    def test_single_lobe_warming_cannot_help(self):
        vals = np.zeros((7, 7))
        vals[3, 3] = 1.0
        vals[3, 4] = 0.5
        grid = grid_of(vals)
        out = lhc_gw_conv(grid, (1, 1), budget=6, warming_steps=1)
        plain = lhc_path(grid, (1, 1), budget=6)
        assert out.score == pytest.approx(
            accumulated_probability(plain, grid), abs=0.0)
        assert out.warming_step == 0

    def test_decoy_trail_melts_and_warming_wins(self):
        # a rising trail of small values lures the plain climber away
        # from a heavy pair it never sees (two cells from the start is
        # outside greedy reach across a zero gap); one decrement melts
        # the trail, and with every neighbour tied at zero the blur
        # tie-break pulls the climber toward the surviving heavy cells
        vals = np.zeros((12, 12))
        trail = {(r, 0): 0.10 + 0.01 * (r - 1) for r in range(1, 12)}
        trail[(11, 1)] = 0.21
        for cell, v in trail.items():
            vals[cell] = v
        vals[0, 2] = 1.0
        vals[0, 3] = 0.95
        grid = grid_of(vals)
        out = lhc_gw_conv(grid, (0, 0), budget=12, warming_steps=4)
        plain_score = accumulated_probability(
            lhc_path(grid, (0, 0), budget=12), grid)
        assert plain_score == pytest.approx(sum(trail.values()))
        assert out.warming_step > 0
        assert out.score == pytest.approx(1.95)
        assert out.score > plain_score

    def test_matches_reference_exactly(self):
        for seed in range(20):
            vals = np.random.default_rng(100 + seed).uniform(size=(8, 8))
            grid = grid_of(vals)
            for steps in (1, 2, 4):
                got = lhc_gw_conv(grid, (4, 4), budget=10, warming_steps=steps)
                cells, score, step = best_warmed_path(vals, (4, 4), 10, steps)
                assert list(got.cells) == cells
                assert got.score == score
                assert got.warming_step == step

    def test_never_below_plain_climb(self):
        for seed in range(20):
            vals = np.random.default_rng(200 + seed).uniform(size=(8, 8))
            grid = grid_of(vals)
            plain = accumulated_probability(lhc_path(grid, (0, 0), 10), grid)
            out = lhc_gw_conv(grid, (0, 0), budget=10, warming_steps=4)
            assert out.score >= plain

    def test_score_bounded_by_total_mass(self):
        for seed in range(10):
            vals = np.random.default_rng(300 + seed).uniform(size=(8, 8))
            out = lhc_gw_conv(grid_of(vals), (0, 0), budget=12,
                              warming_steps=2)
            assert out.score <= float(vals.sum()) + 1e-12

    def test_deterministic(self):
        vals = np.random.default_rng(4).uniform(size=(8, 8))
        a = lhc_gw_conv(grid_of(vals), (2, 2), budget=10, warming_steps=3)
        b = lhc_gw_conv(grid_of(vals), (2, 2), budget=10, warming_steps=3)
        assert a.cells == b.cells
        assert a.score == b.score

    def test_dominant_adjacent_cell_always_first(self):
        vals = np.full((6, 6), 0.01)
        vals[3, 4] = 5.0
        for steps in (1, 2, 4, 8):
            out = lhc_gw_conv(grid_of(vals), (3, 3), budget=5,
                              warming_steps=steps)
            assert out.cells[1] == (3, 4)

    def test_waypoints_are_cell_centers(self):
        vals = np.random.default_rng(5).uniform(size=(6, 6))
        grid = grid_of(vals)
        out = lhc_gw_conv(grid, (2, 2), budget=4, warming_steps=1)
        for (x, y), (r, c) in zip(out.waypoints, out.cells):
            assert (x, y) == grid.cell_center(r, c)


class TestTargetsFile:
    def test_roundtrip(self, tmp_path):
        vals = np.random.default_rng(6).uniform(size=(6, 6))
        out = lhc_gw_conv(grid_of(vals), (3, 3), budget=5, warming_steps=2)
        path = tmp_path / "targets.csv"
        save_targets_csv(out, path)
        back = load_targets_csv(path)
        assert back.waypoints == out.waypoints
        assert back.score == out.score
        assert back.warming_step == out.warming_step
