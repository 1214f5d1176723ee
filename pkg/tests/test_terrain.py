"""Elevation grids, slope classification, and surface attitude queries."""
import math

import numpy as np
import pytest

from roverplan import (DemFormatError, DemGrid, TerrainClass,
                       TraversabilityThresholds, classify, load_dem, save_dem,
                       slope_map, surface_query, synth_terrain, terrain_stats,
                       traversability)

from oracles import plane_attitude


def ramp_dem(slope_deg: float, cell: float = 0.25, n: int = 40,
             direction: str = "x") -> DemGrid:
    g = math.tan(math.radians(slope_deg))
    idx = (np.arange(n) + 0.5) * cell
    if direction == "x":
        z = np.tile(g * idx, (n, 1))
    else:
        z = np.tile((g * idx)[:, None], (1, n))
    return DemGrid(origin=(0.0, 0.0), cell_size=cell, elevation=z)


class TestDemGrid:
    def test_rejects_empty_grid(self):
        with pytest.raises(ValueError):
            DemGrid(origin=(0, 0), cell_size=0.25, elevation=np.zeros((0, 3)))

    def test_rejects_nonpositive_cell(self):
        with pytest.raises(ValueError):
            DemGrid(origin=(0, 0), cell_size=0.0, elevation=np.zeros((2, 2)))

    def test_rejects_nonfinite(self):
        z = np.zeros((2, 2))
        z[0, 0] = np.nan
        with pytest.raises(ValueError):
            DemGrid(origin=(0, 0), cell_size=0.25, elevation=z)

    def test_extent_is_cells_times_size(self):
        dem = DemGrid(origin=(0, 0), cell_size=0.25,
                      elevation=np.zeros((600, 600)))
        x0, y0, x1, y1 = dem.bounds
        assert (x1 - x0, y1 - y0) == (150.0, 150.0)


class TestDemFile:
    def test_roundtrip_flat_2x2(self, tmp_path):
        dem = DemGrid(origin=(0, 0), cell_size=0.25, elevation=np.zeros((2, 2)))
        path = tmp_path / "flat.dem"
        save_dem(dem, path)
        back = load_dem(path)
        assert back.cell_size == 0.25
        assert np.array_equal(back.elevation, np.zeros((2, 2)))

    def test_malformed_row_width_rejected(self, tmp_path):
        path = tmp_path / "bad.dem"
        path.write_text("ncols 3 nrows 2 cellsize 0.25 xll 0.0 yll 0.0\n"
                        "0.0 0.0\n0.0 0.0\n")
        with pytest.raises(DemFormatError):
            load_dem(path)

    def test_missing_file_rejected(self, tmp_path):
        with pytest.raises(OSError):
            load_dem(tmp_path / "nope.dem")

    def test_values_preserved_exactly(self, tmp_path):
        rng = np.random.default_rng(3)
        dem = DemGrid(origin=(1.5, -2.0), cell_size=0.5,
                      elevation=rng.normal(size=(7, 5)))
        path = tmp_path / "vals.dem"
        save_dem(dem, path)
        back = load_dem(path)
        assert back.origin == dem.origin
        assert np.array_equal(back.elevation, dem.elevation)


class TestSynthTerrain:
    def test_deterministic(self):
        a = synth_terrain(42, 64, 64, 0.25)
        b = synth_terrain(42, 64, 64, 0.25)
        assert np.array_equal(a.elevation, b.elevation)

    def test_zero_amplitude_is_flat(self):
        dem = synth_terrain(5, 32, 32, 0.25, amplitude=0.0)
        assert np.all(dem.elevation == 0.0)

    def test_seeds_differ(self):
        a = synth_terrain(1, 64, 64, 0.25)
        b = synth_terrain(2, 64, 64, 0.25)
        assert not np.array_equal(a.elevation, b.elevation)

    def test_rejects_zero_dims(self):
        with pytest.raises(ValueError):
            synth_terrain(1, 0, 10, 0.25)


class TestSlopeMap:
    def test_flat_is_zero(self, flat_dem):
        assert np.all(slope_map(flat_dem) == 0.0)

    def test_unit_step_is_45_deg(self):
        z = np.zeros((4, 4))
        z[:, 2:] = 0.25
        dem = DemGrid(origin=(0, 0), cell_size=0.25, elevation=z)
        slopes = slope_map(dem)
        assert slopes[0, 1] == pytest.approx(45.0, abs=1e-12)
        assert slopes[0, 2] == pytest.approx(45.0, abs=1e-12)

    def test_small_step_matches_atan(self):
        z = np.zeros((4, 4))
        z[:, 2:] = 0.05
        dem = DemGrid(origin=(0, 0), cell_size=0.25, elevation=z)
        slopes = slope_map(dem)
        assert slopes[1, 1] == pytest.approx(math.degrees(math.atan(0.2)),
                                             abs=1e-9)

    def test_all_eight_directions(self):
        # lone bump: every neighbour of the bump sees the same rise over
        # its own distance, diagonals over cell*sqrt(2)
        z = np.zeros((5, 5))
        z[2, 2] = 0.1
        dem = DemGrid(origin=(0, 0), cell_size=0.25, elevation=z)
        slopes = slope_map(dem)
        edge = math.degrees(math.atan(0.1 / 0.25))
        diag = math.degrees(math.atan(0.1 / (0.25 * math.sqrt(2))))
        for r, c in ((1, 2), (3, 2), (2, 1), (2, 3)):
            assert slopes[r, c] == pytest.approx(edge, abs=1e-12)
        for r, c in ((1, 1), (1, 3), (3, 1), (3, 3)):
            assert slopes[r, c] == pytest.approx(diag, abs=1e-12)

    def test_border_uses_existing_neighbours_only(self):
        z = np.array([[0.0, 1.0], [0.0, 0.0]])
        dem = DemGrid(origin=(0, 0), cell_size=1.0, elevation=z)
        slopes = slope_map(dem)
        assert np.all(np.isfinite(slopes))
        assert slopes[0, 0] == pytest.approx(45.0)


class TestClassify:
    def test_boundaries_inclusive(self):
        slopes = np.array([[0.0, 9.999, 10.0], [11.31, 14.999, 15.0]])
        tmap = classify(slopes, TraversabilityThresholds())
        want = np.array([[0, 0, 1], [1, 1, 2]])
        assert np.array_equal(tmap.classes, want)

    def test_threshold_validation(self):
        with pytest.raises(ValueError):
            TraversabilityThresholds(high_risk_deg=15, impassable_deg=10)

    def test_flat_stats(self, flat_dem):
        stats = terrain_stats(traversability(flat_dem))
        assert stats == (100.0, 0.0, 0.0)

    def test_counting_stats(self):
        slopes = np.array([[0.0, 0.0], [0.0, 45.0]])
        stats = terrain_stats(classify(slopes, TraversabilityThresholds()))
        assert stats.traversable_pct == pytest.approx(75.0)
        assert stats.impassable_pct == pytest.approx(25.0)

    def test_stats_sum_to_100(self):
        dem = synth_terrain(9, 120, 120, 0.25, amplitude=2.0, smoothness=8.0)
        stats = terrain_stats(traversability(dem))
        assert sum(stats) == pytest.approx(100.0, abs=1e-9)


class TestSurfaceQuery:
    def test_flat_any_heading(self, flat_dem):
        for hdg in (0.0, 37.0, -120.0):
            pose = surface_query(flat_dem, 5.0, 5.0, hdg)
            assert pose.pitch_deg == 0.0
            assert pose.roll_deg == 0.0
            assert pose.position[2] == 0.0

    def test_ramp_up_slope(self):
        dem = ramp_dem(10.0)
        pose = surface_query(dem, 5.0, 5.0, 0.0)
        assert pose.pitch_deg == pytest.approx(10.0, abs=1e-9)
        assert pose.roll_deg == pytest.approx(0.0, abs=1e-9)

    def test_ramp_across_slope(self):
        dem = ramp_dem(10.0)
        pose = surface_query(dem, 5.0, 5.0, 90.0)
        assert pose.pitch_deg == pytest.approx(0.0, abs=1e-9)
        assert pose.roll_deg == pytest.approx(10.0, abs=1e-9)

    def test_out_of_bounds_rejected(self, flat_dem):
        with pytest.raises(ValueError):
            surface_query(flat_dem, -5.0, 5.0, 0.0)

    def test_planar_patch_matches_closed_form(self):
        gx, gy = math.tan(math.radians(7.0)), math.tan(math.radians(-4.0))
        n = 40
        idx = (np.arange(n) + 0.5) * 0.25
        z = gx * idx[None, :] + gy * idx[:, None]
        dem = DemGrid(origin=(0, 0), cell_size=0.25, elevation=z)
        for hdg in np.linspace(-180.0, 179.0, 25):
            pose = surface_query(dem, 4.3, 6.1, float(hdg))
            pitch, roll = plane_attitude(gx, gy, float(hdg))
            assert pose.pitch_deg == pytest.approx(pitch, abs=1e-6)
            assert pose.roll_deg == pytest.approx(roll, abs=1e-6)

    def test_heading_flip_negates_attitude(self):
        dem = ramp_dem(8.0)
        for hdg in (0.0, 30.0, 77.0):
            a = surface_query(dem, 5.0, 5.0, hdg)
            b = surface_query(dem, 5.0, 5.0, hdg + 180.0)
            assert b.pitch_deg == pytest.approx(-a.pitch_deg, abs=1e-9)
            assert b.roll_deg == pytest.approx(-a.roll_deg, abs=1e-9)


class TestInvariants:
    def test_classification_shift_invariant(self):
        dem = synth_terrain(11, 48, 48, 0.25, amplitude=1.5)
        shifted = DemGrid(origin=dem.origin, cell_size=dem.cell_size,
                          elevation=dem.elevation + 37.5)
        assert np.array_equal(traversability(dem).classes,
                              traversability(shifted).classes)

    def test_scaling_never_decreases_slope(self):
        dem = synth_terrain(12, 48, 48, 0.25, amplitude=1.0)
        scaled = DemGrid(origin=dem.origin, cell_size=dem.cell_size,
                         elevation=dem.elevation * 2.5)
        assert np.all(slope_map(scaled) >= slope_map(dem) - 1e-12)

    def test_bilinear_height_matches_plane(self):
        dem = ramp_dem(10.0)
        g = math.tan(math.radians(10.0))
        for x, y in ((1.0, 1.0), (3.33, 7.7), (5.125, 2.0)):
            pose = surface_query(dem, x, y, 0.0)
            assert pose.position[2] == pytest.approx(g * x, abs=1e-12)
