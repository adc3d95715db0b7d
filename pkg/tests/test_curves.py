"""Curve tables, sup-error anchors, beta sweeps, CSV round trips."""

import numpy as np
import pytest

from asaukit.activations import AsauParams
from asaukit.curves import (beta_sweep, build_curve_table, make_grid,
                            read_curve_csv, sup_error, write_curve_csv,
                            write_sweep_csv)


class TestMakeGrid:
    def test_unit_step(self):
        assert np.array_equal(make_grid((-2, 2, 1)), [-2, -1, 0, 1, 2])

    def test_invalid(self):
        with pytest.raises(ValueError):
            make_grid((2, -2, 1))
        with pytest.raises(ValueError):
            make_grid((-2, 2, 0))


class TestBuildCurveTable:
    def test_relu_target_on_coarse_grid(self):
        table = build_curve_table((-2, 2, 1), [AsauParams(0, 1, 1, 1)])
        assert np.array_equal(table.x_grid, [-2, -1, 0, 1, 2])
        assert np.array_equal(table.target_values, [0, 0, 0, 1, 2])
        assert len(table.series) == 1

    def test_linear_collapse_series(self):
        table = build_curve_table((-1, 1, 0.5), [AsauParams(1, 1, 1, 1)])
        assert np.array_equal(table.series[0].values, table.x_grid)

    def test_sharp_beta_tracks_target(self):
        table = build_curve_table((-5, 5, 1e-3), [AsauParams(0, 1, 1, 1e4)])
        assert np.max(np.abs(table.series[0].values - table.target_values)) < 1e-3

    def test_mixed_targets_rejected(self):
        with pytest.raises(ValueError, match="share"):
            build_curve_table((-1, 1, 0.5), [AsauParams(0, 1, 1, 1), AsauParams(1, 2, 1, 1)])

    def test_empty_params_rejected(self):
        with pytest.raises(ValueError):
            build_curve_table((-1, 1, 0.5), [])


class TestSupError:
    def test_beta_ten_anchor(self):
        err = sup_error(AsauParams(0, 1, 1, 10), (-5, 5, 1e-3))
        assert err == pytest.approx(0.030884262309779066, abs=1e-12)
        assert 0.8 * 0.031 <= err <= 1.2 * 0.031

    def test_linear_collapse_is_exact(self):
        assert sup_error(AsauParams(0.7, 0.7, 1.3, 4.0), (-5, 5, 0.01)) == 0.0

    def test_zero_alpha_collapse(self):
        # alpha = 0 reduces the unit to a*x = 0, so the error is max|max(0,x)|
        assert sup_error(AsauParams(0, 1, 0, 3.0), (-5, 5, 0.01)) == 5.0

    def test_refinement_bound(self):
        # halving the step may only grow the sup by the local Lipschitz bound
        for p in (AsauParams(0, 1, 1, 10), AsauParams(0.01, 1, 1, 5), AsauParams(1, 2, 2, 3)):
            step = 0.01
            coarse = sup_error(p, (-5, 5, step))
            fine = sup_error(p, (-5, 5, step / 2))
            assert fine <= coarse + (p.b - p.a + abs(p.a)) * step


class TestBetaSweep:
    def test_relu_family_monotone(self):
        report = beta_sweep(AsauParams(0, 1, 1, 1), [1, 10, 100, 1000, 1e4], (-5, 5, 1e-3))
        assert all(e2 < e1 for e1, e2 in zip(report.sup_errors, report.sup_errors[1:]))

    def test_leaky_family_monotone(self):
        report = beta_sweep(AsauParams(0.01, 1, 1, 1), [1, 10, 100, 1000, 1e4], (-5, 5, 1e-3))
        assert all(e2 < e1 for e1, e2 in zip(report.sup_errors, report.sup_errors[1:]))

    def test_inverse_beta_decay_bounded(self):
        report = beta_sweep(AsauParams(0, 1, 1, 1), [1, 10, 100, 1000], (-5, 5, 1e-3))
        scaled = [b * e for b, e in zip(report.betas, report.sup_errors)]
        assert max(scaled) < 1.0

    def test_singleton(self):
        report = beta_sweep(AsauParams(0, 1, 1, 1), [10], (-5, 5, 1e-3))
        assert len(report.sup_errors) == 1
        assert report.grid_spec == (-5, 5, 1e-3)

    def test_empty_and_unordered_rejected(self):
        with pytest.raises(ValueError):
            beta_sweep(AsauParams(0, 1, 1, 1), [], (-5, 5, 0.1))
        with pytest.raises(ValueError):
            beta_sweep(AsauParams(0, 1, 1, 1), [10, 5], (-5, 5, 0.1))
        with pytest.raises(ValueError):
            beta_sweep(AsauParams(0, 1, 1, 1), [-1, 5], (-5, 5, 0.1))


class TestCsvRoundTrip:
    def test_curve_table_values_survive(self, tmp_path):
        params = [AsauParams(0, 1, a, b) for a, b in ((0.5, 1), (1, 5), (2, 20))]
        table = build_curve_table((-3, 3, 0.37), params)
        path = tmp_path / "curves.csv"
        write_curve_csv(table, path)
        header, values = read_curve_csv(path)
        assert header[:2] == ["x", "target"]
        assert header[2:] == [s.label for s in table.series]
        assert np.array_equal(values[:, 0], table.x_grid)
        assert np.array_equal(values[:, 1], table.target_values)
        for j, s in enumerate(table.series):
            assert np.array_equal(values[:, 2 + j], s.values)

    def test_sweep_csv(self, tmp_path):
        report = beta_sweep(AsauParams(0, 1, 1, 1), [1, 10], (-2, 2, 0.01))
        path = tmp_path / "sweep.csv"
        write_sweep_csv(report, path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "beta,sup_error"
        assert len(lines) == 3
        beta, err = lines[1].split(",")
        assert float(beta) == 1.0
        assert float(err) == report.sup_errors[0]
