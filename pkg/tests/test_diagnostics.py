"""Error metrics, divergence diagnostic and convergence-rate fitting."""

import numpy as np
import pytest

from induction_sbp.diagnostics import (
    ConvergenceRow,
    discrete_divergence,
    fit_rates,
    format_convergence_table,
    growth_constant,
    magnitude,
    rel_l2_percent,
    write_convergence_csv,
)
from induction_sbp.grid2d import ScalarField, VectorField2, make_grid
from induction_sbp.sbp1d import SbpOrder

DOMAIN = (-1.0, 1.0, -1.0, 1.0)


@pytest.fixture
def grid():
    return make_grid(SbpOrder.SBP2, 10, 10, DOMAIN)


def field_from(grid, f1, f2):
    return VectorField2(ScalarField.from_function(grid, f1), ScalarField.from_function(grid, f2))


class TestRelL2Percent:
    def test_zero_for_equal_fields(self, grid):
        v = field_from(grid, lambda x, y: x + y, lambda x, y: x - y)
        assert rel_l2_percent(v, v) == 0.0

    def test_homogeneous_scaling(self, grid):
        ref = field_from(grid, lambda x, y: 1 + x * y, lambda x, y: 2 - y)
        v = VectorField2(
            ScalarField(grid, 1.01 * ref.b1.values),
            ScalarField(grid, 1.01 * ref.b2.values),
        )
        assert rel_l2_percent(v, ref) == pytest.approx(1.0, abs=1e-10)

    def test_scale_invariance_in_reference(self, grid):
        rng = np.random.default_rng(6)
        n = grid.nx * grid.ny
        ref = VectorField2(ScalarField(grid, rng.standard_normal(n)), ScalarField(grid, rng.standard_normal(n)))
        v = VectorField2(ScalarField(grid, rng.standard_normal(n)), ScalarField(grid, rng.standard_normal(n)))
        base = rel_l2_percent(v, ref)
        alpha = -2.5
        scaled_v = VectorField2(ScalarField(grid, alpha * v.b1.values), ScalarField(grid, alpha * v.b2.values))
        scaled_ref = VectorField2(ScalarField(grid, alpha * ref.b1.values), ScalarField(grid, alpha * ref.b2.values))
        assert rel_l2_percent(scaled_v, scaled_ref) == pytest.approx(base, rel=1e-12)

    def test_zero_reference_rejected(self, grid):
        z = VectorField2.zeros(grid)
        v = field_from(grid, lambda x, y: x, lambda x, y: y)
        with pytest.raises(ValueError, match="zero norm"):
            rel_l2_percent(v, z)

    def test_magnitude_pointwise(self, grid):
        v = field_from(grid, lambda x, y: 3 * np.ones_like(x), lambda x, y: 4 * np.ones_like(x))
        assert np.allclose(magnitude(v).values, 5.0)


class TestDiscreteDivergence:
    def test_curl_like_linear_fields_are_divergence_free(self, grid):
        for f1, f2 in ((lambda x, y: y, lambda x, y: x), (lambda x, y: x, lambda x, y: -y)):
            v = field_from(grid, f1, f2)
            assert np.abs(discrete_divergence(v).values).max() <= 1e-12

    def test_linear_in_field(self, grid):
        rng = np.random.default_rng(13)
        n = grid.nx * grid.ny
        a = VectorField2(ScalarField(grid, rng.standard_normal(n)), ScalarField(grid, rng.standard_normal(n)))
        b = VectorField2(ScalarField(grid, rng.standard_normal(n)), ScalarField(grid, rng.standard_normal(n)))
        combined = VectorField2(
            ScalarField(grid, 2.0 * a.b1.values - b.b1.values),
            ScalarField(grid, 2.0 * a.b2.values - b.b2.values),
        )
        expected = 2.0 * discrete_divergence(a).values - discrete_divergence(b).values
        assert np.abs(discrete_divergence(combined).values - expected).max() <= 1e-12

    def test_reported_in_scheme_units(self, grid):
        v = field_from(grid, lambda x, y: x * x, lambda x, y: np.zeros_like(x))
        div = discrete_divergence(v)
        X, _ = grid.meshes()
        assert np.abs(div.mesh[1:-1] - 2 * X[1:-1]).max() <= 1e-12


class TestFitRates:
    def test_simple_rates(self):
        rows = fit_rates([10, 20], [4.0, 1.0])
        assert rows[0].rate is None
        assert rows[1].rate == pytest.approx(2.0)
        rows = fit_rates([10, 20], [8.0, 1.0])
        assert rows[1].rate == pytest.approx(3.0)

    def test_reference_error_column(self):
        # rates computed from a reference error column rounded to one
        # significant digit; its quoted rate column (1.7, 2.0, 2.0, 2.0) came
        # from unrounded errors, so match it only loosely
        errors = [6.9e1, 2.1e1, 5.5e0, 1.3e0, 3.3e-1]
        rows = fit_rates([40, 80, 160, 320, 640], errors)
        got = [r.rate for r in rows[1:]]
        assert got == pytest.approx([1.716, 1.933, 2.081, 1.978], abs=5e-3)
        for computed, printed in zip(got, [1.7, 2.0, 2.0, 2.0]):
            assert abs(computed - printed) <= 0.15

    def test_single_row_has_no_rate(self):
        rows = fit_rates([32], [0.5])
        assert len(rows) == 1
        assert rows[0].rate is None
        assert rows[0].label == "32x32"

    def test_rejects_non_doubling(self):
        with pytest.raises(ValueError, match="double"):
            fit_rates([10, 30], [1.0, 0.1])

    def test_rejects_bad_errors(self):
        with pytest.raises(ValueError, match="positive"):
            fit_rates([10, 20], [1.0, 0.0])
        with pytest.raises(ValueError, match="length"):
            fit_rates([10, 20], [1.0])


class TestGrowthConstant:
    def test_decaying_run_gives_zero(self):
        assert growth_constant(np.array([0.99, 0.999, 1.0]), 0.1) == 0.0

    def test_positive_growth(self):
        assert growth_constant(np.array([1.0, 1.02]), 0.1) == pytest.approx(0.2)

    def test_ignores_nan(self):
        assert growth_constant(np.array([np.nan, 1.01]), 0.1) == pytest.approx(0.1)


class TestOutputs:
    def test_table_and_csv(self, tmp_path):
        rows = [
            ConvergenceRow("40x40", 6.9e1, None),
            ConvergenceRow("80x80", 2.1e1, 1.716),
        ]
        table = format_convergence_table(rows)
        assert "40x40" in table and "rate" in table
        path = tmp_path / "conv.csv"
        write_convergence_csv(path, rows)
        lines = path.read_text().splitlines()
        assert lines[0] == "grid,error_percent,rate"
        assert lines[1].startswith("40x40,69") and lines[1].endswith(",")
        assert lines[2].split(",")[2] == "1.7160000000000000"[: len(lines[2].split(",")[2])]
