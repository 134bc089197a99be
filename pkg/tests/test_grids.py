import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from siwskit import (
    FrequencyGrid,
    GeometricGrid,
    GridError,
    MellinLine,
    QuadratureWarning,
    ValidationError,
    edge_decay_ok,
    mellin_forward,
    mellin_inverse,
    partial_mellin,
)
from siwskit.grids import check_edge_decay

from conftest import mq_closed

TWO_PI = 2.0 * np.pi


def q_samples(grid, H=0.5):
    u = grid.log_points
    return np.exp(2 * H * u - 0.5 * u * u)


class TestGridTypes:
    def test_points_are_geometric(self):
        g = GeometricGrid(t_min=0.5, ratio=1.25, n=10)
        t = g.points
        assert np.all(t > 0)
        assert np.all(np.diff(t) > 0)
        np.testing.assert_allclose(np.diff(np.log(t)), g.log_step, rtol=1e-14)

    def test_invalid_grids_rejected(self):
        with pytest.raises(GridError):
            GeometricGrid(t_min=-1.0, ratio=1.5, n=4)
        with pytest.raises(GridError):
            GeometricGrid(t_min=1.0, ratio=1.0, n=4)
        with pytest.raises(GridError):
            GeometricGrid(t_min=1.0, ratio=1.5, n=0)
        with pytest.raises(GridError):
            FrequencyGrid(center=0.0, step=0.0, n=4)

    def test_frequency_grid_centered(self):
        f = FrequencyGrid(center=0.0, step=0.5, n=5)
        np.testing.assert_allclose(f.points, [-1.0, -0.5, 0.0, 0.5, 1.0])

    def test_line_length_checked(self):
        f = FrequencyGrid(center=0.0, step=0.5, n=5)
        with pytest.raises(GridError):
            MellinLine(grid=f, values=np.zeros(3))


class TestMellinForward:
    def test_log_gaussian_oracle(self):
        # analytic value sqrt(2*pi)*e^(1/2) at H=0.5, theta=0
        grid = GeometricGrid.from_log_span(-10.0, 12.0, 441)
        out = FrequencyGrid(center=0.0, step=0.25, n=9)
        line = mellin_forward(q_samples(grid), grid, out)
        expected = mq_closed(0.5, out.points)
        np.testing.assert_allclose(line.values, expected, rtol=1e-6)
        assert abs(line.values[4] - 4.132731354122493) < 1e-6

    def test_zero_input_gives_zero_line(self):
        grid = GeometricGrid.from_log_span(-3.0, 3.0, 31)
        out = FrequencyGrid(center=0.0, step=0.1, n=11)
        line = mellin_forward(np.zeros(31), grid, out)
        assert np.all(line.values == 0)

    def test_matches_brute_force_riemann(self):
        # independent oracle: plain Riemann sum over ln t at twice the resolution
        grid = GeometricGrid.from_log_span(-6.0, 6.0, 241)
        fine = GeometricGrid.from_log_span(-6.0, 6.0, 481)
        g = lambda u: np.exp(-2.0 * u * u)  # bump in ln t centered at u=0
        out = FrequencyGrid(center=0.0, step=0.3, n=7)
        line = mellin_forward(g(grid.log_points), grid, out)
        uf = fine.log_points
        hf = fine.log_step
        oracle = np.array(
            [np.sum(g(uf) * np.exp(-1j * TWO_PI * th * uf)) * hf for th in out.points]
        )
        np.testing.assert_allclose(line.values, oracle, rtol=1e-6)

    def test_nan_rejected(self):
        grid = GeometricGrid.from_log_span(-1.0, 1.0, 8)
        vals = np.ones(8)
        vals[3] = np.nan
        with pytest.raises(ValidationError):
            mellin_forward(vals, grid, FrequencyGrid(center=0.0, step=0.1, n=3))

    def test_single_point_grid_rejected(self):
        grid = GeometricGrid(t_min=1.0, ratio=2.0, n=1)
        with pytest.raises(GridError):
            mellin_forward(np.ones(1), grid, FrequencyGrid(center=0.0, step=0.1, n=3))

    @settings(max_examples=25, deadline=None)
    @given(
        a=st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False),
        b=st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False),
    )
    def test_linearity(self, a, b):
        grid = GeometricGrid.from_log_span(-2.0, 2.0, 33)
        out = FrequencyGrid(center=0.0, step=0.2, n=7)
        rng = np.random.default_rng(3)
        f = rng.standard_normal(33) + 1j * rng.standard_normal(33)
        g = rng.standard_normal(33) + 1j * rng.standard_normal(33)
        lhs = mellin_forward(a * f + b * g, grid, out).values
        rhs = a * mellin_forward(f, grid, out).values + b * mellin_forward(g, grid, out).values
        np.testing.assert_allclose(lhs, rhs, atol=1e-12 * (1 + abs(a) + abs(b)))

    def test_grid_refinement_improves_oracle_error(self):
        # aliasing dominates at ln-step 1.0 and collapses at 0.5
        out = FrequencyGrid(center=0.0, step=0.05, n=3)
        errs = []
        for n in (27, 53):
            grid = GeometricGrid.from_log_span(-12.0, 14.0, n)
            line = mellin_forward(q_samples(grid), grid, out)
            errs.append(np.abs(line.values - mq_closed(0.5, out.points)).max())
        assert errs[0] >= 2.0 * errs[1]
        assert errs[0] > 1e-10  # coarse error is real, not already at the floor


class TestMellinInverse:
    def test_round_trip(self):
        grid = GeometricGrid.from_log_span(-8.0, 10.0, 361)
        out = FrequencyGrid(center=0.0, step=0.02, n=131)
        g = q_samples(grid)
        back = mellin_inverse(mellin_forward(g, grid, out), grid)
        assert np.abs(back - g).max() / np.abs(g).max() <= 1e-6

    def test_zero_line(self):
        grid = GeometricGrid.from_log_span(-1.0, 1.0, 11)
        line = MellinLine(grid=FrequencyGrid(center=0.0, step=0.1, n=5), values=np.zeros(5, complex))
        assert np.all(mellin_inverse(line, grid) == 0)

    def test_single_bin_unit_mass(self):
        # one interior theta bin of unit mass -> t^(i 2 pi theta0) * step
        freqs = FrequencyGrid(center=0.0, step=0.125, n=5)
        vals = np.zeros(5, dtype=complex)
        vals[3] = 1.0
        theta0 = freqs.points[3]
        grid = GeometricGrid.from_log_span(-1.0, 1.0, 9)
        got = mellin_inverse(MellinLine(grid=freqs, values=vals), grid)
        expected = np.exp(1j * TWO_PI * theta0 * grid.log_points) * freqs.step
        np.testing.assert_allclose(got, expected, rtol=1e-13)


class TestPartialMellin:
    def test_degenerate_single_row(self):
        grid = GeometricGrid.from_log_span(-2.0, 2.0, 21)
        out = FrequencyGrid(center=0.0, step=0.2, n=7)
        row = q_samples(grid)
        direct = mellin_forward(row, grid, out).values
        part = partial_mellin(row[None, :], axis=2, grid_in=grid, grid_out=out)
        np.testing.assert_allclose(part[0], direct, rtol=1e-14)

    def test_separable_outer_product(self):
        g1 = GeometricGrid.from_log_span(-2.0, 2.0, 21)
        g2 = GeometricGrid.from_log_span(-1.5, 1.5, 17)
        f1 = FrequencyGrid(center=0.0, step=0.2, n=9)
        f2 = FrequencyGrid(center=0.0, step=0.25, n=7)
        a = q_samples(g1)
        b = np.exp(-1.5 * g2.log_points**2)
        mat = np.outer(a, b)
        step1 = partial_mellin(mat, axis=1, grid_in=g1, grid_out=f1)
        step2 = partial_mellin(step1, axis=2, grid_in=g2, grid_out=f2)
        expected = np.outer(
            mellin_forward(a, g1, f1).values, mellin_forward(b, g2, f2).values
        )
        np.testing.assert_allclose(step2, expected, atol=1e-10 * np.abs(expected).max())

    def test_forward_inverse_identity(self):
        # period-matched grids give an exact discrete inverse
        grid = GeometricGrid.from_log_span(-2.0, 2.0, 16)
        freqs = FrequencyGrid(center=0.0, step=1.0 / (grid.log_step * 16), n=16)
        rng = np.random.default_rng(5)
        mat = rng.standard_normal((16, 4)) + 1j * rng.standard_normal((16, 4))
        fwd = partial_mellin(mat, axis=1, grid_in=grid, grid_out=freqs)
        back = partial_mellin(fwd, axis=1, grid_in=freqs, grid_out=grid, inverse=True)
        assert np.abs(back - mat).max() / np.abs(mat).max() <= 1e-6

    def test_axis_mismatch_rejected(self):
        grid = GeometricGrid.from_log_span(-2.0, 2.0, 21)
        out = FrequencyGrid(center=0.0, step=0.2, n=7)
        with pytest.raises(GridError):
            partial_mellin(np.zeros((5, 5)), axis=1, grid_in=grid, grid_out=out)
        with pytest.raises(GridError):
            partial_mellin(np.zeros((21, 5)), axis=3, grid_in=grid, grid_out=out)


class TestEdgeDecay:
    def test_ok_for_decayed_bump(self):
        u = np.linspace(-8, 8, 201)
        assert edge_decay_ok(np.exp(-u * u))

    def test_warns_for_truncated_mass(self):
        with pytest.warns(QuadratureWarning):
            check_edge_decay(np.ones(16))
