import numpy as np
import pytest

from kanae.splines import SplineGrid, basis_derivative, basis_eval, spline_eval


def cox_de_boor_oracle(knots, i, order, x):
    """Textbook recursive definition, kept independent of the library."""
    if order == 1:
        return 1.0 if knots[i] <= x < knots[i + 1] else 0.0
    left = 0.0
    denom = knots[i + order - 1] - knots[i]
    if denom > 0:
        left = (x - knots[i]) / denom * cox_de_boor_oracle(knots, i, order - 1, x)
    right = 0.0
    denom = knots[i + order] - knots[i + 1]
    if denom > 0:
        right = (knots[i + order] - x) / denom * cox_de_boor_oracle(knots, i + 1, order - 1, x)
    return left + right


def oracle_basis(grid, x):
    return np.array([cox_de_boor_oracle(grid.knots, i, grid.order, x)
                     for i in range(grid.n_basis)])


GRIDS = [SplineGrid(2, 1, 0.0, 1.0), SplineGrid(4, 5, -1.0, 1.0),
         SplineGrid(4, 12, -2.0, 2.0)]


class TestGridConstruction:
    def test_knot_layout(self):
        g = SplineGrid(4, 5, -1.0, 1.0)
        assert len(g.knots) == 5 + 2 * 4 - 1
        assert np.allclose(np.diff(g.knots), g.spacing)
        assert g.n_basis == 8

    @pytest.mark.parametrize("kwargs", [
        dict(order=1), dict(grid_size=0), dict(range_min=1.0, range_max=1.0),
        dict(range_min=2.0, range_max=-2.0),
    ])
    def test_invalid_grid_rejected(self, kwargs):
        with pytest.raises(ValueError):
            SplineGrid(**{**dict(order=4, grid_size=5,
                                 range_min=-1.0, range_max=1.0), **kwargs})


class TestBasisEval:
    def test_hat_left_endpoint(self):
        g = SplineGrid(2, 1, 0.0, 1.0)
        assert np.allclose(basis_eval(g, 0.0), [1.0, 0.0])

    def test_hat_midpoint(self):
        g = SplineGrid(2, 1, 0.0, 1.0)
        assert np.allclose(basis_eval(g, 0.5), [0.5, 0.5])

    def test_matches_recursion_oracle(self):
        g = SplineGrid(4, 5, -1.0, 1.0)
        assert np.allclose(basis_eval(g, 0.3), oracle_basis(g, 0.3), atol=1e-12)

    def test_oracle_on_random_points(self):
        rng = np.random.default_rng(11)
        for g in GRIDS:
            for x in rng.uniform(g.range_min, g.range_max, 25):
                np.testing.assert_allclose(basis_eval(g, x), oracle_basis(g, x),
                                           atol=1e-12)

    @pytest.mark.parametrize("grid", GRIDS)
    def test_partition_of_unity(self, grid):
        rng = np.random.default_rng(5)
        xs = rng.uniform(grid.range_min, grid.range_max, 1000)
        xs = np.concatenate([xs, [grid.range_min, grid.range_max]])
        sums = basis_eval(grid, xs).sum(axis=-1)
        assert np.abs(sums - 1.0).max() < 1e-9

    @pytest.mark.parametrize("grid", GRIDS)
    def test_local_support(self, grid):
        rng = np.random.default_rng(6)
        xs = rng.uniform(grid.range_min, grid.range_max, 200)
        vals = basis_eval(grid, xs)
        assert ((vals != 0).sum(axis=-1) <= grid.order).all()

    def test_nonnegative_inside_range(self):
        g = SplineGrid(4, 7, -3.0, 3.0)
        xs = np.linspace(-3, 3, 501)
        assert (basis_eval(g, xs) >= 0).all()

    def test_clamping_idempotent(self):
        g = SplineGrid(4, 5, -1.0, 1.0)
        outside = np.array([-5.0, -1.0001, 1.7, 42.0])
        clamped = np.clip(outside, -1.0, 1.0)
        assert np.array_equal(basis_eval(g, outside), basis_eval(g, clamped))

    def test_array_shapes(self):
        g = SplineGrid(4, 5, -1.0, 1.0)
        assert basis_eval(g, 0.1).shape == (8,)
        assert basis_eval(g, np.zeros((3, 4))).shape == (3, 4, 8)


class TestBasisDerivative:
    def test_hat_slopes(self):
        g = SplineGrid(2, 1, 0.0, 1.0)
        assert np.allclose(basis_derivative(g, 0.5), [-1.0, 1.0])

    @pytest.mark.parametrize("grid", GRIDS)
    def test_derivatives_sum_to_zero_inside(self, grid):
        rng = np.random.default_rng(7)
        span = grid.range_max - grid.range_min
        xs = rng.uniform(grid.range_min + 0.01 * span,
                         grid.range_max - 0.01 * span, 500)
        sums = basis_derivative(grid, xs).sum(axis=-1)
        assert np.abs(sums).max() < 1e-9

    @pytest.mark.parametrize("grid", GRIDS)
    def test_matches_finite_differences(self, grid):
        # keep probe points clear of knots: for order 2 the derivative
        # jumps there, and the clamp kinks the boundary
        rng = np.random.default_rng(8)
        h = 1e-6
        xs = rng.uniform(grid.range_min, grid.range_max, 1000)
        dist = np.abs(xs[:, None] - grid.knots[None, :]).min(axis=1)
        xs = xs[(dist > 1e-4)
                & (xs > grid.range_min + 1e-3) & (xs < grid.range_max - 1e-3)]
        fd = (basis_eval(grid, xs + h) - basis_eval(grid, xs - h)) / (2 * h)
        an = basis_derivative(grid, xs)
        scale = np.maximum(np.abs(fd).max(axis=-1, keepdims=True), 1.0)
        assert (np.abs(an - fd) / scale).max() < 1e-5

    def test_specific_point_against_fd(self):
        g = SplineGrid(4, 5, -1.0, 1.0)
        h = 1e-6
        fd = (basis_eval(g, 0.3 + h) - basis_eval(g, 0.3 - h)) / (2 * h)
        an = basis_derivative(g, 0.3)
        assert np.abs(an - fd).max() / np.abs(fd).max() < 1e-5


class TestSplineEval:
    def test_zero_coeffs(self):
        g = SplineGrid(4, 5, -1.0, 1.0)
        assert spline_eval(g, np.zeros(8), 0.3) == 0.0

    def test_partition_of_unity_through_coeffs(self):
        g = SplineGrid(4, 5, -1.0, 1.0)
        assert abs(spline_eval(g, np.ones(8), 0.123) - 1.0) < 1e-9

    def test_matches_explicit_dot(self):
        g = SplineGrid(4, 8, -1.0, 1.0)
        rng = np.random.default_rng(9)
        coeffs = rng.standard_normal(g.n_basis)
        expected = float(coeffs @ oracle_basis(g, 0.25))
        assert abs(spline_eval(g, coeffs, 0.25) - expected) < 1e-12

    def test_coefficient_length_checked(self):
        g = SplineGrid(4, 5, -1.0, 1.0)
        with pytest.raises(ValueError):
            spline_eval(g, np.ones(7), 0.0)
