"""Walk through the spline machinery that powers every edge function.

Run:  python demos/01_spline_edge_functions.py
"""

import numpy as np

from kanae import SplineGrid, basis_derivative, basis_eval, spline_eval

# A grid of cubic B-splines (order 4) with 5 interior intervals on
# [-4, 4].  It carries G + k - 1 = 8 basis functions.
grid = SplineGrid(order=4, grid_size=5, range_min=-4.0, range_max=4.0)
print(f"knots ({len(grid.knots)}):", np.round(grid.knots, 2))
print("basis functions:", grid.n_basis)

# Basis values at a point always sum to one inside the range and at most
# k of them are nonzero (local support).
x = 0.73
vals = basis_eval(grid, x)
print(f"\nbasis at x={x}:", np.round(vals, 4))
print("sum:", vals.sum(), " nonzero:", int((vals != 0).sum()))

# Derivatives come from the same recursion one order down; inside the
# range they sum to zero because the basis sums to a constant.
dvals = basis_derivative(grid, x)
print("derivative sum:", f"{dvals.sum():+.2e}")

# An edge function is just a coefficient vector over this basis.  Out of
# range inputs are clamped, so the function is flat beyond the grid.
rng = np.random.default_rng(0)
coeffs = rng.normal(0, 0.5, grid.n_basis)
xs = np.linspace(-6, 6, 13)
ys = [spline_eval(grid, coeffs, float(v)) for v in xs]
print("\nspline curve on [-6, 6] (clamped outside [-4, 4]):")
for v, y in zip(xs, ys):
    bar = "#" * int(20 * (y - min(ys)) / (max(ys) - min(ys) + 1e-12))
    print(f"  x={v:+5.1f}  y={y:+7.4f}  {bar}")
