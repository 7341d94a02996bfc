"""Uniform B-spline bases on a fixed knot grid.

Every learnable edge function in this package is a coefficient-weighted
sum of the basis functions defined here.  The grid is immutable; all
evaluation routines are pure functions, so one grid can be shared by any
number of layers and threads.

Conventions:
  * ``order`` is the spline order k (degree = k - 1); k=4 means cubics.
  * ``grid_size`` G is the number of interior intervals on
    ``[range_min, range_max]``.
  * The knot vector holds G+1 uniform knots spanning the range plus k-1
    uniformly extended knots on each side, G + 2k - 1 knots total.
  * That layout carries B = G + k - 1 basis functions whose values
    partition unity on the range.
  * Inputs outside the range are clamped to the nearest endpoint before
    evaluation; evaluation itself is total on finite inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class SplineGrid:
    """Knot layout shared by all edge functions of one layer."""

    order: int = 4
    grid_size: int = 5
    range_min: float = -2.0
    range_max: float = 2.0
    knots: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.order < 2:
            raise ValueError(f"spline order must be >= 2, got {self.order}")
        if self.grid_size < 1:
            raise ValueError(f"grid_size must be >= 1, got {self.grid_size}")
        if not (self.range_min < self.range_max):
            raise ValueError(
                f"empty grid range [{self.range_min}, {self.range_max}]"
            )
        k, g = self.order, self.grid_size
        h = (self.range_max - self.range_min) / g
        idx = np.arange(-(k - 1), g + k, dtype=np.float64)
        object.__setattr__(self, "knots", self.range_min + h * idx)

    @property
    def spacing(self) -> float:
        return (self.range_max - self.range_min) / self.grid_size

    @property
    def n_basis(self) -> int:
        return self.grid_size + self.order - 1

    def clamp(self, x):
        return np.clip(x, self.range_min, self.range_max)


def _spans(grid: SplineGrid, xc: np.ndarray) -> np.ndarray:
    """Index s of the knot interval [t_s, t_{s+1}) containing each point.

    Points exactly at range_max are assigned to the last interior
    interval so the half-open convention never drops them.
    """
    p = grid.order - 1
    raw = np.floor((xc - grid.range_min) / grid.spacing).astype(np.int64) + p
    return np.clip(raw, p, p + grid.grid_size - 1)


def _triangular(grid: SplineGrid, xc: np.ndarray, spans: np.ndarray):
    """Cox-de Boor triangle at each point.

    Returns (values of the k nonzero order-k functions, values of the
    k-1 nonzero order-(k-1) functions).  Row r of the first array is
    basis index spans - (k-1) + r.
    """
    k = grid.order
    p = k - 1
    t = grid.knots
    shape = xc.shape
    vals = np.zeros(shape + (k,), dtype=np.float64)
    vals[..., 0] = 1.0
    lower = vals[..., :1].copy()  # degenerate for k=2 path below
    left = np.empty(shape + (k,), dtype=np.float64)
    right = np.empty(shape + (k,), dtype=np.float64)
    for j in range(1, p + 1):
        if j == p:
            lower = vals[..., :p].copy()
        left[..., j] = xc - t[spans + 1 - j]
        right[..., j] = t[spans + j] - xc
        saved = np.zeros(shape, dtype=np.float64)
        for r in range(j):
            temp = vals[..., r] / (right[..., r + 1] + left[..., j - r])
            vals[..., r] = saved + right[..., r + 1] * temp
            saved = left[..., j - r] * temp
        vals[..., j] = saved
    return vals, lower


def _scatter(grid: SplineGrid, spans: np.ndarray, local: np.ndarray) -> np.ndarray:
    """Place the k local values into full-width basis vectors."""
    out = np.zeros(spans.shape + (grid.n_basis,), dtype=np.float64)
    first = spans - (grid.order - 1)
    idx = first[..., None] + np.arange(local.shape[-1])
    np.put_along_axis(out, idx, local, axis=-1)
    return out


def basis_eval(grid: SplineGrid, x) -> np.ndarray:
    """Values of all B basis functions at x (scalar or array).

    Output shape is ``x.shape + (B,)`` for arrays and ``(B,)`` for a
    scalar.  At most k entries per point are nonzero; inside the range
    they are nonnegative and sum to one.
    """
    x = np.asarray(x, dtype=np.float64)
    xc = grid.clamp(x)
    spans = _spans(grid, xc)
    vals, _ = _triangular(grid, xc, spans)
    return _scatter(grid, spans, vals)


def basis_derivative(grid: SplineGrid, x) -> np.ndarray:
    """First derivative of every basis function at (clamped) x.

    Uses the recurrence dB_{i,k} = (B_{i,k-1} - B_{i+1,k-1}) / h, valid
    because the knots are uniform with spacing h.  At a clamped point
    this is the one-sided derivative at the range boundary.
    """
    x = np.asarray(x, dtype=np.float64)
    xc = grid.clamp(x)
    spans = _spans(grid, xc)
    _, lower = _triangular(grid, xc, spans)
    k = grid.order
    shape = xc.shape
    # lower holds the k-1 nonzero order-(k-1) values, at indices
    # spans-(k-2) .. spans; pad both ends so the difference lines up
    # with the k order-k indices spans-(k-1) .. spans.
    padded = np.zeros(shape + (k + 1,), dtype=np.float64)
    padded[..., 1:k] = lower
    local = (padded[..., :k] - padded[..., 1:]) / grid.spacing
    return _scatter(grid, spans, local)


def spline_eval(grid: SplineGrid, coeffs, x):
    """Coefficient-weighted spline value: dot(coeffs, basis_eval(x))."""
    coeffs = np.asarray(coeffs, dtype=np.float64)
    if coeffs.shape != (grid.n_basis,):
        raise ValueError(
            f"expected {grid.n_basis} coefficients, got shape {coeffs.shape}"
        )
    return basis_eval(grid, x) @ coeffs
