"""Layers whose edges carry learnable univariate functions.

Each edge from input j to output i applies

    edge_ij(x) = scale_ij * (base_ij * silu(x) + sum_c coeff_ijc * B_c(x))

where B_c are the shared B-spline basis functions of the layer's grid.
Outputs are the per-node sums of edge values, optionally passed through
a fixed node activation.  The convolutional variant applies the same
construction per sliding-window tap; zero-padding positions are skipped
entirely so they contribute exactly zero rather than edge(0).

Inputs are clamped to the grid range before both the base and spline
paths, so the input gradient vanishes where clamping was active.
"""

from __future__ import annotations

import numpy as np

from .layers import Layer, _activation, silu, silu_grad
from .splines import SplineGrid, basis_derivative, basis_eval


def _init_edge_params(rng, shape, fan_in, n_basis, dtype):
    coeffs = rng.normal(0.0, 0.1 / np.sqrt(n_basis), size=shape + (n_basis,))
    bound = 1.0 / np.sqrt(fan_in)
    base = rng.uniform(-bound, bound, size=shape)
    scales = np.ones(shape)
    return coeffs.astype(dtype), base.astype(dtype), scales.astype(dtype)


def smoothness_penalty(layer, weight):
    """Optional squared-difference penalty on adjacent spline coefficients.

    Returns the penalty value and accumulates its gradient; weight 0 is
    a no-op.  Rough curvature control for the learned edge functions.
    """
    if weight == 0.0:
        return 0.0
    c = layer.spline_coeffs
    diff = c[..., 1:] - c[..., :-1]
    grad = np.zeros_like(c)
    grad[..., 1:] += 2.0 * weight * diff
    grad[..., :-1] -= 2.0 * weight * diff
    layer._grads["spline_coeffs"] += grad
    return float(weight * (diff * diff).sum())


class KanLinear(Layer):
    """Dense layer of learnable edge functions; node sum then activation."""

    def __init__(self, in_features, out_features, grid=None, rng=None,
                 node_activation="identity", dtype=np.float64):
        super().__init__()
        if in_features < 1 or out_features < 1:
            raise ValueError("layer widths must be >= 1")
        self.in_features = in_features
        self.out_features = out_features
        self.grid = grid if grid is not None else SplineGrid()
        rng = rng if rng is not None else np.random.default_rng(0)
        coeffs, base, scales = _init_edge_params(
            rng, (out_features, in_features), in_features, self.grid.n_basis, dtype
        )
        self.spline_coeffs = self.add_param("spline_coeffs", coeffs)
        self.base_weights = self.add_param("base_weights", base)
        self.scales = self.add_param("scales", scales)
        self.node_activation = node_activation
        self._node = _activation(node_activation)

    def param_prefix(self):
        return "kan."

    def forward(self, x):
        if x.ndim != 2 or x.shape[1] != self.in_features:
            raise ValueError(
                f"kan linear expects (batch, {self.in_features}), got {x.shape}"
            )
        g = self.grid
        xc = g.clamp(x)
        inside = ((x >= g.range_min) & (x <= g.range_max)).astype(x.dtype)
        basis = basis_eval(g, xc).astype(x.dtype)          # (n, in, B)
        sx = silu(xc)
        n, fi, nb = basis.shape
        sc = (self.scales[:, :, None] * self.spline_coeffs)
        z = sx @ (self.scales * self.base_weights).T
        z += basis.reshape(n, fi * nb) @ sc.reshape(self.out_features, fi * nb).T
        self._cache = (xc, inside, basis, sx)
        return self._node.forward(z)

    def backward(self, grad):
        if not hasattr(self, "_cache"):
            raise RuntimeError("backward before forward")
        xc, inside, basis, sx = self._cache
        dz = self._node.backward(grad)                     # (n, out)
        n, fi, nb = basis.shape
        # t[o,i,c] = sum_n dz[n,o] * basis[n,i,c]
        t = (dz.T @ basis.reshape(n, fi * nb)).reshape(self.out_features, fi, nb)
        self._grads["spline_coeffs"] += t * self.scales[:, :, None]
        dzt_sx = dz.T @ sx                                 # (out, in)
        self._grads["base_weights"] += dzt_sx * self.scales
        self._grads["scales"] += (dzt_sx * self.base_weights
                                  + (t * self.spline_coeffs).sum(axis=-1))
        # input path: base derivative plus spline derivative, masked by clamp
        sw = self.scales * self.base_weights
        dxc = silu_grad(xc) * (dz @ sw)
        dbasis = basis_derivative(self.grid, xc).astype(grad.dtype)
        sc = (self.scales[:, :, None] * self.spline_coeffs)
        u = (dz @ sc.reshape(self.out_features, fi * nb)).reshape(n, fi, nb)
        dxc += (u * dbasis).sum(axis=-1)
        return dxc * inside

    def param_count(self):
        return self.out_features * self.in_features * (self.grid.n_basis + 2)


class KanConv1d(Layer):
    """1-D convolution whose kernel taps are learnable edge functions."""

    def __init__(self, in_channels, out_channels, width, stride=1, padding=0,
                 grid=None, rng=None, dtype=np.float64):
        super().__init__()
        if in_channels < 1 or out_channels < 1:
            raise ValueError("channel counts must be >= 1")
        if width < 1 or stride < 1:
            raise ValueError("kernel width and stride must be >= 1")
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.width = width
        self.stride = stride
        self.padding = padding
        self.grid = grid if grid is not None else SplineGrid()
        rng = rng if rng is not None else np.random.default_rng(0)
        coeffs, base, scales = _init_edge_params(
            rng, (out_channels, in_channels, width), in_channels * width,
            self.grid.n_basis, dtype
        )
        self.spline_coeffs = self.add_param("spline_coeffs", coeffs)
        self.base_weights = self.add_param("base_weights", base)
        self.scales = self.add_param("scales", scales)

    def param_prefix(self):
        return "kan."

    def output_length(self, length):
        return (length + 2 * self.padding - self.width) // self.stride + 1

    def _windows(self, arr, l_out):
        """Stack the w strided views tap-by-tap: (n, ci, l_out, w, ...)."""
        s, w = self.stride, self.width
        shape = arr.shape[:2] + (l_out, w) + arr.shape[3:]
        win = np.empty(shape, dtype=arr.dtype)
        for u in range(w):
            win[:, :, :, u] = arr[:, :, u:u + s * (l_out - 1) + 1][:, :, ::s]
        return win

    def forward(self, x):
        n, ci, length = x.shape
        if ci != self.in_channels:
            raise ValueError(f"expected {self.in_channels} input channels, got {ci}")
        l_out = self.output_length(length)
        if l_out < 1:
            raise ValueError(f"kan conv output length {l_out} < 1")
        g, p, w, co = self.grid, self.padding, self.width, self.out_channels
        nb = g.n_basis
        xc = g.clamp(x)
        inside = ((x >= g.range_min) & (x <= g.range_max)).astype(x.dtype)
        basis = basis_eval(g, xc).astype(x.dtype)          # (n, ci, L, B)
        sx = silu(xc)
        if p:
            # pad the feature maps with zeros, not the raw signal: a padded
            # position then contributes 0 instead of edge(0)
            basis = np.pad(basis, ((0, 0), (0, 0), (p, p), (0, 0)))
            sx = np.pad(sx, ((0, 0), (0, 0), (p, p)))
        bwin = self._windows(basis, l_out)                 # (n, ci, l_out, w, B)
        swin = self._windows(sx[..., None], l_out)[..., 0]  # (n, ci, l_out, w)
        smat = swin.transpose(0, 2, 1, 3).reshape(n * l_out, ci * w)
        bmat = bwin.transpose(0, 2, 1, 3, 4).reshape(n * l_out, ci * w * nb)
        sw = (self.scales * self.base_weights).reshape(co, ci * w)
        sc = (self.scales[..., None] * self.spline_coeffs).reshape(co, ci * w * nb)
        y = smat @ sw.T + bmat @ sc.T
        self._cache = (x.shape, xc, inside, smat, bmat, l_out)
        return y.reshape(n, l_out, co).transpose(0, 2, 1)

    def backward(self, grad):
        xshape, xc, inside, smat, bmat, l_out = self._cache
        n, ci, length = xshape
        g, p, s, w, co = self.grid, self.padding, self.stride, self.width, self.out_channels
        nb = g.n_basis
        gmat = grad.transpose(0, 2, 1).reshape(n * l_out, co)
        t = (gmat.T @ bmat).reshape(co, ci, w, nb)
        self._grads["spline_coeffs"] += t * self.scales[..., None]
        dzt_sx = (gmat.T @ smat).reshape(co, ci, w)
        self._grads["base_weights"] += dzt_sx * self.scales
        self._grads["scales"] += (dzt_sx * self.base_weights
                                  + (t * self.spline_coeffs).sum(axis=-1))
        # scatter window gradients back onto signal positions
        sw = (self.scales * self.base_weights).reshape(co, ci * w)
        sc = (self.scales[..., None] * self.spline_coeffs).reshape(co, ci * w * nb)
        dswin = (gmat @ sw).reshape(n, l_out, ci, w).transpose(0, 2, 1, 3)
        dbwin = (gmat @ sc).reshape(n, l_out, ci, w, nb).transpose(0, 2, 1, 3, 4)
        lp = length + 2 * p
        dsx = np.zeros((n, ci, lp), dtype=grad.dtype)
        dbasis = np.zeros((n, ci, lp, nb), dtype=grad.dtype)
        for u in range(w):
            sl = slice(u, u + s * (l_out - 1) + 1, s)
            dsx[:, :, sl] += dswin[..., u]
            dbasis[:, :, sl] += dbwin[:, :, :, u]
        if p:
            dsx = dsx[:, :, p:p + length]
            dbasis = dbasis[:, :, p:p + length]
        dxc = dsx * silu_grad(xc)
        dxc += (dbasis * basis_derivative(g, xc).astype(grad.dtype)).sum(axis=-1)
        return dxc * inside

    def param_count(self):
        return (self.out_channels * self.in_channels * self.width
                * (self.grid.n_basis + 2))
