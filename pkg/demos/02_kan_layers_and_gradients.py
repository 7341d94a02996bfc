"""Spline-edge layers: forward, backward, and the gradient checker.

Run:  python demos/02_kan_layers_and_gradients.py
"""

import numpy as np

from kanae import KanConv1d, KanLinear, SplineGrid, gradcheck

rng = np.random.default_rng(42)
grid = SplineGrid()

# A dense layer whose 4 x 3 edges each carry a learnable univariate
# function: silu base + spline, times a per-edge scale.
layer = KanLinear(3, 4, grid, rng)
print("edge parameter tensors:")
for name, p in layer.named_parameters():
    print(f"  {name:28s} {p.shape}")
print("parameter count:", layer.param_count(), "(= out*in*(B+2))")

x = rng.uniform(-1.5, 1.5, (2, 3))
y = layer.forward(x)
print("\nforward (2,3) ->", y.shape)

# Backward returns the input gradient and accumulates parameter grads.
layer.zero_grad()
dx = layer.backward(np.ones_like(y))
print("input gradient shape:", dx.shape)

# The gradient checker compares every path against central differences.
report = gradcheck(layer, x, tolerance=1e-5, rng=rng)
print("gradcheck:", report.summary())

# The convolutional variant applies the same edge construction per
# sliding-window tap; zero-padding positions contribute exactly zero.
conv = KanConv1d(in_channels=1, out_channels=4, width=5, stride=2,
                 padding=2, grid=grid, rng=rng)
signal = rng.uniform(-2, 2, (2, 1, 32))
out = conv.forward(signal)
print("\nconv forward (2,1,32) ->", out.shape)
print("conv gradcheck:", gradcheck(conv, signal, 1e-5, rng=rng).summary())
