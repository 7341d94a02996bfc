"""Dense tensors and standard layers with hand-derived backward passes.

All layers share one contract: ``forward`` caches whatever ``backward``
needs, ``backward`` accumulates parameter gradients (same shapes as the
parameters) and returns the gradient with respect to the layer input.
Evaluation-mode forward is a pure function of (parameters, input).

Tensors are plain numpy arrays, float64 for gradient-check builds and
float32 for benchmark builds.
"""

from __future__ import annotations

import numpy as np


class NumericError(RuntimeError):
    """Non-finite value produced where only finite tensors are allowed."""


def check_finite(name, arr):
    if not np.all(np.isfinite(arr)):
        raise NumericError(f"non-finite values in {name}")


def sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def silu(x):
    return x * sigmoid(x)


def silu_grad(x):
    s = sigmoid(x)
    return s * (1.0 + x * (1.0 - s))


class Layer:
    """Base contract: cached forward, accumulating backward."""

    def __init__(self):
        self.training = True
        self._params = {}
        self._grads = {}

    def forward(self, x):
        raise NotImplementedError

    def backward(self, grad):
        raise NotImplementedError

    def __call__(self, x):
        return self.forward(x)

    # parameter bookkeeping -------------------------------------------------

    def params(self):
        return self._params

    def grads(self):
        return self._grads

    def children(self):
        return []

    def add_param(self, name, value):
        self._params[name] = value
        self._grads[name] = np.zeros_like(value)
        return value

    def zero_grad(self):
        for g in self._grads.values():
            g[...] = 0.0
        for _, child in self.children():
            child.zero_grad()

    def set_training(self, flag=True):
        self.training = flag
        for _, child in self.children():
            child.set_training(flag)

    def named_parameters(self, prefix=""):
        """(name, array) pairs for this subtree, checkpoint order."""
        out = []
        local = prefix[:-1] if prefix else ""
        for key, value in self._params.items():
            name = f"{local}.{key}" if local else key
            out.append((self.param_prefix() + name, value))
        for child_name, child in self.children():
            out.extend(child.named_parameters(prefix + child_name + "."))
        return out

    def named_gradients(self, prefix=""):
        out = []
        local = prefix[:-1] if prefix else ""
        for key, value in self._grads.items():
            name = f"{local}.{key}" if local else key
            out.append((self.param_prefix() + name, value))
        for child_name, child in self.children():
            out.extend(child.named_gradients(prefix + child_name + "."))
        return out

    def buffers(self):
        """Non-learnable state that still belongs in checkpoints."""
        return {}

    def named_buffers(self, prefix=""):
        out = []
        local = prefix[:-1] if prefix else ""
        for key, value in self.buffers().items():
            name = f"{local}.{key}" if local else key
            out.append((self.param_prefix() + name, value))
        for child_name, child in self.children():
            out.extend(child.named_buffers(prefix + child_name + "."))
        return out

    def named_layers(self, prefix=""):
        yield (prefix[:-1] if prefix else ""), self
        for child_name, child in self.children():
            yield from child.named_layers(prefix + child_name + ".")

    def param_prefix(self):
        return ""

    def param_count(self):
        n = sum(p.size for p in self._params.values())
        return n + sum(c.param_count() for _, c in self.children())

    def reseed(self, seed_seq):
        """Reset any internal random streams (dropout) deterministically."""
        for _, child in self.children():
            child.reseed(seed_seq)


def _uniform_fan_in(rng, shape, fan_in, dtype):
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape).astype(dtype)


class Linear(Layer):
    def __init__(self, in_features, out_features, rng, dtype=np.float64):
        super().__init__()
        self.in_features = in_features
        self.out_features = out_features
        self.weight = self.add_param(
            "weight", _uniform_fan_in(rng, (out_features, in_features), in_features, dtype)
        )
        self.bias = self.add_param(
            "bias", _uniform_fan_in(rng, (out_features,), in_features, dtype)
        )
        self._x = None

    def forward(self, x):
        if x.ndim != 2 or x.shape[1] != self.in_features:
            raise ValueError(
                f"linear expects (batch, {self.in_features}), got {x.shape}"
            )
        self._x = x
        return x @ self.weight.T + self.bias

    def backward(self, grad):
        if self._x is None:
            raise RuntimeError("backward before forward")
        self._grads["weight"] += grad.T @ self._x
        self._grads["bias"] += grad.sum(axis=0)
        return grad @ self.weight


class SiLU(Layer):
    def forward(self, x):
        self._x = x
        return silu(x)

    def backward(self, grad):
        return grad * silu_grad(self._x)


class Tanh(Layer):
    def forward(self, x):
        self._y = np.tanh(x)
        return self._y

    def backward(self, grad):
        return grad * (1.0 - self._y * self._y)


class Identity(Layer):
    def forward(self, x):
        return x

    def backward(self, grad):
        return grad


class BatchNorm(Layer):
    """Batch normalization over (N,) or (N, L) slices per feature.

    Accepts (batch, features) or (batch, channels, length) inputs.
    Training mode normalizes with batch statistics and updates running
    statistics with the configured momentum; evaluation mode uses the
    running statistics.
    """

    def __init__(self, num_features, eps=1e-5, momentum=0.1, dtype=np.float64):
        super().__init__()
        self.num_features = num_features
        self.eps = eps
        self.momentum = momentum
        self.gamma = self.add_param("gamma", np.ones(num_features, dtype=dtype))
        self.beta = self.add_param("beta", np.zeros(num_features, dtype=dtype))
        self.running_mean = np.zeros(num_features, dtype=dtype)
        self.running_var = np.ones(num_features, dtype=dtype)

    def buffers(self):
        return {"running_mean": self.running_mean,
                "running_var": self.running_var}

    def _axes_and_shape(self, x):
        if x.ndim == 2:
            return (0,), (1, self.num_features)
        if x.ndim == 3:
            return (0, 2), (1, self.num_features, 1)
        raise ValueError(f"batchnorm expects 2-D or 3-D input, got ndim {x.ndim}")

    def forward(self, x):
        axes, pshape = self._axes_and_shape(x)
        if x.shape[1] != self.num_features:
            raise ValueError(
                f"batchnorm expects {self.num_features} features, got {x.shape[1]}"
            )
        gamma = self.gamma.reshape(pshape)
        beta = self.beta.reshape(pshape)
        if self.training:
            if x.shape[0] < 2:
                raise ValueError("training-mode batchnorm needs batch >= 2")
            mean = x.mean(axis=axes, keepdims=True)
            var = x.var(axis=axes, keepdims=True)
            inv_std = 1.0 / np.sqrt(var + self.eps)
            xhat = (x - mean) * inv_std
            m = x.size // self.num_features
            # running variance uses the unbiased estimate
            unbiased = var.reshape(-1) * (m / max(m - 1, 1))
            mom = self.momentum
            self.running_mean += mom * (mean.reshape(-1) - self.running_mean)
            self.running_var += mom * (unbiased - self.running_var)
            self._cache = (xhat, inv_std, axes, m)
        else:
            rm = self.running_mean.reshape(pshape)
            inv_std = 1.0 / np.sqrt(self.running_var.reshape(pshape) + self.eps)
            xhat = (x - rm) * inv_std
            self._cache = (xhat, inv_std, axes, None)
        return gamma * xhat + beta

    def backward(self, grad):
        xhat, inv_std, axes, m = self._cache
        gshape = (1, self.num_features) if grad.ndim == 2 else (1, self.num_features, 1)
        self._grads["gamma"] += (grad * xhat).sum(axis=axes)
        self._grads["beta"] += grad.sum(axis=axes)
        gamma = self.gamma.reshape(gshape)
        if m is None:  # evaluation mode: running stats are constants
            return grad * gamma * inv_std
        gmean = grad.mean(axis=axes, keepdims=True)
        gxhat_mean = (grad * xhat).mean(axis=axes, keepdims=True)
        return gamma * inv_std * (grad - gmean - xhat * gxhat_mean)


class Dropout(Layer):
    def __init__(self, p, rng=None):
        super().__init__()
        if not 0.0 <= p < 1.0:
            raise ValueError(f"dropout rate must be in [0, 1), got {p}")
        self.p = p
        self.rng = rng if rng is not None else np.random.default_rng(0)

    def reseed(self, seed_seq):
        self.rng = np.random.Generator(np.random.PCG64(seed_seq.spawn(1)[0]))

    def forward(self, x):
        if not self.training or self.p == 0.0:
            self._mask = None
            return x
        keep = 1.0 - self.p
        self._mask = (self.rng.random(x.shape) >= self.p) / keep
        return x * self._mask.astype(x.dtype)

    def backward(self, grad):
        if self._mask is None:
            return grad
        return grad * self._mask.astype(grad.dtype)


class Conv1d(Layer):
    """1-D cross-correlation (no kernel flip) with zero padding."""

    def __init__(self, in_channels, out_channels, width, stride=1, padding=0,
                 rng=None, dtype=np.float64, bias=True):
        super().__init__()
        if width < 1 or stride < 1:
            raise ValueError("kernel width and stride must be >= 1")
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.width = width
        self.stride = stride
        self.padding = padding
        rng = rng if rng is not None else np.random.default_rng(0)
        fan_in = in_channels * width
        self.kernel = self.add_param(
            "kernel", _uniform_fan_in(rng, (out_channels, in_channels, width), fan_in, dtype)
        )
        self.use_bias = bias
        if bias:
            self.bias = self.add_param(
                "bias", _uniform_fan_in(rng, (out_channels,), fan_in, dtype)
            )

    def output_length(self, length):
        return (length + 2 * self.padding - self.width) // self.stride + 1

    def forward(self, x):
        n, ci, length = x.shape
        if ci != self.in_channels:
            raise ValueError(f"expected {self.in_channels} input channels, got {ci}")
        l_out = self.output_length(length)
        if l_out < 1:
            raise ValueError(
                f"conv output length {l_out} < 1 for input length {length}"
            )
        p, s, w = self.padding, self.stride, self.width
        xp = np.pad(x, ((0, 0), (0, 0), (p, p))) if p else x
        win = np.empty((n, ci, l_out, w), dtype=x.dtype)
        for u in range(w):
            win[..., u] = xp[:, :, u:u + s * (l_out - 1) + 1:s]
        xmat = win.transpose(0, 2, 1, 3).reshape(n * l_out, ci * w)
        kmat = self.kernel.reshape(self.out_channels, ci * w)
        y = xmat @ kmat.T
        if self.use_bias:
            y += self.bias
        self._cache = (xmat, x.shape, l_out)
        return y.reshape(n, l_out, self.out_channels).transpose(0, 2, 1)

    def backward(self, grad):
        xmat, xshape, l_out = self._cache
        n, ci, length = xshape
        p, s, w = self.padding, self.stride, self.width
        gmat = grad.transpose(0, 2, 1).reshape(n * l_out, self.out_channels)
        self._grads["kernel"] += (gmat.T @ xmat).reshape(self.kernel.shape)
        if self.use_bias:
            self._grads["bias"] += grad.sum(axis=(0, 2))
        dwin = (gmat @ self.kernel.reshape(self.out_channels, ci * w))
        dwin = dwin.reshape(n, l_out, ci, w).transpose(0, 2, 1, 3)
        dxp = np.zeros((n, ci, length + 2 * p), dtype=grad.dtype)
        for u in range(w):
            dxp[:, :, u:u + s * (l_out - 1) + 1:s] += dwin[..., u]
        return dxp[:, :, p:p + length] if p else dxp


class ConvTranspose1d(Layer):
    """Adjoint of Conv1d: gradient-of-convolution upsampling."""

    def __init__(self, in_channels, out_channels, width, stride=1, padding=0,
                 output_padding=0, rng=None, dtype=np.float64, bias=True):
        super().__init__()
        if width < 1 or stride < 1:
            raise ValueError("kernel width and stride must be >= 1")
        if output_padding >= stride:
            raise ValueError("output_padding must be smaller than stride")
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.width = width
        self.stride = stride
        self.padding = padding
        self.output_padding = output_padding
        rng = rng if rng is not None else np.random.default_rng(0)
        fan_in = in_channels * width
        self.kernel = self.add_param(
            "kernel", _uniform_fan_in(rng, (in_channels, out_channels, width), fan_in, dtype)
        )
        self.use_bias = bias
        if bias:
            self.bias = self.add_param(
                "bias", _uniform_fan_in(rng, (out_channels,), fan_in, dtype)
            )

    def output_length(self, length):
        return ((length - 1) * self.stride - 2 * self.padding
                + self.width + self.output_padding)

    def forward(self, x):
        n, ci, l_in = x.shape
        if ci != self.in_channels:
            raise ValueError(f"expected {self.in_channels} input channels, got {ci}")
        l_out = self.output_length(l_in)
        if l_out < 1:
            raise ValueError(f"conv-transpose output length {l_out} < 1")
        p, s, w, co = self.padding, self.stride, self.width, self.out_channels
        full = (l_in - 1) * s + w
        xmat = x.transpose(0, 2, 1).reshape(n * l_in, ci)
        contrib = (xmat @ self.kernel.reshape(ci, co * w))
        contrib = contrib.reshape(n, l_in, co, w).transpose(0, 2, 1, 3)
        yfull = np.zeros((n, co, full + max(0, p + l_out - full)), dtype=x.dtype)
        for u in range(w):
            yfull[:, :, u:u + s * (l_in - 1) + 1:s] += contrib[..., u]
        y = yfull[:, :, p:p + l_out]
        if self.use_bias:
            y = y + self.bias[:, None]
        self._cache = (xmat, x.shape, l_out, full)
        return y

    def backward(self, grad):
        xmat, xshape, l_out, full = self._cache
        n, ci, l_in = xshape
        p, s, w, co = self.padding, self.stride, self.width, self.out_channels
        gfull = np.zeros((n, co, full + max(0, p + l_out - full)), dtype=grad.dtype)
        gfull[:, :, p:p + l_out] = grad
        gwin = np.empty((n, co, l_in, w), dtype=grad.dtype)
        for u in range(w):
            gwin[..., u] = gfull[:, :, u:u + s * (l_in - 1) + 1:s]
        gmat = gwin.transpose(0, 2, 1, 3).reshape(n * l_in, co * w)
        kmat = self.kernel.reshape(ci, co * w)
        self._grads["kernel"] += (xmat.T @ gmat).reshape(self.kernel.shape)
        if self.use_bias:
            self._grads["bias"] += grad.sum(axis=(0, 2))
        dx = (gmat @ kmat.T).reshape(n, l_in, ci).transpose(0, 2, 1)
        return dx


class Flatten(Layer):
    def forward(self, x):
        self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, grad):
        return grad.reshape(self._shape)


class Reshape(Layer):
    def __init__(self, *shape):
        super().__init__()
        self.shape = shape

    def forward(self, x):
        self._shape = x.shape
        return x.reshape((x.shape[0],) + self.shape)

    def backward(self, grad):
        return grad.reshape(self._shape)


class Sequential(Layer):
    """Ordered container; checks each stage's output for finiteness."""

    def __init__(self, steps):
        """steps: list of (name, Layer) pairs."""
        super().__init__()
        self.steps = list(steps)

    def children(self):
        return self.steps

    def forward(self, x):
        for name, layer in self.steps:
            x = layer.forward(x)
            if not np.all(np.isfinite(x)):
                raise NumericError(f"non-finite output of layer '{name}'")
        return x

    def backward(self, grad):
        for name, layer in reversed(self.steps):
            grad = layer.backward(grad)
        return grad

    def __getitem__(self, name):
        for step_name, layer in self.steps:
            if step_name == name:
                return layer
        raise KeyError(name)


def linear_block(in_features, out_features, rng, *, batchnorm=True,
                 activation="silu", dropout=0.0, dtype=np.float64):
    """Linear -> batchnorm -> activation -> dropout, per configuration."""
    steps = [("linear", Linear(in_features, out_features, rng, dtype))]
    if batchnorm:
        steps.append(("norm", BatchNorm(out_features, dtype=dtype)))
    steps.append(("act", _activation(activation)))
    if dropout > 0.0:
        steps.append(("drop", Dropout(dropout)))
    return Sequential(steps)


def conv_block(in_channels, out_channels, width, stride, padding, rng, *,
               batchnorm=True, activation="tanh", dropout=0.0, dtype=np.float64):
    """Conv1d -> batchnorm -> activation -> dropout, per configuration."""
    steps = [("conv", Conv1d(in_channels, out_channels, width, stride, padding,
                             rng, dtype))]
    if batchnorm:
        steps.append(("norm", BatchNorm(out_channels, dtype=dtype)))
    steps.append(("act", _activation(activation)))
    if dropout > 0.0:
        steps.append(("drop", Dropout(dropout)))
    return Sequential(steps)


def conv_transpose_block(in_channels, out_channels, width, stride, padding,
                         output_padding, rng, *, batchnorm=True,
                         activation="tanh", dropout=0.0, dtype=np.float64):
    steps = [("conv", ConvTranspose1d(in_channels, out_channels, width, stride,
                                      padding, output_padding, rng, dtype))]
    if batchnorm:
        steps.append(("norm", BatchNorm(out_channels, dtype=dtype)))
    steps.append(("act", _activation(activation)))
    if dropout > 0.0:
        steps.append(("drop", Dropout(dropout)))
    return Sequential(steps)


def _activation(tag):
    if tag == "silu":
        return SiLU()
    if tag == "tanh":
        return Tanh()
    if tag in (None, "identity"):
        return Identity()
    raise ValueError(f"unknown activation '{tag}'")
