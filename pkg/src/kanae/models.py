"""The four benchmark autoencoder architectures.

Families:
  AE    dense blocks (linear, batchnorm, SiLU, dropout), plain linear out
  KAE   AE with the first encoder block swapped for a spline-edge block
  CAE   Conv1d blocks (batchnorm, Tanh, dropout) + ConvTranspose1d decoder
  KCAE  CAE with spline-edge convolutions in the encoder

All models map (batch, input_length) -> (batch, input_length); conv
families reshape to a single channel internally.  An optional
variational head (two linear maps producing mu and log-variance plus the
reparameterized sampler) attaches to any family.

Default schedules (chosen to land on the documented parameter budgets,
see README for the closed forms):
  AE    187 -> 3072 -> 1280 -> 256 -> 32, mirrored decoder   (~9.7 M)
  KAE   187 -> 1536 (spline block) -> 256 -> 32, mirrored    (~4.0 M)
  CAE   channels 1-64-128-256-256, width-5 stride-2 kernels  (~1.27 M)
  KCAE  channels 1-16-32-64-64, width-5 spline kernels       (~0.42 M)
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np

from .kan import KanConv1d, KanLinear
from .layers import (
    BatchNorm,
    Conv1d,
    ConvTranspose1d,
    Dropout,
    Flatten,
    Linear,
    Reshape,
    Sequential,
    conv_block,
    conv_transpose_block,
    linear_block,
)
from .splines import SplineGrid

FAMILIES = ("AE", "KAE", "CAE", "KCAE")

_DEFAULT_WIDTHS = {"AE": [3072, 1280, 256], "KAE": [1536, 256]}
_DEFAULT_CHANNELS = {"CAE": [64, 128, 256, 256], "KCAE": [16, 32, 64, 64]}
# spline-edge encoders carry their nonlinearity in far fewer channels;
# the standard transposed-conv decoder gets a little extra width back
_DEFAULT_DECODER_CHANNELS = {"KCAE": [64, 64, 32]}


@dataclass
class ModelSpec:
    family: str = "AE"
    input_length: int = 187
    latent_dim: int = 32
    widths: list = None
    channels: list = None
    decoder_channels: list = None  # conv families; default mirrors encoder
    kernel_width: int = 5
    stride: int = 2
    padding: int = 2
    dropout: float = 0.1
    use_batchnorm: bool = True
    use_dropout: bool = True
    grid_size: int = 5
    spline_order: int = 4
    # globally standardized beats peak past +/-4 sigma; the grid must
    # span them or the edge splines clamp away the peaks
    grid_range: tuple = (-4.0, 4.0)
    variational: bool = False
    kl_weight: float = 1e-3
    smoothness_weight: float = 0.0  # spline coefficient-difference penalty

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family '{self.family}'")
        if self.latent_dim >= self.input_length:
            raise ValueError(
                f"latent_dim {self.latent_dim} must be < input_length "
                f"{self.input_length}"
            )
        if self.widths is None:
            self.widths = list(_DEFAULT_WIDTHS.get(self.family, []))
        if self.channels is None:
            self.channels = list(_DEFAULT_CHANNELS.get(self.family, []))
        if self.decoder_channels is None and self.channels:
            if self.family in _DEFAULT_DECODER_CHANNELS and \
                    self.channels == _DEFAULT_CHANNELS.get(self.family):
                self.decoder_channels = list(_DEFAULT_DECODER_CHANNELS[self.family])
            else:
                self.decoder_channels = list(reversed(self.channels[:-1]))
        if self.decoder_channels is not None and self.channels and \
                len(self.decoder_channels) != len(self.channels) - 1:
            raise ValueError(
                f"decoder_channels needs {len(self.channels) - 1} entries, "
                f"got {len(self.decoder_channels)}"
            )

    @property
    def n_basis(self):
        return self.grid_size + self.spline_order - 1

    def grid(self):
        return SplineGrid(self.spline_order, self.grid_size,
                          self.grid_range[0], self.grid_range[1])

    def to_dict(self):
        d = asdict(self)
        d["grid_range"] = list(self.grid_range)
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "grid_range" in d:
            d["grid_range"] = tuple(d["grid_range"])
        return cls(**d)


class Model:
    """Encoder/decoder pair plus optional variational heads."""

    def __init__(self, spec: ModelSpec, encoder, decoder, mu_head=None,
                 logvar_head=None):
        self.spec = spec
        self.encoder = encoder
        self.decoder = decoder
        self.mu_head = mu_head
        self.logvar_head = logvar_head
        self.variational = spec.variational
        self.kl_weight = spec.kl_weight
        self.training = True

    # plumbing ---------------------------------------------------------------

    def _parts(self):
        parts = [("encoder", self.encoder), ("decoder", self.decoder)]
        if self.variational:
            parts += [("mu_head", self.mu_head), ("logvar_head", self.logvar_head)]
        return parts

    def named_parameters(self):
        out = []
        for name, part in self._parts():
            out.extend(part.named_parameters(name + "."))
        return out

    def named_gradients(self):
        out = []
        for name, part in self._parts():
            out.extend(part.named_gradients(name + "."))
        return out

    def named_buffers(self):
        out = []
        for name, part in self._parts():
            out.extend(part.named_buffers(name + "."))
        return out

    def named_layers(self):
        for name, part in self._parts():
            yield from part.named_layers(name + ".")

    def zero_grad(self):
        for _, part in self._parts():
            part.zero_grad()

    def set_training(self, flag=True):
        self.training = flag
        for _, part in self._parts():
            part.set_training(flag)

    def reseed(self, seed_seq):
        for _, part in self._parts():
            part.reseed(seed_seq)

    def param_count(self):
        return sum(p.size for _, p in self.named_parameters())

    def smoothness_penalty(self):
        """Accumulate the optional spline-smoothness penalty gradients."""
        from .kan import smoothness_penalty

        weight = self.spec.smoothness_weight
        if weight == 0.0:
            return 0.0
        return sum(smoothness_penalty(layer, weight)
                   for _, layer in self.named_layers()
                   if isinstance(layer, (KanLinear, KanConv1d)))

    # computation ------------------------------------------------------------

    def encode(self, x):
        h = self.encoder.forward(x)
        if self.variational:
            return self.mu_head.forward(h)
        return h

    def decode(self, z):
        return self.decoder.forward(z)

    def forward(self, x):
        return self.decode(self.encode(x))

    def backward(self, grad):
        dz = self.decoder.backward(grad)
        if self.variational:
            dz = self.mu_head.backward(dz)
        return self.encoder.backward(dz)

    def forward_vae(self, x, rng):
        """Reparameterized forward; returns (recon, mu, logvar, eps)."""
        if not self.variational:
            raise ValueError("forward_vae on a non-variational model")
        h = self.encoder.forward(x)
        mu = self.mu_head.forward(h)
        logvar = self.logvar_head.forward(h)
        eps = rng.standard_normal(mu.shape).astype(mu.dtype)
        std = np.exp(0.5 * logvar)
        z = mu + std * eps
        recon = self.decoder.forward(z)
        self._vae_std = std
        return recon, mu, logvar, eps

    def backward_vae(self, d_recon, d_mu_extra, d_logvar_extra, eps):
        """Backward through decoder, sampler and both heads."""
        dz = self.decoder.backward(d_recon)
        dmu = dz + d_mu_extra
        dlogvar = dz * eps * 0.5 * self._vae_std + d_logvar_extra
        dh = self.mu_head.backward(dmu) + self.logvar_head.backward(dlogvar)
        return self.encoder.backward(dh)


def forward_vae(model, batch, seed):
    """Seeded convenience wrapper around Model.forward_vae."""
    rng = np.random.Generator(np.random.PCG64(seed))
    recon, mu, logvar, _ = model.forward_vae(batch, rng)
    return recon, mu, logvar


def _conv_lengths(spec):
    """Per-stage signal lengths through the conv encoder."""
    lengths = [spec.input_length]
    for _ in spec.channels:
        l_out = (lengths[-1] + 2 * spec.padding - spec.kernel_width) // spec.stride + 1
        if l_out < 1:
            raise ValueError(
                f"conv schedule collapses: length {lengths[-1]} -> {l_out}"
            )
        lengths.append(l_out)
    return lengths


def _dense_autoencoder(spec, rng, dtype, kan_first):
    drop = spec.dropout if spec.use_dropout else 0.0
    widths = [spec.input_length] + list(spec.widths)
    enc = []
    for i, (w_in, w_out) in enumerate(zip(widths[:-1], widths[1:])):
        if i == 0 and kan_first:
            steps = [("kan", KanLinear(w_in, w_out, spec.grid(), rng, dtype=dtype))]
            if spec.use_batchnorm:
                steps.append(("norm", BatchNorm(w_out, dtype=dtype)))
            if drop > 0.0:
                steps.append(("drop", Dropout(drop)))
            enc.append((f"block{i}", Sequential(steps)))
        else:
            enc.append((f"block{i}", linear_block(
                w_in, w_out, rng, batchnorm=spec.use_batchnorm,
                activation="silu", dropout=drop, dtype=dtype)))
    enc.append(("latent", Linear(widths[-1], spec.latent_dim, rng, dtype)))

    dec = []
    rev = [spec.latent_dim] + list(reversed(spec.widths))
    for i, (w_in, w_out) in enumerate(zip(rev[:-1], rev[1:])):
        dec.append((f"block{i}", linear_block(
            w_in, w_out, rng, batchnorm=spec.use_batchnorm,
            activation="silu", dropout=drop, dtype=dtype)))
    dec.append(("out", Linear(rev[-1], spec.input_length, rng, dtype)))
    return Sequential(enc), Sequential(dec)


def _conv_autoencoder(spec, rng, dtype, kan_encoder):
    drop = spec.dropout if spec.use_dropout else 0.0
    w, s, p = spec.kernel_width, spec.stride, spec.padding
    lengths = _conv_lengths(spec)
    chans = [1] + list(spec.channels)

    enc = [("reshape", Reshape(1, spec.input_length))]
    for i, (c_in, c_out) in enumerate(zip(chans[:-1], chans[1:])):
        if kan_encoder:
            steps = [("conv", KanConv1d(c_in, c_out, w, s, p, spec.grid(), rng,
                                        dtype=dtype))]
            if spec.use_batchnorm:
                steps.append(("norm", BatchNorm(c_out, dtype=dtype)))
            if drop > 0.0:
                steps.append(("drop", Dropout(drop)))
            enc.append((f"block{i}", Sequential(steps)))
        else:
            enc.append((f"block{i}", conv_block(
                c_in, c_out, w, s, p, rng, batchnorm=spec.use_batchnorm,
                activation="tanh", dropout=drop, dtype=dtype)))
    flat = chans[-1] * lengths[-1]
    enc.append(("flatten", Flatten()))
    enc.append(("latent", Linear(flat, spec.latent_dim, rng, dtype)))

    dec = [
        ("expand", Linear(spec.latent_dim, flat, rng, dtype)),
        ("reshape", Reshape(chans[-1], lengths[-1])),
    ]
    rev_chans = [chans[-1]] + list(spec.decoder_channels) + [1]
    rev_lengths = list(reversed(lengths))
    for i, (c_in, c_out) in enumerate(zip(rev_chans[:-1], rev_chans[1:])):
        l_in, l_target = rev_lengths[i], rev_lengths[i + 1]
        base = (l_in - 1) * s - 2 * p + w
        op = l_target - base
        if not 0 <= op < s:
            raise ValueError(
                f"decoder block{i}: cannot reach length {l_target} from "
                f"{l_in} (needs output_padding {op})"
            )
        last = i == len(rev_chans) - 2
        if last:
            dec.append((f"block{i}", ConvTranspose1d(
                c_in, c_out, w, s, p, op, rng, dtype)))
        else:
            dec.append((f"block{i}", conv_transpose_block(
                c_in, c_out, w, s, p, op, rng, batchnorm=spec.use_batchnorm,
                activation="tanh", dropout=drop, dtype=dtype)))
    dec.append(("flatten", Flatten()))
    return Sequential(enc), Sequential(dec)


def build(spec: ModelSpec, seed: int, dtype=np.float64) -> Model:
    """Deterministically initialize a model from its spec and seed."""
    rng = np.random.Generator(np.random.PCG64(seed))
    if spec.family == "AE":
        enc, dec = _dense_autoencoder(spec, rng, dtype, kan_first=False)
    elif spec.family == "KAE":
        enc, dec = _dense_autoencoder(spec, rng, dtype, kan_first=True)
    elif spec.family == "CAE":
        enc, dec = _conv_autoencoder(spec, rng, dtype, kan_encoder=False)
    elif spec.family == "KCAE":
        enc, dec = _conv_autoencoder(spec, rng, dtype, kan_encoder=True)
    else:  # pragma: no cover - guarded by ModelSpec
        raise ValueError(spec.family)

    mu_head = logvar_head = None
    if spec.variational:
        mu_head = Linear(spec.latent_dim, spec.latent_dim, rng, dtype)
        logvar_head = Linear(spec.latent_dim, spec.latent_dim, rng, dtype)
    model = Model(spec, enc, dec, mu_head, logvar_head)
    _validate_shapes(model, spec)
    return model


def _validate_shapes(model, spec):
    model.set_training(False)
    probe = np.zeros((2, spec.input_length),
                     dtype=model.named_parameters()[0][1].dtype)
    out = model.forward(probe)
    if out.shape != probe.shape:
        raise ValueError(
            f"schedule is inconsistent: {probe.shape} in, {out.shape} out"
        )
    model.set_training(True)


def grid_metadata(model: Model) -> dict:
    """Knot-grid settings of every spline-edge layer, keyed by path."""
    out = {}
    for name, layer in model.named_layers():
        if isinstance(layer, (KanLinear, KanConv1d)):
            g = layer.grid
            # keyed to match the layer's tensor names (kan.<layer>.*)
            out[layer.param_prefix() + name] = {
                "order": g.order, "grid_size": g.grid_size,
                "range": [g.range_min, g.range_max]}
    return out


def save_model(model: Model, path, extra_metadata=None):
    """Checkpoint parameters plus batchnorm running statistics."""
    from .checkpoint import save_checkpoint

    meta = {"spec": model.spec.to_dict(), "grids": grid_metadata(model)}
    if extra_metadata:
        meta.update(extra_metadata)
    tensors = model.named_parameters() + model.named_buffers()
    save_checkpoint(path, tensors, meta)


def load_model(path):
    """Rebuild a model from a checkpoint; returns (model, metadata)."""
    from .checkpoint import load_checkpoint

    meta, tensors = load_checkpoint(path)
    spec = ModelSpec.from_dict(meta["spec"])
    dtype = next(iter(tensors.values())).dtype
    model = build(spec, seed=0, dtype=dtype)
    for name, param in model.named_parameters() + model.named_buffers():
        param[...] = tensors[name]
    return model, meta


def expected_param_count(spec: ModelSpec) -> int:
    """Closed-form parameter count (documented in the README).

    Dense block i->o: io + o, plus 2o with batchnorm.
    Spline-edge dense i->o: io(B + 2), plus 2o with batchnorm.
    Conv / transposed conv block ci->co, width w: co*ci*w + co,
    plus 2co with batchnorm.  Spline-edge conv: co*ci*w(B + 2).
    Variational heads add 2(k^2 + k).
    """
    bn = 2 if spec.use_batchnorm else 0
    b = spec.n_basis
    k, n = spec.latent_dim, spec.input_length
    total = 0
    if spec.family in ("AE", "KAE"):
        widths = [n] + list(spec.widths)
        for i, (wi, wo) in enumerate(zip(widths[:-1], widths[1:])):
            if spec.family == "KAE" and i == 0:
                total += wo * wi * (b + 2) + bn * wo
            else:
                total += wi * wo + wo + bn * wo
        total += widths[-1] * k + k                      # encoder latent map
        rev = [k] + list(reversed(spec.widths))
        for wi, wo in zip(rev[:-1], rev[1:]):
            total += wi * wo + wo + bn * wo
        total += rev[-1] * n + n                         # decoder output map
    else:
        w = spec.kernel_width
        lengths = _conv_lengths(spec)
        chans = [1] + list(spec.channels)
        for ci, co in zip(chans[:-1], chans[1:]):
            if spec.family == "KCAE":
                total += co * ci * w * (b + 2) + bn * co
            else:
                total += co * ci * w + co + bn * co
        flat = chans[-1] * lengths[-1]
        total += flat * k + k                            # encoder latent map
        total += k * flat + flat                         # decoder expand map
        rev = [chans[-1]] + list(spec.decoder_channels) + [1]
        for i, (ci, co) in enumerate(zip(rev[:-1], rev[1:])):
            last = i == len(rev) - 2
            total += ci * co * w + co + (0 if last else bn * co)
    if spec.variational:
        total += 2 * (k * k + k)
    return total
