"""Optimizers and the seeded epoch/batch training loop."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .layers import NumericError
from .losses import kl_divergence, kl_divergence_grads, mse_loss, mse_loss_grad


class SGD:
    def __init__(self, named_params, lr=1e-3, momentum=0.0):
        self.named_params = list(named_params)
        self.lr = lr
        self.momentum = momentum
        self.velocity = {n: np.zeros_like(p) for n, p in self.named_params}

    def step(self, named_grads):
        grads = dict(named_grads)
        for name, p in self.named_params:
            g = grads[name]
            if not np.all(np.isfinite(g)):
                raise NumericError(f"non-finite gradient for {name}")
            if self.momentum:
                v = self.velocity[name]
                v *= self.momentum
                v += g
                p -= self.lr * v
            else:
                p -= self.lr * g


class Adam:
    """Bias-corrected Adam; updates parameter arrays in place."""

    def __init__(self, named_params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.named_params = list(named_params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {n: np.zeros_like(p) for n, p in self.named_params}
        self.v = {n: np.zeros_like(p) for n, p in self.named_params}

    def step(self, named_grads):
        grads = dict(named_grads)
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        c1 = 1.0 - b1 ** self.t
        c2 = 1.0 - b2 ** self.t
        for name, p in self.named_params:
            g = grads[name]
            if not np.all(np.isfinite(g)):
                raise NumericError(f"non-finite gradient for {name}")
            m = self.m[name]
            v = self.v[name]
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * (g * g)
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


_OPTIMIZERS = {"adam": Adam, "sgd": SGD}


@dataclass
class TrainConfig:
    epochs: int = 100
    batch_size: int = 16
    lr: float = 1e-3
    seed: int = 0
    optimizer: str = "adam"

    def validate(self):
        errors = []
        if self.epochs < 1:
            errors.append(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 2:
            errors.append(f"batch_size must be >= 2, got {self.batch_size}")
        if self.lr <= 0:
            errors.append(f"lr must be positive, got {self.lr}")
        if self.optimizer not in _OPTIMIZERS:
            errors.append(f"unknown optimizer '{self.optimizer}'")
        if errors:
            raise ValueError("; ".join(errors))
        return self


@dataclass
class TrainResult:
    epoch_losses: list
    train_per_sample: np.ndarray
    test_per_sample: np.ndarray
    seconds_per_epoch: float
    epochs_run: int
    final_train_loss: float = field(init=False)

    def __post_init__(self):
        self.final_train_loss = float(self.train_per_sample.mean())


def _batches(n, batch_size, perm):
    """Batch index lists; a short trailing batch is kept only if >= 2."""
    out = []
    for start in range(0, n, batch_size):
        idx = perm[start:start + batch_size]
        if len(idx) >= 2:
            out.append(idx)
    return out


def per_sample_losses(model, x, target, batch_size=64):
    """Evaluation-mode per-sample reconstruction losses."""
    model.set_training(False)
    losses = np.empty(x.shape[0], dtype=np.float64)
    for start in range(0, x.shape[0], batch_size):
        sl = slice(start, start + batch_size)
        pred = model.forward(x[sl])
        losses[sl] = mse_loss(pred, target[sl]).per_sample
    return losses


def train(model, x_train, config: TrainConfig, *, target=None,
          corrupt_fn=None, eval_corrupt_fn=None, x_test=None,
          test_target=None, stop_below=None):
    """Seeded epoch/batch loop shared by every task.

    corrupt_fn(batch, rng) builds the model input from clean samples
    each step (fresh corruption per epoch); the loss target stays the
    clean series.  eval_corrupt_fn(x) is the deterministic counterpart
    used for the final per-sample losses.  With both left None this is
    plain reconstruction training.  ``stop_below`` stops early once the
    epoch loss drops under the threshold.

    Fully deterministic given (model parameters, config) at a fixed
    thread count.
    """
    config.validate()
    if x_train.shape[0] == 0:
        raise ValueError("empty training set")
    target = x_train if target is None else target
    ss = np.random.SeedSequence(config.seed)
    shuffle_ss, corrupt_ss, drop_ss, vae_ss = ss.spawn(4)
    rng_shuffle = np.random.Generator(np.random.PCG64(shuffle_ss))
    rng_corrupt = np.random.Generator(np.random.PCG64(corrupt_ss))
    rng_vae = np.random.Generator(np.random.PCG64(vae_ss))
    model.reseed(drop_ss)

    opt = _OPTIMIZERS[config.optimizer](model.named_parameters(), lr=config.lr)
    n = x_train.shape[0]
    epoch_losses = []
    t0 = time.perf_counter()
    epochs_run = 0
    for epoch in range(config.epochs):
        model.set_training(True)
        perm = rng_shuffle.permutation(n)
        loss_sum = 0.0
        seen = 0
        for b, idx in enumerate(_batches(n, config.batch_size, perm)):
            xb = x_train[idx]
            if corrupt_fn is not None:
                xb = corrupt_fn(xb, rng_corrupt)
            yb = target[idx]
            try:
                loss, grad_fn = _forward_loss(model, xb, yb, rng_vae)
            except NumericError as exc:
                raise NumericError(f"{exc} (epoch {epoch}, batch {b})") from exc
            if not np.isfinite(loss):
                raise NumericError(f"non-finite loss at epoch {epoch}, batch {b}")
            model.zero_grad()
            grad_fn()
            if hasattr(model, "smoothness_penalty"):
                loss += model.smoothness_penalty()
            opt.step(model.named_gradients())
            loss_sum += loss * len(idx)
            seen += len(idx)
        epoch_losses.append(loss_sum / seen)
        epochs_run = epoch + 1
        if stop_below is not None and epoch_losses[-1] < stop_below:
            break
    seconds_per_epoch = (time.perf_counter() - t0) / max(epochs_run, 1)

    eval_in = eval_corrupt_fn(x_train) if eval_corrupt_fn else x_train
    train_ps = per_sample_losses(model, eval_in, target)
    test_ps = np.empty(0)
    if x_test is not None:
        tt = x_test if test_target is None else test_target
        eval_in = eval_corrupt_fn(x_test) if eval_corrupt_fn else x_test
        test_ps = per_sample_losses(model, eval_in, tt)
    return TrainResult(epoch_losses, train_ps, test_ps, seconds_per_epoch,
                       epochs_run)


def _forward_loss(model, xb, yb, rng_vae):
    """One training forward; returns (scalar loss, backward thunk)."""
    if getattr(model, "variational", False):
        recon, mu, logvar, eps = model.forward_vae(xb, rng_vae)
        rec = mse_loss(recon, yb)
        kl = kl_divergence(mu, logvar)
        beta = model.kl_weight
        loss = rec.value + beta * kl.value

        def backward():
            dmu_kl, dlogvar_kl = kl_divergence_grads(mu, logvar)
            model.backward_vae(mse_loss_grad(recon, yb),
                               beta * dmu_kl, beta * dlogvar_kl, eps)
        return loss, backward

    recon = model.forward(xb)
    rec = mse_loss(recon, yb)

    def backward():
        model.backward(mse_loss_grad(recon, yb))
    return rec.value, backward
