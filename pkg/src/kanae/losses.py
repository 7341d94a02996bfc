"""Reconstruction and latent-regularization losses.

Both losses report a per-sample vector alongside the scalar; the scalar
is always the batch mean of the per-sample values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class LossValue:
    value: float
    per_sample: np.ndarray


def mse_loss(pred, target) -> LossValue:
    """Mean squared error, element-mean per sample then batch-mean."""
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch {pred.shape} vs {target.shape}")
    diff = pred - target
    per_sample = (diff * diff).reshape(pred.shape[0], -1).mean(axis=1)
    return LossValue(float(per_sample.mean()), per_sample)


def mse_loss_grad(pred, target):
    """d(mse scalar)/d(pred)."""
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch {pred.shape} vs {target.shape}")
    return (2.0 / pred.size) * (pred - target)


def kl_divergence(mu, logvar) -> LossValue:
    """KL(N(mu, e^logvar) || N(0, 1)), summed per sample, batch-mean."""
    if mu.shape != logvar.shape:
        raise ValueError(f"shape mismatch {mu.shape} vs {logvar.shape}")
    per_sample = -0.5 * (1.0 + logvar - mu * mu - np.exp(logvar))
    per_sample = per_sample.reshape(mu.shape[0], -1).sum(axis=1)
    return LossValue(float(per_sample.mean()), per_sample)


def kl_divergence_grads(mu, logvar):
    """Gradients of the KL scalar with respect to mu and logvar."""
    n = mu.shape[0]
    dmu = mu / n
    dlogvar = -0.5 * (1.0 - np.exp(logvar)) / n
    return dmu, dlogvar
