"""Finite-difference verification of analytic gradients.

Checks any object obeying the layer contract (forward / backward /
named_parameters / named_gradients / zero_grad) against central
differences of a scalar probe objective sum(forward(x) * R).

Requires a double-precision build with dropout disabled and batch norm
either in evaluation mode or with frozen statistics, so the forward is
a smooth deterministic function.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Entries whose analytic and numeric gradients are both below this floor
# are compared against the floor instead, so a 1e-12 vs 3e-12 pair does
# not register as a 200% "relative" error.
REL_FLOOR = 1e-3


@dataclass
class GradcheckEntry:
    tensor: str
    index: tuple
    analytic: float
    numeric: float
    rel_error: float


@dataclass
class GradcheckReport:
    passed: bool
    max_rel_error: float
    tolerance: float
    n_checked: int
    worst: list = field(default_factory=list)

    def summary(self):
        status = "PASS" if self.passed else "FAIL"
        return (f"{status} max_rel_error={self.max_rel_error:.3e} "
                f"tol={self.tolerance:.1e} entries={self.n_checked}")


def _rel_error(a, n):
    return abs(a - n) / max(abs(a), abs(n), REL_FLOOR)


def gradcheck(layer, x, tolerance=1e-5, *, rng=None, max_entries=200,
              step=1e-5, check_input=True) -> GradcheckReport:
    """Compare analytic gradients with central finite differences.

    Samples up to ``max_entries`` parameter entries (plus input entries
    when ``check_input``) uniformly across tensors.  Failures are
    reported, never raised.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    x = np.array(x, dtype=np.float64)

    y0 = layer.forward(x)
    probe = rng.standard_normal(y0.shape)

    layer.zero_grad()
    layer.forward(x)
    dx = layer.backward(probe.copy())
    analytic = dict(layer.named_gradients())
    tensors = [(name, arr) for name, arr in layer.named_parameters()]
    if check_input:
        tensors.append(("<input>", x))
        analytic["<input>"] = dx

    def objective():
        return float(np.sum(layer.forward(x) * probe))

    total = sum(arr.size for _, arr in tensors)
    budget = min(max_entries, total)
    # spread the budget across tensors proportionally, at least 1 each
    entries = []
    for name, arr in tensors:
        take = max(1, round(budget * arr.size / total))
        flat_idx = rng.choice(arr.size, size=min(take, arr.size), replace=False)
        entries.extend((name, arr, int(i)) for i in np.atleast_1d(flat_idx))

    checked = []
    for name, arr, flat in entries:
        idx = np.unravel_index(flat, arr.shape)
        orig = arr[idx]
        arr[idx] = orig + step
        f_plus = objective()
        arr[idx] = orig - step
        f_minus = objective()
        arr[idx] = orig
        numeric = (f_plus - f_minus) / (2.0 * step)
        a = float(analytic[name][idx])
        checked.append(GradcheckEntry(name, idx, a, numeric, _rel_error(a, numeric)))

    checked.sort(key=lambda e: e.rel_error, reverse=True)
    max_rel = checked[0].rel_error if checked else 0.0
    return GradcheckReport(
        passed=max_rel < tolerance,
        max_rel_error=max_rel,
        tolerance=tolerance,
        n_checked=len(checked),
        worst=checked[:5],
    )


def gradcheck_suite(inject_error=False, seed=0):
    """One gradient check per layer type plus each full architecture.

    Layer checks run at 1e-5 relative tolerance, whole models at 1e-4.
    ``inject_error`` corrupts the linear layer's analytic gradient, a
    negative control for the harness itself.  Returns
    [(name, GradcheckReport), ...] with every layer type exactly once.
    """
    from .kan import KanConv1d, KanLinear
    from .layers import BatchNorm, Conv1d, ConvTranspose1d, Linear
    from .models import ModelSpec, build
    from .splines import SplineGrid

    rng = np.random.default_rng(seed)
    results = []

    lin = Linear(6, 5, rng)
    if inject_error:
        original = lin.backward

        def corrupted(grad):
            dx = original(grad)
            lin._grads["weight"] += 1e-2
            return dx
        lin.backward = corrupted
    results.append(("linear", gradcheck(lin, rng.standard_normal((2, 6)),
                                        1e-5, rng=rng)))

    conv = Conv1d(2, 3, 3, stride=2, padding=1, rng=rng)
    results.append(("conv1d", gradcheck(conv, rng.standard_normal((2, 2, 9)),
                                        1e-5, rng=rng)))

    ct = ConvTranspose1d(3, 2, 3, stride=2, padding=1, output_padding=1, rng=rng)
    results.append(("conv_transpose1d", gradcheck(
        ct, rng.standard_normal((2, 3, 5)), 1e-5, rng=rng)))

    bn = BatchNorm(4)
    bn.forward(rng.standard_normal((16, 4)))  # populate running stats
    bn.set_training(False)
    results.append(("batchnorm_frozen", gradcheck(
        bn, rng.standard_normal((2, 4)), 1e-5, rng=rng)))

    grid = SplineGrid()
    kan_lin = KanLinear(5, 4, grid, rng)
    results.append(("kan_linear", gradcheck(
        kan_lin, rng.uniform(-1.5, 1.5, (2, 5)), 1e-5, rng=rng)))

    kan_conv = KanConv1d(2, 3, 3, stride=2, padding=1, grid=grid, rng=rng)
    results.append(("kan_conv1d", gradcheck(
        kan_conv, rng.uniform(-1.5, 1.5, (2, 2, 8)), 1e-5, rng=rng)))

    tiny = {
        "AE": dict(widths=[32, 16]),
        "KAE": dict(widths=[16, 8]),
        "CAE": dict(channels=[4, 8]),
        "KCAE": dict(channels=[3, 5]),
    }
    for family, overrides in tiny.items():
        spec = ModelSpec(family=family, input_length=24, latent_dim=4,
                         use_dropout=False, **overrides)
        model = build(spec, seed=seed)
        model.set_training(False)  # frozen batchnorm statistics
        x = rng.uniform(-1.5, 1.5, (2, 24))
        results.append((f"model_{family}", gradcheck(model, x, 1e-4, rng=rng)))
    return results
