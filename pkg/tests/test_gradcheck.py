import numpy as np

from kanae.gradcheck import gradcheck, gradcheck_suite
from kanae.layers import Linear


def test_linear_passes_tight_tolerance():
    rng = np.random.default_rng(0)
    lin = Linear(4, 3, rng)
    report = gradcheck(lin, rng.standard_normal((2, 4)), 1e-6, rng=rng)
    assert report.passed, report.summary()


def test_failure_reported_not_raised():
    rng = np.random.default_rng(1)
    lin = Linear(3, 3, rng)
    original = lin.backward
    lin.backward = lambda g: original(g) + 0.5  # corrupt the input gradient
    report = gradcheck(lin, rng.standard_normal((2, 3)), 1e-6, rng=rng)
    assert not report.passed
    assert report.worst[0].rel_error > 1e-3


def test_suite_covers_every_layer_type_once():
    results = gradcheck_suite()
    names = [name for name, _ in results]
    assert len(names) == len(set(names))
    for expected in ["linear", "conv1d", "conv_transpose1d", "batchnorm_frozen",
                     "kan_linear", "kan_conv1d", "model_AE", "model_KAE",
                     "model_CAE", "model_KCAE"]:
        assert expected in names
    assert all(rep.passed for _, rep in results), \
        [(n, r.summary()) for n, r in results if not r.passed]


def test_suite_negative_control():
    results = gradcheck_suite(inject_error=True)
    by_name = dict(results)
    assert not by_name["linear"].passed
