"""Finite-difference verification of every backward closure."""

import numpy as np
import pytest

from chirpnet import verification
from chirpnet.nn import functional as F
from chirpnet.nn.gradcheck import (
    gradient_check,
    pool_tie_margin,
    relu_kink_margin,
)
from chirpnet.nn.tensor import parameter


@pytest.mark.parametrize("build", verification.ALL_SCENARIOS,
                         ids=lambda b: b.__name__)
def test_scenario_within_tolerance(build):
    name, loss, params = build()
    report = gradient_check(loss, params, tol=1e-4)
    assert report.passed, f"{name}: max rel err {report.max_rel_err:.3e}"


def test_toy_network_all_activations():
    for activation in ("relu", "tanh", "adaptive"):
        _, loss, params = verification.scenario_toy_network(seed=31, activation=activation)
        report = gradient_check(loss, params, tol=1e-4)
        assert report.passed, f"{activation}: {report.max_rel_err:.3e}"


def test_fault_injection_is_caught():
    """Corrupting one analytic gradient must push the error above 1e-2."""
    _, loss, params = verification.scenario_conv3()

    def corrupt(i, g):
        return g * 1.5 if i == 0 else g

    report = gradient_check(loss, params, tol=1e-4, grad_transform=corrupt)
    assert not report.passed
    assert report.max_rel_err > 1e-2


def test_sign_flip_injection_is_caught():
    _, loss, params = verification.scenario_softmax_ce()
    report = gradient_check(loss, params, tol=1e-4,
                            grad_transform=lambda i, g: -g)
    assert report.max_rel_err > 1e-2


def test_inputs_sit_away_from_kinks():
    """The seeded scenario inputs must be differentiable points."""
    for build in (verification.scenario_relu, verification.scenario_maxpool):
        _, _, params = build()
        x = params[0].data
        assert min(relu_kink_margin(x), pool_tie_margin(x)) > 1e-6


def test_relu_kink_margin():
    assert relu_kink_margin(np.array([0.5, -0.2])) == pytest.approx(0.2)
    assert relu_kink_margin(np.array([0.0, 1.0])) == 0.0


def test_pool_tie_margin_flags_equal_window_entries():
    x = np.zeros((2, 2, 1))
    x[0, 0, 0] = 1.0
    x[0, 1, 0] = 1.0
    assert pool_tie_margin(x) == 0.0
    x[0, 1, 0] = 0.5
    assert pool_tie_margin(x) == pytest.approx(0.5)


def test_max_entries_subsamples_checks():
    rng = np.random.default_rng(0)
    _, loss, params = verification.scenario_conv3()
    full = gradient_check(loss, params, tol=1e-4)
    partial = gradient_check(loss, params, tol=1e-4, max_entries=5, rng=rng)
    assert partial.n_checked < full.n_checked
    assert partial.passed


def test_report_names_worst_entry():
    _, loss, params = verification.scenario_dense()
    report = gradient_check(loss, params, tol=1e-4)
    assert report.n_checked == sum(p.size for p in params)
    param_idx, elem_idx = report.worst
    assert 0 <= param_idx < len(params)
    shape = params[param_idx].data.shape
    assert len(elem_idx) == len(shape)
    assert all(0 <= e < s for e, s in zip(elem_idx, shape))


def test_batched_loss_gradients_scale_with_batch():
    """Mean-reduced batch loss: each sample contributes 1/B of the grad."""
    rng = np.random.default_rng(42)
    xs = rng.standard_normal((4, 6))
    w = parameter(rng.standard_normal((6, 3)) * 0.3, dtype=np.float64)
    b = parameter(np.zeros(3), dtype=np.float64)
    targets = np.array([0, 1, 2, 1])

    def loss():
        return F.cross_entropy_mean(F.softmax(F.dense(xs, w, b)), targets)

    report = gradient_check(loss, [w, b], tol=1e-4)
    assert report.passed
