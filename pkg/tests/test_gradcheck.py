"""Tests for the finite-difference gradient verification suite."""

import time

import numpy as np
import pytest

import rulebound.gradcheck as gradcheck
from rulebound.gradcheck import (
    CheckResult,
    _relative_error,
    check_actor_objective,
    check_input_gradient,
    check_mse_loss,
    report_dict,
    run_gradcheck,
)


class TestRelativeError:
    def test_identical_arrays_have_zero_error(self):
        a = np.array([0.0, 1.0, -2.5])
        assert _relative_error(a, a.copy()) == 0.0

    def test_scales_by_larger_magnitude(self):
        err = _relative_error(np.array([1.0]), np.array([1.01]))
        assert err == pytest.approx(0.01 / 1.01, rel=1e-12)

    def test_floor_damps_near_zero_noise(self):
        # Both entries below the 1e-4 floor: error is measured against the
        # floor, not the tiny magnitudes themselves.
        err = _relative_error(np.array([0.0]), np.array([5e-5]))
        assert err == pytest.approx(0.5, rel=1e-12)

    def test_returns_worst_entry(self):
        analytic = np.array([1.0, 2.0, 3.0])
        numeric = np.array([1.0, 2.2, 3.0])
        assert _relative_error(analytic, numeric) == pytest.approx(0.2 / 2.2, rel=1e-12)


class TestIndividualChecks:
    def test_mse_loss_check_is_tight(self):
        rng = np.random.default_rng(11)
        for index in range(4):
            result = check_mse_loss(rng, index)
            assert result.max_rel_err < 1e-5

    def test_input_gradient_check_is_tight(self):
        rng = np.random.default_rng(12)
        for index in range(4):
            result = check_input_gradient(rng, index)
            assert result.max_rel_err < 1e-5

    def test_actor_objective_check_is_tight(self):
        rng = np.random.default_rng(13)
        for index in range(4):
            result = check_actor_objective(rng, index)
            assert result.max_rel_err < 1e-5

    def test_actor_check_names_cover_both_variants(self):
        rng = np.random.default_rng(14)
        names = [check_actor_objective(rng, index).name for index in range(2)]
        assert "classical" in names[0]
        assert "ea" in names[1]


class TestRunGradcheck:
    def test_full_suite_passes_quickly(self):
        start = time.perf_counter()
        report = run_gradcheck(networks=20, seed=0)
        elapsed = time.perf_counter() - start
        assert report.passed
        assert report.max_rel_err < report.tolerance
        assert len(report.checks) == 60
        assert elapsed < 60.0

    def test_deterministic_given_seed(self):
        first = run_gradcheck(networks=3, seed=7)
        second = run_gradcheck(networks=3, seed=7)
        assert report_dict(first) == report_dict(second)

    def test_different_seeds_give_different_errors(self):
        first = run_gradcheck(networks=3, seed=0)
        second = run_gradcheck(networks=3, seed=1)
        assert first.max_rel_err != second.max_rel_err

    def test_rejects_nonpositive_network_count(self):
        with pytest.raises(ValueError, match="positive"):
            run_gradcheck(networks=0)

    def test_report_dict_shape(self):
        report = run_gradcheck(networks=2, seed=3)
        payload = report_dict(report)
        assert payload["networks"] == 2
        assert payload["seed"] == 3
        assert payload["passed"] is True
        assert len(payload["checks"]) == 6
        for entry in payload["checks"]:
            assert set(entry) == {"name", "max_rel_err", "passed"}

    def test_detects_corrupted_backward_pass(self, monkeypatch):
        # Scale every parameter gradient by 1.01: a one-percent error is far
        # above the 1e-4 tolerance, so the corrupted paths must be flagged.
        true_backward = gradcheck.backward

        def skewed(net, cache, cotangent):
            grads, input_grad = true_backward(net, cache, cotangent)
            scaled = type(grads)(
                weights=[w * 1.01 for w in grads.weights],
                biases=[b * 1.01 for b in grads.biases],
            )
            return scaled, input_grad

        monkeypatch.setattr(gradcheck, "backward", skewed)
        report = run_gradcheck(networks=2, seed=0)
        assert not report.passed
        failed = [c.name for c in report.checks if not c.passed]
        assert any(name.startswith("mse-loss") for name in failed)

    def test_tolerance_is_honoured(self):
        # With an absurdly tight tolerance even correct gradients fail,
        # which shows the pass flag actually compares against it.
        report = run_gradcheck(networks=2, seed=0, tolerance=1e-18)
        assert not report.passed
        assert all(isinstance(c, CheckResult) for c in report.checks)
