import math

import numpy as np
import pytest
import torch

from planforge.diffusion import make_schedule


def ref_betas(T, start=1e-4, end=0.02):
    if T == 1:
        return [start]
    return [start + i * (end - start) / (T - 1) for i in range(T)]


def ref_alpha_bar(betas, t):
    """Product of (1 - beta) over the first t steps, plain loop."""
    ab = 1.0
    for b in betas[:t]:
        ab *= 1.0 - b
    return ab


class TestSchedule:
    def test_default_shape_and_endpoints(self):
        s = make_schedule()
        assert s.T == 1000
        assert s.beta.shape == (1000,)
        assert math.isclose(s.beta[0], 1e-4, rel_tol=1e-15)
        assert math.isclose(s.beta[-1], 0.02, rel_tol=1e-15)

    def test_linear_interior_value(self):
        s = make_schedule(T=10)
        # frozen: 1e-4 + 4 * (0.02 - 1e-4) / 9
        assert math.isclose(s.beta[4], 0.008944444444444444, rel_tol=1e-12)

    def test_monotone_invariants(self):
        s = make_schedule(T=50)
        assert np.all(np.diff(s.beta) > 0)
        assert np.all(s.beta > 0) and np.all(s.beta < 1)
        assert np.all(np.diff(s.alpha_bar) < 0)
        assert np.allclose(s.alpha, 1.0 - s.beta)

    def test_alpha_bar_against_loop(self):
        s = make_schedule(T=10)
        betas = ref_betas(10)
        for t in (1, 3, 10):
            assert math.isclose(s.alpha_bar[t - 1], ref_alpha_bar(betas, t), rel_tol=1e-12)

    def test_sigma_beta_sqrt(self):
        s = make_schedule(T=10)
        assert np.allclose(s.sigma, np.sqrt(s.beta), atol=0)
        assert math.isclose(s.sigma[0], 0.01, rel_tol=1e-12)

    def test_sigma_posterior(self):
        s = make_schedule(T=10, sigma_mode="posterior")
        assert s.sigma[0] == 0.0
        assert np.all(s.sigma[1:] < np.sqrt(s.beta[1:]))
        betas = ref_betas(10)
        t = 5
        want = math.sqrt(
            (1 - ref_alpha_bar(betas, t - 1)) / (1 - ref_alpha_bar(betas, t)) * betas[t - 1]
        )
        assert math.isclose(s.sigma[t - 1], want, rel_tol=1e-12)

    def test_validation(self):
        with pytest.raises(ValueError):
            make_schedule(T=0)
        with pytest.raises(ValueError):
            make_schedule(T=10, beta_start=0.02, beta_end=1e-4)  # decreasing
        with pytest.raises(ValueError):
            make_schedule(T=10, beta_end=1.0)  # beta must stay below 1
        with pytest.raises(ValueError):
            make_schedule(sigma_mode="ddim")
        make_schedule(T=1)  # single step is legal


class TestForward:
    def test_formula_scalar_case(self):
        s = make_schedule(T=10)
        betas = ref_betas(10)
        x0 = np.full((8, 6), 0.5)
        eps = np.full((8, 6), -0.3)
        t = 4
        ab = ref_alpha_bar(betas, t)
        want = math.sqrt(ab) * 0.5 + math.sqrt(1 - ab) * -0.3
        got = s.forward_sample(x0, t, eps)
        assert np.allclose(got, want, atol=1e-12)

    def test_batched_t(self):
        s = make_schedule(T=10)
        rng = np.random.default_rng(0)
        x0 = rng.normal(size=(4, 8, 6))
        eps = rng.normal(size=(4, 8, 6))
        ts = np.array([1, 4, 7, 10])
        got = s.forward_sample(x0, ts, eps)
        for i, t in enumerate(ts):
            assert np.allclose(got[i], s.forward_sample(x0[i], int(t), eps[i]), atol=1e-12)

    def test_torch_kind_follows_input(self):
        s = make_schedule(T=10)
        x0 = torch.randn(2, 8, 6, dtype=torch.float64)
        eps = torch.randn(2, 8, 6, dtype=torch.float64)
        out = s.forward_sample(x0, torch.tensor([3, 8]), eps)
        assert isinstance(out, torch.Tensor) and out.dtype == torch.float64

    def test_moments(self):
        s = make_schedule(T=10)
        rng = np.random.default_rng(3)
        x0 = rng.uniform(-1, 1, size=(8, 6))
        t = 7
        n = 20000
        eps = rng.standard_normal((n, 8, 6))
        xt = s.forward_sample(x0[None], np.full(n, t), eps)
        ab = float(s.alpha_bar[t - 1])
        se_mean = math.sqrt(1 - ab) / math.sqrt(n)
        assert np.all(np.abs(xt.mean(axis=0) - math.sqrt(ab) * x0) < 5 * se_mean)
        v = xt.var(axis=0)
        se_var = (1 - ab) * math.sqrt(2.0 / (n - 1))
        assert np.all(np.abs(v - (1 - ab)) < 5 * se_var)


class TestReverseAndEstimate:
    def test_reverse_formula_hand_case(self):
        s = make_schedule(T=10)
        betas = ref_betas(10)
        t = 3
        a = 1.0 - betas[t - 1]
        ab = ref_alpha_bar(betas, t)
        xt = np.full((8, 6), 0.7)
        eh = np.full((8, 6), 0.2)
        z = np.full((8, 6), 0.5)
        want = (0.7 - (1 - a) / math.sqrt(1 - ab) * 0.2) / math.sqrt(a) + math.sqrt(betas[t - 1]) * 0.5
        got = s.reverse_step(xt, t, eh, z)
        assert np.allclose(got, want, atol=1e-12)

    def test_no_noise_at_t1(self):
        s = make_schedule(T=10)
        xt = np.ones((8, 6))
        eh = np.zeros((8, 6))
        with pytest.raises(ValueError):
            s.reverse_step(xt, 1, eh, np.full((8, 6), 1e-9))
        a = s.reverse_step(xt, 1, eh, None)
        b = s.reverse_step(xt, 1, eh, np.zeros((8, 6)))
        assert np.array_equal(a, b)

    def test_t_out_of_range(self):
        s = make_schedule(T=10)
        x = np.zeros((8, 6))
        with pytest.raises(ValueError):
            s.reverse_step(x, 0, x)
        with pytest.raises(ValueError):
            s.reverse_step(x, 11, x)

    def test_estimate_inverts_forward(self):
        s = make_schedule(T=1000)
        rng = np.random.default_rng(5)
        x0 = rng.uniform(-1, 1, size=(8, 6))
        for t in (1, 500, 1000):
            eps = rng.standard_normal((8, 6))
            xt = s.forward_sample(x0, t, eps)
            back = s.estimate_x0(xt, t, eps)
            assert np.allclose(back, x0, atol=1e-9)

    def test_estimate_batched_and_torch(self):
        s = make_schedule(T=100)
        x0 = torch.rand(3, 8, 6, dtype=torch.float64) * 2 - 1
        eps = torch.randn(3, 8, 6, dtype=torch.float64)
        ts = torch.tensor([1, 50, 100])
        xt = s.forward_sample(x0, ts, eps)
        back = s.estimate_x0(xt, ts, eps)
        assert torch.allclose(back, x0, atol=1e-9)
        x0g = x0.clone().requires_grad_(True)
        xt = s.forward_sample(x0g, ts, eps)
        s.estimate_x0(xt, ts, eps).sum().backward()
        assert x0g.grad is not None and torch.all(torch.isfinite(x0g.grad))
