import math

import numpy as np
import pytest

from archsearch import nn_core as nc

from oracles import adam_reference, central_diff_grads, max_rel_error, scalar_lstm_step


def seeded_lstm(input_dim=3, hidden_dim=2, seed=0, scale=0.5):
    rng = np.random.default_rng(seed)
    return nc.init_lstm(input_dim, hidden_dim, rng, scale=scale)


class TestLstmForward:
    def test_zero_params_give_zero_state(self):
        params = nc.zero_lstm(4, 3)
        h, c, _ = nc.lstm_forward(params, np.ones(4), np.zeros(3), np.zeros(3))
        # gates sit at sigmoid(0)=0.5 but the tanh candidate is 0, so nothing flows
        assert np.all(h == 0.0)
        assert np.all(c == 0.0)

    def test_saturated_gates_hand_values(self):
        # all weights zero; input and output gates forced open, candidate tanh(1)
        params = nc.zero_lstm(1, 1)
        params.b_i[0] = 30.0
        params.b_o[0] = 30.0
        params.b_g[0] = 1.0
        h, c, _ = nc.lstm_forward(params, np.zeros(1), np.zeros(1), np.zeros(1))
        assert c[0] == pytest.approx(math.tanh(1.0), abs=1e-9)
        assert h[0] == pytest.approx(math.tanh(math.tanh(1.0)), abs=1e-9)
        assert c[0] == pytest.approx(0.7616, abs=1e-4)
        assert h[0] == pytest.approx(0.6420, abs=1e-4)

    def test_matches_scalar_reimplementation(self):
        rng = np.random.default_rng(42)
        params = seeded_lstm(5, 4, seed=7)
        x = rng.normal(size=5)
        h_prev = rng.normal(size=4)
        c_prev = rng.normal(size=4)
        h, c, _ = nc.lstm_forward(params, x, h_prev, c_prev)
        h_ref, c_ref = scalar_lstm_step(params, x, h_prev, c_prev)
        np.testing.assert_allclose(h, h_ref, rtol=1e-12)
        np.testing.assert_allclose(c, c_ref, rtol=1e-12)

    def test_dimension_mismatch_rejected(self):
        params = seeded_lstm(3, 2)
        with pytest.raises(ValueError):
            nc.lstm_forward(params, np.zeros(4), np.zeros(2), np.zeros(2))
        with pytest.raises(ValueError):
            nc.lstm_forward(params, np.zeros(3), np.zeros(3), np.zeros(2))

    def test_hidden_state_bounded(self):
        params = seeded_lstm(3, 2, scale=2.0)
        rng = np.random.default_rng(1)
        h = np.zeros(2)
        c = np.zeros(2)
        for _ in range(50):
            h, c, _ = nc.lstm_forward(params, rng.normal(size=3), h, c)
            assert np.all(np.abs(h) <= 1.0)
            assert np.all(np.isfinite(c))

    def test_determinism(self):
        params = seeded_lstm()
        x = np.array([0.3, -0.2, 0.8])
        h1, c1, _ = nc.lstm_forward(params, x, np.zeros(2), np.zeros(2))
        h2, c2, _ = nc.lstm_forward(params, x, np.zeros(2), np.zeros(2))
        assert np.array_equal(h1, h2) and np.array_equal(c1, c2)


class TestLstmBackward:
    def run_forward(self, params, xs):
        h = np.zeros(params.hidden_dim)
        c = np.zeros(params.hidden_dim)
        caches = []
        for x in xs:
            h, c, cache = nc.lstm_forward(params, x, h, c)
            caches.append(cache)
        return caches

    def test_zero_output_grads_give_zero_param_grads(self):
        params = seeded_lstm()
        caches = self.run_forward(params, [np.ones(3)] * 4)
        grads, d_inputs = nc.lstm_backward(params, caches, [np.zeros(2)] * 4)
        for g in grads.values():
            assert np.all(g == 0.0)
        for dx in d_inputs:
            assert np.all(dx == 0.0)

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_three_step_finite_differences(self, seed):
        rng = np.random.default_rng(seed)
        params = seeded_lstm(3, 2, seed=seed, scale=0.6)
        xs = [rng.normal(size=3) for _ in range(3)]
        weights = [rng.normal(size=2) for _ in range(3)]

        def loss():
            h = np.zeros(2)
            c = np.zeros(2)
            total = 0.0
            for x, w in zip(xs, weights):
                h, c, _ = nc.lstm_forward(params, x, h, c)
                total += float(w @ h)
            return total

        caches = self.run_forward(params, xs)
        analytic, _ = nc.lstm_backward(params, caches, weights)
        numeric = central_diff_grads(loss, params.tensors())
        assert max_rel_error(analytic, numeric) < 1e-4

    def test_single_step_symbolic_gradient(self):
        # hidden 1, input 1, only w_i=a and w_g=b nonzero: h = 0.5*tanh(sig(ax)*tanh(bx))
        a, b, x = 0.7, -0.4, 0.9
        params = nc.zero_lstm(1, 1)
        params.w_i[0, 0] = a
        params.w_g[0, 0] = b
        h, c, cache = nc.lstm_forward(params, np.array([x]), np.zeros(1), np.zeros(1))
        grads, d_inputs = nc.lstm_backward(params, [cache], [np.ones(1)])

        sig = 1.0 / (1.0 + math.exp(-a * x))
        g = math.tanh(b * x)
        cc = sig * g
        dtanh_c = 1.0 - math.tanh(cc) ** 2
        dh_da = 0.5 * dtanh_c * g * sig * (1.0 - sig) * x
        dh_db = 0.5 * dtanh_c * sig * (1.0 - g * g) * x
        dh_dbo = math.tanh(cc) * 0.5 * 0.5  # o=sig(0)=0.5, derivative o(1-o)
        dh_dx = 0.5 * dtanh_c * (g * sig * (1.0 - sig) * a + sig * (1.0 - g * g) * b)

        assert grads["lstm.w_i"][0, 0] == pytest.approx(dh_da, rel=1e-12)
        assert grads["lstm.w_g"][0, 0] == pytest.approx(dh_db, rel=1e-12)
        assert grads["lstm.b_o"][0] == pytest.approx(dh_dbo, rel=1e-12)
        assert d_inputs[0][0] == pytest.approx(dh_dx, rel=1e-12)

    def test_cache_mismatch_rejected(self):
        params = seeded_lstm(3, 2)
        other = seeded_lstm(4, 2)
        caches = self.run_forward(other, [np.ones(4)] * 2)
        with pytest.raises(ValueError):
            nc.lstm_backward(params, caches, [np.zeros(2)] * 2)
        with pytest.raises(ValueError):
            nc.lstm_backward(params, [], [np.zeros(2)])


class TestSoftmaxSample:
    def test_uniform_for_equal_logits(self):
        probs = nc.softmax_probs(np.full(5, 1.3))
        np.testing.assert_allclose(probs, 0.2, rtol=1e-15)

    def test_saturation(self):
        index, log_prob, probs = nc.softmax_sample(
            np.array([50.0, -50.0, -50.0]), np.random.default_rng(0))
        assert index == 0
        assert log_prob == pytest.approx(0.0, abs=1e-12)
        assert probs[0] == pytest.approx(1.0, abs=1e-12)

    def test_empty_logits_rejected(self):
        with pytest.raises(ValueError):
            nc.softmax_probs(np.array([]))

    def test_probs_sum_to_one(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            logits = rng.normal(scale=30.0, size=rng.integers(1, 8))
            probs = nc.softmax_probs(logits)
            assert abs(probs.sum() - 1.0) < 1e-12
            assert np.all(np.isfinite(probs))

    def test_monte_carlo_frequencies(self):
        logits = np.array([0.1, 0.3, -0.2])
        expected = nc.softmax_probs(logits)
        rng = np.random.default_rng(12345)
        counts = np.zeros(3)
        draws = 100_000
        for _ in range(draws):
            index, _, _ = nc.softmax_sample(logits, rng)
            counts[index] += 1
        np.testing.assert_allclose(counts / draws, expected, atol=0.01)

    def test_log_prob_consistent_with_probs(self):
        rng = np.random.default_rng(9)
        logits = rng.normal(size=4)
        index, log_prob, probs = nc.softmax_sample(logits, rng)
        assert log_prob == float(np.log(probs[index]))

    def test_determinism_under_seed(self):
        logits = np.array([0.4, -1.2, 0.9, 0.0])
        draws1 = [nc.softmax_sample(logits, np.random.default_rng(11))[0] for _ in range(1)]
        draws2 = [nc.softmax_sample(logits, np.random.default_rng(11))[0] for _ in range(1)]
        assert draws1 == draws2


class TestAdam:
    def test_zero_gradient_keeps_params(self):
        params = {"w": np.array([1.0, -2.0])}
        state = nc.AdamState.for_params(params, lr=0.1)
        before = params["w"].copy()
        nc.adam_step(params, {"w": np.zeros(2)}, state)
        np.testing.assert_array_equal(params["w"], before)
        assert state.t == 1

    def test_first_step_hand_value(self):
        # unit gradient: bias correction makes m_hat = v_hat = 1, so the
        # ascent step is lr / (1 + eps)
        params = {"w": np.array([0.0])}
        state = nc.AdamState.for_params(params, lr=0.03)
        nc.adam_step(params, {"w": np.array([1.0])}, state)
        assert params["w"][0] == pytest.approx(0.03 / (1.0 + 1e-8), rel=1e-15)
        assert params["w"][0] == pytest.approx(0.03, abs=1e-8)

    def test_two_steps_match_reference_recurrence(self):
        params = {"w": np.array([0.5])}
        state = nc.AdamState.for_params(params, lr=0.01)
        for _ in range(2):
            nc.adam_step(params, {"w": np.array([-0.3])}, state)
        expected = adam_reference(0.5, [-0.3, -0.3], lr=0.01)
        assert params["w"][0] == pytest.approx(expected, rel=1e-15)

    def test_ascent_direction(self):
        params = {"w": np.array([0.0])}
        state = nc.AdamState.for_params(params, lr=0.05)
        nc.adam_step(params, {"w": np.array([2.0])}, state)
        assert params["w"][0] > 0.0  # positive reward gradient moves up

    def test_shape_mismatch_rejected(self):
        params = {"w": np.zeros(2)}
        state = nc.AdamState.for_params(params, lr=0.1)
        with pytest.raises(ValueError):
            nc.adam_step(params, {"w": np.zeros(3)}, state)
        with pytest.raises(ValueError):
            nc.adam_step(params, {"v": np.zeros(2)}, state)

    def test_bad_hyperparameters_rejected(self):
        with pytest.raises(ValueError):
            nc.AdamState(lr=0.1, beta1=1.0)
        with pytest.raises(ValueError):
            nc.AdamState(lr=0.1, beta2=-0.2)
        with pytest.raises(ValueError):
            nc.AdamState(lr=0.1, t=-1)


class TestClipping:
    def test_norm_reported_and_clipped(self):
        grads = {"a": np.array([3.0, 4.0])}
        norm = nc.clip_by_global_norm(grads, 1.0)
        assert norm == pytest.approx(5.0)
        assert nc.global_norm(grads) == pytest.approx(1.0)

    def test_no_clip_below_threshold(self):
        grads = {"a": np.array([0.3, 0.4])}
        nc.clip_by_global_norm(grads, 1.0)
        np.testing.assert_allclose(grads["a"], [0.3, 0.4])
