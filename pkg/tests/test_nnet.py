"""Neural-core contracts: cell arithmetic, loss gradients, the optimizer
schedule, dropout scaling, and the checkpoint container."""

import math

import numpy as np
import pytest

from commentgen import nnet


def _zero_lstm(input_dim, hidden):
    return nnet.LstmParams(
        wx=np.zeros((input_dim, 4 * hidden)),
        wh=np.zeros((hidden, 4 * hidden)),
        b=np.zeros(4 * hidden),
    )


class TestLstmStep:
    def test_all_zero_inputs(self):
        p = _zero_lstm(3, 4)
        h, c = nnet.lstm_step(p, np.zeros(3), np.zeros(4), np.zeros(4))
        np.testing.assert_allclose(h, 0.0)
        np.testing.assert_allclose(c, 0.0)

    def test_zero_weights_carry_half_cell(self):
        # sigmoid(0) = 0.5 so c = 0.5*c_prev and h = 0.5*tanh(0.5*c_prev)
        p = _zero_lstm(3, 4)
        v = np.array([0.4, -1.0, 2.0, 0.0])
        h, c = nnet.lstm_step(p, np.zeros(3), np.zeros(4), v)
        np.testing.assert_allclose(c, 0.5 * v, atol=1e-12)
        np.testing.assert_allclose(h, 0.5 * np.tanh(0.5 * v), atol=1e-12)

    def test_random_instance_matches_scalar_recomputation(self):
        rng = np.random.default_rng(0)
        p = nnet.init_lstm(rng, 2, 3)
        x = rng.normal(size=2)
        h_prev = rng.normal(size=3)
        c_prev = rng.normal(size=3)
        h, c = nnet.lstm_step(p, x, h_prev, c_prev)

        def sig(z):
            return 1.0 / (1.0 + math.exp(-z))

        for k in range(3):
            pre = [
                sum(x[d] * p.wx[d, g * 3 + k] for d in range(2))
                + sum(h_prev[j] * p.wh[j, g * 3 + k] for j in range(3))
                + p.b[g * 3 + k]
                for g in range(4)
            ]
            i, f, o = sig(pre[0]), sig(pre[1]), sig(pre[2])
            g = math.tanh(pre[3])
            ck = f * c_prev[k] + i * g
            hk = o * math.tanh(ck)
            assert c[k] == pytest.approx(ck, abs=1e-12)
            assert h[k] == pytest.approx(hk, abs=1e-12)

    def test_dimension_mismatch(self):
        p = _zero_lstm(3, 4)
        with pytest.raises(ValueError, match="dimension mismatch"):
            nnet.lstm_step(p, np.zeros(2), np.zeros(4), np.zeros(4))

    def test_outputs_bounded(self):
        rng = np.random.default_rng(1)
        p = nnet.init_lstm(rng, 3, 4)
        h = np.zeros(4)
        c = np.zeros(4)
        for _ in range(50):
            h, c = nnet.lstm_step(p, rng.normal(size=3) * 3, h, c)
            assert np.all(np.abs(h) < 1.0)


class TestGruStep:
    def test_zero_weights_halve_state(self):
        p = nnet.GruParams(
            wx=np.zeros((2, 9)), wh_zr=np.zeros((3, 6)), wh_n=np.zeros((3, 3)), b=np.zeros(9)
        )
        h_prev = np.array([1.0, -2.0, 0.5])
        h = nnet.gru_step(p, np.zeros(2), h_prev)
        np.testing.assert_allclose(h, 0.5 * h_prev, atol=1e-12)

    def test_zero_state_stays_zero(self):
        p = nnet.GruParams(
            wx=np.zeros((2, 9)), wh_zr=np.zeros((3, 6)), wh_n=np.zeros((3, 3)), b=np.zeros(9)
        )
        np.testing.assert_allclose(nnet.gru_step(p, np.zeros(2), np.zeros(3)), 0.0)

    def test_random_instance_matches_scalar_recomputation(self):
        rng = np.random.default_rng(2)
        p = nnet.init_gru(rng, 2, 3)
        x = rng.normal(size=2)
        h_prev = rng.normal(size=3)
        h = nnet.gru_step(p, x, h_prev)

        def sig(z):
            return 1.0 / (1.0 + math.exp(-z))

        for k in range(3):
            zk = sig(
                sum(x[d] * p.wx[d, k] for d in range(2))
                + sum(h_prev[j] * p.wh_zr[j, k] for j in range(3))
                + p.b[k]
            )
            rk = sig(
                sum(x[d] * p.wx[d, 3 + k] for d in range(2))
                + sum(h_prev[j] * p.wh_zr[j, 3 + k] for j in range(3))
                + p.b[3 + k]
            )
            assert h[k] != 0  # sanity: not the degenerate case
            # candidate needs the full reset-gated recurrent term
            r = [
                sig(
                    sum(x[d] * p.wx[d, 3 + j] for d in range(2))
                    + sum(h_prev[m] * p.wh_zr[m, 3 + j] for m in range(3))
                    + p.b[3 + j]
                )
                for j in range(3)
            ]
            nk = math.tanh(
                sum(x[d] * p.wx[d, 6 + k] for d in range(2))
                + sum(r[j] * h_prev[j] * p.wh_n[j, k] for j in range(3))
                + p.b[6 + k]
            )
            assert rk == pytest.approx(r[k], abs=1e-12)
            assert h[k] == pytest.approx((1 - zk) * h_prev[k] + zk * nk, abs=1e-12)


class TestSoftmaxXent:
    def test_uniform_logits_loss_is_log_k(self):
        for k in (2, 5, 17):
            loss, _ = nnet.softmax_xent(np.zeros(k), 0)
            assert loss == pytest.approx(math.log(k), abs=1e-12)

    def test_large_margin_loss_vanishes(self):
        logits = np.zeros(6)
        logits[2] = 50.0
        loss, _ = nnet.softmax_xent(logits, 2)
        assert loss < 1e-10

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(3)
        logits = rng.normal(size=8)
        target = 5
        _, grad = nnet.softmax_xent(logits, target)
        eps = 1e-6
        for i in range(8):
            logits[i] += eps
            up, _ = nnet.softmax_xent(logits, target)
            logits[i] -= 2 * eps
            down, _ = nnet.softmax_xent(logits, target)
            logits[i] += eps
            num = (up - down) / (2 * eps)
            assert abs(grad[i] - num) / max(abs(grad[i]), abs(num), 1e-8) < 1e-6

    def test_target_out_of_range(self):
        with pytest.raises(IndexError):
            nnet.softmax_xent(np.zeros(3), 3)


class TestSgd:
    def test_basic_update(self):
        params = {"p": np.array([1.0])}
        state = nnet.OptimizerState(learning_rate=0.1)
        nnet.sgd_step(params, {"p": np.array([1.0])}, state, clip_norm=None)
        assert params["p"][0] == pytest.approx(0.9)

    def test_zero_gradient_no_change(self):
        params = {"p": np.array([1.0, 2.0])}
        before = params["p"].copy()
        nnet.sgd_step(params, {"p": np.zeros(2)}, nnet.OptimizerState())
        np.testing.assert_array_equal(params["p"], before)

    def test_clip_noop_below_threshold(self):
        g = {"p": np.array([3.0, 4.0])}  # norm 5 exactly
        assert nnet.clip_grads(g, 5.0) == 1.0
        np.testing.assert_array_equal(g["p"], [3.0, 4.0])
        g = {"p": np.array([6.0, 8.0])}  # norm 10
        assert nnet.clip_grads(g, 5.0) == pytest.approx(0.5)
        np.testing.assert_allclose(g["p"], [3.0, 4.0])

    def test_nan_gradient_names_parameter(self):
        params = {"bad.w": np.zeros(2)}
        with pytest.raises(ValueError, match="bad.w"):
            nnet.sgd_step(params, {"bad.w": np.array([np.nan, 0.0])}, nnet.OptimizerState())

    def test_lr_zero_leaves_params_bit_identical(self):
        rng = np.random.default_rng(4)
        params = {"w": rng.normal(size=(3, 3))}
        before = params["w"].tobytes()
        state = nnet.OptimizerState(learning_rate=0.0)
        nnet.sgd_step(params, {"w": rng.normal(size=(3, 3))}, state)
        assert params["w"].tobytes() == before


class TestPlateauDecay:
    def test_seven_stale_epochs_decay(self):
        s = nnet.OptimizerState(learning_rate=0.1)
        s = nnet.plateau_decay(s, 1.0)
        for _ in range(7):
            s = nnet.plateau_decay(s, 2.0)
        assert s.learning_rate == pytest.approx(0.01)

    def test_improvement_resets_counter(self):
        s = nnet.OptimizerState(learning_rate=0.1)
        s = nnet.plateau_decay(s, 1.0)
        for _ in range(6):
            s = nnet.plateau_decay(s, 2.0)
        s = nnet.plateau_decay(s, 0.5)
        assert s.learning_rate == pytest.approx(0.1)
        assert s.epochs_since_improvement == 0

    def test_halts_after_six_decays(self):
        # derived by iterating 0.1 * 0.1^k against the 1e-7 floor
        s = nnet.OptimizerState(learning_rate=0.1)
        s = nnet.plateau_decay(s, 1.0)
        decays = 0
        prev = s.learning_rate
        while not s.should_stop and decays < 20:
            s = nnet.plateau_decay(s, 2.0)
            if s.learning_rate != prev:
                decays += 1
                prev = s.learning_rate
        assert decays == 6
        assert s.learning_rate >= s.floor  # invariant

    def test_lr_never_below_floor(self):
        s = nnet.OptimizerState(learning_rate=1e-7, floor=1e-7)
        s = nnet.plateau_decay(s, 1.0)
        for _ in range(10):
            s = nnet.plateau_decay(s, 2.0)
        assert s.learning_rate >= 1e-7


class TestDropout:
    def test_rate_zero_is_identity(self):
        rng = np.random.default_rng(5)
        mask = nnet.dropout_mask(rng, (10, 10), 0.0)
        np.testing.assert_array_equal(mask, np.ones((10, 10)))

    def test_inverted_scaling_preserves_mean(self):
        rng = np.random.default_rng(6)
        x = 3.7
        n = 100_000
        mask = nnet.dropout_mask(rng, (n,), 0.3)
        mean = float((x * mask).mean())
        assert abs(mean - x) / x < 0.01


class TestGradCheckHarness:
    def test_linear_layer(self):
        rng = np.random.default_rng(7)
        params = {"w": rng.normal(size=(4, 3)), "b": rng.normal(size=3)}
        x = rng.normal(size=4)
        target = 2

        def loss():
            return nnet.softmax_xent(x @ params["w"] + params["b"], target)[0]

        _, dlogits = nnet.softmax_xent(x @ params["w"] + params["b"], target)
        analytic = {"w": np.outer(x, dlogits), "b": dlogits}
        assert nnet.grad_check(loss, params, analytic) < 1e-6

    def test_lstm_over_four_steps(self):
        rng = np.random.default_rng(8)
        cell = nnet.init_lstm(rng, 3, 4)
        params = {}
        nnet.add_lstm(params, "c", cell)
        xs = rng.normal(size=(4, 3))
        R = rng.normal(size=(4, 4))

        def loss():
            hs, _, _ = nnet.lstm_run(nnet.get_lstm(params, "c"), xs)
            return float((hs * R).sum())

        _, _, cache = nnet.lstm_run(cell, xs)
        _, g, _, _ = nnet.lstm_run_backward(cell, cache, R.copy())
        assert nnet.grad_check(loss, params, {f"c.{k}": v for k, v in g.items()}) < 1e-4

    def test_non_finite_forward_raises(self):
        params = {"w": np.array([1.0])}

        def loss():
            return float("nan")

        with pytest.raises(FloatingPointError):
            nnet.grad_check(loss, params, {"w": np.array([0.0])})


class TestCheckpoint:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(9)
        params = {"a.w": rng.normal(size=(3, 5)), "a.b": rng.normal(size=5)}
        meta = {"note": "x", "n": 3}
        path = tmp_path / "m.ckpt"
        nnet.save_params(path, "testkind", params, meta)
        kind, loaded, got_meta = nnet.load_params(path)
        assert kind == "testkind"
        assert got_meta == meta
        assert set(loaded) == set(params)
        for k in params:
            np.testing.assert_array_equal(loaded[k], params[k])
            assert loaded[k].shape == params[k].shape

    def test_identical_params_identical_bytes(self, tmp_path):
        rng = np.random.default_rng(10)
        params = {"w": rng.normal(size=(4, 4))}
        nnet.save_params(tmp_path / "a.ckpt", "k", params, {"v": 1})
        nnet.save_params(tmp_path / "b.ckpt", "k", params, {"v": 1})
        assert (tmp_path / "a.ckpt").read_bytes() == (tmp_path / "b.ckpt").read_bytes()

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "junk.ckpt"
        path.write_bytes(b"NOPE" + b"\x00" * 32)
        with pytest.raises(ValueError, match="magic"):
            nnet.load_params(path)

    def test_truncated_rejected(self, tmp_path):
        rng = np.random.default_rng(11)
        path = tmp_path / "m.ckpt"
        nnet.save_params(path, "k", {"w": rng.normal(size=(8, 8))}, {})
        data = path.read_bytes()
        path.write_bytes(data[: len(data) // 2])
        with pytest.raises(ValueError, match="truncated"):
            nnet.load_params(path)
