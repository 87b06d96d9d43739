import numpy as np
import pytest

from vidcs.decoder import MlpDecoder, init_decoder
from vidcs.encoder import BinaryMaskEncoder
from vidcs.sensing import sample_bernoulli_mask
from vidcs.trainer import (
    SgdState,
    TrainConfig,
    TrainingDiverged,
    clip_gradients,
    lr_schedule,
    mse_loss,
    sgd_step,
    train,
)


class TestMseLoss:
    def test_equal_inputs(self):
        x = np.random.default_rng(0).random((5, 8))
        loss, grad = mse_loss(x, x.copy())
        assert loss == 0.0
        np.testing.assert_array_equal(grad, 0.0)

    def test_unit_basis_difference(self):
        target = np.zeros((1, 4))
        pred = np.zeros((1, 4))
        pred[0, 0] = 1.0
        loss, grad = mse_loss(pred, target)
        assert loss == 1.0
        np.testing.assert_array_equal(grad, [[2.0, 0, 0, 0]])

    def test_direct_sum_oracle(self):
        rng = np.random.default_rng(1)
        pred = rng.random((7, 12))
        target = rng.random((7, 12))
        loss, grad = mse_loss(pred, target)
        want = sum(
            sum((pred[i, j] - target[i, j]) ** 2 for j in range(12))
            for i in range(7)
        ) / 7
        assert abs(loss - want) < 1e-12
        want_grad = 2.0 / 7 * (pred - target)
        assert np.max(np.abs(grad - want_grad)) < 1e-12

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            mse_loss(np.zeros((2, 3)), np.zeros((3, 2)))


class TestLrSchedule:
    def test_encoder_epoch_zero(self):
        assert lr_schedule("encoder", 0, 0.01) == 0.01

    def test_encoder_halves_every_ten(self):
        assert lr_schedule("encoder", 20, 0.01) == 0.0025
        assert lr_schedule("encoder", 9, 0.01) == 0.01
        assert lr_schedule("encoder", 10, 0.01) == 0.005

    def test_decoder_drop_after_400(self):
        assert lr_schedule("decoder", 399, 0.01) == 0.01
        assert lr_schedule("decoder", 400, 0.01) == 0.001

    def test_bad_component(self):
        with pytest.raises(ValueError):
            lr_schedule("both", 0, 0.01)


class TestClipGradients:
    def test_below_threshold_unchanged(self):
        g = np.array([0.03, 0.04])  # norm 0.05
        clip_gradients([g], 0.1)
        np.testing.assert_array_equal(g, [0.03, 0.04])

    def test_single_value_clipped(self):
        g = np.array([1.0])
        clip_gradients([g], 0.1)
        np.testing.assert_allclose(g, [0.1])

    def test_norm_recomputation_oracle(self):
        rng = np.random.default_rng(2)
        grads = [rng.standard_normal((3, 4)), rng.standard_normal(7)]
        clip_gradients(grads, 0.1)
        norm = np.sqrt(sum(float(np.sum(g * g)) for g in grads))
        assert norm <= 0.1 + 1e-12

    def test_joint_not_per_array(self):
        a = np.array([0.09])
        b = np.array([0.09])
        clip_gradients([a, b], 0.1)  # joint norm 0.127 > 0.1 -> both scaled
        assert a[0] < 0.09 and b[0] < 0.09


class TestSgdStep:
    def test_plain_gradient_step(self):
        p = np.array([1.0, 2.0])
        g = np.array([0.5, -0.5])
        v = np.zeros(2)
        sgd_step([p], [g], [v], lr=1.0, momentum=0.0)
        np.testing.assert_array_equal(p, [0.5, 2.5])

    def test_zero_grad_zero_velocity_unchanged(self):
        p = np.array([3.0])
        sgd_step([p], [np.zeros(1)], [np.zeros(1)], lr=0.1, momentum=0.9)
        np.testing.assert_array_equal(p, [3.0])

    def test_scalar_recursion_oracle(self):
        # quadratic f(x) = (a/2) x^2 - b x, gradient a x - b
        a, b, lr, m = 2.0, 1.0, 0.1, 0.9
        x = np.array([0.5])
        v = np.array([0.0])
        grad = lambda xv: a * xv - b
        x0 = 0.5
        v1 = m * 0.0 - lr * grad(x0)
        x1 = x0 + v1
        v2 = m * v1 - lr * grad(x1)
        x2 = x1 + v2
        sgd_step([x], [np.array([grad(x[0])])], [v], lr, m)
        sgd_step([x], [np.array([grad(x[0])])], [v], lr, m)
        assert abs(x[0] - x2) < 1e-12 and abs(v[0] - v2) < 1e-12

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            sgd_step([np.zeros(2)], [np.zeros(3)], [np.zeros(2)], 0.1, 0.0)


def tiny_setup(seed=0, n_blocks=32, p=0.5, hidden=32, k=1):
    rng = np.random.default_rng(seed)
    enc = BinaryMaskEncoder(sample_bernoulli_mask((2, 2, 4), p, seed))
    dec = MlpDecoder(init_decoder(enc.m_p, enc.n_p, k, seed + 1, hidden_units=hidden))
    X = rng.random((n_blocks, enc.n_p))
    return enc, dec, X


class TestTrain:
    def test_frozen_mask_never_flips(self):
        enc, dec, X = tiny_setup()
        cfg = TrainConfig(dec_lr=1e-3, epochs=5, batch=8, seed=1, train_mask=False)
        bits_before = enc.bits.copy()
        _, _, logs = train(X, X[:8], cfg, enc, dec)
        assert all(log.flips == 0 for log in logs)
        np.testing.assert_array_equal(enc.bits, bits_before)

    def test_loss_decreases_on_toy_overfit(self):
        enc, dec, X = tiny_setup(seed=3, n_blocks=16, hidden=64, k=2)
        cfg = TrainConfig(dec_lr=1e-1, epochs=300, batch=16, seed=2)
        _, _, logs = train(X, None, cfg, enc, dec)
        assert logs[-1].train_mse < logs[0].train_mse / 10.0

    def test_deterministic_same_seed_identical_logs(self):
        from vidcs.storage import format_log_row

        rows = []
        for _ in range(2):
            enc, dec, X = tiny_setup(seed=5)
            cfg = TrainConfig(dec_lr=1e-3, epochs=4, batch=8, seed=9,
                              deterministic=True)
            _, _, logs = train(X, X[:4], cfg, enc, dec)
            rows.append([format_log_row(l) for l in logs])
        assert rows[0] == rows[1]

    def test_empty_data_rejected(self):
        enc, dec, _ = tiny_setup()
        cfg = TrainConfig(dec_lr=1e-3, epochs=1)
        with pytest.raises(ValueError):
            train(np.zeros((0, enc.n_p)), None, cfg, enc, dec)

    def test_nan_loss_aborts_with_diagnostic(self):
        enc, dec, X = tiny_setup(seed=6, k=2)
        cfg = TrainConfig(dec_lr=1e300, epochs=50, batch=8, seed=3)
        with np.errstate(over="ignore", invalid="ignore"):
            with pytest.raises(TrainingDiverged, match="epoch"):
                train(X, None, cfg, enc, dec)

    def test_nan_input_aborts(self):
        enc, dec, X = tiny_setup(seed=12)
        X[0, 0] = np.nan
        cfg = TrainConfig(dec_lr=1e-3, epochs=1, batch=32, seed=3)
        with pytest.raises(TrainingDiverged):
            train(X, None, cfg, enc, dec)

    def test_shadow_stays_clipped_and_bits_consistent(self):
        enc, dec, X = tiny_setup(seed=7)
        cfg = TrainConfig(dec_lr=1e-2, enc_lr=1.0, epochs=10, batch=8, seed=4)
        enc, dec, _ = train(X, None, cfg, enc, dec)
        assert np.all(np.abs(enc.shadow) <= 1.0)
        np.testing.assert_array_equal(enc.bits, (enc.shadow >= 0).astype(np.uint8))

    def test_logged_rates_follow_schedule(self):
        enc, dec, X = tiny_setup(seed=8)
        cfg = TrainConfig(dec_lr=1e-3, epochs=12, batch=8, seed=5)
        _, _, logs = train(X, None, cfg, enc, dec)
        assert logs[0].enc_lr == 1e-2 and logs[0].dec_lr == 1e-3
        assert logs[11].enc_lr == 5e-3  # halved once at epoch 10

    def test_validation_uses_binarized_weights(self):
        # validation MSE must match an independent forward with the bits
        enc, dec, X = tiny_setup(seed=9)
        cfg = TrainConfig(dec_lr=1e-3, epochs=1, batch=8, seed=6)
        X_val = X[:8]
        enc, dec, logs = train(X, X_val, cfg, enc, dec)
        pred = dec.forward(enc.forward(X_val))
        want, _ = mse_loss(pred, X_val)
        assert abs(logs[-1].val_mse - want) < 1e-12


class TestConfigValidation:
    def test_bad_momentum(self):
        with pytest.raises(ValueError):
            TrainConfig(dec_lr=1e-3, momentum=1.0)

    def test_bad_rates(self):
        with pytest.raises(ValueError):
            TrainConfig(dec_lr=0.0)
        with pytest.raises(ValueError):
            TrainConfig(dec_lr=1e-3, enc_lr=-1.0)

    def test_default_encoder_rate_is_10x(self):
        assert TrainConfig(dec_lr=2e-3).encoder_lr == 2e-2
