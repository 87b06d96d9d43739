import struct

import numpy as np
import pytest

from vidcs.decoder import MlpDecoder, init_decoder
from vidcs.encoder import BinaryMaskEncoder
from vidcs.sensing import sample_bernoulli_mask
from vidcs.storage import (
    LOG_HEADER,
    StorageFormatError,
    format_log_row,
    read_float_stack,
    read_log,
    read_mask_bits,
    read_mask_shadow,
    read_model,
    read_pgm,
    read_video,
    write_float_stack,
    write_log,
    write_mask_bits,
    write_mask_shadow,
    write_model,
    write_pgm,
    write_svg_lines,
    write_svg_stack,
    write_video,
)
from vidcs.trainer import EpochLog, SgdState, TrainConfig, train


class TestVideoFormat:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        vol = rng.integers(0, 256, size=(3, 4, 5)).astype(np.float64) / 255.0
        path = tmp_path / "v.rgv"
        write_video(path, vol)
        np.testing.assert_array_equal(read_video(path), vol)

    def test_header_size_math(self, tmp_path):
        path = tmp_path / "v.rgv"
        write_video(path, np.zeros((1, 2, 2)))
        assert path.stat().st_size == 16 + 4

    def test_golden_bytes(self, tmp_path):
        vol = np.array([[[0, 255], [128, 64]]], dtype=np.uint8) / 255.0
        path = tmp_path / "v.rgv"
        write_video(path, vol)
        want = b"RGV1" + struct.pack("<III", 2, 2, 1) + bytes([0, 255, 128, 64])
        assert path.read_bytes() == want

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "v.rgv"
        path.write_bytes(b"XXXX" + struct.pack("<III", 1, 1, 1) + b"\x00")
        with pytest.raises(StorageFormatError):
            read_video(path)

    def test_truncated_payload(self, tmp_path):
        path = tmp_path / "v.rgv"
        path.write_bytes(b"RGV1" + struct.pack("<III", 2, 2, 2) + b"\x00" * 3)
        with pytest.raises(StorageFormatError):
            read_video(path)

    def test_zero_dims(self, tmp_path):
        path = tmp_path / "v.rgv"
        path.write_bytes(b"RGV1" + struct.pack("<III", 0, 2, 2))
        with pytest.raises(StorageFormatError):
            read_video(path)


class TestFloatStack:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(1)
        frames = rng.random((2, 3, 3)).astype(np.float32).astype(np.float64)
        path = tmp_path / "c.rgf"
        write_float_stack(path, frames)
        np.testing.assert_array_equal(read_float_stack(path), frames)

    def test_golden_bytes(self, tmp_path):
        frames = np.array([[[1.5]]])
        path = tmp_path / "c.rgf"
        write_float_stack(path, frames)
        want = b"RGF1" + struct.pack("<III", 1, 1, 1) + struct.pack("<f", 1.5)
        assert path.read_bytes() == want


class TestMaskFormats:
    def test_bits_round_trip_and_size(self, tmp_path):
        sub = sample_bernoulli_mask((4, 4, 16), 0.4, seed=2)
        path = tmp_path / "m.bmk"
        write_mask_bits(path, sub.bits)
        assert path.stat().st_size == 16 + 256
        np.testing.assert_array_equal(read_mask_bits(path), sub.bits)

    def test_bits_golden_bytes(self, tmp_path):
        bits = np.array([[[1, 0]], [[0, 1]]], dtype=np.uint8)  # (t=2, h=1, w=2)
        path = tmp_path / "m.bmk"
        write_mask_bits(path, bits)
        want = b"BMK1" + struct.pack("<III", 2, 1, 2) + bytes([1, 0, 0, 1])
        assert path.read_bytes() == want

    def test_non_binary_payload_rejected(self, tmp_path):
        path = tmp_path / "m.bmk"
        path.write_bytes(b"BMK1" + struct.pack("<III", 1, 1, 1) + bytes([7]))
        with pytest.raises(StorageFormatError):
            read_mask_bits(path)

    def test_shadow_round_trip(self, tmp_path):
        sub = sample_bernoulli_mask((3, 2, 4), 0.5, seed=3)
        path = tmp_path / "m.bmr"
        write_mask_shadow(path, sub.shadow)
        np.testing.assert_array_equal(read_mask_shadow(path), sub.shadow)


def small_model(seed=4, dims=(2, 2, 4), hidden=8, k=2):
    enc = BinaryMaskEncoder(sample_bernoulli_mask(dims, 0.5, seed))
    dec = MlpDecoder(init_decoder(enc.m_p, enc.n_p, k, seed + 1, hidden_units=hidden))
    return enc, dec


class TestModelFormat:
    def test_round_trip_bitwise(self, tmp_path):
        enc, dec = small_model()
        p1 = tmp_path / "a.mdl"
        p2 = tmp_path / "b.mdl"
        write_model(p1, enc, dec)
        enc2, dec2, state = read_model(p1)
        assert state is None
        write_model(p2, enc2, dec2)
        assert p1.read_bytes() == p2.read_bytes()
        np.testing.assert_array_equal(enc.shadow, enc2.shadow)
        np.testing.assert_array_equal(enc.bits, enc2.bits)
        for a, b in zip(dec.params.weights, dec2.params.weights):
            np.testing.assert_array_equal(a, b)

    def test_round_trip_with_momentum(self, tmp_path):
        enc, dec = small_model(seed=5)
        state = SgdState.for_model(enc, dec)
        state.enc_vel += 0.25
        state.dec_w_vel[0] += 1.0
        path = tmp_path / "m.mdl"
        write_model(path, enc, dec, state)
        _, _, state2 = read_model(path)
        np.testing.assert_array_equal(state2.enc_vel, state.enc_vel)
        np.testing.assert_array_equal(state2.dec_w_vel[0], state.dec_w_vel[0])

    def test_shared_vector_order_golden(self, tmp_path):
        # 1x1 sub-block with t=2: shadow written as one (t-long) vector
        sub = sample_bernoulli_mask((1, 1, 2), 0.5, seed=6)
        enc = BinaryMaskEncoder(sub)
        dec = MlpDecoder(init_decoder(4, 8, 1, seed=7, hidden_units=3))
        path = tmp_path / "m.mdl"
        write_model(path, enc, dec)
        raw = path.read_bytes()
        assert raw[:4] == b"MDL1"
        assert struct.unpack("<IIIII", raw[4:24]) == (1, 4, 8, 1, 2)
        got = np.frombuffer(raw[24:40], dtype="<f8")
        np.testing.assert_array_equal(got, enc.shadow[:, 0, 0])
        rows, cols = struct.unpack("<II", raw[40:48])
        assert (rows, cols) == (3, 4)

    def test_version_mismatch(self, tmp_path):
        enc, dec = small_model()
        path = tmp_path / "m.mdl"
        write_model(path, enc, dec)
        raw = bytearray(path.read_bytes())
        raw[4:8] = struct.pack("<I", 9)
        path.write_bytes(bytes(raw))
        with pytest.raises(StorageFormatError):
            read_model(path)

    def test_truncated(self, tmp_path):
        enc, dec = small_model()
        path = tmp_path / "m.mdl"
        write_model(path, enc, dec)
        path.write_bytes(path.read_bytes()[:-9])
        with pytest.raises(StorageFormatError):
            read_model(path)

    def test_non_square_sub_dims(self, tmp_path):
        enc, dec = small_model(dims=(4, 1, 3), hidden=4)  # M_p = 16, sub 4x1
        path = tmp_path / "m.mdl"
        write_model(path, enc, dec)
        enc2, _, _ = read_model(path, sub_dims=(4, 1))
        np.testing.assert_array_equal(enc2.shadow, enc.shadow)

    def test_resume_equals_uninterrupted(self, tmp_path):
        """Checkpoint at the halfway epoch, resume, and land bitwise equal."""
        rng = np.random.default_rng(8)

        def fresh():
            enc, dec = small_model(seed=9, hidden=16, k=1)
            return enc, dec

        X = rng.random((24, fresh()[0].n_p))
        cfg6 = TrainConfig(dec_lr=1e-2, epochs=6, batch=8, seed=11,
                           deterministic=True)
        enc_a, dec_a = fresh()
        state_a = SgdState.for_model(enc_a, dec_a)
        _, _, logs_a = train(X, X[:8], cfg6, enc_a, dec_a, sgd_state=state_a)

        cfg3 = TrainConfig(dec_lr=1e-2, epochs=3, batch=8, seed=11,
                           deterministic=True)
        enc_b, dec_b = fresh()
        state_b = SgdState.for_model(enc_b, dec_b)
        _, _, logs_b1 = train(X, X[:8], cfg3, enc_b, dec_b, sgd_state=state_b)
        mid = tmp_path / "mid.mdl"
        write_model(mid, enc_b, dec_b, state_b)
        enc_c, dec_c, state_c = read_model(mid)
        _, _, logs_b2 = train(X, X[:8], cfg3, enc_c, dec_c, sgd_state=state_c,
                              start_epoch=3)

        pa, pb = tmp_path / "a.mdl", tmp_path / "b.mdl"
        write_model(pa, enc_a, dec_a, state_a)
        write_model(pb, enc_c, dec_c, state_c)
        assert pa.read_bytes() == pb.read_bytes()
        assert [format_log_row(l) for l in logs_a] == [
            format_log_row(l) for l in logs_b1 + logs_b2
        ]


class TestCsvLog:
    def test_header_and_round_trip(self, tmp_path):
        logs = [
            EpochLog(0, 1.5, 2.5, 0.01, 0.001, 39.0625, 12),
            EpochLog(1, 1.25, float("nan"), 0.01, 0.001, 40.0, 0),
        ]
        path = tmp_path / "log.csv"
        write_log(path, logs)
        text = path.read_text().splitlines()
        assert text[0] == LOG_HEADER
        back = read_log(path)
        assert back[0] == logs[0]
        assert back[1].epoch == 1 and np.isnan(back[1].val_mse)

    def test_bad_header(self, tmp_path):
        path = tmp_path / "log.csv"
        path.write_text("epoch,mse\n0,1\n")
        with pytest.raises(StorageFormatError):
            read_log(path)


class TestImages:
    def test_pgm_round_trip(self, tmp_path):
        img = np.arange(12, dtype=np.uint8).reshape(3, 4) * 20
        path = tmp_path / "i.pgm"
        write_pgm(path, img)
        np.testing.assert_array_equal(read_pgm(path), img)

    def test_pgm_golden_header(self, tmp_path):
        path = tmp_path / "i.pgm"
        write_pgm(path, np.zeros((2, 3), dtype=np.uint8))
        assert path.read_bytes() == b"P5\n3 2\n255\n" + b"\x00" * 6

    def test_svg_written(self, tmp_path):
        path = tmp_path / "p.svg"
        x = np.arange(10.0)
        write_svg_lines(path, {"loss": (x, x**2)}, title="t", x_label="x",
                        y_label="y")
        text = path.read_text()
        assert text.startswith("<svg") and "polyline" in text

    def test_svg_stack_panels(self, tmp_path):
        path = tmp_path / "p.svg"
        x = np.arange(5.0)
        write_svg_stack(path, [({"a": (x, x)}, "p1", "x", "y"),
                               ({"b": (x, -x)}, "p2", "x", "y")])
        assert path.read_text().count("polyline") == 2
