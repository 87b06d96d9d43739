"""Bit-exact file formats for videos, masks, checkpoints, logs and plots.

All multi-byte integers are little-endian; every binary format starts with
a 4-byte ASCII magic:

* ``RGV1`` 8-bit grayscale video: magic, u32 W, u32 H, u32 T, then T*H*W
  u8 pixels (frame-major, row-major); values map to [0, 1] by /255.
* ``RGF1`` float frame stack (coded measurements): same header, f32
  payload, no scaling.
* ``BMK1`` mask bits / ``BMR1`` shadow weights: magic, u32 w_s, u32 h_s,
  u32 t, then u8 bits / f64 shadows in spatial-then-temporal order.
* ``MDL1`` model checkpoint: magic, u32 version=1, u32 M_p, u32 N_p,
  u32 K, u32 t, encoder shadow (f64, shared-vector order), then per
  decoder layer u32 rows, u32 cols, f64 row-major weights, f64 biases;
  a trailing u8 flag in {0, 1} optionally followed by momentum buffers in
  the same order enables exact training resume.

Checkpoints hold f64 (training precision); RGF1 alone stores f32.  The CSV
log schema and small SVG/PGM writers live here as well; SVG plots are
presentation-only, not bit-exact.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .decoder import DecoderParams, MlpDecoder
from .encoder import BinaryMaskEncoder
from .sensing import MaskSubBlock
from .trainer import EpochLog, SgdState

LOG_HEADER = "epoch,train_mse,val_mse,enc_lr,dec_lr,nnz_pct,flips"


class StorageFormatError(ValueError):
    """Malformed, truncated or inconsistent file content."""


def _read_exact(fh, n: int, what: str) -> bytes:
    buf = fh.read(n)
    if len(buf) != n:
        raise StorageFormatError(f"truncated file: expected {n} bytes of {what}")
    return buf


def _read_header(fh, magic: bytes) -> tuple[int, int, int]:
    got = _read_exact(fh, 4, "magic")
    if got != magic:
        raise StorageFormatError(f"bad magic {got!r}, expected {magic!r}")
    a, b, c = struct.unpack("<III", _read_exact(fh, 12, "header"))
    if a == 0 or b == 0 or c == 0:
        raise StorageFormatError("zero dimension in header")
    return a, b, c


# --- videos ---------------------------------------------------------------

def write_video(path, volume: np.ndarray) -> None:
    """Write a [0, 1] float volume (T, H, W) as RGV1 (quantized to u8)."""
    volume = np.asarray(volume, dtype=np.float64)
    T, H, W = volume.shape
    data = np.clip(np.rint(volume * 255.0), 0, 255).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(b"RGV1" + struct.pack("<III", W, H, T))
        fh.write(data.tobytes())


def read_video(path) -> np.ndarray:
    """Read an RGV1 file into a (T, H, W) float64 volume in [0, 1]."""
    with open(path, "rb") as fh:
        W, H, T = _read_header(fh, b"RGV1")
        raw = _read_exact(fh, W * H * T, "pixels")
    return np.frombuffer(raw, dtype=np.uint8).reshape(T, H, W) / 255.0


def write_float_stack(path, frames: np.ndarray) -> None:
    """Write a (T, H, W) float stack as RGF1 (f32, unscaled)."""
    frames = np.asarray(frames, dtype=np.float32)
    T, H, W = frames.shape
    with open(path, "wb") as fh:
        fh.write(b"RGF1" + struct.pack("<III", W, H, T))
        fh.write(frames.astype("<f4").tobytes())


def read_float_stack(path) -> np.ndarray:
    with open(path, "rb") as fh:
        W, H, T = _read_header(fh, b"RGF1")
        raw = _read_exact(fh, 4 * W * H * T, "floats")
    return np.frombuffer(raw, dtype="<f4").reshape(T, H, W).astype(np.float64)


# --- masks ----------------------------------------------------------------

def write_mask_bits(path, bits: np.ndarray) -> None:
    """Write (t, h_s, w_s) bits as BMK1 (u8, spatial-then-temporal order)."""
    bits = np.asarray(bits, dtype=np.uint8)
    t, h_s, w_s = bits.shape
    with open(path, "wb") as fh:
        fh.write(b"BMK1" + struct.pack("<III", w_s, h_s, t))
        fh.write(bits.tobytes())


def read_mask_bits(path) -> np.ndarray:
    with open(path, "rb") as fh:
        w_s, h_s, t = _read_header(fh, b"BMK1")
        raw = _read_exact(fh, w_s * h_s * t, "bits")
    bits = np.frombuffer(raw, dtype=np.uint8).reshape(t, h_s, w_s)
    if np.any(bits > 1):
        raise StorageFormatError("mask bits must be 0 or 1")
    return bits.copy()


def write_mask_shadow(path, shadow: np.ndarray) -> None:
    """Write (t, h_s, w_s) shadow weights as BMR1 (f64)."""
    shadow = np.asarray(shadow, dtype=np.float64)
    t, h_s, w_s = shadow.shape
    with open(path, "wb") as fh:
        fh.write(b"BMR1" + struct.pack("<III", w_s, h_s, t))
        fh.write(shadow.astype("<f8").tobytes())


def read_mask_shadow(path) -> np.ndarray:
    with open(path, "rb") as fh:
        w_s, h_s, t = _read_header(fh, b"BMR1")
        raw = _read_exact(fh, 8 * w_s * h_s * t, "shadows")
    return np.frombuffer(raw, dtype="<f8").reshape(t, h_s, w_s).copy()


# --- model checkpoints ----------------------------------------------------

def write_model(
    path,
    encoder: BinaryMaskEncoder,
    decoder: MlpDecoder,
    sgd_state: SgdState | None = None,
) -> None:
    """Write an MDL1 checkpoint; include momentum buffers when given."""
    t = encoder.t
    with open(path, "wb") as fh:
        fh.write(b"MDL1")
        fh.write(struct.pack("<IIIII", 1, encoder.m_p, decoder.params.n_p,
                             decoder.params.k, t))
        # shared-vector order: vector per spatial position, t values each
        fh.write(encoder.shadow.transpose(1, 2, 0).astype("<f8").tobytes())
        for W, c in zip(decoder.params.weights, decoder.params.biases):
            fh.write(struct.pack("<II", W.shape[0], W.shape[1]))
            fh.write(W.astype("<f8").tobytes())
            fh.write(c.astype("<f8").tobytes())
        if sgd_state is None:
            fh.write(struct.pack("<B", 0))
        else:
            fh.write(struct.pack("<B", 1))
            fh.write(sgd_state.enc_vel.transpose(1, 2, 0).astype("<f8").tobytes())
            for vw, vb in zip(sgd_state.dec_w_vel, sgd_state.dec_b_vel):
                fh.write(vw.astype("<f8").tobytes())
                fh.write(vb.astype("<f8").tobytes())


def read_model(
    path, sub_dims: tuple[int, int] | None = None
) -> tuple[BinaryMaskEncoder, MlpDecoder, SgdState | None]:
    """Read an MDL1 checkpoint back into live model objects.

    ``sub_dims`` = (w_s, h_s) disambiguates non-square sub-blocks; the
    header stores only M_p, so by default a square sub-block is assumed.
    """
    with open(path, "rb") as fh:
        if _read_exact(fh, 4, "magic") != b"MDL1":
            raise StorageFormatError("bad magic, expected MDL1")
        version, m_p, n_p, k, t = struct.unpack("<IIIII", _read_exact(fh, 20, "header"))
        if version != 1:
            raise StorageFormatError(f"unsupported checkpoint version {version}")
        if sub_dims is None:
            side = int(round(np.sqrt(m_p / 4)))
            if 4 * side * side != m_p:
                raise StorageFormatError(
                    "non-square sub-block: pass sub_dims=(w_s, h_s)"
                )
            w_s = h_s = side
        else:
            w_s, h_s = sub_dims
            if 4 * w_s * h_s != m_p:
                raise StorageFormatError("sub_dims inconsistent with M_p")

        def read_shadow_block():
            raw = _read_exact(fh, 8 * h_s * w_s * t, "encoder shadow")
            return (
                np.frombuffer(raw, dtype="<f8")
                .reshape(h_s, w_s, t)
                .transpose(2, 0, 1)
                .copy()
            )

        shadow = read_shadow_block()
        if np.any(np.abs(shadow) > 1.0):
            raise StorageFormatError("shadow weights outside [-1, 1]")
        weights, biases = [], []
        for _ in range(k + 1):
            rows, cols = struct.unpack("<II", _read_exact(fh, 8, "layer header"))
            wraw = _read_exact(fh, 8 * rows * cols, "layer weights")
            braw = _read_exact(fh, 8 * rows, "layer biases")
            weights.append(np.frombuffer(wraw, dtype="<f8").reshape(rows, cols).copy())
            biases.append(np.frombuffer(braw, dtype="<f8").copy())
        if weights[0].shape[1] != m_p or weights[-1].shape[0] != n_p:
            raise StorageFormatError("decoder layer shapes inconsistent with header")

        flag = struct.unpack("<B", _read_exact(fh, 1, "momentum flag"))[0]
        if flag not in (0, 1):
            raise StorageFormatError(f"momentum flag must be 0 or 1, got {flag}")
        state = None
        encoder = BinaryMaskEncoder(
            MaskSubBlock(bits=(shadow >= 0).astype(np.uint8), shadow=shadow)
        )
        decoder = MlpDecoder(DecoderParams(weights, biases))
        if flag:
            enc_vel = (
                np.frombuffer(_read_exact(fh, 8 * h_s * w_s * t, "encoder velocity"),
                              dtype="<f8")
                .reshape(h_s, w_s, t)
                .transpose(2, 0, 1)
                .copy()
            )
            dec_w_vel, dec_b_vel = [], []
            for W in weights:
                vw = _read_exact(fh, 8 * W.size, "weight velocity")
                vb = _read_exact(fh, 8 * W.shape[0], "bias velocity")
                dec_w_vel.append(np.frombuffer(vw, dtype="<f8").reshape(W.shape).copy())
                dec_b_vel.append(np.frombuffer(vb, dtype="<f8").copy())
            state = SgdState(enc_vel, dec_w_vel, dec_b_vel)
    return encoder, decoder, state


# --- CSV logs ---------------------------------------------------------------

def format_log_row(log: EpochLog) -> str:
    return (
        f"{log.epoch},{log.train_mse!r},{log.val_mse!r},{log.enc_lr!r},"
        f"{log.dec_lr!r},{log.nnz_pct!r},{log.flips}"
    )


def write_log(path, logs: list[EpochLog]) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(LOG_HEADER + "\n")
        for log in logs:
            fh.write(format_log_row(log) + "\n")


def read_log(path) -> list[EpochLog]:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != LOG_HEADER:
        raise StorageFormatError("bad CSV log header")
    out = []
    for line in lines[1:]:
        e, tm, vm, el, dl, nz, fl = line.split(",")
        out.append(EpochLog(int(e), float(tm), float(vm), float(el),
                            float(dl), float(nz), int(fl)))
    return out


# --- images and plots -------------------------------------------------------

def write_pgm(path, image: np.ndarray) -> None:
    """Write a 2-D u8 array as binary PGM (P5, maxval 255)."""
    image = np.asarray(image, dtype=np.uint8)
    if image.ndim != 2:
        raise ValueError("PGM image must be 2-D")
    h, w = image.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(image.tobytes())


def read_pgm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    parts = data.split(b"\n", 3)
    if len(parts) < 4 or parts[0] != b"P5" or parts[2] != b"255":
        raise StorageFormatError("not a P5 maxval-255 PGM file")
    w, h = (int(v) for v in parts[1].split())
    raw = parts[3]
    if len(raw) != w * h:
        raise StorageFormatError("truncated PGM payload")
    return np.frombuffer(raw, dtype=np.uint8).reshape(h, w).copy()


def _panel_elements(
    series: dict[str, tuple[np.ndarray, np.ndarray]],
    title: str,
    x_label: str,
    y_label: str,
    size: tuple[int, int],
    dy: float,
) -> list[str]:
    """SVG elements for one line-plot panel shifted down by ``dy``."""
    width, height = size
    margin = 56
    palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]
    xs = np.concatenate([np.asarray(x, dtype=float) for x, _ in series.values()])
    ys = np.concatenate([np.asarray(y, dtype=float) for _, y in series.values()])
    ys = ys[np.isfinite(ys)]
    if xs.size == 0 or ys.size == 0:
        raise ValueError("nothing to plot")
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = float(ys.min()), float(ys.max())
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0

    def sx(x):
        return margin + (x - x0) / (x1 - x0) * (width - 2 * margin)

    def sy(y):
        return dy + height - margin - (y - y0) / (y1 - y0) * (height - 2 * margin)

    parts = [
        f'<rect x="{margin}" y="{dy + margin}" width="{width - 2 * margin}" '
        f'height="{height - 2 * margin}" fill="none" stroke="black"/>'
    ]
    if title:
        parts.append(
            f'<text x="{width / 2:.1f}" y="{dy + margin / 2:.1f}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="14">{title}</text>'
        )
    if x_label:
        parts.append(
            f'<text x="{width / 2:.1f}" y="{dy + height - 12}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="12">{x_label}</text>'
        )
    if y_label:
        parts.append(
            f'<text x="14" y="{dy + height / 2:.1f}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="12" '
            f'transform="rotate(-90 14 {dy + height / 2:.1f})">{y_label}</text>'
        )
    for tick in np.linspace(x0, x1, 5):
        parts.append(
            f'<text x="{sx(tick):.1f}" y="{dy + height - margin + 16}" '
            f'text-anchor="middle" font-family="sans-serif" font-size="10">'
            f"{tick:.4g}</text>"
        )
    for tick in np.linspace(y0, y1, 5):
        parts.append(
            f'<text x="{margin - 6}" y="{sy(tick):.1f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="10">{tick:.4g}</text>'
        )
    for i, (name, (x, y)) in enumerate(series.items()):
        color = palette[i % len(palette)]
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        ok = np.isfinite(y)
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x[ok], y[ok]))
        parts.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>'
        )
        ly = dy + margin + 16 + 16 * i
        parts.append(
            f'<line x1="{width - margin - 90}" y1="{ly - 4}" '
            f'x2="{width - margin - 70}" y2="{ly - 4}" stroke="{color}" stroke-width="2"/>'
        )
        parts.append(
            f'<text x="{width - margin - 64}" y="{ly}" font-family="sans-serif" '
            f'font-size="11">{name}</text>'
        )
    return parts


def write_svg_lines(
    path,
    series: dict[str, tuple[np.ndarray, np.ndarray]],
    title: str = "",
    x_label: str = "",
    y_label: str = "",
    size: tuple[int, int] = (640, 400),
) -> None:
    """Minimal SVG line plot: one polyline per named series.

    Presentation-only; linear axes, a plain box frame and a small legend.
    ``series`` maps name -> (x, y) arrays.
    """
    write_svg_stack(path, [(series, title, x_label, y_label)], size)


def write_svg_stack(
    path,
    panels: list[tuple[dict, str, str, str]],
    size: tuple[int, int] = (640, 400),
) -> None:
    """Several line-plot panels stacked vertically in one SVG document.

    Each panel is (series, title, x_label, y_label).
    """
    width, height = size
    total = height * len(panels)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{total}">',
        f'<rect width="{width}" height="{total}" fill="white"/>',
    ]
    for i, (series, title, x_label, y_label) in enumerate(panels):
        parts.extend(_panel_elements(series, title, x_label, y_label, size, i * height))
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n")
