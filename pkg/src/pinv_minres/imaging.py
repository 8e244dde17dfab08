"""Image I/O (binary PGM/PPM), noise injection and quality metrics for the
deblurring experiment.

Planes hold float64 samples on the [0, 1] signal range; values are clamped
and quantized to 8 bits only when written.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_C1 = 0.01**2
SSIM_C2 = 0.03**2


@dataclass
class ImagePlane:
    """Square image, 1 or 3 channels, samples nominally in [0, 1]."""

    samples: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=np.float64)
        if arr.ndim == 2:
            pass
        elif arr.ndim == 3 and arr.shape[2] in (1, 3):
            if arr.shape[2] == 1:
                arr = arr[:, :, 0]
        else:
            raise ValueError(f"unsupported image shape {arr.shape}")
        if arr.shape[0] != arr.shape[1]:
            raise ValueError(f"image must be square, got {arr.shape[:2]}")
        self.samples = arr

    @property
    def size(self) -> int:
        return self.samples.shape[0]

    @property
    def channels(self) -> int:
        return 1 if self.samples.ndim == 2 else self.samples.shape[2]

    def channel(self, k: int) -> np.ndarray:
        if self.samples.ndim == 2:
            if k != 0:
                raise IndexError("grayscale image has a single channel")
            return self.samples
        return self.samples[:, :, k]


class ImageFormatError(ValueError):
    """Malformed or unsupported PGM/PPM content."""


def _parse_header(data: bytes, path: str):
    """Parse 'P5'/'P6' + width height maxval; returns (magic, w, h, maxval,
    offset of first pixel byte).  Errors report the byte offset."""
    pos = 0

    def skip_space_and_comments(pos):
        while pos < len(data):
            ch = data[pos:pos + 1]
            if ch.isspace():
                pos += 1
            elif ch == b"#":
                while pos < len(data) and data[pos:pos + 1] != b"\n":
                    pos += 1
            else:
                break
        return pos

    def read_token(pos):
        pos = skip_space_and_comments(pos)
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ImageFormatError(
                f"{path}: truncated header at byte {start}")
        return data[start:pos], pos

    magic, pos = read_token(pos)
    if magic not in (b"P5", b"P6"):
        raise ImageFormatError(
            f"{path}: unsupported magic {magic!r} at byte 0 "
            "(binary PGM 'P5' or PPM 'P6' required)")
    fields = []
    for _ in range(3):
        tok, pos = read_token(pos)
        if not tok.isdigit():
            raise ImageFormatError(
                f"{path}: non-numeric header field {tok!r} at byte "
                f"{pos - len(tok)}")
        fields.append(int(tok))
    if pos >= len(data) or not data[pos:pos + 1].isspace():
        raise ImageFormatError(f"{path}: missing whitespace after header "
                               f"at byte {pos}")
    pos += 1
    w, h, maxval = fields
    if maxval != 255:
        raise ImageFormatError(
            f"{path}: unsupported maxval {maxval} at byte {pos} "
            "(only 255 is supported)")
    return magic, w, h, maxval, pos


def read_image(path) -> ImagePlane:
    """Read a binary PGM (P5) or PPM (P6) file with maxval 255."""
    path = str(path)
    with open(path, "rb") as fh:
        data = fh.read()
    magic, w, h, _, pos = _parse_header(data, path)
    if w != h:
        raise ImageFormatError(f"{path}: image must be square, got {w}x{h} "
                               f"(header ends at byte {pos})")
    channels = 1 if magic == b"P5" else 3
    need = w * h * channels
    raw = data[pos:pos + need]
    if len(raw) < need:
        raise ImageFormatError(
            f"{path}: truncated pixel data, missing {need - len(raw)} bytes")
    arr = np.frombuffer(raw, dtype=np.uint8).astype(np.float64) / 255.0
    if channels == 1:
        arr = arr.reshape(h, w)
    else:
        arr = arr.reshape(h, w, 3)
    return ImagePlane(arr)


def write_image(plane: ImagePlane, path) -> None:
    """Write as binary PGM/PPM with maxval 255, clamping samples to [0, 1]."""
    path = str(path)
    arr = np.clip(plane.samples, 0.0, 1.0)
    quant = np.rint(arr * 255.0).astype(np.uint8)
    n = plane.size
    magic = b"P5" if plane.channels == 1 else b"P6"
    with open(path, "wb") as fh:
        fh.write(magic + b"\n" + f"{n} {n}\n255\n".encode())
        fh.write(quant.tobytes())


def psnr(x: ImagePlane, y: ImagePlane) -> float:
    """Peak signal-to-noise ratio in dB on the [0, 1] range; identical
    images return math.inf."""
    if x.samples.shape != y.samples.shape:
        raise ValueError("psnr needs images of identical shape")
    mse = float(np.mean((x.samples - y.samples) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)


def _gaussian_window() -> np.ndarray:
    half = (SSIM_WINDOW - 1) // 2
    g = np.exp(-np.arange(-half, half + 1) ** 2 / (2.0 * SSIM_SIGMA**2))
    return g / g.sum()


def _filter_valid(img: np.ndarray, g: np.ndarray) -> np.ndarray:
    # separable symmetric window, 'valid' boundary as in the reference SSIM
    rows = np.apply_along_axis(np.convolve, 1, img, g, "valid")
    return np.apply_along_axis(np.convolve, 0, rows, g, "valid")


def _ssim_channel(x: np.ndarray, y: np.ndarray) -> float:
    g = _gaussian_window()
    mu_x = _filter_valid(x, g)
    mu_y = _filter_valid(y, g)
    sxx = _filter_valid(x * x, g) - mu_x * mu_x
    syy = _filter_valid(y * y, g) - mu_y * mu_y
    sxy = _filter_valid(x * y, g) - mu_x * mu_y
    num = (2.0 * mu_x * mu_y + SSIM_C1) * (2.0 * sxy + SSIM_C2)
    den = (mu_x * mu_x + mu_y * mu_y + SSIM_C1) * (sxx + syy + SSIM_C2)
    return float(np.mean(num / den))


def ssim(x: ImagePlane, y: ImagePlane) -> float:
    """Mean local SSIM with the standard 11x11 Gaussian window (sigma 1.5)
    and constants C1 = 0.01^2, C2 = 0.03^2 on the [0, 1] range."""
    if x.samples.shape != y.samples.shape:
        raise ValueError("ssim needs images of identical shape")
    if x.size < SSIM_WINDOW:
        raise ValueError(f"ssim needs image size >= {SSIM_WINDOW}")
    if x.channels == 1:
        return _ssim_channel(x.samples, y.samples)
    return float(np.mean([_ssim_channel(x.channel(k), y.channel(k))
                          for k in range(x.channels)]))


def add_noise(plane: ImagePlane, sigma: float, seed: int) -> ImagePlane:
    """Add a seeded i.i.d. Gaussian field scaled by sigma (no clamping;
    values are only clamped when an image is written)."""
    if sigma < 0:
        raise ValueError("noise scale must be nonnegative")
    if sigma == 0.0:
        return ImagePlane(plane.samples.copy())
    rng = np.random.Generator(np.random.Philox(seed))
    field = rng.standard_normal(plane.samples.shape)
    return ImagePlane(plane.samples + sigma * field)


def phantom(n: int) -> ImagePlane:
    """Deterministic synthetic test image: smooth gradient, a bright disk,
    a dark square and a striped band (enough edges to make blur visible)."""
    yy, xx = np.mgrid[0:n, 0:n] / max(n - 1, 1)
    img = 0.25 + 0.45 * xx * yy
    img[(xx - 0.35) ** 2 + (yy - 0.4) ** 2 < 0.04] = 0.95
    img[(np.abs(xx - 0.72) < 0.12) & (np.abs(yy - 0.62) < 0.12)] = 0.05
    stripes = 0.5 + 0.45 * np.sin(2.0 * np.pi * 8.0 * (xx + yy))
    band = yy > 0.8
    img[band] = stripes[band]
    return ImagePlane(np.clip(img, 0.0, 1.0))
