"""Image loading, HSI conversion and affine template extraction.

Images are kept as float64 arrays in [0, 1], shape (height, width, 3).  All
functions here are pure; images are treated as immutable once built.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import ImageLoadError, InvalidStateError, ParameterError
from .motion import AffineState


@dataclass(frozen=True)
class ImageRGB:
    """RGB raster with channels normalized to [0, 1]."""

    data: np.ndarray  # (h, w, 3) float64

    def __post_init__(self):
        d = self.data
        if d.ndim != 3 or d.shape[2] != 3 or d.shape[0] < 1 or d.shape[1] < 1:
            raise ParameterError(f"expected (h, w, 3) image data, got {d.shape}")
        if d.min() < 0.0 or d.max() > 1.0:
            raise ParameterError("RGB channels must lie in [0, 1]")

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class ImageHSI:
    """HSI raster; hue is the angle normalized to [0, 1)."""

    data: np.ndarray  # (h, w, 3) float64

    def __post_init__(self):
        d = self.data
        if d.ndim != 3 or d.shape[2] != 3:
            raise ParameterError(f"expected (h, w, 3) image data, got {d.shape}")
        if d[:, :, 0].min() < 0.0 or d[:, :, 0].max() >= 1.0:
            raise ParameterError("hue must lie in [0, 1)")
        if d[:, :, 1:].min() < 0.0 or d[:, :, 1:].max() > 1.0:
            raise ParameterError("saturation/intensity must lie in [0, 1]")

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class Patch:
    """Fixed-size template sampled under an affine state, in RGB and HSI."""

    rgb: ImageRGB
    hsi: ImageHSI
    source_state: AffineState

    def __post_init__(self):
        if self.rgb.data.shape != self.hsi.data.shape:
            raise ParameterError("rgb and hsi patches must be pixel aligned")

    @property
    def height(self) -> int:
        return self.rgb.height

    @property
    def width(self) -> int:
        return self.rgb.width


def decode_image(raw: bytes, source: str = "<bytes>") -> ImageRGB:
    """Decode PNG/JPEG bytes into a normalized ImageRGB."""
    try:
        with Image.open(io.BytesIO(raw)) as img:
            rgb = img.convert("RGB")
            arr = np.asarray(rgb, dtype=np.float64) / 255.0
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        raise ImageLoadError(f"cannot decode image {source}: {exc}") from exc
    return ImageRGB(arr)


def load_image(path) -> ImageRGB:
    """Load an 8-bit raster file and normalize channels into [0, 1]."""
    p = Path(path)
    try:
        raw = p.read_bytes()
    except OSError as exc:
        raise ImageLoadError(f"cannot read image file {p}: {exc}") from exc
    return decode_image(raw, source=str(p))


def rgb_to_hsi(img: ImageRGB) -> ImageHSI:
    """Convert RGB to HSI with the arccos hue form.

    Conventions for degenerate pixels: intensity 0 gives saturation 0, and
    saturation 0 gives hue 0, so histograms stay well defined on black or
    gray regions.
    """
    return ImageHSI(_rgb_to_hsi_array(img.data))


def _rgb_to_hsi_array(rgb: np.ndarray) -> np.ndarray:
    r = rgb[..., 0]
    g = rgb[..., 1]
    b = rgb[..., 2]
    i = (r + g + b) / 3.0
    mn = np.minimum(np.minimum(r, g), b)
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(i > 0.0, 1.0 - mn / np.where(i > 0.0, i, 1.0), 0.0)

    num = 0.5 * ((r - g) + (r - b))
    den = np.sqrt((r - g) ** 2 + (r - b) * (g - b))
    chromatic = (den > 0.0) & (s > 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        cosarg = np.clip(num / np.where(chromatic, den, 1.0), -1.0, 1.0)
    theta = np.arccos(cosarg)
    h = np.where(b <= g, theta, 2.0 * np.pi - theta)
    h = np.where(chromatic, h / (2.0 * np.pi), 0.0)
    h = np.where(h >= 1.0, h - 1.0, h)

    out = np.empty_like(rgb)
    out[..., 0] = h
    out[..., 1] = np.clip(s, 0.0, 1.0)
    out[..., 2] = np.clip(i, 0.0, 1.0)
    return out


def _affine_matrix(state: AffineState) -> np.ndarray:
    """2x2 linear part: rotation * shear(skew) * diag(scale*sqrt(aspect), scale/sqrt(aspect))."""
    sx = state.scale * np.sqrt(state.aspect)
    sy = state.scale / np.sqrt(state.aspect)
    c, s = np.cos(state.theta), np.sin(state.theta)
    shear = np.array([[1.0, state.skew], [0.0, 1.0]])
    rot = np.array([[c, -s], [s, c]])
    return rot @ shear @ np.diag([sx, sy])


def extract_template(frame: ImageRGB, state: AffineState, out_w: int, out_h: int) -> Patch:
    """Sample the frame under an affine state into an out_w x out_h patch.

    Bilinear interpolation; samples falling outside the frame clamp to the
    nearest border pixel.  The HSI patch is computed from the warped RGB.
    """
    if out_w < 1 or out_h < 1:
        raise ParameterError(f"output size must be >= 1, got {out_w}x{out_h}")
    if not np.all(np.isfinite(state.as_array())):
        raise InvalidStateError(f"non-finite state: {state}")

    a = _affine_matrix(state)
    du = np.arange(out_w, dtype=np.float64) - (out_w - 1) / 2.0
    dv = np.arange(out_h, dtype=np.float64) - (out_h - 1) / 2.0
    dvv, duu = np.meshgrid(dv, du, indexing="ij")
    fx = state.x + a[0, 0] * duu + a[0, 1] * dvv
    fy = state.y + a[1, 0] * duu + a[1, 1] * dvv

    warped = _bilinear_sample(frame.data, fx, fy)
    rgb = ImageRGB(warped)
    return Patch(rgb=rgb, hsi=rgb_to_hsi(rgb), source_state=state)


def _bilinear_sample(img: np.ndarray, fx: np.ndarray, fy: np.ndarray) -> np.ndarray:
    h, w = img.shape[:2]
    fx = np.clip(fx, 0.0, w - 1.0)
    fy = np.clip(fy, 0.0, h - 1.0)
    x0 = np.floor(fx).astype(np.intp)
    y0 = np.floor(fy).astype(np.intp)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    wx = (fx - x0)[..., None]
    wy = (fy - y0)[..., None]
    top = img[y0, x0] * (1.0 - wx) + img[y0, x1] * wx
    bot = img[y1, x0] * (1.0 - wx) + img[y1, x1] * wx
    out = top * (1.0 - wy) + bot * wy
    # guard against float round-off nudging values a hair outside [0, 1]
    return np.clip(out, 0.0, 1.0)
