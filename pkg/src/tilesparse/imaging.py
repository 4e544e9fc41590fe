"""Image ingestion, bilinear resizing, per-image standardization and tiling.

Patches are vectorized row-major within the tile, and tiles are enumerated
row-major over the tile grid.  Every other module relies on that ordering.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import CorruptHeaderError, DimensionError, ImageReadError, UnsupportedFormatError

_PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


@dataclass(frozen=True)
class GrayImage:
    """Single-channel image; ``pixels`` has shape (height, width)."""

    pixels: np.ndarray
    max_value: float | None = None
    degenerate: bool = False

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.float64)
        if px.ndim != 2 or px.shape[0] == 0 or px.shape[1] == 0:
            raise DimensionError(f"image must be a non-empty 2-D array, got shape {px.shape}")
        if not np.all(np.isfinite(px)):
            raise ValueError("image contains non-finite intensities")
        object.__setattr__(self, "pixels", px)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


@dataclass(frozen=True)
class PatchMatrix:
    """One vectorized p x p tile per column of ``data``."""

    data: np.ndarray
    patch_size: int
    grid: tuple[int, int]
    image_shape: tuple[int, int] = field(default=(0, 0))

    @property
    def patch_dim(self) -> int:
        return self.data.shape[0]

    @property
    def n_patches(self) -> int:
        return self.data.shape[1]


# -- loading -----------------------------------------------------------------


def _pgm_tokens(buf: bytes, count: int, path) -> tuple[list[int], int]:
    """Read ``count`` whitespace-separated header integers, skipping comments.

    Returns the values and the offset just past the single whitespace byte
    that terminates the last token.
    """
    tokens = []
    pos = 2
    n = len(buf)
    while len(tokens) < count:
        while pos < n and buf[pos : pos + 1].isspace():
            pos += 1
        if pos < n and buf[pos : pos + 1] == b"#":
            while pos < n and buf[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and buf[pos : pos + 1].isdigit():
            pos += 1
        if start == pos:
            raise CorruptHeaderError(f"{path}: malformed PGM header")
        tokens.append(int(buf[start:pos]))
    if pos >= n:
        raise CorruptHeaderError(f"{path}: PGM header has no pixel data")
    if not buf[pos : pos + 1].isspace():
        raise CorruptHeaderError(f"{path}: malformed PGM header")
    return tokens, pos + 1


def _decode_pgm(buf: bytes, path) -> GrayImage:
    (width, height, maxval), offset = _pgm_tokens(buf, 3, path)
    if width < 1 or height < 1 or not 1 <= maxval <= 65535:
        raise CorruptHeaderError(f"{path}: invalid PGM dimensions or maxval")
    n = width * height
    if buf[:2] == b"P5":
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        need = n * dtype.itemsize
        body = buf[offset : offset + need]
        if len(body) < need:
            raise CorruptHeaderError(f"{path}: PGM body truncated ({len(body)} of {need} bytes)")
        px = np.frombuffer(body, dtype=dtype).astype(np.float64)
    else:
        try:
            px = np.array(buf[offset:].split(), dtype=np.int64)
        except ValueError as exc:
            raise CorruptHeaderError(f"{path}: non-numeric ASCII PGM body") from exc
        if px.size < n:
            raise CorruptHeaderError(f"{path}: PGM body truncated ({px.size} of {n} values)")
        px = px[:n].astype(np.float64)
    if px.max(initial=0) > maxval:
        raise CorruptHeaderError(f"{path}: pixel value exceeds maxval {maxval}")
    return GrayImage(px.reshape(height, width), max_value=float(maxval))


def _decode_png(path) -> GrayImage:
    from PIL import Image, UnidentifiedImageError

    try:
        with Image.open(path) as im:
            im.load()
            mode = im.mode
            if mode in ("L", "1"):
                px = np.asarray(im.convert("L"), dtype=np.float64)
                maxval = 255.0
            elif mode.startswith("I;16") or mode == "I":
                px = np.asarray(im, dtype=np.float64)
                maxval = 65535.0
            else:
                raise UnsupportedFormatError(f"{path}: PNG mode {mode!r} is not grayscale")
    except (UnidentifiedImageError, SyntaxError, OSError) as exc:
        raise CorruptHeaderError(f"{path}: corrupt PNG ({exc})") from exc
    return GrayImage(px, max_value=maxval)


def load_image(path) -> GrayImage:
    """Decode a binary/ASCII PGM or a grayscale 8/16-bit PNG."""
    try:
        with open(path, "rb") as fh:
            buf = fh.read()
    except OSError as exc:
        raise ImageReadError(f"{path}: {exc.strerror or exc}") from exc
    if len(buf) < 2:
        raise CorruptHeaderError(f"{path}: file too short to hold an image header")
    if buf[:2] in (b"P5", b"P2"):
        return _decode_pgm(buf, path)
    if buf.startswith(_PNG_MAGIC):
        return _decode_png(path)
    if buf[:1] == b"P" and buf[1:2].isdigit():
        raise UnsupportedFormatError(f"{path}: netpbm variant {buf[:2].decode()} is not grayscale PGM")
    raise UnsupportedFormatError(f"{path}: not a PGM or PNG file")


def load_images(paths: Sequence, jobs: int = 1) -> list[GrayImage]:
    """Load many images; output order always equals input order."""
    if jobs <= 1:
        return [load_image(p) for p in paths]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(load_image, paths))


def save_pgm(img: GrayImage, path, max_value: int = 255) -> None:
    """Write a binary P5 PGM after linearly rescaling to [0, max_value]."""
    px = img.pixels
    lo, hi = px.min(), px.max()
    scaled = np.zeros_like(px) if hi == lo else (px - lo) * (max_value / (hi - lo))
    q = np.clip(np.rint(scaled), 0, max_value)
    dtype = ">u2" if max_value > 255 else "u1"
    header = f"P5\n{img.width} {img.height}\n{max_value}\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(q.astype(dtype).tobytes())


# -- preprocessing -------------------------------------------------------------


def _axis_weights(n_in: int, n_out: int):
    # half-pixel centres, clamped at the borders
    src = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
    src = np.clip(src, 0.0, n_in - 1)
    i0 = np.floor(src).astype(np.int64)
    i1 = np.minimum(i0 + 1, n_in - 1)
    return i0, i1, src - i0


def resize_bilinear(img: GrayImage, w: int, h: int) -> GrayImage:
    """Bilinear resampling to ``w`` x ``h`` with edge clamping."""
    if w < 1 or h < 1:
        raise DimensionError(f"target size must be at least 1x1, got {w}x{h}")
    px = img.pixels
    if (h, w) == px.shape:
        return GrayImage(px.copy(), max_value=img.max_value)
    r0, r1, rt = _axis_weights(px.shape[0], h)
    c0, c1, ct = _axis_weights(px.shape[1], w)
    top, bot = px[r0], px[r1]
    rows = top + rt[:, None] * (bot - top)
    left, right = rows[:, c0], rows[:, c1]
    out = left + ct[None, :] * (right - left)
    np.clip(out, px.min(), px.max(), out=out)
    return GrayImage(out, max_value=img.max_value)


def standardize(img: GrayImage) -> GrayImage:
    """Zero mean, unit population standard deviation.

    A constant image maps to all zeros with ``degenerate=True``.
    """
    px = img.pixels
    if np.ptp(px) == 0:
        return GrayImage(np.zeros_like(px), degenerate=True)
    # the result is scale-free; dividing by the peak first keeps tiny spreads from underflowing
    work = px / np.abs(px).max()
    centered = work - work.mean()
    sigma = np.sqrt(np.mean(centered * centered))
    return GrayImage(centered / sigma)


def preprocess(img: GrayImage, size: int | None) -> GrayImage:
    """Resize to ``size`` x ``size`` (if given) and standardize."""
    if size is not None:
        img = resize_bilinear(img, size, size)
    return standardize(img)


# -- tiling ------------------------------------------------------------------


def tile(img: GrayImage, p: int) -> PatchMatrix:
    """Non-overlapping p x p tiles as columns of a (p*p, n_tiles) matrix."""
    if p < 1:
        raise DimensionError(f"patch size must be positive, got {p}")
    h, w = img.pixels.shape
    if h % p:
        raise DimensionError(f"patch size {p} does not divide image height {h}")
    if w % p:
        raise DimensionError(f"patch size {p} does not divide image width {w}")
    gr, gc = h // p, w // p
    data = img.pixels.reshape(gr, p, gc, p).transpose(0, 2, 1, 3).reshape(gr * gc, p * p).T
    return PatchMatrix(np.ascontiguousarray(data), p, (gr, gc), (h, w))


def untile(patches: PatchMatrix) -> GrayImage:
    """Inverse of :func:`tile`."""
    p = patches.patch_size
    gr, gc = patches.grid
    px = patches.data.T.reshape(gr, gc, p, p).transpose(0, 2, 1, 3).reshape(gr * p, gc * p)
    return GrayImage(px)
