"""Image containers, HDR file I/O and intensity conversions.

Gray images are plain 2D ``float64`` arrays of shape ``(height, width)``;
RGB images are ``(height, width, 3)``. Pixel row 0 is the top of the image.

Radiance ``.hdr`` files are decoded with the ``ldexp`` convention used by
the classic reference decoder: a component byte ``m`` with shared exponent
``e`` decodes to ``m * 2**(e - 136)`` and ``e == 0`` decodes to zero (no
``+0.5`` mantissa offset). ``EXPOSURE`` header lines are ignored.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass

import numpy as np
from PIL import Image

from .errors import (
    DimensionMismatch,
    MalformedHeader,
    NoForegroundPixels,
    SizeMismatch,
    TruncatedScanline,
    UnsupportedPixelFormat,
)

LUMA_WEIGHTS = (0.2126, 0.7152, 0.0722)
LOG_EPS = 1e-6
U16_MAX = 65535

_RADIANCE_MAGIC = (b"#?RADIANCE", b"#?RGBE")
_RGBE_FORMAT = "32-bit_rle_rgbe"


@dataclass(frozen=True)
class PartitionMap:
    """Per-pixel area labels: 0 is background, ``1..n_areas`` are areas."""

    labels: np.ndarray
    n_areas: int

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.ndim != 2:
            raise ValueError("labels must be a 2D array")
        if self.n_areas < 1:
            raise ValueError("a partition needs at least one area")
        if labels.min() < 0 or labels.max() > self.n_areas:
            raise ValueError("labels must lie in [0, n_areas]")
        object.__setattr__(self, "labels", labels.astype(np.int32, copy=False))

    @property
    def shape(self) -> tuple[int, int]:
        return self.labels.shape

    def area_sizes(self) -> np.ndarray:
        """Pixel count of each area, index 0 = Area(1)."""
        return np.bincount(self.labels.ravel(), minlength=self.n_areas + 1)[1:]


def as_gray(img) -> np.ndarray:
    """Validate and return ``img`` as a 2D float64 array."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"expected a non-empty 2D gray image, got shape {arr.shape}")
    if np.isnan(arr).any():
        raise ValueError("image contains NaN values")
    return arr


# ---------------------------------------------------------------------------
# Radiance RGBE

def _read_header(buf: bytes) -> tuple[int, int, bool, int]:
    """Parse header and resolution line; return (height, width, flip_y, offset)."""
    if not buf.startswith(_RADIANCE_MAGIC):
        raise MalformedHeader("missing #?RADIANCE / #?RGBE signature")
    end = buf.find(b"\n\n")
    if end < 0:
        raise MalformedHeader("header is not terminated by an empty line")
    for line in buf[:end].split(b"\n")[1:]:
        text = line.decode("latin-1").strip()
        if text.startswith("FORMAT="):
            fmt = text[len("FORMAT="):].strip()
            if fmt != _RGBE_FORMAT:
                raise UnsupportedPixelFormat(f"pixel format {fmt!r} is not {_RGBE_FORMAT}")
    pos = end + 2
    nl = buf.find(b"\n", pos)
    if nl < 0:
        raise MalformedHeader("missing resolution line")
    res = buf[pos:nl].decode("latin-1").split()
    if len(res) != 4:
        raise MalformedHeader(f"bad resolution line {buf[pos:nl]!r}")
    try:
        height, width = int(res[1]), int(res[3])
    except ValueError:
        raise MalformedHeader(f"bad resolution line {buf[pos:nl]!r}") from None
    if res[2] != "+X" or res[0] not in ("-Y", "+Y"):
        raise UnsupportedPixelFormat(f"unsupported scanline orientation {' '.join(res)}")
    if height < 1 or width < 1:
        raise MalformedHeader("image dimensions must be positive")
    return height, width, res[0] == "+Y", nl + 1


def _read_rle_scanline(buf: bytes, pos: int, width: int) -> tuple[np.ndarray, int]:
    # new-style RLE: the four byte planes are stored one after another
    line = np.empty((4, width), dtype=np.uint8)
    n = len(buf)
    for ch in range(4):
        x = 0
        while x < width:
            if pos >= n:
                raise TruncatedScanline("file ends inside an RLE scanline")
            count = buf[pos]
            pos += 1
            if count > 128:
                count -= 128
                if x + count > width or pos >= n:
                    raise TruncatedScanline("bad RLE run")
                line[ch, x:x + count] = buf[pos]
                pos += 1
            else:
                if count == 0 or x + count > width or pos + count > n:
                    raise TruncatedScanline("bad RLE literal")
                line[ch, x:x + count] = np.frombuffer(buf, np.uint8, count, pos)
                pos += count
            x += count
    return line.T, pos


def _read_flat_scanline(buf: bytes, pos: int, width: int) -> tuple[np.ndarray, int]:
    if pos + 4 * width <= len(buf):
        line = np.frombuffer(buf, np.uint8, 4 * width, pos).reshape(width, 4)
        if not ((line[:, 0] == 1) & (line[:, 1] == 1) & (line[:, 2] == 1)).any():
            return line, pos + 4 * width
    # slow path: old-style run markers (1, 1, 1, n) repeat the previous pixel
    out = np.empty((width, 4), dtype=np.uint8)
    x, shift = 0, 0
    while x < width:
        if pos + 4 > len(buf):
            raise TruncatedScanline("file ends inside a flat scanline")
        px = buf[pos:pos + 4]
        pos += 4
        if px[0] == 1 and px[1] == 1 and px[2] == 1:
            if x == 0:
                raise TruncatedScanline("run marker at start of scanline")
            count = px[3] << shift
            if x + count > width:
                raise TruncatedScanline("old-style run overflows scanline")
            out[x:x + count] = out[x - 1]
            x += count
            shift += 8
        else:
            out[x] = np.frombuffer(px, np.uint8)
            x += 1
            shift = 0
    return out, pos


def rgbe_to_float(rgbe: np.ndarray) -> np.ndarray:
    """Decode ``(..., 4)`` RGBE bytes to linear floats, ``m * 2**(e - 136)``."""
    rgbe = np.asarray(rgbe, dtype=np.uint8)
    e = rgbe[..., 3].astype(np.int32)
    vals = np.ldexp(rgbe[..., :3].astype(np.float64), (e - 136)[..., None])
    vals[e == 0] = 0.0
    return vals


def float_to_rgbe(rgb: np.ndarray) -> np.ndarray:
    """Encode non-negative linear floats ``(..., 3)`` to RGBE bytes."""
    rgb = np.asarray(rgb, dtype=np.float64)
    if (rgb < 0).any() or not np.isfinite(rgb).all():
        raise ValueError("RGBE can only store finite non-negative values")
    v = rgb.max(axis=-1)
    mant, exp = np.frexp(v)
    out = np.zeros(rgb.shape[:-1] + (4,), dtype=np.uint8)
    ok = v >= 1e-32
    scale = np.where(ok, mant * 256.0 / np.where(ok, v, 1.0), 0.0)
    out[..., :3] = np.where(ok[..., None], np.floor(rgb * scale[..., None]), 0).astype(np.uint8)
    out[..., 3] = np.where(ok, exp + 128, 0).astype(np.uint8)
    return out


def load_radiance_hdr(path) -> np.ndarray:
    """Read a Radiance ``.hdr`` file into an ``(H, W, 3)`` linear RGB array.

    Both flat scanlines (with old-style run markers) and new-style
    run-length-encoded scanlines are accepted.
    """
    with open(path, "rb") as fh:
        buf = fh.read()
    height, width, flip_y, pos = _read_header(buf)
    rows = np.empty((height, width, 4), dtype=np.uint8)
    for y in range(height):
        head = buf[pos:pos + 4]
        if (8 <= width < 0x8000 and len(head) == 4 and head[0] == 2 and head[1] == 2
                and not head[2] & 0x80):
            if (head[2] << 8 | head[3]) != width:
                raise TruncatedScanline(f"scanline {y} length does not match image width")
            rows[y], pos = _read_rle_scanline(buf, pos + 4, width)
        else:
            rows[y], pos = _read_flat_scanline(buf, pos, width)
    rgb = rgbe_to_float(rows)
    return rgb[::-1].copy() if flip_y else rgb


def _rle_encode_plane(plane: np.ndarray) -> bytearray:
    out = bytearray()
    data = plane.tobytes()
    n, i = len(data), 0
    while i < n:
        run = 1
        while i + run < n and run < 127 and data[i + run] == data[i]:
            run += 1
        if run >= 4:
            out += bytes((128 + run, data[i]))
            i += run
            continue
        # literal block up to the next run of >= 4
        j = i
        while j < n and j - i < 128:
            if j + 3 < n and data[j] == data[j + 1] == data[j + 2] == data[j + 3]:
                break
            j += 1
        out.append(j - i)
        out += data[i:j]
        i = j
    return out


def save_radiance_hdr(path, rgb: np.ndarray, rle: bool = True) -> None:
    """Write linear RGB (or gray) data as a Radiance ``.hdr`` file."""
    rgb = np.asarray(rgb, dtype=np.float64)
    if rgb.ndim == 2:
        rgb = np.repeat(rgb[..., None], 3, axis=-1)
    height, width = rgb.shape[:2]
    rgbe = float_to_rgbe(rgb)
    body = bytearray()
    header = f"#?RADIANCE\nFORMAT={_RGBE_FORMAT}\n\n-Y {height} +X {width}\n".encode()
    use_rle = rle and 8 <= width < 0x8000
    for y in range(height):
        if use_rle:
            body += bytes((2, 2, width >> 8, width & 0xFF))
            for ch in range(4):
                body += _rle_encode_plane(rgbe[y, :, ch])
        else:
            body += rgbe[y].tobytes()
    with open(path, "wb") as fh:
        fh.write(header + bytes(body))


# ---------------------------------------------------------------------------
# PFM

_PFM_TOKEN = re.compile(rb"\s*(\S+)")


def load_pfm(path) -> np.ndarray:
    """Read a PFM file. ``Pf`` gives a 2D array, ``PF`` an ``(H, W, 3)`` array.

    A negative scale means little-endian payload, positive means big-endian.
    Rows are returned top-first (the file stores the bottom row first).
    """
    with open(path, "rb") as fh:
        buf = fh.read()
    tokens, pos = [], 0
    for _ in range(4):
        m = _PFM_TOKEN.match(buf, pos)
        if m is None:
            raise MalformedHeader("truncated PFM header")
        tokens.append(m.group(1))
        pos = m.end()
    if pos >= len(buf) or not buf[pos:pos + 1].isspace():
        raise MalformedHeader("PFM header must end with a single whitespace byte")
    pos += 1
    kind, w, h, scale = tokens
    if kind not in (b"Pf", b"PF"):
        raise MalformedHeader(f"unknown PFM identifier {kind!r}")
    try:
        width, height, scale = int(w), int(h), float(scale)
    except ValueError:
        raise MalformedHeader("non-numeric PFM dimensions or scale") from None
    if width < 1 or height < 1 or scale == 0.0:
        raise MalformedHeader("PFM dimensions must be positive and scale non-zero")
    channels = 3 if kind == b"PF" else 1
    expected = width * height * channels * 4
    if len(buf) - pos != expected:
        raise SizeMismatch(f"PFM payload has {len(buf) - pos} bytes, expected {expected}")
    dtype = "<f4" if scale < 0 else ">f4"
    data = np.frombuffer(buf, dtype, width * height * channels, pos).astype(np.float64)
    shape = (height, width, 3) if channels == 3 else (height, width)
    return data.reshape(shape)[::-1].copy()


def save_pfm(path, img: np.ndarray) -> None:
    """Write a gray or RGB image as little-endian PFM."""
    arr = np.asarray(img)
    if arr.ndim == 2:
        kind = b"Pf"
    elif arr.ndim == 3 and arr.shape[2] == 3:
        kind = b"PF"
    else:
        raise ValueError(f"cannot store shape {arr.shape} as PFM")
    height, width = arr.shape[:2]
    payload = np.ascontiguousarray(arr[::-1], dtype="<f4").tobytes()
    with open(path, "wb") as fh:
        fh.write(kind + b"\n" + f"{width} {height}\n-1.0\n".encode() + payload)


# ---------------------------------------------------------------------------
# conversions

def to_grayscale(rgb: np.ndarray) -> np.ndarray:
    """Rec. 709 luma of a linear RGB image."""
    rgb = np.asarray(rgb, dtype=np.float64)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise ValueError(f"expected an (H, W, 3) image, got {rgb.shape}")
    r, g, b = LUMA_WEIGHTS
    return r * rgb[..., 0] + g * rgb[..., 1] + b * rgb[..., 2]


def log_encode(img: np.ndarray, eps: float = LOG_EPS) -> np.ndarray:
    """Natural-log encoding ``ln(img + eps)``."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    return np.log(as_gray(img) + eps)


def normalize_u16(img: np.ndarray) -> np.ndarray:
    """Min-max map onto integer levels ``0..65535`` (kept as float).

    Rounds half-up. A constant image maps to all zeros.
    """
    arr = as_gray(img)
    lo, hi = arr.min(), arr.max()
    if hi == lo:
        return np.zeros_like(arr)
    return np.floor((arr - lo) / (hi - lo) * U16_MAX + 0.5)


# ---------------------------------------------------------------------------
# 8-bit masks and label maps

def read_gray8(path) -> np.ndarray:
    """Read an 8-bit PGM/PNG as a ``uint8`` 2D array."""
    with Image.open(path) as im:
        if im.mode in ("I", "I;16", "I;16B", "I;16L", "F"):
            raise UnsupportedPixelFormat(f"{path}: expected an 8-bit image, got mode {im.mode}")
        if im.mode != "L":
            im = im.convert("L")
        return np.array(im, dtype=np.uint8)


def write_gray8(path, arr: np.ndarray) -> None:
    """Write a ``uint8`` array as binary PGM (or PNG, by extension)."""
    arr = np.asarray(arr)
    if arr.ndim != 2:
        raise ValueError("expected a 2D array")
    fmt = "PPM" if str(path).lower().endswith((".pgm", ".pnm")) else None
    Image.fromarray(arr.astype(np.uint8), mode="L").save(path, format=fmt)


def _check_shape(shape, expected, what: str) -> None:
    if expected is not None and tuple(shape) != tuple(expected):
        raise DimensionMismatch(f"{what} has shape {tuple(shape)}, expected {tuple(expected)}")


def label_map_from_gray(gray: np.ndarray) -> PartitionMap:
    """Number the distinct non-zero gray values 1..n in ascending order."""
    gray = np.asarray(gray)
    levels = np.unique(gray[gray != 0])
    if levels.size == 0:
        raise NoForegroundPixels("label map has no non-zero pixels")
    labels = np.searchsorted(levels, gray) + 1
    labels[gray == 0] = 0
    return PartitionMap(labels, int(levels.size))


def load_label_map(path, shape: tuple[int, int] | None = None) -> PartitionMap:
    """Load an 8-bit label map (0 = background, each non-zero level = an area).

    ``shape`` is the companion image's ``(height, width)``; a mismatch raises
    :class:`DimensionMismatch`.
    """
    gray = read_gray8(path)
    _check_shape(gray.shape, shape, os.fspath(path))
    return label_map_from_gray(gray)


def load_background_mask(path, shape: tuple[int, int] | None = None) -> np.ndarray:
    """Boolean mask that is True on background (gray value 0) pixels."""
    gray = read_gray8(path)
    _check_shape(gray.shape, shape, os.fspath(path))
    return gray == 0


# ---------------------------------------------------------------------------

def load_image(path) -> np.ndarray:
    """Load any supported image as a gray float array.

    ``.hdr``/``.pic`` and ``.pfm`` are read natively and RGB is reduced to
    luma; other formats go through Pillow.
    """
    ext = os.path.splitext(os.fspath(path))[1].lower()
    if ext in (".hdr", ".pic", ".rgbe"):
        return to_grayscale(load_radiance_hdr(path))
    if ext == ".pfm":
        img = load_pfm(path)
        return to_grayscale(img) if img.ndim == 3 else img
    with Image.open(path) as im:
        arr = np.array(im)
    if arr.ndim == 3:
        return to_grayscale(arr[..., :3])
    return arr.astype(np.float64)
