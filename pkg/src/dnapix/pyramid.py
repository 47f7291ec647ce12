"""Resolution-layered lossless image codec.

A reversible integer 5/3 lifting wavelet splits the image into a dyadic
pyramid: layer 0 is the coarsest approximation, each following layer holds
the detail subbands that double both dimensions.  Any contiguous prefix of
layer bitstreams reconstructs the image at that layer's resolution; the full
set reconstructs the input bit-exactly.
"""

import struct
import zlib
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DnapixError

_ZLEVEL = 6
CONTAINER_MAGIC = b"HPX1"


@dataclass(frozen=True)
class Image:
    """8-bit raster, 1 or 3 channels, samples shaped (h, w, channels)."""

    width: int
    height: int
    channels: int
    samples: np.ndarray

    def __post_init__(self):
        if self.channels not in (1, 3):
            raise DnapixError(f"channels must be 1 or 3, got {self.channels}")
        if self.samples.shape != (self.height, self.width, self.channels):
            raise DnapixError("samples shape does not match declared dimensions")
        if self.samples.dtype != np.uint8:
            raise DnapixError("samples must be uint8")

    @classmethod
    def from_array(cls, arr):
        arr = np.asarray(arr, dtype=np.uint8)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        h, w, c = arr.shape
        return cls(width=w, height=h, channels=c, samples=np.ascontiguousarray(arr))

    def plane(self):
        """Samples with the channel axis dropped for grayscale images."""
        return self.samples[:, :, 0] if self.channels == 1 else self.samples

    def __eq__(self, other):
        return (
            isinstance(other, Image)
            and self.width == other.width
            and self.height == other.height
            and self.channels == other.channels
            and np.array_equal(self.samples, other.samples)
        )


@dataclass
class LayerSet:
    n_levels: int
    width: int
    height: int
    channels: int
    approx: np.ndarray  # coarsest LL, int64 (h0, w0, C)
    details: list = field(default_factory=list)  # per layer k>=1: (lh, hl, hh)

    def layer_dims(self, k):
        f = 1 << (self.n_levels - 1 - k)
        return (-(-self.width // f), -(-self.height // f))


@dataclass(frozen=True)
class LayerBitstream:
    image_id: str
    layer_index: int
    payload: bytes
    decoded_dims: tuple  # (w, h)


# ---------------------------------------------------------------------------
# reversible 5/3 lifting along the last axis


def _split_last(x):
    even = x[..., 0::2]
    odd = x[..., 1::2]
    return even, odd


def _analyze_last(x):
    n = x.shape[-1]
    if n < 2:
        return x.copy(), x[..., :0].copy()
    even, odd = _split_last(x)
    fl = odd.shape[-1]
    if n % 2 == 0:
        even_r = np.concatenate([even[..., 1:], even[..., -1:]], axis=-1)
    else:
        even_r = even[..., 1:]
    d = odd - ((even[..., :fl] + even_r) // 2)
    d_left = np.concatenate([d[..., :1], d[..., :-1]], axis=-1)
    if n % 2 == 0:
        d_right = d
    else:
        d_left = np.concatenate([d[..., :1], d], axis=-1)
        d_right = np.concatenate([d, d[..., -1:]], axis=-1)
    s = even + ((d_left + d_right + 2) // 4)
    return s, d


def _synthesize_last(s, d, n):
    if n < 2:
        return s.copy()
    fl = d.shape[-1]
    d_left = np.concatenate([d[..., :1], d[..., :-1]], axis=-1)
    if n % 2 == 0:
        d_right = d
    else:
        d_left = np.concatenate([d[..., :1], d], axis=-1)
        d_right = np.concatenate([d, d[..., -1:]], axis=-1)
    even = s - ((d_left + d_right + 2) // 4)
    if n % 2 == 0:
        even_r = np.concatenate([even[..., 1:], even[..., -1:]], axis=-1)
    else:
        even_r = even[..., 1:]
    odd = d + ((even[..., :fl] + even_r) // 2)
    out = np.empty(s.shape[:-1] + (n,), dtype=s.dtype)
    out[..., 0::2] = even
    out[..., 1::2] = odd
    return out


def _analyze_axis(x, axis):
    moved = np.moveaxis(x, axis, -1)
    s, d = _analyze_last(moved)
    return np.moveaxis(s, -1, axis), np.moveaxis(d, -1, axis)


def _synthesize_axis(s, d, n, axis):
    out = _synthesize_last(np.moveaxis(s, axis, -1), np.moveaxis(d, axis, -1), n)
    return np.moveaxis(out, -1, axis)


def _analyze_2d(x):
    """One dyadic analysis step on (h, w, C) int64 -> ll, (lh, hl, hh)."""
    low, high = _analyze_axis(x, 1)
    ll, hl = _analyze_axis(low, 0)
    lh, hh = _analyze_axis(high, 0)
    return ll, (lh, hl, hh)


def _synthesize_2d(ll, bands, h, w):
    lh, hl, hh = bands
    low = _synthesize_axis(ll, hl, h, 0)
    high = _synthesize_axis(lh, hh, h, 0)
    return _synthesize_axis(low, high, w, 1)


# ---------------------------------------------------------------------------
# operations


def build_pyramid(img: Image, n_levels: int) -> LayerSet:
    """Run n_levels-1 reversible analysis steps; layer 0 is the coarsest."""
    if n_levels < 2:
        raise DnapixError("n_levels must be >= 2")
    min_dim = min(img.width, img.height)
    if min_dim // (1 << (n_levels - 1)) < 4:
        need = 4 << (n_levels - 1)
        raise DnapixError(
            f"image too small for {n_levels} levels: min dimension {min_dim} < {need}"
        )
    cur = img.samples.astype(np.int64)
    details = []
    for _ in range(n_levels - 1):
        cur, bands = _analyze_2d(cur)
        details.append(bands)
    details.reverse()  # details[0] lifts layer 0 -> layer 1
    return LayerSet(
        n_levels=n_levels,
        width=img.width,
        height=img.height,
        channels=img.channels,
        approx=cur,
        details=details,
    )


def _pack_plane(arr):
    flat = arr.astype(np.int32).ravel()
    resid = np.diff(flat, prepend=np.int32(0))
    if resid.size and (resid.max() > 32767 or resid.min() < -32768):
        raise DnapixError("coefficient residual out of int16 range")
    return zlib.compress(resid.astype("<i2").tobytes(), _ZLEVEL)


def _unpack_plane(blob, shape):
    resid = np.frombuffer(zlib.decompress(blob), dtype="<i2").astype(np.int64)
    return np.cumsum(resid).reshape(shape)


def _band_shapes(h, w, c):
    ch, fh = -(-h // 2), h // 2
    cw, fw = -(-w // 2), w // 2
    return ((ch, fw, c), (fh, cw, c), (fh, fw, c))  # lh, hl, hh


def encode_layers(ls: LayerSet, image_id: str = "img") -> list:
    """Serialize each layer into an independent byte payload."""
    out = []
    w0, h0 = ls.layer_dims(0)
    head = struct.pack(">3sBHH", b"PL0", ls.channels, h0, w0)
    out.append(
        LayerBitstream(
            image_id=image_id,
            layer_index=0,
            payload=head + _pack_plane(ls.approx),
            decoded_dims=(w0, h0),
        )
    )
    for k in range(1, ls.n_levels):
        w, h = ls.layer_dims(k)
        parts = [struct.pack(">3sBHH", b"PLD", ls.channels, h, w)]
        for band in ls.details[k - 1]:
            blob = _pack_plane(band)
            parts.append(struct.pack(">I", len(blob)))
            parts.append(blob)
        out.append(
            LayerBitstream(
                image_id=image_id,
                layer_index=k,
                payload=b"".join(parts),
                decoded_dims=(w, h),
            )
        )
    return out


def _parse_layer0(payload):
    magic, c, h, w = struct.unpack(">3sBHH", payload[:8])
    if magic != b"PL0":
        raise DnapixError("not a layer-0 payload")
    return _unpack_plane(payload[8:], (h, w, c)), (h, w, c)


def _parse_detail(payload):
    magic, c, h, w = struct.unpack(">3sBHH", payload[:8])
    if magic != b"PLD":
        raise DnapixError("not a detail-layer payload")
    bands = []
    off = 8
    for shape in _band_shapes(h, w, c):
        (ln,) = struct.unpack(">I", payload[off : off + 4])
        off += 4
        bands.append(_unpack_plane(payload[off : off + ln], shape))
        off += ln
    return tuple(bands), (h, w, c)


def reconstruct(bitstreams) -> Image:
    """Progressively invert a contiguous layer prefix 0..K."""
    ordered = sorted(bitstreams, key=lambda b: b.layer_index)
    if not ordered:
        raise DnapixError("no layers to reconstruct")
    indices = [b.layer_index for b in ordered]
    if indices != list(range(len(ordered))):
        raise DnapixError(f"layer prefix must be contiguous from 0, got {indices}")
    cur, (h, w, c) = _parse_layer0(ordered[0].payload)
    for bs in ordered[1:]:
        bands, (h, w, c) = _parse_detail(bs.payload)
        cur = _synthesize_2d(cur, bands, h, w)
    return Image.from_array(np.clip(cur, 0, 255).astype(np.uint8))


def upsample_nearest(img: Image, width: int, height: int) -> Image:
    """Nearest-neighbor rescale, e.g. to compare a preview with the
    full-resolution original."""
    ys = (np.arange(height) * img.height) // height
    xs = (np.arange(width) * img.width) // width
    return Image.from_array(img.samples[np.ix_(ys, xs)])


def psnr(a: Image, b: Image) -> float:
    """10*log10(255^2 / MSE); +inf for identical images."""
    if (a.width, a.height, a.channels) != (b.width, b.height, b.channels):
        raise DnapixError("psnr requires equal dimensions and channel counts")
    diff = a.samples.astype(np.float64) - b.samples.astype(np.float64)
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return float("inf")
    return 10.0 * np.log10(255.0**2 / mse)


# ---------------------------------------------------------------------------
# container file


def write_bitstreams(path, bitstreams):
    with open(path, "wb") as fh:
        fh.write(CONTAINER_MAGIC)
        for bs in bitstreams:
            ident = bs.image_id.encode("utf-8")
            fh.write(struct.pack(">H", len(ident)))
            fh.write(ident)
            fh.write(struct.pack(">HII", bs.layer_index, *bs.decoded_dims))
            fh.write(struct.pack(">I", len(bs.payload)))
            fh.write(bs.payload)


def read_bitstreams(path):
    with open(path, "rb") as fh:
        if fh.read(4) != CONTAINER_MAGIC:
            raise DnapixError("bad container magic")
        out = []
        while True:
            head = fh.read(2)
            if not head:
                return out
            (idlen,) = struct.unpack(">H", head)
            ident = fh.read(idlen).decode("utf-8")
            layer_index, w, h = struct.unpack(">HII", fh.read(10))
            (plen,) = struct.unpack(">I", fh.read(4))
            payload = fh.read(plen)
            if len(payload) != plen:
                raise DnapixError("truncated container record")
            out.append(
                LayerBitstream(
                    image_id=ident,
                    layer_index=layer_index,
                    payload=payload,
                    decoded_dims=(w, h),
                )
            )
