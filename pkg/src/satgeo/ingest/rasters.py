"""Raster file I/O: a self-describing .grd format plus a minimal GeoTIFF subset.

.grd layout: magic ``SDGRD1\\n``, a little-endian u32 header length, a JSON
header ``{width, height, dtype, geotransform, nodata}`` (nodata null means
NaN), then the row-major little-endian payload. It exists so the full test
suite runs without third-party format machinery.

The GeoTIFF subset covers what real depth-map/DSM triples need: classic TIFF,
single band, strip-organized, uncompressed or deflate, u16/f32/f64, north-up
geotransform via the pixel-scale + tiepoint tags, nodata via the GDAL ASCII
tag. Everything else (tiles, other compressions, multi-band) is rejected.
"""

from __future__ import annotations

import json
import math
import struct
import zlib
from pathlib import Path

import numpy as np

from ..geodesy import GeoTransform, RasterGrid

GRD_MAGIC = b"SDGRD1\n"

_DTYPE_NAMES = {"uint16": np.uint16, "float32": np.float32, "float64": np.float64}


class RasterFormatError(ValueError):
    """Unknown magic, malformed structure, or unsupported feature in a raster file."""


def _nodata_to_json(nodata):
    if isinstance(nodata, float) and math.isnan(nodata):
        return None
    return nodata


def _nodata_from_json(value):
    return float("nan") if value is None else float(value)


def write_grd(grid: RasterGrid, path) -> None:
    header = {
        "width": grid.width,
        "height": grid.height,
        "dtype": grid.values.dtype.name,
        "geotransform": [
            grid.geotransform.origin_lon,
            grid.geotransform.origin_lat,
            grid.geotransform.pixel_size_lon,
            grid.geotransform.pixel_size_lat,
        ],
        "nodata": _nodata_to_json(grid.nodata),
    }
    blob = json.dumps(header).encode("ascii")
    payload = np.ascontiguousarray(grid.values, dtype=grid.values.dtype)
    with open(path, "wb") as f:
        f.write(GRD_MAGIC)
        f.write(struct.pack("<I", len(blob)))
        f.write(blob)
        f.write(payload.astype(payload.dtype.newbyteorder("<")).tobytes())


def read_grd(path) -> RasterGrid:
    with open(path, "rb") as f:
        magic = f.read(len(GRD_MAGIC))
        if magic != GRD_MAGIC:
            raise RasterFormatError(f"bad magic {magic!r}, not a .grd file")
        (hlen,) = struct.unpack("<I", f.read(4))
        try:
            header = json.loads(f.read(hlen).decode("ascii"))
        except (ValueError, UnicodeDecodeError) as exc:
            raise RasterFormatError(f"corrupt .grd header: {exc}") from exc
        try:
            width, height = int(header["width"]), int(header["height"])
            dtype = _DTYPE_NAMES[header["dtype"]]
            gt = GeoTransform(*[float(v) for v in header["geotransform"]])
            nodata = _nodata_from_json(header["nodata"])
        except (KeyError, TypeError) as exc:
            raise RasterFormatError(f"incomplete .grd header: {exc}") from exc
        payload = f.read()
    expected = width * height * np.dtype(dtype).itemsize
    if len(payload) != expected:
        raise RasterFormatError(
            f"payload is {len(payload)} bytes, header implies {expected}"
        )
    values = np.frombuffer(payload, dtype=np.dtype(dtype).newbyteorder("<"))
    values = values.astype(dtype).reshape(height, width)
    return RasterGrid(values, gt, nodata)


# ── minimal GeoTIFF subset ──────────────────────────────────────────────

_TAG_WIDTH = 256
_TAG_HEIGHT = 257
_TAG_BITS = 258
_TAG_COMPRESSION = 259
_TAG_PHOTOMETRIC = 262
_TAG_STRIP_OFFSETS = 273
_TAG_SAMPLES_PER_PIXEL = 277
_TAG_ROWS_PER_STRIP = 278
_TAG_STRIP_BYTE_COUNTS = 279
_TAG_TILE_WIDTH = 322
_TAG_SAMPLE_FORMAT = 339
_TAG_MODEL_PIXEL_SCALE = 33550
_TAG_MODEL_TIEPOINT = 33922
_TAG_GDAL_NODATA = 42113

_TYPE_SIZES = {1: 1, 2: 1, 3: 2, 4: 4, 5: 8, 11: 4, 12: 8}
_TYPE_FMT = {3: "H", 4: "I", 12: "d"}


def write_tiff(grid: RasterGrid, path, compress: bool = False) -> None:
    """Write a single-band strip-organized GeoTIFF (north-up)."""
    values = np.ascontiguousarray(grid.values)
    dtype = values.dtype
    if dtype == np.uint16:
        bits, sample_format = 16, 1
    elif dtype == np.float32:
        bits, sample_format = 32, 3
    elif dtype == np.float64:
        bits, sample_format = 64, 3
    else:
        raise RasterFormatError(f"unsupported dtype {dtype}")
    height, width = values.shape
    strips = [values[r : r + 1].astype(dtype.newbyteorder("<")).tobytes() for r in range(height)]
    if compress:
        strips = [zlib.compress(s) for s in strips]

    gt = grid.geotransform
    pixel_scale = (abs(gt.pixel_size_lon), abs(gt.pixel_size_lat), 0.0)
    tiepoint = (0.0, 0.0, 0.0, gt.origin_lon, gt.origin_lat, 0.0)
    nodata_ascii = (
        "nan" if isinstance(grid.nodata, float) and math.isnan(grid.nodata) else repr(grid.nodata)
    ) .encode("ascii") + b"\0"

    # layout: header | strip data | out-of-line tag values | IFD
    data_start = 8
    strip_offsets = []
    pos = data_start
    for s in strips:
        strip_offsets.append(pos)
        pos += len(s)

    extra_blobs: list[bytes] = []

    def store(blob: bytes) -> int:
        nonlocal pos
        offset = pos
        extra_blobs.append(blob)
        pos += len(blob)
        return offset

    entries = []  # (tag, type, count, packed value or offset)

    def entry_inline(tag, typ, count, values_):
        fmt = "<" + _TYPE_FMT[typ] * count
        packed = struct.pack(fmt, *values_)
        entries.append((tag, typ, count, packed.ljust(4, b"\0")))

    def entry_outline(tag, typ, count, blob):
        # TIFF stores values of <= 4 bytes inline in the entry itself
        if len(blob) <= 4:
            entries.append((tag, typ, count, blob.ljust(4, b"\0")))
        else:
            offset = store(blob)
            entries.append((tag, typ, count, struct.pack("<I", offset)))

    def entry_array(tag, typ, values_):
        count = len(values_)
        size = _TYPE_SIZES[typ] * count
        fmt = "<" + _TYPE_FMT[typ] * count
        if size <= 4:
            entry_inline(tag, typ, count, values_)
        else:
            entry_outline(tag, typ, count, struct.pack(fmt, *values_))

    entry_inline(_TAG_WIDTH, 4, 1, (width,))
    entry_inline(_TAG_HEIGHT, 4, 1, (height,))
    entry_inline(_TAG_BITS, 3, 1, (bits,))
    entry_inline(_TAG_COMPRESSION, 3, 1, (8 if compress else 1,))
    entry_inline(_TAG_PHOTOMETRIC, 3, 1, (1,))
    entry_array(_TAG_STRIP_OFFSETS, 4, strip_offsets)
    entry_inline(_TAG_SAMPLES_PER_PIXEL, 3, 1, (1,))
    entry_inline(_TAG_ROWS_PER_STRIP, 4, 1, (1,))
    entry_array(_TAG_STRIP_BYTE_COUNTS, 4, [len(s) for s in strips])
    entry_inline(_TAG_SAMPLE_FORMAT, 3, 1, (sample_format,))
    entry_array(_TAG_MODEL_PIXEL_SCALE, 12, pixel_scale)
    entry_array(_TAG_MODEL_TIEPOINT, 12, tiepoint)
    entry_outline(_TAG_GDAL_NODATA, 2, len(nodata_ascii), nodata_ascii)

    ifd_offset = pos
    entries.sort(key=lambda e: e[0])
    with open(path, "wb") as f:
        f.write(b"II*\0")
        f.write(struct.pack("<I", ifd_offset))
        for s in strips:
            f.write(s)
        for blob in extra_blobs:
            f.write(blob)
        f.write(struct.pack("<H", len(entries)))
        for tag, typ, count, packed in entries:
            f.write(struct.pack("<HHI", tag, typ, count))
            f.write(packed)
        f.write(struct.pack("<I", 0))


def _read_tag_values(buf: bytes, typ: int, count: int, packed: bytes):
    size = _TYPE_SIZES.get(typ)
    if size is None:
        raise RasterFormatError(f"unsupported TIFF value type {typ}")
    total = size * count
    if total <= 4:
        raw = packed[:total]
    else:
        (offset,) = struct.unpack("<I", packed)
        raw = buf[offset : offset + total]
    if typ == 2:
        return raw
    if typ == 11:
        return struct.unpack("<" + "f" * count, raw)
    if typ == 12:
        return struct.unpack("<" + "d" * count, raw)
    if typ == 3:
        return struct.unpack("<" + "H" * count, raw)
    if typ == 4:
        return struct.unpack("<" + "I" * count, raw)
    if typ == 5:  # rational
        parts = struct.unpack("<" + "I" * (2 * count), raw)
        return tuple(parts[i] / parts[i + 1] for i in range(0, len(parts), 2))
    return struct.unpack("<" + "B" * count, raw)


def read_tiff(path) -> RasterGrid:
    """Read a raster from the supported GeoTIFF subset."""
    buf = Path(path).read_bytes()
    if buf[:4] not in (b"II*\0",):
        if buf[:4] == b"MM\0*":
            raise RasterFormatError("big-endian TIFF not supported")
        raise RasterFormatError(f"bad magic {buf[:4]!r}, not a little-endian TIFF")
    (ifd_offset,) = struct.unpack_from("<I", buf, 4)
    (n_entries,) = struct.unpack_from("<H", buf, ifd_offset)
    tags: dict[int, tuple] = {}
    for i in range(n_entries):
        base = ifd_offset + 2 + 12 * i
        tag, typ, count = struct.unpack_from("<HHI", buf, base)
        tags[tag] = _read_tag_values(buf, typ, count, buf[base + 8 : base + 12])

    (next_ifd,) = struct.unpack_from("<I", buf, ifd_offset + 2 + 12 * n_entries)
    if next_ifd != 0:
        raise RasterFormatError("multi-page TIFF not supported")
    if _TAG_TILE_WIDTH in tags:
        raise RasterFormatError("tiled TIFF not supported")
    if tags.get(_TAG_SAMPLES_PER_PIXEL, (1,))[0] != 1:
        raise RasterFormatError("multi-band TIFF not supported")

    def need(tag, name):
        if tag not in tags:
            raise RasterFormatError(f"missing required tag {name}")
        return tags[tag]

    width = need(_TAG_WIDTH, "ImageWidth")[0]
    height = need(_TAG_HEIGHT, "ImageLength")[0]
    bits = need(_TAG_BITS, "BitsPerSample")[0]
    compression = tags.get(_TAG_COMPRESSION, (1,))[0]
    if compression not in (1, 8, 32946):
        raise RasterFormatError(f"unsupported compression {compression}")
    sample_format = tags.get(_TAG_SAMPLE_FORMAT, (1,))[0]
    if (bits, sample_format) == (16, 1):
        dtype = np.uint16
    elif (bits, sample_format) == (32, 3):
        dtype = np.float32
    elif (bits, sample_format) == (64, 3):
        dtype = np.float64
    else:
        raise RasterFormatError(f"unsupported sample layout bits={bits} format={sample_format}")

    offsets = need(_TAG_STRIP_OFFSETS, "StripOffsets")
    counts = need(_TAG_STRIP_BYTE_COUNTS, "StripByteCounts")
    rows_per_strip = tags.get(_TAG_ROWS_PER_STRIP, (height,))[0]
    raw = bytearray()
    for off, cnt in zip(offsets, counts):
        chunk = bytes(buf[off : off + cnt])
        if compression != 1:
            chunk = zlib.decompress(chunk)
        raw.extend(chunk)
    expected = width * height * np.dtype(dtype).itemsize
    if len(raw) != expected:
        raise RasterFormatError(f"strip data is {len(raw)} bytes, expected {expected}")
    values = np.frombuffer(bytes(raw), dtype=np.dtype(dtype).newbyteorder("<"))
    values = values.astype(dtype).reshape(height, width)

    scale = need(_TAG_MODEL_PIXEL_SCALE, "ModelPixelScale")
    tiepoint = need(_TAG_MODEL_TIEPOINT, "ModelTiepoint")
    if tiepoint[0] != 0.0 or tiepoint[1] != 0.0:
        raise RasterFormatError("tiepoint must anchor raster origin (0, 0)")
    gt = GeoTransform(tiepoint[3], tiepoint[4], scale[0], scale[1])

    nodata = float("nan")
    if _TAG_GDAL_NODATA in tags:
        text = tags[_TAG_GDAL_NODATA].split(b"\0")[0].decode("ascii").strip()
        nodata = float("nan") if text.lower() == "nan" else float(text)
    _ = rows_per_strip
    return RasterGrid(values, gt, nodata)


def read_raster(path) -> RasterGrid:
    """Dispatch on magic bytes: .grd or the GeoTIFF subset."""
    with open(path, "rb") as f:
        head = f.read(7)
    if head == GRD_MAGIC:
        return read_grd(path)
    if head[:4] in (b"II*\0", b"MM\0*"):
        return read_tiff(path)
    raise RasterFormatError(f"unknown raster magic {head!r}")


def write_raster(grid: RasterGrid, path) -> None:
    """Write by extension: .tif/.tiff as GeoTIFF, anything else as .grd."""
    suffix = Path(path).suffix.lower()
    if suffix in (".tif", ".tiff"):
        write_tiff(grid, path)
    else:
        write_grd(grid, path)
