"""Volume container files, minimal NIfTI-1 and PNG slice rendering.

Container layout::

    b"DPLV" | uint32 LE header length | UTF-8 JSON header | payload

The payload holds little-endian float32 samples (complex volumes interleave
real and imaginary parts) in Fortran order, x fastest.
"""
from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import (ConfigurationError, MalformedHeaderError, TruncatedPayloadError,
                     UnsupportedFeatureError, VersionMismatchError)
from .volume import GridSpec, Volume, as_volume

MAGIC = b"DPLV"
VERSION = 1
_REQUIRED = ("shape", "voxel_size", "kind", "order", "version")


def write_volume(v, path):
    v = as_volume(v)
    header = {"shape": list(v.grid.shape), "voxel_size": list(v.grid.voxel_size),
              "kind": v.kind, "order": "F", "version": VERSION}
    data = v.data
    if v.kind == "complex":
        payload = np.empty(2 * data.size, dtype="<f4")
        payload[0::2] = data.real.ravel(order="F")
        payload[1::2] = data.imag.ravel(order="F")
    else:
        payload = data.astype("<f4").ravel(order="F")
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC + struct.pack("<I", len(blob)) + blob)
        fh.write(np.ascontiguousarray(payload).tobytes())
    return Path(path)


def read_volume(path) -> Volume:
    raw = Path(path).read_bytes()
    if len(raw) < 8 or raw[:4] != MAGIC:
        raise MalformedHeaderError(f"{path}: not a volume container (bad magic)")
    (hlen,) = struct.unpack("<I", raw[4:8])
    if 8 + hlen > len(raw):
        raise MalformedHeaderError(f"{path}: header length {hlen} exceeds file size")
    try:
        header = json.loads(raw[8:8 + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MalformedHeaderError(f"{path}: header is not valid JSON ({exc})") from None
    if not isinstance(header, dict) or any(k not in header for k in _REQUIRED):
        raise MalformedHeaderError(f"{path}: header must contain {_REQUIRED}")
    if header["version"] != VERSION:
        raise VersionMismatchError(f"{path}: version {header['version']!r}, expected {VERSION}")
    if header["kind"] not in ("real", "complex") or header["order"] != "F":
        raise MalformedHeaderError(f"{path}: unsupported kind/order {header['kind']}/{header['order']}")
    try:
        grid = GridSpec(tuple(header["shape"]), tuple(header["voxel_size"]))
    except (ConfigurationError, TypeError) as exc:
        raise MalformedHeaderError(f"{path}: invalid grid ({exc})") from None
    per = 2 if header["kind"] == "complex" else 1
    nbytes = grid.size * per * 4
    payload = raw[8 + hlen:]
    if len(payload) < nbytes:
        raise TruncatedPayloadError(f"{path}: truncated payload ({len(payload)} of {nbytes} bytes)")
    if len(payload) > nbytes:
        raise MalformedHeaderError(f"{path}: {len(payload) - nbytes} trailing bytes after payload")
    flat = np.frombuffer(payload, dtype="<f4").astype(np.float64)
    if per == 2:
        flat = flat[0::2] + 1j * flat[1::2]
    return Volume(flat.reshape(grid.shape, order="F"), grid)


# --------------------------------------------------------------------------
# NIfTI-1 (single file, 3D, float32/float64)

_NIFTI_DTYPES = {16: "f4", 64: "f8"}


def write_nifti_minimal(v, path):
    """Write a single-file float32 NIfTI-1 image (348-byte header, ``n+1``)."""
    v = as_volume(v)
    if v.kind != "real":
        raise UnsupportedFeatureError("datatype", "only real volumes can be written")
    hdr = bytearray(352)
    struct.pack_into("<i", hdr, 0, 348)
    dim = [3, *v.grid.shape, 1, 1, 1, 1]
    struct.pack_into("<8h", hdr, 40, *dim)
    struct.pack_into("<hh", hdr, 70, 16, 32)  # datatype float32, bitpix
    struct.pack_into("<8f", hdr, 76, 1.0, *v.grid.voxel_size, 0, 0, 0, 0)
    struct.pack_into("<f", hdr, 108, 352.0)  # vox_offset
    struct.pack_into("<ff", hdr, 112, 1.0, 0.0)  # scl_slope, scl_inter
    struct.pack_into("<B", hdr, 123, 10 | 8)  # xyzt_units: mm, s
    struct.pack_into("<hh", hdr, 252, 0, 1)  # qform_code, sform_code
    srow = np.zeros((3, 4))
    srow[[0, 1, 2], [0, 1, 2]] = v.grid.voxel_size
    struct.pack_into("<12f", hdr, 280, *srow.ravel())
    hdr[344:348] = b"n+1\0"
    with open(path, "wb") as fh:
        fh.write(bytes(hdr))
        fh.write(v.data.astype("<f4").ravel(order="F").tobytes())
    return Path(path)


def read_nifti_minimal(path) -> Volume:
    raw = Path(path).read_bytes()
    if len(raw) < 348:
        raise MalformedHeaderError(f"{path}: shorter than a NIfTI-1 header")
    for endian in "<>":
        if struct.unpack_from(endian + "i", raw, 0)[0] == 348:
            break
    else:
        raise MalformedHeaderError(f"{path}: sizeof_hdr is not 348")
    if raw[344:348] != b"n+1\0":
        raise UnsupportedFeatureError("magic", f"{raw[344:348]!r} (only single-file n+1 is supported)")
    dim = struct.unpack_from(endian + "8h", raw, 40)
    if dim[0] != 3:
        raise UnsupportedFeatureError("dim", f"dim[0]={dim[0]}; only 3D volumes are supported")
    datatype = struct.unpack_from(endian + "h", raw, 70)[0]
    if datatype not in _NIFTI_DTYPES:
        raise UnsupportedFeatureError("datatype", f"code {datatype}; only float32 (16) and float64 (64)")
    pixdim = struct.unpack_from(endian + "8f", raw, 76)
    offset = int(struct.unpack_from(endian + "f", raw, 108)[0])
    slope, inter = struct.unpack_from(endian + "ff", raw, 112)
    shape = tuple(int(d) for d in dim[1:4])
    dtype = np.dtype(_NIFTI_DTYPES[datatype]).newbyteorder(endian)
    count = int(np.prod(shape))
    if len(raw) < offset + count * dtype.itemsize:
        raise TruncatedPayloadError(f"{path}: truncated NIfTI payload")
    data = np.frombuffer(raw, dtype=dtype, count=count, offset=offset).astype(np.float64)
    if slope != 0 and np.isfinite(slope):
        data = data * slope + inter
    voxel = tuple(abs(p) if p else 1.0 for p in pixdim[1:4])
    return Volume(data.reshape(shape, order="F"), GridSpec(shape, voxel))


# --------------------------------------------------------------------------
# PNG slices


def to_uint8(img, lo, hi):
    """Clip to ``[lo, hi]`` and map linearly to 0..255, rounding half up."""
    if not hi > lo:
        raise ConfigurationError(f"display window must have hi > lo, got [{lo}, {hi}]")
    t = (np.clip(np.asarray(img, dtype=float), lo, hi) - lo) / (hi - lo)
    return np.floor(t * 255.0 + 0.5).astype(np.uint8)


def render_slices(v, axis, indices, window, path_prefix):
    """Write one 8-bit grayscale PNG per slice index; returns the paths.

    Slices are transposed so the first remaining array axis runs left to right.
    """
    v = as_volume(v)
    data = np.real(v.data)
    axis = {"x": 0, "y": 1, "z": 2}.get(axis, axis)
    n = data.shape[axis]
    lo, hi = window
    paths = []
    for idx in indices:
        if not 0 <= idx < n:
            raise ConfigurationError(f"slice index {idx} out of range [0, {n}) along axis {axis}")
        img = to_uint8(np.take(data, idx, axis=axis).T, lo, hi)
        path = Path(f"{path_prefix}_ax{axis}_{idx:03d}.png")
        Image.fromarray(img).save(path, optimize=False)
        paths.append(path)
    return paths


def render_montage(volumes, axis, index, window, path):
    """Tile one slice of each volume side by side in a single PNG."""
    axis = {"x": 0, "y": 1, "z": 2}.get(axis, axis)
    tiles = [to_uint8(np.take(np.real(as_volume(v).data), index, axis=axis).T, *window) for v in volumes]
    gap = np.zeros((tiles[0].shape[0], 1), dtype=np.uint8)
    row = np.concatenate([t for tile in tiles for t in (tile, gap)][:-1], axis=1)
    Image.fromarray(row).save(path, optimize=False)
    return Path(path)
