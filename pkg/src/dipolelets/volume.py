"""Grid, volume and frequency-grid types.

Arrays are indexed ``[x, y, z]``. Whenever samples are serialized they are
written in Fortran order (x fastest), which is also the NIfTI convention.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import ConfigurationError

MIN_DIM = 4


@dataclass(frozen=True)
class GridSpec:
    """Shape and voxel size (mm) of a regular 3D grid."""

    shape: tuple[int, int, int]
    voxel_size: tuple[float, float, float] = (1.0, 1.0, 1.0)

    def __post_init__(self):
        shape = tuple(int(n) for n in self.shape)
        voxel = tuple(float(h) for h in self.voxel_size)
        if len(shape) != 3 or len(voxel) != 3:
            raise ConfigurationError(
                f"grid must be 3D, got shape={self.shape} voxel_size={self.voxel_size}"
            )
        if any(n < MIN_DIM for n in shape):
            raise ConfigurationError(f"every grid dimension must be >= {MIN_DIM}, got {shape}")
        if not all(np.isfinite(h) and h > 0 for h in voxel):
            raise ConfigurationError(f"voxel sizes must be positive, got {voxel}")
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "voxel_size", voxel)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))


@dataclass(frozen=True, eq=False)
class Volume:
    """A finite 3D field of real or complex samples on a :class:`GridSpec`.

    The sample array is copied on construction and marked read-only.
    """

    data: np.ndarray
    grid: GridSpec = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        data = np.array(self.data, copy=True)
        if data.ndim != 3:
            raise ConfigurationError(f"volume data must be 3D, got ndim={data.ndim}")
        if np.iscomplexobj(data):
            data = data.astype(np.complex128, copy=False)
        else:
            data = data.astype(np.float64, copy=False)
        if not np.all(np.isfinite(data)):
            raise ConfigurationError("volume samples must be finite")
        grid = self.grid if self.grid is not None else GridSpec(data.shape)
        if tuple(grid.shape) != data.shape:
            raise ConfigurationError(f"data shape {data.shape} does not match grid {grid.shape}")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "grid", grid)

    @property
    def kind(self) -> str:
        return "complex" if np.iscomplexobj(self.data) else "real"

    @property
    def shape(self):
        return self.grid.shape

    def like(self, data, **meta) -> "Volume":
        """New volume on the same grid."""
        return Volume(data, self.grid, meta)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.data, dtype=dtype)


def as_volume(v, voxel_size=None) -> Volume:
    """Wrap an array as a :class:`Volume`; volumes pass through unchanged."""
    if isinstance(v, Volume):
        return v
    arr = np.asarray(v)
    if voxel_size is None:
        return Volume(arr)
    return Volume(arr, GridSpec(arr.shape, voxel_size))


@dataclass(frozen=True)
class FreqGrid:
    """Per-axis FFT-layout frequency coordinates in cycles/mm."""

    grid: GridSpec
    coords: tuple[np.ndarray, np.ndarray, np.ndarray]

    def mesh(self):
        """Broadcastable (kx, ky, kz) arrays of shape (nx,1,1), (1,ny,1), (1,1,nz)."""
        kx, ky, kz = self.coords
        return kx[:, None, None], ky[None, :, None], kz[None, None, :]

    def mesh_like(self, per_axis):
        """Reshape three per-axis arrays like :meth:`mesh`."""
        a, b, c = per_axis
        return a[:, None, None], b[None, :, None], c[None, None, :]

    def radius(self):
        kx, ky, kz = self.mesh()
        return np.sqrt(kx**2 + ky**2 + kz**2)


def make_freq_grid(grid: GridSpec) -> FreqGrid:
    """Frequency coordinates ``k/(n*h)`` for ``k <= n/2`` and ``(k-n)/(n*h)`` above.

    For even ``n`` the Nyquist index ``n/2`` is mapped to ``-1/(2h)``, the
    same layout as :func:`numpy.fft.fftfreq`.
    """
    if not isinstance(grid, GridSpec):
        grid = GridSpec(*grid) if isinstance(grid, tuple) and len(grid) == 2 else GridSpec(grid)
    coords = []
    for n, h in zip(grid.shape, grid.voxel_size):
        k = np.arange(n)
        # exact rationals; fftfreq agrees except it multiplies by 1/(n*h)
        c = np.where(k <= (n - 1) // 2, k, k - n) / (n * h)
        coords.append(c)
    return FreqGrid(grid, tuple(coords))


class VolumeStats(NamedTuple):
    l2_norm: float
    linf_norm: float
    mean: float


def volume_stats(v) -> VolumeStats:
    data = np.asarray(v.data if isinstance(v, Volume) else v)
    if data.size == 0:
        return VolumeStats(0.0, 0.0, 0.0)
    mag = np.abs(data)
    mean = data.mean()
    return VolumeStats(float(np.sqrt(np.sum(mag**2))), float(mag.max()), mean.item())
