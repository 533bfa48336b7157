"""Dipole kernel and z-axis STI forward multipliers on a discrete frequency grid."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .volume import FreqGrid, GridSpec, make_freq_grid


@dataclass(frozen=True, eq=False)
class SpectralWindow:
    """A real multiplier sampled on the FFT grid (FFT layout, DC at index 0)."""

    grid: GridSpec
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.shape != tuple(self.grid.shape):
            raise ConfigurationError(f"window shape {data.shape} != grid {self.grid.shape}")
        if not np.all(np.isfinite(data)):
            raise ConfigurationError("window values must be finite")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def range_hint(self):
        return float(self.data.min()), float(self.data.max())


def _fg(fg) -> FreqGrid:
    return fg if isinstance(fg, FreqGrid) else make_freq_grid(fg)


def _squares(fg: FreqGrid):
    kx, ky, kz = fg.mesh()
    r2 = kx**2 + ky**2 + kz**2
    dc = r2 == 0
    safe = np.where(dc, 1.0, r2)
    return kx, ky, kz, safe, dc


def _nyquist(c):
    n = len(c)
    q = np.zeros(n, dtype=bool)
    if n % 2 == 0:
        q[n // 2] = True
    return q


def dipole_kernel(fg, dc_value: float = 0.0) -> SpectralWindow:
    """``D(xi) = 1/3 - xi_z^2/|xi|^2``, with ``D(0) = dc_value``."""
    fg = _fg(fg)
    kx, ky, kz, r2, dc = _squares(fg)
    d = 1.0 / 3.0 - np.broadcast_to(kz**2, r2.shape) / r2
    d = np.where(dc, dc_value, d)
    return SpectralWindow(fg.grid, d)


def cone_distance_proxy(fg, dc_value: float = 0.0) -> SpectralWindow:
    """``|D(xi)|``: zero on the magic cone, 2/3 along the z axis."""
    return SpectralWindow(_fg(fg).grid, np.abs(dipole_kernel(fg, dc_value).data))


def sti_forward_multipliers(fg):
    """Multipliers for chi33, chi13 and chi23 under a z-axis main field.

    ``B = D chi33 - (xz xx/|x|^2) chi13 - (xz xy/|x|^2) chi23``; all DC bins are 0.
    """
    fg = _fg(fg)
    kx, ky, kz, r2, dc = _squares(fg)
    m33 = dipole_kernel(fg, 0.0)
    # odd in (xi_z, xi_x): must vanish on even-length Nyquist planes to stay Hermitian
    nyq = [_nyquist(c) for c in fg.coords]
    kx, ky, kz = (np.where(q, 0.0, k) for q, k in zip(fg.mesh_like(nyq), (kx, ky, kz)))
    m13 = np.where(dc, 0.0, -(kz * kx) / r2)
    m23 = np.where(dc, 0.0, -(kz * ky) / r2)
    return m33, SpectralWindow(fg.grid, m13), SpectralWindow(fg.grid, m23)
