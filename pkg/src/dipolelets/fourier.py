"""Unnormalized forward 3D DFT, 1/N inverse, and Fourier multipliers.

Sign convention is ``exp(-2*pi*i*xi.x)`` on the forward transform, so the DC
bin of :func:`fft3` is the plain sum of samples.
"""
from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
import scipy.fft

from .errors import ConfigurationError, NumericalConsistencyError
from .volume import GridSpec, Volume, as_volume

#: relative imaginary residue above which a requested real inverse fails
REAL_RESIDUE_TOL = 1e-9


def _workers():
    n = os.environ.get("DIPOLELETS_THREADS")
    return int(n) if n else 1


@dataclass(frozen=True, eq=False)
class Spectrum:
    grid: GridSpec
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.complex128)
        if data.shape != tuple(self.grid.shape):
            raise ConfigurationError(f"spectrum shape {data.shape} != grid {self.grid.shape}")
        object.__setattr__(self, "data", data)


def fft3(v) -> Spectrum:
    v = as_volume(v)
    return Spectrum(v.grid, scipy.fft.fftn(v.data, workers=_workers()))


def _inverse(data, real):
    out = scipy.fft.ifftn(data, workers=_workers())
    if not real:
        return out
    scale = np.abs(out).max()
    residue = np.abs(out.imag).max()
    if scale > 0 and residue > REAL_RESIDUE_TOL * scale:
        raise NumericalConsistencyError(
            f"imaginary residue {residue:.3e} exceeds {REAL_RESIDUE_TOL:g} relative; "
            "spectrum is not Hermitian"
        )
    return out.real


def ifft3(s: Spectrum, real: bool = False) -> Volume:
    """Inverse DFT normalized by 1/N.

    With ``real=True`` the imaginary part is dropped after checking that it is
    negligible (relative to the largest output magnitude).
    """
    return Volume(_inverse(s.data, real), s.grid)


def _check_grid(a: GridSpec, b: GridSpec):
    if tuple(a.shape) != tuple(b.shape) or not np.allclose(a.voxel_size, b.voxel_size):
        raise ConfigurationError(f"grid mismatch: {a} vs {b}")


def multiply_spectrum(spec: Spectrum, w, real: bool) -> Volume:
    """``ifft3(w * spec)``; the shared inner step of every multiplier sandwich."""
    wd = w.data if hasattr(w, "data") else np.asarray(w)
    return Volume(_inverse(spec.data * wd, real), spec.grid)


def apply_multiplier(v, w) -> Volume:
    """Return ``F^-1(w * F v)``. Real input with a real window stays real."""
    v = as_volume(v)
    if hasattr(w, "grid"):
        _check_grid(v.grid, w.grid)
    elif np.shape(w) != tuple(v.grid.shape):
        raise ConfigurationError(f"window shape {np.shape(w)} != volume {v.grid.shape}")
    wd = w.data if hasattr(w, "data") else np.asarray(w)
    real = v.kind == "real" and not np.iscomplexobj(wd)
    return multiply_spectrum(fft3(v), wd, real)


def pad_to_even(v) -> Volume:
    """Zero-pad odd axes by one sample at the high end."""
    v = as_volume(v)
    pads = [(0, n % 2) for n in v.grid.shape]
    if not any(p for _, p in pads):
        return v
    data = np.pad(v.data, pads)
    return Volume(data, GridSpec(data.shape, v.grid.voxel_size))
