"""Dipole-let analysis (one FFT, one inverse per band) and synthesis (a sum)."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bands import COARSE, BandSet
from .errors import ConfigurationError
from .fourier import _check_grid, fft3, multiply_spectrum
from .volume import Volume, as_volume

SIGNED_SUM = "signed_sum"
SUM_OF_SQUARES = "sum_of_squares"


@dataclass(frozen=True, eq=False)
class Decomposition:
    bands: dict
    coarse: Volume
    bandset: BandSet = field(repr=False, default=None)

    @property
    def grid(self):
        return self.coarse.grid

    def __getitem__(self, key):
        return self.coarse if key == COARSE else self.bands[tuple(key)]

    def items(self):
        yield from self.bands.items()
        yield COARSE, self.coarse


def analyze(f, bs: BandSet) -> Decomposition:
    f = as_volume(f)
    _check_grid(f.grid, bs.grid)
    real = f.kind == "real"
    spec = fft3(f)
    bands = {key: multiply_spectrum(spec, w, real) for key, w in bs.combined.items()}
    return Decomposition(bands, multiply_spectrum(spec, bs.coarse, real), bs)


def synthesize(d: Decomposition) -> Volume:
    """Voxelwise sum of the coarse band and every detail band."""
    if d.bandset is not None:
        missing = set(d.bandset.combined) - set(d.bands)
        if missing:
            raise ConfigurationError(f"decomposition is missing bands {sorted(missing)}")
    out = np.array(d.coarse.data, copy=True)
    for key, band in d.bands.items():
        if band.grid.shape != d.coarse.grid.shape:
            raise ConfigurationError(f"band {key} is on a different grid")
        out = out + band.data
    return Volume(out, d.coarse.grid)


def _normalize_selection(selection, d: Decomposition):
    sel = [COARSE if s == COARSE else tuple(s) for s in selection]
    if not sel:
        raise ConfigurationError("band selection is empty")
    unknown = [s for s in sel if s != COARSE and s not in d.bands]
    if unknown:
        raise ConfigurationError(f"unknown bands in selection: {unknown}")
    return sel


def band_energy_map(d: Decomposition, selection, mode: str = SUM_OF_SQUARES) -> Volume:
    """Aggregate selected bands voxelwise.

    ``signed_sum`` adds coefficients (selecting everything reproduces the
    input); ``sum_of_squares`` adds their squared magnitudes.
    """
    sel = _normalize_selection(selection, d)
    if mode == SIGNED_SUM:
        out = sum(d[k].data for k in sel)
    elif mode == SUM_OF_SQUARES:
        out = sum(np.abs(d[k].data) ** 2 for k in sel)
    else:
        raise ConfigurationError(f"unknown energy mode {mode!r}")
    return Volume(np.asarray(out), d.grid, {"mode": mode, "selection": sel})
