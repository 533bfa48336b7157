"""Data-fidelity weights and reliability masks from near-cone band energy."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .transform import SIGNED_SUM, SUM_OF_SQUARES, Decomposition, band_energy_map
from .volume import Volume, as_volume

LINEAR_COMPLEMENT = "linear_complement"
RECIPROCAL = "reciprocal"


@dataclass(frozen=True)
class WeightConfig:
    """``selection=None`` means the cone band ``m = 0`` at every scale."""

    selection: tuple | None = None
    mode: str = SUM_OF_SQUARES
    rescale: str = LINEAR_COMPLEMENT
    floor: float = 0.1
    threshold: float | None = 0.5

    def __post_init__(self):
        if not 0 <= self.floor < 1:
            raise ConfigurationError(f"floor must lie in [0, 1), got {self.floor}")
        if self.mode not in (SIGNED_SUM, SUM_OF_SQUARES):
            raise ConfigurationError(f"unknown energy mode {self.mode!r}")
        if self.rescale not in (LINEAR_COMPLEMENT, RECIPROCAL):
            raise ConfigurationError(f"unknown rescale {self.rescale!r}")
        if self.selection is not None:
            if len(self.selection) == 0:
                raise ConfigurationError("weight selection is empty")
            object.__setattr__(self, "selection", tuple(tuple(s) for s in self.selection))


def weight_from_energy(E, floor=0.1, rescale=LINEAR_COMPLEMENT):
    """Map an energy array to weights in ``[floor, 1]``, decreasing in ``|E|``."""
    e = np.abs(np.asarray(E, dtype=float))
    top = e.max()
    if top == 0:
        warnings.warn("band energy is identically zero; weight is 1 everywhere", RuntimeWarning,
                      stacklevel=2)
        return np.ones_like(e)
    if rescale == LINEAR_COMPLEMENT:
        unit = 1.0 - e / top
    elif rescale == RECIPROCAL:
        ref = np.median(e)
        if ref == 0:
            ref = e[e > 0].mean()
        r = 1.0 / (1.0 + e / ref)
        r_min = 1.0 / (1.0 + top / ref)
        unit = (r - r_min) / (1.0 - r_min)
    else:
        raise ConfigurationError(f"unknown rescale {rescale!r}")
    return floor + (1.0 - floor) * unit


def make_weight(d: Decomposition, cfg: WeightConfig | None = None) -> Volume:
    cfg = cfg or WeightConfig()
    selection = cfg.selection or d.bandset.near_cone_keys()
    E = band_energy_map(d, selection, cfg.mode)
    return Volume(weight_from_energy(E.data, cfg.floor, cfg.rescale), d.grid,
                  {"mode": cfg.mode, "rescale": cfg.rescale})


def make_mask(w, threshold: float) -> Volume:
    """1 where the weight is at least ``threshold``, 0 where it is unreliable."""
    if not 0 < threshold < 1:
        raise ConfigurationError(f"threshold must lie in (0, 1), got {threshold}")
    w = as_volume(w)
    return w.like((w.data >= threshold).astype(float))
