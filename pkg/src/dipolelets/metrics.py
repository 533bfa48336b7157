"""ROI-masked reconstruction metrics."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.ndimage import gaussian_filter

from .bands import BandSet
from .errors import ConfigurationError
from .fourier import apply_multiplier
from .volume import as_volume


@dataclass
class MetricReport:
    rmse_percent: float
    xsim: float
    streak_energy: float
    roi_voxels: int

    def to_dict(self):
        return {k: float(v) if k != "roi_voxels" else int(v) for k, v in asdict(self).items()}


def _roi(roi, shape):
    if roi is None:
        return np.ones(shape, dtype=bool)
    m = np.asarray(as_volume(roi).data) > 0.5
    if m.shape != tuple(shape):
        raise ConfigurationError("ROI grid differs from the volume grid")
    if not m.any():
        raise ConfigurationError("ROI is empty")
    return m


def rmse(est, truth, roi=None) -> float:
    """``100 * ||(est - truth) roi|| / ||truth roi||`` (percent)."""
    e, t = as_volume(est).data, as_volume(truth).data
    m = _roi(roi, t.shape)
    ref = np.linalg.norm(t[m])
    if ref == 0:
        raise ConfigurationError("ground truth is zero inside the ROI")
    return float(100.0 * np.linalg.norm((e - t)[m]) / ref)


def xsim(est, truth, roi=None, k1=0.01, k2=0.001, L=1.0, sigma=1.5) -> float:
    """Structural similarity with low stabilizing constants, averaged over the ROI.

    Local statistics use a Gaussian window renormalized to the ROI so voxels
    outside the ROI never contribute.
    """
    x, y = as_volume(est).data, as_volume(truth).data
    m = _roi(roi, y.shape)
    mf = m.astype(float)
    c1, c2 = (k1 * L) ** 2, (k2 * L) ** 2

    def local(a):
        return gaussian_filter(a * mf, sigma, mode="wrap", truncate=3.0) / norm

    norm = gaussian_filter(mf, sigma, mode="wrap", truncate=3.0)
    norm = np.where(norm > 0, norm, 1.0)
    mx, my = local(x), local(y)
    sxx = local(x * x) - mx * mx
    syy = local(y * y) - my * my
    sxy = local(x * y) - mx * my
    num = (2 * mx * my + c1) * (2 * sxy + c2)
    den = (mx * mx + my * my + c1) * (sxx + syy + c2)
    return float(np.mean((num / den)[m]))


def streak_energy(est, bs: BandSet, near_selection=None) -> float:
    """``||sum of selected near-cone bands|| / ||est||`` (0 for a zero volume)."""
    est = as_volume(est)
    sel = list(bs.near_cone_keys() if near_selection is None else near_selection)
    if not sel:
        raise ConfigurationError("near-cone selection is empty")
    total = np.linalg.norm(est.data)
    if total == 0:
        return 0.0
    w = sum(bs.window(k).data for k in sel)
    return float(np.linalg.norm(apply_multiplier(est, w).data) / total)


def evaluate(est, truth, roi, bs: BandSet, near_selection=None, **xsim_params) -> MetricReport:
    m = _roi(roi, as_volume(truth).shape)
    return MetricReport(rmse(est, truth, roi), xsim(est, truth, roi, **xsim_params),
                        streak_energy(est, bs, near_selection), int(m.sum()))
