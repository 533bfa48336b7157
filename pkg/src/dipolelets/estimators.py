"""scikit-learn style wrappers.

Every estimator takes a single 3D array as ``X``. ``fit`` builds whatever
depends only on the grid (band windows, kernels); ``transform`` does the work.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_same_shape, check_volume, check_weight
from .bands import AngularConfig, RadialConfig, build_bandset
from .metrics import streak_energy
from .solvers import (BandRegConfig, TkdConfig, TvConfig, admm_weighted_tv, band_regularized_descent,
                      dyadic_band_weights, tkd)
from .transform import SUM_OF_SQUARES, analyze, band_energy_map
from .volume import GridSpec, Volume, make_freq_grid
from .weights import LINEAR_COMPLEMENT, make_mask, weight_from_energy


class _BandMixin:
    """Band-set construction shared by the estimators that need one."""

    def _build_bands(self, shape):
        self.grid_ = GridSpec(shape, self.voxel_size)
        angular = AngularConfig(tuple(self.deltas), tuple(self.epsilons), self.eta)
        radial = RadialConfig(self.J, self.profile, self.base_cutoff)
        self.bandset_ = build_bandset(make_freq_grid(self.grid_), radial, angular, self.dc_value)
        self.band_keys_ = self.bandset_.keys
        self.n_bands_ = len(self.band_keys_) + 1
        return self

    def _volume(self, X):
        return Volume(X, self.grid_)


class DipoleletTransform(_BandMixin, TransformerMixin, BaseEstimator):
    """Undecimated cone-aware multiscale decomposition.

    ``transform`` returns an array of shape ``(n_bands_, nx, ny, nz)``: the
    detail bands in ``band_keys_`` order followed by the coarse band.
    ``inverse_transform`` sums them back.

    Examples
    --------
    >>> import numpy as np
    >>> X = np.random.default_rng(0).standard_normal((16, 16, 16))
    >>> tr = DipoleletTransform(J=1).fit(X)
    >>> C = tr.transform(X)
    >>> C.shape
    (7, 16, 16, 16)
    >>> bool(np.allclose(tr.inverse_transform(C), X))
    True
    """

    def __init__(self, J=3, deltas=(0.05, 0.15), epsilons=(0.02, 0.02), eta="smoothstep",
                 profile="raised_cosine", base_cutoff=0.5, voxel_size=(1.0, 1.0, 1.0), dc_value=0.0):
        self.J = J
        self.deltas = deltas
        self.epsilons = epsilons
        self.eta = eta
        self.profile = profile
        self.base_cutoff = base_cutoff
        self.voxel_size = voxel_size
        self.dc_value = dc_value

    def fit(self, X, y=None):
        X = check_volume(X, allow_complex=True)
        return self._build_bands(X.shape)

    def decompose(self, X):
        """Return the :class:`~dipolelets.transform.Decomposition` of ``X``."""
        check_is_fitted(self, "bandset_")
        X = check_same_shape(check_volume(X, allow_complex=True), self.grid_.shape)
        return analyze(self._volume(X), self.bandset_)

    def transform(self, X):
        d = self.decompose(X)
        return np.stack([d.bands[k].data for k in self.band_keys_] + [d.coarse.data])

    def inverse_transform(self, C):
        check_is_fitted(self, "bandset_")
        C = np.asarray(C)
        if C.shape != (self.n_bands_, *self.grid_.shape):
            raise ValueError(f"expected coefficients of shape {(self.n_bands_, *self.grid_.shape)}, "
                             f"got {C.shape}")
        return C.sum(axis=0)

    def energy(self, X, selection=None, mode=SUM_OF_SQUARES):
        """Voxelwise energy of the selected bands (near-cone bands by default)."""
        d = self.decompose(X)
        selection = selection or self.bandset_.near_cone_keys()
        return band_energy_map(d, selection, mode).data

    def streak_score(self, X):
        check_is_fitted(self, "bandset_")
        return streak_energy(self._volume(check_volume(X)), self.bandset_)


class DipoleletWeights(DipoleletTransform):
    """Maps a phase volume to data-fidelity weights in ``[floor, 1]``."""

    def __init__(self, J=3, deltas=(0.05, 0.15), epsilons=(0.02, 0.02), eta="smoothstep",
                 profile="raised_cosine", base_cutoff=0.5, voxel_size=(1.0, 1.0, 1.0), dc_value=0.0,
                 selection=None, mode=SUM_OF_SQUARES, rescale=LINEAR_COMPLEMENT, floor=0.1,
                 threshold=0.5):
        super().__init__(J, deltas, epsilons, eta, profile, base_cutoff, voxel_size, dc_value)
        self.selection = selection
        self.mode = mode
        self.rescale = rescale
        self.floor = floor
        self.threshold = threshold

    def transform(self, X):
        E = self.energy(X, self.selection, self.mode)
        return weight_from_energy(E, self.floor, self.rescale)

    def inverse_transform(self, C):
        raise NotImplementedError("weights are not invertible")

    def mask(self, X):
        """Binary reliability mask (0 where the weight is below ``threshold``)."""
        return make_mask(self.transform(X), self.threshold).data


class _Reconstructor(TransformerMixin, BaseEstimator):
    def fit(self, X, y=None, **fit_params):
        X = check_volume(X)
        self.grid_ = GridSpec(X.shape, self.voxel_size)
        self._fit_extra()
        return self

    def _fit_extra(self):
        pass

    def _check(self, X):
        check_is_fitted(self, "grid_")
        return check_same_shape(check_volume(X), self.grid_.shape)

    def fit_transform(self, X, y=None, weight=None):
        return self.fit(X).transform(X, weight=weight)


class TKDReconstructor(_Reconstructor):
    """Truncated k-space division with threshold ``h`` on ``|D|``."""

    def __init__(self, h=0.15, voxel_size=(1.0, 1.0, 1.0)):
        self.h = h
        self.voxel_size = voxel_size

    def transform(self, X, weight=None):
        X = self._check(X)
        return tkd(Volume(X, self.grid_), TkdConfig(self.h)).data


class WeightedTVReconstructor(_Reconstructor):
    """ADMM for ``||w (A chi - psi)||^2 + lam ||grad chi||_1``.

    The solver report of the last call is kept in ``report_``.
    """

    def __init__(self, lam=0.03, rho=None, max_iters=200, tol=1e-4, isotropic=False,
                 voxel_size=(1.0, 1.0, 1.0)):
        self.lam = lam
        self.rho = rho
        self.max_iters = max_iters
        self.tol = tol
        self.isotropic = isotropic
        self.voxel_size = voxel_size

    def transform(self, X, weight=None):
        X = self._check(X)
        w = check_weight(weight, X.shape)
        cfg = TvConfig(self.lam, self.rho, self.max_iters, self.tol, self.isotropic)
        chi, self.report_ = admm_weighted_tv(Volume(X, self.grid_), w, cfg)
        return chi.data


class BandRegularizedQSM(_BandMixin, _Reconstructor):
    """Projected gradient descent with dyadic near-cone band penalties.

    ``alpha0`` scales the l2 penalties and ``beta0`` the l-infinity radii,
    both halved per scale; ``beta0=None`` leaves the bands unconstrained.
    """

    def __init__(self, alpha0=10.0, beta0=None, m_max=0, step=1.0, max_iters=100, tol=1e-6,
                 fidelity="nonlinear_exp", J=3, deltas=(0.05, 0.15), epsilons=(0.02, 0.02),
                 eta="smoothstep", profile="raised_cosine", base_cutoff=0.5,
                 voxel_size=(1.0, 1.0, 1.0), dc_value=0.0):
        self.alpha0 = alpha0
        self.beta0 = beta0
        self.m_max = m_max
        self.step = step
        self.max_iters = max_iters
        self.tol = tol
        self.fidelity = fidelity
        self.J = J
        self.deltas = deltas
        self.epsilons = epsilons
        self.eta = eta
        self.profile = profile
        self.base_cutoff = base_cutoff
        self.voxel_size = voxel_size
        self.dc_value = dc_value

    def _fit_extra(self):
        self._build_bands(self.grid_.shape)

    def transform(self, X, weight=None):
        X = self._check(X)
        w = check_weight(weight, X.shape)
        beta0 = np.inf if self.beta0 is None else self.beta0
        alphas, betas = dyadic_band_weights(self.bandset_, self.alpha0, beta0, self.m_max)
        cfg = BandRegConfig(alphas, betas, self.step, self.max_iters, self.tol, self.fidelity)
        chi, self.report_ = band_regularized_descent(Volume(X, self.grid_), w, self.bandset_, cfg)
        return chi.data
