import doctest

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import make_pipeline

import dipolelets.estimators as est_mod
from dipolelets.errors import ConfigurationError
from dipolelets.estimators import (BandRegularizedQSM, DipoleletTransform, DipoleletWeights,
                                   TKDReconstructor, WeightedTVReconstructor)
from dipolelets.simulate import forward_dipole, make_phantom
from dipolelets.solvers import TkdConfig, tkd
from dipolelets.volume import GridSpec

ALL = [DipoleletTransform, DipoleletWeights, TKDReconstructor, WeightedTVReconstructor,
       BandRegularizedQSM]


@pytest.fixture(scope="module")
def phase16():
    p = make_phantom(GridSpec((16, 16, 16)), "default-head")
    return forward_dipole(p.chi33).data


def test_doctests():
    assert doctest.testmod(est_mod).failed == 0


@pytest.mark.parametrize("cls", ALL)
def test_params_and_clone(cls):
    est = cls()
    params = est.get_params()
    twin = clone(est)
    assert twin.get_params() == params and twin is not est
    key = next(iter(params))
    est.set_params(**{key: params[key]})


@pytest.mark.parametrize("cls", ALL)
def test_not_fitted(cls, phase16):
    with pytest.raises(NotFittedError):
        cls().transform(phase16)


@pytest.mark.parametrize("cls", ALL)
@pytest.mark.parametrize("bad", [np.zeros((8, 8)), np.zeros((3, 8, 8)), np.full((8, 8, 8), np.nan)])
def test_input_validation(cls, bad):
    with pytest.raises(ConfigurationError):
        cls().fit(bad)


def test_transform_round_trip(rng):
    X = rng.standard_normal((16, 16, 16))
    tr = DipoleletTransform(J=2).fit(X)
    C = tr.transform(X)
    assert C.shape == (tr.n_bands_, 16, 16, 16)
    np.testing.assert_allclose(tr.inverse_transform(C), X, atol=1e-12)
    with pytest.raises(ValueError):
        tr.inverse_transform(C[1:])
    with pytest.raises(ConfigurationError):
        tr.transform(rng.standard_normal((16, 16, 12)))


def test_transform_energy_and_score(rng):
    X = rng.standard_normal((16, 16, 16))
    tr = DipoleletTransform(J=1).fit(X)
    assert tr.energy(X).shape == X.shape and tr.energy(X).min() >= 0
    assert 0 < tr.streak_score(X) <= 1


def test_weights_estimator(phase16):
    ws = DipoleletWeights(J=2, floor=0.2).fit(phase16)
    w = ws.transform(phase16)
    assert w.min() == pytest.approx(0.2) and 0.99 < w.max() <= 1.0
    assert set(np.unique(ws.mask(phase16))) <= {0.0, 1.0}
    with pytest.raises(NotImplementedError):
        ws.inverse_transform(w)


def test_tkd_matches_function(phase16):
    np.testing.assert_array_equal(TKDReconstructor(h=0.2).fit_transform(phase16),
                                  tkd(phase16, TkdConfig(0.2)).data)


def test_tv_estimator_weight_checks(phase16):
    tv = WeightedTVReconstructor(max_iters=3).fit(phase16)
    out = tv.transform(phase16, weight=np.ones_like(phase16))
    assert out.shape == phase16.shape and tv.report_.iterations == 3
    with pytest.raises(ConfigurationError):
        tv.transform(phase16, weight=np.full_like(phase16, 1.5))
    with pytest.raises(ConfigurationError):
        tv.transform(phase16, weight=np.ones((16, 16, 8)))


def test_bandreg_estimator(phase16):
    br = BandRegularizedQSM(J=2, alpha0=1.0, beta0=0.5, max_iters=5).fit(phase16)
    out = br.transform(20 * phase16)
    assert out.shape == phase16.shape
    assert br.report_.extra["projection_leakage_relative"] < 0.1


def test_in_sklearn_pipeline(phase16):
    pipe = make_pipeline(TKDReconstructor())
    assert pipe.fit_transform(phase16).shape == phase16.shape
