import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dipolelets.bands import COARSE, AngularConfig, RadialConfig, band_support_report, build_bandset
from dipolelets.errors import ConfigurationError
from dipolelets.fourier import Spectrum, apply_multiplier, fft3, ifft3
from dipolelets.kernel import SpectralWindow
from dipolelets.simulate import Offset, CorruptionSpec, corrupt, forward_dipole
from dipolelets.transform import (SIGNED_SUM, SUM_OF_SQUARES, Decomposition, analyze,
                                  band_energy_map, synthesize)
from dipolelets.volume import GridSpec, Volume, make_freq_grid


def _bs(shape, J, M):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return build_bandset(make_freq_grid(GridSpec(shape)), RadialConfig(J=J), AngularConfig.with_bands(M))


def test_zero_and_delta(bands16):
    d = analyze(np.zeros((16, 16, 16)), bands16)
    assert all(not b.data.any() for _, b in d.items())
    delta = np.zeros((16, 16, 16))
    delta[0, 0, 0] = 1
    d = analyze(delta, bands16)
    for key, w in bands16.combined.items():
        np.testing.assert_allclose(d[key].data, ifft3(Spectrum(bands16.grid, w.data), real=True).data,
                                   atol=1e-15)


def test_bands_match_apply_multiplier_bitwise(rng, bands16):
    f = rng.standard_normal((16, 16, 16))
    d = analyze(f, bands16)
    for key, w in bands16.combined.items():
        np.testing.assert_array_equal(d[key].data, apply_multiplier(f, w).data)
    np.testing.assert_array_equal(d.coarse.data, apply_multiplier(f, bands16.coarse).data)


@pytest.mark.parametrize("shape", [(16, 16, 16), (15, 17, 16)])
def test_perfect_reconstruction(rng, shape):
    bs = _bs(shape, 2, 2)
    f = rng.standard_normal(shape)
    rec = synthesize(analyze(f, bs)).data
    assert np.linalg.norm(rec - f) / np.linalg.norm(f) < 1e-10


def test_single_band_case(rng):
    bs = _bs((8, 8, 8), 0, 0)
    f = rng.standard_normal((8, 8, 8))
    d = analyze(f, bs)
    assert list(d.bands) == [(0, 0)]
    np.testing.assert_allclose(d.coarse.data + d.bands[(0, 0)].data, f, atol=1e-12)


def test_zeroing_near_cone_bands_is_a_multiplier(rng, bands16):
    f = rng.standard_normal((16, 16, 16))
    d = analyze(f, bands16)
    near = bands16.near_cone_keys()
    bands = {k: (b.like(np.zeros(b.shape)) if k in near else b) for k, b in d.bands.items()}
    got = synthesize(Decomposition(bands, d.coarse, bands16)).data
    w = 1 - sum(bands16.combined[k].data for k in near)
    ref = apply_multiplier(f, SpectralWindow(bands16.grid, w)).data
    assert np.linalg.norm(got - ref) / np.linalg.norm(ref) < 1e-10


def test_synthesize_rejects_missing_bands(rng, bands16):
    d = analyze(rng.standard_normal((16, 16, 16)), bands16)
    bands = dict(d.bands)
    bands.pop((0, 0))
    with pytest.raises(ConfigurationError):
        synthesize(Decomposition(bands, d.coarse, bands16))


def test_grid_mismatch(bands16):
    with pytest.raises(ConfigurationError):
        analyze(np.zeros((16, 16, 12)), bands16)


def test_non_amplification_and_localization(rng, bands32):
    f = rng.standard_normal((32, 32, 32))
    norm = np.linalg.norm(f)
    d = analyze(f, bands32)
    for key, band in d.items():
        assert np.linalg.norm(band.data) <= norm
        spec = np.abs(fft3(band).data)
        outside = bands32.window(key).data < 1e-10
        if outside.any():
            assert spec[outside].max() < 1e-8 * spec.max()


@settings(max_examples=15, deadline=None)
@given(shape=st.tuples(*[st.integers(6, 13)] * 3), J=st.integers(0, 3), M=st.integers(0, 3),
       seed=st.integers(0, 2**16))
def test_reconstruction_property(shape, J, M, seed):
    bs = _bs(shape, J, M)
    assert bs.pu_residual < 1e-10
    f = np.random.default_rng(seed).standard_normal(shape)
    rec = synthesize(analyze(f, bs)).data
    assert np.linalg.norm(rec - f) / np.linalg.norm(f) < 1e-10


@settings(max_examples=10, deadline=None)
@given(a=st.floats(-3, 3), b=st.floats(-3, 3), seed=st.integers(0, 2**16))
def test_linearity(a, b, seed, bands16):
    rng = np.random.default_rng(seed)
    f, g = rng.standard_normal((2, 16, 16, 16))
    lhs = analyze(a * f + b * g, bands16)
    df, dg = analyze(f, bands16), analyze(g, bands16)
    scale = abs(a) * np.linalg.norm(f) + abs(b) * np.linalg.norm(g) + 1e-300
    for key, band in lhs.items():
        assert np.linalg.norm(band.data - (a * df[key].data + b * dg[key].data)) <= 1e-10 * scale


def test_complex_input_stays_complex(rng, bands16):
    f = rng.standard_normal((16, 16, 16)) + 1j * rng.standard_normal((16, 16, 16))
    d = analyze(f, bands16)
    assert d.coarse.kind == "complex"
    np.testing.assert_allclose(synthesize(d).data, f, atol=1e-12)


def test_energy_map_modes(rng, bands16):
    f = rng.standard_normal((16, 16, 16))
    d = analyze(f, bands16)
    every = list(bands16.combined) + [COARSE]
    np.testing.assert_allclose(band_energy_map(d, every, SIGNED_SUM).data, f, atol=1e-12)
    e = band_energy_map(d, [(1, 0)], SUM_OF_SQUARES)
    np.testing.assert_array_equal(e.data, d[(1, 0)].data ** 2)
    assert e.meta["mode"] == SUM_OF_SQUARES
    with pytest.raises(ConfigurationError):
        band_energy_map(d, [], SUM_OF_SQUARES)
    with pytest.raises(ConfigurationError):
        band_energy_map(d, [(7, 0)], SUM_OF_SQUARES)


def test_energy_map_peaks_at_injected_offset(grid32, bands32, head32):
    psi = 20 * forward_dipole(head32.chi33).data
    spot = (20, 9, 13)
    bad = corrupt(psi, CorruptionSpec(None, (Offset(spot, 0, np.pi),)))
    E = band_energy_map(analyze(bad, bands32), bands32.near_cone_keys())
    peak = np.unravel_index(np.argmax(E.data), E.shape)
    assert np.linalg.norm(np.subtract(peak, spot)) <= 2
