import numpy as np
import pytest

from dipolelets.errors import ConfigurationError
from dipolelets.volume import GridSpec, Volume, make_freq_grid, volume_stats


@pytest.mark.parametrize("n, h, expected", [
    (4, 1.0, [0, 0.25, -0.5, -0.25]),
    (8, 2.0, [0, 1 / 16, 2 / 16, 3 / 16, -4 / 16, -3 / 16, -2 / 16, -1 / 16]),
    (5, 1.0, [0, 0.2, 0.4, -0.4, -0.2]),
])
def test_freq_layout(n, h, expected):
    fg = make_freq_grid(GridSpec((n, 6, 7), (h, 1.0, 1.0)))
    np.testing.assert_allclose(fg.coords[0], expected, rtol=0, atol=1e-15)


@pytest.mark.parametrize("shape", [(4, 5, 6), (8, 9, 4), (7, 7, 7)])
def test_freq_matches_fftfreq_and_antisymmetry(shape):
    fg = make_freq_grid(GridSpec(shape, (1.0, 0.5, 2.0)))
    for c, n, h in zip(fg.coords, shape, (1.0, 0.5, 2.0)):
        assert c[0] == 0
        np.testing.assert_allclose(c, np.fft.fftfreq(n, h), atol=1e-15)
        k = np.arange(1, n)
        keep = k != n / 2
        np.testing.assert_allclose(c[k[keep]], -c[(n - k[keep]) % n], atol=1e-15)


@pytest.mark.parametrize("shape", [(3, 8, 8), (8, 8), (4, 4, 2)])
def test_grid_rejects_small_or_bad_shapes(shape):
    with pytest.raises(ConfigurationError):
        GridSpec(shape)


def test_grid_rejects_nonpositive_voxel():
    with pytest.raises(ConfigurationError):
        GridSpec((4, 4, 4), (1.0, 0.0, 1.0))


def test_volume_is_read_only_and_finite():
    v = Volume(np.zeros((4, 4, 4)))
    with pytest.raises(ValueError):
        v.data[0, 0, 0] = 1
    with pytest.raises(ConfigurationError):
        Volume(np.full((4, 4, 4), np.nan))


def test_stats_examples():
    assert tuple(volume_stats(Volume(np.zeros((4, 4, 4))))) == (0, 0, 0)
    a = np.zeros((2, 2, 2))
    a[0, 0, 0] = 3
    s = volume_stats(a)
    assert (s.l2_norm, s.linf_norm, s.mean) == (3, 3, 3 / 8)
    assert volume_stats(np.full((4, 4, 4), -2.5)).linf_norm == 2.5


def test_stats_l2_matches_loop(rng):
    a = rng.standard_normal((5, 4, 6)) + 1j * rng.standard_normal((5, 4, 6))
    total = 0.0
    for x in a.ravel():
        total += abs(x) ** 2
    assert volume_stats(a).l2_norm == pytest.approx(np.sqrt(total), rel=1e-13)
