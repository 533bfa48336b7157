"""Piecewise-constant susceptibility phantoms, forward phase models, corruption."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError
from .fourier import _inverse, fft3, multiply_spectrum
from .kernel import dipole_kernel, sti_forward_multipliers
from .volume import GridSpec, Volume, as_volume, make_freq_grid

COMPONENTS = ("chi33", "chi13", "chi23")
_AXES = {"x": 0, "y": 1, "z": 2}


@dataclass(frozen=True, eq=False)
class Phantom:
    chi33: Volume
    mask: Volume
    chi13: Volume | None = None
    chi23: Volume | None = None
    description: list = field(default_factory=list)

    @property
    def grid(self):
        return self.chi33.grid


def _coords(shape):
    return np.meshgrid(*(np.arange(n, dtype=float) for n in shape), indexing="ij", sparse=True)


def _check_box(name, lo, hi, shape):
    for ax, (a, b, n) in enumerate(zip(lo, hi, shape)):
        if a < -1e-9 or b > n - 1 + 1e-9:
            raise ConfigurationError(
                f"{name} extends outside the grid along axis {ax}: [{a:g}, {b:g}] not in [0, {n - 1}]"
            )


def _axis(spec):
    ax = spec.get("axis", "z")
    return _AXES[ax] if isinstance(ax, str) else int(ax)


def _shape_mask(spec, shape):
    """Center-in-shape voxelization of one recipe entry."""
    kind = spec.get("shape")
    x = _coords(shape)
    if kind in ("sphere", "ellipsoid"):
        c = np.asarray(spec["center"], dtype=float)
        semi = np.broadcast_to(np.asarray(spec.get("semi_axes", spec.get("radius")), dtype=float), (3,))
        _check_box(kind, c - semi, c + semi, shape)
        return sum(((xi - ci) / ai) ** 2 for xi, ci, ai in zip(x, c, semi)) <= 1.0
    if kind == "cylinder":
        c = np.asarray(spec["center"], dtype=float)
        r = float(spec["radius"])
        ax = _axis(spec)
        half = 0.5 * float(spec.get("length", shape[ax] - 1))
        lo = c - r
        hi = c + r
        lo[ax], hi[ax] = c[ax] - half, c[ax] + half
        _check_box(kind, lo, hi, shape)
        others = [i for i in range(3) if i != ax]
        radial = sum((x[i] - c[i]) ** 2 for i in others) <= r * r
        return radial & (np.abs(x[ax] - c[ax]) <= half)
    if kind == "slab":
        lo = np.asarray(spec["lo"], dtype=float)
        hi = np.asarray(spec["hi"], dtype=float)
        _check_box(kind, lo, hi, shape)
        m = np.ones(shape, dtype=bool)
        for xi, a, b in zip(x, lo, hi):
            m = m & (xi >= a) & (xi <= b)
        return m
    raise ConfigurationError(f"unknown phantom shape {kind!r}")


def default_head_recipe(shape, sti=False):
    """Ellipsoidal ROI, four +/-0.1 ppm spheres and a +0.3 ppm vein along x.

    With ``sti=True`` every susceptibility-carrying shape is repeated on the
    chi13 component with the same value.
    """
    n = np.asarray(shape, dtype=float)
    c = (n - 1) / 2
    recipe = [{"shape": "ellipsoid", "center": c.tolist(), "semi_axes": (0.44 * (n - 1)).tolist(),
               "value": 0.0, "roi": True}]
    r = 0.09 * n.min()
    off = 0.2 * n
    for sx, sy, val in [(-1, -1, 0.1), (1, -1, -0.1), (-1, 1, -0.1), (1, 1, 0.1)]:
        center = c + np.array([sx * off[0], sy * off[1], 0.0])
        recipe.append({"shape": "sphere", "center": center.tolist(), "radius": float(r), "value": val})
    vein_c = c + np.array([0.0, 0.0, 0.18 * n[2]])
    recipe.append({"shape": "cylinder", "center": vein_c.tolist(), "radius": max(1.0, 0.04 * n.min()),
                   "axis": "x", "length": float(0.5 * (n[0] - 1)), "value": 0.3})
    if sti:
        recipe += [dict(s, component="chi13", roi=False) for s in recipe if s["value"] != 0.0]
    return recipe


def make_phantom(grid, recipe=()) -> Phantom:
    """Voxelize a list of shape dictionaries into susceptibility maps (ppm).

    Each entry has ``shape`` (sphere, ellipsoid, cylinder, slab), geometry in
    voxel units, ``value`` in ppm, optional ``component`` (chi33 by default)
    and optional ``roi`` flag. Values of overlapping shapes add. The mask is
    the union of ``roi`` shapes, or the full grid when none is flagged.
    """
    if not isinstance(grid, GridSpec):
        grid = GridSpec(grid)
    if recipe == "default-head":
        recipe = default_head_recipe(grid.shape)
    maps = {c: None for c in COMPONENTS}
    roi = None
    for spec in recipe:
        comp = spec.get("component", "chi33")
        if comp not in COMPONENTS:
            raise ConfigurationError(f"unknown susceptibility component {comp!r}")
        m = _shape_mask(spec, grid.shape)
        value = float(spec.get("value", 0.0))
        if maps[comp] is None:
            maps[comp] = np.zeros(grid.shape)
        maps[comp] = maps[comp] + value * m
        if spec.get("roi"):
            roi = m if roi is None else (roi | m)
    if roi is None:
        roi = np.ones(grid.shape, dtype=bool)
    vol = {c: (None if a is None else Volume(a, grid)) for c, a in maps.items()}
    chi33 = vol["chi33"] if vol["chi33"] is not None else Volume(np.zeros(grid.shape), grid)
    return Phantom(chi33, Volume(roi.astype(float), grid), vol["chi13"], vol["chi23"], list(recipe))


def forward_dipole(chi, dc_value: float = 0.0) -> Volume:
    """Field perturbation ``F^-1(D F chi)`` in the units of ``chi``."""
    chi = as_volume(chi)
    D = dipole_kernel(make_freq_grid(chi.grid), dc_value)
    return multiply_spectrum(fft3(chi), D, real=True)


def forward_sti_z(p: Phantom) -> Volume:
    """Single-orientation (B0 along z) tensor forward model."""
    grid = p.chi33.grid
    m33, m13, m23 = sti_forward_multipliers(make_freq_grid(grid))
    spec = m33.data * fft3(p.chi33).data
    for chi, mult in ((p.chi13, m13), (p.chi23, m23)):
        if chi is None:
            continue
        if chi.grid.shape != grid.shape:
            raise ConfigurationError("tensor components must share one grid")
        spec = spec + mult.data * fft3(chi).data
    return Volume(_inverse(spec, True), grid)


@dataclass(frozen=True)
class Offset:
    center: tuple
    radius: float = 0.0
    value: float = np.pi


@dataclass(frozen=True)
class CorruptionSpec:
    """Phase offsets (radians) added inside balls, then complex noise.

    ``noise_snr`` is ``1/sigma`` per real/imaginary component on a unit
    magnitude signal; ``None`` disables noise.
    """

    noise_snr: float | None = 100.0
    offsets: tuple = ()
    seed: int = 0

    def __post_init__(self):
        offs = tuple(o if isinstance(o, Offset) else Offset(**o) for o in self.offsets)
        object.__setattr__(self, "offsets", offs)
        if self.noise_snr is not None and not self.noise_snr > 0:
            raise ConfigurationError(f"noise_snr must be > 0, got {self.noise_snr}")
        if any(o.radius < 0 for o in offs):
            raise ConfigurationError("offset radius must be >= 0")


def corrupt(psi, spec: CorruptionSpec) -> Volume:
    """Inject offsets, add complex Gaussian noise to ``exp(i psi)``, return the angle."""
    psi = as_volume(psi)
    out = np.array(psi.data, dtype=float)
    x = _coords(psi.grid.shape)
    for o in spec.offsets:
        c = np.asarray(o.center, dtype=float)
        _check_box("offset", c - o.radius, c + o.radius, psi.grid.shape)
        ball = sum((xi - ci) ** 2 for xi, ci in zip(x, c)) <= o.radius**2 + 1e-9
        out = out + o.value * ball
    s = np.exp(1j * out)
    if spec.noise_snr is not None:
        rng = np.random.default_rng(spec.seed)
        sigma = 1.0 / spec.noise_snr
        noise = rng.standard_normal(out.shape) + 1j * rng.standard_normal(out.shape)
        s = s + sigma * noise
    return Volume(np.angle(s), psi.grid)
