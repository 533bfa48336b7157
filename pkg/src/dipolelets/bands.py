"""Radial starlet filters, cone-proximity angular windows and their products.

Radial filters follow the dyadic rule ``Phi_{j+1}(r) = Phi_j(2r)`` with
``Phi_0 = 1``, so that ``Phi_{J+1} + sum_j (Phi_j - Phi_{j+1}) = 1`` holds by
telescoping. Angular windows are differences of smooth discs in ``|D|``:
``A_m = eta((delta_m - |D|)/eps_m)``, ``W_m = A_m - A_{m-1}`` with
``A_{-1} = 0`` and ``A_M = 1``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erf

from .errors import ConfigurationError, ConstructionError
from .kernel import SpectralWindow, cone_distance_proxy
from .volume import FreqGrid, GridSpec, make_freq_grid

COARSE = "coarse"

# slope of the quintic smoothstep at t = 0, matched by the erf transition
_SMOOTHSTEP_SLOPE = 15.0 / 16.0


def eta_smoothstep(t):
    """Quintic smoothstep on [-1, 1]: exactly 0 below -1, exactly 1 above 1."""
    s = np.clip((np.asarray(t, dtype=float) + 1.0) / 2.0, 0.0, 1.0)
    return s * s * s * (s * (6.0 * s - 15.0) + 10.0)


def eta_erf(t):
    k = _SMOOTHSTEP_SLOPE * np.sqrt(np.pi)
    return 0.5 * (1.0 + erf(k * np.asarray(t, dtype=float)))


ETAS = {"smoothstep": eta_smoothstep, "erf": eta_erf}


def _raised_cosine(rho, cutoff):
    # 1 below cutoff/2, 0 above cutoff, cos^2 in between
    lo = 0.5 * cutoff
    s = np.clip((rho - lo) / (cutoff - lo), 0.0, 1.0)
    return np.cos(0.5 * np.pi * s) ** 2


def _gaussian(rho, cutoff):
    # half height at 3/4 of the cutoff, like the raised cosine
    a = np.log(2.0) / (0.75 * cutoff) ** 2
    return np.exp(-a * rho**2)


PROFILES = {"raised_cosine": _raised_cosine, "gaussian": _gaussian}


@dataclass(frozen=True)
class RadialConfig:
    """Radial scales ``j = 0..J`` plus a coarse band ``J+1``.

    ``base_cutoff`` is where ``Phi_1`` reaches zero (raised cosine), in cycles
    per voxel of the finest voxel dimension.
    """

    J: int = 3
    profile: str = "raised_cosine"
    base_cutoff: float = 0.5

    def __post_init__(self):
        if int(self.J) != self.J or self.J < 0:
            raise ConfigurationError(f"J must be a non-negative integer, got {self.J}")
        if self.profile not in PROFILES:
            raise ConfigurationError(f"unknown radial profile {self.profile!r}")
        if not 0 < self.base_cutoff <= 0.5:
            raise ConfigurationError(f"base_cutoff must lie in (0, 0.5], got {self.base_cutoff}")

    def phi(self, j, rho):
        """Low-pass ``Phi_j`` evaluated at normalized radius ``rho``."""
        if j == 0:
            return np.ones_like(np.asarray(rho, dtype=float))
        return PROFILES[self.profile](np.asarray(rho, dtype=float) * 2.0 ** (j - 1), self.base_cutoff)


def default_deltas(M):
    if M == 0:
        return ()
    if M <= 3:
        return tuple(0.05 + 0.1 * m for m in range(M))
    return tuple(np.linspace(0.05, 0.3, M))


@dataclass(frozen=True)
class AngularConfig:
    """Thresholds ``delta_0 < ... < delta_{M-1} <= 1/3`` and widths ``eps_m``.

    ``M = len(deltas)`` windows bound ``M + 1`` angular bands; ``M = 0`` gives
    a single window identically equal to one.
    """

    deltas: tuple = (0.05, 0.15)
    epsilons: tuple = (0.02, 0.02)
    eta: str = "smoothstep"

    def __post_init__(self):
        deltas = tuple(float(d) for d in self.deltas)
        eps = self.epsilons
        if np.isscalar(eps):
            eps = (float(eps),) * len(deltas)
        eps = tuple(float(e) for e in eps)
        object.__setattr__(self, "deltas", deltas)
        object.__setattr__(self, "epsilons", eps)
        if len(eps) != len(deltas):
            raise ConfigurationError("need one transition width per threshold")
        if deltas and deltas[0] <= 0:
            raise ConfigurationError("delta_0 must be > 0 (|D| <= delta_0 is the near-cone disc)")
        if any(b <= a for a, b in zip(deltas, deltas[1:])):
            raise ConfigurationError(f"thresholds must be strictly increasing, got {deltas}")
        if deltas and deltas[-1] > 1.0 / 3.0 + 1e-12:
            raise ConfigurationError(f"thresholds must be <= 1/3, got {deltas}")
        if any(e <= 0 for e in eps):
            raise ConfigurationError("transition widths must be > 0")
        if self.eta not in ETAS:
            raise ConfigurationError(f"unknown transition function {self.eta!r}")

    @classmethod
    def with_bands(cls, M, epsilon=0.02, eta="smoothstep"):
        """Default thresholds for ``M`` cuts (``M + 1`` angular windows)."""
        return cls(default_deltas(M), (epsilon,) * M, eta)

    @property
    def M(self):
        return len(self.deltas)

    def tube(self, m):
        """``(lo, hi)`` bounds of ``|D|`` outside which window ``m`` vanishes."""
        lo = -np.inf if m == 0 else self.deltas[m - 1] - self.epsilons[m - 1]
        hi = np.inf if m == self.M else self.deltas[m] + self.epsilons[m]
        return lo, hi


def _rho(fg: FreqGrid):
    return fg.radius() * min(fg.grid.voxel_size)


def radial_filters(fg, cfg: RadialConfig):
    """Return ``([Psi_0, ..., Psi_J], Phi_{J+1}, notes)``.

    ``notes`` lists construction warnings (transitions narrower than a bin).
    """
    fg = fg if isinstance(fg, FreqGrid) else make_freq_grid(fg)
    rho = _rho(fg)
    notes = []
    spacing = max(min(fg.grid.voxel_size) / (n * h) for n, h in zip(fg.grid.shape, fg.grid.voxel_size))
    width = 0.5 * cfg.base_cutoff * 2.0 ** (-cfg.J)
    if width < spacing:
        msg = (f"coarsest radial transition ({width:.4g} cycles/voxel) is narrower "
               f"than one frequency bin ({spacing:.4g}); reduce J")
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
        notes.append(msg)
    phis = [cfg.phi(j, rho) for j in range(cfg.J + 2)]
    psis = [SpectralWindow(fg.grid, phis[j] - phis[j + 1]) for j in range(cfg.J + 1)]
    return psis, SpectralWindow(fg.grid, phis[-1]), notes


def angular_windows(fg, cfg: AngularConfig, absD: SpectralWindow | None = None):
    """Normalized angular windows ``W_0..W_M``; ``W_0`` hugs the magic cone.

    ``fg`` may be ``None`` when ``absD`` is given.
    """
    if absD is None:
        absD = cone_distance_proxy(fg if isinstance(fg, FreqGrid) else make_freq_grid(fg))
    grid = absD.grid
    d = absD.data
    eta = ETAS[cfg.eta]
    discs = [np.zeros_like(d)]
    discs += [eta((delta - d) / eps) for delta, eps in zip(cfg.deltas, cfg.epsilons)]
    discs.append(np.ones_like(d))
    raw = [np.clip(b - a, 0.0, None) for a, b in zip(discs, discs[1:])]
    total = np.sum(raw, axis=0)
    if total.min() < 1e-8:
        raise ConstructionError(
            f"angular windows leave a gap (min raw sum {total.min():.3e}); "
            "check that thresholds and widths are compatible"
        )
    return [SpectralWindow(grid, w / total) for w in raw]


@dataclass(frozen=True, eq=False)
class BandSet:
    """Combined radial-angular windows plus the unsplit coarse band."""

    grid: GridSpec
    radial: list
    coarse: SpectralWindow
    angular: list
    combined: dict
    radial_config: RadialConfig
    angular_configs: tuple
    pu_residual: float
    notes: list = field(default_factory=list)

    @property
    def J(self):
        return self.radial_config.J

    @property
    def keys(self):
        """Detail band indices ``(j, m)`` in scale-major order."""
        return list(self.combined)

    def near_cone_keys(self, m_max=0):
        """Detail bands with angular index ``m <= m_max`` (default: the cone band only)."""
        return [(j, m) for (j, m) in self.combined if m <= m_max and self.angular_configs[j].M > 0]

    def window(self, key) -> SpectralWindow:
        return self.coarse if key == COARSE else self.combined[tuple(key)]

    def stack(self):
        """All windows as an array ``(n_bands + 1, nx, ny, nz)``, coarse last."""
        return np.stack([w.data for w in self.combined.values()] + [self.coarse.data])


def build_bandset(fg, rcfg: RadialConfig | None = None, acfg_per_scale=None, dc_value=0.0) -> BandSet:
    """Build every ``W_{j,m} = Psi_j W_m^(j)`` and certify the partition of unity.

    ``acfg_per_scale`` is a single :class:`AngularConfig` (used at every scale)
    or one per detail scale.
    """
    fg = fg if isinstance(fg, FreqGrid) else make_freq_grid(fg)
    rcfg = rcfg or RadialConfig()
    if acfg_per_scale is None:
        acfg_per_scale = AngularConfig()
    if isinstance(acfg_per_scale, AngularConfig):
        acfg_per_scale = [acfg_per_scale] * (rcfg.J + 1)
    acfg_per_scale = tuple(acfg_per_scale)
    if len(acfg_per_scale) != rcfg.J + 1:
        raise ConfigurationError(
            f"need {rcfg.J + 1} angular configs (one per detail scale), got {len(acfg_per_scale)}"
        )
    absD = cone_distance_proxy(fg, dc_value)
    psis, coarse, notes = radial_filters(fg, rcfg)
    cache = {}
    angular, combined = [], {}
    for j, (psi, acfg) in enumerate(zip(psis, acfg_per_scale)):
        if acfg not in cache:
            cache[acfg] = angular_windows(fg, acfg, absD)
        angular.append(cache[acfg])
        for m, w in enumerate(cache[acfg]):
            combined[(j, m)] = SpectralWindow(fg.grid, psi.data * w.data)
    total = coarse.data + np.sum([w.data for w in combined.values()], axis=0)
    residual = float(np.abs(1.0 - total).max())
    return BandSet(fg.grid, psis, coarse, angular, combined, rcfg, acfg_per_scale, residual, notes)


@dataclass
class SupportReport:
    leakage: dict
    tolerance: float = 1e-8

    @property
    def max_leakage(self):
        return max(self.leakage.values(), default=0.0)

    @property
    def passed(self):
        return self.max_leakage < self.tolerance


def band_support_report(bs: BandSet, absD: SpectralWindow | None = None, tolerance=1e-8) -> SupportReport:
    """Largest value each combined window takes outside its ``|D|`` tube."""
    if absD is None:
        absD = cone_distance_proxy(bs.grid)
    d = absD.data
    leak = {}
    for (j, m), w in bs.combined.items():
        acfg = bs.angular_configs[j]
        lo, hi = acfg.tube(m)
        outside = (d < lo - 1e-12) | (d > hi + 1e-12)
        leak[(j, m)] = float(w.data[outside].max()) if outside.any() else 0.0
    return SupportReport(leak, tolerance)
