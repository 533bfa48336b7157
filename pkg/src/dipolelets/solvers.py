"""Susceptibility reconstruction: TKD, weighted-TV ADMM, band-regularized descent."""
from __future__ import annotations

import json
import logging
import time
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.fft

from .bands import COARSE, BandSet
from .errors import ConfigurationError, DivergenceError
from .fourier import Spectrum, _workers, fft3, ifft3, multiply_spectrum
from .kernel import dipole_kernel
from .transform import analyze, synthesize, Decomposition
from .volume import Volume, as_volume, make_freq_grid

logger = logging.getLogger(__name__)


# --------------------------------------------------------------------------
# configs and report


@dataclass(frozen=True)
class TkdConfig:
    h: float = 0.15

    def __post_init__(self):
        if not 0 < self.h <= 2.0 / 3.0 + 1e-12:
            raise ConfigurationError(f"TKD threshold must lie in (0, 2/3], got {self.h}")


@dataclass(frozen=True)
class TvConfig:
    """``rho=None`` uses ``10 * lam``."""

    lam: float = 1e-3
    rho: float | None = None
    max_iters: int = 200
    tol: float = 1e-4
    isotropic: bool = False
    cg_tol: float = 1e-8
    cg_max_iters: int = 100

    def __post_init__(self):
        for name in ("lam", "tol", "cg_tol"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"{name} must be > 0")
        if self.rho is not None and not self.rho > 0:
            raise ConfigurationError("rho must be > 0")
        if self.max_iters < 1 or self.cg_max_iters < 1:
            raise ConfigurationError("iteration caps must be >= 1")

    @property
    def penalty(self):
        return 10.0 * self.lam if self.rho is None else self.rho


NONLINEAR_EXP = "nonlinear_exp"
POLISH_RELAXATION = 1.8
LINEAR = "linear"


@dataclass(frozen=True)
class BandRegConfig:
    """Band penalties keyed by ``(j, m)`` (or ``"coarse"``).

    ``alphas`` weight the l2 terms; ``betas`` are l-infinity radii, where a
    missing key or ``inf`` means unconstrained.
    """

    alphas: dict = field(default_factory=dict)
    betas: dict = field(default_factory=dict)
    step: float = 1.0
    max_iters: int = 100
    tol: float = 1e-6
    fidelity: str = NONLINEAR_EXP
    max_halvings: int = 30
    feasibility_tol: float = 0.1
    polish_sweeps: int = 300

    def __post_init__(self):
        if not self.step > 0:
            raise ConfigurationError("step must be > 0")
        if self.max_iters < 1 or self.max_halvings < 1:
            raise ConfigurationError("max_iters and max_halvings must be >= 1")
        if self.fidelity not in (NONLINEAR_EXP, LINEAR):
            raise ConfigurationError(f"unknown fidelity {self.fidelity!r}")
        if any(a < 0 for a in self.alphas.values()):
            raise ConfigurationError("alphas must be >= 0")
        if any(b < 0 for b in self.betas.values()):
            raise ConfigurationError("betas must be >= 0")

    def check_bands(self, bs: BandSet):
        known = set(bs.combined) | {COARSE}
        bad = [k for k in list(self.alphas) + list(self.betas) if _key(k) not in known]
        if bad:
            raise ConfigurationError(f"regularized bands not in the band set: {bad}")


def _key(k):
    return COARSE if k == COARSE else tuple(k)


def dyadic_band_weights(bs: BandSet, alpha0=0.0, beta0=np.inf, m_max=0):
    """``alpha_{j,m} = alpha0 2^-j`` and ``beta_{j,m} = beta0 2^-j`` on near-cone bands."""
    keys = bs.near_cone_keys(m_max)
    alphas = {k: alpha0 * 2.0 ** -k[0] for k in keys} if alpha0 else {}
    betas = {k: beta0 * 2.0 ** -k[0] for k in keys} if np.isfinite(beta0) else {}
    return alphas, betas


@dataclass
class SolverReport:
    iterations: int = 0
    objective_trace: list = field(default_factory=list)
    final_residual: float = float("nan")
    timing: float = 0.0
    converged: bool = False
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        return json.loads(json.dumps(asdict(self), default=_jsonable))

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)


def _jsonable(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    return str(o)


# --------------------------------------------------------------------------
# operators on real volumes (half-spectrum FFTs)


class _Ops:
    def __init__(self, grid, dc_value=0.0):
        self.shape = tuple(grid.shape)
        self.h = np.asarray(grid.voxel_size, dtype=float)
        self.nz = self.shape[2]
        half = slice(0, self.nz // 2 + 1)
        self.D = dipole_kernel(make_freq_grid(grid), dc_value).data[:, :, half]
        fg = make_freq_grid(grid)
        lap = np.zeros(self.D.shape)
        for ax, (k, h) in enumerate(zip(fg.mesh(), self.h)):
            k = k[:, :, half] if ax == 2 else k
            lap = lap + (4.0 * np.sin(np.pi * k * h) ** 2) / h**2
        self.GtG = np.broadcast_to(lap, self.D.shape)
        self.w = _workers()

    def fft(self, x):
        return scipy.fft.rfftn(x, workers=self.w)

    def ifft(self, X):
        return scipy.fft.irfftn(X, s=self.shape, workers=self.w)

    def mult(self, x, m):
        return self.ifft(self.fft(x) * m)

    def A(self, x):
        return self.mult(x, self.D)

    def grad(self, x):
        return np.stack([(np.roll(x, -1, axis=ax) - x) / self.h[ax] for ax in range(3)])

    def div_adj(self, g):
        """Adjoint of :meth:`grad` (negative divergence)."""
        return sum((np.roll(g[ax], 1, axis=ax) - g[ax]) / self.h[ax] for ax in range(3))


# --------------------------------------------------------------------------
# TKD


def tkd(psi, cfg: TkdConfig | None = None) -> Volume:
    """Truncated k-space division: ``psi_hat / D`` where ``|D| >= h``, else 0."""
    cfg = cfg or TkdConfig()
    psi = as_volume(psi)
    ops = _Ops(psi.grid)
    keep = np.abs(ops.D) >= cfg.h
    inv = np.where(keep, 1.0 / np.where(keep, ops.D, 1.0), 0.0)
    inv[0, 0, 0] = 0.0
    return Volume(ops.mult(psi.data, inv), psi.grid)


# --------------------------------------------------------------------------
# weighted TV


def _soft(v, t, isotropic):
    if isotropic:
        mag = np.sqrt(np.sum(v**2, axis=0))
        return v * np.maximum(1.0 - t / np.maximum(mag, 1e-300), 0.0)
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def tv_objective(chi, psi, w, lam, ops=None, isotropic=False):
    chi, psi = np.asarray(chi), np.asarray(psi)
    ops = ops or _Ops(as_volume(chi).grid)
    r = np.asarray(w) * (ops.A(chi) - psi)
    g = ops.grad(chi)
    tv = np.sum(np.sqrt(np.sum(g**2, axis=0))) if isotropic else np.sum(np.abs(g))
    return float(np.sum(r**2) + lam * tv)


def _pcg(apply, b, x0, precond, tol, maxiter):
    x = x0.copy()
    r = b - apply(x)
    bnorm = np.linalg.norm(b)
    if bnorm == 0:
        return np.zeros_like(b), 0
    z = precond(r)
    p = z.copy()
    rz = np.vdot(r, z).real
    for it in range(1, maxiter + 1):
        Ap = apply(p)
        pAp = np.vdot(p, Ap).real
        if pAp <= 0:
            break
        a = rz / pAp
        x += a * p
        r -= a * Ap
        if np.linalg.norm(r) <= tol * bnorm:
            return x, it
        z = precond(r)
        rz_new = np.vdot(r, z).real
        p = z + (rz_new / rz) * p
        rz = rz_new
    return x, maxiter


def admm_weighted_tv(psi, w=None, cfg: TvConfig | None = None, x0=None):
    """Minimize ``||w (A chi - psi)||^2 + lam ||grad chi||_1`` by ADMM on ``z = grad chi``.

    ``A`` is the dipole convolution and ``grad`` periodic forward differences.
    The chi-step is solved exactly in Fourier space when ``w`` is constant and
    by preconditioned CG otherwise. Returns ``(chi, SolverReport)``.
    """
    cfg = cfg or TvConfig()
    psi = as_volume(psi)
    ops = _Ops(psi.grid)
    y = psi.data
    wd = np.ones(psi.grid.shape) if w is None else np.asarray(as_volume(w).data, dtype=float)
    if wd.shape != y.shape:
        raise ConfigurationError("weight and phase grids differ")
    if wd.min() < 0 or wd.max() > 1 + 1e-12:
        raise ConfigurationError("weights must lie in [0, 1]")
    lam, rho = cfg.lam, cfg.penalty
    w2 = wd**2
    const_w = np.ptp(wd) == 0
    D2 = ops.D**2
    denom = 2.0 * float(w2.mean()) * D2 + rho * ops.GtG
    inv_denom = np.where(denom > 0, 1.0 / np.where(denom > 0, denom, 1.0), 0.0)
    rhs_data = 2.0 * ops.A(w2 * y)

    def normal(x):
        return 2.0 * ops.A(w2 * ops.A(x)) + rho * ops.div_adj(ops.grad(x))

    def precond(r):
        return ops.mult(r, inv_denom)

    chi = np.zeros(y.shape) if x0 is None else np.array(as_volume(x0).data, dtype=float)
    z = ops.grad(chi)
    u = np.zeros_like(z)
    report = SolverReport()
    t0 = time.perf_counter()
    cg_iters = []
    for k in range(1, cfg.max_iters + 1):
        rhs = rhs_data + rho * ops.div_adj(z - u)
        if const_w:
            new = ops.mult(rhs, inv_denom)
        else:
            new, it = _pcg(normal, rhs, chi, precond, cfg.cg_tol, cfg.cg_max_iters)
            cg_iters.append(it)
        g = ops.grad(new)
        z = _soft(g + u, lam / rho, cfg.isotropic)
        u = u + g - z
        change = np.linalg.norm(new - chi) / max(np.linalg.norm(new), 1e-300)
        chi = new
        report.objective_trace.append(tv_objective(chi, y, wd, lam, ops, cfg.isotropic))
        report.iterations = k
        if change < cfg.tol:
            report.converged = True
            break
    report.final_residual = float(np.linalg.norm(wd * (ops.A(chi) - y)) / max(np.linalg.norm(wd * y), 1e-300))
    report.timing = time.perf_counter() - t0
    report.extra.update(lam=lam, rho=rho, primal_residual=float(np.linalg.norm(ops.grad(chi) - z)),
                        cg_iterations=cg_iters)
    if not report.converged:
        logger.info("weighted TV stopped at max_iters=%d without meeting tol", cfg.max_iters)
    return Volume(chi, psi.grid), report


# --------------------------------------------------------------------------
# band-regularized projected descent


class BandObjective:
    """Smooth part of the band-regularized objective and its gradient.

    ``fidelity="nonlinear_exp"``: ``sum w^2 |exp(i A chi) - exp(i psi)|^2``
    which equals ``sum w^2 (2 - 2 cos(A chi - psi))``.
    """

    def __init__(self, psi, w, bs: BandSet, alphas, fidelity=NONLINEAR_EXP):
        psi = as_volume(psi)
        self.grid = psi.grid
        self.ops = _Ops(psi.grid)
        self.psi = psi.data
        self.w2 = np.ones(psi.grid.shape) if w is None else np.asarray(as_volume(w).data, float) ** 2
        self.fidelity = fidelity
        self.bs = bs
        half = slice(0, self.ops.nz // 2 + 1)
        self.alpha_mult = None
        self.alphas = {_key(k): float(a) for k, a in alphas.items() if a}
        if self.alphas:
            total = sum(a * bs.window(k).data ** 2 for k, a in self.alphas.items())
            self.alpha_mult = total[:, :, half]

    def value(self, chi):
        r = self.ops.A(chi) - self.psi
        if self.fidelity == NONLINEAR_EXP:
            data = np.sum(self.w2 * (2.0 - 2.0 * np.cos(r)))
        else:
            data = np.sum(self.w2 * r**2)
        reg = 0.0
        if self.alpha_mult is not None:
            # ||D_jm chi||^2 summed with alpha/2, evaluated via Parseval on the half spectrum
            X = self.ops.fft(chi)
            wts = np.full(X.shape, 2.0)
            wts[:, :, 0] = 1.0
            if self.ops.nz % 2 == 0:
                wts[:, :, -1] = 1.0
            reg = 0.5 * np.sum(wts * self.alpha_mult * np.abs(X) ** 2) / chi.size
        return float(data + reg)

    def gradient(self, chi):
        r = self.ops.A(chi) - self.psi
        if self.fidelity == NONLINEAR_EXP:
            g = 2.0 * self.ops.A(self.w2 * np.sin(r))
        else:
            g = 2.0 * self.ops.A(self.w2 * r)
        if self.alpha_mult is not None:
            g = g + self.ops.mult(chi, self.alpha_mult)
        return g


def _dual_frame(bs: BandSet):
    """``sum_b W_b^2`` over all bands (bounded below by ``1/n_bands``)."""
    return bs.coarse.data**2 + sum(w.data**2 for w in bs.combined.values())


def project_bands(chi, bs: BandSet, betas, sweeps=1, frame=None):
    """Approximate projection onto ``{chi : |D_b chi| <= beta_b}``.

    One sweep clips every constrained band and maps the coefficients back
    with the canonical dual frame, ``F^-1(sum_b W_b c_b_hat / sum_b W_b^2)``,
    i.e. the least-squares preimage of the clipped coefficients. Repeated
    sweeps alternate between the coefficient box and the analysis range.
    """
    betas = {_key(k): float(b) for k, b in betas.items() if np.isfinite(b)}
    y = np.array(chi, dtype=float)
    if not betas:
        return y
    frame = _dual_frame(bs) if frame is None else frame
    windows = dict(bs.combined)
    windows[COARSE] = bs.coarse
    for _ in range(sweeps):
        spec = fft3(Volume(y, bs.grid))
        acc = np.zeros_like(spec.data)
        for k, w in windows.items():
            if k in betas:
                c = multiply_spectrum(spec, w, real=True).data
                acc += w.data * fft3(Volume(np.clip(c, -betas[k], betas[k]), bs.grid)).data
            else:
                acc += w.data**2 * spec.data
        y = ifft3(Spectrum(bs.grid, acc / frame), real=True).data
    return y


def projection_leakage(chi, bs: BandSet, betas):
    """Return ``(tau, tau_rel)``: worst ``|D_b chi| - beta_b``, absolute and over ``beta_b``."""
    d = analyze(Volume(chi, bs.grid), bs)
    tau, rel = 0.0, 0.0
    for k, b in betas.items():
        if not np.isfinite(b):
            continue
        excess = float(np.abs(d[_key(k)].data).max() - b)
        tau = max(tau, excess)
        if b > 0:
            rel = max(rel, excess / b)
        elif excess > 0:
            rel = np.inf
    return tau, rel


def band_regularized_descent(psi, w, bs: BandSet, cfg: BandRegConfig | None = None, x0=None,
                             callback=None):
    """Projected gradient descent on the nonlinear phase fidelity plus band penalties.

    Each step is ``chi <- P(chi - step * grad)`` where ``P`` is
    :func:`project_bands`. The step is halved whenever the smooth objective
    would increase. After the last step ``P`` is repeated (up to
    ``cfg.polish_sweeps`` times) until the relative band excess is below
    ``cfg.feasibility_tol``. ``callback(k, chi)`` runs after every iteration.
    """
    cfg = cfg or BandRegConfig()
    cfg.check_bands(bs)
    psi = as_volume(psi)
    obj = BandObjective(psi, w, bs, cfg.alphas, cfg.fidelity)
    betas = {_key(k): float(b) for k, b in cfg.betas.items() if np.isfinite(b)}
    frame = _dual_frame(bs) if betas else None

    def project(x, sweeps=1):
        return project_bands(x, bs, betas, sweeps, frame) if betas else x

    chi = np.zeros(psi.grid.shape) if x0 is None else np.array(as_volume(x0).data, dtype=float)
    chi = project(chi)
    f = f0 = obj.value(chi)
    step = cfg.step
    report = SolverReport(objective_trace=[f])
    grad_norms = []
    t0 = time.perf_counter()
    for k in range(1, cfg.max_iters + 1):
        g = obj.gradient(chi)
        grad_norms.append(float(np.linalg.norm(g)))
        for _ in range(cfg.max_halvings):
            trial = project(chi - step * g)
            f_trial = obj.value(trial)
            if f_trial <= f:
                break
            step *= 0.5
        if not np.isfinite(f_trial) or (f0 > 0 and f_trial > 10.0 * f0):
            raise DivergenceError(f"objective grew from {f0:.4g} to {f_trial:.4g} at iteration {k}")
        change = np.linalg.norm(trial - chi) / max(np.linalg.norm(trial), 1e-300)
        chi, f = trial, f_trial
        report.objective_trace.append(f)
        report.iterations = k
        if callback is not None:
            callback(k, chi)
        if change < cfg.tol:
            report.converged = True
            break
    tau, tau_rel = projection_leakage(chi, bs, betas) if betas else (0.0, 0.0)
    sweeps = 0
    while betas and tau_rel > cfg.feasibility_tol and sweeps < cfg.polish_sweeps:
        for _ in range(10):
            # over-relaxed alternating projections converge faster near the boundary
            chi = chi + POLISH_RELAXATION * (project(chi) - chi)
        sweeps += 10
        tau, tau_rel = projection_leakage(chi, bs, betas)
    r = obj.ops.A(chi) - obj.psi
    report.final_residual = float(np.sqrt(np.sum(obj.w2 * (2 - 2 * np.cos(r)))) /
                                  max(np.sqrt(np.sum(obj.w2)), 1e-300))
    report.timing = time.perf_counter() - t0
    report.extra.update(grad_norms=grad_norms, final_step=step, polish_sweeps=sweeps,
                        final_objective=obj.value(chi), projection_leakage=tau,
                        projection_leakage_relative=tau_rel)
    return Volume(chi, psi.grid), report
