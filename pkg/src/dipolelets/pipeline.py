"""End-to-end experiment: phantom -> forward -> corrupt -> decompose -> weights
-> solve -> metrics -> renders, with every artifact recorded in a manifest."""
from __future__ import annotations

import hashlib
import json
import logging
from pathlib import Path

import numpy as np

from . import config as C
from .bands import COARSE, build_bandset
from .errors import DipoleletError
from .io import render_montage, write_volume
from .metrics import evaluate
from .simulate import corrupt, forward_dipole, forward_sti_z, make_phantom, default_head_recipe
from .solvers import admm_weighted_tv, band_regularized_descent, tkd
from .transform import analyze
from .volume import GridSpec, Volume, make_freq_grid
from .weights import make_mask, make_weight

logger = logging.getLogger(__name__)


def library_version():
    from . import __version__

    return __version__


class StageError(DipoleletError):
    """Wraps a failure with the pipeline stage it happened in."""

    def __init__(self, stage, exc):
        super().__init__(f"stage {stage!r} failed: {exc}")
        self.stage = stage
        self.code = getattr(exc, "code", "error")
        self.__cause__ = exc


class _Stage:
    def __init__(self, name):
        self.name = name

    def __enter__(self):
        logger.info("stage %s", self.name)

    def __exit__(self, etype, exc, tb):
        if exc is not None and not isinstance(exc, StageError) and isinstance(exc, Exception):
            raise StageError(self.name, exc) from exc
        return False


class Artifacts:
    """Tracks every file written into the run directory."""

    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.entries = []

    def path(self, rel):
        p = self.root / rel
        p.parent.mkdir(parents=True, exist_ok=True)
        return p

    def add(self, p, kind):
        p = Path(p)
        digest = hashlib.sha256(p.read_bytes()).hexdigest()
        self.entries.append({"path": p.relative_to(self.root).as_posix(), "kind": kind, "sha256": digest})
        return p

    def volume(self, rel, v, kind="volume"):
        return self.add(write_volume(v, self.path(rel)), kind)

    def json(self, rel, obj, kind="json"):
        p = self.path(rel)
        p.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_plain) + "\n")
        return self.add(p, kind)


def _plain(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, (tuple, set)):
        return list(o)
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def build_phantom(cfg):
    grid = GridSpec(tuple(cfg["grid"]["shape"]), tuple(cfg["grid"]["voxel_size"]))
    recipe = cfg["phantom"]["recipe"]
    if recipe == "default-head":
        recipe = default_head_recipe(grid.shape, sti=cfg["phantom"]["sti"] or cfg["forward"]["model"] == "sti")
    return make_phantom(grid, recipe)


def forward(cfg, phantom):
    """Phase in radians: ``phase_scale`` (rad/ppm) times the simulated field."""
    f = cfg["forward"]
    if f["model"] == "sti":
        field = forward_sti_z(phantom)
    else:
        field = forward_dipole(phantom.chi33, f["dc_value"])
    return Volume(f["phase_scale"] * field.data, field.grid)


def build_bands(cfg, grid):
    return build_bandset(make_freq_grid(grid), C.radial_config(cfg), C.angular_configs(cfg),
                         cfg["forward"]["dc_value"])


def reconstruct(cfg, method, psi, weight, bs):
    """Run one solver; returns ``(chi_ppm, report_or_None)``."""
    scale = cfg["forward"]["phase_scale"]
    if method == "tkd":
        chi, report = tkd(psi, C.tkd_config(cfg)), None
    elif method == "tv":
        chi, report = admm_weighted_tv(psi, weight, C.tv_config(cfg))
    elif method == "tv_unweighted":
        chi, report = admm_weighted_tv(psi, None, C.tv_config(cfg))
    elif method == "bandreg":
        w = weight if cfg["solver"]["bandreg"]["use_weights"] else None
        chi, report = band_regularized_descent(psi, w, bs, C.bandreg_config(cfg, bs))
    else:
        raise C.ConfigurationError(f"unknown method {method!r}")
    return Volume(chi.data / scale, chi.grid), report


def _band_name(key):
    return "coarse" if key == COARSE else f"band_j{key[0]}_m{key[1]}"


def run_pipeline(cfg, output=None):
    """Run every stage and write the run directory; returns the manifest dict."""
    cfg = C.resolve(cfg)
    art = Artifacts(output or cfg["output"])
    art.json("config.json", cfg, "config")

    with _Stage("phantom"):
        ph = build_phantom(cfg)
        art.volume("phantom/chi33.dpv", ph.chi33)
        art.volume("phantom/mask.dpv", ph.mask)
        for name in ("chi13", "chi23"):
            if getattr(ph, name) is not None:
                art.volume(f"phantom/{name}.dpv", getattr(ph, name))
    with _Stage("forward"):
        psi_clean = forward(cfg, ph)
        art.volume("phase/clean.dpv", psi_clean)
    with _Stage("corrupt"):
        psi = corrupt(psi_clean, C.corruption_spec(cfg, ph.grid.shape))
        art.volume("phase/corrupted.dpv", psi)
    with _Stage("decompose"):
        bs = build_bands(cfg, ph.grid)
        dec = analyze(psi, bs)
        bands_manifest = []
        for key, band in dec.items():
            p = art.volume(f"bands/{_band_name(key)}.dpv", band, "band")
            bands_manifest.append({"band": key if key == COARSE else list(key), "file": p.name})
        art.json("bands/manifest.json", {"bands": bands_manifest, "pu_residual": bs.pu_residual,
                                         "radial": cfg["bands"]["radial"],
                                         "angular": cfg["bands"]["angular"], "notes": bs.notes},
                 "band_manifest")
    with _Stage("weights"):
        wcfg = C.weight_config(cfg)
        weight = make_weight(dec, wcfg)
        art.volume("weights/weight.dpv", weight)
        mask = make_mask(weight, wcfg.threshold)
        art.volume("weights/mask.dpv", mask)
    recon = {}
    with _Stage("recon"):
        for method in cfg["solver"]["methods"]:
            chi, report = reconstruct(cfg, method, psi, weight, bs)
            recon[method] = chi
            art.volume(f"recon/{method}.dpv", chi)
            if report is not None:
                art.json(f"recon/{method}_report.json", report.to_dict(), "solver_report")
    with _Stage("metrics"):
        m = cfg["metrics"]
        metrics = {}
        for method, chi in recon.items():
            metrics[method] = evaluate(chi, ph.chi33, ph.mask, bs, **m).to_dict()
        art.json("metrics.json", metrics, "metrics")
    with _Stage("render"):
        r = cfg["render"]
        axis = {"x": 0, "y": 1, "z": 2}[r["axis"]]
        index = r["index"] if r["index"] is not None else ph.grid.shape[axis] // 2
        lim = float(np.abs(psi.data).max()) or 1.0
        for j in range(bs.J + 1):
            row = [dec[(j, m_)] for (jj, m_) in bs.combined if jj == j]
            blim = max(float(np.abs(b.data).max()) for b in row) or 1.0
            art.add(render_montage(row, axis, index, (-blim, blim), art.path(f"renders/bands_j{j}.png")), "png")
        art.add(render_montage([psi_clean, psi], axis, index, (-lim, lim), art.path("renders/phase.png")), "png")
        art.add(render_montage([weight, mask], axis, index, (0.0, 1.0), art.path("renders/weights.png")), "png")
        vols = [ph.chi33] + list(recon.values())
        art.add(render_montage(vols, axis, index, tuple(r["chi_window"]), art.path("renders/recon.png")), "png")

    manifest = {"library_version": library_version(), "config_hash": C.config_hash(cfg),
                "seed": cfg["seed"], "artifacts": art.entries, "metrics": metrics}
    (art.root / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest
