"""Command-line entry point: ``dipolelets <stage> ...``.

Failures print one JSON object ``{"error", "stage", "message"}`` on stderr and
exit with status 2 (configuration) or 1 (anything else).
"""
from __future__ import annotations

import functools
import json
import logging
import sys
from pathlib import Path

import click

from . import config as C
from . import pipeline as P
from .errors import ConfigurationError, DipoleletError
from .io import read_volume, write_volume
from .metrics import evaluate
from .simulate import Phantom, corrupt
from .transform import analyze
from .weights import make_mask, make_weight


def _fail(stage, exc):
    stage = getattr(exc, "stage", stage)
    cause = exc.__cause__ if isinstance(exc, P.StageError) else exc
    code = getattr(exc, "code", "error")
    click.echo(json.dumps({"error": code, "stage": stage, "message": str(cause)}), err=True)
    sys.exit(2 if isinstance(cause, ConfigurationError) else 1)


def command(stage):
    """Shared ``--config/--seed/--quiet`` handling and JSON error reporting."""

    def deco(fn):
        @click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None,
                      help="JSON run configuration.")
        @click.option("--seed", type=int, default=None, help="Override the config seed.")
        @click.option("--quiet", is_flag=True, help="Only report errors.")
        @functools.wraps(fn)
        def wrapper(config_path, seed, quiet, **kw):
            logging.basicConfig(level=logging.WARNING if quiet else logging.INFO,
                                format="%(levelname)s %(name)s: %(message)s")
            try:
                cfg = C.load(config_path) if config_path else C.resolve()
                if seed is not None:
                    cfg["seed"] = seed
                fn(cfg, quiet=quiet, **kw)
            except (DipoleletError, OSError, ValueError) as exc:
                _fail(stage, exc)

        return main.command(stage)(wrapper)

    return deco


@click.group()
def main():
    """Dipole-let decomposition and QSM reconstruction experiments."""


@command("pipeline")
@click.option("--output", type=click.Path(file_okay=False), default=None, help="Run directory.")
def pipeline_cmd(cfg, quiet, output):
    """Run every stage and write a manifest."""
    manifest = P.run_pipeline(cfg, output)
    if not quiet:
        click.echo(json.dumps(manifest["metrics"], indent=2, sort_keys=True))


@command("phantom")
@click.option("--output", type=click.Path(file_okay=False), required=True)
def phantom_cmd(cfg, quiet, output):
    """Write chi33 (and tensor components), mask."""
    ph = P.build_phantom(cfg)
    out = Path(output)
    out.mkdir(parents=True, exist_ok=True)
    write_volume(ph.chi33, out / "chi33.dpv")
    write_volume(ph.mask, out / "mask.dpv")
    for name in ("chi13", "chi23"):
        if getattr(ph, name) is not None:
            write_volume(getattr(ph, name), out / f"{name}.dpv")


@command("forward")
@click.option("--chi33", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--chi13", type=click.Path(exists=True, dir_okay=False))
@click.option("--chi23", type=click.Path(exists=True, dir_okay=False))
@click.option("--output", type=click.Path(dir_okay=False), required=True)
def forward_cmd(cfg, quiet, chi33, chi13, chi23, output):
    """Simulate phase (radians) from susceptibility volumes."""
    c33 = read_volume(chi33)
    ph = Phantom(c33, c33.like(c33.data * 0 + 1),
                 read_volume(chi13) if chi13 else None, read_volume(chi23) if chi23 else None)
    if chi13 or chi23:
        cfg["forward"]["model"] = "sti"
    write_volume(P.forward(cfg, ph), output)


@command("corrupt")
@click.option("--input", "input_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--output", type=click.Path(dir_okay=False), required=True)
def corrupt_cmd(cfg, quiet, input_path, output):
    """Inject phase offsets and complex noise."""
    psi = read_volume(input_path)
    write_volume(corrupt(psi, C.corruption_spec(cfg, psi.grid.shape)), output)


@command("decompose")
@click.option("--input", "input_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--output", type=click.Path(file_okay=False), required=True)
def decompose_cmd(cfg, quiet, input_path, output):
    """Write every Dipole-let band plus a JSON manifest."""
    psi = read_volume(input_path)
    bs = P.build_bands(cfg, psi.grid)
    out = Path(output)
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for key, band in analyze(psi, bs).items():
        name = P._band_name(key) + ".dpv"
        write_volume(band, out / name)
        entries.append({"band": key if isinstance(key, str) else list(key), "file": name})
    (out / "manifest.json").write_text(json.dumps(
        {"bands": entries, "pu_residual": bs.pu_residual, "radial": cfg["bands"]["radial"],
         "angular": cfg["bands"]["angular"]}, indent=2, sort_keys=True) + "\n")


@command("weights")
@click.option("--input", "input_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--output", type=click.Path(file_okay=False), required=True)
def weights_cmd(cfg, quiet, input_path, output):
    """Near-cone energy weight and binary reliability mask."""
    psi = read_volume(input_path)
    wcfg = C.weight_config(cfg)
    w = make_weight(analyze(psi, P.build_bands(cfg, psi.grid)), wcfg)
    out = Path(output)
    out.mkdir(parents=True, exist_ok=True)
    write_volume(w, out / "weight.dpv")
    write_volume(make_mask(w, wcfg.threshold), out / "mask.dpv")


@command("recon")
@click.option("--input", "input_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--weight", "weight_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--method", type=click.Choice(C.METHODS), default="tv", show_default=True)
@click.option("--output", type=click.Path(file_okay=False), required=True)
def recon_cmd(cfg, quiet, input_path, weight_path, method, output):
    """Reconstruct susceptibility (ppm) from phase."""
    psi = read_volume(input_path)
    weight = read_volume(weight_path) if weight_path else None
    bs = P.build_bands(cfg, psi.grid)
    chi, report = P.reconstruct(cfg, method, psi, weight, bs)
    out = Path(output)
    out.mkdir(parents=True, exist_ok=True)
    write_volume(chi, out / f"{method}.dpv")
    if report is not None:
        (out / f"{method}_report.json").write_text(report.to_json(indent=2) + "\n")


@command("metrics")
@click.option("--estimate", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--truth", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--roi", type=click.Path(exists=True, dir_okay=False))
@click.option("--output", type=click.Path(dir_okay=False))
def metrics_cmd(cfg, quiet, estimate, truth, roi, output):
    """RMSE, XSIM and near-cone streak energy as JSON."""
    est, tru = read_volume(estimate), read_volume(truth)
    bs = P.build_bands(cfg, tru.grid)
    rep = evaluate(est, tru, read_volume(roi) if roi else None, bs, **cfg["metrics"]).to_dict()
    text = json.dumps(rep, indent=2, sort_keys=True) + "\n"
    if output:
        Path(output).write_text(text)
    if not quiet or not output:
        click.echo(text, nl=False)


if __name__ == "__main__":
    main()
