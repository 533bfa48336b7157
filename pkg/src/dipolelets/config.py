"""Run configuration: JSON schema, defaults, and conversion to library objects."""
from __future__ import annotations

import copy
import hashlib
import json
from pathlib import Path

import jsonschema
import numpy as np

from .bands import AngularConfig, RadialConfig
from .errors import ConfigurationError
from .simulate import CorruptionSpec, Offset
from .solvers import BandRegConfig, TkdConfig, TvConfig, dyadic_band_weights
from .weights import WeightConfig

METHODS = ("tkd", "tv", "tv_unweighted", "bandreg")


def _obj(props, required=()):
    return {"type": "object", "properties": props, "additionalProperties": False,
            "required": list(required)}


_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_int = {"type": "integer", "minimum": 0}
_triple = {"type": "array", "items": _num, "minItems": 3, "maxItems": 3}
_band = {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 2, "maxItems": 2}
_angular = _obj({
    "deltas": {"type": "array", "items": _pos},
    "epsilons": {"type": "array", "items": _pos},
    "M": {"type": "integer", "minimum": 0},
    "eta": {"enum": ["smoothstep", "erf"]},
})
_shape = _obj({
    "shape": {"enum": ["sphere", "ellipsoid", "cylinder", "slab"]},
    "center": _triple, "radius": _pos, "semi_axes": _triple, "axis": {"enum": ["x", "y", "z"]},
    "length": _pos, "lo": _triple, "hi": _triple, "value": _num,
    "component": {"enum": ["chi33", "chi13", "chi23"]}, "roi": {"type": "boolean"},
}, ["shape"])

SCHEMA = _obj({
    "grid": _obj({"shape": {"type": "array", "items": {"type": "integer", "minimum": 4},
                            "minItems": 3, "maxItems": 3},
                  "voxel_size": _triple}),
    "phantom": _obj({"recipe": {"oneOf": [{"const": "default-head"},
                                          {"type": "array", "items": _shape}]},
                     "sti": {"type": "boolean"}}),
    "forward": _obj({"model": {"enum": ["dipole", "sti"]}, "phase_scale": _pos, "dc_value": _num}),
    "corruption": _obj({
        "noise_snr": {"oneOf": [_pos, {"type": "null"}]},
        "offsets": {"oneOf": [{"const": "default"}, {"type": "array", "items": _obj(
            {"center": _triple, "radius": {"type": "number", "minimum": 0}, "value": _num},
            ["center"])}]},
    }),
    "bands": _obj({
        "radial": _obj({"J": _int, "profile": {"enum": ["raised_cosine", "gaussian"]},
                        "base_cutoff": _pos}),
        "angular": {"oneOf": [_angular, {"type": "array", "items": _angular}]},
    }),
    "weights": _obj({
        "selection": {"oneOf": [{"type": "null"}, {"type": "array", "items": _band, "minItems": 1}]},
        "mode": {"enum": ["signed_sum", "sum_of_squares"]},
        "rescale": {"enum": ["linear_complement", "reciprocal"]},
        "floor": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
        "threshold": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
    }),
    "solver": _obj({
        "methods": {"type": "array", "items": {"enum": list(METHODS)}, "minItems": 1},
        "tkd": _obj({"h": _pos}),
        "tv": _obj({"lam": _pos, "rho": {"oneOf": [_pos, {"type": "null"}]},
                    "max_iters": {"type": "integer", "minimum": 1}, "tol": _pos,
                    "isotropic": {"type": "boolean"}, "cg_tol": _pos,
                    "cg_max_iters": {"type": "integer", "minimum": 1}}),
        "bandreg": _obj({"alpha0": {"type": "number", "minimum": 0},
                         "beta0": {"oneOf": [_pos, {"type": "null"}]},
                         "m_max": _int, "step": _pos,
                         "max_iters": {"type": "integer", "minimum": 1}, "tol": _pos,
                         "fidelity": {"enum": ["nonlinear_exp", "linear"]},
                         "use_weights": {"type": "boolean"}}),
    }),
    "metrics": _obj({"k1": _pos, "k2": _pos, "L": _pos, "sigma": _pos}),
    "render": _obj({"axis": {"enum": ["x", "y", "z"]}, "index": {"oneOf": [_int, {"type": "null"}]},
                    "chi_window": {"type": "array", "items": _num, "minItems": 2, "maxItems": 2}}),
    "output": {"type": "string"},
    "seed": _int,
})

DEFAULTS = {
    "grid": {"shape": [32, 32, 32], "voxel_size": [1.0, 1.0, 1.0]},
    "phantom": {"recipe": "default-head", "sti": False},
    # 2*pi * gamma * B0 * TE with 3 T and TE = 25 ms is about 20 rad/ppm
    "forward": {"model": "dipole", "phase_scale": 20.0, "dc_value": 0.0},
    "corruption": {"noise_snr": 100.0, "offsets": "default"},
    "bands": {"radial": {"J": 3, "profile": "raised_cosine", "base_cutoff": 0.5},
              "angular": {"deltas": [0.05, 0.15], "epsilons": [0.02, 0.02], "eta": "smoothstep"}},
    "weights": {"selection": None, "mode": "sum_of_squares", "rescale": "linear_complement",
                "floor": 0.1, "threshold": 0.5},
    "solver": {"methods": ["tkd", "tv", "tv_unweighted", "bandreg"],
               "tkd": {"h": 0.15},
               "tv": {"lam": 0.03, "rho": None, "max_iters": 200, "tol": 1e-4, "isotropic": False,
                      "cg_tol": 1e-8, "cg_max_iters": 100},
               "bandreg": {"alpha0": 10.0, "beta0": None, "m_max": 0, "step": 1.0, "max_iters": 100,
                           "tol": 1e-6, "fidelity": "nonlinear_exp", "use_weights": False}},
    "metrics": {"k1": 0.01, "k2": 0.001, "L": 1.0, "sigma": 1.5},
    "render": {"axis": "y", "index": None, "chi_window": [-0.15, 0.15]},
    "output": "dipolelets-run",
    "seed": 0,
}


def _merge(base, override):
    out = copy.deepcopy(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def validate(cfg: dict):
    try:
        jsonschema.validate(cfg, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigurationError(f"config error at {where}: {exc.message}") from None


def resolve(cfg: dict | None = None) -> dict:
    """Validate a (partial) config and fill in defaults."""
    cfg = {} if cfg is None else cfg
    validate(cfg)
    full = _merge(DEFAULTS, cfg)
    validate(full)
    return full


def load(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from None
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config {path} is not valid JSON: {exc}") from None
    return resolve(cfg)


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(json.dumps(cfg, sort_keys=True).encode()).hexdigest()


# --------------------------------------------------------------------------
# conversion helpers


def default_offsets(shape, radius=1.0, value=np.pi):
    """Three balls placed around the grid center, away from the phantom's spheres."""
    n = np.asarray(shape, dtype=float)
    c = n / 2
    rel = [(1.0, 1.0, -1.0), (-1.5, 0.5, 1.0), (0.5, -1.5, 0.5)]
    return [Offset(tuple(np.round(c + np.asarray(r) * n / 8).tolist()), radius, value) for r in rel]


def corruption_spec(cfg, shape) -> CorruptionSpec:
    c = cfg["corruption"]
    offs = c["offsets"]
    offsets = default_offsets(shape) if offs == "default" else [Offset(**o) for o in offs]
    return CorruptionSpec(c["noise_snr"], tuple(offsets), cfg["seed"])


def radial_config(cfg) -> RadialConfig:
    return RadialConfig(**cfg["bands"]["radial"])


def _angular(a):
    if "M" in a and "deltas" not in a:
        return AngularConfig.with_bands(a["M"], eta=a.get("eta", "smoothstep"))
    a = {k: v for k, v in a.items() if k != "M"}
    return AngularConfig(**{k: tuple(v) if isinstance(v, list) else v for k, v in a.items()})


def angular_configs(cfg):
    a = cfg["bands"]["angular"]
    J = cfg["bands"]["radial"]["J"]
    if isinstance(a, list):
        if len(a) != J + 1:
            raise ConfigurationError(f"bands/angular: need {J + 1} per-scale entries, got {len(a)}")
        return [_angular(x) for x in a]
    return _angular(a)


def weight_config(cfg) -> WeightConfig:
    w = dict(cfg["weights"])
    if w["selection"] is not None:
        w["selection"] = tuple(tuple(s) for s in w["selection"])
    return WeightConfig(**w)


def tkd_config(cfg) -> TkdConfig:
    return TkdConfig(**cfg["solver"]["tkd"])


def tv_config(cfg) -> TvConfig:
    return TvConfig(**cfg["solver"]["tv"])


def bandreg_config(cfg, bs) -> BandRegConfig:
    b = cfg["solver"]["bandreg"]
    beta0 = np.inf if b["beta0"] is None else b["beta0"]
    alphas, betas = dyadic_band_weights(bs, b["alpha0"], beta0, b["m_max"])
    return BandRegConfig(alphas=alphas, betas=betas, step=b["step"], max_iters=b["max_iters"],
                         tol=b["tol"], fidelity=b["fidelity"])
