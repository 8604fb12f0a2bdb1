"""Run configuration: a small JSON schema with strict validation.

Schema (all keys optional except preset, lambda, N and T_end)::

    {
      "preset": "warped_circle",
      "preset_params": {"r": 1.0, "alpha": 0.3},
      "lambda": 0.5,
      "n": 2,
      "N": 128,
      "variant": "d-lambda",            # or "e-lambda"
      "T_end": 20.0,
      "n_snapshots": 100,
      "diagnostics_every": 0,           # 0: a tenth of the snapshot cadence
      "record_residuals": false,
      "seed": 0,
      "step": {"mode": "adaptive", "cfl": 0.1, "dt": null,
               "dt_max": 0.001, "integrator": "rk4"},
      "output": {"dir": null, "snapshots": "snapshots.jsonl",
                 "diagnostics": "diagnostics.csv", "svg_dir": "svg",
                 "svg_every": 0}
    }

Relative output paths are resolved against ``output.dir`` (itself defaulting
to the CLI's --out, then $CURVEFLOW_OUT, then the working directory).
"""
import json
import math
from dataclasses import dataclass, field

from curveflow.errors import ConfigError
from curveflow.flow import FlowVariant, Integrator, StepPolicy
from curveflow.presets import PRESETS, make_preset, resolve_params


@dataclass(frozen=True)
class OutputSpec:
    dir: str = None
    snapshots: str = "snapshots.jsonl"
    diagnostics: str = "diagnostics.csv"
    svg_dir: str = "svg"
    svg_every: int = 0


@dataclass(frozen=True)
class FlowConfig:
    preset: str
    lam: float
    N: int
    t_end: float
    preset_params: dict = field(default_factory=dict)
    n: int = 2
    variant: FlowVariant = FlowVariant.DLAMBDA
    step: StepPolicy = field(default_factory=StepPolicy)
    n_snapshots: int = 100
    diagnostics_every: int = 0
    record_residuals: bool = False
    seed: int = 0
    output: OutputSpec = field(default_factory=OutputSpec)

    def __post_init__(self):
        validate(self)


_TOP = {"preset", "preset_params", "lambda", "n", "N", "variant", "T_end", "n_snapshots",
        "diagnostics_every", "record_residuals", "seed", "step", "output"}
_REQUIRED = ("preset", "lambda", "N", "T_end")
_STEP = {"mode", "cfl", "dt", "dt_max", "integrator"}
_OUTPUT = {"dir", "snapshots", "diagnostics", "svg_dir", "svg_every"}


def _number(path, v):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(path, f"must be a number, got {v!r}")
    if not math.isfinite(v):
        raise ConfigError(path, f"must be finite, got {v!r}")
    return float(v)


def _integer(path, v):
    if isinstance(v, bool) or not isinstance(v, int):
        if isinstance(v, float) and v.is_integer():
            return int(v)
        raise ConfigError(path, f"must be an integer, got {v!r}")
    return v


def _string(path, v):
    if not isinstance(v, str):
        raise ConfigError(path, f"must be a string, got {v!r}")
    return v


def _object(path, v, allowed):
    if not isinstance(v, dict):
        raise ConfigError(path, f"must be an object, got {v!r}")
    for key in v:
        if key not in allowed:
            prefix = f"{path}." if path else ""
            raise ConfigError(f"{prefix}{key}", "unknown key")
    return v


def validate(cfg):
    if cfg.preset not in PRESETS:
        raise ConfigError("preset", f"unknown preset {cfg.preset!r}; choose from {sorted(PRESETS)}")
    resolve_params(cfg.preset, cfg.preset_params)
    if not cfg.lam > 0:
        raise ConfigError("lambda", f"lambda must be positive, got {cfg.lam}")
    if cfg.N < 8 or cfg.N % 2:
        raise ConfigError("N", f"must be even and >= 8, got {cfg.N}")
    if cfg.n < 2:
        raise ConfigError("n", f"must be >= 2, got {cfg.n}")
    # parameter ranges are checked where the curve is built
    make_preset(cfg.preset, cfg.preset_params, cfg.N, cfg.n, cfg.seed)
    if not cfg.t_end >= 0:
        raise ConfigError("T_end", f"must be >= 0, got {cfg.t_end}")
    if cfg.n_snapshots < 1:
        raise ConfigError("n_snapshots", f"must be >= 1, got {cfg.n_snapshots}")
    if cfg.diagnostics_every < 0:
        raise ConfigError("diagnostics_every", f"must be >= 0, got {cfg.diagnostics_every}")
    if cfg.output.svg_every < 0:
        raise ConfigError("output.svg_every", f"must be >= 0, got {cfg.output.svg_every}")


def _parse_step(obj):
    _object("step", obj, _STEP)
    kw = {}
    if "mode" in obj:
        kw["mode"] = _string("step.mode", obj["mode"])
    for key in ("cfl", "dt_max"):
        if key in obj:
            kw[key] = _number(f"step.{key}", obj[key])
    if obj.get("dt") is not None:
        kw["dt"] = _number("step.dt", obj["dt"])
        kw.setdefault("mode", "fixed")
    if "integrator" in obj:
        try:
            kw["integrator"] = Integrator(_string("step.integrator", obj["integrator"]))
        except ValueError:
            raise ConfigError("step.integrator", f"must be 'euler' or 'rk4', got {obj['integrator']!r}") from None
    return StepPolicy(**kw)


def _parse_output(obj):
    _object("output", obj, _OUTPUT)
    kw = {}
    for key in ("dir", "snapshots", "diagnostics", "svg_dir"):
        if obj.get(key) is not None:
            kw[key] = _string(f"output.{key}", obj[key])
    if "svg_every" in obj:
        kw["svg_every"] = _integer("output.svg_every", obj["svg_every"])
    return OutputSpec(**kw)


def config_from_dict(obj):
    """Validated FlowConfig from a decoded JSON object."""
    _object("", obj, _TOP)
    for key in _REQUIRED:
        if key not in obj:
            raise ConfigError(key, "required key missing")
    kw = dict(
        preset=_string("preset", obj["preset"]),
        lam=_number("lambda", obj["lambda"]),
        N=_integer("N", obj["N"]),
        t_end=_number("T_end", obj["T_end"]),
    )
    if "preset_params" in obj:
        params = obj["preset_params"]
        if not isinstance(params, dict):
            raise ConfigError("preset_params", f"must be an object, got {params!r}")
        kw["preset_params"] = dict(params)
    for key in ("n", "n_snapshots", "diagnostics_every", "seed"):
        if key in obj:
            kw[key] = _integer(key, obj[key])
    if "variant" in obj:
        try:
            kw["variant"] = FlowVariant(_string("variant", obj["variant"]))
        except ValueError:
            raise ConfigError("variant", f"must be 'd-lambda' or 'e-lambda', got {obj['variant']!r}") from None
    if "record_residuals" in obj:
        if not isinstance(obj["record_residuals"], bool):
            raise ConfigError("record_residuals", f"must be true or false, got {obj['record_residuals']!r}")
        kw["record_residuals"] = obj["record_residuals"]
    if "step" in obj:
        kw["step"] = _parse_step(obj["step"])
    if "output" in obj:
        kw["output"] = _parse_output(obj["output"])
    return FlowConfig(**kw)


def parse_config(text):
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"invalid JSON: {exc}") from None
    return config_from_dict(obj)


def config_to_dict(cfg):
    s = cfg.step
    o = cfg.output
    return {
        "preset": cfg.preset,
        "preset_params": dict(cfg.preset_params),
        "lambda": cfg.lam,
        "n": cfg.n,
        "N": cfg.N,
        "variant": cfg.variant.value,
        "T_end": cfg.t_end,
        "n_snapshots": cfg.n_snapshots,
        "diagnostics_every": cfg.diagnostics_every,
        "record_residuals": cfg.record_residuals,
        "seed": cfg.seed,
        "step": {"mode": s.mode, "cfl": s.cfl, "dt": s.dt, "dt_max": s.dt_max, "integrator": s.integrator.value},
        "output": {"dir": o.dir, "snapshots": o.snapshots, "diagnostics": o.diagnostics,
                   "svg_dir": o.svg_dir, "svg_every": o.svg_every},
    }


def render_config(cfg):
    return json.dumps(config_to_dict(cfg), indent=2)
