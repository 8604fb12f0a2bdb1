"""Initial curves.

Every preset is a planar closed curve sampled on the uniform grid, embedded
in R^n by zero padding. For n = 3 the optional ``lift`` parameter adds a
height z = lift * sin(2x), giving a non-planar saddle-shaped loop.
"""
from dataclasses import dataclass

import numpy as np

from curveflow.errors import ConfigError
from curveflow.grid import CurveState


@dataclass(frozen=True)
class Preset:
    name: str
    defaults: dict
    description: str
    build: object


def _positive(name, v):
    if not v > 0:
        raise ConfigError(f"preset_params.{name}", f"must be positive, got {v}")


def _circle(x, p, rng):
    _positive("r", p["r"])
    return p["r"] * np.stack([np.cos(x), np.sin(x)], axis=1)


def _ellipse(x, p, rng):
    _positive("a", p["a"])
    _positive("b", p["b"])
    return np.stack([p["a"] * np.cos(x), p["b"] * np.sin(x)], axis=1)


def _warped_circle(x, p, rng):
    _positive("r", p["r"])
    alpha = p["alpha"]
    if not 0.0 <= alpha < 0.9:
        raise ConfigError("preset_params.alpha", f"must lie in [0, 0.9), got {alpha}")
    u = x + alpha * np.sin(x)
    return p["r"] * np.stack([np.cos(u), np.sin(u)], axis=1)


def _perturbed_circle(x, p, rng):
    _positive("r", p["r"])
    amp = p["amp"]
    modes = p["modes"]
    if not 0.0 <= amp <= 0.5:
        raise ConfigError("preset_params.amp", f"must lie in [0, 0.5], got {amp}")
    if int(modes) != modes or not 1 <= modes <= len(x) // 4:
        raise ConfigError("preset_params.modes", f"must be an integer in [1, N/4], got {modes}")
    modes = int(modes)
    # coefficient pairs uniform in the unit disc: |radial noise| <= 1 and
    # |d/dx tangential noise| <= 1, so |f_x| >= r (1 - amp)^2 > 0
    k = np.arange(1, modes + 1)
    rad_ab = _unit_disc(rng, modes)
    tan_ab = _unit_disc(rng, modes)
    cos_kx = np.cos(np.outer(x, k))
    sin_kx = np.sin(np.outer(x, k))
    radial = (cos_kx @ rad_ab[:, 0] + sin_kx @ rad_ab[:, 1]) / modes
    tangential = (cos_kx @ (tan_ab[:, 0] / k) + sin_kx @ (tan_ab[:, 1] / k)) / modes
    rho = p["r"] * (1.0 + amp * radial)
    u = x + amp * tangential
    return rho[:, None] * np.stack([np.cos(u), np.sin(u)], axis=1)


def _unit_disc(rng, m):
    radius = np.sqrt(rng.uniform(0.0, 1.0, m))
    angle = rng.uniform(0.0, 2.0 * np.pi, m)
    return np.stack([radius * np.cos(angle), radius * np.sin(angle)], axis=1)


def _figure(x, p, rng):
    _positive("scale", p["scale"])
    rho = p["scale"] * (2.0 + np.cos(3.0 * x))
    return rho[:, None] * np.stack([np.cos(x), np.sin(x)], axis=1)


PRESETS = {
    p.name: p
    for p in [
        Preset("circle", {"r": 1.0}, "round circle of radius r, uniform speed", _circle),
        Preset("ellipse", {"a": 2.0, "b": 1.0}, "ellipse (a cos x, b sin x)", _ellipse),
        Preset(
            "warped_circle",
            {"r": 1.0, "alpha": 0.3},
            "circle r (cos u, sin u) with u = x + alpha sin x; |f_x| = r (1 + alpha cos x)",
            _warped_circle,
        ),
        Preset(
            "perturbed_circle",
            {"r": 1.0, "amp": 0.1, "modes": 3},
            "circle with seeded radial and tangential Fourier noise in modes 1..modes",
            _perturbed_circle,
        ),
        Preset(
            "figure",
            {"scale": 1.0},
            "nonconvex three-lobed loop scale (2 + cos 3x) (cos x, sin x)",
            _figure,
        ),
    ]
}


def resolve_params(name, params=None):
    """Defaults merged with ``params``; unknown names and keys raise ConfigError."""
    if name not in PRESETS:
        raise ConfigError("preset", f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    merged = dict(PRESETS[name].defaults)
    merged["lift"] = 0.0
    for key, value in (params or {}).items():
        if key not in merged:
            raise ConfigError(f"preset_params.{key}", f"unknown parameter for preset {name!r}")
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"preset_params.{key}", f"must be a number, got {value!r}")
        merged[key] = value
    return merged


def make_preset(name, params=None, N=128, n=2, seed=0):
    """Sample preset ``name`` on N nodes in R^n at t = 0."""
    p = resolve_params(name, params)
    if N < 8 or N % 2:
        raise ConfigError("N", f"must be even and >= 8, got {N}")
    if n < 2:
        raise ConfigError("n", f"must be >= 2, got {n}")
    if p["lift"] != 0.0 and n != 3:
        raise ConfigError("preset_params.lift", "only available for n = 3")
    x = 2.0 * np.pi * np.arange(N) / N
    rng = np.random.default_rng(seed)
    planar = PRESETS[name].build(x, p, rng)
    nodes = np.zeros((N, n))
    nodes[:, :2] = planar
    if n == 3:
        nodes[:, 2] = p["lift"] * np.sin(2.0 * x)
    return CurveState(nodes, 0.0)
