"""Run configuration: an INI-style file with flat sections.

::

    [model]
    name = elasticity
    e = 2.0

    [grid]
    cells = 4096

    [time]
    t_end = 0.2

    [study]
    eps_list = 1e-2, 3.16e-3, 1e-3

    [run]
    ic = sine

Keys are lowercase; unknown sections or keys are errors.
"""
import configparser
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ContractError, ModelConstructionError
from .models import build_model
from .presets import PRESETS
from .solver import GridSpec, TimeControl

MODES = ("validate", "run", "study")
MODELS = ("elasticity", "combustion", "symmetric")
SOURCE_KINDS = ("weakly_dissipative", "lipschitz", "none")

# model keys accepted per model -> (parameter name, type)
_MODEL_KEYS = {
    "elasticity": {"e": ("E", float), "gamma": ("gamma", float),
                   "gamma_upper": ("Gamma", float), "source": ("source_kind", str),
                   "damping": ("damping", float)},
    "combustion": {"e": ("E", float), "gamma": ("gamma", float),
                   "gamma_upper": ("Gamma", float), "cbar": ("Cbar", float),
                   "k": ("K", float)},
    "symmetric": {"e": ("E", float), "gamma": ("gamma", float),
                  "gamma_upper": ("Gamma", float), "delta": ("delta", float),
                  "damping": ("damping", float)},
}

_SCHEMA = {
    "model": {"name": str} | {k: t for keys in _MODEL_KEYS.values() for k, (_, t) in keys.items()},
    "grid": {"x_lo": float, "x_hi": float, "cells": int},
    "time": {"cfl": float, "t_end": float, "outputs": int, "max_steps": int},
    "study": {"eps_list": "floats", "floor_grid_factor": int, "slope_threshold": float,
              "threads": int},
    "run": {"mode": str, "seed": int, "output_dir": str, "ic": str, "amplitude": float,
            "wavenumber": int, "eps": float, "samples": int, "tol": float},
}

DEFAULT_EPS_LIST = (1e-2, 3.16e-3, 1e-3, 3.16e-4, 1e-4)


@dataclass
class RunConfig:
    model: str = "elasticity"
    model_params: dict = field(default_factory=dict)
    grid: GridSpec = field(default_factory=lambda: GridSpec(0.0, 1.0, 1024))
    cfl: float = 0.45
    t_end: float = 0.2
    outputs: int = 20
    max_steps: int = 10_000_000
    mode: str = "validate"
    eps: float = 1e-2
    eps_list: tuple = DEFAULT_EPS_LIST
    floor_grid_factor: int = 4
    slope_threshold: float = 0.8
    threads: int = 0
    ic: str = "sine"
    amplitude: float = 0.1
    wavenumber: int = 1
    output_dir: str = "relaxlab-out"
    seed: int = 0
    samples: int = 10_000
    tol: float = 1e-6

    @property
    def time_control(self):
        return TimeControl(self.t_end, self.cfl, self.max_steps)

    @property
    def output_times(self):
        return np.linspace(0.0, self.t_end, self.outputs + 1)

    def build_model(self):
        params = dict(self.model_params)
        damping = params.pop("damping", None)
        if damping is not None:
            if self.model == "elasticity":
                kind = params.get("source_kind", "weakly_dissipative")
                params["g2"] = (lambda v: -damping * v) if kind == "weakly_dissipative" \
                    else (lambda u, v: -damping * v)
            else:
                params["g"] = lambda u: -damping * np.tanh(u)
        return build_model(self.model, **params)


def _key_line(text, section, key):
    current = None
    for lineno, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        m = re.match(r"\[(.*)\]$", s)
        if m:
            current = m.group(1).strip()
        elif current == section and re.match(rf"{re.escape(key)}\s*[=:]", s):
            return lineno
    return None


def _section_line(text, section):
    for lineno, line in enumerate(text.splitlines(), 1):
        if line.strip() == f"[{section}]":
            return lineno
    return None


def _convert(raw, kind, where):
    try:
        if kind == "floats":
            return tuple(float(tok) for tok in raw.replace(",", " ").split())
        if kind is int:
            try:
                return int(raw)
            except ValueError:  # scientific notation such as 4e3
                pass
            val = float(raw)
            if val != int(val):
                raise ValueError
            return int(val)
        if kind is float:
            return float(raw)
        return raw.strip()
    except ValueError:
        expected = {int: "an integer", float: "a number", "floats": "a list of numbers"}[kind]
        raise ConfigError(f"{where}: expected {expected}, got {raw!r}")


def read_config(text):
    """Parse the raw file into a ``ConfigParser`` (syntax checks only)."""
    cp = configparser.ConfigParser(interpolation=None, strict=True,
                                   comment_prefixes=("#", ";"), inline_comment_prefixes=("#",))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError("key outside of a [section]", exc.lineno)
    except (configparser.DuplicateOptionError, configparser.DuplicateSectionError) as exc:
        raise ConfigError(str(exc).split(": ", 1)[-1], getattr(exc, "lineno", None))
    except configparser.ParsingError as exc:
        lineno, line = exc.errors[0]
        raise ConfigError(f"cannot parse {line.strip()!r}", lineno)
    return cp


def apply_overrides(cp, overrides):
    """Apply ``section.key=value`` (or unique ``key=value``) overrides."""
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, value = (s.strip() for s in item.split("=", 1))
        if "." in key:
            section, key = key.split(".", 1)
        else:
            owners = [s for s, keys in _SCHEMA.items() if key in keys]
            if len(owners) != 1:
                raise ConfigError(
                    f"override key {key!r} is {'ambiguous' if owners else 'unknown'}; "
                    "use section.key=value")
            section = owners[0]
        if section not in _SCHEMA or key not in _SCHEMA[section]:
            raise ConfigError(f"unknown override {section}.{key}")
        if not cp.has_section(section):
            cp.add_section(section)
        cp.set(section, key, value)
    return cp


def parse_config(text, overrides=None):
    """Parse and validate a configuration file.

    Parameters
    ----------
    text : str
        File contents.
    overrides : sequence of str, optional
        ``section.key=value`` items applied after parsing, before validation.

    Returns
    -------
    RunConfig

    Raises
    ------
    ConfigError
        With the offending line number for syntax errors and unknown keys,
        or naming the violated invariant for semantic errors.
    """
    cp = read_config(text)
    for section in cp.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]", _section_line(text, section))
        for key in cp[section]:
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]",
                                  _key_line(text, section, key))
    apply_overrides(cp, overrides)

    vals = {}
    for section in cp.sections():
        for key, raw in cp[section].items():
            where = f"[{section}] {key}"
            vals[(section, key)] = _convert(raw, _SCHEMA[section][key], where)

    cfg = RunConfig()
    model = vals.pop(("model", "name"), cfg.model)
    if model not in MODELS:
        raise ConfigError(f"model name must be one of {', '.join(MODELS)}; got {model!r}")
    cfg.model = model
    params = {}
    for (section, key) in [k for k in vals if k[0] == "model"]:
        if key not in _MODEL_KEYS[model]:
            raise ConfigError(f"key {key!r} does not apply to model {model!r}",
                              _key_line(text, "model", key))
        name, _ = _MODEL_KEYS[model][key]
        params[name] = vals.pop((section, key))
    if params.get("source_kind", "weakly_dissipative") not in SOURCE_KINDS:
        raise ConfigError(f"source must be one of {', '.join(SOURCE_KINDS)}")
    cfg.model_params = params

    def take(section, key, default):
        return vals.pop((section, key), default)

    x_lo, x_hi = take("grid", "x_lo", 0.0), take("grid", "x_hi", 1.0)
    cells = take("grid", "cells", cfg.grid.cells)
    if cells < 8:
        raise ConfigError("cells >= 8 required")
    if not x_hi > x_lo:
        raise ConfigError("x_hi > x_lo required")
    cfg.grid = GridSpec(x_lo, x_hi, cells)

    cfg.cfl = take("time", "cfl", cfg.cfl)
    cfg.t_end = take("time", "t_end", cfg.t_end)
    cfg.outputs = take("time", "outputs", cfg.outputs)
    cfg.max_steps = take("time", "max_steps", cfg.max_steps)
    if not cfg.t_end > 0:
        raise ConfigError("t_end > 0 required")
    if not 0 < cfg.cfl <= 1:
        raise ConfigError("cfl in (0, 1] required")
    if cfg.outputs < 1:
        raise ConfigError("outputs >= 1 required")
    if cfg.max_steps < 1:
        raise ConfigError("max_steps >= 1 required")

    cfg.eps_list = take("study", "eps_list", cfg.eps_list)
    cfg.floor_grid_factor = take("study", "floor_grid_factor", cfg.floor_grid_factor)
    cfg.slope_threshold = take("study", "slope_threshold", cfg.slope_threshold)
    cfg.threads = take("study", "threads", cfg.threads)
    if len(cfg.eps_list) < 2:
        raise ConfigError("eps_list needs at least two values")
    if any(not e > 0 for e in cfg.eps_list):
        raise ConfigError("eps_list entries must be > 0")
    if any(b >= a for a, b in zip(cfg.eps_list, cfg.eps_list[1:])):
        raise ConfigError("eps_list must be strictly decreasing")
    if cfg.floor_grid_factor < 2:
        raise ConfigError("floor_grid_factor >= 2 required")
    if cfg.threads < 0:
        raise ConfigError("threads >= 0 required (0 = RELAX_THREADS or all cores)")

    cfg.mode = take("run", "mode", cfg.mode)
    cfg.seed = take("run", "seed", cfg.seed)
    cfg.output_dir = take("run", "output_dir", cfg.output_dir)
    cfg.ic = take("run", "ic", cfg.ic)
    cfg.amplitude = take("run", "amplitude", cfg.amplitude)
    cfg.wavenumber = take("run", "wavenumber", cfg.wavenumber)
    cfg.eps = take("run", "eps", cfg.eps)
    cfg.samples = take("run", "samples", cfg.samples)
    cfg.tol = take("run", "tol", cfg.tol)
    if cfg.mode not in MODES:
        raise ConfigError(f"mode must be one of {', '.join(MODES)}")
    if cfg.ic not in PRESETS:
        raise ConfigError(f"ic must be one of {', '.join(PRESETS)}")
    if not cfg.eps > 0:
        raise ConfigError("eps > 0 required")
    if cfg.samples < 1:
        raise ConfigError("samples >= 1 required")
    if not cfg.tol > 0:
        raise ConfigError("tol > 0 required")
    if not 0 <= cfg.seed < 2 ** 64:
        raise ConfigError("seed must be a 64-bit unsigned integer")
    assert not vals, vals
    try:
        cfg.build_model()
    except (ModelConstructionError, ContractError, TypeError) as exc:
        raise ConfigError(f"invalid model parameters: {exc}")
    return cfg
