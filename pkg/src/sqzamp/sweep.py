"""Parameter points, 1D/2D sweeps and figure presets, with deterministic CSV output.

A *point* is a flat mapping of parameter names to values (see
:data:`POINT_KEYS`). ``l_det`` is accepted as a synonym for
``1 - eta_det``. Omitting ``g_opa`` selects the conventional scheme;
``g_opa = inf`` selects the analytic infinite-gain limit, for which only
``eta_eff`` and ``v_eff`` are defined.
"""

import csv
import io
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .chain import ChainSetup, PhaseNoiseMode
from .errors import ConfigError
from .metrics import (
    SignalModel,
    effective_efficiency,
    effective_efficiency_limit,
    effective_squeezing,
    effective_squeezing_limit,
    effective_squeezing_with_noise,
    metrics_report,
    snr_enhancement,
    to_decibels,
)

SCHEMA_VERSION = "1"

#: Parameters that may be swept.
AXIS_NAMES = (
    "eta_det",
    "eta_prop",
    "eta_opo",
    "eta_opa",
    "g_opo",
    "g_opa",
    "theta_opo",
    "theta_opa",
    "l_det",
)

#: Every key a point may carry.
POINT_KEYS = AXIS_NAMES + ("p_sig", "phase_noise_mode")

#: Realistic parameter set, used unless a preset or the user overrides it.
REALISTIC = {"eta_opo": 0.98, "eta_opa": 0.98, "eta_prop": 0.99, "eta_det": 0.7}

DEFAULT_POINT = {**REALISTIC, "g_opo": 1.8}

CONVENTIONAL_OUTPUTS = ("v_minus", "v_minus_db", "v_plus", "v_plus_db", "snr_conv", "snr_conv_db")
OUTPUTS = CONVENTIONAL_OUTPUTS + (
    "v_eff",
    "v_eff_db",
    "eta_eff",
    "eta_eff_db",
    "snr_amp",
    "snr_amp_db",
    "epsilon",
    "epsilon_db",
)


def _number(key, value):
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise ConfigError(key, f"expected a number, got {value!r}") from None
    if math.isnan(value):
        raise ConfigError(key, "must not be NaN")
    return value


def _unit_interval(key, value):
    value = _number(key, value)
    if not 0.0 <= value <= 1.0:
        raise ConfigError(key, f"must lie in [0, 1], got {value!r}")
    return value


def merge_point(base, overrides):
    """Overlay ``overrides`` on ``base``; ``l_det`` and ``eta_det`` replace each other."""
    out = dict(base)
    for key, value in overrides.items():
        if value is None:
            continue
        if key not in POINT_KEYS:
            raise ConfigError(key, f"unknown parameter; expected one of {', '.join(POINT_KEYS)}")
        if key == "l_det":
            out.pop("eta_det", None)
        elif key == "eta_det":
            out.pop("l_det", None)
        out[key] = value
    return out


def validate_point(point):
    """Check ranges of every field and return a normalized copy.

    Raises
    ------
    ConfigError
        Naming the first offending field.
    """
    unknown = sorted(set(point) - set(POINT_KEYS))
    if unknown:
        raise ConfigError(unknown[0], f"unknown parameter; expected one of {', '.join(POINT_KEYS)}")
    p = {}
    for key in ("eta_opo", "eta_opa", "eta_prop", "eta_det", "l_det"):
        if key in point:
            p[key] = _unit_interval(key, point[key])
    if "l_det" in p:
        if "eta_det" in p and not math.isclose(p["eta_det"], 1.0 - p["l_det"], abs_tol=1e-12):
            raise ConfigError("l_det", "conflicts with eta_det; give only one of them")
        p["eta_det"] = 1.0 - p.pop("l_det")
    if "g_opo" not in point:
        raise ConfigError("g_opo", "is required")
    p["g_opo"] = _number("g_opo", point["g_opo"])
    if not (math.isfinite(p["g_opo"]) and p["g_opo"] >= 1.0):
        raise ConfigError("g_opo", f"must be finite and >= 1, got {p['g_opo']!r}")
    if point.get("g_opa") is not None:
        p["g_opa"] = _number("g_opa", point["g_opa"])
        if not p["g_opa"] >= 1.0:
            raise ConfigError("g_opa", f"must be >= 1 (or inf), got {p['g_opa']!r}")
    for key in ("theta_opo", "theta_opa"):
        if key in point:
            p[key] = _number(key, point[key])
            if not math.isfinite(p[key]):
                raise ConfigError(key, "must be finite")
    if p.get("theta_opa", 0.0) != 0.0 and "g_opa" not in p:
        raise ConfigError("theta_opa", "requires g_opa (amplified scheme)")
    if "p_sig" in point:
        p["p_sig"] = _number("p_sig", point["p_sig"])
        if not (math.isfinite(p["p_sig"]) and p["p_sig"] > 0.0):
            raise ConfigError("p_sig", f"must be positive, got {p['p_sig']!r}")
    if "phase_noise_mode" in point:
        try:
            p["phase_noise_mode"] = PhaseNoiseMode(point["phase_noise_mode"])
        except ValueError:
            choices = ", ".join(m.value for m in PhaseNoiseMode)
            raise ConfigError("phase_noise_mode", f"expected one of {choices}") from None
    return p


def setup_from_point(point):
    """Validated :class:`ChainSetup` and :class:`SignalModel` for a point."""
    p = validate_point(point)
    kwargs = {k: v for k, v in p.items() if k != "p_sig"}
    if math.isinf(kwargs.get("g_opa", 0.0)):
        raise ConfigError("g_opa", "the infinite-gain limit is only available through evaluate_point")
    try:
        setup = ChainSetup.from_values(**kwargs)
    except ValueError as exc:
        raise ConfigError("setup", str(exc)) from None
    return setup, SignalModel(p.get("p_sig", SignalModel().p_sig))


def _limit_outputs(p):
    if p.get("theta_opo", 0.0) or p.get("theta_opa", 0.0):
        raise ConfigError("g_opa", "the infinite-gain limit is defined without phase noise only")
    finite = dict(p, g_opa=1.0)
    setup = ChainSetup.from_values(**{k: v for k, v in finite.items() if k != "p_sig"})
    out = dict.fromkeys(OUTPUTS, math.nan)
    out["eta_eff"] = effective_efficiency_limit(setup.opa.escape_efficiency)
    out["eta_eff_db"] = to_decibels(out["eta_eff"]) if out["eta_eff"] > 0.0 else -math.inf
    out["v_eff"] = effective_squeezing_limit(setup)
    out["v_eff_db"] = to_decibels(out["v_eff"])
    return out


def _effective_squeezing(setup):
    if setup.noiseless:
        return effective_squeezing(setup)
    return effective_squeezing_with_noise(setup)


# metrics that can be computed without the full report
_SHORTCUTS = {
    "eta_eff": lambda setup, sig: {"eta_eff": effective_efficiency(setup.opa, setup.eta_det)},
    "v_eff": lambda setup, sig: {"v_eff": _effective_squeezing(setup)},
    "epsilon": lambda setup, sig: {"epsilon": snr_enhancement(setup)},
}


def evaluate_point(point, outputs=OUTPUTS):
    """Metrics named in ``outputs`` for one point; undefined ones are NaN."""
    p = validate_point(point)
    if math.isinf(p.get("g_opa", 0.0)):
        limit = _limit_outputs(p)
        return {name: limit[name] for name in outputs}
    setup, sig = setup_from_point(p)
    bases = {name[:-3] if name.endswith("_db") else name for name in outputs}
    if setup.amplified and len(bases) == 1 and next(iter(bases)) in _SHORTCUTS:
        values = _SHORTCUTS[next(iter(bases))](setup, sig)
        base, value = next(iter(values.items()))
        values[base + "_db"] = to_decibels(value) if value > 0.0 else -math.inf
    else:
        values = metrics_report(setup, sig).to_dict()
    return {name: math.nan if values[name] is None else values[name] for name in outputs}


@dataclass(frozen=True)
class Axis:
    """One sweep axis: ``count`` points from ``start`` to ``stop``, or explicit ``values``."""

    name: str
    start: float = 0.0
    stop: float = 1.0
    count: int = 2
    scale: str = "linear"
    values: tuple | None = None

    def __post_init__(self):
        if self.name not in AXIS_NAMES:
            raise ConfigError("axis", f"unknown parameter {self.name!r}; expected one of {', '.join(AXIS_NAMES)}")
        if self.values is not None:
            values = tuple(_number(self.name, v) for v in self.values)
            if not values:
                raise ConfigError(self.name, "explicit axis values must not be empty")
            object.__setattr__(self, "values", values)
            return
        if int(self.count) != self.count or self.count < 2:
            raise ConfigError(self.name, f"axis count must be an integer >= 2, got {self.count!r}")
        if not self.start < self.stop:
            raise ConfigError(self.name, f"axis start must be below stop, got {self.start!r} >= {self.stop!r}")
        if self.scale not in ("linear", "log"):
            raise ConfigError(self.name, f"axis scale must be 'linear' or 'log', got {self.scale!r}")
        if self.scale == "log" and self.start <= 0.0:
            raise ConfigError(self.name, "log axis needs a positive start")

    def grid(self):
        if self.values is not None:
            return np.array(self.values, dtype=float)
        if self.scale == "log":
            return np.geomspace(self.start, self.stop, int(self.count))
        return np.linspace(self.start, self.stop, int(self.count))

    def describe(self):
        if self.values is not None:
            return {"name": self.name, "values": list(self.values)}
        return {"name": self.name, "start": self.start, "stop": self.stop, "count": int(self.count), "scale": self.scale}

    @classmethod
    def parse(cls, text):
        """Parse ``name:start:stop:count[:scale]`` or ``name=v1,v2,...``."""
        if "=" in text:
            name, _, values = text.partition("=")
            return cls(name.strip(), values=tuple(v for v in values.split(",") if v.strip()))
        parts = text.split(":")
        if len(parts) not in (4, 5):
            raise ConfigError("axis", f"expected name:start:stop:count[:scale] or name=v1,v2,..., got {text!r}")
        name, start, stop, count = parts[:4]
        try:
            count = int(count)
        except ValueError:
            raise ConfigError(name, f"axis count must be an integer, got {count!r}") from None
        scale = parts[4] if len(parts) == 5 else "linear"
        return cls(name, _number(name, start), _number(name, stop), count, scale)


@dataclass(frozen=True)
class SweepSpec:
    axis1: Axis
    axis2: Axis | None = None
    fixed: dict = field(default_factory=lambda: dict(DEFAULT_POINT))
    outputs: tuple = ()

    def __post_init__(self):
        if self.axis2 is not None and self.axis2.name == self.axis1.name:
            raise ConfigError("axis", f"both axes sweep {self.axis1.name!r}")
        names = {self.axis1.name} | ({self.axis2.name} if self.axis2 else set())
        if {"l_det", "eta_det"} <= names:
            raise ConfigError("axis", "l_det and eta_det cannot both be swept")
        bad = [o for o in self.outputs if o not in OUTPUTS]
        if bad:
            raise ConfigError("outputs", f"unknown metric {bad[0]!r}; expected one of {', '.join(OUTPUTS)}")
        if not self.outputs:
            swept_opa = "g_opa" in names
            amplified = swept_opa or self.fixed.get("g_opa") is not None
            object.__setattr__(self, "outputs", OUTPUTS if amplified else CONVENTIONAL_OUTPUTS)
        object.__setattr__(self, "outputs", tuple(self.outputs))

    @property
    def axes(self):
        return (self.axis1,) if self.axis2 is None else (self.axis1, self.axis2)


def format_float(value):
    """Nine significant digits; ``inf``, ``-inf`` and ``nan`` spelled out."""
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.9g}"


def sweep_rows(spec):
    """Yield ``(axis values..., metric values...)`` in axis-major order."""
    grids = [axis.grid() for axis in spec.axes]
    coords = [(a,) for a in grids[0]] if len(grids) == 1 else [(a, b) for a in grids[0] for b in grids[1]]
    for values in coords:
        point = dict(spec.fixed)
        for axis, v in zip(spec.axes, values):
            point = merge_point(point, {axis.name: float(v)})
        metrics = evaluate_point(point, spec.outputs)
        yield tuple(float(v) for v in values) + tuple(metrics[o] for o in spec.outputs)


def sweep_csv(spec):
    """The sweep as CSV text (UTF-8, LF line endings, header row)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([axis.name for axis in spec.axes] + list(spec.outputs))
    for row in sweep_rows(spec):
        writer.writerow([format_float(v) for v in row])
    return buf.getvalue()


def write_text(path, text):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def run_sweep(spec, out_path=None):
    """Evaluate ``spec``; write CSV to ``out_path`` if given and return the text."""
    text = sweep_csv(spec)
    if out_path is not None:
        write_text(out_path, text)
    return text


@dataclass(frozen=True)
class FigurePreset:
    id: str
    description: str
    axis1: Axis
    axis2: Axis | None
    fixed: dict
    outputs: tuple

    def spec(self, axis_overrides=(), fixed_overrides=None):
        axes = {a.name: a for a in (self.axis1, self.axis2) if a is not None}
        for axis in axis_overrides:
            if axis.name not in axes:
                raise ConfigError("axis", f"preset {self.id} has no axis {axis.name!r}")
            axes[axis.name] = axis
        fixed = merge_point(self.fixed, fixed_overrides or {})
        a1 = axes[self.axis1.name]
        a2 = axes[self.axis2.name] if self.axis2 is not None else None
        return SweepSpec(a1, a2, fixed, self.outputs)


_L_DET = Axis("l_det", 0.0, 1.0, 101)
_ETA_OPA = Axis("eta_opa", 0.0, 1.0, 101)
_ETA_DET = Axis("eta_det", 0.0, 1.0, 101)
_GAINS = Axis("g_opa", values=(1.0, 2.0, 5.0, 10.0, 50.0))
_PHASE_OPO = Axis("theta_opo", 0.0, 0.1, 101)
_PHASE_OPA = Axis("theta_opa", 0.0, 0.1, 101)
_SQUEEZER = {**REALISTIC, "g_opo": 5.2}

PRESETS = {
    p.id: p
    for p in (
        FigurePreset("fig3", "effective squeezing vs detection loss for several amplifier gains",
                     _L_DET, _GAINS, _SQUEEZER, ("v_eff_db",)),
        FigurePreset("fig4a", "effective detection efficiency, amplifier gain 1",
                     _ETA_OPA, _ETA_DET, {**_SQUEEZER, "g_opa": 1.0}, ("eta_eff",)),
        FigurePreset("fig4b", "effective detection efficiency, amplifier gain 10",
                     _ETA_OPA, _ETA_DET, {**_SQUEEZER, "g_opa": 10.0}, ("eta_eff",)),
        FigurePreset("fig4c", "effective detection efficiency, infinite amplifier gain (analytic)",
                     _ETA_OPA, _ETA_DET, {**_SQUEEZER, "g_opa": math.inf}, ("eta_eff",)),
        FigurePreset("fig5a", "effective squeezing vs detection loss and squeezer phase noise, no amplification",
                     _L_DET, _PHASE_OPO, {**_SQUEEZER, "g_opa": 1.0}, ("v_eff_db",)),
        FigurePreset("fig5b", "effective squeezing vs detection loss and squeezer phase noise, amplifier gain 5.2",
                     _L_DET, _PHASE_OPO, {**_SQUEEZER, "g_opa": 5.2}, ("v_eff_db",)),
        FigurePreset("fig5c", "effective squeezing vs detection loss and amplifier phase noise, amplifier gain 5.2",
                     _L_DET, _PHASE_OPA, {**_SQUEEZER, "g_opa": 5.2}, ("v_eff_db",)),
        FigurePreset("fig6", "SNR enhancement vs detection loss for several amplifier gains",
                     _L_DET, _GAINS, _SQUEEZER, ("epsilon_db",)),
    )
}


def _json_value(v):
    if isinstance(v, float) and not math.isfinite(v):
        return format_float(v)
    if isinstance(v, PhaseNoiseMode):
        return v.value
    return v


def figure_metadata(preset, spec):
    return {
        "preset": preset.id,
        "description": preset.description,
        "fixed": {k: _json_value(v) for k, v in sorted(spec.fixed.items())},
        "axes": [a.describe() for a in spec.axes],
        "outputs": list(spec.outputs),
        "files": [f"{preset.id}.csv"],
        "code_version": __version__,
        "schema_version": SCHEMA_VERSION,
    }


def dump_json(obj):
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def run_figure(preset_id, out_dir, axis_overrides=(), fixed_overrides=None):
    """Write ``<id>.csv`` and ``<id>.json`` into ``out_dir``; return their paths."""
    if preset_id not in PRESETS:
        raise ConfigError("figure", f"unknown preset {preset_id!r}; expected one of {', '.join(PRESETS)}")
    preset = PRESETS[preset_id]
    spec = preset.spec(axis_overrides, fixed_overrides)
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, f"{preset.id}.csv")
    json_path = os.path.join(out_dir, f"{preset.id}.json")
    text = sweep_csv(spec)
    write_text(csv_path, text)
    write_text(json_path, dump_json(figure_metadata(preset, spec)))
    return csv_path, json_path
