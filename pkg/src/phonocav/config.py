"""
Run configuration: a JSON document mirroring RunConfig, dotted --set
overrides, and expansion of sweep axes into concrete points.
"""

from __future__ import annotations

import itertools
import json
import logging
from pathlib import Path
from typing import Any, Iterable, NamedTuple, Optional, Union

import numpy as np

from .bath import BathParams
from .errors import ConfigError
from .master_eq import METHODS, ROUTES
from .settings import (
    DEPHASING_CONVENTIONS,
    Numerics,
    OracleSettings,
    QuadratureSettings,
    SolverSettings,
    SpectrumSettings,
    TauSettings,
)
from .system import SystemParams

logger = logging.getLogger(__name__)

ORACLE = "oracle"
ALL_METHODS = METHODS + (ORACLE,)
OUTPUT_DIR_DEFAULT = "out"
WORKERS_DEFAULT = 1

_NUMERICS_SECTIONS = {
    "quadrature": QuadratureSettings,
    "solver": SolverSettings,
    "tau": TauSettings,
    "spectrum": SpectrumSettings,
    "oracle": OracleSettings,
}
_PARAMETER_GROUPS = {"system": SystemParams, "bath": BathParams}
# Keys whose value is replaced whole rather than merged key by key.
_OPAQUE_KEYS = {"methods", "routes", "sweep", "derived"}


class SweepAxis(NamedTuple):
    parameter: str  # dotted, e.g. "system.g"
    values: tuple[float, ...]


class DerivedAxis(NamedTuple):
    """parameter = scale * of + offset, evaluated per sweep point."""

    parameter: str
    of: str
    scale: float = 1.0
    offset: float = 0.0


class OutputSettings(NamedTuple):
    directory: Path = Path(OUTPUT_DIR_DEFAULT)
    write_population: bool = True
    write_spectra: bool = True


class RunConfig(NamedTuple):
    system: SystemParams = SystemParams()
    bath: BathParams = BathParams()
    methods: tuple[str, ...] = METHODS
    routes: tuple[str, ...] = ("cavity",)
    sweep: tuple[SweepAxis, ...] = ()
    derived: tuple[DerivedAxis, ...] = ()
    numerics: Numerics = Numerics()
    output: OutputSettings = OutputSettings()
    workers: int = WORKERS_DEFAULT
    compare_oracle: bool = True

    @property
    def point_count(self) -> int:
        n = 1
        for axis in self.sweep:
            n *= len(axis.values)
        return n


class SweepPoint(NamedTuple):
    index: int
    values: dict[str, float]  # swept and derived parameters at this point
    system: SystemParams
    bath: BathParams

    @property
    def label(self) -> str:
        return f"point_{self.index:04d}"


# ─── key tree ───


def default_tree() -> dict[str, Any]:
    """The full key tree with default values, as a JSON-compatible dict."""
    return {
        "system": SystemParams()._asdict(),
        "bath": BathParams()._asdict(),
        "methods": list(METHODS),
        "routes": ["cavity"],
        "sweep": [],
        "derived": {},
        "numerics": {
            **{name: cls()._asdict() for name, cls in _NUMERICS_SECTIONS.items()},
            "dephasing_convention": Numerics().dephasing_convention,
        },
        "output": {"directory": OUTPUT_DIR_DEFAULT, "write_population": True, "write_spectra": True},
        "workers": WORKERS_DEFAULT,
        "compare_oracle": True,
    }


def _merge(base: dict[str, Any], update: dict[str, Any], prefix: str = "") -> None:
    for key, value in update.items():
        path = f"{prefix}{key}"
        if key not in base:
            raise ConfigError(f"Unknown configuration key {path!r}.")
        if isinstance(base[key], dict) and key not in _OPAQUE_KEYS:
            if not isinstance(value, dict):
                raise ConfigError(f"Configuration key {path!r} must be an object, got {value!r}.")
            _merge(base[key], value, prefix=f"{path}.")
        else:
            base[key] = value


def _parse_value(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_override(tree: dict[str, Any], assignment: str) -> None:
    """Apply one 'dotted.key=value' override in place; the value is parsed as JSON, else kept as a string."""
    key, sep, raw = assignment.partition("=")
    if not sep or not key.strip():
        raise ConfigError(f"Override {assignment!r} must look like key.path=value.")
    parts = key.strip().split(".")
    node = tree
    for i, part in enumerate(parts[:-1]):
        if not isinstance(node, dict) or part not in node or parts[0] in _OPAQUE_KEYS:
            raise ConfigError(f"Unknown configuration key {'.'.join(parts[: i + 1])!r} in override {assignment!r}.")
        node = node[part]
    leaf = parts[-1]
    if not isinstance(node, dict) or leaf not in node:
        raise ConfigError(f"Unknown configuration key {key.strip()!r} in override {assignment!r}.")
    node[leaf] = _parse_value(raw.strip())


# ─── typed construction ───


def _coerce(value: Any, default: Any, path: str) -> Any:
    try:
        if isinstance(default, bool):
            if not isinstance(value, bool):
                raise TypeError
            return value
        if isinstance(default, int):
            if isinstance(value, bool) or float(value) != int(value):
                raise TypeError
            return int(value)
        if isinstance(default, float) or default is None:
            if value is None:
                return None
            if isinstance(value, bool):
                raise TypeError
            return float(value)
        if isinstance(default, str):
            if not isinstance(value, str):
                raise TypeError
            return value
    except (TypeError, ValueError):
        raise ConfigError(f"Configuration key {path!r} has invalid value {value!r}.") from None
    return value


def _build(cls, values: dict[str, Any], path: str):
    defaults = cls()._asdict()
    return cls(**{k: _coerce(values[k], defaults[k], f"{path}.{k}") for k in defaults})


def _parameter_names() -> set[str]:
    return {f"{group}.{field}" for group, cls in _PARAMETER_GROUPS.items() for field in cls._fields if field != "initial_state"}


def _sweep_axes(raw: Any) -> tuple[SweepAxis, ...]:
    if not isinstance(raw, list):
        raise ConfigError(f"'sweep' must be a list of axes, got {raw!r}.")
    names = _parameter_names()
    axes = []
    for entry in raw:
        if not isinstance(entry, dict) or "parameter" not in entry:
            raise ConfigError(f"Sweep axis {entry!r} needs a 'parameter' key.")
        name = entry["parameter"]
        if name not in names:
            raise ConfigError(f"Sweep axis references unknown parameter {name!r}; choose from {', '.join(sorted(names))}.")
        extra = set(entry) - {"parameter", "values", "linspace"}
        if extra:
            raise ConfigError(f"Sweep axis {name!r} has unknown keys: {', '.join(sorted(extra))}.")
        if ("values" in entry) == ("linspace" in entry):
            raise ConfigError(f"Sweep axis {name!r} needs exactly one of 'values' or 'linspace'.")
        try:
            if "values" in entry:
                values = tuple(float(v) for v in entry["values"])
            else:
                start, stop, n = entry["linspace"]
                values = tuple(float(v) for v in np.linspace(float(start), float(stop), int(n)))
        except (TypeError, ValueError) as e:
            raise ConfigError(f"Sweep axis {name!r} has invalid values: {e}") from e
        if not values:
            raise ConfigError(f"Sweep axis {name!r} has no values.")
        axes.append(SweepAxis(parameter=name, values=values))
    swept = [a.parameter for a in axes]
    if len(set(swept)) != len(swept):
        raise ConfigError("Each parameter may appear in at most one sweep axis.")
    return tuple(axes)


def _derived_axes(raw: Any, sweep: tuple[SweepAxis, ...]) -> tuple[DerivedAxis, ...]:
    if not isinstance(raw, dict):
        raise ConfigError(f"'derived' must be an object mapping parameter -> {{of, scale, offset}}, got {raw!r}.")
    names = _parameter_names()
    swept = {a.parameter for a in sweep}
    axes = []
    for name, spec in raw.items():
        if name not in names:
            raise ConfigError(f"Derived axis references unknown parameter {name!r}.")
        if name in swept:
            raise ConfigError(f"Parameter {name!r} cannot be both swept and derived.")
        if not isinstance(spec, dict) or spec.get("of") not in names:
            raise ConfigError(f"Derived axis {name!r} needs 'of' naming a system or bath parameter.")
        extra = set(spec) - {"of", "scale", "offset"}
        if extra:
            raise ConfigError(f"Derived axis {name!r} has unknown keys: {', '.join(sorted(extra))}.")
        try:
            axes.append(DerivedAxis(name, spec["of"], float(spec.get("scale", 1.0)), float(spec.get("offset", 0.0))))
        except (TypeError, ValueError) as e:
            raise ConfigError(f"Derived axis {name!r} has invalid scale/offset: {e}") from e
    derived_names = {a.parameter for a in axes}
    for a in axes:
        if a.of in derived_names:
            raise ConfigError(f"Derived axis {a.parameter!r} depends on another derived parameter {a.of!r}.")
    return tuple(axes)


def _choices(raw: Any, allowed: tuple[str, ...], key: str) -> tuple[str, ...]:
    if isinstance(raw, str):
        raw = [raw]
    if not isinstance(raw, list) or not raw:
        raise ConfigError(f"'{key}' must be a non-empty list drawn from {', '.join(allowed)}.")
    unknown = [m for m in raw if m not in allowed]
    if unknown:
        raise ConfigError(f"Unknown {key}: {', '.join(map(str, unknown))}; expected any of {', '.join(allowed)}.")
    return tuple(dict.fromkeys(raw))


def from_tree(tree: dict[str, Any]) -> RunConfig:
    """Typed RunConfig from a merged key tree; ConfigError on any invalid entry."""
    system = _build(SystemParams, tree["system"], "system")
    bath = _build(BathParams, tree["bath"], "bath")
    num = tree["numerics"]
    convention = num["dephasing_convention"]
    if convention not in DEPHASING_CONVENTIONS:
        raise ConfigError(
            f"numerics.dephasing_convention must be one of {', '.join(DEPHASING_CONVENTIONS)}, got {convention!r}."
        )
    numerics = Numerics(
        **{name: _build(cls, num[name], f"numerics.{name}") for name, cls in _NUMERICS_SECTIONS.items()},
        dephasing_convention=convention,
    )
    out = tree["output"]
    output = OutputSettings(
        directory=Path(_coerce(out["directory"], "", "output.directory")),
        write_population=_coerce(out["write_population"], True, "output.write_population"),
        write_spectra=_coerce(out["write_spectra"], True, "output.write_spectra"),
    )
    workers = _coerce(tree["workers"], WORKERS_DEFAULT, "workers")
    if workers < 1:
        raise ConfigError(f"workers must be >= 1, got {workers}.")
    sweep = _sweep_axes(tree["sweep"])
    config = RunConfig(
        system=system,
        bath=bath,
        methods=_choices(tree["methods"], ALL_METHODS, "methods"),
        routes=_choices(tree["routes"], ROUTES, "routes"),
        sweep=sweep,
        derived=_derived_axes(tree["derived"], sweep),
        numerics=numerics,
        output=output,
        workers=workers,
        compare_oracle=_coerce(tree["compare_oracle"], True, "compare_oracle"),
    )
    try:
        system.validate()
        bath.validate()
    except ValueError as e:
        raise ConfigError(str(e)) from e
    return config


def load_config(
    path: Optional[Union[str, Path]] = None,
    overrides: Iterable[str] = (),
    out: Optional[Union[str, Path]] = None,
) -> RunConfig:
    """
    Read a JSON run configuration (or start from defaults when path is None),
    apply --set overrides and --out, and validate.
    """
    tree = default_tree()
    if path is not None:
        path = Path(path)
        try:
            document = json.loads(path.read_text())
        except OSError as e:
            raise ConfigError(f"Cannot read configuration {path}: {e}") from e
        except json.JSONDecodeError as e:
            raise ConfigError(f"Configuration {path} is not valid JSON: {e}") from e
        if not isinstance(document, dict):
            raise ConfigError(f"Configuration {path} must be a JSON object.")
        document.pop("description", None)
        _merge(tree, document)
    for assignment in overrides:
        apply_override(tree, assignment)
    if out is not None:
        tree["output"]["directory"] = str(out)
    config = from_tree(tree)
    logger.debug("Loaded configuration: %d point(s), methods=%s", config.point_count, ",".join(config.methods))
    return config


def config_to_tree(config: RunConfig) -> dict[str, Any]:
    """JSON-compatible view of a RunConfig, written next to the run outputs."""
    return {
        "system": config.system._asdict(),
        "bath": config.bath._asdict(),
        "methods": list(config.methods),
        "routes": list(config.routes),
        "sweep": [{"parameter": a.parameter, "values": list(a.values)} for a in config.sweep],
        "derived": {a.parameter: {"of": a.of, "scale": a.scale, "offset": a.offset} for a in config.derived},
        "numerics": {
            **{name: getattr(config.numerics, name)._asdict() for name in _NUMERICS_SECTIONS},
            "dephasing_convention": config.numerics.dephasing_convention,
        },
        "output": {
            "directory": str(config.output.directory),
            "write_population": config.output.write_population,
            "write_spectra": config.output.write_spectra,
        },
        "workers": config.workers,
        "compare_oracle": config.compare_oracle,
    }


# ─── sweep expansion ───


def _set_parameter(params: dict[str, dict[str, Any]], name: str, value: float) -> None:
    group, field = name.split(".", 1)
    params[group][field] = value


def _get_parameter(params: dict[str, dict[str, Any]], name: str) -> float:
    group, field = name.split(".", 1)
    return params[group][field]


def expand_sweep(config: RunConfig) -> list[SweepPoint]:
    """Cartesian product of the sweep axes in axis order, derived parameters filled in per point."""
    points = []
    grids = [axis.values for axis in config.sweep]
    for index, combo in enumerate(itertools.product(*grids)):
        params = {"system": config.system._asdict(), "bath": config.bath._asdict()}
        values: dict[str, float] = {}
        for axis, value in zip(config.sweep, combo):
            _set_parameter(params, axis.parameter, value)
            values[axis.parameter] = value
        for axis in config.derived:
            value = axis.scale * float(_get_parameter(params, axis.of)) + axis.offset
            _set_parameter(params, axis.parameter, value)
            values[axis.parameter] = value
        try:
            system = SystemParams(**params["system"]).validate()
            bath = BathParams(**params["bath"]).validate()
        except ValueError as e:
            raise ConfigError(f"Sweep point {index} ({values}) is invalid: {e}") from e
        points.append(SweepPoint(index=index, values=values, system=system, bath=bath))
    return points
