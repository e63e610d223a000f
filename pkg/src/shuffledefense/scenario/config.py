"""Scenario files: INI sections with typed, validated keys."""

from __future__ import annotations

import configparser
import copy
from dataclasses import dataclass, field
from typing import Any, Callable

from shuffledefense.errors import ConfigError

MODES = ("analytic", "simulate", "mtd", "figure")
REQUIRED = object()


def _int(text: str) -> int:
    return int(text.strip())


def _float(text: str) -> float:
    return float(text.strip())


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.replace(";", ",").split(",") if t.strip()]


def _str(text: str) -> str:
    return text.strip()


def _fmt(value: Any) -> str:
    if isinstance(value, list):
        return ", ".join(_fmt(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclass(frozen=True)
class Key:
    parse: Callable[[str], Any]
    default: Any = REQUIRED
    check: Callable[[Any], bool] | None = None
    rule: str = ""


_nonneg = (lambda v: v >= 0, "must be >= 0")
_pos = (lambda v: v >= 1, "must be >= 1")


def _k(parse, default=REQUIRED, rule=None):
    check, text = rule if rule else (None, "")
    return Key(parse, default, check, text)


SCHEMA: dict[str, dict[str, Key]] = {
    "scenario": {
        "id": _k(_str),
        "mode": _k(_str, rule=(lambda v: v in MODES, f"must be one of {', '.join(MODES)}")),
        "preset": _k(_str, None),
    },
    "system": {
        "servers": _k(_int, rule=_pos),
        "nominal": _k(_int, rule=_nonneg),
        "attackers": _k(_int, rule=_nonneg),
        "overload_threshold": _k(_int, 1, _pos),
    },
    "shuffle": {
        "rounds": _k(_int, 10, _pos),
        "in_service_percent": _k(_float, 50.0, (lambda v: 0 <= v <= 100, "must lie in [0, 100]")),
        "trials": _k(_int, 10_000, _pos),
        "seed": _k(_int, 0, (lambda v: 0 <= v < 2**64, "must be an unsigned 64-bit value")),
        "population": _k(_str, "binomial", (lambda v: v in ("finite", "binomial"), "must be finite or binomial")),
        "workers": _k(_int, 1, _pos),
    },
    "churn": {
        "nominal_arrival_rate": _k(_float, rule=_nonneg),
        "attacker_arrival_rate": _k(_float, rule=_nonneg),
        "nominal_mean_lifetime": _k(_float, rule=_nonneg),
        "attacker_mean_lifetime": _k(_float, rule=_nonneg),
        "arrival_model": _k(
            _str,
            "poisson-exponential",
            (lambda v: v in ("poisson-exponential", "gaussian-deterministic"), "unknown arrival model"),
        ),
        "nominal_arrival_sd": _k(_float, 0.0, _nonneg),
        "attacker_arrival_sd": _k(_float, 0.0, _nonneg),
        "warmup": _k(_int, 200, _nonneg),
        "horizon": _k(_int, 1000, _pos),
        "trials": _k(_int, 10, _pos),
    },
    "reputation": {
        "scheme": _k(_str, "unit-increment", (lambda v: v in ("unit-increment", "autoregressive"), "unknown scheme")),
        "ar_factor": _k(_float, 0.9, (lambda v: 0 < v < 1, "must lie in (0, 1)")),
        "confidence": _k(_float, 2.0, (lambda v: v > 0, "must be positive")),
    },
    "quarantine": {
        "stages": _k(_int, 1, _pos),
        "hot_spares": _k(_int, 0, _nonneg),
    },
    "mtd": {
        "probe_rate": _k(_float, 1.0, _nonneg),
        "reset_rate": _k(_float, 1.0, (lambda v: v > 0, "must be positive")),
        "rate_model": _k(
            _str,
            "constant",
            (lambda v: v in ("constant", "linear-remaining", "linear-remaining-normalized"), "unknown rate model"),
        ),
        "z_grid": _k(_floats, None, (lambda v: len(v) > 0 and min(v) >= 0, "needs non-negative values")),
        "proxies": _k(_int, None, _pos),
    },
    "sweep": {
        "parameter": _k(_str),
        "values": _k(_floats, rule=(lambda v: len(v) > 0, "needs at least one value")),
    },
    "output": {
        "path": _k(_str, None),
        "format": _k(_str, "csv", (lambda v: v == "csv", "only csv is supported")),
    },
}

# sections each mode cannot run without
MODE_SECTIONS = {
    "analytic": ("system", "shuffle"),
    "simulate": ("system", "shuffle"),
    "mtd": ("mtd",),
    "figure": (),
}


@dataclass
class ScenarioConfig:
    """Parsed scenario. ``sections`` maps section -> key -> typed value;
    only sections present in the source are kept, with defaults filled in."""

    sections: dict[str, dict[str, Any]] = field(default_factory=dict)
    source: dict[str, dict[str, str]] = field(default_factory=dict)

    @property
    def scenario_id(self) -> str:
        return self.sections["scenario"]["id"]

    @property
    def mode(self) -> str:
        return self.sections["scenario"]["mode"]

    def has(self, section: str) -> bool:
        return section in self.sections

    def get(self, section: str, key: str, default: Any = None) -> Any:
        return self.sections.get(section, {}).get(key, default)

    @property
    def sweep(self) -> tuple[str, list[float]] | None:
        if not self.has("sweep"):
            return None
        return self.sections["sweep"]["parameter"], self.sections["sweep"]["values"]

    def with_value(self, dotted: str, value: Any) -> "ScenarioConfig":
        section, key = dotted.split(".", 1)
        if section not in SCHEMA or key not in SCHEMA[section]:
            raise ConfigError(dotted, "unknown key")
        clone = copy.deepcopy(self)
        if section not in clone.sections:
            clone.sections[section] = _defaults(section)
        clone.sections[section][key] = coerce(section, key, value)
        return clone

    def with_mode(self, mode: str) -> "ScenarioConfig":
        clone = self.with_value("scenario.mode", mode)
        validate(clone)
        return clone


def _defaults(section: str) -> dict[str, Any]:
    values = {}
    for key, spec in SCHEMA[section].items():
        if spec.default is REQUIRED:
            raise ConfigError(f"{section}.{key}", "missing required key")
        values[key] = spec.default
    return values


def coerce(section: str, key: str, value: Any) -> Any:
    """Convert a sweep value to the key's type, rejecting fractional integers."""
    spec = SCHEMA[section][key]
    if spec.parse is _int:
        if float(value) != int(float(value)):
            raise ConfigError(f"{section}.{key}", f"{value!r} is not an integer")
        value = int(float(value))
    elif spec.parse is _float:
        value = float(value)
    _check(section, key, spec, value)
    return value


def _check(section: str, key: str, spec: Key, value: Any) -> None:
    if spec.check is not None and value is not None and not spec.check(value):
        raise ConfigError(f"{section}.{key}", f"{value!r} {spec.rule}")


def parse_text(text: str) -> ScenarioConfig:
    parser = configparser.ConfigParser(
        interpolation=None, default_section="__unused__", inline_comment_prefixes=(";",)
    )
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError("file", str(exc).splitlines()[0]) from exc
    sections: dict[str, dict[str, Any]] = {}
    source: dict[str, dict[str, str]] = {}
    for name in parser.sections():
        if name not in SCHEMA:
            raise ConfigError(name, "unknown section")
        schema = SCHEMA[name]
        raw = dict(parser.items(name))
        for key in raw:
            if key not in schema:
                raise ConfigError(f"{name}.{key}", "unknown key")
        values = {}
        for key, spec in schema.items():
            if key in raw:
                try:
                    values[key] = spec.parse(raw[key])
                except ValueError:
                    raise ConfigError(f"{name}.{key}", f"cannot parse {raw[key]!r}") from None
            elif spec.default is REQUIRED:
                raise ConfigError(f"{name}.{key}", "missing required key")
            else:
                values[key] = spec.default
            _check(name, key, spec, values[key])
        sections[name] = values
        source[name] = raw
    config = ScenarioConfig(sections, source)
    validate(config)
    return config


def load(path: str) -> ScenarioConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError("file", f"cannot read {path}: {exc.strerror}") from exc
    return parse_text(text)


def validate(config: ScenarioConfig) -> None:
    """Cross-section checks; raises :class:`ConfigError` naming the key."""
    if "scenario" not in config.sections:
        raise ConfigError("scenario", "missing section")
    mode = config.mode
    for section in MODE_SECTIONS[mode]:
        if section not in config.sections:
            raise ConfigError(section, f"section required for mode {mode}")
    if mode == "figure" and not config.get("scenario", "preset"):
        raise ConfigError("scenario.preset", "required for mode figure")
    if mode == "mtd" and config.get("mtd", "proxies") is None and not config.has("system"):
        raise ConfigError("mtd.proxies", "required when there is no system section")
    if mode == "mtd" and config.get("mtd", "z_grid") is None:
        raise ConfigError("mtd.z_grid", "required for mode mtd")
    sweep = config.sweep
    if sweep:
        dotted = sweep[0]
        section, _, key = dotted.partition(".")
        if section not in SCHEMA or key not in SCHEMA[section] or section in ("scenario", "sweep", "output"):
            raise ConfigError("sweep.parameter", f"{dotted!r} does not name a sweepable field")
        if section not in config.sections:
            raise ConfigError("sweep.parameter", f"{dotted!r} refers to absent section [{section}]")
        if SCHEMA[section][key].parse not in (_int, _float):
            raise ConfigError("sweep.parameter", f"{dotted!r} is not numeric")
        for value in sweep[1]:
            try:
                coerce(section, key, value)
            except ConfigError as exc:
                raise ConfigError("sweep.values", str(exc)) from None


def serialize(config: ScenarioConfig) -> str:
    """INI text holding every key of every present section."""
    lines = []
    for section, values in config.sections.items():
        lines.append(f"[{section}]")
        for key, value in values.items():
            if value is not None:
                lines.append(f"{key} = {_fmt(value)}")
        lines.append("")
    return "\n".join(lines)
