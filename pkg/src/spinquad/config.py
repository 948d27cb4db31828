"""Scenario files: flat ``section.key = value`` lines, ``#`` comments.

Example::

    config.version = 1
    scenario.name = vacuum-tomography
    scenario.seed = 42
    state.kind = vacuum
    tomography.angles = 30
    tomography.shots = 20000

Values are typed by the schema below; lists are comma separated.  Every
error names the offending line.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        where = f"{path or '<config>'}:{line}: " if line is not None else f"{path or '<config>'}: "
        super().__init__(where + message)
        self.line = line


def _bool(text: str) -> bool:
    low = text.lower()
    if low in ("true", "yes", "1"):
        return True
    if low in ("false", "no", "0"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def _strs(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def _choice(*options: str) -> Callable[[str], str]:
    def parse(text: str) -> str:
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}; got {text!r}")
        return text
    return parse


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise ValueError(f"expected a positive integer, got {v}")
    return v


STATE_KINDS = ("vacuum", "coherent", "squeezed", "thermal", "fock1")
CHANNELS = ("identity", "swap", "attenuator", "noise", "measure_prepare", "measure_prepare_optimal")
TEMPLATES = ("unfolded", "folded_swap", "folded_swap_z", "folded_swap_no_waveplate", "folded_two_pass")

# key -> (parser, default); a default of ... marks a required key
SCHEMA: dict[str, tuple[Callable[[str], Any], Any]] = {
    "config.version": (int, SCHEMA_VERSION),
    "scenario.name": (str, ...),
    "scenario.seed": (int, ...),
    "output.dir": (str, "out"),
    "state.kind": (_choice(*STATE_KINDS), "vacuum"),
    "state.alpha_re": (float, 0.0),
    "state.alpha_im": (float, 0.0),
    "state.r": (float, 0.0),
    "state.variance": (float, 0.5),
    "state.cutoff": (_positive_int, 20),
    "scheme.name": (_choice("two_pass", "three_pass", "single_pass", "custom"), "two_pass"),
    "scheme.steps": (_strs, []),
    "scheme.kappa": (float, 1.0),
    "scheme.probe": (_choice("vacuum", "squeezed", "coherent", "thermal"), "vacuum"),
    "scheme.probe_r": (float, 0.0),
    "scheme.probe_variance": (float, 0.5),
    "scheme.measure": (_strs, ["s_z"]),
    "scheme.shots": (_positive_int, 1000),
    "scheme.angles": (_floats, [0.0]),
    "tomography.angles": (_positive_int, 30),
    "tomography.shots": (_positive_int, 20000),
    "tomography.cutoff": (float, 4.0),
    "tomography.bins": (_positive_int, 201),
    "tomography.grid_extent": (float, 5.0),
    "tomography.grid_n": (_positive_int, 64),
    "husimi.shots": (_positive_int, 100000),
    "husimi.bandwidth": (float, 0.0),
    "husimi.grid_extent": (float, 5.0),
    "husimi.grid_n": (_positive_int, 64),
    "benchmark.channel": (_choice(*CHANNELS), "identity"),
    "benchmark.channel_param": (float, 1.0),
    "benchmark.eta": (float, 1.0),
    "benchmark.lambda": (float, 1.0),
    "benchmark.phi": (float, 0.0),
    "benchmark.samples": (_positive_int, 100000),
    "oracle.cutoff": (_positive_int, 40),
    "oracle.alphas": (_floats, [0.0, 0.5, 1.0]),
    "oracle.tolerance": (float, 1e-4),
    "search.template": (_choice(*TEMPLATES), "folded_swap"),
    "search.target": (_choice("swap", "two_pass"), "swap"),
}


@dataclass
class Scenario:
    values: dict[str, Any]
    lines: dict[str, int] = field(default_factory=dict)
    text: str = ""

    def __getitem__(self, key: str) -> Any:
        return self.values[key]

    @property
    def name(self) -> str:
        return self.values["scenario.name"]

    @property
    def seed(self) -> int:
        return self.values["scenario.seed"]

    @property
    def digest(self) -> str:
        return hashlib.sha256(self.text.encode()).hexdigest()


def parse(text: str, path: str | None = None) -> Scenario:
    raw: dict[str, tuple[str, int]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        key, sep, value = stripped.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError("expected 'section.key = value'", lineno, path)
        if "." not in key:
            raise ConfigError(f"key {key!r} needs a section prefix", lineno, path)
        if key not in SCHEMA:
            raise ConfigError(f"unknown key {key!r}", lineno, path)
        if key in raw:
            raise ConfigError(f"duplicate key {key!r} (first set on line {raw[key][1]})", lineno, path)
        raw[key] = (value, lineno)

    values, lines = {}, {}
    for key, (parser, default) in SCHEMA.items():
        if key in raw:
            value, lineno = raw[key]
            try:
                values[key] = parser(value)
            except ValueError as exc:
                raise ConfigError(f"bad value for {key}: {exc}", lineno, path) from None
            lines[key] = lineno
        elif default is ...:
            raise ConfigError(f"missing required key {key!r}", None, path)
        else:
            values[key] = default
    if values["config.version"] != SCHEMA_VERSION:
        raise ConfigError(f"unsupported config.version {values['config.version']}",
                          lines.get("config.version"), path)
    return Scenario(values, lines, text)


def load(path: str | Path) -> Scenario:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", None, str(p)) from None
    return parse(text, str(p))
