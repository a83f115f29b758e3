from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Callable, Dict, List, Literal, Optional, Tuple

from .eos import EosPair, EosSpec
from .errors import ConfigError
from .hyperbolic import SchemeConfig
from .mesh import DEFAULT_DENSITY_FLOOR, Mesh1D

System = Literal["bep", "ae", "euler"]
SYSTEMS: Tuple[str, ...] = ("bep", "ae", "euler")

DEFAULT_EPS_LIST = (1e-1, 3e-2, 1e-2, 3e-3, 1e-3)


@dataclass(frozen=True)
class RunConfig:
    """Resolved run configuration; every field has a documented default."""

    system: System = "bep"
    eps: float = 1e-2
    delta: float = 1.0
    gamma1: float = 2.0
    k1: float = 1.0
    gamma2: float = 2.0
    k2: float = 1.0
    L: float = 1.0
    ncells: int = 200
    cfl: float = 0.5
    T: float = 0.2
    amplitude: float = 0.05
    kick: float = 0.5
    output_dir: str = "output"
    seed: int = 0
    density_floor: float = DEFAULT_DENSITY_FLOOR
    output_stride: int = 0
    samples: int = 20
    workers: int = 1
    eps_list: Tuple[float, ...] = DEFAULT_EPS_LIST

    def violations(self) -> List[str]:
        checks = [
            (
                self.system in SYSTEMS,
                f"system must be one of {', '.join(SYSTEMS)}, got '{self.system}'",
            ),
            (self.eps > 0.0, f"eps must be positive, got {self.eps}"),
            (self.delta >= 0.0, f"delta must be non-negative, got {self.delta}"),
            (
                self.system != "bep" or self.delta > 0.0,
                f"delta must be positive when system = bep, got {self.delta}",
            ),
            (self.gamma1 > 1.0, f"gamma1 must be greater than 1, got {self.gamma1}"),
            (self.gamma2 > 1.0, f"gamma2 must be greater than 1, got {self.gamma2}"),
            (self.k1 > 0.0, f"k1 must be positive, got {self.k1}"),
            (self.k2 > 0.0, f"k2 must be positive, got {self.k2}"),
            (self.L > 0.0, f"L must be positive, got {self.L}"),
            (self.ncells >= 3, f"ncells must be at least 3, got {self.ncells}"),
            (0.0 < self.cfl <= 1.0, f"cfl must be in (0, 1], got {self.cfl}"),
            (self.T > 0.0, f"T must be positive, got {self.T}"),
            (
                0.0 <= self.amplitude <= 0.5,
                f"amplitude must be in [0, 0.5], got {self.amplitude}",
            ),
            (0.0 <= self.kick <= 1.0, f"kick must be in [0, 1], got {self.kick}"),
            (bool(self.output_dir), "output_dir must not be empty"),
            (self.seed >= 0, f"seed must be non-negative, got {self.seed}"),
            (
                self.density_floor > 0.0,
                f"density_floor must be positive, got {self.density_floor}",
            ),
            (
                self.output_stride >= 0,
                f"output_stride must be non-negative, got {self.output_stride}",
            ),
            (self.samples >= 2, f"samples must be at least 2, got {self.samples}"),
            (self.workers >= 1, f"workers must be at least 1, got {self.workers}"),
            (len(self.eps_list) > 0, "eps_list must not be empty"),
            (
                all(e > 0.0 for e in self.eps_list),
                f"eps_list entries must be positive, got {_render(self.eps_list)}",
            ),
            (
                all(b < a for a, b in zip(self.eps_list, self.eps_list[1:])),
                f"eps_list must be strictly decreasing, got {_render(self.eps_list)}",
            ),
        ]
        return [message for ok, message in checks if not ok]

    def validate(self) -> "RunConfig":
        found = self.violations()
        if found:
            raise ConfigError(found)
        return self

    def eos(self) -> EosPair:
        return EosPair(EosSpec(self.gamma1, self.k1), EosSpec(self.gamma2, self.k2))

    def mesh(self) -> Mesh1D:
        return Mesh1D(self.L, self.ncells)

    def scheme(self) -> SchemeConfig:
        return SchemeConfig(
            cfl=self.cfl,
            end_time=self.T,
            density_floor=self.density_floor,
            output_stride=self.output_stride,
        )

    def header_lines(self) -> List[str]:
        """`key = value` for every field, in declaration order."""
        return [
            f"{f.name} = {_render(getattr(self, f.name))}"
            for f in dataclasses.fields(self)
        ]

    def to_string(self) -> str:
        return "\n".join(self.header_lines()) + "\n"

    @classmethod
    def from_string(cls, text: str) -> "RunConfig":
        return parse_config(text)


def _render(value: object) -> str:
    if isinstance(value, tuple):
        return ",".join(_render(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse_float(text: str) -> float:
    return float(text)


def _parse_int(text: str) -> int:
    return int(text)


def _parse_str(text: str) -> str:
    return text


def _parse_float_list(text: str) -> Tuple[float, ...]:
    parts = [p.strip() for p in text.split(",")]
    if not all(parts):
        raise ValueError(f"empty entry in list '{text}'")
    return tuple(float(p) for p in parts)


_PARSERS: Dict[str, Callable[[str], object]] = {
    "system": _parse_str,
    "eps": _parse_float,
    "delta": _parse_float,
    "gamma1": _parse_float,
    "k1": _parse_float,
    "gamma2": _parse_float,
    "k2": _parse_float,
    "L": _parse_float,
    "ncells": _parse_int,
    "cfl": _parse_float,
    "T": _parse_float,
    "amplitude": _parse_float,
    "kick": _parse_float,
    "output_dir": _parse_str,
    "seed": _parse_int,
    "density_floor": _parse_float,
    "output_stride": _parse_int,
    "samples": _parse_int,
    "workers": _parse_int,
    "eps_list": _parse_float_list,
}


def parse_config(text: str, overrides: Optional[Dict[str, str]] = None) -> RunConfig:
    """Parse `key = value` lines into a validated RunConfig.

    `#` starts a comment anywhere on a line. Unknown keys, duplicates,
    malformed lines and out-of-range values are all collected and raised
    together as one ConfigError. `overrides` are applied after the file,
    as if appended to it without the duplicate check.
    """
    found: List[str] = []
    values: Dict[str, object] = {}
    first_seen: Dict[str, int] = {}

    def assign(key: str, raw: str, where: str) -> None:
        try:
            values[key] = _PARSERS[key](raw)
        except ValueError:
            found.append(f"{where}: invalid value for {key}: '{raw}'")

    for line_num, line in enumerate(text.splitlines(), 1):
        content = line.split("#", 1)[0].strip()
        if not content:
            continue
        if "=" not in content:
            found.append(f"line {line_num}: expected 'key = value', got '{content}'")
            continue
        key, raw = (part.strip() for part in content.split("=", 1))
        if key not in _PARSERS:
            found.append(f"line {line_num}: unknown key '{key}'")
            continue
        if key in first_seen:
            found.append(
                f"line {line_num}: duplicate key '{key}' "
                f"(first set on line {first_seen[key]})"
            )
            continue
        first_seen[key] = line_num
        assign(key, raw, f"line {line_num}")

    for key, raw in (overrides or {}).items():
        if key not in _PARSERS:
            found.append(f"override: unknown key '{key}'")
            continue
        assign(key, raw, "override")

    config = RunConfig(**values)  # type: ignore[arg-type]
    found.extend(config.violations())
    if found:
        raise ConfigError(found)
    return config


__all__ = ["RunConfig", "SYSTEMS", "DEFAULT_EPS_LIST", "parse_config"]
