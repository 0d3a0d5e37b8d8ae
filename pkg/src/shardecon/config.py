"""Simulation configuration and its ``key = value`` file format.

Example::

    # desk-scale run
    population = 2000
    intervals = 2000
    seed = 7
    agents.demand = uniform(1000, 100000)
"""

from __future__ import annotations

import dataclasses
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .agents import Dist


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SimConfig:
    population: int = 20_000
    intervals: int = 10_000
    seed: int = 0

    B: float = 2.0
    U: float = 0.013
    avgq_window: int = 50
    avq_initial: int = 5_000_000
    avq_warmup: int = 10

    gpl_initial: int = 10
    i_initial: float = 0.1
    gpl_min: int = 10
    gpl_max: int = 10_000
    i_min: float = 0.0001
    i_max: float = 0.8
    warmup: int = 10
    history_window: int = 99
    ridge: float = 0.0

    mint_initial: int = 50_000_000_000
    mint_decay: str = "halving"
    mint_period: int = 100
    mint_step: int = 2

    fee: int = 1
    qmax: int = 1_000_000
    m_min: int = 20
    t_frac: float = 0.7
    budget: float = 1e-6
    adversary_fraction: float = 0.5

    demand: Dist = Dist("uniform", (1, 100))
    fear: Dist = Dist("uniform", (50, 1000))
    duty: Dist = Dist("const", (1.0,))
    balance: Dist = Dist("uniform", (5_000, 50_000))

    # demand multiplier applied to every agent at shock_height (0 = never)
    shock_height: int = 0
    shock_factor: float = 1.0

    workers: int = 1
    check_every: int = 1

    def __post_init__(self):
        problems = []
        if self.population < 0 or self.intervals < 0:
            problems.append("population and intervals must be nonnegative")
        if not self.gpl_min <= self.gpl_max or not self.i_min <= self.i_max:
            problems.append("policy bounds must satisfy min <= max")
        if not (1 <= self.gpl_min and 0 <= self.i_min and self.i_max <= 1):
            problems.append("GPL bounds must be >= 1 and I bounds inside [0, 1]")
        if not (self.gpl_min <= self.gpl_initial <= self.gpl_max and self.i_min <= self.i_initial <= self.i_max):
            problems.append("initial GPL and I must lie inside their bounds")
        if not 0 < self.U < 1 or self.B <= 1:
            problems.append("need 0 < U < 1 and B > 1")
        if self.mint_decay not in ("halving", "subtract"):
            problems.append(f"mint_decay must be halving or subtract, not {self.mint_decay!r}")
        if not 0.5 < self.t_frac <= 1 or not 0 < self.budget < 1:
            problems.append("need 0.5 < t_frac <= 1 and 0 < budget < 1")
        if not 0 <= self.adversary_fraction <= 1:
            problems.append("adversary_fraction must lie in [0, 1]")
        if min(self.avgq_window, self.mint_period, self.history_window, self.workers, self.check_every) < 1:
            problems.append("windows, periods, workers and check_every must be >= 1")
        if min(self.fee, self.qmax, self.m_min, self.mint_initial, self.avq_initial, self.mint_step) < 0:
            problems.append("amounts and capacities must be nonnegative")
        for name in ("demand", "fear", "balance", "duty"):
            if min(getattr(self, name).args) < 0:
                problems.append(f"agents.{name} must not go negative")
        if max(self.duty.args) > 1:
            problems.append("agents.duty is a probability and must stay within [0, 1]")
        if problems:
            raise ConfigError("; ".join(problems))

    def replace(self, **changes) -> "SimConfig":
        return dataclasses.replace(self, **changes)

    def to_text(self) -> str:
        lines = []
        for f in dataclasses.fields(self):
            key = f"agents.{f.name}" if f.name in _AGENT_KEYS else f.name
            lines.append(f"{key} = {_render(getattr(self, f.name))}")
        return "\n".join(lines) + "\n"


_AGENT_KEYS = {"demand", "fear", "duty", "balance"}
_DIST_RE = re.compile(r"^(\w+)\s*\((.*)\)$")


def _render(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _number(text: str):
    try:
        return int(text.replace("_", ""))
    except ValueError:
        return float(text)


def parse_dist(text: str) -> Dist:
    m = _DIST_RE.match(text.strip())
    if not m:
        return Dist("const", (_number(text.strip()),))
    kind, body = m.group(1), m.group(2)
    args = tuple(_number(a.strip()) for a in body.split(",") if a.strip())
    if kind == "uniform" and len(args) == 2 and args[0] <= args[1]:
        return Dist(kind, args)
    if kind == "const" and len(args) == 1:
        return Dist(kind, args)
    raise ConfigError(f"bad distribution {text!r}; use uniform(lo, hi) or const(x)")


def _coerce(name: str, kind, text: str):
    try:
        if kind in ("int", int):
            value = _number(text)
            if isinstance(value, float):
                if not value.is_integer():
                    raise ValueError
                value = int(Fraction(text))
            return value
        if kind in ("float", float):
            return float(text)
        if kind in ("str", str):
            return text
        if kind in ("Dist", Dist):
            return parse_dist(text)
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"{name}: cannot read {text!r} as {kind}") from None
    raise ConfigError(f"{name}: unsupported field type {kind}")


def parse_config(text: str, base: SimConfig | None = None) -> SimConfig:
    types = {f.name: f.type for f in dataclasses.fields(SimConfig)}
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        name = key[len("agents."):] if key.startswith("agents.") else key
        if name not in types or (key.startswith("agents.") != (name in _AGENT_KEYS)):
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        values[name] = _coerce(key, types[name], value)
    return dataclasses.replace(base or SimConfig(), **values)


def load_config(path) -> SimConfig:
    return parse_config(Path(path).read_text())
