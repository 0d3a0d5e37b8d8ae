"""Simulated participants: demand random walk, fear-line registration and duty."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

from . import rng

DEMAND_EVERY = 10
DEMAND_STEP = 0.05


@dataclass
class AgentState:
    id: int
    demand: int
    fear: int
    duty: float = 1.0
    deposit: int | None = None
    end: int | None = None

    @property
    def account(self) -> str:
        return f"ta{self.id}"

    @property
    def contract(self) -> str:
        return f"sc{self.id}"

    @property
    def serving(self) -> bool:
        return self.deposit is not None


def scale_demand(demand: int, factor: float) -> int:
    return math.floor(demand * factor)


def step_demand(agent: AgentState, height: int, seed: int) -> AgentState:
    """Every 10th interval, scale demand by a factor drawn from [0.95, 1.05]."""
    if height % DEMAND_EVERY == 0 and agent.demand > 0:
        u = rng.unit(seed, agent.id, height, "demand")
        agent.demand = scale_demand(agent.demand, 1.0 - DEMAND_STEP + 2 * DEMAND_STEP * u)
    return agent


def time_to_bankruptcy(balance: int, demand: int) -> float:
    if demand == 0:
        return math.inf
    return balance // demand


def viable_margin(balance: int, demand: int, gpl: int, fee: int) -> int:
    """Largest margin that still lets the agent keep buying for the whole term."""
    return balance - demand * gpl - fee


def decide_participation(agent: AgentState, balance: int, gpl: int, fee: int,
                         seed: int, height: int) -> int | None:
    """Margin to register with this interval, or None."""
    if agent.serving:
        return None
    if time_to_bankruptcy(balance, agent.demand) > agent.fear:
        return None
    hi = viable_margin(balance, agent.demand, gpl, fee)
    if hi < 1:
        return None
    return rng.substream(seed, agent.id, height, "margin").randint(1, hi)


def perform_duty(agent: AgentState, height: int, seed: int) -> bool:
    if agent.duty >= 1.0:
        return True
    if agent.duty <= 0.0:
        return False
    return rng.unit(seed, agent.id, height, "duty") < agent.duty


# -- population construction ---------------------------------------------------

@dataclass(frozen=True)
class Dist:
    """Integer or real distribution named in the config (``uniform``/``const``)."""

    kind: str
    args: tuple

    def sample(self, r: random.Random, integer: bool = True):
        if self.kind == "const":
            return self.args[0]
        if self.kind == "uniform":
            lo, hi = self.args
            if integer:
                return r.randint(int(lo), int(hi))
            return r.uniform(lo, hi)
        raise ValueError(f"unknown distribution {self.kind!r}")

    def __str__(self) -> str:
        return f"{self.kind}({', '.join(repr(a) for a in self.args)})"


def make_population(size: int, seed: int, demand: Dist, fear: Dist, duty: Dist) -> list[AgentState]:
    agents = []
    for i in range(size):
        r = rng.substream(seed, i, -1, "init")
        agents.append(AgentState(
            id=i,
            demand=int(demand.sample(r)),
            fear=int(fear.sample(r)),
            duty=float(duty.sample(r, integer=False)),
        ))
    return agents
