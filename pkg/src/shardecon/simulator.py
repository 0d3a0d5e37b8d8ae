"""Interval loop tying agents, ledger, shard sizing, pricing and the policy
controller together."""

from __future__ import annotations

import math
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields
from fractions import Fraction

from . import rng
from .agents import AgentState, decide_participation, make_population, perform_duty, step_demand
from .config import SimConfig
from .ledger import DepositStatus, Ledger
from .policy import Bounds, PolicyState, compute_aggregates, split_rewards, update_price
from .security import as_fraction, max_shards


@dataclass
class IntervalRecord:
    height: int
    M0: int
    M1: int
    M2: int
    ratio: float
    Q: int
    P: int
    R: int
    GPL: int
    GN: int
    I: float
    s: int
    capacity: int
    pending: int
    registrations: int
    maturations: int
    confiscations: int
    maintainers: int


COLUMNS = tuple(f.name for f in fields(IntervalRecord))


def mint_amount(cfg: SimConfig, height: int) -> int:
    steps = height // cfg.mint_period
    if cfg.mint_decay == "halving":
        return cfg.mint_initial >> steps if steps < cfg.mint_initial.bit_length() + 1 else 0
    return max(0, cfg.mint_initial - cfg.mint_step * steps)


def shard_count(cfg: SimConfig, reliable: int) -> int:
    """Shards formed by ``reliable`` serving nodes; at least one once m_min is met."""
    if reliable < max(cfg.m_min, 1):
        return 0
    adversaries = math.floor(as_fraction(cfg.adversary_fraction) * reliable)
    return max(1, max_shards(reliable, adversaries, cfg.t_frac, cfg.budget))


def execute_in_order(led: Ledger, agents: list[AgentState], price: int, capacity: int,
                     fee: int) -> tuple[int, int]:
    """Top up each contract to the agent's demand and run lines in id order.

    A top-up happens only when the owner can pay it plus the fee. Requested
    lines are ``contract balance // price`` (the whole balance when the
    price is 0). Lines beyond ``capacity`` stay pending. Returns
    ``(executed, pending)``.
    """
    accounts, contracts = led.accounts, led.contracts
    room = capacity
    executed = pending = 0
    for agent in sorted(agents, key=lambda a: a.id):
        contract = contracts[agent.contract]
        need = agent.demand - contract.balance
        if need > 0 and accounts[agent.account] >= need + fee:
            led.fund_contract(agent.account, agent.contract, need, fee)
        lines = contract.balance // price if price else contract.balance
        if lines == 0:
            continue
        if room:
            _, done = led.execute_contract(agent.contract, min(lines, room), price)
            room -= done
            executed += done
            lines -= done
        pending += lines
    return executed, pending


class Simulation:
    def __init__(self, cfg: SimConfig, record_ops: bool = False):
        self.cfg = cfg
        self.ledger = Ledger(fee=cfg.fee, record=record_ops)
        self.agents: list[AgentState] = make_population(cfg.population, cfg.seed, cfg.demand, cfg.fear, cfg.duty)
        self.policy = PolicyState(
            B=cfg.B, U=cfg.U, avgq_window=cfg.avgq_window, GPL=cfg.gpl_initial, I=cfg.i_initial,
            bounds=Bounds(cfg.gpl_min, cfg.gpl_max, cfg.i_min, cfg.i_max),
            window=cfg.history_window, lam=cfg.ridge,
        )
        self.q_history: deque[int] = deque(maxlen=cfg.avgq_window)
        self.maturing: dict[int, list[int]] = {}
        self.records: list[IntervalRecord] = []
        self.height = 0
        self._pool = ThreadPoolExecutor(cfg.workers) if cfg.workers > 1 else None
        self._genesis()
        self.M2_prev = compute_aggregates(self.ledger, 0, cfg.B).M2
        self.price = update_price(cfg.U, self.M2_prev, cfg.avq_initial)

    def _genesis(self) -> None:
        led = self.ledger
        endowments = []
        for a in self.agents:
            led.open_account(a.account)
            led.open_contract(a.contract, a.account)
            r = rng.substream(self.cfg.seed, a.id, -1, "balance")
            endowments.append(int(self.cfg.balance.sample(r)))
        led.mint(sum(endowments))
        for a, amount in zip(self.agents, endowments):
            if amount:
                led.payout(a.account, amount)
        led.check()

    def close(self) -> None:
        if self._pool is not None:
            self._pool.shutdown()
            self._pool = None

    def _fan_out(self, fn, items: list) -> list:
        # results come back in input order whatever the worker count
        if self._pool is None or len(items) < 2:
            return [fn(x) for x in items]
        n = self.cfg.workers
        chunk = -(-len(items) // n)
        parts = [items[i:i + chunk] for i in range(0, len(items), chunk)]
        out = []
        for res in self._pool.map(lambda part: [fn(x) for x in part], parts):
            out.extend(res)
        return out

    def step(self) -> IntervalRecord:
        cfg, led, h = self.cfg, self.ledger, self.height
        led.height = h
        pool_before = led.pool.balance
        inflow_adjust = 0  # pool growth this interval that is not R (confiscations)
        gpl, share_i = self.policy.GPL, self.policy.I
        seed = cfg.seed

        # 1. initial distribution
        led.mint(mint_amount(cfg, h))

        # 2. demand walk
        shock = as_fraction(cfg.shock_factor) if cfg.shock_height and h == cfg.shock_height else None

        def walk(agent: AgentState) -> AgentState:
            step_demand(agent, h, seed)
            if shock is not None:
                agent.demand = math.floor(agent.demand * shock)
            return agent

        self._fan_out(walk, self.agents)

        # 3. registrations
        accounts = led.accounts
        margins = self._fan_out(
            lambda a: decide_participation(a, accounts[a.account], gpl, cfg.fee, seed, h), self.agents)
        cohort = []
        for agent, margin in zip(self.agents, margins):
            if margin is None:
                continue
            dep = led.register_reliable(agent.account, margin, gpl, h)
            agent.deposit, agent.end = dep.id, dep.end
            self.maturing.setdefault(dep.end, []).append(agent.id)
            cohort.append(dep)
        gn = len(cohort)

        # 4. shard sizing
        reliable = sum(1 for a in self.agents if a.deposit is not None)
        shards = shard_count(cfg, reliable)
        capacity = shards * cfg.qmax

        # 5. purchases, executed in agent-id order up to capacity
        price = self.price
        executed, pending = execute_in_order(led, self.agents, price, capacity, cfg.fee)

        # 6. duty
        confiscations = 0
        maintainers = []
        for agent in self.agents:
            if agent.deposit is None:
                continue
            if perform_duty(agent, h, seed):
                maintainers.append(agent)
            else:
                inflow_adjust += led.confiscate_deposit(agent.deposit)
                agent.deposit = agent.end = None
                confiscations += 1

        # 7. reward split
        R = led.pool.balance - pool_before - inflow_adjust
        cohort = [d for d in cohort if d.status is DepositStatus.SERVING]
        split = split_rewards(R, share_i, [d.principal for d in cohort], len(maintainers))
        if split.earmark:
            led.reserve_cohort(h, {d.id: s for d, s in zip(cohort, split.shares)})
        if split.per_maintainer:
            for agent in maintainers:
                led.payout(agent.account, split.per_maintainer)

        # 8. maturity
        maturations = 0
        for aid in self.maturing.pop(h, ()):
            agent = self.agents[aid]
            if agent.deposit is not None and agent.end == h:
                led.mature_deposit(agent.deposit, now=h)
                agent.deposit = agent.end = None
                maturations += 1

        # 9. aggregates
        snap = compute_aggregates(led, h, cfg.B)

        # 10. next price
        self.q_history.append(executed)
        if h + 1 < cfg.avq_warmup:
            avgq = Fraction(cfg.avq_initial)
        else:
            avgq = Fraction(sum(self.q_history), len(self.q_history))
        self.price = update_price(cfg.U, snap.M2, avgq)
        self.M2_prev = snap.M2

        rec = IntervalRecord(
            height=h, M0=snap.M0, M1=snap.M1, M2=snap.M2, ratio=snap.ratio, Q=executed, P=price, R=R,
            GPL=gpl, GN=gn, I=share_i, s=shards, capacity=capacity, pending=pending,
            registrations=gn, maturations=maturations, confiscations=confiscations,
            maintainers=len(maintainers),
        )

        # 11. policy for the next interval
        if self.records:
            prev = self.records[-1]
            self.policy.observe((prev.GPL, prev.GN, prev.I, prev.ratio, rec.ratio))
        if h >= cfg.warmup:
            self.policy.update(gn, rec.ratio)

        # 12. record
        self.records.append(rec)
        if (h + 1) % cfg.check_every == 0 or h + 1 == cfg.intervals:
            led.check()
        self.height += 1
        return rec


def run(cfg: SimConfig, record_ops: bool = False, on_record=None) -> list[IntervalRecord]:
    sim = Simulation(cfg, record_ops=record_ops)
    try:
        for _ in range(cfg.intervals):
            rec = sim.step()
            if on_record is not None:
                on_record(rec, sim)
    finally:
        sim.close()
    return sim.records
