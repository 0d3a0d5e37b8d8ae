"""Committee security probabilities for sharded blockchains.

Two models are covered:

* classic sharding, where a shard of ``m`` nodes is drawn without
  replacement from ``n`` nodes and is lost once adversaries hold ``k`` seats
  (a hypergeometric tail);
* the jury model, where every shard seats one member of each of ``m``
  occupations and an adversary must own ``T`` seats of a single shard.

Everything is computed with exact rationals. ``Probability.log10`` is a
convenience view for printing and for magnitudes far below the float range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache


class InvalidConfiguration(ValueError):
    """Raised when security parameters violate their preconditions."""


def as_fraction(x) -> Fraction:
    """Exact rational for ``x``; floats are read by their shortest decimal repr."""
    if isinstance(x, Probability):
        return x.exact
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)


def _log10_ratio(num: int, den: int) -> float:
    if num == 0:
        return -math.inf
    return math.log10(num) - math.log10(den)


@dataclass(frozen=True)
class Probability:
    exact: Fraction
    log10: float

    @classmethod
    def from_ratio(cls, num: int, den: int) -> "Probability":
        frac = Fraction(num, den)
        return cls(frac, _log10_ratio(frac.numerator, frac.denominator))

    @classmethod
    def from_fraction(cls, frac: Fraction) -> "Probability":
        return cls(frac, _log10_ratio(frac.numerator, frac.denominator))

    def __float__(self) -> float:
        # underflows to 0.0 below ~1e-308; use .log10 there
        return float(self.exact)

    def __le__(self, other) -> bool:
        return self.exact <= as_fraction(other)

    def __lt__(self, other) -> bool:
        return self.exact < as_fraction(other)

    def __ge__(self, other) -> bool:
        return self.exact >= as_fraction(other)

    def __gt__(self, other) -> bool:
        return self.exact > as_fraction(other)


ZERO = Probability(Fraction(0), -math.inf)
ONE = Probability(Fraction(1), 0.0)


@dataclass(frozen=True)
class ShardConfig:
    n: int
    s: int
    T: int
    AD: int
    m: int | None = None

    def __post_init__(self):
        if self.n < 1 or self.s < 1:
            raise InvalidConfiguration(f"need n >= 1 and s >= 1, got n={self.n}, s={self.s}")
        if self.m is None:
            object.__setattr__(self, "m", self.n // self.s)
        if self.m < 1 or self.s * self.m > self.n:
            raise InvalidConfiguration(f"shard size m={self.m} infeasible for n={self.n}, s={self.s}")
        if not (2 * self.T > self.m and self.T <= self.m):
            raise InvalidConfiguration(f"threshold T={self.T} must satisfy m/2 < T <= m (m={self.m})")
        if not 0 <= self.AD <= self.n:
            raise InvalidConfiguration(f"adversary count AD={self.AD} outside [0, {self.n}]")

    @classmethod
    def from_fraction(cls, n: int, s: int, AD: int, T_frac) -> "ShardConfig":
        m = n // s
        return cls(n=n, s=s, m=m, T=threshold_for(m, T_frac), AD=AD)


def threshold_for(m: int, T_frac) -> int:
    """Seats needed for a verdict: ``ceil(T_frac * m)``."""
    return math.ceil(as_fraction(T_frac) * m)


def hypergeom_tail(n: int, t: int, m: int, k: int) -> Probability:
    """Pr[X >= k] for X ~ Hypergeometric(population n, t marked, m draws)."""
    if not (0 <= t <= n and 1 <= m <= n and 0 <= k <= m):
        raise InvalidConfiguration(f"hypergeom_tail needs 0<=t<=n, 1<=m<=n, 0<=k<=m; got n={n} t={t} m={m} k={k}")
    lo = max(k, m - (n - t), 0)
    hi = min(m, t)
    num = sum(math.comb(t, x) * math.comb(n - t, m - x) for x in range(lo, hi + 1))
    return Probability.from_ratio(num, math.comb(n, m))


def _best_split(AD: int, T: int, s: int) -> tuple[int, int, int]:
    # Most balanced split of the usable adversaries over T occupations:
    # r parts of q+1 and T-r parts of q, never above s seats per occupation.
    usable = min(AD, T * s)
    q, r = divmod(usable, T)
    return q, r, usable


def jury_failure(cfg: ShardConfig) -> Probability:
    """Largest chance that the adversary owns T seats of a target shard.

    With ``A_i`` adversaries among the ``s`` members of occupation ``i`` the
    chance is ``prod(A_i / s)`` over ``T`` occupations. The product is
    maximised by the most even split of ``AD`` (capped at ``s`` per
    occupation), which dominates the floor-plus-remainder split whenever
    ``AD mod T >= 2``.
    """
    AD, T, s = cfg.AD, cfg.T, cfg.s
    q, r, _ = _best_split(AD, T, s)
    if q == 0 and r < T:
        return ZERO
    return Probability.from_ratio((q + 1) ** r * q ** (T - r), s ** T)


def jury_failure_log10(AD: int, T: int, s: int) -> float:
    """Float log10 of :func:`jury_failure`, for fast scans."""
    q, r, _ = _best_split(AD, T, s)
    if q == 0 and r < T:
        return -math.inf
    lg = r * math.log10(q + 1) + ((T - r) * math.log10(q) if q else 0.0)
    return lg - T * math.log10(s)


def jury_failure_approx(cfg: ShardConfig) -> Probability:
    """Closed-form estimate ``(AD / (T*s)) ** T``, clamped to 1."""
    AD, T, s = cfg.AD, cfg.T, cfg.s
    if AD == 0:
        return ZERO
    if AD >= T * s:
        return ONE
    exact = Fraction(AD, T * s) ** T
    return Probability(exact, T * (math.log10(AD) - math.log10(T * s)))


def _within(AD: int, T: int, s: int, budget: Fraction, log_budget: float) -> bool:
    lg = jury_failure_log10(AD, T, s)
    if lg == -math.inf:
        return True
    if abs(lg - log_budget) > 1e-9 * max(1.0, abs(log_budget)):
        return lg < log_budget
    q, r, _ = _best_split(AD, T, s)
    return (q + 1) ** r * q ** (T - r) * budget.denominator <= budget.numerator * s ** T


def max_shards(n: int, AD: int, T_frac, budget) -> int:
    """Largest shard count whose jury failure stays within ``budget``.

    Every ``s`` in ``1..n`` is scanned (the failure is not monotone in ``s``
    because of flooring), with ``m = n // s`` and ``T = ceil(T_frac * m)``.
    Returns 0 when no shard count qualifies.
    """
    frac = as_fraction(T_frac)
    b = as_fraction(budget)
    if not (Fraction(1, 2) < frac <= 1):
        raise InvalidConfiguration(f"threshold fraction must lie in (0.5, 1], got {T_frac}")
    if not (0 < b < 1):
        raise InvalidConfiguration(f"failure budget must lie in (0, 1), got {budget}")
    if n < 1 or not 0 <= AD <= n:
        raise InvalidConfiguration(f"need n >= 1 and 0 <= AD <= n, got n={n}, AD={AD}")
    return _max_shards(n, AD, frac, b)


@lru_cache(maxsize=4096)
def _max_shards(n: int, AD: int, frac: Fraction, budget: Fraction) -> int:
    log_budget = math.log10(budget.numerator) - math.log10(budget.denominator)
    for s in range(n, 0, -1):
        m = n // s
        T = math.ceil(frac * m)
        if _within(AD, T, s, budget, log_budget):
            return s
    return 0
