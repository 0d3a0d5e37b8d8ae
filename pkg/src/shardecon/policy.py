"""Monetary aggregates, the per-interval line price, reward splitting and the
least-squares controller that picks the next term length and compensation
fraction.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .ledger import Ledger
from .security import as_fraction

SINGULAR_RIDGE = 1e-8


@dataclass
class MonetarySnapshot:
    height: int
    M0: int
    M1: int
    M2: int
    Q: int = 0
    P: int = 0
    R: int = 0
    ratio: float = 0.0


def money_ratio(M1: int, M2: int, B: float) -> float:
    """M2/M1, or ``B`` itself for an economy with nothing in M1."""
    if M1 == 0:
        return float(B)
    return M2 / M1


def compute_aggregates(ledger: Ledger, height: int, B: float = 2.0) -> MonetarySnapshot:
    M0 = ledger.m0()
    M1 = M0 + ledger.contract_total()
    M2 = M1 + ledger.margin_total()
    return MonetarySnapshot(height, M0, M1, M2, ratio=money_ratio(M1, M2, B))


def update_price(U, M2_prev: int, avgq) -> int:
    """Line price ``floor(U * M2_prev / (AVGQ + 1))`` in exact arithmetic."""
    avgq = as_fraction(avgq)
    if avgq < 0:
        raise ValueError(f"AVGQ must be nonnegative, got {avgq}")
    return math.floor(as_fraction(U) * M2_prev / (avgq + 1))


@dataclass
class RewardSplit:
    earmark: int
    per_maintainer: int
    shares: list[int]
    remainder: int


def split_rewards(R: int, I, margins: list[int], maintainers: int) -> RewardSplit:
    """Divide one interval's pool inflow.

    ``floor(I*R)`` is reserved for the cohort pro rata by margin (nothing is
    reserved for an empty cohort), the rest is shared equally by the
    maintainers. ``remainder`` is the part of ``R`` that is neither earmarked
    nor paid out, so ``earmark + per_maintainer * maintainers + remainder``
    is exactly ``R``. Rounding dust from the shares (``earmark -
    sum(shares)``) is never reserved and stays free in the pool as well.
    """
    frac = as_fraction(I)
    if not 0 <= frac <= 1:
        raise ValueError(f"I must lie in [0, 1], got {I}")
    if R < 0 or maintainers < 0:
        raise ValueError("R and maintainers must be nonnegative")
    cohort_total = sum(margins)
    earmark = math.floor(frac * R) if cohort_total > 0 else 0
    shares = [m * earmark // cohort_total for m in margins] if cohort_total > 0 else [0] * len(margins)
    to_maintainers = R - math.floor(frac * R)
    per = to_maintainers // maintainers if maintainers else 0
    remainder = R - earmark - per * maintainers
    return RewardSplit(earmark, per, shares, remainder)


def ridge_fit(X: np.ndarray, y: np.ndarray, lam: float = 0.0) -> tuple[np.ndarray, float]:
    """Least squares with an unpenalised intercept, solved in closed form.

    Columns and target are centred first, so the intercept drops out of the
    normal equations ``(Xc'Xc + lam*I) b = Xc'yc``. When ``lam == 0`` and
    the centred design is rank deficient (a control that never moved, say)
    ``SINGULAR_RIDGE`` is used, which pins the coefficient of a constant
    column to exactly zero. Returns ``([intercept, b...], lam used)``.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    x_mean = X.mean(axis=0)
    y_mean = y.mean()
    Xc = X - x_mean
    # a column that never moved centres to exact zeros, not to rounding noise
    Xc[:, np.ptp(X, axis=0) == 0] = 0.0
    yc = y - y_mean
    if lam == 0.0 and np.linalg.matrix_rank(Xc) < X.shape[1]:
        lam = SINGULAR_RIDGE
    gram = Xc.T @ Xc
    if lam:
        gram = gram + lam * np.eye(X.shape[1])
    rhs = Xc.T @ yc
    try:
        coef = np.linalg.solve(gram, rhs)
    except np.linalg.LinAlgError:
        # the tiny ridge can vanish next to raw feature scales
        coef = np.linalg.lstsq(gram, rhs, rcond=None)[0]
    return np.concatenate([[y_mean - x_mean @ coef], coef]), lam


@dataclass(frozen=True)
class Bounds:
    gpl_min: int = 10
    gpl_max: int = 10_000
    i_min: float = 0.0001
    i_max: float = 0.8

    def __post_init__(self):
        if not (1 <= self.gpl_min <= self.gpl_max and 0 <= self.i_min <= self.i_max <= 1):
            raise ValueError(f"inconsistent policy bounds {self}")

    def clamp(self, gpl, i) -> tuple[int, float]:
        gpl = int(min(max(round(gpl), self.gpl_min), self.gpl_max))
        return gpl, float(min(max(i, self.i_min), self.i_max))


# (GPL, GN, I, ratio, next ratio)
HistoryRow = tuple[int, int, float, float, float]


def _pick(coef: float, span: float, scale: float, lo, hi, current):
    # a coefficient whose full-range effect is lost in rounding counts as zero
    if abs(coef) * span <= 1e-9 * scale:
        return current
    return lo if coef > 0 else hi


def fit_policy(history: list[HistoryRow], B: float, GN_now: int, ratio_now: float,
               bounds: Bounds, current: tuple[int, float], lam: float = 0.0) -> tuple[int, float]:
    """Next (GPL, I) minimising the fitted ``|B - next ratio|``.

    The fit is linear in (GPL, GN, I, ratio), so with GN and ratio held at
    their current values the box-constrained minimum sits at the bound picked
    by each control's coefficient sign. A zero coefficient keeps the current
    value.
    """
    if not history:
        raise ValueError("fit_policy needs at least one history row")
    data = np.array(history, dtype=np.float64)
    X = data[:, :4]
    y = np.abs(B - data[:, 4])
    beta, _ = ridge_fit(X, y, lam)
    scale = 1.0 + float(np.max(np.abs(y)))
    gpl = _pick(beta[1], bounds.gpl_max - bounds.gpl_min, scale, bounds.gpl_min, bounds.gpl_max, current[0])
    i = _pick(beta[3], bounds.i_max - bounds.i_min, scale, bounds.i_min, bounds.i_max, current[1])
    return bounds.clamp(gpl, i)


@dataclass
class PolicyState:
    B: float = 2.0
    U: float = 0.013
    avgq_window: int = 50
    GPL: int = 10
    I: float = 0.1
    bounds: Bounds = field(default_factory=Bounds)
    window: int = 99
    lam: float = 0.0
    history: deque = field(default=None)

    def __post_init__(self):
        self.GPL, self.I = self.bounds.clamp(self.GPL, self.I)
        if self.history is None:
            self.history = deque(maxlen=self.window)

    def observe(self, row: HistoryRow) -> None:
        self.history.append(row)

    def update(self, GN_now: int, ratio_now: float) -> tuple[int, float]:
        if self.history:
            self.GPL, self.I = fit_policy(list(self.history), self.B, GN_now, ratio_now,
                                          self.bounds, (self.GPL, self.I), self.lam)
        return self.GPL, self.I
