"""Integer money ledger: transaction, smart-contract and margin accounts plus
the funding pool.

Money only ever moves along these edges::

    mint -> pool
    pool -> transaction          (payouts, compensation)
    transaction <-> contract     (contract funds go back to the owner only)
    transaction -> margin -> transaction | pool
    contract -> pool             (execution payments)
    transaction -> pool          (fixed fees)

Each public operation validates first and mutates afterwards, so a raised
error leaves the ledger untouched.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field


class LedgerError(Exception):
    pass


class InsufficientFunds(LedgerError):
    pass


class UnknownAccount(LedgerError, KeyError):
    pass


class OwnershipViolation(LedgerError):
    pass


class WrongState(LedgerError):
    pass


class EarmarkExhausted(LedgerError):
    pass


class InvalidAmount(LedgerError, ValueError):
    pass


class ConservationError(LedgerError, AssertionError):
    pass


class DepositStatus(enum.Enum):
    SERVING = "serving"
    MATURED = "matured"
    CONFISCATED = "confiscated"


@dataclass
class ContractAccount:
    id: str
    owner: str
    balance: int = 0


@dataclass
class MarginDeposit:
    id: int
    owner: str
    principal: int
    start: int
    term: int
    status: DepositStatus = DepositStatus.SERVING
    # compensation reserved for this deposit in its cohort's earmark
    share: int = 0

    @property
    def end(self) -> int:
        return self.start + self.term


@dataclass
class FundingPool:
    balance: int = 0
    earmarks: dict[int, int] = field(default_factory=dict)
    # running total of earmarks, kept in step by the ledger
    reserved: int = 0

    @property
    def free(self) -> int:
        return self.balance - self.reserved


def _check_amount(amount: int, name: str = "amount") -> None:
    if not isinstance(amount, int) or isinstance(amount, bool):
        raise InvalidAmount(f"{name} must be an integer number of base units, got {amount!r}")
    if amount < 0:
        raise InvalidAmount(f"{name} must be nonnegative, got {amount}")


class Ledger:
    """Single-writer state holding every balance in the economy.

    ``height`` is the block interval stamped on oplog lines; the simulator
    advances it. Pass ``record=True`` to keep an operation log that
    :func:`replay` can rebuild the ledger from.
    """

    def __init__(self, fee: int = 1, record: bool = False):
        _check_amount(fee, "fee")
        self.fee = fee
        self.accounts: dict[str, int] = {}
        self.contracts: dict[str, ContractAccount] = {}
        self.deposits: dict[int, MarginDeposit] = {}
        self.serving: dict[int, MarginDeposit] = {}
        self.pool = FundingPool()
        self.minted = 0
        self.height = 0
        self.oplog: list[tuple] | None = [] if record else None
        self._next_deposit = 0

    # -- bookkeeping helpers -------------------------------------------------

    def _log(self, op: str, *params) -> None:
        if self.oplog is not None:
            self.oplog.append((self.height, op, *params, self.pool.balance))

    def _account(self, acct: str) -> int:
        try:
            return self.accounts[acct]
        except KeyError:
            raise UnknownAccount(f"unknown transaction account {acct!r}") from None

    def _contract(self, cid: str) -> ContractAccount:
        try:
            return self.contracts[cid]
        except KeyError:
            raise UnknownAccount(f"unknown contract account {cid!r}") from None

    def _deposit(self, dep_id: int) -> MarginDeposit:
        try:
            return self.deposits[dep_id]
        except KeyError:
            raise UnknownAccount(f"unknown margin deposit {dep_id!r}") from None

    def _fee(self, fee: int | None) -> int:
        fee = self.fee if fee is None else fee
        _check_amount(fee, "fee")
        return fee

    # -- account creation ----------------------------------------------------

    def open_account(self, acct: str) -> None:
        if acct in self.accounts:
            raise LedgerError(f"account {acct!r} already exists")
        self.accounts[acct] = 0
        self._log("open_account", acct)

    def open_contract(self, cid: str, owner: str) -> None:
        self._account(owner)
        if cid in self.contracts:
            raise LedgerError(f"contract {cid!r} already exists")
        self.contracts[cid] = ContractAccount(cid, owner)
        self._log("open_contract", cid, owner)

    # -- operations ----------------------------------------------------------

    def mint(self, amount: int) -> None:
        _check_amount(amount)
        self.pool.balance += amount
        self.minted += amount
        self._log("mint", amount)

    def payout(self, to: str, amount: int) -> None:
        """Pay ``amount`` from the unreserved part of the pool."""
        _check_amount(amount)
        self._account(to)
        if amount > self.pool.free:
            raise InsufficientFunds(f"pool has {self.pool.free} unreserved, payout needs {amount}")
        self.pool.balance -= amount
        self.accounts[to] += amount
        self._log("payout", to, amount)

    def transfer(self, src: str, dst: str, amount: int, fee: int | None = None) -> None:
        _check_amount(amount)
        fee = self._fee(fee)
        bal = self._account(src)
        self._account(dst)
        if bal < amount + fee:
            raise InsufficientFunds(f"{src} holds {bal}, transfer needs {amount} + fee {fee}")
        self.accounts[src] -= amount + fee
        self.accounts[dst] += amount
        self.pool.balance += fee
        self._log("transfer", src, dst, amount, fee)

    def fund_contract(self, owner: str, cid: str, amount: int, fee: int | None = None) -> None:
        _check_amount(amount)
        fee = self._fee(fee)
        contract = self._contract(cid)
        bal = self._account(owner)
        if contract.owner != owner:
            raise OwnershipViolation(f"{owner} does not own contract {cid}")
        if bal < amount + fee:
            raise InsufficientFunds(f"{owner} holds {bal}, funding needs {amount} + fee {fee}")
        self.accounts[owner] -= amount + fee
        contract.balance += amount
        self.pool.balance += fee
        self._log("fund_contract", owner, cid, amount, fee)

    def withdraw_contract(self, cid: str, amount: int, to: str | None = None) -> None:
        _check_amount(amount)
        contract = self._contract(cid)
        if to is not None and to != contract.owner:
            raise OwnershipViolation(f"contract {cid} funds may only return to {contract.owner}, not {to}")
        if contract.balance < amount:
            raise InsufficientFunds(f"contract {cid} holds {contract.balance}, withdrawal needs {amount}")
        contract.balance -= amount
        self.accounts[contract.owner] += amount
        self._log("withdraw_contract", cid, amount)

    def execute_contract(self, cid: str, lines: int, price: int) -> tuple[int, int]:
        """Run up to ``lines`` lines at ``price`` each; returns (paid, executed).

        Only the affordable whole-line prefix runs; the rest of the balance
        stays pending in the contract.
        """
        _check_amount(lines, "lines")
        _check_amount(price, "price")
        contract = self._contract(cid)
        if price == 0:
            paid, executed = 0, lines
        else:
            executed = min(lines, contract.balance // price)
            paid = executed * price
        contract.balance -= paid
        self.pool.balance += paid
        self._log("execute_contract", cid, lines, price)
        return paid, executed

    def register_reliable(self, owner: str, margin: int, term: int, now: int | None = None,
                          fee: int | None = None) -> MarginDeposit:
        _check_amount(margin, "margin")
        if margin == 0:
            raise InvalidAmount("margin must be positive")
        if not isinstance(term, int) or term < 1:
            raise InvalidAmount(f"term must be a positive interval count, got {term!r}")
        fee = self._fee(fee)
        now = self.height if now is None else now
        bal = self._account(owner)
        if bal < margin + fee:
            raise InsufficientFunds(f"{owner} holds {bal}, registration needs {margin} + fee {fee}")
        self.accounts[owner] -= margin + fee
        self.pool.balance += fee
        dep = MarginDeposit(self._next_deposit, owner, margin, now, term)
        self._next_deposit += 1
        self.deposits[dep.id] = dep
        self.serving[dep.id] = dep
        self._log("register_reliable", owner, margin, term, now, fee)
        return dep

    def reserve_cohort(self, cohort: int, shares: dict[int, int]) -> None:
        """Earmark compensation for the deposits registered at ``cohort``."""
        total = 0
        for dep_id, share in shares.items():
            _check_amount(share, "share")
            dep = self._deposit(dep_id)
            if dep.status is not DepositStatus.SERVING:
                raise WrongState(f"deposit {dep_id} is {dep.status.value}")
            if dep.start != cohort:
                raise LedgerError(f"deposit {dep_id} belongs to cohort {dep.start}, not {cohort}")
            total += share
        if total > self.pool.free:
            raise InsufficientFunds(f"pool has {self.pool.free} unreserved, earmark needs {total}")
        for dep_id, share in shares.items():
            self.deposits[dep_id].share += share
        if total:
            self.pool.earmarks[cohort] = self.pool.earmarks.get(cohort, 0) + total
            self.pool.reserved += total
        self._log("reserve_cohort", cohort, ",".join(f"{k}:{v}" for k, v in sorted(shares.items())))

    def _release(self, dep: MarginDeposit, amount: int) -> None:
        self.pool.reserved -= amount
        left = self.pool.earmarks[dep.start] - amount
        if left:
            self.pool.earmarks[dep.start] = left
        else:
            del self.pool.earmarks[dep.start]

    def mature_deposit(self, dep_id: int, compensation: int | None = None,
                       now: int | None = None) -> int:
        """Return principal plus compensation to the owner; returns the amount paid."""
        dep = self._deposit(dep_id)
        if dep.status is not DepositStatus.SERVING:
            raise WrongState(f"deposit {dep_id} is {dep.status.value}, cannot mature")
        now = self.height if now is None else now
        if now != dep.end:
            raise WrongState(f"deposit {dep_id} matures at {dep.end}, not {now}")
        compensation = dep.share if compensation is None else compensation
        _check_amount(compensation, "compensation")
        if compensation > dep.share or compensation > self.pool.earmarks.get(dep.start, 0):
            raise EarmarkExhausted(
                f"deposit {dep_id} has {dep.share} reserved, compensation asks {compensation}")
        if dep.share:
            self._release(dep, dep.share)
        self.pool.balance -= compensation
        self.accounts[dep.owner] += dep.principal + compensation
        dep.status = DepositStatus.MATURED
        del self.serving[dep_id]
        self._log("mature_deposit", dep_id, compensation)
        return dep.principal + compensation

    def confiscate_deposit(self, dep_id: int) -> int:
        """Forfeit a serving deposit's principal to the pool; returns the principal."""
        dep = self._deposit(dep_id)
        if dep.status is not DepositStatus.SERVING:
            raise WrongState(f"deposit {dep_id} is {dep.status.value}, cannot confiscate")
        if dep.share:
            # the forfeited share stays in the pool, unreserved
            self._release(dep, dep.share)
        self.pool.balance += dep.principal
        dep.status = DepositStatus.CONFISCATED
        del self.serving[dep_id]
        self._log("confiscate_deposit", dep_id)
        return dep.principal

    # -- views ---------------------------------------------------------------

    def m0(self) -> int:
        return sum(self.accounts.values())

    def contract_total(self) -> int:
        return sum(c.balance for c in self.contracts.values())

    def margin_total(self) -> int:
        return sum(d.principal for d in self.serving.values())

    def total(self) -> int:
        return self.m0() + self.contract_total() + self.margin_total() + self.pool.balance

    def check(self) -> None:
        """Raise ConservationError unless every invariant holds."""
        total = self.total()
        if total != self.minted:
            raise ConservationError(f"height {self.height}: holdings {total} != minted {self.minted}")
        if self.pool.reserved != sum(self.pool.earmarks.values()):
            raise ConservationError(f"height {self.height}: earmark total out of step")
        if self.pool.balance < self.pool.reserved:
            raise ConservationError(
                f"height {self.height}: pool {self.pool.balance} below earmarks {self.pool.reserved}")
        if any(b < 0 for b in self.accounts.values()) or any(c.balance < 0 for c in self.contracts.values()):
            raise ConservationError(f"height {self.height}: negative balance")

    def snapshot(self) -> tuple:
        """Hashable summary of the full state, for replay comparisons."""
        return (
            tuple(sorted(self.accounts.items())),
            tuple(sorted((c.id, c.owner, c.balance) for c in self.contracts.values())),
            tuple((d.id, d.owner, d.principal, d.start, d.term, d.status.value, d.share)
                  for d in self.deposits.values()),
            self.pool.balance,
            tuple(sorted(self.pool.earmarks.items())),
            self.minted,
        )


OPLOG_COLUMNS = "height\top\tparams...\tpool_balance"


def format_oplog(oplog) -> str:
    return "".join("\t".join(str(x) for x in row) + "\n" for row in oplog)


def replay(lines, fee: int = 1) -> Ledger:
    """Rebuild a ledger from oplog text lines (as written by :func:`format_oplog`)."""
    ledger = Ledger(fee=fee, record=True)
    for line in lines:
        line = line.rstrip("\n")
        if not line:
            continue
        height, op, *params = line.split("\t")
        params, pool_after = params[:-1], int(params[-1])
        ledger.height = int(height)
        if op == "open_account":
            ledger.open_account(params[0])
        elif op == "open_contract":
            ledger.open_contract(params[0], params[1])
        elif op == "mint":
            ledger.mint(int(params[0]))
        elif op == "payout":
            ledger.payout(params[0], int(params[1]))
        elif op == "transfer":
            ledger.transfer(params[0], params[1], int(params[2]), int(params[3]))
        elif op == "fund_contract":
            ledger.fund_contract(params[0], params[1], int(params[2]), int(params[3]))
        elif op == "withdraw_contract":
            ledger.withdraw_contract(params[0], int(params[1]))
        elif op == "execute_contract":
            ledger.execute_contract(params[0], int(params[1]), int(params[2]))
        elif op == "register_reliable":
            owner, margin, term, now, fee_ = params
            ledger.register_reliable(owner, int(margin), int(term), int(now), int(fee_))
        elif op == "reserve_cohort":
            shares = {}
            if params[1]:
                for item in params[1].split(","):
                    k, v = item.split(":")
                    shares[int(k)] = int(v)
            ledger.reserve_cohort(int(params[0]), shares)
        elif op == "mature_deposit":
            ledger.mature_deposit(int(params[0]), int(params[1]))
        elif op == "confiscate_deposit":
            ledger.confiscate_deposit(int(params[0]))
        else:
            raise LedgerError(f"unknown oplog operation {op!r}")
        if ledger.pool.balance != pool_after:
            raise LedgerError(f"replay diverged at {op} (height {height}): pool "
                              f"{ledger.pool.balance} != logged {pool_after}")
    return ledger
