"""Domain model for randomized single-item auctions.

Bids live in a known interval [1, H].  An auction is a pair of anonymous
rules mapping each agent's reduced view of the profile -- own bid ``t``,
highest competing bid ``b``, and the multiplicity ``nu`` of that competing
bid -- to an allocation probability and an expected payment.  Only highest
bidders may receive the item; ties split uniformly.  All quantities are
expectations; a seeded sampler materializes a winner when one is wanted.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Sequence

ALLOC_SUM_TOL = 1e-9


class InfeasibleAllocationError(RuntimeError):
    """Allocation probabilities summed above 1 beyond tolerance."""


@dataclass(frozen=True)
class BidProfile:
    """An ordered tuple of bids, each a valuation in [1, H]."""

    bids: tuple[float, ...]
    H: float

    def __post_init__(self) -> None:
        if not self.H > 1.0:
            raise ValueError(f"upper bound H must exceed 1, got {self.H}")
        if not self.bids:
            raise ValueError("a profile needs at least one bid")
        for i, b in enumerate(self.bids):
            # bids outside [1, H] are rejected, never clamped
            if not 1.0 <= b <= self.H:
                raise ValueError(f"bid {b} at index {i} outside [1, {self.H}]")

    @classmethod
    def of(cls, bids: Sequence[float], H: float) -> "BidProfile":
        return cls(tuple(float(b) for b in bids), float(H))

    @property
    def top(self) -> float:
        return max(self.bids)


@dataclass(frozen=True)
class AgentView:
    """One agent's reduced view of a profile.

    ``t`` is the agent's own bid, ``b`` the highest bid among the others and
    ``nu`` how many of the others bid exactly ``b``.  A single-bidder
    instance has no competitors: it is written ``AgentView(t)`` and treated
    by every rule as the limit ``b = 1, nu = 0``, which coincides with the
    continuous extension of the rules at the lower end of the bid range.
    """

    t: float
    b: float | None = None
    nu: int | None = None

    def __post_init__(self) -> None:
        if self.t < 1.0:
            raise ValueError(f"bid t={self.t} below the valuation floor 1")
        if (self.b is None) != (self.nu is None):
            raise ValueError("b and nu must be given together or not at all")
        if self.b is not None:
            if self.b < 1.0:
                raise ValueError(f"competing bid b={self.b} below 1")
            if self.nu < 0 or int(self.nu) != self.nu:
                raise ValueError(f"tie multiplicity nu={self.nu} must be a non-negative integer")

    def effective(self) -> tuple[float, float, int]:
        """The (t, b, nu) triple with the single-bidder case normalized."""
        if self.b is None:
            return self.t, 1.0, 0
        return self.t, self.b, int(self.nu)


@dataclass(frozen=True)
class Outcome:
    """Expected allocations and payments for every agent of a profile."""

    alloc: tuple[float, ...]
    pay: tuple[float, ...]
    revenue: float

    def to_dict(self) -> dict[str, Any]:
        return {"alloc": list(self.alloc), "pay": list(self.pay), "revenue": self.revenue}


@dataclass(frozen=True)
class AuctionDefinition:
    """An anonymous highest-bidder-only auction.

    ``alloc_rule`` and ``pay_rule`` depend only on the view (t, b, nu),
    never on agent identity.  ``section_breakpoints(b)`` lists the points
    where the univariate section t -> rule(t, b, nu) may jump or switch
    formula; quadrature and grid sweeps split there.
    """

    name: str
    H: float
    alloc_rule: Callable[[AgentView], float]
    pay_rule: Callable[[AgentView], float]
    params: Any
    section_breakpoints: Callable[[float], tuple[float, ...]]


def reduce_profile(profile: BidProfile, agent_index: int) -> AgentView:
    """Reduce a multi-bid profile to agent ``agent_index``'s view.

    Tie detection compares input bids exactly: ties are a modeling
    primitive here, not a numerical accident.
    """
    if not 0 <= agent_index < len(profile.bids):
        raise IndexError(f"agent index {agent_index} out of range for {len(profile.bids)} bids")
    if len(profile.bids) < 2:
        raise ValueError("reduction needs at least two bids; single-bid profiles bypass it")
    t = profile.bids[agent_index]
    others = profile.bids[:agent_index] + profile.bids[agent_index + 1:]
    b = max(others)
    nu = sum(1 for x in others if x == b)
    return AgentView(t, b, nu)


def run_auction(auction: AuctionDefinition, profile: BidProfile) -> Outcome:
    """Evaluate the auction's rules on every agent of the profile."""
    for i, bid in enumerate(profile.bids):
        if not 1.0 <= bid <= auction.H:
            raise ValueError(f"bid {bid} at index {i} outside the auction range [1, {auction.H}]")
    n = len(profile.bids)
    if n == 1:
        views = [AgentView(profile.bids[0])]
    else:
        views = [reduce_profile(profile, i) for i in range(n)]
    alloc = tuple(float(auction.alloc_rule(v)) for v in views)
    pay = tuple(float(auction.pay_rule(v)) for v in views)
    top = profile.top
    for a, p, bid in zip(alloc, pay, profile.bids):
        if a > 0.0 and bid < top:
            raise InfeasibleAllocationError(f"rule allocated {a} to a non-highest bid {bid}")
        if p < 0.0:
            raise InfeasibleAllocationError(f"negative payment {p} for bid {bid}")
    total = sum(alloc)
    if total > 1.0 + ALLOC_SUM_TOL:
        raise InfeasibleAllocationError(
            f"allocation probabilities sum to {total}; the parameterization is infeasible"
        )
    return Outcome(alloc, pay, sum(pay))


def revenue_ratio(auction: AuctionDefinition, profile: BidProfile) -> float:
    """Revenue over the highest bid, the benchmark objective."""
    return run_auction(auction, profile).revenue / profile.top


def sample_winner(outcome: Outcome, seed: int) -> int | None:
    """Draw a winner index from the allocation probabilities.

    The residual probability mass is "no sale", reported as None.
    Identical seeds give identical draws.
    """
    u = random.Random(seed).random()
    acc = 0.0
    for i, a in enumerate(outcome.alloc):
        acc += a
        if u < acc:
            return i
    return None


def load_bids(path: str | Path) -> list[float]:
    """Read a bid profile from a JSON array or a single-column CSV file."""
    text = Path(path).read_text(encoding="utf-8").strip()
    if not text:
        raise ValueError(f"empty bids file: {path}")
    if text.lstrip().startswith("["):
        data = json.loads(text)
        if not isinstance(data, list):
            raise ValueError(f"expected a JSON array of numbers in {path}")
        return [float(x) for x in data]
    bids = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        try:
            bids.append(float(line.split(",")[0]))
        except ValueError as exc:
            raise ValueError(f"bad bid line {line!r} in {path}") from exc
    return bids
