"""
Vickrey-Clarke-Groves over arbitrary subset bids.

Each buyer names a value for any bundles they like (missing bundles are
worth ``0``); goods go to the welfare-maximizing partition and buyer ``i``
pays ``W(S'_{-i}) - W(S) + b_i(S_i)``, the welfare the others lose because
``i`` took part.
"""
import itertools
import logging
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence

import numpy as np

from clarke.assign import PartitionProblem, TieRule, best_partition
from clarke.exceptions import ShapeError
from clarke.models import AuctionOutcome, eval_set_valuation
from clarke.settings import clarke_settings, tolerance
from clarke.signals import auction_settled

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SubsetBid:
    """One buyer's bids ``b_i(S)``; bundles not listed are bid at ``0``."""

    values: Dict[FrozenSet[int], float] = field(default_factory=dict)

    def __post_init__(self):
        values = {}
        for goods, bid in dict(self.values).items():
            goods = frozenset(int(k) for k in goods)
            bid = float(bid)
            if not np.isfinite(bid):
                raise ShapeError("Bids must be finite.")
            if not goods:
                if bid != 0.0:
                    raise ShapeError("The empty bundle can only be bid at 0.")
                continue
            values[goods] = bid
        object.__setattr__(self, "values", values)

    @classmethod
    def from_items(cls, items: Iterable[dict]) -> "SubsetBid":
        """From ``[{"goods": [...], "bid": x}, ...]``."""
        return cls({frozenset(item["goods"]): item["bid"] for item in items})

    def to_items(self) -> List[dict]:
        return [
            {"goods": sorted(goods), "bid": bid}
            for goods, bid in sorted(self.values.items(), key=lambda kv: (len(kv[0]), sorted(kv[0])))
        ]

    def value(self, goods: Iterable[int]) -> float:
        return self.values.get(frozenset(goods), 0.0)

    def with_bid(self, goods: Iterable[int], bid: float) -> "SubsetBid":
        values = dict(self.values)
        values[frozenset(goods)] = bid
        return SubsetBid(values)

    @property
    def max_good(self) -> int:
        return max((max(goods) for goods in self.values), default=-1)


@dataclass(frozen=True)
class PrivateValues:
    """True private bundle valuations of every buyer, used as the truth in VCG checks."""

    values: Sequence[SubsetBid]
    m: int

    @property
    def n(self) -> int:
        return len(self.values)

    def value(self, buyer: int, goods: Iterable[int]) -> float:
        return self.values[buyer].value(goods)

    def truthful_bids(self) -> List[SubsetBid]:
        return list(self.values)

    @classmethod
    def random(cls, rng: np.random.Generator, n: int, m: int) -> "PrivateValues":
        """Independent uniform values on every non-empty bundle."""
        low, high = clarke_settings.SWEEP_SIGNAL_RANGE
        every_bundle = bundles(m)
        return cls(
            values=[
                SubsetBid({goods: float(rng.uniform(0.0, high - low)) for goods in every_bundle})
                for _ in range(n)
            ],
            m=m,
        )


def bundles(m: int) -> List[FrozenSet[int]]:
    return [
        frozenset(goods)
        for size in range(1, m + 1)
        for goods in itertools.combinations(range(m), size)
    ]


def truthful_subset_bids(model, signals) -> List[SubsetBid]:
    """Unit-demand bundle values of a signal model, bid truthfully."""
    return [
        SubsetBid({goods: eval_set_valuation(model, signals, i, goods) for goods in bundles(model.m)})
        for i in range(model.n)
    ]


def run_vcg(
    bids: Sequence[SubsetBid],
    m: int = None,
    tie: TieRule = None,
    values: Optional[PrivateValues] = None,
    eps: float = None,
) -> AuctionOutcome:
    """
    Allocate by :func:`clarke.assign.best_partition` over the bids and charge
    each buyer the externality they impose.

    Utilities are measured against ``values`` when given, otherwise against
    the bids themselves.
    """
    if not bids:
        raise ShapeError("VCG needs at least one buyer.")
    if m is None:
        m = max(bid.max_good for bid in bids) + 1
    if m < 1:
        raise ShapeError("VCG needs at least one good.")
    problem = PartitionProblem(set_value=[bid.values for bid in bids], m=m)
    result = best_partition(problem, tie, eps=eps)
    allocation = result.allocation
    n = problem.n

    payments = np.zeros(n)
    without = np.zeros(n)
    externality = np.zeros(n)
    for i in range(n):
        residual = best_partition(problem, tie, exclude=[i], eps=eps)
        without[i] = residual.value
        payments[i] = residual.value - result.value + problem.value(i, allocation.owner_goods(i))
        externality[i] = sum(
            problem.value(j, residual.allocation.owner_goods(j))
            - problem.value(j, allocation.owner_goods(j))
            for j in range(n)
            if j != i
        )

    if values is not None:
        held = np.array([values.value(i, allocation.owner_goods(i)) for i in range(n)])
    else:
        held = np.array([problem.value(i, allocation.owner_goods(i)) for i in range(n)])
    outcome = AuctionOutcome(
        mechanism="vcg",
        allocation=allocation,
        payments=payments,
        utilities=held - payments,
        welfare=float(held.sum()),
        diagnostics={
            "apparent_welfare": result.value,
            "welfare_without": without.tolist(),
            "externality": externality.tolist(),
            "optima": [list(a.assigned) for a in result.optima],
        },
    )
    logger.debug("vcg allocation %s payments %s", allocation.assigned, payments.tolist())
    auction_settled.send(sender=AuctionOutcome, mechanism="vcg", outcome=outcome)
    return outcome


@dataclass
class PaymentPropertyReport:
    nonnegative: bool = True
    bid_independent: bool = True
    externality_identity: bool = True
    #: ``(buyer, description)`` of each failed check.
    failures: List[tuple] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.nonnegative and self.bid_independent and self.externality_identity


def vcg_payment_properties(
    bids: Sequence[SubsetBid],
    m: int = None,
    tie: TieRule = None,
    rng: np.random.Generator = None,
    trials: int = 10,
    eps: float = None,
) -> PaymentPropertyReport:
    """
    Check that every payment is nonnegative, matches the sum of the other
    buyers' losses, and does not move when a buyer swaps in another bid map
    that leaves the selected allocation as it was.
    """
    eps = tolerance(eps)
    rng = rng if rng is not None else np.random.default_rng(clarke_settings.SEED)
    outcome = run_vcg(bids, m=m, tie=tie, eps=eps)
    m = outcome.allocation.m
    report = PaymentPropertyReport()
    for i, payment in enumerate(outcome.payments):
        if payment < -eps:
            report.nonnegative = False
            report.failures.append((i, "negative payment {0}".format(payment)))
        if abs(payment - outcome.diagnostics["externality"][i]) > eps:
            report.externality_identity = False
            report.failures.append((i, "payment differs from externality"))

        held = outcome.allocation.owner_goods(i)
        alternatives = []
        if held:
            alternatives += [bids[i].with_bid(held, bids[i].value(held) + bump) for bump in (1.0, 10.0, 100.0)]
        alternatives += [PrivateValues.random(rng, 1, m).values[0] for _ in range(trials)]
        for alternative in alternatives:
            deviated = list(bids)
            deviated[i] = alternative
            other = run_vcg(deviated, m=m, tie=tie, eps=eps)
            if other.allocation != outcome.allocation:
                continue
            if abs(other.payments[i] - payment) > eps:
                report.bid_independent = False
                report.failures.append((i, "payment moved to {0}".format(other.payments[i])))
    return report
