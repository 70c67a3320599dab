"""
Exact welfare-maximizing allocation by enumeration.

Two problem shapes are supported: unit-demand (every good to a distinct
buyer, as in the signal and bid-function auctions) and general partitions
of the goods (VCG over subset bids). Both return every optimum so callers
can apply a :class:`TieRule` or average over the optimum set.
"""
import itertools
import logging
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence

import numpy as np

from clarke.exceptions import ProblemTooLarge, ShapeError
from clarke.models import Allocation, valuation_matrix
from clarke.settings import clarke_settings, tolerance

logger = logging.getLogger(__name__)

TIE_RULES = ("lex", "random", "nth")


@dataclass(frozen=True)
class TieRule:
    """
    How to pick one allocation out of several optima.

    Optima are always ordered lexicographically by ``Allocation.assigned``
    (unassigned goods sort last). ``lex`` takes the first one, ``random`` draws
    uniformly with ``seed``, ``nth`` takes optimum ``index`` (modulo the count).
    """

    kind: str = "lex"
    seed: int = 0
    index: int = 0

    def __post_init__(self):
        if self.kind not in TIE_RULES:
            raise ValueError(
                "Unknown tie rule '{0}', expected one of {1}.".format(self.kind, TIE_RULES)
            )

    @classmethod
    def default(cls) -> "TieRule":
        return cls(kind=clarke_settings.TIE_RULE, seed=clarke_settings.SEED)

    @classmethod
    def resolve(cls, tie: Optional["TieRule"]) -> "TieRule":
        return cls.default() if tie is None else tie

    def select(self, optima: Sequence):
        if not optima:
            raise ValueError("No optimum to select from.")
        if self.kind == "lex":
            return optima[0]
        if self.kind == "random":
            rng = np.random.default_rng(self.seed)
            return optima[int(rng.integers(len(optima)))]
        return optima[self.index % len(optima)]


@dataclass
class AssignmentResult:
    allocation: Allocation
    value: float
    #: Every allocation attaining ``value`` within tolerance, in lexicographic order.
    optima: List[Allocation] = field(default_factory=list)


@dataclass(frozen=True, eq=False)
class AssignmentProblem:
    """Score ``value[i][K]`` for giving good ``K`` to buyer ``i``."""

    value: np.ndarray
    unit_demand: bool = True

    def __post_init__(self):
        arr = np.array(self.value, dtype=float)
        if arr.ndim != 2 or 0 in arr.shape:
            raise ShapeError("Assignment values must form a non-empty n x m matrix.")
        if not np.all(np.isfinite(arr)):
            raise ShapeError("Assignment values must be finite.")
        object.__setattr__(self, "value", arr)

    @property
    def n(self) -> int:
        return self.value.shape[0]

    @property
    def m(self) -> int:
        return self.value.shape[1]

    def to_partition(self) -> "PartitionProblem":
        """
        Set values of the same buyers, where a bundle is worth its best good
        (or the sum of its goods when ``unit_demand`` is off).
        """
        combine = max if self.unit_demand else sum
        set_value = []
        for i in range(self.n):
            row = {}
            for size in range(1, self.m + 1):
                for goods in itertools.combinations(range(self.m), size):
                    row[frozenset(goods)] = float(combine(self.value[i, k] for k in goods))
            set_value.append(row)
        return PartitionProblem(set_value=set_value, m=self.m)


@dataclass(frozen=True)
class PartitionProblem:
    """
    ``set_value[i]`` maps bundles of goods to buyer ``i``'s value; bundles
    missing from the map are worth ``0``.
    """

    set_value: Sequence[Dict[FrozenSet[int], float]]
    m: int

    def __post_init__(self):
        for i, row in enumerate(self.set_value):
            if row.get(frozenset(), 0.0) != 0.0:
                raise ShapeError("Buyer {0} gives the empty bundle a value.".format(i))
            for goods in row:
                if any(not 0 <= k < self.m for k in goods):
                    raise ShapeError(
                        "Buyer {0} bids on a good outside 0..{1}.".format(i, self.m - 1)
                    )

    @property
    def n(self) -> int:
        return len(self.set_value)

    def value(self, buyer: int, goods: Iterable[int]) -> float:
        goods = frozenset(goods)
        if not goods:
            return 0.0
        return float(self.set_value[buyer].get(goods, 0.0))

    def allocation_value(self, allocation: Allocation, skip: Iterable[int] = ()) -> float:
        skip = set(skip)
        return sum(
            self.value(i, allocation.owner_goods(i)) for i in range(self.n) if i not in skip
        )


def _buyers(n: int, exclude: Optional[Iterable[int]]) -> List[int]:
    excluded = set(exclude or ())
    return [i for i in range(n) if i not in excluded]


def injective_assignments(n: int, m: int, exclude: Optional[Iterable[int]] = None) -> np.ndarray:
    """
    Every injective map goods -> buyers as rows of a ``(count, m)`` array,
    row ``r`` giving the buyer of each good, in lexicographic order.
    """
    if n > clarke_settings.MAX_INJECTIVE_BUYERS:
        raise ProblemTooLarge(
            "Injective enumeration is limited to {0} buyers (got {1}).".format(
                clarke_settings.MAX_INJECTIVE_BUYERS, n
            )
        )
    buyers = _buyers(n, exclude)
    if len(buyers) < m:
        raise ShapeError(
            "Cannot assign {0} goods injectively to {1} buyers.".format(m, len(buyers))
        )
    return np.array(list(itertools.permutations(buyers, m)), dtype=int).reshape(-1, m)


def best_injective_assignment(
    p: AssignmentProblem,
    tie: TieRule = None,
    exclude: Optional[Iterable[int]] = None,
    eps: float = None,
) -> AssignmentResult:
    """
    Maximize ``sum_K value[assigned[K]][K]`` over assignments giving every good
    to a distinct buyer outside ``exclude``.

    :raises clarke.exceptions.ShapeError: fewer eligible buyers than goods.
    :raises clarke.exceptions.ProblemTooLarge: above ``MAX_INJECTIVE_BUYERS``.
    """
    tie = TieRule.resolve(tie)
    eps = tolerance(eps)
    rows = injective_assignments(p.n, p.m, exclude)
    totals = p.value[rows, np.arange(p.m)].sum(axis=1)
    best = float(totals.max())
    optima = [Allocation(tuple(int(b) for b in row)) for row in rows[totals >= best - eps]]
    chosen = tie.select(optima)
    logger.debug("injective optimum %s (value %s, %d optima)", chosen.assigned, best, len(optima))
    return AssignmentResult(allocation=chosen, value=best, optima=optima)


def best_partition(
    p: PartitionProblem,
    tie: TieRule = None,
    exclude: Optional[Iterable[int]] = None,
    eps: float = None,
) -> AssignmentResult:
    """
    Maximize ``sum_i set_value[i](S_i)`` over maps good -> buyer-or-nobody.

    :raises clarke.exceptions.ProblemTooLarge: above ``MAX_PARTITION_GOODS``.
    """
    if p.m > clarke_settings.MAX_PARTITION_GOODS:
        raise ProblemTooLarge(
            "Partition enumeration is limited to {0} goods (got {1}).".format(
                clarke_settings.MAX_PARTITION_GOODS, p.m
            )
        )
    tie = TieRule.resolve(tie)
    eps = tolerance(eps)
    choices = _buyers(p.n, exclude) + [None]
    candidates = []
    for assigned in itertools.product(choices, repeat=p.m):
        allocation = Allocation(assigned)
        candidates.append((allocation, p.allocation_value(allocation)))
    best = max(value for _, value in candidates)
    optima = [allocation for allocation, value in candidates if value >= best - eps]
    chosen = tie.select(optima)
    logger.debug("partition optimum %s (value %s, %d optima)", chosen.assigned, best, len(optima))
    return AssignmentResult(allocation=chosen, value=best, optima=optima)


def unit_demand_reduction_check(model, signals, eps: float = None) -> bool:
    """
    Whether the best unrestricted partition under unit-demand set valuations
    is worth exactly as much as the best injective assignment.
    """
    problem = AssignmentProblem(valuation_matrix(model, signals))
    injective = best_injective_assignment(problem, TieRule(), eps=eps)
    partition = best_partition(problem.to_partition(), TieRule(), eps=eps)
    return abs(injective.value - partition.value) <= tolerance(eps)
