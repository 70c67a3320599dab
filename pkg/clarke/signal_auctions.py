"""
Auctions where the designer knows every valuation function and buyers only
report their signal vectors.

* :func:`run_auction1` handles ``n == m``: payments come from a table of
  ``P_i(sigma)`` over all permutations that buyer ``i``'s report cannot move.
* :func:`run_auction2` handles ``n > m``: each winner pays their valuation at
  the threshold signal where they would stop being part of the optimum.
"""
import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from clarke.assign import (
    AssignmentProblem,
    TieRule,
    best_injective_assignment,
    injective_assignments,
)
from clarke.exceptions import DegenerateEquation, InvariantViolation, ShapeError
from clarke.models import (
    Allocation,
    AuctionOutcome,
    LinearValuationModel,
    SignalBid,
    SignalProfile,
    eval_valuation,
    f_matrix,
    realized_utilities,
    validate_model,
    valuation_matrix,
    welfare,
)
from clarke.settings import clarke_settings, tolerance
from clarke.signals import auction_settled

logger = logging.getLogger(__name__)


@dataclass
class PaymentTable:
    """
    ``values[i, r]`` is ``P_i`` at permutation ``sigmas[r]``, where
    ``sigmas[r][i]`` is the good buyer ``i`` receives.
    """

    sigmas: List[Tuple[int, ...]]
    values: np.ndarray

    def index(self, allocation: Allocation) -> int:
        sigma = allocation.permutation(self.values.shape[0])
        return self.sigmas.index(sigma)

    def row(self, buyer: int) -> np.ndarray:
        return self.values[buyer]

    def payments(self, allocation: Allocation) -> np.ndarray:
        """``max_sigma P_i(sigma) - P_i(sigma*)`` for every buyer."""
        return self.values.max(axis=1) - self.values[:, self.index(allocation)]

    def to_list(self) -> List[dict]:
        return [
            {"sigma": list(sigma), "P": self.values[:, r].tolist()}
            for r, sigma in enumerate(self.sigmas)
        ]


def _check_bids(model: LinearValuationModel, bids: SignalProfile) -> None:
    if bids.s.shape != (model.n, model.m):
        raise ShapeError(
            "Reports are {0}x{1} but the model has {2} buyers and {3} goods.".format(
                bids.n, bids.m, model.n, model.m
            )
        )


def _validated_warnings(model, bids, signals) -> List[str]:
    report = validate_model(model, signals if signals is not None else bids)
    report.raise_if_invalid()
    return report.warnings


def payment_table(model: LinearValuationModel, bids: SignalProfile) -> PaymentTable:
    """
    ``P_i(sigma) = k_i W(sigma) - v_{i,sigma(i)} - k_i sum_K f_i(s_iK)`` with
    ``k_i = c_i / (c_i - 1)``, for every permutation ``sigma``.

    Buyer ``i``'s own report cancels out of ``P_i``.
    """
    _check_bids(model, bids)
    if model.n != model.m:
        raise ShapeError("A payment table needs as many buyers as goods.")
    k = np.array([model.payment_ratio(i) for i in range(model.n)])
    f = f_matrix(model, bids)
    return permutation_table(valuation_matrix(model, bids), k, k * f.sum(axis=1))


def permutation_table(values: np.ndarray, k: np.ndarray, offset: np.ndarray) -> PaymentTable:
    """
    ``P_i(sigma) = k_i W(sigma) - values[i, sigma(i)] - offset_i`` over every
    permutation of a square ``values`` matrix.
    """
    n = values.shape[0]
    rows = injective_assignments(n, n)
    goods_of = np.argsort(rows, axis=1)
    totals = values[rows, np.arange(n)].sum(axis=1)
    own = values[np.arange(n)[:, None], goods_of.T]
    table = k[:, None] * totals[None, :] - own - np.asarray(offset)[:, None]
    return PaymentTable(sigmas=[tuple(int(g) for g in row) for row in goods_of], values=table)


def run_auction1(
    model: LinearValuationModel,
    bids: SignalProfile,
    tie: TieRule = None,
    signals: Optional[SignalProfile] = None,
    eps: float = None,
) -> AuctionOutcome:
    """
    Allocate by the welfare-maximizing permutation under the reports and
    charge ``max_sigma P_i(sigma) - P_i(sigma*)``.

    :param signals: true signals; utilities and welfare use them when given.
    :raises clarke.exceptions.ShapeError: unless ``n == m``.
    :raises django.core.exceptions.ValidationError: when the model fails validation.
    """
    _check_bids(model, bids)
    if model.n != model.m:
        raise ShapeError(
            "Auction 1 needs as many buyers as goods (n={0}, m={1}).".format(model.n, model.m)
        )
    warnings = _validated_warnings(model, bids, signals)
    values = valuation_matrix(model, bids)
    result = best_injective_assignment(AssignmentProblem(values), tie, eps=eps)
    table = payment_table(model, bids)
    payments = table.payments(result.allocation)

    truth = signals if signals is not None else bids
    outcome = AuctionOutcome(
        mechanism="auction1",
        allocation=result.allocation,
        payments=payments,
        utilities=realized_utilities(model, truth, result.allocation, payments),
        welfare=welfare(model, truth, result.allocation),
        diagnostics={
            "apparent_welfare": result.value,
            "selected_sigma": list(result.allocation.permutation(model.n)),
            "payment_table": table.to_list(),
            "optima": [list(a.assigned) for a in result.optima],
        },
        warnings=list(warnings),
    )
    logger.debug("auction1 allocation %s payments %s", result.allocation.assigned, payments.tolist())
    auction_settled.send(sender=AuctionOutcome, mechanism="auction1", outcome=outcome)
    return outcome


def auction1_payment_bid_independence(
    model: LinearValuationModel,
    bids: SignalProfile,
    buyer: int,
    offsets: Sequence[Sequence[float]] = None,
    rng: np.random.Generator = None,
    trials: int = 5,
    eps: float = None,
) -> bool:
    """
    Whether ``P_buyer(sigma)`` stays put, for every ``sigma``, when the buyer's
    own report is shifted by each of ``offsets`` (random shifts if omitted).
    """
    eps = tolerance(eps)
    if offsets is None:
        rng = rng if rng is not None else np.random.default_rng(clarke_settings.SEED)
        offsets = rng.uniform(-3.0, 3.0, size=(trials, model.m))
    base = payment_table(model, bids).row(buyer)
    for offset in offsets:
        shifted = bids.with_row(buyer, bids.s[buyer] + np.asarray(offset, dtype=float))
        if np.max(np.abs(payment_table(model, shifted).row(buyer) - base)) > eps:
            return False
    return True


def residual_allocation(
    model: LinearValuationModel,
    bids: SignalProfile,
    excluded: int,
    tie: TieRule = None,
    eps: float = None,
) -> Allocation:
    """
    Best assignment of every good to the buyers other than ``excluded``.

    With ``CHECK_INVARIANTS`` on, also confirms the optimum set does not move
    when the excluded buyer changes their report.
    """
    _check_bids(model, bids)
    problem = AssignmentProblem(valuation_matrix(model, bids))
    result = best_injective_assignment(problem, tie, exclude=[excluded], eps=eps)
    if clarke_settings.CHECK_INVARIANTS:
        for offset in (-1.0, 1.0):
            shifted = bids.with_row(excluded, bids.s[excluded] + offset)
            other = best_injective_assignment(
                AssignmentProblem(valuation_matrix(model, shifted)), tie, exclude=[excluded], eps=eps
            )
            if [a.assigned for a in other.optima] != [a.assigned for a in result.optima]:
                raise InvariantViolation(
                    "Residual allocation without buyer {0} depends on their report.".format(excluded)
                )
    return result.allocation


@dataclass
class Threshold:
    buyer: int
    good: int
    signal: float
    payment: float
    residual: Allocation


def threshold_payment(
    model: LinearValuationModel,
    bids: SignalProfile,
    allocation: Allocation,
    good: int,
    tie: TieRule = None,
    eps: float = None,
) -> Threshold:
    """
    Solve for the signal ``s*`` at which the winner ``i`` of ``good`` ties with
    the best allocation that leaves ``i`` out::

        v_{i,K}(s*) - v_{j_K,K}(s*) = sum_{A != K} (v_{j_A,A} - v_{i_A,A})

    and price the good at ``v_{i,K}(s*)``. The left side is affine in ``s*``
    with slope ``(c_i - 1) a_i``.
    """
    buyer = allocation.assigned[good]
    residual = residual_allocation(model, bids, buyer, tie, eps=eps)
    values = valuation_matrix(model, bids)
    rhs = sum(
        values[residual.assigned[a], a] - values[allocation.assigned[a], a]
        for a in range(model.m)
        if a != good
    )
    runner_up = residual.assigned[good]
    slope = (model.c[buyer] - 1.0) * model.f_slope[buyer]
    if abs(slope) <= clarke_settings.PIVOT_TOLERANCE:
        raise DegenerateEquation(
            "Threshold equation for buyer {0} has zero slope.".format(buyer)
        )
    at_zero = bids.with_signal(buyer, good, 0.0)
    intercept = eval_valuation(model, at_zero, buyer, good) - eval_valuation(
        model, at_zero, runner_up, good
    )
    signal = float((rhs - intercept) / slope)
    payment = eval_valuation(model, bids.with_signal(buyer, good, signal), buyer, good)
    return Threshold(buyer=buyer, good=good, signal=signal, payment=payment, residual=residual)


def run_auction2(
    model: LinearValuationModel,
    bids: SignalProfile,
    tie: TieRule = None,
    signals: Optional[SignalProfile] = None,
    eps: float = None,
) -> AuctionOutcome:
    """
    Allocate by the best injective assignment under the reports; every winner
    pays their valuation at the threshold signal, losers pay nothing.

    :raises clarke.exceptions.ShapeError: unless ``n > m``.
    :raises django.core.exceptions.ValidationError: when the model fails validation.
    """
    _check_bids(model, bids)
    if model.n <= model.m:
        raise ShapeError(
            "Auction 2 needs more buyers than goods (n={0}, m={1}).".format(model.n, model.m)
        )
    warnings = _validated_warnings(model, bids, signals)
    result = best_injective_assignment(AssignmentProblem(valuation_matrix(model, bids)), tie, eps=eps)
    allocation = result.allocation
    payments = np.zeros(model.n)
    thresholds = []
    for good in range(model.m):
        threshold = threshold_payment(model, bids, allocation, good, tie, eps=eps)
        payments[threshold.buyer] = threshold.payment
        thresholds.append(
            {
                "buyer": threshold.buyer,
                "good": good,
                "signal": threshold.signal,
                "payment": threshold.payment,
                "residual": list(threshold.residual.assigned),
            }
        )

    truth = signals if signals is not None else bids
    outcome = AuctionOutcome(
        mechanism="auction2",
        allocation=allocation,
        payments=payments,
        utilities=realized_utilities(model, truth, allocation, payments),
        welfare=welfare(model, truth, allocation),
        diagnostics={
            "apparent_welfare": result.value,
            "thresholds": thresholds,
            "optima": [list(a.assigned) for a in result.optima],
        },
        warnings=list(warnings),
    )
    logger.debug("auction2 allocation %s payments %s", allocation.assigned, payments.tolist())
    auction_settled.send(sender=AuctionOutcome, mechanism="auction2", outcome=outcome)
    return outcome


def threshold_payment_independence(
    model: LinearValuationModel,
    bids: SignalProfile,
    buyer: int,
    offsets: Sequence[Sequence[float]] = None,
    rng: np.random.Generator = None,
    trials: int = 5,
    eps: float = None,
) -> bool:
    """
    Whether ``buyer``'s Auction 2 payment stays put under every shift of their
    own report that keeps the selected allocation unchanged.
    """
    eps = tolerance(eps)
    if offsets is None:
        rng = rng if rng is not None else np.random.default_rng(clarke_settings.SEED)
        offsets = rng.uniform(-3.0, 3.0, size=(trials, model.m))
    base = run_auction2(model, bids, TieRule(), eps=eps)
    for offset in offsets:
        shifted = bids.with_row(buyer, bids.s[buyer] + np.asarray(offset, dtype=float))
        other = run_auction2(model, shifted, TieRule(), eps=eps)
        if other.allocation != base.allocation:
            continue
        if abs(other.payments[buyer] - base.payments[buyer]) > eps:
            return False
    return True


def truthful_reports(signals: SignalProfile) -> SignalBid:
    return SignalBid(signals.s)
