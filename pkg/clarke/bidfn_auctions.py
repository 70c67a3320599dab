"""
Auctions where the designer does not know the valuation functions.

Buyers submit, per good ``A``, a linear bid function::

    b_{iA}(v_{-i}) = x[A][i][i] + sum_{j != i} x[A][i][j] * v_j

The designer checks that the off-diagonal coefficients are consistent with
some common constants ``c_j' > 1``, solves every good's fixed point and then
runs the signal auctions' allocation and payment logic on the fixed-point
valuations.
"""
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from django.core.exceptions import ValidationError

from clarke.assign import AssignmentProblem, TieRule, best_injective_assignment
from clarke.exceptions import DegenerateEquation, InvariantViolation, ShapeError
from clarke.linalg import gauss_solve
from clarke.models import (
    Allocation,
    AuctionOutcome,
    LinearValuationModel,
    SignalProfile,
    realized_utilities,
    welfare,
)
from clarke.settings import clarke_settings, tolerance
from clarke.signal_auctions import permutation_table
from clarke.signals import auction_settled, bids_rejected

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class LinearBidFunction:
    """One buyer's bid function for one good; ``coefficients[buyer]`` is the free term."""

    buyer: int
    good: int
    coefficients: np.ndarray

    @property
    def free_term(self) -> float:
        return float(self.coefficients[self.buyer])

    def evaluate(self, others: np.ndarray) -> float:
        """Bid at the valuation vector ``others`` (entry ``buyer`` is ignored)."""
        weights = self.coefficients.copy()
        weights[self.buyer] = 0.0
        return self.free_term + float(np.dot(weights, others))


@dataclass(frozen=True, eq=False)
class BidProfile:
    """Every buyer's bid function for every good, as ``x[A][i][j]``."""

    x: np.ndarray

    def __post_init__(self):
        arr = np.array(self.x, dtype=float)
        if arr.ndim != 3 or arr.shape[1] != arr.shape[2] or 0 in arr.shape:
            raise ShapeError("Bid coefficients must form an m x n x n array.")
        if not np.all(np.isfinite(arr)):
            raise ShapeError("Bid coefficients must be finite.")
        arr.setflags(write=False)
        object.__setattr__(self, "x", arr)

    @property
    def m(self) -> int:
        return self.x.shape[0]

    @property
    def n(self) -> int:
        return self.x.shape[1]

    def function(self, good: int, buyer: int) -> LinearBidFunction:
        return LinearBidFunction(buyer=buyer, good=good, coefficients=self.x[good, buyer].copy())

    def free_terms(self) -> np.ndarray:
        """``(m, n)`` array of every ``x[A][i][i]``."""
        return np.array([np.diag(self.x[a]) for a in range(self.m)])

    def with_free_term(self, good: int, buyer: int, value: float) -> "BidProfile":
        arr = self.x.copy()
        arr[good, buyer, buyer] = value
        return BidProfile(arr)

    def with_coefficient(self, good: int, buyer: int, other: int, value: float) -> "BidProfile":
        arr = self.x.copy()
        arr[good, buyer, other] = value
        return BidProfile(arr)

    def to_list(self) -> list:
        return self.x.tolist()


def unit_response_coefficients(c, pivoting: str = "partial") -> np.ndarray:
    """
    Solve ``C x = 1`` where ``C`` has ``c`` on the diagonal and ``1``
    everywhere else. Every component is positive when all ``c_j > 1``.
    """
    c = np.asarray(c, dtype=float)
    matrix = np.ones((len(c), len(c))) + np.diag(c - 1.0)
    return gauss_solve(matrix, np.ones(len(c)), pivoting=pivoting)


def truthful_bid_coefficients(
    model: LinearValuationModel,
    buyer: int,
    good: int,
    signal: float,
    pivoting: str = "partial",
) -> LinearBidFunction:
    """
    The bid function that reproduces ``v_{buyer,good}`` at every profile
    consistent with ``signal``.

    Off-diagonals solve ``C x = 1`` over the other buyers' ``c_j``; the free term
    is ``f_i(s)(c_i - sum x_ij) + d_i - sum x_ij d_j``.
    """
    others = [j for j in range(model.n) if j != buyer]
    coefficients = np.zeros(model.n)
    if others:
        coefficients[others] = unit_response_coefficients(model.c[others], pivoting=pivoting)
    off = coefficients[others]
    coefficients[buyer] = (
        model.f(buyer, signal) * (model.c[buyer] - off.sum())
        + model.d[buyer]
        - float(np.dot(off, model.d[others]))
    )
    return LinearBidFunction(buyer=buyer, good=good, coefficients=coefficients)


def truthful_bids(model: LinearValuationModel, signals: SignalProfile) -> BidProfile:
    x = np.zeros((model.m, model.n, model.n))
    for good in range(model.m):
        for buyer in range(model.n):
            x[good, buyer] = truthful_bid_coefficients(
                model, buyer, good, signals.s[buyer, good]
            ).coefficients
    return BidProfile(x)


@dataclass
class ConsistencyReport:
    """
    ``c_prime[j]`` is the constant recovered for buyer ``j`` (``nan`` with a
    single buyer, where nothing constrains it).
    """

    c_prime: np.ndarray
    valid: bool = True
    violations: List[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "valid": self.valid,
            "c_prime": [None if np.isnan(c) else float(c) for c in self.c_prime],
            "violations": self.violations,
        }


def _close(a: float, b: float, eps: float) -> bool:
    return abs(a - b) <= eps + clarke_settings.RELATIVE_TOLERANCE * max(abs(a), abs(b))


def validate_consistency(bids: BidProfile, eps: float = None) -> ConsistencyReport:
    """
    Check that every off-diagonal coefficient is nonzero and that, for each
    buyer ``j``, the ratio ``(1 - sum_{t != i,j} x[A][i][t]) / x[A][i][j]`` is the
    same constant ``c_j' > 1`` for every other buyer ``i`` and every good ``A``.
    """
    eps = tolerance(eps)
    n = bids.n
    report = ConsistencyReport(c_prime=np.full(n, np.nan))
    for a in range(bids.m):
        for i in range(n):
            for j in range(n):
                if i != j and abs(bids.x[a, i, j]) <= eps:
                    report.violations.append(
                        {"code": "zero_coefficient", "good": a, "buyer": i, "other": j}
                    )
    if report.violations:
        report.valid = False
        return report

    for a in range(bids.m):
        for i in range(n):
            row = bids.x[a, i]
            off_total = row.sum() - row[i]
            for j in range(n):
                if j == i:
                    continue
                ratio = (1.0 - (off_total - row[j])) / row[j]
                if np.isnan(report.c_prime[j]):
                    report.c_prime[j] = ratio
                elif not _close(ratio, report.c_prime[j], eps):
                    report.violations.append(
                        {
                            "code": "inconsistent_ratio",
                            "good": a,
                            "buyer": i,
                            "other": j,
                            "ratio": float(ratio),
                            "expected": float(report.c_prime[j]),
                        }
                    )
    for j, c in enumerate(report.c_prime):
        if not np.isnan(c) and c <= 1.0:
            report.violations.append({"code": "ratio_not_above_one", "buyer": j, "ratio": float(c)})
    report.valid = not report.violations
    return report


@dataclass
class FixedPoint:
    good: int
    v: np.ndarray
    residual: float


def fixed_point_system(coefficients: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """``(X with diagonal -1, -diag(X))``, whose solution is the fixed point."""
    matrix = np.array(coefficients, dtype=float)
    rhs = -np.diag(matrix).copy()
    np.fill_diagonal(matrix, -1.0)
    return matrix, rhs


def solve_fixed_point(
    coefficients: np.ndarray, good: int = 0, pivoting: str = "partial", eps: float = None
) -> FixedPoint:
    """
    Valuations ``v`` with ``b_i(v_{-i}) = v_i`` for every buyer, from one good's
    ``n x n`` coefficient matrix.

    :raises clarke.exceptions.SingularSystem: for bids without a unique fixed point.
    :raises clarke.exceptions.InvariantViolation: if the solve leaves a residual.
    """
    eps = tolerance(eps)
    coefficients = np.asarray(coefficients, dtype=float)
    matrix, rhs = fixed_point_system(coefficients)
    v = gauss_solve(matrix, rhs, pivoting=pivoting)
    residual = float(np.max(np.abs(matrix @ v - rhs)))
    scale = max(1.0, float(np.max(np.abs(v))))
    if residual > eps + clarke_settings.RELATIVE_TOLERANCE * scale:
        raise InvariantViolation(
            "Fixed point of good {0} leaves residual {1:.3g}.".format(good, residual)
        )
    return FixedPoint(good=good, v=v, residual=residual)


def fixed_point_valuations(bids: BidProfile, eps: float = None) -> np.ndarray:
    """``(n, m)`` matrix of fixed-point valuations, good ``A`` in column ``A``."""
    return np.column_stack(
        [solve_fixed_point(bids.x[a], good=a, eps=eps).v for a in range(bids.m)]
    )


def recover_f_value(row: np.ndarray, buyer: int, c_prime: float, d: np.ndarray) -> float:
    """
    ``f_i(s_iA)`` implied by a consistent bid row::

        (x_ii - d_i + sum_j x_ij d_j) / (c_i' - sum_j x_ij)
    """
    row = np.asarray(row, dtype=float)
    d = np.asarray(d, dtype=float)
    others = [j for j in range(len(row)) if j != buyer]
    off = row[others]
    denominator = c_prime - off.sum()
    if abs(denominator) <= clarke_settings.PIVOT_TOLERANCE:
        raise DegenerateEquation("c' equals the sum of the off-diagonal coefficients.")
    return float((row[buyer] - d[buyer] + np.dot(off, d[others])) / denominator)


def implied_signal(model: LinearValuationModel, buyer: int, f_value: float) -> float:
    """Invert ``f_i``."""
    return float((f_value - model.f_intercept[buyer]) / model.f_slope[buyer])


def _rejected(mechanism: str, bids: BidProfile, report: ConsistencyReport) -> AuctionOutcome:
    outcome = AuctionOutcome(
        mechanism=mechanism,
        allocation=Allocation.empty(bids.m),
        payments=np.zeros(bids.n),
        utilities=np.zeros(bids.n),
        welfare=0.0,
        diagnostics={"consistency": report.to_dict()},
        allocated=False,
    )
    logger.info("%s rejected inconsistent bids: %s", mechanism, report.violations)
    bids_rejected.send(sender=AuctionOutcome, mechanism=mechanism, report=report)
    auction_settled.send(sender=AuctionOutcome, mechanism=mechanism, outcome=outcome)
    return outcome


def _settle(
    mechanism: str,
    allocation: Allocation,
    payments: np.ndarray,
    apparent: np.ndarray,
    diagnostics: dict,
    model: Optional[LinearValuationModel],
    signals: Optional[SignalProfile],
) -> AuctionOutcome:
    if model is not None and signals is not None:
        utilities = realized_utilities(model, signals, allocation, payments)
        total = welfare(model, signals, allocation)
    else:
        held = np.array(
            [
                max((apparent[i, k] for k in allocation.owner_goods(i)), default=0.0)
                for i in range(len(payments))
            ]
        )
        utilities = held - payments
        total = float(held.sum())
    outcome = AuctionOutcome(
        mechanism=mechanism,
        allocation=allocation,
        payments=payments,
        utilities=utilities,
        welfare=total,
        diagnostics=diagnostics,
    )
    logger.debug("%s allocation %s payments %s", mechanism, allocation.assigned, payments.tolist())
    auction_settled.send(sender=AuctionOutcome, mechanism=mechanism, outcome=outcome)
    return outcome


def _check_square(bids: BidProfile, mechanism: str) -> None:
    if bids.n != bids.m:
        raise ShapeError(
            "{0} needs as many buyers as goods (n={1}, m={2}).".format(mechanism, bids.n, bids.m)
        )


def auction3_payment_table(bids: BidProfile, report: ConsistencyReport, values: np.ndarray):
    """
    ``P_i(sigma) = k_i' W(sigma) - v_{i,sigma(i)} + k_i' sum_A x_ii^A / (c_i' - sum_j x_ij^A)``
    over the fixed-point valuations, ``k_i' = c_i' / (c_i' - 1)``.
    """
    n = bids.n
    c = report.c_prime
    k = c / (c - 1.0)
    offset = np.zeros(n)
    for i in range(n):
        for a in range(bids.m):
            row = bids.x[a, i]
            offset[i] += row[i] / (c[i] - (row.sum() - row[i]))
    return permutation_table(values, k, -k * offset)


def run_auction3(
    bids: BidProfile,
    tie: TieRule = None,
    model: LinearValuationModel = None,
    signals: SignalProfile = None,
    eps: float = None,
) -> AuctionOutcome:
    """
    Bid-function counterpart of :func:`clarke.signal_auctions.run_auction1`.

    Inconsistent bids produce an outcome with ``allocated=False``. Two buyers
    are priced by :func:`run_auction3_two_buyer`. ``model`` and ``signals``, when
    both given, only serve to measure true utilities.
    """
    _check_square(bids, "Auction 3")
    if bids.n == 2:
        return run_auction3_two_buyer(bids, tie, model=model, signals=signals, eps=eps)
    report = validate_consistency(bids, eps=eps)
    if not report.valid:
        return _rejected("auction3", bids, report)
    values = fixed_point_valuations(bids, eps=eps)
    result = best_injective_assignment(AssignmentProblem(values), tie, eps=eps)
    if bids.n == 1:
        payments = np.zeros(1)
        table = None
    else:
        table = auction3_payment_table(bids, report, values)
        payments = table.payments(result.allocation)
    diagnostics = {
        "consistency": report.to_dict(),
        "fixed_points": values.T.tolist(),
        "apparent_welfare": result.value,
        "selected_sigma": list(result.allocation.permutation(bids.n)),
        "optima": [list(a.assigned) for a in result.optima],
    }
    if table is not None:
        diagnostics["payment_table"] = table.to_list()
    return _settle("auction3", result.allocation, payments, values, diagnostics, model, signals)


def run_auction3_two_buyer(
    bids: BidProfile,
    tie: TieRule = None,
    model: LinearValuationModel = None,
    signals: SignalProfile = None,
    eps: float = None,
) -> AuctionOutcome:
    """
    Two buyers, two goods: ``P_i(sigma) = k_i' x_jj^{sigma(j)}`` with ``j`` the
    other buyer, and buyer ``i`` pays ``max_sigma P_i(sigma) - P_i(sigma*)``.
    """
    if bids.n != 2 or bids.m != 2:
        raise ShapeError("The two-buyer auction needs exactly two buyers and two goods.")
    report = validate_consistency(bids, eps=eps)
    if not report.valid:
        return _rejected("auction3", bids, report)
    values = fixed_point_valuations(bids, eps=eps)
    result = best_injective_assignment(AssignmentProblem(values), tie, eps=eps)
    c = report.c_prime
    k = c / (c - 1.0)
    sigmas = [(0, 1), (1, 0)]
    table = np.array(
        [[k[i] * bids.x[sigma[1 - i], 1 - i, 1 - i] for sigma in sigmas] for i in range(2)]
    )
    selected = sigmas.index(result.allocation.permutation(2))
    payments = table.max(axis=1) - table[:, selected]
    diagnostics = {
        "consistency": report.to_dict(),
        "fixed_points": values.T.tolist(),
        "apparent_welfare": result.value,
        "selected_sigma": list(sigmas[selected]),
        "payment_table": [
            {"sigma": list(sigma), "P": table[:, r].tolist()} for r, sigma in enumerate(sigmas)
        ],
        "optima": [list(a.assigned) for a in result.optima],
    }
    return _settle("auction3", result.allocation, payments, values, diagnostics, model, signals)


def _with_free_term(bids: BidProfile, good: int, buyer: int, free_term: float, eps: float) -> np.ndarray:
    return solve_fixed_point(bids.with_free_term(good, buyer, free_term).x[good], good, eps=eps).v


def run_auction4(
    bids: BidProfile,
    tie: TieRule = None,
    model: LinearValuationModel = None,
    signals: SignalProfile = None,
    eps: float = None,
) -> AuctionOutcome:
    """
    Bid-function counterpart of :func:`clarke.signal_auctions.run_auction2`.

    The winner ``i`` of good ``A`` pays ``v*_i``, the fixed point of good ``A``
    once ``x[A][i][i]`` is replaced by the free term ``x*`` at which ``i`` only
    just beats the best allocation without them. The fixed point is affine
    in the free term, so ``x*`` comes from two evaluations.
    """
    if bids.n <= bids.m:
        raise ShapeError(
            "Auction 4 needs more buyers than goods (n={0}, m={1}).".format(bids.n, bids.m)
        )
    eps = tolerance(eps)
    report = validate_consistency(bids, eps=eps)
    if not report.valid:
        return _rejected("auction4", bids, report)
    values = fixed_point_valuations(bids, eps=eps)
    problem = AssignmentProblem(values)
    result = best_injective_assignment(problem, tie, eps=eps)
    allocation = result.allocation
    payments = np.zeros(bids.n)
    thresholds = []
    for good, buyer in enumerate(allocation.assigned):
        residual = best_injective_assignment(problem, tie, exclude=[buyer], eps=eps).allocation
        runner_up = residual.assigned[good]
        rhs = sum(
            values[residual.assigned[a], a] - values[allocation.assigned[a], a]
            for a in range(bids.m)
            if a != good
        )
        x0 = bids.x[good, buyer, buyer]
        v0 = _with_free_term(bids, good, buyer, x0, eps)
        v1 = _with_free_term(bids, good, buyer, x0 + 1.0, eps)
        h0 = v0[buyer] - v0[runner_up] - rhs
        slope = (v1[buyer] - v1[runner_up]) - (v0[buyer] - v0[runner_up])
        if abs(slope) <= clarke_settings.PIVOT_TOLERANCE:
            raise DegenerateEquation(
                "Threshold of buyer {0} for good {1} does not depend on the free term.".format(
                    buyer, good
                )
            )
        free_term = float(x0 - h0 / slope)
        payments[buyer] = _with_free_term(bids, good, buyer, free_term, eps)[buyer]
        thresholds.append(
            {
                "buyer": buyer,
                "good": good,
                "free_term": free_term,
                "payment": float(payments[buyer]),
                "residual": list(residual.assigned),
            }
        )
    diagnostics = {
        "consistency": report.to_dict(),
        "fixed_points": values.T.tolist(),
        "apparent_welfare": result.value,
        "thresholds": thresholds,
        "optima": [list(a.assigned) for a in result.optima],
    }
    return _settle("auction4", allocation, payments, values, diagnostics, model, signals)


@dataclass(frozen=True)
class AffineBid:
    """``b(v) = intercept + slope * v`` for the single-good two-buyer auction."""

    intercept: float
    slope: float

    def __post_init__(self):
        if not (np.isfinite(self.intercept) and np.isfinite(self.slope)):
            raise ShapeError("Affine bids must be finite.")
        if abs(self.slope) >= 1.0:
            raise ValidationError(
                "Bid slope %(value)s must be strictly between -1 and 1.",
                code="slope_too_steep",
                params={"value": self.slope},
            )

    def __call__(self, v: float) -> float:
        return self.intercept + self.slope * v

    def self_consistent_value(self) -> float:
        """The ``v`` with ``v = b(v)``."""
        return self.intercept / (1.0 - self.slope)

    @classmethod
    def from_function(cls, function: LinearBidFunction) -> "AffineBid":
        if len(function.coefficients) != 2:
            raise ShapeError("Only two-buyer bid functions are affine in one variable.")
        return cls(
            intercept=function.free_term,
            slope=float(function.coefficients[1 - function.buyer]),
        )


def run_dm_two_buyer(
    bid_1: AffineBid,
    bid_2: AffineBid,
    tie: TieRule = None,
    model: LinearValuationModel = None,
    signals: SignalProfile = None,
    eps: float = None,
) -> AuctionOutcome:
    """
    One good, two buyers: solve ``v_1 = b_1(v_2), v_2 = b_2(v_1)``, give the good
    to the larger ``v_i`` and charge the winner the ``v`` solving ``v = b_j(v)``
    for the other buyer ``j``.
    """
    tie = TieRule.resolve(tie)
    eps = tolerance(eps)
    bids = (bid_1, bid_2)
    v = gauss_solve(
        np.array([[1.0, -bid_1.slope], [-bid_2.slope, 1.0]]),
        np.array([bid_1.intercept, bid_2.intercept]),
    )
    best = float(v.max())
    candidates = [i for i in range(2) if v[i] >= best - eps]
    winner = tie.select(candidates)
    payments = np.zeros(2)
    payments[winner] = bids[1 - winner].self_consistent_value()
    allocation = Allocation((winner,))
    diagnostics = {
        "fixed_points": [v.tolist()],
        "apparent_welfare": best,
        "optima": [[i] for i in candidates],
    }
    return _settle("dm2", allocation, payments, v[:, None], diagnostics, model, signals)
