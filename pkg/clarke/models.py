"""
Core domain types shared by every mechanism.

Buyers and goods are indexed from ``0``. A buyer's valuation of good ``K`` is
separable and affine::

    v_{i,K}(s_K) = w_i(s_{iK}) + sum_{j != i} f_j(s_{jK})
    f_i(x) = a_i * x + e_i
    w_i(x) = c_i * f_i(x) + d_i

and a buyer values a set of goods at its best member (unit demand).
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from django.core.exceptions import ValidationError

from clarke.exceptions import ShapeError
from clarke.settings import clarke_settings

logger = logging.getLogger(__name__)


def _as_vector(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise ShapeError("{0} must be one-dimensional.".format(name))
    if not np.all(np.isfinite(arr)):
        raise ShapeError("{0} must be finite.".format(name))
    return arr


@dataclass(frozen=True, eq=False)
class LinearValuationModel:
    """
    Per-buyer affine functions ``f_i`` and the ratio form ``w_i = c_i f_i + d_i``.

    Structural invariants (``n >= m >= 1``, matching lengths) are enforced on
    construction; economic conditions are checked by :func:`validate_model`.
    """

    #: Slope ``a_i`` of ``f_i``.
    f_slope: np.ndarray
    #: Intercept ``e_i`` of ``f_i``.
    f_intercept: np.ndarray
    #: Ratio ``c_i`` in ``w_i = c_i f_i + d_i``.
    c: np.ndarray
    #: Additive constant ``d_i``.
    d: np.ndarray
    #: Number of goods.
    m: int

    def __post_init__(self):
        for name in ("f_slope", "f_intercept", "c", "d"):
            object.__setattr__(self, name, _as_vector(getattr(self, name), name))
        n = len(self.f_slope)
        if {len(self.f_intercept), len(self.c), len(self.d)} != {n}:
            raise ShapeError("f_slope, f_intercept, c and d must have equal length.")
        if n < 1 or self.m < 1:
            raise ShapeError("A model needs at least one buyer and one good.")
        if n < self.m:
            raise ShapeError(
                "There must be at least as many buyers as goods (n={0}, m={1}).".format(
                    n, self.m
                )
            )

    @classmethod
    def build(cls, f_slope, c, m: int, f_intercept=None, d=None):
        n = len(f_slope)
        return cls(
            f_slope=f_slope,
            f_intercept=np.zeros(n) if f_intercept is None else f_intercept,
            c=c,
            d=np.zeros(n) if d is None else d,
            m=m,
        )

    @property
    def n(self) -> int:
        return len(self.f_slope)

    def f(self, buyer: int, x: float) -> float:
        return float(self.f_slope[buyer] * x + self.f_intercept[buyer])

    def w(self, buyer: int, x: float) -> float:
        return float(self.c[buyer] * self.f(buyer, x) + self.d[buyer])

    def payment_ratio(self, buyer: int) -> float:
        """``c_i / (c_i - 1)``, the constant value of ``w'/(w' - f')``."""
        c = float(self.c[buyer])
        return c / (c - 1.0)

    def to_dict(self) -> dict:
        return {
            "f_slope": self.f_slope.tolist(),
            "f_intercept": self.f_intercept.tolist(),
            "c": self.c.tolist(),
            "d": self.d.tolist(),
        }


@dataclass(frozen=True, eq=False)
class SignalProfile:
    """Matrix of signals ``s[i][K]``: buyer ``i``'s signal for good ``K``."""

    s: np.ndarray

    def __post_init__(self):
        arr = np.array(self.s, dtype=float)
        if arr.ndim != 2 or 0 in arr.shape:
            raise ShapeError("Signals must form a non-empty n x m matrix.")
        if not np.all(np.isfinite(arr)):
            raise ShapeError("Signals must be finite.")
        arr.setflags(write=False)
        object.__setattr__(self, "s", arr)

    @property
    def n(self) -> int:
        return self.s.shape[0]

    @property
    def m(self) -> int:
        return self.s.shape[1]

    def with_row(self, buyer: int, row: Sequence[float]):
        """Copy with ``buyer``'s whole report replaced."""
        arr = self.s.copy()
        arr[buyer] = row
        return type(self)(arr)

    def with_signal(self, buyer: int, good: int, value: float):
        arr = self.s.copy()
        arr[buyer, good] = value
        return type(self)(arr)

    def to_list(self) -> List[List[float]]:
        return self.s.tolist()


class SignalBid(SignalProfile):
    """
    Signal vectors as *reported* to the designer of a signal auction.
    May differ from the true :class:`SignalProfile`.
    """


@dataclass(frozen=True)
class Allocation:
    """
    ``assigned[K]`` is the buyer receiving good ``K`` (``None`` if unassigned).
    """

    assigned: Tuple[Optional[int], ...]

    @classmethod
    def empty(cls, m: int) -> "Allocation":
        return cls((None,) * m)

    @classmethod
    def from_permutation(cls, goods_of_buyer: Sequence[int]) -> "Allocation":
        """Build from ``sigma`` where buyer ``i`` receives good ``sigma[i]``."""
        assigned = [None] * len(goods_of_buyer)
        for buyer, good in enumerate(goods_of_buyer):
            assigned[good] = buyer
        return cls(tuple(assigned))

    @property
    def m(self) -> int:
        return len(self.assigned)

    def owner_goods(self, buyer: int) -> FrozenSet[int]:
        return frozenset(k for k, owner in enumerate(self.assigned) if owner == buyer)

    def good_of(self, buyer: int) -> Optional[int]:
        """The single good held by ``buyer`` (unit-demand view)."""
        goods = self.owner_goods(buyer)
        if len(goods) > 1:
            raise ValueError("Buyer {0} holds more than one good.".format(buyer))
        return next(iter(goods), None)

    def winners(self) -> List[int]:
        return sorted({b for b in self.assigned if b is not None})

    @property
    def is_unit_demand(self) -> bool:
        owners = [b for b in self.assigned if b is not None]
        return len(owners) == len(set(owners))

    def permutation(self, n: int) -> Tuple[Optional[int], ...]:
        """``sigma`` with ``sigma[i]`` the good of buyer ``i``."""
        return tuple(self.good_of(i) for i in range(n))


@dataclass
class ValidationReport:
    """Outcome of :func:`validate_model`: hard errors and per-scenario warnings."""

    errors: List[ValidationError] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.errors

    def raise_if_invalid(self) -> None:
        """
        :raises django.core.exceptions.ValidationError: listing every violation.
        """
        if self.errors:
            raise ValidationError(self.errors)


@dataclass
class AuctionOutcome:
    """
    Result of one mechanism run.

    ``utilities`` and ``welfare`` are computed against true signals when the
    caller supplied them, otherwise against the reports (apparent values).
    """

    mechanism: str
    allocation: Allocation
    payments: np.ndarray
    utilities: np.ndarray
    welfare: float
    diagnostics: Dict = field(default_factory=dict)
    warnings: List[str] = field(default_factory=list)
    #: ``False`` when the mechanism refused to allocate (bid consistency gate).
    allocated: bool = True

    @property
    def n(self) -> int:
        return len(self.payments)


def valuation_matrix(model: LinearValuationModel, signals: SignalProfile) -> np.ndarray:
    """
    Every ``v_{i,K}`` at once, as an ``n x m`` array.

    ``v_{i,K} = (c_i - 1) f_i(s_{iK}) + d_i + sum_j f_j(s_{jK})``.
    """
    _check_shape(model, signals)
    f = model.f_slope[:, None] * signals.s + model.f_intercept[:, None]
    return (model.c - 1.0)[:, None] * f + model.d[:, None] + f.sum(axis=0)[None, :]


def f_matrix(model: LinearValuationModel, signals: SignalProfile) -> np.ndarray:
    _check_shape(model, signals)
    return model.f_slope[:, None] * signals.s + model.f_intercept[:, None]


def _check_shape(model: LinearValuationModel, signals: SignalProfile) -> None:
    if signals.s.shape != (model.n, model.m):
        raise ShapeError(
            "Signals are {0}x{1} but the model has {2} buyers and {3} goods.".format(
                signals.n, signals.m, model.n, model.m
            )
        )


def eval_valuation(
    model: LinearValuationModel, signals: SignalProfile, buyer: int, good: int
) -> float:
    _check_shape(model, signals)
    if not (0 <= buyer < model.n and 0 <= good < model.m):
        raise IndexError("buyer/good index out of range")
    column = signals.s[:, good]
    others = sum(model.f(j, column[j]) for j in range(model.n) if j != buyer)
    return model.w(buyer, column[buyer]) + others


def eval_set_valuation(
    model: LinearValuationModel,
    signals: SignalProfile,
    buyer: int,
    goods: Iterable[int],
) -> float:
    """Unit demand: the set is worth its best good; the empty set is worth 0."""
    goods = list(goods)
    if not goods:
        return 0.0
    return max(eval_valuation(model, signals, buyer, k) for k in goods)


def welfare(
    model: LinearValuationModel, signals: SignalProfile, allocation: Allocation
) -> float:
    return sum(
        eval_set_valuation(model, signals, i, allocation.owner_goods(i))
        for i in range(model.n)
    )


def realized_utilities(
    model: LinearValuationModel,
    signals: SignalProfile,
    allocation: Allocation,
    payments: Sequence[float],
) -> np.ndarray:
    """``U_i = v_i(S_i) - P_i`` at the given (true) signals."""
    return np.array(
        [
            eval_set_valuation(model, signals, i, allocation.owner_goods(i)) - payments[i]
            for i in range(model.n)
        ]
    )


def validate_model(
    model: LinearValuationModel, signals: Optional[SignalProfile] = None
) -> ValidationReport:
    """
    Check the single-crossing conditions of ``model`` and, if ``signals`` are
    given, nonnegativity of every valuation.

    ``c_i <= 1`` and ``a_i <= 0`` are errors; negative valuations only matter
    for voluntary participation and are reported as warnings.
    """
    report = ValidationReport()
    for i in range(model.n):
        if model.f_slope[i] <= 0:
            report.errors.append(
                ValidationError(
                    "f_%(buyer)s must be strictly increasing (slope %(value)s).",
                    code="not_increasing",
                    params={"buyer": i, "value": float(model.f_slope[i])},
                )
            )
        if model.c[i] <= 1:
            report.errors.append(
                ValidationError(
                    "Buyer %(buyer)s violates single crossing: c = %(value)s <= 1.",
                    code="not_single_crossing",
                    params={"buyer": i, "value": float(model.c[i])},
                )
            )
    if signals is not None:
        values = valuation_matrix(model, signals)
        eps = clarke_settings.EPSILON
        for i, k in zip(*np.nonzero(values < -eps)):
            msg = "v[{0}][{1}] = {2:.6g} is negative.".format(i, k, values[i, k])
            report.warnings.append(msg)
            logger.debug(msg)
    return report


def own_and_cross_derivatives(model: LinearValuationModel) -> Tuple[np.ndarray, np.ndarray]:
    """
    ``(dv_i/ds_i, dv_j/ds_i)`` per buyer ``i``: ``c_i a_i`` and ``a_i``.
    """
    return model.c * model.f_slope, model.f_slope.copy()
