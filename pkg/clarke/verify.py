"""
Brute-force equilibrium and property checks.

:func:`check_best_response` holds every other buyer at their truthful strategy
and tries each deviation of a :class:`DeviationGrid` (plus an exit strategy)
for one buyer, measuring utility against the true valuations.
:func:`run_property_suite` runs the structural checks of each mechanism on
seeded random instances.
"""
import itertools
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from clarke import bidfn_auctions, signal_auctions, vcg
from clarke.assign import (
    AssignmentProblem,
    TieRule,
    best_injective_assignment,
    unit_demand_reduction_check,
)
from clarke.exceptions import ShapeError
from clarke.models import (
    AuctionOutcome,
    LinearValuationModel,
    SignalBid,
    SignalProfile,
    valuation_matrix,
)
from clarke.settings import clarke_settings, tolerance
from clarke.signals import deviation_found

logger = logging.getLogger(__name__)

DEVIATION_MODES = ("per-coordinate", "joint")

#: Default ``(n, m)`` of random instances per mechanism.
DEFAULT_SIZES = {
    "vcg": (3, 2),
    "auction1": (3, 3),
    "auction2": (3, 2),
    "auction3": (3, 3),
    "auction4": (3, 2),
    "dm2": (2, 1),
}


@dataclass(frozen=True)
class DeviationGrid:
    """
    Offsets added to a buyer's truthful strategy, one coordinate at a time
    (``per-coordinate``) or in every combination (``joint``).
    """

    offsets: Tuple[float, ...] = (-2.0, -1.0, -0.5, -0.1, 0.1, 0.5, 1.0, 2.0)
    mode: str = "per-coordinate"
    include_exit: bool = True

    def __post_init__(self):
        offsets = tuple(float(o) for o in self.offsets)
        if not offsets:
            raise ValueError("A deviation grid needs at least one offset.")
        if not all(np.isfinite(offsets)):
            raise ValueError("Deviation offsets must be finite.")
        if self.mode not in DEVIATION_MODES:
            raise ValueError("Unknown deviation mode '{0}'.".format(self.mode))
        object.__setattr__(self, "offsets", offsets)

    @classmethod
    def default(cls) -> "DeviationGrid":
        return cls(
            offsets=tuple(clarke_settings.DEVIATION_OFFSETS),
            mode=clarke_settings.DEVIATION_MODE,
            include_exit=clarke_settings.INCLUDE_EXIT,
        )

    def deviations(self, truthful: np.ndarray):
        truthful = np.asarray(truthful, dtype=float)
        if self.mode == "joint":
            for combo in itertools.product(self.offsets, repeat=len(truthful)):
                yield truthful + np.array(combo)
            return
        for coordinate in range(len(truthful)):
            for offset in self.offsets:
                deviated = truthful.copy()
                deviated[coordinate] += offset
                yield deviated


@dataclass
class EquilibriumReport:
    mechanism: str
    instances_checked: int = 0
    max_violation: float = 0.0
    #: Deviating scenario with the largest violation, reloadable by ``run``.
    worst_case: Optional[dict] = None
    worst_index: Optional[int] = None
    epsilon: float = 0.0

    @property
    def passed(self) -> bool:
        return self.max_violation <= self.epsilon

    def merge(self, other: "EquilibriumReport") -> "EquilibriumReport":
        """
        Combine two reports; the larger violation wins and equal violations go
        to the smaller instance index, so merge order does not matter.
        """
        mine = (-self.max_violation, _index_key(self.worst_index))
        theirs = (-other.max_violation, _index_key(other.worst_index))
        best = self if mine <= theirs else other
        return EquilibriumReport(
            mechanism=self.mechanism,
            instances_checked=self.instances_checked + other.instances_checked,
            max_violation=best.max_violation,
            worst_case=best.worst_case,
            worst_index=best.worst_index,
            epsilon=max(self.epsilon, other.epsilon),
        )

    def to_dict(self) -> dict:
        return {
            "mechanism": self.mechanism,
            "instances_checked": self.instances_checked,
            "max_violation": self.max_violation,
            "passed": self.passed,
            "epsilon": self.epsilon,
            "worst_index": self.worst_index,
            "worst_case": self.worst_case,
        }


def _index_key(index: Optional[int]) -> float:
    return float("inf") if index is None else index


@dataclass
class Instance:
    model: Optional[LinearValuationModel]
    signals: Optional[SignalProfile]
    values: Optional[vcg.PrivateValues] = None
    bids: Optional[bidfn_auctions.BidProfile] = None

    @property
    def n(self) -> int:
        return self.values.n if self.values is not None else self.model.n

    @property
    def m(self) -> int:
        return self.values.m if self.values is not None else self.model.m


def random_model(
    rng: np.random.Generator, n: int, m: int, nonnegative: bool = False
) -> Tuple[LinearValuationModel, SignalProfile]:
    """
    A validated model and signals drawn from the ``SWEEP_*`` ranges; with
    ``nonnegative`` every valuation is kept at or above zero.
    """
    const_low, const_high = clarke_settings.SWEEP_CONSTANT_RANGE
    signal_low, signal_high = clarke_settings.SWEEP_SIGNAL_RANGE
    if nonnegative:
        const_low, signal_low = 0.0, 0.0
    model = LinearValuationModel(
        f_slope=rng.uniform(*clarke_settings.SWEEP_SLOPE_RANGE, size=n),
        f_intercept=rng.uniform(const_low, const_high, size=n),
        c=rng.uniform(*clarke_settings.SWEEP_C_RANGE, size=n),
        d=rng.uniform(const_low, const_high, size=n),
        m=m,
    )
    return model, SignalProfile(rng.uniform(signal_low, signal_high, size=(n, m)))


class MechanismAdapter:
    """
    Exposes one mechanism to the harness as a real-valued strategy vector
    per buyer.
    """

    name = None

    def check_shape(self, n: int, m: int) -> None:
        if n < m:
            raise ShapeError("{0} needs n >= m (n={1}, m={2}).".format(self.name, n, m))

    def instance(self, model, signals, values=None) -> Instance:
        if model is None or signals is None:
            raise ShapeError("{0} needs a model and signals.".format(self.name))
        if signals.s.shape != (model.n, model.m):
            raise ShapeError("Signals do not match the model.")
        self.check_shape(model.n, model.m)
        return Instance(model=model, signals=signals)

    def draw(self, rng: np.random.Generator, n: int, m: int) -> Instance:
        self.check_shape(n, m)
        return self.instance(*random_model(rng, n, m))

    def truthful(self, instance: Instance, buyer: int) -> np.ndarray:
        raise NotImplementedError

    def exit(self, instance: Instance, buyer: int) -> np.ndarray:
        return np.full(instance.m, -clarke_settings.EXIT_SIGNAL)

    def outcome(self, instance: Instance, buyer: int, strategy, tie: TieRule) -> AuctionOutcome:
        raise NotImplementedError

    def scenario(self, instance: Instance, buyer: int, strategy, tie: TieRule) -> dict:
        raise NotImplementedError

    def _base_scenario(self, instance: Instance, tie: TieRule) -> dict:
        scenario = {"mechanism": self.name, "tie": tie.kind, "seed": tie.seed}
        if instance.model is not None:
            scenario["model"] = instance.model.to_dict()
            scenario["signals"] = instance.signals.to_list()
        return scenario


class SignalAuctionAdapter(MechanismAdapter):
    def __init__(self, name: str, runner: str, shape: Callable[[int, int], bool], rule: str):
        self.name = name
        self.runner = runner
        self.shape = shape
        self.rule = rule

    def check_shape(self, n, m):
        if not self.shape(n, m):
            raise ShapeError("{0} needs {1} (n={2}, m={3}).".format(self.name, self.rule, n, m))

    def truthful(self, instance, buyer):
        return instance.signals.s[buyer].copy()

    def _reports(self, instance, buyer, strategy) -> SignalBid:
        return SignalBid(instance.signals.s).with_row(buyer, strategy)

    def outcome(self, instance, buyer, strategy, tie):
        run = getattr(signal_auctions, self.runner)
        return run(
            instance.model, self._reports(instance, buyer, strategy), tie, signals=instance.signals
        )

    def scenario(self, instance, buyer, strategy, tie):
        scenario = self._base_scenario(instance, tie)
        scenario["bids"] = self._reports(instance, buyer, strategy).to_list()
        return scenario


class BidFunctionAdapter(SignalAuctionAdapter):
    """Deviations move only a buyer's free terms; off-diagonals stay truthful."""

    def instance(self, model, signals, values=None):
        instance = super().instance(model, signals, values)
        instance.bids = bidfn_auctions.truthful_bids(model, signals)
        return instance

    def truthful(self, instance, buyer):
        return instance.bids.free_terms()[:, buyer].copy()

    def _bids(self, instance, buyer, strategy) -> bidfn_auctions.BidProfile:
        bids = instance.bids
        for good, free_term in enumerate(strategy):
            bids = bids.with_free_term(good, buyer, free_term)
        return bids

    def outcome(self, instance, buyer, strategy, tie):
        run = getattr(bidfn_auctions, self.runner)
        return run(
            self._bids(instance, buyer, strategy),
            tie,
            model=instance.model,
            signals=instance.signals,
        )

    def scenario(self, instance, buyer, strategy, tie):
        scenario = self._base_scenario(instance, tie)
        scenario["bids"] = self._bids(instance, buyer, strategy).to_list()
        return scenario


class TwoBuyerAdapter(BidFunctionAdapter):
    def _affine(self, instance, buyer, strategy) -> List[bidfn_auctions.AffineBid]:
        affine = [
            bidfn_auctions.AffineBid.from_function(instance.bids.function(0, i)) for i in range(2)
        ]
        affine[buyer] = bidfn_auctions.AffineBid(float(strategy[0]), affine[buyer].slope)
        return affine

    def outcome(self, instance, buyer, strategy, tie):
        first, second = self._affine(instance, buyer, strategy)
        return bidfn_auctions.run_dm_two_buyer(
            first, second, tie, model=instance.model, signals=instance.signals
        )

    def scenario(self, instance, buyer, strategy, tie):
        scenario = self._base_scenario(instance, tie)
        scenario["bids"] = [
            {"intercept": bid.intercept, "slope": bid.slope}
            for bid in self._affine(instance, buyer, strategy)
        ]
        return scenario


class VCGAdapter(MechanismAdapter):
    """
    Strategies are bids on every non-empty bundle; exiting bids zero
    everywhere.
    """

    name = "vcg"

    def instance(self, model, signals, values=None):
        if values is None:
            instance = super().instance(model, signals)
            values = vcg.PrivateValues(vcg.truthful_subset_bids(model, signals), model.m)
        else:
            instance = Instance(model=model, signals=signals)
        instance.values = values
        return instance

    def draw(self, rng, n, m):
        return self.instance(None, None, vcg.PrivateValues.random(rng, n, m))

    def truthful(self, instance, buyer):
        return np.array([instance.values.value(buyer, goods) for goods in vcg.bundles(instance.m)])

    def exit(self, instance, buyer):
        return np.zeros(len(vcg.bundles(instance.m)))

    def _bids(self, instance, buyer, strategy) -> List[vcg.SubsetBid]:
        bids = instance.values.truthful_bids()
        bids[buyer] = vcg.SubsetBid(dict(zip(vcg.bundles(instance.m), strategy)))
        return bids

    def outcome(self, instance, buyer, strategy, tie):
        return vcg.run_vcg(
            self._bids(instance, buyer, strategy), m=instance.m, tie=tie, values=instance.values
        )

    def scenario(self, instance, buyer, strategy, tie):
        scenario = self._base_scenario(instance, tie)
        scenario["bids"] = [bid.to_items() for bid in self._bids(instance, buyer, strategy)]
        if instance.model is None:
            scenario["values"] = [bid.to_items() for bid in instance.values.values]
        return scenario


MECHANISMS: Dict[str, MechanismAdapter] = {
    "vcg": VCGAdapter(),
    "auction1": SignalAuctionAdapter("auction1", "run_auction1", lambda n, m: n == m, "n == m"),
    "auction2": SignalAuctionAdapter("auction2", "run_auction2", lambda n, m: n > m, "n > m"),
    "auction3": BidFunctionAdapter("auction3", "run_auction3", lambda n, m: n == m, "n == m"),
    "auction4": BidFunctionAdapter("auction4", "run_auction4", lambda n, m: n > m, "n > m"),
    "dm2": TwoBuyerAdapter("dm2", "run_dm_two_buyer", lambda n, m: (n, m) == (2, 1), "n = 2, m = 1"),
}


def get_adapter(mechanism: str) -> MechanismAdapter:
    try:
        return MECHANISMS[mechanism]
    except KeyError:
        raise ShapeError(
            "Unknown mechanism '{0}', expected one of {1}.".format(mechanism, sorted(MECHANISMS))
        )


def expected_utility(
    adapter: MechanismAdapter, instance: Instance, buyer: int, strategy, tie: TieRule
) -> float:
    """
    The buyer's true utility; under the ``random`` tie rule the exact average
    over every optimum.
    """
    if tie.kind != "random":
        return float(adapter.outcome(instance, buyer, strategy, tie).utilities[buyer])
    first = adapter.outcome(instance, buyer, strategy, TieRule("nth", index=0))
    count = max(1, len(first.diagnostics.get("optima", [])))
    total = float(first.utilities[buyer])
    for index in range(1, count):
        other = adapter.outcome(instance, buyer, strategy, TieRule("nth", index=index))
        total += float(other.utilities[buyer])
    return total / count


def _check_instance(
    adapter: MechanismAdapter,
    instance: Instance,
    buyer: int,
    grid: DeviationGrid,
    tie: TieRule,
    eps: float,
    instance_index: int,
) -> EquilibriumReport:
    truthful = adapter.truthful(instance, buyer)
    honest = expected_utility(adapter, instance, buyer, truthful, tie)
    report = EquilibriumReport(mechanism=adapter.name, instances_checked=1, epsilon=eps)
    strategies = list(grid.deviations(truthful))
    if grid.include_exit:
        strategies.append(adapter.exit(instance, buyer))
    for strategy in strategies:
        violation = expected_utility(adapter, instance, buyer, strategy, tie) - honest
        if violation > report.max_violation:
            report.max_violation = float(violation)
            report.worst_index = instance_index
            report.worst_case = {
                "buyer": buyer,
                "truthful_utility": honest,
                "deviation_utility": honest + float(violation),
                "violation": float(violation),
                "scenario": adapter.scenario(instance, buyer, strategy, tie),
            }
    return report


def check_best_response(
    mechanism: str,
    model: Optional[LinearValuationModel],
    signals: Optional[SignalProfile],
    buyer: int,
    grid: DeviationGrid = None,
    tie: TieRule = None,
    values: Optional[vcg.PrivateValues] = None,
    eps: float = None,
) -> EquilibriumReport:
    """
    Largest gain ``buyer`` can get over truthful play from any strategy in
    ``grid`` while everyone else stays truthful.

    :raises clarke.exceptions.ShapeError: when the instance does not fit the mechanism.
    """
    adapter = get_adapter(mechanism)
    instance = adapter.instance(model, signals, values)
    if not 0 <= buyer < instance.n:
        raise ShapeError("Buyer {0} is out of range.".format(buyer))
    return _check_instance(
        adapter,
        instance,
        buyer,
        grid or DeviationGrid.default(),
        TieRule.resolve(tie),
        tolerance(eps),
        0,
    )


def sweep_random_instances(
    mechanism: str,
    n: int = None,
    m: int = None,
    count: int = 200,
    seed: int = None,
    grid: DeviationGrid = None,
    tie: TieRule = None,
    eps: float = None,
) -> EquilibriumReport:
    """
    Draw ``count`` random instances and check every buyer of each one.
    Identical seeds give identical reports.
    """
    adapter = get_adapter(mechanism)
    default_n, default_m = DEFAULT_SIZES[mechanism]
    n = default_n if n is None else n
    m = default_m if m is None else m
    adapter.check_shape(n, m)
    seed = clarke_settings.SEED if seed is None else seed
    grid = grid or DeviationGrid.default()
    tie = TieRule.resolve(tie)
    eps = tolerance(eps)
    rng = np.random.default_rng(seed)

    report = EquilibriumReport(mechanism=mechanism, epsilon=eps)
    for index in range(count):
        instance = adapter.draw(rng, n, m)
        checked = EquilibriumReport(mechanism=mechanism, epsilon=eps)
        for buyer in range(n):
            checked = checked.merge(_check_instance(adapter, instance, buyer, grid, tie, eps, index))
        checked.instances_checked = 1
        report = report.merge(checked)
        if (index + 1) % 50 == 0:
            logger.info("%s: %d/%d instances checked", mechanism, index + 1, count)
    if not report.passed:
        logger.warning(
            "%s: truthful bidding beaten by %.3g (instance %s)",
            mechanism,
            report.max_violation,
            report.worst_index,
        )
        deviation_found.send(sender=EquilibriumReport, mechanism=mechanism, worst_case=report.worst_case)
    return report


@dataclass
class PropertyResult:
    name: str
    passed: bool = True
    instances: int = 0
    worst: Optional[dict] = None

    def fail(self, **worst) -> None:
        if self.passed:
            self.worst = worst
        self.passed = False


@dataclass
class PropertySuiteReport:
    suite: str
    results: List[PropertyResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(result.passed for result in self.results)

    def to_dict(self) -> dict:
        return {
            "suite": self.suite,
            "passed": self.passed,
            "results": [
                {
                    "name": r.name,
                    "passed": r.passed,
                    "instances": r.instances,
                    "worst": r.worst,
                }
                for r in self.results
            ],
        }


def _close(a: float, b: float, eps: float) -> bool:
    return abs(a - b) <= eps + clarke_settings.RELATIVE_TOLERANCE * max(1.0, abs(a), abs(b))


def _all_close(a, b, eps: float) -> bool:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return a.shape == b.shape and all(_close(x, y, eps) for x, y in zip(a.ravel(), b.ravel()))


def _vcg_payments(rng, count, eps) -> PropertyResult:
    result = PropertyResult("vcg-payments")
    for _ in range(count):
        n, m = int(rng.integers(1, 4)), int(rng.integers(1, 3))
        values = vcg.PrivateValues.random(rng, n, m)
        report = vcg.vcg_payment_properties(values.truthful_bids(), m=m, rng=rng, trials=3, eps=eps)
        result.instances += 1
        if not report.passed:
            result.fail(failures=report.failures, bids=[b.to_items() for b in values.values])
    return result


def _unit_demand_reduction(rng, count, eps) -> PropertyResult:
    result = PropertyResult("unit-demand-reduction")
    for _ in range(count):
        m = int(rng.integers(1, 5))
        n = int(rng.integers(m, 5))
        model, signals = random_model(rng, n, m, nonnegative=True)
        result.instances += 1
        if not unit_demand_reduction_check(model, signals, eps=eps):
            result.fail(model=model.to_dict(), signals=signals.to_list())
    return result


def _payment_table_independence(rng, count, eps) -> PropertyResult:
    result = PropertyResult("payment-table-independence")
    for _ in range(count):
        model, signals = random_model(rng, 3, 3)
        result.instances += 1
        for buyer in range(3):
            if not signal_auctions.auction1_payment_bid_independence(
                model, signals, buyer, rng=rng, trials=3, eps=eps
            ):
                result.fail(model=model.to_dict(), signals=signals.to_list(), buyer=buyer)
    return result


def _winner_utility_identity(rng, count, eps) -> PropertyResult:
    """Truthful utility is ``k_i (W(sigma*) - W(sigma_i)) + v_{i,sigma_i(i)}``."""
    result = PropertyResult("auction1-utility-identity")
    for _ in range(count):
        model, signals = random_model(rng, 3, 3)
        outcome = signal_auctions.run_auction1(model, signals, TieRule(), eps=eps)
        table = signal_auctions.payment_table(model, signals)
        values = valuation_matrix(model, signals)
        totals = {sigma: sum(values[i, g] for i, g in enumerate(sigma)) for sigma in table.sigmas}
        selected = tuple(outcome.diagnostics["selected_sigma"])
        result.instances += 1
        for i in range(3):
            best = table.sigmas[int(np.argmax(table.row(i)))]
            expected = model.payment_ratio(i) * (totals[selected] - totals[best]) + values[i, best[i]]
            if not _close(outcome.utilities[i], expected, eps):
                result.fail(model=model.to_dict(), signals=signals.to_list(), buyer=i)
    return result


def _threshold_payment_independence(rng, count, eps) -> PropertyResult:
    result = PropertyResult("threshold-payment-independence")
    for _ in range(count):
        model, signals = random_model(rng, 3, 2)
        result.instances += 1
        for buyer in range(3):
            if not signal_auctions.threshold_payment_independence(
                model, signals, buyer, rng=rng, trials=3, eps=eps
            ):
                result.fail(model=model.to_dict(), signals=signals.to_list(), buyer=buyer)
    return result


def _residual_allocation(rng, count, eps) -> PropertyResult:
    result = PropertyResult("residual-allocation")
    for _ in range(count):
        model, signals = random_model(rng, 3, 2)
        result.instances += 1
        for buyer in range(3):
            base = best_injective_assignment(
                AssignmentProblem(valuation_matrix(model, signals)), TieRule(), exclude=[buyer], eps=eps
            )
            for offset in rng.uniform(-5.0, 5.0, size=(5, 2)):
                shifted = signals.with_row(buyer, signals.s[buyer] + offset)
                other = best_injective_assignment(
                    AssignmentProblem(valuation_matrix(model, shifted)),
                    TieRule(),
                    exclude=[buyer],
                    eps=eps,
                )
                if [a.assigned for a in other.optima] != [a.assigned for a in base.optima]:
                    result.fail(model=model.to_dict(), signals=signals.to_list(), buyer=buyer)
    return result


def _truthful_bid_identity(rng, count, eps) -> PropertyResult:
    result = PropertyResult("truthful-bid-identity")
    for _ in range(count):
        n = int(rng.integers(2, 6))
        model, signals = random_model(rng, n, 1)
        buyer = int(rng.integers(n))
        s = signals.s[buyer, 0]
        function = bidfn_auctions.truthful_bid_coefficients(model, buyer, 0, s)
        scaled = bidfn_auctions.truthful_bid_coefficients(model, buyer, 0, s, pivoting="scaled")
        result.instances += 1
        if not _all_close(function.coefficients, scaled.coefficients, eps):
            result.fail(model=model.to_dict(), buyer=buyer, reason="pivoting strategies disagree")
        for profile in rng.uniform(-5.0, 5.0, size=(20, n)):
            profile[buyer] = s
            values = valuation_matrix(model, SignalProfile(profile[:, None]))[:, 0]
            if not _close(function.evaluate(values), values[buyer], eps):
                result.fail(model=model.to_dict(), buyer=buyer, profile=profile.tolist())
    return result


def _positive_coefficients(rng, count, eps) -> PropertyResult:
    result = PropertyResult("positive-coefficients")
    for _ in range(count):
        c = rng.uniform(*clarke_settings.SWEEP_C_RANGE, size=int(rng.integers(1, 7)))
        x = bidfn_auctions.unit_response_coefficients(c)
        result.instances += 1
        scaled = (c - 1.0) * x
        if np.any(x <= 0) or not _all_close(scaled, np.full(len(c), scaled[0]), eps):
            result.fail(c=c.tolist(), x=x.tolist())
    return result


def _fixed_point(rng, count, eps) -> PropertyResult:
    result = PropertyResult("fixed-point")
    for _ in range(count):
        n = int(rng.integers(2, 6))
        m = int(rng.integers(1, n + 1))
        model, signals = random_model(rng, n, m)
        bids = bidfn_auctions.truthful_bids(model, signals)
        report = bidfn_auctions.validate_consistency(bids, eps=eps)
        result.instances += 1
        if not report.valid:
            result.fail(model=model.to_dict(), reason="truthful bids rejected")
            continue
        for good in range(m):
            point = bidfn_auctions.solve_fixed_point(bids.x[good], good, eps=eps)
            off = bids.x[good].sum(axis=1) - np.diag(bids.x[good])
            truth = valuation_matrix(model, signals)[:, good]
            if np.any(report.c_prime - off <= 0) or not _all_close(point.v, truth, eps):
                result.fail(model=model.to_dict(), signals=signals.to_list(), good=good)
    return result


def _reduction(name, bid_runner, signal_runner, n, m):
    def check(rng, count, eps) -> PropertyResult:
        result = PropertyResult(name)
        for _ in range(count):
            model, signals = random_model(rng, n, m)
            truth = signal_runner(model, signals, TieRule(), eps=eps)
            mirror = bid_runner(bidfn_auctions.truthful_bids(model, signals), TieRule(), eps=eps)
            result.instances += 1
            if truth.allocation != mirror.allocation or not _all_close(
                truth.payments, mirror.payments, eps
            ):
                result.fail(
                    model=model.to_dict(),
                    signals=signals.to_list(),
                    expected=truth.payments.tolist(),
                    got=mirror.payments.tolist(),
                )
        return result

    return check


def _two_buyer(rng, count, eps) -> PropertyResult:
    """Two-buyer cases: Auction 3 against Auction 1 and Auction 4 against the single-good fixed point."""
    result = PropertyResult("two-buyer")
    for _ in range(count):
        model, signals = random_model(rng, 2, 2)
        truth = signal_auctions.run_auction1(model, signals, TieRule(), eps=eps)
        mirror = bidfn_auctions.run_auction3(bidfn_auctions.truthful_bids(model, signals), TieRule(), eps=eps)
        single, single_signals = random_model(rng, 2, 1)
        bids = bidfn_auctions.truthful_bids(single, single_signals)
        four = bidfn_auctions.run_auction4(bids, TieRule(), eps=eps)
        affine = [bidfn_auctions.AffineBid.from_function(bids.function(0, i)) for i in range(2)]
        dm = bidfn_auctions.run_dm_two_buyer(*affine, tie=TieRule(), eps=eps)
        result.instances += 1
        if truth.allocation != mirror.allocation or not _all_close(truth.payments, mirror.payments, eps):
            result.fail(model=model.to_dict(), signals=signals.to_list(), case="auction3")
        if four.allocation != dm.allocation or not _all_close(four.payments, dm.payments, eps):
            result.fail(model=single.to_dict(), signals=single_signals.to_list(), case="auction4")
    return result


def _consistency_gate(rng, count, eps) -> PropertyResult:
    result = PropertyResult("consistency-gate")
    for _ in range(count):
        model, signals = random_model(rng, 3, 3)
        bids = bidfn_auctions.truthful_bids(model, signals)
        good, buyer, other = int(rng.integers(3)), int(rng.integers(3)), int(rng.integers(2))
        other = [j for j in range(3) if j != buyer][other]
        tampered = bids.with_coefficient(good, buyer, other, bids.x[good, buyer, other] * 1.5)
        shifted = bids.with_free_term(good, buyer, bids.x[good, buyer, buyer] + 1.0)
        result.instances += 1
        if bidfn_auctions.run_auction3(tampered, TieRule(), eps=eps).allocated:
            result.fail(model=model.to_dict(), reason="tampered off-diagonal accepted")
        if not bidfn_auctions.validate_consistency(shifted, eps=eps).valid:
            result.fail(model=model.to_dict(), reason="free-term change rejected")
    return result


#: name -> (check, default instance count)
PROPERTY_SUITES: Dict[str, Tuple[Callable, int]] = {
    "vcg-payments": (_vcg_payments, 200),
    "unit-demand-reduction": (_unit_demand_reduction, 1000),
    "payment-table-independence": (_payment_table_independence, 100),
    "auction1-utility-identity": (_winner_utility_identity, 100),
    "threshold-payment-independence": (_threshold_payment_independence, 100),
    "residual-allocation": (_residual_allocation, 50),
    "truthful-bid-identity": (_truthful_bid_identity, 100),
    "positive-coefficients": (_positive_coefficients, 500),
    "fixed-point": (_fixed_point, 100),
    "reduction-auction3": (
        _reduction(
            "reduction-auction3", bidfn_auctions.run_auction3, signal_auctions.run_auction1, 3, 3
        ),
        100,
    ),
    "reduction-auction4": (
        _reduction(
            "reduction-auction4", bidfn_auctions.run_auction4, signal_auctions.run_auction2, 3, 2
        ),
        100,
    ),
    "two-buyer": (_two_buyer, 100),
    "consistency-gate": (_consistency_gate, 100),
}

#: numbered names accepted in place of the descriptive ones
SUITE_ALIASES: Dict[str, str] = {
    "lemma-2.1": "vcg-payments",
    "lemma-4.3": "unit-demand-reduction",
    "lemma-4.5": "payment-table-independence",
    "lemma-4.8": "threshold-payment-independence",
    "lemma-4.9": "residual-allocation",
    "lemma-5.1": "truthful-bid-identity",
    "lemma-5.2": "positive-coefficients",
    "lemma-5.3": "fixed-point",
}


def run_property_suite(
    suite: str, seed: int = None, count: int = None, eps: float = None
) -> List[PropertySuiteReport]:
    """
    Run one named suite, or every suite for ``"all"``. Names in
    :data:`SUITE_ALIASES` resolve to the suite they stand for.

    :raises KeyError: for an unknown suite name.
    """
    names = sorted(PROPERTY_SUITES) if suite == "all" else [SUITE_ALIASES.get(suite, suite)]
    for name in names:
        if name not in PROPERTY_SUITES:
            raise KeyError(name)
    seed = clarke_settings.SEED if seed is None else seed
    eps = tolerance(eps)
    reports = []
    for name in names:
        check, default_count = PROPERTY_SUITES[name]
        rng = np.random.default_rng(seed)
        result = check(rng, default_count if count is None else count, eps)
        logger.info("property suite %s: %s", name, "pass" if result.passed else "FAIL")
        reports.append(PropertySuiteReport(suite=name, results=[result]))
    return reports
