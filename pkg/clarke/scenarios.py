"""
Scenario documents: one mechanism, its inputs and run options.

A scenario is validated by :class:`clarke.serializers.ScenarioSerializer`
and turned into domain objects here. When no bids are given, truthful bids
are synthesized from the model and signals.
"""
import json
import logging
from dataclasses import dataclass
from typing import Any, Optional

import numpy as np

from clarke import bidfn_auctions, signal_auctions, vcg
from clarke.assign import TieRule
from clarke.exceptions import ShapeError
from clarke.models import AuctionOutcome, LinearValuationModel, SignalBid, SignalProfile
from clarke.serializers import ScenarioSerializer, round_floats
from clarke.settings import clarke_settings

logger = logging.getLogger(__name__)


@dataclass
class Scenario:
    mechanism: str
    model: Optional[LinearValuationModel] = None
    signals: Optional[SignalProfile] = None
    #: mechanism-specific bid objects, ``None`` for truthful bidding
    bids: Any = None
    #: true private bundle values (VCG only), the truth utilities are measured against
    values: Optional[vcg.PrivateValues] = None
    tie: TieRule = None
    epsilon: Optional[float] = None

    @classmethod
    def from_validated_data(cls, data: dict) -> "Scenario":
        """
        :raises clarke.exceptions.ShapeError: dimensions that do not fit together.
        :raises django.core.exceptions.ValidationError: affine bids that are too steep.
        """
        mechanism = data["mechanism"]
        model = signals = None
        if "signals" in data:
            signals = SignalProfile(data["signals"])
        if "model" in data:
            model = _build_model(data["model"], signals, data.get("bids"), mechanism)
            if signals is not None and signals.s.shape != (model.n, model.m):
                raise ShapeError(
                    "Signals are {0}x{1} but the model has {2} buyers.".format(
                        signals.n, signals.m, model.n
                    )
                )
            if mechanism == "dm2" and (model.n, model.m) != (2, 1):
                raise ShapeError("dm2 needs exactly two buyers and one good.")
        bids = None
        if "bids" in data:
            bids = _build_bids(mechanism, data["bids"], model)
        values = None
        if "values" in data:
            values = _build_values(data["values"], bids)
        tie = TieRule(
            kind=data.get("tie", clarke_settings.TIE_RULE),
            seed=data.get("seed", clarke_settings.SEED),
        )
        return cls(
            mechanism=mechanism,
            model=model,
            signals=signals,
            bids=bids,
            values=values,
            tie=tie,
            epsilon=data.get("epsilon"),
        )

    @classmethod
    def load(cls, path) -> "Scenario":
        """
        Parse and build a scenario file.

        :raises ValueError: unreadable JSON.
        :raises rest_framework.exceptions.ValidationError: invalid layout.
        """
        with open(path) as fh:
            data = json.load(fh)
        serializer = ScenarioSerializer(data=data)
        serializer.is_valid(raise_exception=True)
        return cls.from_validated_data(serializer.validated_data)

    def run(self) -> AuctionOutcome:
        runner = getattr(self, "_run_{0}".format(self.mechanism))
        return runner()

    def _run_vcg(self):
        values = self.values
        if self.model is not None and self.signals is not None:
            values = vcg.PrivateValues(vcg.truthful_subset_bids(self.model, self.signals), self.model.m)
        bids = self.bids if self.bids is not None else values.truthful_bids()
        m = values.m if values is not None else None
        return vcg.run_vcg(bids, m=m, tie=self.tie, values=values, eps=self.epsilon)

    def _reports(self) -> SignalBid:
        if self.bids is not None:
            return self.bids
        return SignalBid(self.signals.s)

    def _run_auction1(self):
        return signal_auctions.run_auction1(
            self.model, self._reports(), self.tie, signals=self.signals, eps=self.epsilon
        )

    def _run_auction2(self):
        return signal_auctions.run_auction2(
            self.model, self._reports(), self.tie, signals=self.signals, eps=self.epsilon
        )

    def _bid_profile(self) -> bidfn_auctions.BidProfile:
        if self.bids is not None:
            return self.bids
        return bidfn_auctions.truthful_bids(self.model, self.signals)

    def _run_auction3(self):
        return bidfn_auctions.run_auction3(
            self._bid_profile(), self.tie, model=self.model, signals=self.signals, eps=self.epsilon
        )

    def _run_auction4(self):
        return bidfn_auctions.run_auction4(
            self._bid_profile(), self.tie, model=self.model, signals=self.signals, eps=self.epsilon
        )

    def _run_dm2(self):
        if self.bids is not None:
            first, second = self.bids
        else:
            profile = bidfn_auctions.truthful_bids(self.model, self.signals)
            first, second = (
                bidfn_auctions.AffineBid.from_function(profile.function(0, i)) for i in range(2)
            )
        return bidfn_auctions.run_dm_two_buyer(
            first, second, self.tie, model=self.model, signals=self.signals, eps=self.epsilon
        )

    def to_dict(self) -> dict:
        data = {"mechanism": self.mechanism, "tie": self.tie.kind, "seed": self.tie.seed}
        if self.model is not None:
            data["model"] = self.model.to_dict()
        if self.signals is not None:
            data["signals"] = self.signals.to_list()
        if self.values is not None:
            data["values"] = [bid.to_items() for bid in self.values.values]
        if self.epsilon is not None:
            data["epsilon"] = self.epsilon
        return data


def write_scenario(data: dict, path) -> None:
    """Write a scenario document in the layout :meth:`Scenario.load` reads."""
    with open(path, "w") as fh:
        json.dump(round_floats(data, digits=17), fh, sort_keys=True, indent=2)


def _build_model(data: dict, signals, bids, mechanism) -> LinearValuationModel:
    n = len(data["f_slope"])
    if signals is not None:
        m = signals.m
    elif mechanism in ("auction1", "auction2") and bids:
        m = len(bids[0])
    elif mechanism in ("auction3", "auction4") and bids:
        m = len(bids)
    elif mechanism == "vcg" and bids:
        m = 1 + max((max(item["goods"], default=-1) for row in bids for item in row), default=0)
    else:
        m = 1
    return LinearValuationModel(
        f_slope=data["f_slope"],
        f_intercept=data.get("f_intercept", np.zeros(n)),
        c=data["c"],
        d=data.get("d", np.zeros(n)),
        m=m,
    )


def _build_values(items, bids) -> vcg.PrivateValues:
    values = [vcg.SubsetBid.from_items(row) for row in items]
    if bids is not None and len(bids) != len(values):
        raise ShapeError(
            "{0} buyers bid but {1} have bundle values.".format(len(bids), len(values))
        )
    m = 1 + max(bid.max_good for bid in values + list(bids or []))
    return vcg.PrivateValues(values, max(m, 1))


def _build_bids(mechanism: str, bids, model: Optional[LinearValuationModel]):
    if mechanism == "vcg":
        return [vcg.SubsetBid.from_items(items) for items in bids]
    if mechanism in ("auction1", "auction2"):
        try:
            reports = np.array(bids, dtype=float)
        except ValueError:
            raise ShapeError("Reported signals must form a rectangular matrix.")
        return SignalBid(reports)
    if mechanism in ("auction3", "auction4"):
        try:
            coefficients = np.array(bids, dtype=float)
        except ValueError:
            raise ShapeError("Bid coefficients must form an m x n x n array.")
        profile = bidfn_auctions.BidProfile(coefficients)
        if model is not None and (profile.n, profile.m) != (model.n, model.m):
            raise ShapeError("Bid coefficients do not match the model's dimensions.")
        return profile
    if len(bids) != 2:
        raise ShapeError("dm2 takes exactly two affine bids.")
    return [bidfn_auctions.AffineBid(bid["intercept"], bid["slope"]) for bid in bids]
