from django.conf import settings
from django.test.signals import setting_changed
from rest_framework.settings import APISettings

DEFAULTS = {
    "EPSILON": 1e-9,
    "RELATIVE_TOLERANCE": 1e-9,
    "PIVOT_TOLERANCE": 1e-12,
    "TIE_RULE": "lex",
    "SEED": 0,
    "MAX_INJECTIVE_BUYERS": 8,
    "MAX_PARTITION_GOODS": 10,
    "DEVIATION_OFFSETS": (-2.0, -1.0, -0.5, -0.1, 0.1, 0.5, 1.0, 2.0),
    "DEVIATION_MODE": "per-coordinate",
    "INCLUDE_EXIT": True,
    "EXIT_SIGNAL": 1000.0,
    "SWEEP_C_RANGE": (1.1, 5.0),
    "SWEEP_SLOPE_RANGE": (0.1, 3.0),
    "SWEEP_SIGNAL_RANGE": (-5.0, 5.0),
    "SWEEP_CONSTANT_RANGE": (-2.0, 2.0),
    "CHECK_INVARIANTS": False,
    "FLOAT_DIGITS": 12,
    "REPORT_SERIALIZER": "clarke.serializers.OutcomeReportSerializer",
}

IMPORT_STRINGS = {
    "REPORT_SERIALIZER",
}


class ClarkeSettings(APISettings):
    """
    Same lookup rules as DRF's ``api_settings`` but namespaced
    under the ``CLARKE`` Django setting.
    """

    @property
    def user_settings(self):
        if not hasattr(self, "_user_settings"):
            self._user_settings = getattr(settings, "CLARKE", {})
        return self._user_settings


clarke_settings = ClarkeSettings(None, DEFAULTS, IMPORT_STRINGS)


def reload_clarke_settings(*args, **kwargs):
    if kwargs["setting"] == "CLARKE":
        clarke_settings.reload()


setting_changed.connect(reload_clarke_settings)


def tolerance(eps: float = None) -> float:
    """``eps`` if given, else the configured ``EPSILON``."""
    return clarke_settings.EPSILON if eps is None else float(eps)
