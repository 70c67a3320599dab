import json
import logging

from django.core.exceptions import ValidationError
from django.core.management.base import BaseCommand, CommandError
from humanize import intcomma
from rest_framework import serializers

from clarke.exceptions import ClarkeError, ProblemTooLarge, ShapeError
from clarke.scenarios import Scenario
from clarke.serializers import render_json
from clarke.settings import clarke_settings

logger = logging.getLogger(__name__)


class Command(BaseCommand):
    help = "Run the mechanism of a scenario file and print the outcome report."

    def add_arguments(self, parser):
        parser.add_argument("scenario", help="Path of the scenario JSON file.")
        parser.add_argument("--format", choices=("json", "text"), default="json")
        parser.add_argument("--output", help="Write the report here instead of stdout.")

    def get_report_serializer_class(self):
        """
        To change the class used for rendering the outcome.
        """
        return clarke_settings.REPORT_SERIALIZER

    def load_scenario(self, path) -> Scenario:
        try:
            return Scenario.load(path)
        except ShapeError as exc:
            raise CommandError(str(exc), returncode=3)
        except (OSError, ValueError) as exc:
            raise CommandError("Cannot read {0}: {1}".format(path, exc), returncode=2)
        except serializers.ValidationError as exc:
            raise CommandError(json.dumps(exc.detail, sort_keys=True), returncode=2)
        except ValidationError as exc:
            raise CommandError("; ".join(exc.messages), returncode=4)

    def handle(self, *args, **options):
        scenario = self.load_scenario(options["scenario"])
        try:
            outcome = scenario.run()
        except (ShapeError, ProblemTooLarge) as exc:
            raise CommandError(str(exc), returncode=3)
        except ValidationError as exc:
            raise CommandError("; ".join(exc.messages), returncode=4)
        except ClarkeError as exc:
            raise CommandError(str(exc), returncode=4)
        for warning in outcome.warnings:
            logger.warning(warning)

        data = self.get_report_serializer_class()(outcome).data
        if options["format"] == "json":
            text = render_json(data)
        else:
            text = render_text(data)
        if options["output"]:
            with open(options["output"], "w") as fh:
                fh.write(text + "\n")
        else:
            self.stdout.write(text)


def render_text(data: dict) -> str:
    lines = ["{0}: welfare {1}".format(data["mechanism"], data["welfare"])]
    if not data["allocated"]:
        lines.append("bids rejected, nothing allocated")
    for good, buyer in enumerate(data["allocation"]):
        owner = "unassigned" if buyer is None else "buyer {0}".format(buyer)
        lines.append("good {0}: {1}".format(good, owner))
    for buyer, (payment, utility) in enumerate(zip(data["payments"], data["utilities"])):
        lines.append(
            "buyer {0}: pays {1}, utility {2}".format(buyer, intcomma(payment), intcomma(utility))
        )
    for warning in data["warnings"]:
        lines.append("warning: {0}".format(warning))
    return "\n".join(lines)
