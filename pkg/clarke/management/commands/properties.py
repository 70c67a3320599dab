from django.core.management.base import BaseCommand, CommandError

from clarke.serializers import render_json
from clarke.verify import PROPERTY_SUITES, SUITE_ALIASES, run_property_suite


class Command(BaseCommand):
    help = "Run a named property suite (or all of them) on seeded random instances."

    def add_arguments(self, parser):
        parser.add_argument(
            "suite",
            help="One of {0} (or {1}), or 'all'.".format(
                ", ".join(sorted(PROPERTY_SUITES)), ", ".join(sorted(SUITE_ALIASES))
            ),
        )
        parser.add_argument("--seed", type=int, default=None)
        parser.add_argument("--count", type=int, default=None, help="Instances per suite.")
        parser.add_argument("--format", choices=("json", "text"), default="json")

    def handle(self, *args, **options):
        try:
            reports = run_property_suite(options["suite"], seed=options["seed"], count=options["count"])
        except KeyError:
            raise CommandError("Unknown suite '{0}'.".format(options["suite"]), returncode=3)

        if options["format"] == "json":
            self.stdout.write(render_json([report.to_dict() for report in reports]))
        else:
            for report in reports:
                for result in report.results:
                    self.stdout.write(
                        "{0}: {1} ({2} instances)".format(
                            result.name, "pass" if result.passed else "FAIL", result.instances
                        )
                    )
        failed = [report.suite for report in reports if not report.passed]
        if failed:
            raise CommandError("Failed suites: {0}".format(", ".join(failed)), returncode=1)
