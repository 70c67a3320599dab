import time

from django.core.management.base import BaseCommand, CommandError
from humanize import intcomma, naturaldelta

from clarke.assign import TieRule
from clarke.exceptions import ShapeError
from clarke.scenarios import write_scenario
from clarke.serializers import render_json
from clarke.settings import clarke_settings
from clarke.verify import DEVIATION_MODES, MECHANISMS, DeviationGrid, sweep_random_instances

DEFAULT_REPRODUCER = "clarke-worst-case.json"


class Command(BaseCommand):
    help = (
        "Check on random instances that no deviation from truthful bidding "
        "beats it under the given mechanism."
    )

    def add_arguments(self, parser):
        parser.add_argument("mechanism", choices=sorted(MECHANISMS))
        parser.add_argument("--count", type=int, default=200)
        parser.add_argument("--seed", type=int, default=None)
        parser.add_argument("--n", type=int, default=None, help="Number of buyers.")
        parser.add_argument("--m", type=int, default=None, help="Number of goods.")
        parser.add_argument("--tie", choices=("lex", "random"), default=None)
        parser.add_argument("--mode", choices=DEVIATION_MODES, default=None)
        parser.add_argument("--format", choices=("json", "text"), default="json")
        parser.add_argument("--output", help="Write the report here instead of stdout.")
        parser.add_argument(
            "--reproducer",
            default=DEFAULT_REPRODUCER,
            help="Where to dump the worst deviation as a scenario file.",
        )

    def handle(self, *args, **options):
        seed = clarke_settings.SEED if options["seed"] is None else options["seed"]
        tie = TieRule(kind=options["tie"] or clarke_settings.TIE_RULE, seed=seed)
        grid = DeviationGrid(
            offsets=tuple(clarke_settings.DEVIATION_OFFSETS),
            mode=options["mode"] or clarke_settings.DEVIATION_MODE,
            include_exit=clarke_settings.INCLUDE_EXIT,
        )
        started = time.monotonic()
        try:
            report = sweep_random_instances(
                options["mechanism"],
                n=options["n"],
                m=options["m"],
                count=options["count"],
                seed=seed,
                grid=grid,
                tie=tie,
            )
        except ShapeError as exc:
            raise CommandError(str(exc), returncode=3)
        elapsed = time.monotonic() - started

        if options["format"] == "json":
            text = render_json(report.to_dict())
        else:
            text = "{0}: {1} instances checked in {2}, max violation {3:.3g} ({4})".format(
                report.mechanism,
                intcomma(report.instances_checked),
                naturaldelta(elapsed),
                report.max_violation,
                "pass" if report.passed else "FAIL",
            )
        if options["output"]:
            with open(options["output"], "w") as fh:
                fh.write(text + "\n")
        else:
            self.stdout.write(text)

        if not report.passed:
            write_scenario(report.worst_case["scenario"], options["reproducer"])
            raise CommandError(
                "Truthful bidding was beaten by {0:.3g}; worst case written to {1}.".format(
                    report.max_violation, options["reproducer"]
                ),
                returncode=1,
            )
