import json
import os
import tempfile
from io import StringIO
from unittest import mock

from django.core.management import CommandError, call_command
from django.test import override_settings

from clarke import signal_auctions
from clarke.scenarios import Scenario
from clarke.serializers import OutcomeReportSerializer
from tests import CustomTestCase
from tests.test_verify import rewards_high_reports


class WelfareOnlySerializer(OutcomeReportSerializer):
    def to_representation(self, instance):
        return {"welfare": super().to_representation(instance)["welfare"]}


class RunCommandTestCase(CustomTestCase):
    def setUp(self):
        super().setUp()
        self.tmp = tempfile.TemporaryDirectory()

    def tearDown(self):
        self.tmp.cleanup()
        super().tearDown()

    def write(self, name, content):
        path = os.path.join(self.tmp.name, name)
        with open(path, "w") as fh:
            fh.write(content if isinstance(content, str) else json.dumps(content))
        return path

    def run_command(self, *args, **kwargs):
        out = StringIO()
        call_command("run", *args, stdout=out, **kwargs)
        return out.getvalue()

    def test_payment_table_report(self):
        report = json.loads(self.run_command(self.scenario_path("collectors_auction1.json")))
        table = {tuple(row["sigma"]): row["P"][0] for row in report["diagnostics"]["payment_table"]}
        self.assertEqual(table[(0, 1)], 6.5)
        self.assertEqual(table[(1, 0)], 4.0)
        self.assertEqual(report["allocation"], [0, 1])

    def test_threshold_report(self):
        report = json.loads(self.run_command(self.scenario_path("three_buyers_auction2.json")))
        self.assertEqual(report["payments"][0], 4.0)

    def test_text_format(self):
        text = self.run_command(self.scenario_path("three_buyers_auction2.json"), format="text")
        self.assertIn("buyer 0: pays 4.0, utility 1.0", text)
        self.assertIn("good 1: buyer 2", text)

    def test_output_file(self):
        target = os.path.join(self.tmp.name, "report.json")
        self.assertEqual(self.run_command(self.scenario_path("collectors_dm2.json"), output=target), "")
        with open(target) as fh:
            self.assertEqual(json.load(fh)["payments"], [2.5, 0.0])

    @override_settings(CLARKE={"REPORT_SERIALIZER": "tests.test_commands.WelfareOnlySerializer"})
    def test_report_serializer_setting(self):
        report = json.loads(self.run_command(self.scenario_path("three_buyers_auction2.json")))
        self.assertEqual(report, {"welfare": 12.5})

    def test_validation_warnings_are_logged(self):
        path = self.write(
            "negative.json",
            {"mechanism": "auction2", "model": {"f_slope": [1, 1, 1], "c": [2, 2, 2]}, "signals": [[-5], [0], [1]]},
        )
        with self.assertLogs("clarke", level="WARNING") as logs:
            report = json.loads(self.run_command(path))
        self.assertTrue(report["warnings"])
        self.assertIn("negative", logs.output[0])

    def assertExitCode(self, code, *args):
        with self.assertRaises(CommandError) as ctx:
            self.run_command(*args)
        self.assertEqual(ctx.exception.returncode, code)

    def test_parse_errors(self):
        self.assertExitCode(2, self.write("broken.json", "{not json"))
        self.assertExitCode(2, self.write("typo.json", {"mechanism": "vcg", "bid": []}))
        self.assertExitCode(2, os.path.join(self.tmp.name, "missing.json"))

    def test_shape_error(self):
        path = self.write(
            "shape.json",
            {"mechanism": "auction1", "model": {"f_slope": [1, 1, 1], "c": [2, 2, 2]}, "signals": [[1, 2]] * 3},
        )
        self.assertExitCode(3, path)

    @override_settings(CLARKE={"MAX_INJECTIVE_BUYERS": 2})
    def test_size_guard(self):
        self.assertExitCode(3, self.scenario_path("three_buyers_auction2.json"))

    def test_validation_error(self):
        path = self.write(
            "crossing.json",
            {"mechanism": "auction2", "model": {"f_slope": [1, 1], "c": [1, 2]}, "signals": [[1], [2]]},
        )
        self.assertExitCode(4, path)
        steep = self.write("steep.json", {"mechanism": "dm2", "bids": [{"intercept": 1, "slope": 2}] * 2})
        self.assertExitCode(4, steep)


class VerifyCommandTestCase(CustomTestCase):
    def test_passing_sweep(self):
        out = StringIO()
        call_command("verify", "dm2", count=5, seed=7, stdout=out)
        report = json.loads(out.getvalue())
        self.assertTrue(report["passed"])
        self.assertEqual(report["instances_checked"], 5)

    def test_text_format(self):
        out = StringIO()
        call_command("verify", "auction2", count=2, seed=7, format="text", stdout=out)
        self.assertIn("auction2: 2 instances checked", out.getvalue())
        self.assertIn("pass", out.getvalue())

    def test_violation_writes_reproducer(self):
        with tempfile.TemporaryDirectory() as tmp:
            reproducer = os.path.join(tmp, "worst.json")
            with mock.patch.object(signal_auctions, "run_auction1", rewards_high_reports):
                with self.assertRaises(CommandError) as ctx:
                    call_command("verify", "auction1", count=2, seed=7, reproducer=reproducer, stdout=StringIO())
            self.assertEqual(ctx.exception.returncode, 1)
            scenario = Scenario.load(reproducer)
        self.assertEqual(scenario.mechanism, "auction1")
        self.assertIsNotNone(scenario.bids)

    def test_shape_guard(self):
        with self.assertRaises(CommandError) as ctx:
            call_command("verify", "auction1", n=3, m=2, count=1, stdout=StringIO())
        self.assertEqual(ctx.exception.returncode, 3)


class PropertiesCommandTestCase(CustomTestCase):
    def test_single_suite(self):
        out = StringIO()
        call_command("properties", "positive-coefficients", count=20, stdout=out)
        (report,) = json.loads(out.getvalue())
        self.assertTrue(report["passed"])
        self.assertEqual(report["results"][0]["instances"], 20)

    def test_text_format(self):
        out = StringIO()
        call_command("properties", "fixed-point", count=5, seed=1, format="text", stdout=out)
        self.assertIn("fixed-point: pass (5 instances)", out.getvalue())

    def test_numbered_suite_name(self):
        out = StringIO()
        call_command("properties", "lemma-2.1", count=10, seed=1, stdout=out)
        (report,) = json.loads(out.getvalue())
        self.assertEqual(report["suite"], "vcg-payments")
        self.assertTrue(report["passed"])

    def test_unknown_suite(self):
        with self.assertRaises(CommandError) as ctx:
            call_command("properties", "nosuch", stdout=StringIO())
        self.assertEqual(ctx.exception.returncode, 3)


class ConsoleScriptTestCase(CustomTestCase):
    def test_dispatches_to_commands(self):
        from clarke.__main__ import main

        with mock.patch("sys.stdout", new_callable=StringIO) as out:
            main(["clarke", "properties", "positive-coefficients", "--count", "3", "--format", "text"])
        self.assertIn("positive-coefficients: pass (3 instances)", out.getvalue())

    def test_failure_exit_code(self):
        from clarke.__main__ import main

        with mock.patch("sys.stderr", new_callable=StringIO):
            with self.assertRaises(SystemExit) as ctx:
                main(["clarke", "properties", "nosuch"])
        self.assertEqual(ctx.exception.code, 3)
