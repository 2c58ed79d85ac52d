import json

import pytest
from click.testing import CliRunner

from taskscope.cli import main
from taskscope.environment.suites import packaged_suite_path


@pytest.fixture()
def runner():
    return CliRunner()


def golden(name: str) -> str:
    return str(packaged_suite_path("golden") / f"{name}.json")


class TestCommands:
    def test_parse_prints_canonical_form(self, runner, tmp_path):
        src = tmp_path / "prog.py"
        src.write_text("def run():\n    bal = Citi.getBalance('Me@Citi')\n")
        result = runner.invoke(main, ["parse", str(src)])
        assert result.exit_code == 0
        assert 'Citi.getBalance("Me@Citi")' in result.output

    def test_parse_reports_violations_and_fails(self, runner, tmp_path):
        src = tmp_path / "prog.py"
        src.write_text("def run():\n    for m in msgs:\n        pass\n")
        result = runner.invoke(main, ["parse", str(src)])
        assert result.exit_code != 0
        assert "error: invalid-program" in result.output
        assert "loop-found" in result.output

    def test_slice_prints_three_published_slices(self, runner):
        result = runner.invoke(main, ["slice", golden("aurora")])
        assert result.exit_code == 0
        assert result.output.count("# slice for") == 4
        assert 'assert details.price < 150.0' in result.output

    def test_rules_prints_totals(self, runner):
        result = runner.invoke(main, ["rules", golden("aurora")])
        assert result.exit_code == 0
        assert "shop.add_to_cart#1: 3 rule(s)" in result.output
        assert "bank.send_money#1: 5 rule(s)" in result.output
        assert "total: 10" in result.output

    def test_run_single_case(self, runner):
        result = runner.invoke(main, ["run", golden("citi_chase")])
        assert result.exit_code == 0, result.output
        assert "fp=0 fn=0" in result.output

    def test_gen_fixture_mode(self, runner):
        result = runner.invoke(main, ["gen", golden("fgh_chain")])
        assert result.exit_code == 0, result.output
        assert "def run():" in result.output
        assert "F.f(1)" in result.output

    def test_bench_writes_report(self, runner, tmp_path):
        result = runner.invoke(main, [
            "bench", str(packaged_suite_path("golden")), "--report-dir", str(tmp_path)])
        assert result.exit_code == 0, result.output
        assert "Overall" in result.output
        runs = list(tmp_path.iterdir())
        assert runs and (runs[0] / "report.txt").exists()
        assert (runs[0] / "rule_counts.csv").exists()
        assert (runs[0] / "audit.json").exists()

    def test_keys_init(self, runner, tmp_path):
        cfg = tmp_path / "taskscope.json"
        result = runner.invoke(main, ["keys", "init", "--config", str(cfg),
                                      "--services", "Citi,Chase", "--seed", "t"])
        assert result.exit_code == 0, result.output
        doc = json.loads(cfg.read_text())
        assert set(doc["trust"]["services"]) == {"Citi", "Chase"}
        assert (tmp_path / "keys" / "user.key").exists()

    def test_unknown_file_error_line(self, runner):
        result = runner.invoke(main, ["slice", "no-such-file.json"])
        assert result.exit_code != 0
        assert result.output.startswith("error: not-found:")
