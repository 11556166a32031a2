import json

import pandas as pd
import pytest
from click.testing import CliRunner

from cli import EXIT_FAIL, EXIT_INPUT, EXIT_PASS, cli, parse_exact, parse_u_grid
from conftest import spec_path


@pytest.fixture()
def runner():
    return CliRunner()


def invoke(runner, tmp_path, *args):
    """執行指令並讀回 --json 報告（stdout 可能混有日誌）"""
    report = tmp_path / "report.json"
    result = runner.invoke(cli, list(args) + ["--json", str(report)])
    data = json.loads(report.read_text(encoding="utf-8")) if report.exists() else None
    return result, data


def test_validate_heisenberg(runner, tmp_path):
    result, report = invoke(runner, tmp_path, "validate", "--spec", spec_path("heisenberg"))
    assert result.exit_code == EXIT_PASS
    assert report["status"] == "pass"
    assert {c["name"] for c in report["checks"]} == {"rank", "bracket_condition"}


def test_validate_broken_fails(runner, tmp_path):
    result, report = invoke(runner, tmp_path, "validate", "--spec", spec_path("broken"))
    assert result.exit_code == EXIT_FAIL
    assert report["status"] == "fail"


def test_input_errors_exit_2(runner, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{oops", encoding="utf-8")
    result = runner.invoke(cli, ["validate", "--spec", str(bad)])
    assert result.exit_code == EXIT_INPUT
    result = runner.invoke(cli, ["validate", "--spec", str(tmp_path / "missing.json")])
    assert result.exit_code == EXIT_INPUT
    result = runner.invoke(cli, ["levi", "--spec", spec_path("heisenberg"), "--point", "9"])
    assert result.exit_code == EXIT_INPUT


def test_levi_tables(runner, tmp_path):
    csv = tmp_path / "levi.csv"
    result, report = invoke(runner, tmp_path, "levi", "--spec", spec_path("heisenberg"), "--csv", str(csv))
    assert result.exit_code == EXIT_PASS
    assert report["algebra"]["constants"] == [{"i": 1, "j": 2, "m": 3, "c": 1}]
    table = pd.read_csv(csv)
    assert table[["i", "j", "m"]].values.tolist() == [[1, 2, 3]]

    _, report = invoke(runner, tmp_path, "levi", "--spec", spec_path("engel"))
    assert len(report["algebra"]["constants"]) == 2
    _, report = invoke(runner, tmp_path, "levi", "--spec", spec_path("involutive"))
    assert report["algebra"]["constants"] == []


def products(report):
    return {(p["left"], p["right"]): p["product"] for p in report["products"]}


def test_bch_table(runner, tmp_path):
    result, report = invoke(runner, tmp_path, "bch-table", "--spec", spec_path("heisenberg"), "--t", "1")
    assert result.exit_code == EXIT_PASS
    assert products(report)[("e1", "e2")] == "1,1,1/2"
    assert report["checks"][0]["name"] == "law_k1_agreement"

    _, report = invoke(runner, tmp_path, "bch-table", "--spec", spec_path("heisenberg"), "--t", "0")
    assert products(report)[("e1", "e2")] == "1,1,0"

    result, report = invoke(runner, tmp_path, "bch-table", "--spec", spec_path("engel"), "--t", "1", "--u", "1")
    assert result.exit_code == EXIT_PASS
    assert products(report)[("e1", "e2")] == "1,1,1/2,1/12"
    assert report["checks"][0]["status"] == "pass"


def test_converge_csv(runner, tmp_path):
    csv = tmp_path / "conv.csv"
    result, report = invoke(runner, tmp_path, "converge", "--spec", spec_path("heisenberg"),
                            "--u-grid", "1/2:1/32:5", "--csv", str(csv))
    assert result.exit_code == EXIT_PASS
    table = pd.read_csv(csv)
    assert list(table.columns) == ["u", "err", "est_order"]
    assert len(table) == 5
    assert report["checks"][0]["verdict"] in ("exact", "pass")


def test_converge_bad_grid(runner):
    result = runner.invoke(cli, ["converge", "--spec", spec_path("heisenberg"), "--u-grid", "1:2"])
    assert result.exit_code == EXIT_INPUT


def test_actions_forms(runner, tmp_path):
    result, report = invoke(runner, tmp_path, "actions", "--spec", spec_path("heisenberg"))
    assert result.exit_code == EXIT_PASS
    by_key = {(f["form"], f["action"], f["s"]): f["ok"] for f in report["forms"]}
    assert by_key[("displayed", "lambda0", 2)] is False
    assert by_key[("corrected", "lambda0", 2)] is True
    assert by_key[("corrected", "lambda1", 2)] is True
    assert all(by_key[(form, action, 1)] for form in ("displayed", "corrected") for action in ("lambda0", "lambda1"))


def test_actions_rejects_step_three(runner):
    result = runner.invoke(cli, ["actions", "--spec", spec_path("engel")])
    assert result.exit_code == EXIT_INPUT
    assert "step" in result.output


def test_actions_abelian_spec(runner, tmp_path):
    result, report = invoke(runner, tmp_path, "actions", "--spec", spec_path("abelian"))
    assert result.exit_code == EXIT_PASS
    assert all(f["ok"] for f in report["forms"])


def test_transition(runner, tmp_path):
    result, report = invoke(runner, tmp_path, "transition", "--tubular", spec_path("tubular_quadratic"))
    assert result.exit_code == EXIT_PASS
    names = [c["name"] for c in report["checks"]]
    assert names == ["chart_transition", "limit:n", "limit:n^2", "limit:x*n"]


def test_report_is_deterministic(runner, tmp_path):
    first = runner.invoke(cli, ["levi", "--spec", spec_path("engel")])
    second = runner.invoke(cli, ["levi", "--spec", spec_path("engel")])
    assert first.exit_code == second.exit_code == EXIT_PASS
    assert first.output == second.output


def test_parse_helpers():
    grid = parse_u_grid("1/2:1/8:3")
    assert grid == pytest.approx((0.5, 0.25, 0.125))
    assert str(parse_exact("0.25", None)) == "1/4"
