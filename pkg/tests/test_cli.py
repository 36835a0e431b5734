import csv
import io
import json
import math
import subprocess
import sys

import pytest

from cvthermo import cli, thermo
from cvthermo.cli import CSV_COLUMNS, SweepConfig, fmt, main
from cvthermo.errors import ConfigError, ConvergenceError


def run(argv, capsys):
    code = main(argv)
    return code, capsys.readouterr().out


def parse_csv(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_fmt_twelve_significant_digits():
    assert fmt(1 / 3) == "0.333333333333"
    assert fmt(3.720075976020836e-44) == "3.72007597602e-44"
    assert fmt(-0.0) == "0"
    assert fmt(math.nan) == "nan"


def test_sweep_header_and_rows(capsys):
    code, out = run(["sweep", "--beta", "50", "--r", "1", "--methods", "exact,closed_form"], capsys)
    assert code == 0
    assert out.splitlines()[0] == "beta,n_bar,r,lambda,xi,s_ther,s_meas,w_over_hw,method"
    rows = parse_csv(out)
    assert [r["method"] for r in rows] == ["exact", "closed_form"]
    w_exact, w_cf = (float(r["w_over_hw"]) for r in rows)
    assert abs(w_exact - w_cf) / w_cf < 0.02


def test_sweep_zero_squeezing_rows(capsys):
    methods = "exact,closed_form,low_t_approx,invariant_form,oracle"
    code, out = run(["sweep", "--beta", "2.5,20", "--r", "0", "--methods", methods], capsys)
    assert code == 0
    rows = parse_csv(out)
    assert len(rows) == 10
    assert all(float(r["w_over_hw"]) == 0 for r in rows)


def test_sweep_order_follows_inputs(capsys):
    code, out = run(["sweep", "--beta", "30,10", "--r", "1,0.5", "--methods", "closed_form,exact"], capsys)
    assert code == 0
    keys = [(r["beta"], r["r"], r["method"]) for r in parse_csv(out)]
    assert keys == [
        (b, r, m) for b in ("30", "10") for r in ("1", "0.5") for m in ("closed_form", "exact")
    ]


def test_sweep_byte_identical(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"beta_values": [3, 40], "r_values": [0, 0.7, 1.5], "lambda_values": [1, 4],
                               "methods": ["exact"]}))
    outs = []
    for i in range(2):
        path = tmp_path / f"out{i}.csv"
        assert main(["sweep", "--config", str(cfg), "--out", str(path)]) == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]
    assert outs[0].count(b"\n") == 1 + 2 * 3 * 2


def test_flags_override_config(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"beta_values": [3], "r_values": [1], "methods": ["exact"]}))
    code, out = run(["sweep", "--config", str(cfg), "--beta", "7"], capsys)
    assert code == 0
    assert parse_csv(out)[0]["beta"] == "7"


def test_config_round_trip(tmp_path, capsys):
    args = ["sweep", "--beta", "5,60", "--r", "0.2,1", "--lambda", "1,2.5", "--methods", "exact",
            "--format", "json", "--out", "x.json"]
    code, echoed = run(args + ["--echo-config"], capsys)
    assert code == 0
    path = tmp_path / "echo.json"
    path.write_text(echoed)
    code, again = run(["sweep", "--config", str(path), "--echo-config"], capsys)
    assert code == 0
    assert again == echoed
    assert SweepConfig.from_dict(json.loads(echoed)) == SweepConfig.from_dict(json.loads(again))


def test_json_output(capsys, caplog):
    code, out = run(["sweep", "--beta", "20", "--r", "1", "--lambda", "1,3", "--format", "json",
                          "--methods", "exact"], capsys)
    assert code == 0
    doc = json.loads(out)
    meta = doc["metadata"]
    assert meta["columns"] == CSV_COLUMNS
    assert "vacuum variance 1/2" in meta["conventions"]
    assert "nats" in meta["conventions"]
    assert meta["counterfactual_apparatus_lambdas"] == [3.0]
    assert len(doc["rows"]) == 2
    assert "counterfactual" in caplog.text


@pytest.mark.parametrize(
    "argv",
    [
        ["sweep", "--beta", "50", "--r", "2", "--methods", "oracle"],
        ["sweep", "--beta", "0.5", "--r", "1", "--methods", "oracle"],
        ["sweep", "--beta", "50", "--r", "1", "--methods", "bogus"],
        ["sweep", "--beta", "50", "--r", "1", "--lambda", "2", "--methods", "closed_form"],
        ["sweep", "--beta", "-1", "--r", "1"],
        ["sweep", "--beta", "50", "--r", "-1"],
        ["sweep", "--r", "1"],
        ["sweep", "--beta", "abc", "--r", "1"],
        ["show-law", "--beta", "5"],
    ],
)
def test_config_errors_exit_1(argv, capsys, caplog):
    code, out = run(argv, capsys)
    assert code == 1
    assert out == ""
    assert caplog.records[-1].levelname == "ERROR"


def test_unknown_config_key(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"beta_values": [3], "r_values": [1], "betas": [1]}))
    assert run(["sweep", "--config", str(cfg)], capsys)[0] == 1


def test_stderr_messages_from_subprocess():
    proc = subprocess.run(
        [sys.executable, "-m", "cvthermo", "sweep", "--beta", "50", "--r", "2", "--methods", "oracle"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 1
    assert "oracle needs r <= 1.5" in proc.stderr


def test_failed_oracle_row_is_reported(monkeypatch, capsys, caplog):
    def boom(n_bar, r, *args, **kwargs):
        raise ConvergenceError("stuck", n_cut=80, trace_deficit=1e-3)

    monkeypatch.setattr(cli.fock, "oracle_work", boom)
    code, out = run(["sweep", "--beta", "3,5", "--r", "0.5", "--methods", "exact,oracle"], capsys)
    assert code == 2
    rows = parse_csv(out)
    assert len(rows) == 4
    assert [r["method"] for r in rows] == ["exact", "oracle:failed"] * 2
    assert rows[1]["w_over_hw"] == "nan"
    assert "2 row(s) failed" in caplog.text


def test_show_law_table(capsys):
    code, out = run(["show-law", "--beta", "100", "--r-max", "3", "--steps", "7"], capsys)
    assert code == 0
    lines = [ln for ln in out.splitlines() if not ln.startswith("#")]
    assert len(lines) == 8
    widths = {len(ln) for ln in lines}
    assert len(widths) == 1
    first = lines[1].split()
    assert first[:4] == ["0", "0", "0", "0"]


def test_law_table_values():
    rows = cli.law_table(100.0, 3.0, 7)
    for row in rows:
        assert row["E_N"] == pytest.approx(2 * row["r"], abs=1e-9)
        assert row["in_band"]
    assert rows[-1]["ratio"] == pytest.approx(1.0095, abs=5e-4)
    assert rows[-1]["xi"] == pytest.approx(0.9901339628345598, rel=1e-14)


def test_validate_small_grid(tmp_path, capsys):
    out_path = tmp_path / "report.json"
    code, out = run(["validate", "--grid", "small", "--out", str(out_path)], capsys)
    assert code == 0
    assert out.count("PASS") >= 8
    report = json.loads(out_path.read_text())
    assert report["passed"] is True


def test_validate_catches_tampered_entropy(monkeypatch, capsys):
    original = thermo.von_neumann_entropy

    def tampered(mu):
        return original(mu) * 1.01

    monkeypatch.setattr(thermo, "von_neumann_entropy", tampered)
    code, out = run(["validate", "--grid", "small"], capsys)
    assert code == 2
    assert "FAIL" in out


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "cvthermo", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.startswith("cvthermo ")


def test_sweep_config_defaults():
    cfg = SweepConfig([10.0], [1.0])
    cfg.validate()
    assert cfg.lambda_values == [1.0]
    with pytest.raises(ConfigError):
        SweepConfig([], [1.0]).validate()
