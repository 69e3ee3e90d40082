"""Command-line behaviour: CSV emission, config precedence, exit codes."""

import json

import numpy as np
import pytest

from agl import analytic as an
from agl import cli
from agl.model import NetworkKind


def run_cli(capsys, *argv):
    code = cli.main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_analytic_csv_values(capsys):
    code, out, _ = run_cli(capsys, "analytic", "--kind", "fcn-capture",
                           "--n", "4", "--lambda", "1", "--p", "0.5", "--q", "1")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "n,node_label,analytic"
    ages = an.fcn_capture_ages(4, 1.0, 0.5, 1.0)
    assert lines[1] == f"4,1,{ages.v1:.10g}"
    assert lines[4] == f"4,4,{ages.v_infected:.10g}"


def test_analytic_mitm_has_relay_row(capsys):
    code, out, _ = run_cli(capsys, "analytic", "--kind", "fcn-mitm", "--n", "3")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[-1] == "3,A,3"
    assert lines[3] == "3,3,"  # fed node: no closed form


def test_lemma_csv(capsys):
    code, out, _ = run_cli(capsys, "lemma", "--n", "100", "--n0", "50")
    assert code == 0
    header, row = out.strip().splitlines()
    assert header == "n,n0,sum,lower_env,upper_env"
    fields = row.split(",")
    assert fields[:2] == ["100", "50"]
    assert float(fields[2]) == pytest.approx(an.lemma_sum(100, 50), rel=1e-9)
    env = an.lemma_envelopes(100, 50)
    assert float(fields[3]) <= float(fields[2]) <= float(fields[4])
    assert float(fields[3]) == pytest.approx(env.lower, rel=1e-9)


def test_figure_writes_file(tmp_path, capsys):
    out_file = tmp_path / "fig8.csv"
    code, out, _ = run_cli(capsys, "figure", "fig8", "--out", str(out_file))
    assert code == 0 and out == ""
    lines = out_file.read_text().splitlines()
    assert lines[0].startswith("series,n,node_label,analytic")
    series = {line.split(",")[0] for line in lines[1:]}
    assert series == {"vn", "m_pow_0.3", "transition", "m_pow_0.8"}


def test_dump_config_round_trip(tmp_path, capsys):
    code, out, _ = run_cli(capsys, "analytic", "--kind", "urn-capture", "--n", "12",
                           "--lambda", "2", "--p", "0.25", "--q", "0.75",
                           "--dump-config")
    assert code == 0
    config_file = tmp_path / "net.json"
    config_file.write_text(out)
    code, out2, _ = run_cli(capsys, "analytic", "--config", str(config_file),
                            "--dump-config")
    assert code == 0 and out2 == out
    parsed = json.loads(out)
    assert parsed == {"kind": "urn-capture", "honest": False, "n": 12,
                      "lambda": 2.0, "p": 0.25, "q": 0.75}


def test_flags_override_config(tmp_path, capsys):
    config_file = tmp_path / "net.json"
    config_file.write_text(json.dumps({"kind": "fcn-capture", "n": 5, "p": 1.0}))
    code, out, _ = run_cli(capsys, "analytic", "--config", str(config_file),
                           "--p", "0.5", "--q", "1", "--dump-config")
    assert code == 0
    assert json.loads(out)["p"] == 0.5


def test_config_errors_exit_2(capsys):
    code, _, err = run_cli(capsys, "analytic", "--n", "1", "--p", "1.5")
    assert code == 2
    assert "n must be ≥ 2" in err
    assert "probability out of range" in err


def test_unknown_subcommand_exits_2(capsys):
    assert cli.main(["frobnicate"]) == 2
    capsys.readouterr()


def test_missing_n_is_config_error(capsys):
    code, _, err = run_cli(capsys, "analytic", "--kind", "fcn-capture")
    assert code == 2 and "n is required" in err


def test_missing_config_file_exits_2(capsys):
    code, _, err = run_cli(capsys, "analytic", "--config", "/no/such/file.json")
    assert code == 2


def test_simulate_deterministic_bytes(tmp_path, capsys):
    args = ["simulate", "--kind", "urn-capture", "--n", "6", "--p", "0.5",
            "--q", "0.5", "--horizon", "3000", "--seed", "9", "--reps", "3"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert cli.main(args + ["--out", str(a)]) == 0
    assert cli.main(args + ["--out", str(b)]) == 0
    capsys.readouterr()
    assert a.read_bytes() == b.read_bytes()
    header = a.read_text().splitlines()[0]
    assert header == "n,node_label,sim_mean,sim_ci95"


def test_seed_env_default(tmp_path, capsys, monkeypatch):
    args = ["simulate", "--kind", "fcn-capture", "--n", "4",
            "--horizon", "2000", "--reps", "2"]
    monkeypatch.setenv("AGL_SEED", "4242")
    implicit = tmp_path / "env.csv"
    assert cli.main(args + ["--out", str(implicit)]) == 0
    monkeypatch.delenv("AGL_SEED")
    explicit = tmp_path / "flag.csv"
    assert cli.main(args + ["--seed", "4242", "--out", str(explicit)]) == 0
    capsys.readouterr()
    assert implicit.read_bytes() == explicit.read_bytes()


def test_sweep_command_geometric_grid(capsys):
    code, out, _ = run_cli(capsys, "sweep", "--kind", "fcn-capture", "--p", "0.5",
                           "--q", "1", "--n-values", "8:64:2", "--node", "infected")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "n,node_label,analytic,bound_lower,bound_upper"
    ns = [int(line.split(",")[0]) for line in lines[1:]]
    assert ns == [8, 16, 32, 64]
    for line in lines[1:]:
        n, _, analytic, lo, hi = line.split(",")
        assert float(analytic) == pytest.approx(float(n))  # isolated-node identity


def test_sweep_alpha_shorthand(capsys):
    code, out, _ = run_cli(capsys, "sweep", "--kind", "urn-capture", "--p", "0.5",
                           "--q", "1", "--n-values", "100,1000", "--alpha", "0.8")
    assert code == 0
    rows = out.strip().splitlines()[1:]
    for line in rows:
        n, m = int(line.split(",")[0]), int(line.split(",")[1])
        assert m == int(n ** 0.8 + 1e-9)


def test_compare_command(capsys):
    code, out, err = run_cli(capsys, "compare", "--kind", "fcn-capture", "--n", "6",
                             "--p", "1", "--q", "1", "--events", "5e4",
                             "--reps", "4", "--seed", "3")
    assert code == 0
    assert "max_rel_error=" in err
    lines = out.strip().splitlines()
    assert lines[0] == "n,node_label,analytic,sim_mean,sim_ci95"
    first = lines[1].split(",")
    assert float(first[3]) == pytest.approx(float(first[2]), rel=0.1)


def test_emit_csv_quoting_and_empty(capsys):
    import io
    buf = io.StringIO()
    cli.emit_csv([{"node_label": 'with,comma"quote', "n": 1}], buf)
    text = buf.getvalue()
    assert '"with,comma""quote"' in text


def test_empty_sweep_is_header_only(capsys):
    code, out, err = run_cli(capsys, "sweep", "--kind", "urn-capture", "--p", "0.5",
                             "--q", "1", "--n-values", "4,5", "--node", "node:40")
    assert code == 0
    assert out == "n,node_label,analytic\n"
    assert "skipped" in err
