import json
import math
from pathlib import Path

import jsonschema
import pytest

from nterm.cli import (
    EXIT_BAD_SPEC,
    EXIT_DOMAIN,
    EXIT_IO,
    EXIT_OK,
    RunSpec,
    main,
    parse_argv,
    parse_n_spec,
)

SCHEMA = json.loads(
    (Path(__file__).resolve().parent.parent / "schemas" / "output.json")
    .read_text())


def run_cli(capsys, argv):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def run_json(capsys, argv):
    code, out, err = run_cli(capsys, argv + ["--format", "json"])
    assert code == EXIT_OK, err
    doc = json.loads(out)
    jsonschema.validate(doc, SCHEMA)
    return doc


class TestNSpec:
    def test_single(self):
        assert parse_n_spec("17") == [17]
        assert parse_n_spec("2^10") == [1024]

    def test_dyadic_range(self):
        assert parse_n_spec("2^4..2^6:dyadic") == [16, 32, 64]
        assert parse_n_spec("3..50:dyadic") == [3, 6, 12, 24, 48]

    @pytest.mark.parametrize("bad", ["", "x", "4..2:dyadic", "1..8", "2^^3"])
    def test_errors(self, bad):
        with pytest.raises(ValueError):
            parse_n_spec(bad)


class TestRoundTrip:
    @pytest.mark.parametrize("argv", [
        ["bounds", "--weights", "const", "--p", "1", "--n", "1",
         "--m-max", "1024", "--format", "json"],
        ["bounds", "--weights", "logpow:beta=1", "--p", "inf",
         "--n", "2^2..2^8:dyadic"],
        ["exact", "--sequence", "x.txt", "--n", "3", "--format", "csv"],
        ["extremal", "--weights", "const", "--p", "2", "--m", "4"],
        ["oracle", "--weights", "powlog:alpha=1,beta=0", "--p", "0.5",
         "--n", "2", "--seed", "7", "--iters", "100"],
        ["certify", "--weights", "const", "--p", "1.5", "--n", "4",
         "--seed", "3", "--output", "out.json"],
        ["ratefit", "--weights", "const", "--p", "1",
         "--n", "2^6..2^16:dyadic", "--fix-log", "none",
         "--model", "poly-only"],
    ])
    def test_spec_round_trips(self, argv):
        spec = parse_argv(argv)
        assert parse_argv(spec.to_argv()) == spec


class TestBounds:
    def test_json_example(self, capsys):
        doc = run_json(capsys, ["bounds", "--weights", "const", "--p", "1",
                                "--n", "1", "--m-max", "1024"])
        row = doc["rows"][0]
        assert row["lower_sq"] == 0.25
        assert row["upper_sq"] == 1.0
        assert row["status"] == "attained"

    def test_csv_header_stable(self, capsys):
        code, out, _ = run_cli(capsys, [
            "bounds", "--weights", "const", "--p", "1", "--n", "1",
            "--format", "csv"])
        assert code == EXIT_OK
        assert out.splitlines()[0] == \
            "n,lower_sq,upper_sq,status,argmax_m,m_scanned"

    def test_divergent_serializes_inf(self, capsys):
        doc = run_json(capsys, ["bounds", "--weights", "const", "--p", "3",
                                "--n", "1"])
        assert doc["rows"][0]["lower_sq"] == "inf"
        assert doc["rows"][0]["status"] == "divergent"

    def test_inf_p_rows(self, capsys):
        doc = run_json(capsys, ["bounds", "--weights",
                                "powlog:alpha=1,beta=0", "--p", "inf",
                                "--n", "2^1..2^4:dyadic"])
        assert doc["rows"][0]["status"] == "converged"
        assert {"n", "value_sq", "truncation_bound", "status",
                "terms_summed"} == set(doc["rows"][0])


class TestExact:
    def test_three_four_five(self, capsys, tmp_path):
        path = tmp_path / "seq.txt"
        path.write_text("3\n-4\n")
        doc = run_json(capsys, ["exact", "--sequence", str(path), "--n", "0"])
        assert doc["rows"][0]["sigma"] == 5.0

    def test_missing_file(self, capsys):
        code, _, err = run_cli(capsys, ["exact", "--sequence", "/missing",
                                        "--n", "0"])
        assert code == EXIT_IO
        assert err.startswith("nterm: error=io")


class TestExtremal:
    def test_csv_row(self, capsys):
        code, out, _ = run_cli(capsys, [
            "extremal", "--weights", "const", "--p", "2", "--m", "4",
            "--format", "csv"])
        assert code == EXIT_OK
        assert out == "0.5,0.5,0.5,0.5\n"

    def test_json(self, capsys):
        doc = run_json(capsys, ["extremal", "--weights", "const", "--p", "1",
                                "--m", "3"])
        assert doc["entries"] == pytest.approx([1 / 3] * 3)


class TestOracleCommand:
    def test_rows_and_witnesses(self, capsys):
        doc = run_json(capsys, ["oracle", "--weights", "const", "--p", "1",
                                "--n", "1", "--m-max", "64",
                                "--iters", "2000", "--seed", "1"])
        engines = {r["engine"]: r["value_sq"] for r in doc["rows"]}
        assert engines["structure"] == pytest.approx(0.25, abs=1e-9)
        assert engines["random"] <= engines["structure"] + 1e-9
        assert "structure:1" in doc["witnesses"]

    def test_inf_p_runs_random_only(self, capsys):
        doc = run_json(capsys, ["oracle", "--weights",
                                "powlog:alpha=1,beta=0", "--p", "inf",
                                "--n", "1", "--iters", "500", "--seed", "1"])
        assert [r["engine"] for r in doc["rows"]] == ["random"]


class TestCertifyCommand:
    def test_passes_and_exit_zero(self, capsys):
        doc = run_json(capsys, ["certify", "--weights",
                                "powlog:alpha=1,beta=0", "--p", "2",
                                "--n", "8", "--seed", "42",
                                "--iters", "2000"])
        assert doc["reports"][0]["passed"] is True

    def test_byte_identical_reruns(self, capsys):
        argv = ["certify", "--weights", "const", "--p", "1", "--n", "4",
                "--seed", "42", "--iters", "3000", "--format", "json"]
        _, out1, _ = run_cli(capsys, argv)
        _, out2, _ = run_cli(capsys, argv)
        assert out1 == out2


class TestDeterminism:
    @pytest.mark.parametrize("argv", [
        ["bounds", "--weights", "logpow:beta=1", "--p", "1",
         "--n", "2^1..2^6:dyadic", "--format", "csv"],
        ["oracle", "--weights", "const", "--p", "1", "--n", "2",
         "--iters", "2000", "--seed", "5", "--format", "json"],
        ["ratefit", "--weights", "const", "--p", "1",
         "--n", "2^6..2^14:dyadic", "--format", "json"],
    ])
    def test_identical_runs_identical_bytes(self, capsys, argv):
        _, out1, _ = run_cli(capsys, argv)
        _, out2, _ = run_cli(capsys, argv)
        assert out1 == out2


class TestRatefitCommand:
    def test_constant_weights_rate(self, capsys):
        doc = run_json(capsys, ["ratefit", "--weights", "const", "--p", "1",
                                "--n", "2^6..2^14:dyadic"])
        assert doc["fit"]["poly_exponent"] == pytest.approx(0.5, abs=0.05)
        assert doc["prediction"]["valid"] is True
        assert doc["envelope"]["ratio"] < 4

    def test_fix_log_numeric(self, capsys):
        doc = run_json(capsys, ["ratefit", "--weights", "logpow:beta=1",
                                "--p", "1", "--n", "2^6..2^14:dyadic",
                                "--fix-log", "1.0"])
        assert doc["fit"]["log_exponent"] == 1.0

    def test_invalid_prediction_keeps_envelope_null(self, capsys):
        doc = run_json(capsys, ["ratefit", "--weights", "const", "--p", "1.9",
                                "--n", "2^6..2^14:dyadic"])
        assert doc["prediction"]["valid"] is False
        assert doc["envelope"] is None


class TestErrorPaths:
    def test_unknown_weight_spec(self, capsys):
        code, _, err = run_cli(capsys, ["bounds", "--weights", "nope",
                                        "--p", "1", "--n", "1"])
        assert code == EXIT_BAD_SPEC
        assert err.startswith("nterm: error=weight-spec")

    def test_invalid_weight_file(self, capsys, tmp_path):
        path = tmp_path / "w.txt"
        path.write_text("1\n0.5\n")
        code, _, err = run_cli(capsys, ["bounds", "--weights",
                                        f"file:{path}", "--p", "1",
                                        "--n", "1"])
        assert code == EXIT_BAD_SPEC

    def test_bad_p(self, capsys):
        code, _, err = run_cli(capsys, ["bounds", "--weights", "const",
                                        "--p", "0", "--n", "1"])
        assert code == EXIT_DOMAIN
        assert err.startswith("nterm: error=domain")

    def test_bad_n_range(self, capsys):
        code, _, err = run_cli(capsys, ["bounds", "--weights", "const",
                                        "--p", "1", "--n", "8..4:dyadic"])
        assert code == EXIT_DOMAIN

    def test_unknown_flag(self, capsys):
        code, _, _ = run_cli(capsys, ["bounds", "--wat", "1"])
        assert code == EXIT_BAD_SPEC

    def test_output_file(self, capsys, tmp_path):
        out_path = tmp_path / "rows.csv"
        argv = ["bounds", "--weights", "const", "--p", "1", "--n", "1",
                "--format", "csv", "--output", str(out_path)]
        code, out, _ = run_cli(capsys, argv)
        assert code == EXIT_OK and out == ""
        first = out_path.read_bytes()
        run_cli(capsys, argv)
        assert out_path.read_bytes() == first


class TestWeightFileThroughCli:
    def test_tabulated_bounds(self, capsys, tmp_path):
        path = tmp_path / "w.txt"
        path.write_text("".join(f"{float(j)}\n" for j in range(1, 2001)))
        doc = run_json(capsys, ["bounds", "--weights", f"file:{path}",
                                "--p", "1", "--n", "1", "--m-max", "2000"])
        assert doc["rows"][0]["status"] == "attained"
