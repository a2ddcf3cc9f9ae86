import json

import pytest

import stepcheck as sc
from stepcheck.cli import main

MODEL_PATH = str(sc.bundled_model_path())

FAILING = """
process P { P = a . P }
process Q { Q = b . Q }
check bad: P ~sb Q
"""


@pytest.fixture
def failing_model(tmp_path):
    path = tmp_path / "failing.aptc"
    path.write_text(FAILING)
    return str(path)


class TestCheck:
    def test_all_bundled_checks_pass(self, capsys):
        assert main(["check", MODEL_PATH, "--round-mode", "barrier"]) == 0
        out = capsys.readouterr().out
        assert out.count("holds") == 3

    def test_failing_check_exits_1(self, failing_model, capsys):
        assert main(["check", failing_model]) == 1
        out = capsys.readouterr().out
        assert "FAILS" in out

    def test_single_named_check(self, capsys):
        assert main(["check", MODEL_PATH, "--name", "ab_a"]) == 0
        out = capsys.readouterr().out
        assert "ab_a" in out and "ab_b" not in out

    def test_unknown_check_exits_2(self, capsys):
        assert main(["check", MODEL_PATH, "--name", "nope"]) == 2
        assert "error" in capsys.readouterr().err

    def test_json_output_is_stable(self, capsys):
        main(["check", MODEL_PATH, "--json"])
        first = capsys.readouterr().out
        main(["check", MODEL_PATH, "--json"])
        second = capsys.readouterr().out
        assert first == second
        data = json.loads(first)
        assert [e["check"] for e in data] == ["ab_a", "ab_b", "theorem"]
        assert all(e["holds"] for e in data)

    def test_json_counterexample(self, failing_model, capsys):
        main(["check", failing_model, "--json"])
        data = json.loads(capsys.readouterr().out)
        assert not data[0]["holds"]
        assert data[0]["counterexample"]["detail"]

    def test_check_overrides_apply(self, capsys):
        # the theorem's own options pin barrier mode, so no flag is needed
        assert main(["check", MODEL_PATH, "--name", "theorem"]) == 0

    def test_explicit_flag_beats_check_option(self, capsys):
        code = main(["check", MODEL_PATH, "--name", "theorem",
                     "--round-mode", "overlap"])
        out = capsys.readouterr().out
        assert code == 1
        assert out.count("A1") >= 2  # two requests outstanding at once


class TestLts:
    def test_dot_export(self, capsys):
        assert main(["lts", MODEL_PATH, "--system", "WSOA"]) == 0
        out = capsys.readouterr().out
        assert out.startswith("digraph") and "->" in out

    def test_json_export_schema(self, capsys):
        main(["lts", MODEL_PATH, "--system", "Sys", "--format", "json",
              "--round-mode", "barrier", "--prune-dead", "--minimize"])
        data = json.loads(capsys.readouterr().out)
        assert data["initial"] == 0
        assert len(data["states"]) == 2
        assert len(data["transitions"]) == 4
        labels = {tuple(t["label"]) for t in data["transitions"]}
        assert labels == {("A1(d1)",), ("A1(d2)",), ("B4(d1)",), ("B4(d2)",)}

    def test_tau_label_in_json(self, tmp_path, capsys):
        path = tmp_path / "m.aptc"
        path.write_text("process P { P = a . P }\nsystem S = hide {a} in P")
        main(["lts", str(path), "--system", "S", "--format", "json"])
        data = json.loads(capsys.readouterr().out)
        assert data["transitions"][0]["label"] == ["tau"]

    def test_unknown_system_exits_2(self, capsys):
        assert main(["lts", MODEL_PATH, "--system", "NOPE"]) == 2


class TestDeriveAb:
    def test_text_output(self, capsys):
        assert main(["derive-ab", MODEL_PATH, "--wso", "WSOA"]) == 0
        out = capsys.readouterr().out
        assert "ABA = A2 . ABA1" in out
        assert "ABA1 = A5 . ABA" in out

    def test_internal_set_name(self, capsys):
        assert main(["derive-ab", MODEL_PATH, "--wso", "WSOB",
                     "--internal", "IB", "--json"]) == 0
        data = json.loads(capsys.readouterr().out)
        assert data["internal"] == ["B1", "B4"]
        assert data["equations"] == {"ABB": "B2 . ABB1", "ABB1": "B3 . ABB"}

    def test_internal_comma_list(self, capsys):
        assert main(["derive-ab", MODEL_PATH, "--wso", "WSOB",
                     "--internal", "B1,B4", "--json"]) == 0
        data = json.loads(capsys.readouterr().out)
        assert data["states"] == 2


class TestErrors:
    def test_missing_file_exits_2(self, capsys):
        assert main(["check", "/nonexistent.aptc"]) == 2

    def test_parse_error_exits_2(self, tmp_path, capsys):
        path = tmp_path / "bad.aptc"
        path.write_text("process {")
        assert main(["check", str(path)]) == 2
        assert "error" in capsys.readouterr().err
