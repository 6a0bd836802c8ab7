"""Command-line tests: exit codes, output determinism, golden report."""

import json
from pathlib import Path

import pytest

from chronorag.cli import main

DATA = Path(__file__).parent / "data"
EVAL_DATA = DATA / "eval"
CORPUS20 = DATA / "corpus20.jsonl"

QUERIES = [
    {
        "id": "cq1",
        "question": "Who won the latest America's Next Top Model by May 8, 2021?",
        "answers": ["Kyla Coleman"],
        "gold_evidence": ["topmodel-24"],
        "source": "timeqa",
        "perturbed": True,
    },
    {
        "id": "cq2",
        "question": "Who won the latest NCAA championship by June 2012?",
        "answers": ["Kentucky"],
        "gold_evidence": ["kentucky-2012"],
        "source": "timeqa",
        "perturbed": False,
    },
    {
        "id": "cq3",
        "question": "Which country hosted the Olympics between 1994 and 2004?",
        "answers": "United States | USA",
        "gold_evidence": ["olympics-1996", "olympics-2002"],
    },
    {
        "id": "cq4",
        "question": "Which school did Marshall Sahlins go to from 1951 to 1952?",
        "answers": ["Columbia University"],
        "gold_evidence": ["sahlins-education"],
    },
]


@pytest.fixture()
def workspace(tmp_path):
    queries = tmp_path / "queries.jsonl"
    queries.write_text("\n".join(json.dumps(q) for q in QUERIES) + "\n")
    config = tmp_path / "config.json"
    config.write_text(json.dumps({
        "corpus": str(CORPUS20),
        "index_cache": str(tmp_path / "index.bin"),
        "pipeline": {"n_retrieve": 20, "n_kw_passages": 12, "n_kw_sentences": 30, "top_out": 10},
    }))
    return tmp_path, config, queries


class TestExitCodes:
    def test_no_command_is_usage_error(self, capsys):
        assert main([]) == 1
        assert "usage error" in capsys.readouterr().err

    def test_unknown_flag(self, workspace, capsys):
        _, config, _ = workspace
        assert main(["index", "--config", str(config), "--bogus"]) == 1

    def test_missing_config_file(self, tmp_path, capsys):
        missing = tmp_path / "absent.json"
        assert main(["index", "--config", str(missing)]) == 1

    def test_malformed_config(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert main(["index", "--config", str(bad)]) == 1

    def test_unknown_config_key(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"corpse": "x.jsonl"}))
        assert main(["index", "--config", str(bad)]) == 1

    def test_config_without_corpus(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"index_cache": str(tmp_path / "i.bin")}))
        assert main(["index", "--config", str(cfg)]) == 1

    def test_missing_corpus_file_is_data_error(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({
            "corpus": str(tmp_path / "absent.jsonl"),
            "index_cache": str(tmp_path / "i.bin"),
        }))
        assert main(["index", "--config", str(cfg)]) == 2

    def test_missing_queries_is_data_error(self, workspace, capsys):
        tmp_path, config, _ = workspace
        code = main([
            "run", "--config", str(config),
            "--queries", str(tmp_path / "absent.jsonl"),
            "--out", str(tmp_path / "run.json"),
        ])
        assert code == 2

    def test_missing_run_file_is_data_error(self, workspace, capsys):
        tmp_path, config, queries = workspace
        code = main([
            "eval", "--config", str(config),
            "--run", str(tmp_path / "absent.json"),
            "--queries", str(queries),
            "--out", str(tmp_path / "report.json"),
        ])
        assert code == 2

    def test_invalid_k_override(self, workspace, capsys):
        tmp_path, config, queries = workspace
        code = main([
            "run", "--config", str(config),
            "--queries", str(queries),
            "--out", str(tmp_path / "run.json"),
            "--k", "0",
        ])
        assert code == 1

    def test_bad_sweep_specs(self, tmp_path, capsys):
        out = str(tmp_path / "s.csv")
        assert main(["sweep", "--class", "sometime:1980.5", "--grid", "1958:1990", "--out", out]) == 1
        assert main(["sweep", "--class", "last_before:1981.5", "--grid", "1990:1958", "--out", out]) == 1
        assert main(["sweep", "--class", "last_before:oops", "--grid", "1958:1990", "--out", out]) == 1

    def test_sidecar_check_without_url(self, capsys, monkeypatch):
        monkeypatch.delenv("CHRONORAG_SIDECAR_URL", raising=False)
        assert main(["sidecar-check"]) == 1

    def test_sidecar_check_unreachable_is_provider_error(self, tmp_path, capsys, monkeypatch):
        monkeypatch.delenv("CHRONORAG_SIDECAR_URL", raising=False)
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({
            "provider": {
                "kind": "remote",
                "base_url": "http://127.0.0.1:9",
                "timeout_s": 0.2,
                "retries": 1,
                "backoff_s": 0.0,
            }
        }))
        assert main(["sidecar-check", "--config", str(cfg)]) == 3
        assert "provider error" in capsys.readouterr().err


class TestIndexCommand:
    def test_index_writes_cache(self, workspace, capsys):
        tmp_path, config, _ = workspace
        assert main(["index", "--config", str(config)]) == 0
        assert (tmp_path / "index.bin").exists()
        assert "indexed 20 passages" in capsys.readouterr().out


class TestRunCommand:
    def _run(self, config, queries, out, *extra):
        return main([
            "run", "--config", str(config),
            "--queries", str(queries), "--out", str(out), *extra,
        ])

    def test_run_covers_every_query(self, workspace, capsys):
        tmp_path, config, queries = workspace
        out = tmp_path / "run.json"
        assert self._run(config, queries, out) == 0
        records = json.loads(out.read_text())
        assert [r["query_id"] for r in records] == ["cq1", "cq2", "cq3", "cq4"]
        for record in records:
            assert 1 <= len(record["ranked"]) <= 10
            top = record["ranked"][0]
            assert set(top) == {
                "passage_id", "score", "semantic", "temporal", "best_sentence", "origin",
            }
            assert "trace" not in record

    def test_run_is_byte_identical(self, workspace, capsys):
        tmp_path, config, queries = workspace
        first = tmp_path / "run1.json"
        second = tmp_path / "run2.json"
        assert self._run(config, queries, first) == 0
        assert self._run(config, queries, second, "--workers", "2") == 0
        assert first.read_bytes() == second.read_bytes()

    def test_trace_and_k_flags(self, workspace, capsys):
        tmp_path, config, queries = workspace
        out = tmp_path / "run.json"
        assert self._run(config, queries, out, "--trace", "--k", "3") == 0
        records = json.loads(out.read_text())
        for record in records:
            assert len(record["ranked"]) <= 3
            stages = [t["stage"] for t in record["trace"]]
            assert stages == [
                "retrieve", "keyword_passages", "semantic_passages",
                "sentence_pool", "keyword_sentences", "hybrid_sentences", "selected",
            ]

    def test_ranking_finds_gold(self, workspace, capsys):
        tmp_path, config, queries = workspace
        out = tmp_path / "run.json"
        assert self._run(config, queries, out) == 0
        records = {r["query_id"]: r for r in json.loads(out.read_text())}
        assert records["cq1"]["ranked"][0]["passage_id"] == "topmodel-24"
        assert records["cq2"]["ranked"][0]["passage_id"] == "kentucky-2012"


class TestEvalCommand:
    def _eval_fixture_config(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"corpus": str(EVAL_DATA / "corpus.jsonl")}))
        return cfg

    def test_matches_golden_report(self, tmp_path, capsys):
        cfg = self._eval_fixture_config(tmp_path)
        out = tmp_path / "report.json"
        code = main([
            "eval", "--config", str(cfg),
            "--run", str(EVAL_DATA / "run.json"),
            "--queries", str(EVAL_DATA / "queries.jsonl"),
            "--out", str(out),
        ])
        assert code == 0
        golden = json.loads((EVAL_DATA / "report_golden.json").read_text())
        assert json.loads(out.read_text()) == golden

    def test_eval_is_byte_identical(self, tmp_path, capsys):
        cfg = self._eval_fixture_config(tmp_path)
        outs = []
        for name in ("r1.json", "r2.json"):
            out = tmp_path / name
            assert main([
                "eval", "--config", str(cfg),
                "--run", str(EVAL_DATA / "run.json"),
                "--queries", str(EVAL_DATA / "queries.jsonl"),
                "--out", str(out),
            ]) == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]

    def test_end_to_end_run_then_eval(self, workspace, capsys):
        tmp_path, config, queries = workspace
        run_path = tmp_path / "run.json"
        report_path = tmp_path / "report.json"
        assert main([
            "run", "--config", str(config),
            "--queries", str(queries), "--out", str(run_path),
        ]) == 0
        assert main([
            "eval", "--config", str(config),
            "--run", str(run_path), "--queries", str(queries),
            "--out", str(report_path),
        ]) == 0
        report = json.loads(report_path.read_text())
        assert report["counts"]["samples_evaluated"] == 4
        assert report["answer_recall"]["1"] >= 0.5
        assert report["evidence_recall"]["1"] >= 0.5
        # Run records carry no predictions, so answer metrics stay null.
        assert report["em"] is None and report["f1"] is None


class TestSweepCommand:
    def test_sweep_csv(self, tmp_path, capsys):
        out = tmp_path / "sweep.csv"
        code = main([
            "sweep", "--class", "last_before:1981.5",
            "--grid", "1958:1990", "--out", str(out),
        ])
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "class,anchor1,anchor2,date,temporal_score"
        assert len(lines) == 34
        scores = {}
        for line in lines[1:]:
            cells = line.split(",")
            assert cells[0] == "last_before"
            assert cells[1] == "1981.5" and cells[2] == ""
            scores[cells[3]] = float(cells[4])
        assert max(scores, key=scores.get) == "1981"

    def test_sweep_between_carries_both_anchors(self, tmp_path, capsys):
        out = tmp_path / "sweep.csv"
        code = main([
            "sweep", "--class", "last_between:1980.5:1990.5",
            "--grid", "1975:1995", "--out", str(out),
        ])
        assert code == 0
        first_row = out.read_text().splitlines()[1].split(",")
        assert first_row[1] == "1980.5" and first_row[2] == "1990.5"

    def test_sweep_is_byte_identical(self, tmp_path, capsys):
        outs = []
        for name in ("s1.csv", "s2.csv"):
            out = tmp_path / name
            assert main([
                "sweep", "--class", "first_after:1974.5",
                "--grid", "1959:1989", "--out", str(out),
            ]) == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]
