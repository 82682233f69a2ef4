import json
from importlib import resources
from pathlib import Path

import pytest

from codegen_eval.cli import main
from codegen_eval.report import ScoreTable, emit_report, summary_markdown
from codegen_eval.scoring import RunConfig, config_from_mapping, score_corpus
from codegen_eval import corpus as corpus_mod

MINI = resources.files("codegen_eval").joinpath("resources/mini_corpus")


@pytest.fixture(scope="module")
def mini_paths(tmp_path_factory):
    base = tmp_path_factory.mktemp("mini")
    instances = base / "instances.jsonl"
    executions = base / "executions.jsonl"
    instances.write_text(
        MINI.joinpath("instances.jsonl").read_text(encoding="utf-8"), encoding="utf-8"
    )
    executions.write_text(
        MINI.joinpath("executions.jsonl").read_text(encoding="utf-8"), encoding="utf-8"
    )
    return instances, executions


class TestScoreTable:
    def _table(self):
        table = ScoreTable(metrics=("em", "edit_sim"))
        table.set_value(("t1", "m1", 0), "em", 1.0)
        table.set_value(("t1", "m1", 0), "edit_sim", 1.0)
        table.set_value(("t2", "m1", 0), "em", None)
        table.set_flag(("t2", "m1", 0), "em", "broke")
        table.set_value(("t2", "m1", 0), "edit_sim", 0.25)
        return table

    def test_csv_round_trip(self, tmp_path):
        table = self._table()
        path = tmp_path / "scores.csv"
        table.to_csv(path)
        again = ScoreTable.from_csv(path)
        assert again.metrics == table.metrics
        assert again.rows == table.rows
        assert again.flags[("t2", "m1", 0)]["em"] == "broke"

    def test_model_means_macro_average(self):
        table = ScoreTable(metrics=("m",))
        # two samples for t1 (0.0, 1.0) then t2 (1.0): macro = (0.5 + 1.0)/2
        table.set_value(("t1", "a", 0), "m", 0.0)
        table.set_value(("t1", "a", 1), "m", 1.0)
        table.set_value(("t2", "a", 0), "m", 1.0)
        assert table.model_means()["a"]["m"] == pytest.approx(0.75)

    def test_score_vectors_drop_null_positions(self):
        table = ScoreTable(metrics=("m",))
        table.set_value(("t1", "a", 0), "m", 0.1)
        table.set_value(("t1", "b", 0), "m", 0.2)
        table.set_value(("t2", "a", 0), "m", None)
        table.set_value(("t2", "b", 0), "m", 0.9)
        vectors = table.score_vectors("m")
        assert [v.model_id for v in vectors] == ["a", "b"]
        assert vectors[0].values == (0.1,)
        assert vectors[1].values == (0.2,)

    def test_emit_formats(self, tmp_path):
        table = self._table()
        md = tmp_path / "r.md"
        emit_report(table, "md", md)
        content = md.read_text()
        assert "| 1.000 |" in content
        assert "em=broke" in content
        csv_path = tmp_path / "r.csv"
        emit_report(table, "csv", csv_path)
        assert "0.25" in csv_path.read_text()

    def test_emit_markdown_rounding(self, tmp_path):
        table = ScoreTable(metrics=("m",))
        table.set_value(("t", "a", 0), "m", 0.6652)
        path = tmp_path / "r.md"
        emit_report(table, "md", path)
        assert "0.665" in path.read_text()

    def test_emit_byte_stable(self, tmp_path):
        table = self._table()
        p1, p2 = tmp_path / "a.md", tmp_path / "b.md"
        emit_report(table, "md", p1)
        emit_report(table, "md", p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_empty_table_header_only(self, tmp_path):
        table = ScoreTable(metrics=("m",))
        path = tmp_path / "empty.csv"
        emit_report(table, "csv", path)
        assert path.read_text() == "task_id,model_id,sample_index,m,flags\n"

    def test_summary_contains_model_rows(self):
        table = self._table()
        text = summary_markdown(table)
        assert "| m1 |" in text


class TestConfig:
    def test_from_mapping_nested_sections(self):
        config = config_from_mapping(
            {
                "bleu": {"max_order": 2},
                "crystal": {"k": 10},
                "chrf": {"beta": 1.0},
                "run": {"metrics": ["em", "bleu"], "jobs": 2},
            }
        )
        assert config.bleu_max_order == 2
        assert config.crystal_k == 10
        assert config.chrf_beta == 1.0
        assert config.metrics == ("em", "bleu")
        assert config.jobs == 2

    def test_toml_and_json_configs(self, tmp_path):
        toml_path = tmp_path / "c.toml"
        toml_path.write_text('[bleu]\nmax_order = 3\n', encoding="utf-8")
        json_path = tmp_path / "c.json"
        json_path.write_text(json.dumps({"bleu": {"max_order": 3}}), encoding="utf-8")
        from codegen_eval.scoring import load_config_file

        assert load_config_file(toml_path) == load_config_file(json_path)

    def test_unknown_metric_rejected(self):
        with pytest.raises(Exception):
            RunConfig(metrics=("em", "rouge"))


class TestScoringPipeline:
    def test_identical_pair_scores_one(self, tmp_path):
        instances = tmp_path / "i.jsonl"
        code = "def f(x):\n    return x\n"
        instances.write_text(
            json.dumps(
                {
                    "task_id": "t",
                    "model_id": "m",
                    "sample_index": 0,
                    "nl_context": "",
                    "reference_code": code,
                    "candidate_code": code,
                    "language": "python",
                }
            )
            + "\n",
            encoding="utf-8",
        )
        corpus = corpus_mod.load_instances(instances)
        table = score_corpus(corpus, RunConfig(metrics=("em", "edit_sim")))
        row = table.rows[("t", "m", 0)]
        assert row == {"em": 1.0, "edit_sim": 1.0}

    def test_parallel_equals_serial(self, mini_paths):
        instances, _ = mini_paths
        corpus = corpus_mod.load_instances(instances)
        serial = score_corpus(corpus, RunConfig(jobs=1))
        parallel = score_corpus(corpus, RunConfig(jobs=4))
        assert serial.rows == parallel.rows
        assert serial.flags == parallel.flags

    def test_flagged_null_for_broken_candidate(self, mini_paths):
        instances, _ = mini_paths
        corpus = corpus_mod.load_instances(instances)
        table = score_corpus(corpus, RunConfig(metrics=("embed_f1",)))
        key = ("mini/t06", "modelB", 0)  # empty candidate
        assert table.rows[key]["embed_f1"] is None
        assert "embed_f1" in table.flags[key]


class TestCli:
    def test_score_and_report_round_trip(self, mini_paths, tmp_path):
        instances, _ = mini_paths
        out = tmp_path / "run"
        code = main(
            [
                "score",
                "--instances",
                str(instances),
                "--out",
                str(out),
                "--metrics",
                "em,edit_sim,embed_f1",
            ]
        )
        assert code == 0
        assert (out / "scores.csv").is_file()
        summary = (out / "summary.md").read_text()
        assert "modelA" in summary and "modelB" in summary
        assert main(["report", "--table", str(out / "scores.csv"), "--format", "md",
                     "--out", str(tmp_path / "r.md")]) == 0
        assert (tmp_path / "r.md").read_text().startswith("| task_id |")

    def test_passk_values(self, mini_paths, tmp_path):
        instances, executions = mini_paths
        out = tmp_path / "passk"
        code = main(
            [
                "passk",
                "--instances", str(instances),
                "--executions", str(executions),
                "--k", "1",
                "--out", str(out),
            ]
        )
        assert code == 0
        content = (out / "passk.csv").read_text().splitlines()
        assert content[0] == "model_id,pass@1"
        rates = dict(line.split(",") for line in content[1:])
        assert float(rates["modelA"]) == 1.0
        assert float(rates["modelB"]) == pytest.approx(0.6)

    def test_perturb_writes_provenance(self, mini_paths, tmp_path):
        instances, _ = mini_paths
        out = tmp_path / "perturbed.jsonl"
        assert main(["perturb", "--transform", "var-both",
                     "--instances", str(instances), "--out", str(out)]) == 0
        lines = [json.loads(line) for line in out.read_text().splitlines()]
        assert all(rec["transform"] == "var_cand_and_ref" for rec in lines)
        assert any("transform_error" in rec for rec in lines)  # broken t09

    def test_exit_codes(self, mini_paths, tmp_path):
        instances, _ = mini_paths
        # unknown metric -> config error -> 1
        assert main(["score", "--instances", str(instances),
                     "--out", str(tmp_path / "x"), "--metrics", "nope"]) == 1
        # missing input file -> data error -> 2
        assert main(["score", "--instances", str(tmp_path / "missing.jsonl"),
                     "--out", str(tmp_path / "y")]) == 2
        # unreachable backend directory -> backend error -> 3
        assert main(["score", "--instances", str(instances),
                     "--out", str(tmp_path / "z"), "--metrics", "embed_f1",
                     "--backend", f"dir:{tmp_path / 'no_such_dir'}"]) == 3

    def test_meta_power_shape(self, mini_paths, tmp_path):
        instances, _ = mini_paths
        out = tmp_path / "run"
        main(["score", "--instances", str(instances), "--out", str(out),
              "--metrics", "edit_sim"])
        meta_out = tmp_path / "meta"
        assert main(["meta", "power", "--table", str(out / "scores.csv"),
                     "--metric", "edit_sim", "--out", str(meta_out)]) == 0
        lines = (meta_out / "asl.csv").read_text().splitlines()
        assert lines[0] == "rank,p_value"
        assert lines[-1].startswith("alpha,")
        # 2 models -> 2 ordered pairs -> 2 ranks + header + alpha line
        assert len(lines) == 4

    def test_meta_distribution_and_ties(self, mini_paths, tmp_path):
        instances, _ = mini_paths
        out = tmp_path / "run"
        main(["score", "--instances", str(instances), "--out", str(out),
              "--metrics", "em,edit_sim"])
        dist_out = tmp_path / "dist"
        assert main(["meta", "distribution", "--table", str(out / "scores.csv"),
                     "--metric", "all", "--out", str(dist_out)]) == 0
        assert (dist_out / "distribution.md").read_text().count("|") > 10
        ties_out = tmp_path / "ties"
        assert main(["meta", "ties", "--table", str(out / "scores.csv"),
                     "--metric", "em", "--out", str(ties_out)]) == 0
        assert (ties_out / "ties.csv").read_text().startswith("metric,")

    def test_meta_correlate_exec(self, mini_paths, tmp_path):
        instances, executions = mini_paths
        out = tmp_path / "run"
        main(["score", "--instances", str(instances), "--out", str(out),
              "--metrics", "edit_sim,embed_f1"])
        corr_out = tmp_path / "corr"
        assert main(["meta", "correlate", "--table", str(out / "scores.csv"),
                     "--metric", "embed_f1", "--instances", str(instances),
                     "--executions", str(executions), "--out", str(corr_out)]) == 0
        assert (corr_out / "correlate.csv").read_text().startswith("group,n,r_pb,p_value")
        corr2 = tmp_path / "corr2"
        assert main(["meta", "correlate", "--table", str(out / "scores.csv"),
                     "--metric", "embed_f1", "--against", "edit_sim",
                     "--out", str(corr2)]) == 0
        assert "tau" in (corr2 / "correlate.csv").read_text()

    def test_meta_robustness_identity(self, mini_paths, tmp_path):
        instances, _ = mini_paths
        out = tmp_path / "run"
        main(["score", "--instances", str(instances), "--out", str(out),
              "--metrics", "edit_sim"])
        rob_out = tmp_path / "rob"
        assert main(["meta", "robustness", "--before", str(out / "scores.csv"),
                     "--after", str(out / "scores.csv"), "--metric", "edit_sim",
                     "--label", "identity", "--out", str(rob_out)]) == 0
        line = (rob_out / "robustness.csv").read_text().splitlines()[1]
        parts = line.split(",")
        assert float(parts[3]) == 0.0  # delta
        assert float(parts[4]) == 1.0  # tau

    def test_meta_distinguish(self, tmp_path):
        intra = tmp_path / "intra.txt"
        inter = tmp_path / "inter.txt"
        intra.write_text("0.8\n0.8\n")
        inter.write_text("0.4\n0.4\n")
        out = tmp_path / "d"
        assert main(["meta", "distinguish", "--intra", str(intra),
                     "--inter", str(inter), "--out", str(out)]) == 0
        assert (out / "distinguish.csv").read_text().splitlines()[1] == "2.0"

    def test_seed_recorded(self, mini_paths, tmp_path):
        instances, _ = mini_paths
        out = tmp_path / "seeded"
        assert main(["--seed", "1234", "score", "--instances", str(instances),
                     "--out", str(out), "--metrics", "em"]) == 0
        assert "seed: 1234" in (out / "summary.md").read_text()
