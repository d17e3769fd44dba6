import json
import logging
import shlex
import sys

import pytest

from cli import main
from modules.logging_setup import TqdmHandler
from modules.pipeline import read_jsonl
from tests.conftest import ECHO


@pytest.fixture
def base_args(world_files, tmp_path):
    args = ["--manifest", world_files.manifest, "--output-dir", str(tmp_path / "out"), "-q"]
    for lang, path in world_files.lexicons.items():
        args += ["--lexicon", f"{lang}={path}"]
    return args


@pytest.fixture(autouse=True)
def detach_log_handlers():
    yield
    root = logging.getLogger()
    for handler in list(root.handlers):
        if isinstance(handler, TqdmHandler):
            root.removeHandler(handler)


def multiway(tmp_path, pair="de-fr"):
    return list(read_jsonl(tmp_path / "out" / "multiway" / f"{pair}.jsonl"))


class TestExitCodes:
    def test_no_command(self, capsys):
        assert main([]) == 1
        assert "error:" in capsys.readouterr().err

    def test_unknown_flag(self, base_args):
        assert main(["extract", "de", "fr", "--gamma-typo", "0.2"] + base_args) == 1

    def test_invalid_value(self, base_args):
        assert main(["extract", "de", "fr", "--gamma", "1.5"] + base_args) == 1

    def test_bad_lexicon_flag(self, base_args):
        assert main(["run", "--lexicon", "fr"] + base_args) == 1

    def test_line_count_mismatch(self, world_files, tmp_path, capsys):
        data = tmp_path / "data"
        lines = (data / "en-de.de").read_text(encoding="utf-8").splitlines()
        (data / "en-de.de").write_text("\n".join(lines[:-1]) + "\n", encoding="utf-8")
        assert main(["run", "--manifest", world_files.manifest, "--output-dir", str(tmp_path / "out"), "-q"]) == 2
        assert "error:" in capsys.readouterr().err

    def test_unreachable_generator(self, base_args, tmp_path):
        config = tmp_path / "fast.json"
        config.write_text(json.dumps({"transport": {"max_retries": 0, "timeout": 1.0}}), encoding="utf-8")
        remote = ["--generator", "remote", "--transport", "http", "--url", "http://127.0.0.1:9/generate",
                  "--config", str(config)]
        assert main(["extract", "de", "fr"] + base_args) == 0
        assert main(["generate", "de", "fr"] + remote + base_args) == 3


class TestCommands:
    def test_run(self, world_files, base_args, tmp_path, capsys):
        assert main(["run"] + base_args) == 0
        assert capsys.readouterr().out.strip().endswith("run_report.json")
        records = multiway(tmp_path)
        assert [r["right"] for r in records] == [e["right"] for e in world_files.world.expected]

    def test_flags_override_config_file(self, world_files, base_args, tmp_path, capsys):
        config = tmp_path / "run.json"
        config.write_text(json.dumps({"gamma": 0.5, "seed": 99}), encoding="utf-8")
        assert main(["extract", "de", "fr", "--config", str(config), "--gamma", "0.0"] + base_args) == 0
        result = json.loads(capsys.readouterr().out)
        assert result["pair"] == "de-fr"
        assert result["candidates"] == 50

    def test_extract_generate_assemble(self, world_files, base_args, tmp_path, capsys):
        assert main(["extract", "fr", "de"] + base_args) == 0
        assert main(["generate", "de", "fr"] + base_args) == 0
        hypotheses = (tmp_path / "out" / "hypotheses" / "de-fr.txt").read_text(encoding="utf-8").splitlines()
        assert len(hypotheses) == 150
        capsys.readouterr()
        assert main(["assemble", "de", "fr"] + base_args) == 0
        tally = json.loads(capsys.readouterr().out)
        assert tally["accepted"] == 150
        assert [r["pivot"] for r in multiway(tmp_path)] == [e["pivot"] for e in world_files.world.expected]

    def test_remote_stdio_generator(self, base_args, tmp_path, capsys):
        command = " ".join(shlex.quote(part) for part in (sys.executable, ECHO, "--after-sep"))
        remote = ["--generator", "remote", "--transport", "stdio", "--command", command]
        assert main(["extract", "de", "fr"] + base_args) == 0
        assert main(["generate", "de", "fr"] + remote + base_args) == 0
        assert main(["assemble", "de", "fr"] + remote + base_args) == 0
        candidates = list(read_jsonl(tmp_path / "out" / "candidates" / "de-fr.jsonl"))
        assert [r["right"] for r in multiway(tmp_path)] == [c["y2"] for c in candidates]

    def test_assemble_before_generate(self, base_args):
        assert main(["extract", "de", "fr"] + base_args) == 0
        assert main(["assemble", "de", "fr"] + base_args) == 1

    def test_train_data_and_noise(self, base_args, tmp_path):
        assert main(["train-data", "fr", "--jsonl", str(tmp_path / "fr.jsonl")] + base_args) == 0
        assert (tmp_path / "out" / "training" / "en-fr.src").exists()
        assert len((tmp_path / "fr.jsonl").read_text(encoding="utf-8").splitlines()) == 500
        assert main(["noise", "fr", "--out", str(tmp_path / "noised.txt"), "--beta", "0"] + base_args) == 0
        original = (tmp_path / "data" / "en-fr.fr").read_text(encoding="utf-8")
        assert (tmp_path / "noised.txt").read_text(encoding="utf-8") == original

    def test_stats_after_run(self, base_args, tmp_path, capsys):
        assert main(["run"] + base_args) == 0
        capsys.readouterr()
        html = tmp_path / "stats.html"
        assert main(["stats", "--which", "baseline", "--html", str(html)] + base_args) == 0
        rows = capsys.readouterr().out.splitlines()
        assert rows[0].split() == ["en", "de", "fr"]
        assert rows[2].split() == ["de", "500", "50"]
        assert html.exists()

    def test_stats_without_report(self, base_args):
        assert main(["stats"] + base_args) == 1

    def test_mix_needs_no_multiway_corpora(self, base_args, tmp_path, capsys):
        assert main(["mix", "--mix-total", "100", "--mix-key", "target"] + base_args) == 0
        plan = json.loads(capsys.readouterr().out)
        assert sum(plan["counts"].values()) == 100
        assert set(plan["counts"]) == {"de", "en", "fr"}

    def test_sweep(self, base_args, tmp_path, capsys):
        out = tmp_path / "sweep.json"
        assert main(["sweep", "de", "fr", "--gammas", "0", "0.3", "--betas", "--json", str(out)] + base_args) == 0
        result = json.loads(out.read_text(encoding="utf-8"))
        assert [row["candidates"] for row in result["extraction"]] == [50, 150]
        assert result["noising"] == []
        assert "gamma" in capsys.readouterr().out
