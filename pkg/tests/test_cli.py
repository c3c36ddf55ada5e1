import json
import subprocess
import sys

import numpy as np
import pytest

from snmqd import cli, harness
from snmqd.data import write_csv, synth_sinusoid

FAST = "m = 2\nepochs = 20\ntrials = 2\nn_samples = 120\n"


@pytest.fixture
def fast_config(tmp_path):
    p = tmp_path / "fast.cfg"
    p.write_text(FAST)
    return str(p)


@pytest.fixture
def toy_csv(tmp_path):
    p = tmp_path / "toy.csv"
    write_csv(synth_sinusoid(120, seed=1), p)
    return str(p)


class TestExitCodes:
    def test_no_command(self):
        assert cli.main([]) == cli.EXIT_USAGE

    def test_bad_flag(self):
        with pytest.raises(SystemExit) as exc:
            cli.main(["experiment", "--frobnicate"])
        assert exc.value.code == cli.EXIT_USAGE

    def test_bad_aggregation(self):
        with pytest.raises(SystemExit) as exc:
            cli.main(["experiment", "--aggregation", "median"])
        assert exc.value.code == cli.EXIT_USAGE

    def test_bad_config_key(self, tmp_path):
        p = tmp_path / "bad.cfg"
        p.write_text("nonsense = 1\n")
        assert cli.main(["experiment", "--config", str(p)]) == cli.EXIT_USAGE

    def test_missing_data_file(self, tmp_path):
        assert cli.main(["train", "--dataset", "yacht", "--data", str(tmp_path / "none.csv")]) == cli.EXIT_IO

    def test_malformed_data_file(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("1,2\n3,x\n")
        assert cli.main(["train", "--data", str(p)]) == cli.EXIT_IO

    def test_missing_config_file(self, tmp_path):
        assert cli.main(["experiment", "--config", str(tmp_path / "nope.cfg")]) == cli.EXIT_IO

    def test_training_failure(self, tmp_path, toy_csv):
        # width term only: intervals collapse, training coverage falls below 0.5
        p = tmp_path / "collapse.cfg"
        p.write_text("m = 1\nepochs = 60\nlambda1 = 0\nlambda2 = 0\nxi = 0\nretry_limit = 0\n")
        code = cli.main(["train", "--config", str(p), "--data", toy_csv, "--out", str(tmp_path / "e")])
        assert code == cli.EXIT_TRAINING


class TestCommands:
    def test_print_schema(self, capsys):
        assert cli.main(["--print-schema"]) == 0
        assert "lambda1" in capsys.readouterr().out.split()

    def test_train_then_evaluate(self, tmp_path, fast_config, toy_csv, capsys):
        out = tmp_path / "ens"
        assert cli.main(["train", "--config", fast_config, "--data", toy_csv, "--out", str(out)]) == 0
        assert (out / "manifest.json").exists()
        rep = tmp_path / "rep.json"
        assert cli.main(["evaluate", "--checkpoint", str(out), "--data", toy_csv, "--aggregation", "sem", "--out", str(rep)]) == 0
        d = json.loads(rep.read_text())
        assert d["n"] == 120 and 0 <= d["picp"] <= 1

    def test_experiment_json(self, tmp_path, fast_config):
        out = tmp_path / "r.json"
        assert cli.main(["experiment", "--config", fast_config, "--seed", "3", "--format", "json", "--out", str(out)]) == 0
        res = harness.read_report_json(out.read_text())[0]
        assert len(res.trials) == 2

    def test_experiment_aggregation_flag(self, tmp_path, fast_config):
        out = tmp_path / "r.csv"
        assert cli.main(["experiment", "--config", fast_config, "--aggregation", "sem-paper", "--format", "csv", "--out", str(out)]) == 0
        aggs = {line.split(",")[2] for line in out.read_text().splitlines()[1:]}
        assert aggs == {"sem-paper", "none"}

    def test_toy_writes_plot_data(self, tmp_path, fast_config, capsys):
        out = tmp_path / "toy"
        assert cli.main(["toy", "--config", fast_config, "--out", str(out)]) == 0
        plots = sorted(out.glob("plot_trial*.tsv"))
        assert len(plots) == 2
        table = harness.read_plot_data(plots[0].read_text())
        assert table.shape[1] == 5 and np.all(np.diff(table[:, 0]) >= 0)
        assert "PICP" in capsys.readouterr().out

    def test_hps(self, tmp_path, toy_csv):
        p = tmp_path / "h.cfg"
        p.write_text("m = 1\n")
        out = tmp_path / "h.json"
        assert cli.main(["hps", "--config", str(p), "--data", toy_csv, "--budget", "2", "--out", str(out)]) == 0
        d = json.loads(out.read_text())
        assert len(d["scores"]) == 2 and d["selected"] in (0, 1)

    def test_sensitivity(self, tmp_path, toy_csv):
        p = tmp_path / "s.cfg"
        p.write_text("epochs = 5\n")
        out = tmp_path / "s.tsv"
        assert cli.main(["sensitivity", "--config", str(p), "--data", toy_csv, "--grid", "0.5,0.9", "--out", str(out)]) == 0
        rows = out.read_text().splitlines()
        assert len(rows) == 1 + 2 * 2 * 2

    def test_console_script(self):
        proc = subprocess.run([sys.executable, "-m", "snmqd.cli", "--print-schema"], capture_output=True, text=True)
        assert proc.returncode == 0 and "xi" in proc.stdout.split()
