import json
import subprocess
import sys

import numpy as np
import pytest

from bandcorrect import cli
from bandcorrect.cli import RunConfig, apply_overrides, main

SMALL = ["--set", "samples_per_class=6", "--set", "hidden_sizes=5,10", "--set", "train.epochs=3",
         "--set", "confusion_runs=3"]


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def trained_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    for n in range(5):
        assert run("dataset", "--band", n, "--out", out, *SMALL) == 0
        assert run("dataset", "--band", n, "--split", "test", "--out", out, *SMALL) == 0
        assert run("train", "--band", n, "--out", out, *SMALL) == 0
    return out


class TestConfig:
    def test_defaults(self):
        c = RunConfig()
        assert (c.nu_max, c.n_bands_max, c.samples_per_class, c.confusion_runs) == (7.5, 4, 1000, 50)
        assert c.attenuation_levels == (1.0, 0.75, 0.5, 0.25, 0.0)

    def test_round_trip(self):
        c = apply_overrides(RunConfig(), ["noise.gaussian_sigma_fraction=0.02", "seed=7", "hidden_sizes=5,15"])
        assert RunConfig.loads(c.dumps()) == c

    def test_invalid_levels(self):
        with pytest.raises(ValueError, match="descending"):
            RunConfig(attenuation_levels=(0.5, 1.0, 0.0))
        with pytest.raises(ValueError):
            RunConfig(n_bands_max=0)

    @pytest.mark.parametrize("bad", ["nope=1", "noise.nope=1", "a.b.c=1", "noequals"])
    def test_bad_overrides(self, bad):
        with pytest.raises(ValueError):
            apply_overrides(RunConfig(), [bad])

    def test_config_command_writes_file(self, tmp_path, capsys):
        path = tmp_path / "c.json"
        assert run("config", "--write", path, "--seed", 3) == 0
        assert RunConfig.loads(path.read_text()).seed == 3
        assert run("config", "--config", path) == 0
        assert json.loads(capsys.readouterr().out.split("\n", 1)[1])["seed"] == 3

    def test_unknown_key_in_file(self, tmp_path, capsys):
        path = tmp_path / "c.json"
        path.write_text(json.dumps({"bogus": 1}))
        assert run("config", "--config", path) == 1
        assert "unknown config keys" in capsys.readouterr().err


class TestSynthDecompose:
    def test_synth(self, tmp_path):
        assert run("synth", "--out", tmp_path) == 0
        w = np.loadtxt(tmp_path / "waveform.csv", delimiter=",", skiprows=1)
        assert w.shape == (10000, 2) and w[:, 1].max() == pytest.approx(1.0, abs=1e-6)
        assert (tmp_path / "spectrum.csv").read_text().startswith("nu,re,im,mag_normalized")

    def test_decompose(self, tmp_path):
        assert run("decompose", "--out", tmp_path) == 0
        f = np.loadtxt(tmp_path / "filter_sum.csv", delimiter=",", skiprows=1)
        inside = np.abs(f[:, 0]) <= 7.5
        assert np.allclose(f[inside, 1], 1.0, atol=1e-12)
        w = np.loadtxt(tmp_path / "wavelet_sum.csv", delimiter=",", skiprows=1)[:, 1]
        orig = cli.RunConfig().original().samples
        assert 100 * np.sqrt(np.mean((w - orig) ** 2)) < 1.0
        assert len(list(tmp_path.glob("wavelet_band*.csv"))) == 5

    def test_decompose_two_bands(self, tmp_path):
        assert run("decompose", "--out", tmp_path, "--set", "n_bands_max=1") == 0
        assert sorted(p.name for p in tmp_path.glob("filter_band*.csv")) == ["filter_band0.csv", "filter_band1.csv"]


class TestPipeline:
    def test_dataset_shape_and_reproducible(self, trained_dir, tmp_path):
        path = trained_dir / "dataset_band0_train.csv"
        data = np.loadtxt(path, delimiter=",", skiprows=1)
        assert data.shape == (36, 31)
        assert np.array_equal(np.bincount(data[:, -1].astype(int))[1:], [6] * 6)
        assert run("dataset", "--band", 0, "--out", tmp_path, *SMALL) == 0
        assert (tmp_path / "dataset_band0_train.csv").read_bytes() == path.read_bytes()

    def test_train_and_test_differ(self, trained_dir):
        a = (trained_dir / "dataset_band0_train.csv").read_bytes()
        b = (trained_dir / "dataset_band0_test.csv").read_bytes()
        assert a != b

    def test_sweep_report(self, trained_dir):
        rows = np.loadtxt(trained_dir / "sweep_band2.csv", delimiter=",", skiprows=1)
        assert list(rows[:, 0]) == [5, 10]
        chosen = rows[rows[:, 2] == 1]
        assert len(chosen) == 1 and chosen[0, 1] == rows[:, 1].min()
        model = json.loads((trained_dir / "model_band2.json").read_text())
        assert model["hidden_size"] == int(chosen[0, 0]) and model["band_index"] == 2

    def test_retrain_reproduces_weights(self, trained_dir, tmp_path):
        assert run("train", "--band", 1, "--out", tmp_path, "--dataset", trained_dir / "dataset_band1_train.csv",
                   *SMALL) == 0
        a = json.loads((trained_dir / "model_band1.json").read_text())
        b = json.loads((tmp_path / "model_band1.json").read_text())
        assert a == b

    def test_eval(self, trained_dir):
        assert run("eval", "--band", 0, "--out", trained_dir, *SMALL) == 0
        lines = (trained_dir / "confusion_band0.csv").read_text().splitlines()
        assert lines[0].split(",")[1:] == ["100%", "75%", "50%", "25%", "0%", "NB"]
        counts = np.array([[float(v) for v in line.split(",")[1:]] for line in lines[1:]])
        assert np.allclose(counts.sum(axis=1), 6)

    def test_correct(self, trained_dir, tmp_path):
        assert run("correct", "--system-factors", "0.5,0.125,0,0,0", "--models-dir", trained_dir,
                   "--out", tmp_path, "--repeats", 2, *SMALL) == 0
        report = json.loads((tmp_path / "correction_report.json").read_text())
        assert len(report["correction_factors"]) == 5
        assert set(report["probabilities"]) == {f"band{n}" for n in range(5)}
        assert report["e_rms_percent"] >= 0 and report["repeats"] == 2
        for name in ("original", "system_output", "corrected", "corrected_output", "system_response",
                     "compensation", "acquired_0", "acquired_1"):
            assert (tmp_path / f"{name}.csv").exists()

    def test_correct_deterministic(self, trained_dir, tmp_path):
        for sub in ("a", "b"):
            assert run("correct", "--system-factors", "0,0,0,0,0", "--models-dir", trained_dir,
                       "--out", tmp_path / sub, "--set", "noise.gaussian_sigma_fraction=0") == 0
        ra = json.loads((tmp_path / "a" / "correction_report.json").read_text())
        rb = json.loads((tmp_path / "b" / "correction_report.json").read_text())
        assert ra["correction_factors"] == rb["correction_factors"]


class TestErrors:
    @pytest.mark.parametrize("argv, msg", [
        (["correct", "--system-factors", "0.1,0.2"], "expected 5 system factors"),
        (["correct", "--system-factors", "a,b,c,d,e"], "cannot parse"),
        (["dataset", "--band", "9"], "band index 9"),
        (["train", "--band", "0"], "No such file"),
        (["eval", "--band", "0"], "No such file"),
        (["synth", "--set", "sinc.bandwidth=-1"], "bandwidth"),
    ])
    def test_nonzero_exit_with_diagnostic(self, tmp_path, capsys, argv, msg):
        assert run(*argv, "--out", tmp_path) == 1
        err = capsys.readouterr().err
        assert err.startswith(f"bandcorrect {argv[0]}: error:") and msg in err

    def test_missing_subcommand(self):
        with pytest.raises(SystemExit) as e:
            main([])
        assert e.value.code != 0

    def test_module_entry_point(self, tmp_path):
        r = subprocess.run([sys.executable, "-m", "bandcorrect", "config"], capture_output=True, text=True)
        assert r.returncode == 0 and '"nu_max": 7.5' in r.stdout


def test_benchmark_report_shape():
    rows = cli.run_benchmark(sizes=(500,), repeats=1)
    assert rows[0]["samples_n"] == 500 and rows[0]["samples_2n"] == 1000
    for stage in cli.BENCH_STAGES:
        assert rows[0][f"{stage}_doubling_ratio"] > 0
