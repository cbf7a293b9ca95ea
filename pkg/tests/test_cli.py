import json

import numpy as np
import pytest

from qeraser.cli import main
from qeraser.config import (ConfigSchemaError, ExperimentConfig, dump_config, load_config,
                            loads_config, preset_config)
from qeraser.screen import Pattern


def write_config(tmp_path, preset, name=None, **changes):
    cfg = preset_config(preset, pair_count=20_000).with_output_dir(tmp_path / f"out_{name or preset}")
    if changes:
        d = cfg.to_dict()
        d.update(changes)
        cfg = ExperimentConfig.from_dict(d)
    path = tmp_path / f"{name or preset}.yaml"
    path.write_text(dump_config(cfg))
    return path, cfg


class TestConfig:
    @pytest.mark.parametrize("preset", ["young", "marked", "eraser", "delayed"])
    def test_init_round_trip(self, tmp_path, preset):
        path = tmp_path / "c.yaml"
        assert main(["init", "--preset", preset, "--config", str(path), "--seed", "9"]) == 0
        cfg = load_config(path)
        assert cfg.preset == preset
        assert loads_config(dump_config(cfg)) == cfg
        if preset == "delayed":
            assert cfg.seed == 9

    def test_init_refuses_overwrite(self, tmp_path):
        path = tmp_path / "c.yaml"
        path.write_text("x")
        assert main(["init", "--config", str(path)]) == 1
        assert path.read_text() == "x"

    def test_young_forbids_qwps(self):
        with pytest.raises(ConfigSchemaError):
            ExperimentConfig(preset="young", qwp_angles=(0.1, 0.2))

    def test_marked_requires_qwps(self):
        with pytest.raises(ConfigSchemaError):
            ExperimentConfig(preset="marked", qwp_angles=None)

    def test_schema_error_reports_line_and_field(self, tmp_path):
        path, _ = write_config(tmp_path, "delayed")
        text = path.read_text().replace("pair_count: 20000", "pair_count: -5")
        lineno = next(i for i, l in enumerate(text.splitlines(), 1) if "pair_count" in l)
        with pytest.raises(ConfigSchemaError) as err:
            loads_config(text, "x.yaml")
        assert err.value.line == lineno
        assert err.value.field == "sampler.pair_count"

    def test_unknown_key(self):
        text = dump_config(preset_config("eraser")) + "colour: blue\n"
        with pytest.raises(ConfigSchemaError) as err:
            loads_config(text)
        assert err.value.field == "colour"
        assert err.value.line == len(text.splitlines())

    def test_hash_ignores_output_dir_but_not_seed(self):
        cfg = preset_config("delayed")
        assert cfg.hash() == cfg.with_output_dir("elsewhere").hash()
        assert cfg.hash() != cfg.with_seed(cfg.seed + 1).hash()


class TestRun:
    def test_young(self, tmp_path):
        path, cfg = write_config(tmp_path, "young")
        assert main(["run", "--config", str(path)]) == 0
        report = json.loads((tmp_path / "out_young" / "report.json").read_text())
        assert report["visibility"] == pytest.approx(1, abs=1e-9)
        assert report["distinguishability"] == pytest.approx(0, abs=1e-12)
        p = Pattern.from_csv(tmp_path / "out_young" / "pattern_none.csv")
        assert p.density.size == cfg.grid_points

    def test_marked(self, tmp_path):
        path, _ = write_config(tmp_path, "marked")
        assert main(["run", "--config", str(path)]) == 0
        report = json.loads((tmp_path / "out_marked" / "report.json").read_text())
        assert report["visibility"] < 1e-9
        assert report["duality"]["bound_ok"]

    def test_eraser_sum(self, tmp_path):
        path, _ = write_config(tmp_path, "eraser")
        assert main(["run", "--config", str(path)]) == 0
        out = tmp_path / "out_eraser"
        report = json.loads((out / "report.json").read_text())
        assert report["patterns"]["+45"]["visibility"] == pytest.approx(1, abs=1e-9)
        assert report["patterns"]["-45"]["visibility"] == pytest.approx(1, abs=1e-9)
        assert report["condition_sum_residual"] < 1e-9
        plus = Pattern.from_csv(out / "pattern_b_plus45.csv")
        minus = Pattern.from_csv(out / "pattern_b_minus45.csv")
        env = Pattern.from_csv(out / "pattern_none.csv")
        pp, pm = report["patterns"]["+45"]["probability"], report["patterns"]["-45"]["probability"]
        assert np.max(np.abs(pp * plus.density + pm * minus.density - env.density)) < 1e-9

    def test_outputs_deterministic(self, tmp_path):
        path, _ = write_config(tmp_path, "delayed")
        assert main(["run", "--config", str(path), "--out", str(tmp_path / "r1")]) == 0
        assert main(["run", "--config", str(path), "--out", str(tmp_path / "r2")]) == 0
        for name in ("events_a.csv", "events_b.csv", "ledger.csv", "report.json", "pattern_none.csv"):
            assert (tmp_path / "r1" / name).read_bytes() == (tmp_path / "r2" / name).read_bytes()

    def test_schema_violation_exit_2(self, tmp_path, capsys):
        path, _ = write_config(tmp_path, "eraser")
        path.write_text(path.read_text().replace("preset: eraser", "preset: quantum"))
        assert main(["run", "--config", str(path)]) == 2
        err = capsys.readouterr().err
        assert "preset" in err and f"{path}:3" in err

    def test_polarizer_in_slit_pair_exit_3(self, tmp_path, capsys):
        elements = [{"type": "polarizer", "basis": "HV", "outcome": "first"}, {"type": "identity"}]
        path, _ = write_config(tmp_path, "marked", slit_elements=elements)
        assert main(["run", "--config", str(path)]) == 3
        assert "unitary" in capsys.readouterr().err


@pytest.fixture(scope="module")
def delayed_run(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("delayed")
    path, _ = write_config(tmp, "delayed")
    assert main(["run", "--config", str(path)]) == 0
    return tmp / "out_delayed"


class TestReport:
    def test_plus45(self, delayed_run, capsys):
        assert main(["report", str(delayed_run / "ledger.csv"), "+45", "all"]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["subsets"]["+45"]["visibility"] > 0.9
        assert out["subsets"]["all"]["visibility"] < out["subsets"]["all"]["statistical_floor"]
        assert out["delayed_equals_prompt"]["pass"]
        assert out["ledger_unchanged"]

    def test_hash_mismatch_exit_4(self, delayed_run):
        assert main(["report", str(delayed_run / "ledger.csv"), "all", "--seed", "77"]) == 4

    def test_empty_ledger(self, tmp_path, capsys):
        path, _ = write_config(tmp_path, "delayed")
        text = path.read_text().replace("pair_count: 20000", "pair_count: 0")
        path.write_text(text)
        assert main(["run", "--config", str(path)]) == 0
        capsys.readouterr()
        assert main(["report", str(tmp_path / "out_delayed" / "ledger.csv")]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["records"] == 0
        assert all(e["count"] == 0 for e in out["subsets"].values())


def test_sweep(tmp_path, capsys):
    path, _ = write_config(tmp_path, "marked")
    assert main(["sweep", "--config", str(path), "--points", "9"]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["bound_ok"] and summary["points"] == 9
    rows = np.loadtxt(summary["file"], delimiter=",", skiprows=1)
    assert rows.shape == (9, 4)
    assert main(["sweep", "--config", str(path), "--kind", "retardance", "--points", "5"]) == 0
