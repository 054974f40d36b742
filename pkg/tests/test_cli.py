import json

import numpy as np
import pytest

from spectral_tuner.cli import main
from spectral_tuner.config import ConfigError, dump_config, parse_config
from spectral_tuner.tasks import write_pnm


def test_minimal_multisine_defaults():
    cfg = parse_config("task = multisine\n", env={})
    assert (cfg.mode, cfg.p, cfg.strategy) == ("adam", 8, "slr")
    assert cfg.preset == "halved" and cfg.seed == 0


def test_end_before_start_names_both_keys():
    with pytest.raises(ConfigError, match="end.*start"):
        parse_config("task = multisine\nstart = 4\nend = 2\n")


def test_unknown_missing_and_mistyped_keys():
    with pytest.raises(ConfigError, match="colour"):
        parse_config("task = multisine\ncolour = red\n")
    with pytest.raises(ConfigError, match="task"):
        parse_config("p = 8\n")
    with pytest.raises(ConfigError, match="p: expected int"):
        parse_config("task = multisine\np = eight\n")
    with pytest.raises(ConfigError, match="image"):
        parse_config("task = image\n")


@pytest.mark.parametrize("text", [
    "task = multisine\nend = 3\n",
    "[run]\ntask = circle\nwidth = 512  # narrower\nvariants = none,iga\n",
    "task = image\nimage = x.ppm\nadjustment = none\n",
])
def test_dump_round_trip(text):
    cfg = parse_config(text, env={})
    assert parse_config(dump_config(cfg), env={}) == cfg


def test_overrides_and_seed_fallback():
    cfg = parse_config("task = multisine\np = 4\n", {"p": "16"}, env={"SPECTRAL_TUNER_SEED": "9"})
    assert cfg.p == 16 and cfg.seed == 9
    assert parse_config("task = multisine\nseed = 2\n", env={"SPECTRAL_TUNER_SEED": "9"}).seed == 2


def test_image_learning_rate_defaults():
    assert parse_config("task = image\nimage = a.ppm\n").lr == 5e-3
    assert parse_config("task = image\nimage = a.ppm\nadjustment = none\n").lr == 1e-3
    assert parse_config("task = image\nimage = a.ppm\nactivation = sine\n").lr == 1e-3


def test_unknown_subcommand_exits_2(capsys):
    with pytest.raises(SystemExit) as info:
        main(["frobnicate"])
    assert info.value.code == 2
    assert "usage" in capsys.readouterr().err


def test_bad_config_is_one_line_error(tmp_path, capsys):
    cfg = tmp_path / "c.ini"
    cfg.write_text("task = multisine\nbogus = 1\n")
    assert main(["fit1d", "--config", str(cfg), "--out", str(tmp_path)]) == 1
    err = capsys.readouterr().err.strip()
    assert "bogus" in err and "\n" not in err


def test_fit1d_run_directory_and_reproduction(tmp_path):
    args = ["fit1d", "--out", str(tmp_path), "--name", "a", "--preset", "full", "--end", "6", "--p", "8",
            "--num-points", "256", "--width", "16", "--iters", "30", "--trace-every", "10", "--seed", "3"]
    assert main(args) == 0
    run = tmp_path / "a"
    manifest = json.loads((run / "manifest.json").read_text())
    assert manifest["status"] == "complete"
    assert manifest["config"]["end"] == 6 and manifest["config"]["mode"] == "adam"
    assert manifest["config"]["strategy"] == "slr"
    assert manifest["peak_memory_mb"] > 0
    header = (run / "spectra.csv").read_text().splitlines()[0]
    assert header == "iteration,loss,delta_k_20,delta_k_40,delta_k_60,delta_k_80,delta_k_100,delta_k_120"
    assert main(["fit1d", "--config", str(run / "manifest.json"), "--out", str(tmp_path), "--name", "b"]) == 0
    for f in ("metrics.csv", "spectra.csv"):
        assert (run / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_ntk_sim_writes_every_variant(tmp_path):
    assert main(["ntk-sim", "--out", str(tmp_path), "--name", "s", "--width", "64", "--end", "4",
                 "--num-points", "32", "--iters", "5", "--num-projections", "3"]) == 0
    run = tmp_path / "s"
    rows = (run / "metrics.csv").read_text().splitlines()
    assert [r.split(",")[0] for r in rows[1:]] == ["none", "analytic", "empirical", "iga"]
    for v in ("none", "analytic", "empirical", "iga"):
        assert (run / v / "spectra.csv").read_text().splitlines()[0].endswith("proj_1,proj_2,proj_3")


def test_fit2d_reconstruction_and_report(tmp_path, capsys):
    img = tmp_path / "x.ppm"
    write_pnm(img, np.random.default_rng(0).random((16, 16, 3)))
    assert main(["fit2d", "--image", str(img), "--patch", "4", "--end", "4", "--iters", "3", "--width", "8",
                 "--out", str(tmp_path), "--name", "img"]) == 0
    run = tmp_path / "img"
    manifest = json.loads((run / "manifest.json").read_text())
    assert manifest["config"]["p"] == 16
    assert list(manifest["input_digests"]) == [str(img)]
    assert (run / "reconstruction.ppm").read_bytes().startswith(b"P6")
    capsys.readouterr()
    assert main(["report", str(run)]) == 0
    assert "psnr=" in capsys.readouterr().out


def test_selftest_passes(capsys):
    assert main(["selftest"]) == 0
    assert "FAIL" not in capsys.readouterr().out
