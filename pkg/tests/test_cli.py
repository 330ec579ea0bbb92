import json
import os

import numpy as np

from erpdn import fileformats
from erpdn.cli import main
from erpdn.config import DESK_PRESET

TINY = {
    **DESK_PRESET,
    "scene_count": 16,
    "clusters": 8,
    "plan_epochs": 4,
    "calib_sweeps": 1,
    "classifier_epochs": 3,
}


def write_config(tmp_path, **overrides):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({**TINY, **overrides}))
    return str(path)


def tree_bytes(root):
    out = {}
    for dirpath, _, files in os.walk(root):
        for name in sorted(files):
            full = os.path.join(dirpath, name)
            out[os.path.relpath(full, root)] = open(full, "rb").read()
    return out


def test_help_exits_zero_for_every_subcommand(capsys):
    assert main(["--help"]) == 0
    for sub in ["synth", "features", "amp-fit", "plan-train", "plan-recognize",
                "prda", "train", "eval", "export-map"]:
        assert main([sub, "--help"]) == 0, sub
        assert "--" in capsys.readouterr().out


def test_unknown_subcommand_usage_error(capsys):
    assert main(["bogus"]) == 1


def test_missing_out_usage_error(tmp_path, capsys):
    assert main(["synth", "--seed", "1"]) == 1


def test_unknown_flag_usage_error(capsys):
    assert main(["synth", "--frobnicate", "x"]) == 1


def test_bad_config_data_error(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"not_a_key": 1}))
    code = main(["synth", "--config", str(cfg), "--out", str(tmp_path / "d")])
    assert code == 2


def test_missing_data_dir_data_error(tmp_path):
    code = main(["train", "--data", str(tmp_path / "nope"), "--out", str(tmp_path / "o")])
    assert code == 2


def test_synth_writes_dataset(tmp_path, capsys):
    cfg = write_config(tmp_path)
    out = tmp_path / "data"
    assert main(["synth", "--config", cfg, "--seed", "5", "--out", str(out)]) == 0
    subdirs = [d for d in os.listdir(out) if d.startswith("sample_")]
    assert len(subdirs) == 16


def test_synth_deterministic_bytes(tmp_path):
    cfg = write_config(tmp_path)
    a = tmp_path / "a"
    b = tmp_path / "b"
    assert main(["synth", "--config", cfg, "--seed", "5", "--out", str(a)]) == 0
    assert main(["synth", "--config", cfg, "--seed", "5", "--out", str(b)]) == 0
    assert tree_bytes(a) == tree_bytes(b)


def test_features_and_amp_fit_round_trip(tmp_path, capsys):
    cfg = write_config(tmp_path)
    data = tmp_path / "data"
    main(["synth", "--config", cfg, "--seed", "5", "--out", str(data)])
    frames = data / "sample_0000"
    feats = tmp_path / "feats"
    assert main(["features", "--frames", str(frames), "--kind", "hod",
                 "--out", str(feats), "--config", cfg]) == 0
    matrix = fileformats.load_tensor(feats / "features.pdnt")
    assert matrix.shape[1] == 32

    lib_a = tmp_path / "lib_a"
    lib_b = tmp_path / "lib_b"
    for out in (lib_a, lib_b):
        assert main(["amp-fit", "--features", str(feats / "features.pdnt"),
                     "--clusters", "4", "--seed", "7", "--out", str(out),
                     "--config", cfg]) == 0
    assert tree_bytes(lib_a) == tree_bytes(lib_b)


def test_full_toolchain(tmp_path, capsys):
    cfg = write_config(tmp_path)
    data = tmp_path / "data"
    models = tmp_path / "models"
    assert main(["synth", "--config", cfg, "--seed", "5", "--out", str(data)]) == 0
    assert main(["train", "--config", cfg, "--seed", "5", "--data", str(data),
                 "--out", str(models)]) == 0
    assert (models / "amp_library.json").exists()
    assert (models / "pdn.json").exists()
    assert (models / "metrics.jsonl").exists()
    assert (models / "loss_curves.png").exists()
    assert (models / "ap.png").exists()

    # attention maps + conservation recheck on one sample
    maps = tmp_path / "maps"
    assert main(["prda", "--config", cfg, "--data", str(data / "sample_0000"),
                 "--models", str(models), "--out", str(maps)]) == 0
    records = [json.loads(line) for line in (maps / "prda.jsonl").read_text().splitlines()]
    assert records and "attention_sum" in records[0]
    assert abs(records[0]["attention_sum"] - records[0]["expected_sum"]) <= 1e-9
    tensor = fileformats.load_tensor(maps / "prda_0000.pdnt")
    assert tensor.shape == (64, 64)
    assert (maps / "prda_0000.pgm").exists()
    assert (maps / "prda_0000.png").exists()

    # evaluation emits metrics and figures
    evald = tmp_path / "eval"
    assert main(["eval", "--config", cfg, "--seed", "5", "--data", str(data),
                 "--models", str(models), "--out", str(evald)]) == 0
    lines = [json.loads(l) for l in (evald / "metrics.jsonl").read_text().splitlines()]
    assert any("mean_ap" in line for line in lines)

    # export a map
    exp = tmp_path / "exports"
    assert main(["export-map", "--tensor", str(maps / "prda_0000.pdnt"),
                 "--out", str(exp)]) == 0
    assert (exp / "prda_0000.pgm").exists()
    assert (exp / "prda_0000.png").exists()


def test_prda_threads_do_not_change_output(tmp_path, capsys):
    cfg = write_config(tmp_path, scene_count=8)
    data = tmp_path / "data"
    models = tmp_path / "models"
    main(["synth", "--config", cfg, "--seed", "3", "--out", str(data)])
    main(["train", "--config", cfg, "--seed", "3", "--data", str(data),
          "--out", str(models)])
    serial = tmp_path / "serial"
    threaded = tmp_path / "threaded"
    assert main(["prda", "--config", cfg, "--data", str(data), "--models",
                 str(models), "--out", str(serial)]) == 0
    assert main(["prda", "--config", cfg, "--data", str(data), "--models",
                 str(models), "--out", str(threaded), "--threads", "3"]) == 0
    assert tree_bytes(serial) == tree_bytes(threaded)


def test_features_accepts_pdnt_frames(tmp_path, capsys):
    cfg = write_config(tmp_path)
    frames = tmp_path / "frames"
    frames.mkdir()
    rng = np.random.default_rng(0)
    for t in range(3):
        fileformats.save_tensor(frames / f"frame_{t}.pdnt", rng.uniform(size=(16, 16, 3)))
    out = tmp_path / "feats"
    assert main(["features", "--frames", str(frames), "--kind", "hod",
                 "--out", str(out), "--config", cfg]) == 0
    assert fileformats.load_tensor(out / "features.pdnt").shape == (2, 32)


def test_plan_train_and_recognize(tmp_path, capsys):
    from erpdn import amp as amp_mod

    cfg = write_config(tmp_path)
    lib_dir = tmp_path / "models"
    lib_dir.mkdir()
    rng = np.random.default_rng(0)
    centroids = rng.uniform(size=(6, 8))
    amp_mod.save_library(
        amp_mod.AmpLibrary(centroids, kind="hod", seed=0),
        lib_dir / "amp_library.json", lib_dir / "amp_library.pdnt",
    )
    traces = [
        [amp_mod.AmpDistribution((t % 3,), (1.0,)) for t in range(9)] for _ in range(6)
    ]
    amp_mod.save_traces(traces, tmp_path / "traces.json")
    assert main(["plan-train", "--config", cfg, "--seed", "3",
                 "--models", str(lib_dir), "--traces", str(tmp_path / "traces.json"),
                 "--out", str(lib_dir)]) == 0
    amp_mod.save_traces([traces[0][:3]], tmp_path / "obs.json")
    assert main(["plan-recognize", "--config", cfg, "--models", str(lib_dir),
                 "--trace", str(tmp_path / "obs.json"), "--steps", "4",
                 "--out", str(tmp_path / "plan")]) == 0
    plan = json.loads((tmp_path / "plan" / "plan.json").read_text())
    assert len(plan["steps"]) == 4
