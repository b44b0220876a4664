"""End-to-end command line behavior, including exit codes."""
import json
import subprocess
import sys

import numpy as np
import pytest

from nisp.cbunet import CBUnetConfig, build_nets, load_weights, render, save_weights
from nisp.cli import build_parser, cmd_annotate_serve, main
from nisp.imaging import (
    CameraMeta,
    ColorMatrix,
    decode_png,
    load_bayer,
    read_png,
    save_camera_meta,
    write_pgm,
)
from nisp.nn import write_weight_file
from nisp.training import generate_synthetic_dataset, load_dataset


@pytest.fixture(scope="module")
def ds(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli_ds")
    generate_synthetic_dataset(root, count=2, height=32, width=32)
    return root


@pytest.fixture(scope="module")
def train_config(tmp_path_factory):
    path = tmp_path_factory.mktemp("cfg") / "train.json"
    path.write_text(json.dumps({
        "stage1_steps": 4, "stage2_epochs": 2, "joint_epochs": 1,
        "batch_size": 2, "crop": 32,
    }))
    return path


@pytest.fixture(scope="module")
def trained(ds, train_config, tmp_path_factory):
    out = tmp_path_factory.mktemp("weights") / "tiny.nisp"
    code = main(["train", "--dataset", str(ds), "--config", str(train_config),
                 "--output", str(out)])
    assert code == 0
    return out


@pytest.fixture(scope="module")
def flat_raw(tmp_path_factory):
    """Constant mosaic with an identity color matrix."""
    root = tmp_path_factory.mktemp("flat")
    pgm = root / "flat.pgm"
    write_pgm(pgm, np.full((32, 32), 512, dtype=np.uint16))
    meta = CameraMeta(black_level=64, white_level=1023,
                      ccm=ColorMatrix(np.eye(3)), cfa="RGGB")
    save_camera_meta(pgm, meta)
    return pgm


class TestRenderBaseline:
    def test_constant_input_stays_constant(self, flat_raw, tmp_path):
        out = tmp_path / "flat.png"
        assert main(["render", "--input", str(flat_raw), "--output", str(out)]) == 0
        planes, _ = read_png(out)
        for c in range(3):
            assert planes[c].min() == planes[c].max()

    def test_intermediate_is_16_bit(self, flat_raw, tmp_path):
        out = tmp_path / "o.png"
        wide = tmp_path / "o16.png"
        main(["render", "--input", str(flat_raw), "--output", str(out),
              "--intermediate", str(wide)])
        planes, _ = read_png(wide)
        assert planes.dtype == np.uint16

    def test_missing_input_exit_2(self, tmp_path, capsys):
        code = main(["render", "--input", str(tmp_path / "gone.pgm"),
                     "--output", str(tmp_path / "x.png")])
        assert code == 2
        assert "gone.pgm" in capsys.readouterr().err


class TestRenderCbunet:
    def test_deterministic_bytes(self, ds, trained, tmp_path):
        raw = ds / "raw" / "synth0.pgm"
        outs = []
        for name in ("a.png", "b.png"):
            out = tmp_path / name
            code = main(["render", "--input", str(raw), "--pipeline", "cbunet",
                         "--weights", str(trained), "--output", str(out)])
            assert code == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]

    def test_weights_required(self, ds, tmp_path):
        code = main(["render", "--input", str(ds / "raw" / "synth0.pgm"),
                     "--pipeline", "cbunet", "--output", str(tmp_path / "x.png")])
        assert code == 4

    def test_weight_config_mismatch_exit_3(self, ds, tmp_path, capsys):
        config = CBUnetConfig.tiny()
        stage1, _ = build_nets(config)
        # A file whose records cover only stage 1 cannot satisfy the config.
        broken = tmp_path / "broken.nisp"
        write_weight_file(broken, config.to_json(),
                          {k: p.data for k, p in stage1.params().items()})
        code = main(["render", "--input", str(ds / "raw" / "synth0.pgm"),
                     "--pipeline", "cbunet", "--weights", str(broken),
                     "--output", str(tmp_path / "x.png")])
        assert code == 3
        assert "stage2" in capsys.readouterr().err


class TestPreview:
    def test_dims_and_stamp(self, ds, tmp_path):
        out = tmp_path / "p.png"
        assert main(["preview", "--input", str(ds / "raw" / "synth0.pgm"),
                     "--output", str(out)]) == 0
        planes, text = read_png(out)
        raw = load_bayer(ds / "raw" / "synth0.pgm")
        assert planes.shape == (3,) + raw.data.shape
        assert "pipeline" in text

    def test_idempotent(self, ds, tmp_path):
        args = ["preview", "--input", str(ds / "raw" / "synth1.pgm")]
        a, b = tmp_path / "a.png", tmp_path / "b.png"
        main(args + ["--output", str(a)])
        main(args + ["--output", str(b)])
        assert a.read_bytes() == b.read_bytes()


class TestTrain:
    def test_same_seed_identical_weight_files(self, ds, train_config, tmp_path):
        files = []
        for name in ("w1.nisp", "w2.nisp"):
            out = tmp_path / name
            code = main(["train", "--dataset", str(ds), "--config", str(train_config),
                         "--seed", "7", "--output", str(out)])
            assert code == 0
            files.append(out.read_bytes())
        assert files[0] == files[1]

    def test_seed_changes_weights(self, ds, train_config, trained, tmp_path):
        out = tmp_path / "w3.nisp"
        main(["train", "--dataset", str(ds), "--config", str(train_config),
              "--seed", "8", "--output", str(out)])
        assert out.read_bytes() != trained.read_bytes()

    def test_weights_load_back(self, trained):
        config, stage1, stage2 = load_weights(trained)
        assert config.preset == "tiny"
        assert stage1.config == stage2.config == config

    def test_malformed_dataset_reports_every_problem(self, ds, train_config, tmp_path, capsys):
        import shutil
        broken = tmp_path / "broken"
        shutil.copytree(ds, broken)
        (broken / "target" / "synth0.png").unlink()
        (broken / "annotations" / "synth1.json").unlink()
        code = main(["train", "--dataset", str(broken), "--config", str(train_config),
                     "--output", str(tmp_path / "w.nisp")])
        assert code == 3
        err = capsys.readouterr().err
        assert "synth0" in err and "synth1" in err

    def test_unknown_config_key_exit_4(self, ds, tmp_path, capsys):
        cfg = tmp_path / "bad.json"
        cfg.write_text(json.dumps({"learning_rate": 0.1}))
        code = main(["train", "--dataset", str(ds), "--config", str(cfg),
                     "--output", str(tmp_path / "w.nisp")])
        assert code == 4
        assert "learning_rate" in capsys.readouterr().err


class TestEval:
    def test_self_renders_score_infinite(self, ds, trained, tmp_path):
        import shutil
        mirror = tmp_path / "mirror"
        shutil.copytree(ds, mirror)
        _, stage1, stage2 = load_weights(trained)
        from nisp.imaging import write_png
        for pair in load_dataset(mirror):
            result = render(pair.raw, None, stage1, stage2)
            write_png(mirror / "target" / f"{pair.image_id}.png", result.display.planes)
        out = tmp_path / "scores.csv"
        code = main(["eval", "--dataset", str(mirror), "--weights", str(trained),
                     "--output", str(out)])
        assert code == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "image_id,psnr_db,params,flops"
        rows = [line.split(",") for line in lines[1:]]
        assert [r[0] for r in rows] == ["synth0", "synth1", "mean"]
        assert all(r[1] == "inf" for r in rows)

    def test_real_targets_finite_scores(self, ds, trained, tmp_path):
        out = tmp_path / "scores.csv"
        assert main(["eval", "--dataset", str(ds), "--weights", str(trained),
                     "--output", str(out)]) == 0
        lines = out.read_text().strip().splitlines()
        rows = [line.split(",") for line in lines[1:]]
        assert [r[0] for r in rows] == ["synth0", "synth1", "mean"]
        for r in rows:
            assert np.isfinite(float(r[1]))
        assert int(rows[-1][2]) > 0 and int(rows[-1][3]) > 0


class TestConvert:
    def test_synthetic_generation(self, tmp_path):
        out = tmp_path / "gen"
        code = main(["convert", "--output", str(out), "--count", "3",
                     "--height", "32", "--width", "32"])
        assert code == 0
        assert [p.image_id for p in load_dataset(out)] == ["synth0", "synth1", "synth2"]

    def test_import_mosaics(self, ds, tmp_path):
        src = tmp_path / "src"
        src.mkdir()
        for name in ("synth0.pgm", "synth0.meta.json"):
            (src / name).write_bytes((ds / "raw" / name).read_bytes())
        out = tmp_path / "imported"
        assert main(["convert", "--input", str(src), "--output", str(out)]) == 0
        assert (out / "raw" / "synth0.pgm").read_bytes() == (src / "synth0.pgm").read_bytes()
        assert (out / "annotations").is_dir()

    def test_missing_sidecar_exit_2(self, ds, tmp_path, capsys):
        src = tmp_path / "src2"
        src.mkdir()
        (src / "lone.pgm").write_bytes((ds / "raw" / "synth0.pgm").read_bytes())
        code = main(["convert", "--input", str(src), "--output", str(tmp_path / "o")])
        assert code == 2
        assert "lone.meta.json" in capsys.readouterr().err


class TestPlumbing:
    def test_serve_subcommand_wired(self):
        args = build_parser().parse_args(
            ["annotate-serve", "--dataset", "d", "--port", "9000"]
        )
        assert args.func is cmd_annotate_serve
        assert args.port == 9000 and args.host == "127.0.0.1"

    def test_module_entry_help(self):
        proc = subprocess.run(
            [sys.executable, "-m", "nisp.cli", "--help"],
            capture_output=True, text=True, timeout=120,
        )
        assert proc.returncode == 0
        for word in ("render", "preview", "train", "eval", "annotate-serve", "convert"):
            assert word in proc.stdout
