import csv
import json
import os

import numpy as np
import pytest

from seqretinex import image_core
from seqretinex.cli import main
from seqretinex.image_core import ImageRGB, load_image

IDENTITY_SETS = ["--set", "alpha=0.0", "--set", "beta=0.0",
                 "--set", 'denoiser={"kind": "identity"}',
                 "--set", "gamma1=1.0", "--set", "gamma2=1.0"]


@pytest.fixture
def png(tmp_path):
    rng = np.random.Generator(np.random.Philox(400))
    img = ImageRGB(rng.uniform(0.1, 0.9, size=(16, 16, 3)))
    path = tmp_path / "in.png"
    image_core.save_image(img, str(path))
    return str(path)


class TestEnhance:
    def test_basic_run_and_manifest(self, png, tmp_path, capsys):
        out = str(tmp_path / "out.png")
        assert main(["enhance", png, "-o", out, "--workers", "1"]) == 0
        assert os.path.exists(out)
        manifest = json.loads((tmp_path / "out.manifest.json").read_text())
        assert manifest["config"]["alpha"] == 0.1
        assert "in.png" in manifest["inputs"]
        assert len(manifest["inputs"]["in.png"]) == 64
        log = capsys.readouterr().out
        assert "event=enhanced" in log and "admm_iters=" in log

    def test_identity_within_one_byte(self, png, tmp_path):
        out = str(tmp_path / "out.png")
        assert main(["enhance", png, "-o", out, "--workers", "1",
                     *IDENTITY_SETS]) == 0
        a = np.asarray(load_image(png))
        b = np.asarray(load_image(out))
        assert np.abs(a - b).max() <= 1.001 / 255

    def test_profile_logged(self, png, tmp_path, capsys):
        out = str(tmp_path / "out.png")
        assert main(["enhance", png, "-o", out, "--profile", "lol",
                     "--workers", "1"]) == 0
        log = capsys.readouterr().out
        assert "gamma1=1.5" in log and "gamma2=4.0" in log
        assert "gamma_mode=dual" in log

    def test_emit_layers_and_trace(self, png, tmp_path):
        out = str(tmp_path / "out.png")
        assert main(["enhance", png, "-o", out, "--emit-l", "--emit-r",
                     "--trace", "--workers", "1"]) == 0
        assert (tmp_path / "out_L.png").exists()
        assert (tmp_path / "out_R.png").exists()
        with open(tmp_path / "out_trace.csv") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["iteration", "residual", "theta"]
        assert len(rows) > 1

    def test_config_file_and_flag_precedence(self, png, tmp_path):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text('{"alpha": 0.5, "gamma2": 3.0}')
        out = str(tmp_path / "out.png")
        assert main(["enhance", png, "-o", out, "--config", str(cfg_path),
                     "--set", "gamma2=1.5", "--workers", "1"]) == 0
        manifest = json.loads((tmp_path / "out.manifest.json").read_text())
        assert manifest["config"]["alpha"] == 0.5
        assert manifest["config"]["gamma2"] == 1.5

    def test_directory_batch(self, tmp_path):
        in_dir = tmp_path / "batch"
        in_dir.mkdir()
        rng = np.random.Generator(np.random.Philox(401))
        for i in range(3):
            img = ImageRGB(rng.uniform(0.1, 0.9, size=(12, 12, 3)))
            image_core.save_image(img, str(in_dir / f"im{i}.png"))
        out_dir = tmp_path / "enhanced"
        assert main(["enhance", str(in_dir), "-o", str(out_dir),
                     "--workers", "2", *IDENTITY_SETS]) == 0
        assert sorted(os.listdir(out_dir)) == [
            "im0.png", "im1.png", "im2.png", "manifest.json"]

    def test_missing_input_is_runtime_error(self, tmp_path, capsys):
        assert main(["enhance", str(tmp_path / "nope.png"),
                     "--workers", "1"]) == 1
        assert "error:" in capsys.readouterr().err

    def test_bad_override_is_runtime_error(self, png, capsys):
        assert main(["enhance", png, "--set", "rho=0.5", "--workers", "1"]) == 1
        assert "error:" in capsys.readouterr().err

    def test_unknown_config_key_rejected(self, png, capsys):
        assert main(["enhance", png, "--set", "blorp=1", "--workers", "1"]) == 1

    def test_usage_error_exit_2(self, capsys):
        with pytest.raises(SystemExit) as exc_info:
            main(["enhance"])  # missing inputs
        assert exc_info.value.code == 2

    def test_unknown_subcommand_exit_2(self):
        with pytest.raises(SystemExit) as exc_info:
            main(["frobnicate"])
        assert exc_info.value.code == 2


class TestDecompose:
    def test_writes_layers_only(self, png, tmp_path):
        out = str(tmp_path / "dec.png")
        assert main(["decompose", png, "-o", out, "--workers", "1"]) == 0
        assert (tmp_path / "dec_L.png").exists()
        assert (tmp_path / "dec_R.png").exists()
        assert not (tmp_path / "dec.png").exists()


class TestSynthAndEval:
    def test_synth_then_eval(self, png, tmp_path, capsys):
        synth_dir = str(tmp_path / "synth")
        assert main(["synth", png, "-o", synth_dir, "--darken", "0.3",
                     "--noise-sigma", "2.0", "--seed", "7"]) == 0
        assert os.path.exists(os.path.join(synth_dir, "in_low.png"))
        assert os.path.exists(os.path.join(synth_dir, "in_gt.png"))

        # eval needs paired directories with matching names
        a_dir, b_dir = tmp_path / "a", tmp_path / "b"
        a_dir.mkdir(); b_dir.mkdir()
        img = load_image(png)
        image_core.save_image(img, str(a_dir / "x.png"))
        image_core.save_image(img, str(b_dir / "x.png"))
        csv_path = str(tmp_path / "m.csv")
        json_path = str(tmp_path / "m.json")
        assert main(["eval", str(a_dir), str(b_dir),
                     "--csv", csv_path, "--json", json_path]) == 0
        doc = json.loads(open(json_path).read())
        assert doc["images"]["x.png"]["mse"] == 0.0
        assert doc["summary"]["ssim_mean"] == pytest.approx(1.0)
        with open(csv_path) as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["image", "psnr", "ssim", "mse"]

    def test_synth_reproducible(self, png, tmp_path):
        d1, d2 = str(tmp_path / "s1"), str(tmp_path / "s2")
        for d in (d1, d2):
            assert main(["synth", png, "-o", d, "--seed", "9"]) == 0
        a = np.asarray(load_image(os.path.join(d1, "in_low.png")))
        b = np.asarray(load_image(os.path.join(d2, "in_low.png")))
        assert np.array_equal(a, b)

    def test_eval_unpaired_error(self, png, tmp_path, capsys):
        a_dir, b_dir = tmp_path / "a", tmp_path / "b"
        a_dir.mkdir(); b_dir.mkdir()
        img = load_image(png)
        image_core.save_image(img, str(a_dir / "x.png"))
        image_core.save_image(img, str(b_dir / "y.png"))
        assert main(["eval", str(a_dir), str(b_dir)]) == 1


class TestAblate:
    def test_sweep_rows(self, png, tmp_path):
        out = str(tmp_path / "abl.csv")
        assert main(["ablate", png, "--gt", png, "--param", "gamma2",
                     "--values", "1.0,2.2", "-o", out, *IDENTITY_SETS[:6]]) == 0
        with open(out) as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["gamma2", "psnr", "ssim", "mse"]
        assert len(rows) == 3
        assert rows[1][0] == "1.0" and rows[2][0] == "2.2"


class TestProbe:
    def test_probe_output(self, png, tmp_path, capsys):
        out = str(tmp_path / "inf.json")
        dot = str(tmp_path / "inf.dot")
        heat = str(tmp_path / "heat")
        assert main(["probe", png, "--probes", "4,4;8,8",
                     "--iterations", "0", "-o", out, "--dot", dot,
                     "--heatmap-dir", heat, *IDENTITY_SETS]) == 0
        doc = json.loads(open(out).read())
        assert doc["image"] == "in.png"
        assert doc["edges"]
        for e in doc["edges"]:
            assert set(e) == {"t", "from", "to", "mag"}
        assert open(dot).read().startswith("digraph influence {")
        assert os.path.exists(os.path.join(heat, "probe_t0_4_4.png"))
        assert "event=probed" in capsys.readouterr().out

    def test_bad_probe_coord(self, png, tmp_path):
        out = str(tmp_path / "inf.json")
        assert main(["probe", png, "--probes", "99,99",
                     "--iterations", "0", "-o", out, *IDENTITY_SETS]) == 1
