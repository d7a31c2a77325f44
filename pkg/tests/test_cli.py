import numpy as np
import pytest

from potts_sl import (
    ProbField,
    ScribbleField,
    read_probfield,
    write_image,
    write_labels,
    write_probfield,
)
from potts_sl.cli import main
from potts_sl.synthetic import solver_oracle_instance, two_region_instance


@pytest.fixture
def instance_files(tmp_path):
    sigma, scribbles, image = solver_oracle_instance(0, height=8, width=8)
    paths = {
        "image": tmp_path / "img.ppm",
        "scribbles": tmp_path / "scr.pgm",
        "sigma": tmp_path / "sigma.pfld",
        "config": tmp_path / "run.cfg",
        "out": tmp_path / "out",
    }
    write_image(image, paths["image"])
    write_labels(scribbles.data, paths["scribbles"])
    write_probfield(sigma, paths["sigma"])
    paths["config"].write_text("eta = 4\nlambda = 2\npotts = q\nxent = quad\nsteps = 60\n")
    return paths


def run(*argv):
    return main([str(a) for a in argv])


class TestSolve:
    def test_writes_artifacts(self, instance_files, capsys):
        p = instance_files
        code = run("solve", "--image", p["image"], "--scribbles", p["scribbles"],
                   "--sigma", p["sigma"], "--config", p["config"], "--out", p["out"])
        assert code == 0
        for name in ("y.pfld", "y_decode.pgm", "y_vis.ppm", "solve_report.txt"):
            assert (p["out"] / name).is_file()
        report = (p["out"] / "solve_report.txt").read_text().splitlines()
        assert len(report) == 62  # 61 trace lines + divergence line
        y = read_probfield(p["out"] / "y.pfld")
        assert y.data.shape == (8, 8, 3)

    def test_fully_scribbled_decode_matches_input(self, tmp_path):
        rng = np.random.default_rng(5)
        labels = rng.integers(1, 4, size=(6, 6))
        sigma = ProbField.uniform(6, 6, 3)
        from potts_sl import Image
        image = Image(rng.integers(0, 256, size=(6, 6, 3)))
        paths = dict(
            image=tmp_path / "i.ppm", scr=tmp_path / "s.pgm",
            sigma=tmp_path / "p.pfld", cfg=tmp_path / "c.cfg", out=tmp_path / "o",
        )
        write_image(image, paths["image"])
        write_labels(labels, paths["scr"])
        write_probfield(sigma, paths["sigma"])
        paths["cfg"].write_text("steps = 3\n")
        code = run("solve", "--image", paths["image"], "--scribbles", paths["scr"],
                   "--sigma", paths["sigma"], "--config", paths["cfg"], "--out", paths["out"])
        assert code == 0
        decoded = (paths["out"] / "y_decode.pgm").read_bytes()
        assert decoded == paths["scr"].read_bytes()


class TestOracleRw:
    def test_runs_and_writes(self, instance_files):
        p = instance_files
        code = run("oracle-rw", "--image", p["image"], "--scribbles", p["scribbles"],
                   "--sigma", p["sigma"], "--config", p["config"], "--out", p["out"])
        assert code == 0
        for name in ("y.pfld", "y_decode.pgm", "y_vis.ppm", "solve_report.txt"):
            assert (p["out"] / name).is_file()

    def test_singular_system_exits_numerical(self, instance_files, capsys):
        p = instance_files
        # no data term and no scribbles: the linear system has no anchor
        p["config"].write_text("eta = 0\nlambda = 1\npotts = q\nxent = quad\n")
        write_labels(np.zeros((8, 8), dtype=np.int64), p["scribbles"])
        code = run("oracle-rw", "--image", p["image"], "--scribbles", p["scribbles"],
                   "--sigma", p["sigma"], "--config", p["config"], "--out", p["out"])
        assert code == 3


class TestTrain:
    def make_files(self, tmp_path, rounds=2):
        image, scribbles, gt = two_region_instance(seed=7, height=16, width=16)
        paths = {
            "image": tmp_path / "img.ppm",
            "scribbles": tmp_path / "scr.pgm",
            "gt": tmp_path / "gt.pgm",
            "config": tmp_path / "run.cfg",
        }
        write_image(image, paths["image"])
        write_labels(scribbles.data, paths["scribbles"])
        write_labels(gt, paths["gt"])
        paths["config"].write_text(f"rounds = {rounds}\nsteps = 40\nseed = 7\n")
        return paths

    def test_writes_artifacts_and_miou(self, tmp_path, capsys):
        p = self.make_files(tmp_path)
        out = tmp_path / "out"
        code = run("train", "--image", p["image"], "--scribbles", p["scribbles"],
                   "--config", p["config"], "--out", out, "--gt", p["gt"])
        assert code == 0
        for name in ("sigma.pfld", "y.pfld", "loss_trace.txt", "miou.txt",
                     "sigma_decode.pgm", "y_decode.pgm", "sigma_vis.ppm", "y_vis.ppm"):
            assert (out / name).is_file()
        printed = capsys.readouterr().out
        assert "final_y_miou" in printed

    def test_deterministic_across_runs(self, tmp_path):
        p = self.make_files(tmp_path)
        outs = []
        for name in ("a", "b"):
            out = tmp_path / name
            code = run("train", "--image", p["image"], "--scribbles", p["scribbles"],
                       "--config", p["config"], "--out", out, "--gt", p["gt"])
            assert code == 0
            outs.append({f.name: f.read_bytes() for f in sorted(out.iterdir())})
        assert outs[0].keys() == outs[1].keys()
        for name in outs[0]:
            assert outs[0][name] == outs[1][name], name


class TestSmallCommands:
    def test_metrics_perfect(self, tmp_path, capsys):
        labels = np.array([[1, 2], [2, 1]])
        pred = tmp_path / "p.pgm"
        gt = tmp_path / "g.pgm"
        write_labels(labels, pred)
        write_labels(labels, gt)
        assert run("metrics", "--pred", pred, "--gt", gt, "--classes", 2) == 0
        assert capsys.readouterr().out.strip() == "1.0000"

    def test_gradcheck_passes(self, capsys):
        assert run("gradcheck", "--kind", "q", "--kind", "cce") == 0
        out = capsys.readouterr().out
        assert "PASS" in out and "FAIL" not in out

    def test_corrupt_bench_csv(self, tmp_path):
        out = tmp_path / "bench"
        assert run("corrupt-bench", "--seed", 3, "--out", out) == 0
        lines = (out / "corruption.csv").read_text().splitlines()
        assert lines[0] == "eta,kind,accuracy"
        assert len(lines) == 16  # 5 levels x 3 kinds


class TestExitCodes:
    def test_unknown_flag_is_usage_error(self, instance_files, capsys):
        assert run("solve", "--bogus", "x") == 1

    def test_unknown_subcommand_is_usage_error(self, capsys):
        assert run("frobnicate") == 1

    def test_missing_input_is_data_error(self, instance_files, capsys):
        p = instance_files
        code = run("solve", "--image", "/nonexistent.ppm", "--scribbles", p["scribbles"],
                   "--sigma", p["sigma"], "--config", p["config"], "--out", p["out"])
        assert code == 2

    def test_config_parse_failure_is_data_error(self, instance_files, capsys):
        p = instance_files
        p["config"].write_text("bogus_key = 1\n")
        code = run("solve", "--image", p["image"], "--scribbles", p["scribbles"],
                   "--sigma", p["sigma"], "--config", p["config"], "--out", p["out"])
        assert code == 2

    def test_illegal_scribble_value_is_data_error(self, instance_files, capsys):
        p = instance_files
        bad = p["scribbles"].read_bytes()
        p["scribbles"].write_bytes(bad[:-1] + bytes([200]))
        code = run("solve", "--image", p["image"], "--scribbles", p["scribbles"],
                   "--sigma", p["sigma"], "--config", p["config"], "--out", p["out"])
        assert code == 2

    def test_dimension_mismatch_is_data_error(self, instance_files, capsys, tmp_path):
        p = instance_files
        write_probfield(ProbField.uniform(4, 4, 3), p["sigma"])
        code = run("solve", "--image", p["image"], "--scribbles", p["scribbles"],
                   "--sigma", p["sigma"], "--config", p["config"], "--out", p["out"])
        assert code == 2

    def test_help_exits_zero(self, capsys):
        assert run("--help") == 0
