import json

import numpy as np
import pytest

from mrmlab import gridio
from mrmlab.cli import main


def run(args):
    return main([str(a) for a in args])


class TestSimulate:
    def test_uniform_grid(self, tmp_path):
        out = tmp_path / "dens"
        code = run(["simulate", "--gamma2", "0", "--grid", "64",
                    "--out", out])
        assert code == 0
        header, values = gridio.read_grid(f"{out}.grid")
        assert header["kind"] == "measure"
        assert np.allclose(values, values.flat[0])

    def test_byte_identical_reruns(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            assert run(["simulate", "--gamma2", "1.5", "--grid", "64",
                        "--seed", "42", "--out", out]) == 0
        assert (tmp_path / "a.grid").read_bytes() == \
            (tmp_path / "b.grid").read_bytes()

    def test_heavy_tail_warning(self, tmp_path, caplog):
        out = tmp_path / "w"
        with caplog.at_level("WARNING"):
            assert run(["simulate", "--gamma2", "3.9", "--grid", "64",
                        "--seed", "1", "--out", out]) == 0
        assert any("heaviest cell" in r.message for r in caplog.records)

    def test_replica_files(self, tmp_path):
        out = tmp_path / "multi"
        assert run(["simulate", "--gamma2", "1", "--grid", "16",
                    "--replicas", "3", "--out", out]) == 0
        for rep in range(3):
            header, _ = gridio.read_grid(f"{out}_r{rep:04d}.grid")
            assert header["replica"] == rep

    def test_degenerate_params_error(self, tmp_path):
        code = run(["simulate", "--gamma2", "9", "--grid", "8",
                    "--out", tmp_path / "x"])
        assert code != 0


class TestTransport:
    def test_auto_steps_single(self, tmp_path, capsys):
        out = tmp_path / "map"
        assert run(["transport", "--gamma2", "1", "--grid", "16",
                    "--steps", "auto", "--solver", "exact",
                    "--out", out]) == 0
        header, chained = gridio.read_tmap(f"{out}.tmap")
        assert header["steps"] == 1
        assert "steps 1" in capsys.readouterr().out

    def test_auto_steps_strongly_intermittent(self, tmp_path):
        # gamma2 = 3 needs 13 steps; a tiny grid keeps the run fast
        out = tmp_path / "deep"
        assert run(["transport", "--gamma2", "3", "--grid", "8",
                    "--steps", "auto", "--tol", "1e-3", "--out", out]) == 0
        header, _ = gridio.read_tmap(f"{out}.tmap")
        assert header["steps"] == 13

    def test_steps_below_minimum_guarded(self, tmp_path):
        with pytest.raises(SystemExit):
            run(["transport", "--gamma2", "3", "--grid", "8",
                 "--steps", "2", "--out", tmp_path / "x"])

    def test_force_overrides_guard(self, tmp_path):
        out = tmp_path / "forced"
        assert run(["transport", "--gamma2", "3", "--grid", "8",
                    "--steps", "2", "--force", "--tol", "1e-3",
                    "--out", out]) == 0
        header, _ = gridio.read_tmap(f"{out}.tmap")
        assert header["steps"] == 2

    def test_exact_threshold_guard(self, tmp_path):
        with pytest.raises(SystemExit):
            run(["transport", "--gamma2", "1", "--grid", "128",
                 "--solver", "exact", "--exact-threshold", "1000",
                 "--out", tmp_path / "x"])


@pytest.fixture(scope="module")
def tmap_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("chain") / "chain"
    assert run(["transport", "--gamma2", "1", "--grid", "16",
                "--solver", "exact", "--seed", "9", "--out", path]) == 0
    return f"{path}.tmap"


class TestGeodesic:
    def test_polyline_csv(self, tmp_path, tmap_file):
        out = tmp_path / "geo"
        assert run(["geodesic", "--tmap", tmap_file, "--from=-0.3,-0.3",
                    "--to=0.3,0.3", "--samples", "33", "--out", out]) == 0
        lines = (tmp_path / "geo.csv").read_text().strip().splitlines()
        assert lines[0] == "t,x,y,image_x,image_y"
        assert len(lines) == 34

    def test_equal_endpoints_single_point(self, tmp_path, tmap_file, caplog):
        out = tmp_path / "point"
        with caplog.at_level("WARNING"):
            assert run(["geodesic", "--tmap", tmap_file,
                        "--from", "0.1,0.1", "--to", "0.1,0.1",
                        "--out", out]) == 0
        lines = (tmp_path / "point.csv").read_text().strip().splitlines()
        assert len(lines) == 2
        assert any("single-point" in r.message for r in caplog.records)

    def test_missing_tmap_errors(self, tmp_path):
        code = run(["geodesic", "--tmap", tmp_path / "absent.tmap",
                    "--from", "0,0", "--to", "0.1,0.1",
                    "--out", tmp_path / "g"])
        assert code != 0


class TestKpz:
    def test_segment_report(self, tmp_path):
        out = tmp_path / "kpz"
        assert run(["kpz", "--set", "segment", "--gamma2", "1",
                    "--grid", "128", "--replicas", "3", "--seed", "2",
                    "--out", out]) == 0
        lines = (tmp_path / "kpz.csv").read_text().strip().splitlines()
        assert lines[0] == "scale,content_at_s_hat,s_hat,target"
        record = json.loads(
            (tmp_path / "kpz.csv.jsonl").read_text().splitlines()[0])
        assert record["target_dim"] == 1.0
        assert record["expected_s"] == pytest.approx(5 - 17 ** 0.5)

    def test_degenerate_rejected(self, tmp_path):
        code = run(["kpz", "--gamma2", "4", "--grid", "32",
                    "--out", tmp_path / "x"])
        assert code != 0


class TestTimechange:
    def test_path_mode(self, tmp_path):
        out = tmp_path / "tc"
        assert run(["timechange", "--m", "1", "--gamma2", "0.5",
                    "--grid", "256", "--mode", "path",
                    "--bm-resolution", "64", "--out", out]) == 0
        lines = (tmp_path / "tc.csv").read_text().strip().splitlines()
        assert lines[0] == "t,clock,B"
        assert len(lines) == 66

    def test_path_mode_needs_1d(self, tmp_path):
        with pytest.raises(SystemExit):
            run(["timechange", "--m", "2", "--mode", "path",
                 "--out", tmp_path / "x"])

    def test_field_mode(self, tmp_path, tmap_file):
        out = tmp_path / "cf"
        assert run(["timechange", "--mode", "field", "--tmap", tmap_file,
                    "--eval-grid", "5", "--out", out]) == 0
        lines = (tmp_path / "cf.csv").read_text().strip().splitlines()
        assert lines[0] == "x,y,B"
        assert len(lines) == 26

    def test_field_mode_needs_tmap(self, tmp_path):
        with pytest.raises(SystemExit):
            run(["timechange", "--mode", "field", "--out", tmp_path / "x"])


class TestScaling:
    def test_degenerate_row(self, tmp_path, capsys):
        out = tmp_path / "sc"
        assert run(["scaling", "--gamma2", "0", "--grid", "64",
                    "--replicas", "3", "--qs", "1",
                    "--radii", "0.0625,0.125,0.25", "--out", out]) == 0
        lines = (tmp_path / "sc.csv").read_text().strip().splitlines()
        q, z, se, n = lines[1].split(",")
        assert float(z) == pytest.approx(2.0, abs=0.02)


class TestThreads:
    def test_thread_cap_accepted(self, tmp_path):
        out = tmp_path / "t"
        assert run(["simulate", "--gamma2", "1", "--grid", "16",
                    "--threads", "1", "--out", out]) == 0


class TestConfigFile:
    def test_flags_override_file(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("gamma2=0.0\ngrid=16\nseed=5\n# comment line\n")
        out = tmp_path / "cfgout"
        assert run(["simulate", "--config", cfg, "--grid", "8",
                    "--out", out]) == 0
        header, values = gridio.read_grid(f"{out}.grid")
        assert header["grid_n"] == 8       # flag wins
        assert header["gamma2"] == 0.0     # file value survives
        assert header["seed"] == 5
