import csv
import json

import numpy as np
import pytest

from liequad.cli import (
    GROUP_COLUMNS,
    TRAJ_COLUMNS,
    UsageError,
    group_csv,
    load_trajectory,
    main,
    parse_config,
)
from liequad.integrate import GroupTrajectory

EX1_CFG = {"C": 1.0, "v0": [4, -1.75], "dv0": [-0.1, 2.5], "ddv0": [-5, -5], "t_span": [0, 5]}
EX2_CFG = {"C": 0.0, "v0": [2, -1], "dv0": [2, -1], "ddv0": [0, 5], "t_span": [0, 40]}


def write_cfg(tmp_path, doc, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


@pytest.fixture(scope="module")
def ex2_files(tmp_path_factory):
    out = tmp_path_factory.mktemp("ex2")
    cfg = out / "cfg.json"
    cfg.write_text(json.dumps({**EX2_CFG, "t_span": [0, 80], "solver": {"atol": 1e-12,
                                                                          "rtol": 1e-12}}))
    assert main(["simulate", "--config", str(cfg), "--out-dir", str(out)]) == 0
    return out


class TestConfig:
    def test_defaults(self):
        cfg = parse_config(EX1_CFG)
        assert cfg.v0 == 4 - 1.75j and cfg.kappa == 1.0 and cfg.outputs == {"trajectory"}
        assert cfg.solver.method == "rk45_adaptive" and cfg.observation_dt == 0.01

    @pytest.mark.parametrize("bad", [
        {**EX1_CFG, "t_span": [0, 0]},
        {**EX1_CFG, "extra": 1},
        {k: v for k, v in EX1_CFG.items() if k != "v0"},
        {**EX1_CFG, "v0": [1, 2, 3]},
        {**EX1_CFG, "C": "one"},
        {**EX1_CFG, "C": True},
        {**EX1_CFG, "kappa": 0},
        {**EX1_CFG, "observation_dt": -1},
        {**EX1_CFG, "outputs": ["movie"]},
        {**EX1_CFG, "solver": {"method": "euler"}},
        {**EX1_CFG, "solver": {"order": 4}},
        [1, 2],
    ])
    def test_rejected(self, bad):
        with pytest.raises(UsageError):
            parse_config(bad)

    def test_solver_string(self):
        assert parse_config({**EX1_CFG, "solver": "rk4_fixed"}).solver.method == "rk4_fixed"


class TestSimulate:
    def test_example1(self, tmp_path):
        assert main(["simulate", "--config", write_cfg(tmp_path, EX1_CFG),
                     "--out-dir", str(tmp_path)]) == 0
        rows = read_rows(tmp_path / "trajectory.csv")
        assert rows[0] == TRAJ_COLUMNS
        assert float(rows[1][0]) == 0.0 and float(rows[-1][0]) == 5.0
        assert float(rows[1][9]) == pytest.approx(-14.38)
        assert float(rows[1][10]) == pytest.approx(167.180625)
        meta = json.loads((tmp_path / "trajectory.meta.json").read_text())
        assert meta["C"] == 1.0 and meta["kappa"] == 1.0

    def test_example2(self, ex2_files):
        assert (ex2_files / "trajectory.csv").exists()

    def test_all_outputs(self, tmp_path):
        doc = {**EX2_CFG, "t_span": [0, 30],
               "outputs": ["trajectory", "group", "polar", "invariants", "asymptotics",
                           "duality", "bounds"]}
        assert main(["simulate", "--config", write_cfg(tmp_path, doc),
                     "--out-dir", str(tmp_path)]) == 0
        for name in ("trajectory.csv", "group.csv", "polar.csv", "invariants.json",
                     "asymptotics.json", "duality.json", "bounds.json",
                     "bounds_direction.csv", "bounds_position.csv"):
            assert (tmp_path / name).exists(), name
        dual = json.loads((tmp_path / "duality.json").read_text())
        assert dual["Dtilde"] == [0.0, -5.0, 0.0]
        inv = json.loads((tmp_path / "invariants.json").read_text())
        assert inv["lax_vector_drift"] < 1e-4 * inv["c2_0"] ** 0.5

    def test_degenerate_span(self, tmp_path):
        cfg = write_cfg(tmp_path, {**EX1_CFG, "t_span": [0, 0]})
        assert main(["simulate", "--config", cfg, "--out-dir", str(tmp_path)]) == 1

    def test_missing_config(self, tmp_path):
        assert main(["simulate", "--config", str(tmp_path / "nope.json")]) == 1
        (tmp_path / "bad.json").write_text("{not json")
        assert main(["simulate", "--config", str(tmp_path / "bad.json")]) == 1

    def test_numerical_failure(self, tmp_path):
        cfg = write_cfg(tmp_path, {**EX1_CFG, "solver": {"max_steps": 5}})
        assert main(["simulate", "--config", cfg, "--out-dir", str(tmp_path)]) == 2
        assert not (tmp_path / "trajectory.csv").exists()

    def test_overrides(self, tmp_path):
        cfg = write_cfg(tmp_path, EX1_CFG)
        assert main(["simulate", "--config", cfg, "--out-dir", str(tmp_path), "--tol", "1e-6",
                     "--kappa", "2"]) == 0
        meta = json.loads((tmp_path / "trajectory.meta.json").read_text())
        assert meta["atol"] == 1e-6 and meta["kappa"] == 2.0

    def test_deterministic(self, tmp_path):
        cfg = write_cfg(tmp_path, {**EX1_CFG, "outputs": ["trajectory", "group"]})
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["simulate", "--config", cfg, "--out-dir", str(a)]) == 0
        assert main(["simulate", "--config", cfg, "--out-dir", str(b)]) == 0
        for name in ("trajectory.csv", "trajectory.meta.json", "group.csv"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_theta_blank_at_origin(self, tmp_path):
        doc = {"C": 0.0, "v0": [1, 0], "dv0": [-1, 0], "ddv0": [0, 0], "t_span": [0, 2],
               "outputs": ["trajectory", "polar"]}
        assert main(["simulate", "--config", write_cfg(tmp_path, doc),
                     "--out-dir", str(tmp_path)]) == 0
        rows = read_rows(tmp_path / "trajectory.csv")[1:]
        blank = [r for r in rows if r[8] == ""]
        assert len(blank) == 1 and float(blank[0][0]) == pytest.approx(1.0)
        polar = read_rows(tmp_path / "polar.csv")
        assert polar[101][1:] == [""] * 6


class TestExample:
    @pytest.mark.parametrize("n", [1, 2])
    def test_emits_files(self, tmp_path, n):
        assert main(["example", str(n), "--horizon", "80", "--out-dir", str(tmp_path)]) == 0
        for kind in ("trajectory.csv", "polar.csv", "group.csv", "trajectory.meta.json"):
            assert (tmp_path / f"example{n}_{kind}").exists()
        rows = read_rows(tmp_path / f"example{n}_group.csv")
        assert rows[0] == GROUP_COLUMNS and float(rows[-1][0]) == 80.0

    def test_unknown(self, tmp_path):
        assert main(["example", "3", "--horizon", "10", "--out-dir", str(tmp_path)]) == 1

    def test_bad_horizon(self, tmp_path):
        assert main(["example", "1", "--horizon", "-1", "--out-dir", str(tmp_path)]) == 1


class TestAnalyze:
    def test_invariants(self, ex2_files, tmp_path):
        assert main(["analyze", str(ex2_files / "trajectory.csv"), "--report", "inv",
                     "--out-dir", str(tmp_path)]) == 0
        rep = json.loads((tmp_path / "invariants.json").read_text())
        assert rep["c2_0"] == pytest.approx(25.0) and rep["bound_violations"] == []

    def test_bounds_verify(self, ex2_files, tmp_path):
        assert main(["analyze", str(ex2_files / "trajectory.csv"), "--report", "bounds",
                     "--verify", "--out-dir", str(tmp_path)]) == 0
        rows = read_rows(tmp_path / "bounds_direction.csv")
        assert rows[0] == ["t", "q", "theta", "lhs", "rhs", "flagged"]
        assert all(r[5] == "0" for r in rows[1:])
        assert (tmp_path / "bounds_position.csv").exists()

    def test_asymptotics(self, ex2_files, tmp_path):
        assert main(["analyze", str(ex2_files / "trajectory.csv"), "--report", "asym",
                     "--out-dir", str(tmp_path)]) == 0
        est = json.loads((tmp_path / "asymptotics.json").read_text())["estimate"]
        assert est["error_bound"] < 0.05

    def test_round_trip_values(self, ex2_files):
        traj = load_trajectory(ex2_files / "trajectory.csv")
        rows = read_rows(ex2_files / "trajectory.csv")
        assert traj.states[5, 0] == float(rows[6][1])
        assert traj.C == 0.0 and len(traj) == len(rows) - 1

    def test_non_monotone(self, ex2_files, tmp_path):
        rows = read_rows(ex2_files / "trajectory.csv")[:50]
        rows[10], rows[11] = rows[11], rows[10]
        bad = tmp_path / "bad.csv"
        with open(bad, "w", newline="") as fh:
            csv.writer(fh).writerows(rows)
        assert main(["analyze", str(bad), "--report", "inv", "--C", "0",
                     "--out-dir", str(tmp_path)]) == 1

    def test_missing_sidecar(self, ex2_files, tmp_path):
        copy = tmp_path / "t.csv"
        copy.write_bytes((ex2_files / "trajectory.csv").read_bytes())
        assert main(["analyze", str(copy), "--report", "inv", "--out-dir", str(tmp_path)]) == 1
        assert main(["analyze", str(copy), "--report", "inv", "--C", "0",
                     "--out-dir", str(tmp_path)]) == 0

    def test_bad_header_and_report(self, ex2_files, tmp_path):
        bad = tmp_path / "h.csv"
        bad.write_text("a,b\n1,2\n")
        assert main(["analyze", str(bad), "--C", "0", "--out-dir", str(tmp_path)]) == 1
        assert main(["analyze", str(ex2_files / "trajectory.csv"), "--report", "movie"]) == 1

    def test_verify_failure(self, tmp_path):
        assert main(["simulate", "--config", write_cfg(tmp_path, EX1_CFG),
                     "--out-dir", str(tmp_path)]) == 0
        rows = read_rows(tmp_path / "trajectory.csv")
        rows[200][5] = repr(10 * float(rows[200][5]))
        rows[200][6] = repr(10 * float(rows[200][6]))
        with open(tmp_path / "trajectory.csv", "w", newline="") as fh:
            csv.writer(fh, lineterminator="\n").writerows(rows)
        args = ["analyze", str(tmp_path / "trajectory.csv"), "--report", "inv",
                "--out-dir", str(tmp_path / "r")]
        assert main(args) == 0
        assert main(args + ["--verify"]) == 3

    def test_short_tail(self, tmp_path):
        assert main(["simulate", "--config", write_cfg(tmp_path, EX1_CFG),
                     "--out-dir", str(tmp_path)]) == 0
        assert main(["analyze", str(tmp_path / "trajectory.csv"), "--report", "asym",
                     "--out-dir", str(tmp_path)]) == 1


class TestDual:
    def test_example2(self, ex2_files, tmp_path):
        assert main(["dual", str(ex2_files / "trajectory.csv"), "--b", "1",
                     "--out-dir", str(tmp_path)]) == 0
        rep = json.loads((tmp_path / "duality.json").read_text())
        assert rep["Cvec"] == [0.0, -10.0, 0.0] and rep["a"] == 2.0

    def test_zero_b(self, ex2_files, tmp_path):
        assert main(["dual", str(ex2_files / "trajectory.csv"), "--b", "0",
                     "--out-dir", str(tmp_path)]) == 1


class TestFiles:
    def test_group_pole_blank(self):
        g = GroupTrajectory([0.0, 1.0], np.array([[1.0, 0, 0, 0], [0, 0, 0, 1.0]]))
        rows = list(csv.reader(group_csv(g).splitlines()))
        assert rows[0] == GROUP_COLUMNS
        assert rows[1][5:] == ["1", "0", "0"] and rows[2][5:] == ["", "", ""]

    def test_usage(self, capsys):
        assert main([]) == 1
        assert main(["--help"]) == 0
