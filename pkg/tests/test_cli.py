"""Command-line interface: config validation, exit codes, artifacts."""

import csv
import json

import pytest

from cdcheck.cli import main


def write_cfg(tmp_path, name, cfg):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


def base_cfg(suite, **over):
    cfg = {
        "space": {"kind": "euclidean", "dim": 3},
        "weight": "quadratic(0.3)",
        "params": {"n": 3, "N": 9.0, "eps": 0.4},
        "kappa": -0.5,
        "suite": suite,
        "sampling": {"trials": 200, "seed": 0},
    }
    cfg.update(over)
    return cfg


class TestValidate:
    def test_ok(self, tmp_path, capsys):
        path = write_cfg(tmp_path, "c.json", base_cfg("jacobian"))
        assert main(["validate", "--config", path]) == 0
        assert "config ok" in capsys.readouterr().out

    def test_unknown_field_rejected(self, tmp_path, capsys):
        cfg = base_cfg("jacobian", bogus_field=1)
        path = write_cfg(tmp_path, "c.json", cfg)
        assert main(["validate", "--config", path]) == 2
        assert "bogus_field" in capsys.readouterr().err

    def test_dimension_error_is_config_error(self, tmp_path, capsys):
        # N in the forbidden band ]1, n[ must be caught at validation time
        cfg = base_cfg("jacobian", params={"n": 3, "N": 2.0, "eps": 1.0})
        path = write_cfg(tmp_path, "c.json", cfg)
        assert main(["validate", "--config", path]) == 2
        assert "config error" in capsys.readouterr().err

    def test_missing_file(self, tmp_path):
        assert main(["validate", "--config", str(tmp_path / "nope.json")]) == 2

    def test_infinite_N_token(self, tmp_path):
        cfg = base_cfg("curvature", params={"n": 3, "N": "inf", "eps": 0.4})
        path = write_cfg(tmp_path, "c.json", cfg)
        assert main(["validate", "--config", path]) == 0


class TestRunExitCodes:
    def test_sphere_jacobian_passes(self, tmp_path):
        cfg = {
            "space": {"kind": "sphere", "dim": 2, "radius": 1.0},
            "weight": "zero",
            "params": {"n": 2, "N": 2.0, "eps": 1.0},
            "kappa": 1.0,
            "suite": "jacobian",
            "sampling": {"trials": 300, "seed": 1},
        }
        path = write_cfg(tmp_path, "c.json", cfg)
        out = tmp_path / "out"
        assert main(["run", "--config", path, "--out-dir", str(out),
                     "--quiet"]) == 0
        bundle = json.loads((out / "jacobian_report.json").read_text())
        assert bundle["reports"][0]["verdict"] in ("pass", "vacuous")

    def test_flat_positive_kappa_fails_with_counterexample(self, tmp_path):
        # flat space cannot satisfy a positive lower bound; the violation
        # must be found and recorded
        cfg = base_cfg("jacobian", weight="zero",
                       params={"n": 3, "N": 3.0, "eps": 1.0}, kappa=0.2,
                       sampling={"trials": 2000, "seed": 0})
        path = write_cfg(tmp_path, "c.json", cfg)
        out = tmp_path / "out"
        assert main(["run", "--config", path, "--out-dir", str(out),
                     "--quiet"]) == 1
        ce = json.loads((out / "counterexample.json").read_text())
        assert ce["margin"] < 0.0
        rows = list(csv.reader((out / "worst_ray.csv").open()))
        assert rows[0] == ["t", "det", "J", "h", "l", "D", "Dbar"]
        assert len(rows) > 2

    def test_precondition_exits_2(self, tmp_path, capsys):
        # functional suite needs kappa > 0; the failed hypothesis is named
        cfg = base_cfg("functional", kappa=-1.0,
                       geometry={"kind": "meridian", "points": 101},
                       space={"kind": "sphere", "dim": 2, "radius": 1.0},
                       weight="zero",
                       params={"n": 2, "N": 2.0, "eps": 1.0})
        path = write_cfg(tmp_path, "c.json", cfg)
        assert main(["run", "--config", path, "--out-dir",
                     str(tmp_path / "o")]) == 2
        assert "precondition failed" in capsys.readouterr().err


class TestArtifacts:
    def test_twcd_csv_contract(self, tmp_path):
        cfg = base_cfg(
            "twcd", kappa=-0.5,
            geometry={"kind": "line", "lo": -2.0, "hi": 2.0, "points": 801},
            densities=[{"kind": "bump", "center": -0.4, "width": 0.5},
                       {"kind": "bump", "center": 0.4, "width": 0.6}])
        path = write_cfg(tmp_path, "c.json", cfg)
        out = tmp_path / "out"
        assert main(["run", "--config", path, "--out-dir", str(out),
                     "--quiet"]) == 0
        rows = list(csv.reader((out / "twcd.csv").open()))
        assert rows[0] == ["t", "lhs", "rhs", "margin"]
        for row in rows[1:]:
            t, lhs, rhs, margin = map(float, row)
            assert margin == pytest.approx(rhs - lhs, abs=1e-12)

    def test_taylor_csv_contract(self, tmp_path):
        cfg = base_cfg("taylor")
        path = write_cfg(tmp_path, "c.json", cfg)
        out = tmp_path / "out"
        assert main(["run", "--config", path, "--out-dir", str(out),
                     "--quiet"]) == 0
        per_term = out / "taylor_app2_fwd.csv"
        rows = list(csv.reader(per_term.open()))
        assert rows[0] == ["delta", "exact", "series", "remainder"]
        for row in rows[1:]:
            d, e, s, r = map(float, row)
            assert r == pytest.approx(e - s, abs=1e-15)

    def test_report_contains_resolved_config(self, tmp_path):
        cfg = base_cfg("curvature")
        path = write_cfg(tmp_path, "c.json", cfg)
        out = tmp_path / "out"
        assert main(["run", "--config", path, "--out-dir", str(out),
                     "--quiet"]) == 0
        bundle = json.loads((out / "curvature_report.json").read_text())
        rep = bundle["reports"][0]
        assert rep["config"]["params"]["n"] == 3
        assert rep["seed"] == 0
        assert "t_grid" in rep["config"]["sampling"]
        assert {"name", "margins", "min_margin", "tolerance",
                "verdict"} <= set(rep)


def sphere_cfg(**over):
    cfg = {
        "space": {"kind": "sphere", "dim": 2, "radius": 1.0},
        "weight": "cosine(0.2)",
        "params": {"n": 2, "N": 6.0, "eps": 0.5},
        "kappa": 0.3,
        "suite": "jacobian",
        "sampling": {"trials": 300, "seed": 7},
    }
    cfg.update(over)
    return cfg


class TestDeterminism:
    def test_same_seed_same_hash(self, tmp_path):
        cfg = sphere_cfg()
        path = write_cfg(tmp_path, "c.json", cfg)
        hashes = []
        for sub in ("a", "b"):
            out = tmp_path / sub
            assert main(["run", "--config", path, "--out-dir", str(out),
                         "--quiet"]) == 0
            hashes.append(json.loads(
                (out / "jacobian_report.json").read_text())["hash"])
        assert hashes[0] == hashes[1]

    def test_seed_override_changes_hash(self, tmp_path):
        cfg = sphere_cfg()
        path = write_cfg(tmp_path, "c.json", cfg)
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert main(["run", "--config", path, "--out-dir", str(out1),
                     "--quiet"]) == 0
        assert main(["run", "--config", path, "--out-dir", str(out2),
                     "--seed", "8", "--quiet"]) == 0
        h1 = json.loads((out1 / "jacobian_report.json").read_text())["hash"]
        h2 = json.loads((out2 / "jacobian_report.json").read_text())["hash"]
        assert h1 != h2
