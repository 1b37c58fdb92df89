"""End-to-end command line tests driven through main() in-process."""

import csv
import json
from pathlib import Path

import pytest

from groundstate.experiment_cli import COLUMNS, main


def write_config(path: Path, **overrides) -> Path:
    cfg = {
        "mode": "linear",
        "space_dim": 3,
        "potential": {"kind": "power", "c": 1.0, "s": 4.0},
        "grid": {"r_max": 3.2, "n": 300},
        "f": {"kind": "phi"},
        "sweep": {"from_offset": -0.1, "to_offset": 0.1, "steps": 8},
        "output_dir": str(path.parent / "out"),
    }
    cfg.update(overrides)
    path.write_text(json.dumps(cfg))
    return path


def read_rows(path: Path) -> list[dict]:
    with open(path, newline="") as handle:
        return list(csv.DictReader(handle))


def test_linear_run_writes_deterministic_outputs(tmp_path):
    cfg = write_config(tmp_path / "cfg.json")
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert main(["run", str(cfg), "--out", str(out_a)]) == 0
    assert main(["run", str(cfg), "--out", str(out_b)]) == 0
    for name in ("spectrum.json", "sweep.csv"):
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes()

    meta = json.loads((out_a / "spectrum.json").read_text())
    assert meta["mode"] == "linear"
    assert meta["grid"]["n"] == 300
    assert meta["Lambda"] == pytest.approx(4.7996730298, abs=1e-3)
    assert len(meta["config_hash"]) == 16

    rows = read_rows(out_a / "sweep.csv")
    assert len(rows) == 8
    assert list(rows[0].keys()) == COLUMNS
    for row in rows:
        offset = float(row["offset"])
        # f = phi solves exactly: u1 = 1/(Lambda - mu) = -1/offset
        assert float(row["u1_component"]) == pytest.approx(-1.0 / offset, rel=1e-8)
        assert row["in_window"] == "1"
        assert row["certified"] == "1"
        if offset < 0:
            assert row["bound_lo"] != "" and row["bound_hi"] == ""
            assert row["branch"] == "MP"
        else:
            assert row["bound_hi"] != "" and row["bound_lo"] == ""
            assert row["branch"] == "AMP"


def test_seed_and_grid_scale_enter_the_hash(tmp_path):
    cfg = write_config(tmp_path / "cfg.json", mode="eigen")
    cfg_d = {}
    for tag, extra in (("base", []), ("seeded", ["--seed", "7"]), ("fine", ["--grid-scale", "2.0"])):
        out = tmp_path / tag
        assert main(["run", str(cfg), "--out", str(out), *extra]) == 0
        cfg_d[tag] = json.loads((out / "spectrum.json").read_text())
    assert cfg_d["base"]["config_hash"] != cfg_d["seeded"]["config_hash"]
    assert cfg_d["base"]["config_hash"] != cfg_d["fine"]["config_hash"]
    assert cfg_d["seeded"]["seed"] == 7
    assert cfg_d["fine"]["grid"]["n"] == 600
    # eigen mode emits a header-only sweep
    sweep = (tmp_path / "base" / "sweep.csv").read_text().splitlines()
    assert sweep == [",".join(COLUMNS)]
    assert cfg_d["base"]["window_rule"] == "delta0"


def test_dump_solutions_writes_profiles(tmp_path):
    cfg = write_config(
        tmp_path / "cfg.json",
        mu_offsets=[-0.1, 0.05],
        dump_solutions=[-0.1],
    )
    del_sweep = json.loads(cfg.read_text())
    del del_sweep["sweep"]
    cfg.write_text(json.dumps(del_sweep))
    out = tmp_path / "out"
    assert main(["run", str(cfg), "--out", str(out)]) == 0
    dump = out / "solution_-0.1.csv"
    assert dump.exists()
    lines = dump.read_text().splitlines()
    assert lines[0] == "r,phi,u"
    assert len(lines) == 1 + 300
    assert not (out / "solution_0.05.csv").exists()


def test_report_copies_cells_verbatim(tmp_path):
    cfg = write_config(tmp_path / "cfg.json")
    out = tmp_path / "out"
    assert main(["run", str(cfg), "--out", str(out)]) == 0
    curves = tmp_path / "curves"
    assert main(["report", str(out / "sweep.csv"), "--out", str(curves)]) == 0

    sweep_rows = read_rows(out / "sweep.csv")
    gsp_rows = read_rows(curves / "gsp_curve.csv")
    blow_rows = read_rows(curves / "blowup_curve.csv")
    assert len(gsp_rows) == len(blow_rows) == len(sweep_rows)
    for src, gsp, blow in zip(sweep_rows, gsp_rows, blow_rows):
        for col in ("mu", "offset", "branch", "min_ratio", "max_ratio", "certified"):
            assert gsp[col] == src[col]
        for col in ("mu", "offset", "x_norm", "xnorm_bound"):
            assert blow[col] == src[col]


def test_report_rejects_foreign_csv(tmp_path):
    bad = tmp_path / "not_a_sweep.csv"
    bad.write_text("mu,offset\n1.0,0.1\n")
    assert main(["report", str(bad), "--out", str(tmp_path / "curves")]) == 2


def test_config_errors_exit_2(tmp_path):
    # schema violation: output_dir missing
    incomplete = tmp_path / "incomplete.json"
    cfg = json.loads(write_config(tmp_path / "tmp.json").read_text())
    del cfg["output_dir"]
    incomplete.write_text(json.dumps(cfg))
    assert main(["run", str(incomplete)]) == 2

    # unparseable JSON
    garbled = tmp_path / "garbled.json"
    garbled.write_text("{not json")
    assert main(["run", str(garbled)]) == 2

    # missing file
    assert main(["run", str(tmp_path / "absent.json")]) == 2

    # mu = Lambda is singular and refused up front
    zero = write_config(tmp_path / "zero.json", mu_offsets=[0.0])
    cfg = json.loads(zero.read_text())
    del cfg["sweep"]
    zero.write_text(json.dumps(cfg))
    assert main(["run", str(zero)]) == 2


def test_numerical_failure_exits_3(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    write_config(
        cfg_path,
        mode="semilinear",
        nonlinearity={"kind": "rational", "kappa": 1.0, "K": 2.0},
        mu_offsets=[-1.0],  # far outside the semilinear window
    )
    cfg = json.loads(cfg_path.read_text())
    del cfg["sweep"]
    del cfg["f"]
    cfg_path.write_text(json.dumps(cfg))
    assert main(["run", str(cfg_path), "--out", str(tmp_path / "out")]) == 3


def test_uncertified_rows_exit_4_but_write_outputs(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    write_config(
        cfg_path,
        mu_offsets=[-2.5],  # outside delta0: solve works, certificate does not
        require_certificates=True,
    )
    cfg = json.loads(cfg_path.read_text())
    del cfg["sweep"]
    cfg_path.write_text(json.dumps(cfg))
    out = tmp_path / "out"
    assert main(["run", str(cfg_path), "--out", str(out)]) == 4
    rows = read_rows(out / "sweep.csv")
    assert len(rows) == 1
    assert rows[0]["certified"] == "0"
    assert rows[0]["in_window"] == "0"
    assert (out / "spectrum.json").exists()


def test_semilinear_run_reports_two_start(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    write_config(
        cfg_path,
        mode="semilinear",
        nonlinearity={"kind": "rational", "kappa": 1.0, "K": 2.0},
        mu_offsets=[-0.1, 0.05],
    )
    cfg = json.loads(cfg_path.read_text())
    del cfg["sweep"]
    del cfg["f"]
    cfg_path.write_text(json.dumps(cfg))
    out = tmp_path / "out"
    assert main(["run", str(cfg_path), "--out", str(out)]) == 0
    rows = read_rows(out / "sweep.csv")
    assert [row["branch"] for row in rows] == ["MP", "AMP"]
    for row in rows:
        assert row["certified"] == "1"
        assert float(row["two_start_gap"]) <= 1e-7
        assert row["bo_residual"] != ""
        assert int(row["violations"]) == 0
    meta = json.loads((out / "spectrum.json").read_text())
    assert meta["window_rule"] == "min(delta0, kappa/(2*c0*K))"


def test_system_run_extras_and_bounds(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    write_config(
        cfg_path,
        mode="system",
        matrix={"a": 0.0, "b": 1.0, "c": 4.0, "d": 0.0},
        nonlinearity={"kind": "rational", "kappa": 1.0, "K": 2.0},
        mu_offsets=[-0.1],
        solver={"two_start": False},
        grid={"r_max": 3.2, "n": 200},
    )
    cfg = json.loads(cfg_path.read_text())
    del cfg["sweep"]
    del cfg["f"]
    cfg_path.write_text(json.dumps(cfg))
    out = tmp_path / "out"
    assert main(["run", str(cfg_path), "--out", str(out)]) == 0
    meta = json.loads((out / "spectrum.json").read_text())
    assert meta["xi1"] == pytest.approx(2.0, abs=1e-12)
    assert meta["xi2"] == pytest.approx(-2.0, abs=1e-12)
    assert meta["lambda_star"] == pytest.approx(meta["Lambda"] - 2.0, abs=1e-10)
    assert meta["y"] == pytest.approx([1.0, 2.0])
    assert meta["kappa_prime"] == pytest.approx(0.75)
    assert meta["k_prime"] == pytest.approx(1.5)
    rows = read_rows(out / "sweep.csv")
    assert len(rows) == 1
    assert rows[0]["certified"] == "1"
    assert float(rows[0]["v2_xnorm"]) <= float(rows[0]["v2_bound"])
