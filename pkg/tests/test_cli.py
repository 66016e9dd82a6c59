import json

import numpy as np
import pytest

from sphere_reduction import io as sio
from sphere_reduction.cli import main

QUARTIC = {"quartic": [1, 2, 3], "epsilon": 0.001}


def write(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return str(p)


def run(tmp_path, cmd, cfg, *extra, out="out"):
    path = write(tmp_path, f"{cmd}.json", cfg)
    args = [cmd, "--config", path, *extra]
    target = None
    if out is not None:
        target = tmp_path / out
        args += ["--out", str(target)]
    return main(args), target


def error_of(capsys):
    line = capsys.readouterr().err.strip()
    assert "\n" not in line
    return json.loads(line)


def test_geodesic_round_sphere_closes(tmp_path):
    cfg = {"deformation": {"quartic": [1, 2, 3], "epsilon": 0.0}, "T": 2 * np.pi, "x0": [1, 0, 0], "v0": [0, 0.6, 0.8]}
    code, out = run(tmp_path, "geodesic", cfg)
    assert code == 0
    tr = sio.load_geodesic_csv(out)
    assert np.linalg.norm(tr.x[-1] - tr.x[0]) <= 1e-8 and np.linalg.norm(tr.v[-1] - tr.v[0]) <= 1e-8


def test_geodesic_then_audit(tmp_path, capsys):
    code, out = run(tmp_path, "geodesic", {"deformation": QUARTIC, "T": 6.0, "x0": [1, 0.3, 0.2], "v0": [-0.2, 0.5, 1]})
    assert code == 0
    code, rep = run(tmp_path, "audit", {"trajectory": str(out), "deformation": QUARTIC}, out="audit.json")
    assert code == 0
    rep = json.loads(rep.read_text())
    assert rep["ok"] and rep["rows"] > 900 and rep["max_phi"] <= 1e-10


def test_audit_flags_bad_rows(tmp_path):
    code, out = run(tmp_path, "geodesic", {"deformation": QUARTIC, "T": 1.0, "x0": [1, 0, 0], "v0": [0, 1, 0]})
    lines = out.read_text().splitlines()
    cols = lines[2].split(",")
    cols[1] = "1.5"
    lines[2] = ",".join(cols)
    out.write_text("\n".join(lines) + "\n")
    code, rep = run(tmp_path, "audit", {"trajectory": str(out), "deformation": QUARTIC}, out="audit.json")
    assert code == 1
    assert not json.loads(rep.read_text())["ok"]


def test_malformed_json(tmp_path, capsys):
    code, _ = run(tmp_path, "geodesic", "{not json")
    assert code == 2
    assert error_of(capsys)["error"] == "config-error"


def test_missing_config_file(tmp_path, capsys):
    assert main(["classify", "--config", str(tmp_path / "nope.json")]) == 2
    assert error_of(capsys)["error"] == "io-error"


def test_unknown_keys_rejected(tmp_path, capsys):
    code, _ = run(tmp_path, "classify", {"eps": [1, 1, 1], "colour": "red"})
    assert code == 2
    err = error_of(capsys)
    assert err["error"] == "config-error" and "colour" in err["message"]


@pytest.mark.parametrize(
    "cmd,cfg",
    [
        ("geodesic", {"deformation": QUARTIC, "T": 1.0, "dt": -0.1}),
        ("geodesic", {"deformation": QUARTIC, "T": float("nan")}),
        ("reduce", {"T": 1.0, "dt": 0.1}),
        ("compare", {"T": 1.0}),
        ("scan", {"resolution": 1}),
        ("section", {"deformation": {"quartic": [1, 2, 0, 0], "epsilon": 1}, "T": 1, "dt": 0.1, "direction": 3}),
        ("raytransform", {"deformation": QUARTIC, "plane": {"n": 3, "comps": [1, 0, 0]}, "mode": "median"}),
    ],
)
def test_invalid_configs_exit_2(tmp_path, capsys, cmd, cfg):
    code, _ = run(tmp_path, cmd, cfg)
    assert code == 2
    assert error_of(capsys)["error"] == "config-error"


def test_numerical_errors_exit_3(tmp_path, capsys):
    cfg = {"casimir_n": 4, "T": 1.0, "dt": 0.1, "l0": {"n": 4, "comps": [1, 0, 0, 0, 0, 1]}}
    code, _ = run(tmp_path, "reduce", cfg)
    assert code == 3
    assert error_of(capsys)["error"] == "degenerate-plane"


def test_reduce_casimir_is_constant(tmp_path):
    code, out = run(tmp_path, "reduce", {"casimir_n": 4, "T": 5.0, "dt": 0.1})
    assert code == 0
    tr = sio.load_reduced_csv(out)
    assert np.all(tr.comps == tr.comps[0])


def test_reduce_axisymmetric_keeps_l34(tmp_path):
    cfg = {"deformation": {"quartic": [1, 2, 0, 0], "epsilon": 1.0}, "T": 100.0, "dt": 0.01}
    code, out = run(tmp_path, "reduce", cfg, "--seed", "3")
    assert code == 0
    tr = sio.load_reduced_csv(out)
    assert np.ptp(tr.l34) <= 1e-9


def test_reduce_sweep_writes_manifest(tmp_path):
    cfg = {"deformation": {"quartic": [1, 2, 3], "epsilon": 0.1}, "epsilons": [0.1, 0.2, 0.0], "T": 5.0, "dt": 0.05}
    code, out = run(tmp_path, "reduce", cfg, out="sweep")
    assert code == 0
    man = json.loads((out / "manifest.json").read_text())
    assert [r["epsilon"] for r in man["runs"]] == [0.1, 0.2, 0.0]
    for r in man["runs"]:
        tr = sio.load_reduced_csv(out / r["file"])
        assert len(tr) == r["rows"] == 101
    assert sorted(f.name for f in out.iterdir()) == ["manifest.json", "reduced_000.csv", "reduced_001.csv", "reduced_002.csv"]


def test_sweep_needs_out_directory(tmp_path, capsys):
    cfg = {"deformation": QUARTIC, "epsilons": [0.1], "T": 1.0, "dt": 0.1}
    code, _ = run(tmp_path, "reduce", cfg, out=None)
    assert code == 2


def test_raytransform_json(tmp_path):
    d = {"n": 3, "epsilon": 0.5, "terms": [{"coeff": 1.0, "powers": [4, 0, 0]}]}
    plane = {"n": 3, "comps": [1, 0, 0]}
    for mode, val in [("mean", 3 / 8), ("integral", 2 * np.pi * 3 / 8), ("hamiltonian", 0.5 * 3 / 8)]:
        code, out = run(tmp_path, "raytransform", {"deformation": d, "plane": plane, "mode": mode, "N": 16}, out=f"{mode}.json")
        assert code == 0
        obj = json.loads(out.read_text())
        assert obj["value"] == pytest.approx(val, abs=1e-15) and obj["N"] == 16


def test_compare_round_sphere(tmp_path):
    cfg = {"deformation": {"quartic": [1, 2, 3], "epsilon": 0.0}, "T": 5.0, "x0": [1, 0.3, 0.2], "v0": [-0.2, 0.5, 1]}
    code, out = run(tmp_path, "compare", cfg)
    assert code == 0
    rep = json.loads(out.read_text())
    assert set(rep) == {"sup_deviation", "epsilon", "T", "kappa"}
    assert rep["sup_deviation"] <= 1e-8


def test_compare_two_epsilons_reports_ratio(tmp_path):
    cfg = {"deformation": {"quartic": [1, 2, 3]}, "epsilons": [0.04, 0.02], "x0": [1, 0.3, 0.2], "v0": [-0.2, 0.5, 1]}
    code, out = run(tmp_path, "compare", cfg)
    assert code == 0
    doc = json.loads(out.read_text())
    assert len(doc["reports"]) == 2 and doc["reports"][1]["T"] == pytest.approx(50.0)
    assert doc["ratio"] == pytest.approx(doc["reports"][0]["sup_deviation"] / doc["reports"][1]["sup_deviation"])
    assert isinstance(doc["ratio_ok"], bool)


def test_classify_type_one(tmp_path):
    code, out = run(tmp_path, "classify", {"eps": [1, 1, 1]})
    assert code == 0
    rep = json.loads(out.read_text())
    assert rep["type"] == "I" and rep["counts"] == {"centers": 7, "saddles": 6} and len(rep["points"]) == 13


def test_scan_labels(tmp_path):
    code, out = run(tmp_path, "scan", {"resolution": 40}, "--threads", "2")
    assert code == 0
    rows = sio.load_scan_csv(out)
    assert {r[3] for r in rows} <= {"I", "II", "III", "IV", "boundary"}
    assert {"I", "II", "III", "IV"} <= {r[3] for r in rows}


def test_section_writes_points_and_meta(tmp_path):
    cfg = {"deformation": {"quartic": [1, 2, 0, 0], "epsilon": 1.0}, "T": 300.0, "dt": 0.02, "coord": "l_0_1"}
    code, out = run(tmp_path, "section", cfg, out="sec.csv")
    assert code == 0
    t, pts = sio.load_section_csv(out)
    meta = json.loads((tmp_path / "sec.csv.meta.json").read_text())
    assert meta["crossings"] == len(t) > 0
    assert np.allclose(pts[:, 0], 0.0, atol=1e-12)


@pytest.mark.parametrize(
    "cmd,cfg",
    [
        ("geodesic", {"deformation": QUARTIC, "T": 2.0}),
        ("reduce", {"deformation": {"quartic": [1, 2, 3, 4], "epsilon": 1.0}, "T": 5.0, "dt": 0.05}),
        ("classify", {"eps": [1, 2, 10]}),
        ("scan", {"resolution": 10}),
    ],
)
def test_outputs_are_deterministic(tmp_path, cmd, cfg):
    _, a = run(tmp_path, cmd, cfg, "--seed", "11", out="a")
    _, b = run(tmp_path, cmd, cfg, "--seed", "11", out="b")
    assert a.read_bytes() == b.read_bytes()
    _, c = run(tmp_path, cmd, cfg, "--seed", "12", out="c")
    if cmd in ("geodesic", "reduce"):
        assert a.read_bytes() != c.read_bytes()


def test_stdout_when_no_out(tmp_path, capsys):
    code, _ = run(tmp_path, "classify", {"eps": [1, 1, -1]}, out=None)
    assert code == 0
    assert json.loads(capsys.readouterr().out)["type"] == "III"
