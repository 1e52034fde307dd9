import csv
import io as _io
import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ksmms import io, space
from ksmms.errors import BadExpression, IoFailure, SizeCap
from ksmms.harness import report, suite
from ksmms.harness.cli import main
from ksmms.harness.expr import evaluate
from ksmms.harness.generators import gen_function, gen_space
from ksmms.lipschitz import lip_constant


# ---------------------------------------------------------------------------
# expression grammar
# ---------------------------------------------------------------------------


@pytest.mark.parametrize(
    "text,expected",
    [
        ("x1^2", [0.0, 1.0, 4.0]),
        ("2*x1 + 1", [1.0, 3.0, 5.0]),
        ("-x1 / 2", [0.0, -0.5, -1.0]),
        ("3", [3.0, 3.0, 3.0]),
        ("exp(0*x1) + cos(0)", [2.0, 2.0, 2.0]),
    ],
)
def test_expr_values(text, expected):
    assert evaluate(text, np.array([[0.0], [1.0], [2.0]])).tolist() == expected


def test_expr_two_dims():
    pts = np.array([[1.0, 2.0], [3.0, -1.0]])
    assert evaluate("x1*x2 - sin(0*x2)", pts).tolist() == [2.0, -3.0]


@pytest.mark.parametrize(
    "text",
    ["", "x1 ** 2", "y", "x0", "__import__('os')", "abs(x1)", "x1 < 2", "[x1]", "sin(x1, x1)", "'a'", "x3", "1/x1", "True"],
)
def test_expr_rejects(text):
    with pytest.raises(BadExpression):
        evaluate(text, np.array([[0.0, 1.0], [1.0, 2.0]]))


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------


def test_canonical_line_points():
    sp = gen_space("line-points", 2)
    assert sp.dist[0, 1] == 1.0 and sp.mass.tolist() == [0.5, 0.5]


@pytest.mark.parametrize("kind,size,n", [("grid-1d", 5, 5), ("grid-2d", 4, 16), ("random-cloud", 7, 7), ("line-points", 3, 3)])
def test_gen_space_kinds(kind, size, n):
    a, b = gen_space(kind, size, seed=5), gen_space(kind, size, seed=5)
    assert a.n == n and np.array_equal(a.dist, b.dist) and np.array_equal(a.mass, b.mass)
    assert a.total_mass == pytest.approx(1.0, rel=1e-15)


def test_gen_space_guards():
    with pytest.raises(SizeCap):
        gen_space("grid-2d", 50)
    with pytest.raises(ValueError):
        gen_space("torus", 4)


def test_gen_function_kinds():
    sp = gen_space("grid-2d", 3)
    assert gen_function("indicator", sp, subset=["0", "4"]).nonzero()[0].tolist() == [0, 4]
    poly = gen_function("polynomial", sp, expression="x1^2")
    assert np.array_equal(poly, sp.coords[:, 0] ** 2)
    assert np.array_equal(gen_function("random-uniform", sp, seed=1), gen_function("random-uniform", sp, seed=1))
    with pytest.raises(ValueError):
        gen_function("noise", sp)


@given(st.integers(0, 2**32 - 1), st.integers(2, 30), st.floats(0.0, 5.0))
def test_random_lipschitz_respects_bound(seed, n, L):
    sp = gen_space("random-cloud", n, seed=seed)
    f = gen_function("random-lipschitz", sp, seed=seed, L=L)
    assert lip_constant(sp, f) <= L


# ---------------------------------------------------------------------------
# file formats
# ---------------------------------------------------------------------------


def test_space_roundtrip(tmp_path):
    sp = gen_space("random-cloud", 6, seed=2)
    io.save_space(sp, tmp_path / "s.json")
    back = io.load_space(tmp_path / "s.json")
    assert back.point_ids == sp.point_ids
    assert np.array_equal(back.mass, sp.mass) and np.array_equal(back.dist, sp.dist)


def test_matrix_space_roundtrip():
    sp = space.build_space(["u", "v", "w"], [1, 2, 3], dist=[[0, 1, 2], [1, 0, 1], [2, 1, 0]])
    doc = io.space_to_dict(sp)
    assert doc["metric"]["type"] == "matrix"
    assert np.array_equal(io.space_from_dict(doc).dist, sp.dist)


def test_function_roundtrip(tmp_path):
    io.save_function([1.0, -2.5], tmp_path / "f.json", {"note": 1})
    assert io.load_function(tmp_path / "f.json", 2).tolist() == [1.0, -2.5]
    with pytest.raises(ValueError):
        io.load_function(tmp_path / "f.json", 3)


@pytest.mark.parametrize(
    "doc",
    [
        {"format_version": 2, "values": [1.0]},
        {"format_version": 1},
        {"format_version": 1, "values": [[1.0]]},
        [1.0],
    ],
)
def test_function_rejects(doc):
    with pytest.raises(ValueError):
        io.function_from_dict(doc)


def test_io_failures(tmp_path):
    with pytest.raises(IoFailure):
        io.read_json(tmp_path / "missing.json")
    with pytest.raises(IoFailure):
        io.write_json({}, tmp_path / "no" / "dir.json")
    (tmp_path / "bad.json").write_text("{")
    with pytest.raises(ValueError):
        io.read_json(tmp_path / "bad.json")


def test_balls_doc():
    assert io.balls_from_doc({"balls": [{"center": "a", "radius": 1}]}) == [("a", 1.0)]
    with pytest.raises(ValueError):
        io.balls_from_doc([{"center": "a"}])


# ---------------------------------------------------------------------------
# suite and reports
# ---------------------------------------------------------------------------


def test_empty_run_passes():
    rep = suite.run_suite(suite.SuiteConfig(trial_scale=0))
    assert rep["records"] == [] and rep["summary"]["ok"]
    skeleton = report.empty_report(rep["config"])
    assert skeleton["summary"]["total"] == 0 == rep["summary"]["total"]
    assert set(skeleton) == set(rep)


def test_config_roundtrip():
    cfg = suite.SuiteConfig(seed=7, trials={"holder": 3}, checks=("holder",))
    assert suite.SuiteConfig.from_dict(json.loads(json.dumps(cfg.to_dict()))) == cfg


def test_unknown_check():
    with pytest.raises(ValueError):
        suite.run_suite(suite.SuiteConfig(checks=("nope",)))


def test_trial_inputs_are_independent_of_other_checks():
    check = suite.CHECKS_BY_NAME["holder"]
    a = suite.make_inputs(check, suite.SuiteConfig(), 3)
    b = suite.make_inputs(check, suite.SuiteConfig(trials={"norm_axioms": 1}), 3)
    assert a == b
    assert a != suite.make_inputs(check, suite.SuiteConfig(seed=43), 3)


def test_small_run_records_and_csv(tmp_path):
    cfg = suite.SuiteConfig(checks=("holder", "weak_type", "layer_cake"), trials={"holder": 4, "weak_type": 3, "layer_cake": 2})
    rep = suite.run_suite(cfg)
    assert rep["summary"]["ok"] and rep["summary"]["total"] == 9
    rec = rep["records"][0]
    assert {"id", "criterion", "inputs_digest", "values", "asserted", "report_only", "passed"} <= set(rec)
    rows = list(csv.reader(_io.StringIO(report.to_csv(rep))))
    assert rows[0] == list(report.CSV_COLUMNS) and len(rows) == 1 + len(rep["records"])
    report.emit_report(rep, tmp_path, report.FORMATS)
    assert json.loads((tmp_path / "report.json").read_text()) == rep
    assert (tmp_path / "records.csv").read_text() == report.to_csv(rep)
    assert list(tmp_path.glob("*.svg"))
    again = suite.replay(rep, "holder/0002")
    assert again["passed"] and again["digest_matches"]
    assert again["values"] == suite.find_record(rep, "holder/0002")["values"]


def test_emit_report_io_failure(tmp_path):
    target = tmp_path / "file"
    target.write_text("")
    with pytest.raises(IoFailure):
        report.emit_report(report.empty_report(), target / "sub", ("json",))


def test_mutation_is_caught_and_replayable(monkeypatch):
    # without renormalization the weights sum past one and the inclusion fails
    monkeypatch.setattr(space, "_normalize_weights", lambda raw: raw)
    monkeypatch.setattr(suite, "_CACHE", {})
    cfg = suite.SuiteConfig(checks=("ks_monotonicity",))
    rep = suite.run_suite(cfg)
    assert not rep["summary"]["ok"]
    bad = rep["summary"]["counterexamples"][0]
    rec = suite.find_record(rep, bad)
    assert rec["reproducer"] and rec["asserted"]["monotone"] is False
    assert not suite.replay(rep, bad)["passed"]
    monkeypatch.undo()
    suite._CACHE.clear()
    fixed = suite.replay(rep, bad)
    assert fixed["passed"] and fixed["digest_matches"]


def test_failures_become_records():
    check = suite.Check("boom", None, 1, lambda rng, t, cfg: {"x": 1}, lambda inputs, cfg: 1 / 0)
    rec = suite.evaluate(check, suite.SuiteConfig(), 0, {"x": 1})
    assert not rec["passed"] and rec["error"].startswith("ZeroDivisionError")
    assert rec["reproducer"] == {"x": 1}


# ---------------------------------------------------------------------------
# command line
# ---------------------------------------------------------------------------


@pytest.fixture
def files(tmp_path):
    sp = gen_space("line-points", 2)
    io.save_space(sp, tmp_path / "s.json")
    io.save_function([0.0, 1.0], tmp_path / "f.json")
    io.write_json({"balls": [{"center": "0", "radius": 0.5}, {"center": "1", "radius": 0.5}, {"center": "0", "radius": 1.0}]}, tmp_path / "b.json")
    return tmp_path


def _run(argv, out):
    code = main(argv + ["--out", str(out)])
    return code, json.loads(out.read_text()) if out.exists() else None


def test_cli_validate_norm_maximal(files):
    code, doc = _run(["validate", "--space", str(files / "s.json"), "--fn", str(files / "f.json")], files / "v.json")
    assert code == 0 and doc["doubling_constant"] == 2.0 and doc["function"] == "ok"
    code, doc = _run(["norm", "--space", str(files / "s.json"), "--fn", str(files / "f.json"), "--p", "inf"], files / "n.json")
    assert code == 0 and doc["p"] == "inf" and doc["lp_norm"] == 1.0
    code, doc = _run(["maximal", "--space", str(files / "s.json"), "--fn", str(files / "f.json")], files / "m.json")
    assert code == 0 and doc["values"] == [0.5, 1.0]


def test_cli_seminorm_writes_witness(files):
    code, doc = _run(["seminorm", "--space", str(files / "s.json"), "--fn", str(files / "f.json")], files / "w.json")
    diag = doc["diagnostics"]
    assert code == 0 and diag["converged"] and diag["feasibility_residual"] <= 1e-12
    assert 0 < diag["value"] <= diag["envelope_value"]
    code, _ = _run(["seminorm", "--space", str(files / "s.json"), "--fn", str(files / "f.json"), "--tol", "1e-15", "--max-iters", "1"], files / "w2.json")
    assert code == 1


def test_cli_cover_layercake_poincare(files):
    code, doc = _run(["cover", "--space", str(files / "s.json"), "--balls", str(files / "b.json")], files / "c.json")
    assert code == 0 and [s["index"] for s in doc["selected"]] == [2] and doc["check"]["ok"]
    code, doc = _run(["layercake", "--space", str(files / "s.json"), "--fn", str(files / "f.json"), "--psi", "0,2"], files / "l.json")
    assert code == 0 and doc["lhs"] == 0.5
    code, doc = _run(["poincare", "--space", str(files / "s.json"), "--fn", str(files / "f.json")], files / "p.json")
    assert code == 0 and doc["ok_derived"]


def test_cli_gen_grid_wsnorm(files):
    code, _ = _run(["gen", "space", "--kind", "grid-1d", "--size", "9"], files / "g.json")
    assert code == 0
    code, doc = _run(["gen", "fn", "--kind", "polynomial", "--expr", "x1^2", "--space", str(files / "g.json")], files / "gf.json")
    assert code == 0 and doc["values"][-1] == 1.0
    code, _ = _run(["grid", "--dim", "1", "--n", "9"], files / "grid.json")
    assert code == 0 and (files / "grid.grid.json").exists()
    code, doc = _run(["wsnorm", "--grid", str(files / "grid.grid.json"), "--fn", str(files / "gf.json"), "--k", "2"], files / "ws.json")
    assert code == 0 and doc["ws_norm"] > 0
    code, doc = _run(["wsnorm", "--space", str(files / "s.json"), "--fn", str(files / "f.json")], files / "ws1.json")
    assert code == 0 and doc["ws_norm"] == pytest.approx(doc["ks_norm"] + doc["seminorm"], rel=1e-15)


def test_cli_bad_input_exit_code(files, capsys):
    (files / "bad.json").write_text(json.dumps({"format_version": 1, "values": [1.0]}))
    assert main(["norm", "--space", str(files / "s.json"), "--fn", str(files / "bad.json")]) == 2
    assert "ValueError" in capsys.readouterr().err
    assert main(["gen", "fn", "--kind", "polynomial", "--expr", "x1 ** 2", "--space", str(files / "s.json")]) == 2
    with pytest.raises(SystemExit):
        main(["norm", "--space", str(files / "s.json"), "--fn", str(files / "f.json"), "--p", "0.5"])


def test_cli_verify_replay_report(tmp_path, capsys):
    out = tmp_path / "rep"
    assert main(["verify", "--checks", "covering,layer_cake", "--trials", "covering=3", "--trials", "layer_cake=2", "--out", str(out)]) == 0
    assert "PASS  covering" in capsys.readouterr().out
    rep = json.loads((out / "report.json").read_text())
    assert rep["summary"]["total"] == 5
    code, doc = _run(["replay", "--report", str(out / "report.json"), "--record", "covering/0001"], tmp_path / "r.json")
    assert code == 0 and doc["passed"]
    assert main(["report", "--report", str(out / "report.json"), "--format", "csv", "--out", str(tmp_path / "again")]) == 0
    assert (tmp_path / "again" / "records.csv").read_bytes() == (out / "records.csv").read_bytes()
