import json
import math

import pytest

import fjohn


def test_profile_values():
    assert fjohn.F(0.0) == pytest.approx(2.0 / 3.0, abs=1e-12)
    assert fjohn.F_prime(0.0) == pytest.approx(1.0, abs=1e-12)
    assert fjohn.F(1.0) == pytest.approx(13.0 / 6.0, abs=1e-12)
    assert fjohn.F(-3.0) == 0.0


def test_two_level_fixture_weights():
    doc = fjohn.fixture("two-level-cross", n=1, s=1.0, rho1sq=0.4, rho2sq=0.8)
    assert sorted(round(w, 12) for w in doc["weights"]) == [0.25, 0.25, 0.75, 0.75]
    assert len(doc["contacts"]) == 4


def test_pipeline_two_level():
    doc = fjohn.fixture("two-level-cross")
    for cmd in ("verify", "coercivity", "minimize-i1"):
        report, code = fjohn.run(cmd, doc, seed=42, dirs=200)
        assert code == 0, report
        assert report["version"] == 1
        assert report["command"] == cmd
        assert report["instance_hash"] == fjohn.instance_hash(doc)
    report, _ = fjohn.run("minimize-i1", doc)
    assert report["result"]["isotropy"]["pass"]
    assert report["result"]["isotropy"]["residual_iso"] <= 1e-8


def test_sweep_csv():
    csv = fjohn.sweep_csv(fjohn.fixture("two-level-cross"))
    lines = csv.strip().splitlines()
    assert lines[0].startswith("r,dist_to_identity")
    assert len(lines) == 5


def test_cross_is_not_coercive():
    report, code = fjohn.run("coercivity", fjohn.fixture("cross"), dirs=100)
    assert code == 2
    assert not report["result"]["pass"]
    labels = {f["label"] for f in report["result"]["failures"]}
    assert "+(Id+(-n/s),0)" in labels


def test_determinism():
    doc = fjohn.fixture("two-level-cross")
    a = fjohn.run("coercivity", doc, seed=3)
    b = fjohn.run("coercivity", doc, seed=3)
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)


def test_errors():
    with pytest.raises(fjohn.FjohnError) as info:
        fjohn.fixture("two-level-cross", rho1sq=0.8, rho2sq=0.4)
    assert fjohn.error_kind(info.value) == "InfeasibleWeights"
    assert fjohn.exit_code("InfeasibleWeights") == 1
    assert fjohn.exit_code("NotConverged") == 3
    with pytest.raises(fjohn.FjohnError):
        fjohn.run("verify", "{not json")
    with pytest.raises(ValueError):
        fjohn.run("plot", {})
