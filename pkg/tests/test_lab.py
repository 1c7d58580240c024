import csv
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import dblquad

from conftest import disk
from crl.cli import main
from crl.conformal import ConformalFactor
from crl.errors import ConfigError, TruncationTooSmall
from crl.lab import (ExperimentConfig, MassPenalty, product_volume_growth_demo, ramp_quotient,
                     ramp_tube_quotient)
from crl.mass import brown_york_mass


def _write(tmp_path, d, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(d))
    return str(p)


def test_config_rejects_unknown_keys_and_values():
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"experiment": "eig", "bogus": 1})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"experiment": "teleport"})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"experiment": "eig", "tol": 1.0})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"experiment": "deform", "budgets": {"t_maximum": 1.0}})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"experiment": "eig", "space": {"kind": "torus", "n": 2}})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"experiment": "eig", "space": {"kind": "sphere", "n": 2},
                                    "region": {"shape": "ball", "radius": 4.0}})


def test_config_hash_is_stable_and_sensitive():
    a = ExperimentConfig.from_dict({"experiment": "eig", "h": 0.1})
    b = ExperimentConfig.from_dict({"h": 0.1, "experiment": "eig"})
    c = ExperimentConfig.from_dict({"experiment": "eig", "h": 0.2})
    assert a.hash == b.hash != c.hash


def test_ramp_quotient_matches_direct_integration():
    r = 0.4
    # |grad f|^2 and f^2 over the sphere in polar coordinates
    grad = dblquad(lambda t, p: math.sin(t) / r ** 2, 0, 2 * math.pi, r, 2 * r)[0]
    ramp = dblquad(lambda t, p: ((t - r) / r) ** 2 * math.sin(t), 0, 2 * math.pi, r, 2 * r)[0]
    flat = 2 * math.pi * (1 + math.cos(2 * r))
    assert math.isclose(ramp_quotient(r), grad / (ramp + flat), rel_tol=1e-9)


@settings(max_examples=30)
@given(st.floats(0.01, math.pi / 2))
def test_ramp_quotient_is_monotone(r):
    assert ramp_quotient(0.9 * r) <= ramp_quotient(r)


def test_ramp_quotient_small_ball_limit():
    # in two dimensions a linear ramp keeps a Dirichlet energy of 3 pi / (4 pi)
    assert abs(ramp_quotient(1e-4) - 0.75) < 1e-3


def test_tube_quotient_formula():
    L = 7.0
    # ramp: 1 on [0, L/2], linear to 0 on [L/2, L], radial weight rho
    grad = (4 / L ** 2) * (L ** 2 / 2 - L ** 2 / 8)
    inner = L ** 2 / 8
    outer = sum(((L - rho) * 2 / L) ** 2 * rho for rho in np.linspace(L / 2, L, 200001)[:-1]) * (L / 2) / 200000
    assert math.isclose(ramp_tube_quotient(L), grad / (inner + outer), rel_tol=1e-4)


def test_product_demo_and_refusal():
    ok = ExperimentConfig("product", space={"kind": "product", "n": 4, "k": 2}, truncation=20.0)
    result, rows, checks = product_volume_growth_demo(ok)
    assert all(checks.values())
    assert result["schrodingerUpperBound"] < 0
    with pytest.raises(TruncationTooSmall):
        product_volume_growth_demo(ExperimentConfig("product", space={"kind": "product", "n": 4, "k": 2},
                                                    truncation=1.0))


def test_mass_penalty_matches_mass_and_gradient():
    dom = disk(h=0.15)
    obj = MassPenalty(dom)
    rng = np.random.default_rng(0)
    y = rng.standard_normal(len(obj.I))
    v = obj.factor(y)
    assert math.isclose(obj.mass(v), brown_york_mass(ConformalFactor.from_values(dom, obj.full(v))).value,
                        rel_tol=1e-10)
    obj.penalty = 50.0
    _, g = obj(y)
    d = rng.standard_normal(len(y))
    fd = (obj(y + 1e-6 * d)[0] - obj(y - 1e-6 * d)[0]) / 2e-6
    assert math.isclose(fd, g @ d, rel_tol=1e-6)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_restored_points_are_feasible_with_nonnegative_mass(seed):
    obj = MassPenalty(disk(kind="hyperbolic", h=0.15))
    y = obj.restore(np.random.default_rng(seed).standard_normal(len(obj.I)))
    v = obj.factor(y)
    assert np.min(obj.curvature(y, v) - obj.Rb) >= -1e-12
    assert obj.mass(v) >= -1e-12


# -- command line ------------------------------------------------------------

def test_cli_writes_report_and_rows(tmp_path):
    cfg = _write(tmp_path, {"space": {"kind": "euclidean", "n": 2}, "region": {"shape": "ball", "radius": 1.0}})
    out = tmp_path / "out"
    assert main(["eig", "--config", cfg, "--out", str(out), "--h", "0.1", "--seed", "4"]) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["seed"] == 4 and report["config"]["h"] == 0.1
    assert len(report["configHash"]) == 16 and report["meshHash"]
    assert report["tolerances"]["solver"] == 1e-8
    with open(out / "rows.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["vertex", "value"] and len(rows) > 1
    assert "total" in json.loads((out / "timings.json").read_text())


def test_cli_sweep_rows_have_header(tmp_path):
    cfg = _write(tmp_path, {"experiment": "karp-pinsky", "space": {"kind": "euclidean", "n": 2}})
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    with open(tmp_path / "o" / "rows.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) >= 8 and set(rows[0]) >= {"parameter", "value", "h", "residual"}


@pytest.mark.parametrize("command,cfg,code", [
    ("eig", {"experiment": "eig", "bogus": True}, 2),
    ("sweep", {"experiment": "eig"}, 2),
    ("mesh", {"space": {"kind": "sphere", "n": 2}, "region": {"shape": "ball", "radius": 9.0}}, 2),
    ("verify", {"experiment": "rigidity", "space": {"kind": "sphere", "n": 2},
                "region": {"shape": "ball", "radius": 2.0}, "h": 0.2}, 3),
    ("deform", {"space": {"kind": "hyperbolic", "n": 2}, "region": {"shape": "ball", "radius": 1.0}, "h": 0.1}, 3),
    ("sweep", {"experiment": "product", "space": {"kind": "product", "n": 4, "k": 2}, "truncation": 1.0}, 1),
    ("eig", {"space": {"kind": "euclidean", "n": 2}, "region": {"shape": "ball", "radius": 1.0}, "h": 0.1}, 0),
])
def test_cli_exit_codes(tmp_path, command, cfg, code):
    out = tmp_path / "out"
    assert main([command, "--config", _write(tmp_path, cfg), "--out", str(out)]) == code
    if code != 2:
        report = json.loads((out / "report.json").read_text())
        assert ("error" in report) == (code != 0)


def test_cli_missing_config(tmp_path):
    assert main(["mesh", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path)]) == 2
