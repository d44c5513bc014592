import hashlib
import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fkinvariant import cli
from fkinvariant import domains as dm


def run(capsys, *args):
    code = cli.main(list(args))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_fk_disc(capsys):
    code, out, _ = run(capsys, "fk", "--domain", "disc", "--point", "0")
    assert code == 0
    assert json.loads(out)["value"] == pytest.approx(1.0, abs=1e-15)


def test_fk_hartogs(capsys):
    code, out, _ = run(capsys, "fk", "--domain", "hartogs", "--point", "0.3679,0.1")
    r = 0.3679
    assert json.loads(out)["value"] == pytest.approx(4 * (r * np.log(r) / (1 - r * r)) ** 2, rel=1e-12)


def test_version(capsys):
    code, out, _ = run(capsys, "--version")
    assert code == 0 and json.loads(out)["schema"] == cli.SCHEMA_VERSION


@pytest.mark.parametrize("args, code", [
    (["fk", "--domain", "blob", "--point", "0"], 2),
    (["fk", "--domain", "disc"], 2),
    (["fk", "--domain", "disc", "--point", "0", "--nope", "1"], 2),
    (["fk", "--domain", "disc", "--point", "2"], 3),
    (["fk", "--domain", "model:P=-1*z1^2*zb1^2", "--point", "0,-1"], 3),
    (["fk", "--domain", "egg2", "--point", "0,0", "--method", "numeric"], 2),
    (["fk", "--domain", "polyhedral:Q2=none", "--point", "1j,0", "--seed", "1"], 4),
])
def test_exit_codes(capsys, args, code):
    assert run(capsys, *args)[0] == code


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "run.txt"
    cfg.write_text("command=fk\ndomain=ball:n=2\npoint=0.5,0  # comment\n")
    code, out, _ = run(capsys, "--config", str(cfg), "--point", "0,0")
    assert code == 0
    assert json.loads(out)["point"] == [[0.0, 0.0], [0.0, 0.0]]


def test_config_rejects_unknown_keys():
    with pytest.raises(cli.ConfigError):
        cli.RunConfig.parse("domain=disc\ncolour=red\n")


def test_config_round_trip_example():
    text = "seed=7\ndomain=egg2:mu=2\nnodes=12, 8\nd_min=1e-3\ngaps=yes\n"
    once = cli.RunConfig.parse(text).to_text()
    assert cli.RunConfig.parse(once).to_text() == once
    assert "nodes=12,8" in once and "gaps=true" in once


@pytest.mark.parametrize("text, coeffs", [
    ("z1*zb1", {(1, 1): 1}),
    ("z1^2*zb1^2", {(2, 2): 1}),
    ("0.5*z1*zb1 + (0.1+0.2j)*z1^2 + (0.1-0.2j)*zb1^2", {(1, 1): 0.5, (2, 0): 0.1 + 0.2j, (0, 2): 0.1 - 0.2j}),
    ("z*zb - 1", {(1, 1): 1, (0, 0): -1}),
    ("-2*z1^3*zb1^3", {(3, 3): -2}),
])
def test_polynomial_grammar(text, coeffs):
    assert cli.parse_polynomial(text).coeffs == {k: complex(v) for k, v in coeffs.items()}


@pytest.mark.parametrize("bad", ["z1*", "z1^x", "z1 zb1", "q", "z1^2"])
def test_polynomial_grammar_errors(bad):
    with pytest.raises(cli.ConfigError):
        cli.parse_polynomial(bad)


def test_domain_grammar():
    assert isinstance(cli.parse_domain("egg2:mu=3"), dm.EggC2)
    assert cli.parse_domain("egg2:mu=3").mu == 3
    P = cli.parse_domain("disc|punctured-disc|ball:n=2")
    assert P.n == 4
    assert cli.parse_domain("polyhedral:Q1=z1*zb1,Q2=none").pieces[0].sigma == 0
    with pytest.raises(cli.ConfigError):
        cli.parse_domain("ball:m=2")


def _digest(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


def test_scan_is_byte_reproducible(tmp_path, capsys):
    args = ["scan", "--domain", "egg2:mu=2", "--start", "0,0", "--stop", "0.6,0.6", "--steps", "7"]
    run(capsys, *args, "--out", str(tmp_path / "a"))
    run(capsys, *args, "--out", str(tmp_path / "b"), "--threads", "3")
    assert _digest(tmp_path / "a" / "trace.csv") == _digest(tmp_path / "b" / "trace.csv")
    rows = (tmp_path / "a" / "trace.csv").read_text().splitlines()
    assert len(rows) == 8
    # 17 significant digits
    assert len(rows[1].split(",")[-5].replace(".", "").lstrip("0")) >= 15


def test_scale_study_csv(tmp_path, capsys):
    code, out, _ = run(capsys, "scale-study", "--domain", "egg2:mu=2", "--boundary", "1,0", "--steps", "12",
                       "--out", str(tmp_path))
    assert code == 0
    rows = (tmp_path / "trace.csv").read_text().splitlines()
    assert len(rows) == 13
    doc = json.loads(out)
    assert doc["limit"]["model"].startswith("model:")
    assert doc["limit"]["value"] == pytest.approx(1.0, abs=1e-9)
    assert json.loads((tmp_path / "summary.json").read_text()) == doc


def test_ramadanov_gap_decreases(tmp_path, capsys):
    code, out, _ = run(capsys, "ramadanov", "--seed", "3", "--out", str(tmp_path))
    assert code == 0
    doc = json.loads(out)
    assert doc["monotone"]
    assert doc["slope"] == pytest.approx(-1.0, abs=0.2)
    gaps = [float(r.split(",")[2]) for r in (tmp_path / "trace.csv").read_text().splitlines()[1:]]
    assert all(a > b for a, b in zip(gaps, gaps[1:]))


@pytest.mark.parametrize("approach,kind", [("radial", "radial"), ("tangential", "q-tangential"), ("mixed", "mixed-a")])
def test_polyhedral_classification_only(tmp_path, capsys, approach, kind):
    code, out, _ = run(capsys, "polyhedral", "--domain", "polyhedral", "--approach", approach, "--steps", "12",
                       "--eval-steps", "0", "--points", "4096", "--seed", "1", "--out", str(tmp_path))
    assert code == 0
    doc = json.loads(out)
    assert doc["class"] == kind and doc["trend_gap"] is None
    rows = (tmp_path / "trace.csv").read_text().splitlines()
    assert len(rows) == 13 and rows[-1].endswith("nan,nan")


def test_tangential_scale_study_is_constant(tmp_path, capsys):
    code, out, _ = run(capsys, "scale-study", "--domain", "egg2:mu=2", "--boundary", "1,0", "--approach",
                       "tangential", "--c", "0.5", "--steps", "6", "--out", str(tmp_path))
    doc = json.loads(out)
    vals = [s["value"] for s in doc["steps"]]
    assert np.ptp(vals) < 1e-8 * vals[0]


@pytest.mark.slow
def test_fk_numeric_egg_center(capsys):
    code, out, _ = run(capsys, "fk", "--domain", "egg2:mu=2", "--point", "0,0", "--method", "numeric", "--seed", "7")
    doc = json.loads(out)
    assert code == 0
    assert abs(doc["value"] - 1) <= max(doc["sigma"], 1e-3)


keys = st.sampled_from(["seed", "steps", "d_min", "domain", "nodes", "gaps", "method", "c"])
vals = {
    "seed": st.integers(0, 2**63 - 1).map(str),
    "steps": st.integers(1, 100).map(str),
    "d_min": st.floats(1e-12, 1, allow_nan=False).map(repr),
    "domain": st.sampled_from(["disc", "egg2:mu=2", "model:P=z1^2*zb1^2"]),
    "nodes": st.tuples(st.integers(1, 64), st.integers(1, 64)).map(lambda t: f"{t[0]}, {t[1]}"),
    "gaps": st.sampled_from(["true", "0", "YES", "off"]),
    "method": st.sampled_from(["auto", "closed", "numeric"]),
    "c": st.floats(-5, 5, allow_nan=False).map(str),
}


@settings(max_examples=60, deadline=None)
@given(st.dictionaries(keys, st.just(None), min_size=1).flatmap(
    lambda d: st.fixed_dictionaries({k: vals[k] for k in d})))
def test_config_serialisation_idempotent(d):
    text = "".join(f"{k} = {v}\n" for k, v in d.items())
    once = cli.RunConfig.parse(text).to_text()
    assert cli.RunConfig.parse(once).to_text() == once
