import csv
import json

import numpy as np
import pytest

from shiftlab import cli
from shiftlab.errors import ConfigError
from shiftlab.report import (EXIT_ERROR, EXIT_OK, EXIT_UNDECIDED, bundled_examples, load_config, parse_config,
                             run_classify, run_compare, run_curves, run_sample)


def _cfg(tmp_path, obj, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(obj))
    return str(path)


# ---------------------------------------------------------------- configs

def test_bundled_examples_are_valid():
    names = set(bundled_examples())
    assert {"fixed-point-pair", "periodic-not-similar", "telescoped-equivalent",
            "discrete-eventually-constant", "scaled-2-3"} <= names
    for name in names:
        load_config(name)


def test_schema_rejects_unknown_keys():
    with pytest.raises(ConfigError):
        parse_config({"u": {"kind": "constant", "value": 2}, "bogus": 1})


def test_schema_rejects_zero_horizon():
    with pytest.raises(ConfigError):
        parse_config({"u": {"kind": "constant", "value": 2}, "horizon": 0})
    with pytest.raises(ConfigError):
        parse_config({"u": {"kind": "constant", "value": 2}, "horizons": {"kakutani": 0}})


def test_bad_weight_is_config_error():
    with pytest.raises(ConfigError):
        parse_config({"u": {"kind": "constant", "value": 0}})


def test_malformed_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(str(path))
    assert cli.main(["classify", "--config", str(path), "--out", str(tmp_path)]) == EXIT_ERROR


def test_missing_config():
    with pytest.raises(ConfigError):
        load_config("no-such-example")


def test_overrides():
    cfg = load_config("scaled-2-3", horizon=123, seed=9)
    assert cfg.horizon == 123 and cfg.seed == 9


# ---------------------------------------------------------------- classify

def test_classify_constant_two(tmp_path):
    cfg = parse_config({"u": {"kind": "constant", "value": 2}, "p": 2, "horizon": 1000})
    report, code = run_classify(cfg, tmp_path)
    assert code == EXIT_OK
    assert all(v["status"] == "Established" for v in report["classification"]["u"].values())
    assert json.loads((tmp_path / "classify.json").read_text()) == json.loads(json.dumps(report, sort_keys=True))


def test_classify_unweighted(tmp_path):
    report, _ = run_classify(parse_config({"u": {"kind": "constant", "value": 1}, "horizon": 1000}), tmp_path)
    assert report["classification"]["u"]["hypercyclic"]["status"] == "Refuted"


# ----------------------------------------------------------------- compare

@pytest.mark.parametrize("name,summary", [("periodic-not-similar", "NotOrthogonal"),
                                          ("scaled-2-3", "Orthogonal"),
                                          ("telescoped-equivalent", "NotOrthogonal"),
                                          ("fixed-point-pair", "NotOrthogonal")])
def test_compare_bundled(tmp_path, name, summary):
    report, code = run_compare(load_config(name, horizon=30_000), tmp_path)
    assert code == EXIT_OK
    assert report["summary"] == summary
    assert report["example"] == name


def test_compare_sections(tmp_path):
    report, _ = run_compare(load_config("periodic-not-similar", horizon=30_000), tmp_path)
    s = report["sections"]
    assert {"similarity", "window", "periodic", "gaussian", "kakutani", "empirical_witness"} <= set(s)
    assert s["similarity"][0]["status"] == "Refuted"
    assert s["gaussian"][0]["status"] == "Refuted"
    assert s["periodic_witness"]["d"] == 2


def test_compare_telescoped_uses_gaussian_equivalence(tmp_path):
    report, _ = run_compare(load_config("telescoped-equivalent", horizon=30_000), tmp_path)
    s = report["sections"]
    assert s["gaussian"][0]["status"] == "Established"
    assert s["periodic"][0]["status"] == "Undecided"
    assert s["kakutani"]["verdict"] == "Equivalent"


def test_compare_needs_pair():
    with pytest.raises(ConfigError):
        run_compare(parse_config({"u": {"kind": "constant", "value": 2}}))


def test_compare_is_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    run_compare(load_config("scaled-2-3", horizon=5000), a)
    run_compare(load_config("scaled-2-3", horizon=5000), b)
    assert (a / "compare.json").read_bytes() == (b / "compare.json").read_bytes()


def test_compare_without_modules_is_undecided(tmp_path):
    raw = dict(bundled_examples()["scaled-2-3"], modules=["acf"])
    report, code = run_compare(parse_config(raw, horizon=1000), tmp_path)
    assert code == EXIT_UNDECIDED and report["sections"] == {}


def test_unmatched_pair_has_no_example_tag(tmp_path):
    cfg = parse_config({"u": {"kind": "constant", "value": 5}, "v": {"kind": "constant", "value": 7},
                        "modules": ["similarity"], "horizon": 500})
    report, _ = run_compare(cfg, tmp_path)
    assert "example" not in report


# ------------------------------------------------------------------ curves

def test_curves_uniform_theta(tmp_path):
    raw = {"u": {"kind": "constant", "value": 2}, "profile": {"kind": "uniform", "a": 0, "b": 1},
           "modules": ["theta", "acf"], "curves": {"lambdas": [1, 2, 4], "alphas": [0, 1]}}
    report, code = run_curves(parse_config(raw), tmp_path)
    assert code == EXIT_OK
    assert set(report["files"]) == {"theta.csv", "acf_h_plus.csv", "acf_h_minus.csv"}
    rows = list(csv.reader(open(tmp_path / "theta.csv")))
    assert rows[0] == ["lambda", "value"]
    assert float(rows[3][1]) == pytest.approx(0.5, abs=1e-8)


def test_curves_hellinger_stream(tmp_path):
    raw = {"u": {"kind": "ratio", "base": 2, "epsilon": {"kind": "power", "coef": 1, "exponent": 2}},
           "v": {"kind": "constant", "value": 2}, "modules": ["hellinger"], "horizon": 2000}
    run_curves(parse_config(raw), tmp_path)
    rows = list(csv.reader(open(tmp_path / "hellinger.csv")))
    assert rows[0] == ["n", "H_n", "deficit_partial_sum"]
    partial = np.array([float(r[2]) for r in rows[1:]])
    assert np.all(np.diff(partial) >= 0)
    # deficits ~ n^-4 / 4
    assert partial[-1] <= 0.25 * np.pi ** 4 / 90 + 0.05


def test_curves_empty_module_set(tmp_path):
    raw = {"u": {"kind": "constant", "value": 2}, "modules": []}
    report, code = run_curves(parse_config(raw), tmp_path / "out")
    assert code == EXIT_UNDECIDED and report["files"] == []
    assert not (tmp_path / "out").exists()


def test_curves_need_profile(tmp_path):
    with pytest.raises(ConfigError):
        run_curves(parse_config({"u": {"kind": "constant", "value": 2}, "modules": ["theta"]}), tmp_path)


# ------------------------------------------------------------------ sample

def test_sample_csv(tmp_path):
    raw = {"u": {"kind": "constant", "value": 2}, "sample": {"size": 5, "coords": 4}, "seed": 3}
    report, _ = run_sample(parse_config(raw), tmp_path)
    rows = list(csv.reader(open(tmp_path / "sample.csv")))
    assert rows[0] == ["n0", "n1", "n2", "n3"] and len(rows) == 6
    assert report["rows"] == 5


# --------------------------------------------------------------------- CLI

def test_cli_compare(tmp_path, capsys):
    code = cli.main(["compare", "--config", "scaled-2-3", "--out", str(tmp_path), "--horizon", "2000"])
    assert code == EXIT_OK
    out = json.loads(capsys.readouterr().out)
    assert out["summary"] == "Orthogonal"
    assert (tmp_path / "compare.json").exists()


def test_cli_classify_file(tmp_path, capsys):
    path = _cfg(tmp_path, {"name": "two", "u": {"kind": "constant", "value": 2}})
    assert cli.main(["classify", "--config", path, "--out", str(tmp_path), "--horizon", "500"]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["name"] == "two"


def test_cli_requires_subcommand():
    with pytest.raises(SystemExit):
        cli.main([])
