import json
import subprocess
import sys

import pytest

from gderiv.cli import main, run
from gderiv.config import (ExperimentConfig, default_config, load_config,
                           validate_params)
from gderiv.errors import ConfigError


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


# ---------------------------------------------------------------------------
# config parsing
# ---------------------------------------------------------------------------

def test_toml_round_trip(tmp_path):
    p = write(tmp_path, "exp.toml", """
kind = "classify"
t = 0.5

[model]
hurst = 0.7

[schedule]
mode = "two_sided"
""")
    cfg = load_config(p)
    assert cfg.kind == "classify"
    assert cfg.params["model"]["hurst"] == 0.7
    assert cfg.params["schedule"]["mode"] == "two_sided"
    # defaults filled in
    assert cfg.params["schedule"]["ratio"] == 0.5


def test_json_accepted(tmp_path):
    p = write(tmp_path, "exp.json", json.dumps(
        {"kind": "cov", "model": {"hurst": 0.3}, "pairs": [[0.2, 0.6]]}))
    cfg = load_config(p)
    assert cfg.kind == "cov"
    assert cfg.params["pairs"] == [[0.2, 0.6]]


def test_unknown_key_rejected_with_path(tmp_path):
    p = write(tmp_path, "exp.toml", 'kind = "classify"\n[model]\nhurts = 0.7\n')
    with pytest.raises(ConfigError) as err:
        load_config(p)
    assert "model.hurts" in str(err.value)


def test_bad_hurst_names_the_field():
    with pytest.raises(ConfigError) as err:
        validate_params("classify", {"model": {"hurst": 1.5}})
    assert err.value.field == "model.hurst"


def test_kind_conflict_detected(tmp_path):
    p = write(tmp_path, "exp.toml", 'kind = "cov"\n')
    with pytest.raises(ConfigError):
        load_config(p, kind="classify")


def test_canonical_form_is_stable():
    a = default_config("classify", seed=7)
    b = ExperimentConfig("classify", validate_params("classify", {}), seed=7)
    assert a.canonical_json() == b.canonical_json()
    assert a.digest() == b.digest()


# ---------------------------------------------------------------------------
# runner
# ---------------------------------------------------------------------------

def test_classify_run_produces_artifacts(tmp_path):
    cfg = default_config("classify", seed=1, out_dir=str(tmp_path / "o"))
    out = run(cfg)
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["coverage"]["classify"]
    assert (out / "verdict.csv").exists()
    assert (out / "evidence.csv").exists()
    assert (out / "plot.gp").exists()
    assert (out / "timing.json").exists()
    verdict = (out / "verdict.csv").read_text()
    assert "differentiates" in verdict


def test_classify_final_row_reports_the_coefficient(tmp_path):
    cfg = default_config("classify", out_dir=str(tmp_path / "o"))
    out = run(cfg)
    body = (out / "verdict.csv").read_text().splitlines()[1]
    coeff = float(body.split(",")[1].strip("[]"))
    assert coeff == pytest.approx(1.4, abs=1e-6)


def test_deterministic_outputs(tmp_path):
    cfg_a = default_config("counterexample", seed=9,
                           out_dir=str(tmp_path / "a"))
    cfg_b = default_config("counterexample", seed=9,
                           out_dir=str(tmp_path / "b"))
    out_a, out_b = run(cfg_a), run(cfg_b)
    for name in ("energies.csv", "two_atom.csv", "manifest.json"):
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes()


def test_simulate_binary_round_trip(tmp_path):
    from gderiv import batchio
    cfg = ExperimentConfig("simulate", validate_params("simulate", {
        "steps": 64, "n_paths": 8, "method": "volterra", "drift_a": 1.0}),
        seed=3, out_dir=str(tmp_path / "o"), fmt="binary")
    out = run(cfg)
    batch, eta = batchio.read_binary(out / "batch.gdrv")
    assert batch.values.shape == (8, 65)
    assert batch.w_increments.shape == (8, 64)
    assert eta.shape == (8,)


def test_cli_exit_codes(tmp_path):
    bad = write(tmp_path, "bad.toml", 'kind = "classify"\n[model]\nhurst = 1.5\n')
    assert main(["classify", "--config", str(bad),
                 "--out", str(tmp_path / "x")]) == 2
    ok = write(tmp_path, "ok.toml", 'kind = "cov"\n')
    assert main(["cov", "--config", str(ok),
                 "--out", str(tmp_path / "y")]) == 0


def test_cli_entry_point_runs():
    proc = subprocess.run([sys.executable, "-m", "gderiv.cli", "--version"],
                          capture_output=True, text=True)
    assert proc.returncode == 0


def test_numerical_failure_exit_code(tmp_path):
    # a singular conditioning span is a numerical precondition failure
    cfg = write(tmp_path, "sing.toml", """
kind = "classify"
t = 0.5
[conditioning]
times = [0.5, 0.5]
""")
    assert main(["classify", "--config", str(cfg),
                 "--out", str(tmp_path / "z")]) == 3


# ---------------------------------------------------------------------------
# acceptance suite via CLI
# ---------------------------------------------------------------------------

def test_suite_subset_passes(tmp_path):
    cfg = write(tmp_path, "suite.toml",
                'kind = "paper-suite"\ncriteria = [1, 3, 4]\n')
    code = main(["paper-suite", "--config", str(cfg),
                 "--out", str(tmp_path / "s")])
    assert code == 0
    report = (tmp_path / "s" / "report.csv").read_text()
    assert report.count("PASS") == 3


def test_suite_skips_disabled_sampler(tmp_path):
    cfg = write(tmp_path, "suite.toml",
                'kind = "paper-suite"\ncriteria = [4, 7]\ndisable = ["circulant"]\n')
    code = main(["paper-suite", "--config", str(cfg),
                 "--out", str(tmp_path / "s")])
    assert code == 0
    report = (tmp_path / "s" / "report.csv").read_text()
    assert "SKIP" in report and "PASS" in report


def test_tampered_tolerance_fails_controlled(tmp_path):
    from gderiv import acceptance
    ctx = acceptance.SuiteContext(tolerance_overrides={1: 1e-30})
    results = acceptance.run_suite(ctx, criteria=[1, 4])
    by_id = {r.cid: r for r in results}
    assert not by_id[1].passed
    assert by_id[4].passed
    report = acceptance.render_report(results)
    assert "FAIL" in report and "PASS" in report
    assert not acceptance.suite_passed(results)
