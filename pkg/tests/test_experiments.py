import os

import pytest

from bdlab.config import parse_config
from bdlab.errors import ConfigError
from bdlab.experiments import (
    ENV_OUT,
    regsweep_experiment,
    resolve_out_root,
    run_experiment,
    sweep_experiment,
)
from bdlab.snapio import read_snapshot

SMALL = """\
[grid]
dimension = 1
cells = 128
half_width = 6.0

[model]
gamma = 2.0
sigma = 0.05

[init]
preset = gaussian-pair

[time]
T = 0.2
output_every = 0.1

[regularized]
epsilon_list = 0.1, 0.01
delta_list = 0.1, 0.01

[output]
formats = bdf1, csv
"""

# a sweep config cannot default the regularized sigma from the model,
# so it names one explicitly
SWEEP = SMALL.replace("sigma = 0.05", "sigma_list = 0.1, 0.01").replace(
    "[regularized]", "[regularized]\nsigma = 0.05"
)


def test_out_root_precedence(monkeypatch):
    cfg = parse_config(SMALL)
    monkeypatch.delenv(ENV_OUT, raising=False)
    assert resolve_out_root(cfg) == "out"
    monkeypatch.setenv(ENV_OUT, "/tmp/via-env")
    assert resolve_out_root(cfg) == "/tmp/via-env"
    assert resolve_out_root(cfg, "/tmp/via-flag") == "/tmp/via-flag"


def test_run_artifacts(tmp_path):
    cfg = parse_config(SMALL)
    out = str(tmp_path / "run")
    artifacts = run_experiment(cfg, out)
    assert artifacts["out_dir"] == out
    for name in ("manifest", "energy", "monitor"):
        assert os.path.isfile(artifacts[name])
    # three output times, two formats each
    assert len(artifacts["snapshots"]) == 6
    names = sorted(os.path.basename(p) for p in artifacts["snapshots"])
    assert names[0] == "snap_0000.bdf1" and names[-1] == "snap_0002.csv"
    assert artifacts["max_boundary_fraction"] <= 1e-6

    state, grid = read_snapshot(os.path.join(out, "snapshots", "snap_0002.bdf1"))
    assert state.t == 0.2
    assert grid.cells == 128

    effective = open(os.path.join(out, "effective_config.ini")).read()
    assert parse_config(effective).single_sigma() == 0.05


def test_run_needs_scalar_sigma(tmp_path):
    cfg = parse_config(SWEEP)
    with pytest.raises(ConfigError, match="scalar sigma"):
        run_experiment(cfg, str(tmp_path / "run"))


def test_sweep_artifacts(tmp_path):
    cfg = parse_config(SWEEP)
    out = str(tmp_path / "sweep")
    artifacts = sweep_experiment(cfg, out, plots=True)
    assert artifacts["rows"] == 2
    report = open(artifacts["report"]).read().splitlines()
    assert report[0] == "σ,e_p_q1,e_p_q2,e_grad,e_lap,e_norm,trace_gap"
    assert len(report) == 3

    member_dirs = sorted(os.listdir(os.path.join(out, "members")))
    assert member_dirs == ["reference", "sigma_0.01", "sigma_0.1"]
    for d in member_dirs:
        files = sorted(os.listdir(os.path.join(out, "members", d)))
        assert files == ["final.bdf1", "final.csv", "manifest.csv"]

    assert [os.path.basename(p) for p in artifacts["plots"]] == [
        "report.svg", "shift_modulus.svg",
    ]
    assert os.path.isfile(artifacts["shift"])


def test_sweep_jobs_write_identical_tables(tmp_path):
    cfg = parse_config(SWEEP)
    one = sweep_experiment(cfg, str(tmp_path / "serial"), jobs=1)
    two = sweep_experiment(cfg, str(tmp_path / "threads"), jobs=4)
    assert open(one["report"]).read() == open(two["report"]).read()
    assert open(one["shift"]).read() == open(two["shift"]).read()


def test_regsweep_artifacts(tmp_path):
    cfg = parse_config(SMALL)
    out = str(tmp_path / "reg")
    artifacts = regsweep_experiment(cfg, out, plots=True)
    table = open(artifacts["table"]).read().splitlines()
    assert table[0] == "epsilon,delta,l1_gap,max_p,q_active_steps"
    assert len(table) == 3
    assert artifacts["rows"] == 2
    assert os.path.isfile(os.path.join(out, "regsweep.svg"))


def test_regsweep_requires_section(tmp_path):
    bare = SMALL.split("[regularized]")[0] + "[output]\nformats = bdf1\n"
    cfg = parse_config(bare)
    with pytest.raises(ConfigError, match="regularized"):
        regsweep_experiment(cfg, str(tmp_path / "reg"))
