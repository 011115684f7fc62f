import numpy as np
import orjson
import pandas as pd
import pytest

import workflow
from errors import ConfigError, ConvexityLostError, OutputError
from params import FlowParams, RunConfig, StateSpec, SupportSpec, SweepSpec
from rates import RateReport


def test_load_run_config_flags_and_overrides(tmp_path):
    config = workflow.load_run_config(
        None,
        ["--opts.rel_tol=1e-8", "--tolerances.blowup=0.02"],
        p=2,
        n_modes=8,
        rhs="conv",
        out=str(tmp_path),
    )
    assert config.params == FlowParams(p=2, N=8, rhs_method="convolution")
    assert config.opts.rel_tol == 1e-8
    assert config.tolerances["blowup"] == 0.02
    assert config.tolerances["convergence"] == 0.05
    assert config.output_dir == tmp_path


def test_load_run_config_from_file(tmp_path):
    path = tmp_path / "run.json"
    path.write_bytes(orjson.dumps({"params": {"p": 3, "N": 4}, "init": {"harmonics": {"2": [0.01, 0.0]}}}))
    config = workflow.load_run_config(str(path), [], n_modes=6)
    assert config.params.p == 3
    assert config.params.N == 6
    assert config.init.harmonics == {2: (0.01, 0.0)}


def test_load_run_config_inline_init_spec():
    config = workflow.load_run_config(None, [], init_spec='{"N": 1, "re": [0, 1, 0], "im": [0, 0, 0]}', n_modes=1)
    assert isinstance(config.init, StateSpec)


@pytest.mark.parametrize(
    "kwargs, message",
    [
        ({"p": 0}, "p must be ≥ 1"),
        ({"n_modes": 0}, "N must be ≥ 1"),
        ({"overrides": ["--delta=0.3"]}, "delta must lie in (0, 1/4)"),
        ({"overrides": ["opts.rel_tol=1"]}, "Override must look like"),
        ({"overrides": ["--params.bogus=1"]}, "params.bogus"),
    ],
)
def test_load_run_config_errors(kwargs, message):
    overrides = kwargs.pop("overrides", [])
    with pytest.raises(ConfigError) as excinfo:
        workflow.load_run_config(None, overrides, **kwargs)
    assert message in str(excinfo.value)
    assert excinfo.value.exit_code == 2


def test_initial_state_variants():
    state = workflow.initial_state(RunConfig(params=FlowParams(p=1, N=4)))
    assert state.mean == pytest.approx(1.0)
    seeded = workflow.initial_state(RunConfig(params=FlowParams(p=1, N=8), init=SupportSpec(seed=3)))
    assert np.max(np.abs(seeded.coeffs[9:])) > 0
    explicit = RunConfig(params=FlowParams(p=1, N=1), init=StateSpec(N=1, re=[0.0, 2.0, 0.0], im=[0.0, 0.0, 0.0]))
    assert workflow.initial_state(explicit).mean == 2.0
    mismatch = RunConfig(params=FlowParams(p=1, N=2), init=StateSpec(N=1, re=[0.0, 2.0, 0.0], im=[0.0, 0.0, 0.0]))
    with pytest.raises(ConfigError):
        workflow.initial_state(mismatch)


def test_cmd_simulate_round(round_config):
    traj, estimate = workflow.cmd_simulate(round_config)
    out = round_config.output_dir
    frame = pd.read_csv(out / "trajectory.csv")
    assert list(frame.columns) == ["t", "khat0_re", "khat1_re", "khat1_im", "khat2_re", "khat2_im"]
    assert len(frame) == len(traj)
    sidecar = orjson.loads((out / "trajectory.json").read_bytes())
    assert sidecar["blowup"]["T"] == pytest.approx(0.5, abs=1e-6)
    assert sidecar["domain_tag"] == "physical_t"
    assert "created" in sidecar["metadata"]
    assert len(sidecar["blowup_constants"]) == 2
    assert estimate.T == sidecar["blowup"]["T"]


def test_cmd_simulate_missing_output_dir(tmp_path):
    config = RunConfig(params=FlowParams(p=1, N=2), output_dir=tmp_path / "missing")
    with pytest.raises(OutputError) as excinfo:
        workflow.cmd_simulate(config)
    assert excinfo.value.exit_code == 3


def test_merge_sample_times():
    merged = workflow._merge_sample_times([0.0, 0.3], np.array([0.0, 0.1, 0.3 + 1e-12, 0.5]))
    assert merged == [0.0, 0.1, 0.3, 0.5]
    assert workflow._merge_sample_times([], np.array([0.2, 0.1])) == [0.1, 0.2]


def test_cmd_normalized_round(round_config):
    config = round_config.model_copy(update={"tau_max": 1.0})
    run = workflow.cmd_normalized(config)
    assert run.trajectory.domain_tag == "normalized_tau"
    assert run.trajectory.times()[-1] == 1.0
    np.testing.assert_allclose(run.trajectory.means(), 1.0, atol=1e-5)
    assert run.matched > 0
    assert run.two_path_sup < 1e-5
    frame = pd.read_csv(config.output_dir / "normalized.csv")
    assert frame.columns[0] == "tau"


def fake_run_rates(config):
    p = config.params.p
    if p == 2 and config.init.seed == 1:
        raise ConvexityLostError("forced failure")
    reports = [RateReport("convergence_C0", 3 * p - 1 + 0.001 * config.init.seed, 3 * p - 1, (0.5, 1.0), 0.0, 0.1)]
    return reports, {"blowup": {"T": p / (p + 1)}}


def test_cmd_sweep_partial_failure_and_determinism(tmp_path, monkeypatch):
    monkeypatch.setattr(workflow, "run_rates", fake_run_rates)
    config = RunConfig(output_dir=tmp_path, jobs=1, sweep=SweepSpec(p_list=[3, 1, 2], seeds=[0, 1, 2, 3, 4]))
    frame, failures = workflow.cmd_sweep(config)
    assert len(frame) == 14
    assert failures == [{"p": 2, "seed": 1, "error": "ConvexityLostError: forced failure"}]
    assert list(frame["p"]) == sorted(frame["p"])
    first = (tmp_path / "sweep.csv").read_bytes()
    workflow.cmd_sweep(config)
    assert (tmp_path / "sweep.csv").read_bytes() == first


def test_cmd_sweep_rejects_empty_lists(tmp_path):
    config = RunConfig(output_dir=tmp_path, sweep=SweepSpec(p_list=[], seeds=[0]))
    with pytest.raises(ConfigError):
        workflow.cmd_sweep(config)


def test_cmd_verify_writes_results(tmp_path, monkeypatch):
    from verify import SuiteResult

    monkeypatch.setattr(workflow, "run_all", lambda params, p_list, seed=0, weight=None: [SuiteResult("x", True, "ok")])
    results = workflow.cmd_verify(RunConfig(output_dir=tmp_path))
    assert results[0].passed
    assert orjson.loads((tmp_path / "verify.json").read_bytes()) == [{"suite": "x", "pass": True, "detail": "ok"}]
