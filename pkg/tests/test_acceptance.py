"""
Batch calibration checks against the published single- and multi-curve results.

These run 100 full calibrations each and take minutes; run with ``pytest -m slow``.
"""

import pytest

from vasicek_gpr_mcp.harness import default_threads, run_experiment
from vasicek_gpr_mcp.models import ExperimentConfig, ModelKind, OptimizerConfig, OptimizerMethod

pytestmark = pytest.mark.slow

N_RUNS = 100

# (centre, half-width) of the accepted window for each parameter mean
SINGLE_CG_WINDOWS = {
    "r0": (0.496, 0.05),
    "kappa": (2.081, 0.25),
    "theta": (0.104, 0.06),
    "sigma": (0.202, 0.012),
}
SINGLE_ADAM_WINDOWS = {
    "r0": (0.510, 0.06),
    "kappa": (2.339, 0.35),
    "theta": (0.121, 0.06),
    "sigma": (0.213, 0.012),
}
MULTI_FACTOR1_WINDOWS = {
    "r0_1": (0.477, 0.08),
    "kappa_1": (1.994, 0.35),
    "theta_1": (0.101, 0.08),
    "sigma_1": (0.150, 0.03),
}


def _batch(kind, method, master_seed):
    optimizer = OptimizerConfig(method=method, learning_rate=0.05, epochs=700, record_trace=False)
    config = ExperimentConfig.published_defaults(kind, n_runs=N_RUNS, master_seed=master_seed, optimizer=optimizer)
    return run_experiment(config, threads=default_threads())


def _assert_within(summary, windows):
    for name, (centre, width) in windows.items():
        mean = summary.parameters[name].mean
        assert abs(mean - centre) <= width, f"{name}: mean {mean:.4f} outside {centre} +/- {width}"


@pytest.fixture(scope="module")
def single_cg():
    return _batch(ModelKind.SINGLE, OptimizerMethod.CG, master_seed=1)


@pytest.fixture(scope="module")
def single_adam():
    return _batch(ModelKind.SINGLE, OptimizerMethod.ADAM, master_seed=1)


class TestSingleCurveBatch:
    """Test single-curve batches of 250-point series."""

    def test_conjugate_gradient_means(self, single_cg):
        assert single_cg.n_included >= 90
        _assert_within(single_cg, SINGLE_CG_WINDOWS)

    def test_adam_means(self, single_adam):
        assert single_adam.n_included >= 90
        _assert_within(single_adam, SINGLE_ADAM_WINDOWS)

    def test_adam_learns_larger_kappa(self, single_cg, single_adam):
        assert single_adam.parameters["kappa"].mean > single_cg.parameters["kappa"].mean


class TestMultiCurveBatch:
    """Test multi-curve batches of 125 points per curve."""

    @pytest.fixture(scope="class")
    def multi_cg(self):
        return _batch(ModelKind.MULTI, OptimizerMethod.CG, master_seed=2)

    def test_factor1_means(self, multi_cg):
        _assert_within(multi_cg, MULTI_FACTOR1_WINDOWS)

    def test_factor2_recovery(self, multi_cg):
        assert abs(multi_cg.parameters["sigma_2"].mean - 0.602) <= 0.15
        assert multi_cg.parameters["theta_2"].stdev > multi_cg.parameters["theta_1"].stdev
