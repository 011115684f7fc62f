import pytest

from galerkin import coefficient_H
from params import FlowParams
from verify import analytic_round, exhaustive_split, oracle_equivalence, q_conservation, reality, run_all, spectrum


def flipped_H(p, q1, q2):
    """Sign error on the mixed term."""
    return 1.0 / p + (p - 1) * q1 * q2 - q1 * q1


def test_oracle_equivalence_passes():
    result = oracle_equivalence([1, 2], [1, 2, 3], samples=3)
    assert result.passed, result.detail


def test_oracle_equivalence_catches_sign_error():
    # the mixed term vanishes for p = 1, so the mutation only shows for p ≥ 2
    result = oracle_equivalence([2], [2], samples=3, weight=flipped_H)
    assert not result.passed


def test_oracle_equivalence_reference_weight_is_H():
    assert oracle_equivalence([3], [1], samples=2, weight=coefficient_H).passed


def test_exhaustive_split_suite():
    assert exhaustive_split([1, 2, 3]).passed


def test_spectrum_suite():
    assert spectrum([1, 2], 3).passed


def test_reality_suite():
    result = reality(FlowParams(p=1, N=4), steps=200)
    assert result.passed, result.detail


def test_reality_suite_edge_radius():
    assert reality(FlowParams(p=2, N=1), steps=100).passed


def test_run_all_reports_every_suite(monkeypatch):
    import verify

    monkeypatch.setattr(verify, "analytic_round", lambda p_list: verify.SuiteResult("analytic-round", True, "skipped"))
    monkeypatch.setattr(verify, "q_conservation", lambda params, seed=0: verify.SuiteResult("q-drift", True, "skipped"))
    results = run_all(FlowParams(p=1, N=2), p_list=(1, 2))
    assert [r.name for r in results] == [
        "oracle-equivalence",
        "exhaustive-split",
        "analytic-round",
        "reality",
        "q-drift",
        "linear-spectrum",
    ]
    assert all(r.passed for r in results)


def test_run_all_flags_mutation(monkeypatch):
    import verify

    monkeypatch.setattr(verify, "analytic_round", lambda p_list: verify.SuiteResult("analytic-round", True, "skipped"))
    monkeypatch.setattr(verify, "q_conservation", lambda params, seed=0: verify.SuiteResult("q-drift", True, "skipped"))
    results = {r.name: r for r in run_all(FlowParams(p=2, N=2), p_list=(2,), weight=flipped_H)}
    assert not results["oracle-equivalence"].passed
    assert results["linear-spectrum"].passed


@pytest.mark.slow
def test_analytic_round_suite():
    result = analytic_round([1, 2, 3])
    assert result.passed, result.detail


@pytest.mark.slow
def test_q_conservation_suite():
    result = q_conservation(FlowParams(p=1, N=32))
    assert result.passed, result.detail


def test_analytic_round_reports_both_error_measures():
    result = analytic_round([1])
    assert result.passed, result.detail
    assert "max error in y" in result.detail
    assert "relative error in k̂(0)" in result.detail
