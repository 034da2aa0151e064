import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nullitylab.immersion import circular_cylinder_chart, graph_chart
from nullitylab.minimal import enneper_data, orthogonal_sum_hat
from nullitylab.verify import (
    SCENARIOS,
    THREADS_ENV,
    Check,
    ConfigError,
    SampleGrid,
    VerificationReport,
    check_bipolar_structure,
    check_nullity_and_leaf_constancy,
    check_prop_ricci,
    normalize_config,
    parallel_map,
    run_scenario,
    worker_count,
)
from nullitylab.export import dumps_json

BIPOLAR_TOL = SCENARIOS["bipolar-full"].defaults["tolerances"]
RICCI_TOL = SCENARIOS["prop-ricci"].defaults["tolerances"]


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(1, 6), min_size=1, max_size=3), st.integers(0, 2**16))
def test_grid_points_are_row_major_and_seeded(counts, seed):
    ranges = [(-1.0, 1.0)] * len(counts)
    g = SampleGrid(counts, ranges, seed=seed, jitter=0.3)
    pts = g.points()
    assert pts.shape == (len(counts), g.size)
    axes = g.axes()
    for flat in range(g.size):
        idx = g.multi_index(flat)
        assert all(pts[d, flat] == axes[d][idx[d]] for d in range(len(counts)))
    assert np.array_equal(pts, SampleGrid(counts, ranges, seed=seed, jitter=0.3).points())


def test_grid_rejects_bad_shapes():
    with pytest.raises(ConfigError):
        SampleGrid([3, 3], [(0, 1)])
    with pytest.raises(ConfigError):
        SampleGrid([0], [(0, 1)])
    with pytest.raises(ConfigError):
        SampleGrid([3], [(0, 1)], jitter=0.7)


def test_check_verdicts():
    assert Check("a", "x", 1e-10, 1e-9).passed
    assert not Check("a", "x", 1e-8, 1e-9).passed
    assert Check("a", "x", 0.5, 0.45, comparison=">=").passed
    assert not Check("a", "x", float("nan"), 1.0).passed
    assert Check("a", "x", 3.0, None, category="informational").passed is None
    assert Check("a", "x", float("nan"), None, category="skipped").passed is False
    with pytest.raises(ValueError):
        Check("a", "", 0.0, 1.0)


def test_report_overall_ignores_informational_and_needs_checks():
    r = VerificationReport("demo")
    assert not r.overall_pass
    r.add(Check("ok", "x", 0.0, 1.0))
    r.add(Check("info", "x", 99.0, None, category="informational"))
    assert r.overall_pass
    r.add(Check("bad", "x", 2.0, 1.0))
    assert not r.overall_pass and [c.name for c in r.failed()] == ["bad"]
    lines = r.summary_lines()
    assert lines[0].startswith("[PASS] ok") and lines[1].startswith("[INFO]") and lines[-1] == "overall: FAIL"
    d = r.to_dict()
    assert "timing_seconds" not in d and d["summary"]["failed"] == 1


def test_worker_count_reads_environment(monkeypatch):
    monkeypatch.setenv(THREADS_ENV, "3")
    assert worker_count() == 3
    monkeypatch.setenv(THREADS_ENV, "0")
    with pytest.raises(ConfigError):
        worker_count()
    monkeypatch.delenv(THREADS_ENV)
    assert worker_count() >= 1


def test_parallel_map_preserves_order(monkeypatch):
    monkeypatch.setenv(THREADS_ENV, "4")
    assert parallel_map(lambda x: x * x, range(50)) == [x * x for x in range(50)]


def test_cylinder_ruling_passes_both_checks():
    g = SampleGrid([5, 5], [(-3, 3), (-2, 2)])
    checks = check_nullity_and_leaf_constancy(circular_cylinder_chart(), 1, g)
    assert all(c.passed for c in checks)


def test_profile_direction_fails_membership_only():
    # negative control: the circle direction is not in the nullity, but H is still constant along it
    g = SampleGrid([5, 5], [(-3, 3), (-2, 2)])
    checks = {c.name: c for c in check_nullity_and_leaf_constancy(circular_cylinder_chart(), 0, g)}
    assert not checks["nullity membership"].passed
    assert checks["leaf constancy of H"].passed


def test_curved_graph_direction_fails():
    g = SampleGrid([5, 5], [(-0.5, 0.5), (-0.5, 0.5)])
    checks = check_nullity_and_leaf_constancy(graph_chart(lambda x, y: x * x + 0.5 * y * y), 0, g)
    assert not checks[0].passed


@pytest.fixture(scope="module")
def small_bipolar_grid():
    return lambda: SampleGrid([3, 3, 4], [(-0.5, 0.5), (-0.5, 0.5), (0.0, 4.5)])


def test_bipolar_structure_on_small_grid(small_bipolar_grid):
    hat = orthogonal_sum_hat(enneper_data(), 0.0, math.pi / 6)
    checks = check_bipolar_structure(hat, small_bipolar_grid(), BIPOLAR_TOL)
    assert all(c.passed for c in checks if c.category == "asserted")
    ratio = next(c for c in checks if c.category == "informational" and "base" in c.name)
    assert abs(ratio.residual - 1.0) < 1e-6


def test_wrong_curvature_constant_fails_only_the_derivative_identity(small_bipolar_grid):
    # negative control: the bipolar map lives in the unit sphere, so c = 0 is wrong
    hat = orthogonal_sum_hat(enneper_data(), 0.0, math.pi / 6)
    failed = [c.name for c in check_bipolar_structure(hat, small_bipolar_grid(), BIPOLAR_TOL, c=0.0)
              if c.passed is False]
    assert failed == ["splitting tensor derivative identity (c=0)"]


def test_prop_ricci_expected_failure_at_quarter_turn():
    g = SampleGrid([3, 3], [(-0.5, 0.5), (-0.5, 0.5)])
    checks = check_prop_ricci("enneper", math.pi / 4, 0.0, g, RICCI_TOL)
    circle = [c for c in checks if c.category == "expected-fail"]
    assert len(circle) == 1 and circle[0].passed
    g = SampleGrid([3, 3], [(-0.5, 0.5), (-0.5, 0.5)])
    checks = check_prop_ricci("catenoid", math.pi / 6, 0.0, g, RICCI_TOL)
    assert all(c.passed for c in checks) and not any(c.category == "expected-fail" for c in checks)


def test_hypothesis_violation_becomes_a_failing_skipped_check(monkeypatch):
    # a base surface in R^3 violates the codimension hypothesis
    from nullitylab import verify

    def runner(cfg, report):
        from nullitylab.immersion import circular_cylinder_chart as cyl
        report.extend(verify.check_bipolar_structure(cyl(), SampleGrid([3, 3, 1], [(0, 1), (0, 1), (0, 0)]),
                                                     BIPOLAR_TOL))

    sc = verify.Scenario("bipolar-full", "patched", runner, SCENARIOS["bipolar-full"].defaults)
    monkeypatch.setitem(verify.SCENARIOS, "bipolar-full", sc)
    report = run_scenario({"scenario": "bipolar-full"})
    assert [c.category for c in report.checks] == ["skipped"]
    assert not report.overall_pass


@pytest.mark.parametrize("raw, match", [
    ([], "JSON object"),
    ({"scenario": "nope"}, "unknown scenario"),
    ({"scenario": "composition", "colour": 1}, "unknown config key"),
    ({"scenario": "composition", "tolerances": {"identity": -1}}, "tolerances.identity"),
    ({"scenario": "composition", "tolerances": {"bogus": 1}}, "tolerances.bogus"),
    ({"scenario": "composition", "grid": {"counts": [2, 2]}}, "at least 9"),
    ({"scenario": "composition", "outputs": {"elsewhere": "x"}}, "outputs"),
])
def test_config_errors_name_the_offending_key(raw, match):
    with pytest.raises(ConfigError, match=match):
        normalize_config(raw)


def test_config_merges_defaults():
    cfg = normalize_config({"scenario": "composition", "tolerances": {"identity": 1e-7}})
    assert cfg["tolerances"] == {"identity": 1e-7, "gradient": 1e-9}
    assert cfg["grid"]["counts"] == [15, 15]


def test_sanity_scenario_report_is_deterministic_and_anchored():
    a = run_scenario({"scenario": "cylinder-sanity", "seed": 4})
    b = run_scenario({"scenario": "cylinder-sanity", "seed": 4})
    assert a.overall_pass
    assert dumps_json(a.to_dict()) == dumps_json(b.to_dict())
    assert all(c.anchor for c in a.checks)
