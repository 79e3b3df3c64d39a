import json

import pytest
from hypothesis import given, settings, strategies as st

from modhf.errors import ConfigError, DomainError
from modhf.verify import (ISOMETRY_WINDOW, SLACK, SUITES, load_bounds, run_suite,
                          save_bounds, solve_epsilon)

SMALL = {"family_size": 4}


class TestEpsilon:
    def test_values(self):
        assert solve_epsilon(1.0, 0.5, 1) == pytest.approx(1.0)
        assert solve_epsilon(1.5, 0.5, 1) == pytest.approx(4.5)
        assert solve_epsilon(1.0, 1.0, 2) == pytest.approx(1.0)

    @given(st.floats(1.0, 1.9), st.floats(0.05, 0.95))
    @settings(max_examples=50)
    def test_defining_relation(self, p, gamma):
        try:
            eps = solve_epsilon(p, gamma, 1)
        except DomainError:
            assert 1 / p + gamma - 1 <= 0
            return
        assert eps > 0
        assert 1 / p + gamma - 1 == pytest.approx(1 / (p + eps), rel=1e-12)

    @pytest.mark.parametrize("p,gamma,d", [(2.0, 0.5, 1), (4.0, 0.5, 1), (1.0, 1.0, 1)])
    def test_rejected(self, p, gamma, d):
        with pytest.raises(DomainError):
            solve_epsilon(p, gamma, d)


class TestRunSuite:
    def test_unknown_suite(self):
        with pytest.raises(ConfigError, match="unknown suite"):
            run_suite("nonsense")

    def test_unknown_mode(self):
        with pytest.raises(ConfigError):
            run_suite("embedding", {"mode": "check"})

    def test_assert_needs_bounds(self, tmp_path):
        with pytest.raises(ConfigError, match="record"):
            run_suite("embedding", {"bounds_path": tmp_path / "b.json", **SMALL})

    @pytest.mark.parametrize("suite", sorted(set(SUITES) - {"isometry"}))
    def test_report_is_deterministic(self, suite, tmp_path):
        a, b = (run_suite(suite, {"mode": "report", **SMALL}) for _ in range(2))
        a.write_csv(tmp_path / "a.csv")
        b.write_csv(tmp_path / "b.csv")
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
        assert a.rows and all(r.suite == suite for r in a.rows)

    @pytest.mark.parametrize("suite", ["embedding", "equivalence", "algebra", "trilinear"])
    def test_monotone_in_family(self, suite):
        # worst-case ratios over a larger family can only grow
        small = run_suite(suite, {"mode": "report", "family_size": 3}).ratios()
        large = run_suite(suite, {"mode": "report", "family_size": 6}).ratios()
        assert small.keys() == large.keys()
        for key, r in small.items():
            assert large[key] >= r

    def test_record_then_assert(self, tmp_path):
        path = tmp_path / "bounds.json"
        rec = run_suite("embedding", {"mode": "record", "bounds_path": path, **SMALL})
        stored = json.loads(path.read_text())["embedding"]
        assert stored == rec.ratios()
        check = run_suite("embedding", {"bounds_path": path, **SMALL})
        assert check.passed
        assert all(r.bound == stored[r.case_id] for r in check.rows)

    def test_assert_detects_regression(self, tmp_path):
        path = tmp_path / "bounds.json"
        rec = run_suite("embedding", {"mode": "record", "bounds_path": path, **SMALL})
        bounds = load_bounds(path)
        worst = max(rec.rows, key=lambda r: r.ratio)
        bounds["embedding"][worst.case_id] = worst.ratio / (2 * SLACK)
        save_bounds(bounds, path)
        report = run_suite("embedding", {"bounds_path": path, **SMALL})
        assert not report.passed
        assert [r.case_id for r in report.rows if not r.passed] == [worst.case_id]

    def test_missing_case(self, tmp_path):
        path = tmp_path / "bounds.json"
        save_bounds({"embedding": {"other": 1.0}}, path)
        with pytest.raises(ConfigError, match="case"):
            run_suite("embedding", {"bounds_path": path, **SMALL})

    def test_record_keeps_other_suites(self, tmp_path):
        path = tmp_path / "bounds.json"
        save_bounds({"kernel": {"x": 2.0}}, path)
        run_suite("equivalence", {"mode": "record", "bounds_path": path, **SMALL})
        bounds = load_bounds(path)
        assert bounds["kernel"] == {"x": 2.0} and "equivalence" in bounds

    def test_missing_bounds_file_is_empty(self, tmp_path):
        assert load_bounds(tmp_path / "none.json") == {}

    def test_packaged_bounds_cover_suites(self):
        bounds = load_bounds()
        assert set(SUITES) - {"isometry"} <= set(bounds)

    def test_packaged_bounds_hold(self):
        assert run_suite("embedding").passed
        assert run_suite("kernel").passed


class TestIsometry:
    def test_window(self):
        report = run_suite("isometry")
        lo, hi = ISOMETRY_WINDOW
        assert report.rows
        for r in report.rows:
            assert lo <= r.ratio <= hi and r.passed

    def test_ignores_bounds(self, tmp_path):
        report = run_suite("isometry", {"bounds_path": tmp_path / "none.json"})
        assert report.passed
