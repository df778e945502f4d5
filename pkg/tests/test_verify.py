import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from biokernel.kernels import EnsembleSpec
from biokernel.verify import (LimitScanSpec, QuadGrid, VerificationReport, check_biorthogonality,
                              check_density_vs_kernel, check_fourier_roundtrip, check_limit,
                              check_partition, check_reproducing, check_trace, gue_suite,
                              joint_density, lue_suite, vandermonde, write_reports)
from biokernel.wcatalog import GammaLUEstar, Gaussian

G = Gaussian.canonical(1.0)
LINE = QuadGrid.line(-8.0, 8.0, 0.25)
ONE = EnsembleSpec.from_points(G, [0.0])
TWO = EnsembleSpec.from_points(G, [0.3, -0.4])
THREE = EnsembleSpec.from_points(G, [0.0, 0.5, -0.5])
PTS = [(0.1, 0.3), (-1.0, 0.5), (2.0, 2.0), (0.0, -1.5), (1.2, -0.7)]


# --- report type -------------------------------------------------------------

@given(st.floats(0, 10, allow_nan=False), st.floats(1e-12, 10))
def test_report_passed_iff_within_tolerance(disc, tol):
    r = VerificationReport.make("x", disc, tol)
    assert r.passed == (disc <= tol)


def test_report_validation_and_json(tmp_path):
    with pytest.raises(ValueError):
        VerificationReport("x", 0.1, 1.0, False)
    with pytest.raises(ValueError):
        VerificationReport("x", 0.1, 0.0, False)
    r = VerificationReport.make("nan check", math.nan, 1e-6)
    assert not r.passed and math.isinf(r.discrepancy)
    line = json.loads(r.to_json_line())
    assert line == {"check_name": "nan check", "discrepancy": "inf", "tolerance": 1e-6,
                    "passed": False}
    path = tmp_path / "r.jsonl"
    write_reports([r, VerificationReport.make("ok", 0.0, 1.0)], path)
    rows = [json.loads(x) for x in path.read_text().splitlines()]
    assert [x["passed"] for x in rows] == [False, True]


def test_quad_grids():
    assert abs(LINE.integrate(np.exp(-LINE.nodes ** 2 / 2)) - math.sqrt(2 * math.pi)) < 1e-13
    g = QuadGrid.interval(0.0, 2.0)
    assert abs(g.integrate(g.nodes ** 3) - 4.0) < 1e-12
    h = QuadGrid.half_line()
    assert abs(h.integrate(np.exp(-h.nodes)) - 1.0) < 1e-12
    assert abs(h.integrate(np.sqrt(h.nodes) * np.exp(-h.nodes)) - math.sqrt(math.pi) / 2) < 1e-12


def test_vandermonde():
    assert abs(vandermonde([0.0, 0.5, 1.0]) - 0.25) < 1e-15
    assert vandermonde([2.0]) == 1


# --- each check passes on a valid fixture, a degenerate case, and fails on a defect ---

def test_biorthogonality():
    assert check_biorthogonality(THREE, LINE).passed
    assert check_biorthogonality(ONE, LINE).passed
    assert not check_biorthogonality(THREE, LINE, swap_psi=(0, 2)).passed


def test_trace():
    assert check_trace(THREE, LINE).passed
    r = check_trace(ONE, LINE)
    assert r.passed and r.discrepancy < 1e-10
    assert not check_trace(THREE, LINE, kernel_scale=1.01).passed


def test_reproducing():
    assert check_reproducing(THREE, LINE, PTS).passed
    assert check_reproducing(ONE, LINE, PTS[:2]).passed
    assert not check_reproducing(THREE, LINE, PTS, kernel_scale=1.01).passed


def test_partition():
    assert check_partition(TWO, 8.0, 0.25).passed
    assert check_partition(ONE, 8.0, 0.25).passed
    assert not check_partition(TWO, 8.0, 0.25, density_scale=1.01).passed
    with pytest.raises(ValueError):
        check_partition(EnsembleSpec.from_points(G, [0.1, 0.2, 0.3, 0.4]), 4.0)


def test_density_vs_kernel():
    pts = [[0.1, 0.7], [-1.0, 0.4], [1.5, -0.2]]
    assert check_density_vs_kernel(TWO, pts).passed
    # N = 1: the density is the kernel diagonal itself
    assert check_density_vs_kernel(ONE, [[0.3], [-1.2]]).passed
    assert not check_density_vs_kernel(TWO, pts, kernel_scale=1.01).passed


def test_joint_density_single_source_is_weight():
    d = joint_density(ONE, [[0.0], [1.0]])
    assert abs(d[0] - 1 / math.sqrt(2 * math.pi)) < 1e-12
    assert abs(d[1] - math.exp(-0.5) / math.sqrt(2 * math.pi)) < 1e-12


def test_fourier_roundtrip():
    grid = QuadGrid.line(-12.0, 12.0, 0.2)
    assert check_fourier_roundtrip(G, [-1.0, 0.0, 1.0], grid).passed
    assert check_fourier_roundtrip(G, [0.0], grid).passed
    assert not check_fourier_roundtrip(G, [0.0], grid, weight_scale=1.01).passed


def _toy_scan(offset=0.0, bound=0.1):
    return LimitScanSpec("toy", lambda N, a, b: a + b + 1.0 / N, lambda a, b: a + b + offset,
                         lambda N, a: a, lambda N: 1.0, (4, 8, 16), (0.5, 1.0), bound)


def test_check_limit():
    r = check_limit(_toy_scan())
    assert r.passed and abs(r.discrepancy - 1 / 16) < 1e-15
    # a limit off by a constant: errors stop decreasing
    bad = check_limit(_toy_scan(offset=0.2))
    assert not bad.passed and math.isinf(bad.discrepancy)
    assert not check_limit(_toy_scan(bound=0.01)).passed


def test_checks_are_deterministic():
    a = check_trace(TWO, LINE)
    b = check_trace(TWO, LINE)
    assert a == b


def test_multiplicative_trace_degenerate():
    # N = 1, w̃(y) = e^{−y}
    spec = EnsembleSpec.from_points(GammaLUEstar(1.0), [0.0])
    assert check_trace(spec, QuadGrid.interval(0.0, 60.0, 0.1, smax=2.6),
                       multiplicative=True).passed


# --- shipped suites -------------------------------------------------------------

@pytest.mark.parametrize("name, thunk", gue_suite(), ids=[n for n, _ in gue_suite()])
def test_gue_suite(name, thunk):
    r = thunk()
    assert r.passed, (name, r)


@pytest.mark.parametrize("name, thunk", lue_suite(), ids=[n for n, _ in lue_suite()])
def test_lue_suite(name, thunk):
    r = thunk()
    assert r.passed, (name, r)
