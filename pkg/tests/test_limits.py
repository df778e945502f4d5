import math

import numpy as np
import pytest

from biokernel.errors import DecayViolation, SeriesNotConverged
from biokernel.limits import (bessel_gauge, bessel_oracle, convergence_scan, mb_limit_eval,
                              mb_limit_loop, mb_limit_residue_series, mb_limit_terms,
                              pbessel_circle_check, pbessel_eval)
from biokernel.quadrature import HankelRayContour
from biokernel.wcatalog import GammaLUEstar, Gaussian, PolyaProduct

# hard-edge Bessel kernel, mpmath besselj and numeric J' at 30 digits
BESSEL_KERNEL_REF = [
    (0, 1, 1, 0.19479300438203078),
    (0, 0.5, 2, 0.18182580459362981),
    (0.5, 1, 0.5, 0.076731353126974677),
    (1, 2, 2, 0.044636219831181894),
    (1, 0.5, 1, 0.019487924635955853),
    (2.5, 3, 7, 0.0051426245950165588),
]


@pytest.mark.parametrize("nu, x, y, ref", BESSEL_KERNEL_REF)
def test_bessel_oracle_reference(nu, x, y, ref):
    assert abs(bessel_oracle(nu, x, y) - ref) < 1e-12
    assert bessel_oracle(nu, x, y) == bessel_oracle(nu, y, x)


def test_bessel_oracle_edges():
    assert bessel_oracle(0, 0, 0) == 0.25
    assert bessel_oracle(2, 0, 0) == 0.0
    # near-diagonal branch joins the off-diagonal formula smoothly
    assert abs(bessel_oracle(0.5, 1.0, 1.0 + 1e-7) - bessel_oracle(0.5, 1.0, 1.0 + 1e-3)) < 1e-4
    with pytest.raises(ValueError):
        bessel_oracle(0, -1, 1)


def test_pbessel_examples():
    assert abs(pbessel_eval(0, 0, Gaussian(1.0), 0.0, 0.0).value - 0.25) < 1e-10
    assert abs(pbessel_eval(0, 0, Gaussian(1.0), 1.0, 1.0).value - 0.19479300438203078) < 1e-10
    assert abs(pbessel_eval(2, 0, Gaussian(1.0), 0.0, 0.0).value) < 1e-10


@pytest.mark.parametrize("nu", [0, 0.5, 1])
def test_pbessel_r0_is_gauged_bessel(nu):
    pts = [0.5, 1.0, 2.0]
    for x in pts:
        for xp in pts:
            got = pbessel_eval(nu, 0, Gaussian(1.0), x, xp).value
            ref = bessel_gauge(nu, x, xp) * bessel_oracle(nu, x, xp)
            assert abs(got - ref) < 1e-6, (x, xp)


def test_pbessel_perturbation_changes_kernel():
    base = pbessel_eval(0, 0, Gaussian(1.0), 1.0, 0.5).value
    pert = pbessel_eval(0, 1, Gaussian(1.0), 1.0, 0.5).value
    assert abs(pert - base) > 1e-3


def test_pbessel_c_independence():
    W = Gaussian(1.0)
    a = pbessel_eval(0, 1, W, 1.0, 0.5).value
    b = pbessel_eval(0, 1, W, 1.0, 0.5, c=-0.6).value
    assert abs(a - b) < 1e-9


@pytest.mark.parametrize("c", [-0.2, -1.0, -3.0])
def test_pbessel_circle_identity(c):
    assert pbessel_circle_check(c) < 1e-12


# --- MB limit -------------------------------------------------------------------

def test_mb_limit_dual_example():
    W = GammaLUEstar(1.0)
    a = mb_limit_eval(2.0, 0.0, W, 0.5, 0.8).value
    b = mb_limit_residue_series(2.0, 0.0, W, 0.5, 0.8).value
    assert abs(a - b) < 1e-7


@pytest.mark.parametrize("W", [GammaLUEstar(1.0), GammaLUEstar(0.5)])
def test_mb_limit_dual_grid(W):
    pts = [0.5, 1.0, 2.0]
    for y in pts:
        for yp in pts:
            a = mb_limit_eval(2.0, 0.0, W, y, yp).value
            b = mb_limit_residue_series(2.0, 0.0, W, y, yp).value
            assert abs(a - b) < 1e-7, (y, yp)


def test_mb_limit_reach_stability():
    W = GammaLUEstar(1.0)
    loop = mb_limit_loop(2.0, 0.0, W, 0.8)
    longer = HankelRayContour(loop.ray_start, loop.standoff, 2 * loop.reach, loop.nodes_per_leg)
    a = mb_limit_eval(2.0, 0.0, W, 0.5, 0.8, loop).value
    b = mb_limit_eval(2.0, 0.0, W, 0.5, 0.8, longer).value
    assert abs(a - b) < 1e-8


def test_mb_residue_series_tail():
    W = GammaLUEstar(1.0)
    k = mb_limit_residue_series(2.0, 0.0, W, 1.0, 1.5).nodes_used
    a = mb_limit_residue_series(2.0, 0.0, W, 1.0, 1.5, k_max=k).value
    b = mb_limit_residue_series(2.0, 0.0, W, 1.0, 1.5, k_max=2 * k).value
    assert abs(a - b) < 1e-10
    with pytest.raises(SeriesNotConverged):
        mb_limit_residue_series(2.0, 0.0, W, 1.0, 50.0, k_max=2)


def test_mb_first_term_dominates_near_zero():
    W = GammaLUEstar(1.0)
    terms = mb_limit_terms(2.0, 0.0, W, 0.7, 1e-3, 6)
    assert abs(np.sum(terms) - terms[0]) < 1e-2 * abs(terms[0])


def test_mb_decay_violation():
    # Γ decays like e^{−π|t|/2}, too slow against e^{π|t|/(2θ)} when θ < 1
    with pytest.raises(DecayViolation):
        mb_limit_eval(0.5, 0.0, GammaLUEstar(1.0), 1.0, 1.0)


# --- scans ------------------------------------------------------------------------

def test_convergence_scan_toy():
    rows = convergence_scan(lambda N, a, b: a * b + 1.0 / N, lambda a, b: a * b,
                            lambda N, a: a, lambda N: 1.0, [4, 8, 16], [0.5, 1.0])
    assert [r.N for r in rows] == [4, 8, 16]
    assert rows[0].ratio_to_previous is None
    assert all(abs(r.ratio_to_previous - 0.5) < 1e-12 for r in rows[1:])
    assert abs(rows[-1].sup_error - 1 / 16) < 1e-15
