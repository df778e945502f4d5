import cmath
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from biokernel.errors import (AtPoleOrZero, ConfigError, EmptyStrip, OutsideStrip,
                              PreconditionViolated)
from biokernel.verify import QuadGrid, check_fourier_roundtrip
from biokernel.wcatalog import (POLYA_FIXTURES, POLYA_UNDERPARAMETERIZED, AnalyticStrip,
                                BetaCLUE, BetaJUE, GammaLUEstar, Gaussian, PolyaProduct,
                                Product, RationalLUE, convolve, polya_decay_check, w_from_json,
                                w_inverse_transform, w_log_eval, w_mellin_inverse, w_strip)


def test_log_eval_examples():
    assert abs(w_log_eval(Gaussian(1.0), 2.0) - 2.0) < 1e-15
    assert abs(w_log_eval(RationalLUE(2, 0), 0.0)) < 1e-15
    W = PolyaProduct(tau=0.0, b=(-1.0, -1.0))
    assert abs(cmath.exp(w_log_eval(W, 1.0)) - (math.e / 2) ** 2) < 1e-14


def test_strip_examples():
    s = w_strip(PolyaProduct(b=(-1.0, -0.5)))
    assert (s.c_minus, s.c_plus) == (-1.0, math.inf)
    s = w_strip(RationalLUE(5, 1.5))
    assert (s.c_minus, s.c_plus) == (-math.inf, 1.0)
    s = w_strip(Product(Gaussian(1.0), RationalLUE(2, 0)))
    assert (s.c_minus, s.c_plus) == (-math.inf, 1.0)
    with pytest.raises(EmptyStrip):
        convolve(GammaLUEstar(-0.5), PolyaProduct(b=(4.0,)))


def test_polya_parameter_invariant():
    with pytest.raises(ValueError):
        PolyaProduct(tau=0.0, b=())
    with pytest.raises(ValueError):
        PolyaProduct(tau=-1.0)


def test_pole_detection():
    W = GammaLUEstar(0.5)
    with pytest.raises(OutsideStrip):
        W.log_eval(-0.5)
    with pytest.raises(AtPoleOrZero):
        GammaLUEstar(0.0).log_eval(0.0, check=False)


def test_inverse_transform_examples():
    assert abs(w_inverse_transform(Gaussian.canonical(1.0), 0.0) - 1.0) < 1e-12
    assert abs(w_inverse_transform(RationalLUE(2, 0), 1.0) - math.exp(-1)) < 1e-11
    assert abs(w_inverse_transform(RationalLUE(2, 0), -1.0)) < 1e-11


def test_mellin_examples():
    assert abs(w_mellin_inverse(GammaLUEstar(0.0), 1.0) - math.exp(-1)) < 1e-11
    assert abs(w_mellin_inverse(GammaLUEstar(1.0), 2.0) - 2 * math.exp(-2)) < 1e-11
    W = GammaLUEstar(1.0)
    assert abs(w_mellin_inverse(W, 3.0) - w_inverse_transform(W, math.log(3.0))) < 1e-10


def test_polya_decay_examples():
    for W, N, c, h in POLYA_FIXTURES.values():
        assert polya_decay_check(W, N, c, h).passed
    W, N, c, h = POLYA_UNDERPARAMETERIZED
    with pytest.raises(PreconditionViolated):
        polya_decay_check(W, N, c, h)


def test_convolve_examples():
    rng = np.random.default_rng(0)
    zs = rng.uniform(-2, 0.9, 10) + 1j * rng.uniform(-3, 3, 10)
    W = convolve(RationalLUE(3, 0.5), RationalLUE(3, 1.5))
    ref = [-(8.0) * cmath.log(1 - z) for z in zs]
    got = [W.log_eval(z) - W.log_eval(0.0) for z in zs]
    assert np.allclose(np.exp(got), np.exp(ref), rtol=1e-12)
    G = convolve(Gaussian(0.7), Gaussian(1.1))
    for z in zs:
        assert abs(G.log_eval(z) - Gaussian(1.8).log_eval(z)) < 1e-13
    one = Gaussian(0.0)   # W ≡ 1
    for z in zs:
        assert abs(convolve(RationalLUE(2, 0), one).log_eval(z) - RationalLUE(2, 0).log_eval(z)) < 1e-14


def test_json_roundtrip():
    for W in [Gaussian(1.0, 0.2), RationalLUE(3, 1.0), GammaLUEstar(0.5), BetaJUE(1.0, 2.0),
              BetaCLUE(1.5, 0.5), PolyaProduct(0.5, 0.1, (-1.0, 2.0)),
              Product(Gaussian(1.0), RationalLUE(2, 0))]:
        back = w_from_json(W.to_json())
        z = complex(-0.2, 0.7)
        assert abs(back.log_eval(z) - W.log_eval(z)) < 1e-15
    with pytest.raises(ConfigError, match="variant"):
        w_from_json({"params": {}})
    with pytest.raises(ConfigError, match="W.params"):
        w_from_json({"variant": "RationalLUE", "params": {"n": 2}})


# --- invariants -----------------------------------------------------------

def test_fourier_roundtrip_gaussian():
    rep = check_fourier_roundtrip(Gaussian.canonical(1.0), [-1.0, -0.5, 0.0, 0.5, 1.0],
                                  QuadGrid.line(-12.0, 12.0, 0.2))
    assert rep.passed, rep


def test_fourier_roundtrip_lue():
    # w is known to ~1e-17 absolutely, so e^{zx} with z > 0 limits the usable range
    rep = check_fourier_roundtrip(RationalLUE(2, 0), [-1.0, -0.5, 0.0, 0.2],
                                  QuadGrid.interval(0.0, 60.0, 0.1, smax=2.6))
    assert rep.passed, rep


def test_fourier_roundtrip_detects_defect():
    rep = check_fourier_roundtrip(Gaussian.canonical(1.0), [0.0, 0.5],
                                  QuadGrid.line(-12.0, 12.0, 0.2), weight_scale=1.01)
    assert not rep.passed


@pytest.mark.parametrize("W, cs", [
    (Gaussian.canonical(1.0), (-0.7, 1.3)),
    (RationalLUE(2, 0.5), (-1.0, 0.5)),
    (PolyaProduct(0.5, 0.0, (-1.0, 0.5)), (-0.5, 1.0)),
])
@pytest.mark.parametrize("x", [-1.0, 0.3, 2.0])
def test_c_independence(W, cs, x):
    a = w_inverse_transform(W, x, cs[0])
    b = w_inverse_transform(W, x, cs[1])
    assert abs(a - b) < 1e-8


POLYA_POSITIVITY = [PolyaProduct(1.0), PolyaProduct(0.5, 0.3, (-1.0, 0.5)),
                    PolyaProduct(0.0, 0.0, (-1.0, -1.0, -1.0)), PolyaProduct(0.2, 0.0, (0.7, -2.0))]


@pytest.mark.parametrize("W", POLYA_POSITIVITY)
def test_polya_positivity(W):
    xs = np.linspace(-6, 6, 50)
    vals = np.array([np.real(w_inverse_transform(W, float(x))) for x in xs])
    assert np.all(vals >= -1e-8)


strip_variants = [Gaussian(1.0), RationalLUE(2, 1.0), GammaLUEstar(0.5),
                  PolyaProduct(0.3, 0.0, (-1.0, 0.5)), Product(GammaLUEstar(1.0), RationalLUE(1, 0))]


@given(st.integers(0, len(strip_variants) - 1), st.floats(-5, 5), st.floats(-3, 3))
def test_strip_soundness(k, re, im):
    W = strip_variants[k]
    inside = W.strip().contains(re)
    try:
        W.log_eval(complex(re, im))
        raised = False
    except OutsideStrip:
        raised = True
    except AtPoleOrZero:
        raised = not inside
    assert raised == (not inside)


@pytest.mark.parametrize("x", [-2.0, 0.0, 1.5, 2.9, 3.5, 6.0])
def test_triple_pole_closed_form(x):
    # ∏ e^{z}/(1+z) three times inverts to ((x−3)²/2) e^{x−3} on x < 3
    W = PolyaProduct(0.0, 0.0, (-1.0, -1.0, -1.0))
    ref = 0.5 * (x - 3) ** 2 * math.exp(x - 3) if x < 3 else 0.0
    assert abs(w_inverse_transform(W, x) - ref) < 1e-10
