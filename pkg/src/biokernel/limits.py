"""Hard-edge limit kernels: the perturbed Bessel kernel and the Muttalib-Borodin limit.

Both have a double contour form and an independent second route (a classical
closed form for the Bessel case, a residue series for the MB case), plus a
small harness that measures how fast finite-N kernels approach them.
"""
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

import numpy as np

from .errors import (AtPoleOrZero, DecayViolation, InvalidContour, NoDecay, OutsideStrip,
                     SeriesNotConverged, ZeroW)
from .kernels import (KernelValue, _Rule, _engine, _odd_double, _u_mass, default_hard_edge_c,
                      hard_edge_line_rule, teardrop_rule)
from .quadrature import (ClosedCircleContour, HankelRayContour, QuadratureSettings,
                         integrate_vertical)
from .specfun import bessel_j, log_gamma
from .wcatalog import WFunction, line_for


def _fast(W: WFunction) -> bool:
    return W.decay() in ("gaussian", "exponential")


def pbessel_eval(nu: float, r: float, W: WFunction, x: float, xp: float,
                 c: Optional[float] = None,
                 settings: QuadratureSettings = QuadratureSettings()) -> KernelValue:
    """Perturbed Bessel kernel at (x, x').

    s runs over a teardrop loop through 0 inside the circle of centre c/3 and
    radius |c|/3, approaching 0 from the right so that e^{−1/(4s)} decays
    there.  The t-contour is the line Re t = c when r > 0 and W decays fast;
    otherwise it is closed to the right: into the clockwise circle
    |t − c/3| = 2|c|/3 for integer ν, or bent to the right (needs x > 0).
    """
    if nu < 0 or r < 0:
        raise ValueError("need nu >= 0 and r >= 0")
    if c is None:
        c = default_hard_edge_c(W, r)
    if not c < 0:
        raise InvalidContour("c must be negative")
    with_w = r > 0
    if with_w and not W.strip().contains(r * c):
        raise OutsideStrip(f"r*c = {r * c} outside the strip of W")

    def log_w(z):
        return W.log_eval(r * z, check=False) if with_w else 0.0

    def fv(t):
        return np.exp(-nu * np.log(-t) + log_w(t) + 0.25 / t)

    def fu(s):
        with np.errstate(all="ignore"):
            out = np.exp(nu * np.log(-s) - log_w(s) - 0.25 / s)
        return np.where(np.isfinite(out), out, 0.0)

    tol = settings.abs_tol
    u_rule = teardrop_rule(c, lambda s: fu(s) * np.exp(xp * s), 1.0, 0.0, tol)
    mass = _u_mass(fu, u_rule, [xp])
    integer_nu = float(nu).is_integer()
    if with_w and _fast(W):
        v_rule = hard_edge_line_rule(c, lambda t: fv(t) * np.exp(-x * t), False, 1.0, 0.0,
                                     tol / max(mass, 1.0))
    elif integer_nu and not with_w:
        circle = ClosedCircleContour(c / 3, 2 * abs(c) / 3, 64)
        v_rule = _Rule(_Clockwise(circle), 64, lambda n: 2 * n)
    else:
        if not x > 0:
            raise InvalidContour("this t-contour needs x > 0")
        v_rule = hard_edge_line_rule(c, lambda t: fv(t) * np.exp(-x * t), True, 1.0, 0.0,
                                     tol / max(mass, 1.0))
    val, err, n = _engine(fv, fu, v_rule, u_rule, x, [xp], settings)
    return KernelValue(complex(val[0]), err, n)


class _Clockwise:
    def __init__(self, contour):
        self.contour = contour

    def nodes_weights(self, n):
        z, w = self.contour.nodes_weights(n)
        return z, -w


def pbessel_circle_check(c: float, nodes: int = 64) -> float:
    """Largest deviation of |exp(−1/(4s))| from exp(−3/(8c)) on the s-circle."""
    circle = ClosedCircleContour(c / 3, abs(c) / 3, nodes)
    s, _ = circle.nodes_weights(nodes)
    return float(np.max(np.abs(np.abs(np.exp(-0.25 / s)) - math.exp(-3 / (8 * c)))))


def _bessel_pieces(nu, z):
    j = bessel_j(nu, z)
    jp = 0.5 * (bessel_j(nu - 1, z) - bessel_j(nu + 1, z))
    return j, jp


def bessel_oracle(nu: float, x: float, y: float) -> float:
    """Classical hard-edge Bessel kernel in the variables x, y (symmetric form).

    K(x, y) = [J_ν(√x)√y J_ν'(√y) − √x J_ν'(√x) J_ν(√y)] / (2(x − y)),
    K(x, x) = [J_ν(√x)² − J_{ν+1}(√x) J_{ν−1}(√x)] / 4.
    """
    if x < 0 or y < 0:
        raise ValueError("bessel_oracle needs x, y >= 0")
    # the formula is symmetric; fixing the order makes K(x, y) == K(y, x) bitwise
    x, y = min(x, y), max(x, y)
    if abs(x - y) <= 1e-6 * max(1.0, x, y):
        # symmetric kernel: the midpoint diagonal is second-order accurate
        m = 0.5 * (x + y)
        z = math.sqrt(m)
        if z == 0:
            return 0.25 if nu == 0 else 0.0
        return 0.25 * (bessel_j(nu, z) ** 2 - bessel_j(nu + 1, z) * bessel_j(nu - 1, z))
    zx, zy = math.sqrt(max(x, 1e-300)), math.sqrt(max(y, 1e-300))
    jx, jpx = _bessel_pieces(nu, zx)
    jy, jpy = _bessel_pieces(nu, zy)
    return (jx * zy * jpy - zx * jpx * jy) / (2 * (x - y))


def bessel_gauge(nu: float, x: float, xp: float) -> float:
    """(x/x')^{ν/2}: the pBessel kernel at r = 0 equals this times bessel_oracle.

    The factor is a conjugation, so determinants and the diagonal agree with
    the symmetric form.
    """
    if nu == 0:
        return 1.0
    return (x / xp) ** (nu / 2)


def mb_limit_loop(theta: float, eta: float, W: WFunction, yp: float,
                  abs_tol: float = 1e-14, nodes_per_leg: int = 65) -> HankelRayContour:
    """Hankel loop around [θ+η, R] with standoff min(θ/4, 1/2) and R from the u-decay."""
    delta = min(theta / 4, 0.5)
    start = theta + eta
    fu = _mb_fu(theta, eta, W)

    def bound(R):
        u = np.array([complex(R, delta), complex(R, -delta)])
        return float(np.max(np.abs(fu(u)) * yp ** R))

    R = start + 1.0
    while bound(R) * (1 + R) > abs_tol * 1e-2:
        R *= 1.1
        if R > 1e4:
            raise DecayViolation("the u-integrand does not decay along the loop")
    return HankelRayContour(start, delta, R, nodes_per_leg)


def _mb_fu(theta, eta, W):
    def fu(u):
        return np.exp(log_gamma(1 - (u - eta) / theta) - W.log_eval(u, check=False))
    return fu


def _mb_fv(theta, eta, W):
    def fv(v):
        return np.exp(W.log_eval(v, check=False) - log_gamma(1 - (v - eta) / theta))
    return fv


def _mb_line(theta, eta, W, g, abs_tol):
    if not W.strip().contains(eta):
        raise OutsideStrip(f"eta = {eta} outside the strip of W")
    try:
        return line_for(g, eta, abs_tol)
    except NoDecay as exc:
        raise DecayViolation("the v-integrand does not decay on eta + iR; W must decay "
                             "faster than exp(-pi|t|/(2 theta))") from exc


def mb_limit_eval(theta: float, eta: float, W: WFunction, y: float, yp: float,
                  loop: Optional[HankelRayContour] = None,
                  settings: QuadratureSettings = QuadratureSettings()) -> KernelValue:
    """MB limit kernel: u on a positively oriented Hankel loop, v on η + iℝ."""
    if not (theta > 0 and eta > -theta):
        raise ValueError("need theta > 0 and eta > -theta")
    if y <= 0 or yp <= 0:
        raise ValueError("need y, y' > 0")
    loop = loop or mb_limit_loop(theta, eta, W, yp, settings.abs_tol)
    if loop.ray_start - loop.standoff <= eta:
        raise InvalidContour("the loop must stay right of the line eta + iR")
    fu, fv = _mb_fu(theta, eta, W), _mb_fv(theta, eta, W)
    x, xp = math.log(y), math.log(yp)
    u_rule = _Rule(loop, loop.nodes_per_leg, _odd_double)
    mass = _u_mass(fu, u_rule, [xp])
    line = _mb_line(theta, eta, W, lambda v: fv(v) * np.exp(-x * v),
                    settings.abs_tol / max(mass, 1.0))
    v_rule = _Rule(line, line.nodes, _odd_double)
    val, err, n = _engine(fv, fu, v_rule, u_rule, x, [xp], settings)
    return KernelValue(complex(val[0]) / y, err / y, n)


def mb_limit_terms(theta: float, eta: float, W: WFunction, y: float, yp: float, k_max: int,
                   settings: QuadratureSettings = QuadratureSettings()) -> np.ndarray:
    """Residue terms k = 1..k_max of the MB limit kernel (complex array)."""
    k = np.arange(1, k_max + 1)
    uk = theta * k + eta
    try:
        logw = np.array([W.log_eval(u) for u in uk])
    except (AtPoleOrZero, OutsideStrip) as exc:
        raise ZeroW(str(exc)) from exc
    lg = np.array([math.lgamma(kk) for kk in k])
    coef = (-1.0) ** (k - 1) * np.exp(math.log(theta) - lg + uk * math.log(yp) - logw)
    fv = _mb_fv(theta, eta, W)
    ly = math.log(y)

    def g(v):
        return (fv(v) * np.exp(-(v + 1) * ly))[:, None] / (uk[None, :] - v[:, None]) * coef

    line = _mb_line(theta, eta, W, g, settings.abs_tol)
    return np.asarray(integrate_vertical(g, line, settings, strict=True).value)


def mb_limit_residue_series(theta: float, eta: float, W: WFunction, y: float, yp: float,
                            k_max: Optional[int] = None,
                            settings: QuadratureSettings = QuadratureSettings()) -> KernelValue:
    """Partial sum of the residue series; the last term must be below 1e-12 of the sum."""
    if y <= 0 or yp <= 0:
        raise ValueError("need y, y' > 0")
    auto = k_max is None
    k = 8 if auto else k_max
    while True:
        terms = mb_limit_terms(theta, eta, W, y, yp, k, settings)
        total = complex(np.sum(terms))
        if abs(terms[-1]) <= 1e-12 * abs(total):
            return KernelValue(total, float(abs(terms[-1])), k)
        if not auto or k >= 512:
            raise SeriesNotConverged(f"last of {k} terms is {abs(terms[-1]):.3g}, "
                                     f"sum {abs(total):.3g}")
        k *= 2


@dataclass(frozen=True)
class ScanRow:
    N: int
    sup_error: float
    ratio_to_previous: Optional[float]


def convergence_scan(finite_kernel: Callable[[int, float, float], complex],
                     limit_kernel: Callable[[float, float], complex],
                     scaling: Callable[[int, float], float],
                     prefactor: Callable[[int], float],
                     N_list: Sequence[int], grid: Sequence[float],
                     threads: int = 1) -> List[ScanRow]:
    """Sup over grid² of |prefactor(N)·finite(N, scaled args) − limit(args)|."""
    pairs = [(a, b) for a in grid for b in grid]
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        limits = list(pool.map(lambda p: complex(limit_kernel(*p)), pairs))
        rows = []
        prev = None
        for N in N_list:
            vals = list(pool.map(
                lambda p: complex(finite_kernel(N, scaling(N, p[0]), scaling(N, p[1]))), pairs))
            err = max(abs(prefactor(N) * v - lim) for v, lim in zip(vals, limits))
            rows.append(ScanRow(N, err, None if prev is None else err / prev))
            prev = err
    return rows
