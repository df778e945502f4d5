"""Contours and trapezoidal quadrature for analytic integrands.

Every integrate_* routine returns (1/2πi) times the contour integral.  The
integrand receives a numpy array of nodes and may return an array whose
leading axis matches the nodes; trailing axes are carried through, which lets
callers integrate many related integrands on one node set.
"""
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import InvalidContour, NoDecay, NonConvergence, TailTooFat

TWO_PI_I = 2j * np.pi


@dataclass(frozen=True)
class QuadratureSettings:
    rel_tol: float = 1e-11
    abs_tol: float = 1e-13
    max_nodes: int = 1 << 15

    def __post_init__(self):
        if not (0 < self.rel_tol < 1):
            raise ValueError("rel_tol must lie in (0, 1)")
        if self.abs_tol <= 0:
            raise ValueError("abs_tol must be positive")
        if self.max_nodes < 64:
            raise ValueError("max_nodes must be at least 64")

    def target(self, value) -> float:
        return max(self.abs_tol, self.rel_tol * float(np.max(np.abs(value))))


@dataclass(frozen=True)
class QuadratureResult:
    value: complex
    error_estimate: float
    nodes_used: int
    converged: bool


@dataclass(frozen=True)
class ClosedCircleContour:
    center: complex
    radius: float
    nodes: int = 32
    node_phase_offset: Optional[float] = None  # None: half a node spacing

    def __post_init__(self):
        if not self.radius > 0:
            raise InvalidContour(f"radius must be positive, got {self.radius}")
        if self.nodes < 8:
            raise InvalidContour("a circle needs at least 8 nodes")

    def nodes_weights(self, n: int):
        """Nodes z_k and weights with sum(w f(z)) ≈ (1/2πi)∮ f dz."""
        offset = np.pi / n if self.node_phase_offset is None else self.node_phase_offset
        theta = offset + 2 * np.pi * np.arange(n) / n
        e = np.exp(1j * theta)
        z = self.center + self.radius * e
        # dz/(2πi) = ρ e^{iθ} dθ / (2π)
        return z, self.radius * e / n


@dataclass(frozen=True)
class VerticalLineContour:
    """Segment c−iT … c+iT traversed upward.

    A nonzero ``bend`` κ deforms the segment into the hyperbola
    v(t) = c + κ(√(1+t²) − 1) + it, drifting right (κ > 0) or left (κ < 0).
    This is only valid when the integrand is analytic on the swept region and
    e^{−xv} supplies the decay there.  With ``stretch`` the trapezoid rule runs
    in s where t = sinh(s), which grades the nodes geometrically and turns
    algebraic tails into exponential ones.
    """

    c: float
    half_length: float
    nodes: int = 64
    bend: float = 0.0
    stretch: bool = False

    def __post_init__(self):
        if not self.half_length > 0:
            raise InvalidContour("half_length must be positive")
        if self.nodes < 16:
            raise InvalidContour("a line needs at least 16 nodes")

    def point(self, t):
        t = np.asarray(t, dtype=float)
        return self.c + self.bend * (np.sqrt(1.0 + t * t) - 1.0) + 1j * t

    def nodes_weights(self, n: int):
        if self.stretch:
            smax = np.arcsinh(self.half_length)
            s = np.linspace(-smax, smax, n)
            t = np.sinh(s)
            jac = np.cosh(s)
            h = s[1] - s[0]
        else:
            t = np.linspace(-self.half_length, self.half_length, n)
            jac = np.ones(n)
            h = t[1] - t[0]
        w = np.full(n, h) * jac
        w[0] /= 2
        w[-1] /= 2
        dv = 1j + self.bend * t / np.sqrt(1.0 + t * t)
        return self.point(t), w * dv / TWO_PI_I


@dataclass(frozen=True)
class HankelRayContour:
    """Three-leg loop around the ray [ray_start, reach], positively oriented.

    Upper leg R+iδ → s−δ+iδ, cap s−δ+iδ → s−δ−iδ, lower leg s−δ−iδ → R−iδ.
    """

    ray_start: float
    standoff: float
    reach: float
    nodes_per_leg: int = 32

    def __post_init__(self):
        if not self.standoff > 0:
            raise InvalidContour("standoff must be positive")
        if not self.reach > self.ray_start:
            raise InvalidContour("reach must exceed ray_start")

    def legs(self):
        s, d, R = self.ray_start, self.standoff, self.reach
        left = s - d
        return [
            (complex(R, d), complex(left, d)),
            (complex(left, d), complex(left, -d)),
            (complex(left, -d), complex(R, -d)),
        ]

    def nodes_weights(self, n: int):
        """Tanh-sinh on the cap; on the long legs a softplus map that clusters
        nodes exponentially at the corner and spaces them evenly further out."""
        upper, cap, lower = self.legs()
        z1, w1 = _segment_softplus(upper[1], upper[0], n, self.standoff)
        z2, w2 = _segment_tanh_sinh(cap[0], cap[1], n)
        z3, w3 = _segment_softplus(lower[0], lower[1], n, self.standoff)
        # the upper leg runs towards the cap, so reverse it
        return np.concatenate([z1[::-1], z2, z3]), np.concatenate([-w1[::-1], w2, w3])


def _segment_softplus(a: complex, b: complex, n: int, scale: float):
    """Nodes on a → b with a·log(1+e^σ)-type grading: dense at a, even near b."""
    length = abs(b - a)
    unit = (b - a) / length
    smax = length / scale + math.log(-math.expm1(-length / scale))
    smin = math.log(1e-17 * length / scale)
    s = np.linspace(smin, smax, n)
    h = s[1] - s[0]
    d = scale * np.logaddexp(0.0, s)
    dd = scale / (1 + np.exp(-s))
    w = h * dd
    w[-1] /= 2
    return a + unit * d, unit * w / TWO_PI_I


def _segment_tanh_sinh(a: complex, b: complex, n: int):
    """Tanh-sinh nodes on a segment: trapezoid rule in the stretched variable."""
    smax = 3.2
    s = np.linspace(-smax, smax, n)
    h = s[1] - s[0]
    arg = 0.5 * np.pi * np.sinh(s)
    x = np.tanh(arg)
    dx = 0.5 * np.pi * np.cosh(s) / np.cosh(arg) ** 2
    z = 0.5 * (a + b) + 0.5 * (b - a) * x
    w = h * dx * 0.5 * (b - a)
    return z, w / TWO_PI_I


def _sum_nodes(f, z, w):
    vals = np.asarray(f(z))
    if vals.shape[:1] != z.shape:
        vals = np.broadcast_to(vals, z.shape + vals.shape[1:])
    return np.tensordot(w, vals, axes=(0, 0)), vals


def _refine(contour, f, settings, n0, grow, check_tail=None):
    n = n0
    prev = None
    best = None
    used = n
    while True:
        z, w = contour.nodes_weights(n)
        val, vals = _sum_nodes(f, z, w)
        if check_tail is not None and prev is None:
            check_tail(vals)
        if prev is not None:
            err = float(np.max(np.abs(val - prev)))
            best = (val, err, n)
            if err < settings.target(val):
                return QuadratureResult(_scalar(val), err, n, True)
        used = n
        nxt = grow(n)
        if nxt > settings.max_nodes:
            if best is None:
                best = (val, float("inf"), used)
            return QuadratureResult(_scalar(best[0]), best[1], best[2], False)
        prev = val
        n = nxt


def _scalar(val):
    val = np.asarray(val)
    return complex(val) if val.ndim == 0 else val


def _strict(result, what):
    if not result.converged:
        raise NonConvergence(f"{what}: node doubling did not converge "
                             f"(err {result.error_estimate:.3g} after {result.nodes_used} nodes)",
                             result)
    return result


def integrate_closed(f: Callable, contour: ClosedCircleContour,
                     settings: QuadratureSettings = QuadratureSettings(),
                     strict: bool = False) -> QuadratureResult:
    res = _refine(contour, f, settings, contour.nodes, lambda n: 2 * n)
    return _strict(res, "integrate_closed") if strict else res


def integrate_vertical(f: Callable, line: VerticalLineContour,
                       settings: QuadratureSettings = QuadratureSettings(),
                       strict: bool = False) -> QuadratureResult:
    def tail(vals):
        ends = np.abs(np.asarray(vals)[[0, -1]])
        if np.max(ends) > settings.abs_tol:
            raise TailTooFat(f"integrand modulus {np.max(ends):.3g} at ±iT exceeds "
                             f"abs_tol {settings.abs_tol:.3g}; increase half_length")

    res = _refine(line, f, settings, line.nodes, lambda n: 2 * n - 1, tail)
    return _strict(res, "integrate_vertical") if strict else res


def integrate_hankel(f: Callable, loop: HankelRayContour,
                     settings: QuadratureSettings = QuadratureSettings(),
                     strict: bool = False, check_tail: bool = True) -> QuadratureResult:
    """Integral over the open loop; with ``check_tail`` the integrand must be
    below abs_tol at both far ends, otherwise TailTooFat is raised."""
    def tail(vals):
        n = loop.nodes_per_leg
        vals = np.asarray(vals)
        ends = np.abs(vals[[0, 3 * n - 1]])
        if np.max(ends) > settings.abs_tol:
            raise TailTooFat(f"integrand modulus {np.max(ends):.3g} at the loop's right "
                             f"end exceeds abs_tol; increase reach")

    res = _refine(loop, f, settings, loop.nodes_per_leg, lambda n: 2 * n - 1,
                  tail if check_tail else None)
    return _strict(res, "integrate_hankel") if strict else res


def choose_truncation(decay_bound: Callable[[float], float], abs_tol: float,
                      t_min: float = 0.01, ratio: float = 1.005, t_max: float = 1e6) -> float:
    """Smallest T on a geometric grid with decay_bound(T)(1+T) < abs_tol/10."""
    target = abs_tol / 10
    t = t_min
    while t <= t_max:
        if decay_bound(t) * (1 + t) < target:
            return t
        t *= ratio
    raise NoDecay(f"no truncation height below {t_max:g} meets tolerance {abs_tol:g}")


@dataclass(frozen=True)
class TeardropContour:
    """Closed loop through ``shift`` whose two ends meet there at right angles.

    It is the image of the bent line w(t) = d + bend(√(1+t²) − 1) + it, d < 0,
    under s = shift + scale/w.  With bend = 0 the image is the circle of centre
    shift + scale/(2d) through ``shift``; with bend > 0 the loop pinches in
    near ``shift`` so that an essential singularity there is approached along
    directions in which it decays.  Orientation is positive.
    """

    d: float
    half_length: float
    nodes: int = 65
    scale: float = 1.0
    shift: complex = 0.0
    bend: float = 1.0

    def __post_init__(self):
        if not self.d < 0:
            raise InvalidContour("teardrop needs d < 0")

    def _line(self):
        return VerticalLineContour(self.d, self.half_length, 16, self.bend, True)

    def nodes_weights(self, n: int):
        w, ww = self._line().nodes_weights(n)
        s = self.shift + self.scale / w
        return s, -self.scale * ww / (w * w)
