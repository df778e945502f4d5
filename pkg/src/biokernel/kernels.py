"""Finite-N partition functions, biorthogonal functions and correlation kernels.

All kernels follow the index order K(x, x') = Σ_k φ_k(x') ψ_k(x).  The generic
engine evaluates

    K(x, x') = Σ_v w_v f_v(v) e^{−xv} Σ_u w_u f_u(u) e^{x'u} / (v − u)

where (u, w_u) and (v, w_v) are quadrature rules for the closed u-contour and
the v-line, both already divided by 2πi.  Node counts on both contours are
doubled together until successive values agree.
"""
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from .errors import (AtPoleOrZero, BiokernelError, ConfigError, ConfluentSources,
                     InvalidContour, NoDecay, NonConvergence, NoRoom, OutsideStrip, ZeroW)
from .quadrature import (ClosedCircleContour, QuadratureSettings, VerticalLineContour,
                         _segment_tanh_sinh, integrate_vertical)
from .wcatalog import INF, WFunction, line_for, w_from_json


@dataclass(frozen=True)
class Source:
    b: complex
    mult: int = 1


@dataclass(frozen=True)
class EnsembleSpec:
    W: WFunction
    sources: Tuple[Source, ...]

    def __post_init__(self):
        object.__setattr__(self, "sources", tuple(self.sources))
        if not self.sources:
            raise ValueError("at least one source is required")
        strip = self.W.strip()
        for s in self.sources:
            if s.mult < 1:
                raise ValueError(f"multiplicity must be >= 1, got {s.mult}")
            if not strip.contains(complex(s.b).real):
                raise OutsideStrip(f"source {s.b} outside strip ({strip.c_minus}, {strip.c_plus})")
            try:
                self.W.log_eval(s.b)
            except AtPoleOrZero as exc:
                raise ZeroW(f"W vanishes at source {s.b}") from exc

    @classmethod
    def from_points(cls, W: WFunction, points: Sequence[complex]) -> "EnsembleSpec":
        """Group repeated points into multiplicities, keeping first-seen order."""
        out = []
        for a in points:
            a = complex(a)
            for i, s in enumerate(out):
                if s.b == a:
                    out[i] = Source(a, s.mult + 1)
                    break
            else:
                out.append(Source(a, 1))
        return cls(W, tuple(out))

    @property
    def N(self) -> int:
        return sum(s.mult for s in self.sources)

    @property
    def points(self) -> np.ndarray:
        return np.array([s.b for s in self.sources for _ in range(s.mult)], dtype=complex)

    @property
    def distinct(self) -> bool:
        return all(s.mult == 1 for s in self.sources)

    def to_json(self) -> dict:
        def num(z):
            z = complex(z)
            return z.real if z.imag == 0 else [z.real, z.imag]
        return {"W": self.W.to_json(),
                "sources": [{"b": num(s.b), "mult": s.mult} for s in self.sources]}

    @classmethod
    def from_json(cls, obj) -> "EnsembleSpec":
        if not isinstance(obj, dict):
            raise ConfigError("ensemble spec must be an object with keys 'W' and 'sources'")
        for key in ("W", "sources"):
            if key not in obj:
                raise ConfigError(f"ensemble spec is missing key '{key}'")
        W = w_from_json(obj["W"])
        if not isinstance(obj["sources"], list) or not obj["sources"]:
            raise ConfigError("'sources' must be a nonempty list")
        sources = []
        for i, s in enumerate(obj["sources"]):
            if not isinstance(s, dict) or "b" not in s:
                raise ConfigError(f"sources[{i}] must be an object with key 'b'")
            b = s["b"]
            if isinstance(b, list):
                if len(b) != 2:
                    raise ConfigError(f"sources[{i}].b must be a number or [re, im]")
                b = complex(b[0], b[1])
            elif not isinstance(b, (int, float)):
                raise ConfigError(f"sources[{i}].b must be a number or [re, im]")
            mult = s.get("mult", 1)
            if not isinstance(mult, int) or mult < 1:
                raise ConfigError(f"sources[{i}].mult must be a positive integer")
            sources.append(Source(complex(b), mult))
        return cls(W, tuple(sources))


@dataclass(frozen=True)
class ContourPlan:
    sigma: ClosedCircleContour
    c: float
    sine_correction_alpha: Optional[float] = None

    def __post_init__(self):
        alpha = self.crossing_alpha(self.sigma, self.c)
        if alpha is None and self.sine_correction_alpha is not None:
            raise InvalidContour("sine correction given but the line misses the circle")
        if alpha is not None:
            if self.sine_correction_alpha is None:
                raise InvalidContour("the line crosses the circle; sine_correction_alpha is required")
            if abs(alpha - self.sine_correction_alpha) > 1e-9 * max(1.0, alpha):
                raise InvalidContour(f"sine_correction_alpha must equal {alpha!r}")

    @staticmethod
    def crossing_alpha(sigma: ClosedCircleContour, c: float) -> Optional[float]:
        """Half chord length cut from sigma by Re v = c, or None if they miss."""
        d = c - complex(sigma.center).real
        if abs(d) >= sigma.radius:
            return None
        return math.sqrt(sigma.radius ** 2 - d * d)

    @classmethod
    def crossing(cls, sigma: ClosedCircleContour, c: float) -> "ContourPlan":
        return cls(sigma, c, cls.crossing_alpha(sigma, c))

    @property
    def side(self) -> str:
        if self.sine_correction_alpha is not None:
            return "crossing"
        return "right" if self.c > complex(self.sigma.center).real else "left"

    def encloses(self, points) -> bool:
        return bool(np.all(np.abs(np.asarray(points) - self.sigma.center) < self.sigma.radius))


@dataclass(frozen=True)
class KernelValue:
    value: complex
    error_estimate: float
    nodes_used: int


def _nodes_for_radius(radius: float) -> int:
    return max(32, 2 ** int(math.ceil(math.log2(max(8 * radius, 1.0)))) * 8)


def default_contour_plan(spec: EnsembleSpec) -> ContourPlan:
    """Circle around the sources with the line on whichever side has room.

    The right side is preferred.  The left side is only used when the strip
    has a finite left edge; with an infinite left edge and no room on the
    right, NoRoom is raised and the caller should pass a crossing plan.
    """
    pts = spec.points
    center = complex(np.mean(pts))
    spread = float(np.max(np.abs(pts - center)))
    strip = spec.W.strip()
    width = min(strip.c_plus, 4.0) - max(strip.c_minus, -4.0)
    margin = 0.25 * min(width, 4.0)
    need = 0.25 * margin

    def placement(edge, direction):
        # direction +1: line right of the circle; −1: left
        if math.isinf(edge):
            radius = spread + margin
            return radius, center.real + direction * (radius + margin)
        gap = direction * (edge - center.real) - spread
        if gap < need:
            return None
        radius = spread + min(margin, gap / 2)
        return radius, 0.5 * (center.real + direction * radius + edge)

    for edge, direction in ((strip.c_plus, 1), (strip.c_minus, -1)):
        if direction == -1 and math.isinf(edge):
            continue
        got = placement(edge, direction)
        if got is None:
            continue
        radius, c = got
        # the other side of the circle must stay inside the strip as well
        other = strip.c_minus if direction == 1 else strip.c_plus
        far = center.real - direction * radius
        if not math.isinf(other) and direction * (far - other) <= 0:
            radius = min(radius, abs(center.real - other) * 0.9)
            if radius <= spread:
                continue
        for p in spec.W.singular_points():
            if abs(p - center) < radius + 1e-12:
                radius = min(radius, 0.5 * (spread + abs(p - center)))
        if radius <= spread:
            continue
        sigma = ClosedCircleContour(center, radius, _nodes_for_radius(radius))
        return ContourPlan(sigma, c)
    raise NoRoom("no vertical line separates the source circle from the strip edge; "
                 "use a crossing plan with the sine correction")


def partition_function(spec: EnsembleSpec) -> complex:
    if not spec.distinct:
        raise ConfluentSources("partition_function needs distinct sources; "
                               "use partition_confluent")
    return math.factorial(spec.N) * complex(np.exp(np.sum(_log_w_at_sources(spec))))


def _log_w_at_sources(spec):
    try:
        return np.array([spec.W.log_eval(s.b) for s in spec.sources])
    except AtPoleOrZero as exc:
        raise ZeroW(str(exc)) from exc


def _superfactorial(n: int) -> int:
    out = 1
    for k in range(n):
        out *= math.factorial(k)
    return out


def partition_confluent(spec: EnsembleSpec) -> complex:
    """N! ∏_j sf(N_j) ∏_{j<k}(b_k − b_j)^{N_j N_k} ∏_j W(b_j)^{N_j}, sf(n) = 0!1!…(n−1)!."""
    logw = _log_w_at_sources(spec)
    val = complex(math.factorial(spec.N))
    for s, lw in zip(spec.sources, logw):
        val *= _superfactorial(s.mult) * np.exp(s.mult * lw)
    srcs = spec.sources
    for j in range(len(srcs)):
        for k in range(j + 1, len(srcs)):
            val *= (srcs[k].b - srcs[j].b) ** (srcs[j].mult * srcs[k].mult)
    return complex(val)


def partition_confluent_printed(spec: EnsembleSpec) -> complex:
    """The closed form with ∏(N_j − 1)! in place of the superfactorial.

    Kept for comparison only: it agrees with partition_confluent while every
    multiplicity is at most 3 and is wrong from multiplicity 4 on.
    """
    val = partition_confluent(spec)
    for s in spec.sources:
        val *= math.factorial(s.mult - 1) / _superfactorial(s.mult)
    return val


def phi_eval(spec: EnsembleSpec, n: int, x):
    a = spec.points[n]
    out = np.exp(a * np.asarray(x, dtype=float))
    return complex(out) if out.ndim == 0 else out


def _line_shape(W: WFunction, x: float, side: Optional[str]):
    """(bend, stretch) for a v-line under e^{−xv}; side says where Σ sits."""
    if W.decay() in ("gaussian", "exponential"):
        return 0.0, False
    shift = x - W.drift()
    bend = math.copysign(1.0, shift) if shift != 0 else 0.0
    # never bend towards the u-contour
    if (side == "right" and bend < 0) or (side == "left" and bend > 0):
        bend = 0.0
    return bend, True


def _saddle_abscissa(f, strip, c0: float) -> float:
    """Real point in the strip where |f| is smallest, searched near c0."""
    lo = max(strip.c_minus, c0 - 60.0)
    hi = min(strip.c_plus, c0 + 60.0)
    pad = 1e-3 * min(hi - lo, 1.0)
    cs = np.linspace(lo + pad, hi - pad, 481)
    with np.errstate(all="ignore"):
        vals = np.log(np.abs(f(cs.astype(complex))))
    vals = np.where(np.isfinite(vals), vals, np.inf)
    best = float(cs[int(np.argmin(vals))])
    return best if np.isfinite(np.min(vals)) else c0


def psi_eval(spec: EnsembleSpec, m: int, x: float, plan: ContourPlan,
             settings: QuadratureSettings = QuadratureSettings()):
    """ψ_m(x) = (1/W̃'(a_m)) (1/2πi)∫ W(v)∏_{j≠m}(v − a_j) e^{−xv} dv."""
    if not spec.distinct:
        raise ConfluentSources("psi_eval needs distinct sources")
    a = spec.points
    if np.any(np.abs(a.real - plan.c) < 1e-12):
        raise InvalidContour("line abscissa coincides with Re a_j")
    others = np.delete(a, m)
    am = a[m]
    lw = spec.W.log_eval(am)
    dprime = np.exp(lw) * np.prod(am - others)

    def f(v):
        return np.exp(-x * v + spec.W.log_eval(v, check=False)) * np.prod(
            v[:, None] - others[None, :], axis=1) / dprime

    # the integrand is entire apart from W, so any abscissa in the strip gives
    # the same value; pass near the real saddle to avoid cancellation
    c = _saddle_abscissa(f, spec.W.strip(), plan.c)
    bend, stretch = 0.0, False
    if spec.W.decay() in ("algebraic", "none"):
        shift = x - spec.W.drift()
        bend, stretch = (math.copysign(1.0, shift) if shift != 0 else 0.0), True
    t_max = 1e12 if stretch else 1e6
    line = line_for(f, c, settings.abs_tol, bend, stretch=stretch, t_max=t_max)
    value = integrate_vertical(f, line, settings, strict=True).value
    size = abs(value)
    if not 0 < size < 1e-2:
        return value
    # small values (far tails) get a second pass with tolerances relative to
    # |ψ|; keep the first value when that cannot be reached

    def g(v):
        return f(v) / size

    try:
        line = line_for(g, c, settings.abs_tol, bend, stretch=stretch, t_max=t_max)
        res = integrate_vertical(g, line, settings)
    except BiokernelError:
        return value
    return res.value * size if res.converged else value


class _Rule:
    """A contour with a starting node count and a growth law."""

    def __init__(self, contour, n0: int, grow: Callable[[int], int]):
        self.contour, self.n0, self.grow = contour, n0, grow

    def at(self, level: int):
        n = self.n0
        for _ in range(level):
            n = self.grow(n)
        z, w = self.contour.nodes_weights(n)
        return z, w, len(z)


def _double(n):
    return 2 * n


def _odd_double(n):
    return 2 * n - 1


class _SplitLine:
    """Line c + it, |t| ≤ T, cut at t = ±α into three tanh-sinh pieces."""

    def __init__(self, c, alpha, T):
        self.c, self.alpha, self.T = c, alpha, T

    def nodes_weights(self, n):
        c, a, T = self.c, self.alpha, self.T
        zs, ws = [], []
        for lo, hi in ((-T, -a), (-a, a), (a, T)):
            z, w = _segment_tanh_sinh(complex(c, lo), complex(c, hi), n)
            zs.append(z)
            ws.append(w)
        return np.concatenate(zs), np.concatenate(ws)


_MAX_PAIRS = 1 << 24


def _engine(fv, fu, v_rule, u_rule, x, xps, settings, coupling=None, circle=None):
    """Row of K(x, x') over x' in xps.

    The two rules are refined independently: at each step the node count is
    doubled on whichever contour still moves the value by more than the
    target.  ``circle`` = (center, radius) switches on the treatment for a
    v-line that crosses the u-circle: near the circle the inner sum is
    computed with the singular part subtracted, which relies on f_v f_u ≡ 1.
    """
    xps = np.atleast_1d(np.asarray(xps, dtype=float))

    def compute(lu, lv):
        u, wu, nu = u_rule.at(lu)
        v, wv, nv = v_rule.at(lv)
        if nu * nv > _MAX_PAIRS:
            raise NonConvergence(f"double contour did not converge within {nu} x {nv} nodes")
        H = (wu * fu(u))[:, None] * np.exp(np.outer(u, xps))
        g = wv * fv(v) * np.exp(-x * v)
        C = coupling(v, u) if coupling is not None else 1.0 / (v[:, None] - u[None, :])
        val = g @ (C @ H)
        if circle is not None:
            center, radius = circle
            dist = np.abs(v - center)
            near = np.abs(dist - radius) < 0.5 * radius
            if np.any(near):
                vn = v[near]
                corr = C[near] @ wu + (dist[near] < radius)
                val = val - (wv[near] * corr) @ np.exp(np.outer(vn, xps - x))
        # cancellation between large terms caps the attainable accuracy
        floor = 100 * np.finfo(float).eps * float(np.max(np.abs(g) @ np.abs(C) @ np.abs(H)))
        return val, floor, nu + nv

    lu = lv = 0
    base, floor, _ = compute(lu, lv)
    while True:
        up, f_u, _ = compute(lu + 1, lv)
        vp, f_v, n = compute(lu, lv + 1)
        eu = float(np.max(np.abs(up - base)))
        ev = float(np.max(np.abs(vp - base)))
        best = up + (vp - base)
        tol = max(settings.target(best), floor, f_u, f_v)
        if eu < tol and ev < tol:
            return best, eu + ev, n + 1
        if eu >= tol and ev >= tol:
            lu, lv = lu + 1, lv + 1
            base, floor, _ = compute(lu, lv)
        elif eu >= tol:
            lu, base, floor = lu + 1, up, f_u
        else:
            lv, base, floor = lv + 1, vp, f_v


def _u_mass(fu, u_rule, xps):
    u, wu, _ = u_rule.at(0)
    xps = np.atleast_1d(np.asarray(xps, dtype=float))
    return float(np.max(np.abs(wu * fu(u))[:, None] * np.exp(np.outer(u.real, xps))) * len(u))


def _standard_f(spec):
    a = spec.points
    W = spec.W

    def fv(v):
        return W.eval(v, check=False) * np.prod(v[:, None] - a[None, :], axis=1)

    def fu(u):
        return 1.0 / (W.eval(u, check=False) * np.prod(u[:, None] - a[None, :], axis=1))

    return fv, fu


def _v_rule(fv, c, x, mass, settings, shape, circle_gap=None):
    bend, stretch = shape
    tol = settings.abs_tol / max(mass, 1.0)

    def g(v):
        return fv(v) * np.exp(-x * v)

    t_max = 1e12 if stretch else 1e6
    line = line_for(g, c, tol, bend, stretch=stretch, t_max=t_max)
    return _Rule(line, line.nodes, _odd_double)


def sine_correction(x: float, xp, c: float, alpha: float):
    """e^{c(x'−x)} sin(α(x−x'))/(π(x−x')), with a series near x = x'."""
    xp = np.asarray(xp, dtype=float)
    d = x - xp
    small = np.abs(d) < 1e-6
    safe = np.where(small, 1.0, d)
    z2 = (alpha * d) ** 2
    series = alpha / np.pi * (1 - z2 / 6 + z2 * z2 / 120)
    return np.exp(c * (xp - x)) * np.where(small, series, np.sin(alpha * safe) / (np.pi * safe))


def _adapted_plan(spec: EnsembleSpec, x: float, plan: ContourPlan) -> ContourPlan:
    """Move the v-line towards the real saddle of |W(v)e^{−xv}| when the given
    abscissa would cost more than three digits to cancellation.

    In standard form f_v f_u ≡ 1, so the pole at v = u contributes an entire
    function of u whose Σ-integral vanishes: the line may sit on either side of
    Σ, or cross it with the sine correction.  For slowly decaying W the line is
    instead put on the side where it can bend into the decay of e^{−xv}.
    """
    W = spec.W
    center = complex(plan.sigma.center).real
    r = plan.sigma.radius
    if W.decay() not in ("gaussian", "exponential"):
        return _bendable_plan(W, x, plan, center, r)
    N = spec.N

    def size(cs):
        cs = np.asarray(cs, dtype=complex)
        with np.errstate(all="ignore"):
            return (W.log_eval(cs, check=False).real - x * cs.real
                    + N * np.log1p(np.abs(cs.real - center)))

    c_star = _saddle_abscissa(lambda v: np.exp(size(v)), W.strip(), plan.c)
    if not size([plan.c])[0] - size([c_star])[0] > math.log(1e3):
        return plan
    # keep clear of the circle unless actually crossing it well inside
    d = c_star - center
    if r * 0.75 <= abs(d) < 1.25 * r:
        outside = center + math.copysign(1.25 * r, d)
        # no room outside the circle: cross it instead
        c_star = outside if W.strip().contains(outside) else center + math.copysign(0.75 * r, d)
    alpha = ContourPlan.crossing_alpha(plan.sigma, c_star)
    return ContourPlan(plan.sigma, c_star, alpha)


def _bendable_plan(W: WFunction, x: float, plan: ContourPlan, center: float,
                   r: float) -> ContourPlan:
    shift = x - W.drift()
    if shift == 0 or plan.side == "crossing":
        return plan
    want = "left" if shift < 0 else "right"
    if plan.side == want:
        return plan
    strip = W.strip()
    if want == "left":
        edge = center - r
        far = max(strip.c_minus, edge - 1.0)
    else:
        edge = center + r
        far = min(strip.c_plus, edge + 1.0)
    if abs(far - edge) < 1e-3 or (far - edge) * (1 if want == "right" else -1) < 0:
        return plan
    return ContourPlan(plan.sigma, 0.5 * (edge + far))


def kernel_row(spec: EnsembleSpec, x: float, xps, plan: ContourPlan,
               settings: QuadratureSettings = QuadratureSettings(), adapt_line: bool = True):
    """K_N(x, x') for one x and an array of x'; returns (values, error, nodes).

    With ``adapt_line`` the v-line may be moved away from plan.c for this x
    (see _adapted_plan); the value does not depend on the abscissa.
    """
    if not plan.encloses(spec.points):
        raise InvalidContour("sigma must enclose every source")
    if adapt_line:
        plan = _adapted_plan(spec, x, plan)
    fv, fu = _standard_f(spec)
    sig = plan.sigma
    u_rule = _Rule(sig, sig.nodes, _double)
    mass = _u_mass(fu, u_rule, xps)
    if plan.sine_correction_alpha is None:
        shape = _line_shape(spec.W, x, plan.side)
        v_rule = _v_rule(fv, plan.c, x, mass, settings, shape)
        return _engine(fv, fu, v_rule, u_rule, x, xps, settings)
    alpha = plan.sine_correction_alpha
    probe = _v_rule(fv, plan.c, x, mass, settings, (0.0, False))
    T = max(probe.contour.half_length, 1.5 * alpha)
    v_rule = _Rule(_SplitLine(plan.c, alpha, T), 33, _odd_double)
    val, err, n = _engine(fv, fu, v_rule, u_rule, x, xps, settings,
                          circle=(sig.center, sig.radius))
    return val + sine_correction(x, xps, plan.c, alpha), err, n


def kernel_eval(spec: EnsembleSpec, x: float, xp: float, plan: Optional[ContourPlan] = None,
                settings: QuadratureSettings = QuadratureSettings()) -> KernelValue:
    plan = plan or default_contour_plan(spec)
    val, err, n = kernel_row(spec, x, [xp], plan, settings)
    return KernelValue(complex(val[0]), err, n)


def kernel_diagonal(spec: EnsembleSpec, xs, plan: Optional[ContourPlan] = None,
                    settings: QuadratureSettings = QuadratureSettings()) -> np.ndarray:
    plan = plan or default_contour_plan(spec)
    return np.array([kernel_row(spec, float(x), [x], plan, settings)[0][0] for x in xs])


def kernel_matrix(spec: EnsembleSpec, xs, xps, plan: Optional[ContourPlan] = None,
                  settings: QuadratureSettings = QuadratureSettings()) -> np.ndarray:
    """K[i, j] = K_N(xs[i], xps[j])."""
    plan = plan or default_contour_plan(spec)
    return np.array([kernel_row(spec, float(x), xps, plan, settings)[0] for x in xs])


def kernel_fully_confluent(spec: EnsembleSpec, x: float, xp: float,
                           contour: Optional[ClosedCircleContour] = None,
                           settings: QuadratureSettings = QuadratureSettings(),
                           c: float = 0.0) -> KernelValue:
    """Single-source form with ((v/u)^N − 1)/(v − u) in place of the products.

    That factor is a polynomial in v, so the line may pass straight through
    the u-circle; by default it runs through the origin.
    """
    if len(spec.sources) != 1 or spec.sources[0].b != 0:
        raise ValueError("kernel_fully_confluent needs a single source at 0")
    N = spec.N
    W = spec.W
    if contour is None:
        strip = W.strip()
        room = min(-strip.c_minus, strip.c_plus, 2.0)
        contour = ClosedCircleContour(0.0, 0.5 * room, _nodes_for_radius(0.5 * room))
    if not W.strip().contains(c):
        raise OutsideStrip(f"line abscissa {c} outside the strip")
    powers = np.arange(N)

    def fv(v):
        return W.eval(v, check=False)

    def fu(u):
        return 1.0 / W.eval(u, check=False)

    def coupling(v, u):
        # (v^N − u^N) / (u^N (v − u)) = Σ_k v^k u^{−1−k}
        return (v[:, None] ** powers) @ (u[:, None] ** (-1.0 - powers)).T

    u_rule = _Rule(contour, contour.nodes, _double)
    mass = _u_mass(fu, u_rule, [xp]) * max(1.0, contour.radius ** -N)
    shape = (0.0, False)
    if W.decay() in ("algebraic", "none"):
        shape = (math.copysign(1.0, x) if x != 0 else 0.0, True)
    v_rule = _v_rule(lambda v: fv(v) * (1 + np.abs(v)) ** (N - 1), c, x, mass, settings, shape)
    val, err, n = _engine(fv, fu, v_rule, u_rule, x, [xp], settings, coupling=coupling)
    return KernelValue(complex(val[0]), err, n)


def multiplicative_kernel_eval(spec: EnsembleSpec, y: float, yp: float,
                               plan: Optional[ContourPlan] = None,
                               settings: QuadratureSettings = QuadratureSettings()) -> KernelValue:
    """K̃_N(y, y') = (1/y) K_N(log y, log y')."""
    if y <= 0 or yp <= 0:
        raise ValueError("multiplicative kernel needs y, y' > 0")
    kv = kernel_eval(spec, math.log(y), math.log(yp), plan, settings)
    return KernelValue(kv.value / y, kv.error_estimate / y, kv.nodes_used)


@dataclass(frozen=True)
class HardEdgePlan:
    """Contours for the hard-edge scaling u = 4N s + 1/2, v = 4N t + 1/2.

    s runs over a teardrop loop through 0 inside the circle of centre c̃/3 and
    radius |c̃|/3; t runs over the line Re t = c̃, bent to the right when
    ``bend`` is set (this needs x > 0 and supplies decay through e^{−xv}).
    """

    c_tilde: float
    bend: bool = False

    def __post_init__(self):
        if not self.c_tilde < 0:
            raise InvalidContour("c_tilde must be negative")


class _Mapped:
    """A contour pushed forward by z -> scale·z + shift."""

    def __init__(self, contour, scale, shift):
        self.contour, self.scale, self.shift = contour, scale, shift

    def nodes_weights(self, n):
        z, w = self.contour.nodes_weights(n)
        return self.scale * z + self.shift, self.scale * w


def teardrop_rule(c_tilde: float, f, scale: float = 1.0, shift: complex = 0.0,
                  abs_tol: float = 1e-14) -> _Rule:
    """Teardrop s-loop through 0 inside the circle of centre c̃/3, radius |c̃|/3.

    ``f`` is the u-integrand as a function of u = scale·s + shift; the
    truncation of the underlying w-line is read off from it.
    """
    from .quadrature import TeardropContour
    d = 1.5 / c_tilde

    def g(w):
        with np.errstate(all="ignore"):
            return f(shift + scale / w) * scale / np.abs(w) ** 2

    line = line_for(g, d, abs_tol, 1.0, stretch=True, t_max=1e22)
    loop = TeardropContour(d, line.half_length, line.nodes, scale, shift, 1.0)
    return _Rule(loop, line.nodes, _odd_double)


def hard_edge_line_rule(c_tilde: float, g, bend: bool, scale: float = 1.0,
                        shift: complex = 0.0, abs_tol: float = 1e-14) -> _Rule:
    """t-line Re t = c̃ (optionally bent right) pushed to v = scale·t + shift.

    ``g`` is the v-integrand including e^{−xv}.
    """
    def gt(t):
        return g(scale * t + shift) * scale

    line = line_for(gt, c_tilde, abs_tol, 1.0 if bend else 0.0)
    return _Rule(_Mapped(line, scale, shift), line.nodes, _odd_double)


def default_hard_edge_c(W: WFunction, r: float, N: Optional[int] = None) -> float:
    """c̃ = c_−/(5r) when that is finite, else −1/(2 max(1, r)).

    With N given the result is pushed left until the s-loop, whose leftmost
    point is 2c̃/3, encloses −1/(8N) with a factor two to spare.
    """
    cm = W.strip().c_minus
    if r > 0 and math.isfinite(cm):
        c = cm / (5 * r)
    else:
        # keeps |W(r t)| on the line moderate when W grows like a Gaussian
        c = -0.5 / max(1.0, r)
    if N is not None:
        c = min(c, -0.375 / N)
    return c


def _plue_logs(nu, N, W, tau):
    def log_f(z):
        out = N * np.log(z) - (N + nu) * np.log(1 - z)
        if tau != 0:
            out = out + W.log_eval(tau * z, check=False)
        return out
    return log_f


def plue_kernel_eval(nu: float, N: int, W: WFunction, tau: float, x: float, xp: float,
                     plan=None, settings: QuadratureSettings = QuadratureSettings()) -> KernelValue:
    """LUE perturbed by a Pólya-type W(τ·), with principal branches throughout.

    ``plan`` is a ContourPlan (circle around 0 plus a line) or a
    HardEdgePlan; the default is a HardEdgePlan with a bent line when
    W(τ·) gives no Gaussian or exponential decay.
    """
    if nu < 0 or N < 1:
        raise ValueError("need nu >= 0 and N >= 1")
    log_f = _plue_logs(nu, N, W, tau)

    def fv(v):
        return np.exp(log_f(v))

    def fu(u):
        return np.exp(-log_f(u))

    if plan is None:
        fast = tau != 0 and W.decay() in ("gaussian", "exponential")
        plan = HardEdgePlan(default_hard_edge_c(W, 4 * N * tau, N), bend=not fast)
    if isinstance(plan, ContourPlan):
        sig = plan.sigma
        if plan.sine_correction_alpha is not None:
            raise InvalidContour("plue_kernel_eval needs a non-crossing plan")
        if complex(sig.center).real + sig.radius >= 1:
            from .errors import BranchCutHit
            raise BranchCutHit("sigma meets [1, +inf)")
        if not plan.encloses([0.0]):
            raise InvalidContour("sigma must enclose 0")
        if tau != 0 and not W.strip().contains(tau * plan.c):
            raise OutsideStrip("tau*c outside the strip of W")
        u_rule = _Rule(sig, sig.nodes, _double)
        mass = _u_mass(fu, u_rule, [xp])
        shape = (0.0, False)
        if tau == 0 or W.decay() in ("algebraic", "none"):
            bend = math.copysign(1.0, x) if x != 0 else 0.0
            if (plan.side == "right" and bend < 0) or (plan.side == "left" and bend > 0):
                bend = 0.0
            shape = (bend, True)
        v_rule = _v_rule(fv, plan.c, x, mass, settings, shape)
    else:
        scale = 4.0 * N
        if not -2 * plan.c_tilde / 3 > 1 / (8 * N):
            raise InvalidContour("the s-loop must enclose -1/(8N); make c_tilde more negative")
        if tau != 0 and not W.strip().contains(tau * (scale * plan.c_tilde + 0.5)):
            raise OutsideStrip("tau*c outside the strip of W")
        if plan.bend and not x > 0:
            raise InvalidContour("a bent t-line needs x > 0")
        u_rule = teardrop_rule(plan.c_tilde, lambda u: fu(u) * np.exp(xp * u), scale, 0.5,
                               settings.abs_tol)
        mass = _u_mass(fu, u_rule, [xp])
        v_rule = hard_edge_line_rule(plan.c_tilde, lambda v: fv(v) * np.exp(-x * v), plan.bend,
                                     scale, 0.5, settings.abs_tol / max(mass, 1.0))
    val, err, n = _engine(fv, fu, v_rule, u_rule, x, [xp], settings)
    return KernelValue(complex(val[0]), err, n)


def gue_lue_kernel_direct(nu: float, N: int, tau: float, x: float, xp: float,
                          radius: float = 0.4, c: float = 0.7,
                          settings: QuadratureSettings = QuadratureSettings()) -> KernelValue:
    """LUE plus a GUE matrix of variance τ², coded straight from its integrand.

    Σ is the circle |u| = radius and the line Re v = c lies to its right.
    Plain trapezoid sums on both, independent of the generic engine.
    """
    if not 0 < radius < c < 1:
        raise InvalidContour("need 0 < radius < c < 1")
    if tau <= 0:
        raise ValueError("tau must be positive")
    T = math.sqrt(2 * (math.log(1 / settings.abs_tol) + 10)) / tau + 1
    m, n = 64, int(8 * T) + 1
    prev = None
    while True:
        th = 2 * np.pi * (np.arange(m) + 0.5) / m
        u = radius * np.exp(1j * th)
        du = 1j * u * (2 * np.pi / m)
        t = np.linspace(-T, T, n)
        v = c + 1j * t
        dv = np.full(n, 1j * (t[1] - t[0]))
        dv[[0, -1]] /= 2
        A = (v ** N * (1 - v) ** (-(N + nu)) * np.exp(tau ** 2 * v ** 2 / 2 - x * v)) * dv
        B = (u ** (-N) * (1 - u) ** (N + nu) * np.exp(-tau ** 2 * u ** 2 / 2 + xp * u)) * du
        val = complex(A @ (1.0 / (v[:, None] - u[None, :])) @ B) / (2j * np.pi) ** 2
        if prev is not None:
            err = abs(val - prev)
            if err < settings.target(val):
                return KernelValue(val, err, m + n)
        if 2 * (m + n) > settings.max_nodes:
            raise NonConvergence("direct GUE+LUE kernel did not converge")
        prev = val
        m, n = 2 * m, 2 * n - 1


def mb_points(theta: float, eta: float, N: int) -> np.ndarray:
    return theta * np.arange(1, N + 1) + eta


def mb_default_plan(theta: float, eta: float, N: int, W: WFunction) -> ContourPlan:
    """Circle through η + θ/2 and Nθ + η + θ/2 with the line on its left."""
    if not eta > -theta:
        raise ValueError("need eta > -theta")
    pts = mb_points(theta, eta, N)
    center = 0.5 * (pts[0] + pts[-1])
    radius = 0.5 * (pts[-1] - pts[0]) + theta / 2
    strip = W.strip()
    if not center + radius < strip.c_plus:
        raise NoRoom("the strip of W does not reach past N*theta + eta")
    lo = max(strip.c_minus, eta - theta)
    left = center - radius
    if not lo < left:
        raise NoRoom("no room for the line left of the circle")
    c = 0.5 * (lo + left)
    return ContourPlan(ClosedCircleContour(center, radius, _nodes_for_radius(radius)), c)


def mb_kernel_eval(theta: float, eta: float, N: int, W: WFunction, y: float, yp: float,
                   plan: Optional[ContourPlan] = None,
                   settings: QuadratureSettings = QuadratureSettings()) -> KernelValue:
    """Muttalib-Borodin type kernel with sources θj + η in multiplicative variables."""
    spec = EnsembleSpec.from_points(W, mb_points(theta, eta, N))
    plan = plan or mb_default_plan(theta, eta, N, W)
    return multiplicative_kernel_eval(spec, y, yp, plan, settings)


def _log_gamma_ratio(N, z):
    # log Γ(N+1−z) − log Γ(1−z) = Σ_{j=1}^N log(j − z), summed directly
    j = np.arange(1, N + 1)
    return np.sum(np.log(j[None, :] - np.asarray(z)[:, None]), axis=1)


def mb_kernel_residue_sum(theta: float, eta: float, N: int, W: WFunction, y: float, yp: float,
                          settings: QuadratureSettings = QuadratureSettings(),
                          c: Optional[float] = None) -> KernelValue:
    """The u-integral done by residues at u_k = kθ + η, k = 1..N.

    Each term is θ(−1)^{k−1}/(k−1)! · (y')^{u_k} / (W(u_k) Γ(N+1−k)) times
    (1/2πi)∫ W(v) Γ(N+1−z)/Γ(1−z) y^{−v−1}/(u_k − v) dv, z = (v−η)/θ, on the
    line Re v = c (default η).
    """
    if y <= 0 or yp <= 0:
        raise ValueError("need y, y' > 0")
    c = eta if c is None else c
    if not W.strip().contains(c):
        raise OutsideStrip(f"line abscissa {c} outside the strip of W")
    if not c < theta + eta:
        raise InvalidContour("the line must pass left of theta + eta")
    uk = mb_points(theta, eta, N)
    try:
        logw = np.array([W.log_eval(u) for u in uk])
    except AtPoleOrZero as exc:
        raise ZeroW(str(exc)) from exc
    k = np.arange(1, N + 1)
    log_coef = (np.log(theta) - np.array([math.lgamma(kk) + math.lgamma(N + 1 - kk) for kk in k])
                + uk * math.log(yp) - logw)
    coef = (-1.0) ** (k - 1) * np.exp(log_coef)
    ly = math.log(y)

    def g(v):
        z = (v - eta) / theta
        base = np.exp(W.log_eval(v, check=False) + _log_gamma_ratio(N, z) - (v + 1) * ly)
        return base[:, None] / (uk[None, :] - v[:, None])

    line = line_for(lambda v: g(v) * coef[None, :], c, settings.abs_tol)
    res = integrate_vertical(lambda v: g(v) * coef[None, :], line, settings, strict=True)
    terms = np.asarray(res.value)
    return KernelValue(complex(np.sum(terms)), res.error_estimate * N, res.nodes_used)
