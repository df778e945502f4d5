"""Named verification checks returning pass/fail reports.

Each check takes its quadrature grid explicitly so that results are
deterministic for a given fixture.  Every check also accepts a deliberate
defect (a kernel scale or a swapped pair of ψ's) so tests can confirm that
the check is able to fail.
"""
import itertools
import json
import math
from dataclasses import asdict, dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from .kernels import (ContourPlan, EnsembleSpec, default_contour_plan, kernel_row,
                      partition_function, phi_eval, psi_eval)
from .quadrature import QuadratureSettings, integrate_vertical
from .wcatalog import WFunction, line_for, w_inverse_transform


@dataclass(frozen=True)
class VerificationReport:
    check_name: str
    discrepancy: float
    tolerance: float
    passed: bool
    details: str = ""

    def __post_init__(self):
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if self.passed != (self.discrepancy <= self.tolerance):
            raise ValueError("passed must equal discrepancy <= tolerance")

    @classmethod
    def make(cls, name, discrepancy, tolerance, details=""):
        d = float(discrepancy)
        if not math.isfinite(d):
            d = math.inf
        return cls(name, d, float(tolerance), d <= tolerance, details)

    def to_json_line(self) -> str:
        out = asdict(self)
        out.pop("details")
        if math.isinf(out["discrepancy"]):
            out["discrepancy"] = "inf"
        return json.dumps(out)


@dataclass(frozen=True)
class QuadGrid:
    nodes: np.ndarray
    weights: np.ndarray

    @classmethod
    def line(cls, lo: float, hi: float, h: float) -> "QuadGrid":
        """Trapezoid rule on [lo, hi]; meant for integrands negligible at both ends."""
        n = int(round((hi - lo) / h)) + 1
        x = np.linspace(lo, hi, n)
        w = np.full(n, x[1] - x[0])
        w[[0, -1]] /= 2
        return cls(x, w)

    @classmethod
    def half_line(cls, h: float = 0.05, lo: float = -4.5, hi: float = 3.2,
                  scale: float = 1.0) -> "QuadGrid":
        """exp-sinh rule for (0, ∞): x = scale·exp(π/2 sinh s)."""
        s = np.arange(lo, hi + h / 2, h)
        x = scale * np.exp(0.5 * np.pi * np.sinh(s))
        w = h * x * 0.5 * np.pi * np.cosh(s)
        return cls(x, w)

    @classmethod
    def interval(cls, a: float, b: float, h: float = 0.05, smax: float = 3.2) -> "QuadGrid":
        """tanh-sinh rule for (a, b)."""
        s = np.arange(-smax, smax + h / 2, h)
        arg = 0.5 * np.pi * np.sinh(s)
        t = np.tanh(arg)
        keep = np.abs(t) < 1
        s, arg, t = s[keep], arg[keep], t[keep]
        x = 0.5 * (a + b) + 0.5 * (b - a) * t
        w = h * 0.5 * (b - a) * 0.5 * np.pi * np.cosh(s) / np.cosh(arg) ** 2
        return cls(x, w)

    def integrate(self, values) -> complex:
        return complex(np.tensordot(self.weights, values, axes=(0, 0)))


def _maybe_real(z):
    z = np.asarray(z)
    return z.real if np.all(np.abs(z.imag) <= 1e-10 * np.maximum(1, np.abs(z))) else z


def check_biorthogonality(spec: EnsembleSpec, grid: QuadGrid, plan: Optional[ContourPlan] = None,
                          tolerance: float = 1e-8, settings: QuadratureSettings = QuadratureSettings(),
                          swap_psi: Optional[Tuple[int, int]] = None) -> VerificationReport:
    """Gram matrix ∫ φ_k ψ_m dx against the identity, entrywise."""
    plan = plan or default_contour_plan(spec)
    N = spec.N
    order = list(range(N))
    if swap_psi is not None:
        i, j = swap_psi
        order[i], order[j] = order[j], order[i]
    psi = np.array([[psi_eval(spec, m, float(x), plan, settings) for x in grid.nodes]
                    for m in order])
    phi = np.array([phi_eval(spec, k, grid.nodes) for k in range(N)])
    gram = (phi * grid.weights) @ psi.T
    disc = float(np.max(np.abs(gram - np.eye(N))))
    return VerificationReport.make("biorthogonality", disc, tolerance,
                                   f"N={N}, {len(grid.nodes)} nodes")


def _kernel_fn(spec, plan, settings, multiplicative, scale):
    """K(x, xs) as an array, in additive or multiplicative variables."""
    def row(x, xs):
        xs = np.asarray(xs, dtype=float)
        if multiplicative:
            vals = kernel_row(spec, math.log(x), np.log(xs), plan, settings)[0] / x
        else:
            vals = kernel_row(spec, x, xs, plan, settings)[0]
        return scale * vals
    return row


def check_trace(spec: EnsembleSpec, grid: QuadGrid, plan: Optional[ContourPlan] = None,
                tolerance: float = 1e-6, multiplicative: bool = False, kernel_scale: float = 1.0,
                settings: QuadratureSettings = QuadratureSettings()) -> VerificationReport:
    """∫ K(x, x) dx against N."""
    plan = plan or default_contour_plan(spec)
    row = _kernel_fn(spec, plan, settings, multiplicative, kernel_scale)
    diag = np.array([row(float(x), [x])[0] for x in grid.nodes])
    total = grid.integrate(diag)
    disc = abs(total - spec.N)
    return VerificationReport.make("trace", disc, tolerance,
                                   f"integral {total.real:.12g}, N={spec.N}")


def check_reproducing(spec: EnsembleSpec, grid: QuadGrid, points: Sequence[Tuple[float, float]],
                      plan: Optional[ContourPlan] = None, tolerance: float = 1e-6,
                      multiplicative: bool = False, kernel_scale: float = 1.0,
                      settings: QuadratureSettings = QuadratureSettings()) -> VerificationReport:
    """∫ K(x, t) K(t, x') dt against K(x, x') at the given points."""
    plan = plan or default_contour_plan(spec)
    row = _kernel_fn(spec, plan, settings, multiplicative, kernel_scale)
    xps = sorted({p[1] for p in points})
    col = {xp: i for i, xp in enumerate(xps)}
    # K(t, x') for every node t and every needed x'
    right = np.array([row(float(t), xps) for t in grid.nodes])
    worst = 0.0
    for x, xp in points:
        left = row(x, grid.nodes)
        lhs = grid.integrate(left * right[:, col[xp]])
        rhs = row(x, [xp])[0]
        worst = max(worst, abs(lhs - rhs))
    return VerificationReport.make("reproducing", worst, tolerance, f"{len(points)} points")


def vandermonde(a) -> complex:
    """Δ(a) = ∏_{j<k} (a_k − a_j)."""
    a = np.asarray(a, dtype=complex)
    out = 1.0 + 0j
    for j in range(len(a)):
        for k in range(j + 1, len(a)):
            out *= a[k] - a[j]
    return out


def weight_derivatives(W: WFunction, xs, count: int, c: Optional[float] = None,
                       settings: QuadratureSettings = QuadratureSettings()) -> np.ndarray:
    """D[k, i] = (−∂)^k w(x_i) = (1/2πi)∫ v^k W(v) e^{−x_i v} dv for k < count.

    Uses one straight line for all x; intended for fast-decaying W.
    """
    xs = np.asarray(xs, dtype=float)
    c = W.strip().interior_point() if c is None else c
    ks = np.arange(count)

    def f(v):
        base = np.exp(W.log_eval(v, check=False))[:, None] * v[:, None] ** ks
        return base[:, :, None] * np.exp(-np.outer(v, xs))[:, None, :]

    line = line_for(lambda v: f(v)[:, :, :].reshape(len(v), -1), c, settings.abs_tol)
    res = integrate_vertical(f, line, settings, strict=True)
    return _maybe_real(res.value)


def joint_density(spec: EnsembleSpec, points, c: Optional[float] = None,
                  settings: QuadratureSettings = QuadratureSettings()) -> np.ndarray:
    """det[φ_j(x_k)] det[(−∂)^{k−1} w(x_j)] / (Δ(a) Z_N) at each row of ``points``."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    N = spec.N
    flat = pts.ravel()
    D = weight_derivatives(spec.W, flat, N, c, settings).reshape(N, *pts.shape)
    a = spec.points
    Phi = np.exp(a[None, :, None] * pts[:, None, :])           # [m, j, k] = φ_j(x_k)
    Dm = np.transpose(D, (1, 2, 0))                           # [m, j, k] = D_k(x_j)
    return _maybe_real(np.linalg.det(Phi) * np.linalg.det(Dm)
                       / (vandermonde(a) * partition_function(spec)))


def check_partition(spec: EnsembleSpec, box: float, h: float = 0.2, tolerance: float = 1e-3,
                    density_scale: float = 1.0,
                    settings: QuadratureSettings = QuadratureSettings()) -> VerificationReport:
    """Tensor trapezoid quadrature of the density numerator over [−box, box]^N."""
    N = spec.N
    if N > 3:
        raise ValueError("check_partition is limited to N <= 3")
    g = QuadGrid.line(-box, box, h)
    D = weight_derivatives(spec.W, g.nodes, N, settings=settings)
    E = np.exp(np.outer(spec.points.real, g.nodes))
    n = len(g.nodes)
    idx = np.array(list(itertools.product(range(n), repeat=N)))
    wgt = np.prod(g.weights[idx], axis=1)
    A = np.transpose(E[:, idx], (1, 0, 2))         # [m, j, k] = φ_j(x_k)
    B = np.transpose(D[:, idx], (1, 2, 0))         # [m, j, k] = D_k(x_j)
    total = np.sum(wgt * np.linalg.det(A) * np.linalg.det(B)) / vandermonde(spec.points)
    total = total * density_scale
    z = partition_function(spec)
    disc = abs(total - z) / abs(z)
    return VerificationReport.make("partition", disc, tolerance,
                                   f"quadrature {complex(total).real:.10g}, formula {z.real:.10g}")


def check_density_vs_kernel(spec: EnsembleSpec, points, plan: Optional[ContourPlan] = None,
                            tolerance: float = 1e-6, kernel_scale: float = 1.0,
                            settings: QuadratureSettings = QuadratureSettings()) -> VerificationReport:
    """(1/N!) det[K(x_i, x_j)] against the explicit joint density, relative."""
    plan = plan or default_contour_plan(spec)
    N = spec.N
    dens = np.atleast_1d(joint_density(spec, points, settings=settings))
    worst = 0.0
    for p, d in zip(np.atleast_2d(points), dens):
        K = np.array([kernel_row(spec, float(x), p, plan, settings)[0] for x in p]) * kernel_scale
        lhs = np.linalg.det(K) / math.factorial(N)
        worst = max(worst, abs(lhs - d) / abs(d))
    return VerificationReport.make("density_vs_kernel", worst, tolerance,
                                   f"{len(dens)} points, N={N}")


def check_fourier_roundtrip(W: WFunction, zs: Sequence[float], grid: QuadGrid,
                            tolerance: float = 1e-6, weight_scale: float = 1.0,
                            settings: QuadratureSettings = QuadratureSettings()) -> VerificationReport:
    """∫ e^{xz} w(x) dx, with w from w_inverse_transform on the grid, against W(z)."""
    w = np.array([w_inverse_transform(W, float(x), settings=settings) for x in grid.nodes])
    w = w * weight_scale
    worst = 0.0
    for z in zs:
        back = grid.integrate(np.exp(grid.nodes * z) * w)
        ref = W.eval(z)
        worst = max(worst, abs(back - ref) / abs(ref))
    return VerificationReport.make("fourier_roundtrip", worst, tolerance,
                                   f"{W.variant}, {len(zs)} points")


@dataclass(frozen=True)
class LimitScanSpec:
    """Everything check_limit needs: kernels, scalings and a final-error bound."""
    name: str
    finite_kernel: Callable
    limit_kernel: Callable
    scaling: Callable
    prefactor: Callable
    N_list: Tuple[int, ...]
    grid: Tuple[float, ...]
    final_bound: float


def check_limit(scan: LimitScanSpec, threads: int = 1) -> VerificationReport:
    """Passes if sup-errors strictly decrease in N and the last one is below the bound.

    The reported discrepancy is the last sup-error, or inf when the sequence
    is not decreasing.
    """
    from .limits import convergence_scan
    rows = convergence_scan(scan.finite_kernel, scan.limit_kernel, scan.scaling, scan.prefactor,
                            scan.N_list, scan.grid, threads)
    errs = [r.sup_error for r in rows]
    monotone = all(b < a for a, b in zip(errs, errs[1:]))
    disc = errs[-1] if monotone else math.inf
    detail = ", ".join(f"N={r.N}: {r.sup_error:.3e}" for r in rows)
    return VerificationReport.make(f"limit:{scan.name}", disc, scan.final_bound, detail)


def write_reports(reports, path) -> None:
    with open(path, "w") as fh:
        for r in reports:
            fh.write(r.to_json_line() + "\n")


PLUE_PREFACTORS = {"1/(4N)": lambda N: 1.0 / (4 * N), "1/N": lambda N: 1.0 / N}


def plue_limit_scan(nu: float = 0.0, r: float = 1.0, W: Optional[WFunction] = None,
                    N_list=(16, 32, 64), grid=(0.25, 0.5, 1.0, 2.0), prefactor: str = "1/(4N)",
                    final_bound: float = 1e-2) -> LimitScanSpec:
    """pLUE at τ = r/(4N), arguments x/(4N), against the perturbed Bessel kernel."""
    from .kernels import plue_kernel_eval
    from .limits import pbessel_eval
    from .wcatalog import Gaussian
    W = W if W is not None else Gaussian(1.0)
    if prefactor not in PLUE_PREFACTORS:
        raise ValueError(f"prefactor must be one of {sorted(PLUE_PREFACTORS)}")
    return LimitScanSpec(
        f"plue->pbessel prefactor {prefactor}",
        lambda N, a, b: plue_kernel_eval(nu, N, W, r / (4 * N), a, b).value,
        lambda a, b: pbessel_eval(nu, r, W, a, b).value,
        lambda N, a: a / (4 * N),
        PLUE_PREFACTORS[prefactor],
        tuple(N_list), tuple(grid), final_bound)


def mb_limit_scan(theta: float = 2.0, eta: float = 0.0, W: Optional[WFunction] = None,
                  N_list=(8, 16, 32), grid=(0.5, 1.0, 2.0),
                  final_bound: float = 1e-2) -> LimitScanSpec:
    """Finite MB kernel at y/N^{1/θ}, times N^{−1/θ}, against the MB limit kernel."""
    from .kernels import mb_kernel_eval
    from .limits import mb_limit_eval
    from .wcatalog import GammaLUEstar
    W = W if W is not None else GammaLUEstar(1.0)
    return LimitScanSpec(
        f"mb->mb_limit theta={theta:g}",
        lambda N, a, b: mb_kernel_eval(theta, eta, N, W, a, b).value,
        lambda a, b: mb_limit_eval(theta, eta, W, a, b).value,
        lambda N, a: a / N ** (1 / theta),
        lambda N: N ** (-1 / theta),
        tuple(N_list), tuple(grid), final_bound)


def identify_plue_prefactor(threads: int = 1, **kwargs):
    """Run the pLUE scan under both candidate prefactors.

    Returns (name of the convergent prefactor or None, {name: report}).
    """
    reports = {name: check_limit(plue_limit_scan(prefactor=name, **kwargs), threads)
               for name in PLUE_PREFACTORS}
    good = [name for name, rep in reports.items() if rep.passed]
    return (good[0] if len(good) == 1 else None), reports


def gue_suite():
    """Shipped Gaussian-weight fixtures: (name, thunk) pairs, each thunk returning a report."""
    from .wcatalog import Gaussian
    G = Gaussian.canonical(1.0)
    line = QuadGrid.line(-8.0, 8.0, 0.25)
    one = EnsembleSpec.from_points(G, [0.0])
    two = EnsembleSpec.from_points(G, [0.3, -0.4])
    three = EnsembleSpec.from_points(G, [0.0, 0.5, -0.5])
    pts = [(0.1, 0.3), (-1.0, 0.5), (2.0, 2.0), (0.0, -1.5), (1.2, -0.7)]
    return [
        ("trace N=1", lambda: check_trace(one, line)),
        ("trace N=3", lambda: check_trace(three, line)),
        ("reproducing N=3", lambda: check_reproducing(three, line, pts)),
        ("biorthogonality N=3", lambda: check_biorthogonality(three, line)),
        ("partition N=2", lambda: check_partition(two, 8.0, 0.25)),
        ("density N=2", lambda: check_density_vs_kernel(two, [[0.1, 0.7], [-1.0, 0.4]])),
        ("fourier", lambda: check_fourier_roundtrip(G, [-1.0, -0.5, 0.0, 0.5, 1.0],
                                                     QuadGrid.line(-12.0, 12.0, 0.2))),
    ]


def lue_suite():
    """Shipped Laguerre-type fixtures (additive and multiplicative variables)."""
    from .wcatalog import GammaLUEstar, RationalLUE
    add = EnsembleSpec.from_points(RationalLUE(3, 1), [-0.5, 0.0, 0.4])
    mult = EnsembleSpec.from_points(GammaLUEstar(2), [0.0, 1.0])
    g = QuadGrid.interval(0.0, 80.0, h=0.1, smax=2.6)
    return [
        ("biorthogonality RationalLUE N=3", lambda: check_biorthogonality(add, g)),
        ("trace LUE N=2 multiplicative", lambda: check_trace(mult, g, multiplicative=True)),
        ("reproducing LUE N=2 multiplicative",
         lambda: check_reproducing(mult, g, [(0.5, 1.0), (2.0, 3.0)], multiplicative=True)),
    ]


SUITES = {"gue": gue_suite, "lue": lue_suite}
