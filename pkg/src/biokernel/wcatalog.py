"""Catalogue of W-functions W(z) = ∫ e^{xz} w(x) dx with their analyticity strips.

Each entry evaluates log W on its strip.  All catalogued poles, zeros and
branch points lie on the real axis, which the kernel code relies on when it
bends a vertical line away from the strip.
"""
import math
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from .errors import (AtPoleOrZero, ConfigError, EmptyStrip, OutsideStrip,
                     PoleAtNonpositiveInteger, PreconditionViolated)
from .quadrature import (QuadratureSettings, VerticalLineContour, choose_truncation,
                         integrate_vertical)
from .specfun import log_gamma

INF = math.inf


@dataclass(frozen=True)
class AnalyticStrip:
    c_minus: float
    c_plus: float

    def __post_init__(self):
        if not self.c_minus < self.c_plus:
            raise EmptyStrip(f"empty strip ({self.c_minus}, {self.c_plus})")

    def contains(self, x: float) -> bool:
        return self.c_minus < x < self.c_plus

    def intersect(self, other: "AnalyticStrip") -> "AnalyticStrip":
        lo, hi = max(self.c_minus, other.c_minus), min(self.c_plus, other.c_plus)
        if not lo < hi:
            raise EmptyStrip(f"strips ({self.c_minus}, {self.c_plus}) and "
                             f"({other.c_minus}, {other.c_plus}) do not overlap")
        return AnalyticStrip(lo, hi)

    def interior_point(self) -> float:
        lo, hi = self.c_minus, self.c_plus
        if lo == -INF and hi == INF:
            return 0.0
        if lo == -INF:
            return min(0.0, hi - 1.0) if hi > 0 else hi - 1.0
        if hi == INF:
            return max(0.0, lo + 1.0) if lo < 0 else lo + 1.0
        return 0.5 * (lo + hi)


class WFunction:
    """Base class; subclasses implement _log_core and strip."""

    variant = "abstract"
    normalization: complex = 1.0

    def _log_core(self, z):
        raise NotImplementedError

    def strip(self) -> AnalyticStrip:
        raise NotImplementedError

    def decay(self) -> str:
        """Decay class on vertical lines: gaussian, exponential, algebraic or none."""
        raise NotImplementedError

    def singular_points(self) -> Tuple[float, ...]:
        """Real points (poles, zeros, branch points) near the strip to keep contours off."""
        return ()

    def drift(self) -> float:
        """Coefficient of the linear exponential factor e^{drift·z} carried by W."""
        return 0.0

    def params(self) -> dict:
        raise NotImplementedError

    def log_eval(self, z, check=True):
        z = np.asarray(z, dtype=complex)
        if check:
            s = self.strip()
            re = z.real
            if np.any(re <= s.c_minus) or np.any(re >= s.c_plus):
                raise OutsideStrip(f"{self.variant}: point outside strip "
                                   f"({s.c_minus}, {s.c_plus})")
        try:
            val = np.asarray(self._log_core(z))
        except PoleAtNonpositiveInteger as exc:
            raise AtPoleOrZero(f"{self.variant}: {exc}") from exc
        if self.normalization != 1:
            if self.normalization == 0:
                raise AtPoleOrZero("zero normalization")
            val = val + np.log(complex(self.normalization))
        if np.any(~np.isfinite(val)):
            raise AtPoleOrZero(f"{self.variant}: W has a pole or zero at a sample point")
        return complex(val) if val.ndim == 0 else val

    def eval(self, z, check=True):
        return np.exp(self.log_eval(z, check=check))

    def to_json(self) -> dict:
        norm = complex(self.normalization)
        out = {"variant": self.variant, "params": self.params()}
        out["normalization"] = norm.real if norm.imag == 0 else [norm.real, norm.imag]
        return out


@dataclass(frozen=True)
class Gaussian(WFunction):
    tau: float = 1.0
    gamma: float = 0.0
    normalization: complex = 1.0
    variant = "Gaussian"

    def __post_init__(self):
        if self.tau < 0:
            raise ValueError("Gaussian needs tau >= 0")

    @classmethod
    def canonical(cls, tau: float = 1.0, gamma: float = 0.0) -> "Gaussian":
        """Normalized so that w(x) = exp(−(x+γ)²/(2τ)) exactly."""
        return cls(tau, gamma, math.sqrt(2 * math.pi * tau))

    def _log_core(self, z):
        return 0.5 * self.tau * z * z + self.gamma * z

    def strip(self):
        return AnalyticStrip(-INF, INF)

    def decay(self):
        return "gaussian" if self.tau > 0 else "none"

    def drift(self):
        return self.gamma

    def params(self):
        return {"tau": self.tau, "gamma": self.gamma}


@dataclass(frozen=True)
class RationalLUE(WFunction):
    """Γ(N+ν)(1−z)^{−(N+ν)}, the transform of x^{N−1+ν}e^{−x} on (0, ∞)."""

    N: int = 1
    nu: float = 0.0
    normalization: complex = 1.0
    variant = "RationalLUE"

    def __post_init__(self):
        if self.N < 1 or self.nu < 0:
            raise ValueError("RationalLUE needs N >= 1 and nu >= 0")

    def _log_core(self, z):
        p = self.N + self.nu
        return math.lgamma(p) - p * np.log(1 - z)

    def strip(self):
        return AnalyticStrip(-INF, 1.0)

    def decay(self):
        return "algebraic"

    def singular_points(self):
        return (1.0,)

    def params(self):
        return {"N": self.N, "nu": self.nu}


@dataclass(frozen=True)
class GammaLUEstar(WFunction):
    """Γ(ν+z), the Mellin transform of y^ν e^{−y}."""

    nu: float = 0.0
    normalization: complex = 1.0
    variant = "GammaLUEstar"

    def __post_init__(self):
        if self.nu <= -1:
            raise ValueError("GammaLUEstar needs nu > -1")

    def _log_core(self, z):
        return log_gamma(self.nu + z)

    def strip(self):
        return AnalyticStrip(-self.nu, INF)

    def decay(self):
        return "exponential"

    def singular_points(self):
        return tuple(-self.nu - k for k in range(4))

    def params(self):
        return {"nu": self.nu}


@dataclass(frozen=True)
class BetaJUE(WFunction):
    """B(μ+s, ν+1), the Mellin transform of y^μ(1−y)^ν on (0, 1)."""

    mu: float = 0.0
    nu: float = 0.0
    normalization: complex = 1.0
    variant = "BetaJUE"

    def _log_core(self, z):
        return (log_gamma(self.mu + z) + math.lgamma(self.nu + 1)
                - log_gamma(self.mu + self.nu + 1 + z))

    def strip(self):
        return AnalyticStrip(-self.mu, INF)

    def decay(self):
        return "algebraic"

    def singular_points(self):
        return tuple(-self.mu - k for k in range(4))

    def params(self):
        return {"mu": self.mu, "nu": self.nu}


@dataclass(frozen=True)
class BetaCLUE(WFunction):
    """B(β+s, γ−s+1), the Mellin transform of y^β(1+y)^{−β−γ−1}."""

    beta: float = 0.0
    gamma: float = 1.0
    normalization: complex = 1.0
    variant = "BetaCLUE"

    def _log_core(self, z):
        return (log_gamma(self.beta + z) + log_gamma(self.gamma + 1 - z)
                - math.lgamma(self.beta + self.gamma + 1))

    def strip(self):
        return AnalyticStrip(-self.beta, self.gamma + 1)

    def decay(self):
        return "exponential"

    def singular_points(self):
        return (-self.beta, self.gamma + 1)

    def params(self):
        return {"beta": self.beta, "gamma": self.gamma}


@dataclass(frozen=True)
class PolyaProduct(WFunction):
    """e^{τz²/2+γz} ∏_j e^{−b_j z}/(1−b_j z) for a finite list of nonzero b_j."""

    tau: float = 0.0
    gamma: float = 0.0
    b: Tuple[float, ...] = ()
    normalization: complex = 1.0
    variant = "PolyaProduct"

    def __post_init__(self):
        object.__setattr__(self, "b", tuple(float(x) for x in self.b))
        if self.tau < 0:
            raise ValueError("PolyaProduct needs tau >= 0")
        if any(x == 0 for x in self.b):
            raise ValueError("PolyaProduct b-values must be nonzero")
        if not self.tau + sum(x * x for x in self.b) > 0:
            raise ValueError("PolyaProduct needs tau + sum(b^2) > 0")

    def _log_core(self, z):
        out = 0.5 * self.tau * z * z + self.gamma * z
        for bj in self.b:
            out = out - bj * z - np.log(1 - bj * z)
        return out

    def strip(self):
        neg = [1 / x for x in self.b if x < 0]
        pos = [1 / x for x in self.b if x > 0]
        return AnalyticStrip(max(neg) if neg else -INF, min(pos) if pos else INF)

    def decay(self):
        return "gaussian" if self.tau > 0 else "algebraic"

    def singular_points(self):
        return tuple(sorted(1 / x for x in self.b))

    def drift(self):
        return self.gamma - sum(self.b)

    def params(self):
        return {"tau": self.tau, "gamma": self.gamma, "b": list(self.b)}


@dataclass(frozen=True)
class Product(WFunction):
    left: WFunction = field(default_factory=Gaussian)
    right: WFunction = field(default_factory=Gaussian)
    normalization: complex = 1.0
    variant = "Product"

    def _log_core(self, z):
        return self.left.log_eval(z, check=False) + self.right.log_eval(z, check=False)

    def strip(self):
        return self.left.strip().intersect(self.right.strip())

    def decay(self):
        order = ["none", "algebraic", "exponential", "gaussian"]
        return max(self.left.decay(), self.right.decay(), key=order.index)

    def singular_points(self):
        return tuple(sorted(set(self.left.singular_points()) | set(self.right.singular_points())))

    def drift(self):
        return self.left.drift() + self.right.drift()

    def params(self):
        return {"left": self.left.to_json(), "right": self.right.to_json()}


VARIANTS = {cls.variant: cls for cls in
            (Gaussian, RationalLUE, GammaLUEstar, BetaJUE, BetaCLUE, PolyaProduct, Product)}


def w_from_json(obj) -> WFunction:
    """Build a WFunction from {variant, params, normalization}."""
    if not isinstance(obj, dict) or "variant" not in obj:
        raise ConfigError("W: expected an object with key 'variant'")
    name = obj["variant"]
    if name not in VARIANTS:
        raise ConfigError(f"W.variant: unknown variant {name!r}")
    params = dict(obj.get("params", {}))
    norm = obj.get("normalization", 1.0)
    if isinstance(norm, list):
        norm = complex(norm[0], norm[1])
    try:
        if name == "Product":
            return Product(w_from_json(params["left"]), w_from_json(params["right"]), norm)
        if name == "PolyaProduct" and "b" in params:
            params["b"] = tuple(params["b"])
        return VARIANTS[name](**params, normalization=norm)
    except (TypeError, KeyError, ValueError) as exc:
        raise ConfigError(f"W.params: {exc}") from exc


def w_log_eval(W: WFunction, z):
    return W.log_eval(z)


def w_strip(W: WFunction) -> AnalyticStrip:
    return W.strip()


def convolve(W1: WFunction, W2: WFunction) -> WFunction:
    """Transform of the additive convolution w1*w2, i.e. the product W1·W2."""
    out = Product(W1, W2)
    out.strip()
    return out


def line_for(g, c: float, abs_tol: float, bend: float = 0.0, t_min: float = 0.5,
             spacing: float = 0.25, stretch: bool = False,
             t_max: float = 1e6) -> VerticalLineContour:
    """Vertical (optionally bent) line with truncation picked from sampled |g|."""
    probe = VerticalLineContour(c, 1.0, 16, bend)

    def bound(t):
        ts = np.array([t, -t, 1.1 * t, -1.1 * t, 1.25 * t, -1.25 * t])
        with np.errstate(all="ignore"):
            vals = np.abs(np.asarray(g(probe.point(ts))))
        vals = vals.reshape(len(ts), -1)
        m = float(np.max(vals))
        return m if np.isfinite(m) else INF

    T = choose_truncation(bound, abs_tol, t_min=t_min, t_max=t_max)
    span = 2 * math.asinh(T) / 0.4 * spacing if stretch else 2 * T
    n = 2 ** int(math.ceil(math.log2(max(span / spacing, 16)))) + 1
    return VerticalLineContour(c, T, n, bend, stretch)


def w_inverse_transform(W: WFunction, x: float, c: float = None,
                        settings: QuadratureSettings = QuadratureSettings()):
    """w(x) = (1/2πi)∫_{c+iℝ} e^{−xz} W(z) dz."""
    strip = W.strip()
    if c is None:
        c = strip.interior_point()
    if not strip.contains(c):
        raise OutsideStrip(f"abscissa {c} outside strip ({strip.c_minus}, {strip.c_plus})")
    bend, stretch = 0.0, False
    if W.decay() in ("algebraic", "none"):
        stretch = True
        # e^{-xz} times the linear factor in W behaves like e^{-(x - drift)z}
        shift = x - W.drift()
        if shift != 0:
            bend = math.copysign(1.0, shift)

    def f(z):
        return np.exp(-x * z + W.log_eval(z, check=False))

    line = line_for(f, c, settings.abs_tol, bend, stretch=stretch,
                    t_max=1e12 if stretch else 1e6)
    res = integrate_vertical(f, line, settings, strict=True)
    v = res.value
    return v.real if abs(v.imag) <= 1e-12 * max(1.0, abs(v)) else v


def w_mellin_inverse(W: WFunction, y: float, settings: QuadratureSettings = QuadratureSettings(),
                     c: float = None):
    """w̃(y) = (1/2πi)∫ y^z W(−z) dz, equal to w(log y)."""
    if y <= 0:
        raise ValueError("w_mellin_inverse needs y > 0")
    strip = W.strip()
    if c is None:
        c = strip.interior_point()
    # the substitution z → −z turns the Mellin line into the Fourier line at abscissa c
    return w_inverse_transform(W, math.log(y), c, settings)


def polya_decay_check(W: PolyaProduct, N: int, c: float, heights):
    """Sample |z^{N−1}W(z)| on c+iℝ and check boundedness and downward trend."""
    from .verify import VerificationReport

    if not isinstance(W, PolyaProduct):
        raise PreconditionViolated("polya_decay_check needs a PolyaProduct")
    if not (W.tau > 0 or len(W.b) >= N):
        raise PreconditionViolated(
            f"need tau > 0 or at least N={N} nonzero b-values (got {len(W.b)})")
    if not W.strip().contains(c):
        raise OutsideStrip(f"c={c} outside the strip")
    hs = sorted(float(h) for h in heights)
    z = c + 1j * np.array(hs)
    mags = np.abs(z) ** (N - 1) * np.abs(W.eval(z))
    ref = mags[0]
    bounded = bool(np.all(mags <= 10 * ref))
    downward = bool(mags[-1] < mags[-2]) if len(mags) >= 2 else True
    worst = float(np.max(mags) / (10 * ref)) if ref > 0 else INF
    passed = bounded and downward
    discrepancy = 0.0 if passed else max(worst, 1.0 + 1e-12)
    return VerificationReport("polya_decay", discrepancy, 1.0, passed,
                              f"|z^(N-1) W| at heights {hs}: {mags.tolist()}")


# Shipped Pólya fixtures for polya_decay_check: (W, N, c, heights).
POLYA_FIXTURES = {
    "gaussian_tau1_N5": (PolyaProduct(tau=1.0), 5, 0.0, (1.0, 10.0, 100.0)),
    "triple_pole_N3": (PolyaProduct(b=(-1.0, -1.0, -1.0)), 3, 0.0, (1.0, 10.0, 100.0)),
}
# Too few factors for N = 3 and no Gaussian part: must be rejected.
POLYA_UNDERPARAMETERIZED = (PolyaProduct(b=(-1.0,)), 3, 0.0, (1.0, 10.0, 100.0))
