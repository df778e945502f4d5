"""Complex log-Gamma, real-order Bessel J and Wright's generalized Bessel function."""
import math

import numpy as np

from .errors import PoleAtNonpositiveInteger

LOG_PI = math.log(math.pi)
HALF_LOG_2PI = 0.5 * math.log(2 * math.pi)

# B_{2k} / (2k(2k-1)) for k = 1..12
_STIRLING = np.array([
    1 / 12, -1 / 360, 1 / 1260, -1 / 1680, 1 / 1188, -691 / 360360, 1 / 156,
    -3617 / 122400, 43867 / 244188, -174611 / 125400, 77683 / 5796, -236364091 / 1506960,
])
_SHIFT_TO = 12.0


def _loggamma_right(z):
    """log Γ for Re z >= 1/2: upward recurrence then the Stirling series."""
    m = np.maximum(0, np.ceil(_SHIFT_TO - z.real)).astype(int)
    acc = np.zeros_like(z)
    w = z.copy()
    for k in range(int(m.max()) if m.size else 0):
        active = m > k
        acc = np.where(active, acc + np.log(np.where(active, w, 1.0)), acc)
        w = np.where(active, w + 1, w)
    inv = 1.0 / w
    inv2 = inv * inv
    series = np.zeros_like(w)
    for coef in _STIRLING[::-1]:
        series = series * inv2 + coef
    series = series * inv
    return (w - 0.5) * np.log(w) - w + HALF_LOG_2PI + series - acc


def _log_sinpi(z):
    """Principal log sin(πz), without overflow for large |Im z|."""
    # reduce the real part first to keep accuracy for large |Re z|
    n = np.round(z.real)
    w = (z.real - n) + 1j * z.imag
    big = np.abs(w.imag) > 30
    out = np.empty_like(w)
    ws = w[~big]
    out[~big] = np.log(np.sin(np.pi * ws))
    wb = w[big]
    up = wb.imag > 0
    # sin(πw) = ∓e^{∓iπw}(1 − e^{±2πiw})/(2i), upper signs for Im w > 0
    sgn = np.where(up, 1.0, -1.0)
    out[big] = (-1j * np.pi * sgn * wb - np.log(2j) + np.where(up, 1j * np.pi, 0.0)
                + np.log1p(-np.exp(2j * np.pi * sgn * wb)))
    out = out + np.where(n % 2 == 0, 0.0, 1j * np.pi)
    im = out.imag - 2 * np.pi * np.round(out.imag / (2 * np.pi))
    return out.real + 1j * im


def log_gamma(z):
    """Principal branch of log Γ(z), continuous off the negative real axis."""
    arr = np.asarray(z, dtype=complex)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    if np.any((arr.imag == 0) & (arr.real <= 0) & (arr.real == np.round(arr.real))):
        raise PoleAtNonpositiveInteger(f"log_gamma has a pole at {z}")
    out = np.empty_like(arr)
    right = arr.real >= 0.5
    if np.any(right):
        out[right] = _loggamma_right(arr[right])
    left = ~right
    if np.any(left):
        zl = arr[left]
        # branch bookkeeping keeps the result continuous in z
        k = np.copysign(2 * np.pi, zl.imag) * np.floor(0.5 * zl.real + 0.25)
        out[left] = (LOG_PI + 1j * k) - _log_sinpi(zl) - _loggamma_right(1 - zl)
    return complex(out[0]) if scalar else out


def rgamma(x: float) -> float:
    """1/Γ(x) for real x, zero at the poles."""
    if x <= 0 and x == math.floor(x):
        return 0.0
    if x > 170:
        return math.exp(-math.lgamma(x))
    return 1.0 / math.gamma(x)


def bessel_j(nu: float, x: float) -> float:
    """J_ν(x) by its power series; intended for 0 <= x <= 20."""
    if x == 0:
        return 1.0 if nu == 0 else 0.0
    half = 0.5 * x
    total = 0.0
    k = 0
    while True:
        term = (-1) ** k * half ** (2 * k + nu) * rgamma(k + nu + 1) / math.factorial(k)
        total += term
        if k > half and abs(term) < 1e-17 * max(abs(total), 1e-300):
            return total
        if k > 400:
            return total
        k += 1


def wright_bessel(a: float, b: float, x: float) -> float:
    """Σ_k (−x)^k / (k! Γ(ak+b)), summed until terms drop below 1e-16(|sum|+1)."""
    if a <= 0:
        raise ValueError("wright_bessel needs a > 0")
    total = 0.0
    k = 0
    log_fact = 0.0
    while True:
        g = rgamma(a * k + b)
        if g == 0.0:
            term = 0.0
        elif x == 0:
            term = g if k == 0 else 0.0
        else:
            term = (-1) ** k * math.exp(k * math.log(abs(x)) - log_fact) * g
            if x < 0:
                term = abs(term) * math.copysign(1.0, g)
        total += term
        k += 1
        log_fact += math.log(k)
        # only stop once the terms are past their peak
        past_peak = abs(x) < 0.5 * k * max(a * k, 1.0) ** a
        if past_peak and abs(term) < 1e-16 * (abs(total) + 1):
            return total
        if k > 2000:
            return total
