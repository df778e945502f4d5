"""Monte Carlo eigenvalue samples for GUE with a source and for LUE."""
import csv
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence

import numpy as np

from .errors import GridTooCoarse
from .verify import VerificationReport

_CHUNK = 4096


def _rng(seed: int, index: int) -> np.random.Generator:
    # counter-based: the stream for a chunk depends only on (seed, chunk index)
    return np.random.Generator(np.random.Philox(key=[seed & (2**64 - 1), index]))


def _chunks(count):
    return [(i, min(_CHUNK, count - i)) for i in range(0, count, _CHUNK)]


def _run(draw, count, seed, threads):
    if count < 1:
        raise ValueError("count must be at least 1")
    jobs = _chunks(count)
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        parts = list(pool.map(lambda job: draw(_rng(seed, job[0] // _CHUNK), job[1]), jobs))
    return np.concatenate(parts)


def sample_gue_source(N: int, a: Sequence[float], count: int, seed: int,
                      threads: int = 1) -> np.ndarray:
    """Eigenvalues of M + diag(a), M with density ∝ exp(−Tr M²/2).

    Returns a (count, N) array, each row sorted ascending.
    """
    a = np.asarray(a, dtype=float)
    if a.shape != (N,):
        raise ValueError(f"need {N} source values, got {a.shape}")

    def draw(rng, n):
        g = rng.standard_normal((n, N, N)) + 1j * rng.standard_normal((n, N, N))
        # (G + G*)/2 has standard normal diagonal and off-diagonal parts of variance 1/2
        m = 0.5 * (g + np.conj(np.swapaxes(g, 1, 2)))
        m = m + np.diag(a)
        return np.linalg.eigvalsh(m)

    return _run(draw, count, seed, threads)


def sample_lue(N: int, nu: int, count: int, seed: int, threads: int = 1) -> np.ndarray:
    """Eigenvalues of G G* with G an N×(N+ν) complex Gaussian matrix.

    Entry components have variance 1/2, so the law is ∝ Δ(x)² ∏ x^ν e^{−x}.
    """
    if int(nu) != nu or nu < 0:
        raise ValueError("sample_lue needs an integer nu >= 0")
    nu = int(nu)

    def draw(rng, n):
        shape = (n, N, N + nu)
        g = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)
        w = g @ np.conj(np.swapaxes(g, 1, 2))
        return np.clip(np.linalg.eigvalsh(w), 0.0, None)

    return _run(draw, count, seed, threads)


def kernel_cdf(diagonal: Callable[[float], float], grid: Sequence[float], N: int,
               threads: int = 1) -> np.ndarray:
    """Cumulative trapezoid of K(x, x)/N on the grid, starting at 0."""
    grid = np.asarray(grid, dtype=float)
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        dens = np.array(list(pool.map(lambda x: float(np.real(diagonal(float(x)))), grid))) / N
    steps = 0.5 * (dens[1:] + dens[:-1]) * np.diff(grid)
    cdf = np.concatenate([[0.0], np.cumsum(steps)])
    if np.any(np.diff(cdf) < -1e-12):
        raise GridTooCoarse("kernel CDF decreases on the grid; refine it or check the kernel")
    return cdf


def empirical_vs_kernel(samples, diagonal: Callable[[float], float], grid: Sequence[float],
                        tolerance: float = 0.02, threads: int = 1) -> VerificationReport:
    """Sup gap between the empirical eigenvalue CDF and the CDF of K(x, x)/N.

    Mass of the kernel density outside the grid is counted at the grid ends,
    so the grid should cover the bulk of the spectrum.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise ValueError("samples must be nonempty")
    N = samples.shape[1] if samples.ndim == 2 else 1
    grid = np.asarray(grid, dtype=float)
    cdf = kernel_cdf(diagonal, grid, N, threads)
    flat = np.sort(samples.ravel())
    emp = np.searchsorted(flat, grid, side="right") / flat.size
    # the kernel CDF starts at 0 at grid[0]; shift by the empirical mass below it
    gap = float(np.max(np.abs(emp - emp[0] - cdf)))
    return VerificationReport.make("empirical_vs_kernel", gap, tolerance,
                                   f"{flat.size} eigenvalues, kernel mass {cdf[-1]:.6f}")


def write_samples_csv(samples, path) -> None:
    """CSV with columns draw_index, eigenvalue_rank, value; written atomically."""
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    folder = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=folder, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            out = csv.writer(fh)
            out.writerow(["draw_index", "eigenvalue_rank", "value"])
            for i, row in enumerate(samples):
                for k, v in enumerate(row):
                    out.writerow([i, k, f"{v:.17g}"])
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise
