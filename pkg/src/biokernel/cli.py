"""Command-line front end: biokernel {kernel,density,verify,limit,sample}.

Every command reads a JSON config (see README for the schema), writes its
data files atomically and renders a PNG figure next to each CSV.  Exit codes:
0 success, 1 numeric failure, 2 config error, 3 verification failure.
"""
import argparse
import csv
import dataclasses
import functools
import io
import json
import math
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional

import numpy as np

from .errors import BiokernelError, ConfigError
from .kernels import (ContourPlan, EnsembleSpec, default_contour_plan, kernel_eval,
                      mb_kernel_eval, multiplicative_kernel_eval, plue_kernel_eval)
from .quadrature import ClosedCircleContour, QuadratureSettings
from .wcatalog import w_from_json

EXIT_OK, EXIT_NUMERIC, EXIT_CONFIG, EXIT_VERIFY = 0, 1, 2, 3


# ---------------------------------------------------------------- config parsing

def load_config(path: Optional[str]) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from exc
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return obj


def _get(cfg: dict, key: str, kind, where: str, default=None, required=False):
    if key not in cfg:
        if required:
            raise ConfigError(f"{where}: missing key '{key}'")
        return default
    val = cfg[key]
    if kind is float and isinstance(val, int) and not isinstance(val, bool):
        val = float(val)
    if not isinstance(val, kind) or isinstance(val, bool) and kind is not bool:
        name = kind.__name__ if isinstance(kind, type) else "/".join(k.__name__ for k in kind)
        raise ConfigError(f"{where}.{key}: expected {name}, got {type(val).__name__}")
    return val


def parse_settings(cfg: dict) -> QuadratureSettings:
    s = _get(cfg, "settings", dict, "config", {})
    try:
        return QuadratureSettings(
            rel_tol=_get(s, "rel_tol", float, "settings", 1e-11),
            abs_tol=_get(s, "abs_tol", float, "settings", 1e-13),
            max_nodes=_get(s, "max_nodes", int, "settings", 1 << 15))
    except ValueError as exc:
        raise ConfigError(f"settings: {exc}") from exc


def parse_axis(spec, where: str) -> np.ndarray:
    """A list of numbers or {"start", "stop", "num"}."""
    if isinstance(spec, list):
        if not spec or not all(isinstance(v, (int, float)) for v in spec):
            raise ConfigError(f"{where}: expected a nonempty list of numbers")
        return np.array(spec, dtype=float)
    if isinstance(spec, dict):
        start = _get(spec, "start", float, where, required=True)
        stop = _get(spec, "stop", float, where, required=True)
        num = _get(spec, "num", int, where, required=True)
        if num < 1:
            raise ConfigError(f"{where}.num: must be positive")
        return np.linspace(start, stop, num)
    raise ConfigError(f"{where}: expected a list or an object with start/stop/num")


def parse_grid_flag(text: str) -> np.ndarray:
    try:
        start, stop, num = text.split(":")
        return np.linspace(float(start), float(stop), int(num))
    except ValueError as exc:
        raise ConfigError(f"--grid: expected start:stop:num, got {text!r}") from exc


def parse_plan(cfg: dict, spec: EnsembleSpec) -> ContourPlan:
    p = _get(cfg, "plan", dict, "config")
    if p is None:
        return default_contour_plan(spec)
    center = p.get("center", 0.0)
    if isinstance(center, list) and len(center) == 2:
        center = complex(center[0], center[1])
    elif not isinstance(center, (int, float)):
        raise ConfigError("plan.center: expected a number or [re, im]")
    radius = _get(p, "radius", float, "plan", required=True)
    c = _get(p, "c", float, "plan", required=True)
    nodes = _get(p, "nodes", int, "plan", 128)
    sigma = ClosedCircleContour(complex(center), radius, nodes)
    return ContourPlan(sigma, c, ContourPlan.crossing_alpha(sigma, c))


def _params(cfg: dict) -> dict:
    return _get(cfg, "params", dict, "config", required=True)


KernelFn = Callable[[float, float], complex]


KERNEL_VARIANTS = ("additive", "multiplicative", "plue", "mb", "pbessel", "mb_limit")


def build_kernel(cfg: dict):
    """(kernel function returning KernelValue, N or None, label) for the configured variant."""
    variant = _get(cfg, "variant", str, "config", "additive")
    if variant not in KERNEL_VARIANTS:
        raise ConfigError(f"variant: unknown kernel variant {variant!r} "
                          f"(one of {', '.join(KERNEL_VARIANTS)})")
    settings = parse_settings(cfg)
    if variant in ("additive", "multiplicative"):
        if "ensemble" not in cfg:
            raise ConfigError("config: missing key 'ensemble'")
        spec = EnsembleSpec.from_json(cfg["ensemble"])
        plan = parse_plan(cfg, spec)
        if variant == "additive":
            return (lambda x, xp: kernel_eval(spec, x, xp, plan, settings)), spec.N, variant
        return ((lambda y, yp: multiplicative_kernel_eval(spec, y, yp, plan, settings)),
                spec.N, variant)
    p = _params(cfg)
    if "W" not in p:
        raise ConfigError("params: missing key 'W'")
    W = w_from_json(p["W"])
    if variant == "plue":
        nu = _get(p, "nu", float, "params", required=True)
        N = _get(p, "N", int, "params", required=True)
        tau = _get(p, "tau", float, "params", required=True)
        return (lambda x, xp: plue_kernel_eval(nu, N, W, tau, x, xp, settings=settings),
                N, variant)
    if variant == "mb":
        theta = _get(p, "theta", float, "params", required=True)
        eta = _get(p, "eta", float, "params", 0.0)
        N = _get(p, "N", int, "params", required=True)
        return (lambda y, yp: mb_kernel_eval(theta, eta, N, W, y, yp, settings=settings),
                N, variant)
    if variant == "pbessel":
        from .limits import pbessel_eval
        nu = _get(p, "nu", float, "params", required=True)
        r = _get(p, "r", float, "params", required=True)
        return (lambda x, xp: pbessel_eval(nu, r, W, x, xp, settings=settings),
                None, variant)
    if variant == "mb_limit":
        from .limits import mb_limit_eval
        theta = _get(p, "theta", float, "params", required=True)
        eta = _get(p, "eta", float, "params", 0.0)
        return (lambda y, yp: mb_limit_eval(theta, eta, W, y, yp, settings=settings),
                None, variant)
    raise ConfigError(f"config.variant: unknown variant {variant!r}")


# ---------------------------------------------------------------- output helpers

def _fmt(v: float) -> str:
    return f"{v:.17g}"


def atomic_write(path: str, text: str) -> None:
    folder = os.path.dirname(os.path.abspath(path))
    os.makedirs(folder, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=folder, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path: str, header: List[str], rows) -> None:
    buf = io.StringIO()
    out = csv.writer(buf, lineterminator="\n")
    out.writerow(header)
    for row in rows:
        out.writerow([_fmt(v) if isinstance(v, float) else v for v in row])
    atomic_write(path, buf.getvalue())


def _png(path: str) -> str:
    return os.path.splitext(path)[0] + ".png"


def thread_count(flag: Optional[int]) -> int:
    if flag is not None:
        return max(1, flag)
    env = os.environ.get("BIOKERNEL_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigError(f"BIOKERNEL_THREADS: not an integer: {env!r}") from exc
    return os.cpu_count() or 1


def _sweep(fn, pairs, threads):
    # pool.map keeps input order, so output order never depends on threads
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda p: fn(*p), pairs))


# ---------------------------------------------------------------- commands

def cmd_kernel(args) -> int:
    cfg = load_config(args.config)
    fn, _, label = build_kernel(cfg)
    grid = _get(cfg, "grid", dict, "config", {})
    if args.grid:
        xs = parse_grid_flag(args.grid)
    elif "x" in grid:
        xs = parse_axis(grid["x"], "grid.x")
    else:
        raise ConfigError("grid: missing key 'x' (or pass --grid)")
    xps = parse_axis(grid["xp"], "grid.xp") if "xp" in grid else xs
    pairs = [(float(x), float(xp)) for x in xs for xp in xps]
    res = _sweep(fn, pairs, thread_count(args.threads))
    vals = [complex(r.value) for r in res]
    write_csv(args.out, ["x", "x_prime", "re", "im", "err_est"],
              [(x, xp, v.real, v.imag, r.error_estimate)
               for (x, xp), v, r in zip(pairs, vals, res)])
    from .figures import kernel_figure
    kernel_figure(xs, xps, vals, _png(args.out), f"{label} kernel")
    return EXIT_OK


def cmd_density(args) -> int:
    cfg = load_config(args.config)
    fn, N, label = build_kernel(cfg)
    if N is None:
        raise ConfigError("density needs a finite-N variant")
    grid = _get(cfg, "grid", dict, "config", {})
    if args.grid:
        xs = parse_grid_flag(args.grid)
    elif "x" in grid:
        xs = parse_axis(grid["x"], "grid.x")
    else:
        raise ConfigError("grid: missing key 'x' (or pass --grid)")
    diag = np.array([complex(r.value) for r in
                     _sweep(fn, [(float(x), float(x)) for x in xs], thread_count(args.threads))])
    k = diag.real
    write_csv(args.out, ["x", "kernel_diagonal", "density"],
              [(float(x), float(v), float(v / N)) for x, v in zip(xs, k)])
    from .figures import density_figure
    density_figure(xs, k / N, _png(args.out), f"{label} one-point density, N={N}")
    return EXIT_OK


def _suite_from_config(cfg: dict):
    from . import verify as V
    if "ensemble" not in cfg:
        raise ConfigError("config: missing key 'ensemble'")
    spec = EnsembleSpec.from_json(cfg["ensemble"])
    settings = parse_settings(cfg)
    checks = _get(cfg, "checks", list, "config", required=True)
    out = []
    for i, chk in enumerate(checks):
        where = f"checks[{i}]"
        if not isinstance(chk, dict):
            raise ConfigError(f"{where}: expected an object")
        name = _get(chk, "check", str, where, required=True)
        tol = _get(chk, "tolerance", float, where)
        kw = {} if tol is None else {"tolerance": tol}
        mult = _get(chk, "multiplicative", bool, where, False)
        g = chk.get("grid")
        grid = None
        if g is not None:
            if not isinstance(g, dict) or "kind" not in g:
                raise ConfigError(f"{where}.grid: expected an object with key 'kind'")
            kind = g["kind"]
            if kind == "line":
                grid = V.QuadGrid.line(_get(g, "lo", float, f"{where}.grid", required=True),
                                       _get(g, "hi", float, f"{where}.grid", required=True),
                                       _get(g, "h", float, f"{where}.grid", required=True))
            elif kind == "interval":
                grid = V.QuadGrid.interval(_get(g, "lo", float, f"{where}.grid", required=True),
                                           _get(g, "hi", float, f"{where}.grid", required=True),
                                           _get(g, "h", float, f"{where}.grid", 0.05),
                                           _get(g, "smax", float, f"{where}.grid", 3.2))
            else:
                raise ConfigError(f"{where}.grid.kind: unknown kind {kind!r}")
        needs_grid = name in ("trace", "reproducing", "biorthogonality", "fourier_roundtrip")
        if needs_grid and grid is None:
            raise ConfigError(f"{where}: missing key 'grid'")
        if name == "trace":
            fn = (lambda grid=grid, kw=kw, mult=mult:
                  V.check_trace(spec, grid, multiplicative=mult, settings=settings, **kw))
        elif name == "reproducing":
            pts = _get(chk, "points", list, where, required=True)
            fn = (lambda grid=grid, kw=kw, mult=mult, pts=pts:
                  V.check_reproducing(spec, grid, [tuple(p) for p in pts], multiplicative=mult,
                                      settings=settings, **kw))
        elif name == "biorthogonality":
            fn = lambda grid=grid, kw=kw: V.check_biorthogonality(spec, grid, settings=settings, **kw)
        elif name == "partition":
            box = _get(chk, "box", float, where, required=True)
            h = _get(chk, "h", float, where, 0.2)
            fn = lambda box=box, h=h, kw=kw: V.check_partition(spec, box, h, settings=settings, **kw)
        elif name == "density_vs_kernel":
            pts = _get(chk, "points", list, where, required=True)
            fn = lambda pts=pts, kw=kw: V.check_density_vs_kernel(spec, pts, settings=settings, **kw)
        elif name == "fourier_roundtrip":
            zs = _get(chk, "z", list, where, required=True)
            fn = lambda grid=grid, zs=zs, kw=kw: V.check_fourier_roundtrip(spec.W, zs, grid, **kw)
        else:
            raise ConfigError(f"{where}.check: unknown check {name!r}")
        out.append((f"{name} #{i}", fn))
    return out


def cmd_verify(args) -> int:
    from . import verify as V
    if args.suite:
        if args.suite not in V.SUITES:
            raise ConfigError(f"--suite: unknown suite {args.suite!r} "
                              f"(shipped: {', '.join(sorted(V.SUITES))})")
        suite = V.SUITES[args.suite]()
        title = f"suite {args.suite}"
    else:
        if args.config is None:
            raise ConfigError("verify needs --suite or a config with 'checks'")
        suite = _suite_from_config(load_config(args.config))
        title = os.path.basename(args.config)
    threads = thread_count(args.threads)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        reports = list(pool.map(lambda item: item[1](), suite))
    reports = [dataclasses.replace(r, check_name=name) for (name, _), r in zip(suite, reports)]
    text = "".join(r.to_json_line() + "\n" for r in reports)
    if args.out:
        atomic_write(args.out, text)
        from .figures import verify_figure
        verify_figure(reports, _png(args.out), title)
    else:
        sys.stdout.write(text)
    for r in reports:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.check_name}: "
              f"{r.discrepancy:.3g} (tol {r.tolerance:.3g})", file=sys.stderr)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_VERIFY


def cmd_limit(args) -> int:
    from . import verify as V
    cfg = load_config(args.config)
    scan_cfg = _get(cfg, "scan", dict, "config", {})
    kw = {}
    if "N_list" in scan_cfg:
        kw["N_list"] = tuple(int(n) for n in _get(scan_cfg, "N_list", list, "scan"))
    if "grid" in scan_cfg:
        kw["grid"] = tuple(parse_axis(scan_cfg["grid"], "scan.grid"))
    if "final_bound" in scan_cfg:
        kw["final_bound"] = _get(scan_cfg, "final_bound", float, "scan")
    if "W" in scan_cfg:
        kw["W"] = w_from_json(scan_cfg["W"])
    if args.scan == "pbessel":
        for key in ("nu", "r"):
            if key in scan_cfg:
                kw[key] = _get(scan_cfg, key, float, "scan")
        if "prefactor" in scan_cfg:
            kw["prefactor"] = _get(scan_cfg, "prefactor", str, "scan")
            if kw["prefactor"] not in V.PLUE_PREFACTORS:
                raise ConfigError(f"scan.prefactor: must be one of {sorted(V.PLUE_PREFACTORS)}")
        scan = V.plue_limit_scan(**kw)
    elif args.scan == "mb":
        for key in ("theta", "eta"):
            if key in scan_cfg:
                kw[key] = _get(scan_cfg, key, float, "scan")
        scan = V.mb_limit_scan(**kw)
    else:
        raise ConfigError(f"--scan: unknown scan {args.scan!r}")
    from .limits import convergence_scan
    rows = convergence_scan(scan.finite_kernel, scan.limit_kernel, scan.scaling, scan.prefactor,
                            scan.N_list, scan.grid, thread_count(args.threads))
    write_csv(args.out, ["N", "sup_error", "ratio_to_previous"],
              [(r.N, r.sup_error, "" if r.ratio_to_previous is None else r.ratio_to_previous)
               for r in rows])
    from .figures import scan_figure
    scan_figure([r.N for r in rows], [r.sup_error for r in rows], _png(args.out), scan.name)
    errs = [r.sup_error for r in rows]
    ok = all(b < a for a, b in zip(errs, errs[1:])) and errs[-1] < scan.final_bound
    print(f"{'PASS' if ok else 'FAIL'}  {scan.name}: "
          + ", ".join(f"N={r.N} {r.sup_error:.3e}" for r in rows), file=sys.stderr)
    return EXIT_OK if ok else EXIT_VERIFY


def cmd_sample(args) -> int:
    from . import sampler
    from .kernels import kernel_fully_confluent
    cfg = load_config(args.config)
    s = _get(cfg, "sample", dict, "config", required=True)
    model = _get(s, "model", str, "sample", required=True)
    N = _get(s, "N", int, "sample", required=True)
    count = args.count if args.count is not None else _get(s, "count", int, "sample", 100000)
    seed = args.seed if args.seed is not None else _get(s, "seed", int, "sample", 0)
    threads = thread_count(args.threads)
    settings = parse_settings(cfg)
    from .wcatalog import GammaLUEstar, Gaussian
    if model == "gue":
        a = _get(s, "a", list, "sample", [0.0] * N)
        if len(a) != N:
            raise ConfigError(f"sample.a: expected {N} values")
        samples = sampler.sample_gue_source(N, a, count, seed, threads)
        spec = EnsembleSpec.from_points(Gaussian.canonical(1.0), a)
        if len(spec.sources) == 1 and spec.sources[0].b == 0:
            def diag(x):
                return kernel_fully_confluent(spec, x, x, settings=settings).value
        else:
            plan = default_contour_plan(spec)

            def diag(x):
                return kernel_eval(spec, x, x, plan, settings).value
        lo, hi = float(np.min(a)) - 7.0, float(np.max(a)) + 7.0
        grid_default = np.linspace(lo, hi, 281)
    elif model == "lue":
        nu = _get(s, "nu", int, "sample", required=True)
        samples = sampler.sample_lue(N, nu, count, seed, threads)
        # dx = dy/y shifts the exponent: LUE with ν is GammaLUEstar(ν + 1) with sources 0..N−1
        spec = EnsembleSpec.from_points(GammaLUEstar(nu + 1.0), list(range(N)))
        plan = default_contour_plan(spec)

        def diag(y):
            return multiplicative_kernel_eval(spec, y, y, plan, settings).value if y > 0 else 0.0
        grid_default = np.linspace(0.0, 4.0 * N + 2.0 * nu + 20.0, 301)
    else:
        raise ConfigError(f"sample.model: unknown model {model!r} (gue or lue)")
    grid = parse_axis(s["grid"], "sample.grid") if "grid" in s else grid_default
    diag = functools.lru_cache(maxsize=None)(diag)
    tol = _get(s, "tolerance", float, "sample", 0.02)
    sampler.write_samples_csv(samples, args.out)
    report = sampler.empirical_vs_kernel(samples, diag, grid, tol, threads)
    report_path = os.path.splitext(args.out)[0] + "_report.json"
    atomic_write(report_path, report.to_json_line() + "\n")
    kvals = np.array([float(np.real(diag(float(x)))) for x in grid]) / N
    from .figures import density_figure
    density_figure(grid, kvals, _png(args.out), f"{model} N={N}, {count} draws", samples)
    print(f"{'PASS' if report.passed else 'FAIL'}  sup CDF gap {report.discrepancy:.4f} "
          f"(tol {report.tolerance:g})", file=sys.stderr)
    return EXIT_OK if report.passed else EXIT_VERIFY


# ---------------------------------------------------------------- entry point

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="biokernel", description=__doc__.splitlines()[0])
    parser.add_argument("--threads", type=int, default=None,
                        help="worker threads (default: $BIOKERNEL_THREADS or CPU count)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("kernel", help="kernel values on a grid (CSV + PNG)")
    p.add_argument("config")
    p.add_argument("--grid", help="x-axis override start:stop:num")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_kernel)

    p = sub.add_parser("density", help="one-point function K(x, x) and K(x, x)/N")
    p.add_argument("config")
    p.add_argument("--grid", help="x-axis override start:stop:num")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_density)

    p = sub.add_parser("verify", help="run verification checks (JSON lines)")
    p.add_argument("config", nargs="?")
    p.add_argument("--suite", help="shipped suite name: gue or lue")
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("limit", help="convergence scan to a limit kernel")
    p.add_argument("config", nargs="?")
    p.add_argument("--scan", required=True, choices=["pbessel", "mb"])
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_limit)

    p = sub.add_parser("sample", help="Monte Carlo samples and comparison with the kernel")
    p.add_argument("config")
    p.add_argument("--count", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sample)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (BiokernelError, ArithmeticError) as exc:
        print(f"numeric failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        # parameter validation inside the library (bad tau, nu, ...) is a config problem
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
