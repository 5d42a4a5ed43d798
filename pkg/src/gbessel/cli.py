"""Command-line front end.

    gbessel gap single --a 1.0 --nu 0.5 --tau 0.0
    gbessel gap multi --ends 0.5,1.2
    gbessel gap multi --a 0.8,1.1 --times 0.25,0.5
    gbessel verify identity|jmu|lax|convolution|kernels
    gbessel scan --a 0.1:2.0:40

Output is CSV with a ``#`` header block echoing the full configuration.
Exit codes: 0 success, 1 tolerance failure in verify mode, 2 invalid config.
"""

import argparse
import dataclasses
import itertools
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields

import numpy as np

from . import __version__
from .contour import GeometryError
from .iiks import (IIKSResolution, build_multi_interval, build_multitime,
                   build_single_interval, det_identity, gap_probability)
from .kernels import (KernelGrids, ProcessParams, chapman_kolmogorov_check,
                      measure_conventions, normalization_check, transition_density,
                      transition_density_contour)

WORKERS_ENV = "GBESSEL_WORKERS"

# constants relating the kernel displays, as measured (see measure_conventions)
CONVENTIONS = {
    "kappa_single": -4.0,
    "kappa_transpose": 1.0,
    "kappa_P": 4.0,
    "gamma_expansion": "I + G1/lambda + G2/lambda^2 + ...",
    "multi_interval_T0": "sum(theta_j)/(2N+1)",
    "single_phase": "-theta_a sigma3/2",
    "delta_shift": "4*Delta_ji",
}

MODES = ("gap-single", "gap-multi", "verify-identity", "verify-jmu", "verify-lax",
         "verify-convolution", "verify-kernels", "scan")


class ConfigError(ValueError):
    """Invalid run configuration (exit code 2)."""


@dataclass
class RunConfig:
    mode: str = "gap-single"
    a: tuple = (1.0,)
    ends: tuple = ()
    nu: float = 0.5
    tau: float = 0.0
    times: tuple = (0.0,)
    normalization: str = "probability"
    order: int = 24
    refine: int = 1
    tail: float = 40.0
    loop_V: float = 10.0
    loop_panels: int = 10
    m: int = 40
    tol: float = -1.0
    suite: str = "default"
    scan_param: str = "a"
    scan_range: str = "0.1:2.0:40"
    self_check: bool = True
    output: str = "-"
    plot: bool = False

    # -- (de)serialization -------------------------------------------------
    def to_lines(self):
        out = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = ",".join(repr(float(x)) for x in v)
            elif isinstance(v, float):
                v = repr(v)
            out.append(f"{f.name} = {v}")
        return out

    @classmethod
    def from_lines(cls, lines, base=None):
        cfg = dataclasses.replace(base) if base is not None else cls()
        for raw in lines:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"expected 'key = value', got {raw.strip()!r}")
            key, val = (s.strip() for s in line.split("=", 1))
            cfg = cfg.with_value(key, val)
        return cfg

    def with_value(self, key, val):
        types = {f.name: f.type for f in fields(self)}
        if key not in types:
            raise ConfigError(f"unknown key {key!r}")
        try:
            v = _coerce(types[key], val)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {val!r} ({exc})") from None
        return dataclasses.replace(self, **{key: v})

    # -- derived objects ---------------------------------------------------
    def resolution(self):
        return IIKSResolution(order=self.order, refine=self.refine, tail=self.tail,
                              loop_V=self.loop_V, loop_panels=self.loop_panels)

    def validate(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {', '.join(MODES)}")
        if self.normalization not in ("printed", "probability"):
            raise ConfigError("normalization must be 'printed' or 'probability'")
        if self.order < 2 or self.refine < 1 or self.m < 2 or self.loop_panels < 1:
            raise ConfigError("resolutions must be positive")
        if self.mode == "gap-multi" and len(self.times) < 2 and not self.ends:
            raise ConfigError("gap multi needs ends (union of intervals) or several times")
        if self.mode == "gap-multi" and len(self.times) >= 2 and len(self.a) != len(self.times):
            raise ConfigError("one endpoint a per time")
        if self.mode == "scan":
            parse_range(self.scan_range)
            if self.scan_param not in ("a", "nu", "tau"):
                raise ConfigError("scan_param must be a, nu or tau")
        try:
            self.process_params()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        return self

    def process_params(self, **over):
        nu = over.get("nu", self.nu)
        tau = over.get("tau", self.tau)
        a = over.get("a", self.a)
        if len(self.times) >= 2 and self.mode in ("gap-multi",):
            ivs = tuple(((0.0, float(x)),) for x in a)
            return ProcessParams(nu=nu, tau=tau, times=tuple(self.times), intervals=ivs)
        if self.mode == "gap-multi" and self.ends:
            e = list(self.ends)
            return ProcessParams(nu=nu, tau=tau,
                                 intervals=(tuple(zip(e[0::2], e[1::2])),))
        return ProcessParams(nu=nu, tau=tau, intervals=(((0.0, float(a[0])),),))


def _coerce(tp, val):
    if tp in ("tuple", tuple):
        return tuple(float(x) for x in val.split(",") if x.strip()) if val.strip() else ()
    if tp in ("bool", bool):
        if val.lower() in ("1", "true", "yes", "on"):
            return True
        if val.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError("expected a boolean")
    if tp in ("int", int):
        return int(val)
    if tp in ("float", float):
        return float(val)
    return val


def parse_range(text):
    """'lo:hi:n' -> n evenly spaced values including both ends."""
    try:
        lo, hi, n = text.split(":")
        lo, hi, n = float(lo), float(hi), int(n)
    except ValueError:
        raise ConfigError(f"range must be lo:hi:n, got {text!r}") from None
    if n < 1:
        raise ConfigError("range needs at least one point")
    return list(np.linspace(lo, hi, n)) if n > 1 else [lo]


def workers():
    """Worker count from the environment, defaulting to the available CPUs."""
    v = os.environ.get(WORKERS_ENV)
    if v is None:
        return max(1, len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity")
                   else (os.cpu_count() or 1))
    try:
        n = int(v)
    except ValueError:
        raise ConfigError(f"{WORKERS_ENV} must be an integer") from None
    if n < 1:
        raise ConfigError(f"{WORKERS_ENV} must be positive")
    return n


def pmap(fn, items):
    """Map in a process pool; results come back in input order."""
    items = list(items)
    n = min(workers(), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))


# ----------------------------------------------------------------------------
# tasks (module level so they pickle)


def _fmt(v):
    if isinstance(v, (tuple, list)):
        return ";".join(_fmt(x) for x in v)
    if isinstance(v, complex):
        if v.imag == 0:
            return repr(v.real)
        return f"{v.real!r}{'+' if v.imag >= 0 else '-'}{abs(v.imag)!r}j"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _gap_task(args):
    cfg, over = args
    p = cfg.process_params(**over)
    d, ld, est = gap_probability(p, cfg.resolution(), cfg.self_check)
    if len(p.times) >= 2:
        a = tuple(iv[0][1] for iv in p.intervals)
    else:
        a = tuple(np.ravel(p.intervals[0]).tolist()) if cfg.mode == "gap-multi" else p.intervals[0][0][1]
    return [a, p.nu, p.tau, tuple(p.times), ld.real, d.real, est]


def _identity_task(case):
    name, config, p, res, m, norm, tol = case
    r = det_identity(config, p, res, m, normalization=norm)
    return [config, name, r.logdet_scalar.real, r.logdet_iiks.real, r.dlog, tol]


def _jmu_task(case):
    from .rhp import isomonodromy_check
    config, params, which, tol, res, variant = case
    val, fd, r = isomonodromy_check(config, params, which, res=res, variant=variant)
    return [config, _which_name(which), val, fd, r, tol, variant]


def _which_name(w):
    return w if isinstance(w, str) else f"{w[0]}{w[1]}"


# ----------------------------------------------------------------------------
# runners; each returns (columns, rows, failures)


def run_gap(cfg):
    return ["a", "nu", "tau", "times", "logdet", "det", "self_convergence_estimate"], \
        pmap(_gap_task, [(cfg, {})]), []


def run_scan(cfg):
    vals = parse_range(cfg.scan_range)
    over = [{"a": (v,)} if cfg.scan_param == "a" else {cfg.scan_param: v} for v in vals]
    rows = pmap(_gap_task, [(cfg, o) for o in over])
    return ["a", "nu", "tau", "times", "logdet", "det", "self_convergence_estimate"], rows, []


def identity_cases(cfg):
    res = cfg.resolution()
    tol = cfg.tol if cfg.tol > 0 else None
    cases = []
    if cfg.suite in ("default", "full"):
        for nu, tau, a in itertools.product((0.0, 0.5, 1.0), (-1.0, 0.0, 1.0), (0.5, 1.0, 2.0)):
            p = ProcessParams(nu=nu, tau=tau, intervals=(((0.0, a),),))
            cases.append((f"nu={nu} tau={tau} a={a}", "single", p, res, cfg.m, "printed", tol or 1e-4))
        p = ProcessParams(nu=0.5, tau=0.3, intervals=(((0.5, 1.2),),))
        cases.append(("I=[0.5,1.2]", "multi_interval", p, res, cfg.m, "printed", tol or 1e-4))
        p = ProcessParams(nu=0.5, tau=0.2, times=(0.25, 0.5), intervals=(((0.0, 0.8),), ((0.0, 1.1),)))
        for norm in ("printed", "probability") if cfg.suite == "full" else (cfg.normalization,):
            cases.append((f"n=2 a=(0.8,1.1) {norm}", "multitime", p, res, 30, norm, tol or 1e-3))
    elif cfg.suite == "quick":
        p = ProcessParams(nu=cfg.nu, tau=cfg.tau, intervals=(((0.0, cfg.a[0]),),))
        cases.append((f"a={cfg.a[0]}", "single", p, res, cfg.m, "printed", tol or 1e-4))
    else:
        raise ConfigError(f"unknown suite {cfg.suite!r}")
    return cases


def run_identity(cfg):
    rows = pmap(_identity_task, identity_cases(cfg))
    fails = [f"identity {r[1]}: {r[4]:.3e} > {r[5]:.1e}" for r in rows if not r[4] <= r[5]]
    return ["config", "case", "logdet_scalar", "logdet_iiks", "residual", "tolerance"], rows, fails


def jmu_cases(cfg):
    res = cfg.resolution()
    t = cfg.tol if cfg.tol > 0 else None
    single = {"a": cfg.a[0], "nu": cfg.nu, "tau": cfg.tau}
    cases = [("single", single, "a", t or 1e-5), ("single", single, "tau", t or 1e-4)]
    if cfg.suite in ("default", "full"):
        multi = {"ends": (0.5, 1.2), "nu": 0.5, "tau": 0.3}
        cases += [("multi_interval", multi, ("a", 1), t or 1e-4),
                  ("multi_interval", multi, ("a", 2), t or 1e-4),
                  ("multi_interval", multi, "tau", t or 1e-4)]
    if cfg.suite == "full":
        mt = {"a": (0.8, 1.1), "times": (0.25, 0.5), "nu": 0.5, "tau": 0.2,
              "normalization": cfg.normalization}
        cases += [("multitime", mt, w, t or 5e-3)
                  for w in (("a", 1), ("a", 2), "tau", ("tau", 1), ("tau", 2))]
    if cfg.suite not in ("default", "full", "quick"):
        raise ConfigError(f"unknown suite {cfg.suite!r}")
    return [c + (res, v) for c in cases for v in ("verified", "printed")]


def run_jmu(cfg):
    rows = pmap(_jmu_task, jmu_cases(cfg))
    fails = [f"jmu {r[0]} {r[1]}: {r[4]:.3e} > {r[5]:.1e}" for r in rows
             if r[6] == "verified" and not r[4] <= r[5]]
    out = [[r[0], r[1] if r[6] == "verified" else r[1] + "[printed]", r[2], r[3], r[4]] for r in rows]
    return ["config", "parameter", "residue_value", "fd_value", "residual"], out, fails


def run_lax(cfg):
    from .lax import LaxNumerics, lax_residual
    tol = cfg.tol if cfg.tol > 0 else 1e-5
    num = LaxNumerics(cfg.a[0], cfg.nu, cfg.tau, cfg.resolution())
    rows, _ = lax_residual(cfg.a[0], cfg.nu, cfg.tau, num=num)
    lim = {"A": tol, "U": tol, "V": tol, "U_linear": 1e-6, "V_inverse": 1e-6}
    fails = [f"lax {w} at {lam}: {r:.3e}" for lam, w, r in rows if not r <= lim[w]]
    return ["lambda", "which", "residual"], [["" if l is None else l, w, r] for l, w, r in rows], fails


CONV_SAMPLES = ((0, 1, 1, 0.7, 1.3), (0, 1, 0, 1.1, 0.6), (0, 2, 2, 0.5, 0.9),
                (1, 2, 2, 1.4, 0.8), (0, 2, 1, 0.9, 1.2))


def _conv_task(c):
    from .fredholm import convolution_check
    i, j, k, x, y, times, nu, tau = c
    p = ProcessParams(nu=nu, tau=tau, times=times)
    return [i + 1, j + 1, k + 1, x, y, convolution_check(i, j, k, x, y, p)]


def run_convolution(cfg):
    tol = cfg.tol if cfg.tol > 0 else 1e-5
    times = tuple(cfg.times) if len(cfg.times) >= 3 else (0.2, 0.5, 0.9)
    rows = pmap(_conv_task, [s + (times, cfg.nu, cfg.tau) for s in CONV_SAMPLES])
    fails = [f"convolution {r[:3]}: {r[5]:.3e}" for r in rows if not r[5] <= tol]
    return ["i", "j", "k", "x", "y", "residual"], rows, fails


def run_kernels(cfg):
    rows = []
    nu = cfg.nu
    for x, y, d in ((0.7, 1.3, 0.25), (2.0, 0.4, 0.1), (0.05, 3.0, 0.5)):
        v = abs(transition_density_contour(x, y, d, nu) - transition_density(x, y, d, nu)) \
            / abs(transition_density(x, y, d, nu))
        rows.append(["density_dual", f"x={x} y={y} delta={d}", float(v), 1e-10])
    for x, y, d1, d2 in ((0.7, 1.3, 0.2, 0.3), (1.5, 0.5, 0.1, 0.4)):
        rows.append(["chapman_kolmogorov", f"x={x} y={y} d=({d1},{d2})",
                     float(chapman_kolmogorov_check(x, y, d1, d2, nu)), 1e-6])
    if nu >= 0:
        for x, d in ((0.0, 0.3), (1.0, 0.25), (3.0, 1.0)):
            rows.append(["normalization", f"x={x} delta={d}",
                         float(normalization_check(x, d, nu)), 1e-6])
    conv = measure_conventions(nu, cfg.tau)
    rows.append(["kappa_single_spread", f"kappa={conv.kappa_single:.12g}",
                 conv.kappa_single_spread, 1e-6])
    rows.append(["kappa_transpose_spread", f"kappa={conv.kappa_transpose:.12g}",
                 conv.kappa_transpose_spread, 1e-6])
    fails = [f"kernels {r[0]} {r[1]}: {r[2]:.3e}" for r in rows if not r[2] <= r[3]]
    return ["check", "case", "residual", "tolerance"], rows, fails


RUNNERS = {"gap-single": run_gap, "gap-multi": run_gap, "scan": run_scan,
           "verify-identity": run_identity, "verify-jmu": run_jmu, "verify-lax": run_lax,
           "verify-convolution": run_convolution, "verify-kernels": run_kernels}


# ----------------------------------------------------------------------------
# output


def geometry_lines(cfg):
    res = cfg.resolution()
    p = cfg.process_params()
    try:
        if cfg.mode == "gap-multi" and len(cfg.times) >= 2:
            data = build_multitime(cfg.a, cfg.times, cfg.nu, cfg.tau, res, cfg.normalization)
        elif cfg.mode == "gap-multi":
            data = build_multi_interval(np.ravel(p.intervals[0]), cfg.nu, cfg.tau, res)
        else:
            data = build_single_interval(cfg.a[0], cfg.nu, cfg.tau, res)
    except (GeometryError, ValueError) as exc:
        return [f"unavailable ({exc})"]
    return data.geometry_lines()


def header(cfg):
    lines = [f"gbessel {__version__}"]
    lines += ["config: " + s for s in cfg.to_lines()]
    lines += ["geometry: " + s for s in geometry_lines(cfg)]
    lines += [f"conventions: {k} = {v}" for k, v in CONVENTIONS.items()]
    g = KernelGrids()
    lines += [f"resolution: kernel_{f.name} = {getattr(g, f.name)!r}" for f in fields(g)]
    lines += [f"resolution: scalar_m = {cfg.m}", f"resolution: workers_env = {WORKERS_ENV}"]
    return ["# " + s for s in lines]


def config_from_header(text):
    """Recover the RunConfig echoed in a CSV header."""
    lines = [ln[len("# config: "):] for ln in text.splitlines() if ln.startswith("# config: ")]
    return RunConfig.from_lines(lines)


def write_csv(cfg, columns, rows, stream):
    for ln in header(cfg):
        stream.write(ln + "\n")
    stream.write(",".join(columns) + "\n")
    for r in rows:
        stream.write(",".join(_fmt(v) for v in r) + "\n")


def write_plot(cfg, columns, rows):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    path = os.path.splitext(cfg.output)[0] + ".png"
    fig, ax = plt.subplots(figsize=(5, 3.5))
    if cfg.mode in ("scan", "gap-single", "gap-multi"):
        col = {"a": 0, "nu": 1, "tau": 2}[cfg.scan_param if cfg.mode == "scan" else "a"]
        xs = [r[col] if not isinstance(r[col], tuple) else r[col][-1] for r in rows]
        ax.plot(xs, [r[5] for r in rows], "o-", ms=3)
        ax.set_xlabel(cfg.scan_param if cfg.mode == "scan" else "a")
        ax.set_ylabel("gap probability")
    else:
        res = [r[columns.index("residual")] for r in rows]
        ax.semilogy(range(len(res)), np.maximum(np.abs(res), 1e-17), "o")
        ax.set_xlabel("case")
        ax.set_ylabel("residual")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def run(cfg):
    """Execute a configuration; returns the exit code."""
    cfg.validate()
    columns, rows, fails = RUNNERS[cfg.mode](cfg)
    if cfg.output == "-":
        write_csv(cfg, columns, rows, sys.stdout)
    else:
        with open(cfg.output, "w", newline="") as fh:
            write_csv(cfg, columns, rows, fh)
        if cfg.plot:
            write_plot(cfg, columns, rows)
    for f in fails:
        print("FAIL " + f, file=sys.stderr)
    return 1 if fails else 0


# ----------------------------------------------------------------------------
# argument parsing


def build_parser():
    ap = argparse.ArgumentParser(prog="gbessel", description="Generalized Bessel gap probabilities")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="file of 'key = value' lines")
        p.add_argument("--output", "-o", help="CSV path (default stdout)")
        p.add_argument("--plot", action="store_true", help="also write a PNG next to the CSV")
        for key in ("a", "nu", "tau", "times", "ends", "normalization", "order", "refine",
                    "tail", "m", "tol", "suite"):
            p.add_argument(f"--{key}")
        p.add_argument("--no-self-check", action="store_true")

    gap = sub.add_parser("gap", help="gap probability")
    gap.add_argument("kind", choices=["single", "multi"])
    common(gap)
    ver = sub.add_parser("verify", help="verification suites")
    ver.add_argument("kind", choices=["identity", "jmu", "lax", "convolution", "kernels"])
    common(ver)
    scan = sub.add_parser("scan", help="scan one parameter over lo:hi:n")
    common(scan)
    return ap


def config_from_args(ns):
    mode = {"gap": f"gap-{getattr(ns, 'kind', '')}", "verify": f"verify-{getattr(ns, 'kind', '')}",
            "scan": "scan"}[ns.command]
    cfg = RunConfig(mode=mode)
    if ns.config:
        try:
            with open(ns.config) as fh:
                cfg = RunConfig.from_lines(fh.read().splitlines(), cfg)
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        cfg = dataclasses.replace(cfg, mode=mode)
    for key in ("a", "nu", "tau", "times", "ends", "normalization", "order", "refine",
                "tail", "m", "tol", "suite", "output"):
        val = getattr(ns, key, None)
        if val is None:
            continue
        if mode == "scan" and key in ("a", "nu", "tau") and ":" in val:
            cfg = dataclasses.replace(cfg, scan_param=key, scan_range=val)
            continue
        cfg = cfg.with_value(key, val)
    if ns.plot:
        cfg = dataclasses.replace(cfg, plot=True)
    if ns.no_self_check:
        cfg = dataclasses.replace(cfg, self_check=False)
    if cfg.plot and cfg.output == "-":
        raise ConfigError("--plot needs --output")
    return cfg


def _join_negative_values(argv):
    """['--tau', '-0.5:0.5:4'] -> ['--tau=-0.5:0.5:4'] so argparse accepts negative ranges."""
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        nxt = argv[i + 1] if i + 1 < len(argv) else ""
        if (tok.startswith("--") and "=" not in tok and len(nxt) > 1 and nxt[0] == "-"
                and (nxt[1].isdigit() or nxt[1] == ".")):
            out.append(f"{tok}={nxt}")
            i += 2
        else:
            out.append(tok)
            i += 1
    return out


def main(argv=None):
    ap = build_parser()
    argv = _join_negative_values(sys.argv[1:] if argv is None else list(argv))
    try:
        ns = ap.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        cfg = config_from_args(ns)
        return run(cfg)
    except (ConfigError, GeometryError) as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return 2
    except ImportError as exc:
        print(f"invalid configuration: plotting needs the [plot] extra ({exc})", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
