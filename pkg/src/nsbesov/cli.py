"""Command-line driver: ``nsbesov <command> [flags]``.

Every run writes ``manifest.txt`` (``key=value``: resolved parameters, versions,
wall time, checks and the source of each column) and ``results.csv`` (fixed
columns per command, floats with 17 significant digits) into ``--out``.
``--plot`` adds ``plot_*.svg``. Exit codes: 0 success, 1 numerical tolerance
failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import os
import platform
import sys
import time
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Callable

import numpy as np
import scipy

from . import __version__
from ._kernels import BACKEND
from .bilinear import cross_term_check, default_window, lemma21_decomposition
from .counterexamples import CaseConfig, ExperimentReport, lacunary_schedule, lower_bound_curve, ratio_experiment
from .diagnostics import operator_algebra, partition_of_unity_deviation, path_agreement
from .errors import ConvergenceError, NSBesovError
from .plots import line_plot

COMMANDS = ("verify-identities", "lower-bound", "case-i", "case-ii", "case-iii", "selftest")
IDENTITY_TOL = 1e-8
EXACT_TOL = 1e-12


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration (exit code 2)."""


def _float(text: str) -> float:
    t = str(text).strip().lower()
    if t in ("inf", "infinity", "oo"):
        return math.inf
    try:
        return float(t)
    except ValueError:
        raise ConfigError(f"not a number: {text!r}") from None


def _int(text: str) -> int:
    try:
        return int(str(text).strip())
    except ValueError:
        raise ConfigError(f"not an integer: {text!r}") from None


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(_int(t) for t in str(text).split(",") if t.strip())


def _float_list(text: str) -> tuple[float, ...]:
    return tuple(_float(t) for t in str(text).split(",") if t.strip())


def _bool(text: str) -> bool:
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


# key -> (parser, RunConfig field)
KEYS: dict[str, tuple[Callable, str]] = {
    "p": (_float, "p"),
    "q": (_float, "q"),
    "M": (_float, "M"),
    "N": (_int_list, "Ns"),
    "sigma": (_float, "sigma"),
    "jmin": (_int, "jmin"),
    "jmax": (_int, "jmax"),
    "h": (_float, "h"),
    "K": (_int, "K"),
    "Kb": (_int, "K_b"),
    "tol": (_float, "tol"),
    "out": (str, "out"),
    "plot": (_bool, "plot"),
    "frequencies": (_float_list, "frequencies"),
    "seed": (_int, "seed"),
}


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved parameters of one run."""

    command: str
    p: float = 2.0
    q: float = 2.0
    M: float = 16.0
    Ns: tuple[int, ...] = ()
    sigma: float = 2.0
    jmin: int = -12
    jmax: int = -2
    h: float = 1 / 32
    K: int = 320
    K_b: int = 512
    tol: float | None = None
    out: str = "nsbesov-out"
    plot: bool = False
    frequencies: tuple[float, ...] = (160.0, 176.0, 192.0)
    seed: int = 0

    def validate(self) -> "RunConfig":
        """Check every precondition before any computation starts."""
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if not (1 <= self.p <= math.inf):
            raise ConfigError(f"p must lie in [1, inf], got {self.p}")
        if not (1 <= self.q <= math.inf):
            raise ConfigError(f"q must lie in [1, inf], got {self.q}")
        if self.jmin > self.jmax:
            raise ConfigError(f"empty block range [{self.jmin}, {self.jmax}]")
        if self.K < 8 or self.K % 2 or self.K_b < 8 or self.K_b % 2:
            raise ConfigError("K and Kb must be even integers >= 8")
        if not self.h > 0:
            raise ConfigError("h must be positive")
        if self.tol is not None and not self.tol > 0:
            raise ConfigError("tol must be positive")
        if self.command in ("case-i", "case-ii", "case-iii"):
            self.case_config()
            if self.command == "case-iii":
                for N in self.Ns:
                    lacunary_schedule(N, self.sigma)
        if self.command == "lower-bound" and self.jmax > -2:
            raise ConfigError("lower-bound blocks must satisfy j <= -2")
        if self.command == "verify-identities" and self.M < 10:
            raise ConfigError("verify-identities needs M >= 10")
        return self

    def case_config(self) -> CaseConfig:
        case = {"case-i": "i", "case-ii": "ii", "case-iii": "iii"}[self.command]
        return CaseConfig(case, self.p, self.q, tuple(self.Ns), M=self.M, sigma=self.sigma, jmin=self.jmin,
                          jmax=self.jmax, K_b=self.K_b, window_h=self.h, window_K=self.K, tol=self.tol)


DEFAULTS: dict[str, dict] = {
    "verify-identities": {"jmin": -6, "jmax": 0},
    "lower-bound": {"p": 2.0},
    "case-i": {"p": 2.0, "q": 2.0, "Ns": (4, 16, 64)},
    "case-ii": {"p": 4.0, "q": math.inf, "Ns": (16, 32, 64, 128)},
    "case-iii": {"p": 1.0, "q": math.inf, "Ns": (4, 8, 16)},
    "selftest": {},
}


def read_config_file(path: str) -> dict:
    """Parse a ``key=value`` file (``#`` starts a comment) into RunConfig field values."""
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from None
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{n}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"{path}:{n}: unknown key {key!r}")
        parse, name = KEYS[key]
        out[name] = parse(value)
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nsbesov", description="Littlewood-Paley audits and bilinear-estimate degeneration experiments.")
    parser.add_argument("--version", action="version", version=f"nsbesov {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for cmd in COMMANDS:
        sp = sub.add_parser(cmd)
        for key in KEYS:
            if key == "plot":
                sp.add_argument("--plot", action="store_true", default=None, help="write plot_*.svg")
            else:
                sp.add_argument(f"--{key}", dest=key, default=None, metavar=key.upper())
        sp.add_argument("--config", default=None, help="key=value file; command-line flags take precedence")
    return parser


def resolve(argv: list[str]) -> RunConfig:
    """Merge defaults, the optional config file and command-line flags."""
    args = build_parser().parse_args(argv)
    values = dict(DEFAULTS[args.command])
    if args.config:
        values.update(read_config_file(args.config))
    for key, (parse, name) in KEYS.items():
        raw = getattr(args, key)
        if raw is not None:
            values[name] = raw if key == "plot" else parse(raw)
    return RunConfig(args.command, **values).validate()


# --------------------------------------------------------------------------- output


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v)
    return str(v)


@dataclass
class RunResult:
    """Table, checks and metadata produced by one command."""

    columns: tuple[str, ...]
    rows: list[dict]
    checks: dict[str, bool]
    extras: dict[str, object]
    sources: dict[str, str]
    plots: list[Callable[[Path], Path]]

    @property
    def passed(self) -> bool:
        return all(self.checks.values())


def write_results(path: Path, result: RunResult) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(result.columns)
    for row in result.rows:
        w.writerow([fmt(row[c]) for c in result.columns])
    path.write_text(buf.getvalue())


def write_manifest(path: Path, cfg: RunConfig, result: RunResult | None, wall: float, status: str, code: int) -> None:
    lines = [f"tool=nsbesov {__version__}", f"command={cfg.command}"]
    for f in fields(cfg):
        if f.name == "command":
            continue
        v = getattr(cfg, f.name)
        if isinstance(v, tuple):
            v = ",".join(fmt(x) for x in v)
        lines.append(f"param.{f.name}={'default' if v is None else fmt(v)}")
    lines += [
        f"backend={BACKEND}",
        f"threads={os.environ.get('NSBESOV_THREADS', '1')}",
        f"python={platform.python_version()}",
        f"numpy={np.__version__}",
        f"scipy={scipy.__version__}",
        f"wall_time_s={wall:.3f}",
        f"status={status}",
        f"exit_code={code}",
    ]
    if result is not None:
        lines += [f"check.{k}={'pass' if v else 'FAIL'}" for k, v in result.checks.items()]
        lines += [f"value.{k}={fmt(v)}" for k, v in result.extras.items()]
        lines += [f"source.{k}={v}" for k, v in result.sources.items()]
    path.write_text("\n".join(lines) + "\n")


# --------------------------------------------------------------------------- commands


def cmd_verify_identities(cfg: RunConfig) -> RunResult:
    window = default_window(cfg.h, cfg.K)
    js = range(cfg.jmin, cfg.jmax + 1)
    tol = cfg.tol or IDENTITY_TOL
    ident = lemma21_decomposition(None, cfg.M, js, window, K_b=cfg.K_b)
    n = len(cfg.frequencies)
    cross = cross_term_check(cfg.frequencies, [1.0] * n, [1.0] * n, js, window, K_b=cfg.K_b)
    rows = []
    for b in ident.blocks:
        rows.append({"check": "identity", "j": b.j, "quantity": "deviation", "value": b.deviation})
        rows.append({"check": "identity", "j": b.j, "quantity": "deviation_refined", "value": b.deviation_refined})
        rows.append({"check": "identity", "j": b.j, "quantity": "reference_l2", "value": b.reference_norm})
    for j, c, d, a in zip(cross.js, cross.cross_norms, cross.diagonal_norms, cross.aggregate_deviation):
        rows.append({"check": "cross_terms", "j": j, "quantity": "cross_l2", "value": c})
        rows.append({"check": "cross_terms", "j": j, "quantity": "diagonal_l2", "value": d})
        rows.append({"check": "cross_terms", "j": j, "quantity": "aggregate_deviation", "value": a})
    checks = {
        "identity_within_tol": ident.max_deviation <= tol,
        "identity_improving": all(b.improving for b in ident.blocks),
        "cross_terms_negligible": cross.cross_ok(),
        "aggregate_within_tol": max(cross.aggregate_deviation) <= tol,
    }
    extras = {"max_identity_deviation": ident.max_deviation, "max_aggregate_deviation": max(cross.aggregate_deviation)}
    src = f"bilinear.low_product_tensor window h={window.h:g} K={window.K} and refined h={window.h / 2:g} K={2 * window.K}; block grid K_b={cfg.K_b}"
    sources = {"identity": "bilinear.lemma21_decomposition; " + src, "cross_terms": "bilinear.cross_term_check; " + src}

    def plot(out: Path) -> Path:
        js_ = [b.j for b in ident.blocks]
        return line_plot(out / "plot_identity.svg",
                         [("coarse window", js_, [max(b.deviation, 1e-17) for b in ident.blocks]),
                          ("refined window", js_, [max(b.deviation_refined, 1e-17) for b in ident.blocks])],
                         f"Low-block identity deviation, M={cfg.M:g}", "j", "relative L2 deviation", logy=True)

    return RunResult(("check", "j", "quantity", "value"), rows, checks, extras, sources, [plot])


def cmd_lower_bound(cfg: RunConfig) -> RunResult:
    window = default_window(cfg.h, cfg.K)
    curve = lower_bound_curve(cfg.p, range(cfg.jmin, cfg.jmax + 1), cfg.K_b, window, cfg.tol)
    rows = [
        {"j": r.j, "a_j": r.value, "a_j_second_component": c.value, "refinement_error": r.refinement_error}
        for r, c in zip(curve.reports, curve.second_component)
    ]
    rows.append({"j": "inf", "a_j": curve.a_inf, "a_j_second_component": "", "refinement_error": ""})
    checks = {
        "min_above_half_limit": curve.min_value >= 0.5 * curve.a_inf,
        "jmin_within_5pct": curve.deviation_at(cfg.jmin) <= 0.05,
    }
    extras = {"a_inf": curve.a_inf, "min_ratio": curve.min_ratio, "deviation_at_jmin": curve.deviation_at(cfg.jmin)}
    sources = {
        "a_j": f"counterexamples.lower_bound_curve; besov.block_norm K_b={cfg.K_b}, W from window h={window.h:g} K={window.K}",
        "a_inf": "counterexamples.limit_value; profiles.psi_l2_squared radial quadrature x block_norm(limit symbol, j=0)",
    }

    def plot(out: Path) -> Path:
        return line_plot(out / "plot_lower_bound.svg", [("a_j", [r.j for r in curve.reports], list(curve.values))],
                         f"Weighted low blocks, p={fmt(cfg.p)}", "j", "a_j", hlines=[("a_inf", curve.a_inf)])

    return RunResult(("j", "a_j", "a_j_second_component", "refinement_error"), rows, checks, extras, sources, [plot])


def _case(cfg: RunConfig) -> RunResult:
    rep: ExperimentReport = ratio_experiment(cfg.case_config())
    extras = dict(rep.constants)
    for name, fit in rep.fits.items():
        for k, v in fit.items():
            extras[f"fit.{name}.{k}"] = v
    plots = []
    Ns = [r["N"] for r in rep.rows]
    if cfg.command == "case-i":
        plots.append(lambda out: line_plot(out / "plot_ratio.svg", [("R_N", Ns, [r["ratio"] for r in rep.rows])],
                                           "Growth of the bilinear ratio", "N", "R_N", logx=True, logy=True))
    else:
        series = [("||u_N||", Ns, [r["norm_u"] for r in rep.rows])]
        if "norm_v" in rep.columns:
            series.append(("||v_N||", Ns, [r["norm_v"] for r in rep.rows]))
        plots.append(lambda out: line_plot(out / "plot_norms.svg", series, "Besov norms of the sequence", "N", "norm",
                                           logx=True, logy=True))
        sup = [("sup block of B", Ns, [r["sup_block"] for r in rep.rows])]
        plots.append(lambda out: line_plot(out / "plot_bilinear.svg", sup, "Low-block sup norm of B", "N", "value",
                                           logx=True, hlines=[("half a_inf", 0.5 * rep.constants["a_inf"])]))
    return RunResult(rep.columns, rep.rows, dict(rep.checks), extras, dict(rep.provenance), plots)


def cmd_selftest(cfg: RunConfig) -> RunResult:
    rows: list[dict] = []
    checks: dict[str, bool] = {}

    def add(check, index, quantity, value):
        rows.append({"check": check, "index": index, "quantity": quantity, "value": value})

    dev, count = partition_of_unity_deviation()
    add("partition_of_unity", 0, "max_deviation", dev)
    add("partition_of_unity", 0, "nodes", count)
    checks["partition_of_unity"] = dev <= EXACT_TOL
    alg = operator_algebra(cfg.seed, 10)
    for k, v in alg.as_dict().items():
        add("operator_algebra", 0, k, v)
    checks["operator_algebra"] = alg.worst() <= EXACT_TOL
    paths = path_agreement(16.0, cfg.seed)
    for k, v in paths.as_dict().items():
        add("path_agreement", 0, k, v)
    checks["path_agreement"] = max(paths.as_dict().values()) <= IDENTITY_TOL
    ident = lemma21_decomposition(None, 16.0, range(-2, 1), K_b=256)
    for b in ident.blocks:
        add("identity", b.j, "deviation", b.deviation)
        add("identity", b.j, "deviation_refined", b.deviation_refined)
    checks["identity"] = ident.max_deviation <= IDENTITY_TOL
    curve = lower_bound_curve(2.0, range(-4, -1))
    for r in curve.reports:
        add("lower_bound", r.j, "a_j", r.value)
    add("lower_bound", 0, "a_inf", curve.a_inf)
    checks["lower_bound"] = curve.min_value >= 0.5 * curve.a_inf
    sources = {
        "partition_of_unity": "diagnostics.partition_of_unity_deviation dyadic grids K=256",
        "operator_algebra": "diagnostics.operator_algebra grid h=1/8 K=128",
        "path_agreement": "diagnostics.path_agreement h=1/16",
        "identity": "bilinear.lemma21_decomposition M=16 K_b=256",
        "lower_bound": "counterexamples.lower_bound_curve p=2 K_b=512",
    }
    return RunResult(("check", "index", "quantity", "value"), rows, checks, {}, sources, [])


HANDLERS: dict[str, Callable[[RunConfig], RunResult]] = {
    "verify-identities": cmd_verify_identities,
    "lower-bound": cmd_lower_bound,
    "case-i": _case,
    "case-ii": _case,
    "case-iii": _case,
    "selftest": cmd_selftest,
}


def print_table(result: RunResult) -> None:
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(result.columns)
    for row in result.rows:
        w.writerow([fmt(row[c]) for c in result.columns])
    for k, v in result.extras.items():
        print(f"# {k} = {fmt(v)}")
    for k, v in result.checks.items():
        print(f"# check {k}: {'pass' if v else 'FAIL'}")


def run(argv: list[str] | None = None) -> int:
    """Execute one command; returns the process exit code."""
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        cfg = resolve(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and 2
    except (ConfigError, NSBesovError, ValueError) as exc:
        print(f"nsbesov: configuration error: {exc}", file=sys.stderr)
        return 2
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    try:
        result = HANDLERS[cfg.command](cfg)
    except ConvergenceError as exc:
        print(f"nsbesov: tolerance failure: {exc}", file=sys.stderr)
        write_manifest(out / "manifest.txt", cfg, None, time.perf_counter() - start, "tolerance failure", 1)
        return 1
    except (NSBesovError, ValueError) as exc:
        print(f"nsbesov: configuration error: {exc}", file=sys.stderr)
        write_manifest(out / "manifest.txt", cfg, None, time.perf_counter() - start, "configuration error", 2)
        return 2
    code = 0 if result.passed else 1
    write_results(out / "results.csv", result)
    if cfg.plot:
        for make in result.plots:
            make(out)
    write_manifest(out / "manifest.txt", cfg, result, time.perf_counter() - start,
                   "ok" if code == 0 else "tolerance failure", code)
    print_table(result)
    if code:
        failed = ", ".join(k for k, v in result.checks.items() if not v)
        print(f"nsbesov: tolerance failure: {failed}", file=sys.stderr)
    return code


def main() -> None:
    sys.exit(run())
