"""Command-line front end: ``genshift selftest | curves | verify``.

Exit codes: 0 success, 1 a check failed, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import functools
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .analysis import (
    Resolution,
    coincidence_report,
    default_n_values,
    multiplier_check,
    theorem_data,
    verify_direct,
    verify_inverse,
    verify_jackson,
)
from .approx import ApproximationError, ErrorSequence, best_approx, error_sequence
from .modulus import MAX_DELTA, ModulusCurve, modulus_curve, omega
from .shift import (
    ConvergenceError,
    KernelSpec,
    KernelSpecError,
    default_kernel,
    fingerprint_bytes,
    lemma1_selftest,
    load_kernel_spec,
    operator_norm_probe,
    parse_kernel_section,
)
from .space import INF, FunctionHandle, WeightParams, admissible_for, constant, corpus, corpus_by_label

ENV_CONFIG = "GENSHIFT_CONFIG"
EXIT_OK, EXIT_CHECK, EXIT_USAGE = 0, 1, 2
STAMP_NAME = "selftest.json"
MAX_N = 256
PROBE_BOUND = 10.0
PROBE_DRIFT = 0.05
MULTIPLIER_MEMBERS = ("abs_x_minus_half_pow_0.5", "abs_x_minus_half_pow_1.5", "trunc_pow_0.5", "exp", "poly7")
NUMERIC_ERRORS = (ApproximationError, ConvergenceError, FloatingPointError, ArithmeticError, ValueError)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    kernel: KernelSpec
    w: WeightParams = WeightParams(INF, 1.0)
    functions: tuple = ()
    n_max: int = 64
    deltas: tuple | None = None  # None: 1/n over the n grid
    output_dir: Path = Path("genshift-out")
    resolution: Resolution = field(default_factory=Resolution)
    jobs: int = 1

    def __post_init__(self):
        if not 2 <= self.n_max <= MAX_N:
            raise ConfigError(f"n_max must lie in [2, {MAX_N}], got {self.n_max}")
        for label in self.functions:
            resolve_function(label)

    @property
    def n_values(self) -> np.ndarray:
        return default_n_values(self.n_max)

    @property
    def delta_grid(self) -> np.ndarray:
        if self.deltas is None:
            return np.sort(1.0 / self.n_values)
        return np.asarray(self.deltas, dtype=float)

    def handles(self) -> list[FunctionHandle]:
        return [resolve_function(label) for label in self.functions]


def resolve_function(label: str) -> FunctionHandle:
    """A corpus label, or ``const_<value>`` for a constant function."""
    known = corpus_by_label()
    if label in known:
        return known[label]
    if label.startswith("const_"):
        try:
            return constant(float(label[len("const_") :]))
        except ValueError:
            pass
    raise ConfigError(f"unknown function label {label!r}; known: {', '.join(known)}")


def _parse_p(text: str) -> float:
    text = text.strip().lower()
    if text in ("inf", "infinity"):
        return INF
    return float(text)


def _parse_deltas(text: str):
    text = text.strip()
    if text in ("", "auto"):
        return None
    parts = text.replace(",", " ").split()
    if parts[0] == "geom":
        if len(parts) != 4:
            raise ConfigError("deltas = geom <lo> <hi> <count>")
        grid = np.geomspace(float(parts[1]), float(parts[2]), int(parts[3]))
    else:
        grid = np.array([float(v) for v in parts])
    grid = np.unique(grid)
    if grid[0] <= 0 or grid[-1] > MAX_DELTA:
        raise ConfigError(f"deltas must lie in (0, {MAX_DELTA}]")
    return tuple(float(v) for v in grid)


def _parse_resolution(section) -> Resolution:
    base = Resolution()
    if section is None:
        return base
    res = Resolution(
        int(section.get("shift_factor", base.shift_factor)),
        int(section.get("norm_nodes", base.norm_nodes)),
        int(section.get("sup_samples", base.sup_samples)),
        int(section.get("approx_density", base.approx_density)),
        int(section.get("coeff_nodes", base.coeff_nodes)),
    )
    factor = int(section.get("factor", 1))
    return res.scaled(factor) if factor > 1 else res


def _inline_kernel(section) -> KernelSpec:
    canonical = "".join(f"{k} = {section[k]}\n" for k in sorted(section))
    return parse_kernel_section(section, fingerprint_bytes(canonical.encode()))


def builtin_kernel() -> KernelSpec:
    spec = default_kernel()
    return parse_kernel_section(_section_of(spec.to_ini()), fingerprint_bytes(spec.to_ini().encode()))


def _section_of(text):
    parser = configparser.ConfigParser()
    parser.read_string(text)
    return parser["kernel"]


def load_config(path=None, *, output=None, resolution=None, jobs=None) -> RunConfig:
    """Build a :class:`RunConfig` from an INI file with ``[run]``, optional
    ``[resolution]`` and optional inline ``[kernel]`` sections."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    base_dir = Path.cwd()
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file {path} does not exist")
        try:
            parser.read_string(path.read_text(encoding="utf-8"))
        except (configparser.Error, UnicodeDecodeError) as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from exc
        base_dir = path.parent
    run = parser["run"] if parser.has_section("run") else {}
    try:
        if "kernel" in run:
            kpath = base_dir / run["kernel"]
            if not kpath.is_file():
                raise ConfigError(f"kernel spec file {kpath} does not exist")
            kernel = load_kernel_spec(kpath)
        elif parser.has_section("kernel"):
            kernel = _inline_kernel(parser["kernel"])
        else:
            kernel = builtin_kernel()
        w = WeightParams(_parse_p(run.get("p", "inf")), float(run.get("alpha", "1")))
        names = run.get("functions", "all").replace(",", " ").split()
        functions = tuple(f.label for f in corpus()) if names in ([], ["all"]) else tuple(names)
        res = _parse_resolution(parser["resolution"] if parser.has_section("resolution") else None)
        if resolution and resolution > 1:
            res = res.scaled(resolution)
        out_dir = Path(output) if output else base_dir / run.get("output", "genshift-out")
        cfg = RunConfig(
            kernel=kernel,
            w=w,
            functions=functions,
            n_max=int(run.get("n_max", "64")),
            deltas=_parse_deltas(run.get("deltas", "auto")),
            output_dir=out_dir,
            resolution=res,
            jobs=int(jobs if jobs is not None else run.get("jobs", "1")),
        )
    except KernelSpecError as exc:
        raise ConfigError(str(exc)) from exc
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad config value: {exc}") from exc
    if cfg.jobs < 1:
        raise ConfigError("jobs must be at least 1")
    try:
        cfg.output_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {cfg.output_dir}: {exc}") from exc
    if not os.access(cfg.output_dir, os.W_OK):
        raise ConfigError(f"output directory {cfg.output_dir} is not writable")
    return cfg


# -- output helpers -----------------------------------------------------------------------


def _clean(obj):
    """JSON-safe copy: numpy scalars unwrapped, non-finite floats spelled out."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    return obj


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _write_json(path: Path, obj):
    _write(path, json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n")


def _kernel_header(cfg: RunConfig) -> str:
    return f"# kernel={cfg.kernel.fingerprint}\n"


def _pmap(fn, items, jobs):
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _stamp_ok(cfg: RunConfig) -> tuple[bool, str]:
    stamp = cfg.output_dir / STAMP_NAME
    if not stamp.is_file():
        return False, f"no {STAMP_NAME} in {cfg.output_dir}; run 'genshift selftest' first or pass --force"
    try:
        data = json.loads(stamp.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError):
        return False, f"{stamp} is unreadable"
    if data.get("fingerprint") != cfg.kernel.fingerprint:
        return False, f"{stamp} was written for a different kernel spec"
    if not data.get("pass"):
        return False, f"the self-test recorded in {stamp} failed"
    return True, ""


# -- selftest -----------------------------------------------------------------------------


def cmd_selftest(cfg: RunConfig) -> int:
    report = lemma1_selftest(cfg.kernel)
    out = {"fingerprint": cfg.kernel.fingerprint, "kernel": cfg.kernel.to_ini(), "selftest": report.as_dict()}
    if report.pass_:
        w = cfg.w if admissible_for(cfg.w, "jackson") else WeightParams(INF, 1.0)
        res = cfg.resolution
        base = operator_norm_probe(
            cfg.kernel, w, cfg.handles(), node_factor=res.shift_factor, norm_nodes=res.norm_nodes, samples=res.sup_samples
        )
        fine = res.scaled(2)
        doubled = operator_norm_probe(
            cfg.kernel, w, cfg.handles(), node_factor=fine.shift_factor, norm_nodes=fine.norm_nodes, samples=fine.sup_samples
        )
        drift = abs(doubled - base) / base if base else math.inf
        out["probe"] = {
            "w": w.tag(),
            "constant": base,
            "constant_doubled": doubled,
            "relative_change": drift,
            "pass": bool(math.isfinite(base) and base <= PROBE_BOUND and drift <= PROBE_DRIFT),
        }
    else:
        out["probe"] = {"status": "skipped: kernel gate failed"}
    out["pass"] = report.pass_
    _write_json(cfg.output_dir / STAMP_NAME, out)
    status = "pass" if report.pass_ else "FAIL"
    print(
        f"selftest {status}: identity {report.max_err_identity:.3e}, unit {report.max_err_unit:.3e}, "
        f"product {report.max_err_product:.3e} (kernel {cfg.kernel.fingerprint})"
    )
    return EXIT_OK if report.pass_ else EXIT_CHECK


# -- curves -------------------------------------------------------------------------------


def _robust_errors(f, cfg: RunConfig):
    n_values = cfg.n_values
    density = cfg.resolution.approx_density
    try:
        return error_sequence(f, n_values, cfg.w, cfg.kernel.sigma, density=density), []
    except NUMERIC_ERRORS:
        pass
    raw, failures, warm = [], [], None
    for n in n_values:
        try:
            warm, err = best_approx(f, int(n), cfg.w, cfg.kernel.sigma, density=density, warm=warm)
        except NUMERIC_ERRORS as exc:
            err = math.nan
            failures.append((f.label, "E_n", int(n), str(exc)))
        raw.append(err)
    raw = np.array(raw)
    return ErrorSequence(n_values, np.fmin.accumulate(raw), f.label, cfg.w, raw=raw), failures


def _robust_curve(f, cfg: RunConfig):
    deltas = cfg.delta_grid
    nodes = cfg.resolution.shift_nodes(f)
    kw = cfg.resolution.norm_kw()
    try:
        return modulus_curve(cfg.kernel, f, cfg.w, deltas, nodes=nodes, norm_kw=kw), []
    except NUMERIC_ERRORS:
        pass
    raw, failures = [], []
    for d in deltas:
        try:
            raw.append(omega(cfg.kernel, f, cfg.w, float(d), nodes=nodes, norm_kw=kw))
        except NUMERIC_ERRORS as exc:
            raw.append(math.nan)
            failures.append((f.label, "omega", float(d), str(exc)))
    raw = np.array(raw)
    return ModulusCurve(deltas, np.fmax.accumulate(raw), f.label, cfg.w, raw=raw), failures


def _curves_for(label: str, cfg: RunConfig):
    f = resolve_function(label)
    errs, fail_e = _robust_errors(f, cfg)
    curve, fail_c = _robust_curve(f, cfg)
    return errs, curve, fail_e + fail_c


def _gnuplot_data(results) -> str:
    buf = io.StringIO()
    for errs, curve, _ in results:
        buf.write(f"# {errs.f_label} n E_n\n")
        for n, e in zip(errs.n_values, errs.errors):
            buf.write(f"{int(n)} {float(e)!r}\n")
        buf.write("\n\n")
        buf.write(f"# {curve.f_label} delta omega\n")
        for d, o in zip(curve.deltas, curve.omegas):
            buf.write(f"{float(d)!r} {float(o)!r}\n")
        buf.write("\n\n")
    return buf.getvalue()


def _gnuplot_script(results, w: WeightParams) -> str:
    lines = [
        "# gnuplot -p curves.gp",
        "set logscale xy",
        "set key outside right",
        "set terminal pngcairo size 1200,500",
        "set output 'curves.png'",
        "set multiplot layout 1,2",
        f"set title 'E_n, {w.tag()}'",
        "set xlabel 'n'",
    ]
    lines.append(
        "plot " + ", \\\n     ".join(f"'curves.dat' index {2 * i} with linespoints title '{r[0].f_label}'" for i, r in enumerate(results))
    )
    lines += [f"set title 'omega(f, delta), {w.tag()}'", "set xlabel 'delta'"]
    lines.append(
        "plot "
        + ", \\\n     ".join(f"'curves.dat' index {2 * i + 1} with linespoints title '{r[1].f_label}'" for i, r in enumerate(results))
    )
    lines.append("unset multiplot")
    return "\n".join(lines) + "\n"


def cmd_curves(cfg: RunConfig) -> int:
    results = _pmap(functools.partial(_curves_for, cfg=cfg), list(cfg.functions), cfg.jobs)
    head = _kernel_header(cfg)
    out = cfg.output_dir / "curves"
    failures = []
    for errs, curve, fail in results:
        _write(out / f"{errs.f_label}.En.csv", head + errs.to_csv())
        _write(out / f"{curve.f_label}.omega.csv", head + curve.to_csv())
        failures.extend(fail)
    _write(out / "curves.dat", head + _gnuplot_data(results))
    _write(out / "curves.gp", _gnuplot_script(results, cfg.w))
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["f", "quantity", "at", "error"])
    writer.writerows(failures)
    _write(out / "failures.csv", head + buf.getvalue())
    print(f"curves: {len(results)} functions written to {out}, {len(failures)} failed rows")
    return EXIT_CHECK if failures else EXIT_OK


# -- verify -------------------------------------------------------------------------------


def _checks_for(label: str, cfg: RunConfig) -> list[dict]:
    f = resolve_function(label)
    w = cfg.w
    wanted = [t for t in ("jackson", "inverse", "direct", "coincidence") if admissible_for(w, t)]
    if not wanted:
        return [
            {"f": label, "check": t, "w": w.tag(), "status": "inadmissible", "pass": None}
            for t in ("jackson", "inverse", "direct", "coincidence")
        ]
    try:
        data = theorem_data(cfg.kernel, f, w, cfg.n_values, cfg.resolution)
    except NUMERIC_ERRORS as exc:
        return [{"f": label, "check": "data", "w": w.tag(), "status": "error", "error": str(exc), "pass": False}]
    kw = {"data": data, "resolution": cfg.resolution}
    out = [
        verify_jackson(cfg.kernel, f, w, **kw),
        verify_inverse(cfg.kernel, f, w, **kw),
        verify_direct(cfg.kernel, f, w, **kw),
    ]
    if admissible_for(w, "coincidence"):
        out.append(coincidence_report(f, w, data).as_dict())
    else:
        out.append({"f": label, "check": "coincidence", "w": w.tag(), "status": "inadmissible", "pass": None})
    return out


def _lam(entry, key):
    r = entry.get(key)
    return "" if not r else repr(float(r["lambda"]))


def cmd_verify(cfg: RunConfig) -> int:
    members = [resolve_function(label) for label in MULTIPLIER_MEMBERS]
    try:
        mult = multiplier_check(cfg.kernel, members, resolution=cfg.resolution)
    except NUMERIC_ERRORS as exc:
        mult = {"max_rel_err": math.inf, "pass": False, "error": str(exc), "rows": []}
    per_f = _pmap(functools.partial(_checks_for, cfg=cfg), list(cfg.functions), cfg.jobs)
    checks = [c for group in per_f for c in group]
    failed = [c for c in checks if c["pass"] is False]
    ok = bool(mult["pass"]) and not failed
    report = {
        "fingerprint": cfg.kernel.fingerprint,
        "w": cfg.w.tag(),
        "n_max": cfg.n_max,
        "multiplier": mult,
        "checks": checks,
        "pass": ok,
    }
    _write_json(cfg.output_dir / "verify.json", report)
    buf = io.StringIO()
    buf.write(_kernel_header(cfg))
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["f", "check", "w", "status", "lambda_E", "lambda_H"])
    writer.writerow(["*", "multiplier", "*", "pass" if mult["pass"] else "fail", "", ""])
    for c in checks:
        writer.writerow([c["f"], c["check"], c["w"], c["status"], _lam(c, "lambda_E"), _lam(c, "lambda_H")])
    _write(cfg.output_dir / "verify_summary.csv", buf.getvalue())
    skipped = sum(1 for c in checks if c["pass"] is None)
    print(
        f"verify {'pass' if ok else 'FAIL'}: multiplier max rel err {mult['max_rel_err']:.3e}, "
        f"{len(failed)} failed, {skipped} skipped of {len(checks)} checks"
    )
    for c in failed:
        print(f"  failed: {c['check']} {c['f']} {c['w']}")
    return EXIT_OK if ok else EXIT_CHECK


# -- entry point --------------------------------------------------------------------------

COMMANDS = {"selftest": cmd_selftest, "curves": cmd_curves, "verify": cmd_verify}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="genshift", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help=f"INI run configuration (default: ${ENV_CONFIG})")
    parser.add_argument("--output", help="output directory (overrides the config)")
    parser.add_argument("--force", action="store_true", help="skip the self-test stamp check")
    parser.add_argument("--resolution", type=int, default=1, metavar="K", help="multiply all quadrature sizes by K")
    parser.add_argument("--jobs", type=int, default=None, help="worker processes for per-function work")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    if args.resolution < 1:
        print("error: --resolution must be a positive integer", file=sys.stderr)
        return EXIT_USAGE
    try:
        cfg = load_config(
            args.config or os.environ.get(ENV_CONFIG), output=args.output, resolution=args.resolution, jobs=args.jobs
        )
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.command != "selftest" and not args.force:
        ok, why = _stamp_ok(cfg)
        if not ok:
            print(f"error: {why}", file=sys.stderr)
            return EXIT_USAGE
    return COMMANDS[args.command](cfg)


if __name__ == "__main__":
    sys.exit(main())
