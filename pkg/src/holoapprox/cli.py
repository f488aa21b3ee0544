"""
Command line: ``holoapprox {solve,slice,mesh,oracle}``.

Exit codes: 0 PASS, 1 FAIL certificate, 2 input error, 3 solver error.

Config files are INI style with sections ``[dims]``, ``[sigma]``,
``[solver]`` and ``[grid]``.  Expressions are double-quoted and separated by
commas::

    [dims]
    m = 1
    k = 0
    n = 1

    [sigma]
    eps = 1.0
    f = "x1"
    phi1 = "0", "0"

    [solver]
    amplitude_scale = 4

``phi<i>`` is row i of phi (m+1+k entries); a single ``phi`` key holding all
n*(m+1+k) entries row by row is accepted too.
"""

import argparse
import configparser
import csv
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import expr, export
from .corrugation import CorrugationError, FrequencySearchError, LoopSynthesisError, SolveOptions, solve
from .extension import extend
from .jetmodel import JetSection
from .relation import EmptySliceError, SliceSpec, ampleness_certificate, slice_hyperbolas
from .verify import TubeOptions, certify_solution, oracle_suite

log = logging.getLogger("holoapprox")

EXIT_PASS, EXIT_FAIL, EXIT_INPUT, EXIT_SOLVER = 0, 1, 2, 3
THREADS_ENV = "HOLOAPPROX_THREADS"


class ConfigError(ValueError):
    pass


def _quoted_list(text):
    text = " ".join(text.split("\n")).strip()
    try:
        row = next(csv.reader([text], skipinitialspace=True, quotechar='"'))
    except (csv.Error, StopIteration) as exc:
        raise ConfigError(f"cannot read expression list {text!r}") from exc
    out = [v.strip() for v in row]
    if not out or any(v == "" for v in out):
        raise ConfigError(f"empty entry in {text!r}")
    return out


def _numbers(text, name):
    text = (text or "").strip()
    if not text:
        return []
    try:
        return [float(v) for v in text.replace(";", ",").split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"{name}: malformed number list {text!r}") from exc


def _opt(cfg, section, key, kind, default=None):
    if not cfg.has_option(section, key):
        return default
    raw = cfg.get(section, key)
    try:
        if kind is bool:
            return cfg.getboolean(section, key)
        if kind is tuple:
            return tuple(int(v) for v in _numbers(raw, key))
        return kind(raw)
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key}: cannot read {raw!r}") from exc


def load_config(path):
    """Parse a config file into ``(section, eps, solve options, grid settings)``."""
    cfg = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path) as fh:
            cfg.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for sec in ("dims", "sigma"):
        if not cfg.has_section(sec):
            raise ConfigError(f"missing section [{sec}]")
    try:
        m = cfg.getint("dims", "m")
        k = cfg.getint("dims", "k", fallback=0)
        n = cfg.getint("dims", "n")
    except (ValueError, configparser.Error) as exc:
        raise ConfigError(f"[dims]: {exc}") from exc
    eps = _opt(cfg, "sigma", "eps", float)
    if eps is None or not eps > 0:
        raise ConfigError("[sigma] eps must be a positive number")
    if not cfg.has_option("sigma", "f"):
        raise ConfigError("[sigma] f is required")
    f = _quoted_list(cfg.get("sigma", "f"))
    width = m + 1 + k
    if cfg.has_option("sigma", "phi"):
        flat = _quoted_list(cfg.get("sigma", "phi"))
        if len(flat) != n * width:
            raise ConfigError(f"[sigma] phi needs {n * width} entries, got {len(flat)}")
        phi = [flat[i * width : (i + 1) * width] for i in range(n)]
    else:
        phi = []
        for i in range(n):
            key = f"phi{i + 1}"
            if not cfg.has_option("sigma", key):
                raise ConfigError(f"[sigma] {key} is required")
            phi.append(_quoted_list(cfg.get("sigma", key)))
    margin = _opt(cfg, "sigma", "margin", float, 0.1)
    try:
        section = JetSection.from_strings(f, phi, m, k, n, margin)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    solver = {}
    spec = {
        "frequencies": tuple,
        "amplitude": float,
        "amplitude_scale": float,
        "max_frequency": int,
        "frequency_ratio": int,
        "safety": float,
        "theta": float,
        "tighten": bool,
        "rho": float,
        "slack": float,
        "cushion": float,
        "lift": bool,
    }
    for key, kind in spec.items():
        v = _opt(cfg, "solver", key, kind)
        if v is not None:
            solver[key] = v
    grid = {}
    for key, kind in {"resolution": int, "phase_resolution": int, "samples_per_period": int}.items():
        v = _opt(cfg, "grid", key, kind)
        if v is not None:
            solver[key] = v
    for key, kind in {
        "tube_radius": float,
        "tube_offsets": int,
        "core_samples": int,
        "tube_samples": int,
        "table_width": float,
        "table_offsets": int,
    }.items():
        v = _opt(cfg, "grid", key, kind)
        if v is not None:
            grid[key] = v
    if "frequencies" in solver and len(solver["frequencies"]) != m:
        raise ConfigError(f"[solver] frequencies needs {m} entries")
    try:
        options = SolveOptions(**solver)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    return section, eps, options, grid


def _threads():
    raw = os.environ.get(THREADS_ENV)
    if not raw:
        return None
    try:
        return max(1, int(raw))
    except ValueError:
        return None


def cmd_solve(args):
    section, eps, options, grid = load_config(args.config)
    out = Path(args.out or Path(args.config).with_suffix("").name + "_out")
    try:
        pair = solve(section, eps, options)
    except (LoopSynthesisError, FrequencySearchError, CorrugationError, EmptySliceError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    ext = extend(section, pair)
    tube = TubeOptions(
        radius=grid.get("tube_radius", TubeOptions.radius), offsets=grid.get("tube_offsets")
    )
    cert = certify_solution(section, eps, pair, ext, tube=tube)
    out.mkdir(parents=True, exist_ok=True)
    res = grid.get("core_samples", 257)
    export.write_csv(out / "core.csv", *export.core_table(pair, res))
    r = cert.tubular_radius if cert.tubular_radius > 0 else 0.0
    export.write_csv(
        out / "tube.csv",
        *export.tube_table(
            ext,
            grid.get("tube_samples", 65 if section.dims.m == 1 else 9),
            grid.get("table_width", r),
            grid.get("table_offsets", 5 if section.dims.k == 0 else 3),
        ),
    )
    export.write_json(out / "coefficients.json", export.coefficient_dump(section, eps, pair))
    (out / "certificate.json").write_text(cert.to_json() + "\n")
    ns = ", ".join(str(n) for n in cert.frequencies)
    print(f"{cert.status}  eps={eps:g}  N=({ns})  tubular radius={cert.tubular_radius:.3g}")
    for name, c in cert.clauses.items():
        print(f"  {name:10s} worst margin {c['worst_margin']:.6g}  cell bound {c['cell_bound']:.3g}  at {c['worst_point']}")
    print(f"wrote {out}/")
    return EXIT_PASS if cert.passed else EXIT_FAIL


def cmd_slice(args):
    try:
        lam = _numbers(args.lam, "--lambda")
        rows = [_numbers(r, "--psi") for r in (args.psi or [])]
        if not rows:
            rows = [[0.0] * len(lam)]
        spec = SliceSpec(np.array(lam), np.array(rows, dtype=float).reshape(len(rows), len(lam)), args.eps)
    except (ConfigError, ValueError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    params = slice_hyperbolas(spec)
    lam2 = float(spec.lam @ spec.lam)
    empty = any(p.empty for p in params)
    print(f"slice: {'empty' if empty else 'nonempty'}  eps={spec.eps:g}  |lambda|^2={lam2:.6g}")
    print(f"{'comp':>4} {'m0':>14} {'kappa':>14} {'eta':>14} {'K':>14}  status")
    for i, p in enumerate(params):
        if p.empty:
            print(f"{i + 1:>4} {'-':>14} {'-':>14} {'-':>14} {'-':>14}  empty")
        else:
            print(f"{i + 1:>4} {p.m0:14.7g} {p.kappa:14.7g} {p.eta:14.7g} {p.K:14.7g}  ok")
    print(f"1/(1+|lambda|^2) = {1.0 / (1.0 + lam2):.7g}")
    if not empty:
        target = np.zeros(spec.n + 1)
        cert = ampleness_certificate(spec, target, radius=args.radius)
        print(
            f"ampleness: hull of {len(cert.points)} slice points contains the radius-{args.radius:g}"
            f" box around the origin: {cert.hull_ok}; points in the inner set: {cert.members_ok}"
        )
    return EXIT_PASS


def cmd_mesh(args):
    section, eps, options, _ = load_config(args.config)
    eps = args.eps if args.eps is not None else eps
    d = section.dims
    if args.N is not None:
        freqs = tuple(int(v) for v in _numbers(args.N, "--N"))
        if len(freqs) == 1:
            freqs = freqs * d.m
        if len(freqs) != d.m:
            print(f"input error: --N needs 1 or {d.m} values", file=sys.stderr)
            return EXIT_INPUT
        options = replace(options, frequencies=freqs)
    try:
        pair = solve(section, eps, options)
    except (LoopSynthesisError, FrequencySearchError, CorrugationError, EmptySliceError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    ext = extend(section, pair)
    out = Path(args.out)
    if (d.m, d.k, d.n) != (1, 0, 1):
        csv_path = out.with_suffix(".csv")
        print(
            f"warning: OBJ export needs m=1, k=0, n=1 (got m={d.m}, k={d.k}, n={d.n});"
            f" writing a point cloud to {csv_path}",
            file=sys.stderr,
        )
        export.write_csv(csv_path, *export.tube_table(ext, args.res, args.width, args.rows))
        return EXIT_PASS
    verts = export.mesh_arrays(ext, args.res, args.width, args.rows)
    xs = np.linspace(0.0, 1.0, args.res)
    ref = np.stack([xs, np.zeros_like(xs), xs], axis=1)
    export.write_obj(out, verts, ref)
    print(f"wrote {out} ({verts.shape[0] * verts.shape[1]} vertices, N={pair.record['frequencies'][0]})")
    return EXIT_PASS


def cmd_oracle(args):
    if args.trials < 1:
        print("input error: --trials must be >= 1", file=sys.stderr)
        return EXIT_INPUT
    report = oracle_suite(args.seed, args.trials, samples=args.samples, workers=_threads())
    print(json.dumps(report, indent=2, sort_keys=True))
    ok = all(v.get("ok", True) for v in report.values() if isinstance(v, dict))
    return EXIT_PASS if ok else EXIT_FAIL


def build_parser():
    p = argparse.ArgumentParser(prog="holoapprox", description=__doc__.split("\n\n")[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="solve, certify and write tables")
    s.add_argument("config")
    s.add_argument("--out", help="output directory (default: <config stem>_out)")
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("slice", help="hyperbolic geometry of one slice")
    s.add_argument("--lambda", dest="lam", default="", help="comma separated, m-1 entries")
    s.add_argument("--psi", action="append", help="one row of psi (repeat per component)")
    s.add_argument("--eps", type=float, required=True)
    s.add_argument("--radius", type=float, default=1.0, help="ampleness box radius")
    s.set_defaults(func=cmd_slice)

    s = sub.add_parser("mesh", help="OBJ surface of f1 over a strip")
    s.add_argument("config")
    s.add_argument("--N", help="frequency (or comma separated, one per direction)")
    s.add_argument("--eps", type=float)
    s.add_argument("--width", type=float, default=0.25)
    s.add_argument("--res", type=int, default=1025)
    s.add_argument("--rows", type=int, default=65)
    s.add_argument("--out", default="f1.obj")
    s.set_defaults(func=cmd_mesh)

    s = sub.add_parser("oracle", help="oracle cross-checks")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--trials", type=int, default=100)
    s.add_argument("--samples", type=int, default=10**5)
    s.set_defaults(func=cmd_oracle)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_PASS
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (ConfigError, expr.ExprError, ValueError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
