"""Command-line front end.

Four subcommands over a shared configuration:

* ``coeffs``  dump the coefficient tables (CSV or JSON)
* ``solve``   evaluate u(omega, x) with its error envelope
* ``eigs``    Dirichlet eigenvalues on [0, b]
* ``bench``   compare both representations against the reference integrator

Configuration may come from a JSON file (``--config``, schema 1) with any
field overridable on the command line; flags win.  Potentials are either
expression text (``--potential``) or a tabulated two/three-column file
(``--potential-file``, header ``# tabulated-potential v1``); tabulated
input is resampled onto the working grid by local degree-6 interpolation
when the grids differ, and that is flagged in the output metadata.

Exit codes: 0 success, 2 config/parse errors, 3 evaluation errors,
4 spectral errors, 5 reference-oracle failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from . import expr as expr_mod
from . import oracle
from .coefficients import accuracy_indicators
from .errors import (
    ConfigError,
    ConvergenceError,
    ExpressionEvalError,
    ExpressionSyntaxError,
    GridError,
    LimitError,
    NearVanishingError,
    NsbfError,
    OracleError,
    RangeExhaustedError,
    UnsupportedIntervalError,
    ZeroOmegaError,
)
from .grid import PIPELINE_CDTYPE, PIPELINE_DTYPE, SampledFunction, make_grid
from .solution import (
    build_model,
    error_envelope,
    epsN_surrogate,
    eval_auto,
    eval_uN,
    eval_uN_tilde,
)
from .spectral import EigProblem, asymptotic_eigenvalue, find_eigenvalues

__all__ = ["RunConfig", "main", "cmd_coeffs", "cmd_solve", "cmd_eigs", "cmd_bench"]

CONFIG_SCHEMA = 1
BENCH_TRUNCATIONS = (5, 15, 25)


@dataclass
class RunConfig:
    """Resolved run configuration (config file merged with flags)."""

    potential: str | None = None
    potential_file: str | None = None
    b: float = math.pi
    M: int = 1998
    N: int = 25
    omega_switch: float = 1.0
    fmt: str = "csv"
    threads: int = field(default_factory=lambda: os.cpu_count() or 1)
    representation: str = "auto"
    omegas: list = field(default_factory=list)
    xs: list = field(default_factory=list)
    count: int | None = None
    omega_lo: float | None = None
    omega_hi: float | None = None
    reference: str | None = None
    resampled: bool = False

    def validate(self):
        if (self.potential is None) == (self.potential_file is None):
            raise ConfigError(
                "exactly one of --potential / --potential-file is required"
            )
        if self.fmt not in ("csv", "json"):
            raise ConfigError(f"unknown format {self.fmt!r}")
        if self.representation not in ("auto", "improved", "plain"):
            raise ConfigError(f"unknown representation {self.representation!r}")


_CONFIG_KEYS = {
    "potential": str, "potential_file": str, "b": float, "M": int, "N": int,
    "omega_switch": float, "format": str, "threads": int,
    "representation": str, "omega": list, "x": list, "count": int,
    "omega_lo": float, "omega_hi": float, "reference": str,
}


def load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if raw.get("schema") != CONFIG_SCHEMA:
        raise ConfigError(
            f"config schema must be {CONFIG_SCHEMA}, got {raw.get('schema')!r}"
        )
    out = {}
    for key, value in raw.items():
        if key == "schema":
            continue
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"unknown config field {key!r}")
        out[key] = value
    return out


def _read_potential_table(path: str):
    """Parse a tabulated potential file: x, q(x) [, Im q(x)]."""
    try:
        with open(path) as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read potential file {path}: {exc}") from exc
    if not lines or lines[0].strip() != "# tabulated-potential v1":
        raise ConfigError(
            f"{path}: missing '# tabulated-potential v1' header"
        )
    xs, vals = [], []
    for i, line in enumerate(lines[1:], start=2):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.replace(",", " ").split()
        if len(parts) not in (2, 3):
            raise ConfigError(f"{path}:{i}: expected 2 or 3 columns")
        try:
            xs.append(float(parts[0]))
            re = float(parts[1])
            im = float(parts[2]) if len(parts) == 3 else 0.0
        except ValueError as exc:
            raise ConfigError(f"{path}:{i}: {exc}") from exc
        vals.append(re + 1j * im if im != 0.0 else re)
    xs = np.asarray(xs, dtype=float)
    if len(xs) < 2 or xs[0] != 0.0:
        raise ConfigError(f"{path}: need samples starting at x=0")
    steps = np.diff(xs)
    if np.any(steps <= 0) or np.ptp(steps) > 1e-9 * steps[0]:
        raise ConfigError(f"{path}: x column must be uniform and increasing")
    if any(isinstance(v, complex) for v in vals):
        values = np.array(vals, dtype=PIPELINE_CDTYPE)
    else:
        values = np.array(vals, dtype=PIPELINE_DTYPE)
    return xs, values


def _interp6(x_src: np.ndarray, v_src: np.ndarray, x_tgt: np.ndarray) -> np.ndarray:
    """Local degree-6 Lagrange interpolation from one uniform grid to
    arbitrary targets inside its span."""
    h = x_src[1] - x_src[0]
    out = np.empty(len(x_tgt), dtype=v_src.dtype)
    top = len(x_src) - 7
    for i, x in enumerate(x_tgt):
        j0 = min(max(int(round(x / h)) - 3, 0), top)
        nodes = x_src[j0 : j0 + 7]
        acc = 0.0
        for k in range(7):
            w = 1.0
            for m in range(7):
                if m != k:
                    w *= (x - nodes[m]) / (nodes[k] - nodes[m])
            acc = acc + w * v_src[j0 + k]
        out[i] = acc
    return out


def _resolve_potential(cfg: RunConfig):
    """Returns (q_input for build_model, scalar callable, description)."""
    if cfg.potential is not None:
        tree = expr_mod.parse(cfg.potential)
        return (
            tree,
            lambda x: expr_mod.evaluate(tree, x),
            cfg.potential,
        )
    xs, vals = _read_potential_table(cfg.potential_file)
    b_file = float(xs[-1])
    if cfg.b > b_file + 1e-12:
        raise ConfigError(
            f"requested b={cfg.b} exceeds tabulated span {b_file}"
        )
    grid = make_grid(cfg.b, cfg.M)
    target = np.asarray(grid.nodes, dtype=float)
    if len(xs) == cfg.M + 1 and abs(b_file - cfg.b) <= 1e-12 * cfg.b:
        samples = vals
    else:
        samples = _interp6(xs, vals, target)
        cfg.resampled = True
    sampled = SampledFunction(grid, samples)
    interp = lambda x: complex(_interp6(xs, vals, np.array([x]))[0])
    if not np.iscomplexobj(vals):
        interp = lambda x: float(_interp6(xs, vals, np.array([x]))[0])
    return sampled, interp, f"tabulated:{cfg.potential_file}"


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.17g}"


def _emit(cfg: RunConfig, command: str, metadata: dict, columns: list,
          rows: list, summary: list | None = None, out=None):
    out = out or sys.stdout
    if cfg.fmt == "json":
        doc = {
            "schema": CONFIG_SCHEMA,
            "command": command,
            "metadata": metadata,
            "columns": columns,
            "rows": [[_fmt(v) for v in row] for row in rows],
        }
        if summary:
            doc["summary"] = summary
        json.dump(doc, out, indent=1, sort_keys=True)
        out.write("\n")
        return
    out.write(f"# nsbf {command}\n")
    for key in sorted(metadata):
        out.write(f"# {key}: {metadata[key]}\n")
    out.write(",".join(columns) + "\n")
    for row in rows:
        out.write(",".join(_fmt(v) for v in row) + "\n")
    for line in summary or []:
        out.write(f"# {line}\n")


def _metadata(cfg: RunConfig, desc: str) -> dict:
    md = {
        "generated": datetime.now(timezone.utc).isoformat(),
        "potential": desc,
        "b": _fmt(cfg.b),
        "M": cfg.M,
        "N": cfg.N,
        "omega_switch": _fmt(cfg.omega_switch),
    }
    if cfg.resampled:
        md["resampled"] = "true"
    return md


def _build(cfg: RunConfig):
    q_input, q_callable, desc = _resolve_potential(cfg)
    model = build_model(
        q_input, cfg.b, cfg.M, cfg.N, omega_switch=cfg.omega_switch
    )
    return model, q_callable, desc


def cmd_coeffs(cfg: RunConfig, out=None) -> int:
    """Dump beta/alpha tables: columns x, n, beta_re, beta_im, alpha_re,
    alpha_im (beta blank past its top row)."""
    model, _, desc = _build(cfg)
    md = _metadata(cfg, desc)
    q = SampledFunction(model.grid, model.q)
    Q = SampledFunction(model.grid, model.Q)
    Q2 = SampledFunction(model.grid, model.Q2)
    eps1, eps2 = accuracy_indicators(q, Q, Q2, model.alpha, model.N)
    md["eps1_at_b"] = _fmt(eps1[-1])
    md["eps2_at_b"] = _fmt(eps2[-1])
    md["beta_rows"] = model.N + 1
    md["alpha_rows"] = model.N + 3
    md["beta_cancellation_flags"] = int(
        np.sum(model.beta.flags[: model.N + 1])
    )
    md["alpha_cancellation_flags"] = int(
        np.sum(model.alpha.flags[: model.N + 3])
    )
    rows = []
    xs = np.asarray(model.grid.nodes, dtype=float)
    for n in range(model.N + 3):
        has_beta = n <= model.N
        for j in range(model.grid.M + 1):
            a = complex(model.alpha.alpha[n, j])
            if has_beta:
                bv = complex(model.beta.beta[n, j])
                rows.append((xs[j], n, bv.real, bv.imag, a.real, a.imag))
            else:
                rows.append((xs[j], n, "", "", a.real, a.imag))
    _emit(cfg, "coeffs", md,
          ["x", "n", "beta_re", "beta_im", "alpha_re", "alpha_im"],
          rows, out=out)
    return 0


def _parse_omega(text: str) -> complex:
    try:
        val = complex(text)
    except ValueError as exc:
        raise ConfigError(f"cannot parse omega value {text!r}") from exc
    return val.real if val.imag == 0.0 else val


def cmd_solve(cfg: RunConfig, out=None) -> int:
    """Evaluate the solution at each (omega, x) pair of the request."""
    if not cfg.omegas:
        raise ConfigError("solve needs at least one --omega")
    if not cfg.xs:
        raise ConfigError("solve needs at least one --x")
    model, _, desc = _build(cfg)
    eps = epsN_surrogate(model)
    evaluator = {
        "auto": eval_auto,
        "improved": eval_uN,
        "plain": eval_uN_tilde,
    }[cfg.representation]
    rows = []
    for w_text in cfg.omegas:
        w = _parse_omega(str(w_text))
        for x_req in cfg.xs:
            x_req = float(x_req)
            j = model.grid.nearest_index(x_req)
            u = evaluator(model, w, j)
            env = "" if w == 0 else error_envelope(model, w, j, eps)
            rows.append((w_text, float(model.grid.nodes[j]), u.real, u.imag, env))
    md = _metadata(cfg, desc)
    md["representation"] = cfg.representation
    _emit(cfg, "solve", md, ["omega", "x", "re_u", "im_u", "envelope"],
          rows, out=out)
    return 0


def cmd_eigs(cfg: RunConfig, out=None) -> int:
    """Dirichlet eigenvalue table, lowest `count` indices."""
    model, _, desc = _build(cfg)
    rep = "improved" if cfg.representation == "auto" else cfg.representation
    problem = EigProblem(
        model, omega_lo=cfg.omega_lo, omega_hi=cfg.omega_hi,
        representation=rep,
    )
    results = find_eigenvalues(problem, cfg.count, threads=cfg.threads)
    with_asymptotic = abs(cfg.b - math.pi) <= 1e-12
    Qb = float(np.asarray(model.Q, dtype=complex)[-1].real)
    columns = ["n", "lambda", "omega", "residual"]
    if with_asymptotic:
        columns.append("asymptotic")
    rows = []
    for r in results:
        row = [r.index, r.lam, r.omega, r.residual]
        if with_asymptotic:
            row.append(asymptotic_eigenvalue(r.index, Qb, cfg.b))
        rows.append(row)
    md = _metadata(cfg, desc)
    md["representation"] = rep
    md["count"] = cfg.count
    _emit(cfg, "eigs", md, columns, rows, out=out)
    return 0


def _load_reference(path: str, count: int) -> np.ndarray:
    try:
        vals = []
        with open(path) as fh:
            for line in fh:
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                vals.append(float(line.split(",")[-1]))
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read reference file {path}: {exc}") from exc
    if len(vals) < count:
        raise ConfigError(
            f"reference file has {len(vals)} eigenvalues, need {count}"
        )
    return np.asarray(vals[:count])


def cmd_bench(cfg: RunConfig, out=None) -> int:
    """Per-index eigenvalue errors for both representations at several N.

    The reference eigenvalues come from the built-in integrator (seeded by
    the most accurate run) or from ``--reference``.
    """
    count = cfg.count
    truncations = [n for n in BENCH_TRUNCATIONS if n <= cfg.N] or [cfg.N]
    model, q_callable, desc = _build(cfg)

    runs: dict[tuple[str, int], np.ndarray] = {}
    for trunc in truncations:
        sub = model.with_truncation(trunc)
        for rep in ("improved", "plain"):
            problem = EigProblem(sub, representation=rep)
            res = find_eigenvalues(problem, count, threads=cfg.threads)
            runs[(rep, trunc)] = np.array([r.lam for r in res])

    if cfg.reference:
        lam_ref = _load_reference(cfg.reference, count)
        ref_desc = cfg.reference
    else:
        seeds = runs[("improved", max(truncations))]
        lam_ref = oracle.eigenvalues_reference(q_callable, cfg.b, seeds)
        ref_desc = "built-in adaptive integrator"

    columns = ["n", "lambda_ref"]
    keys = []
    for rep in ("plain", "improved"):
        for trunc in truncations:
            columns.append(f"err_{rep}_N{trunc}")
            keys.append((rep, trunc))
    rows = []
    for i in range(count):
        row = [i + 1, lam_ref[i]]
        row.extend(abs(runs[key][i] - lam_ref[i]) for key in keys)
        rows.append(row)

    summary = []
    for rep, trunc in keys:
        errs = np.abs(runs[(rep, trunc)] - lam_ref)
        summary.append(
            f"summary {rep} N={trunc}: max={float(np.max(errs)):.6e} "
            f"median={float(np.median(errs)):.6e}"
        )
    md = _metadata(cfg, desc)
    md["reference"] = ref_desc
    md["count"] = count
    _emit(cfg, "bench", md, columns, rows, summary, out=out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nsbf",
        description="Solution representations and Dirichlet eigenvalues "
        "for -u'' + q u = omega^2 u on [0, b]",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, desc in (
        ("coeffs", "dump coefficient tables"),
        ("solve", "evaluate u(omega, x)"),
        ("eigs", "compute Dirichlet eigenvalues"),
        ("bench", "compare both representations against the reference"),
    ):
        p = sub.add_parser(name, help=desc)
        p.add_argument("--config", help="JSON config file (schema 1)")
        p.add_argument("--potential", help="potential expression q(x)")
        p.add_argument("--potential-file", help="tabulated potential path")
        p.add_argument("--b", type=float, help="interval endpoint (default pi)")
        p.add_argument("--M", type=int, help="grid subintervals (default 1998)")
        p.add_argument("--N", type=int, help="series truncation (default 25)")
        p.add_argument("--omega-switch", type=float,
                       help="representation switch point (default 1)")
        p.add_argument("--format", choices=("csv", "json"), help="output format")
        p.add_argument("--threads", type=int, help="scan worker count")
        if name == "solve":
            p.add_argument("--omega", action="append", default=None,
                           help="spectral parameter (repeatable)")
            p.add_argument("--x", action="append", type=float, default=None,
                           help="evaluation point (repeatable)")
            p.add_argument("--representation",
                           choices=("auto", "improved", "plain"),
                           help="which representation to evaluate")
        if name == "eigs":
            p.add_argument("--count", type=int, help="number of eigenvalues")
            p.add_argument("--omega-lo", type=float, help="scan start")
            p.add_argument("--omega-hi", type=float, help="scan end")
            p.add_argument("--representation",
                           choices=("improved", "plain"),
                           help="characteristic-function representation")
        if name == "bench":
            p.add_argument("--count", type=int, help="eigenvalue count (default 460)")
            p.add_argument("--reference", help="reference eigenvalue file")
    return parser


def _merge_config(args) -> RunConfig:
    cfg = RunConfig()
    if args.config:
        for key, value in load_config(args.config).items():
            attr = {"format": "fmt", "omega": "omegas", "x": "xs"}.get(key, key)
            setattr(cfg, attr, value)
    overrides = {
        "potential": "potential", "potential_file": "potential_file",
        "b": "b", "M": "M", "N": "N", "omega_switch": "omega_switch",
        "format": "fmt", "threads": "threads", "count": "count",
        "omega_lo": "omega_lo", "omega_hi": "omega_hi",
        "reference": "reference", "representation": "representation",
        "omega": "omegas", "x": "xs",
    }
    for arg_name, attr in overrides.items():
        if hasattr(args, arg_name) and getattr(args, arg_name) is not None:
            setattr(cfg, attr, getattr(args, arg_name))
    if cfg.count is None:
        cfg.count = 460 if args.command == "bench" else 10
    cfg.validate()
    return cfg


_EXIT_CODES = (
    ((ExpressionSyntaxError, ConfigError, GridError), 2),
    ((ZeroOmegaError, ExpressionEvalError, ConvergenceError,
      NearVanishingError, LimitError), 3),
    ((RangeExhaustedError, UnsupportedIntervalError), 4),
    ((OracleError,), 5),
)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {
        "coeffs": cmd_coeffs,
        "solve": cmd_solve,
        "eigs": cmd_eigs,
        "bench": cmd_bench,
    }[args.command]
    try:
        cfg = _merge_config(args)
        return handler(cfg)
    except NsbfError as exc:
        print(f"nsbf {args.command}: {exc}", file=sys.stderr)
        for types, code in _EXIT_CODES:
            if isinstance(exc, types):
                return code
        return 3


if __name__ == "__main__":
    sys.exit(main())
