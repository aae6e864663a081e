"""Command-line entry point ``telegraph-forms``.

Every artifact starts with a metadata block (tool version, spec hash, seed,
command). JSON artifacts carry it under ``"metadata"``; CSV artifacts as
leading ``# key: value`` lines. :func:`read_artifact` parses both back.

Exit codes: 0 success, 1 validation failure (bad input or a failed check),
2 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import __version__
from .linear_form import AccuracyWarning, ac_density, char_fn_L, singular_atoms, singular_char_fn
from .model import (
    BandwidthError,
    ModelSpec,
    NumericalError,
    PrecisionError,
    SchemaError,
    TelegraphError,
    TelegraphParams,
    lambda_total,
    load_spec,
    sigma_speed,
    to_fraction,
)
from .montecarlo import kac_convergence, sample_linear_form
from .operator_algebra import ONE, T, governing_operator, poly_divides

__all__ = ["RunConfig", "build_parser", "run", "main", "read_artifact"]

COMMANDS = ("derive-pde", "atoms", "density", "cf", "simulate", "verify", "kac", "selftest")
NEEDS_SPEC = {"derive-pde", "atoms", "density", "cf", "simulate", "verify"}
NEEDS_T = {"atoms", "density", "cf", "simulate"}

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    spec_path: str | None = None
    t: str | None = None
    seed: int = 0
    samples: int = 100_000
    alpha: list[float] = field(default_factory=list)
    points: int | None = None
    fmt: str = "json"
    out: str | None = None
    cap: int | None = None
    advisory: bool = False
    method: str = "schur"
    workers: int = 1
    rho: list[float] = field(default_factory=list)
    scales: list[float] = field(default_factory=list)

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        if self.command in NEEDS_SPEC and not self.spec_path:
            raise UsageError(f"{self.command} requires --spec")
        if self.command in NEEDS_T and self.t is None:
            raise UsageError(f"{self.command} requires --t")
        if self.t is not None and self.t_value < 0:
            raise UsageError("--t must be nonnegative")
        if self.samples < 1:
            raise UsageError("--samples must be >= 1")
        if self.fmt == "binary" and (self.command != "simulate" or not self.out):
            raise UsageError("--format binary is only available for simulate with --out")

    @property
    def t_value(self) -> float:
        return float(to_fraction(self.t, field="t"))


# -- parsing ------------------------------------------------------------------------

def _float_list(text: str) -> list[float]:
    try:
        return [float(to_fraction(v.strip(), field="list")) for v in text.split(",") if v.strip()]
    except (SchemaError, ValueError) as err:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers: {err}") from None


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="telegraph-forms",
                     description="Linear forms of independent telegraph processes.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("command", choices=COMMANDS, help="what to compute")
    parser.add_argument("--spec", dest="spec_path", help="JSON model spec")
    parser.add_argument("--t", help="time (rational string or decimal)")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--samples", type=int, default=100_000)
    parser.add_argument("--alpha", type=_float_list, default=None,
                        help="comma-separated frequencies")
    parser.add_argument("--points", type=int, default=None, help="FFT grid size (power of two)")
    parser.add_argument("--format", dest="fmt", choices=("json", "csv", "binary"), default="json")
    parser.add_argument("--out", help="output file (default: stdout)")
    parser.add_argument("--cap", type=int, default=None, help="override the n limit")
    parser.add_argument("--advisory", action="store_true", help="include the finite-difference check")
    parser.add_argument("--method", choices=("schur", "cofactor"), default="schur")
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--rho", type=_float_list, default=None, help="kac: limiting c^2/lam per component")
    parser.add_argument("--scales", type=_float_list, default=None, help="kac: scale factors M")
    return parser


def config_from_args(argv=None) -> RunConfig:
    ns = build_parser().parse_args(argv)
    kw = vars(ns)
    for key in ("alpha", "rho", "scales"):
        if kw[key] is None:
            kw.pop(key)
    return RunConfig(**kw)


# -- output ----------------------------------------------------------------------------

def _metadata(cfg: RunConfig, spec: ModelSpec | None) -> dict:
    meta = {"tool": "telegraph-forms", "version": __version__, "command": cfg.command,
            "spec_hash": spec.digest() if spec is not None else None,
            "seed": cfg.seed if cfg.command in ("simulate", "kac") else None}
    if cfg.t is not None:
        meta["t"] = str(to_fraction(cfg.t, field="t"))
    return meta


def _json_default(obj):
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    raise TypeError(type(obj).__name__)


def _render(meta: dict, payload: dict, rows: list[dict] | None, fmt: str) -> str:
    if fmt == "json":
        return json.dumps({"metadata": meta, **payload}, indent=2, sort_keys=True,
                          default=_json_default) + "\n"
    buf = io.StringIO()
    for key in sorted(meta):
        buf.write(f"# {key}: {meta[key]}\n")
    if rows:
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: (repr(float(v)) if isinstance(v, float) else v) for k, v in row.items()})
    return buf.getvalue()


def read_artifact(text: str) -> tuple[dict, object]:
    """Parse an artifact written by this tool: ``(metadata, payload)``.

    JSON payloads come back as a dict; CSV payloads as a list of row dicts
    with string values.
    """
    stripped = text.lstrip()
    if stripped.startswith("{"):
        data = json.loads(text)
        return data.pop("metadata"), data
    meta, body = {}, []
    for line in text.splitlines():
        if line.startswith("#"):
            key, _, val = line[1:].partition(":")
            meta[key.strip()] = val.strip()
        else:
            body.append(line)
    rows = list(csv.DictReader(body))
    return meta, rows


def _emit(cfg: RunConfig, text: str | bytes, stdout) -> None:
    if cfg.out:
        mode = "wb" if isinstance(text, bytes) else "w"
        with open(cfg.out, mode, **({} if mode == "wb" else {"encoding": "utf-8", "newline": ""})) as fh:
            fh.write(text)
    else:
        stdout.write(text)


# -- commands ---------------------------------------------------------------------------

def _symmetric_pair(spec: ModelSpec) -> TelegraphParams | None:
    if spec.n != 2:
        return None
    p, q = spec.effective_params()
    if p.rate == q.rate and p.speed == q.speed:
        return p
    return None


def cmd_derive_pde(cfg: RunConfig, spec: ModelSpec):
    P = governing_operator(spec, method=cfg.method, cap=cfg.cap)
    payload = {"n": spec.n, "order": P.total_degree(), "terms": P.to_terms(),
               "text": P.render(), "latex": P.to_latex()}
    sym = _symmetric_pair(spec)
    if sym is not None:
        square = (T + 2 * sym.rate * ONE) ** 2
        quotient = poly_divides(square, P)
        payload["factor_check"] = {
            "divisor": square.render(),
            "divisible": quotient is not None,
            "quotient": quotient.render() if quotient is not None else None,
        }
    rows = [{"dt": d["dt"], "dx": d["dx"], "coef": d["coef"]} for d in P.to_terms()]
    return payload, rows


def cmd_atoms(cfg: RunConfig, spec: ModelSpec):
    t = cfg.t_value
    atoms = singular_atoms(spec, t)
    exact_t = to_fraction(cfg.t, field="t")
    lam = lambda_total(spec)
    items = []
    for a in atoms:
        item = a.to_dict()
        if spec.exact_mode:
            item["location_exact"] = str(spec.center() + sigma_speed(spec, a.signs[0]) * exact_t)
            item["mass_exact"] = f"{Fraction(a.multiplicity, 2 ** spec.n)}*exp(-{lam * exact_t})"
        items.append(item)
    payload = {"atoms": items, "total_mass": sum(a.mass for a in atoms), "count": len(atoms)}
    rows = [{"location": a.location, "mass": a.mass, "multiplicity": a.multiplicity} for a in atoms]
    return payload, rows


def cmd_density(cfg: RunConfig, spec: ModelSpec):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", AccuracyWarning)
        grid = ac_density(spec, cfg.t_value, points=cfg.points)
    payload = {**grid.to_dict(), "warnings": [str(w.message) for w in caught]}
    rows = [{"x": float(x), "density": float(v)} for x, v in zip(grid.x, grid.values)]
    return payload, rows


def cmd_cf(cfg: RunConfig, spec: ModelSpec):
    t = cfg.t_value
    alphas = np.asarray(cfg.alpha or np.linspace(-5.0, 5.0, 21), dtype=float)
    full = np.atleast_1d(char_fn_L(spec, alphas, t))
    sing = np.atleast_1d(singular_char_fn(spec, alphas, t))
    rows = [{"alpha": float(a), "re": float(v.real), "im": float(v.imag),
             "singular_re": float(s.real), "singular_im": float(s.imag)}
            for a, v, s in zip(alphas, full, sing)]
    return {"values": rows}, rows


def cmd_simulate(cfg: RunConfig, spec: ModelSpec, meta: dict):
    sample = sample_linear_form(spec, cfg.t_value, cfg.samples, cfg.seed, workers=cfg.workers)
    if cfg.fmt == "binary":
        return sample.to_binary()
    if cfg.fmt == "csv":
        return sample.to_csv(header=meta)
    payload = {"count": len(sample), "values": [float(v) for v in sample.values],
               "event_counts": [int(e) for e in sample.event_counts],
               "singular_fraction": float(sample.singular_mask.mean())}
    return _render(meta, payload, None, "json")


def cmd_verify(cfg: RunConfig, spec: ModelSpec):
    from .verifier import fd_residual, initial_condition_check, symbol_root_check, system_cf_check

    alphas = cfg.alpha or [0.5, 1.0, 2.0]
    t = cfg.t_value if cfg.t is not None else 1.0
    jobs = {
        "symbol_root": lambda: symbol_root_check(spec, alphas,
                                                 operator=governing_operator(spec, cap=cfg.cap)),
        "system_cf": lambda: system_cf_check(spec, alphas, t),
    }
    if spec.n == 2 and all(abs(c.coef) == 1 for c in spec.components) and spec.components[0].coef == 1:
        sign = "+" if spec.components[1].coef == 1 else "-"
        p1, p2 = spec.params
        jobs["initial_condition"] = lambda: initial_condition_check(p1, p2, sign, alphas)
    if cfg.advisory and spec.n <= 2:
        jobs["fd_residual"] = lambda: fd_residual(spec)
    with ThreadPoolExecutor(max_workers=len(jobs)) as pool:
        futures = {name: pool.submit(fn) for name, fn in jobs.items()}
        reports = {name: fut.result() for name, fut in futures.items()}
    summary = []
    for name, rep in reports.items():
        summary.append({"check": rep.check_name, "status": rep.status, "advisory": rep.advisory,
                        "max_residual": rep.max_residual, "tolerance": rep.tolerance})
    ok = all(rep.passed for rep in reports.values() if not rep.advisory)
    payload = {"passed": ok, "checks": summary,
               "reports": {k: json.loads(r.to_json()) for k, r in reports.items()}}
    return payload, summary, ok


def cmd_kac(cfg: RunConfig, spec: ModelSpec | None):
    template = spec or ModelSpec.from_arrays([1, 1], [1, 1])
    rhos = cfg.rho or [1.0] * template.n
    scales = cfg.scales or [1.0, 10.0, 100.0]
    t = cfg.t_value if cfg.t is not None else 1.0
    table = kac_convergence(template, rhos, scales, t, cfg.samples, cfg.seed, workers=cfg.workers)
    rows = [{"scale": r.scale, "ks": r.ks, "mean": r.mean, "variance": r.variance,
             "count": r.count} for r in table]
    return {"rho": rhos, "rows": rows}, rows


def cmd_selftest(cfg: RunConfig, stdout):
    from .acceptance import run_acceptance

    results = run_acceptance(stream=stdout)
    failed = [r for r in results if r.blocking_failure]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed or advisory", file=stdout)
    return not failed


def run(cfg: RunConfig, stdout=None, stderr=None) -> int:
    """Execute one command; returns the process exit code."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        cfg.validate()
        if cfg.command == "selftest":
            return EXIT_OK if cmd_selftest(cfg, stdout) else EXIT_VALIDATION
        spec = load_spec(cfg.spec_path) if cfg.spec_path else None
        meta = _metadata(cfg, spec)
        ok = True
        if cfg.command == "simulate":
            _emit(cfg, cmd_simulate(cfg, spec, meta), stdout)
            return EXIT_OK
        if cfg.command == "derive-pde":
            payload, rows = cmd_derive_pde(cfg, spec)
        elif cfg.command == "atoms":
            payload, rows = cmd_atoms(cfg, spec)
        elif cfg.command == "density":
            payload, rows = cmd_density(cfg, spec)
        elif cfg.command == "cf":
            payload, rows = cmd_cf(cfg, spec)
        elif cfg.command == "verify":
            payload, rows, ok = cmd_verify(cfg, spec)
        else:
            payload, rows = cmd_kac(cfg, spec)
        _emit(cfg, _render(meta, payload, rows, cfg.fmt), stdout)
        return EXIT_OK if ok else EXIT_VALIDATION
    except UsageError as err:
        build_parser().print_usage(stderr)
        print(f"error: {err}", file=stderr)
        return EXIT_VALIDATION
    except SchemaError as err:
        where = f" (field: {err.field})" if err.field else ""
        print(f"schema error: {err}{where}", file=stderr)
        return EXIT_VALIDATION
    except (NumericalError, PrecisionError, BandwidthError) as err:
        print(f"numerical error: {err}", file=stderr)
        return EXIT_NUMERICAL
    except (TelegraphError, ValueError, OSError) as err:
        print(f"error: {err}", file=stderr)
        return EXIT_VALIDATION


def main(argv=None) -> int:
    return run(config_from_args(argv))


if __name__ == "__main__":
    sys.exit(main())
