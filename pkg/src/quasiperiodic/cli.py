"""Command-line front end.

Every command writes one artifact (CSV or JSON) that starts with a versioned
header. Identical invocations give identical bytes: grids are fixed, there is
no randomness, and parallel results are gathered in input order.

Exit status: 0 on success, 2 on usage errors, 3 on numeric failure. Failures
also print a one-line JSON error record on stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any

from . import analysis, bands, lyapunov
from .potential import AnalyticPotential, parse_potential
from .rationals import ContinuedFraction, PrecisionWarning, convergents, parse_frequency

SCHEMA_VERSION = 1
OUTPUT_DIR_ENV = "QUASIPERIODIC_OUTPUT_DIR"
BAND_HEADER = ["p", "q", "theta_tag", "a", "b"]

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3

COMMANDS = ("convergents", "spectrum", "measure", "lyapunov", "convergence", "probe-lemma1",
            "probe-lemma2", "probe-continuity", "upper-bound", "butterfly")


class UsageError(ValueError):
    pass


class NumericFailure(RuntimeError):
    def __init__(self, message: str, partial: "Artifact | None" = None, details: dict | None = None):
        super().__init__(message)
        self.partial = partial
        self.details = details or {}


@dataclass
class RunConfig:
    command: str
    potential: str = "am:2"
    alpha: str = "golden"
    tol: float = bands.DEFAULT_TOL
    depth: int | None = None
    k: int | None = None
    eps: float | None = None
    params: dict[str, Any] = field(default_factory=dict)
    output: str | None = None
    format: str = "csv"
    jobs: int = 1


@dataclass
class Artifact:
    """Tabular rows plus a JSON payload; the writer picks one by format."""

    header: list[str]
    rows: list[list[Any]]
    payload: Any
    notes: list[str] = field(default_factory=list)


# --------------------------------------------------------------------------- #
# formatting


def _cell(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return repr(x)
    return str(x)


def render(cfg: RunConfig, art: Artifact) -> str:
    if cfg.format == "json":
        doc = {"schema": f"quasiperiodic/v{SCHEMA_VERSION}", "command": cfg.command,
               "config": _config_record(cfg), "data": art.payload}
        return json.dumps(doc, sort_keys=True, indent=2, default=_json_default) + "\n"
    buf = io.StringIO()
    buf.write(f"# quasiperiodic v{SCHEMA_VERSION} {cfg.command} "
              + " ".join(f"{k}={v}" for k, v in _config_record(cfg).items()) + "\n")
    for note in art.notes:
        buf.write(f"# {note}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(art.header)
    for r in art.rows:
        w.writerow([_cell(x) for x in r])
    return buf.getvalue()


def _json_default(o):
    if isinstance(o, float) and not math.isfinite(o):
        return repr(o)
    if hasattr(o, "tolist"):
        return o.tolist()
    raise TypeError(f"not serializable: {type(o)}")


def _config_record(cfg: RunConfig) -> dict:
    rec = {"potential": cfg.potential, "alpha": cfg.alpha, "tol": cfg.tol}
    for key in ("depth", "k", "eps"):
        v = getattr(cfg, key)
        if v is not None:
            rec[key] = v
    rec.update({k: v for k, v in sorted(cfg.params.items()) if v is not None})
    return rec


def output_path(path: str | None) -> Path | None:
    """Relative paths land under $QUASIPERIODIC_OUTPUT_DIR when it is set."""
    if path is None or path == "-":
        return None
    p = Path(path)
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not p.is_absolute():
        p = Path(base) / p
    return p


def write_output(cfg: RunConfig, text: str) -> None:
    p = output_path(cfg.output)
    if p is None:
        sys.stdout.write(text)
        return
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(text)


# --------------------------------------------------------------------------- #
# argument helpers


def _potential(cfg: RunConfig) -> AnalyticPotential:
    try:
        return parse_potential(cfg.potential)
    except (OSError, ValueError, KeyError) as exc:
        raise UsageError(f"cannot parse potential {cfg.potential!r}: {exc}") from None


def _frequency(cfg: RunConfig, depth: int | None = None):
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", PrecisionWarning)
            a = parse_frequency(cfg.alpha) if depth is None else parse_frequency(cfg.alpha, max(depth, 40))
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"cannot parse frequency {cfg.alpha!r}: {exc}") from None
    if isinstance(a, Fraction) and not 0 < a <= 1:
        raise UsageError(f"frequency {cfg.alpha!r} must lie in (0, 1]")
    return a


def _rational(cfg: RunConfig) -> tuple[int, int]:
    """p/q given directly, or the depth-th convergent of an irrational frequency."""
    a = _frequency(cfg, cfg.depth)
    if isinstance(a, Fraction):
        return a.numerator, a.denominator
    if cfg.depth is None:
        raise UsageError("an irrational frequency needs --depth to pick a convergent")
    return _convergent_list(a, cfg.depth)[-1]


def _convergent_list(cf: ContinuedFraction, depth: int) -> list[tuple[int, int]]:
    try:
        return [(c.p, c.q) for c in convergents(cf, depth)]
    except (IndexError, OverflowError) as exc:
        raise UsageError(str(exc)) from None


def _float_alpha(cfg: RunConfig) -> float:
    a = _frequency(cfg)
    return float(a) if isinstance(a, Fraction) else a.value


def _cf(cfg: RunConfig) -> ContinuedFraction:
    a = _frequency(cfg, cfg.depth)
    if isinstance(a, Fraction):
        raise UsageError("this command needs an irrational frequency (named, decimal or coefficient list)")
    return a


def _require(cfg: RunConfig, name: str):
    v = getattr(cfg, name)
    if v is None:
        raise UsageError(f"--{name} is required for {cfg.command}")
    return v


def _energies(cfg: RunConfig) -> list[float]:
    E = cfg.params.get("energies")
    if not E:
        raise UsageError("--energies is required")
    return [float(x) for x in E.split(",")]


def _band_rows(p: int, q: int, tag: str, bs: bands.BandSet) -> list[list[Any]]:
    return [[p, q, tag, a, b] for a, b in bs.intervals]


# --------------------------------------------------------------------------- #
# commands


def cmd_convergents(cfg: RunConfig) -> Artifact:
    depth = _require(cfg, "depth")
    cf = _frequency(cfg, depth)
    if isinstance(cf, Fraction):
        cf = ContinuedFraction.from_coefficients(_fraction_coefficients(cf), terminated=True)
        depth = min(depth, len(cf))
    rows = [[n + 1, p, q, p / q] for n, (p, q) in enumerate(_convergent_list(cf, depth))]
    return Artifact(["n", "p", "q", "value"], rows,
                    [{"n": r[0], "p": r[1], "q": r[2], "value": r[3]} for r in rows])


def _fraction_coefficients(x: Fraction) -> list[int]:
    out = []
    while x and len(out) < 64:
        x = 1 / x
        a = math.floor(x)
        out.append(a)
        x -= a
    return out


def _spectrum_for(f: AnalyticPotential, p: int, q: int, tol: float, theta: float | None):
    if theta is None:
        return "union", bands.union_spectrum(f, (p, q), tol)
    return repr(float(theta)), bands.fixed_theta_spectrum(f, (p, q), theta, tol)


def cmd_spectrum(cfg: RunConfig) -> Artifact:
    f = _potential(cfg)
    p, q = _rational(cfg)
    tag, bs = _spectrum_for(f, p, q, cfg.tol, cfg.params.get("theta"))
    rows = _band_rows(p, q, tag, bs)
    payload = {"p": p, "q": q, "theta_tag": tag, "bands": [list(iv) for iv in bs.intervals],
               "unresolved_gaps": [list(g) for g in bs.unresolved_gaps], "measure": bs.measure()}
    return Artifact(BAND_HEADER, rows, payload)


def cmd_measure(cfg: RunConfig) -> Artifact:
    f = _potential(cfg)
    p, q = _rational(cfg)
    tag, bs = _spectrum_for(f, p, q, cfg.tol, cfg.params.get("theta"))
    m = bs.measure()
    return Artifact(["p", "q", "theta_tag", "measure", "bands"], [[p, q, tag, m, len(bs)]],
                    {"p": p, "q": q, "theta_tag": tag, "measure": m, "bands": len(bs)})


def cmd_lyapunov(cfg: RunConfig) -> Artifact:
    f = _potential(cfg)
    alpha = _float_alpha(cfg)
    Es = _energies(cfg)
    schedule = tuple(int(x) for x in (cfg.params.get("schedule") or "").split(",") if x) or lyapunov.DEFAULT_SCHEDULE
    grid = cfg.params.get("theta_grid") or lyapunov.DEFAULT_THETA_GRID
    try:
        ests = lyapunov.gamma_sweep(f, alpha, Es, schedule, grid, workers=cfg.jobs)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    mus = [lyapunov.gamma_mu(f, alpha, E, cfg.k, grid) if cfg.k else None for E in Es]
    rows = [[e.E, e.gamma, e.uncertainty, mu, len(e.monotone_violations)] for e, mu in zip(ests, mus)]
    payload = [dict(asdict(e), gamma_mu=mu) for e, mu in zip(ests, mus)]
    return Artifact(["E", "gamma", "uncertainty", "gamma_mu", "monotone_violations"], rows, payload)


def cmd_convergence(cfg: RunConfig) -> Artifact:
    f = _potential(cfg)
    depth = _require(cfg, "depth")
    table = analysis.measure_convergence(f, _cf(cfg), depth, cfg.tol)
    rows = [[r.n, r.p, r.q, math.nan if r.failed else r.measure, r.residual] for r in table.rows]
    art = Artifact(["n", "p", "q", "measure", "residual"], rows, asdict(table))
    failed = [r for r in table.rows if r.failed]
    if failed:
        raise NumericFailure(f"band computation failed for {len(failed)} row(s)", art,
                             {"rows": [(r.p, r.q, r.error) for r in failed]})
    return art


def cmd_probe_lemma1(cfg: RunConfig) -> Artifact:
    f = _potential(cfg)
    alpha = _float_alpha(cfg)
    eps_prime = cfg.eps if cfg.eps is not None else 0.15
    k_min = cfg.params.get("k_min") or cfg.k
    k_max = cfg.params.get("k_max") or k_min
    if k_min is None:
        raise UsageError("probe-lemma1 needs --k or --k-min/--k-max")
    if k_min < 2 or k_max < k_min:
        raise UsageError("need 2 <= k-min <= k-max")
    sweep = analysis.lemma1_sweep(f, alpha, cfg.params.get("theta") or 0.0, _energies(cfg),
                                  range(k_min, k_max + 1), eps_prime,
                                  window_constant=cfg.params.get("window_constant"), workers=cfg.jobs)
    rows = [[r.E, r.k, r.window_length, r.found_m, r.log_value_at_m, r.log_threshold, r.log_max, r.gamma]
            for r in sweep.reports]
    notes = [f"window_constant={sweep.window_constant!r} ({sweep.constant_label})",
             f"frequency: {sweep.frequency}",
             f"triple_pattern={_cell(sweep.triple_pattern())}"]
    payload = json.loads(sweep.to_json())
    return Artifact(["E", "k", "window", "found_m", "log_value", "log_threshold", "log_max", "gamma"],
                    rows, payload, notes)


def cmd_probe_lemma2(cfg: RunConfig) -> Artifact:
    f = _potential(cfg)
    alpha = _float_alpha(cfg)
    k = _require(cfg, "k")
    eps = _require(cfg, "eps")
    if eps <= 0:
        raise UsageError("--eps must be positive")
    reports = [analysis.lemma2_sup(f, alpha, E, k, eps, cfg.params.get("z_grid")) for E in _energies(cfg)]
    rows = [[r.E, r.k, r.z_grid, r.log_max, r.log_bound, r.passed, r.doubled_ratio, r.doubling_stable]
            for r in reports]
    return Artifact(["E", "k", "z_grid", "log_max", "log_bound", "passed", "doubled_ratio", "doubling_stable"],
                    rows, [asdict(r) for r in reports])


def cmd_probe_continuity(cfg: RunConfig) -> Artifact:
    f = _potential(cfg)
    depth = _require(cfg, "depth")
    first = cfg.params.get("first") or 1
    pqs = _convergent_list(_cf(cfg), depth)[first - 1:]
    if len(pqs) < 2:
        raise UsageError("need at least two convergents (check --first and --depth)")
    sweep = analysis.continuity_sweep(f, pqs, cfg.tol)
    rows = [[r.alpha1[0], r.alpha1[1], r.alpha2[0], r.alpha2[1], r.delta_alpha, r.d,
             r.bound_theorem3, r.bound_holder_half, r.resolution_limited] for r in sweep.reports]
    notes = [f"c={sweep.c!r} c_H={sweep.c_H!r} c_log1={sweep.c_log1!r}",
             f"fit_residual={sweep.fit_residual!r} fit_residual_H={sweep.fit_residual_H!r}"
             + ("" if sweep.exponent is None else f" exponent={sweep.exponent!r}")]
    return Artifact(["p1", "q1", "p2", "q2", "delta_alpha", "d", "bound_log3", "bound_holder_half",
                     "resolution_limited"], rows, json.loads(sweep.to_json()), notes)


def cmd_upper_bound(cfg: RunConfig) -> Artifact:
    f = _potential(cfg)
    cf = _cf(cfg)
    ns = cfg.params.get("n") or ([cfg.depth] if cfg.depth else None)
    if not ns:
        raise UsageError("upper-bound needs --n or --depth")
    c = cfg.params.get("c", 1.0)
    delta = cfg.params.get("delta", 0.0)
    try:
        reports = [analysis.spectrum_upper_bound(f, cf, int(n), c, delta, cfg.tol) for n in ns]
    except (ValueError, IndexError) as exc:
        raise UsageError(str(exc)) from None
    rows = [[r.n, r.p, r.q, r.delta_alpha, r.measure, r.second_addend, r.bound, r.constructive_bound]
            for r in reports]
    return Artifact(["n", "p", "q", "delta_alpha", "measure", "second_addend", "bound", "constructive_bound"],
                    rows, [asdict(r) for r in reports])


def butterfly_fractions(qmax: int) -> list[tuple[int, int]]:
    return [(p, q) for q in range(1, qmax + 1) for p in range(1, q + 1) if math.gcd(p, q) == 1]


def _butterfly_task(args):
    f, p, q, tol = args
    try:
        return p, q, bands.union_spectrum(f, (p, q), tol), None
    except bands.BandComputationError as exc:
        return p, q, None, str(exc)


def cmd_butterfly(cfg: RunConfig) -> Artifact:
    f = _potential(cfg)
    qmax = cfg.params.get("qmax")
    if not qmax or qmax < 1:
        raise UsageError("--qmax must be a positive integer")
    tasks = [(f, p, q, cfg.tol) for p, q in butterfly_fractions(qmax)]
    if cfg.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as ex:
            results = list(ex.map(_butterfly_task, tasks, chunksize=4))
    else:
        results = [_butterfly_task(t) for t in tasks]
    rows, payload, errors = [], [], []
    for p, q, bs, err in results:
        if err is not None:
            errors.append({"p": p, "q": q, "error": err})
            continue
        rows.extend(_band_rows(p, q, "union", bs))
        payload.append({"p": p, "q": q, "bands": [list(iv) for iv in bs.intervals]})
    art = Artifact(BAND_HEADER, rows, payload)
    if errors:
        raise NumericFailure(f"{len(errors)} fraction(s) failed", art, {"failures": errors})
    return art


HANDLERS = {
    "convergents": cmd_convergents,
    "spectrum": cmd_spectrum,
    "measure": cmd_measure,
    "lyapunov": cmd_lyapunov,
    "convergence": cmd_convergence,
    "probe-lemma1": cmd_probe_lemma1,
    "probe-lemma2": cmd_probe_lemma2,
    "probe-continuity": cmd_probe_continuity,
    "upper-bound": cmd_upper_bound,
    "butterfly": cmd_butterfly,
}


def _error_record(kind: str, message: str, details: dict | None = None) -> None:
    rec = {"error": kind, "message": message}
    if details:
        rec["details"] = details
    print(json.dumps(rec, sort_keys=True, default=str), file=sys.stderr)


def dispatch(cfg: RunConfig) -> int:
    try:
        if cfg.command not in HANDLERS:
            raise UsageError(f"unknown command {cfg.command!r}")
        if not cfg.tol > 0:
            raise UsageError("--tol must be positive")
        if cfg.format not in ("csv", "json"):
            raise UsageError("--format must be csv or json")
        art = HANDLERS[cfg.command](cfg)
    except UsageError as exc:
        _error_record("usage", str(exc))
        return EXIT_USAGE
    except NumericFailure as exc:
        if exc.partial is not None:
            write_output(cfg, render(cfg, exc.partial))
        _error_record("numeric", str(exc), exc.details)
        return EXIT_NUMERIC
    except bands.BandComputationError as exc:
        _error_record("numeric", str(exc), getattr(exc, "details", None))
        return EXIT_NUMERIC
    write_output(cfg, render(cfg, art))
    return EXIT_OK


# --------------------------------------------------------------------------- #
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--potential", default="am:2", help="am:<lambda>, zero, or a potential JSON file")
    common.add_argument("--alpha", default="golden",
                        help="p/q, decimal, golden, silver, or a comma-separated coefficient list")
    common.add_argument("--tol", type=float, default=bands.DEFAULT_TOL)
    common.add_argument("--depth", type=int)
    common.add_argument("--k", type=int)
    common.add_argument("--eps", type=float)
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--output", help=f"output file (relative paths honour ${OUTPUT_DIR_ENV}); default stdout")
    common.add_argument("--jobs", type=int, default=os.cpu_count() or 1)

    parser = argparse.ArgumentParser(prog="quasiperiodic", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sp = {name: sub.add_parser(name, parents=[common]) for name in COMMANDS}
    for name in ("spectrum", "measure"):
        sp[name].add_argument("--theta", type=float, help="fixed phase; default is the union over phases")
    for name in ("lyapunov", "probe-lemma1", "probe-lemma2"):
        sp[name].add_argument("--energies", required=True, help="comma-separated energies")
    sp["lyapunov"].add_argument("--schedule", help="comma-separated n values")
    sp["lyapunov"].add_argument("--theta-grid", type=int)
    sp["probe-lemma1"].add_argument("--k-min", type=int)
    sp["probe-lemma1"].add_argument("--k-max", type=int)
    sp["probe-lemma1"].add_argument("--window-constant", type=float)
    sp["probe-lemma1"].add_argument("--theta", type=float)
    sp["probe-lemma2"].add_argument("--z-grid", type=int)
    sp["probe-continuity"].add_argument("--first", type=int, help="index of the first convergent used")
    sp["upper-bound"].add_argument("--n", type=int, nargs="+")
    sp["upper-bound"].add_argument("--c", type=float, default=1.0)
    sp["upper-bound"].add_argument("--delta", type=float, default=0.0)
    sp["butterfly"].add_argument("--qmax", type=int, required=True)
    return parser


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    base = {"command", "potential", "alpha", "tol", "depth", "k", "eps", "format", "output", "jobs"}
    params = {k: v for k, v in vars(ns).items() if k not in base}
    return RunConfig(ns.command, ns.potential, ns.alpha, ns.tol, ns.depth, ns.k, ns.eps, params,
                     ns.output, ns.format, max(1, ns.jobs))


def main(argv: list[str] | None = None) -> int:
    ns = build_parser().parse_args(argv)
    return dispatch(config_from_args(ns))


if __name__ == "__main__":
    sys.exit(main())
