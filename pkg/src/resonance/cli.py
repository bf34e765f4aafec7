"""Command line entry point: ``resonance <command> <spec> [options]``.

Exit codes: 0 success or condition holds, 2 condition violated, 3 no
convergence (or a stored solution failing verification), 4 invalid spec.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass

import numpy as np

from . import __version__
from .config import dump_spec, load_spec
from .engine import SolveOptions, residual, solve
from .errors import ConfigurationError, NonOrthogonalForcing, ResonanceError, ResonantModeNonOrthogonal, SpecificationError
from .problem import SYSTEM_FAMILIES, ProblemSpec
from .report import (
    ReportIOError, condition_dict, document, dumps, read_solution_csv, solution_csv, solve_dict,
    sweep_csv, write_text,
)
from .solvability import check_problem, cosine_sign_split
from .spectral import make_basis, resolvent_solve

EXIT_OK, EXIT_VIOLATED, EXIT_NO_CONVERGENCE, EXIT_INVALID = 0, 2, 3, 4
COMMANDS = ("check", "solve", "sweep", "verify", "selftest")
REFINE_TOL = 1e-3


@dataclass(frozen=True)
class RunConfig:
    command: str
    spec_path: str | None
    modes: int | None = None
    tol: float = 1e-8
    max_iter: int = 500
    relax: float = 0.5
    accel: str = "none"
    gate: bool = False
    sweep: tuple | None = None  # (parameter, from, to, steps)
    refine: bool = False
    json_path: str | None = None
    csv_path: str | None = None
    quiet: bool = False

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigurationError(f"unknown command {self.command!r}")
        if self.command != "selftest" and not self.spec_path:
            raise ConfigurationError(f"{self.command} needs a spec file")
        if self.sweep is not None:
            _, lo, hi, steps = self.sweep
            if not (math.isfinite(lo) and math.isfinite(hi)):
                raise ConfigurationError("sweep bounds must be finite")
            if steps < 2:
                raise ConfigurationError("sweep needs at least 2 steps")
        if self.modes is not None and self.modes < 1:
            raise ConfigurationError("--modes must be positive")
        self.options()  # SolveOptions enforces its own invariants

    def options(self) -> SolveOptions:
        return SolveOptions(tol=self.tol, max_iter=self.max_iter, relax=self.relax, accel=self.accel, gate=self.gate)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_INVALID)


def _sweep_arg(text: str):
    parts = text.split(":")
    if len(parts) != 4:
        raise argparse.ArgumentTypeError("expected param:from:to:steps")
    try:
        return parts[0], float(parts[1]), float(parts[2]), int(parts[3])
    except ValueError:
        raise argparse.ArgumentTypeError("sweep bounds must be numbers and steps an integer") from None


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="resonance", description="Solvability checks and solvers for resonant boundary value problems.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("spec", nargs="?", help="problem spec file (not needed for selftest)")
    p.add_argument("--modes", type=int, help="override the number of modes")
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--max-iter", type=int, default=500, dest="max_iter")
    p.add_argument("--relax", type=float, default=0.5)
    p.add_argument("--accel", choices=("anderson", "none"), default="none")
    p.add_argument("--gate", action="store_true", help="skip solving when the solvability condition fails")
    p.add_argument("--sweep", type=_sweep_arg, help="param:from:to:steps; param is amp or forcing.<key>")
    p.add_argument("--refine", action="store_true", help="bisect verdict flips found by the sweep")
    p.add_argument("--json", dest="json_path", help="write the JSON report here")
    p.add_argument("--csv", dest="csv_path", help="solution/sweep CSV to write (verify: to read)")
    p.add_argument("--quiet", action="store_true", help="omit run metadata for byte-identical output")
    return p


def parse_args(argv) -> RunConfig:
    ns = build_parser().parse_args(argv)
    try:
        return RunConfig(
            command=ns.command, spec_path=ns.spec, modes=ns.modes, tol=ns.tol, max_iter=ns.max_iter,
            relax=ns.relax, accel=ns.accel, gate=ns.gate, sweep=ns.sweep, refine=ns.refine,
            json_path=ns.json_path, csv_path=ns.csv_path, quiet=ns.quiet,
        )
    except ConfigurationError as exc:
        print(f"resonance: error: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_INVALID) from None


# commands -------------------------------------------------------------------

def describe_form(problem: ProblemSpec) -> str | None:
    if problem.family not in SYSTEM_FAMILIES:
        return None
    from .systems import canonical_reduce

    form = canonical_reduce(problem.coupling_matrix())
    l1, l2 = (float(v) for v in form.eigenvalues)
    if form.kind == "jordan":
        return f"jordan({l1:.17g})"
    return f"diagonal({l1:.17g}, {l2:.17g})"


def spec_echo(problem: ProblemSpec) -> dict:
    echo = {"family": problem.family, "domain": problem.domain, "modes": int(problem.n_modes), "grid": problem.grid}
    form = describe_form(problem)
    if form is not None:
        echo["canonical"] = form
    echo["text"] = dump_spec(problem)
    return echo


def _exit_for_conditions(reports) -> int:
    # a boundary verdict does not establish the strict inequality
    return EXIT_OK if all(r.verdict == "holds" for r in reports) else EXIT_VIOLATED


def _exit_for_status(status: str) -> int:
    return {"converged": EXIT_OK, "condition_violated": EXIT_VIOLATED}.get(status, EXIT_NO_CONVERGENCE)


def run_check(problem, cfg):
    reports = check_problem(problem)
    return {"conditions": [condition_dict(r) for r in reports]}, _exit_for_conditions(reports)


def _solve_or_violated(problem, opts):
    """Solve, mapping a failed Fredholm alternative to a violated condition."""
    try:
        return solve(problem, opts), None
    except (NonOrthogonalForcing, ResonantModeNonOrthogonal) as exc:
        return None, str(exc)


def run_solve(problem, cfg):
    rep, err = _solve_or_violated(problem, cfg.options())
    if rep is None:
        return {"status": "condition_violated", "notes": [err]}, EXIT_VIOLATED
    if cfg.csv_path:
        write_text(cfg.csv_path, solution_csv(problem, rep.solution))
    return solve_dict(rep), _exit_for_status(rep.status)


def run_verify(problem, cfg):
    if not cfg.csv_path:
        raise SpecificationError("verify needs --csv with a stored solution", key="csv")
    fields = read_solution_csv(cfg.csv_path, problem)
    r_l2, r_sup = residual(problem, fields)
    ok = r_l2 <= cfg.tol
    return {"residual_l2": r_l2, "residual_sup": r_sup, "tol": cfg.tol, "verified": ok}, (
        EXIT_OK if ok else EXIT_NO_CONVERGENCE
    )


def _sweep_key(problem, param: str) -> str:
    if param in ("amp", "a", "amplitude"):
        return problem.primary_forcing_key
    if param.startswith("forcing."):
        return param.split(".", 1)[1]
    raise SpecificationError(f"cannot sweep {param!r}; use amp or forcing.<key>", key="sweep")


def _sweep_point(problem, key, amp, opts):
    scaled = problem.with_forcing_scaled(key, amp)
    reports = check_problem(scaled)
    margin = min((r.margin for r in reports), default=None)
    verdict = None
    if reports:
        verdict = "fails" if any(r.verdict == "fails" for r in reports) else (
            "holds" if all(r.verdict == "holds" for r in reports) else "boundary"
        )
    rep, err = _solve_or_violated(scaled, opts)
    if rep is None:
        return dict(amplitude=amp, margin=margin, verdict=verdict, status=EXIT_VIOLATED, residual=math.nan, iterations=0)
    return dict(
        amplitude=amp, margin=margin, verdict=verdict, status=_exit_for_status(rep.status),
        residual=rep.residual_l2, iterations=rep.iterations,
    )


def _bisect_flip(problem, key, lo, hi, tol=REFINE_TOL):
    """Bracket the amplitude where the condition's verdict changes."""

    def holds(a):
        reps = check_problem(problem.with_forcing_scaled(key, a))
        return all(r.verdict == "holds" for r in reps)

    h_lo = holds(lo)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if holds(mid) == h_lo:
            lo = mid
        else:
            hi = mid
    return lo, hi


def run_sweep(problem, cfg):
    if cfg.sweep is None:
        raise SpecificationError("sweep needs --sweep param:from:to:steps", key="sweep")
    param, lo, hi, steps = cfg.sweep
    key = _sweep_key(problem, param)
    amps = np.linspace(lo, hi, steps)
    opts = cfg.options()
    rows = [_sweep_point(problem, key, float(a), opts) for a in amps]
    rows.sort(key=lambda r: r["amplitude"])
    result = {"parameter": param, "forcing": key, "rows": rows}
    if cfg.refine:
        flips = []
        for a, b in zip(rows[:-1], rows[1:]):
            if a["verdict"] and b["verdict"] and (a["verdict"] == "holds") != (b["verdict"] == "holds"):
                left, right = _bisect_flip(problem, key, a["amplitude"], b["amplitude"])
                flips.append({"from": a["verdict"], "to": b["verdict"], "bracket": [left, right],
                              "estimate": 0.5 * (left + right)})
        result["thresholds"] = flips
    if cfg.csv_path:
        write_text(cfg.csv_path, sweep_csv(rows))
    return result, EXIT_OK


def selftest_checks() -> list[dict]:
    """Built-in oracle suite: sign-split integrals, Parseval, resolvent identity."""
    out = []
    worst = 0.0
    for n in range(1, 9):
        for delta in np.arange(0.0, 6.0 + 1e-12, 0.3):
            p, m = cosine_sign_split(n, float(delta))
            worst = max(worst, abs(p - 2.0), abs(m + 2.0))
    out.append({"name": "sign_split_integrals", "error": worst, "tol": 1e-8, "passed": worst < 1e-8})

    rng = np.random.default_rng(12345)
    worst = 0.0
    for kind, n in (("interval", 16), ("circle", 8), ("square", 6)):
        b = make_basis(kind, n)
        for _ in range(5):
            f = b.from_coeffs(rng.standard_normal(b.size))
            worst = max(worst, abs(f.quadrature_l2() - f.l2_norm()) / f.l2_norm())
    out.append({"name": "parseval", "error": worst, "tol": 1e-12, "passed": worst < 1e-12})

    worst = 0.0
    for kind, n in (("interval", 16), ("circle", 8), ("square", 6)):
        b = make_basis(kind, n)
        for grp in b.groups[:3]:
            c = rng.standard_normal(b.size)
            c[list(grp.members)] = 0.0
            f = b.from_coeffs(c)
            u = resolvent_solve(b, grp.value, f)
            r = (grp.value - b.eigenvalues) * u.coeffs - f.coeffs
            worst = max(worst, float(np.max(np.abs(r))), float(np.max(np.abs(u.coeffs[list(grp.members)]))))
    out.append({"name": "resolvent_identity", "error": worst, "tol": 1e-12, "passed": worst < 1e-12})
    return out


def run(cfg: RunConfig) -> int:
    """Execute one command; returns the exit code and writes the artifacts."""
    try:
        if cfg.command == "selftest":
            checks = selftest_checks()
            code = EXIT_OK if all(c["passed"] for c in checks) else EXIT_NO_CONVERGENCE
            _emit(cfg, document("selftest", {}, {"checks": checks}, code, cfg.quiet, __version__))
            return code
        problem = load_spec(cfg.spec_path)
        if cfg.modes is not None:
            problem = problem.with_modes(cfg.modes).validate()
        handler = {"check": run_check, "solve": run_solve, "verify": run_verify, "sweep": run_sweep}[cfg.command]
        result, code = handler(problem, cfg)
        _emit(cfg, document(cfg.command, spec_echo(problem), result, code, cfg.quiet, __version__))
        return code
    except ReportIOError as exc:
        print(f"resonance: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (SpecificationError, ConfigurationError) as exc:
        print(f"resonance: invalid spec: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ResonanceError as exc:
        print(f"resonance: error: {exc}", file=sys.stderr)
        return EXIT_INVALID


def _emit(cfg: RunConfig, doc: dict):
    text = dumps(doc)
    if cfg.json_path:
        write_text(cfg.json_path, text)
        if not cfg.quiet:
            print(f"{doc['command']}: exit {doc['exit_code']}; report written to {cfg.json_path}")
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    cfg = parse_args(sys.argv[1:] if argv is None else argv)
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
