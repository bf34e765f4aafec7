"""Lyapunov-Schmidt fixed-point solvers for resonant scalar and periodic problems.

The solution is split as ``u = sum xi_i phi_i + U`` with ``U`` orthogonal to
the resonant eigenspace.  One sweep of the map evaluates the nonlinearity at
the current state ``(eta, V)``, solves the complement equation exactly with
the resolvent, and then moves the kernel coordinates by

    xi_i = eta_i + relax * (A_i - <N(sum eta_i phi_i + U), phi_i>)

where ``A_i`` are the forcing's kernel coefficients and ``N`` is ``g(u)``
(or ``g(u) u'`` for the damped oscillator).  Existence theory does not
promise that plain iteration converges, so the driver offers damping,
Anderson mixing and explicit divergence/drift detection.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigurationError, SpecificationError
from .problem import PERIODIC_FAMILIES, SCALAR_FAMILIES, SYSTEM_FAMILIES, ProblemSpec
from .solvability import check_problem
from .spectral import EigenGroup, Field, SpectralBasis, apply_pointwise, resolvent_solve

log = logging.getLogger(__name__)

DIVERGENCE_BOUND = 1e6
GROWTH_FACTOR = 1e3


@dataclass(frozen=True)
class SolveOptions:
    tol: float = 1e-8
    max_iter: int = 500
    relax: float = 0.5
    accel: str = "none"
    depth: int = 5
    gate: bool = False
    init: object = None
    divergence_bound: float = DIVERGENCE_BOUND
    drift_window: int = 50
    burn_in: int = 20

    def __post_init__(self):
        if not self.tol > 0:
            raise ConfigurationError("tol must be positive")
        if not 0 < self.relax <= 1:
            raise ConfigurationError("relax must lie in (0, 1]")
        if self.max_iter < 1:
            raise ConfigurationError("max_iter must be at least 1")
        if self.accel not in ("none", "anderson"):
            raise ConfigurationError(f"unknown acceleration {self.accel!r}")
        if self.depth < 1:
            raise ConfigurationError("anderson depth must be at least 1")


@dataclass
class LSState:
    """Kernel coordinates plus the complement field, with the iteration trace."""

    xi: np.ndarray
    U: Field
    iteration: int = 0
    history: list = field(default_factory=list)


@dataclass(frozen=True)
class SolveReport:
    status: str  # converged | max_iter | diverged | condition_violated
    solution: dict
    residual_l2: float
    residual_sup: float
    iterations: int
    condition: tuple = ()
    trace: tuple = ()
    xi: tuple = ()
    notes: tuple = ()
    extras: dict = field(default_factory=dict)

    @property
    def converged(self) -> bool:
        return self.status == "converged"


# generic driver -----------------------------------------------------------------

class FixedPointMap:
    """Interface used by :func:`iterate`.

    ``x`` is a flat vector; ``kernel(x)`` returns the resonant coordinates
    (used for drift detection and the trace), ``step`` applies the relaxed
    map once and ``residual`` returns the (L2, sup) residual of the PDE.
    """

    def step(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def residual(self, x: np.ndarray) -> tuple[float, float]:
        raise NotImplementedError

    def kernel(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def fields(self, x: np.ndarray) -> dict:
        raise NotImplementedError


class Anderson:
    """Type-II Anderson mixing on the fixed-point residual ``T(x) - x``."""

    def __init__(self, depth: int):
        self.depth = depth
        self.xs: list[np.ndarray] = []
        self.fs: list[np.ndarray] = []

    def update(self, x: np.ndarray, tx: np.ndarray) -> np.ndarray:
        f = tx - x
        self.xs.append(x.copy())
        self.fs.append(f)
        if len(self.xs) > self.depth + 1:
            self.xs.pop(0)
            self.fs.pop(0)
        if len(self.xs) < 2:
            return tx
        dF = np.column_stack([b - a for a, b in zip(self.fs[:-1], self.fs[1:])])
        dX = np.column_stack([b - a for a, b in zip(self.xs[:-1], self.xs[1:])])
        gamma, *_ = np.linalg.lstsq(dF, f, rcond=1e-12)
        out = tx - (dX + dF) @ gamma
        if not np.all(np.isfinite(out)):
            self.xs, self.fs = [], []
            return tx
        return out


def _drifting(norms: list[float], residuals: list[float], opts: SolveOptions) -> bool:
    w = opts.drift_window
    if len(norms) < opts.burn_in + w + 1:
        return False
    tail = np.asarray(norms[-(w + 1):])
    if not np.all(np.diff(tail) > 0):
        return False
    return residuals[-1] >= 0.9 * residuals[-(w + 1)]


def iterate(fp: FixedPointMap, x0: np.ndarray, opts: SolveOptions):
    """Run the relaxed map until the residual drops below ``opts.tol``.

    Returns ``(status, x, iterations, trace, (res_l2, res_sup))``; each trace
    entry is ``(|d xi|, |d U|, residual, |xi|)`` for one sweep.
    """
    x = np.array(x0, dtype=float)
    accel = Anderson(opts.depth) if opts.accel == "anderson" else None
    trace = []
    norms, residuals = [], []
    best = np.inf
    status = "max_iter"
    it = 0
    res = fp.residual(x)
    while True:
        residuals.append(res[0])
        norms.append(float(np.linalg.norm(fp.kernel(x))))
        best = min(best, res[0])
        if res[0] <= opts.tol:
            status = "converged"
            break
        if it >= opts.max_iter:
            break
        if norms[-1] > opts.divergence_bound or res[0] > GROWTH_FACTOR * best:
            status = "diverged"
            break
        if _drifting(norms, residuals, opts):
            status = "diverged"
            break
        tx = fp.step(x)
        x_new = accel.update(x, tx) if accel is not None else tx
        k_old, k_new = fp.kernel(x), fp.kernel(x_new)
        d_rest = float(np.linalg.norm((x_new - x)[k_old.size:]))
        x = x_new
        it += 1
        res = fp.residual(x)
        trace.append((float(np.linalg.norm(k_new - k_old)), d_rest, res[0], float(np.linalg.norm(k_new))))
    return status, x, it, trace, res


# scalar and periodic families ----------------------------------------------------

class ScalarLS(FixedPointMap):
    """Lyapunov-Schmidt map for ``Delta u + shift u + N(u) = f`` resonant on ``group``."""

    def __init__(
        self,
        basis: SpectralBasis,
        group: EigenGroup,
        shift: float,
        nonlinear: Callable[[Field], Field],
        forcing: Field,
        relax: float,
    ):
        self.basis = basis
        self.group = group
        self.idx = np.array(group.members)
        self.shift = shift
        self.nonlinear = nonlinear
        self.forcing = forcing
        self.relax = relax
        self.A = forcing.coeffs[self.idx].copy()
        e = forcing.coeffs.copy()
        e[self.idx] = 0.0
        self.e = e
        self.m = len(self.idx)

    def unpack(self, x):
        xi = x[: self.m]
        U = x[self.m:].copy()
        U[self.idx] = 0.0
        return xi, U

    def assemble(self, xi, U) -> Field:
        c = np.array(U, dtype=float)
        c[self.idx] = xi
        return self.basis.from_coeffs(c)

    def complement(self, eta, V) -> np.ndarray:
        gv = self.nonlinear(self.assemble(eta, V))
        rhs = self.e - gv.coeffs
        rhs[self.idx] = 0.0  # the kernel part of the right side cancels exactly
        U = resolvent_solve(self.basis, self.shift, self.basis.from_coeffs(rhs), orthogonal_to=self.group)
        return np.array(U.coeffs)

    def step(self, x):
        eta, V = self.unpack(x)
        U = self.complement(eta, V)
        proj = self.nonlinear(self.assemble(eta, U)).coeffs[self.idx]
        xi = eta + self.relax * (self.A - proj)
        return np.concatenate([xi, U])

    def kernel(self, x):
        return x[: self.m]

    def residual(self, x):
        xi, U = self.unpack(x)
        return operator_residual(self.basis, self.shift, self.nonlinear, self.assemble(xi, U), self.forcing)

    def fields(self, x):
        xi, U = self.unpack(x)
        return {"u": self.assemble(xi, U)}

    def state(self, x, it=0, history=None) -> LSState:
        xi, U = self.unpack(x)
        return LSState(np.array(xi), self.basis.from_coeffs(U), it, list(history or []))


def operator_residual(basis, shift, nonlinear, u: Field, f: Field) -> tuple[float, float]:
    """Norms of (Delta + shift) u + N(u) - f, assembled in coefficients."""
    r = (shift - basis.eigenvalues) * u.coeffs + nonlinear(u).coeffs - f.coeffs
    rf = basis.from_coeffs(r)
    return rf.l2_norm(), rf.sup_norm()


def nonlinear_operator(problem: ProblemSpec) -> Callable[[Field], Field]:
    """Pointwise nonlinear term of a scalar or periodic family as a map on fields."""
    basis = problem.basis()
    g = problem.nonlinearities["g"]
    if problem.family == "periodic_damped":
        gf = g.func
        return lambda u: apply_pointwise(basis, lambda s, ds: gf(s) * ds, [u], with_derivative=True)
    gf = g.func
    return lambda u: apply_pointwise(basis, gf, [u])


def resonant_setup(problem: ProblemSpec):
    basis = problem.basis()
    if problem.family in PERIODIC_FAMILIES:
        n = int(problem.n)
        return basis, basis.group_for(n), float(n * n)
    grp = basis.group_for(problem.k)
    return basis, grp, grp.value


def _conditions(problem: ProblemSpec, opts: SolveOptions):
    conds = tuple(check_problem(problem))
    # a boundary verdict does not establish the strict inequality either
    return conds, bool(opts.gate and any(c.verdict != "holds" for c in conds))


def _blocked_report(problem, conds, fields, res):
    return SolveReport(
        status="condition_violated",
        solution=fields,
        residual_l2=res[0],
        residual_sup=res[1],
        iterations=0,
        condition=conds,
        notes=("solvability condition not established; solve skipped (gated)",),
    )


def _initial_vector(fp: ScalarLS, init) -> np.ndarray:
    if init is None:
        return np.zeros(fp.m + fp.basis.size)
    if isinstance(init, LSState):
        return np.concatenate([np.asarray(init.xi, dtype=float), init.U.coeffs])
    if isinstance(init, Field):
        c = init.coeffs
        return np.concatenate([c[fp.idx], c])
    raise ConfigurationError("init must be an LSState or a Field")


def _finish(fp, status, x, it, trace, res, conds, extra_notes=()):
    notes = list(extra_notes)
    if status in ("max_iter", "diverged") and conds and all(c.verdict == "holds" for c in conds):
        notes.append("no convergence; the solvability condition holds, so a solution exists")
    return SolveReport(
        status=status,
        solution=fp.fields(x),
        residual_l2=res[0],
        residual_sup=res[1],
        iterations=it,
        condition=conds,
        trace=tuple(trace),
        xi=tuple(float(v) for v in fp.kernel(x)),
        notes=tuple(notes),
    )


def _solve_resonant(problem: ProblemSpec, opts: SolveOptions, families) -> SolveReport:
    if problem.family not in families:
        raise SpecificationError(f"family {problem.family!r} is not handled here", key="family")
    basis, group, shift = resonant_setup(problem)
    fp = ScalarLS(basis, group, shift, nonlinear_operator(problem), problem.forcing("f"), opts.relax)
    x0 = _initial_vector(fp, opts.init)
    conds, blocked = _conditions(problem, opts)
    if blocked:
        return _blocked_report(problem, conds, fp.fields(x0), fp.residual(x0))
    status, x, it, trace, res = iterate(fp, x0, opts)
    return _finish(fp, status, x, it, trace, res, conds)


def solve_scalar_resonant(problem: ProblemSpec, opts: SolveOptions = SolveOptions()) -> SolveReport:
    """Scalar Dirichlet problem resonant at a simple eigenvalue."""
    return _solve_resonant(problem, opts, ("scalar_resonant",))


def solve_multi_resonant(problem: ProblemSpec, opts: SolveOptions = SolveOptions()) -> SolveReport:
    """Scalar Dirichlet problem resonant at an eigenvalue of any multiplicity."""
    return _solve_resonant(problem, opts, SCALAR_FAMILIES)


def solve_periodic(problem: ProblemSpec, opts: SolveOptions = SolveOptions()) -> SolveReport:
    """2 pi periodic oscillators resonant at frequency n (plain, damped, sign-type)."""
    return _solve_resonant(problem, opts, PERIODIC_FAMILIES)


def residual(problem: ProblemSpec, candidate) -> tuple[float, float]:
    """(L2, sup) residual of ``candidate`` for the problem's equation(s).

    ``candidate`` is a Field for scalar and periodic families and a pair
    ``(u, v)`` (or a dict with keys ``u``, ``v``) for systems.
    """
    if problem.family in SYSTEM_FAMILIES:
        from .systems import system_residual

        if isinstance(candidate, dict):
            candidate = (candidate["u"], candidate["v"])
        if not (isinstance(candidate, (tuple, list)) and len(candidate) == 2):
            raise SpecificationError("system residuals need a (u, v) pair", key="family")
        return system_residual(problem, *candidate)
    if isinstance(candidate, dict):
        candidate = candidate["u"]
    if not isinstance(candidate, Field):
        raise SpecificationError("scalar residuals need a single field", key="family")
    basis, _, shift = resonant_setup(problem)
    if candidate.basis is not basis:
        raise SpecificationError("candidate lives on a different basis", key="modes")
    return operator_residual(basis, shift, nonlinear_operator(problem), candidate, problem.forcing("f"))


def solve(problem: ProblemSpec, opts: SolveOptions = SolveOptions()) -> SolveReport:
    """Dispatch to the solver for the problem's family."""
    fam = problem.family
    if fam in SCALAR_FAMILIES:
        return solve_multi_resonant(problem, opts)
    if fam in PERIODIC_FAMILIES:
        return solve_periodic(problem, opts)
    from . import systems

    if fam == "system_linear":
        return systems.solve_system_linear(problem, opts)
    if fam == "system_nonresonant":
        return systems.solve_system_nonresonant(problem, opts)
    return systems.solve_system_resonant(problem, opts)
