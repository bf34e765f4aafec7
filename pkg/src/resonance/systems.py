"""2x2 elliptic systems: canonical reduction, linear block solves, nonlinear solvers.

The linear part ``Delta (u, v) + A (u, v)`` is brought to canonical form
``Q^{-1} A Q`` (diagonal, or the Jordan block [[lam, 1], [0, lam]]) by a
real change of variables.  Resonance is then classified against the
spectrum of the basis:

* ``nonresonant``: no eigenvalue of A is an eigenvalue of -Laplacian
* ``case_A``: one eigenvalue is lambda_k, the other mu is off the spectrum
* ``case_B``: both are eigenvalues lambda_k, lambda_m (possibly k = m), A diagonalizable
* ``case_C``: A is a Jordan block at lambda_k
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .engine import FixedPointMap, SolveOptions, SolveReport, iterate
from .errors import ResonantModeNonOrthogonal, SpecificationError, UnsupportedSystemError
from .problem import ProblemSpec
from .solvability import check_problem
from .spectral import GROUP_TOL, ORTHO_TOL, EigenGroup, Field, SpectralBasis, apply_pointwise, resolvent_solve

DEFECT_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class CanonicalForm:
    kind: str  # diagonal | jordan
    eigenvalues: tuple[float, float]
    Q: np.ndarray
    Q_inv: np.ndarray
    warnings: tuple = ()

    @property
    def matrix(self) -> np.ndarray:
        l1, l2 = self.eigenvalues
        if self.kind == "jordan":
            return np.array([[l1, 1.0], [0.0, l1]])
        return np.diag([l1, l2])

    def permuted(self) -> CanonicalForm:
        """Swap the two diagonal entries (and the columns of Q)."""
        if self.kind != "diagonal":
            raise UnsupportedSystemError("only diagonal forms can be permuted")
        P = np.array([[0.0, 1.0], [1.0, 0.0]])
        return CanonicalForm("diagonal", self.eigenvalues[::-1], self.Q @ P, P @ self.Q_inv, self.warnings)


def _inv2(Q: np.ndarray) -> np.ndarray:
    det = Q[0, 0] * Q[1, 1] - Q[0, 1] * Q[1, 0]
    return np.array([[Q[1, 1], -Q[0, 1]], [-Q[1, 0], Q[0, 0]]]) / det


def _eigvec(a, b, c, d, mu):
    r1 = np.array([b, mu - a])
    r2 = np.array([mu - d, c])
    v = r1 if np.linalg.norm(r1) >= np.linalg.norm(r2) else r2
    return v / np.linalg.norm(v)


def canonical_reduce(A) -> CanonicalForm:
    """Real canonical form of a 2x2 matrix from its characteristic polynomial."""
    A = np.asarray(A, dtype=float).reshape(2, 2)
    a, b, c, d = A.ravel()
    scale = max(1.0, float(np.max(np.abs(A))))
    disc = (a - d) ** 2 + 4.0 * b * c
    gap = math.sqrt(abs(disc))
    I = np.eye(2)

    if b == 0.0 and c == 0.0:
        return CanonicalForm("diagonal", (float(a), float(d)), I, I.copy())
    if disc < 0 and gap >= DEFECT_TOL * scale:
        raise UnsupportedSystemError(
            f"matrix {A.tolist()} has complex eigenvalues; only real spectra are treated"
        )
    if gap < DEFECT_TOL * scale:
        lam = 0.5 * (a + d)
        N = A - lam * I
        if np.max(np.abs(N)) <= DEFECT_TOL * scale:
            return CanonicalForm(
                "diagonal", (lam, lam), I, I.copy(),
                ("off-diagonal entries below the defect tolerance were dropped",),
            )
        j = int(np.argmax(np.linalg.norm(N, axis=0)))
        Q = np.column_stack([N[:, j], I[:, j]])
        warnings = ()
        if gap > 0:
            warnings = (f"eigenvalue gap {gap:.3e} below {DEFECT_TOL:g}; treated as a Jordan block",)
        return CanonicalForm("jordan", (lam, lam), Q, _inv2(Q), warnings)

    sq = math.sqrt(disc)
    tr = a + d
    det = a * d - b * c
    if tr >= 0:
        mu1 = 0.5 * (tr + sq)
        mu2 = det / mu1 if mu1 != 0 else 0.5 * (tr - sq)
    else:
        mu2 = 0.5 * (tr - sq)
        mu1 = det / mu2 if mu2 != 0 else 0.5 * (tr + sq)
    Q = np.column_stack([_eigvec(a, b, c, d, mu1), _eigvec(a, b, c, d, mu2)])
    warnings = ()
    if gap < 1e-6 * scale:
        warnings = (f"nearly defective matrix: eigenvalue gap {gap:.3e}",)
    return CanonicalForm("diagonal", (mu1, mu2), Q, _inv2(Q), warnings)


@dataclass(frozen=True)
class SystemClass:
    case: str  # nonresonant | case_A | case_B | case_C | unsupported
    k_group: EigenGroup | None = None
    m_group: EigenGroup | None = None
    mu: float | None = None
    swap: bool = False
    note: str = ""

    def describe(self, basis: SpectralBasis) -> dict:
        out = {"case": self.case}
        if self.k_group is not None:
            out["k"] = basis.labels[self.k_group.members[0]]
            out["lambda_k"] = self.k_group.value
        if self.m_group is not None:
            out["m"] = basis.labels[self.m_group.members[0]]
            out["lambda_m"] = self.m_group.value
        if self.mu is not None:
            out["mu"] = self.mu
        if self.note:
            out["note"] = self.note
        return out


def classify_system(form: CanonicalForm, basis: SpectralBasis) -> SystemClass:
    l1, l2 = form.eigenvalues
    g1, g2 = basis.group_at(l1), basis.group_at(l2)

    def simple(g):
        return g.size == 1 and g.complete

    if form.kind == "jordan":
        if g1 is None:
            return SystemClass("nonresonant")
        if not simple(g1):
            return SystemClass("unsupported", g1, note="Jordan resonance at a multiple eigenvalue")
        return SystemClass("case_C", g1)
    if g1 is None and g2 is None:
        return SystemClass("nonresonant")
    if g1 is not None and g2 is not None:
        if not (simple(g1) and simple(g2)):
            return SystemClass("unsupported", g1, g2, note="double resonance at a multiple eigenvalue")
        return SystemClass("case_B", g1, g2)
    if g1 is None:
        if not simple(g2):
            return SystemClass("unsupported", g2, note="resonance at a multiple eigenvalue")
        return SystemClass("case_A", g2, mu=l1, swap=True)
    if not simple(g1):
        return SystemClass("unsupported", g1, note="resonance at a multiple eigenvalue")
    return SystemClass("case_A", g1, mu=l2)


# linear blocks ---------------------------------------------------------------

def _check_zero(value, tol, mode, component):
    if abs(value) > tol:
        raise ResonantModeNonOrthogonal(mode, component, float(value))


def solve_linear_canonical(basis: SpectralBasis, form: CanonicalForm, f1: Field, g1: Field):
    """Mode-wise solve of Delta (u1, v1) + J (u1, v1) = (f1, g1), J the canonical matrix.

    Resonant modes take the representative with zero kernel components.
    """
    lam = basis.eigenvalues
    F, G = f1.coeffs, g1.coeffs
    tol = ORTHO_TOL * math.sqrt(float(F @ F + G @ G))
    u = np.zeros(basis.size)
    v = np.zeros(basis.size)
    l1, l2 = form.eigenvalues
    for i, lab in enumerate(basis.labels):
        d1, d2 = l1 - lam[i], l2 - lam[i]
        if form.kind == "jordan":
            if abs(d1) < GROUP_TOL:
                _check_zero(G[i], tol, lab, "v")
                _check_zero(F[i], tol, lab, "u")
                continue
            v[i] = G[i] / d1
            u[i] = (F[i] - v[i]) / d1
            continue
        if abs(d1) < GROUP_TOL:
            _check_zero(F[i], tol, lab, "u")
        else:
            u[i] = F[i] / d1
        if abs(d2) < GROUP_TOL:
            _check_zero(G[i], tol, lab, "v")
        else:
            v[i] = G[i] / d2
    return basis.from_coeffs(u), basis.from_coeffs(v)


def solve_linear_system(basis: SpectralBasis, A, f: Field, g: Field, form: CanonicalForm | None = None):
    """Solve Delta u + a u + b v = f, Delta v + c u + d v = g mode by mode.

    Nonresonant modes are solved directly; resonant modes go through the
    canonical variables and take the kernel-free representative.
    """
    A = np.asarray(A, dtype=float).reshape(2, 2)
    a, b, c, d = A.ravel()
    form = form or canonical_reduce(A)
    lam = basis.eigenvalues
    l1, l2 = form.eigenvalues
    resonant = (np.abs(lam - l1) < GROUP_TOL) | (np.abs(lam - l2) < GROUP_TOL)
    F, G = f.coeffs, g.coeffs
    det = (a - lam) * (d - lam) - b * c
    safe = np.where(resonant, 1.0, det)
    u = np.where(resonant, 0.0, ((d - lam) * F - b * G) / safe)
    v = np.where(resonant, 0.0, ((a - lam) * G - c * F) / safe)
    if np.any(resonant):
        tol = ORTHO_TOL * math.sqrt(float(F @ F + G @ G))
        Qi, Q = form.Q_inv, form.Q
        for i in np.flatnonzero(resonant):
            x1, x2 = Qi @ np.array([F[i], G[i]])
            d1, d2 = l1 - lam[i], l2 - lam[i]
            lab = basis.labels[i]
            if form.kind == "jordan":
                _check_zero(x2, tol, lab, "v")
                _check_zero(x1, tol, lab, "u")
                y = np.zeros(2)
            else:
                y = np.zeros(2)
                if abs(d1) < GROUP_TOL:
                    _check_zero(x1, tol, lab, "u")
                else:
                    y[0] = x1 / d1
                if abs(d2) < GROUP_TOL:
                    _check_zero(x2, tol, lab, "v")
                else:
                    y[1] = x2 / d2
            u[i], v[i] = Q @ y
    return basis.from_coeffs(u), basis.from_coeffs(v)


# reduction of nonlinear problems ------------------------------------------------

@dataclass(frozen=True, eq=False)
class Reduction:
    form: CanonicalForm
    cls: SystemClass
    forcings: tuple  # canonical (h1, k1)
    warnings: tuple

    @property
    def trivial(self) -> bool:
        return bool(np.array_equal(self.form.Q, np.eye(2)))


def reduce_problem(problem: ProblemSpec) -> Reduction:
    """Canonical variables for a system, ordered so the resonant component comes first."""
    basis = problem.basis()
    form = canonical_reduce(problem.coupling_matrix())
    cls = classify_system(form, basis)
    if cls.swap:
        form = form.permuted()
        cls = SystemClass(cls.case, cls.k_group, cls.m_group, cls.mu, False, cls.note)
    h, k = problem.forcing("h"), problem.forcing("k")
    Qi = form.Q_inv
    h1 = basis.from_coeffs(Qi[0, 0] * h.coeffs + Qi[0, 1] * k.coeffs)
    k1 = basis.from_coeffs(Qi[1, 0] * h.coeffs + Qi[1, 1] * k.coeffs)
    warnings = list(form.warnings)
    if not np.array_equal(form.Q, np.eye(2)) and problem.thresholds_frame == "original" and problem.nonlinearities:
        warnings.append(
            "coupling matrix was reduced by a change of variables; thresholds were declared "
            "for the original variables and should be re-declared for the canonical ones"
        )
    return Reduction(form, cls, (h1, k1), tuple(warnings))


def _pair_map(problem: ProblemSpec, Q=None, Qi=None):
    """(u, v) -> (f(u, v), g(u, v)) as fields, optionally in variables (u, v) = Q (u1, v1)."""
    basis = problem.basis()
    f = problem.nonlinearities["f"].func
    g = problem.nonlinearities["g"].func
    if Q is None or np.array_equal(Q, np.eye(2)):
        def apply(u, v):
            return apply_pointwise(basis, f, [u, v]), apply_pointwise(basis, g, [u, v])
        return apply

    def F(u1, v1):
        u = Q[0, 0] * u1 + Q[0, 1] * v1
        v = Q[1, 0] * u1 + Q[1, 1] * v1
        return Qi[0, 0] * f(u, v) + Qi[0, 1] * g(u, v)

    def Gm(u1, v1):
        u = Q[0, 0] * u1 + Q[0, 1] * v1
        v = Q[1, 0] * u1 + Q[1, 1] * v1
        return Qi[1, 0] * f(u, v) + Qi[1, 1] * g(u, v)

    def apply(u1, v1):
        return apply_pointwise(basis, F, [u1, v1]), apply_pointwise(basis, Gm, [u1, v1])

    return apply


def system_residual(problem: ProblemSpec, u: Field, v: Field) -> tuple[float, float]:
    """Residual norms of the system in the original variables."""
    basis = problem.basis()
    A = problem.coupling_matrix()
    lam = basis.eigenvalues
    r1 = (A[0, 0] - lam) * u.coeffs + A[0, 1] * v.coeffs - problem.forcing("h").coeffs
    r2 = A[1, 0] * u.coeffs + (A[1, 1] - lam) * v.coeffs - problem.forcing("k").coeffs
    if problem.nonlinearities:
        fu, gv = _pair_map(problem)(u, v)
        r1 = r1 + fu.coeffs
        r2 = r2 + gv.coeffs
    R1, R2 = basis.from_coeffs(r1), basis.from_coeffs(r2)
    return math.hypot(R1.l2_norm(), R2.l2_norm()), max(R1.sup_norm(), R2.sup_norm())


class _SystemMap(FixedPointMap):
    def __init__(self, problem: ProblemSpec, relax: float):
        self.problem = problem
        self.basis = problem.basis()
        self.N = self.basis.size
        self.relax = relax

    def fields(self, x):
        u, v = self.original(x)
        return {"u": u, "v": v}

    def residual(self, x):
        u, v = self.original(x)
        return system_residual(self.problem, u, v)


class NonresonantMap(_SystemMap):
    """(w, z) -> solution of the linear system with right sides (h - f(w, z), k - g(w, z))."""

    def __init__(self, problem, relax):
        super().__init__(problem, relax)
        self.A = problem.coupling_matrix()
        self.form = canonical_reduce(self.A)
        self.h = problem.forcing("h")
        self.k = problem.forcing("k")
        self.pair = _pair_map(problem)

    def original(self, x):
        return self.basis.from_coeffs(x[: self.N]), self.basis.from_coeffs(x[self.N:])

    def kernel(self, x):
        return np.zeros(0)

    def step(self, x):
        w, z = self.original(x)
        fw, gw = self.pair(w, z)
        u, v = solve_linear_system(self.basis, self.A, self.h - fw, self.k - gw, self.form)
        tx = np.concatenate([u.coeffs, v.coeffs])
        return x + self.relax * (tx - x)


class ResonantSystemMap(_SystemMap):
    """Lyapunov-Schmidt maps for the three canonical resonant cases.

    State layout: kernel coordinates first (alpha, and beta for cases B
    and C), then the complement coefficients of u1 and v1.
    """

    def __init__(self, problem, relax, red: Reduction):
        super().__init__(problem, relax)
        self.red = red
        self.case = red.cls.case
        form = red.form
        self.lam1, self.lam2 = form.eigenvalues
        self.Q, self.Qi = form.Q, form.Q_inv
        self.pair = _pair_map(problem, self.Q, self.Qi)
        self.h1, self.k1 = red.forcings
        self.gk = red.cls.k_group
        self.ik = self.gk.members[0]
        if self.case == "case_B":
            self.gm = red.cls.m_group
        elif self.case == "case_C":
            self.gm = self.gk
        else:
            self.gm = None
        self.im = self.gm.members[0] if self.gm is not None else None
        self.nk = 1 if self.gm is None else 2
        self.A_k = float(self.h1.coeffs[self.ik])
        self.B = float(self.k1.coeffs[self.im]) if self.im is not None else 0.0
        self.e1 = self._strip(self.h1.coeffs, self.ik)
        self.e2 = self._strip(self.k1.coeffs, self.im) if self.im is not None else self.k1.coeffs.copy()

    @staticmethod
    def _strip(c, i):
        c = np.array(c, dtype=float)
        if i is not None:
            c[i] = 0.0
        return c

    def split(self, x):
        alpha = x[0]
        beta = x[1] if self.nk == 2 else 0.0
        W = self._strip(x[self.nk: self.nk + self.N], self.ik)
        Z = x[self.nk + self.N:].copy()
        if self.im is not None:
            Z[self.im] = 0.0
        return alpha, beta, W, Z

    def canonical(self, alpha, beta, W, Z):
        u = np.array(W)
        u[self.ik] = alpha
        v = np.array(Z)
        if self.im is not None:
            v[self.im] = beta
        return self.basis.from_coeffs(u), self.basis.from_coeffs(v)

    def original(self, x):
        u1, v1 = self.canonical(*self.split(x))
        Q = self.Q
        return Q[0, 0] * u1 + Q[0, 1] * v1, Q[1, 0] * u1 + Q[1, 1] * v1

    def kernel(self, x):
        return x[: self.nk]

    def step(self, x):
        b = self.basis
        alpha, beta, W, Z = self.split(x)
        F, G = self.pair(*self.canonical(alpha, beta, W, Z))
        rhs1 = self.e1 - F.coeffs
        rhs1[self.ik] = 0.0
        rhs2 = self.e2 - G.coeffs
        if self.case == "case_A":
            U = resolvent_solve(b, self.lam1, b.from_coeffs(rhs1), orthogonal_to=self.gk)
            V = resolvent_solve(b, self.lam2, b.from_coeffs(rhs2))
        elif self.case == "case_B":
            rhs2[self.im] = 0.0
            U = resolvent_solve(b, self.lam1, b.from_coeffs(rhs1), orthogonal_to=self.gk)
            V = resolvent_solve(b, self.lam2, b.from_coeffs(rhs2), orthogonal_to=self.gm)
        else:
            rhs2[self.im] = 0.0
            V = resolvent_solve(b, self.lam1, b.from_coeffs(rhs2), orthogonal_to=self.gk)
            U = resolvent_solve(b, self.lam1, b.from_coeffs(rhs1 - V.coeffs), orthogonal_to=self.gk)
        F2, G2 = self.pair(*self.canonical(alpha, beta, U.coeffs, V.coeffs))
        w = self.relax
        if self.case == "case_A":
            kern = [alpha + w * (self.A_k - F2.coeffs[self.ik])]
        elif self.case == "case_B":
            kern = [
                alpha + w * (self.A_k - F2.coeffs[self.ik]),
                beta + w * (self.B - G2.coeffs[self.im]),
            ]
        else:
            # the Jordan coupling makes the kernel update asymmetric: xi moves with g, eta is assigned from f
            kern = [
                alpha + w * (self.B - G2.coeffs[self.ik]),
                self.A_k - F2.coeffs[self.ik],
            ]
        return np.concatenate([kern, U.coeffs, V.coeffs])

    def projected_equations(self, x) -> dict:
        """Kernel projections of the canonical system at state ``x`` (zero at a solution)."""
        alpha, beta, W, Z = self.split(x)
        F, G = self.pair(*self.canonical(alpha, beta, W, Z))
        if self.case == "case_A":
            return {"f_k": float(F.coeffs[self.ik] - self.A_k)}
        if self.case == "case_B":
            return {"f_k": float(F.coeffs[self.ik] - self.A_k), "g_m": float(G.coeffs[self.im] - self.B)}
        return {
            "eta_plus_f_k": float(beta + F.coeffs[self.ik] - self.A_k),
            "g_k": float(G.coeffs[self.ik] - self.B),
        }


def _form_extras(problem, form: CanonicalForm, cls: SystemClass) -> dict:
    return {
        "canonical": {
            "kind": form.kind,
            "eigenvalues": list(form.eigenvalues),
            "Q": form.Q.tolist(),
            "Q_inv": form.Q_inv.tolist(),
        },
        "classification": cls.describe(problem.basis()),
    }


def _report(fp, status, x, it, trace, res, conds, notes, extras):
    out_notes = list(notes)
    if status in ("max_iter", "diverged") and conds and all(c.verdict == "holds" for c in conds):
        out_notes.append("no convergence; the solvability condition holds, so a solution exists")
    return SolveReport(
        status=status,
        solution=fp.fields(x),
        residual_l2=res[0],
        residual_sup=res[1],
        iterations=it,
        condition=tuple(conds),
        trace=tuple(trace),
        xi=tuple(float(t) for t in fp.kernel(x)),
        notes=tuple(out_notes),
        extras=extras,
    )


def _init_vector(fp, init, size):
    if init is None:
        return np.zeros(size)
    arr = np.asarray(init, dtype=float)
    if arr.shape != (size,):
        raise SpecificationError("warm start does not match the state size", key="init")
    return arr


def solve_system_linear(problem: ProblemSpec, opts: SolveOptions = SolveOptions()) -> SolveReport:
    basis = problem.basis()
    A = problem.coupling_matrix()
    form = canonical_reduce(A)
    cls = classify_system(form, basis)
    u, v = solve_linear_system(basis, A, problem.forcing("h"), problem.forcing("k"), form)
    res = system_residual(problem, u, v)
    status = "converged" if res[0] <= opts.tol else "max_iter"
    return SolveReport(status, {"u": u, "v": v}, res[0], res[1], 0, extras=_form_extras(problem, form, cls))


def solve_system_nonresonant(problem: ProblemSpec, opts: SolveOptions = SolveOptions()) -> SolveReport:
    """Damped Picard iteration of the linear solution map for a nonresonant system."""
    fp = NonresonantMap(problem, opts.relax)
    cls = classify_system(fp.form, fp.basis)
    if cls.case != "nonresonant":
        raise SpecificationError(f"coupling matrix is resonant ({cls.case})", key="matrix")
    x0 = _init_vector(fp, opts.init, 2 * fp.N)
    status, x, it, trace, res = iterate(fp, x0, opts)
    return _report(fp, status, x, it, trace, res, (), fp.form.warnings, _form_extras(problem, fp.form, cls))


def solve_system_resonant(problem: ProblemSpec, opts: SolveOptions = SolveOptions()) -> SolveReport:
    """Lyapunov-Schmidt iteration for the canonical resonant cases A, B and C."""
    red = reduce_problem(problem)
    expected = problem.family.replace("system_", "")
    if red.cls.case != expected:
        raise SpecificationError(
            f"coupling matrix classifies as {red.cls.case}, not {expected}", key="matrix"
        )
    fp = ResonantSystemMap(problem, opts.relax, red)
    extras = _form_extras(problem, red.form, red.cls)
    x0 = _init_vector(fp, opts.init, fp.nk + 2 * fp.N)
    conds = tuple(check_problem(problem))
    if opts.gate and any(c.verdict != "holds" for c in conds):
        res = fp.residual(x0)
        return SolveReport(
            "condition_violated", fp.fields(x0), res[0], res[1], 0, conds,
            notes=red.warnings + ("solvability condition not established; solve skipped (gated)",), extras=extras,
        )
    status, x, it, trace, res = iterate(fp, x0, opts)
    extras["projected_equations"] = fp.projected_equations(x)
    return _report(fp, status, x, it, trace, res, conds, red.warnings, extras)
