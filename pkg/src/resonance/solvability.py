"""Solvability conditions as numeric margins.

Every check returns a :class:`ConditionReport` whose ``margin`` is positive
exactly when the strict inequality of the condition holds.  Limits of the
nonlinearity at +-inf are always read from declared metadata.

Sign-split integrals (the integral of ``w`` over ``{w > 0}`` and over
``{w < 0}``) are computed on the nodal partition: sign changes are bracketed
on a fine grid, refined with Brent's method, and each piece is integrated
with Gauss-Legendre quadrature.  On the square the same is done along x for
every node of a composite Gauss rule in y.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, replace

import numpy as np
from scipy import optimize

from .errors import ConfigurationError, DimensionError, MultiplicityError, SpecificationError
from .nonlinearity import Nonlinearity, validate_nonlinearity
from .spectral import ORTHO_TOL, EigenGroup, Field, SpectralBasis

BOUNDARY_TOL = 1e-9
ZERO_CUTOFF = 1e-13


@dataclass(frozen=True)
class ConditionReport:
    condition_id: str
    quantities: dict
    margin: float
    verdict: str
    witness: tuple | None = None
    notes: tuple = ()
    scope: str | None = None

    @property
    def holds(self) -> bool:
        return self.verdict == "holds"


def verdict_for(margin: float) -> str:
    if margin > BOUNDARY_TOL:
        return "holds"
    if margin < -BOUNDARY_TOL:
        return "fails"
    return "boundary"


def _report(cid, quantities, margin, **kw) -> ConditionReport:
    margin = float(margin)
    return ConditionReport(cid, dict(quantities), margin, verdict_for(margin), **kw)


# sign-split integrals --------------------------------------------------

_GAUSS_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gauss(n: int):
    if n not in _GAUSS_CACHE:
        _GAUSS_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _GAUSS_CACHE[n]


def _split_rows(evalf, rows: int, a: float, b: float, freq: int, n_grid: int | None = None):
    """Sign-split integrals over (a, b) for a batch of 1D functions.

    ``evalf(r, x)`` evaluates function ``r[i]`` at ``x[i]`` elementwise.
    ``freq`` is the highest angular frequency present; it sizes the
    bracketing grid and the per-piece Gauss rule.  Roots are located by
    vectorized bisection to machine precision.  Returns arrays (pos, neg).
    """
    freq = max(int(freq), 1)
    n_grid = n_grid or max(64, 16 * freq)
    x = np.linspace(a, b, n_grid + 1)
    rr = np.repeat(np.arange(rows), n_grid + 1).reshape(rows, n_grid + 1)
    xx = np.broadcast_to(x, rr.shape)
    W = evalf(rr.ravel(), xx.ravel()).reshape(rr.shape)
    scale = np.maximum(np.max(np.abs(W), axis=1, keepdims=True), 1e-300)
    W = np.where(np.abs(W) < ZERO_CUTOFF * scale, 0.0, W)

    zr, zi = np.nonzero(W[:, 1:-1] == 0.0)
    br, bi = np.nonzero(W[:, :-1] * W[:, 1:] < 0.0)
    lo, hi = x[bi].copy(), x[bi + 1].copy()
    s_lo = np.sign(W[br, bi])
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if not np.any((mid > lo) & (mid < hi)):
            break
        right = np.sign(evalf(br, mid)) == s_lo
        lo = np.where(right, mid, lo)
        hi = np.where(right, hi, mid)

    all_r = np.concatenate([np.arange(rows), np.arange(rows), zr, br])
    all_x = np.concatenate([np.full(rows, a), np.full(rows, b), x[1:-1][zi], 0.5 * (lo + hi)])
    order = np.lexsort((all_x, all_r))
    all_r, all_x = all_r[order], all_x[order]
    same = all_r[:-1] == all_r[1:]
    left, right, pr = all_x[:-1][same], all_x[1:][same], all_r[:-1][same]
    keep = right > left
    left, right, pr = left[keep], right[keep], pr[keep]
    nodes, weights = _gauss(20 + int(math.ceil(freq * float(np.max(right - left)))))
    half = 0.5 * (right - left)
    pts = 0.5 * (right + left)[:, None] + half[:, None] * nodes[None, :]
    prow = np.broadcast_to(pr[:, None], pts.shape)
    vals = half * (evalf(prow.ravel(), pts.ravel()).reshape(pts.shape) @ weights)
    pos = np.zeros(rows)
    neg = np.zeros(rows)
    np.add.at(pos, pr[vals > 0], vals[vals > 0])
    np.add.at(neg, pr[vals <= 0], vals[vals <= 0])
    return pos, neg


def _split_1d(func, a: float, b: float, freq: int, n_grid: int | None = None):
    """(positive part, negative part) of the integral of ``func`` over (a, b)."""
    pos, neg = _split_rows(lambda r, x: func(x), 1, a, b, freq, n_grid)
    return float(pos[0]), float(neg[0])


def sign_split(basis: SpectralBasis, coeffs) -> tuple[float, float]:
    """Integrals of w over {w > 0} and {w < 0} for w given by ``coeffs``."""
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape != (basis.size,):
        raise DimensionError("coefficient vector does not match the basis")
    kind = basis.domain.kind
    support = np.flatnonzero(coeffs)
    if support.size == 0:
        return 0.0, 0.0
    if kind == "interval":
        k = np.array([basis.labels[i] for i in support], dtype=float)
        c = coeffs[support] * math.sqrt(2.0 / math.pi)
        return _split_1d(lambda x: c @ np.sin(k[:, None] * x[None, :]), 0.0, math.pi, int(k.max()))
    if kind == "circle":
        labs = [basis.labels[i] for i in support]
        n = np.array([lab[1] for lab in labs], dtype=float)
        is_sin = np.array([lab[0] == "sin" for lab in labs])
        norm = np.array([1.0 / math.sqrt(2.0 * math.pi) if lab[0] == "const" else 1.0 / math.sqrt(math.pi) for lab in labs])
        c = coeffs[support] * norm

        def w(x):
            arg = n[:, None] * x[None, :]
            return c @ np.where(is_sin[:, None], np.sin(arg), np.cos(arg))

        return _split_1d(w, 0.0, 2.0 * math.pi, max(int(n.max()), 1))
    return _split_square(basis, coeffs)


def _split_square(basis, coeffs):
    # composite Gauss rule in y; an exact 1D split in x at every y node
    n = basis.n_modes
    C = coeffs.reshape(n, n)
    rows = np.flatnonzero(np.any(C != 0, axis=1))
    cols = np.flatnonzero(np.any(C != 0, axis=0))
    fx = int(rows.max()) + 1
    fy = int(cols.max()) + 1
    C = C[: fx, : fy]
    jx = np.arange(1, fx + 1)
    ly = np.arange(1, fy + 1)
    panels = 16 * max(fx, fy)
    nodes, weights = _gauss(8)
    edges = np.linspace(0.0, math.pi, panels + 1)
    half = 0.5 * (edges[1] - edges[0])
    ys = (0.5 * (edges[:-1] + edges[1:])[:, None] + half * nodes[None, :]).ravel()
    wy = np.tile(half * weights, panels)
    A = (2.0 / math.pi) * (np.sin(ys[:, None] * ly[None, :]) @ C.T)  # sin(jx) coefficients per y node

    def evalf(r, x):
        return np.einsum("ij,ij->i", A[r], np.sin(x[:, None] * jx[None, :]))

    pos, neg = _split_rows(evalf, ys.size, 0.0, math.pi, fx)
    return float(wy @ pos), float(wy @ neg)


def cosine_sign_split(n: int, delta: float, grid: int = 4096) -> tuple[float, float]:
    """Sign-split integrals of cos(n t - delta) over (0, 2 pi)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return _split_1d(lambda t: np.cos(n * t - delta), 0.0, 2.0 * math.pi, n, n_grid=grid)


# Landesman-Lazer type intervals ---------------------------------------------

def _simple_group(basis: SpectralBasis, k) -> EigenGroup:
    grp = k if isinstance(k, EigenGroup) else basis.group_for(k)
    if grp.size != 1:
        raise MultiplicityError(
            f"eigenvalue {grp.value:g} has multiplicity {grp.size}; use williams_margin"
        )
    return grp


def landesman_lazer_interval(basis: SpectralBasis, k, C: float, D: float) -> tuple[float, float]:
    """(L1, L2) for the simple eigenvalue named by ``k`` and thresholds C < D."""
    if not C < D:
        raise SpecificationError("thresholds.C must be < thresholds.D", key="thresholds")
    grp = _simple_group(basis, k)
    e = np.zeros(basis.size)
    e[grp.members[0]] = 1.0
    pos, neg = sign_split(basis, e)
    return C * pos + D * neg, D * pos + C * neg


def _interval_report(cid, basis, k, C, D, proj, names):
    L1, L2 = landesman_lazer_interval(basis, k, C, D)
    lo, hi, p = names
    return _report(cid, {p: proj, lo: L1, hi: L2, "C": C, "D": D}, min(proj - L1, L2 - proj))


def _threshold_pair(nl: Nonlinearity, key: str):
    if nl.thresholds is not None:
        _, _, C, D = nl.thresholds
        return C, D, ()
    if nl.limits is not None and nl.arity == 1:
        return nl.limits[0], nl.limits[1], ("interval built from declared limits g(-inf), g(+inf)",)
    raise SpecificationError(f"nonlinearity {key!r} declares neither thresholds nor limits", key=f"nonlinearity.{key}.thresholds")


def check_scalar_condition(problem) -> ConditionReport:
    """Landesman-Lazer type interval condition for the scalar and resonant system families."""
    fam = problem.family
    basis = problem.basis()
    if fam == "scalar_resonant":
        nl = problem.nonlinearities["g"]
        C, D, notes = _threshold_pair(nl, "g")
        grp = _simple_group(basis, problem.k)
        A = float(problem.forcing("f").coeffs[grp.members[0]])
        rep = _interval_report("LL_interval", basis, grp, C, D, A, ("L1", "L2", "A_k"))
        return replace(rep, notes=notes)

    if fam not in ("system_case_A", "system_case_B", "system_case_C"):
        raise SpecificationError(f"no interval condition for family {fam!r}", key="family")

    from .systems import reduce_problem

    red = reduce_problem(problem)
    notes = tuple(red.warnings)
    h1, k1 = red.forcings
    f_nl, g_nl = problem.nonlinearities["f"], problem.nonlinearities["g"]
    for key, nl in (("f", f_nl), ("g", g_nl)):
        if nl.thresholds is None and problem._needs_thresholds(key):
            raise SpecificationError(f"nonlinearity {key!r} needs thresholds", key=f"nonlinearity.{key}.thresholds")

    if fam == "system_case_A":
        _, _, C, D = f_nl.thresholds
        grp = _simple_group(basis, red.cls.k_group)
        A = float(h1.coeffs[grp.members[0]])
        rep = _interval_report("system_A", basis, grp, C, D, A, ("L1", "L2", "A_k"))
        return replace(rep, notes=notes)

    if fam == "system_case_B":
        _, _, C, D = f_nl.thresholds
        _, _, C1, D1 = g_nl.thresholds
        gk = _simple_group(basis, red.cls.k_group)
        gm = _simple_group(basis, red.cls.m_group)
        A = float(h1.coeffs[gk.members[0]])
        B = float(k1.coeffs[gm.members[0]])
        L1, L2 = landesman_lazer_interval(basis, gk, C, D)
        M1, M2 = landesman_lazer_interval(basis, gm, C1, D1)
        q = {"A_k": A, "L1": L1, "L2": L2, "B_m": B, "M1": M1, "M2": M2}
        margin = min(A - L1, L2 - A, B - M1, M2 - B)
        return _report("system_B", q, margin, notes=notes)

    _, _, C2, D2 = g_nl.thresholds
    grp = _simple_group(basis, red.cls.k_group)
    B = float(k1.coeffs[grp.members[0]])
    rep = _interval_report("system_C", basis, grp, C2, D2, B, ("N1", "N2", "B_k"))
    return replace(rep, notes=notes)


# multi-dimensional eigenspaces ---------------------------------------------

def _seed() -> int:
    try:
        return int(os.environ.get("RESONANCE_SEED", "42"))
    except ValueError:
        return 42


def direction_scale(basis: SpectralBasis) -> float:
    """Factor turning unit coefficient vectors into the natural eigenfunctions.

    On the circle directions are measured as ``a cos nt + b sin nt`` with
    a^2 + b^2 = 1, which have L2 norm sqrt(pi); elsewhere as unit-L2
    combinations of the orthonormal eigenfunctions.
    """
    return math.sqrt(math.pi) if basis.domain.periodic else 1.0


def williams_margin(
    basis: SpectralBasis,
    group: EigenGroup,
    f: Field,
    g_limits: tuple[float, float],
    n_dirs: int = 64,
) -> ConditionReport:
    """Minimum over unit directions w in the eigenspace of RHS(w) - <f, w>.

    RHS(w) = g(+inf) int_{w>0} w + g(-inf) int_{w<0} w.  Only w != 0 is
    considered; the inequality is degenerate at w = 0.
    """
    g_lo, g_hi = (float(x) for x in g_limits)
    if not g_lo < g_hi:
        raise SpecificationError("Williams condition needs g(-inf) < g(+inf)", key="limits")
    if n_dirs < 8:
        raise ValueError("n_dirs must be at least 8")
    if f.basis is not basis:
        raise DimensionError("forcing does not live on this basis")
    idx = list(group.members)
    m = len(idx)
    scale = direction_scale(basis)
    fg = f.coeffs[idx]

    def margin(theta):
        theta = np.asarray(theta, dtype=float)
        theta = theta / np.linalg.norm(theta)
        c = np.zeros(basis.size)
        c[idx] = scale * theta
        pos, neg = sign_split(basis, c)
        return g_hi * pos + g_lo * neg - scale * float(fg @ theta)

    notes = ["directions restricted to the unit sphere (w = 0 excluded)"]
    if m == 1:
        cands = [(margin([1.0]), (1.0,)), (margin([-1.0]), (-1.0,))]
        best, wit = min(cands)
        q = {"m": 1, "directions": 2}
    elif m == 2:
        angles = 2.0 * math.pi * np.arange(n_dirs) / n_dirs
        vals = np.array([margin([math.cos(a), math.sin(a)]) for a in angles])
        j = int(np.argmin(vals))
        step = 2.0 * math.pi / n_dirs
        res = optimize.minimize_scalar(
            lambda a: margin([math.cos(a), math.sin(a)]),
            bounds=(angles[j] - step, angles[j] + step),
            method="bounded",
            options={"xatol": 1e-10},
        )
        if res.fun < vals[j]:
            best, a = float(res.fun), float(res.x)
        else:
            best, a = float(vals[j]), float(angles[j])
        wit = (math.cos(a), math.sin(a))
        q = {"m": 2, "directions": n_dirs, "angular_resolution": step}
    else:
        rng = np.random.default_rng(_seed())
        pts = rng.standard_normal((n_dirs, m))
        pts /= np.linalg.norm(pts, axis=1)[:, None]
        vals = np.array([margin(p) for p in pts])
        starts = pts[np.argsort(vals)[:8]]
        best, wit = float(vals.min()), tuple(pts[int(np.argmin(vals))])
        for s in starts:
            res = optimize.minimize(margin, s, method="Nelder-Mead", options={"xatol": 1e-8, "fatol": 1e-10})
            if res.fun < best:
                best = float(res.fun)
                wit = tuple(np.asarray(res.x) / np.linalg.norm(res.x))
        q = {"m": m, "directions": n_dirs, "restarts": 8, "seed": _seed()}
        notes.append("sampled minimum is an upper bound on the true minimum")
    q.update({"g_minus": g_lo, "g_plus": g_hi, "direction_scale": scale})
    return _report("Williams", q, best, witness=tuple(float(t) for t in wit), notes=tuple(notes))


# periodic oscillators -----------------------------------------------------

def _fourier_numbers(f: Field, n: int) -> tuple[float, float]:
    basis = f.basis
    if not basis.domain.periodic:
        raise ConfigurationError("periodic conditions need the circle basis")
    if not 1 <= n <= basis.n_modes:
        raise ConfigurationError(f"frequency {n} outside the basis")
    s = math.sqrt(math.pi)
    return s * float(f.coeffs[basis.index_of(("cos", n))]), s * float(f.coeffs[basis.index_of(("sin", n))])


def lazer_leach_check(f: Field, n: int, g_limits) -> ConditionReport:
    A, B = _fourier_numbers(f, n)
    g_lo, g_hi = g_limits
    threshold = 2.0 * (g_hi - g_lo)
    norm = math.hypot(A, B)
    q = {"A": A, "B": B, "norm_AB": norm, "threshold": threshold, "n": n}
    return _report("LazerLeach", q, threshold - norm)


def korman_li_check(f: Field, n: int, G_limits) -> ConditionReport:
    A, B = _fourier_numbers(f, n)
    G_lo, G_hi = G_limits
    threshold = 2.0 * n * (G_hi - G_lo)
    norm = math.hypot(A, B)
    q = {"A": A, "B": B, "norm_AB": norm, "threshold": threshold, "n": n}
    return _report(
        "KormanLi", q, threshold - norm, notes=("threshold scales with the frequency n",)
    )


# sign-type condition -----------------------------------------------------

def fn_sign_check(desc: Nonlinearity, forcing: Field, basis: SpectralBasis, k) -> ConditionReport:
    """Sign condition u g(u) > 0 with an orthogonal forcing.

    On the principal eigenvalue of a Dirichlet domain only the sign property
    and orthogonality are needed; above it, and on the circle, the
    asymptotic signs g(+inf) > 0 > g(-inf) are also required.
    """
    grp = basis.group_for(k)
    principal = (not basis.domain.periodic) and grp is basis.groups[0]
    notes = []

    sign_ok = False
    if desc.sign_property:
        rep = validate_nonlinearity(desc, 10.0, 257)
        sign_ok = rep.status("sign_property") == "consistent"
        if not sign_ok:
            notes.append("declared sign property contradicted by sampling")
    else:
        notes.append("sign property not declared")

    if desc.limits is not None:
        g_lo, g_hi = desc.limits
        liminf_margin = min(g_hi, -g_lo)
    else:
        liminf_margin = -1.0
        notes.append("limits not declared; asymptotic sign condition unknown")
    liminf_ok = liminf_margin > BOUNDARY_TOL

    proj = float(np.max(np.abs(forcing.coeffs[list(grp.members)])))
    norm = forcing.l2_norm()
    tol = ORTHO_TOL * norm
    ortho_margin = 1.0 if proj == 0.0 else 1.0 - proj / tol if tol > 0 else -1.0

    parts = [1.0 if sign_ok else -1.0, ortho_margin]
    if not principal:
        parts.append(liminf_margin)
    margin = min(parts)
    scope = "extended" if liminf_ok else "fn_only"
    q = {
        "sign_property": 1.0 if sign_ok else 0.0,
        "asymptotic_sign": 1.0 if liminf_ok else 0.0,
        "projection": proj,
        "ortho_tol": tol,
        "principal": 1.0 if principal else 0.0,
    }
    return _report("FN_sign", q, margin, notes=tuple(notes), scope=scope)


# dispatch ---------------------------------------------------------------

def check_problem(problem) -> list[ConditionReport]:
    """All solvability conditions relevant to ``problem``'s family."""
    fam = problem.family
    basis = problem.basis()
    if fam == "scalar_resonant":
        g = problem.nonlinearities["g"]
        if g.thresholds is None and g.limits is None and g.sign_property:
            return [fn_sign_check(g, problem.forcing("f"), basis, problem.k)]
        return [check_scalar_condition(problem)]
    if fam == "scalar_multi":
        g = problem.nonlinearities["g"]
        if g.limits is None:
            raise SpecificationError("scalar_multi needs declared limits", key="nonlinearity.g.limits")
        grp = basis.group_for(problem.k)
        return [williams_margin(basis, grp, problem.forcing("f"), g.limits)]
    if fam == "periodic_LL":
        g = problem.nonlinearities["g"]
        if g.limits is None:
            raise SpecificationError("periodic_LL needs declared limits", key="nonlinearity.g.limits")
        return [lazer_leach_check(problem.forcing("f"), int(problem.n), g.limits)]
    if fam == "periodic_damped":
        g = problem.nonlinearities["g"]
        if g.antiderivative_limits is None:
            raise SpecificationError(
                "periodic_damped needs antiderivative_limits", key="nonlinearity.g.antiderivative_limits"
            )
        return [korman_li_check(problem.forcing("f"), int(problem.n), g.antiderivative_limits)]
    if fam == "periodic_FN":
        return [fn_sign_check(problem.nonlinearities["g"], problem.forcing("f"), basis, int(problem.n))]
    if fam in ("system_case_A", "system_case_B", "system_case_C"):
        return [check_scalar_condition(problem)]
    return []
