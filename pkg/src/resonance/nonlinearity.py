"""Bounded nonlinearities with declared asymptotic metadata.

A :class:`Nonlinearity` pairs a vectorized pointwise map with the facts the
solvability conditions consume: a global bound, the limits at -inf/+inf,
a threshold quadruple (c, d, C, D) meaning ``g(u) > D for u > d`` and
``g(u) < C for u < c``, the limits of the primitive ``G(u) = int_0^u g``,
and the sign property ``u g(u) > 0``.

Metadata is declared, never inferred.  :func:`validate_nonlinearity` only
spot-checks it on a finite window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate

from .errors import EvaluationError, SpecificationError


@dataclass(frozen=True, eq=False)
class Nonlinearity:
    name: str
    func: Callable
    bound: float
    arity: int = 1
    limits: tuple[float, float] | None = None
    thresholds: tuple[float, float, float, float] | None = None
    antiderivative_limits: tuple[float, float] | None = None
    sign_property: bool = False
    threshold_arg: str = "u"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.arity not in (1, 2):
            raise SpecificationError("arity must be 1 or 2", key="arity")
        if not (self.bound > 0 and math.isfinite(self.bound)):
            raise SpecificationError("bound must be a positive finite number", key="bound")
        if self.threshold_arg not in ("u", "v"):
            raise SpecificationError("threshold_arg must be 'u' or 'v'", key="threshold_arg")
        if self.thresholds is not None:
            c, d, C, D = self.thresholds
            if not c < d:
                raise SpecificationError("thresholds.c must be < thresholds.d", key="thresholds")
            if not C < D:
                raise SpecificationError("thresholds.C must be < thresholds.D", key="thresholds")
            if self.bound < max(abs(C), abs(D)):
                raise SpecificationError("bound must dominate |C| and |D|", key="bound")
        if self.limits is not None:
            lo, hi = self.limits
            if lo > hi:
                raise SpecificationError("limits must satisfy g(-inf) <= g(+inf)", key="limits")
            if self.bound < max(abs(lo), abs(hi)):
                raise SpecificationError("bound must dominate the declared limits", key="bound")
        if self.antiderivative_limits is not None:
            lo, hi = self.antiderivative_limits
            if lo > hi:
                raise SpecificationError(
                    "antiderivative_limits must satisfy G(-inf) <= G(+inf)",
                    key="antiderivative_limits",
                )

    def __call__(self, *args):
        return self.func(*args)

    def _key(self):
        # registry maps are fully determined by their parameters
        return (
            self.name, self.bound, self.arity, self.limits, self.thresholds,
            self.antiderivative_limits, self.sign_property, self.threshold_arg,
            repr(sorted(self.params.items())),
        )

    def __eq__(self, other):
        if not isinstance(other, Nonlinearity):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self):
        return hash(self._key())


# registry ------------------------------------------------------------

def _gauss(s):
    return s * np.exp(-s * s)


def _rational(s):
    return 1.0 / (1.0 + s * s)


# name -> (map, sup |map|, limits at (-inf, +inf), primitive or None, odd and sign-preserving)
_BASES = {
    "arctan": (np.arctan, math.pi / 2, (-math.pi / 2, math.pi / 2), None, True),
    "tanh": (np.tanh, 1.0, (-1.0, 1.0), None, True),
    "bounded_gaussian": (
        _gauss,
        1.0 / math.sqrt(2.0 * math.e),
        (0.0, 0.0),
        lambda s: -0.5 * math.exp(-s * s),
        True,
    ),
    "rational": (_rational, 1.0, (0.0, 0.0), math.atan, False),
}

REGISTRY = tuple(_BASES)


def make_nonlinearity(
    name: str,
    amp: float = 1.0,
    slope: float = 1.0,
    shift: float = 0.0,
    **declared,
) -> Nonlinearity:
    """Build ``u -> amp * base(slope * u + shift)`` from the registry.

    Metadata not given in ``declared`` defaults to the analytic facts of
    the base function (bound, limits, primitive limits, sign property).
    Thresholds are never defaulted.
    """
    if name not in _BASES:
        raise SpecificationError(
            f"unknown nonlinearity {name!r}; choose from {', '.join(REGISTRY)}", key="name"
        )
    if slope == 0:
        raise SpecificationError("slope must be nonzero", key="slope")
    base, sup, (lo, hi), prim, odd = _BASES[name]
    amp, slope, shift = float(amp), float(slope), float(shift)

    def func(u, _b=base, _a=amp, _s=slope, _t=shift):
        return _a * _b(_s * np.asarray(u, dtype=float) + _t)

    if slope < 0:
        lo, hi = hi, lo
    lo, hi = amp * lo, amp * hi
    limits = (lo, hi) if lo <= hi else None
    g_limits = None
    if prim is not None:
        # G(u) = amp/slope * (P(slope u + shift) - P(shift)) with P a primitive of the base
        sgn = math.copysign(1.0, slope)
        g_lo = (amp / slope) * (_prim_limit(name, -sgn) - prim(shift))
        g_hi = (amp / slope) * (_prim_limit(name, sgn) - prim(shift))
        g_limits = (g_lo, g_hi) if g_lo <= g_hi else None
    meta = dict(
        bound=abs(amp) * sup,
        limits=limits,
        antiderivative_limits=g_limits,
        sign_property=bool(odd and shift == 0.0 and amp * slope > 0),
    )
    meta.update({k: v for k, v in declared.items() if v is not None})
    params = dict(name=name, amp=amp, slope=slope, shift=shift)
    return Nonlinearity(name=name, func=func, params=params, **meta)


def _prim_limit(name, direction):
    """Limit of the base primitive as its argument tends to direction * inf."""
    if name == "rational":
        return math.copysign(math.pi / 2, direction)
    if name == "bounded_gaussian":
        return 0.0
    raise ValueError(name)


def lift(
    base: Nonlinearity,
    arg: str = "u",
    coupling: Nonlinearity | None = None,
    thresholds=None,
    threshold_arg: str | None = None,
    bound: float | None = None,
) -> Nonlinearity:
    """Turn one-argument maps into ``F(u, v) = base(arg) + coupling(other arg)``."""
    if arg not in ("u", "v"):
        raise SpecificationError("arg must be 'u' or 'v'", key="arg")
    first = 0 if arg == "u" else 1
    b, c = base.func, (coupling.func if coupling is not None else None)

    def func(u, v):
        x = (u, v)
        out = b(x[first])
        if c is not None:
            out = out + c(x[1 - first])
        return out

    total = base.bound + (coupling.bound if coupling is not None else 0.0)
    params = dict(base.params, arg=arg)
    if coupling is not None:
        params["coupling"] = dict(coupling.params)
    return Nonlinearity(
        name=base.name if coupling is None else f"{base.name}+{coupling.name}",
        func=func,
        bound=total if bound is None else bound,
        arity=2,
        thresholds=thresholds,
        threshold_arg=threshold_arg or arg,
        params=params,
    )


# checks ----------------------------------------------------------------

@dataclass(frozen=True)
class PropertyCheck:
    name: str
    status: str  # consistent | violated | unchecked
    at: object = None
    detail: str = ""


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple[PropertyCheck, ...]

    @property
    def consistent(self) -> bool:
        return all(c.status != "violated" for c in self.checks)

    def status(self, name: str) -> str:
        for c in self.checks:
            if c.name == name:
                return c.status
        raise KeyError(name)


def _evaluate(func, *args):
    with np.errstate(all="ignore"):
        return np.asarray(func(*args), dtype=float)


def _finite(values, where):
    if not np.all(np.isfinite(values)):
        raise EvaluationError(f"non-finite value while evaluating {where}")
    return values


def _first_violation(mask, points):
    if not np.any(mask):
        return None
    i = int(np.flatnonzero(mask)[0])
    return points[i] if np.ndim(points) == 1 else tuple(points[i])


def validate_nonlinearity(desc: Nonlinearity, sample_range: float, samples: int) -> ValidationReport:
    """Spot-check declared metadata on [-R, R]; the endpoints stand in for +-inf."""
    if not sample_range > 0:
        raise ValueError("sample_range must be positive")
    if samples < 16:
        raise ValueError("at least 16 samples are required")
    R = float(sample_range)
    u = np.unique(np.concatenate([np.linspace(-R, R, samples), [-R, R]]))
    checks = []

    if desc.arity == 2:
        uu, vv = np.meshgrid(u, u, indexing="ij")
        vals = _finite(_evaluate(desc.func, uu, vv), desc.name)
        pts = np.column_stack([uu.ravel(), vv.ravel()])
        flat = vals.ravel()
        i = int(np.argmax(np.abs(flat)))
        if abs(flat[i]) <= desc.bound:
            checks.append(PropertyCheck("bound", "consistent"))
        else:
            checks.append(PropertyCheck("bound", "violated", tuple(pts[i]), f"|g| = {abs(flat[i]):.6g}"))
        if desc.thresholds is not None:
            c, d, C, D = desc.thresholds
            key = pts[:, 0] if desc.threshold_arg == "u" else pts[:, 1]
            checks.extend(_threshold_checks(key, flat, pts, c, d, C, D))
        return ValidationReport(tuple(checks))

    g = _finite(_evaluate(desc.func, u), desc.name)
    i = int(np.argmax(np.abs(g)))
    if abs(g[i]) <= desc.bound:
        checks.append(PropertyCheck("bound", "consistent"))
    else:
        checks.append(PropertyCheck("bound", "violated", float(u[i]), f"|g| = {abs(g[i]):.6g}"))

    if desc.limits is not None:
        lo, hi = desc.limits
        bad = (g <= lo) | (g >= hi)
        at = _first_violation(bad, u)
        checks.append(
            PropertyCheck("limits", "consistent" if at is None else "violated", at)
        )

    if desc.thresholds is not None:
        c, d, C, D = desc.thresholds
        checks.extend(_threshold_checks(u, g, u, c, d, C, D))

    if desc.antiderivative_limits is not None:
        lo, hi = desc.antiderivative_limits
        G = np.array([primitive_eval(desc, x) for x in u])
        bad = (G <= lo) | (G >= hi)
        at = _first_violation(bad, u)
        checks.append(
            PropertyCheck("antiderivative_limits", "consistent" if at is None else "violated", at)
        )

    if desc.sign_property:
        nz = u != 0.0
        bad = np.zeros_like(u, dtype=bool)
        bad[nz] = u[nz] * g[nz] <= 0.0
        at = _first_violation(bad, u)
        checks.append(PropertyCheck("sign_property", "consistent" if at is None else "violated", at))

    return ValidationReport(tuple(checks))


def _threshold_checks(key, vals, pts, c, d, C, D):
    out = []
    for name, mask, bad in (
        ("threshold_upper", key > d, vals <= D),
        ("threshold_lower", key < c, vals >= C),
    ):
        if not np.any(mask):
            out.append(PropertyCheck(name, "unchecked", None, "no samples beyond the threshold"))
            continue
        at = _first_violation(mask & bad, pts)
        out.append(PropertyCheck(name, "consistent" if at is None else "violated", at))
    return out


def primitive_eval(desc: Nonlinearity, u: float) -> float:
    """G(u) = integral of g from 0 to u by adaptive quadrature."""
    if desc.arity != 1:
        raise ValueError("primitive_eval needs a one-argument nonlinearity")
    u = float(u)
    if u == 0.0:
        return 0.0

    def integrand(t):
        val = float(desc.func(t))
        if not math.isfinite(val):
            raise EvaluationError(f"{desc.name} is not finite at {t!r}")
        return val

    val, _ = integrate.quad(integrand, 0.0, u, epsabs=1e-13, epsrel=1e-13, limit=400)
    return float(val)
