"""Forward-built forcings from a chosen state, for residual testing."""

from __future__ import annotations

from dataclasses import replace

from .engine import nonlinear_operator, resonant_setup
from .problem import SYSTEM_FAMILIES, ForcingSpec, ProblemSpec
from .spectral import Field


def manufacture(problem: ProblemSpec, u: Field, v: Field | None = None) -> ProblemSpec:
    """Copy of ``problem`` whose forcing makes ``u`` (and ``v``) an exact discrete solution."""
    b = problem.basis()
    lam = b.eigenvalues
    if problem.family not in SYSTEM_FAMILIES:
        _, _, shift = resonant_setup(problem)
        f = b.from_coeffs((shift - lam) * u.coeffs) + nonlinear_operator(problem)(u)
        return replace(problem, forcings={"f": ForcingSpec.from_field(f)}).validate()
    if v is None:
        raise ValueError("systems need both u and v")
    from .systems import _pair_map

    A = problem.coupling_matrix()
    h = b.from_coeffs((A[0, 0] - lam) * u.coeffs + A[0, 1] * v.coeffs)
    k = b.from_coeffs(A[1, 0] * u.coeffs + (A[1, 1] - lam) * v.coeffs)
    if problem.nonlinearities:
        F, G = _pair_map(problem)(u, v)
        h, k = h + F, k + G
    return replace(problem, forcings={"h": ForcingSpec.from_field(h), "k": ForcingSpec.from_field(k)}).validate()
