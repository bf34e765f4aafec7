"""Problem descriptions for every supported family.

Families and the equations they stand for (Delta is the Laplacian, or
d^2/dt^2 on the circle):

=================== ==========================================================
scalar_resonant     Delta u + lambda_k u + g(u) = f, lambda_k simple
scalar_multi        same, lambda_k of any multiplicity
periodic_LL         u'' + n^2 u + g(u) = f, 2 pi periodic
periodic_damped     u'' + g(u) u' + n^2 u = f
periodic_FN         u'' + n^2 u + g(u) = e, e orthogonal to cos nt, sin nt
system_linear       Delta U + A U = (h, k)
system_nonresonant  Delta U + A U + (f(u,v), g(u,v)) = (h, k), A off the spectrum
system_case_A       canonical diag(lambda_k, mu), mu off the spectrum
system_case_B       canonical diag(lambda_k, lambda_m)
system_case_C       canonical Jordan block [[lambda_k, 1], [0, lambda_k]]
=================== ==========================================================
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigurationError, SpecificationError
from .nonlinearity import Nonlinearity
from .spectral import DOMAIN_KINDS, Field, SpectralBasis, make_basis

SCALAR_FAMILIES = ("scalar_resonant", "scalar_multi")
PERIODIC_FAMILIES = ("periodic_LL", "periodic_damped", "periodic_FN")
SYSTEM_FAMILIES = (
    "system_linear",
    "system_nonresonant",
    "system_case_A",
    "system_case_B",
    "system_case_C",
)
FAMILIES = SCALAR_FAMILIES + PERIODIC_FAMILIES + SYSTEM_FAMILIES


def cached_basis(kind: str, n_modes: int, grid_size: int) -> SpectralBasis:
    return make_basis(kind, n_modes, grid_size)


def _label_key(label):
    return label if isinstance(label, tuple) else (label,)


_TRIG_SCALE = {"const": math.sqrt(2.0 * math.pi), "cos": math.sqrt(math.pi), "sin": math.sqrt(math.pi)}


@dataclass(frozen=True)
class ForcingSpec:
    """Forcing given by finitely many eigenbasis coefficients.

    Labels follow the basis: ``k`` on the interval, ``(j, l)`` on the
    square, ``("const", 0)``, ``("cos", n)``, ``("sin", n)`` on the circle.
    Coefficients refer to the orthonormal eigenfunctions unless ``trig`` is
    set, in which case circle values are raw amplitudes of 1, cos nt, sin nt.
    """

    coeffs: tuple = ()
    description: str = ""
    trig: bool = False

    @classmethod
    def from_dict(cls, mapping: dict, description: str = "", trig: bool = False) -> ForcingSpec:
        items = tuple(sorted(((k, float(v)) for k, v in mapping.items() if v != 0.0),
                             key=lambda kv: _label_key(kv[0])))
        return cls(items, description, trig)

    @classmethod
    def from_trig(cls, cos=None, sin=None, const=0.0, description="") -> ForcingSpec:
        """Periodic forcing ``const + sum a_n cos nt + b_n sin nt`` in raw trig amplitudes."""
        d = {("const", 0): const}
        d.update({("cos", int(n)): a for n, a in (cos or {}).items()})
        d.update({("sin", int(n)): b for n, b in (sin or {}).items()})
        return cls.from_dict(d, description, trig=True)

    @classmethod
    def from_field(cls, f: Field, description: str = "") -> ForcingSpec:
        return cls.from_dict(
            {lab: float(c) for lab, c in zip(f.basis.labels, f.coeffs) if c != 0.0}, description
        )

    def as_dict(self) -> dict:
        return dict(self.coeffs)

    def scaled(self, factor: float) -> ForcingSpec:
        return ForcingSpec(tuple((k, v * factor) for k, v in self.coeffs), self.description, self.trig)

    def to_field(self, basis: SpectralBasis) -> Field:
        c = np.zeros(basis.size)
        for label, value in self.coeffs:
            try:
                i = basis.index_of(label)
            except ConfigurationError:
                raise SpecificationError(
                    f"forcing mode {label!r} lies outside the basis", key=str(label)
                ) from None
            c[i] += value * _TRIG_SCALE[label[0]] if self.trig else value
        return basis.from_coeffs(c)


@dataclass(frozen=True)
class ProblemSpec:
    """A complete problem instance.

    ``nonlinearities`` uses the keys ``g`` (scalar and periodic families) or
    ``f`` and ``g`` (systems, first and second equation).  ``forcings`` uses
    ``f`` for scalar and periodic families and ``h``, ``k`` for systems.
    """

    family: str
    domain: str
    n_modes: int
    grid_size: int | None = None
    k: object = None
    m: object = None
    n: int | None = None
    mu: float | None = None
    matrix: tuple | None = None
    nonlinearities: dict = field(default_factory=dict)
    forcings: dict = field(default_factory=dict)
    thresholds_frame: str = "original"
    name: str = ""

    @property
    def grid(self) -> int:
        return int(self.grid_size) if self.grid_size else 4 * int(self.n_modes)

    def basis(self) -> SpectralBasis:
        return cached_basis(self.domain, int(self.n_modes), self.grid)

    def forcing(self, key: str) -> Field:
        spec = self.forcings.get(key)
        b = self.basis()
        return spec.to_field(b) if spec is not None else b.zeros()

    def with_forcing_scaled(self, key: str, factor: float) -> ProblemSpec:
        forcings = dict(self.forcings)
        forcings[key] = forcings.get(key, ForcingSpec()).scaled(factor)
        return replace(self, forcings=forcings)

    def with_modes(self, n_modes: int, grid_size: int | None = None) -> ProblemSpec:
        return replace(self, n_modes=n_modes, grid_size=grid_size)

    def coupling_matrix(self) -> np.ndarray:
        """The linear coupling matrix, built from the indices when not given."""
        if self.matrix is not None:
            return np.array(self.matrix, dtype=float).reshape(2, 2)
        b = self.basis()
        lam_k = b.group_for(self.k).value
        if self.family == "system_case_A":
            return np.array([[lam_k, 0.0], [0.0, float(self.mu)]])
        if self.family == "system_case_B":
            return np.array([[lam_k, 0.0], [0.0, b.group_for(self.m).value]])
        if self.family == "system_case_C":
            return np.array([[lam_k, 1.0], [0.0, lam_k]])
        raise SpecificationError("systems need a coupling matrix", key="matrix")

    @property
    def primary_forcing_key(self) -> str:
        return "h" if self.family in SYSTEM_FAMILIES else "f"

    def validate(self) -> ProblemSpec:
        """Check arity, index existence and family-specific requirements."""
        fam = self.family
        if fam not in FAMILIES:
            raise SpecificationError(f"unknown family {fam!r}", key="family")
        if self.domain not in DOMAIN_KINDS:
            raise SpecificationError(
                f"unknown domain {self.domain!r}; choose from {', '.join(DOMAIN_KINDS)}", key="domain"
            )
        if int(self.n_modes) != self.n_modes or self.n_modes < 1:
            raise SpecificationError("modes must be a positive integer", key="modes")
        try:
            b = self.basis()
        except ConfigurationError as exc:
            raise SpecificationError(str(exc), key="grid") from None

        if fam in PERIODIC_FAMILIES:
            if self.domain != "circle":
                raise SpecificationError(f"{fam} needs the circle domain", key="domain")
            if self.n is None or int(self.n) < 1:
                raise SpecificationError("periodic families need an integer n >= 1", key="n")
            if int(self.n) > self.n_modes:
                raise SpecificationError("n exceeds the basis frequency range", key="n")
        elif self.domain == "circle":
            raise SpecificationError(f"{fam} is posed on the interval or the square", key="domain")

        if fam in SCALAR_FAMILIES:
            if self.k is None:
                raise SpecificationError(f"{fam} needs a resonant index k", key="k")
            grp = self._group(b, self.k, "k")
            if fam == "scalar_resonant" and grp.size != 1:
                raise SpecificationError(
                    "scalar_resonant needs a simple eigenvalue; use scalar_multi", key="k"
                )

        allowed_forcings = ("h", "k") if fam in SYSTEM_FAMILIES else ("f",)
        for key in self.forcings:
            if key not in allowed_forcings:
                raise SpecificationError(f"{fam} has no forcing {key!r}", key=f"forcing.{key}")
        for key, spec in self.forcings.items():
            spec.to_field(b)

        if fam in SCALAR_FAMILIES or fam in PERIODIC_FAMILIES:
            self._need_nonlinearities({"g": 1})
        elif fam == "system_linear":
            if self.nonlinearities:
                raise SpecificationError("system_linear takes no nonlinearities", key="nonlinearity")
        else:
            self._need_nonlinearities({"f": 2, "g": 2})

        if fam in SYSTEM_FAMILIES:
            self._validate_system(b)
        if self.thresholds_frame not in ("original", "canonical"):
            raise SpecificationError(
                "thresholds_frame must be 'original' or 'canonical'", key="thresholds_frame"
            )
        return self

    def _group(self, b, index, key):
        try:
            grp = b.group_for(index)
        except ConfigurationError as exc:
            raise SpecificationError(str(exc), key=key) from None
        if not grp.complete:
            raise SpecificationError(
                f"eigenvalue {grp.value:g} is only partially resolved by the basis", key=key
            )
        return grp

    def _need_nonlinearities(self, arities: dict):
        for key, arity in arities.items():
            nl = self.nonlinearities.get(key)
            if nl is None:
                raise SpecificationError(f"{self.family} needs nonlinearity {key!r}", key=f"nonlinearity.{key}")
            if nl.arity != arity:
                raise SpecificationError(
                    f"nonlinearity {key!r} must take {arity} argument(s)", key=f"nonlinearity.{key}"
                )
        extra = set(self.nonlinearities) - set(arities)
        if extra:
            raise SpecificationError(
                f"unexpected nonlinearities {sorted(extra)}", key=f"nonlinearity.{sorted(extra)[0]}"
            )

    def _validate_system(self, b):
        from .systems import canonical_reduce, classify_system

        if self.family in ("system_case_A", "system_case_B", "system_case_C") and self.matrix is None:
            if self.k is None:
                raise SpecificationError("resonant systems need k or a matrix", key="k")
            self._group(b, self.k, "k")
            if self.family == "system_case_A" and self.mu is None:
                raise SpecificationError("system_case_A needs mu or a matrix", key="mu")
            if self.family == "system_case_B" and self.m is None:
                raise SpecificationError("system_case_B needs m or a matrix", key="m")
        if self.matrix is not None and len(tuple(self.matrix)) != 4:
            raise SpecificationError("matrix needs four entries a, b, c, d", key="matrix")
        A = self.coupling_matrix()
        if not np.all(np.isfinite(A)):
            raise SpecificationError("matrix entries must be finite", key="matrix")
        try:
            form = canonical_reduce(A)
            cls = classify_system(form, b)
        except Exception as exc:  # unsupported spectra surface as spec errors
            raise SpecificationError(str(exc), key="matrix") from None
        expected = {
            "system_linear": None,
            "system_nonresonant": "nonresonant",
            "system_case_A": "case_A",
            "system_case_B": "case_B",
            "system_case_C": "case_C",
        }[self.family]
        if expected is not None and cls.case != expected:
            raise SpecificationError(
                f"coupling matrix classifies as {cls.case}, not {expected}", key="matrix"
            )
        if cls.case == "unsupported":
            raise SpecificationError(cls.note or "unsupported resonance structure", key="matrix")
        if self.family in ("system_case_A", "system_case_B", "system_case_C"):
            for key in ("f", "g"):
                if self.nonlinearities[key].thresholds is None and self._needs_thresholds(key):
                    raise SpecificationError(
                        f"nonlinearity {key!r} needs thresholds for {self.family}",
                        key=f"nonlinearity.{key}",
                    )

    def _needs_thresholds(self, key: str) -> bool:
        return {
            "system_case_A": key == "f",
            "system_case_B": True,
            "system_case_C": key == "g",
        }[self.family]
