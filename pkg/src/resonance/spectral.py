"""Closed-form eigenbases of the Laplacian and the spectral operations built on them.

Three domains are supported, each with an analytic spectrum:

* ``interval``: (0, pi) with Dirichlet conditions, phi_k = sqrt(2/pi) sin kx, lambda_k = k^2
* ``square``: (0, pi)^2 with Dirichlet conditions, phi_jl = (2/pi) sin jx sin ly,
  lambda_jl = j^2 + l^2
* ``circle``: 2*pi periodic functions, with the constant mode and the pairs
  cos nt / sqrt(pi), sin nt / sqrt(pi) at eigenvalue n^2

Fields carry both their coefficients in the orthonormal eigenbasis and their
samples on the quadrature grid.  Inner products and L2 norms are taken on the
coefficients, where they are exact.
"""

from __future__ import annotations

import math
from functools import lru_cache
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigurationError, DimensionError, EvaluationError, NonOrthogonalForcing

GROUP_TOL = 1e-9
ORTHO_TOL = 1e-8
OVERSAMPLING = 4

DOMAIN_KINDS = ("interval", "square", "circle")


@dataclass(frozen=True)
class Domain:
    kind: str
    grid_size: int

    def __post_init__(self):
        if self.kind not in DOMAIN_KINDS:
            raise ConfigurationError(f"unknown domain kind {self.kind!r}")
        if int(self.grid_size) != self.grid_size or self.grid_size < 1:
            raise ConfigurationError(f"grid_size must be a positive integer, got {self.grid_size!r}")

    @property
    def dim(self) -> int:
        return 2 if self.kind == "square" else 1

    @property
    def periodic(self) -> bool:
        return self.kind == "circle"

    def nodes_1d(self) -> np.ndarray:
        m = self.grid_size
        if self.periodic:
            return 2.0 * np.pi * np.arange(m) / m
        return (np.arange(m) + 0.5) * np.pi / m

    def weight_1d(self) -> float:
        return (2.0 * np.pi if self.periodic else np.pi) / self.grid_size


@dataclass(frozen=True)
class EigenGroup:
    """A maximal set of basis modes sharing one eigenvalue.

    ``complete`` is False when the truncated square basis holds only part
    of the eigenspace; such groups cannot serve as resonant groups.
    """

    value: float
    members: tuple[int, ...]
    complete: bool = True

    @property
    def size(self) -> int:
        return len(self.members)


def _dirichlet_matrix(n: int, x: np.ndarray) -> np.ndarray:
    k = np.arange(1, n + 1)[:, None]
    return np.sqrt(2.0 / np.pi) * np.sin(k * x[None, :])


def _periodic_matrix(n_max: int, t: np.ndarray) -> np.ndarray:
    rows = [np.full_like(t, 1.0 / np.sqrt(2.0 * np.pi))]
    for n in range(1, n_max + 1):
        rows.append(np.cos(n * t) / np.sqrt(np.pi))
        rows.append(np.sin(n * t) / np.sqrt(np.pi))
    return np.array(rows)


def _square_group_complete(value: int, n: int) -> bool:
    for j in range(1, math.isqrt(value) + 1):
        rest = value - j * j
        if rest < 1:
            continue
        l = math.isqrt(rest)
        if l * l == rest and (j > n or l > n):
            return False
    return True


@dataclass(frozen=True, eq=False)
class SpectralBasis:
    """Truncated orthonormal eigenbasis of -Laplacian on a :class:`Domain`.

    ``n_modes`` counts modes per dimension on the interval and square and
    the highest frequency on the circle.  Use :func:`build_basis` rather
    than constructing this directly.
    """

    domain: Domain
    n_modes: int
    labels: tuple
    eigenvalues: np.ndarray
    groups: tuple[EigenGroup, ...]
    quad_weights: np.ndarray
    _matrix: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return len(self.labels)

    @property
    def grid_points(self) -> int:
        return self.quad_weights.size

    @property
    def points(self) -> np.ndarray:
        """Node coordinates, shape (M,) in 1D and (M*M, 2) on the square."""
        x = self.domain.nodes_1d()
        if self.domain.dim == 1:
            return x
        xx, yy = np.meshgrid(x, x, indexing="ij")
        return np.column_stack([xx.ravel(), yy.ravel()])

    # transforms -------------------------------------------------------

    def _analyze_coeffs(self, samples: np.ndarray) -> np.ndarray:
        w = self.domain.weight_1d()
        if self.domain.dim == 1:
            return self._matrix @ samples * w
        m = self.domain.grid_size
        grid = samples.reshape(m, m)
        return (self._matrix @ grid @ self._matrix.T).ravel() * (w * w)

    def _synthesize_samples(self, coeffs: np.ndarray) -> np.ndarray:
        if self.domain.dim == 1:
            return self._matrix.T @ coeffs
        n = self.n_modes
        return (self._matrix.T @ coeffs.reshape(n, n) @ self._matrix).ravel()

    def analyze(self, samples) -> Field:
        samples = np.asarray(samples, dtype=float)
        if samples.shape != (self.grid_points,):
            raise DimensionError(
                f"expected {self.grid_points} samples, got shape {samples.shape}"
            )
        return self.from_coeffs(self._analyze_coeffs(samples))

    def synthesize(self, coeffs) -> Field:
        return self.from_coeffs(coeffs)

    def from_coeffs(self, coeffs) -> Field:
        coeffs = np.array(coeffs, dtype=float)
        if coeffs.shape != (self.size,):
            raise DimensionError(f"expected {self.size} coefficients, got shape {coeffs.shape}")
        coeffs.setflags(write=False)
        samples = self._synthesize_samples(coeffs)
        samples.setflags(write=False)
        return Field(self, coeffs, samples)

    def zeros(self) -> Field:
        return self.from_coeffs(np.zeros(self.size))

    def mode(self, label, amplitude: float = 1.0) -> Field:
        c = np.zeros(self.size)
        c[self.index_of(label)] = amplitude
        return self.from_coeffs(c)

    def sample(self, func: Callable) -> Field:
        """Analyze a function given as a callable of the node coordinates."""
        pts = self.points
        vals = func(pts) if self.domain.dim == 1 else func(pts[:, 0], pts[:, 1])
        return self.analyze(np.broadcast_to(np.asarray(vals, dtype=float), (self.grid_points,)))

    def evaluate(self, coeffs, x) -> np.ndarray:
        """Evaluate a coefficient vector at arbitrary 1D points (interval/circle)."""
        if self.domain.dim != 1:
            raise ConfigurationError("evaluate() is only available on 1D domains")
        x = np.asarray(x, dtype=float)
        if self.domain.periodic:
            mat = _periodic_matrix(self.n_modes, x.ravel())
        else:
            mat = _dirichlet_matrix(self.n_modes, x.ravel())
        return (np.asarray(coeffs) @ mat).reshape(x.shape)

    # spectrum ---------------------------------------------------------

    def index_of(self, label) -> int:
        if isinstance(label, list):
            label = tuple(label)
        try:
            return self.labels.index(label)
        except ValueError:
            raise ConfigurationError(f"mode {label!r} is not in the basis") from None

    def group_at(self, value: float) -> EigenGroup | None:
        for g in self.groups:
            if abs(g.value - value) < GROUP_TOL:
                return g
        return None

    def group_for(self, index) -> EigenGroup:
        """Resolve a resonant index to its eigenvalue group.

        Interval: mode number k.  Circle: frequency n.  Square: a mode
        label (j, l), or an integer eigenvalue j^2 + l^2.
        """
        kind = self.domain.kind
        if kind == "interval":
            value = float(int(index)) ** 2
        elif kind == "circle":
            value = float(int(index)) ** 2
        elif isinstance(index, (tuple, list)):
            j, l = (int(i) for i in index)
            value = float(j * j + l * l)
        else:
            value = float(index)
        grp = self.group_at(value)
        if grp is None:
            raise ConfigurationError(f"index {index!r} does not name an eigenvalue of the basis")
        return grp

    def is_resonant(self, shift: float) -> bool:
        return self.group_at(shift) is not None

    def derivative(self, f: Field) -> Field:
        """Exact derivative d/dt of a periodic field."""
        if not self.domain.periodic:
            raise ConfigurationError("derivative() as a Field is only defined on the circle")
        c = f.coeffs
        d = np.zeros_like(c)
        for n in range(1, self.n_modes + 1):
            ic, is_ = 2 * n - 1, 2 * n
            d[ic] = n * c[is_]
            d[is_] = -n * c[ic]
        return self.from_coeffs(d)

    def derivative_samples(self, f: Field) -> np.ndarray:
        """Grid samples of u' for 1D fields (cosine series on the interval)."""
        if self.domain.periodic:
            return self.derivative(f).samples
        if self.domain.dim != 1:
            raise ConfigurationError("derivative samples are only defined in 1D")
        k = np.arange(1, self.n_modes + 1)
        x = self.domain.nodes_1d()
        mat = np.sqrt(2.0 / np.pi) * k[:, None] * np.cos(k[:, None] * x[None, :])
        return (f.coeffs * 1.0) @ mat


@dataclass(frozen=True, eq=False)
class Field:
    """A function held as eigenbasis coefficients plus its grid samples."""

    basis: SpectralBasis
    coeffs: np.ndarray
    samples: np.ndarray

    def _check(self, other: Field):
        if other.basis is not self.basis:
            raise DimensionError("fields live on different bases")

    def __add__(self, other: Field) -> Field:
        self._check(other)
        return self.basis.from_coeffs(self.coeffs + other.coeffs)

    def __sub__(self, other: Field) -> Field:
        self._check(other)
        return self.basis.from_coeffs(self.coeffs - other.coeffs)

    def __mul__(self, scalar: float) -> Field:
        return self.basis.from_coeffs(self.coeffs * float(scalar))

    __rmul__ = __mul__

    def __neg__(self) -> Field:
        return self.basis.from_coeffs(-self.coeffs)

    def inner(self, other: Field) -> float:
        self._check(other)
        return float(self.coeffs @ other.coeffs)

    def l2_norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.samples))) if self.samples.size else 0.0

    def h2_norm(self) -> float:
        """Discrete W^{2,2}-type norm sqrt(sum (1 + lambda_n)^2 c_n^2); diagnostic only."""
        return float(np.linalg.norm((1.0 + self.basis.eigenvalues) * self.coeffs))

    def quadrature_l2(self) -> float:
        w = self.basis.domain.weight_1d() ** self.basis.domain.dim
        return float(np.sqrt(w * np.sum(self.samples**2)))


def build_basis(domain: Domain, n_modes: int) -> SpectralBasis:
    if int(n_modes) != n_modes or n_modes < 1:
        raise ConfigurationError(f"n_modes must be a positive integer, got {n_modes!r}")
    n_modes = int(n_modes)
    if domain.grid_size < OVERSAMPLING * n_modes:
        raise ConfigurationError(
            f"grid_size {domain.grid_size} is below {OVERSAMPLING} x n_modes = {OVERSAMPLING * n_modes}"
        )
    x = domain.nodes_1d()
    w = domain.weight_1d()

    if domain.kind == "interval":
        labels = tuple(range(1, n_modes + 1))
        lam = np.array([k * k for k in labels], dtype=float)
        matrix = _dirichlet_matrix(n_modes, x)
        weights = np.full(domain.grid_size, w)
    elif domain.kind == "square":
        labels = tuple((j, l) for j in range(1, n_modes + 1) for l in range(1, n_modes + 1))
        lam = np.array([j * j + l * l for j, l in labels], dtype=float)
        matrix = _dirichlet_matrix(n_modes, x)
        weights = np.full(domain.grid_size**2, w * w)
    else:
        labels = (("const", 0),) + tuple(
            (kind, n) for n in range(1, n_modes + 1) for kind in ("cos", "sin")
        )
        lam = np.array([n * n for _, n in labels], dtype=float)
        matrix = _periodic_matrix(n_modes, x)
        weights = np.full(domain.grid_size, w)

    groups = []
    for value in np.unique(lam):
        members = tuple(int(i) for i in np.flatnonzero(np.abs(lam - value) < GROUP_TOL))
        complete = True
        if domain.kind == "square":
            complete = _square_group_complete(int(round(value)), n_modes)
        groups.append(EigenGroup(float(value), members, complete))

    lam.setflags(write=False)
    weights.setflags(write=False)
    matrix.setflags(write=False)
    return SpectralBasis(domain, n_modes, labels, lam, tuple(groups), weights, matrix)


def make_basis(kind: str, n_modes: int, grid_size: int | None = None) -> SpectralBasis:
    """Shared basis for ``(kind, n_modes, grid)``; the grid defaults to 4 nodes per mode.

    Bases are immutable, so equal arguments return the same object and
    fields built from them can be combined.
    """
    if grid_size is None:
        grid_size = OVERSAMPLING * int(n_modes)
    return _shared_basis(kind, int(n_modes), int(grid_size))


@lru_cache(maxsize=64)
def _shared_basis(kind: str, n_modes: int, grid_size: int) -> SpectralBasis:
    return build_basis(Domain(kind, grid_size), n_modes)


def project(f: Field, group: EigenGroup) -> tuple[np.ndarray, Field]:
    """Split ``f`` into its coefficients on ``group`` and the complementary field."""
    idx = list(group.members)
    if any(i >= f.basis.size for i in idx):
        raise DimensionError("group does not belong to the field's basis")
    in_group = f.coeffs[idx].copy()
    rest = f.coeffs.copy()
    rest[idx] = 0.0
    return in_group, f.basis.from_coeffs(rest)


def orthogonalize(f: Field, groups: Sequence[EigenGroup]) -> Field:
    c = f.coeffs.copy()
    for g in groups:
        c[list(g.members)] = 0.0
    return f.basis.from_coeffs(c)


def resolvent_solve(
    basis: SpectralBasis,
    shift: float,
    f: Field,
    orthogonal_to: EigenGroup | None = None,
) -> Field:
    """Solve (Laplacian + shift) u = f mode by mode.

    At a resonant shift the forcing must be orthogonal to the kernel
    (within ``ORTHO_TOL * ||f||``) and the returned solution is the one
    with zero coefficients on the kernel.
    """
    if f.basis is not basis:
        raise DimensionError("forcing does not live on this basis")
    lam = basis.eigenvalues
    kernel = basis.group_at(shift)
    if kernel is not None and orthogonal_to is not None and set(kernel.members) != set(
        orthogonal_to.members
    ):
        raise ConfigurationError(
            f"shift {shift:g} is resonant with eigenvalue {kernel.value:g}, "
            f"but orthogonal_to names eigenvalue {orthogonal_to.value:g}"
        )
    selected = set()
    for g in (kernel, orthogonal_to):
        if g is not None:
            selected.update(g.members)
    idx = sorted(selected)

    c = f.coeffs
    if idx:
        proj = float(np.max(np.abs(c[idx])))
        tol = ORTHO_TOL * float(np.linalg.norm(c))
        if proj > tol:
            raise NonOrthogonalForcing(shift, proj, tol)

    denom = shift - lam
    denom[idx] = 1.0
    u = c / denom
    u[idx] = 0.0
    return basis.from_coeffs(u)


def apply_pointwise(
    basis: SpectralBasis,
    func: Callable,
    inputs: Sequence[Field],
    with_derivative: bool = False,
) -> Field:
    """Apply ``func`` nodewise to the sampled inputs and analyze the result.

    With ``with_derivative`` the single input's derivative samples are
    passed as a trailing argument, i.e. ``func(u, du)``.
    """
    for f in inputs:
        if f.basis is not basis:
            raise DimensionError("pointwise inputs must share the basis")
    args = [f.samples for f in inputs]
    if with_derivative:
        if len(inputs) != 1:
            raise ConfigurationError("derivative input requires exactly one field")
        args.append(basis.derivative_samples(inputs[0]))
    with np.errstate(all="ignore"):
        out = np.asarray(func(*args), dtype=float)
    out = np.broadcast_to(out, (basis.grid_points,))
    if not np.all(np.isfinite(out)):
        bad = int(np.flatnonzero(~np.isfinite(out))[0])
        raise EvaluationError(f"pointwise map is not finite at node {bad}")
    return basis.analyze(np.array(out))
