import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from resonance import make_basis, resolvent_solve
from resonance.errors import ConfigurationError, DimensionError, EvaluationError, NonOrthogonalForcing
from resonance.spectral import ORTHO_TOL, Domain, apply_pointwise, build_basis, orthogonalize, project


@pytest.mark.parametrize("kind,n", [("interval", 12), ("circle", 6), ("square", 5)])
def test_orthonormal_on_grid(kind, n):
    b = make_basis(kind, n)
    M = b._matrix
    w = b.domain.weight_1d()
    if b.domain.dim == 1:
        gram = M @ M.T * w
    else:
        g1 = M @ M.T * w
        gram = np.kron(g1, g1)
    assert np.max(np.abs(gram - np.eye(b.size))) < 1e-12


def test_interval_spectrum():
    b = make_basis("interval", 8)
    assert b.eigenvalues.tolist() == [1, 4, 9, 16, 25, 36, 49, 64]
    assert all(g.size == 1 for g in b.groups)


def test_circle_groups():
    b = make_basis("circle", 3)
    sizes = {g.value: [b.labels[i] for i in g.members] for g in b.groups}
    assert sizes[0.0] == [("const", 0)]
    assert sizes[1.0] == [("cos", 1), ("sin", 1)]
    assert sizes[4.0] == [("cos", 2), ("sin", 2)]
    assert sizes[9.0] == [("cos", 3), ("sin", 3)]


def test_square_double_eigenvalue():
    b = make_basis("square", 3)
    g = b.group_at(5.0)
    assert sorted(b.labels[i] for i in g.members) == [(1, 2), (2, 1)]
    assert g.complete
    # 10 = 1 + 9 = 9 + 1 is complete at n=3, while 25 = 9 + 16 is not resolved
    assert b.group_at(10.0).complete


def test_incomplete_square_group_flagged():
    assert make_basis("square", 4).group_at(32.0).complete  # 16 + 16 only
    assert not make_basis("square", 5).group_at(50.0).complete  # 25 + 25 present, 1 + 49 missing


def test_grid_must_oversample():
    with pytest.raises(ConfigurationError):
        build_basis(Domain("interval", 31), 8)
    with pytest.raises(ConfigurationError):
        Domain("torus", 16)


def test_analyze_basis_function(interval16):
    b = interval16
    f = b.sample(lambda x: math.sqrt(2 / math.pi) * np.sin(x))
    expect = np.zeros(b.size)
    expect[0] = 1.0
    assert np.max(np.abs(f.coeffs - expect)) < 1e-14


def test_synthesize_second_mode(interval16):
    b = interval16
    c = np.zeros(b.size)
    c[1] = 1.0
    f = b.synthesize(c)
    x = b.points
    assert np.max(np.abs(f.samples - math.sqrt(2 / math.pi) * np.sin(2 * x))) < 1e-12


def test_product_to_sum_gives_two_modes(interval16):
    # sin x cos 2x = (sin 3x - sin x) / 2
    b = interval16
    f = b.sample(lambda x: np.sin(x) * np.cos(2 * x))
    nz = np.flatnonzero(np.abs(f.coeffs) > 1e-13)
    assert (nz + 1).tolist() == [1, 3]
    from scipy.integrate import quad

    for k in (1, 3):
        ref, _ = quad(lambda x: np.sin(x) * np.cos(2 * x) * math.sqrt(2 / math.pi) * np.sin(k * x), 0, math.pi)
        assert abs(f.coeffs[k - 1] - ref) < 1e-12


def test_sine_product_is_not_band_limited(interval16):
    # sin x sin 2x is a cosine combination, so its sine series has only even modes, infinitely many
    b = interval16
    f = b.sample(lambda x: np.sin(x) * np.sin(2 * x))
    nz = np.flatnonzero(np.abs(f.coeffs) > 1e-13) + 1
    assert np.all(nz % 2 == 0) and nz.size > 2
    from scipy.integrate import quad

    ref, _ = quad(lambda x: np.sin(x) * np.sin(2 * x) * math.sqrt(2 / math.pi) * np.sin(2 * x), 0, math.pi)
    assert abs(f.coeffs[1] - ref) < 1e-3


def test_analyze_length_mismatch(interval16):
    with pytest.raises(DimensionError):
        interval16.analyze(np.zeros(10))
    with pytest.raises(DimensionError):
        interval16.synthesize(np.zeros(3))


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(["interval", "circle", "square"]), st.integers(0, 2**31 - 1))
def test_parseval_and_roundtrip(kind, seed):
    b = make_basis(kind, 6)
    r = np.random.default_rng(seed)
    c = r.standard_normal(b.size)
    f = b.from_coeffs(c)
    assert abs(f.quadrature_l2() ** 2 - np.sum(c**2)) <= 1e-10 * np.sum(c**2)
    assert np.max(np.abs(b.analyze(f.samples).coeffs - c)) < 1e-12
    assert np.max(np.abs(b.analyze(f.samples).samples - f.samples)) < 1e-10


def test_project_examples(interval16, circle16):
    b = interval16
    f = b.mode(1, 2.0) + b.mode(2, 3.0)
    ing, comp = project(f, b.group_for(1))
    assert ing.tolist() == [2.0]
    assert np.allclose(comp.coeffs, b.mode(2, 3.0).coeffs)
    ing, _ = project(b.mode(5), b.group_for(2))
    assert ing.tolist() == [0.0]

    c = circle16
    f = c.sample(lambda t: 4 * np.cos(2 * t) + np.sin(2 * t) + np.cos(5 * t))
    ing, comp = project(f, c.group_for(2))
    # in_group coefficients are on the normalized basis, so divide out 1/sqrt(pi)
    assert np.allclose(ing / math.sqrt(math.pi), [4.0, 1.0], atol=1e-13)
    assert np.allclose(comp.coeffs, c.sample(lambda t: np.cos(5 * t)).coeffs, atol=1e-13)
    A = math.sqrt(math.pi) * ing[0]
    assert abs(A - 4 * math.pi) < 1e-12


def test_orthogonalize(interval16):
    b = interval16
    f = orthogonalize(b.mode(1) + b.mode(3), [b.group_for(1)])
    assert f.coeffs[0] == 0.0 and f.coeffs[2] == 1.0


def test_resolvent_examples(interval16):
    b = interval16
    u = resolvent_solve(b, 1.0, b.mode(2))
    assert abs(u.coeffs[1] + 1 / 3) < 1e-15
    with pytest.raises(NonOrthogonalForcing):
        resolvent_solve(b, 1.0, b.mode(1))
    u = resolvent_solve(b, 2.5, b.mode(1))
    assert abs(u.coeffs[0] - 1 / 1.5) < 1e-15


def test_resolvent_orthogonal_to_mismatch(interval16):
    b = interval16
    with pytest.raises(ConfigurationError):
        resolvent_solve(b, 1.0, b.mode(3), orthogonal_to=b.group_for(2))


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(["interval", "circle", "square"]), st.integers(0, 2**31 - 1), st.integers(0, 3))
def test_resolvent_exact_and_selects_complement(kind, seed, gi):
    b = make_basis(kind, 6)
    r = np.random.default_rng(seed)
    grp = b.groups[gi]
    c = r.standard_normal(b.size)
    c[list(grp.members)] = 0.0
    f = b.from_coeffs(c)
    u = resolvent_solve(b, grp.value, f, orthogonal_to=grp)
    res = (grp.value - b.eigenvalues) * u.coeffs - f.coeffs
    assert np.linalg.norm(res) < 1e-12
    assert np.all(u.coeffs[list(grp.members)] == 0.0)


def test_ortho_tolerance_is_relative(interval16):
    b = interval16
    c = np.zeros(b.size)
    c[1] = 1.0
    c[0] = 0.5 * ORTHO_TOL
    resolvent_solve(b, 1.0, b.from_coeffs(c))
    c[0] = 2 * ORTHO_TOL
    with pytest.raises(NonOrthogonalForcing):
        resolvent_solve(b, 1.0, b.from_coeffs(c))


def test_apply_pointwise_examples(interval16):
    b = interval16
    z = b.zeros()
    assert np.all(apply_pointwise(b, lambda u: 0.0 * u, [b.mode(1)]).coeffs == 0.0)
    assert np.all(apply_pointwise(b, np.arctan, [z]).coeffs == 0.0)
    u = b.mode(1, 10.0)
    out = apply_pointwise(b, np.tanh, [u])
    from scipy.integrate import quad

    phi = lambda x: math.sqrt(2 / math.pi) * np.sin(x)  # noqa: E731
    ref, _ = quad(lambda x: np.tanh(10 * phi(x)) * phi(x), 0, math.pi, epsabs=1e-13, limit=200)
    # aliasing of the non-band-limited tanh is the only error source; 64 nodes resolve it to ~1e-4
    assert abs(out.coeffs[0] - ref) < 1e-3
    fine = make_basis("interval", 16, grid_size=640)
    out_fine = apply_pointwise(fine, np.tanh, [fine.mode(1, 10.0)])
    assert abs(out_fine.coeffs[0] - ref) < 1e-8


def test_apply_pointwise_rejects_non_finite(interval16):
    b = interval16
    with pytest.raises(EvaluationError):
        apply_pointwise(b, lambda u: 1.0 / (u - u), [b.mode(1)])


def test_circle_derivative(circle16):
    c = circle16
    f = c.sample(lambda t: np.sin(3 * t) + 0.5 * np.cos(t))
    d = c.derivative(f)
    assert np.max(np.abs(d.samples - (3 * np.cos(3 * c.points) - 0.5 * np.sin(c.points)))) < 1e-12


def test_field_norms(interval16):
    f = interval16.mode(2, 3.0)
    assert f.l2_norm() == 3.0
    assert abs(f.quadrature_l2() - 3.0) < 1e-13
    assert abs(f.h2_norm() - 15.0) < 1e-13
    with pytest.raises(DimensionError):
        f + make_basis("interval", 8).mode(1)
