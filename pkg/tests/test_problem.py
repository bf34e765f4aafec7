import math

import numpy as np
import pytest

from resonance import ForcingSpec, ProblemSpec, SpecificationError, lift, make_nonlinearity


def arctan():
    return make_nonlinearity("arctan")


def test_minimal_scalar_spec_validates():
    p = ProblemSpec("scalar_resonant", "interval", 16, k=1, nonlinearities={"g": arctan()},
                    forcings={"f": ForcingSpec.from_dict({1: 0.5, 3: 0.1})}).validate()
    assert p.grid == 64
    assert p.forcing("f").coeffs[0] == 0.5


@pytest.mark.parametrize(
    "kwargs,key",
    [
        (dict(family="nope", domain="interval", n_modes=8), "family"),
        (dict(family="scalar_resonant", domain="disk", n_modes=8, k=1), "domain"),
        (dict(family="scalar_resonant", domain="interval", n_modes=8), "k"),
        (dict(family="scalar_resonant", domain="interval", n_modes=8, k=20), "k"),
        (dict(family="scalar_resonant", domain="square", n_modes=8, k=(1, 2)), "k"),
        (dict(family="periodic_LL", domain="interval", n_modes=8, n=1), "domain"),
        (dict(family="periodic_LL", domain="circle", n_modes=8), "n"),
        (dict(family="scalar_resonant", domain="interval", n_modes=8, k=1, grid_size=10), "grid"),
    ],
)
def test_invalid_specs_name_the_key(kwargs, key):
    kwargs.setdefault("nonlinearities", {"g": arctan()})
    with pytest.raises(SpecificationError) as exc:
        ProblemSpec(**kwargs).validate()
    assert exc.value.key == key


def test_arity_enforced():
    with pytest.raises(SpecificationError, match="2 argument"):
        ProblemSpec("system_nonresonant", "interval", 8, matrix=(2.5, 0, 0, 7.3),
                    nonlinearities={"f": arctan(), "g": arctan()}).validate()
    with pytest.raises(SpecificationError, match="needs nonlinearity"):
        ProblemSpec("periodic_LL", "circle", 8, n=1).validate()


def test_forcing_outside_basis():
    with pytest.raises(SpecificationError):
        ProblemSpec("scalar_resonant", "interval", 8, k=1, nonlinearities={"g": arctan()},
                    forcings={"f": ForcingSpec.from_dict({12: 1.0})}).validate()


def test_trig_forcing_amplitudes():
    p = ProblemSpec("periodic_LL", "circle", 8, n=1, nonlinearities={"g": arctan()},
                    forcings={"f": ForcingSpec.from_trig(cos={1: 2.0}, const=0.5)}).validate()
    f = p.forcing("f")
    t = p.basis().points
    assert np.max(np.abs(f.samples - (0.5 + 2.0 * np.cos(t)))) < 1e-13
    scaled = p.with_forcing_scaled("f", 3.0).forcing("f")
    assert np.max(np.abs(scaled.samples - 3 * f.samples)) < 1e-13


def test_system_matrix_classification_enforced():
    f = lift(arctan(), "u", thresholds=(-1, 1, -0.7, 0.7))
    g = lift(arctan(), "v", thresholds=(-1, 1, -0.7, 0.7))
    with pytest.raises(SpecificationError, match="classifies as case_A"):
        ProblemSpec("system_nonresonant", "interval", 8, matrix=(1.0, 0, 0, 2.5),
                    nonlinearities={"f": f, "g": g}).validate()
    with pytest.raises(SpecificationError, match="complex"):
        ProblemSpec("system_linear", "interval", 8, matrix=(0, -1, 1, 0)).validate()
    p = ProblemSpec("system_case_C", "interval", 8, k=2, nonlinearities={"f": f, "g": g}).validate()
    assert p.coupling_matrix().tolist() == [[4.0, 1.0], [0.0, 4.0]]


def test_case_c_needs_g_thresholds():
    f = lift(arctan(), "u")
    g = lift(arctan(), "v")
    with pytest.raises(SpecificationError, match="thresholds"):
        ProblemSpec("system_case_C", "interval", 8, k=1, nonlinearities={"f": f, "g": g}).validate()


def test_with_modes_keeps_forcing():
    p = ProblemSpec("scalar_resonant", "interval", 8, k=1, nonlinearities={"g": arctan()},
                    forcings={"f": ForcingSpec.from_dict({2: 1.0})})
    q = p.with_modes(32).validate()
    assert q.basis().size == 32 and q.forcing("f").coeffs[1] == 1.0
    assert math.isclose(q.forcing("f").l2_norm(), 1.0)
