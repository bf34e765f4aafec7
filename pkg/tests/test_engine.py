import math

import numpy as np
import pytest

from resonance import (
    ConfigurationError,
    ForcingSpec,
    ProblemSpec,
    SolveOptions,
    landesman_lazer_interval,
    make_basis,
    make_nonlinearity,
    manufacture,
    residual,
    solve,
)
from resonance.engine import LSState, solve_periodic, solve_scalar_resonant

ARCTAN = make_nonlinearity("arctan")
TANH = make_nonlinearity("tanh", thresholds=(-1.0, 1.0, -0.7, 0.7))


def scalar(f=None, g=TANH, modes=32, k=1):
    return ProblemSpec("scalar_resonant", "interval", modes, k=k, nonlinearities={"g": g},
                       forcings={} if f is None else {"f": ForcingSpec.from_dict(f)}).validate()


def test_zero_forcing_odd_nonlinearity_gives_zero():
    rep = solve(scalar())
    assert rep.converged and rep.iterations == 0
    assert np.all(rep.solution["u"].coeffs == 0.0)


def test_manufactured_scalar_recovered():
    b = make_basis("interval", 32)
    u_star = b.from_coeffs(np.eye(b.size)[1] * 0.3)
    p = manufacture(scalar(), u_star)
    assert residual(p, u_star)[0] < 1e-14
    rep = solve(p, SolveOptions(tol=1e-11))
    assert rep.converged
    assert np.max(np.abs(rep.solution["u"].coeffs - u_star.coeffs)) < 1e-9


def test_options_validation():
    for bad in (dict(tol=0), dict(relax=1.5), dict(max_iter=0), dict(accel="broyden"), dict(depth=0)):
        with pytest.raises(ConfigurationError):
            SolveOptions(**bad)


def drift_problem():
    b = make_basis("interval", 64)
    _, L2 = landesman_lazer_interval(b, 1, -0.7, 0.7)
    return scalar({1: L2 + 0.5}, modes=64)


def test_ungated_violation_drifts():
    rep = solve(drift_problem())
    assert rep.status == "diverged"
    xi = np.array([t[3] for t in rep.trace])
    tail = np.diff(xi[20:])
    assert np.all(tail[:50] > 0)
    assert rep.condition[0].verdict == "fails"


def test_gate_blocks_solve():
    rep = solve(drift_problem(), SolveOptions(gate=True))
    assert rep.status == "condition_violated" and rep.iterations == 0
    ok = solve(scalar({1: 0.3, 2: 0.2}), SolveOptions(gate=True))
    assert ok.converged


def test_inside_interval_converges_and_fixed_point():
    p = scalar({1: 0.4, 3: -0.5})
    rep = solve(p, SolveOptions(tol=1e-11))
    assert rep.converged and rep.residual_l2 < 1e-11
    # restarting at the solution is already converged
    u = rep.solution["u"]
    again = solve(p, SolveOptions(tol=1e-10, init=u))
    assert again.iterations == 0


def test_complement_component_of_f_shifts_U_only():
    # adding c*phi_3 to f changes u by c*phi_3/(lambda_1 - lambda_3) up to the nonlinear feedback,
    # so the linear case (g = 0 limit) is checked through a tiny amplitude
    g = make_nonlinearity("tanh", amp=1e-12, thresholds=(-1.0, 1.0, -5e-13, 5e-13))
    a = solve(scalar({2: 1.0}, g=g), SolveOptions(tol=1e-13))
    b = solve(scalar({2: 1.0, 3: 0.8}, g=g), SolveOptions(tol=1e-13))
    diff = b.solution["u"].coeffs - a.solution["u"].coeffs
    assert diff[2] == pytest.approx(0.8 / (1 - 9), rel=1e-9)
    assert np.max(np.abs(np.delete(diff, 2))) < 1e-10


def test_anderson_agrees_with_picard():
    p = scalar({1: 0.2, 2: 1.0})
    a = solve(p, SolveOptions(tol=1e-11))
    b = solve(p, SolveOptions(tol=1e-11, accel="anderson"))
    assert a.converged and b.converged
    assert b.iterations <= a.iterations
    assert np.max(np.abs(a.solution["u"].coeffs - b.solution["u"].coeffs)) < 1e-9


def test_mesh_refinement_consistency():
    f = {1: 0.3, 2: 0.5}
    coarse = solve(scalar(f, modes=16), SolveOptions(tol=1e-12)).solution["u"]
    fine = solve(scalar(f, modes=64), SolveOptions(tol=1e-12)).solution["u"]
    assert np.max(np.abs(fine.coeffs[:4] - coarse.coeffs[:4])) < 1e-6


def test_square_multi_eigenvalue():
    g = ARCTAN
    p = ProblemSpec("scalar_multi", "square", 16, k=(1, 2), nonlinearities={"g": g},
                    forcings={"f": ForcingSpec.from_dict({(1, 1): 0.5, (1, 2): 0.3})}).validate()
    rep = solve(p, SolveOptions(tol=1e-10, accel="anderson"))
    assert rep.converged and len(rep.xi) == 2
    assert rep.condition[0].condition_id == "Williams" and rep.condition[0].holds


def test_multi_with_simple_group_matches_scalar():
    f = {1: 0.4, 2: 0.3}
    a = solve_scalar_resonant(scalar(f, g=ARCTAN), SolveOptions(tol=1e-12))
    p = ProblemSpec("scalar_multi", "interval", 32, k=1, nonlinearities={"g": ARCTAN},
                    forcings={"f": ForcingSpec.from_dict(f)}).validate()
    b = solve(p, SolveOptions(tol=1e-12))
    assert np.max(np.abs(a.solution["u"].coeffs - b.solution["u"].coeffs)) < 1e-13


@pytest.mark.parametrize("family,g", [
    ("periodic_LL", ARCTAN),
    ("periodic_damped", make_nonlinearity("rational")),
])
def test_periodic_families(family, g):
    p = ProblemSpec(family, "circle", 32, n=2, nonlinearities={"g": g},
                    forcings={"f": ForcingSpec.from_trig(cos={2: 0.5}, sin={1: 1.0})}).validate()
    rep = solve_periodic(p, SolveOptions(tol=1e-10, accel="anderson"))
    assert rep.converged and rep.condition[0].holds
    assert residual(p, rep.solution["u"])[0] < 1e-10


def test_init_lsstate_roundtrip():
    p = scalar({1: 0.4})
    rep = solve(p, SolveOptions(tol=1e-11))
    b = p.basis()
    U = b.from_coeffs(np.where(np.arange(b.size) == 0, 0.0, rep.solution["u"].coeffs))
    again = solve(p, SolveOptions(tol=1e-10, init=LSState(xi=np.array(rep.xi), U=U)))
    assert again.iterations == 0


def test_max_iter_status_has_note():
    rep = solve(scalar({1: 0.4, 2: 1.0}), SolveOptions(max_iter=2))
    assert rep.status == "max_iter" and rep.iterations == 2
    assert any("solution exists" in n for n in rep.notes)


def test_residual_rejects_foreign_basis():
    p = scalar({1: 0.4})
    with pytest.raises(Exception):
        residual(p, make_basis("interval", 8).from_coeffs(np.zeros(8)))
    assert math.isfinite(residual(p, {"u": p.basis().from_coeffs(np.zeros(32))})[0])
