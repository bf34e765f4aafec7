"""Acceptance run: one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -v`` (the lines appear in the
terminal summary) or directly with ``python3 tests/test_acceptance.py``.
"""

import json
import math
import time
from pathlib import Path

import numpy as np

from resonance import (
    ForcingSpec,
    NonOrthogonalForcing,
    ProblemSpec,
    ResonantModeNonOrthogonal,
    SolveOptions,
    canonical_reduce,
    landesman_lazer_interval,
    lazer_leach_check,
    cosine_sign_split,
    lift,
    make_basis,
    make_nonlinearity,
    manufacture,
    residual,
    resolvent_solve,
    solve,
    solve_linear_system,
    williams_margin,
)
from resonance.cli import main
from resonance.spectral import ORTHO_TOL

GALLERY = Path(__file__).parent / "data" / "gallery"
LINES = []


def report(n, ok, detail):
    line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    LINES.append(line)
    print(line)
    assert ok, line


def test_criterion_01_sign_split_grid():
    t = time.perf_counter()
    worst = 0.0
    for n in range(1, 9):
        for delta in np.round(np.arange(0.0, 6.0 + 1e-9, 0.3), 10):
            pos, neg = cosine_sign_split(n, float(delta), grid=4096)
            worst = max(worst, abs(pos - 2.0), abs(neg + 2.0))
    dt = time.perf_counter() - t
    report(1, worst < 1e-8 and dt < 1.0, f"max error {worst:.2e} (tol 1e-8), {dt:.2f}s (limit 1s)")


def test_criterion_02_fredholm_alternative():
    t = time.perf_counter()
    rng = np.random.default_rng(2024)
    bases = [make_basis("interval", 32), make_basis("circle", 16), make_basis("square", 8)]
    wrong, worst, raised = 0, 0.0, 0
    for i in range(200):
        b = bases[i % 3]
        grp = b.groups[int(rng.integers(0, 4))]
        c = rng.standard_normal(b.size) * (rng.random(b.size) < 0.5)
        c[0] += 1.0
        norm = np.linalg.norm(np.delete(c, list(grp.members)))
        # projections well inside, exactly at zero, or well outside the tolerance
        scale = [0.0, 1e-3 * ORTHO_TOL, 1e3 * ORTHO_TOL, 1.0][i % 4]
        c[list(grp.members)] = scale * norm * rng.choice([-1, 1], grp.size)
        f = b.from_coeffs(c)
        expect_error = np.max(np.abs(c[list(grp.members)])) > ORTHO_TOL * np.linalg.norm(c)
        try:
            u = resolvent_solve(b, grp.value, f)
        except NonOrthogonalForcing:
            raised += 1
            wrong += not expect_error
            continue
        wrong += expect_error
        r = (grp.value - b.eigenvalues) * u.coeffs - c
        r[list(grp.members)] = 0.0
        worst = max(worst, float(np.max(np.abs(r))), float(np.max(np.abs(u.coeffs[list(grp.members)]))))
    dt = time.perf_counter() - t
    ok = wrong == 0 and worst < 1e-12 and dt < 1.0
    report(2, ok, f"{wrong} misclassified of 200 ({raised} raised), complement residual {worst:.1e} (tol 1e-12), {dt:.2f}s")


def test_criterion_03_landesman_lazer_interval():
    L1, L2 = landesman_lazer_interval(make_basis("interval", 32), 1, -0.9, 0.9)
    exact = 0.9 * 2.0 * math.sqrt(2.0 / math.pi)
    err = max(abs(L1 + exact), abs(L2 - exact))
    report(3, err < 1e-8, f"(L1, L2) = ({L1:.13f}, {L2:.13f}), analytic +-{exact:.13f}, error {err:.1e}")


def test_criterion_04_lazer_leach_sweep(tmp_path):
    spec = tmp_path / "ll.ini"
    spec.write_text(
        "[problem]\nfamily = periodic_LL\ndomain = circle\nmodes = 32\ngrid = 256\nn = 1\n"
        "[nonlinearity.g]\nname = arctan\n[forcing.f]\ncos1 = 1.0\n"
    )
    out = tmp_path / "sweep.json"
    t = time.perf_counter()
    code = main(["sweep", str(spec), "--sweep", "amp:0.5:3.0:11", "--gate", "--refine", "--quiet", "--json", str(out)])
    dt = time.perf_counter() - t
    doc = json.loads(out.read_text())
    flips = doc["result"]["thresholds"]
    ok = code == 0 and len(flips) == 1 and dt < 10.0
    if ok:
        lo, hi = flips[0]["bracket"]
        ok = lo <= 2.0 <= hi and hi - lo <= 1e-3
        detail = f"flip bracketed in [{lo:.6f}, {hi:.6f}] (analytic 2), {dt:.2f}s (limit 10s)"
    else:
        detail = f"flips {flips}, exit {code}, {dt:.2f}s"
    report(4, ok, detail)


def test_criterion_05_williams_equals_lazer_leach():
    t = time.perf_counter()
    rng = np.random.default_rng(5)
    g = make_nonlinearity("arctan")
    b = make_basis("circle", 16)
    worst = 0.0
    for _ in range(50):
        n = int(rng.integers(1, 9))
        a, s = rng.normal(size=2) * 2.0
        f = ForcingSpec.from_trig(cos={n: a}, sin={n: s}, const=float(rng.normal())).to_field(b)
        w = williams_margin(b, b.group_for(n), f, g.limits)
        ll = lazer_leach_check(f, n, g.limits)
        worst = max(worst, abs(w.margin - ll.margin))
    dt = time.perf_counter() - t
    report(5, worst < 1e-6, f"max |Williams - Lazer-Leach| {worst:.1e} over 50 forcings (tol 1e-6), {dt:.2f}s")


def _manufactured_cases():
    at = make_nonlinearity("arctan")

    def fu(amp=1.0):
        return lift(make_nonlinearity("arctan", amp=amp), "u", thresholds=(-1.0, 1.0, -0.7 * amp, 0.7 * amp))

    def gv(amp=1.0):
        return lift(make_nonlinearity("arctan", amp=amp), "v", thresholds=(-1.0, 1.0, -0.7 * amp, 0.7 * amp))

    I, C, S = make_basis("interval", 64), make_basis("circle", 64), make_basis("square", 32)
    ui = I.sample(lambda x: 0.3 * np.sin(x) * np.exp(np.cos(x)))
    uc = C.sample(lambda t: 0.5 * np.cos(2 * t) + 0.2 * np.sin(4 * t) + 0.1 * np.cos(np.sin(t)))
    us = S.sample(lambda x, y: 0.4 * np.sin(x) * np.sin(2 * y) + 0.1 * np.sin(3 * x) * np.sin(y))
    yield ProblemSpec("scalar_resonant", "interval", 64, k=1, nonlinearities={"g": at}), ui, None
    yield ProblemSpec("scalar_multi", "square", 32, k=(1, 2), nonlinearities={"g": at}), us, None
    yield ProblemSpec("periodic_LL", "circle", 64, n=1, nonlinearities={"g": at}), uc, None
    yield ProblemSpec("periodic_damped", "circle", 64, n=1,
                      nonlinearities={"g": make_nonlinearity("rational")}), uc, None
    yield ProblemSpec("periodic_FN", "circle", 64, n=1, nonlinearities={"g": at}), uc, None
    yield ProblemSpec("system_nonresonant", "interval", 64, matrix=(2.5, 0.0, 0.0, 6.0),
                      nonlinearities={"f": fu(0.3), "g": gv(0.3)}), ui, 0.5 * ui
    yield ProblemSpec("system_case_A", "interval", 64, k=1, mu=2.5,
                      nonlinearities={"f": fu(), "g": gv(0.3)}), ui, 0.5 * ui
    yield ProblemSpec("system_case_B", "interval", 64, k=1, m=2,
                      nonlinearities={"f": fu(), "g": gv()}), ui, 0.5 * ui
    yield ProblemSpec("system_case_C", "interval", 64, k=1,
                      nonlinearities={"f": fu(), "g": gv()}), ui, 0.5 * ui


def test_criterion_06_manufactured_solutions():
    t = time.perf_counter()
    rows, ok = [], True
    for spec, u, v in _manufactured_cases():
        p = manufacture(spec.validate(), u, v)
        r_verify = residual(p, u if v is None else (u, v))[0]
        rep = solve(p, SolveOptions(tol=1e-9, max_iter=2000, accel="anderson"))
        r_solve = residual(p, rep.solution)[0]
        good = r_verify < 1e-10 and r_solve < 1e-7
        ok &= good
        rows.append(f"{spec.family}={'ok' if good else 'bad'}({r_verify:.0e}/{r_solve:.0e})")
    dt = time.perf_counter() - t
    ok &= dt < 60.0
    report(6, ok, f"{dt:.1f}s (limit 60s); verify/solve residuals: " + " ".join(rows))


def test_criterion_07_drift():
    b = make_basis("interval", 64)
    _, L2 = landesman_lazer_interval(b, 1, -0.7, 0.7)
    g = make_nonlinearity("tanh", thresholds=(-1.0, 1.0, -0.7, 0.7))
    p = ProblemSpec("scalar_resonant", "interval", 64, k=1, nonlinearities={"g": g},
                    forcings={"f": ForcingSpec.from_dict({1: L2 + 0.5})}).validate()
    t = time.perf_counter()
    rep = solve(p, SolveOptions(gate=False))
    dt = time.perf_counter() - t
    xi = np.array([e[3] for e in rep.trace])
    run = best = 0
    for step in np.diff(xi[20:]):
        run = run + 1 if step > 0 else 0
        best = max(best, run)
    ok = best >= 50 and rep.status == "diverged" and dt < 5.0
    report(7, ok, f"longest strictly increasing |xi| run after burn-in 20: {best} (need 50), "
                  f"status {rep.status}, {dt:.2f}s")


def test_criterion_08_canonical_reduction():
    t = time.perf_counter()
    rng = np.random.default_rng(8)
    worst, count = 0.0, 0
    while count < 1000:
        A = rng.uniform(-5, 5, (2, 2))
        a, b, c, d = A.ravel()
        if (a - d) ** 2 + 4 * b * c <= 0:
            continue
        form = canonical_reduce(A)
        worst = max(worst, float(np.max(np.abs(form.Q_inv @ A @ form.Q - form.matrix))))
        count += 1
    hand = [
        canonical_reduce([[3, 0], [0, 5]]),
        canonical_reduce([[2, 1], [-1, 4]]),
        canonical_reduce([[0, 2], [1, 1]]),
    ]
    hand_ok = (
        hand[0].kind == "diagonal" and np.allclose(hand[0].eigenvalues, (3, 5))
        and hand[1].kind == "jordan" and np.allclose(hand[1].eigenvalues, (3, 3))
        and hand[2].kind == "diagonal" and np.allclose(sorted(hand[2].eigenvalues), (-1, 2))
    )
    dt = time.perf_counter() - t
    report(8, worst < 1e-10 and hand_ok and dt < 1.0,
           f"max |Q^-1 A Q - form| {worst:.1e} over 1000 (tol 1e-10), hand examples {'ok' if hand_ok else 'wrong'}, {dt:.2f}s")


def test_criterion_09_jordan_back_substitution():
    b = make_basis("interval", 16)
    phi1, phi2 = b.from_coeffs(np.eye(b.size)[0]), b.from_coeffs(np.eye(b.size)[1])
    u, v = solve_linear_system(b, [[4, 1], [0, 4]], phi1, phi1)
    err = max(abs(u.coeffs[0] - 2 / 9), abs(v.coeffs[0] - 1 / 3))
    try:
        solve_linear_system(b, [[4, 1], [0, 4]], phi1, phi2)
        raised = False
    except ResonantModeNonOrthogonal:
        raised = True
    report(9, err < 1e-12 and raised,
           f"(u1, v1) error {err:.1e} (tol 1e-12), g = phi_2 raises ResonantModeNonOrthogonal: {raised}")


def test_criterion_10_determinism_and_exit_codes(tmp_path):
    manifest = json.loads((GALLERY / "manifest.json").read_text())
    mismatched, seen = [], set()
    for i, e in enumerate(manifest):
        cmd, *rest = e["args"]
        code = main([cmd, str(GALLERY / e["spec"]), *rest, "--quiet", "--json", str(tmp_path / f"{i}.json")])
        seen.add(code)
        if code != e["exit"]:
            mismatched.append(f"{e['spec']}:{code}!={e['exit']}")
    identical = True
    for i, e in enumerate(manifest):
        cmd, *rest = e["args"]
        first = tmp_path / f"{i}.json"
        if not first.exists():
            continue
        again = tmp_path / f"{i}b.json"
        main([cmd, str(GALLERY / e["spec"]), *rest, "--quiet", "--json", str(again)])
        identical &= first.read_bytes() == again.read_bytes()
    ok = not mismatched and seen == {0, 2, 3, 4} and len(manifest) == 12 and identical
    report(10, ok, f"{len(manifest)} gallery specs, exit codes seen {sorted(seen)}, "
                   f"mismatches {mismatched or 'none'}, repeat runs byte-identical: {identical}")


if __name__ == "__main__":
    import tempfile

    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion"):
            try:
                if "tmp_path" in fn.__code__.co_varnames[: fn.__code__.co_argcount]:
                    with tempfile.TemporaryDirectory() as d:
                        fn(Path(d))
                else:
                    fn()
            except AssertionError:
                pass
