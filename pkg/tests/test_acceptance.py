"""Acceptance suite: one test per criterion, one printed verdict line each.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the verdict lines.
Every tolerance is pinned here; nothing is deferred to calibration.
"""

import math
import time

import numpy as np
import pytest

from agdsmooth import (
    Affine,
    Power,
    PsiProfile,
    admissible_delta,
    algorithm1_run,
    algorithm2_run,
    catalog,
    check_descent_step,
    delta_left_right,
    delta_max,
    ell_eval,
    evaluate,
    kbar,
    psi_eval,
    psi_inverse,
    select_delta,
    AgdState,
)
from agdsmooth.verify import sweep_convexity_smoothness, sweep_gradient_transfer

CATALOG_AFFINE = ["exp-1d", "exp-experiment"]


def report(num: int, name: str, failures: list[str]) -> None:
    verdict = "PASS" if not failures else "FAIL"
    print(f"\nACCEPTANCE {num:02d} {verdict} — {name}")
    for msg in failures:
        print(f"    {msg}")
    assert not failures, f"criterion {num} failed: " + " | ".join(failures)


@pytest.fixture(scope="module")
def adaptive_reference_run():
    """The pinned adaptive-variant run: exp-experiment, mu = 0.001,
    x0 = (-6, -5), r_bar = 100, gamma_cap0 = 100, budget 5000 oracle calls.
    Also collects every (state, step) pair for the descent audit."""
    problem = catalog("exp-experiment", {"mu": 0.001})
    visited: list[tuple[AgdState, float]] = []
    start = time.perf_counter()
    result = algorithm2_run(
        problem, problem.ell_model, np.array([-6.0, -5.0]),
        gamma_cap0=100.0, r_bar=100.0, epsilon=1e-6, budget=5000,
        state_sink=lambda s, g: visited.append((s, g)),
    )
    elapsed = time.perf_counter() - start
    return problem, result, visited, elapsed


def test_criterion_01_adaptive_run_reproduction(adaptive_reference_run):
    problem, result, _, elapsed = adaptive_reference_run
    f_star = problem.optimum.f_star
    failures = []

    if not (result.converged and result.achieved_gap <= 1e-6 and result.oracle_calls <= 5000):
        # measure the true first-crossing honestly with a larger budget
        full = algorithm2_run(problem, problem.ell_model, np.array([-6.0, -5.0]),
                              100.0, 100.0, 1e-6, 20000)
        failures.append(
            f"f-gap <= 1e-6 not reached within 5000 oracle calls: gap at budget = "
            f"{result.achieved_gap:.3e}; first reaches 1e-6 at oracle call "
            f"{full.oracle_calls} (deterministic: the slow phase of the "
            f"exactly-specified adaptive step needs ~sqrt(32)*L1*r_bar*"
            f"log(32*L1^2*gamma_cap0*r_bar^2/L0) iterations with these inputs)"
        )

    agd_rows = [r for r in result.trace if r.phase == "agd"]
    nonmono = sum(1 for a, b in zip(agd_rows, agd_rows[1:]) if b.f_gap > a.f_gap)
    if nonmono < 1:
        failures.append("no iteration with f(y_{k+1}) > f(y_k) found")

    worst = min(r.bound_gap - r.f_gap for r in agd_rows)
    if worst < -1e-9 * abs(f_star):
        failures.append(f"certified bound margin {worst:.3e} below -1e-9*|f*|")

    if elapsed >= 1.0:
        failures.append(f"runtime {elapsed:.2f}s >= 1s")

    report(1, "adaptive-variant run on the 2-d exponential problem", failures)


def test_criterion_02_gamma_envelope():
    rng = np.random.default_rng(0)
    gcap0 = 10.0 ** rng.uniform(-3, 3, 100)
    gamma = 10.0 ** rng.uniform(-3, 3, 100)
    kb = np.array([kbar(float(g0), float(g)) for g0, g in zip(gcap0, gamma)])
    start = time.perf_counter()
    gcap = gcap0.copy()
    violations = 0
    for k in range(10_000):
        gcap = gcap / (1.0 + np.sqrt(gamma * gcap))
        live = k >= kb
        bound = 9.0 / (gamma * (k + 1.0 - kb) ** 2)
        bad = live & (gcap > bound + 4.0 * np.spacing(bound))
        violations += int(bad.sum())
    elapsed = time.perf_counter() - start
    failures = []
    if violations:
        failures.append(f"{violations} envelope violations beyond 4 ulps")
    if elapsed >= 1.0:
        failures.append(f"runtime {elapsed:.2f}s >= 1s")
    report(2, "certificate-sequence envelope over random (gamma_cap0, gamma)", failures)


def test_criterion_03_psi_inverse_closed_form():
    rng = np.random.default_rng(1)
    failures = []
    worst = 0.0
    for _ in range(10):
        L0 = 10.0 ** rng.uniform(-2, 2)
        L1 = 10.0 ** rng.uniform(-2, 2)
        profile = PsiProfile.from_model(Affine(L0, L1))
        for t in np.geomspace(1e-8, 1e6, 100):
            got = psi_inverse(profile, float(t), 1e-12)
            closed = 4 * L1 * t + math.sqrt(16 * L1**2 * t**2 + 2 * L0 * t)
            rel = abs(got - closed) / closed
            worst = max(worst, rel)
    if worst > 1e-10:
        failures.append(f"worst relative disagreement {worst:.3e} > 1e-10")
    report(3, "bisection inverse matches the affine closed form", failures)


def test_criterion_04_inverse_sqrt_epsilon_scaling():
    problem = catalog("quadratic", {"L": 1.0, "d": 10, "known_optimum": False})
    x0 = np.full(10, 0.1)
    r_bar = float(np.linalg.norm(x0))
    eps_set = [1e-4, 1e-5, 1e-6, 1e-7]
    failures = []
    start = time.perf_counter()

    def iterations(algo: str, eps: float) -> tuple[int, np.ndarray]:
        if algo == "agd1":
            res = algorithm1_run(problem, problem.ell_model, x0, math.inf, r_bar,
                                 eps, 10**7, check_invariants=False,
                                 collect_trace=False)
        else:
            res = algorithm2_run(problem, problem.ell_model, x0, 1.0, r_bar,
                                 eps, 10**7, check_invariants=False,
                                 collect_trace=False)
        if not res.converged:
            failures.append(f"{algo} at eps={eps} did not converge")
        return res.gd_iters + res.agd_iters, res.state.y

    for algo in ("agd1", "agd2"):
        for eps in eps_set:
            base, y_base = iterations(algo, eps)
            quarter, y_q = iterations(algo, eps / 4.0)
            ratio = quarter / base
            if not 1.6 <= ratio <= 2.4:
                failures.append(f"{algo}: ratio at eps={eps:.0e} is {ratio:.3f}")
            # soundness of the certified stop: true gap (f* = 0) within eps
            for y, e in ((y_base, eps), (y_q, eps / 4.0)):
                if 0.5 * float(y @ y) > e:
                    failures.append(f"{algo}: certified stop missed the true gap at eps={e}")
    elapsed = time.perf_counter() - start
    if elapsed >= 1.0:
        failures.append(f"runtime {elapsed:.2f}s >= 1s")
    report(4, "iteration counts double per epsilon quartering (both variants)", failures)


def test_criterion_05_warm_start_region():
    failures = []
    for name in CATALOG_AFFINE:
        problem = catalog(name)
        model = problem.ell_model
        x0 = np.asarray({"exp-1d": [3.0], "exp-experiment": [-6.0, -5.0]}[name])
        r_bar = {"exp-1d": 5.0, "exp-experiment": 100.0}[name]
        delta = select_delta(model, r_bar)
        try:
            res = algorithm1_run(problem, model, x0, delta, r_bar, 1e-8, 10**6,
                                 strict=True)
        except Exception as exc:  # strict mode aborts on any violation
            failures.append(f"{name}: strict run aborted: {exc}")
            continue
        if not res.converged or res.flags_total != 0:
            failures.append(f"{name}: term={res.termination} flags={res.flags_total}")
            continue
        l0 = ell_eval(model, 0.0)
        gd_rows = [r for r in res.trace if r.phase == "gd"]
        handoff_grad = gd_rows[-1].grad_norm if gd_rows else float(
            np.linalg.norm(evaluate(problem, x0)[1]))
        if ell_eval(model, 4.0 * handoff_grad) > 2.0 * l0:
            failures.append(f"{name}: region condition fails at the GD handoff point")
        for r in res.trace:
            if r.phase == "agd" and ell_eval(model, 4.0 * r.grad_norm) > 2.0 * l0:
                failures.append(f"{name}: region condition fails at agd k={r.k}")
                break
    report(5, "warm start lands and stays in the small-curvature region", failures)


def test_criterion_06_admissibility_boundary():
    rng = np.random.default_rng(2)
    failures = []
    worst = 0.0
    for _ in range(20):
        L0 = 10.0 ** rng.uniform(-2, 2)
        L1 = 10.0 ** rng.uniform(-2, 2)
        model = Affine(L0, L1)
        hi = 1.0
        while admissible_delta(model, hi):
            hi *= 2.0
        lo = 0.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if admissible_delta(model, mid):
                lo = mid
            else:
                hi = mid
        threshold = 0.5 * (lo + hi)
        expected = L0 / (64.0 * L1**2)
        worst = max(worst, abs(threshold - expected) / expected)
    if worst > 1e-10:
        failures.append(f"worst relative threshold error {worst:.3e} > 1e-10")
    report(6, "admissibility threshold equals L0 / (64 L1^2)", failures)


def test_criterion_07_inequality_sweeps():
    failures = []
    for name in ["exp-1d", "exp-experiment", "neg-log-barrier", "power-p", "quadratic"]:
        problem = catalog(name)
        for sweep in (sweep_gradient_transfer, sweep_convexity_smoothness):
            rep = sweep(problem, trials=1000, seed=0)
            if rep.violations != 0 or rep.worst_margin < -1e-8:
                failures.append(
                    f"{name}/{rep.name}: violations={rep.violations} "
                    f"worst={rep.worst_margin:.3e} witness={rep.witness}"
                )
    report(7, "gradient-transfer and convexity sweeps are violation-free", failures)


def test_criterion_08_superquadratic_geometry():
    failures = []
    model = Power(3, 1, 1)
    dm = delta_max(model)
    if abs(dm - 2 ** (-5 / 3)) > 1e-8:
        failures.append(f"delta_max {dm!r} differs from 2^(-5/3) by more than 1e-8")
    profile = PsiProfile.from_model(model)
    left, right = delta_left_right(profile, 0.01)
    for label, root in (("left", left), ("right", right)):
        back = psi_eval(model, root)
        if abs(back - 0.01) > 1e-8:
            failures.append(f"{label} root back-substitution {back!r} misses 0.01")
    if not (left < dm < right):
        failures.append("roots do not bracket the peak")
    report(8, "superquadratic peak and level crossings", failures)


def test_criterion_09_gradient_envelope_and_steps():
    failures = []
    for name in CATALOG_AFFINE:
        problem = catalog(name)
        model = problem.ell_model
        x0 = np.asarray({"exp-1d": [3.0], "exp-experiment": [-6.0, -5.0]}[name])
        r_bar = {"exp-1d": 5.0, "exp-experiment": 100.0}[name]
        gcap0 = {"exp-1d": 5.0, "exp-experiment": 100.0}[name]
        try:
            res = algorithm2_run(problem, model, x0, gcap0, r_bar, 1e-6, 10**5,
                                 strict=True)
        except Exception as exc:
            failures.append(f"{name}: strict run aborted: {exc}")
            continue
        if not res.converged or res.flags_total != 0:
            failures.append(f"{name}: term={res.termination} flags={res.flags_total}")
            continue
        profile = PsiProfile.from_model(model)
        rows = [r for r in res.trace if r.phase == "agd"]
        for r in rows[:: max(1, len(rows) // 500)]:
            env = psi_inverse(profile, r.gamma_cap * r_bar**2, 1e-12)
            if r.grad_norm > env * (1 + 1e-9) + 1e-15:
                failures.append(f"{name}: envelope broken at k={r.k}")
                break
        gammas = [r.step_gamma for r in rows]
        for a, b in zip(gammas, gammas[1:]):
            if b < a - 4 * math.ulp(a):
                failures.append(f"{name}: step sizes decreased ({a} -> {b})")
                break
    report(9, "adaptive runs keep the gradient envelope and non-decreasing steps", failures)


def test_criterion_10_descent_audit(adaptive_reference_run):
    problem, _, visited, _ = adaptive_reference_run
    model = problem.ell_model
    f_star = problem.optimum.f_star
    failures = []
    worst = math.inf
    for state, gamma in visited:
        margin = check_descent_step(problem, model, state, gamma)
        scale = max(1.0, state.f_y - f_star)
        worst = min(worst, margin)
        if margin < -1e-9 * scale:
            failures.append(f"descent margin {margin:.3e} at k={state.k}")
            break
    if not visited:
        failures.append("reference run produced no states")

    # quadratic equality configuration: optimum state, gamma = 1/L
    quad = catalog("quadratic", {"L": 1.0, "d": 1})
    for gcap in (0.1, 1.0, 7.3):
        state = AgdState(y=np.zeros(1), u=np.zeros(1), gamma_cap=gcap, k=0,
                         f_y=0.0, grad_y=np.zeros(1))
        eq_margin = check_descent_step(quad, quad.ell_model, state, 1.0)
        if abs(eq_margin) > 1e-12:
            failures.append(f"equality-configuration margin {eq_margin!r} exceeds 1e-12")
    report(10, f"descent-bound audit over {len(visited)} visited states", failures)
