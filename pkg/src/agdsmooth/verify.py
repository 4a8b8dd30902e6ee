"""Stand-alone numeric validation of the inequalities the solvers rely on.

Each check evaluates one inequality at concrete points and returns its
margin (bound side minus sharp side), so a conforming implementation
reports margins >= -tol.  Randomized sweeps drive the checks over many
points and produce CheckReports; sweeps are seeded and reproducible, and
reports record the seed and the worst margin even when passing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .errors import PreconditionError
from .problems import Problem, evaluate, project_closure
from .smoothness import (
    EllModel,
    PsiProfile,
    QUAD_REL_TOL,
    delta_left_right,
    ell_eval,
    q_inverse,
    q_max,
)
from .solvers import AgdState

# Inequality acceptance margin: one order below the quadrature error floor.
MARGIN_TOL = 1e-8


@dataclass
class CheckReport:
    name: str
    trials: int
    violations: int
    worst_margin: float
    witness: tuple | None
    quadrature_tol: float
    seed: int | None

    @property
    def passed(self) -> bool:
        return self.violations == 0


def merge_reports(reports: list[CheckReport]) -> CheckReport:
    """Combine same-check reports from sharded sweeps: counts add up, the
    worst margin is the minimum, and the witness follows it."""
    if not reports:
        raise ValueError("nothing to merge")
    names = {r.name for r in reports}
    if len(names) != 1:
        raise ValueError(f"cannot merge reports of different checks: {sorted(names)}")
    worst = min(reports, key=lambda r: r.worst_margin)
    return CheckReport(
        name=worst.name,
        trials=sum(r.trials for r in reports),
        violations=sum(r.violations for r in reports),
        worst_margin=worst.worst_margin,
        witness=worst.witness,
        quadrature_tol=worst.quadrature_tol,
        seed=None if len({r.seed for r in reports}) != 1 else worst.seed,
    )


def _margin_report(name, margins_witnesses, tol, seed) -> CheckReport:
    worst = math.inf
    witness = None
    violations = 0
    n = 0
    for margin, wit in margins_witnesses:
        n += 1
        if margin < worst:
            worst, witness = margin, wit
        if margin < -tol:
            violations += 1
    return CheckReport(
        name=name, trials=n, violations=violations,
        worst_margin=worst if n else math.nan, witness=witness,
        quadrature_tol=QUAD_REL_TOL, seed=seed,
    )


def check_convexity_smoothness(problem: Problem, x: np.ndarray, y: np.ndarray) -> float:
    """Margin of the smoothed convexity lower bound between two points.

    The sharp side is the gradient-difference energy weighted by the
    curvature profile along the segment of gradient norms,
    ``|gx - gy|^2 * int_0^1 (1 - v) / ell(|gx| + |gx - gy| v) dv``;
    it must not exceed the Bregman gap ``f(x) - f(y) - <gy, x - y>``.
    """
    model = problem.ell_model
    fx, gx = evaluate(problem, x)
    fy, gy = evaluate(problem, y)
    diff = float(np.linalg.norm(gx - gy))
    a = float(np.linalg.norm(gx))
    rhs = fx - fy - float(gy @ (np.asarray(x, dtype=float) - np.asarray(y, dtype=float)))
    if diff == 0.0:
        return rhs
    integral, _ = quad(
        lambda v: (1.0 - v) / ell_eval(model, a + diff * v), 0.0, 1.0,
        epsabs=0.0, epsrel=QUAD_REL_TOL, limit=200,
    )
    return rhs - diff * diff * integral


def check_gradient_transfer(problem: Problem, x: np.ndarray, y: np.ndarray) -> float:
    """Margin of the gradient-variation bound
    ``|grad f(y) - grad f(x)| <= q_inverse(|y - x|; |grad f(x)|)``."""
    model = problem.ell_model
    _, gx = evaluate(problem, x)
    _, gy = evaluate(problem, y)
    a = float(np.linalg.norm(gx))
    dist = float(np.linalg.norm(np.asarray(y, dtype=float) - np.asarray(x, dtype=float)))
    if dist >= q_max(model, a):
        raise PreconditionError(
            f"|y - x| = {dist} is not below q_max = {q_max(model, a)}"
        )
    return q_inverse(model, dist, a) - float(np.linalg.norm(gy - gx))


def check_descent_step(
    problem: Problem, model: EllModel, state: AgdState, step_gamma: float
) -> float:
    """Margin of the one-step certificate-decrease bound.

    Executes one virtual accelerated step from ``state`` and compares the
    certificate difference against
    ``0.5 * (gamma - 1 / ell(2 |g_y| + |g_next|)) * |g_next - g_y|^2``.
    Requires a known optimum and ``step_gamma <= 1 / ell(2 |g_y|)``.
    """
    if problem.optimum is None:
        raise PreconditionError("descent check needs a known optimum")
    gy = state.grad_y
    ny = float(np.linalg.norm(gy))
    if step_gamma > (1.0 + 1e-12) / ell_eval(model, 2.0 * ny):
        raise PreconditionError(
            f"step_gamma = {step_gamma} exceeds the safety cap "
            f"{1.0 / ell_eval(model, 2.0 * ny)}"
        )
    f_star = problem.optimum.f_star
    x_star = problem.optimum.x_star
    alpha = math.sqrt(step_gamma * state.gamma_cap)
    w = 1.0 / (1.0 + alpha)
    y_next = w * (state.y + alpha * state.u - step_gamma * gy)
    f_next, g_next = evaluate(problem, y_next)
    u_next = project_closure(
        problem.domain, state.u - (alpha / state.gamma_cap) * g_next
    )
    gamma_next = state.gamma_cap / (1.0 + alpha)
    v_k = (state.f_y - f_star) + 0.5 * state.gamma_cap * float(
        np.linalg.norm(state.u - x_star) ** 2
    )
    lhs = (
        (1.0 + alpha) * (f_next - f_star)
        + 0.5 * (1.0 + alpha) * gamma_next * float(np.linalg.norm(u_next - x_star) ** 2)
        - v_k
    )
    rhs = 0.5 * (
        step_gamma - 1.0 / ell_eval(model, 2.0 * ny + float(np.linalg.norm(g_next)))
    ) * float(np.linalg.norm(g_next - gy) ** 2)
    return rhs - lhs


def check_gap_to_grad(
    problem: Problem, profile: PsiProfile, y: np.ndarray, delta: float
) -> bool:
    """Two-branch gradient localization at gap level ``delta``.

    For a point with ``f(y) - f* <= delta`` (caller-verified) the gradient
    norm must satisfy ``|g| <= delta_left(delta)`` or
    ``|g| >= delta_right(delta)``; with an everywhere-increasing psi the
    right branch is infinite and only the left bound remains.
    """
    if delta >= profile.psi_at_delta_max:
        raise PreconditionError(
            f"delta = {delta} is not below sup psi = {profile.psi_at_delta_max}"
        )
    left, right = delta_left_right(profile, delta)
    _, g = evaluate(problem, y)
    gn = float(np.linalg.norm(g))
    ok_left = gn <= left * (1.0 + 1e-9) + 1e-15
    ok_right = math.isfinite(right) and gn >= right * (1.0 - 1e-9)
    return ok_left or ok_right


# --- randomized sweeps ------------------------------------------------------

def _sample_interior(problem: Problem, rng: np.random.Generator) -> np.ndarray:
    return rng.uniform(problem.sample_lo, problem.sample_hi)


def sweep_convexity_smoothness(
    problem: Problem, trials: int = 1000, seed: int = 0
) -> CheckReport:
    rng = np.random.default_rng(seed)

    def gen():
        for _ in range(trials):
            x = _sample_interior(problem, rng)
            y = _sample_interior(problem, rng)
            margin = check_convexity_smoothness(problem, x, y)
            yield margin, (tuple(x), tuple(y))

    return _margin_report("convexity-smoothness", gen(), MARGIN_TOL, seed)


def sweep_gradient_transfer(
    problem: Problem, trials: int = 1000, seed: int = 0
) -> CheckReport:
    """Pairs are shrunk toward x until they fit inside 0.9 q_max, which
    keeps them in the feasible set (it is convex)."""
    rng = np.random.default_rng(seed)
    model = problem.ell_model

    def gen():
        for _ in range(trials):
            x = _sample_interior(problem, rng)
            y = _sample_interior(problem, rng)
            _, gx = evaluate(problem, x)
            budget = q_max(model, float(np.linalg.norm(gx)))
            dist = float(np.linalg.norm(y - x))
            if dist >= 0.9 * budget:
                y = x + (y - x) * (0.9 * budget / dist) * rng.uniform(0.5, 1.0)
            margin = check_gradient_transfer(problem, x, y)
            yield margin, (tuple(x), tuple(y))

    return _margin_report("gradient-transfer", gen(), MARGIN_TOL, seed)


def sweep_descent_step(
    problem: Problem, trials: int = 200, seed: int = 0,
    model: EllModel | None = None,
) -> CheckReport:
    """Random solver states: y, u sampled in the problem box, certificate
    level log-uniform, step a random fraction of the safety cap."""
    if problem.optimum is None:
        raise PreconditionError("descent sweep needs a known optimum")
    rng = np.random.default_rng(seed)
    model = model if model is not None else problem.ell_model

    def gen():
        for _ in range(trials):
            y = _sample_interior(problem, rng)
            u = project_closure(problem.domain, _sample_interior(problem, rng))
            f_y, g_y = evaluate(problem, y)
            gcap = 10.0 ** rng.uniform(-3, 2)
            cap = 1.0 / ell_eval(model, 2.0 * float(np.linalg.norm(g_y)))
            gamma = cap * rng.uniform(0.05, 1.0)
            state = AgdState(y=y, u=u, gamma_cap=gcap, k=0, f_y=f_y, grad_y=g_y)
            margin = check_descent_step(problem, model, state, gamma)
            yield margin, (tuple(y), tuple(u), gcap, gamma)

    return _margin_report("descent-step", gen(), MARGIN_TOL, seed)


def sweep_gap_to_grad(
    problem: Problem, trials: int = 500, seed: int = 0,
    model: EllModel | None = None,
) -> CheckReport:
    """Sample points, measure their true gap, and check the localization at
    a level just above it (skipping points whose gap is out of psi range)."""
    if problem.optimum is None:
        raise PreconditionError("gap-to-gradient sweep needs a known optimum")
    rng = np.random.default_rng(seed)
    profile = PsiProfile.from_model(model if model is not None else problem.ell_model)
    f_star = problem.optimum.f_star

    def gen():
        for _ in range(trials):
            y = _sample_interior(problem, rng)
            f_y, _ = evaluate(problem, y)
            delta = (f_y - f_star) * 1.0000001 + 1e-15
            if delta >= profile.psi_at_delta_max:
                continue
            ok = check_gap_to_grad(problem, profile, y, delta)
            yield (0.0 if ok else -1.0), (tuple(y), delta)

    return _margin_report("gap-to-gradient", gen(), MARGIN_TOL, seed)


def run_all_checks(
    problem: Problem, trials: int = 1000, seed: int = 0
) -> list[CheckReport]:
    reports = [
        sweep_convexity_smoothness(problem, trials=trials, seed=seed),
        sweep_gradient_transfer(problem, trials=trials, seed=seed),
    ]
    if problem.optimum is not None:
        reports.append(sweep_descent_step(problem, trials=trials, seed=seed))
        reports.append(sweep_gap_to_grad(problem, trials=trials, seed=seed))
    return reports
