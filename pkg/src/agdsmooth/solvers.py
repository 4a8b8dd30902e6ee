"""First-order solvers with per-iteration certificates.

Two accelerated variants share one primal-dual step:

* ``algorithm1_run`` warms up with plain gradient descent until the gap is
  at most delta/2, then runs accelerated steps with the fixed step size
  1 / (2 ell(0)).  The warm start guarantees every iterate stays in the
  region where the local smoothness constant is at most 2 ell(0).
* ``algorithm2_run`` skips the warm start and adapts the step size each
  iteration through the gap-to-gradient curve:
  ``gamma_k = 1 / ell(4 psi_inverse(Gamma_k * rbar^2))``.

The auxiliary sequence ``Gamma_{k+1} = Gamma_k / (1 + alpha_k)`` with
``alpha_k = sqrt(gamma Gamma_k)`` certifies the gap at every iteration:
``f(y_k) - f* <= Gamma_k * rbar^2``, and decays like ``9 / (gamma k^2)``.
Certificates are recomputed at run time and violations either abort
(strict mode) or set per-iteration flag bits (observe mode).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntFlag
from typing import Callable

import numpy as np

from .errors import (
    BudgetExceededError,
    ConfigurationError,
    DomainViolationError,
    InvariantViolationError,
    PreconditionError,
    SafetyViolationError,
)
from .problems import Problem, evaluate, project_closure
from .smoothness import (
    Affine,
    Constant,
    CustomMonotone,
    EllModel,
    Power,
    PsiProfile,
    admissible_delta,
    delta_left_right,
    ell_eval,
    ell_zero,
    psi_inverse,
)

LOG_3_2 = math.log(1.5)

# Gamma underflow guard: below this the certified bound is, for every
# representable epsilon, already met.
GAMMA_UNDERFLOW = 1e-300


class Flag(IntFlag):
    """Per-invariant violation bits recorded in trace rows."""

    NONE = 0
    CERTIFIED_GAP = 1
    LYAPUNOV = 2
    WARM_REGION = 4
    GRAD_ENVELOPE = 8
    BALL_CONFINEMENT = 16
    STEP_SAFETY = 32
    GAMMA_ENVELOPE = 64
    GD_MONOTONE = 128


# --- auxiliary sequence ----------------------------------------------------

def gamma_alpha_step(gamma_cap: float, step_gamma: float) -> tuple[float, float]:
    """One update of the certificate sequence.

    Returns ``(alpha, next_gamma_cap)`` with ``alpha = sqrt(step_gamma *
    gamma_cap)`` exactly and ``next = gamma_cap / (1 + alpha)``.
    """
    assert gamma_cap > 0 and step_gamma >= 0
    alpha = math.sqrt(step_gamma * gamma_cap)
    return alpha, gamma_cap / (1.0 + alpha)


def kbar(gamma_cap0: float, step_gamma: float) -> float:
    """Iteration lag before the 1/k^2 envelope applies:
    ``max(1 + 0.5 * log_{3/2}(step_gamma * gamma_cap0 / 4), 0)``."""
    assert gamma_cap0 > 0 and step_gamma > 0
    return max(1.0 + 0.5 * math.log(step_gamma * gamma_cap0 / 4.0) / LOG_3_2, 0.0)


def gamma_envelope(k: int, step_gamma: float, kbar_value: float) -> float:
    """Certified upper bound ``9 / (step_gamma * (k + 1 - kbar)^2)`` on
    ``Gamma_{k+1}``, valid for ``k >= kbar``."""
    if k < kbar_value:
        raise PreconditionError(f"envelope needs k >= kbar, got k={k} < {kbar_value}")
    return 9.0 / (step_gamma * (k + 1.0 - kbar_value) ** 2)


# --- state, trace, results -------------------------------------------------

@dataclass
class AgdState:
    """Solver triple (y, u, Gamma_k) plus the cached oracle output at y.

    Caching f and grad at y is what keeps the method at one fresh gradient
    evaluation per iteration.
    """

    y: np.ndarray
    u: np.ndarray
    gamma_cap: float
    k: int
    f_y: float
    grad_y: np.ndarray


@dataclass(slots=True)
class TraceRecord:
    k: int
    phase: str
    f_gap: float | None
    grad_norm: float
    gamma_cap: float | None
    alpha: float | None
    step_gamma: float | None
    dist_to_opt: float | None
    bound_gap: float | None
    lyapunov: float | None
    flags: int


TRACE_HEADER = "k,phase,f_gap,grad_norm,gamma_cap,alpha,step_gamma,dist_to_opt,bound_gap,lyapunov,flags"


def _fmt(v: float | None) -> str:
    # repr of a python float is the shortest round-trip decimal
    return "" if v is None else repr(float(v))


def format_trace_row(rec: TraceRecord) -> str:
    return ",".join(
        (
            str(rec.k),
            rec.phase,
            _fmt(rec.f_gap),
            _fmt(rec.grad_norm),
            _fmt(rec.gamma_cap),
            _fmt(rec.alpha),
            _fmt(rec.step_gamma),
            _fmt(rec.dist_to_opt),
            _fmt(rec.bound_gap),
            _fmt(rec.lyapunov),
            str(rec.flags),
        )
    )


def write_trace_csv(path, records: list[TraceRecord]) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(TRACE_HEADER + "\n")
        for rec in records:
            fh.write(format_trace_row(rec) + "\n")


@dataclass
class RunResult:
    state: AgdState | None
    gd_iters: int
    agd_iters: int
    achieved_gap: float
    trace: list[TraceRecord]
    termination: str  # converged | budget | precondition-failed
    oracle_calls: int
    flags_total: int = 0
    warmup_bound: int | None = None
    message: str = ""

    @property
    def converged(self) -> bool:
        return self.termination == "converged"


class _Oracle:
    """Counts gradient evaluations; one call returns (f, grad)."""

    def __init__(self, problem: Problem):
        self.problem = problem
        self.calls = 0

    def __call__(self, x: np.ndarray) -> tuple[float, np.ndarray]:
        self.calls += 1
        return evaluate(self.problem, x)


# --- single AGD step -------------------------------------------------------

def agd_step(
    state: AgdState,
    step_gamma: float,
    problem: Problem,
    _eval: Callable[[np.ndarray], tuple[float, np.ndarray]] | None = None,
    model: EllModel | None = None,
) -> AgdState:
    """One accelerated step; exactly one fresh gradient evaluation.

    ``y_next`` blends y, u and the cached gradient at y; ``u_next`` takes a
    projected dual step against the fresh gradient.  Raises a safety
    violation if y_next leaves the open feasible set, which signals a
    breach of the step-size contract ``step_gamma <= 1 / ell(2 |grad y|)``.
    """
    assert step_gamma > 0
    if _eval is None:
        # Step-size safety contract (debug-mode assertion; run loops check
        # it as a flagged invariant against their own profile instead).
        cap_model = model if model is not None else problem.ell_model
        assert step_gamma <= (1.0 + 1e-12) / ell_eval(
            cap_model, 2.0 * float(np.linalg.norm(state.grad_y))
        ), "step size above the safety cap 1 / ell(2 |grad y|)"
        ev = lambda p: evaluate(problem, p)  # noqa: E731
    else:
        ev = _eval
    alpha, gcap_next = gamma_alpha_step(state.gamma_cap, step_gamma)
    w = 1.0 / (1.0 + alpha)
    y_next = w * (state.y + alpha * state.u - step_gamma * state.grad_y)
    try:
        f_next, g_next = ev(y_next)
    except DomainViolationError as exc:
        raise SafetyViolationError(
            f"y left the feasible set at iteration {state.k + 1}: {exc}"
        ) from exc
    u_next = project_closure(
        problem.domain, state.u - (alpha / state.gamma_cap) * g_next
    )
    return AgdState(
        y=y_next, u=u_next, gamma_cap=gcap_next, k=state.k + 1,
        f_y=f_next, grad_y=g_next,
    )


# --- gradient descent warm start -------------------------------------------

def _gd_stop(f: float, grad_norm: float, f_star: float | None, r_bar: float, delta: float) -> bool:
    if f_star is not None:
        return f - f_star <= delta / 2.0
    # convexity certificate: gap <= |grad| * distance <= |grad| * r_bar
    return grad_norm * r_bar <= delta / 2.0


def _gd_phase(
    oracle: _Oracle,
    model: EllModel,
    x: np.ndarray,
    f: float,
    g: np.ndarray,
    delta: float,
    r_bar: float,
    max_calls: int,
    trace: list[TraceRecord] | None,
    strict: bool,
):
    """Run x <- x - grad / (2 ell(2 |grad|)) until the gap certificate holds.

    Returns (status, x, f, g, iters, flags_total).
    """
    problem = oracle.problem
    opt = problem.optimum
    f_star = opt.f_star if opt is not None else None
    x_star = opt.x_star if opt is not None else None
    dist = float(np.linalg.norm(x - x_star)) if x_star is not None else None
    flags_total = 0
    iters = 0
    while True:
        gn = float(np.linalg.norm(g))
        if _gd_stop(f, gn, f_star, r_bar, delta):
            return "ok", x, f, g, iters, flags_total
        if oracle.calls >= max_calls:
            return "budget", x, f, g, iters, flags_total
        gamma_t = 1.0 / (2.0 * ell_eval(model, 2.0 * gn))
        try:
            x_next = x - gamma_t * g
            f, g = oracle(x_next)
        except DomainViolationError as exc:
            raise SafetyViolationError(f"GD iterate left the feasible set: {exc}") from exc
        x = x_next
        iters += 1
        flags = 0
        if x_star is not None:
            dist_next = float(np.linalg.norm(x - x_star))
            if dist_next > dist * (1.0 + 1e-12):
                flags = int(flags | Flag.GD_MONOTONE)
                flags_total = int(flags_total | Flag.GD_MONOTONE)
                if strict:
                    raise SafetyViolationError(
                        f"GD distance to optimum increased at iteration {iters}: "
                        f"{dist} -> {dist_next}"
                    )
            dist = dist_next
        if trace is not None:
            trace.append(TraceRecord(
                k=iters, phase="gd",
                f_gap=None if f_star is None else f - f_star,
                grad_norm=float(np.linalg.norm(g)),
                gamma_cap=None, alpha=None, step_gamma=gamma_t,
                dist_to_opt=dist, bound_gap=None, lyapunov=None,
                flags=int(flags),
            ))


def gd_run(
    problem: Problem,
    model: EllModel,
    x0: np.ndarray,
    delta: float,
    r_bar: float,
    budget: int,
) -> tuple[np.ndarray, list[TraceRecord]]:
    """Stand-alone warm-start GD; ``budget`` caps iterations.

    Stops once ``f(x) - f* <= delta / 2`` (known optimum) or the computable
    certificate ``|grad| * r_bar <= delta / 2`` holds.
    """
    if not (delta > 0 and r_bar > 0 and budget >= 0):
        raise PreconditionError("gd_run needs delta > 0, r_bar > 0, budget >= 0")
    _validate_delta_region(model, delta)
    oracle = _Oracle(problem)
    x0 = np.asarray(x0, dtype=float)
    f, g = oracle(x0)
    trace: list[TraceRecord] = []
    status, x, f, g, iters, _ = _gd_phase(
        oracle, model, x0, f, g, delta, r_bar, max_calls=budget + 1,
        trace=trace, strict=True,
    )
    if status == "budget":
        raise BudgetExceededError(
            f"GD did not certify a gap of {delta / 2} within {budget} iterations"
        )
    return x, trace


def _validate_delta_region(model: EllModel, delta: float) -> None:
    profile = PsiProfile.from_model(model)
    if math.isinf(profile.delta_max):
        if not admissible_delta(model, delta):
            raise PreconditionError(
                f"delta = {delta} fails the warm-start admissibility check"
            )
    else:
        if delta > profile.psi_at_delta_max / 2.0:
            raise PreconditionError(
                f"delta = {delta} exceeds half the peak of psi "
                f"({profile.psi_at_delta_max / 2.0})"
            )
        left, _ = delta_left_right(profile, delta)
        if ell_eval(model, 4.0 * left) > 2.0 * ell_zero(model):
            raise PreconditionError(
                f"delta = {delta}: left crossing violates the small-curvature condition"
            )


# --- delta selection policy -------------------------------------------------

def select_delta(model: EllModel, r_bar: float, m_bar: float | None = None) -> float:
    """Warm-start gap target for the given profile class.

    Constant-like profiles (bounded by 2 ell(0) everywhere) admit every
    delta; the infinite sentinel tells the caller to skip the warm start.
    Superquadratic power profiles additionally need ``m_bar``, an upper
    bound on the gradient norm over the ball of radius 2 r_bar around the
    optimum, and the returned value is clipped until the two-branch
    geometry conditions hold.
    """
    if not r_bar > 0:
        raise PreconditionError("r_bar must be positive")
    from .smoothness import _ell_sup  # shared internal helper

    l0 = ell_zero(model)
    if _ell_sup(model) <= 2.0 * l0:
        return math.inf
    if isinstance(model, Affine):
        head = math.inf if model.L1 == 0 else model.L0 / (64.0 * model.L1**2)
        delta = min(head, model.L0 * r_bar**2 / 64.0)
    elif isinstance(model, Power) and model.rho <= 2:
        head = model.L0 ** (2.0 / model.rho - 1.0) / model.L1 ** (2.0 / model.rho)
        delta = min(head, model.L0 * r_bar**2) / 64.0
    elif isinstance(model, Power):
        if m_bar is None:
            raise ConfigurationError(
                "superquadratic profiles need m_bar (gradient bound on the "
                "2*r_bar ball) to select delta"
            )
        rho, L0, L1 = model.rho, model.L0, model.L1
        delta = min(
            L0 ** (2.0 / rho - 1.0) / L1 ** (2.0 / rho),
            L0 / L1**2,
            (1.0 / (2.0 * m_bar)) ** (rho - 2.0) / L1,
            L0 * r_bar**2,
        )
        delta = _clip_to_branch_region(model, delta, m_bar)
    elif isinstance(model, CustomMonotone):
        delta = min(_admissible_boundary(model), l0 * r_bar**2 / 64.0)
        profile = PsiProfile.from_model(model)
        if math.isfinite(profile.delta_max):
            if m_bar is None:
                raise ConfigurationError(
                    "this profile has a non-monotone psi; m_bar is required"
                )
            delta = _clip_to_branch_region(model, delta, m_bar)
    else:  # pragma: no cover - Constant handled by the sentinel branch
        return math.inf
    if math.isinf(PsiProfile.from_model(model).delta_max) and not admissible_delta(model, delta):
        raise PreconditionError(f"internal: policy delta {delta} not admissible")
    return delta


def _admissible_boundary(model: EllModel) -> float:
    # largest admissible delta by bisection on the monotone predicate
    hi = 1.0
    while admissible_delta(model, hi):
        hi *= 2.0
        if hi > 1e308:
            return math.inf
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if admissible_delta(model, mid):
            lo = mid
        else:
            hi = mid
    return lo


def _clip_to_branch_region(model: EllModel, delta: float, m_bar: float) -> float:
    profile = PsiProfile.from_model(model)
    delta = min(delta, profile.psi_at_delta_max / 2.0)
    l0 = ell_zero(model)
    for _ in range(200):
        left, right = delta_left_right(profile, delta)
        if ell_eval(model, 4.0 * left) <= 2.0 * l0 and right >= 2.0 * m_bar:
            return delta
        delta *= 0.5
    raise PreconditionError(
        "could not find a delta satisfying the two-branch geometry conditions"
    )


def estimate_grad_bound(
    problem: Problem, r_bar: float, seed: int = 0, samples: int = 64, safety: float = 2.0
) -> float:
    """Heuristic m_bar: sample gradient norms on the sphere of radius
    2 r_bar around the optimum and scale by a safety factor."""
    if problem.optimum is None:
        raise PreconditionError("gradient-bound estimation needs a known optimum")
    rng = np.random.default_rng(seed)
    x_star = problem.optimum.x_star
    best = 0.0
    for _ in range(samples):
        d = rng.standard_normal(problem.dim)
        d /= np.linalg.norm(d)
        x = x_star + 2.0 * r_bar * d
        try:
            _, g = evaluate(problem, x)
        except DomainViolationError:
            continue
        best = max(best, float(np.linalg.norm(g)))
    if best == 0.0:
        raise PreconditionError("all gradient-bound samples fell outside the feasible set")
    return safety * best


# --- shared accelerated loop -------------------------------------------------

@dataclass
class _Checks:
    enabled: bool
    strict: bool
    flags_total: int = 0
    pending: int = 0

    def note(self, bit: Flag, ok: bool, message: str) -> None:
        if ok:
            return
        # plain ints throughout: IntFlag instances stringify as names on
        # some interpreters, which would corrupt the CSV flags column
        self.pending = int(self.pending | bit)
        self.flags_total = int(self.flags_total | bit)
        if self.strict:
            raise InvariantViolationError(message, flags=int(bit))

    def take_pending(self) -> int:
        out = self.pending
        self.pending = 0
        return out


def _run_agd(
    variant: str,
    oracle: _Oracle,
    model: EllModel,
    profile: PsiProfile,
    state: AgdState,
    r_bar: float,
    epsilon: float,
    max_calls: int,
    step_gamma_const: float | None,
    check_invariants: bool,
    strict: bool,
    trace: list[TraceRecord] | None,
    state_sink: Callable[[AgdState, float], None] | None,
    superquadratic: bool,
):
    problem = oracle.problem
    opt = problem.optimum
    f_star = opt.f_star if opt is not None else None
    x_star = opt.x_star if opt is not None else None
    l0 = ell_zero(model)
    rb2 = r_bar * r_bar
    checks = _Checks(enabled=check_invariants, strict=strict)
    kbar_value = kbar(state.gamma_cap, step_gamma_const) if step_gamma_const else None
    gap_scale = max(1.0, abs(f_star)) if f_star is not None else 1.0
    is_constant_model = isinstance(model, Constant)

    v_prev: float | None = None
    if x_star is not None:
        v_prev = (state.f_y - f_star) + 0.5 * state.gamma_cap * float(
            np.linalg.norm(state.u - x_star) ** 2
        )
    k0 = state.k
    while True:
        gap = None if f_star is None else state.f_y - f_star
        bound = state.gamma_cap * rb2
        if (gap is not None and gap <= epsilon) or bound <= epsilon:
            return state, "converged", checks.flags_total, ""
        if state.gamma_cap < GAMMA_UNDERFLOW:
            return state, "converged", checks.flags_total, "gamma_cap underflow; certified bound saturated"

        grad_norm = float(np.linalg.norm(state.grad_y))

        # step size for this iteration
        if variant == "agd1":
            step_gamma = step_gamma_const
            envelope_x = None
        else:
            t = state.gamma_cap * rb2
            if is_constant_model:
                # ell is flat, so ell(4 psi_inverse(t)) = L identically;
                # the envelope value itself is only needed for the check
                envelope_x = psi_inverse(profile, t) if checks.enabled else None
                step_gamma = 1.0 / model.L
            else:
                envelope_x = psi_inverse(profile, t)
                step_gamma = 1.0 / ell_eval(model, 4.0 * envelope_x)

        if checks.enabled:
            if variant == "agd1":
                checks.note(
                    Flag.WARM_REGION,
                    ell_eval(model, 4.0 * grad_norm) <= 2.0 * l0 * (1.0 + 1e-12),
                    f"small-curvature region left at k={state.k}: "
                    f"ell(4|g|)={ell_eval(model, 4.0 * grad_norm)} > 2 ell(0)={2 * l0}",
                )
            elif envelope_x is not None:
                checks.note(
                    Flag.GRAD_ENVELOPE,
                    grad_norm <= envelope_x * (1.0 + 1e-9) + 1e-15,
                    f"gradient envelope broken at k={state.k}: "
                    f"|g|={grad_norm} > psi_inverse={envelope_x}",
                )
            if superquadratic and x_star is not None:
                dy = float(np.linalg.norm(state.y - x_star))
                du = float(np.linalg.norm(state.u - x_star))
                checks.note(
                    Flag.BALL_CONFINEMENT,
                    max(dy, du) <= 2.0 * r_bar * (1.0 + 1e-12),
                    f"iterate left the 2*r_bar ball at k={state.k}",
                )
            checks.note(
                Flag.STEP_SAFETY,
                step_gamma <= (1.0 + 1e-12) / ell_eval(model, 2.0 * grad_norm),
                f"step size above the safety cap at k={state.k}",
            )

        if oracle.calls >= max_calls:
            return state, "budget", checks.flags_total, ""

        alpha = math.sqrt(step_gamma * state.gamma_cap)
        if state_sink is not None:
            state_sink(state, step_gamma)
        prev_k = state.k
        state = agd_step(state, step_gamma, problem, _eval=oracle)

        if checks.enabled:
            if f_star is not None:
                new_gap = state.f_y - f_star
                checks.note(
                    Flag.CERTIFIED_GAP,
                    new_gap <= state.gamma_cap * rb2 + 1e-9 * gap_scale,
                    f"certified gap bound broken at k={state.k}: "
                    f"gap={new_gap} > bound={state.gamma_cap * rb2}",
                )
            if x_star is not None:
                v_new = (state.f_y - f_star) + 0.5 * state.gamma_cap * float(
                    np.linalg.norm(state.u - x_star) ** 2
                )
                checks.note(
                    Flag.LYAPUNOV,
                    v_new <= v_prev / (1.0 + alpha) + 1e-9 * max(1.0, v_prev),
                    f"certificate function failed to contract at k={state.k}",
                )
                v_prev = v_new
            if kbar_value is not None and prev_k - k0 >= kbar_value:
                env = gamma_envelope(prev_k - k0, step_gamma_const, kbar_value)
                checks.note(
                    Flag.GAMMA_ENVELOPE,
                    state.gamma_cap <= env + 4.0 * math.ulp(env),
                    f"gamma_cap exceeded its certified envelope at k={state.k}",
                )

        if trace is not None:
            new_gap = None if f_star is None else state.f_y - f_star
            v_rec = None
            if x_star is not None:
                v_rec = (state.f_y - f_star) + 0.5 * state.gamma_cap * float(
                    np.linalg.norm(state.u - x_star) ** 2
                )
            trace.append(TraceRecord(
                k=state.k, phase="agd",
                f_gap=new_gap,
                grad_norm=float(np.linalg.norm(state.grad_y)),
                gamma_cap=state.gamma_cap,
                alpha=alpha,
                step_gamma=step_gamma,
                dist_to_opt=None if x_star is None else float(np.linalg.norm(state.y - x_star)),
                bound_gap=state.gamma_cap * rb2,
                lyapunov=v_rec,
                flags=checks.take_pending(),
            ))
        else:
            checks.take_pending()


def _finish(
    state, gd_iters, agd_iters, trace, termination, oracle, flags_total,
    f_star, r_bar, warmup_bound=None, message="",
) -> RunResult:
    if f_star is not None and state is not None:
        achieved = state.f_y - f_star
    elif state is not None:
        achieved = state.gamma_cap * r_bar * r_bar
    else:
        achieved = math.inf
    return RunResult(
        state=state, gd_iters=gd_iters, agd_iters=agd_iters,
        achieved_gap=achieved, trace=trace, termination=termination,
        oracle_calls=oracle.calls, flags_total=flags_total,
        warmup_bound=warmup_bound, message=message,
    )


def algorithm1_run(
    problem: Problem,
    model: EllModel,
    x0: np.ndarray,
    delta: float,
    r_bar: float,
    epsilon: float,
    budget: int,
    m_bar: float | None = None,
    check_invariants: bool = True,
    strict: bool = False,
    collect_trace: bool = True,
    state_sink: Callable[[AgdState, float], None] | None = None,
) -> RunResult:
    """Warm-started accelerated run with the fixed step 1 / (2 ell(0)).

    ``budget`` caps total oracle calls across both phases.  An infinite
    ``delta`` (the select_delta sentinel for constant-like profiles) is
    replaced by twice the initial gap (or its gradient certificate), which
    makes the warm start a no-op.
    """
    if not (epsilon > 0 and r_bar > 0 and budget >= 1):
        raise ConfigurationError("algorithm1_run needs epsilon > 0, r_bar > 0, budget >= 1")
    x0 = np.asarray(x0, dtype=float)
    oracle = _Oracle(problem)
    f0, g0 = oracle(x0)
    opt = problem.optimum
    f_star = opt.f_star if opt is not None else None
    x_star = opt.x_star if opt is not None else None
    trace: list[TraceRecord] = [] if collect_trace else None

    if x_star is not None and float(np.linalg.norm(x0 - x_star)) > r_bar * (1 + 1e-12):
        return _finish(None, 0, 0, trace or [], "precondition-failed", oracle, 0,
                       f_star, r_bar, message="r_bar is below the true initial distance")

    if f_star is not None and f0 - f_star <= epsilon:
        gcap0 = delta / r_bar**2 if (math.isfinite(delta) and delta > 0) else 1.0
        state = AgdState(y=x0, u=x0.copy(), gamma_cap=gcap0, k=0, f_y=f0, grad_y=g0)
        return _finish(state, 0, 0, trace or [], "converged", oracle, 0, f_star, r_bar)
    if float(np.linalg.norm(g0)) == 0.0:
        # stationary start: convexity certifies optimality outright
        state = AgdState(y=x0, u=x0.copy(), gamma_cap=1.0, k=0, f_y=f0, grad_y=g0)
        out = _finish(state, 0, 0, trace or [], "converged", oracle, 0, f_star, r_bar,
                      message="stationary start")
        out.achieved_gap = 0.0 if f_star is None else f0 - f_star
        return out

    # resolve the warm-start gap target
    if math.isinf(delta):
        if f_star is not None:
            delta_eff = 2.0 * (f0 - f_star)
        else:
            delta_eff = 2.0 * float(np.linalg.norm(g0)) * r_bar
    else:
        delta_eff = delta
    if not delta_eff > 0:
        return _finish(None, 0, 0, trace or [], "precondition-failed", oracle, 0,
                       f_star, r_bar, message=f"resolved delta {delta_eff} is not positive")

    profile = PsiProfile.from_model(model)
    superquadratic = math.isfinite(profile.delta_max)
    message = ""
    if superquadratic:
        if delta_eff > profile.psi_at_delta_max / 2.0:
            return _finish(None, 0, 0, trace or [], "precondition-failed", oracle, 0,
                           f_star, r_bar,
                           message=f"delta {delta_eff} exceeds half the peak of psi")
        left, right = delta_left_right(profile, delta_eff)
        if ell_eval(model, 4.0 * left) > 2.0 * ell_zero(model):
            return _finish(None, 0, 0, trace or [], "precondition-failed", oracle, 0,
                           f_star, r_bar,
                           message="delta violates the small-curvature branch condition")
        m_eff = m_bar
        if m_eff is None and x_star is not None:
            m_eff = estimate_grad_bound(problem, r_bar)
            message = f"m_bar estimated by sphere sampling (heuristic): {m_eff}"
        if m_eff is None:
            return _finish(None, 0, 0, trace or [], "precondition-failed", oracle, 0,
                           f_star, r_bar,
                           message="superquadratic profile needs m_bar or a known optimum")
        if right < 2.0 * m_eff:
            return _finish(None, 0, 0, trace or [], "precondition-failed", oracle, 0,
                           f_star, r_bar,
                           message=f"right crossing {right} is below 2*m_bar = {2 * m_eff}")
    else:
        if not admissible_delta(model, delta_eff):
            return _finish(None, 0, 0, trace or [], "precondition-failed", oracle, 0,
                           f_star, r_bar,
                           message=f"delta {delta_eff} fails the admissibility check")

    status, xbar, f, g, gd_iters, gd_flags = _gd_phase(
        oracle, model, x0, f0, g0, delta_eff, r_bar, max_calls=budget,
        trace=trace, strict=strict and check_invariants,
    )
    if status == "budget":
        state = AgdState(y=xbar, u=xbar.copy(), gamma_cap=delta_eff / r_bar**2,
                         k=0, f_y=f, grad_y=g)
        return _finish(state, gd_iters, 0, trace or [], "budget", oracle, gd_flags,
                       f_star, r_bar)

    gamma_cap0 = delta_eff / r_bar**2
    step_gamma = 1.0 / (2.0 * ell_zero(model))
    state = AgdState(y=xbar, u=xbar.copy(), gamma_cap=gamma_cap0, k=0, f_y=f, grad_y=g)
    state, termination, flags_total, msg = _run_agd(
        "agd1", oracle, model, profile, state, r_bar, epsilon, budget,
        step_gamma_const=step_gamma, check_invariants=check_invariants,
        strict=strict, trace=trace, state_sink=state_sink,
        superquadratic=superquadratic,
    )
    return _finish(state, gd_iters, state.k, trace or [], termination, oracle,
                   flags_total | gd_flags, f_star, r_bar,
                   message="; ".join(m for m in (message, msg) if m))


def warmup_iterations_bound(model: EllModel, gamma_cap0: float, r_bar: float) -> int:
    """Smallest integer k such that the decayed certificate level forces the
    small-curvature condition ``ell(24 sqrt(C)/k) <= 2 ell(0)`` with
    ``C = ell(4 psi_inverse(gamma_cap0 r_bar^2)) ell(0) r_bar^2``.

    Diagnostic only; the adaptive algorithm never consumes it.
    """
    profile = PsiProfile.from_model(model)
    l0 = ell_zero(model)
    t0 = gamma_cap0 * r_bar**2
    if t0 >= profile.psi_at_delta_max:
        raise ConfigurationError("gamma_cap0 * r_bar^2 is out of the psi range")
    lref = ell_eval(model, 4.0 * psi_inverse(profile, t0))
    c = math.sqrt(lref * l0) * r_bar

    def ok(k: int) -> bool:
        return ell_eval(model, 24.0 * c / k) <= 2.0 * l0

    if ok(1):
        return 1
    hi = 2
    while not ok(hi):
        hi *= 2
        if hi > 2**62:
            raise ConfigurationError("no finite warmup bound found (profile unbounded?)")
    lo = hi // 2  # smallest ok integer lies in (lo, hi]
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


def algorithm2_run(
    problem: Problem,
    model: EllModel,
    x0: np.ndarray,
    gamma_cap0: float,
    r_bar: float,
    epsilon: float,
    budget: int,
    check_invariants: bool = True,
    strict: bool = False,
    collect_trace: bool = True,
    state_sink: Callable[[AgdState, float], None] | None = None,
) -> RunResult:
    """Adaptive-step accelerated run without a warm start.

    Requires psi to be strictly increasing on all of [0, inf); profiles
    with a finite increase region are rejected as a configuration error,
    as is a starting certificate level outside the range of psi.
    """
    if not (epsilon > 0 and r_bar > 0 and budget >= 1 and gamma_cap0 > 0):
        raise ConfigurationError(
            "algorithm2_run needs gamma_cap0 > 0, epsilon > 0, r_bar > 0, budget >= 1"
        )
    profile = PsiProfile.from_model(model)
    if math.isfinite(profile.delta_max):
        raise ConfigurationError(
            "psi is not invertible on [0, inf) for this profile "
            f"(increase stops at {profile.delta_max}); use the warm-started variant"
        )
    if gamma_cap0 * r_bar**2 >= profile.psi_at_delta_max:
        raise ConfigurationError(
            f"gamma_cap0 * r_bar^2 = {gamma_cap0 * r_bar**2} is not below "
            f"sup psi = {profile.psi_at_delta_max}; the adaptive step is undefined"
        )
    x0 = np.asarray(x0, dtype=float)
    oracle = _Oracle(problem)
    f0, g0 = oracle(x0)
    opt = problem.optimum
    f_star = opt.f_star if opt is not None else None
    x_star = opt.x_star if opt is not None else None
    trace: list[TraceRecord] = [] if collect_trace else None
    message = ""

    if x_star is not None:
        r0 = float(np.linalg.norm(x0 - x_star))
        if r0 > r_bar * (1 + 1e-12):
            return _finish(None, 0, 0, trace or [], "precondition-failed", oracle, 0,
                           f_star, r_bar, message="r_bar is below the true initial distance")
        if r0 > 0 and gamma_cap0 < 2.0 * (f0 - f_star) / r0**2 * (1 - 1e-12):
            return _finish(None, 0, 0, trace or [], "precondition-failed", oracle, 0,
                           f_star, r_bar,
                           message=f"gamma_cap0 must be >= {2.0 * (f0 - f_star) / r0**2}")

    try:
        warmup = warmup_iterations_bound(model, gamma_cap0, r_bar)
    except ConfigurationError:
        warmup = None

    state = AgdState(y=x0, u=x0.copy(), gamma_cap=gamma_cap0, k=0, f_y=f0, grad_y=g0)
    if float(np.linalg.norm(g0)) == 0.0:
        # stationary start: convexity certifies optimality outright
        out = _finish(state, 0, 0, trace or [], "converged", oracle, 0, f_star, r_bar,
                      warmup_bound=warmup, message="stationary start")
        out.achieved_gap = 0.0 if f_star is None else f0 - f_star
        return out
    state, termination, flags_total, msg = _run_agd(
        "agd2", oracle, model, profile, state, r_bar, epsilon, budget,
        step_gamma_const=None, check_invariants=check_invariants,
        strict=strict, trace=trace, state_sink=state_sink,
        superquadratic=False,
    )
    return _finish(state, 0, state.k, trace or [], termination, oracle,
                   flags_total, f_star, r_bar, warmup_bound=warmup,
                   message="; ".join(m for m in (message, msg) if m))
