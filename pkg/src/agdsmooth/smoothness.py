"""Curvature profiles and the analytic machinery derived from them.

The central object is a non-decreasing positive profile ``ell`` that bounds
local curvature by the gradient norm, ``||hess f(x)|| <= ell(||grad f(x)||)``.
Two derived functions drive everything else in the package:

* ``psi(x) = x^2 / (2 ell(4 x))`` converts a bound on the function gap into
  a bound on the gradient norm.  It is strictly increasing up to
  ``delta_max`` (finite only for superquadratic growth), and on a
  non-monotone profile the level set ``psi = delta`` has a left root below
  ``delta_max`` and possibly a second root ``delta_right`` beyond it.
* ``q(s; a) = int_0^s dv / ell(a + v)`` bounds gradient variation between
  nearby points; its limit ``q_max(a)`` caps safe step lengths.

All functions here are pure; models are immutable after construction and
safe to share across threads.  ``math.inf`` is the extended-real sentinel
for unbounded quantities (never a large finite float).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.integrate import quad

from .errors import ConfigurationError, DomainError, OutOfRangeError

# Quadrature is kept two orders tighter than the 1e-6/1e-8 test tolerances
# that consume it.
QUAD_REL_TOL = 1e-10

# Bisection policy: no Newton, geometric bracket growth by 2, hard cap.
BISECT_MAX_ITER = 200


@dataclass(frozen=True)
class Constant:
    """ell(s) = L."""

    L: float

    def __post_init__(self):
        if not (self.L > 0 and math.isfinite(self.L)):
            raise ConfigurationError(f"Constant profile needs L > 0, got {self.L}")


@dataclass(frozen=True)
class Affine:
    """ell(s) = L0 + L1 * s."""

    L0: float
    L1: float

    def __post_init__(self):
        if not (self.L0 > 0 and math.isfinite(self.L0)):
            raise ConfigurationError(f"Affine profile needs L0 > 0, got {self.L0}")
        if not (self.L1 >= 0 and math.isfinite(self.L1)):
            raise ConfigurationError(f"Affine profile needs L1 >= 0, got {self.L1}")


@dataclass(frozen=True)
class Power:
    """ell(s) = L0 + L1 * s**rho."""

    rho: float
    L0: float
    L1: float

    def __post_init__(self):
        if not (self.rho >= 0 and math.isfinite(self.rho)):
            raise ConfigurationError(f"Power profile needs rho >= 0, got {self.rho}")
        if not (self.L0 > 0 and math.isfinite(self.L0)):
            raise ConfigurationError(f"Power profile needs L0 > 0, got {self.L0}")
        if not (self.L1 >= 0 and math.isfinite(self.L1)):
            raise ConfigurationError(f"Power profile needs L1 >= 0, got {self.L1}")


@dataclass(frozen=True)
class CustomMonotone:
    """Piecewise-linear profile through ``points``, constant beyond the last.

    Breakpoints must start at s = 0, be strictly increasing in s and
    non-decreasing in ell(s), with every ell value positive.  Constant
    extrapolation keeps the profile bounded, so ``q_max`` is always
    infinite for this variant.
    """

    points: tuple[tuple[float, float], ...]

    def __post_init__(self):
        pts = tuple((float(s), float(v)) for s, v in self.points)
        object.__setattr__(self, "points", pts)
        if len(pts) < 1:
            raise ConfigurationError("CustomMonotone needs at least one breakpoint")
        if pts[0][0] != 0.0:
            raise ConfigurationError("CustomMonotone breakpoints must start at s = 0")
        for (s0, v0), (s1, v1) in zip(pts, pts[1:]):
            if not s1 > s0:
                raise ConfigurationError("breakpoints must be strictly increasing in s")
            if v1 < v0:
                raise ConfigurationError("breakpoint values must be non-decreasing")
        if any(not (v > 0 and math.isfinite(v)) for _, v in pts):
            raise ConfigurationError("breakpoint values must be positive and finite")


EllModel = Constant | Affine | Power | CustomMonotone


def ell_eval(model: EllModel, s: float) -> float:
    """Evaluate the curvature profile at gradient norm ``s >= 0``."""
    if s < 0 or math.isnan(s):
        raise DomainError(f"ell is defined for s >= 0, got {s}")
    if isinstance(model, Constant):
        return model.L
    if isinstance(model, Affine):
        return model.L0 + model.L1 * s
    if isinstance(model, Power):
        return model.L0 + model.L1 * s**model.rho
    pts = model.points
    if s >= pts[-1][0]:
        return pts[-1][1]
    # linear interpolation within the bracketing segment
    lo, hi = 0, len(pts) - 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if pts[mid][0] <= s:
            lo = mid
        else:
            hi = mid
    (s0, v0), (s1, v1) = pts[lo], pts[hi]
    return v0 + (v1 - v0) * (s - s0) / (s1 - s0)


def ell_zero(model: EllModel) -> float:
    return ell_eval(model, 0.0)


def psi_eval(model: EllModel, x: float) -> float:
    """Gap-to-gradient conversion curve psi(x) = x^2 / (2 ell(4 x))."""
    if x < 0 or math.isnan(x):
        raise DomainError(f"psi is defined for x >= 0, got {x}")
    return x * x / (2.0 * ell_eval(model, 4.0 * x))


def delta_max(model: EllModel) -> float:
    """Largest bound such that psi is strictly increasing on [0, delta_max).

    Infinite for constant, affine, and power profiles with rho <= 2.  For
    superquadratic power growth the exact stationary point of psi is
    ``(1/4) * (2 L0 / ((rho - 2) L1))**(1/rho)``.  Custom profiles are
    scanned numerically and the first decrease is refined by bisection on
    the finite-difference sign.
    """
    if isinstance(model, (Constant, Affine)):
        return math.inf
    if isinstance(model, Power):
        if model.rho <= 2 or model.L1 == 0:
            return math.inf
        return 0.25 * (2.0 * model.L0 / ((model.rho - 2.0) * model.L1)) ** (1.0 / model.rho)
    return _delta_max_custom(model)


def _delta_max_custom(model: CustomMonotone, subdiv: int = 128) -> float:
    # Beyond the last breakpoint ell is constant, so psi = x^2 / (2 ell_last)
    # is strictly increasing there; only [0, s_last / 4] needs scanning.
    s_last = model.points[-1][0]
    if s_last == 0.0:
        return math.inf
    edges = [s / 4.0 for s, _ in model.points]
    grid: list[float] = []
    for a, b in zip(edges, edges[1:]):
        step = (b - a) / subdiv
        grid.extend(a + i * step for i in range(subdiv))
    grid.append(edges[-1])

    prev_x, prev_v = grid[0], psi_eval(model, grid[0])
    first_dec = None
    for x in grid[1:]:
        v = psi_eval(model, x)
        if v <= prev_v:
            first_dec = (prev_x, x)
            break
        prev_x, prev_v = x, v
    if first_dec is None:
        return math.inf

    # psi switched from increasing to non-increasing inside (lo - step, hi];
    # bisect on the local finite-difference sign.
    lo = max(0.0, first_dec[0] - (first_dec[1] - first_dec[0]))
    hi = first_dec[1]
    for _ in range(BISECT_MAX_ITER):
        mid = 0.5 * (lo + hi)
        h = max((hi - lo) * 1e-3, 1e-15 * max(1.0, mid))
        if psi_eval(model, mid + h) > psi_eval(model, mid):
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-12 * max(1.0, hi):
            break
    return 0.5 * (lo + hi)


def _psi_sup(model: EllModel, dmax: float) -> float:
    """Supremum of psi over [0, delta_max) (may be a limit, not attained)."""
    if math.isinf(dmax):
        if isinstance(model, Power) and model.rho == 2 and model.L1 > 0:
            # psi -> 1 / (32 L1) from below as x -> inf
            return 1.0 / (32.0 * model.L1)
        return math.inf
    return psi_eval(model, dmax)


@dataclass(frozen=True)
class PsiProfile:
    """A model together with its precomputed psi geometry."""

    model: EllModel
    delta_max: float
    psi_at_delta_max: float

    @classmethod
    def from_model(cls, model: EllModel) -> "PsiProfile":
        dmax = delta_max(model)
        return cls(model=model, delta_max=dmax, psi_at_delta_max=_psi_sup(model, dmax))


def psi_inverse(profile: PsiProfile, t: float, tol: float = 1e-12) -> float:
    """Invert psi on its increasing branch by bracketed bisection.

    Returns x in [0, delta_max) with ``|psi(x) - t| <= tol * max(1, t)``.
    The bracket grows geometrically from [0, 1] until psi(upper) >= t or
    upper reaches delta_max.
    """
    if t < 0 or math.isnan(t):
        raise DomainError(f"psi_inverse needs t >= 0, got {t}")
    if tol <= 0:
        raise DomainError("tol must be positive")
    if t >= profile.psi_at_delta_max:
        raise OutOfRangeError(
            f"t = {t} is not below sup psi = {profile.psi_at_delta_max}; "
            "use delta_left_right for the two-branch geometry"
        )
    if t == 0.0:
        return 0.0
    model, dmax = profile.model, profile.delta_max
    lo, hi = 0.0, min(1.0, dmax)
    while hi < dmax and psi_eval(model, hi) < t:
        lo, hi = hi, min(2.0 * hi, dmax)
    for _ in range(BISECT_MAX_ITER):
        mid = 0.5 * (lo + hi)
        if psi_eval(model, mid) < t:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 4e-16 * max(mid, 1e-300):
            break
    x = 0.5 * (lo + hi)
    return x


def delta_left_right(profile: PsiProfile, delta: float) -> tuple[float, float]:
    """Both crossings of psi with level ``delta``.

    The left root is the unique solution in [0, delta_max); the right root
    is the smallest solution in [delta_max, inf), or inf when psi stays
    above delta on a divergence-certified tail.
    """
    if delta < 0 or math.isnan(delta):
        raise DomainError(f"delta must be >= 0, got {delta}")
    if delta >= profile.psi_at_delta_max:
        raise OutOfRangeError(
            f"delta = {delta} is not below sup psi = {profile.psi_at_delta_max}"
        )
    left = psi_inverse(profile, delta)
    if math.isinf(profile.delta_max):
        return left, math.inf
    if delta == 0.0:
        # psi > 0 away from the origin, so the level 0 is never met again
        return 0.0, math.inf
    return left, _delta_right(profile, delta)


def _delta_right(profile: PsiProfile, delta: float) -> float:
    model, dmax = profile.model, profile.delta_max
    if isinstance(model, Power):
        # Tail bound: psi(x) < x^(2 - rho) / (2 L1 4^rho), so the tail root
        # of that majorant brackets the true crossing from above.
        rho, L1 = model.rho, model.L1
        hi = (2.0 * L1 * 4.0**rho * delta) ** (-1.0 / (rho - 2.0))
        hi = max(hi, dmax * (1.0 + 1e-12))
        if psi_eval(model, hi) > delta:  # numerical guard; grow until below
            while psi_eval(model, hi) > delta:
                hi *= 2.0
        return _bisect_decreasing(model, delta, dmax, hi)
    # Custom profile: scan [delta_max, s_last / 4] for the first drop below
    # delta; beyond s_last / 4 psi rises monotonically to infinity, which
    # certifies the tail when no crossing was found.
    assert isinstance(model, CustomMonotone)
    x_const = model.points[-1][0] / 4.0
    if dmax >= x_const:
        return math.inf
    n = 4096
    step = (x_const - dmax) / n
    prev = dmax
    for i in range(1, n + 1):
        x = dmax + i * step
        if psi_eval(model, x) <= delta:
            return _bisect_decreasing(model, delta, prev, x)
        prev = x
    return math.inf


def _bisect_decreasing(model: EllModel, target: float, lo: float, hi: float) -> float:
    # psi(lo) > target >= psi(hi); find the first crossing.
    for _ in range(BISECT_MAX_ITER):
        mid = 0.5 * (lo + hi)
        if psi_eval(model, mid) > target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 4e-16 * max(mid, 1e-300):
            break
    return 0.5 * (lo + hi)


def admissible_delta(model: EllModel, delta: float) -> bool:
    """Warm-start admissibility: ell(8 sqrt(delta ell(0))) <= 2 ell(0).

    Equality is accepted (the condition is non-strict).  A delta passing
    this check keeps the post-warm-start iterates inside the region where
    the local smoothness constant is at most twice its base value.
    """
    if delta < 0 or math.isnan(delta):
        raise DomainError(f"delta must be >= 0, got {delta}")
    l0 = ell_zero(model)
    if math.isinf(delta):
        # admissible only if ell is bounded by 2 ell(0) everywhere
        return _ell_sup(model) <= 2.0 * l0
    return ell_eval(model, 8.0 * math.sqrt(delta * l0)) <= 2.0 * l0


def _ell_sup(model: EllModel) -> float:
    if isinstance(model, Constant):
        return model.L
    if isinstance(model, Affine):
        return model.L0 if model.L1 == 0 else math.inf
    if isinstance(model, Power):
        return model.L0 if (model.L1 == 0 or model.rho == 0) else math.inf
    return model.points[-1][1]


def q_eval(model: EllModel, s: float, a: float) -> float:
    """Step-length budget q(s; a) = int_0^s dv / ell(a + v).

    Closed forms cover the constant, affine, and quadratic-power profiles;
    anything else goes through adaptive quadrature at 1e-10 relative.
    """
    if s < 0 or a < 0 or math.isnan(s) or math.isnan(a):
        raise DomainError(f"q needs s, a >= 0, got s={s}, a={a}")
    if s == 0.0:
        return 0.0
    if isinstance(model, Constant):
        return s / model.L
    if isinstance(model, Affine):
        if model.L1 == 0:
            return s / model.L0
        base = model.L0 + model.L1 * a
        return math.log1p(model.L1 * s / base) / model.L1
    if isinstance(model, Power) and model.rho == 2 and model.L1 > 0:
        c = math.sqrt(model.L1 / model.L0)
        scale = 1.0 / math.sqrt(model.L0 * model.L1)
        return scale * (math.atan(c * (a + s)) - math.atan(c * a))
    if isinstance(model, Power) and (model.L1 == 0 or model.rho == 0):
        return s / (model.L0 + model.L1)
    val, _ = quad(
        lambda v: 1.0 / ell_eval(model, a + v), 0.0, s,
        epsabs=0.0, epsrel=QUAD_REL_TOL, limit=200,
    )
    return val


def q_max(model: EllModel, a: float) -> float:
    """Total budget q_max(a) = int_0^inf dv / ell(a + v); inf unless the
    profile grows superlinearly."""
    if a < 0 or math.isnan(a):
        raise DomainError(f"q_max needs a >= 0, got {a}")
    if isinstance(model, (Constant, Affine, CustomMonotone)):
        return math.inf
    if model.L1 == 0 or model.rho <= 1:
        return math.inf
    if model.rho == 2:
        c = math.sqrt(model.L1 / model.L0)
        return (math.pi / 2.0 - math.atan(c * a)) / math.sqrt(model.L0 * model.L1)
    val, _ = quad(
        lambda v: 1.0 / ell_eval(model, a + v), 0.0, math.inf,
        epsabs=0.0, epsrel=QUAD_REL_TOL, limit=200,
    )
    return val


def q_inverse(model: EllModel, r: float, a: float) -> float:
    """Inverse of q with respect to s: the step length that spends budget r.

    Closed forms where q has one; otherwise bisection on the strictly
    increasing map s -> q(s; a).
    """
    if r < 0 or a < 0 or math.isnan(r) or math.isnan(a):
        raise DomainError(f"q_inverse needs r, a >= 0, got r={r}, a={a}")
    qm = q_max(model, a)
    if r >= qm:
        raise OutOfRangeError(f"r = {r} is not below q_max(a) = {qm}")
    if r == 0.0:
        return 0.0
    if isinstance(model, Constant):
        return r * model.L
    if isinstance(model, Affine):
        if model.L1 == 0:
            return r * model.L0
        base = model.L0 + model.L1 * a
        return base * math.expm1(model.L1 * r) / model.L1
    if isinstance(model, Power) and model.rho == 2 and model.L1 > 0:
        c = math.sqrt(model.L1 / model.L0)
        ang = r * math.sqrt(model.L0 * model.L1) + math.atan(c * a)
        return math.tan(ang) / c - a
    if isinstance(model, Power) and (model.L1 == 0 or model.rho == 0):
        return r * (model.L0 + model.L1)
    lo, hi = 0.0, 1.0
    while q_eval(model, hi, a) < r:
        lo, hi = hi, 2.0 * hi
    for _ in range(BISECT_MAX_ITER):
        mid = 0.5 * (lo + hi)
        if q_eval(model, mid, a) < r:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 4e-16 * max(mid, 1e-300):
            break
    return 0.5 * (lo + hi)


# --- serialization ---------------------------------------------------------

def model_to_config(model: EllModel) -> dict:
    if isinstance(model, Constant):
        return {"kind": "constant", "L": model.L}
    if isinstance(model, Affine):
        return {"kind": "affine", "L0": model.L0, "L1": model.L1}
    if isinstance(model, Power):
        return {"kind": "power", "rho": model.rho, "L0": model.L0, "L1": model.L1}
    return {"kind": "custom", "points": [[s, v] for s, v in model.points]}


def model_from_config(cfg: dict) -> EllModel:
    if not isinstance(cfg, dict) or "kind" not in cfg:
        raise ConfigurationError(f"ell model config needs a 'kind' field: {cfg!r}")
    kind = cfg["kind"]
    try:
        if kind == "constant":
            return Constant(L=float(cfg["L"]))
        if kind == "affine":
            return Affine(L0=float(cfg["L0"]), L1=float(cfg["L1"]))
        if kind == "power":
            return Power(rho=float(cfg["rho"]), L0=float(cfg["L0"]), L1=float(cfg["L1"]))
        if kind == "custom":
            return CustomMonotone(points=tuple((float(s), float(v)) for s, v in cfg["points"]))
    except KeyError as exc:
        raise ConfigurationError(f"ell model config missing field {exc} for kind {kind!r}")
    raise ConfigurationError(f"unknown ell model kind {kind!r}")
