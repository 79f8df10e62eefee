"""Closed-form error-exponent bounds for the AWGN channel with rate-limited feedback.

All rates and exponents are in nats per channel use; the noise variance is 1,
so ``P`` doubles as the SNR.
"""

from __future__ import annotations

import enum
import math
from fractions import Fraction
from dataclasses import dataclass

from .errors import InvalidParameterError, NumericFailureError, OutOfValidityError

ROOT_TOL = 1e-12
MAX_BISECTIONS = 400
MAX_EXPANSIONS = 200


class Regime(str, enum.Enum):
    SUBCRITICAL = "SUBCRITICAL"
    SUPERCRITICAL_FINITE = "SUPERCRITICAL-FINITE"
    INFEASIBLE = "INFEASIBLE"


@dataclass(frozen=True)
class ChannelParams:
    P: float
    R: float
    R_FB: float = 0.0

    def __post_init__(self):
        if not (self.P > 0 and math.isfinite(self.P)):
            raise InvalidParameterError(f"power P must be positive and finite, got {self.P!r}")
        if not self.R >= 0:
            raise InvalidParameterError(f"rate R must be >= 0, got {self.R!r}")
        if not self.R_FB >= 0:
            raise InvalidParameterError(f"feedback rate R_FB must be >= 0, got {self.R_FB!r}")


def _check_power(P):
    if not (P > 0 and math.isfinite(P)):
        raise InvalidParameterError(f"power P must be positive and finite, got {P!r}")


def capacity(P: float) -> float:
    """Shannon capacity ``0.5 * log(1 + P)`` in nats per use."""
    if isinstance(P, ChannelParams):
        P = P.P
    _check_power(P)
    return 0.5 * math.log1p(P)


def rate_validity_threshold(P: float) -> float:
    """Largest rate for which :func:`shannon_exponent_lower` is a valid bound."""
    _check_power(P)
    # (2 + sqrt(P^2+4)) / 4 - 1 == (sqrt(P^2+4) - 2) / 4 == P^2 / (4 (sqrt(P^2+4) + 2))
    excess = P * P / (4.0 * (math.sqrt(P * P + 4.0) + 2.0))
    return 0.5 * math.log1p(excess)


def shannon_exponent_lower(R: float, P: float, *, check_validity: bool = True) -> float:
    """Achievable no-feedback exponent ``(P/4)(1 - sqrt(1 - exp(-2R)))``.

    Raises:
        OutOfValidityError: if ``check_validity`` and R is outside
            ``(0, rate_validity_threshold(P))``.
    """
    _check_power(P)
    if not R >= 0:
        raise InvalidParameterError(f"rate R must be >= 0, got {R!r}")
    if check_validity:
        threshold = rate_validity_threshold(P)
        if not 0 < R < threshold:
            raise OutOfValidityError(
                f"R={R!r} outside the validity region (0, {threshold!r}) for P={P!r}"
            )
    if math.isinf(R):
        return 0.0
    return 0.25 * P * (1.0 - math.sqrt(-math.expm1(-2.0 * R)))


def chernoff_exponent(tau: float) -> float:
    """Chi-square large-deviation rate ``0.5 * (tau - 1 - log tau)``."""
    if not tau > 0:
        raise InvalidParameterError(f"tau must be positive, got {tau!r}")
    u = tau - 1.0
    # log1p keeps the cancellation near tau = 1 under control
    return 0.5 * (u - math.log1p(u))


def solve_tau0(R_FB: float, tol: float = ROOT_TOL) -> float:
    """Root ``tau0 >= 1`` of ``chernoff_exponent(tau0) == R_FB`` by bisection.

    The bracket starts at ``[1, 1 + 2 R_FB + 2 max(1, log(1 + 2 R_FB)) * 4]``
    and doubles its width until the sign changes.
    """
    if not (R_FB >= 0 and math.isfinite(R_FB)):
        raise InvalidParameterError(f"R_FB must be finite and >= 0, got {R_FB!r}")
    if R_FB == 0:
        return 1.0

    def f(tau):
        return chernoff_exponent(tau) - R_FB

    lo = 1.0
    hi = 1.0 + 2.0 * R_FB + 2.0 * max(1.0, math.log1p(2.0 * R_FB)) * 4.0
    expansions = 0
    while f(hi) < 0:
        if expansions >= MAX_EXPANSIONS or not math.isfinite(hi):
            raise NumericFailureError("could not bracket tau0", (lo, hi))
        lo, hi = hi, 1.0 + 2.0 * (hi - 1.0)
        expansions += 1

    for _ in range(MAX_BISECTIONS):
        mid = 0.5 * (lo + hi)
        if hi - lo <= tol or mid in (lo, hi):
            break
        if f(mid) < 0:
            lo = mid
        else:
            hi = mid
    else:
        raise NumericFailureError("bisection for tau0 did not converge", (lo, hi))
    # pick the bracket end with the smaller residual
    return lo if abs(f(lo)) <= abs(f(hi)) else hi


def exponent_upper_bound(R_FB: float, P: float) -> float:
    """First-order exponent ceiling ``4P + tau0/2 + R_FB``, valid when R > R_FB."""
    _check_power(P)
    return 4.0 * P + 0.5 * solve_tau0(R_FB) + R_FB


def fb_exponent_lower_bound(R: float, R_FB: float, P: float) -> float:
    """Achievable exponent with feedback when ``R_FB < R``.

    Uses :func:`shannon_exponent_lower` in place of the exact no-feedback
    reliability function, so the value is an achievable proxy, not the
    tightest known bound.
    """
    _check_power(P)
    if not R_FB >= 0:
        raise InvalidParameterError(f"R_FB must be >= 0, got {R_FB!r}")
    if not R_FB < R:
        raise InvalidParameterError(f"requires R_FB < R, got R_FB={R_FB!r}, R={R!r}")
    C = capacity(P)
    if not R < C:
        raise InvalidParameterError(f"requires R < C={C!r}, got R={R!r}")
    return shannon_exponent_lower(R, P) + R_FB


@dataclass(frozen=True)
class RegimeInfo:
    regime: Regime
    max_order: int | None = None
    """Largest L with an L-th order exponent; None means every order (R == 0)."""


def max_exponential_order(R: float, R_FB: float) -> int | None:
    """Largest integer L >= 2 with ``(L - 1) * R <= R_FB``; requires R_FB >= R."""
    if R == 0:
        return None
    # the relative slack absorbs decimal inputs such as 0.3 / 0.1 == 2.9999999999999996
    ratio = R_FB / R * (1.0 + 1e-12)
    if math.isinf(ratio):
        # subnormal R: the float ratio overflows, exact rational division does not
        return int(Fraction(R_FB) // Fraction(R)) + 1
    return int(math.floor(ratio)) + 1


def classify_regime(params: ChannelParams) -> RegimeInfo:
    if params.R >= capacity(params.P):
        return RegimeInfo(Regime.INFEASIBLE)
    if params.R_FB < params.R:
        return RegimeInfo(Regime.SUPERCRITICAL_FINITE)
    return RegimeInfo(Regime.SUBCRITICAL, max_exponential_order(params.R, params.R_FB))


@dataclass(frozen=True)
class BoundRow:
    R_FB: float
    lower: float | None
    upper: float | None
    regime: Regime
    max_order: int | None
    status: str = "ok"

    @property
    def unbounded(self) -> bool:
        return self.upper is not None and math.isinf(self.upper)


def bound_curve(R: float, P: float, rfb_grid) -> list[BoundRow]:
    """Lower/upper first-order exponent bounds over a grid of feedback rates.

    Rows with ``R_FB >= R`` are unbounded (both columns ``inf``): a super-
    exponential decay is achievable there. Per-point failures are reported in
    the ``status`` field instead of aborting the sweep.
    """
    _check_power(P)
    rows = []
    for r_fb in rfb_grid:
        r_fb = float(r_fb)
        if not r_fb >= 0:
            raise InvalidParameterError(f"grid values must be >= 0, got {r_fb!r}")
        info = classify_regime(ChannelParams(P=P, R=R, R_FB=r_fb))
        if info.regime is Regime.INFEASIBLE:
            rows.append(BoundRow(r_fb, None, None, info.regime, None, "infeasible: R >= C"))
            continue
        if info.regime is Regime.SUBCRITICAL:
            rows.append(BoundRow(r_fb, math.inf, math.inf, info.regime, info.max_order))
            continue
        status = "ok"
        try:
            upper = exponent_upper_bound(r_fb, P)
        except NumericFailureError as exc:
            upper, status = None, f"numeric-failure: {exc}"
        try:
            lower = fb_exponent_lower_bound(R, r_fb, P)
        except OutOfValidityError:
            lower = None
            if status == "ok":
                status = "out-of-validity"
        rows.append(BoundRow(r_fb, lower, upper, info.regime, None, status))
    return rows


@dataclass(frozen=True)
class ExponentReport:
    params: ChannelParams
    capacity: float
    shannon_lower: float | None
    """None when R lies outside the validity region."""
    rate_validity_threshold: float
    tau0: float
    chernoff_at_tau0: float
    e_up: float
    """``4P + tau0/2 + R_FB``; only an upper bound on E_1 when R > R_FB."""
    fb_lower_bound: float | None
    regime: RegimeInfo


def exponent_report(params: ChannelParams) -> ExponentReport:
    tau0 = solve_tau0(params.R_FB)
    try:
        shannon = shannon_exponent_lower(params.R, params.P)
    except OutOfValidityError:
        shannon = None
    regime = classify_regime(params)
    if regime.regime is Regime.SUBCRITICAL:
        fb_lower = math.inf
    elif regime.regime is Regime.SUPERCRITICAL_FINITE and shannon is not None:
        fb_lower = shannon + params.R_FB
    else:
        fb_lower = None
    return ExponentReport(
        params=params,
        capacity=capacity(params.P),
        shannon_lower=shannon,
        rate_validity_threshold=rate_validity_threshold(params.P),
        tau0=tau0,
        chernoff_at_tau0=chernoff_exponent(tau0),
        e_up=4.0 * params.P + 0.5 * tau0 + params.R_FB,
        fb_lower_bound=fb_lower,
        regime=regime,
    )
