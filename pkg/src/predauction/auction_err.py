"""Auctions whose robustness degrades with the prediction error.

The prediction error of a top bid t against the prediction u_hat is
eta = max(t/u_hat, u_hat/t).  A robustness function rho maps eta in
[1, H] to a revenue floor rho(eta)*t; admissible functions have rho
non-increasing and eta*rho(eta) non-decreasing, which makes the
allocation rule below monotone.  A rho-robust truthful highest-bidder
auction exists exactly when

    rho(H/u_hat) + I(1, u_hat) + I(1, H/u_hat) <= 1,
    where I(a, b) = integral_a^b rho(z)/z dz.

``make_family`` builds three admissible families whose reciprocal grows
polylogarithmically, logarithmically, or sublogarithmically in eta; the
polylogarithmic one is independent of H and remains feasible on the
unbounded range [1, inf), certified through the closed-form value of
integral_1^inf dz / (z*(1 + ln^(1+eps) z)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np

from .core import AgentView, AuctionDefinition
from .myerson import PiecewiseCurve, QuadratureConfig, QuadratureError, integrate

FEASIBILITY_TOL = 1e-10
UNBOUNDED = math.inf

# truncating integral_1^inf rho(z)/z dz at exp(L) leaves a tail below
# L**(-eps)/eps; budgets past this limit are not honored
_MAX_LOG_LIMIT = 1e4
_TAIL_BUDGET = 1e-7

_TIGHT_QUAD = QuadratureConfig(abs_tol=1e-13, rel_tol=1e-12, max_depth=48)


@dataclass(frozen=True)
class RhoSpec:
    """An admissible robustness function with its running-integral oracle.

    ``value`` evaluates rho(eta); ``log_integral(a, b)`` evaluates
    integral_a^b rho(z)/z dz, in closed form where the family allows it
    and by quadrature otherwise.  Admissibility (rho non-increasing,
    eta*rho(eta) non-decreasing, values in [0, 1]) is verified on a
    thousand-point grid at construction time.
    """

    value: Callable[[float], float]
    log_integral: Callable[[float, float], float]
    family_tag: str
    params: dict[str, Any] = field(default_factory=dict)
    supports_unbounded: bool = False


def _validate_rho(spec: RhoSpec, eta_hi: float) -> None:
    etas = np.geomspace(1.0, max(eta_hi, 1.0 + 1e-9), 1000)
    vals = np.array([spec.value(float(e)) for e in etas])
    if np.any(vals < -1e-15) or np.any(vals > 1.0 + 1e-12):
        raise ValueError(f"rho values leave [0, 1] for family {spec.family_tag!r}")
    if np.any(np.diff(vals) > 1e-12):
        raise ValueError(f"rho is not non-increasing for family {spec.family_tag!r}")
    scaled = etas * vals
    if np.any(np.diff(scaled) < -1e-12):
        raise ValueError(f"eta*rho(eta) is not non-decreasing for family {spec.family_tag!r}")


def constant_rho(c: float) -> RhoSpec:
    """The constant robustness function rho(eta) = c."""
    if not 0.0 <= c <= 1.0:
        raise ValueError(f"constant robustness level must lie in [0, 1], got {c}")
    return RhoSpec(
        value=lambda eta: c,
        log_integral=lambda a, b: 0.0 if c == 0.0 else c * math.log(b / a),
        family_tag="constant",
        params={"c": c},
    )


def tabulated_rho(pairs: list[tuple[float, float]], grid_hi: float | None = None) -> RhoSpec:
    """Monotone linear interpolation of a tabulated (eta, rho) curve.

    Values are held constant beyond the tabulated range.  Tables whose
    interpolant violates admissibility are rejected.
    """
    if len(pairs) < 2:
        raise ValueError("a tabulated robustness function needs at least two points")
    pts = sorted((float(e), float(r)) for e, r in pairs)
    etas = np.array([e for e, _ in pts])
    rhos = np.array([r for _, r in pts])
    if etas[0] < 1.0:
        raise ValueError(f"tabulated eta {etas[0]} below 1")
    if len(np.unique(etas)) != len(etas):
        raise ValueError("tabulated eta values must be distinct")

    def value(eta: float) -> float:
        return float(np.interp(eta, etas, rhos))

    knots = tuple(float(e) for e in etas)
    curve = PiecewiseCurve(1.0, math.inf, knots, lambda z: value(z) / z)

    def log_integral(a: float, b: float) -> float:
        if a == b:
            return 0.0
        sign, lo, hi = (1.0, a, b) if a <= b else (-1.0, b, a)
        return sign * integrate(curve, lo, hi, _TIGHT_QUAD)

    spec = RhoSpec(value=value, log_integral=log_integral, family_tag="tabulated",
                   params={"knots": pts})
    _validate_rho(spec, grid_hi if grid_hi is not None else float(etas[-1]))
    return spec


def load_rho_table(path: str | Path) -> RhoSpec:
    """Read a tabulated robustness function from a two-column CSV file."""
    pairs: list[tuple[float, float]] = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.lower().startswith(("eta", "#")):
            continue
        cols = line.split(",")
        if len(cols) < 2:
            raise ValueError(f"bad table line {line!r} in {path}")
        pairs.append((float(cols[0]), float(cols[1])))
    return tabulated_rho(pairs)


def _csc_closed(eps: float) -> float:
    return (math.pi / (1.0 + eps)) / math.sin(math.pi * eps / (1.0 + eps))


def make_family(which: str, eps: float | None = None, H: float | None = None) -> RhoSpec:
    """Build one of the three stock robustness families.

    polylog: rho(eta) = 1/((pi/eps + 1)*(1 + ln^(1+eps) eta)), eps in (0, 1];
             independent of H and usable on the unbounded range.
    log:     rho(eta) = 1/(1 + 2*ln(1 + ln H)) * 1/(1 + ln eta).
    sublog:  rho(eta) = (1-eps)/(2*(1 + ln H)^(1-eps)) * 1/(1 + ln eta)^eps,
             eps in (0, 1).

    The last two need a finite H.
    """
    if which == "polylog":
        if eps is None or not 0.0 < eps <= 1.0:
            raise ValueError(f"polylog family needs eps in (0, 1], got {eps}")
        scale = 1.0 / (math.pi / eps + 1.0)
        q = 1.0 + eps

        def value(eta: float) -> float:
            return scale / (1.0 + math.log(eta) ** q)

        if eps == 1.0:
            def log_integral(a: float, b: float) -> float:
                # d/dw arctan(w) matched to w = ln z
                return scale * (math.atan(math.log(b)) - math.atan(math.log(a)))
        else:
            kernel = PiecewiseCurve(0.0, math.inf, (), lambda w: scale / (1.0 + w ** q))
            cache: dict[float, float] = {}

            def _from_one(x: float) -> float:
                if x not in cache:
                    cache[x] = integrate(kernel, 0.0, math.log(x), _TIGHT_QUAD)
                return cache[x]

            def log_integral(a: float, b: float) -> float:
                return _from_one(b) - _from_one(a)

        spec = RhoSpec(
            value=value,
            log_integral=log_integral,
            family_tag="polylog",
            params={"eps": eps, "scale": scale,
                    "log_integral_to_inf": scale * _csc_closed(eps)},
            supports_unbounded=True,
        )
        _validate_rho(spec, H if H is not None and math.isfinite(H) else 1e6)
        return spec

    if which == "log":
        if H is None or not math.isfinite(H) or H <= 1.0:
            raise ValueError(f"log family needs a finite H > 1, got {H}")
        scale = 1.0 / (1.0 + 2.0 * math.log(1.0 + math.log(H)))
        spec = RhoSpec(
            value=lambda eta: scale / (1.0 + math.log(eta)),
            log_integral=lambda a, b: scale * math.log((1.0 + math.log(b)) / (1.0 + math.log(a))),
            family_tag="log",
            params={"H": H, "scale": scale},
        )
        _validate_rho(spec, H)
        return spec

    if which == "sublog":
        if eps is None or not 0.0 < eps < 1.0:
            raise ValueError(f"sublog family needs eps in (0, 1), got {eps}")
        if H is None or not math.isfinite(H) or H <= 1.0:
            raise ValueError(f"sublog family needs a finite H > 1, got {H}")
        scale = (1.0 - eps) / (2.0 * (1.0 + math.log(H)) ** (1.0 - eps))
        pwr = 1.0 - eps

        def sub_integral(a: float, b: float) -> float:
            return scale * (((1.0 + math.log(b)) ** pwr - (1.0 + math.log(a)) ** pwr) / pwr)

        spec = RhoSpec(
            value=lambda eta: scale / (1.0 + math.log(eta)) ** eps,
            log_integral=sub_integral,
            family_tag="sublog",
            params={"eps": eps, "H": H, "scale": scale},
        )
        _validate_rho(spec, H)
        return spec

    raise ValueError(f"unknown family {which!r}; expected polylog, log, or sublog")


def err_condition_value(rho: RhoSpec, u_hat: float, H: float) -> float:
    """The three-term feasibility sum rho(H/u_hat) + I(1, u_hat) + I(1, H/u_hat)."""
    if u_hat < 1.0:
        raise ValueError(f"prediction u_hat={u_hat} below 1")
    if math.isinf(H):
        if not rho.supports_unbounded:
            raise ValueError(f"family {rho.family_tag!r} is not defined on an unbounded range")
        # rho vanishes at infinity; the infinite integral has a closed value
        return rho.log_integral(1.0, u_hat) + rho.params["log_integral_to_inf"]
    if not 1.0 <= u_hat <= H:
        raise ValueError(f"prediction u_hat={u_hat} outside [1, {H}]")
    return rho.value(H / u_hat) + rho.log_integral(1.0, u_hat) + rho.log_integral(1.0, H / u_hat)


def err_condition(rho: RhoSpec, u_hat: float, H: float) -> bool:
    """Whether a rho-robust truthful highest-bidder auction exists."""
    return err_condition_value(rho, u_hat, H) <= 1.0 + FEASIBILITY_TOL


@dataclass(frozen=True)
class ErrParams:
    """Feasible parameters of the error-dependent auction."""

    rho: RhoSpec
    u_hat: float
    H: float

    def __post_init__(self) -> None:
        value = err_condition_value(self.rho, self.u_hat, self.H)
        if value > 1.0 + FEASIBILITY_TOL:
            raise ValueError(f"infeasible robustness function: feasibility sum = {value} > 1")


def _eta(x: float, u_hat: float) -> float:
    return max(x / u_hat, u_hat / x)


def alloc_err(view: AgentView, p: ErrParams) -> float:
    """Allocation probability for the given view.

    The section rises logarithmically on both sides of the prediction and
    is continuous at t = u_hat; the only jump is at the tie value t = b.
    """
    t, b, nu = view.effective()
    _check_view(t, b, p.H)
    rho, L, u = p.rho.value, p.rho.log_integral, p.u_hat
    if t < b:
        return 0.0
    if t == b:
        return rho(_eta(b, u)) / (nu + 1)
    if b >= u:
        return rho(t / u) + L(b / u, t / u)
    if t < u:
        return rho(u / t) + L(u / t, u / b)
    return rho(t / u) + L(1.0, u / b) + L(1.0, t / u)


def pay_err(view: AgentView, p: ErrParams) -> float:
    """Expected payment: a unique top bid t pays rho(eta)*t exactly."""
    t, b, nu = view.effective()
    _check_view(t, b, p.H)
    rho, u = p.rho.value, p.u_hat
    if t < b:
        return 0.0
    if t == b:
        return rho(_eta(b, u)) * b / (nu + 1)
    return rho(_eta(t, u)) * t


def _check_view(t: float, b: float, H: float) -> None:
    if t > H or b > H:
        raise ValueError(f"view (t={t}, b={b}) outside the bid range [1, {H}]")


def err_auction(p: ErrParams) -> AuctionDefinition:
    """Bundle the rule pair as a runnable auction."""
    return AuctionDefinition(
        name=f"err({p.rho.family_tag}, u_hat={p.u_hat}, H={p.H})",
        H=p.H,
        alloc_rule=lambda view: alloc_err(view, p),
        pay_rule=lambda view: pay_err(view, p),
        params=p,
        section_breakpoints=lambda b: (b, p.u_hat),
    )


def csc_identity_check(eps: float) -> tuple[float, float]:
    """Quadrature vs closed form of integral_1^inf dz/(z*(1+ln^(1+eps) z)).

    Returns (numeric, closed) with closed = pi/(1+eps) * csc(pi*eps/(1+eps)).
    The numeric value truncates the integral where the remaining tail is
    provably below 1e-7; raises when that point is out of budget.
    """
    if not 0.0 < eps <= 1.0:
        raise ValueError(f"eps must lie in (0, 1], got {eps}")
    closed = _csc_closed(eps)
    q = 1.0 + eps
    # tail past exp(L) is below L**(-eps)/eps
    log_limit = (1.0 / eps) * math.log(1.0 / (eps * _TAIL_BUDGET))
    if log_limit > _MAX_LOG_LIMIT:
        raise QuadratureError(
            f"tail bound for eps={eps} needs the upper limit exp({log_limit:.4g}), "
            f"beyond the exp({_MAX_LOG_LIMIT:.4g}) truncation budget"
        )
    head_curve = PiecewiseCurve(0.0, 1.0, (), lambda w: 1.0 / (1.0 + w ** q))
    head = integrate(head_curve, 0.0, 1.0, _TIGHT_QUAD)
    # w = exp(s) rewrites the rest as a smooth exponentially decaying integrand
    body_curve = PiecewiseCurve(
        0.0, log_limit, (),
        lambda s: math.exp(-eps * s) / (1.0 + math.exp(-q * s)),
    )
    body = integrate(body_curve, 0.0, log_limit, _TIGHT_QUAD)
    return head + body, closed
