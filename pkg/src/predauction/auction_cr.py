"""The consistency/robustness trade-off auction.

Given a consistency target ``gamma``, a robustness target ``rho``, a
prediction ``u_hat`` for the highest valuation, and the valuation cap
``H``, the rule pair built here is dominant-strategy incentive-compatible,
allocates only to highest bidders, and guarantees revenue gamma*u_hat when
the top bid equals the prediction and at least rho*t for any other top bid
t.  Such a rule pair exists exactly when

    gamma + rho * ln(max(u_hat, H*rho/gamma)) <= 1,

and the construction is tight: on the boundary its largest allocation
probability reaches 1.  ``max_robust`` inverts the condition for the
largest admissible rho at a given gamma; ``required_alloc_lower_bound``
evaluates the left-hand side for arbitrary (possibly infeasible)
parameters, certifying nonexistence whenever it exceeds 1.

The allocation section for a fixed competing bid ``b`` consists of at most
five parts: zero below b, the tie value at t = b exactly, a logarithmic
climb, a constant plateau starting at the prediction (the tie value at
t = u_hat = b is gamma-level), and a final logarithmic climb beyond
t = gamma*u_hat/rho.  Payments are 0 / rho*b-share / rho*t / gamma*u_hat /
rho*t on the corresponding parts; the transforms in ``myerson`` reproduce
each row from the allocation, which is what the test suite checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core import AgentView, AuctionDefinition

FEASIBILITY_TOL = 1e-12


def _check_ranges(gamma: float, rho: float, u_hat: float, H: float) -> None:
    if not H > 1.0:
        raise ValueError(f"H must exceed 1, got {H}")
    if not 0.0 <= rho <= gamma <= 1.0:
        raise ValueError(f"need 0 <= rho <= gamma <= 1, got rho={rho}, gamma={gamma}")
    if not 1.0 <= u_hat <= H:
        raise ValueError(f"prediction u_hat={u_hat} outside [1, {H}]")


def _rho_ln(rho: float, arg: float) -> float:
    # rho = 0 kills every logarithmic term, whatever its argument
    return 0.0 if rho == 0.0 else rho * math.log(arg)


def required_alloc_lower_bound(gamma: float, rho: float, u_hat: float, H: float) -> float:
    """gamma + rho*ln(max(u_hat, H*rho/gamma)), feasible or not.

    Any gamma-consistent rho-robust truthful rule must allocate at least
    this much at its binding bid, so a value above 1 certifies that no
    such rule exists.
    """
    _check_ranges(gamma, rho, u_hat, H)
    if rho == 0.0:
        return gamma
    return gamma + rho * math.log(max(u_hat, H * rho / gamma))


def cr_condition(gamma: float, rho: float, u_hat: float, H: float) -> bool:
    """Whether a gamma-consistent rho-robust rule pair exists."""
    return required_alloc_lower_bound(gamma, rho, u_hat, H) <= 1.0 + FEASIBILITY_TOL


def max_robust(gamma: float, u_hat: float, H: float) -> float:
    """Largest admissible rho in [0, gamma] for the given gamma.

    The bound rho -> rho*ln(max(u_hat, H*rho/gamma)) is non-decreasing, so
    plain bisection to absolute tolerance 1e-12 finds the boundary.
    """
    if not 0.0 < gamma <= 1.0:
        raise ValueError(f"gamma must lie in (0, 1], got {gamma}")
    _check_ranges(gamma, 0.0, u_hat, H)
    if required_alloc_lower_bound(gamma, gamma, u_hat, H) <= 1.0:
        return gamma
    lo, hi = 0.0, gamma
    while hi - lo > 1e-12:
        mid = 0.5 * (lo + hi)
        if required_alloc_lower_bound(gamma, mid, u_hat, H) <= 1.0:
            lo = mid
        else:
            hi = mid
    return lo


@dataclass(frozen=True)
class CRParams:
    """Feasible parameters of the trade-off auction."""

    gamma: float
    rho: float
    u_hat: float
    H: float

    def __post_init__(self) -> None:
        _check_ranges(self.gamma, self.rho, self.u_hat, self.H)
        value = required_alloc_lower_bound(self.gamma, self.rho, self.u_hat, self.H)
        if value > 1.0 + FEASIBILITY_TOL:
            raise ValueError(
                f"infeasible parameters: gamma + rho*ln(max(u_hat, H*rho/gamma)) = {value} > 1"
            )

    @property
    def plateau_end(self) -> float:
        """min(gamma*u_hat/rho, H); rho = 0 pushes the plateau out to H."""
        if self.rho == 0.0:
            return self.H
        return min(self.gamma * self.u_hat / self.rho, self.H)


def alloc_cr(view: AgentView, p: CRParams) -> float:
    """Allocation probability for the given view.

    Boundary conventions: the tie value holds at t = b only; the plateau
    is closed at both ends, so the jump of size gamma - rho sits exactly
    at t = u_hat.
    """
    t, b, nu = view.effective()
    _check_view(t, b, p.H)
    g, r, u = p.gamma, p.rho, p.u_hat
    if t < b:
        return 0.0
    if t == b:
        return (g if b == u else r) / (nu + 1)
    m = p.plateau_end
    if b > u:
        return r + _rho_ln(r, t / b)
    if b == u:
        return g if t <= m else g + _rho_ln(r, t * r / (b * g))
    if t < u:
        return r + _rho_ln(r, t / b)
    if t <= m:
        return g + _rho_ln(r, u / b)
    return g + _rho_ln(r, t * r / (b * g))


def pay_cr(view: AgentView, p: CRParams) -> float:
    """Expected payment for the given view.

    The winning rows pay rho*t off the plateau and gamma*u_hat on it, so a
    unique top bid t yields revenue rho*t or gamma*u_hat; ties pay the same
    totals split evenly.  The rho*t row below the prediction is forced by
    the truthfulness identity applied to the logarithmic allocation piece.
    """
    t, b, nu = view.effective()
    _check_view(t, b, p.H)
    g, r, u = p.gamma, p.rho, p.u_hat
    if t < b:
        return 0.0
    if t == b:
        return (g * u if b == u else r * b) / (nu + 1)
    m = p.plateau_end
    if b > u:
        return r * t
    if b == u:
        return g * u if t <= m else r * t
    if t < u:
        return r * t
    if t <= m:
        return g * u
    return r * t


def _check_view(t: float, b: float, H: float) -> None:
    if t > H or b > H:
        raise ValueError(f"view (t={t}, b={b}) outside the bid range [1, {H}]")


def cr_auction(p: CRParams) -> AuctionDefinition:
    """Bundle the rule pair as a runnable auction."""
    return AuctionDefinition(
        name=f"cr(gamma={p.gamma}, rho={p.rho}, u_hat={p.u_hat}, H={p.H})",
        H=p.H,
        alloc_rule=lambda view: alloc_cr(view, p),
        pay_rule=lambda view: pay_cr(view, p),
        params=p,
        section_breakpoints=lambda b: (b, p.u_hat, p.plateau_end),
    )
