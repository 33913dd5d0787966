"""Payment/allocation transforms for monotone single-parameter rules.

For a monotone allocation section x(.) and its implementing payment
section p(.), truthfulness pins the two together.  Two equivalent
transforms are provided:

    p(t) = p(s) + t*x(t) - s*x(s) - integral_s^t x(z) dz
    x(t) = p(t)/t + integral_s^t p(z)/z^2 dz + x(s) - p(s)/s

both valid for every anchor pair s <= t, with individual rationality
pinned by x(1) >= p(1).  Neither requires differentiability, so the
machinery here works on piecewise curves with jumps.  Integrals are done
with adaptive Gauss-Kronrod quadrature, always pre-split at declared
breakpoints; the quadrature nodes are strictly interior, so the isolated
value a curve takes at a jump point never enters an integral.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .core import AgentView, AuctionDefinition, InfeasibleAllocationError


class QuadratureError(RuntimeError):
    """Adaptive refinement hit max_depth without meeting the tolerance."""


# 7-point Gauss / 15-point Kronrod pair on [-1, 1]; Gauss nodes are the
# odd-indexed Kronrod nodes.
_K_NODES = (
    0.991455371120813, 0.949107912342759, 0.864864423359769,
    0.741531185599394, 0.586087235467691, 0.405845151377397,
    0.207784955007898, 0.0,
)
_K_WEIGHTS = (
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728,
)
_G_WEIGHTS = {
    1: 0.129484966168870, 3: 0.279705391489277,
    5: 0.381830050505119, 7: 0.417959183673469,
}


@dataclass(frozen=True)
class QuadratureConfig:
    abs_tol: float = 1e-10
    rel_tol: float = 1e-9
    max_depth: int = 40

    def __post_init__(self) -> None:
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise ValueError("quadrature tolerances must be positive")
        if self.max_depth < 1:
            raise ValueError("max_depth must be at least 1")


DEFAULT_QUADRATURE = QuadratureConfig()


@dataclass(frozen=True)
class PiecewiseCurve:
    """A univariate curve on [lo, hi] that is smooth between breakpoints.

    Jumps or formula changes may occur only at the listed breakpoints.
    The callable must be defined everywhere on the domain, including at
    the breakpoints themselves (where it returns the isolated value).
    """

    lo: float
    hi: float
    breakpoints: tuple[float, ...]
    fn: Callable[[float], float]

    def __call__(self, z: float) -> float:
        return self.fn(z)

    def cuts(self, a: float, b: float) -> list[float]:
        """[a, b] split at every breakpoint strictly inside (a, b)."""
        inner = sorted(p for p in self.breakpoints if a < p < b)
        return [a, *inner, b]


def _gk15(fn: Callable[[float], float], a: float, b: float) -> tuple[float, float]:
    c = 0.5 * (a + b)
    h = 0.5 * (b - a)
    k = 0.0
    g = 0.0
    for i, x in enumerate(_K_NODES):
        if x == 0.0:
            fc = fn(c)
            k += _K_WEIGHTS[i] * fc
            g += _G_WEIGHTS[i] * fc
        else:
            f2 = fn(c - h * x) + fn(c + h * x)
            k += _K_WEIGHTS[i] * f2
            if i in _G_WEIGHTS:
                g += _G_WEIGHTS[i] * f2
    return h * k, abs(h * (k - g))


def integrate(f: PiecewiseCurve, a: float, b: float, cfg: QuadratureConfig | None = None) -> float:
    """Adaptive quadrature of ``f`` over [a, b] with breakpoint pre-splits.

    The result carries error at most max(abs_tol, rel_tol * |value|) for
    curves that are smooth between their breakpoints.
    """
    cfg = cfg or DEFAULT_QUADRATURE
    if not f.lo <= a <= b <= f.hi:
        raise ValueError(f"integration range [{a}, {b}] outside the curve domain [{f.lo}, {f.hi}]")
    if a == b:
        return 0.0
    cuts = f.cuts(a, b)
    segments = [(lo, hi, *_gk15(f.fn, lo, hi)) for lo, hi in zip(cuts, cuts[1:])]
    scale = abs(sum(s[2] for s in segments))
    tol = max(cfg.abs_tol, cfg.rel_tol * scale)
    span = b - a
    total = 0.0
    stack = [(lo, hi, val, err, 0) for lo, hi, val, err in segments]
    while stack:
        lo, hi, val, err, depth = stack.pop()
        if err <= tol * (hi - lo) / span or err <= 1e-17 * max(1.0, scale):
            total += val
            continue
        if depth >= cfg.max_depth:
            raise QuadratureError(
                f"no convergence on [{lo}, {hi}] after depth {depth} (error estimate {err:.3e})"
            )
        mid = 0.5 * (lo + hi)
        stack.append((lo, mid, *_gk15(f.fn, lo, mid), depth + 1))
        stack.append((mid, hi, *_gk15(f.fn, mid, hi), depth + 1))
    return total


def _require_monotone(x: PiecewiseCurve, a: float, b: float, samples_per_piece: int = 64) -> None:
    cuts = x.cuts(a, b)
    pts: list[float] = []
    for lo, hi in zip(cuts, cuts[1:]):
        step = (hi - lo) / (samples_per_piece - 1)
        pts.extend(lo + i * step for i in range(samples_per_piece))
    pts.append(b)
    prev_t, prev_v = pts[0], x(pts[0])
    for t in pts[1:]:
        v = x(t)
        if v < prev_v - 1e-12 * max(1.0, abs(prev_v)):
            raise ValueError(
                f"allocation curve decreases from {prev_v} at t={prev_t} to {v} at t={t}; "
                "only monotone rules are implementable"
            )
        prev_t, prev_v = t, v


def payment_from_allocation(
    x: PiecewiseCurve,
    s: float,
    p_s: float,
    t: float,
    cfg: QuadratureConfig | None = None,
) -> float:
    """The unique truthful payment at ``t`` given the anchor (s, p_s).

    Rejects curves that fail a grid monotonicity check.  At the domain
    floor s = 1 the anchor must respect individual rationality,
    p(1) <= x(1).
    """
    if s > t:
        raise ValueError(f"anchor s={s} must not exceed t={t}")
    _require_monotone(x, s, t)
    if s == 1.0 and p_s > x(s) + 1e-12:
        raise ValueError(f"anchor payment {p_s} exceeds the allocation {x(s)} at the floor bid")
    return p_s + t * x(t) - s * x(s) - integrate(x, s, t, cfg)


def allocation_from_payment(
    p: PiecewiseCurve,
    s: float,
    x_s: float,
    t: float,
    cfg: QuadratureConfig | None = None,
    check_feasible: bool = True,
) -> float:
    """The allocation at ``t`` implied by the payment curve and anchor.

    With ``check_feasible`` the result must land in [0, 1] up to
    tolerance; a value outside is an infeasibility witness and raises.
    Pass ``check_feasible=False`` to chain lower-bound computations whose
    intermediate values are allowed to exceed 1.
    """
    if s > t:
        raise ValueError(f"anchor s={s} must not exceed t={t}")
    if check_feasible and not 0.0 <= x_s <= 1.0:
        raise ValueError(f"anchor allocation {x_s} outside [0, 1]")
    over_z2 = PiecewiseCurve(p.lo, p.hi, p.breakpoints, lambda z: p.fn(z) / (z * z))
    val = p(t) / t + integrate(over_z2, s, t, cfg) + x_s - p(s) / s
    if check_feasible and not -1e-9 <= val <= 1.0 + 1e-9:
        raise InfeasibleAllocationError(f"implied allocation {val} at t={t} falls outside [0, 1]")
    return val


def section_curves(
    auction: AuctionDefinition, b: float, nu: int
) -> tuple[PiecewiseCurve, PiecewiseCurve]:
    """The univariate allocation and payment sections for a fixed context.

    Use b=1, nu=0 for the single-bidder section.
    """
    bps = tuple(sorted({p for p in auction.section_breakpoints(b) if 1.0 < p < auction.H}))
    x = PiecewiseCurve(1.0, auction.H, bps, lambda t: auction.alloc_rule(AgentView(t, b, nu)))
    p = PiecewiseCurve(1.0, auction.H, bps, lambda t: auction.pay_rule(AgentView(t, b, nu)))
    return x, p


def _jump_size(curve: PiecewiseCurve, point: float) -> float:
    delta = 1e-9 * max(1.0, abs(point))
    left = curve(max(curve.lo, point - delta))
    right = curve(min(curve.hi, point + delta))
    return abs(right - left)


def verify_identity(
    auction: AuctionDefinition,
    view_b: float,
    view_nu: int,
    s: float,
    t: float,
    cfg: QuadratureConfig | None = None,
) -> float:
    """Residual of the truthfulness identity between the auction's sections.

    Returns |x(t) - (p(t)/t + integral_s^t p(z)/z^2 dz + x(s) - p(s)/s)|.
    A correct rule pair keeps this at quadrature level (<= 1e-8).  The
    endpoints s, t may not sit on a jump of the section; jumps are probed
    through one-sided limits by the caller instead.
    """
    if s > t:
        raise ValueError(f"need s <= t, got s={s}, t={t}")
    x, p = section_curves(auction, view_b, view_nu)
    for point in (s, t):
        if any(point == bp for bp in x.breakpoints) and _jump_size(x, point) > 1e-7:
            raise ValueError(
                f"{point} is a jump point of the section; evaluate one-sided limits instead"
            )
    over_z2 = PiecewiseCurve(p.lo, p.hi, p.breakpoints, lambda z: p.fn(z) / (z * z))
    rhs = p(t) / t + integrate(over_z2, s, t, cfg) + x(s) - p(s) / s
    return abs(x(t) - rhs)
