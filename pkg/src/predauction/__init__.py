"""Randomized truthful single-item auctions guided by a prediction of the
highest valuation: the consistency/robustness trade-off construction, the
prediction-error-robust construction, the transform machinery that
certifies both, and a verification harness."""

from .auction_cr import (
    CRParams,
    alloc_cr,
    cr_auction,
    cr_condition,
    max_robust,
    pay_cr,
    required_alloc_lower_bound,
)
from .auction_err import (
    ErrParams,
    RhoSpec,
    alloc_err,
    constant_rho,
    csc_identity_check,
    err_auction,
    err_condition,
    err_condition_value,
    make_family,
    pay_err,
    tabulated_rho,
)
from .core import (
    AgentView,
    AuctionDefinition,
    BidProfile,
    InfeasibleAllocationError,
    Outcome,
    reduce_profile,
    revenue_ratio,
    run_auction,
    sample_winner,
)
from .myerson import (
    PiecewiseCurve,
    QuadratureConfig,
    QuadratureError,
    allocation_from_payment,
    integrate,
    payment_from_allocation,
    section_curves,
    verify_identity,
)
from .verify import (
    CheckResult,
    GridSpec,
    VerificationReport,
    check_dsic,
    check_guarantees,
    check_ir,
    run_all_checks,
    witness_infeasibility,
)

__all__ = [
    "AgentView",
    "AuctionDefinition",
    "BidProfile",
    "CheckResult",
    "CRParams",
    "ErrParams",
    "GridSpec",
    "InfeasibleAllocationError",
    "Outcome",
    "PiecewiseCurve",
    "QuadratureConfig",
    "QuadratureError",
    "RhoSpec",
    "VerificationReport",
    "alloc_cr",
    "alloc_err",
    "allocation_from_payment",
    "check_dsic",
    "check_guarantees",
    "check_ir",
    "constant_rho",
    "cr_auction",
    "cr_condition",
    "csc_identity_check",
    "err_auction",
    "err_condition",
    "err_condition_value",
    "integrate",
    "make_family",
    "max_robust",
    "pay_cr",
    "pay_err",
    "payment_from_allocation",
    "reduce_profile",
    "required_alloc_lower_bound",
    "revenue_ratio",
    "run_auction",
    "sample_winner",
    "section_curves",
    "tabulated_rho",
    "verify_identity",
]
