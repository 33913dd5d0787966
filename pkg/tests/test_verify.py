"""The property harness: deviation sweeps, floors, witnesses, determinism."""

import dataclasses
import math

import pytest

from predauction import (
    AgentView,
    AuctionDefinition,
    CRParams,
    ErrParams,
    GridSpec,
    cr_auction,
    err_auction,
    make_family,
    constant_rho,
)
from predauction.verify import (
    check_dsic,
    check_guarantees,
    check_identity,
    check_ir,
    run_all_checks,
    witness_infeasibility,
)

E = math.e
WORKED = CRParams(0.5, 1.0 / 6.0, E, E * E)
SMALL_GRID = GridSpec(t_points=60, deviation_points=60)


def zero_auction(H=10.0):
    return AuctionDefinition(
        name="zero",
        H=H,
        alloc_rule=lambda view: 0.0,
        pay_rule=lambda view: 0.0,
        params=CRParams(0.0, 0.0, 2.0, H),
        section_breakpoints=lambda b: (b,),
    )


# --------------------------------------------------------------------- dsic

def test_tradeoff_construction_is_truthful():
    result = check_dsic(cr_auction(WORKED), SMALL_GRID)
    assert result.passed and result.margin <= 1e-9


def test_single_bidder_degenerate_grid_is_truthful():
    grid = GridSpec(t_points=60, deviation_points=60, b_samples=())
    result = check_dsic(cr_auction(WORKED), grid)
    assert result.passed


def test_corrupted_payment_is_caught_with_a_witness():
    auction = cr_auction(WORKED)

    def crooked_pay(view):
        base = auction.pay_rule(view)
        t, b, _ = view.effective()
        if b < WORKED.u_hat and b < t < WORKED.u_hat:
            return base + 0.01
        return base

    broken = dataclasses.replace(auction, pay_rule=crooked_pay)
    result = check_dsic(broken, SMALL_GRID)
    assert not result.passed
    assert result.margin > 1e-9
    assert result.witness is not None and "z" in result.witness


# ----------------------------------------------------------------------- ir

def test_construction_is_individually_rational():
    result = check_ir(cr_auction(WORKED), SMALL_GRID)
    assert result.passed and result.margin >= -1e-12


def test_tie_utility_sits_exactly_on_the_ir_boundary():
    view = AgentView(1.5, 1.5, 1)
    p = WORKED
    from predauction import alloc_cr, pay_cr

    utility = 1.5 * alloc_cr(view, p) - pay_cr(view, p)
    assert utility == pytest.approx(0.0, abs=1e-15)


def test_zero_auction_is_individually_rational():
    result = check_ir(zero_auction(), SMALL_GRID)
    assert result.passed


# ----------------------------------------------------------------- guarantees

def test_tradeoff_guarantees_hold_on_the_grid():
    result = check_guarantees(cr_auction(WORKED), "cr", SMALL_GRID)
    assert result.passed
    assert result.margin >= -1e-9
    assert result.witness["pin_error"] <= 1e-12


def test_error_model_ratio_equals_rho_of_eta_pointwise():
    params = ErrParams(make_family("polylog", eps=1.0), 5.0, 100.0)
    result = check_guarantees(err_auction(params), "err", SMALL_GRID)
    assert result.passed
    assert result.witness["pin_error"] <= 1e-12


def test_unknown_mode_is_rejected():
    with pytest.raises(ValueError):
        check_guarantees(cr_auction(WORKED), "bayesian", SMALL_GRID)


# ------------------------------------------------------------------ identity

def test_identity_check_passes_for_both_constructions():
    assert check_identity(cr_auction(WORKED), SMALL_GRID, pairs_per_piece=5).passed
    params = ErrParams(make_family("log", H=100.0), 5.0, 100.0)
    assert check_identity(err_auction(params), SMALL_GRID, pairs_per_piece=5).passed


# ------------------------------------------------------------------ witnesses

def test_witness_replays_the_prediction_side_chain():
    result = witness_infeasibility("cr", {"gamma": 0.9, "rho": 0.9, "u_hat": E, "H": E})
    assert result.passed
    assert result.margin == pytest.approx(0.8, abs=1e-12)
    assert result.witness["case"] == 1
    assert result.witness["chain_value"] == pytest.approx(1.8, abs=1e-8)


def test_witness_replays_the_tail_side_chain():
    # u_hat below H*rho/gamma exercises the three-step chain
    result = witness_infeasibility("cr", {"gamma": 0.6, "rho": 0.5, "u_hat": 1.5, "H": 100.0})
    bound = 0.6 + 0.5 * math.log(100.0 * 0.5 / 0.6)
    assert result.passed
    assert result.witness["case"] == 2
    assert result.witness["bound"] == pytest.approx(bound, abs=1e-12)
    assert result.witness["chain_value"] == pytest.approx(bound, abs=1e-7)


def test_witness_for_the_error_model_uses_the_three_term_sum():
    H = 10.0
    rho = constant_rho(1.01 / (1.0 + math.log(H)))
    result = witness_infeasibility("err", {"rho": rho, "u_hat": math.sqrt(H), "H": H})
    assert result.passed
    assert result.margin == pytest.approx(0.01, abs=1e-9)


def test_boundary_parameters_are_flagged_feasible_tight():
    result = witness_infeasibility("cr", {"gamma": 1.0, "rho": 0.0, "u_hat": 2.0, "H": 10.0})
    assert result.passed
    assert result.witness.get("feasible_tight") is True


def test_witness_rejects_strictly_feasible_parameters():
    with pytest.raises(ValueError, match="nothing to witness"):
        witness_infeasibility("cr", {"gamma": 0.5, "rho": 0.1, "u_hat": 2.0, "H": 10.0})


# ---------------------------------------------------------------- the suite

def test_full_suite_passes_for_both_constructions():
    report = run_all_checks(cr_auction(WORKED), "cr", SMALL_GRID)
    assert report.overall, report.to_json()
    params = ErrParams(make_family("sublog", eps=0.5, H=100.0), 10.0, 100.0)
    report = run_all_checks(err_auction(params), "err", SMALL_GRID)
    assert report.overall, report.to_json()


def test_reports_are_bit_identical_for_identical_seeds():
    grid = GridSpec(t_points=40, deviation_points=40, jitter_seed=42)
    a = run_all_checks(cr_auction(WORKED), "cr", grid).to_json()
    b = run_all_checks(cr_auction(WORKED), "cr", grid).to_json()
    assert a == b


def test_grid_spec_validation():
    with pytest.raises(ValueError):
        GridSpec(t_points=1)
    with pytest.raises(ValueError):
        GridSpec(nu_samples=())
