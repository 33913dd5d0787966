"""Error-dependent robustness: families, feasibility, rules, and the
closed-form tail integral."""

import math

import numpy as np
import pytest

from predauction import (
    AgentView,
    CRParams,
    ErrParams,
    QuadratureError,
    alloc_cr,
    alloc_err,
    constant_rho,
    csc_identity_check,
    err_condition,
    err_condition_value,
    make_family,
    pay_cr,
    pay_err,
    tabulated_rho,
)
from predauction.myerson import PiecewiseCurve, integrate

E = math.e


# ------------------------------------------------------------------ families

def test_polylog_value_at_no_error():
    spec = make_family("polylog", eps=1.0)
    assert spec.value(1.0) == pytest.approx(1.0 / (math.pi + 1.0), abs=1e-15)


def test_log_family_value_at_no_error():
    spec = make_family("log", H=E)
    assert spec.value(1.0) == pytest.approx(1.0 / (1.0 + 2.0 * math.log(2.0)), abs=1e-15)


def test_sublog_family_stays_admissible_on_a_grid():
    spec = make_family("sublog", eps=0.5, H=100.0)
    etas = np.geomspace(1.0, 100.0, 1000)
    vals = np.array([spec.value(float(x)) for x in etas])
    assert np.all(np.diff(vals) <= 1e-12)
    assert np.all(np.diff(etas * vals) >= -1e-12)
    assert np.all((0 <= vals) & (vals <= 1))


@pytest.mark.parametrize("kwargs", [
    {"which": "polylog", "eps": 0.0},
    {"which": "polylog", "eps": 1.5},
    {"which": "log", "H": None},
    {"which": "log", "H": math.inf},
    {"which": "sublog", "eps": 1.0, "H": 10.0},
    {"which": "sublog", "eps": 0.5, "H": math.inf},
    {"which": "mystery"},
])
def test_family_preconditions(kwargs):
    with pytest.raises(ValueError):
        make_family(**kwargs)


def test_polylog_log_integral_closed_form_matches_quadrature():
    for eps in (1.0, 0.5):
        spec = make_family("polylog", eps=eps)
        curve = PiecewiseCurve(1.0, 1e6, (), lambda z: spec.value(z) / z)
        for a, b in ((1.0, 7.0), (2.0, 500.0)):
            assert spec.log_integral(a, b) == pytest.approx(
                integrate(curve, a, b), abs=1e-9
            )


def test_tabulated_rho_interpolates_and_validates():
    spec = tabulated_rho([(1.0, 0.5), (2.0, 0.4), (8.0, 0.25)])
    assert spec.value(1.0) == 0.5
    assert spec.value(1.5) == pytest.approx(0.45, abs=1e-12)
    assert spec.value(100.0) == 0.25  # held beyond the table
    curve = PiecewiseCurve(1.0, 1e3, (2.0, 8.0), lambda z: spec.value(z) / z)
    assert spec.log_integral(1.0, 10.0) == pytest.approx(
        integrate(curve, 1.0, 10.0), abs=1e-9
    )


def test_tabulated_rho_rejects_inadmissible_tables():
    with pytest.raises(ValueError):
        tabulated_rho([(1.0, 0.3), (2.0, 0.5)])  # increasing rho
    with pytest.raises(ValueError):
        tabulated_rho([(1.0, 0.5), (2.0, 0.2)])  # eta*rho drops from 0.5 to 0.4
    with pytest.raises(ValueError):
        tabulated_rho([(0.5, 0.5), (2.0, 0.4)])  # eta below 1
    with pytest.raises(ValueError):
        tabulated_rho([(1.0, 1.5), (2.0, 1.4)])  # rho above 1


# ------------------------------------------------------------ the condition

def test_constant_robustness_condition_is_the_log_budget():
    H = 10.0
    crit = 1.0 / (1.0 + math.log(H))
    for u_hat in (1.0, math.sqrt(H), H):
        assert err_condition(constant_rho(crit), u_hat, H)
        assert err_condition_value(constant_rho(crit), u_hat, H) == pytest.approx(
            1.0, abs=1e-12
        )
        assert not err_condition(constant_rho(1.02 * crit), u_hat, H)


def test_zero_robustness_is_always_feasible():
    assert err_condition(constant_rho(0.0), 3.0, 10.0)


@pytest.mark.parametrize("H", [10.0, 1e3, math.inf])
def test_polylog_half_eps_is_feasible_everywhere(H):
    spec = make_family("polylog", eps=0.5)
    u_hats = (1.0, 100.0) if math.isinf(H) else (1.0, math.sqrt(H), H)
    for u_hat in u_hats:
        assert err_condition(spec, u_hat, H)


def test_unbounded_mode_is_polylog_only():
    with pytest.raises(ValueError):
        err_condition(make_family("log", H=10.0), 2.0, math.inf)


def test_infeasible_parameters_are_rejected_at_construction():
    H = 10.0
    with pytest.raises(ValueError):
        ErrParams(constant_rho(1.05 / (1.0 + math.log(H))), math.sqrt(H), H)


# ----------------------------------------------------------------- the rules

def test_losing_bids_get_nothing():
    p = ErrParams(make_family("log", H=100.0), 5.0, 100.0)
    assert alloc_err(AgentView(2.0, 3.0, 1), p) == 0.0
    assert pay_err(AgentView(2.0, 3.0, 1), p) == 0.0


def test_constant_rho_reduces_to_the_tradeoff_rule():
    H = 10.0
    c = 1.0 / (1.0 + math.log(H))
    u_hat = math.sqrt(H)
    ep = ErrParams(constant_rho(c), u_hat, H)
    cp = CRParams(c, c, u_hat, H)
    ts = np.concatenate([np.geomspace(1.0, H, 60), [u_hat, H]])
    bs = np.concatenate([np.geomspace(1.0, H, 12), [u_hat]])
    for b in bs:
        for nu in (1, 2):
            for t in ts:
                if t < b:
                    continue
                view = AgentView(float(t), float(b), nu)
                assert alloc_err(view, ep) == pytest.approx(alloc_cr(view, cp), abs=1e-9)
                assert pay_err(view, ep) == pytest.approx(pay_cr(view, cp), abs=1e-9)


def test_allocation_above_the_prediction_cross_checked_by_quadrature():
    H = E**3
    spec = make_family("log", H=H)
    p = ErrParams(spec, 1.0, H)
    got = alloc_err(AgentView(E**2, E, 1), p)
    curve = PiecewiseCurve(1.0, H, (), lambda z: spec.value(z) / z)
    expected = spec.value(E**2) + integrate(curve, E, E**2)
    assert got == pytest.approx(expected, abs=1e-9)
    c2 = 1.0 / (1.0 + 2.0 * math.log(4.0))
    assert got == pytest.approx(c2 / 3.0 + c2 * math.log(1.5), abs=1e-12)


def test_payment_rows_track_the_error_level():
    H = 100.0
    spec = make_family("polylog", eps=1.0)
    p = ErrParams(spec, 5.0, H)
    assert pay_err(AgentView(20.0, 2.0, 1), p) == pytest.approx(
        spec.value(4.0) * 20.0, abs=1e-15
    )
    assert pay_err(AgentView(4.0, 2.0, 1), p) == pytest.approx(
        spec.value(1.25) * 4.0, abs=1e-15
    )
    assert pay_err(AgentView(5.0, 2.0, 1), p) == pytest.approx(
        spec.value(1.0) * 5.0, abs=1e-15
    )


def test_tie_rows_split_the_error_level_payment():
    spec = make_family("log", H=100.0)
    p = ErrParams(spec, 5.0, 100.0)
    for b in (2.0, 5.0, 40.0):
        eta = max(b / 5.0, 5.0 / b)
        for nu in (1, 3):
            assert alloc_err(AgentView(b, b, nu), p) == pytest.approx(
                spec.value(eta) / (nu + 1), abs=1e-15
            )
            assert pay_err(AgentView(b, b, nu), p) == pytest.approx(
                spec.value(eta) * b / (nu + 1), abs=1e-15
            )


def test_allocation_is_continuous_at_the_prediction():
    for family, kwargs in (
        ("polylog", {"eps": 0.5}),
        ("log", {"H": 1000.0}),
        ("sublog", {"eps": 0.25, "H": 1000.0}),
    ):
        spec = make_family(family, H=1000.0, **{k: v for k, v in kwargs.items() if k != "H"})
        p = ErrParams(spec, 30.0, 1000.0)
        left = alloc_err(AgentView(30.0 * (1 - 1e-12), 4.0, 1), p)
        right = alloc_err(AgentView(30.0, 4.0, 1), p)
        assert left == pytest.approx(right, abs=1e-9)


@pytest.mark.parametrize("family,kwargs", [
    ("polylog", {"eps": 0.25}),
    ("polylog", {"eps": 1.0}),
    ("log", {}),
    ("sublog", {"eps": 0.5}),
])
def test_allocation_is_monotone_and_capped(family, kwargs):
    H = 1000.0
    spec = make_family(family, H=H, **kwargs)
    for u_hat in (1.0, math.sqrt(H), H):
        p = ErrParams(spec, u_hat, H)
        for b in (1.0, math.sqrt(u_hat), u_hat, min(2 * u_hat, H)):
            ts = np.unique(np.concatenate([np.geomspace(1.0, H, 300), [b, u_hat, H]]))
            vals = [alloc_err(AgentView(float(t), float(b), 1), p) for t in ts]
            assert np.diff(vals).min() >= -1e-12
            assert vals[-1] <= 1.0 + 1e-10


# ------------------------------------------------------------- tail integral

def test_tail_integral_identity_at_eps_one():
    numeric, closed = csc_identity_check(1.0)
    assert closed == pytest.approx(math.pi / 2.0, abs=1e-15)
    assert numeric == pytest.approx(closed, abs=1e-6)


def test_tail_integral_identity_at_eps_half():
    numeric, closed = csc_identity_check(0.5)
    assert closed == pytest.approx(4.0 * math.pi / (3.0 * math.sqrt(3.0)), abs=1e-12)
    assert numeric == pytest.approx(closed, abs=1e-6)


def test_tail_integral_closed_form_never_exceeds_pi_over_two_eps():
    for eps in np.linspace(0.02, 1.0, 50):
        closed = (math.pi / (1.0 + eps)) / math.sin(math.pi * eps / (1.0 + eps))
        assert closed <= math.pi / (2.0 * eps) + 1e-12


def test_tail_truncation_budget_is_reported():
    with pytest.raises(QuadratureError, match="upper limit"):
        csc_identity_check(1e-4)
    with pytest.raises(ValueError):
        csc_identity_check(0.0)
    with pytest.raises(ValueError):
        csc_identity_check(1.5)
