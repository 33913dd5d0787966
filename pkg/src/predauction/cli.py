"""Command-line front end.

Subcommands
    frontier  largest admissible robustness per consistency level
    simulate  run an auction on a bid profile, optionally sampling a winner
    verify    property suite or infeasibility witness; CI-friendly exit codes
    curve     revenue-over-top-bid sweep against the guarantee floor
    families  stock robustness families: values, feasibility slack, integral identity

Parameters may come from flags or from a JSON config file (--config);
flags override the file.  Exit codes: 0 all checks pass, 1 a check failed,
2 usage or configuration error.  Output files are written atomically and
numbers carry 17 significant digits so reruns diff clean.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .auction_cr import CRParams, cr_auction, max_robust
from .auction_err import (
    ErrParams,
    csc_identity_check,
    err_auction,
    err_condition_value,
    load_rho_table,
    make_family,
)
from .core import BidProfile, load_bids, run_auction, sample_winner
from .verify import GridSpec, VerificationReport, run_all_checks, witness_infeasibility


def _fmt(x: Any) -> str:
    if isinstance(x, float):
        return f"{x:.17g}"
    if x is None:
        return ""
    return str(x)


def _csv(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    target = Path(out)
    fd, tmp = tempfile.mkstemp(dir=target.parent or Path("."), prefix=target.name + ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class _Config:
    """Flag values with JSON-config fallback; flags win."""

    def __init__(self, ns: argparse.Namespace):
        self.ns = ns
        self.file: dict[str, Any] = {}
        if getattr(ns, "config", None):
            with open(ns.config, encoding="utf-8") as fh:
                data = json.load(fh)
            if not isinstance(data, dict):
                raise ValueError(f"config file {ns.config} must hold a JSON object")
            self.file = data

    def get(self, key: str, default: Any = None) -> Any:
        val = getattr(self.ns, key, None)
        if val is None:
            val = self.file.get(key, default)
        return val

    def require(self, key: str) -> Any:
        val = self.get(key)
        if val is None:
            raise ValueError(f"missing required parameter --{key.replace('_', '-')}")
        return val


def _float_list(text: str) -> list[float]:
    return [float(tok) for tok in str(text).split(",") if tok.strip()]


def _gamma_grid(cfg: _Config) -> list[float]:
    spec = cfg.get("gamma_grid")
    if spec is not None:
        lo, hi, n = str(spec).split(":")
        return [float(g) for g in np.linspace(float(lo), float(hi), int(n))]
    gamma = cfg.require("gamma")
    if isinstance(gamma, str):
        return _float_list(gamma)
    if isinstance(gamma, (list, tuple)):
        return [float(g) for g in gamma]
    return [float(gamma)]


def _rho_spec(cfg: _Config):
    table = cfg.get("rho_csv")
    if table is not None:
        return load_rho_table(table)
    family = cfg.require("family")
    eps = cfg.get("eps")
    H = cfg.get("H")
    return make_family(family, eps=None if eps is None else float(eps),
                       H=None if H is None else float(H))


def _mode(cfg: _Config) -> str:
    mode = cfg.get("mode")
    if mode is None:
        mode = "err" if cfg.get("family") is not None or cfg.get("rho_csv") is not None else "cr"
    if mode not in ("cr", "err"):
        raise ValueError(f"mode must be cr or err, got {mode!r}")
    return mode


def _build_auction(cfg: _Config, mode: str):
    u_hat = float(cfg.require("u_hat"))
    H = float(cfg.require("H"))
    if mode == "cr":
        params = CRParams(float(cfg.require("gamma")), float(cfg.require("rho")), u_hat, H)
        return cr_auction(params)
    params = ErrParams(_rho_spec(cfg), u_hat, H)
    return err_auction(params)


def _grid(cfg: _Config) -> GridSpec:
    n = cfg.get("grid_points")
    seed = cfg.get("seed")
    kwargs: dict[str, Any] = {}
    if n is not None:
        kwargs["t_points"] = int(n)
        kwargs["deviation_points"] = int(n)
    if seed is not None:
        kwargs["jitter_seed"] = int(seed)
    return GridSpec(**kwargs)


def cmd_frontier(ns: argparse.Namespace) -> int:
    cfg = _Config(ns)
    u_hat = float(cfg.require("u_hat"))
    H = float(cfg.require("H"))
    gammas = _gamma_grid(cfg)
    if any(not 0.0 < g <= 1.0 for g in gammas):
        raise ValueError("every gamma must lie in (0, 1]")
    rows = [(g, max_robust(g, u_hat, H)) for g in gammas]
    if cfg.get("format", "csv") == "json":
        text = json.dumps([{"gamma": g, "rho_star": r} for g, r in rows],
                          sort_keys=True, indent=2) + "\n"
    else:
        text = _csv(("gamma", "rho_star"), rows)
    _emit(text, cfg.get("out"))
    return 0


def cmd_simulate(ns: argparse.Namespace) -> int:
    cfg = _Config(ns)
    mode = _mode(cfg)
    auction = _build_auction(cfg, mode)
    bids = load_bids(cfg.require("bids"))
    outcome = run_auction(auction, BidProfile.of(bids, auction.H))
    payload = outcome.to_dict()
    if cfg.get("sample"):
        seed = int(cfg.get("seed", 0) or 0)
        payload["winner"] = sample_winner(outcome, seed)
        payload["seed"] = seed
    _emit(json.dumps(payload, sort_keys=True, indent=2) + "\n", cfg.get("out"))
    return 0


def cmd_verify(ns: argparse.Namespace) -> int:
    cfg = _Config(ns)
    mode = _mode(cfg)
    if cfg.get("expect_infeasible"):
        u_hat = float(cfg.require("u_hat"))
        H = float(cfg.require("H"))
        if mode == "cr":
            params: dict[str, Any] = {
                "gamma": float(cfg.require("gamma")),
                "rho": float(cfg.require("rho")),
                "u_hat": u_hat,
                "H": H,
            }
        else:
            params = {"rho": _rho_spec(cfg), "u_hat": u_hat, "H": H}
        entry = witness_infeasibility(mode, params)
        report = VerificationReport((entry,))
    else:
        auction = _build_auction(cfg, mode)
        if not math.isfinite(auction.H):
            raise ValueError("the verification sweep needs a finite H")
        report = run_all_checks(auction, mode, _grid(cfg))
    _emit(report.to_json(), cfg.get("out"))
    return 0 if report.overall else 1


def cmd_curve(ns: argparse.Namespace) -> int:
    cfg = _Config(ns)
    mode = _mode(cfg)
    auction = _build_auction(cfg, mode)
    if not math.isfinite(auction.H):
        raise ValueError("the revenue sweep needs a finite H")
    params = auction.params
    lo = float(cfg.get("t_min", 1.0) or 1.0)
    hi = float(cfg.get("t_max") or auction.H)
    if not 1.0 <= lo <= hi <= auction.H:
        raise ValueError(f"sweep range [{lo}, {hi}] outside [1, {auction.H}]")
    n = int(cfg.get("grid_points", 200) or 200)
    ts = np.geomspace(lo, hi, n) if lo < hi else np.array([lo])
    if lo <= params.u_hat <= hi:
        ts = np.unique(np.concatenate([ts, [params.u_hat]]))
    rows = []
    for t in ts:
        t = float(t)
        ratio = run_auction(auction, BidProfile.of([t], auction.H)).revenue / t
        if mode == "cr":
            floor = params.gamma if t == params.u_hat else params.rho
            rows.append((t, ratio, floor))
        else:
            eta = max(t / params.u_hat, params.u_hat / t)
            rows.append((t, eta, ratio, params.rho.value(eta)))
    header = ("t", "revenue_ratio", "guarantee_floor") if mode == "cr" else (
        "t", "eta", "revenue_ratio", "guarantee_floor")
    if cfg.get("format", "csv") == "json":
        text = json.dumps([dict(zip(header, row)) for row in rows],
                          sort_keys=True, indent=2) + "\n"
    else:
        text = _csv(header, rows)
    _emit(text, cfg.get("out"))
    return 0


def _families_rows(families: list[str], eps_list: list[float], h_list: list[float],
                   eta_points: int) -> list[tuple[Any, ...]]:
    rows: list[tuple[Any, ...]] = []
    for family in families:
        eps_values: list[float | None]
        if family == "log":
            eps_values = [None]
        elif family == "sublog":
            eps_values = [e for e in eps_list if 0.0 < e < 1.0]
        else:
            eps_values = [e for e in eps_list if 0.0 < e <= 1.0]
        for eps in eps_values:
            for H in h_list:
                spec = make_family(family, eps=eps, H=H)
                for u_hat in (1.0, math.sqrt(H), H):
                    slack = 1.0 - err_condition_value(spec, u_hat, H)
                    rows.append((family, eps, H, "slack", u_hat, slack))
                for eta in np.geomspace(1.0, H, eta_points):
                    rows.append((family, eps, H, "rho", float(eta), spec.value(float(eta))))
            if family == "polylog":
                spec = make_family(family, eps=eps)
                for u_hat in (1.0, 1000.0):
                    slack = 1.0 - err_condition_value(spec, u_hat, math.inf)
                    rows.append((family, eps, math.inf, "slack", u_hat, slack))
                numeric, closed = csc_identity_check(eps)
                rows.append((family, eps, math.inf, "tail_integral_numeric", eps, numeric))
                rows.append((family, eps, math.inf, "tail_integral_closed", eps, closed))
    return rows


def cmd_families(ns: argparse.Namespace) -> int:
    cfg = _Config(ns)
    eps_list = _float_list(cfg.get("eps", "0.25,0.5,1") or "0.25,0.5,1")
    h_list = _float_list(cfg.get("H", "10,1000") or "10,1000")
    eta_points = int(cfg.get("eta_points", 9) or 9)
    family = cfg.get("family")
    families = [family] if family else ["polylog", "log", "sublog"]
    if family:
        for eps in eps_list:
            # surface range violations when one family was requested explicitly
            make_family(family, eps=eps, H=h_list[0])
    rows = _families_rows(families, eps_list, h_list, eta_points)
    header = ("family", "eps", "H", "kind", "x", "value")
    if cfg.get("format", "csv") == "json":
        text = json.dumps([dict(zip(header, row)) for row in rows],
                          sort_keys=True, indent=2) + "\n"
    else:
        text = _csv(header, rows)
    _emit(text, cfg.get("out"))
    return 0


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="JSON file mirroring the flags; flags override it")
    sub.add_argument("--out", help="output path (atomic write); stdout when omitted")
    sub.add_argument("--format", choices=("json", "csv"), default=None)
    sub.add_argument("--seed", type=int, default=None)


def _add_cr(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--gamma", type=float, default=None, help="consistency target in [0, 1]")
    sub.add_argument("--rho", type=float, default=None, help="robustness target in [0, gamma]")


def _add_err(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--family", choices=("polylog", "log", "sublog"), default=None)
    sub.add_argument("--eps", default=None, help="family shape parameter")
    sub.add_argument("--rho-csv", dest="rho_csv", default=None,
                     help="tabulated (eta, rho) robustness function")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="predauction",
        description="Randomized truthful single-item auctions guided by a prediction",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("frontier", help="maximal robustness per consistency level")
    p.add_argument("--gamma", default=None, help="comma-separated consistency levels")
    p.add_argument("--gamma-grid", dest="gamma_grid", default=None, metavar="LO:HI:N")
    p.add_argument("--u-hat", dest="u_hat", type=float, default=None)
    p.add_argument("--H", type=float, default=None)
    _add_common(p)
    p.set_defaults(handler=cmd_frontier)

    p = subs.add_parser("simulate", help="run an auction on a bid profile")
    p.add_argument("--bids", default=None, help="JSON array or single-column CSV of bids")
    p.add_argument("--u-hat", dest="u_hat", type=float, default=None)
    p.add_argument("--H", type=float, default=None)
    p.add_argument("--mode", choices=("cr", "err"), default=None)
    p.add_argument("--sample", action="store_true", default=None,
                   help="draw a winner from the allocation probabilities")
    _add_cr(p)
    _add_err(p)
    _add_common(p)
    p.set_defaults(handler=cmd_simulate)

    p = subs.add_parser("verify", help="run the property suite; exit 0 only if all pass")
    p.add_argument("--u-hat", dest="u_hat", type=float, default=None)
    p.add_argument("--H", type=float, default=None)
    p.add_argument("--mode", choices=("cr", "err"), default=None)
    p.add_argument("--grid-points", dest="grid_points", type=int, default=None)
    p.add_argument("--expect-infeasible", dest="expect_infeasible", action="store_true",
                   default=None, help="witness that the parameters admit no auction")
    _add_cr(p)
    _add_err(p)
    _add_common(p)
    p.set_defaults(handler=cmd_verify)

    p = subs.add_parser("curve", help="revenue-ratio sweep over the top bid")
    p.add_argument("--u-hat", dest="u_hat", type=float, default=None)
    p.add_argument("--H", type=float, default=None)
    p.add_argument("--mode", choices=("cr", "err"), default=None)
    p.add_argument("--grid-points", dest="grid_points", type=int, default=None)
    p.add_argument("--t-min", dest="t_min", type=float, default=None)
    p.add_argument("--t-max", dest="t_max", type=float, default=None)
    _add_cr(p)
    _add_err(p)
    _add_common(p)
    p.set_defaults(handler=cmd_curve)

    p = subs.add_parser("families", help="tabulate the stock robustness families")
    p.add_argument("--family", choices=("polylog", "log", "sublog"), default=None)
    p.add_argument("--eps", default=None, help="comma-separated shape parameters")
    p.add_argument("--H", default=None, help="comma-separated valuation caps")
    p.add_argument("--eta-points", dest="eta_points", type=int, default=None)
    _add_common(p)
    p.set_defaults(handler=cmd_families)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return ns.handler(ns)
    except (ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
