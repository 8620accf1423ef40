"""Command-line entry point: ``econsel {analyze,sweep,timed,check} --config RUN.ini``.

Exit codes: 0 success, 1 verification failure, 2 usage or configuration,
3 data, 4 numeric. Errors print one line ``error: <CLASS>: <message>`` to
standard error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import econ
from .bma import cv_loss_all_sets, rank_sets
from .config import RunConfig, load_config
from .dataset import Dataset, load_csv, make_folds, standardize, standardize_by_wave
from .errors import CapacityError, ConfigError, EconselError
from .extended import GaussianCovariateModel, extended_cv_loss_all_sets, verify_augmentation_shift
from .gprior import fit_model
from .lattice import MAX_PREDICTORS
from .oracle import quadrature_log_bayes_factor, toy_problem
from .plotting import (
    render_cost_sweep,
    render_selection_map,
    render_timing_curves,
    render_wave_strips,
    selection_map_spec,
    write_svg,
)
from .report import export_results, results_document, set_entry, sweep_document

log = logging.getLogger("econsel")


def _load_data(cfg: RunConfig) -> Dataset:
    if cfg.data_path is None:
        raise ConfigError("a [data] section is required for this command")
    if len(cfg.predictors) > MAX_PREDICTORS:
        raise CapacityError(f"{len(cfg.predictors)} predictors exceed the cap of {MAX_PREDICTORS}")
    return load_csv(cfg.data_path, cfg.response, cfg.predictors, cfg.wave)


def _loss_table(data: Dataset, cfg: RunConfig, scaled: bool = False):
    """CV loss table; ``scaled`` means ``data`` is already standardized."""
    per_fold = cfg.scaling == "per_fold"
    if not scaled and cfg.scaling == "per_wave":
        data = standardize_by_wave(data)
    elif not scaled and not per_fold:
        data = standardize(data)
    folds = make_folds(data.n, cfg.folds, cfg.seed)
    if cfg.covariate_mean is not None:
        cm = GaussianCovariateModel.from_csv(cfg.covariate_mean, cfg.covariate_cov)
        if per_fold:
            data = standardize(data)
        return extended_cv_loss_all_sets(data, folds, cfg.prior, cm)
    return cv_loss_all_sets(data, folds, cfg.prior, per_fold_scaling=per_fold,
                            threads=cfg.threads)


def cost_model(cfg: RunConfig, price=None):
    """Cost model declared in ``cfg``; ``price`` replaces the scalar knob."""
    return cost_family(cfg)(cfg.cost.price if price is None else price)


def cost_family(cfg: RunConfig):
    """Price-indexed cost models; without a declared structure the price is per predictor."""
    spec = cfg.cost
    p = len(cfg.predictors)
    if spec.kind in ("none", "uniform"):
        return econ.uniform_family()
    if spec.kind == "itemized":
        if spec.free or spec.prices is None:
            return econ.free_set_family(p, [cfg.index_of(n) for n in spec.free])
        return econ.scaled_family(spec.prices)
    groups = [[cfg.index_of(n) for n in g] for g in spec.groups]
    return econ.grouped_family(groups, spec.prices or [0.0] * p)


def _out(cfg: RunConfig) -> Path:
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    return cfg.out_dir


def cmd_analyze(cfg: RunConfig) -> int:
    """Rank every purchasable set and report the cost-adjusted optimum."""
    d = _load_data(cfg)
    table = _loss_table(d, cfg)
    cm = cost_model(cfg) if cfg.cost.kind != "none" else None
    outcome = econ.optimal_set(table, cm)
    out = _out(cfg)
    write_svg(render_selection_map(selection_map_spec(table, title="all combinations")),
              out / "selection_map.svg")
    write_svg(render_selection_map(selection_map_spec(table, top_k=128, title="top 128")),
              out / "selection_map_top128.svg")
    export_results(results_document(outcome, table.names, table.inclusion_all()),
                   out / "results.json")
    opt = outcome.optimum
    print(f"optimum: {{{', '.join(opt.labels(table.names))}}}  "
          f"loss={outcome.loss[opt.bits]:.6g} cost={outcome.cost[opt.bits]:.6g} "
          f"total={outcome.optimum_total:.6g}")
    return 0


def cmd_sweep(cfg: RunConfig) -> int:
    """Track the optimal set across a grid of prices."""
    if not cfg.sweep_grid:
        raise ConfigError("sweep.grid is required for the sweep command")
    grid = cfg.sweep_grid
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise ConfigError("sweep.grid must be ascending")
    d = _load_data(cfg)
    table = _loss_table(d, cfg)
    sweep = econ.cost_sweep(table, cost_family(cfg), grid)
    out = _out(cfg)
    write_svg(render_cost_sweep(sweep, table.names, title=f"{cfg.cost.kind} cost"),
              out / "cost_sweep.svg")
    export_results(sweep_document(sweep, table.names), out / "sweep.json")
    for res in sweep:
        print(f"price={res.price:<10g} optimum={{{', '.join(res.optimum.labels(table.names))}}}")
    return 0


def cmd_timed(cfg: RunConfig) -> int:
    """Choose the wave at which to start buying one predictor."""
    if cfg.wave is None:
        raise ConfigError("data.wave is required for the timed command")
    if cfg.target is None:
        raise ConfigError("timed.target is required for the timed command")
    target = 1 << cfg.index_of(cfg.target)
    d = _load_data(cfg)
    # each wave is analyzed as its own dataset; "global" scales the whole panel once
    panel_scaled = cfg.scaling == "global"
    if panel_scaled:
        d = standardize(d)
    waves = sorted(int(w) for w in np.unique(d.waves))
    rows, columns, l, l_star = [], [], [], []
    for t in waves:
        wd = d.wave(t)
        table = _loss_table(wd, cfg, scaled=panel_scaled)
        best_without, loss_without = table.least_loss(without=target)
        best_with, loss_with = table.least_loss()
        l.append(loss_without)
        l_star.append(loss_with)
        columns.append(table.inclusion(best_with))
        rows.append({
            "wave": t,
            "l": loss_without,
            "l_star": loss_with,
            "without": set_entry(best_without, table.names, loss_without,
                                 inclusion=table.inclusion(best_without)),
            "with": set_entry(best_with, table.names, loss_with, inclusion=columns[-1]),
        })
    results = []
    decisions = []
    for delta in cfg.deltas:
        for c in cfg.timing_prices:
            prob = econ.TimedPurchaseProblem(l, l_star, delta, c)
            sol = econ.optimal_purchase_wave(prob)
            results.append((prob, sol))
            decisions.append({
                "delta": delta,
                "price": c,
                "optimal_wave": "no_purchase" if sol.no_purchase else waves[sol.wave - 1],
                "minimizers": ["no_purchase" if m == prob.T + 1 else waves[m - 1]
                               for m in sol.minimizers],
                "objective": sol.curve.tolist(),
            })
            print(f"delta={delta:<8g} price={c:<8g} purchase at: {decisions[-1]['optimal_wave']}")
    out = _out(cfg)
    names = list(cfg.predictors)
    write_svg(render_wave_strips(columns, names, waves, title="least-loss set by wave"),
              out / "wave_selections.svg")
    write_svg(render_timing_curves(results, title="when to purchase"), out / "timing_curves.svg")
    export_results({"schema_version": 1, "target": cfg.target, "waves": rows,
                    "timed": decisions}, out / "timed.json")
    return 0


def cmd_check(cfg: RunConfig) -> int:
    """Run the built-in numerical self-checks."""
    n, m = cfg.check_n, cfg.check_m
    for q in cfg.check_q:
        if n <= 2 * m + q + 3:
            raise ConfigError(f"check.n = {n} too small for m = {m}, q = {q}")
    failures = []
    print(f"{'case':<28}{'delta':>12}{'dlogBF':>14}{'closed form':>14}  result")
    for q in cfg.check_q:
        for seed in range(cfg.check_seeds):
            rep = verify_augmentation_shift(n, m, q, seed)
            ok = rep.passed()
            if not ok:
                failures.append(rep)
            print(f"{f'n={n} m={m} q={q} seed={seed}':<28}{rep.delta:>12.4g}"
                  f"{rep.difference:>14.6g}{rep.closed_form:>14.6g}  {'pass' if ok else 'FAIL'}")
        rep = verify_augmentation_shift(n, m, q, 0, zero_delta=True)
        ok = rep.passed()
        if not ok:
            failures.append(rep)
        print(f"{f'n={n} m={m} q={q} zero-delta':<28}{rep.delta:>12.4g}"
              f"{rep.difference:>14.6g}{rep.closed_form:>14.6g}  {'pass' if ok else 'FAIL'}")
    worst = 0.0
    for seed in range(cfg.check_quadrature):
        y, X, nn, k = toy_problem(seed)
        d = Dataset(y, X, [f"x{j + 1}" for j in range(k)])
        closed = fit_model(d, list(range(k))).log_ml - fit_model(d, []).log_ml
        gap = abs(closed - quadrature_log_bayes_factor(y, X, float(nn)))
        worst = max(worst, gap)
        if not gap < 1e-6:
            failures.append(f"quadrature seed={seed} n={nn} k={k} gap={gap:.3g}")
    print(f"quadrature oracle: {cfg.check_quadrature} cases, worst |log BF gap| = {worst:.3g}"
          f"  {'pass' if worst < 1e-6 else 'FAIL'}")
    if failures:
        print(f"first failure: {failures[0]}")
        return 1
    print("all checks passed")
    return 0


COMMANDS = {
    "analyze": cmd_analyze,
    "sweep": cmd_sweep,
    "timed": cmd_timed,
    "check": cmd_check,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="econsel", description="Cost-aware Bayesian variable selection.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, func in COMMANDS.items():
        p = sub.add_parser(name, help=func.__doc__)
        p.add_argument("config_file", nargs="?", metavar="CONFIG", help="run configuration (INI)")
        p.add_argument("--config", help="run configuration, same as the positional form")
        p.add_argument("--out", help="output directory")
        p.add_argument("--seed", type=int, help="fold seed")
        p.add_argument("--folds", type=int, help="number of CV folds")
        p.add_argument("--threads", type=int, help="worker threads")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if (args.config is None) == (args.config_file is None):
        parser.error("give the configuration file exactly once, either positionally or with --config")
    config = args.config or args.config_file
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(config, out=args.out, seed=args.seed, folds=args.folds,
                          threads=args.threads, command=args.command)
        return COMMANDS[args.command](cfg)
    except EconselError as exc:
        print(f"error: {exc.code}: {exc}", file=sys.stderr)
        return exc.exit_status
    except OSError as exc:
        print(f"error: E_DATA: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
