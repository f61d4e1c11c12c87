"""Command line interface.

Every command writes its result files with a ``provenance`` block; errors
go to stderr as one line ``error: <Kind>: <message>`` with a nonzero exit.
Timings are left out of output files unless ``--timing`` is given, so
reruns with the same inputs produce identical files.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from sedpce import __version__, grid, io, lp, uq
from sedpce.errors import SedPceError
from sedpce.gas import solve_ied
from sedpce.sparse_fit import FitConfig
from sedpce.surrogate import predict

log = logging.getLogger("sedpce")


@dataclass
class RunConfig:
    system: str | None = None
    scenarios: str | None = None
    model: str | None = None
    output: str | None = None
    degrees: tuple[int, ...] = (1, 2, 3)
    q_norm: float = 0.75
    max_interaction: int = 2
    loo_target: float = 1e-10
    max_terms: int | None = None
    n_train: int | None = None
    variance_keep: float = 1.0
    seed: int = 0
    threads: int = 1
    tol: float = 1e-8

    def fit_config(self) -> FitConfig:
        return FitConfig(
            degrees=tuple(self.degrees),
            q_norm=self.q_norm,
            max_interaction=self.max_interaction,
            loo_target=self.loo_target,
            max_terms=self.max_terms,
            variance_keep=self.variance_keep,
        )


def _resolve(args) -> RunConfig:
    base = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            base = json.load(fh)
        unknown = set(base) - {f.name for f in fields(RunConfig)}
        if unknown:
            raise SedPceError(f"unknown config keys {sorted(unknown)}")
    cfg = RunConfig(**base)
    for f in fields(RunConfig):
        val = getattr(args, f.name, None)
        if val is not None:
            setattr(cfg, f.name, tuple(val) if f.name == "degrees" else val)
    return cfg


def _provenance(args, cfg: RunConfig) -> dict:
    return {
        "tool": "sedpce",
        "version": __version__,
        "command": args.command,
        "seed": cfg.seed,
        "config": {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(cfg).items()},
    }


def _need(value, flag):
    if not value:
        raise SedPceError(f"{flag} is required for this command")
    return value


def _solver_for(system):
    if system.gas is not None and not system.gas.is_empty:
        return solve_ied
    return None


def _write(obj, path, stdout_ok=True):
    text = json.dumps(obj, indent=1)
    if path:
        Path(path).write_text(text + "\n")
    elif stdout_ok:
        print(text)


def cmd_ptdf(args, cfg):
    system = io.load_system(_need(cfg.system, "--system"))
    p = system.ptdf
    _write({
        "line_ids": list(p.line_ids),
        "bus_ids": list(p.bus_ids),
        "slack": p.bus_ids[p.slack_index],
        "matrix": p.matrix.tolist(),
        "provenance": _provenance(args, cfg),
    }, cfg.output)


def cmd_solve(args, cfg):
    system = io.load_system(_need(cfg.system, "--system"))
    data = io.load_scenarios(_need(cfg.scenarios, "--scenarios"), system)
    wind = data[args.row]
    if args.dump_lp:
        Path(args.dump_lp).write_text(lp.format_lp(grid.build_sed_lp(system, wind)))
    solver = _solver_for(system) or grid.solve_sed
    sol = solver(system, wind)
    out = {
        "status": sol.status.value,
        "cost": sol.cost if sol.optimal else None,
        "row": args.row,
        "provenance": _provenance(args, cfg),
    }
    if sol.optimal:
        out["dispatch"] = {str(g.id): sol.dispatch[i].tolist() for i, g in enumerate(system.generators)}
        out["flows"] = {str(ln.id): sol.flows[i].tolist() for i, ln in enumerate(system.lines)}
        if sol.gas is not None:
            out["gas"] = {
                "well_output": sol.gas.well_output.tolist(),
                "pressure": sol.gas.pressure.tolist(),
                "pipeline_flow": sol.gas.pipeline_flow.tolist(),
                "compressor_flow": sol.gas.compressor_flow.tolist(),
                "slp_iterations": sol.gas.iterations,
                "max_weymouth_residual": sol.gas.max_residual,
            }
    else:
        out["diagnostics"] = sol.diagnostics
    _write(out, cfg.output)
    return 0 if sol.optimal else 3


def _maybe_sample(data, args, cfg):
    if getattr(args, "sample", None):
        idx, _ = uq.sample_training_design(data, args.sample, cfg.seed)
        return data[idx], idx
    return data, np.arange(data.shape[0])


def _finish_report(report, args, cfg):
    report.provenance = _provenance(args, cfg)
    if not args.timing:
        log.info("wall time %.3f s", report.wall_seconds)
        report.wall_seconds = None
    if getattr(args, "curves", None):
        report.write_curves_csv(args.curves)
    _write(report.to_dict(), cfg.output)


def cmd_mc(args, cfg):
    system = io.load_system(_need(cfg.system, "--system"))
    data = io.load_scenarios(_need(cfg.scenarios, "--scenarios"), system)
    data, idx = _maybe_sample(data, args, cfg)
    report, result = uq.monte_carlo(system, data, threads=cfg.threads, solver=_solver_for(system))
    if args.costs:
        _write_costs(args.costs, idx, result.cost, [str(getattr(s, "value", s)) for s in result.status])
    _finish_report(report, args, cfg)


def _write_costs(path, idx, costs, status=None):
    import csv

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["row", "status", "cost"] if status is not None else ["row", "cost"])
        for k, (i, c) in enumerate(zip(idx, costs)):
            rec = [int(i), repr(float(c))]
            if status is not None:
                rec.insert(1, status[k])
            w.writerow(rec)


def cmd_fit(args, cfg):
    data = io.load_scenarios(_need(cfg.scenarios, "--scenarios"))
    reference = io.load_scenarios(args.reference) if args.reference else None
    prov = _provenance(args, cfg)
    if args.costs:
        y = io.read_column(args.costs, "cost")
        if y.size != data.shape[0]:
            raise SedPceError(f"{y.size} costs for {data.shape[0]} scenario rows")
        train_x, train_y = data, y
    else:
        system = io.load_system(_need(cfg.system, "--system"))
        n_train = _need(cfg.n_train, "--n-train (or --costs)")
        idx, _ = uq.sample_training_design(data, n_train, cfg.seed)
        res = grid.batch_solve(system, data[idx], threads=cfg.threads, solver=_solver_for(system))
        ok = res.optimal_mask
        if not ok.all():
            log.warning("%d training rows not optimal and dropped", int((~ok).sum()))
        train_x, train_y = data[idx][ok], res.cost[ok]
        prov["train_rows"] = idx[ok].tolist()
        if reference is None:
            reference = data
    start = time.perf_counter()
    model = uq.fit_surrogate(train_x, train_y, cfg.fit_config(), reference_x=reference, provenance=prov)
    log.info("fit: degree %d, %d terms, LOO %.3e, %.3f s", model.degree, len(model.coefficients),
             model.loo_error, time.perf_counter() - start)
    io.save_model(model, _need(cfg.output, "--out"))


def cmd_predict(args, cfg):
    model = io.load_model(_need(cfg.model, "--model"))
    data = io.load_scenarios(_need(cfg.scenarios, "--scenarios"))
    y = predict(model, data)
    _write_costs(_need(cfg.output, "--out"), np.arange(data.shape[0]), y)


def cmd_stats(args, cfg):
    values = io.read_column(args.costs, args.column)
    values = values[np.isfinite(values)]
    _finish_report(uq.make_report(values), args, cfg)


def cmd_compare(args, cfg):
    base = io.load_report(args.baseline)
    cand = io.load_report(args.candidate)
    out = uq.compare_reports(base, cand)
    out["provenance"] = _provenance(args, cfg)
    _write(out, cfg.output)


def build_parser() -> argparse.ArgumentParser:
    glob = argparse.ArgumentParser(add_help=False)
    glob.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    glob.add_argument("--threads", type=int, default=argparse.SUPPRESS)
    glob.add_argument("--config", default=argparse.SUPPRESS, help="JSON file with run settings")
    glob.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)

    p = argparse.ArgumentParser(prog="sedpce", parents=[glob],
                                description="Stochastic economic dispatch with sparse PCE surrogates")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        sp = sub.add_parser(name, parents=[glob], help=help_)
        sp.set_defaults(func=func)
        return sp

    sp = add("ptdf", cmd_ptdf, "print the PTDF matrix of a system")
    sp.add_argument("--system")
    sp.add_argument("--out", dest="output")

    sp = add("solve", cmd_solve, "solve the dispatch for one scenario row")
    sp.add_argument("--system")
    sp.add_argument("--scenarios")
    sp.add_argument("--row", type=int, default=0)
    sp.add_argument("--out", dest="output")
    sp.add_argument("--dump-lp", help="write the assembled electric LP as text")

    sp = add("mc", cmd_mc, "Monte Carlo: solve every scenario and summarize costs")
    sp.add_argument("--system")
    sp.add_argument("--scenarios")
    sp.add_argument("--sample", type=int, help="use a seeded subsample of this many rows")
    sp.add_argument("--out", dest="output")
    sp.add_argument("--costs", help="also write per-row costs to this CSV")
    sp.add_argument("--curves", help="also write pdf/cdf curves to this CSV")
    sp.add_argument("--timing", action="store_true")

    sp = add("fit", cmd_fit, "train a surrogate model")
    sp.add_argument("--system")
    sp.add_argument("--scenarios")
    sp.add_argument("--costs", help="CSV with a 'cost' column aligned to --scenarios rows")
    sp.add_argument("--reference", help="unlabeled scenarios for the whitener and moments")
    sp.add_argument("--n-train", dest="n_train", type=int)
    sp.add_argument("--degrees", type=int, nargs="+")
    sp.add_argument("--q-norm", dest="q_norm", type=float)
    sp.add_argument("--max-interaction", dest="max_interaction", type=int)
    sp.add_argument("--loo-target", dest="loo_target", type=float)
    sp.add_argument("--max-terms", dest="max_terms", type=int)
    sp.add_argument("--variance-keep", dest="variance_keep", type=float)
    sp.add_argument("--out", dest="output")

    sp = add("predict", cmd_predict, "evaluate a surrogate on scenarios")
    sp.add_argument("--model")
    sp.add_argument("--scenarios")
    sp.add_argument("--out", dest="output")

    sp = add("stats", cmd_stats, "summarize a cost column into a report")
    sp.add_argument("--costs", required=True)
    sp.add_argument("--column", default="cost")
    sp.add_argument("--out", dest="output")
    sp.add_argument("--curves")
    sp.add_argument("--timing", action="store_true")

    sp = add("compare", cmd_compare, "error metrics of a candidate report against a baseline")
    sp.add_argument("baseline")
    sp.add_argument("candidate")
    sp.add_argument("--out", dest="output")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = _resolve(args)
        code = args.func(args, cfg)
    except SedPceError as exc:
        print(f"error: {type(exc).__name__}: {str(exc).splitlines()[0] if str(exc) else ''}", file=sys.stderr)
        return 2
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {type(exc).__name__}: {str(exc).splitlines()[0] if str(exc) else ''}", file=sys.stderr)
        return 1
    return code or 0


if __name__ == "__main__":
    sys.exit(main())
