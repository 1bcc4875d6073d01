"""nervecal command line: simulate, calibrate, compare, bundle-gen.

Exit codes: 0 success, 2 usage or configuration error, 3 runtime or
numerical error.
"""

import argparse
import csv
import json
import logging
import math
import sys
import time
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, plotting
from .bundle import bin_counts, generate_bundle, write_manifest
from .calibration import Runner, calibrate, cap_matrix, cell_traces, fitness_from_matrix
from .config import apply_override, build, load_raw
from .damage import LOG_SCALED, PARAM_NAMES
from .errors import ConfigError, NervecalError, ParseError, ValidationError
from .optim import Bounds, optimize, rastrigin, sphere
from .optim.common import log_header, log_rows
from .parallel import batch_evaluator
from .rng import derive_seed

log = logging.getLogger("nervecal")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3
SEARCH_NAMES = [f"log10_{n}" if n in LOG_SCALED else n for n in PARAM_NAMES]
ANALYTIC = {"rastrigin": (rastrigin, 5.12), "sphere": (sphere, 5.0)}
ANALYTIC_DIM = 6


# -- helpers ------------------------------------------------------------------

def _config(args):
    raw = load_raw(args.config)
    for item in args.set or []:
        apply_override(raw, item)
    for key in ("mode", "seed", "workers", "out"):
        value = getattr(args, key, None)
        if value is not None:
            raw[key] = str(value) if key == "out" else value
    if getattr(args, "optimizer", None):
        raw.setdefault("optimizer", {})["strategy"] = args.optimizer
    if getattr(args, "runs", None) is not None:
        raw.setdefault("compare", {})["runs"] = args.runs
    if getattr(args, "reference", None):
        raw["reference"] = args.reference
    if getattr(args, "distribution", None):
        raw["distribution"] = args.distribution
    if getattr(args, "objective", None):
        raw.setdefault("compare", {})["objective"] = args.objective
    if getattr(args, "preset", None):
        raw["params"] = args.preset
    if getattr(args, "params", None):
        raw["params"] = _params_arg(args.params)
    return build(raw)


def _params_arg(text):
    p = Path(text)
    try:
        data = json.loads(p.read_text() if p.is_file() else text)
    except json.JSONDecodeError:
        raise ConfigError(f"--params is neither a JSON object nor a readable JSON file: {text}") from None
    return data


def _out_dir(cfg):
    cfg.out.mkdir(parents=True, exist_ok=True)
    return cfg.out


def _stamp(args):
    return None if args.deterministic else datetime.now(timezone.utc).isoformat(timespec="seconds")


def _write_json(path, data):
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(obj):
    if isinstance(obj, Path):
        return str(obj)
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"not serializable: {type(obj).__name__}")


def _finite(x):
    return x if math.isfinite(x) else None


def _load_reference(cfg, required):
    if cfg.reference_path is None and not required:
        return None
    try:
        ref = cfg.reference()
    except FileNotFoundError as exc:
        raise ConfigError(f"reference file not found: {exc.filename}") from None
    if cfg.reference_path in (None, "default"):
        log.warning("using the packaged approximate reference digitization")
    return ref


# -- commands -----------------------------------------------------------------

def cmd_simulate(args):
    cfg = _config(args)
    params = cfg.params
    if params is None:
        raise ConfigError("simulate needs parameters: --preset NAME, --params JSON or 'params' in the config")
    reference = _load_reference(cfg, required=False)
    out = _out_dir(cfg)
    t0 = time.perf_counter()
    with Runner(cfg.workers) as runner:
        sim = cap_matrix(params, cfg.mode, cfg.settings, runner=runner)
        sim.to_csv(out / "cap_matrix.csv")
        files = ["cap_matrix.csv"]
        report = None
        if reference is not None:
            report = fitness_from_matrix(sim, reference, params, cfg.mode)
            report.to_csv(out / "fitness_report.csv")
            report.to_json(out / "fitness_report.json")
            files += ["fitness_report.csv", "fitness_report.json"]
            log.info("fitness %.4f", report.total)
        plotting.cap_vs_time(sim, out / "cap_vs_time.png", reference)
        files.append("cap_vs_time.png")
        if args.emit_traces:
            traces = cell_traces(params, cfg.mode, cfg.settings, runner=runner)
            tdir = out / "traces"
            tdir.mkdir(exist_ok=True)
            for (case, t), tr in traces.items():
                tr.to_csv(tdir / f"case{case}_t{t}.csv")
            for case in sorted({c for c, _ in traces}):
                plotting.trace_panel(traces, tdir / f"case{case}.png", case)
            files.append("traces/")
    _write_json(out / "manifest.json", {
        "command": "simulate", "version": __version__, "created": _stamp(args),
        "config": cfg.raw, "seed": cfg.seed, "mode": cfg.mode, "params": params.as_dict(),
        "workers": cfg.workers, "fitness": report.total if report else None,
        "wall_time": None if args.deterministic else time.perf_counter() - t0, "files": files,
    })
    print(sim.to_csv_text(), end="")
    return EXIT_OK


def cmd_calibrate(args):
    cfg = _config(args)
    reference = _load_reference(cfg, required=True)
    out = _out_dir(cfg)
    log_path = out / "optimizer_log.csv"
    manifest = {
        "command": "calibrate", "version": __version__, "created": _stamp(args),
        "config": cfg.raw, "seed": cfg.seed, "mode": cfg.mode, "workers": cfg.workers,
        "strategy": cfg.optimizer.strategy, "reference": cfg.reference_path or "default",
    }
    with open(log_path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(log_header(len(PARAM_NAMES), SEARCH_NAMES))
        fh.flush()

        def on_batch(entries):
            writer.writerows(log_rows(entries))
            fh.flush()

        try:
            res = calibrate(cfg.mode, reference, cfg.optimizer, cfg.settings,
                            workers=cfg.workers, on_batch=on_batch)
        except (NervecalError, ArithmeticError) as exc:
            manifest.update(status="aborted", error=str(exc))
            _write_json(out / "manifest.json", manifest)
            raise

    opt = res.opt
    best = res.best_report
    if best.ok:
        best.sim.to_csv(out / "best_cap_matrix.csv")
        best.to_csv(out / "fitness_report.csv")
        best.to_json(out / "fitness_report.json")
        plotting.cap_vs_time(best.sim, out / "cap_vs_time.png", reference, title="best fit")
    plotting.fitness_scatter(opt.log, out / "fitness_vs_parameters.png", SEARCH_NAMES)
    plotting.convergence([opt.history], out / "convergence.png", [opt.strategy])
    manifest.update(
        status="ok" if best.ok else "failed",
        best_params=res.best_params.as_dict(), best_fitness=_finite(opt.best_f),
        evals_used=opt.evals_used, restarts=opt.restarts, failed_evaluations=res.n_failed,
        wall_time=None if args.deterministic else res.wall_time,
    )
    _write_json(out / "manifest.json", manifest)
    print(f"best fitness {opt.best_f:.6g} after {opt.evals_used} evaluations")
    print(json.dumps(res.best_params.as_dict()))
    return EXIT_OK if best.ok else EXIT_RUNTIME


SUMMARY_HEADER = ["strategy", "n_ok", "n_failed", "best", "median", "worst", "mean", "std"]
RUNS_HEADER = ["strategy", "run", "seed", "best_f", "evals_used", "restarts", "status", "error"]


def summarize(values):
    """Best, median, worst, mean and population standard deviation (ddof 0)."""
    v = np.asarray(values, dtype=float)
    if not len(v):
        return [math.nan] * 5
    return [float(v.min()), float(np.median(v)), float(v.max()), float(v.mean()), float(v.std())]


def _compare_one(cfg, strategy, seed, runner):
    config = replace(cfg.optimizer, strategy=strategy, seed=seed)
    if cfg.compare_objective == "model":
        reference = _load_reference(cfg, required=True)
        res = calibrate(cfg.mode, reference, config, cfg.settings, runner=runner)
        return res.opt
    fn, half = ANALYTIC[cfg.compare_objective]
    bounds = Bounds.uniform(-half, half, ANALYTIC_DIM)
    return optimize(fn, bounds, config, evaluate_batch=batch_evaluator(fn, runner))


def cmd_compare(args):
    cfg = _config(args)
    if cfg.compare_objective == "model":
        _load_reference(cfg, required=True)
    out = _out_dir(cfg)
    seeds = [derive_seed(cfg.seed, "runs", r) for r in range(cfg.compare_runs)]
    rows = []
    finals = {}
    histories = {}
    with Runner(cfg.workers) as runner:
        for strategy in cfg.compare_strategies:
            finals[strategy] = []
            for r, seed in enumerate(seeds):
                try:
                    opt = _compare_one(cfg, strategy, seed, runner)
                except (NervecalError, ArithmeticError) as exc:
                    log.warning("%s run %d failed: %s", strategy, r, exc)
                    rows.append([strategy, r, seed, "", "", "", "failed", str(exc)])
                    continue
                if not math.isfinite(opt.best_f):
                    rows.append([strategy, r, seed, repr(opt.best_f), opt.evals_used, opt.restarts,
                                 "failed", "no finite fitness"])
                    continue
                finals[strategy].append(opt.best_f)
                histories.setdefault(strategy, opt.history)
                rows.append([strategy, r, seed, repr(opt.best_f), opt.evals_used, opt.restarts, "ok", ""])
                log.info("%s run %d: %.6g", strategy, r, opt.best_f)

    with open(out / "runs.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RUNS_HEADER)
        w.writerows(rows)
    with open(out / "summary.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_HEADER)
        for strategy in cfg.compare_strategies:
            ok = finals[strategy]
            stats = summarize(ok)
            w.writerow([strategy, len(ok), cfg.compare_runs - len(ok), *(repr(s) for s in stats)])
            print(f"{strategy:>14}  " + "  ".join(f"{n}={s:.4g}" for n, s in zip(SUMMARY_HEADER[3:], stats)))
    if any(finals.values()):
        plotting.strategy_boxplot({k: v for k, v in finals.items() if v}, out / "compare_boxplot.png")
        names = list(histories)
        plotting.convergence([histories[n] for n in names], out / "convergence.png", names)
    _write_json(out / "manifest.json", {
        "command": "compare", "version": __version__, "created": _stamp(args),
        "config": cfg.raw, "seed": cfg.seed, "run_seeds": seeds, "workers": cfg.workers,
        "objective": cfg.compare_objective, "strategies": list(cfg.compare_strategies),
    })
    failed = sum(1 for r in rows if r[6] != "ok")
    return EXIT_OK if failed < len(rows) else EXIT_RUNTIME


def cmd_bundle_gen(args):
    cfg = _config(args)
    s = cfg.settings
    out = _out_dir(cfg)
    bundle = generate_bundle(s.distribution, s.bundle_seed, s.n_pairs, s.measurement_position)
    write_manifest(bundle, out / "bundle_manifest.csv")
    counts = bin_counts(bundle, s.distribution)
    print(" ".join(map(str, counts)))
    return EXIT_OK


# -- entry point --------------------------------------------------------------

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON run configuration")
    common.add_argument("--mode", choices=["single_axon", "bundle"])
    common.add_argument("--workers", type=int, metavar="N",
                        help="parallel simulation workers (fallback: $NERVECAL_WORKERS, then 1)")
    common.add_argument("--seed", type=int, metavar="N", help="top-level random seed")
    common.add_argument("--out", metavar="DIR", help="output directory")
    common.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override a config entry by dotted path; VALUE is parsed as JSON")
    common.add_argument("--deterministic", action="store_true",
                        help="omit timestamps and wall times for byte-identical reruns")
    common.add_argument("-v", "--verbose", action="count", default=0)

    parser = argparse.ArgumentParser(prog="nervecal", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="%%CAP matrix for one parameter set")
    p.add_argument("--preset", help="named parameter set (manual, de1, de2, bundle)")
    p.add_argument("--params", help="JSON object or JSON file with the six parameters")
    p.add_argument("--reference", metavar="PATH", help="reference CSV for a fitness report")
    p.add_argument("--emit-traces", action="store_true", help="write one trace CSV per cell")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("calibrate", parents=[common], help="fit the six parameters")
    p.add_argument("--optimizer", choices=["de_rand_1_bin", "de_rand_1_exp", "lshade", "bfgs"])
    p.add_argument("--reference", metavar="PATH", help="reference CSV (default: packaged digitization)")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("compare", parents=[common], help="repeated runs of several strategies")
    p.add_argument("--runs", type=int, metavar="N")
    p.add_argument("--optimizer", action="append", dest="strategies",
                   choices=["de_rand_1_bin", "de_rand_1_exp", "lshade", "bfgs"],
                   help="strategy to include (repeatable; default from config)")
    p.add_argument("--objective", choices=["model", "rastrigin", "sphere"])
    p.add_argument("--reference", metavar="PATH")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("bundle-gen", parents=[common], help="draw the axon population")
    p.add_argument("--distribution", metavar="PATH", help="low,high,count CSV")
    p.set_defaults(func=cmd_bundle_gen)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "strategies", None):
        args.set = (args.set or []) + [f"compare.strategies={json.dumps(args.strategies)}"]
    try:
        return args.func(args)
    except (ConfigError, ParseError, ValidationError) as exc:
        print(f"nervecal: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"nervecal: configuration error: file not found: {exc.filename}", file=sys.stderr)
        return EXIT_CONFIG
    except (NervecalError, ArithmeticError) as exc:
        print(f"nervecal: simulation error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
