"""Command-line entry point: ``qoeplan <synth|predict|plan|sweep|score>``.

Every subcommand writes its main artifact to ``--out`` (or stdout) and keeps
human-readable summaries on stderr, so outputs can be piped into other tools.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import re
import sys
from pathlib import Path

from .allocator import METHODS, GaConfig, mean_totals, run_method, sweep, sweep_csv
from .curve import METRICS, load_trace, save_trace
from .errors import InfeasibleProblem, QoePlanError
from .predictor import FORECAST_METHODS, PredictorConfig, forecast, mape, train_predictor
from .predictor.curvefit import curvefit_forecast
from .problem_io import (
    ProblemFileError,
    load_problem,
    materialize_trace,
    model_sources,
    read_problem_doc,
    synth_from_block,
)
from .qoe import FACTORS, model_experience

SWEEP_DEFAULT_METHODS = ("ga", "random", "fcfs", "average")


class UsageError(ValueError):
    pass


# ---------------------------------------------------------------------------
# argument helpers


def parse_range(text: str) -> list[float]:
    """``start:end:step`` (end inclusive) or a single number, in decimal units."""
    parts = text.split(":")
    try:
        nums = [float(p) for p in parts]
    except ValueError:
        raise UsageError(f"bad range {text!r}; expected start:end:step") from None
    if len(nums) == 1:
        return nums
    if len(nums) != 3:
        raise UsageError(f"bad range {text!r}; expected start:end:step")
    start, end, step = nums
    if step <= 0 or end < start:
        raise UsageError(f"bad range {text!r}; need step > 0 and end >= start")
    count = math.floor((end - start) / step + 1e-9) + 1
    return [round(start + k * step, 10) for k in range(count)]


def parse_int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"bad integer list {text!r}") from None


def parse_methods(values: list[str] | None, default=SWEEP_DEFAULT_METHODS) -> list[str]:
    if values is None:
        return list(default)
    methods = [m.strip() for v in values for m in v.split(",") if m.strip()]
    if not methods:
        raise UsageError(f"no methods given; choose from {', '.join(METHODS)}")
    for m in methods:
        if m not in METHODS:
            raise UsageError(f"unknown method {m!r}; choose from {', '.join(METHODS)}")
    return methods


def _safe_name(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", name).strip("_") or "model"


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        path = Path(out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")


def _note(msg: str) -> None:
    print(msg, file=sys.stderr)


def _predictor_config(args) -> PredictorConfig:
    base = PredictorConfig()
    return PredictorConfig(
        window=args.window or base.window,
        hidden_size=args.hidden_size or base.hidden_size,
        train_iters=args.iters or base.train_iters,
        seed=args.seed,
    )


def _ga_config(args) -> GaConfig:
    base = GaConfig()
    return GaConfig(
        population_size=args.population or base.population_size,
        generations=args.generations or base.generations,
        seed=args.seed,
    )


def _problem(args, budget=None, weights=None):
    return load_problem(
        args.problem,
        budget_hours=budget,
        weights_path=weights,
        scales_path=args.scales,
        forecast_method=args.forecast,
        predictor_config=_predictor_config(args),
    )


def _model_index(problem, name: str | None) -> int:
    if name is None:
        return 0
    if name not in problem.names:
        raise UsageError(f"no model named {name!r}; have {', '.join(problem.names)}")
    return problem.names.index(name)


# ---------------------------------------------------------------------------
# subcommands


def cmd_synth(args) -> int:
    doc, root = read_problem_doc(args.problem)
    max_epochs = int(doc.get("max_epochs", 1000))
    out_dir = Path(args.out or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for src in model_sources(doc, root):
        if src.synth is None:
            raise ProblemFileError(f"model {src.meta.name!r}: no 'synth' block")
        synth = dict(src.synth)
        synth["seed"] = int(synth.get("seed", 0)) + args.seed
        trace = synth_from_block(src.meta, synth, max_epochs)
        path = save_trace(trace, out_dir / f"{_safe_name(src.meta.name)}.{args.format}")
        written.append((src.meta.name, path, len(trace)))
    for name, path, n in written:
        print(f"{name}\t{path}\t{n} epochs")
    return 0


def _load_series(args):
    if args.trace is not None:
        trace = load_trace(args.trace)
    elif args.problem is not None:
        doc, root = read_problem_doc(args.problem)
        sources = model_sources(doc, root)
        names = [s.meta.name for s in sources]
        if args.model is not None and args.model not in names:
            raise UsageError(f"no model named {args.model!r}; have {', '.join(names)}")
        src = sources[names.index(args.model) if args.model else 0]
        trace = materialize_trace(src, int(doc.get("max_epochs", 1000)))
    else:
        raise UsageError("predict needs --trace or --problem")
    return getattr(trace, args.metric)


def cmd_predict(args) -> int:
    series = _load_series(args)
    observe = args.observe if args.observe is not None else min(500, len(series))
    if observe > len(series):
        raise UsageError(f"--observe {observe} exceeds the trace length {len(series)}")
    horizon = args.horizon
    if horizon is None:
        horizon = len(series) - observe if len(series) > observe else observe
    prefix = series[:observe]
    if args.method == "lstm":
        predictor = train_predictor(prefix, _predictor_config(args))
        fc = forecast(predictor, prefix, horizon)
        if args.save_model:
            predictor.save(args.save_model)
    else:
        fc = curvefit_forecast(prefix, horizon)

    truth = series[observe : observe + horizon]
    held_out = len(truth) == horizon
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if held_out:
        writer.writerow(["epoch", "predicted", "actual", "abs_error", "pct_error"])
        for e, p, a in zip(fc.epochs, fc.values, truth):
            pct = float(abs(p - a) / abs(a) * 100.0) if a != 0 else float("inf")
            writer.writerow([int(e), repr(float(p)), repr(float(a)), repr(abs(float(p - a))), repr(pct)])
    else:
        writer.writerow(["epoch", "predicted"])
        for e, p in zip(fc.epochs, fc.values):
            writer.writerow([int(e), repr(float(p))])
    _emit(buf.getvalue(), args.out)
    if held_out:
        _note(f"{args.method} {args.metric}: observe={observe} horizon={horizon} MAPE={mape(fc.values, truth):.3f}%")
    else:
        _note(f"{args.method} {args.metric}: observe={observe} horizon={horizon} (no held-out data)")
    return 0


def cmd_plan(args) -> int:
    weights = args.weights[0] if args.weights else None
    problem = _problem(args, args.budget, weights)
    method = parse_methods([args.method], default=("ga",))[0]
    plan = run_method(problem, method, args.seed, _ga_config(args), args.grid_step)
    _emit(json.dumps(plan.to_json(), indent=2) + "\n", args.out)
    summary = (
        f"{plan.method} budget={plan.budget_hours:g}h used={plan.total_hours:.4f}h "
        f"total_experience={plan.total_experience:.6f} epochs={list(plan.epochs)}"
    )
    print(summary, file=sys.stderr if args.out is None else sys.stdout)
    return 0


def _curve_rows(args) -> str:
    """E_all-vs-epoch curves of one model, one block per weight file."""
    epochs = [int(e) for e in parse_range(args.epochs or "500:1000:10")]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["epoch", "e_all"] + [f"e_{f}" for f in FACTORS] + ["w_variant"])
    for wpath in args.weights or [None]:
        problem = _problem(args, weights=wpath)
        entry = problem.models[_model_index(problem, args.model)]
        label = Path(wpath).stem if wpath else ""
        for e in epochs:
            factors, e_all = model_experience(
                entry.curve, entry.meta, e, entry.weights, entry.scales, problem.max_epochs
            )
            writer.writerow([e, repr(e_all)] + [repr(float(x)) for x in factors.as_array()] + [label])
    return buf.getvalue()


def cmd_sweep(args) -> int:
    if args.model is not None:
        _emit(_curve_rows(args), args.out)
        return 0
    methods = parse_methods(args.method)
    budgets = parse_range(args.budgets or "70:130:10")
    seeds = parse_int_list(args.seeds) if args.seeds else [args.seed]
    weight_files = args.weights or [None]
    rows = []
    names = None
    for wpath in weight_files:
        template = _problem(args, weights=wpath)
        names = template.names
        label = Path(wpath).stem if len(weight_files) > 1 else None
        rows += sweep(template, budgets, methods, seeds, _ga_config(args), args.grid_step, label)
    _emit(sweep_csv(rows, names), args.out)

    for (variant, budget, method), value in sorted(mean_totals(rows).items(), key=lambda kv: (kv[0][0] or "", kv[0][1], kv[0][2])):
        tag = f"{variant} " if variant else ""
        _note(f"{tag}budget={budget:g} {method}: mean total_experience={value:.6f}")
    flagged = [r for r in rows if not r.ok]
    for r in flagged:
        _note(f"flagged: budget={r.budget_hours:g} {r.method} seed={r.seed}: {r.status}: {r.message}")
    return 1 if flagged else 0


def cmd_score(args) -> int:
    if args.epochs is None:
        raise UsageError("score needs --epochs")
    epochs = int(args.epochs)
    weights = args.weights[0] if args.weights else None
    problem = _problem(args, weights=weights)
    entry = problem.models[_model_index(problem, args.model)]
    factors, e_all = model_experience(
        entry.curve, entry.meta, epochs, entry.weights, entry.scales, problem.max_epochs
    )
    doc = {"name": entry.name, "epochs": epochs, "factors": factors.to_json(), "e_all": e_all}
    _emit(json.dumps(doc, indent=2) + "\n", args.out)
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qoeplan",
        description="Forecast training curves, score schedules and split a training-time budget.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, problem_required=True):
        p.add_argument("--problem", required=problem_required,
                       help="problem JSON file, or 'fixture' for the bundled four-model problem")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", help="output path (default: stdout)")

    def modelling(p):
        p.add_argument("--weights", action="append",
                       help="weights JSON; repeat on sweep for one w_variant per file")
        p.add_argument("--scales", help="scales JSON (default: the problem's own)")
        p.add_argument("--forecast", choices=FORECAST_METHODS,
                       help="forecaster for traces shorter than max_epochs")
        p.add_argument("--model", help="model name (default: the first)")

    def predictor(p):
        p.add_argument("--window", type=int)
        p.add_argument("--hidden-size", type=int)
        p.add_argument("--iters", type=int, help="training iterations")

    def ga(p):
        p.add_argument("--grid-step", type=int, default=50, help="epoch grid for the exhaustive oracle")
        p.add_argument("--population", type=int)
        p.add_argument("--generations", type=int)

    p = sub.add_parser("synth", help="write synthetic traces for every model of a problem file")
    common(p)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("predict", help="forecast the tail of one trace")
    common(p, problem_required=False)
    p.add_argument("--trace", help="trace CSV or JSON")
    p.add_argument("--model", help="model name inside --problem")
    p.add_argument("--metric", choices=METRICS, default="mae")
    p.add_argument("--method", choices=FORECAST_METHODS, default="lstm")
    p.add_argument("--observe", type=int, help="epochs used for training (default 500)")
    p.add_argument("--horizon", type=int, help="epochs to forecast (default: rest of the trace)")
    p.add_argument("--save-model", help="write the trained network as JSON")
    predictor(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("plan", help="allocate one budget with one method")
    common(p)
    modelling(p)
    p.add_argument("--method", default="ga", help=f"one of {', '.join(METHODS)}")
    p.add_argument("--budget", type=float, help="hours (default: the problem's budget_hours)")
    predictor(p)
    ga(p)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("sweep", help="budget x method grid, or E_all-vs-epoch curves with --model")
    common(p)
    modelling(p)
    p.add_argument("--method", action="append",
                   help=f"comma-separated methods (default: {','.join(SWEEP_DEFAULT_METHODS)})")
    p.add_argument("--budgets", help="start:end:step in hours, end inclusive (default 70:130:10)")
    p.add_argument("--seeds", help="comma-separated seeds for stochastic methods (default: --seed)")
    p.add_argument("--epochs", help="epoch range start:end:step for --model curves")
    predictor(p)
    ga(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("score", help="experience factors and E_all of one model at one epoch count")
    common(p)
    modelling(p)
    p.add_argument("--epochs", type=int)
    predictor(p)
    p.set_defaults(func=cmd_score)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        _note(f"qoeplan: error: {exc}")
        return 2
    except InfeasibleProblem as exc:
        _note(f"qoeplan: infeasible: {exc}")
        if exc.min_budget_hours is not None:
            _note(f"minimum feasible budget: {exc.min_budget_hours:g} h")
        return 3
    except (QoePlanError, ProblemFileError, OSError, ValueError) as exc:
        _note(f"qoeplan: error: {exc}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
