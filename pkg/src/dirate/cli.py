"""Command-line entry point.

Exit codes: 0 success, 2 input or validation error, 3 convergence failure,
4 estimation singularity, 5 every experiment trial failed.
"""
import argparse
import json
import os
import sys

from . import bounds, harness
from .errors import (
    DIRateError,
    InnovationSingular,
    NoConvergence,
    NotPositiveDefinite,
    SingularAtFrequency,
    ValidationError,
)
from .estimator import di_rate_estimate
from .harness import canonical_json
from .model import Partition, TimeSeries, load_model, reference_model, simulate
from .prediction import DEFAULT_I_MAX, DEFAULT_TOL, exact_di_rate, kalman_predictor_poles

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_CONVERGENCE = 3
EXIT_SINGULAR = 4
EXIT_EXPERIMENT = 5


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def _model(ref):
    """A model file path, or the name of a reference model (W1, W2, ...)."""
    if not os.path.exists(ref):
        try:
            return reference_model(ref)
        except KeyError:
            raise CliError(f"no such model file or reference model: {ref}", EXIT_INPUT) from None
    try:
        return load_model(ref)
    except json.JSONDecodeError as exc:
        raise CliError(f"{ref}: invalid JSON ({exc})", EXIT_INPUT) from None


def _emit(obj, out):
    text = canonical_json(obj)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _lag(args, N):
    if args.p is not None:
        if args.p < 1:
            raise CliError("--p must be at least 1", EXIT_INPUT)
        return args.p
    return bounds.choose_p(N, args.p_rule).p


def cmd_simulate(args):
    model = _model(args.model)
    if args.n < 1:
        raise CliError("-n must be at least 1", EXIT_INPUT)
    simulate(model, args.n, args.seed).write_csv(args.out)
    return EXIT_OK


def cmd_truth(args):
    if not args.tol > 0:
        raise CliError(f"--tol must be positive, got {args.tol}", EXIT_INPUT)
    model = _model(args.model)
    rate = exact_di_rate(model, args.tol, args.i_max)
    d = rate.to_dict()
    d["units"] = "nats"
    _emit(d, args.out)
    return EXIT_OK


def cmd_estimate(args):
    ts = TimeSeries.read_csv(args.data)
    with open(args.partition, encoding="utf-8") as fh:
        raw = json.load(fh)
    part = Partition.from_dict(raw.get("partition", raw))
    part.validate(ts.n_w)
    p = _lag(args, ts.N)
    try:
        est = di_rate_estimate(ts, part, p, subtract_mean=not args.no_mean, ridge=args.ridge)
    except NotPositiveDefinite as exc:
        raise CliError(f"estimation failed at p = {p}, M = {ts.N - p}: {exc}", EXIT_SINGULAR) from None
    d = est.to_dict()
    line = f"I_hat = {est.value:.10g} nats"
    if args.bits:
        d["I_hat_bits"] = est.bits
        line += f" = {est.bits:.10g} bits"
    print(line, file=sys.stdout if args.out else sys.stderr)
    _emit(d, args.out)
    return EXIT_OK


def cmd_bound(args):
    model = _model(args.model)
    p = _lag(args, args.n)
    consts = bounds.model_constants(model, args.grid)
    params = bounds.params_from_model(model, args.n, p, args.nu, consts)
    eb = bounds.total_error_bound(params)
    d = eb.to_dict()
    full = list(range(model.n_w))
    h = kalman_predictor_poles(model, full, rho=consts.rho)
    j = kalman_predictor_poles(model, model.partition.v, rho=consts.rho)
    d["predictors"] = {
        "H": {"b": h.b, "pole_magnitudes": list(h.pole_magnitudes)},
        "J": {"b": j.b, "pole_magnitudes": list(j.pole_magnitudes)},
        "rho": consts.rho,
    }
    d["note"] = (
        f"c_min and c_max are extremes over a {consts.grid_size}-point frequency grid, "
        "not certified bounds"
    )
    _emit(d, args.out)
    return EXIT_OK


def cmd_experiment(args):
    with open(args.config, encoding="utf-8") as fh:
        raw = json.load(fh)
    cfg = harness.ScalingConfig.from_dict(raw, base_dir=os.path.dirname(os.path.abspath(args.config)))
    if args.workers is not None:
        cfg = harness.ScalingConfig(**{**cfg.__dict__, "workers": args.workers})
    truth = exact_di_rate(cfg.model).value
    records = harness.run_scaling_experiment(cfg, truth=truth)
    harness.write_results_csv(records, args.out)
    summary = harness.summarize(records, cfg, truth)
    summary_path = args.summary or os.path.splitext(args.out)[0] + ".summary.json"
    harness.dump_json(summary, summary_path)
    if summary["failed_trials"] == len(records):
        raise CliError("every trial failed", EXIT_EXPERIMENT)
    slope = summary["slope_median"]
    print(
        f"{len(records)} trials, coverage {summary['coverage']:.3f}, "
        f"median-error slope {'n/a' if slope is None else f'{slope:.4f}'}"
    )
    return EXIT_OK


def build_parser():
    ap = argparse.ArgumentParser(prog="dirate", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="draw a stationary sample path to CSV")
    s.add_argument("model", help="model JSON file or reference model name")
    s.add_argument("-n", type=int, required=True, help="number of samples")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("-o", "--out", required=True)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("truth", help="exact rate of a known model")
    s.add_argument("model")
    s.add_argument("--tol", type=float, default=DEFAULT_TOL)
    s.add_argument("--i-max", type=int, default=DEFAULT_I_MAX)
    s.add_argument("-o", "--out")
    s.set_defaults(func=cmd_truth)

    s = sub.add_parser("estimate", help="estimate the rate from a CSV time series")
    s.add_argument("data")
    s.add_argument("--partition", required=True, help="partition JSON (or a model JSON)")
    g = s.add_mutually_exclusive_group()
    g.add_argument("--p", type=int)
    g.add_argument("--p-rule", default="log:1", help="fixed:P, log:A or polylog")
    s.add_argument("--no-mean", action="store_true", help="skip sample-mean removal")
    s.add_argument("--bits", action="store_true", help="also report bits")
    s.add_argument("--ridge", type=float, default=0.0)
    s.add_argument("-o", "--out")
    s.set_defaults(func=cmd_estimate)

    s = sub.add_parser("bound", help="high-probability error radius for a model")
    s.add_argument("model")
    s.add_argument("-n", type=int, required=True)
    g = s.add_mutually_exclusive_group()
    g.add_argument("--p", type=int)
    g.add_argument("--p-rule", default="log:1")
    s.add_argument("--nu", type=float, default=0.1)
    s.add_argument("--grid", type=int, default=4096)
    s.add_argument("-o", "--out")
    s.set_defaults(func=cmd_bound)

    s = sub.add_parser("experiment", help="Monte Carlo scaling / coverage run")
    s.add_argument("config")
    s.add_argument("-o", "--out", required=True, help="results CSV")
    s.add_argument("--summary", help="summary JSON (default: <out>.summary.json)")
    s.add_argument("--workers", type=int)
    s.set_defaults(func=cmd_experiment)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"dirate: {exc}", file=sys.stderr)
        return exc.code
    except NoConvergence as exc:
        print(f"dirate: convergence failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except InnovationSingular as exc:
        print(f"dirate: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (ValidationError, SingularAtFrequency, OSError, json.JSONDecodeError) as exc:
        print(f"dirate: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NotPositiveDefinite as exc:
        print(f"dirate: {exc}", file=sys.stderr)
        return EXIT_SINGULAR
    except DIRateError as exc:  # pragma: no cover
        print(f"dirate: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE


if __name__ == "__main__":
    sys.exit(main())
