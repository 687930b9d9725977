"""Monte Carlo experiments: error-vs-N scaling and bound coverage.

Each trial's seed is a pure function of ``(master_seed, N, trial)`` through
numpy's ``SeedSequence`` hash, so the result table does not depend on how
trials are scheduled across workers.
"""
import csv
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .bounds import choose_p, model_constants, params_from_model, parse_rule, total_error_bound
from .errors import DIRateError, InsufficientData, ValidationError
from .estimator import di_rate_estimate
from .model import VarModel, load_model, reference_model, simulate, validate_model
from .prediction import exact_di_rate

RESULTS_HEADER = ["N", "p", "seed", "I_hat", "abs_err", "bound", "valid", "covered"]


@dataclass(frozen=True)
class ScalingConfig:
    model: VarModel
    N_values: Tuple[int, ...]
    trials: int
    p_rule: object = "log:1"
    nu: float = 0.1
    seed: int = 0
    subtract_mean: bool = True
    workers: int = 1
    model_name: str = ""

    def __post_init__(self):
        Ns = tuple(int(n) for n in self.N_values)
        if not Ns or any(b <= a for a, b in zip(Ns, Ns[1:])):
            raise ValidationError(f"N values must be nonempty and strictly increasing, got {Ns}")
        if self.trials < 1:
            raise ValidationError("trials must be at least 1")
        parse_rule(self.p_rule)
        object.__setattr__(self, "N_values", Ns)

    @classmethod
    def from_dict(cls, d, base_dir="."):
        """Build from the experiment JSON.

        ``model`` may be a reference-model name (``"W2"``), a path to a model
        JSON file (relative to ``base_dir``), or an inline model object.
        """
        try:
            spec = d["model"]
            if isinstance(spec, str):
                try:
                    model, name = reference_model(spec), spec
                except KeyError:
                    model, name = load_model(os.path.join(base_dir, spec)), spec
            else:
                model, name = validate_model(spec), "inline"
            return cls(
                model=model,
                N_values=tuple(d["N"]),
                trials=int(d.get("trials", 30)),
                p_rule=d.get("p_rule", "log:1"),
                nu=float(d.get("nu", 0.1)),
                seed=int(d.get("seed", 0)),
                subtract_mean=bool(d.get("subtract_mean", True)),
                workers=int(d.get("workers", 1)),
                model_name=name,
            )
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed experiment config: {exc}") from None


@dataclass(frozen=True)
class TrialRecord:
    N: int
    p: int
    seed: int
    I_hat: float
    abs_err: float
    bound: float
    valid: bool
    covered: bool
    error: Optional[str] = None

    @property
    def ok(self):
        return self.error is None


def trial_seed(master, N, trial):
    """64-bit seed mixed from ``(master, N, trial)``."""
    ss = np.random.SeedSequence(entropy=int(master), spawn_key=(int(N), int(trial)))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def run_scaling_experiment(cfg, truth=None, constants=None):
    """Simulate, estimate and bound every ``(N, trial)`` pair of ``cfg``.

    Returns the records ordered by N, then trial index. Estimator failures are
    kept as records with ``error`` set rather than aborting the run.
    """
    model = cfg.model
    if truth is None:
        truth = exact_di_rate(model).value
    if constants is None:
        constants = model_constants(model)

    plan = {}
    for N in cfg.N_values:
        p = choose_p(N, cfg.p_rule).p
        plan[N] = (p, total_error_bound(params_from_model(model, N, p, cfg.nu, constants)))
    jobs = [(N, t) for N in cfg.N_values for t in range(cfg.trials)]

    def run(job):
        N, t = job
        p, bound = plan[N]
        seed = trial_seed(cfg.seed, N, t)
        try:
            est = di_rate_estimate(simulate(model, N, seed), model.partition, p, cfg.subtract_mean)
        except DIRateError as exc:
            return TrialRecord(N, p, seed, math.nan, math.nan, bound.total, bound.valid, False,
                               type(exc).__name__)
        err = abs(est.value - truth)
        return TrialRecord(N, p, seed, est.value, err, bound.total, bound.valid,
                           bool(bound.valid and err <= bound.total))

    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            return list(pool.map(run, jobs))
    return [run(j) for j in jobs]


def _per_n(records):
    groups = {}
    for r in records:
        groups.setdefault(r.N, []).append(r)
    return dict(sorted(groups.items()))


def fit_log_slope(records, statistic="median"):
    """Least-squares slope of ``log(statistic of |error|)`` against ``log N``."""
    agg = {"median": np.median, "mean": np.mean}.get(statistic)
    if agg is None:
        raise ValueError(f"statistic must be 'median' or 'mean', got {statistic!r}")
    xs, ys = [], []
    for N, group in _per_n(records).items():
        errs = [r.abs_err for r in group if r.ok and math.isfinite(r.abs_err)]
        if errs:
            s = float(agg(errs))
            if s <= 0:
                raise InsufficientData(f"{statistic} error at N = {N} is zero; log undefined")
            xs.append(math.log(N))
            ys.append(math.log(s))
    if len(xs) < 3:
        raise InsufficientData(f"need at least 3 N values with successful trials, have {len(xs)}")
    slope, _ = np.polyfit(xs, ys, 1)
    return float(slope)


def coverage(records):
    """Fraction of trials whose error radius is valid and contains the error."""
    if not records:
        raise ValueError("coverage of an empty table")
    return sum(r.covered for r in records) / len(records)


def summarize(records, cfg, truth):
    per_n = []
    for N, group in _per_n(records).items():
        errs = [r.abs_err for r in group if r.ok]
        per_n.append({
            "N": N,
            "p": group[0].p,
            "trials": len(group),
            "failed": sum(not r.ok for r in group),
            "median_abs_err": float(np.median(errs)) if errs else None,
            "mean_abs_err": float(np.mean(errs)) if errs else None,
            "bound": group[0].bound if math.isfinite(group[0].bound) else "inf",
            "bound_valid": group[0].valid,
            "coverage": coverage(group),
        })
    try:
        slope = fit_log_slope(records, "median")
    except InsufficientData:
        slope = None
    return {
        "model": cfg.model_name,
        "true_rate_nats": truth,
        "nu": cfg.nu,
        "p_rule": cfg.p_rule if isinstance(cfg.p_rule, str) else list(cfg.p_rule),
        "seed": cfg.seed,
        "per_N": per_n,
        "slope_median": slope,
        "coverage": coverage(records),
        "failed_trials": sum(not r.ok for r in records),
        "total_trials": len(records),
    }


def _fmt(x):
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return repr(x)
    return str(x)


def write_results_csv(records, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULTS_HEADER)
        for r in records:
            w.writerow([_fmt(getattr(r, k)) for k in RESULTS_HEADER])


def read_results_csv(path):
    def parse_bool(s):
        return s == "true"

    out = []
    with open(path, encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            I_hat = float(row["I_hat"])
            out.append(TrialRecord(
                int(row["N"]), int(row["p"]), int(row["seed"]), I_hat, float(row["abs_err"]),
                float(row["bound"]), parse_bool(row["valid"]), parse_bool(row["covered"]),
                None if math.isfinite(I_hat) else "failed",
            ))
    return out


def dump_json(obj, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(canonical_json(obj))


def canonical_json(obj):
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"
