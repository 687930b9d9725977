"""High-probability error radius for the rate estimate.

With ``x = log(2/nu)/M + n_W (1+p) log(13)/M`` the concentration radius of the
empirical block covariance is

    eps = 2 c_max max{ 8 (p+1) x, sqrt(8 (2p+1) x) },

and, whenever ``eps < c_min``, with probability at least ``1 - nu``

    |I - I~| <= n_Y / (c_min - eps)
                * (tail + eps (1 + (c_max + eps)^2 / (c_min - eps)^2)),

where ``tail = c_max b^2 rho^(2(p+1)) / (1 - rho)^2`` is the truncation error
of a ``p``-lag predictor. The constants are used verbatim.
"""
import math
from dataclasses import asdict, dataclass
from typing import NamedTuple

from .errors import BadRule, ValidationError
from .model import DEFAULT_PSD_GRID, psd_bounds
from .prediction import joint_predictor_params

LOG13 = math.log(13.0)


@dataclass(frozen=True)
class BoundParams:
    nu: float
    N: int
    p: int
    n_w: int
    n_y: int
    c_min: float
    c_max: float
    rho: float
    b: float

    def __post_init__(self):
        if not 0.0 < self.nu < 1.0:
            raise ValidationError(f"nu must lie in (0, 1), got {self.nu}")
        if self.p < 1 or self.N - self.p < 1:
            raise ValidationError(f"need p >= 1 and M = N - p >= 1 (N = {self.N}, p = {self.p})")
        if not 0.0 < self.c_min <= self.c_max:
            raise ValidationError(f"need 0 < c_min <= c_max, got {self.c_min}, {self.c_max}")
        if not 0.0 < self.rho < 1.0:
            raise ValidationError(f"rho must lie in (0, 1), got {self.rho}")
        if self.b < 0.0:
            raise ValidationError(f"b must be nonnegative, got {self.b}")

    @property
    def M(self):
        return self.N - self.p

    def to_dict(self):
        d = asdict(self)
        d["M"] = self.M
        return d


@dataclass(frozen=True)
class ErrorBound:
    epsilon: float
    tail_term: float
    total: float
    valid: bool
    params: BoundParams

    def to_dict(self):
        return {
            "epsilon": self.epsilon,
            "tail_term": self.tail_term,
            "total": self.total if math.isfinite(self.total) else "inf",
            "valid": self.valid,
            "params": self.params.to_dict(),
        }


def epsilon(params):
    x = (math.log(2.0 / params.nu) + params.n_w * (1 + params.p) * LOG13) / params.M
    linear = (params.p + 1) * 8.0 * x
    root = math.sqrt((2 * params.p + 1) * 8.0 * x)
    return 2.0 * params.c_max * max(linear, root)


def tail_term(params):
    return params.c_max * params.b ** 2 * params.rho ** (2 * (params.p + 1)) / (1.0 - params.rho) ** 2


def total_error_bound(params):
    """Error radius; ``total`` is ``inf`` and ``valid`` False when ``eps >= c_min``."""
    eps = epsilon(params)
    tail = tail_term(params)
    if not eps < params.c_min:
        return ErrorBound(eps, tail, math.inf, False, params)
    gap = params.c_min - eps
    total = params.n_y / gap * (tail + eps * (1.0 + (params.c_max + eps) ** 2 / gap ** 2))
    return ErrorBound(eps, tail, total, True, params)


class ModelConstants(NamedTuple):
    """Model-dependent inputs to the bound; ``c_min``/``c_max`` are grid values."""

    c_min: float
    c_max: float
    rho: float
    b: float
    grid_size: int


def model_constants(model, grid=DEFAULT_PSD_GRID):
    psd = psd_bounds(model, grid)
    pred = joint_predictor_params(model)
    return ModelConstants(psd.c_min, psd.c_max, pred.rho, pred.b, psd.grid_size)


def params_from_model(model, N, p, nu, constants=None):
    c = constants if constants is not None else model_constants(model)
    return BoundParams(
        nu=float(nu),
        N=int(N),
        p=int(p),
        n_w=model.n_w,
        n_y=model.partition.n_y,
        c_min=c.c_min,
        c_max=c.c_max,
        rho=c.rho,
        b=c.b,
    )


class PChoice(NamedTuple):
    p: int
    clamped: bool


def parse_rule(rule):
    """Normalize a lag rule to ``(kind, arg)``.

    Accepts ``("fixed", p)``, ``("log", a)``, ``("polylog", None)`` or the
    strings ``"fixed:7"``, ``"log:1.5"``, ``"log"`` (a = 1) and ``"polylog"``.
    """
    if isinstance(rule, str):
        kind, _, arg = rule.partition(":")
        kind = kind.strip().lower()
        try:
            if kind == "fixed":
                return "fixed", int(arg)
            if kind == "log":
                return "log", float(arg) if arg else 1.0
        except ValueError:
            raise BadRule(f"bad lag rule {rule!r}") from None
        if kind == "polylog" and not arg:
            return "polylog", None
        raise BadRule(f"unknown lag rule {rule!r}")
    try:
        kind, arg = rule
    except (TypeError, ValueError):
        raise BadRule(f"unknown lag rule {rule!r}") from None
    return parse_rule(f"{kind}:{arg}" if arg is not None else str(kind))


def choose_p(N, rule):
    """Lag order from a rule, clamped to ``[1, floor(N/4)]``."""
    if N < 8:
        raise ValidationError(f"choose_p needs N >= 8, got {N}")
    kind, arg = parse_rule(rule)
    if kind == "fixed":
        p = arg
    elif kind == "log":
        if arg <= 0:
            raise BadRule("log rule needs a positive multiplier")
        p = math.ceil(arg * math.log(N))
    else:
        p = math.ceil(math.log(N) ** 2)
    lo, hi = 1, N // 4
    clamped = not lo <= p <= hi
    return PChoice(min(max(p, lo), hi), clamped)
