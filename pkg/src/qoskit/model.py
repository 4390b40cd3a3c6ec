"""Closed-form delay-jitter model for a single FCFS link with Poisson traffic.

The model predicts the mean absolute difference between the transit delays of
consecutive packets of a flow multiplexed through one FCFS queue, from three
quantities only: the link capacity C (packets/s), the total arrival rate
lambda (packets/s), and the load rho = lambda / C.

With x = (1 - rho) / rho, the default reading of the closed form is

    J = (1 - x * exp(-x) - exp(-2x)) / (C - lambda)        ("nonneg-v1")

which is positive on 0 < rho < 1 and tends to 1/C at both ends of the load
range. The low-load limit is forced physically: with an empty queue the delay
of each packet is its own service time, and the mean absolute difference of
two independent exponential service times with mean 1/C is exactly 1/C.

The expression is often printed with a trailing e^{+x} inside the bracket,

    J = (1 - exp(-x) * (x + exp(x))) / (C - lambda)        ("printed-literal")

which simplifies to -x * exp(-x) / (C - lambda) and is negative on the whole
stable range, impossible for a mean absolute value. That reading is kept,
behind the name "printed-literal", for documentation and comparison only.

Besides forward evaluation the module provides the loss/throughput identity
B = (lambda - X) / lambda and numeric inversion of the jitter curve for
planning: the largest sustainable load under a jitter budget at fixed
capacity, and the smallest capacity under a budget at fixed arrival rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import (
    DomainError,
    AccountingError,
    InfeasibleBudgetError,
    InstabilityError,
    UndefinedJitterError,
)

#: Default algebraic reading of the jitter formula.
DEFAULT_VARIANT = "nonneg-v1"

#: All supported readings.
VARIANTS = ("nonneg-v1", "printed-literal")

# Root-search configuration: robustness over speed, the curve is smooth and
# cheap to evaluate on the whole bracket.
_GRID_POINTS = 256
_REL_TOL = 1e-9
_MAX_ITER = 200
_LOAD_EPS = 1e-6          # lambda bracket: [eps * C, (1 - eps) * C]
_CAPACITY_EPS = 1e-6      # capacity bracket floor: (1 + eps) * lambda
_CAPACITY_CEILING = 1e6   # capacity bracket ceiling: 1e6 * lambda


@dataclass(frozen=True)
class LinkParams:
    """The (C, lambda, rho) triple describing one loaded link.

    Requires strict stability: 0 < lambda < C. The load is derived, never
    supplied.
    """

    capacity_C: float
    arrival_rate_lambda: float
    load_rho: float = field(init=False)

    def __post_init__(self):
        c = self.capacity_C
        lam = self.arrival_rate_lambda
        if not (isinstance(c, (int, float)) and math.isfinite(c) and c > 0):
            raise DomainError(f"capacity must be a positive finite rate, got {c!r}")
        if not (isinstance(lam, (int, float)) and math.isfinite(lam)):
            raise DomainError(f"arrival rate must be finite, got {lam!r}")
        if lam == 0:
            raise UndefinedJitterError(
                "arrival rate is zero: no consecutive packets exist, jitter undefined"
            )
        if lam < 0:
            raise DomainError(f"arrival rate must be non-negative, got {lam!r}")
        if lam >= c:
            raise InstabilityError(
                f"load {lam / c:.6g} >= 1: the queue is unstable, jitter diverges"
            )
        object.__setattr__(self, "load_rho", lam / c)

    @classmethod
    def from_rho(cls, capacity_C: float, load_rho: float) -> "LinkParams":
        """Build params from a load factor instead of an arrival rate."""
        if not (isinstance(load_rho, (int, float)) and math.isfinite(load_rho)):
            raise DomainError(f"load must be finite, got {load_rho!r}")
        if not (isinstance(capacity_C, (int, float)) and capacity_C > 0):
            raise DomainError(f"capacity must be positive, got {capacity_C!r}")
        return cls(capacity_C, load_rho * capacity_C)


@dataclass(frozen=True)
class JitterPrediction:
    """Predicted mean absolute delay variation, in seconds."""

    jitter_seconds: float
    params: LinkParams
    formula_variant: str


@dataclass(frozen=True)
class LossThroughputRecord:
    """One (arrival rate, throughput, loss) triple tied by B = (lambda - X) / lambda."""

    arrival_rate_lambda: float
    throughput_X: float
    loss_B: float

    @classmethod
    def from_throughput(cls, arrival_rate_lambda: float, throughput_X: float):
        return cls(
            arrival_rate_lambda,
            throughput_X,
            loss_from_throughput(arrival_rate_lambda, throughput_X),
        )

    @classmethod
    def from_loss(cls, arrival_rate_lambda: float, loss_B: float):
        return cls(
            arrival_rate_lambda,
            throughput_from_loss(arrival_rate_lambda, loss_B),
            loss_B,
        )


@dataclass(frozen=True)
class InversionResult:
    """Outcome of a planning inversion.

    ``constrained`` is False when the budget does not bind at the returned
    bracket endpoint (the jitter there is already at or below the budget).
    """

    value: float
    jitter_seconds: float
    constrained: bool


def offered_load(capacity_C: float, arrival_rate_lambda: float) -> float:
    """Load factor rho = lambda / C. Allows rho >= 1 (a plain ratio)."""
    if not (capacity_C > 0 and math.isfinite(capacity_C)):
        raise DomainError(f"capacity must be a positive finite rate, got {capacity_C!r}")
    if not (arrival_rate_lambda >= 0 and math.isfinite(arrival_rate_lambda)):
        raise DomainError(f"arrival rate must be non-negative, got {arrival_rate_lambda!r}")
    return arrival_rate_lambda / capacity_C


def capacity_from_bandwidth(bandwidth_bps: float, mean_packet_bits: float) -> float:
    """Convert a bit-rate bandwidth into a packet service rate C.

    The model works in packets/second with unit-mean packet sizes; this is
    the front end for callers who think in bits.
    """
    if not (bandwidth_bps > 0 and math.isfinite(bandwidth_bps)):
        raise DomainError(f"bandwidth must be positive, got {bandwidth_bps!r}")
    if not (mean_packet_bits > 0 and math.isfinite(mean_packet_bits)):
        raise DomainError(f"mean packet size must be positive, got {mean_packet_bits!r}")
    return bandwidth_bps / mean_packet_bits


def _shape_factor(x: float, variant: str) -> float:
    """Dimensionless bracket of the jitter formula, as a function of x = (1-rho)/rho."""
    if variant == "nonneg-v1":
        # exp(-2x) evaluated on the doubled argument rather than by squaring
        # exp(-x), so extreme loads underflow cleanly instead of rounding twice.
        return 1.0 - x * math.exp(-x) - math.exp(-2.0 * x)
    if variant == "printed-literal":
        # The literal bracket 1 - exp(-x) * (x + exp(x)) simplifies exactly to
        # -x * exp(-x); evaluating the simplification avoids overflowing the
        # e^{+x} term at low load while producing the same value.
        return -x * math.exp(-x)
    raise DomainError(f"unknown formula variant {variant!r}; expected one of {VARIANTS}")


def analytical_jitter(params: LinkParams, variant: str = DEFAULT_VARIANT) -> JitterPrediction:
    """Predict the mean absolute delay variation for one link.

    The result depends on traffic only through (C, lambda, rho) and scales
    as 1/C at fixed load.
    """
    x = (1.0 - params.load_rho) / params.load_rho
    shape = _shape_factor(x, variant)
    jitter = shape / (params.capacity_C - params.arrival_rate_lambda)
    return JitterPrediction(jitter_seconds=jitter, params=params, formula_variant=variant)


def loss_from_throughput(arrival_rate_lambda: float, throughput_X: float) -> float:
    """Loss probability B = (lambda - X) / lambda."""
    if not (arrival_rate_lambda > 0 and math.isfinite(arrival_rate_lambda)):
        raise DomainError(f"arrival rate must be positive, got {arrival_rate_lambda!r}")
    if not (throughput_X >= 0 and math.isfinite(throughput_X)):
        raise DomainError(f"throughput must be non-negative, got {throughput_X!r}")
    if throughput_X > arrival_rate_lambda:
        raise AccountingError(
            f"throughput {throughput_X!r} exceeds the arrival rate {arrival_rate_lambda!r}"
        )
    return (arrival_rate_lambda - throughput_X) / arrival_rate_lambda


def throughput_from_loss(arrival_rate_lambda: float, loss_B: float) -> float:
    """Throughput X = lambda * (1 - B); exact inverse of loss_from_throughput."""
    if not (arrival_rate_lambda > 0 and math.isfinite(arrival_rate_lambda)):
        raise DomainError(f"arrival rate must be positive, got {arrival_rate_lambda!r}")
    if not (0.0 <= loss_B <= 1.0):
        raise DomainError(f"loss probability must lie in [0, 1], got {loss_B!r}")
    return arrival_rate_lambda * (1.0 - loss_B)


@dataclass(frozen=True)
class ModelSweepRow:
    """One (rho, lambda, J) row of a model sweep."""

    load_rho: float
    arrival_rate_lambda: float
    jitter_seconds: float


def model_sweep(
    capacity_C: float, rho_grid, variant: str = DEFAULT_VARIANT
) -> list[ModelSweepRow]:
    """Evaluate the jitter curve over a load grid, one row per grid entry."""
    if not (capacity_C > 0 and math.isfinite(capacity_C)):
        raise DomainError(f"capacity must be positive, got {capacity_C!r}")
    rows = []
    for k, rho in enumerate(rho_grid):
        if not (0.0 < rho < 1.0):
            raise DomainError(f"rho_grid[{k}] = {rho!r} is outside (0, 1)")
        params = LinkParams.from_rho(capacity_C, rho)
        pred = analytical_jitter(params, variant)
        rows.append(ModelSweepRow(rho, params.arrival_rate_lambda, pred.jitter_seconds))
    return rows


def _jitter_at_load(capacity_C: float, lam: float, variant: str) -> float:
    return analytical_jitter(LinkParams(capacity_C, lam), variant).jitter_seconds


def invert_load_for_jitter(
    capacity_C: float, jitter_budget_seconds: float, variant: str = DEFAULT_VARIANT
) -> InversionResult:
    """Largest arrival rate in (0, C) whose predicted jitter meets the budget.

    The jitter curve over load is not monotone (it has an interior peak and an
    interior minimum), so the bracket is first sampled on a 256-point grid to
    locate the global minimum and the rightmost crossing. When the budget is
    met at the bracket ceiling the result carries constrained=False; when even
    the grid minimum exceeds the budget the inversion is infeasible.
    """
    if not (capacity_C > 0 and math.isfinite(capacity_C)):
        raise DomainError(f"capacity must be positive, got {capacity_C!r}")
    if not (jitter_budget_seconds > 0 and math.isfinite(jitter_budget_seconds)):
        raise DomainError(f"jitter budget must be positive, got {jitter_budget_seconds!r}")

    lo = _LOAD_EPS * capacity_C
    hi = (1.0 - _LOAD_EPS) * capacity_C
    grid = [lo + (hi - lo) * k / (_GRID_POINTS - 1) for k in range(_GRID_POINTS)]
    values = [_jitter_at_load(capacity_C, lam, variant) for lam in grid]

    if values[-1] <= jitter_budget_seconds:
        return InversionResult(hi, values[-1], constrained=False)

    j_min = min(values)
    if jitter_budget_seconds < j_min:
        k_min = values.index(j_min)
        raise InfeasibleBudgetError(
            f"budget {jitter_budget_seconds:.6g} s is below the attainable minimum "
            f"{j_min:.6g} s (at lambda = {grid[k_min]:.6g})",
            attained_min=j_min,
            at_value=grid[k_min],
        )

    # Rightmost grid point still within budget; the curve rises through the
    # budget somewhere in the next interval.
    k = max(i for i, v in enumerate(values) if v <= jitter_budget_seconds)
    lam_lo, lam_hi = grid[k], grid[k + 1]
    lam, jit = _bisect_to_budget(
        lambda lam: _jitter_at_load(capacity_C, lam, variant),
        lam_lo,
        lam_hi,
        jitter_budget_seconds,
    )
    return InversionResult(lam, jit, constrained=True)


def invert_capacity_for_jitter(
    arrival_rate_lambda: float, jitter_budget_seconds: float, variant: str = DEFAULT_VARIANT
) -> InversionResult:
    """Smallest capacity above lambda whose predicted jitter meets the budget.

    At fixed arrival rate the prediction decreases in capacity (the 1/(C -
    lambda) prefactor dominates the mild shape variation), so a plain
    bisection over C in ((1 + eps) * lambda, 1e6 * lambda] converges.
    """
    if arrival_rate_lambda == 0:
        raise UndefinedJitterError(
            "arrival rate is zero: no consecutive packets exist, jitter undefined"
        )
    if not (arrival_rate_lambda > 0 and math.isfinite(arrival_rate_lambda)):
        raise DomainError(f"arrival rate must be positive, got {arrival_rate_lambda!r}")
    if not (jitter_budget_seconds > 0 and math.isfinite(jitter_budget_seconds)):
        raise DomainError(f"jitter budget must be positive, got {jitter_budget_seconds!r}")

    lo = (1.0 + _CAPACITY_EPS) * arrival_rate_lambda
    hi = _CAPACITY_CEILING * arrival_rate_lambda
    j_hi = _jitter_at_load(hi, arrival_rate_lambda, variant)
    if j_hi > jitter_budget_seconds:
        raise InfeasibleBudgetError(
            f"budget {jitter_budget_seconds:.6g} s is below the attainable minimum "
            f"{j_hi:.6g} s (at capacity = {hi:.6g})",
            attained_min=j_hi,
            at_value=hi,
        )
    j_lo = _jitter_at_load(lo, arrival_rate_lambda, variant)
    if j_lo <= jitter_budget_seconds:
        return InversionResult(lo, j_lo, constrained=False)

    cap, jit = _bisect_to_budget(
        lambda c: _jitter_at_load(c, arrival_rate_lambda, variant),
        lo,
        hi,
        jitter_budget_seconds,
        feasible_side="hi",
    )
    return InversionResult(cap, jit, constrained=True)


def _bisect_to_budget(func, lo, hi, budget, feasible_side="lo"):
    """Bisect func(v) = budget on [lo, hi].

    One endpoint satisfies func <= budget (named by ``feasible_side``), the
    other exceeds it. Stops when the value matches the budget to _REL_TOL or
    the interval collapses; returns (v, func(v)) on the feasible side.
    """
    f_lo = func(lo)
    f_hi = func(hi)
    for _ in range(_MAX_ITER):
        mid = 0.5 * (lo + hi)
        f_mid = func(mid)
        if abs(f_mid - budget) <= _REL_TOL * budget:
            return mid, f_mid
        if (f_mid <= budget) == (feasible_side == "lo"):
            lo, f_lo = mid, f_mid
        else:
            hi, f_hi = mid, f_mid
        if hi - lo <= _REL_TOL * max(abs(lo), abs(hi)):
            break
    if feasible_side == "lo":
        return lo, f_lo
    return hi, f_hi
