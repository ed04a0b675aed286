"""Normalized gradient descent, its stochastic minibatch variant, and baselines."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    GRAD_TOL,
    FeasibleRegion,
    Objective,
    OptTrace,
    Point,
    RandomStream,
    StochasticObjective,
    as_point,
    build_trace,
    seeded_stream,
)


@dataclass(frozen=True, kw_only=True, eq=False)
class NgdConfig:
    """Normalized-descent run: T steps of length eta from x1.

    For an (eps, kappa, z)-SLQC objective the guarantee budget is
    eta = eps/kappa and T >= kappa^2 * ||x1 - z||^2 / eps^2; for a
    beta-smooth strictly quasi-convex objective, eta = sqrt(2*eps/beta)
    and T >= beta * ||x1 - z||^2 / (2*eps).
    """

    T: int
    eta: float
    x1: Point
    region: FeasibleRegion | None = None
    grad_tol: float = GRAD_TOL

    def __post_init__(self):
        object.__setattr__(self, "x1", as_point(self.x1))
        if self.T < 1:
            raise ValueError("T must be >= 1")
        if not self.eta > 0:
            raise ValueError("eta must be positive")
        if self.grad_tol < 0:
            raise ValueError("grad_tol must be >= 0")


@dataclass(frozen=True, kw_only=True, eq=False)
class SngdConfig(NgdConfig):
    """NgdConfig plus a minibatch size and the stream feeding the draws."""

    b: int = 1
    stream: RandomStream = seeded_stream(0)

    def __post_init__(self):
        super().__post_init__()
        if self.b < 1:
            raise ValueError("minibatch size b must be >= 1")


@dataclass(frozen=True)
class StepSchedule:
    """Step sizes eta_t = eta0 * (1 + gamma*t)^(-exponent), t counted from 1.

    gamma = 0 gives a constant step.  momentum is consumed by the
    look-ahead baseline only.
    """

    eta0: float
    gamma: float = 0.0
    exponent: float = 0.75
    momentum: float = 0.0

    def __post_init__(self):
        if not self.eta0 > 0:
            raise ValueError("eta0 must be positive")
        if self.gamma < 0 or self.exponent < 0:
            raise ValueError("gamma and exponent must be >= 0")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must lie in [0, 1)")

    @classmethod
    def constant(cls, eta: float, momentum: float = 0.0) -> StepSchedule:
        return cls(eta0=eta, momentum=momentum)

    @classmethod
    def polynomial(cls, eta0: float, gamma: float, exponent: float = 0.75,
                   momentum: float = 0.0) -> StepSchedule:
        return cls(eta0=eta0, gamma=gamma, exponent=exponent, momentum=momentum)

    def step_size(self, t: int) -> float:
        if self.gamma == 0.0:
            return self.eta0
        return self.eta0 * (1.0 + self.gamma * t) ** (-self.exponent)


# ---------------------------------------------------------------------------
# Normalized descent core
# ---------------------------------------------------------------------------


def _normalized_descent(dim: int, cfg: NgdConfig, query) -> OptTrace:
    """Shared loop: query(t, x) -> (value, direction, batch_id).

    Records the iterate before each update.  A direction of norm <= grad_tol
    skips the update (the iterate is kept and recorded); a non-finite value
    or direction aborts the run with the trace so far flagged.
    """
    T = cfg.T
    x = as_point(cfg.x1, dim)
    if cfg.region is not None:
        x = cfg.region.project(x)
    iterates = np.empty((T, dim))
    values = np.empty(T)
    grad_norms = np.empty(T)
    batch_ids = np.empty(T, dtype=np.int64)
    aborted = False
    steps = 0
    for t in range(T):
        value, g, bid = query(t, x)
        gn = math.sqrt(float(np.dot(g, g)))
        iterates[t] = x
        values[t] = value
        grad_norms[t] = gn
        batch_ids[t] = bid
        steps = t + 1
        if not (math.isfinite(value) and math.isfinite(gn)):
            aborted = True
            break
        if gn <= cfg.grad_tol:
            continue
        x = x - (cfg.eta / gn) * g
        if cfg.region is not None:
            x = cfg.region.project(x)
    has_batches = bool(batch_ids[:steps].size) and batch_ids[:steps].max() >= 0
    return build_trace(
        iterates[:steps], values[:steps], grad_norms[:steps],
        minibatch_ids=batch_ids[:steps] if has_batches else None,
        aborted=aborted,
    )


def ngd(f: Objective, cfg: NgdConfig) -> OptTrace:
    """Normalized gradient descent: x <- x - eta * g/||g||.

    Steps have length exactly eta, so plateaus (tiny gradients) and cliffs
    (huge gradients) advance at the same rate.  Returns the iterate with the
    smallest recorded value.  Iterates where the gradient vanishes (within
    grad_tol) are recorded and the update is skipped: at such points an SLQC
    objective is already eps-optimal.
    """

    def query(t: int, x: Point):
        return f.value(x), f.gradient(x), -1

    return _normalized_descent(f.dim, cfg, query)


def ngd_with_oracle(f: Objective, cfg: NgdConfig) -> OptTrace:
    """Normalized descent along a direction oracle instead of the gradient."""
    if f.direction_oracle is None:
        raise ValueError("objective has no direction oracle")

    def query(t: int, x: Point):
        return f.value(x), f.direction_oracle(x), -1

    return _normalized_descent(f.dim, cfg, query)


def sngd(F: StochasticObjective, cfg: SngdConfig) -> OptTrace:
    """Stochastic normalized gradient descent on fresh minibatches.

    Each iteration draws a size-b minibatch f_t from the config's stream and
    takes a normalized step along its gradient.  The recorded values are the
    minibatch values f_t(x_t), and the returned iterate minimizes those
    minibatch values, not the population objective; use evaluate_iterates to
    re-score a trace against the expected objective for reporting.  On a
    vanished minibatch gradient the iterate stays put but the next iteration
    still draws a fresh minibatch.
    """
    gen = cfg.stream.generator()

    def query(t: int, x: Point):
        fb = F.sample_minibatch(gen, cfg.b)
        return fb.value(x), fb.gradient(x), t

    return _normalized_descent(F.dim, cfg, query)


def evaluate_iterates(trace: OptTrace, f: Objective) -> np.ndarray:
    """Re-score every recorded iterate under f (reporting aid; the trace is unchanged)."""
    return np.array([f.value(trace.iterates[t]) for t in range(len(trace))])


# ---------------------------------------------------------------------------
# Unnormalized baselines
# ---------------------------------------------------------------------------


def _unnormalized_descent(dim: int, x1, T: int, schedule: StepSchedule, query,
                          momentum: float = 0.0) -> OptTrace:
    """Baseline loop; with momentum > 0 uses the classic look-ahead form."""
    if T < 1:
        raise ValueError("T must be >= 1")
    x = as_point(x1, dim)
    v = np.zeros(dim)
    iterates = np.empty((T, dim))
    values = np.empty(T)
    grad_norms = np.empty(T)
    batch_ids = np.empty(T, dtype=np.int64)
    aborted = False
    steps = 0
    for t in range(T):
        eta = schedule.step_size(t + 1)
        if momentum > 0.0:
            value, _, bid = query(t, x)
            _, g, _ = query(t, x + momentum * v)
            v = momentum * v - eta * g
            x_next = x + v
        else:
            value, g, bid = query(t, x)
            x_next = x - eta * g
        gn = float(np.linalg.norm(g))
        iterates[t] = x
        values[t] = value
        grad_norms[t] = gn
        batch_ids[t] = bid
        steps = t + 1
        if not (math.isfinite(value) and math.isfinite(gn)):
            aborted = True
            break
        x = x_next
    has_batches = bool(batch_ids[:steps].size) and batch_ids[:steps].max() >= 0
    return build_trace(
        iterates[:steps], values[:steps], grad_norms[:steps],
        minibatch_ids=batch_ids[:steps] if has_batches else None,
        aborted=aborted,
    )


def gd(f: Objective, schedule: StepSchedule, T: int, x1) -> OptTrace:
    """Plain gradient descent with a step schedule."""

    def query(t: int, x: Point):
        return f.value(x), f.gradient(x), -1

    return _unnormalized_descent(f.dim, x1, T, schedule, query)


def msgd(F: StochasticObjective, schedule: StepSchedule, T: int, x1, b: int,
         stream: RandomStream) -> OptTrace:
    """Minibatch stochastic gradient descent (no normalization)."""
    if b < 1:
        raise ValueError("minibatch size b must be >= 1")
    gen = stream.generator()
    cache: dict[int, object] = {}

    def query(t: int, x: Point):
        if t not in cache:
            cache.clear()
            cache[t] = F.sample_minibatch(gen, b)
        fb = cache[t]
        return fb.value(x), fb.gradient(x), t

    return _unnormalized_descent(F.dim, x1, T, schedule, query)


def sgd(F: StochasticObjective, schedule: StepSchedule, T: int, x1,
        stream: RandomStream) -> OptTrace:
    """Single-sample stochastic gradient descent."""
    return msgd(F, schedule, T, x1, 1, stream)


def nesterov(F: StochasticObjective, schedule: StepSchedule, T: int, x1, b: int,
             stream: RandomStream) -> OptTrace:
    """Stochastic look-ahead momentum baseline.

    v <- mu*v - eta_t * grad f_t(x + mu*v); x <- x + v, with mu taken from
    the schedule's momentum field.  One minibatch per iteration scores the
    current iterate and supplies the look-ahead gradient.
    """
    if b < 1:
        raise ValueError("minibatch size b must be >= 1")
    gen = stream.generator()
    cache: dict[int, object] = {}

    def query(t: int, x: Point):
        if t not in cache:
            cache.clear()
            cache[t] = F.sample_minibatch(gen, b)
        fb = cache[t]
        return fb.value(x), fb.gradient(x), t

    return _unnormalized_descent(F.dim, x1, T, schedule, query,
                                 momentum=schedule.momentum)
