"""Shared domain types: points, objectives, seeded randomness, traces, regions."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

Point = np.ndarray  # dense 1-D float64 vector

GRAD_TOL = 1e-12  # below this a gradient counts as vanished


def as_point(coords, dim: int | None = None) -> Point:
    """Validate and convert to a float64 vector with finite entries."""
    x = np.asarray(coords, dtype=np.float64)
    if x.ndim == 0:
        x = x.reshape(1)
    if x.ndim != 1 or x.size < 1:
        raise ValueError(f"point must be a 1-D vector, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("point has non-finite coordinates")
    if dim is not None and x.size != dim:
        raise ValueError(f"dimension mismatch: expected {dim}, got {x.size}")
    return x


# ---------------------------------------------------------------------------
# Seeded randomness
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RandomStream:
    """Splittable random stream.

    A stream is identified by (seed, path); substream(i) appends i to the
    path, so independent substreams can be derived per trial index without
    sharing state between concurrent tasks.  generator() always returns a
    fresh numpy Generator, so re-running a pipeline from the same stream
    reproduces every draw bit for bit.
    """

    seed: int
    path: tuple[int, ...] = ()

    def substream(self, index: int) -> RandomStream:
        return RandomStream(self.seed, self.path + (int(index),))

    def generator(self) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence(self.seed, spawn_key=self.path))


def seeded_stream(seed: int) -> RandomStream:
    """Root stream for a 64-bit seed."""
    return RandomStream(int(seed))


def sample_in_ball(gen: np.random.Generator, dim: int, radius: float = 1.0,
                   center: Point | None = None, n: int | None = None) -> np.ndarray:
    """Draw uniformly from a Euclidean ball; returns (dim,) or (n, dim)."""
    m = 1 if n is None else n
    u = gen.standard_normal((m, dim))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    r = radius * gen.random(m) ** (1.0 / dim)
    pts = u * r[:, None]
    if center is not None:
        pts = pts + np.asarray(center, dtype=np.float64)
    return pts[0] if n is None else pts


# ---------------------------------------------------------------------------
# Feasible regions and projection
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Ball:
    center: Point
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", as_point(self.center))
        if not self.radius > 0:
            raise ValueError("ball radius must be positive")

    @property
    def dim(self) -> int:
        return self.center.size

    def contains(self, x: Point, tol: float = 0.0) -> bool:
        return float(np.linalg.norm(x - self.center)) <= self.radius + tol

    def project(self, x: Point) -> Point:
        d = x - self.center
        r = float(np.linalg.norm(d))
        if r <= self.radius:
            return x
        return self.center + d * (self.radius / r)


@dataclass(frozen=True, eq=False)
class Box:
    lower: Point
    upper: Point

    def __post_init__(self):
        object.__setattr__(self, "lower", as_point(self.lower))
        object.__setattr__(self, "upper", as_point(self.upper, self.lower.size))
        if np.any(self.lower > self.upper):
            raise ValueError("box lower bound exceeds upper bound")

    @property
    def dim(self) -> int:
        return self.lower.size

    def contains(self, x: Point, tol: float = 0.0) -> bool:
        return bool(np.all(x >= self.lower - tol) and np.all(x <= self.upper + tol))

    def project(self, x: Point) -> Point:
        if self.contains(x):
            return x
        return np.clip(x, self.lower, self.upper)


FeasibleRegion = Ball | Box


def project(region: FeasibleRegion, x: Point) -> Point:
    """Euclidean projection onto a ball or box; identity on feasible points."""
    x = as_point(x, region.dim)
    return region.project(x)


# ---------------------------------------------------------------------------
# Objectives
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Objective:
    """Deterministic differentiable function with value/gradient queries.

    direction_oracle, when present, replaces the gradient as the descent
    direction (useful for piecewise-constant losses such as the zero-one
    error, where the true gradient vanishes almost everywhere).
    """

    dim: int
    value: Callable[[Point], float]
    gradient: Callable[[Point], Point]
    direction_oracle: Callable[[Point], Point] | None = None
    domain: FeasibleRegion | None = None

    def direction(self, x: Point) -> Point:
        oracle = self.direction_oracle or self.gradient
        return oracle(x)


@dataclass(frozen=True, eq=False)
class MinibatchFn:
    """Arithmetic mean of a drawn batch of component functions.

    value/gradient are the exact means of the component values/gradients.
    component_values exposes the individual terms; meta records the draws
    that generated the batch (indices, noise, branch choices).
    """

    dim: int
    size: int
    value: Callable[[Point], float]
    gradient: Callable[[Point], Point]
    component_values: Callable[[Point], np.ndarray] | None = None
    meta: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class StochasticObjective:
    """Distribution over component functions with seeded minibatch draws.

    sample_minibatch(gen, b) averages b independent component draws.
    expected, when known in closed form, is the population objective;
    bound_M is a uniform bound on |component value| (inf if unbounded).
    """

    dim: int
    sample_minibatch: Callable[[np.random.Generator, int], MinibatchFn]
    expected: Objective | None = None
    bound_M: float = math.inf
    minimizer: Point | None = None


def constant_distribution(f: Objective) -> StochasticObjective:
    """Zero-variance distribution: every minibatch is f itself."""

    def sample(gen: np.random.Generator, b: int) -> MinibatchFn:
        return MinibatchFn(
            dim=f.dim,
            size=b,
            value=f.value,
            gradient=f.gradient,
            component_values=lambda x: np.full(b, f.value(x)),
        )

    return StochasticObjective(dim=f.dim, sample_minibatch=sample, expected=f)


def scaled(f: Objective, c: float) -> Objective:
    """The objective c*f (same minimizers for c > 0)."""
    return Objective(
        dim=f.dim,
        value=lambda x: c * f.value(x),
        gradient=lambda x: c * f.gradient(x),
        direction_oracle=(lambda x: c * f.direction_oracle(x)) if f.direction_oracle else None,
        domain=f.domain,
    )


def line_restriction(f: Objective, x0, direction) -> Objective:
    """Restrict f to the line t -> f(x0 + t*u); a 1-D objective."""
    x0 = as_point(x0, f.dim)
    u = as_point(direction, f.dim)

    def value(t: Point) -> float:
        return f.value(x0 + float(t[0]) * u)

    def gradient(t: Point) -> Point:
        return np.array([float(np.dot(f.gradient(x0 + float(t[0]) * u), u))])

    return Objective(dim=1, value=value, gradient=gradient)


def finite_diff_gradient(f: Objective, x: Point, h: float = 1e-5) -> Point:
    """Central-difference gradient, one coordinate at a time."""
    if not h > 0:
        raise ValueError("step h must be positive")
    x = as_point(x, f.dim)
    g = np.empty(f.dim)
    for i in range(f.dim):
        e = np.zeros(f.dim)
        e[i] = h
        fp, fm = f.value(x + e), f.value(x - e)
        if not (math.isfinite(fp) and math.isfinite(fm)):
            raise ValueError(f"non-finite function value near coordinate {i}")
        g[i] = (fp - fm) / (2.0 * h)
    return g


# ---------------------------------------------------------------------------
# Optimization traces
# ---------------------------------------------------------------------------


def _fmt(x: float) -> str:
    return format(x, ".17g")


@dataclass(eq=False)
class OptTrace:
    """Per-iteration record of an optimizer run.

    values holds f_t(x_t) for stochastic runs and f(x_t) otherwise.
    returned is the iterate with the smallest recorded value (earliest
    index on ties); aborted marks runs cut short by a non-finite value
    or gradient.
    """

    iterates: np.ndarray          # (T, dim)
    values: np.ndarray            # (T,)
    grad_norms: np.ndarray        # (T,)
    returned: Point
    returned_index: int
    minibatch_ids: np.ndarray | None = None
    aborted: bool = False

    def __len__(self) -> int:
        return self.values.size

    @property
    def dim(self) -> int:
        return self.iterates.shape[1]

    def write_csv(self, path) -> None:
        """Bit-stable CSV: t, value, grad_norm, coord_0..; 17 significant digits."""
        cols = ["t", "value", "grad_norm"] + [f"coord_{i}" for i in range(self.dim)]
        with open(path, "w", newline="") as fh:
            fh.write(",".join(cols) + "\n")
            for t in range(len(self)):
                row = [str(t), _fmt(self.values[t]), _fmt(self.grad_norms[t])]
                row += [_fmt(c) for c in self.iterates[t]]
                fh.write(",".join(row) + "\n")

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "returned_index": int(self.returned_index),
            "returned": self.returned.tolist(),
            "aborted": self.aborted,
            "values": self.values.tolist(),
            "grad_norms": self.grad_norms.tolist(),
            "iterates": self.iterates.tolist(),
            "minibatch_ids": None if self.minibatch_ids is None else self.minibatch_ids.tolist(),
        }

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)
            fh.write("\n")


def build_trace(iterates, values, grad_norms, minibatch_ids=None, aborted=False) -> OptTrace:
    """Assemble a trace; picks the returned iterate by the first-argmin rule."""
    values = np.asarray(values, dtype=np.float64)
    iterates = np.asarray(iterates, dtype=np.float64)
    grad_norms = np.asarray(grad_norms, dtype=np.float64)
    finite = np.isfinite(values)
    if finite.all():
        idx = int(np.argmin(values))
    elif finite.any():
        masked = np.where(finite, values, np.inf)
        idx = int(np.argmin(masked))
    else:
        idx = 0
    return OptTrace(
        iterates=iterates,
        values=values,
        grad_norms=grad_norms,
        returned=iterates[idx].copy(),
        returned_index=idx,
        minibatch_ids=None if minibatch_ids is None else np.asarray(minibatch_ids, dtype=np.int64),
        aborted=aborted,
    )
