"""Synthetic objectives and loss distributions used by the optimizers and checkers."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .core import (
    Ball,
    Box,
    MinibatchFn,
    Objective,
    Point,
    RandomStream,
    StochasticObjective,
    as_point,
    sample_in_ball,
)


def sigmoid(z):
    """Logistic function, overflow-safe for any finite argument."""
    z = np.asarray(z, dtype=np.float64)
    e = np.exp(-np.abs(z))
    out = np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    return out if out.ndim else float(out)


def sigmoid_prime(z):
    s = sigmoid(z)
    return s * (1.0 - s)


def _sig(z: float) -> float:
    # scalar fast path for tight optimizer loops
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


# ---------------------------------------------------------------------------
# Sum of two sigmoids on a box: unimodal but not quasi-convex
# ---------------------------------------------------------------------------

SIGMOID_SUM_MINIMIZER = np.array([-10.0, -10.0])
SIGMOID_SUM_DOMAIN = Box([-10.0, -10.0], [10.0, 10.0])

# Two points of the 1.2-sublevel set whose midpoint (log 2, log 2) has value
# 4/3 > 1.2, witnessing that the sublevel set is not convex.
SIGMOID_SUM_SUBLEVEL_WITNESS = (
    np.array([math.log(16.0), -math.log(4.0)]),
    np.array([-math.log(4.0), math.log(16.0)]),
)


def make_sigmoid_sum() -> Objective:
    """sig(x0) + sig(x1) on [-10, 10]^2.

    The only minimum on the box is the corner (-10, -10); there are no other
    local minima, yet the function is not quasi-convex (its 1.2-sublevel set
    is not convex).
    """

    def value(x: Point) -> float:
        return _sig(float(x[0])) + _sig(float(x[1]))

    def gradient(x: Point) -> Point:
        s0 = _sig(float(x[0]))
        s1 = _sig(float(x[1]))
        return np.array([s0 * (1.0 - s0), s1 * (1.0 - s1)])

    return Objective(dim=2, value=value, gradient=gradient, domain=SIGMOID_SUM_DOMAIN)


# ---------------------------------------------------------------------------
# Plateau / cliff landscape (1-D)
# ---------------------------------------------------------------------------


def make_cliff_plateau(valley_width: float = 0.5, cliff_height: float = 1.0,
                       plateau_slope: float = 1e-6, cliff_slope: float = 1e3,
                       valley_slope: float = 1.0) -> Objective:
    """Symmetric piecewise-linear landscape: valley, steep cliffs, flat plateaus.

    From the origin outward: a V-shaped valley of total width valley_width
    and slope valley_slope, then a cliff segment of slope cliff_slope rising
    by cliff_height, then a near-flat plateau of slope plateau_slope.  The
    global minimum is 0 at the origin and the function is nondecreasing in
    |x|, hence quasi-convex.  Fixed-step gradient descent either stalls on
    the plateaus or overshoots at the cliffs; normalized steps do neither.

    This is one concrete parameterization of the landscape; the qualitative
    failure modes do not depend on the exact constants.  Subgradients at the
    kinks take the inner branch.
    """
    if not valley_width > 0:
        raise ValueError("valley_width must be positive")
    if not cliff_height > 0 or not cliff_slope > 0:
        raise ValueError("cliff_height and cliff_slope must be positive")
    if plateau_slope < 0 or valley_slope <= 0:
        raise ValueError("need plateau_slope >= 0 and valley_slope > 0")
    a = valley_width / 2.0
    delta = cliff_height / cliff_slope

    def value(x: Point) -> float:
        u = abs(float(x[0]))
        if u <= a:
            return valley_slope * u
        if u <= a + delta:
            return valley_slope * a + cliff_slope * (u - a)
        return valley_slope * a + cliff_height + plateau_slope * (u - a - delta)

    def gradient(x: Point) -> Point:
        t = float(x[0])
        u = abs(t)
        if u == 0.0:
            return np.array([0.0])
        if u <= a:
            s = valley_slope
        elif u <= a + delta:
            s = cliff_slope
        else:
            s = plateau_slope
        return np.array([math.copysign(s, t)])

    return Objective(dim=1, value=value, gradient=gradient)


def cliff_plateau_kinks(valley_width: float = 0.5, cliff_height: float = 1.0,
                        cliff_slope: float = 1e3) -> tuple[float, float]:
    """Positive kink locations (valley edge, cliff top) of the landscape above."""
    a = valley_width / 2.0
    return a, a + cliff_height / cliff_slope


# ---------------------------------------------------------------------------
# Sigmoid regression (GLM) datasets and empirical error
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class GlmDataset:
    """Regression samples (x_i, y_i) with y in [0, 1] and a weight-norm bound W.

    Generated datasets keep ||x_i|| <= 1; the type itself only enforces the
    label range so that hand-built instances (e.g. the non-quasi-convexity
    witness, whose points have norm log 4) remain representable.
    """

    X: np.ndarray               # (m, d)
    y: np.ndarray               # (m,)
    W: float
    planted: Point | None = None
    seed: int | None = None

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.float64)
        if self.X.ndim != 2 or self.y.shape != (self.X.shape[0],):
            raise ValueError("X must be (m, d) with matching y of length m")
        if np.any(self.y < 0) or np.any(self.y > 1):
            raise ValueError("labels must lie in [0, 1]")
        if not self.W > 0:
            raise ValueError("W must be positive")
        if self.planted is not None:
            self.planted = as_point(self.planted, self.X.shape[1])

    @property
    def m(self) -> int:
        return self.X.shape[0]

    @property
    def dim(self) -> int:
        return self.X.shape[1]


def glm_objective(ds: GlmDataset) -> Objective:
    """Mean squared sigmoid-regression error over the dataset."""
    X, y, m = ds.X, ds.y, ds.m

    def value(w: Point) -> float:
        s = sigmoid(X @ w)
        r = y - s
        return float(np.dot(r, r)) / m

    def gradient(w: Point) -> Point:
        s = sigmoid(X @ w)
        return (2.0 / m) * (X.T @ (s * (1.0 - s) * (s - y)))

    return Objective(dim=ds.dim, value=value, gradient=gradient)


def make_idealized_glm(stream: RandomStream, d: int, m: int, W: float,
                       ) -> tuple[GlmDataset, Objective]:
    """Planted sigmoid-regression instance with exact labels.

    Draws x_i uniformly in the unit ball and the planted weights uniformly
    in the ball of radius W, then sets y_i = sig(<w*, x_i>), so the empirical
    error vanishes at w*.
    """
    if d < 1 or m < 1 or not W > 0:
        raise ValueError("need d >= 1, m >= 1, W > 0")
    gen = stream.generator()
    X = sample_in_ball(gen, d, 1.0, n=m)
    w_star = sample_in_ball(gen, d, W)
    y = sigmoid(X @ w_star)
    ds = GlmDataset(X=X, y=y, W=float(W), planted=w_star, seed=stream.seed)
    return ds, glm_objective(ds)


# Two-sample sigmoid-regression instance whose error has a planted zero at
# (1, 1) yet is not quasi-convex: the points (3, 1) and (1, 3) lie in the
# 0.018-sublevel set while their midpoint (2, 2) has error above 0.019.
NONQC_SUBLEVEL_WITNESS = (np.array([3.0, 1.0]), np.array([1.0, 3.0]))

# At x = (2, 2) the gradient has positive inner product with y - x for
# y = (4, 1), even though the error at y is lower: the gradient implication
# form of quasi-convexity fails at this pair.
NONQC_GRAD_WITNESS = (np.array([2.0, 2.0]), np.array([4.0, 1.0]))


def make_nonqc_counterexample() -> tuple[GlmDataset, Objective]:
    """Two-sample planted instance on which the empirical error is not quasi-convex."""
    log4 = math.log(4.0)
    X = np.array([[0.0, -log4], [-log4, 0.0]])
    y = np.array([0.2, 0.2])
    ds = GlmDataset(X=X, y=y, W=math.sqrt(2.0), planted=np.array([1.0, 1.0]))
    return ds, glm_objective(ds)


# ---------------------------------------------------------------------------
# Noisy sigmoid regression as a distribution over losses
# ---------------------------------------------------------------------------


def make_noisy_glm(stream: RandomStream, d: int, W: float, noise_scale: float = 0.5,
                   pool_size: int = 1000) -> StochasticObjective:
    """Distribution over per-sample losses (y - sig(<w, x>))^2 with noisy labels.

    The population is a fixed pool of pool_size points drawn uniformly in the
    unit ball with planted weights w* (uniform in the W-ball).  A component
    draw picks a pool point and a label y = sig(<w*, x>) + xi, where xi is
    uniform on [-a, a] with a = min(noise_scale, sig*, 1 - sig*): zero-mean,
    bounded, and y stays in [0, 1].  Using a finite pool keeps the expected
    loss in closed form: population error term plus the constant mean noise
    variance.  Every component value lies in [0, 1], so bound_M = 1.
    """
    if d < 1 or not W > 0:
        raise ValueError("need d >= 1 and W > 0")
    if noise_scale < 0 or pool_size < 1:
        raise ValueError("need noise_scale >= 0 and pool_size >= 1")
    gen = stream.generator()
    X = sample_in_ball(gen, d, 1.0, n=pool_size)
    w_star = sample_in_ball(gen, d, W)
    sig_star = sigmoid(X @ w_star)
    amp = np.minimum(noise_scale, np.minimum(sig_star, 1.0 - sig_star))
    noise_var = float(np.mean(amp ** 2)) / 3.0

    def expected_value(w: Point) -> float:
        diff = sig_star - sigmoid(X @ w)
        return float(np.dot(diff, diff)) / pool_size + noise_var

    def expected_gradient(w: Point) -> Point:
        s = sigmoid(X @ w)
        return (2.0 / pool_size) * (X.T @ (s * (1.0 - s) * (s - sig_star)))

    expected = Objective(dim=d, value=expected_value, gradient=expected_gradient)

    def sample(gen: np.random.Generator, b: int) -> MinibatchFn:
        idx = gen.integers(0, pool_size, size=b)
        xi = gen.uniform(-1.0, 1.0, size=b) * amp[idx]
        Xb = X[idx]
        yb = sig_star[idx] + xi

        def value(w: Point) -> float:
            r = yb - sigmoid(Xb @ w)
            return float(np.dot(r, r)) / b

        def gradient(w: Point) -> Point:
            s = sigmoid(Xb @ w)
            return (2.0 / b) * (Xb.T @ (s * (1.0 - s) * (s - yb)))

        def component_values(w: Point) -> np.ndarray:
            return (yb - sigmoid(Xb @ w)) ** 2

        return MinibatchFn(dim=d, size=b, value=value, gradient=gradient,
                           component_values=component_values,
                           meta={"indices": idx, "noise": xi})

    return StochasticObjective(dim=d, sample_minibatch=sample, expected=expected,
                               bound_M=1.0, minimizer=w_star)


# ---------------------------------------------------------------------------
# Adversarial distribution showing small minibatches make SNGD diverge
# ---------------------------------------------------------------------------

LOWER_BOUND_MINIMIZER = -3.0
LOWER_BOUND_SEGMENT = (-5.0, -1.0)  # every point here is eps-optimal


def make_lower_bound_distribution(eps: float) -> StochasticObjective:
    """Two-component loss distribution whose expectation has minimum at -3.

    With probability 1 - eps the loss is the linear pull -0.5*eps*x; with
    probability eps it is the hinge (1 - 0.5*eps)*max(x + 3, 0).  The
    expected loss has slope 0.5*eps on (-3, inf) and -0.5*eps*(1 - eps) on
    (-inf, -3), so the whole segment [-5, -1] is eps-optimal.  A minibatch
    mean gradient at x > -3 is negative exactly when no hinge component was
    drawn, which happens with probability (1 - eps)^b: normalized steps then
    move away from the minimum.  The hinge kink at x = -3 takes subgradient
    0 (the left branch).
    """
    if not (0.0 < eps <= 0.1):
        raise ValueError("eps must lie in (0, 0.1]")
    lin_slope = -0.5 * eps
    hinge_slope = 1.0 - 0.5 * eps

    def expected_value(x: Point) -> float:
        t = float(x[0])
        return (1.0 - eps) * lin_slope * t + eps * hinge_slope * max(t + 3.0, 0.0)

    def expected_gradient(x: Point) -> Point:
        t = float(x[0])
        g = (1.0 - eps) * lin_slope
        if t > -3.0:
            g += eps * hinge_slope
        return np.array([g])

    expected = Objective(dim=1, value=expected_value, gradient=expected_gradient)

    def sample(gen: np.random.Generator, b: int) -> MinibatchFn:
        hinge = gen.random(b) < eps
        k = int(hinge.sum())

        def value(x: Point) -> float:
            t = float(x[0])
            return ((b - k) * lin_slope * t + k * hinge_slope * max(t + 3.0, 0.0)) / b

        def gradient(x: Point) -> Point:
            t = float(x[0])
            g = (b - k) * lin_slope
            if t > -3.0:
                g += k * hinge_slope
            return np.array([g / b])

        def component_values(x: Point) -> np.ndarray:
            t = float(x[0])
            vals = np.full(b, lin_slope * t)
            vals[hinge] = hinge_slope * max(t + 3.0, 0.0)
            return vals

        return MinibatchFn(dim=1, size=b, value=value, gradient=gradient,
                           component_values=component_values, meta={"hinge": hinge})

    return StochasticObjective(dim=1, sample_minibatch=sample, expected=expected,
                               minimizer=np.array([LOWER_BOUND_MINIMIZER]))


# ---------------------------------------------------------------------------
# Margin perceptron with a direction oracle
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class PerceptronDataset:
    """Linearly separable samples: labels in {0, 1}, signed margin >= gamma.

    The planted separator satisfies <w*, x_i> >= gamma on positive samples
    and <w*, x_i> <= -gamma on negative ones.
    """

    X: np.ndarray
    y: np.ndarray
    gamma: float
    planted: Point
    seed: int | None = None

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.float64)
        self.planted = as_point(self.planted, self.X.shape[1])
        if not 0 < self.gamma:
            raise ValueError("gamma must be positive")
        if not set(np.unique(self.y)) <= {0.0, 1.0}:
            raise ValueError("labels must be 0/1")
        signed = (2.0 * self.y - 1.0) * (self.X @ self.planted)
        if np.any(signed < self.gamma - 1e-12):
            raise ValueError("planted separator violates the margin condition")

    @property
    def m(self) -> int:
        return self.X.shape[0]

    @property
    def dim(self) -> int:
        return self.X.shape[1]


def perceptron_objective(ds: PerceptronDataset) -> Objective:
    """Zero-one squared error with the classic perceptron direction oracle.

    The error is piecewise constant, so its gradient vanishes almost
    everywhere; the direction oracle mean((pred_i - y_i) * x_i) plays the
    role of the gradient for normalized descent.
    """
    X, y, m = ds.X, ds.y, ds.m

    def value(w: Point) -> float:
        pred = (X @ w >= 0).astype(np.float64)
        r = y - pred
        return float(np.dot(r, r)) / m

    def gradient(w: Point) -> Point:
        return np.zeros(ds.dim)

    def oracle(w: Point) -> Point:
        pred = (X @ w >= 0).astype(np.float64)
        return (X.T @ (pred - y)) / m

    return Objective(dim=ds.dim, value=value, gradient=gradient, direction_oracle=oracle)


def make_perceptron(stream: RandomStream, d: int, m: int, gamma: float,
                    max_batches: int = 1000) -> tuple[PerceptronDataset, Objective]:
    """Separable dataset from a planted unit separator, by rejection sampling.

    Candidate points are drawn uniformly in the unit ball and kept when
    |<w*, x>| >= gamma; labels are the side of the hyperplane.  Raises if the
    rejection loop exceeds its retry budget.
    """
    if not (0.0 < gamma < 1.0):
        raise ValueError("gamma must lie in (0, 1)")
    if d < 1 or m < 1:
        raise ValueError("need d >= 1 and m >= 1")
    gen = stream.generator()
    w_star = gen.standard_normal(d)
    w_star /= np.linalg.norm(w_star)
    rows, labels = [], []
    need = m
    for _ in range(max_batches):
        cand = sample_in_ball(gen, d, 1.0, n=max(2 * need, 16))
        margins = cand @ w_star
        keep = np.abs(margins) >= gamma
        rows.append(cand[keep])
        labels.append((margins[keep] > 0).astype(np.float64))
        need = m - sum(r.shape[0] for r in rows)
        if need <= 0:
            break
    else:
        raise RuntimeError(f"rejection sampling exceeded {max_batches} batches "
                           f"(gamma={gamma} too large for d={d}?)")
    X = np.vstack(rows)[:m]
    y = np.concatenate(labels)[:m]
    ds = PerceptronDataset(X=X, y=y, gamma=float(gamma), planted=w_star, seed=stream.seed)
    return ds, perceptron_objective(ds)


# ---------------------------------------------------------------------------
# Dataset export / import (versioned JSON, replayable across implementations)
# ---------------------------------------------------------------------------


def save_dataset(path, ds: GlmDataset | PerceptronDataset) -> None:
    doc = {
        "schema_version": 1,
        "kind": "glm" if isinstance(ds, GlmDataset) else "perceptron",
        "dim": ds.dim,
        "X": ds.X.tolist(),
        "y": ds.y.tolist(),
        "planted": None if ds.planted is None else ds.planted.tolist(),
        "seed": ds.seed,
    }
    if isinstance(ds, GlmDataset):
        doc["W"] = ds.W
    else:
        doc["gamma"] = ds.gamma
    with open(path, "w") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_dataset(path) -> GlmDataset | PerceptronDataset:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("schema_version") != 1:
        raise ValueError(f"unsupported dataset schema_version: {doc.get('schema_version')}")
    common = dict(X=np.array(doc["X"]), y=np.array(doc["y"]), seed=doc.get("seed"))
    if doc["kind"] == "glm":
        return GlmDataset(W=doc["W"], planted=doc["planted"], **common)
    if doc["kind"] == "perceptron":
        return PerceptronDataset(gamma=doc["gamma"], planted=doc["planted"], **common)
    raise ValueError(f"unknown dataset kind: {doc['kind']!r}")
