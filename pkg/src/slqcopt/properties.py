"""Numerical checkers for quasi-convexity, local regularity, and SLQC certificates.

SLQC: f is (eps, kappa, z)-strictly-locally-quasi-convex at x when either
f(x) - f(z) <= eps, or the gradient (or direction oracle) is nonzero and
points away from every y in the ball B(z, eps/kappa).  Sampling-based
checkers are probabilistic: a pass means no counterexample in N trials.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import (
    GRAD_TOL,
    Box,
    FeasibleRegion,
    Objective,
    Point,
    RandomStream,
    as_point,
    sample_in_ball,
)


@dataclass(frozen=True, eq=False)
class SlqcQuery:
    """One SLQC check: is f (eps, kappa, z)-SLQC at x?"""

    eps: float
    kappa: float
    z: Point
    x: Point
    use_oracle: bool = False

    def __post_init__(self):
        object.__setattr__(self, "z", as_point(self.z))
        object.__setattr__(self, "x", as_point(self.x, self.z.size))
        if not (math.isfinite(self.eps) and self.eps > 0):
            raise ValueError("eps must be finite and positive")
        if not (math.isfinite(self.kappa) and self.kappa > 0):
            raise ValueError("kappa must be finite and positive")


@dataclass(frozen=True)
class SlqcReport:
    """Verdict and witness for one SLQC query.

    clause 1 margin: eps - (f(x) - f(z)); clause 2 margin: the negated ball
    maximum -(<g, z - x> + (eps/kappa)*||g||).  margin >= 0 iff the reported
    clause holds; on failure margin is the (negative) clause-2 margin, or the
    clause-1 margin when the direction vanished below grad_tol.
    """

    holds: bool
    clause: int | None
    margin: float
    grad_norm: float

    def to_dict(self) -> dict:
        return {"holds": self.holds, "clause": self.clause,
                "margin": self.margin, "grad_norm": self.grad_norm}


def check_slqc(f: Objective, q: SlqcQuery, grad_tol: float = GRAD_TOL) -> SlqcReport:
    """Decide an SLQC query exactly.

    Clause 2 is decided in closed form: the maximand <g, y - x> is linear in
    y, so its maximum over the ball B(z, r) is <g, z - x> + r*||g||.  Clause 2
    holds iff ||g|| > grad_tol and that maximum is <= 0.
    """
    gap = f.value(q.x) - f.value(q.z)
    g = f.direction(q.x) if q.use_oracle else f.gradient(q.x)
    gn = float(np.linalg.norm(g))
    if gap <= q.eps:
        return SlqcReport(holds=True, clause=1, margin=q.eps - gap, grad_norm=gn)
    if gn <= grad_tol:
        return SlqcReport(holds=False, clause=None, margin=q.eps - gap, grad_norm=gn)
    ball_max = float(np.dot(g, q.z - q.x)) + (q.eps / q.kappa) * gn
    if ball_max <= 0.0:
        return SlqcReport(holds=True, clause=2, margin=-ball_max, grad_norm=gn)
    return SlqcReport(holds=False, clause=None, margin=-ball_max, grad_norm=gn)


def check_slqc_oracle(f: Objective, q: SlqcQuery, grad_tol: float = GRAD_TOL) -> SlqcReport:
    """SLQC check with the direction oracle standing in for the gradient."""
    if f.direction_oracle is None:
        raise ValueError("objective has no direction oracle")
    oq = SlqcQuery(eps=q.eps, kappa=q.kappa, z=q.z, x=q.x, use_oracle=True)
    return check_slqc(f, oq, grad_tol=grad_tol)


@dataclass
class BatchSlqcResult:
    all_hold: bool
    reports: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"all_hold": self.all_hold, "reports": self.reports}


def check_slqc_batch(f: Objective, z, kappa: float, eps_values, points,
                     use_oracle: bool = False, grad_tol: float = GRAD_TOL) -> BatchSlqcResult:
    """Run the SLQC check over a set of points and eps values."""
    z = as_point(z, f.dim)
    reports = []
    all_hold = True
    for eps in eps_values:
        for x in points:
            q = SlqcQuery(eps=float(eps), kappa=kappa, z=z, x=x, use_oracle=use_oracle)
            rep = check_slqc(f, q, grad_tol=grad_tol)
            all_hold &= rep.holds
            reports.append({"eps": float(eps), "x": list(map(float, x)), **rep.to_dict()})
    return BatchSlqcResult(all_hold=all_hold, reports=reports)


# ---------------------------------------------------------------------------
# Quasi-convexity
# ---------------------------------------------------------------------------


def check_quasiconvex_grad(f: Objective, x, y, tol: float = GRAD_TOL) -> bool:
    """Gradient form at one pair: f(y) <= f(x) must imply <grad f(x), y - x> <= 0.

    Vacuously true when f(y) > f(x).
    """
    x = as_point(x, f.dim)
    y = as_point(y, f.dim)
    if f.value(y) > f.value(x):
        return True
    return float(np.dot(f.gradient(x), y - x)) <= tol


@dataclass
class SampleCheckReport:
    """Outcome of a sampling-based check: pass = no counterexample in `trials`."""

    passed: bool
    trials: int
    counterexample: dict | None = None

    def to_dict(self) -> dict:
        return {"passed": self.passed, "trials": self.trials,
                "counterexample": self.counterexample}


def check_sublevel_convex(f: Objective, alpha: float, trials: int,
                          stream: RandomStream, region: FeasibleRegion | None = None,
                          pairs=None) -> SampleCheckReport:
    """Sublevel form: sample pairs with f <= alpha and test convex combinations.

    Explicit `pairs` are checked first (midpoint and a few fixed weights),
    then `trials` random pairs drawn from `region` (default: f.domain).
    Returns the first violating triple (x, y, combination) if any.
    """
    region = region or f.domain
    if region is None:
        raise ValueError("no sampling region: pass region= or set f.domain")
    gen = stream.generator()
    tested = 0

    def violation(x, y, lam):
        zpt = lam * x + (1.0 - lam) * y
        fz = f.value(zpt)
        if fz > alpha:
            return {"x": x.tolist(), "y": y.tolist(), "lambda": lam,
                    "point": zpt.tolist(), "value": fz, "alpha": alpha}
        return None

    for x, y in pairs or []:
        x, y = as_point(x, f.dim), as_point(y, f.dim)
        if f.value(x) > alpha or f.value(y) > alpha:
            continue
        tested += 1
        for lam in (0.5, 0.25, 0.75):
            bad = violation(x, y, lam)
            if bad is not None:
                return SampleCheckReport(passed=False, trials=tested, counterexample=bad)

    for _ in range(trials):
        x = _sample_region(gen, region)
        y = _sample_region(gen, region)
        if f.value(x) > alpha or f.value(y) > alpha:
            continue
        tested += 1
        for lam in (0.5, float(gen.random())):
            bad = violation(x, y, lam)
            if bad is not None:
                return SampleCheckReport(passed=False, trials=tested, counterexample=bad)
    return SampleCheckReport(passed=True, trials=tested)


def _sample_region(gen: np.random.Generator, region: FeasibleRegion) -> Point:
    if isinstance(region, Box):
        return gen.uniform(region.lower, region.upper)
    return sample_in_ball(gen, region.dim, region.radius, center=region.center)


# ---------------------------------------------------------------------------
# Local Lipschitz / smoothness
# ---------------------------------------------------------------------------


def check_local_lipschitz(f: Objective, z, eps_ball: float, G: float, trials: int,
                          stream: RandomStream, rtol: float = 1e-9) -> SampleCheckReport:
    """Sampled pairs x, y in B(z, eps_ball) must satisfy |f(x)-f(y)| <= G*||x-y||.

    rtol is slack for float rounding when the bound is tight.
    """
    z = as_point(z, f.dim)
    gen = stream.generator()
    for _ in range(trials):
        x = sample_in_ball(gen, f.dim, eps_ball, center=z)
        y = sample_in_ball(gen, f.dim, eps_ball, center=z)
        lhs = abs(f.value(x) - f.value(y))
        rhs = G * float(np.linalg.norm(x - y))
        if lhs > rhs * (1.0 + rtol) + 1e-15:
            return SampleCheckReport(passed=False, trials=trials, counterexample={
                "x": x.tolist(), "y": y.tolist(), "lhs": lhs, "rhs": rhs})
    return SampleCheckReport(passed=True, trials=trials)


def check_local_smooth(f: Objective, z, eps_ball: float, beta: float, trials: int,
                       stream: RandomStream, rtol: float = 1e-9) -> SampleCheckReport:
    """Sampled pairs in B(z, eps_ball) must satisfy the quadratic Taylor bound
    |f(x) - f(y) - <grad f(y), x - y>| <= (beta/2)*||x - y||^2."""
    z = as_point(z, f.dim)
    gen = stream.generator()
    for _ in range(trials):
        x = sample_in_ball(gen, f.dim, eps_ball, center=z)
        y = sample_in_ball(gen, f.dim, eps_ball, center=z)
        lhs = abs(f.value(x) - f.value(y) - float(np.dot(f.gradient(y), x - y)))
        rhs = 0.5 * beta * float(np.dot(x - y, x - y))
        if lhs > rhs * (1.0 + rtol) + 1e-15:
            return SampleCheckReport(passed=False, trials=trials, counterexample={
                "x": x.tolist(), "y": y.tolist(), "lhs": lhs, "rhs": rhs})
    return SampleCheckReport(passed=True, trials=trials)


@dataclass(frozen=True)
class SlqcParams:
    kappa: float
    ball_radius: float


def derive_slqc_from_lipschitz(G: float, eps: float) -> SlqcParams:
    """SLQC parameters implied by strict quasi-convexity plus local Lipschitzness.

    A strictly quasi-convex f that is (G, eps/G, x*)-locally-Lipschitz is
    (eps, G, x*)-SLQC everywhere: the ball B(x*, eps/G) sits inside every
    sublevel set S_f(x) with f(x) - f(x*) > eps.
    """
    if not G > 0 or not eps > 0:
        raise ValueError("G and eps must be positive")
    return SlqcParams(kappa=G, ball_radius=eps / G)


def box_grid(box: Box, n: int) -> np.ndarray:
    """n-per-axis rectangular grid over a 2-D box, flattened to (n*n, 2)."""
    if box.dim != 2:
        raise ValueError("box_grid supports 2-D boxes")
    xs = np.linspace(box.lower[0], box.upper[0], n)
    ys = np.linspace(box.lower[1], box.upper[1], n)
    gx, gy = np.meshgrid(xs, ys)
    return np.column_stack([gx.ravel(), gy.ravel()])
