"""Executable theory: iteration/minibatch budgets, absorb probabilities, divergence runs."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import RandomStream
from .problems import LOWER_BOUND_SEGMENT

_LB_GRAD_BOUND = 1.0  # the two-component losses are 1-Lipschitz


@dataclass(frozen=True)
class Budget:
    """Iteration count, step size, and minibatch size from a guarantee formula."""

    T: int
    eta: float
    b: int = 0
    provenance: str = ""

    def to_dict(self) -> dict:
        return {"T": self.T, "eta": self.eta, "b": self.b, "provenance": self.provenance}


def ngd_budget(eps: float, kappa: float, dist0: float) -> Budget:
    """Budget certifying min_t f(x_t) - f(z) <= eps for (eps, kappa, z)-SLQC f.

    T = ceil(kappa^2 * dist0^2 / eps^2) normalized steps of length eps/kappa,
    where dist0 = ||x1 - z||.
    """
    if not (eps > 0 and kappa > 0 and dist0 >= 0):
        raise ValueError("need eps > 0, kappa > 0, dist0 >= 0")
    T = max(1, math.ceil(kappa * kappa * dist0 * dist0 / (eps * eps)))
    return Budget(T=T, eta=eps / kappa, provenance="slqc_iteration_bound")


def ngd_smooth_budget(eps: float, beta: float, dist0: float) -> Budget:
    """Faster budget for strictly quasi-convex, locally beta-smooth objectives.

    T = ceil(beta * dist0^2 / (2*eps)) steps of length sqrt(2*eps/beta):
    an O(1/eps) iteration count instead of O(1/eps^2).
    """
    if not (eps > 0 and beta > 0 and dist0 >= 0):
        raise ValueError("need eps > 0, beta > 0, dist0 >= 0")
    T = max(1, math.ceil(beta * dist0 * dist0 / (2.0 * eps)))
    return Budget(T=T, eta=math.sqrt(2.0 * eps / beta), provenance="smooth_iteration_bound")


def sngd_minibatch_bound(eps: float, delta: float, T: int, M: float) -> int:
    """Hoeffding minibatch size: ceil(M^2 * log(4T/delta) / (2*eps^2)).

    With this b, every minibatch value f_t(x_t) and f_t(z) stays within eps
    of its expectation simultaneously over T iterations w.p. >= 1 - delta.
    M = 0 (constant losses) needs no averaging: returns 0.
    """
    if not (eps > 0 and 0 < delta < 1 and T >= 1 and M >= 0):
        raise ValueError("need eps > 0, delta in (0,1), T >= 1, M >= 0")
    if M == 0:
        return 0
    return math.ceil(M * M * math.log(4.0 * T / delta) / (2.0 * eps * eps))


def glm_sample_bound(eps: float, delta: float, W: float) -> int:
    """Samples making the noisy sigmoid-regression error SLQC at a fixed point
    w.p. >= 1 - delta: ceil(8 * e^(2W) * (W+1)^2 / eps^2 * log(1/delta))."""
    if not (eps > 0 and 0 < delta < 1 and W >= 0):
        raise ValueError("need eps > 0, delta in (0,1), W >= 0")
    return math.ceil(8.0 * math.exp(2.0 * W) * (W + 1.0) ** 2 / (eps * eps)
                     * math.log(1.0 / delta))


def glm_minibatch_b0(eps: float, delta: float, T: int, W: float) -> int:
    """Union-bound instantiation of the minibatch SLQC threshold for noisy
    sigmoid regression: the single-point bound at confidence delta/T."""
    if T < 1:
        raise ValueError("T must be >= 1")
    return glm_sample_bound(eps, delta / T, W)


# ---------------------------------------------------------------------------
# Biased random walk with an absorbing origin
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ChainSpec:
    """Walk on {0, 1, 2, ...}: step toward 0 w.p. p, away w.p. 1-p; 0 absorbs."""

    p: float
    start_state: int
    max_steps: int = 10_000

    def __post_init__(self):
        if not (0.0 < self.p < 1.0):
            raise ValueError("p must lie in (0, 1)")
        if self.start_state < 0:
            raise ValueError("start_state must be >= 0")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")


def absorb_probability(spec: ChainSpec) -> float:
    """Probability the walk ever reaches 0: (p/(1-p))^i for p < 1/2, else 1.

    For p >= 1/2 the walk is recurrent toward the origin and absorbs almost
    surely; the closed form only applies to the transient regime.
    """
    if spec.start_state == 0:
        return 1.0
    if spec.p >= 0.5:
        return 1.0
    return (spec.p / (1.0 - spec.p)) ** spec.start_state


def absorb_probability_mc(spec: ChainSpec, trials: int,
                          stream: RandomStream) -> tuple[float, float]:
    """Monte Carlo estimate of the absorb probability, with standard error.

    Walks are truncated at max_steps, which biases the estimate downward
    (late absorptions are missed); the absorption-time tail decays like
    (2*sqrt(p*(1-p)))^t, so a few hundred steps suffice for p away from 1/2.
    Walks farther from 0 than the block length are advanced a whole block at
    a time with a single binomial draw, which is exact: they cannot absorb
    inside the block.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if spec.start_state == 0:
        return 1.0, 0.0
    gen = stream.generator()
    block = 128
    s = np.full(trials, spec.start_state, dtype=np.int64)
    absorbed = 0
    t = 0
    while t < spec.max_steps and s.size:
        k = min(block, spec.max_steps - t)
        far = s > k
        fs = s[far]
        if fs.size:
            down = gen.binomial(k, spec.p, size=fs.size)
            fs = fs + k - 2 * down
        ns = s[~far]
        for _ in range(k):
            if not ns.size:
                break
            step_down = gen.random(ns.size) < spec.p
            ns = np.where(step_down, ns - 1, ns + 1)
            hit = ns == 0
            nhit = int(hit.sum())
            if nhit:
                absorbed += nhit
                ns = ns[~hit]
        s = np.concatenate([fs, ns])
        t += k
    est = absorbed / trials
    se = math.sqrt(max(est * (1.0 - est), 1.0 / trials) / trials)
    return est, se


def all_linear_prob(eps: float, b: int | None = None) -> float:
    """Probability a minibatch from the adversarial distribution has no hinge
    component, i.e. its mean gradient is negative above the minimum.

    With the idealized batch size b = 0.2/eps this is (1-eps)^(0.2/eps),
    which decreases in eps and still exceeds 0.8 at eps = 0.1.  Pass an
    integer b to evaluate the realized batch instead.
    """
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    exponent = (0.2 / eps) if b is None else b
    return (1.0 - eps) ** exponent


# ---------------------------------------------------------------------------
# Divergence experiment: SNGD with the too-small minibatch
# ---------------------------------------------------------------------------


@dataclass
class LowerBoundReport:
    """Monte Carlo evidence that the too-small minibatch never finds the optimum.

    p_hat estimates P(batch-mean gradient >= 0) at queried points right of
    the minimum; a nonnegative mean makes the normalized step move away.
    hit_fraction is the fraction of trials whose trace ever entered the
    eps-optimal segment.  The analytic ceiling instantiates the absorb
    probability at p = 0.2 and 1/eta - 1 states; the empirical ceiling
    plugs in p_hat instead.
    """

    eps: float
    b: int
    eta: float
    T: int
    trials: int
    p_hat: float
    p_hat_se: float
    p_events: int
    p_bound: float
    p_within_bound: bool
    hits: int
    hit_fraction: float
    ceiling_analytic: float
    ceiling_empirical: float
    hit_ceiling: float
    passed: bool
    segment: tuple[float, float]

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["segment"] = list(self.segment)
        return d


_CHUNK = 10_000  # trials per substream; fixed so results are scheduler-independent


def lower_bound_experiment(eps: float, trials: int, T: int, stream: RandomStream,
                           b: int | None = None) -> LowerBoundReport:
    """Run normalized minibatch descent on the adversarial distribution.

    Uses b = ceil(0.2/eps) components per batch, step eta = eps, start x1 = 0,
    and simulates the induced sign walk exactly (the batch-mean gradient's
    sign depends only on whether the batch is all-linear, or, left of the
    minimum, all-hinge).  Trials are processed in fixed chunks of 10^4 with
    one substream each, so results do not depend on scheduling.
    """
    if not (0.0 < eps <= 0.1):
        raise ValueError("eps must lie in (0, 0.1]")
    if trials < 1 or T < 1:
        raise ValueError("trials and T must be >= 1")
    if b is None:
        b = math.ceil(0.2 / eps)
    if not (0.0 < 0.5 * eps * b < 1.0):
        raise ValueError("batch size outside the supported sign regime "
                         "(need 0 < eps*b/2 < 1)")
    eta = eps
    hits = 0
    events_above = 0
    nonneg_events = 0
    n_chunks = (trials + _CHUNK - 1) // _CHUNK
    for c in range(n_chunks):
        n = min(_CHUNK, trials - c * _CHUNK)
        ch_hits, ch_events, ch_nonneg = _simulate_walks(
            stream.substream(c).generator(), n, T, eps, b, eta)
        hits += ch_hits
        events_above += ch_events
        nonneg_events += ch_nonneg

    p_hat = nonneg_events / events_above if events_above else 0.0
    p_hat_se = math.sqrt(max(p_hat * (1.0 - p_hat), 1.0 / max(events_above, 1))
                         / max(events_above, 1))
    p_bound = 0.2
    hit_fraction = hits / trials
    states = max(1, round(1.0 / eta) - 1)
    ceiling_analytic = absorb_probability(ChainSpec(p=p_bound, start_state=states))
    if 0.0 < p_hat < 0.5:
        ceiling_empirical = (p_hat / (1.0 - p_hat)) ** states
    else:
        ceiling_empirical = 1.0 if p_hat >= 0.5 else 0.0
    hit_ceiling = ceiling_analytic + 3.0 * math.sqrt(ceiling_analytic / trials) + 3.0 / trials
    return LowerBoundReport(
        eps=eps, b=b, eta=eta, T=T, trials=trials,
        p_hat=p_hat, p_hat_se=p_hat_se, p_events=events_above,
        p_bound=p_bound,
        p_within_bound=p_hat <= p_bound + 3.0 * p_hat_se,
        hits=hits, hit_fraction=hit_fraction,
        ceiling_analytic=ceiling_analytic,
        ceiling_empirical=ceiling_empirical,
        hit_ceiling=hit_ceiling,
        passed=hit_fraction <= hit_ceiling,
        segment=LOWER_BOUND_SEGMENT,
    )


def _simulate_walks(gen: np.random.Generator, n: int, T: int, eps: float,
                    b: int, eta: float) -> tuple[int, int, int]:
    """Vectorized sign walk for n trials over T queries.

    Above the minimum (-3) the batch-mean gradient is negative iff the batch
    is all-linear (prob (1-eps)^b), so the walk steps +eta; otherwise -eta.
    At or below -3 the hinge components contribute zero gradient, so the
    mean is negative (step +eta) unless the batch is all-hinge (stay put).
    Walks too far right to reach the segment within a block are advanced a
    whole block with one binomial draw; that is exact because every blocked
    query stays right of the segment and of -3.
    """
    lo, hi = LOWER_BOUND_SEGMENT
    hi_tol = hi + 1e-12
    p0 = (1.0 - eps) ** b    # all-linear: mean gradient < 0 above -3
    pb = eps ** b            # all-hinge: mean gradient 0 at or below -3
    p_pos = 1.0 - p0
    block = 128
    pos = np.zeros(n)
    ever_hit = np.zeros(n, dtype=bool)
    events_above = 0
    nonneg_events = 0
    t = 0
    while t < T:
        k = min(block, T - t)
        far = pos > hi_tol + k * eta
        fpos = pos[far]
        if fpos.size:
            j = gen.binomial(k, p_pos, size=fpos.size)   # nonneg-gradient steps
            fpos = fpos + eta * (k - 2 * j)
            events_above += k * fpos.size
            nonneg_events += int(j.sum())
        npos = pos[~far]
        nhit = ever_hit[~far]
        for _ in range(k):
            above = npos > -3.0
            nhit |= (npos <= hi_tol) & (npos >= lo - 1e-12)
            events_above += int(above.sum())
            u = gen.random(npos.size)
            all_linear = u < p0
            all_hinge = u >= 1.0 - pb
            nonneg_events += int((above & ~all_linear).sum())
            move = np.where(above,
                            np.where(all_linear, eta, -eta),
                            np.where(all_hinge, 0.0, eta))
            npos = npos + move
        pos = np.concatenate([fpos, npos])
        ever_hit = np.concatenate([ever_hit[far], nhit])
        t += k
    return int(ever_hit.sum()), events_above, nonneg_events
