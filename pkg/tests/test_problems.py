import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import slqcopt.problems as problems
from slqcopt import (
    GlmDataset,
    finite_diff_gradient,
    glm_objective,
    load_dataset,
    make_cliff_plateau,
    make_idealized_glm,
    make_lower_bound_distribution,
    make_noisy_glm,
    make_nonqc_counterexample,
    make_perceptron,
    make_sigmoid_sum,
    perceptron_objective,
    save_dataset,
    seeded_stream,
    sigmoid,
)
from slqcopt.problems import (
    LOWER_BOUND_SEGMENT,
    NONQC_SUBLEVEL_WITNESS,
    PerceptronDataset,
    SIGMOID_SUM_MINIMIZER,
    SIGMOID_SUM_SUBLEVEL_WITNESS,
    cliff_plateau_kinks,
)

from conftest import make_cone

LOG4 = math.log(4.0)
LOG16 = math.log(16.0)


# ---------------------------------------------------------------------------
# sigmoid
# ---------------------------------------------------------------------------


def test_sigmoid_values_and_stability():
    assert sigmoid(0.0) == 0.5
    assert sigmoid(LOG16) == pytest.approx(16.0 / 17.0, rel=1e-14)
    # plateau-scale arguments must not overflow
    assert sigmoid(700.0) == pytest.approx(1.0)
    assert sigmoid(-700.0) == pytest.approx(0.0, abs=1e-300)
    assert np.all(np.isfinite(sigmoid(np.array([-700.0, -50.0, 0.0, 50.0, 700.0]))))


# ---------------------------------------------------------------------------
# sum of two sigmoids
# ---------------------------------------------------------------------------


def test_sigmoid_sum_witness_values():
    f = make_sigmoid_sum()
    a, b = SIGMOID_SUM_SUBLEVEL_WITNESS
    assert f.value(a) == pytest.approx(16.0 / 17.0 + 0.2, rel=1e-12)  # about 1.1412
    assert f.value(a) <= 1.2 and f.value(b) <= 1.2
    mid = 0.5 * (a + b)
    np.testing.assert_allclose(mid, [math.log(2.0), math.log(2.0)], rtol=1e-12)
    assert f.value(mid) == pytest.approx(4.0 / 3.0, rel=1e-12)


def test_sigmoid_sum_gradient_at_origin():
    f = make_sigmoid_sum()
    np.testing.assert_allclose(f.gradient(np.zeros(2)), [0.25, 0.25], rtol=1e-14)


def test_sigmoid_sum_minimum_at_corner():
    f = make_sigmoid_sum()
    v_min = f.value(SIGMOID_SUM_MINIMIZER)
    gen = seeded_stream(0).generator()
    pts = gen.uniform(-10.0, 10.0, size=(200, 2))
    assert all(f.value(p) >= v_min for p in pts)


# ---------------------------------------------------------------------------
# cliff / plateau landscape
# ---------------------------------------------------------------------------


def test_cliff_plateau_minimum_and_shape():
    f = make_cliff_plateau()
    assert f.value(np.zeros(1)) == 0.0
    a, top = cliff_plateau_kinks()
    assert f.value(np.array([a])) == pytest.approx(a)
    assert f.value(np.array([top])) == pytest.approx(a + 1.0)  # cliff_height default 1
    # plateau is nearly flat
    assert f.value(np.array([10.0])) - f.value(np.array([top])) == pytest.approx(
        1e-6 * (10.0 - top), rel=1e-9)


@given(st.floats(min_value=-15, max_value=15), st.floats(min_value=-15, max_value=15))
@settings(max_examples=1000)
def test_cliff_plateau_monotone_in_abs(x, y):
    # nondecreasing in |x|: the 1-D shape of quasi-convexity with minimum at 0
    f = make_cliff_plateau()
    if abs(x) <= abs(y):
        assert f.value(np.array([x])) <= f.value(np.array([y])) + 1e-15


def test_cliff_plateau_gradient_signs():
    f = make_cliff_plateau()
    assert f.gradient(np.zeros(1))[0] == 0.0
    assert f.gradient(np.array([0.1]))[0] == pytest.approx(1.0)     # valley slope
    assert f.gradient(np.array([-0.1]))[0] == pytest.approx(-1.0)
    assert f.gradient(np.array([0.2505]))[0] == pytest.approx(1e3)  # cliff
    assert f.gradient(np.array([5.0]))[0] == pytest.approx(1e-6)    # plateau


def test_cliff_plateau_validation():
    with pytest.raises(ValueError):
        make_cliff_plateau(valley_width=0.0)
    with pytest.raises(ValueError):
        make_cliff_plateau(cliff_height=-1.0)
    with pytest.raises(ValueError):
        make_cliff_plateau(plateau_slope=-1e-9)


# ---------------------------------------------------------------------------
# idealized sigmoid regression
# ---------------------------------------------------------------------------


def test_idealized_glm_planted_zero():
    ds, f = make_idealized_glm(seeded_stream(1), d=4, m=60, W=2.0)
    assert f.value(ds.planted) == pytest.approx(0.0, abs=1e-28)
    np.testing.assert_allclose(f.gradient(ds.planted), np.zeros(4), atol=1e-14)
    assert np.all(np.linalg.norm(ds.X, axis=1) <= 1.0 + 1e-12)
    assert np.all((ds.y >= 0) & (ds.y <= 1))
    assert np.linalg.norm(ds.planted) <= 2.0 + 1e-12


def test_idealized_glm_independent_summation_oracle():
    # recompute the mean squared error with a plain python loop
    ds, f = make_idealized_glm(seeded_stream(123), d=3, m=50, W=2.0)
    w = np.zeros(3)
    total = 0.0
    for i in range(ds.m):
        z = sum(float(ds.X[i, j]) * float(w[j]) for j in range(3))
        pred = 1.0 / (1.0 + math.exp(-z))
        total += (float(ds.y[i]) - pred) ** 2
    assert f.value(w) == pytest.approx(total / ds.m, abs=1e-12)


@given(st.integers(min_value=0, max_value=10_000))
@settings(max_examples=30, deadline=None)
def test_idealized_glm_error_nonnegative(seed):
    ds, f = make_idealized_glm(seeded_stream(77), d=3, m=20, W=1.5)
    w = seeded_stream(seed).generator().normal(size=3)
    assert f.value(w) >= 0.0


# ---------------------------------------------------------------------------
# non-quasi-convex two-sample instance
# ---------------------------------------------------------------------------


def test_counterexample_pinned_values():
    ds, f = make_nonqc_counterexample()
    assert f.value(np.array([1.0, 1.0])) == pytest.approx(0.0, abs=1e-12)
    assert f.value(np.array([3.0, 1.0])) <= 0.018
    assert f.value(np.array([1.0, 3.0])) <= 0.018
    assert f.value(np.array([2.0, 2.0])) >= 0.019
    a, b = NONQC_SUBLEVEL_WITNESS
    assert f.value(0.5 * (a + b)) > max(f.value(a), f.value(b))


def test_counterexample_dataset_literal_points():
    ds, _ = make_nonqc_counterexample()
    np.testing.assert_allclose(ds.X, [[0.0, -LOG4], [-LOG4, 0.0]], rtol=1e-15)
    np.testing.assert_allclose(ds.y, [0.2, 0.2])
    np.testing.assert_allclose(ds.planted, [1.0, 1.0])


# ---------------------------------------------------------------------------
# noisy sigmoid regression distribution
# ---------------------------------------------------------------------------


def test_noisy_glm_bound_and_minibatch_mean():
    F = make_noisy_glm(seeded_stream(9), d=4, W=2.0)
    assert F.bound_M == 1.0
    gen = seeded_stream(10).generator()
    fb = F.sample_minibatch(gen, 32)
    w = seeded_stream(11).generator().normal(size=4)
    comps = fb.component_values(w)
    assert fb.value(w) == pytest.approx(float(np.mean(comps)), abs=1e-12)
    assert np.all(np.abs(comps) <= F.bound_M + 1e-12)
    assert fb.size == 32 and fb.meta["indices"].shape == (32,)


def test_noisy_glm_zero_noise_reduces_to_idealized():
    F = make_noisy_glm(seeded_stream(9), d=4, W=2.0, noise_scale=0.0)
    fb = F.sample_minibatch(seeded_stream(1).generator(), 16)
    assert fb.value(F.minimizer) == pytest.approx(0.0, abs=1e-28)
    assert F.expected.value(F.minimizer) == pytest.approx(0.0, abs=1e-28)


def test_noisy_glm_labels_stay_in_unit_interval():
    F = make_noisy_glm(seeded_stream(21), d=3, W=2.0, noise_scale=0.5)
    gen = seeded_stream(2).generator()
    for _ in range(20):
        fb = F.sample_minibatch(gen, 50)
        # component at the planted weights is xi^2 <= amp^2 <= 1
        assert np.all(fb.component_values(F.minimizer) <= 1.0)


def test_noisy_glm_minibatch_draws_reproducible():
    # identical stream state and b give bit-identical minibatches
    F = make_noisy_glm(seeded_stream(9), d=4, W=2.0)
    w = np.array([0.1, -0.2, 0.3, 0.4])
    a = F.sample_minibatch(seeded_stream(33).generator(), 16)
    b = F.sample_minibatch(seeded_stream(33).generator(), 16)
    np.testing.assert_array_equal(a.meta["indices"], b.meta["indices"])
    np.testing.assert_array_equal(a.meta["noise"], b.meta["noise"])
    assert a.value(w) == b.value(w)
    np.testing.assert_array_equal(a.gradient(w), b.gradient(w))


def test_noisy_glm_component_mean_matches_expected():
    F = make_noisy_glm(seeded_stream(31), d=3, W=1.5, pool_size=200)
    gen = seeded_stream(32).generator()
    w = np.array([0.3, -0.2, 0.5])
    n = 20_000
    fb = F.sample_minibatch(gen, n)
    vals = fb.component_values(w)
    se = float(np.std(vals)) / math.sqrt(n)
    assert abs(float(np.mean(vals)) - F.expected.value(w)) <= 3.0 * se


# ---------------------------------------------------------------------------
# adversarial minibatch distribution
# ---------------------------------------------------------------------------


def test_lower_bound_expected_slopes():
    eps = 0.1
    F = make_lower_bound_distribution(eps)
    right = F.expected.gradient(np.array([1.0]))[0]
    left = F.expected.gradient(np.array([-4.0]))[0]
    assert right == pytest.approx(0.5 * eps, rel=1e-12)
    assert left == pytest.approx(-0.5 * eps * (1.0 - eps), rel=1e-12)
    np.testing.assert_allclose(F.minimizer, [-3.0])


def test_lower_bound_segment_is_eps_optimal():
    eps = 0.1
    F = make_lower_bound_distribution(eps)
    f_opt = F.expected.value(F.minimizer)
    lo, hi = LOWER_BOUND_SEGMENT
    for x in np.linspace(lo, hi, 101):
        assert F.expected.value(np.array([x])) - f_opt <= eps + 1e-12


def test_lower_bound_all_negative_probability_arithmetic():
    # a batch mean gradient right of the minimum is negative iff no hinge
    # component was drawn: probability (1-eps)^b = 0.81 for eps=0.1, b=2
    eps, b = 0.1, 2
    gen = seeded_stream(5).generator()
    F = make_lower_bound_distribution(eps)
    n = 40_000
    neg = 0
    for _ in range(n):
        fb = F.sample_minibatch(gen, b)
        neg += fb.gradient(np.array([0.5]))[0] < 0
    p_neg = neg / n
    assert (1.0 - eps) ** b == pytest.approx(0.81, rel=1e-12)
    assert p_neg == pytest.approx(0.81, abs=3.0 * math.sqrt(0.81 * 0.19 / n))


def test_lower_bound_component_mean_matches_expected():
    eps = 0.1
    F = make_lower_bound_distribution(eps)
    gen = seeded_stream(6).generator()
    x = np.array([2.0])
    fb = F.sample_minibatch(gen, 100_000)
    vals = fb.component_values(x)
    se = float(np.std(vals)) / math.sqrt(vals.size)
    assert abs(float(np.mean(vals)) - F.expected.value(x)) <= 3.0 * se


def test_lower_bound_kink_subgradient_zero_from_left():
    F = make_lower_bound_distribution(0.1)
    # all-hinge batch at the kink: gradient contribution is 0
    gen = seeded_stream(0).generator()
    for _ in range(50):
        fb = F.sample_minibatch(gen, 3)
        k = int(fb.meta["hinge"].sum())
        g = fb.gradient(np.array([-3.0]))[0]
        assert g == pytest.approx((3 - k) * (-0.05) / 3, rel=1e-12)


def test_lower_bound_eps_validation():
    for bad in (0.0, -0.1, 0.11, 0.2):
        with pytest.raises(ValueError):
            make_lower_bound_distribution(bad)


# ---------------------------------------------------------------------------
# margin perceptron
# ---------------------------------------------------------------------------


def test_perceptron_planted_is_perfect():
    ds, f = make_perceptron(seeded_stream(42), d=5, m=200, gamma=0.2)
    assert f.value(ds.planted) == 0.0
    np.testing.assert_allclose(f.direction_oracle(ds.planted), np.zeros(5))
    signed = (2.0 * ds.y - 1.0) * (ds.X @ ds.planted)
    assert np.all(signed >= 0.2 - 1e-12)
    assert ds.m == 200


def test_perceptron_error_range():
    ds, f = make_perceptron(seeded_stream(43), d=4, m=50, gamma=0.1)
    gen = seeded_stream(44).generator()
    for _ in range(50):
        w = gen.normal(size=4)
        v = f.value(w)
        assert 0.0 <= v <= 1.0
        assert v * ds.m == pytest.approx(round(v * ds.m))  # multiples of 1/m


def test_perceptron_all_negative_labels_oracle():
    # every label 0: the oracle direction is the mean of points predicted 1
    X = np.array([[0.5, 0.0], [0.0, -0.4], [-0.3, 0.3]])
    w_star = np.array([-1.0, 0.0])
    ok = (2.0 * np.zeros(3) - 1.0) * (X @ w_star) >= 0.1
    ds = PerceptronDataset(X=X[ok], y=np.zeros(int(ok.sum())), gamma=0.1, planted=w_star)
    f = perceptron_objective(ds)
    w = np.array([1.0, 0.0])
    pred = (ds.X @ w >= 0).astype(float)
    np.testing.assert_allclose(f.direction_oracle(w), ds.X.T @ pred / ds.m)
    assert f.value(-w) == 0.0


def test_perceptron_oracle_points_away_from_minimum():
    # for w with error >= eps and v within gamma*eps/2 of the separator,
    # <oracle(w), w - v> stays positive
    ds, f = make_perceptron(seeded_stream(7), d=5, m=200, gamma=0.2)
    eps = 0.1
    radius = 0.2 * eps / 2.0
    gen = seeded_stream(8).generator()
    checked = 0
    while checked < 100:
        w = gen.normal(size=5) * 2.0
        if f.value(w) < eps:
            continue
        v = ds.planted + radius * _unit(gen.normal(size=5)) * gen.random()
        assert float(np.dot(f.direction_oracle(w), w - v)) > 0.0
        checked += 1


def _unit(x):
    return x / np.linalg.norm(x)


def test_perceptron_rejection_budget():
    with pytest.raises(RuntimeError):
        make_perceptron(seeded_stream(0), d=2, m=10_000, gamma=0.999, max_batches=2)


def test_perceptron_gamma_validation():
    with pytest.raises(ValueError):
        make_perceptron(seeded_stream(0), d=2, m=10, gamma=1.5)


# ---------------------------------------------------------------------------
# dataset export / import
# ---------------------------------------------------------------------------


def test_glm_dataset_round_trip(tmp_path):
    ds, _ = make_idealized_glm(seeded_stream(3), d=3, m=10, W=1.0)
    path = tmp_path / "glm.json"
    save_dataset(path, ds)
    back = load_dataset(path)
    assert isinstance(back, GlmDataset)
    np.testing.assert_array_equal(back.X, ds.X)
    np.testing.assert_array_equal(back.y, ds.y)
    np.testing.assert_array_equal(back.planted, ds.planted)
    assert back.W == ds.W and back.seed == ds.seed
    f1, f2 = glm_objective(ds), glm_objective(back)
    w = np.array([0.1, 0.2, 0.3])
    assert f1.value(w) == f2.value(w)


def test_perceptron_dataset_round_trip(tmp_path):
    ds, _ = make_perceptron(seeded_stream(4), d=3, m=20, gamma=0.15)
    path = tmp_path / "perc.json"
    save_dataset(path, ds)
    back = load_dataset(path)
    assert isinstance(back, PerceptronDataset)
    np.testing.assert_array_equal(back.X, ds.X)
    np.testing.assert_array_equal(back.y, ds.y)
    assert back.gamma == ds.gamma


def test_load_rejects_unknown_schema(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"schema_version": 99, "kind": "glm"}')
    with pytest.raises(ValueError):
        load_dataset(path)


def test_glm_dataset_label_validation():
    with pytest.raises(ValueError):
        GlmDataset(X=np.zeros((2, 2)), y=np.array([0.5, 1.5]), W=1.0)


# ---------------------------------------------------------------------------
# analytic gradients match finite differences on every objective
# ---------------------------------------------------------------------------


def _glm_case():
    ds, f = make_idealized_glm(seeded_stream(50), d=3, m=40, W=2.0)
    return f, lambda gen: gen.normal(size=3)


def _counterexample_case():
    _, f = make_nonqc_counterexample()
    return f, lambda gen: gen.normal(size=2) * 2.0


def _sigmoid_sum_case():
    f = make_sigmoid_sum()
    return f, lambda gen: gen.uniform(-10, 10, size=2)


def _noisy_expected_case():
    F = make_noisy_glm(seeded_stream(51), d=3, W=1.5, pool_size=100)
    return F.expected, lambda gen: gen.normal(size=3)


def _noisy_minibatch_case():
    F = make_noisy_glm(seeded_stream(52), d=3, W=1.5, pool_size=100)
    fb = F.sample_minibatch(seeded_stream(53).generator(), 16)
    from slqcopt import Objective

    f = Objective(dim=3, value=fb.value, gradient=fb.gradient)
    return f, lambda gen: gen.normal(size=3)


def _cliff_case():
    f = make_cliff_plateau()
    a, top = cliff_plateau_kinks()

    def draw(gen):
        # stay clear of the kinks so central differences see one branch
        while True:
            x = gen.uniform(-12, 12)
            if min(abs(abs(x) - a), abs(abs(x) - top), abs(x)) > 1e-3:
                return np.array([x])

    return f, draw


def _cone_case():
    f = make_cone(3)

    def draw(gen):
        while True:
            x = gen.normal(size=3)
            if np.linalg.norm(x) > 1e-3:
                return x

    return f, draw


@pytest.mark.parametrize("case", [
    _sigmoid_sum_case, _glm_case, _counterexample_case,
    _noisy_expected_case, _noisy_minibatch_case, _cliff_case, _cone_case,
], ids=["sigmoid_sum", "glm", "counterexample", "noisy_expected",
        "noisy_minibatch", "cliff", "cone"])
def test_gradient_matches_finite_differences(case):
    f, draw = case()
    gen = seeded_stream(99).generator()
    for _ in range(100):
        x = draw(gen)
        fd = finite_diff_gradient(f, x, h=1e-5)
        np.testing.assert_allclose(f.gradient(x), fd, rtol=1e-4, atol=1e-7)


def test_lower_bound_gradient_matches_finite_differences():
    F = make_lower_bound_distribution(0.1)
    gen = seeded_stream(98).generator()
    for _ in range(100):
        x = gen.uniform(-8, 8)
        if abs(x + 3.0) < 1e-3:
            continue
        pt = np.array([x])
        fd = finite_diff_gradient(F.expected, pt, h=1e-5)
        np.testing.assert_allclose(F.expected.gradient(pt), fd, rtol=1e-4, atol=1e-9)
