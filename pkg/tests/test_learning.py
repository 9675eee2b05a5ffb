import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from filament_net import learning, synthgen
from filament_net.errors import DegenerateTrainingSet, ShapeError
from filament_net.image_io import ImageFragment, LabelMask
from filament_net.learning import (
    PerceptronConfig,
    TrainingSet,
    build_training_set,
    fit_background,
    fit_background_robust,
    train,
    train_perceptron,
    training_error,
)
from filament_net.network import OutputWeights, normalize_index
from filament_net.windowing import WindowConfig


def tgrid(q):
    return np.asarray(normalize_index(np.arange(1, q + 1), q))


def coeffs(report):
    return np.array([report.coefficients.c0, report.coefficients.c1, report.coefficients.c2])


def grid_search_fit(s, centre, half_width, steps):
    """Brute-force minimiser of sum_j (c0 + c1 t + c2 t^2 - s_j)^2 on a grid.

    The grid lives on the coordinates ``a = (c0 + c2/3, c1, c2)`` of the nearly
    orthogonal basis ``(1, t, t^2 - 1/3)`` so that the lattice argmin sits
    within about half a step of the true minimum in every coordinate. Each
    level evaluates the squared error directly on 21^3 nodes, then zooms in on
    the best one. Returns ``(best a, final step)``.
    """
    t = tgrid(s.size)
    p2 = t * t - 1.0 / 3.0
    c = np.asarray(centre, dtype=float)
    centre = np.array([c[0] + c[2] / 3.0, c[1], c[2]])
    for _ in range(steps):
        axes = [np.linspace(a - half_width, a + half_width, 21) for a in centre]
        step = axes[0][1] - axes[0][0]
        g0, g1, g2 = np.meshgrid(*axes, indexing="ij")
        cand = np.stack([g0.ravel(), g1.ravel(), g2.ravel()], axis=1)
        err = np.empty(len(cand))
        for i in range(0, len(cand), 1024):
            a = cand[i:i + 1024]
            pred = a[:, :1] + a[:, 1:2] * t + a[:, 2:3] * p2
            err[i:i + 1024] = ((pred - s) ** 2).sum(axis=1)
        centre = cand[np.argmin(err)]
        half_width = 2 * step
    return centre, step


def to_orthogonal(c):
    return np.array([c[0] + c[2] / 3.0, c[1], c[2]])


def test_constant_fit():
    r = fit_background(np.full(50, 40.0))
    assert coeffs(r) == pytest.approx([40, 0, 0], abs=1e-12)
    assert r.rms_residual == pytest.approx(0, abs=1e-12)
    assert r.iterations == 1 and not r.reweighted


def test_exact_parabola_recovered():
    t = tgrid(101)
    r = fit_background(2 + 3 * t + t * t)
    assert np.max(np.abs(coeffs(r) - [2, 3, 1])) < 1e-9
    assert r.rms_residual < 1e-9


def test_linear_fit_degree1():
    t = tgrid(33)
    r = fit_background(5 - 2 * t, degree=1)
    assert r.coefficients.degree == 1 and r.coefficients.c2 == 0.0
    assert np.max(np.abs(coeffs(r) - [5, -2, 0])) < 1e-12


def test_noisy_fit_matches_grid_search(rng):
    q = 1001
    t = tgrid(q)
    truth = np.array([10.0, -4.0, 2.5])
    s = truth[0] + truth[1] * t + truth[2] * t * t + rng.normal(0, 5, q)
    ols = coeffs(fit_background(s))
    grid, step = grid_search_fit(s, truth, 2.0, 4)
    assert np.all(np.abs(to_orthogonal(ols) - grid) <= step)


def test_too_few_samples():
    with pytest.raises(ShapeError):
        fit_background([1.0, 2.0], degree=2)
    with pytest.raises(ValueError):
        fit_background([1.0, 2.0, 3.0], degree=3)


def test_residual_orthogonal_to_basis(rng):
    q = 5000
    s = rng.normal(100, 30, q)
    c = coeffs(fit_background(s))
    t = tgrid(q)
    res = s - (c[0] + c[1] * t + c[2] * t * t)
    for col in (np.ones(q), t, t * t):
        assert abs(res @ col) <= 1e-8 * np.linalg.norm(res) * np.linalg.norm(col)


@settings(max_examples=40, deadline=None)
@given(st.integers(5, 400), st.floats(-1e3, 1e3), st.floats(-1e3, 1e3), st.floats(-1e3, 1e3),
       st.floats(-1e3, 1e3), st.integers(0, 2**32 - 1))
def test_projection_invariance(q, a0, a1, a2, const, seed):
    s = np.random.default_rng(seed).normal(0, 50, q)
    t = tgrid(q)
    base = coeffs(fit_background(s))
    shifted = coeffs(fit_background(s + const))
    assert shifted[0] == pytest.approx(base[0] + const, abs=1e-8 * (1 + abs(const)))
    assert shifted[1:] == pytest.approx(base[1:], abs=1e-8)
    added = a0 + a1 * t + a2 * t * t
    res1 = s - (base[0] + base[1] * t + base[2] * t * t)
    c2 = coeffs(fit_background(s + added))
    res2 = s + added - (c2[0] + c2[1] * t + c2[2] * t * t)
    assert np.max(np.abs(res1 - res2)) < 1e-8


def test_robust_equals_ols_without_outliers(rng):
    q = 300
    t = tgrid(q)
    s = 50 + 10 * t + rng.uniform(-1, 1, q)
    ols = fit_background(s)
    rob = fit_background_robust(s, huber_delta=5.0)
    assert rob.coefficients == ols.coefficients
    assert rob.iterations == 1 and not rob.reweighted


def test_robust_huge_delta_equals_ols(rng):
    s = rng.standard_cauchy(500) * 20
    assert fit_background_robust(s, huber_delta=1e12).coefficients == fit_background(s).coefficients
    assert fit_background_robust(s, huber_delta=np.inf).coefficients == fit_background(s).coefficients


def test_robust_first_iteration_is_ols(rng):
    s = rng.normal(0, 1, 200)
    s[::10] += 100
    assert fit_background_robust(s, max_iters=1).coefficients == fit_background(s).coefficients


def spiked_parabola(seed, q=1001, frac=0.05, spike=200.0):
    r = np.random.default_rng(seed)
    t = tgrid(q)
    truth = np.array([r.uniform(50, 150), r.uniform(-30, 30), r.uniform(-20, 20)])
    s = truth[0] + truth[1] * t + truth[2] * t * t
    idx = r.choice(q, int(round(frac * q)), replace=False)
    s[idx] += spike
    return s, truth


@pytest.mark.parametrize("seed", range(10))
def test_robust_beats_ols_on_spikes(seed):
    s, truth = spiked_parabola(seed)
    ols_err = np.linalg.norm(coeffs(fit_background(s)) - truth)
    rob = fit_background_robust(s)
    assert rob.reweighted
    assert np.linalg.norm(coeffs(rob) - truth) < ols_err


def test_huber_weights():
    w = learning.huber_weights(np.array([-4.0, -1.0, 0.0, 2.0, 8.0]), 2.0)
    assert w.tolist() == [0.5, 1.0, 1.0, 1.0, 0.25]


# --------------------------------------------------------------------------
# perceptron


def toy_set(copies=50):
    x = np.array([[0.9, 0.1], [0.1, 0.9]] * copies)
    t = np.array([1, 0] * copies)
    return TrainingSet(x, t, 1.0)


def test_perceptron_separable_toy():
    res = train_perceptron(toy_set(), PerceptronConfig())
    assert res.errors == 0
    assert training_error(toy_set(), res.weights) == 0
    assert res.epochs < 200  # early stop fired


def test_perceptron_update_rule_by_hand():
    ts = TrainingSet(np.array([[1.0, 2.0]]), np.array([0]), 1.0)
    res = train_perceptron(ts, PerceptronConfig(learning_rate=0.5, max_epochs=1, early_stop=False))
    # start (0,0,0) says filament (0 >= 0); target 0 -> ws -= .5, wu -= 1, w0 += .5
    assert res.weights == OutputWeights(0.5, -0.5, -1.0)
    assert res.errors == 0


def test_perceptron_best_snapshot_not_worse_than_start(rng):
    x = rng.uniform(0, 1, (400, 2))
    t = (rng.uniform(size=400) < 0.3).astype(int)  # pure noise labels
    ts = TrainingSet(x, t, 1.0)
    start = training_error(ts, OutputWeights(0.0, 0.0, 0.0))
    res = train_perceptron(ts, PerceptronConfig(max_epochs=30))
    assert res.errors <= start
    assert res.errors == training_error(ts, res.weights)
    assert res.errors == min(res.history)


def test_perceptron_deterministic(rng):
    x = rng.uniform(0, 1, (500, 2))
    t = (x[:, 0] - x[:, 1] + rng.normal(0, 0.1, 500) > 0).astype(int)
    ts = TrainingSet(x, t, 1.0)
    a = train_perceptron(ts, PerceptronConfig(shuffle_seed=9))
    b = train_perceptron(ts, PerceptronConfig(shuffle_seed=9))
    assert a == b


def test_duplicated_examples_same_classifications():
    ts = toy_set(10)
    dup = TrainingSet(np.repeat(ts.features, 2, axis=0), np.repeat(ts.targets, 2), 1.0)
    a = train_perceptron(ts).weights
    b = train_perceptron(dup).weights
    from filament_net.network import decide

    assert np.array_equal(decide(ts.features, a), decide(ts.features, b))


def test_feature_scaling_with_rescaled_weights(rng):
    x = rng.uniform(0, 1, (300, 2))
    t = (x[:, 0] > x[:, 1]).astype(int)
    w = train_perceptron(TrainingSet(x, t, 1.0)).weights
    from filament_net.network import decide

    lam = 3.7
    rescaled = OutputWeights(w.w0, w.ws / lam, w.wu / lam)
    assert np.array_equal(decide(x, w), decide(x * lam, rescaled))


def test_training_set_invalid_targets():
    with pytest.raises(ValueError):
        TrainingSet(np.zeros((2, 2)), np.array([0, 2]), 1.0)


# --------------------------------------------------------------------------
# training set and full training


def test_training_set_size_and_scale(seed1_fragment):
    X, M = seed1_fragment
    ts = build_training_set(X, M, WindowConfig(5))
    assert len(ts) == (X.height - 4) * (X.width - 4)
    assert ts.scale == 25 * 255


def test_training_set_degenerate():
    X = ImageFragment(np.full((8, 8), 100, dtype=np.uint8))
    with pytest.raises(DegenerateTrainingSet):
        build_training_set(X, LabelMask(np.ones((8, 8), dtype=bool)), WindowConfig(3))
    with pytest.raises(DegenerateTrainingSet):
        build_training_set(X, LabelMask(np.zeros((8, 8), dtype=bool)), WindowConfig(3))


def test_training_set_dimension_mismatch():
    X = ImageFragment(np.full((8, 8), 100, dtype=np.uint8))
    with pytest.raises(ShapeError, match="8x9.*8x8"):
        build_training_set(X, LabelMask(np.zeros((8, 9), dtype=bool)), WindowConfig(3))


def test_training_set_class_proportions_seed7():
    (X, M), = synthgen.corpus(1, seed=7)
    ts = build_training_set(X, M, WindowConfig(5))
    interior = M.labels[2:-2, 2:-2]
    assert ts.targets.sum() == np.count_nonzero(interior)
    assert len(ts) - ts.targets.sum() == np.count_nonzero(~interior)


def test_train_bundles_model(seed1_model):
    m = seed1_model
    assert np.all(m.summation.weights == 1.0) and m.summation.bias == 0.0
    assert m.bg_refit and m.feature_scale == 25 * 255
    assert (m.output.ws, m.output.wu) != (0.0, 0.0)


def test_filament_side_is_darker():
    p = synthgen.SynthParams(
        n=64, m=64, background=(150, 0, 0, 0, 0), noise_sigma=2.0, seed=3,
        filaments=(synthgen.Filament(((32.0, 5.0), (32.0, 58.0)), half_width=3, depth=50),),
    )
    X, M = synthgen.generate(p)
    model = train(X, M, WindowConfig(5))
    assert model.output.ws < 0  # lower window sum pushes towards filament
