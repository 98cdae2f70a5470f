import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skinshape.fusion import EvalResult, FusionParams, evaluate, fuse, grid_search_mu

unit = st.floats(0.0, 1.0, allow_nan=False)


def sweep_oracle(h1, h2, labels, n=100, threshold=0.5):
    # plain loops over the same grid, literal formula with mu12 = 1
    best, best_j = None, None
    for i in range(n + 1):
        m1, m2 = i / n, (n - i) / n
        tp = fp = pos = neg = 0
        for a, b, lab in zip(h1, h2, labels):
            s = min(max((1.0 - (m2 + m1)) * a + m1 * a + m2 * b, 0.0), 1.0)
            if lab == 1:
                pos += 1
                tp += s > threshold
            else:
                neg += 1
                fp += s > threshold
        j = tp / pos - fp / neg
        key = (j, -abs(2 * i - n), -i)
        if best is None or key > best_j:
            best, best_j = i, key
    return best / n


def test_fuse_values():
    p = FusionParams(0.47, 0.53, 1.0)
    assert fuse(1.0, 0.0, p) == 0.47
    assert fuse(0.8, 0.6, p) == pytest.approx(0.694, abs=1e-12)
    assert fuse(0.3, 0.3, p) == pytest.approx(0.3)
    assert isinstance(fuse(0.2, 0.4), float)
    np.testing.assert_allclose(fuse(np.array([1.0, 0.0]), np.array([0.0, 1.0]), p), [0.47, 0.53])


def test_fuse_literal_form_and_clip():
    # mu12 below mu1 + mu2 keeps the bracket nonzero
    p = FusionParams(0.5, 0.5, 0.2)
    assert fuse(0.2, 0.9, p) == pytest.approx(-0.8 * 0.2 + 0.5 * 0.2 + 0.5 * 0.9)
    assert fuse(0.1, 0.0, p) == 0.0
    assert fuse(1.0, 1.0, FusionParams(0.9, 0.9, 1.5)) == 1.0


def test_params_validation():
    with pytest.raises(ValueError):
        FusionParams(1.2, 0.1)
    assert type(FusionParams(np.float64(0.3), 0.7).mu1) is float


@settings(max_examples=200, deadline=None)
@given(unit, unit, unit)
def test_fuse_between_inputs(h1, h2, m1):
    p = FusionParams(m1, 1.0 - m1, 1.0)
    out = fuse(h1, h2, p)
    assert min(h1, h2) - 1e-12 <= out <= max(h1, h2) + 1e-12


@settings(max_examples=200, deadline=None)
@given(unit, unit, unit, st.floats(0.0, 0.5))
def test_fuse_monotone(h1, h2, m1, bump):
    p = FusionParams(m1, 1.0 - m1, 1.0)
    assert fuse(min(h1 + bump, 1.0), h2, p) >= fuse(h1, h2, p) - 1e-12
    assert fuse(h1, min(h2 + bump, 1.0), p) >= fuse(h1, h2, p) - 1e-12


def test_evaluate_counts():
    r = evaluate([0.9, 0.6, 0.4, 0.7], [1, 1, 1, 1])
    assert r.tp_rate == 0.75 and r.fp_rate is None and r.youden is None
    r = evaluate([0.1, 0.2], [0, 0])
    assert r.fp_rate == 0.0 and r.tp_rate is None
    r = evaluate([0.5, 0.5, 0.5], [1, 0, 1])
    assert (r.tp, r.fn, r.fp, r.tn) == (0, 2, 0, 1)
    with pytest.raises(ValueError):
        evaluate([], [])
    with pytest.raises(ValueError):
        evaluate([0.1], [1, 0])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(unit, st.integers(0, 1)), min_size=1, max_size=50))
def test_evaluate_totals(pairs):
    s, lab = map(np.array, zip(*pairs))
    r = evaluate(s, lab)
    assert r.tp + r.fn == int(np.sum(lab == 1))
    assert r.fp + r.tn == int(np.sum(lab == 0))
    assert isinstance(r, EvalResult)


def test_sweep_matches_oracle(rng):
    for _ in range(5):
        n = 60
        labels = rng.integers(0, 2, n)
        labels[:2] = (0, 1)
        h1 = np.clip(labels * 0.3 + rng.uniform(0, 0.7, n), 0, 1)
        h2 = np.clip(labels * 0.2 + rng.uniform(0, 0.8, n), 0, 1)
        res = grid_search_mu(h1, h2, labels)
        assert res.params.mu1 == sweep_oracle(h1, h2, labels)
        assert res.params.mu1 + res.params.mu2 == pytest.approx(1.0)
        assert len(res.rows()) == 101
        assert res.mu1[0] == 0.0 and res.mu1[-1] == 1.0


def test_sweep_perfect_vs_random(rng):
    labels = np.r_[np.ones(200), np.zeros(200)]
    h1 = np.where(labels == 1, 0.501, 0.499)
    h2 = rng.uniform(0, 1, 400)
    assert grid_search_mu(h1, h2, labels).params.mu1 == 1.0
    assert grid_search_mu(h2, h1, labels).params.mu1 == 0.0


def test_sweep_identical_and_swap(rng):
    labels = rng.integers(0, 2, 80)
    h = rng.uniform(0, 1, 80)
    res = grid_search_mu(h, h, labels)
    assert np.ptp(res.objective) == 0 and res.params.mu1 == 0.5
    h1 = np.clip(labels * 0.4 + rng.uniform(0, 0.6, 80), 0, 1)
    h2 = np.clip(labels * 0.1 + rng.uniform(0, 0.9, 80), 0, 1)
    a = grid_search_mu(h1, h2, labels)
    b = grid_search_mu(h2, h1, labels)
    np.testing.assert_array_equal(a.objective, b.objective[::-1])


def test_sweep_errors():
    with pytest.raises(ValueError):
        grid_search_mu([0.2, 0.3], [0.1, 0.9], [1, 1])
    with pytest.raises(ValueError):
        grid_search_mu([0.2, 0.3], [0.1, 0.9], [1, 0], step=0.3)
