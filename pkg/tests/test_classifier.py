import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from codevault.classifier import (LOG_HALF, CategoricalModel, ClassifierConfig,
                                  EmptyDatasetError, GaussianModel,
                                  IncompatibleSignalError, LabeledDataset,
                                  dataset_from_pairs, fit, loo_log_score,
                                  predict_prob)
from codevault.signals import ButtonPress, MeaningLabel, PointSignal

from conftest import random_dataset, refit_loo_oracle

A, B = MeaningLabel.A, MeaningLabel.B


def gauss_data(points_a, points_b):
    pairs = [(PointSignal(tuple(p)), A) for p in points_a]
    pairs += [(PointSignal(tuple(p)), B) for p in points_b]
    return dataset_from_pairs(pairs)


class TestLabeledDataset:
    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            LabeledDataset((ButtonPress(0),), (A, B))

    def test_mixed_variants_rejected(self):
        with pytest.raises(ValueError):
            LabeledDataset((ButtonPress(0), PointSignal((0.0,))), (A, B))

    def test_mixed_dimensions_rejected(self):
        with pytest.raises(ValueError):
            LabeledDataset((PointSignal((0.0,)), PointSignal((0.0, 1.0))), (A, B))


class TestFit:
    def test_empty_dataset(self):
        with pytest.raises(EmptyDatasetError):
            fit(dataset_from_pairs([]))

    def test_two_point_gaussian_hits_variance_floor(self):
        model = fit(gauss_data([(0.0, 0.0)], [(4.0, 0.0)]),
                    ClassifierConfig(var_floor=1e-6))
        assert isinstance(model, GaussianModel)
        np.testing.assert_allclose(model.means[0], [0.0, 0.0])
        np.testing.assert_allclose(model.means[1], [4.0, 0.0])
        np.testing.assert_allclose(model.var, [1e-6, 1e-6])

    def test_recovers_cluster_means(self, rng):
        pa = rng.normal((0.0, 0.0), 1.0, size=(100, 2))
        pb = rng.normal((4.0, 0.0), 1.0, size=(100, 2))
        model = fit(gauss_data(pa, pb))
        tol = 3.0 / math.sqrt(100)
        assert np.all(np.abs(model.means[0] - (0.0, 0.0)) < tol)
        assert np.all(np.abs(model.means[1] - (4.0, 0.0)) < tol)

    def test_categorical_laplace(self):
        data = dataset_from_pairs(
            [(ButtonPress(0), A)] * 3 + [(ButtonPress(0), B)])
        model = fit(data, ClassifierConfig(laplace_alpha=1.0))
        assert isinstance(model, CategoricalModel)
        assert predict_prob(model, ButtonPress(0)) == pytest.approx(4 / 6)


class TestPredictProb:
    def test_midpoint_is_half(self):
        model = fit(gauss_data([(0.0, 0.0), (0.1, 0.0), (-0.1, 0.0)],
                               [(4.0, 0.0), (4.1, 0.0), (3.9, 0.0)]))
        assert predict_prob(model, PointSignal((2.0, 0.0))) == pytest.approx(0.5, abs=1e-9)

    def test_near_own_mean(self):
        model = fit(gauss_data([(0.0, 0.0), (0.1, 0.0), (-0.1, 0.0)],
                               [(4.0, 0.0), (4.1, 0.0), (3.9, 0.0)]))
        assert predict_prob(model, PointSignal((0.0, 0.0))) > 0.99

    def test_one_class_model_uninformed(self):
        model = fit(gauss_data([(0.0, 0.0), (1.0, 1.0)], []))
        assert predict_prob(model, PointSignal((50.0, 50.0))) == 0.5
        cat = fit(dataset_from_pairs([(ButtonPress(0), A)] * 3))
        assert predict_prob(cat, ButtonPress(1)) == 0.5

    def test_output_stays_inside_unit_interval(self):
        model = fit(gauss_data([(0.0, 0.0)], [(100.0, 0.0)]))
        p = predict_prob(model, PointSignal((200.0, 0.0)))
        assert 0.0 < p < 1.0

    def test_incompatible_signal(self):
        model = fit(gauss_data([(0.0, 0.0)], [(1.0, 0.0)]))
        with pytest.raises(IncompatibleSignalError):
            predict_prob(model, ButtonPress(0))
        with pytest.raises(IncompatibleSignalError):
            predict_prob(model, PointSignal((0.0,)))

    def test_gaussian_monotone_toward_mean_1d(self):
        pairs = [(PointSignal((x,)), A) for x in (-1.0, -1.2, -0.8)]
        pairs += [(PointSignal((x,)), B) for x in (1.0, 1.2, 0.8)]
        model = fit(dataset_from_pairs(pairs))
        xs = np.linspace(2.0, -2.0, 41)
        probs = [predict_prob(model, PointSignal((float(x),))) for x in xs]
        assert all(b >= a - 1e-12 for a, b in zip(probs, probs[1:]))


class TestLooScore:
    def test_single_sample_is_log_half(self):
        assert loo_log_score(dataset_from_pairs([(ButtonPress(0), A)])) == LOG_HALF

    def test_empty_dataset(self):
        with pytest.raises(EmptyDatasetError):
            loo_log_score(dataset_from_pairs([]))

    def test_separated_clusters_score_high(self, rng):
        pa = rng.normal((-1.0, 0.0), 0.25, size=(20, 2))
        pb = rng.normal((1.0, 0.0), 0.25, size=(20, 2))
        assert loo_log_score(gauss_data(pa, pb)) > math.log(0.9)

    def test_permuted_labels_score_near_chance(self, rng):
        pa = rng.normal((-1.0, 0.0), 0.25, size=(20, 2))
        pb = rng.normal((1.0, 0.0), 0.25, size=(20, 2))
        signals = [PointSignal(tuple(p)) for p in np.vstack([pa, pb])]
        labels = [A] * 20 + [B] * 20
        perm = rng.permutation(40)
        shuffled = dataset_from_pairs(
            [(signals[i], labels[j]) for i, j in enumerate(perm)])
        assert abs(loo_log_score(shuffled) - LOG_HALF) < 0.25

    def test_matches_refit_oracle_gaussian(self, rng):
        for _ in range(50):
            data = random_dataset(rng, continuous=True)
            for cfg in (ClassifierConfig(), ClassifierConfig(var_shrink=2.0)):
                assert loo_log_score(data, cfg) == pytest.approx(
                    refit_loo_oracle(data, cfg), abs=1e-10)

    def test_matches_refit_oracle_categorical(self, rng):
        for _ in range(50):
            data = random_dataset(rng, continuous=False)
            assert loo_log_score(data) == pytest.approx(
                refit_loo_oracle(data), abs=1e-10)


# --- property tests -------------------------------------------------------

label_lists = st.lists(st.booleans(), min_size=2, max_size=10)


@st.composite
def continuous_datasets(draw):
    labels = draw(label_lists)
    coords = st.floats(-5.0, 5.0, allow_nan=False, width=32)
    pts = [draw(st.tuples(coords, coords)) for _ in labels]
    return dataset_from_pairs(
        [(PointSignal(p), A if b else B) for p, b in zip(pts, labels)])


@st.composite
def categorical_datasets(draw):
    labels = draw(label_lists)
    syms = [draw(st.integers(0, 1)) for _ in labels]
    return dataset_from_pairs(
        [(ButtonPress(s), A if b else B) for s, b in zip(syms, labels)])


def complemented(data):
    return dataset_from_pairs(
        [(s, l.complement) for s, l in zip(data.signals, data.labels)])


@settings(max_examples=60, deadline=None)
@given(continuous_datasets())
def test_label_symmetry_gaussian(data):
    assert abs(loo_log_score(data) - loo_log_score(complemented(data))) <= 1e-12


@settings(max_examples=60, deadline=None)
@given(categorical_datasets())
def test_label_symmetry_categorical(data):
    assert abs(loo_log_score(data) - loo_log_score(complemented(data))) <= 1e-12


@settings(max_examples=60, deadline=None)
@given(continuous_datasets(), st.randoms(use_true_random=False))
def test_order_invariance(data, pyrng):
    pairs = list(zip(data.signals, data.labels))
    pyrng.shuffle(pairs)
    assert loo_log_score(dataset_from_pairs(pairs)) == \
        pytest.approx(loo_log_score(data), abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(continuous_datasets())
def test_loo_equals_refit_oracle(data):
    assert loo_log_score(data) == pytest.approx(refit_loo_oracle(data), abs=1e-10)
