"""ROC-AUC and Spearman correlation against brute-force oracles."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rankfit import DegenerateInput, LengthMismatch, SingleClass
from rankfit.evaluation import roc_auc, spearman_rho


def pairwise_auc(scores, labels):
    """O(n^2) oracle: fraction of positive-negative pairs correctly ordered."""
    pos = [s for s, y in zip(scores, labels) if y]
    neg = [s for s, y in zip(scores, labels) if not y]
    wins = 0.0
    for p in pos:
        for n in neg:
            if p > n:
                wins += 1.0
            elif p == n:
                wins += 0.5
    return wins / (len(pos) * len(neg))


class TestRocAuc:
    def test_perfect_separation(self):
        assert roc_auc([1, 2, 3, 10, 11], [0, 0, 0, 1, 1]) == 1.0

    def test_all_tied(self):
        assert roc_auc([5.0] * 6, [1, 0, 1, 0, 1, 0]) == 0.5

    def test_pairwise_oracle_random(self):
        rng = np.random.default_rng(31)
        for _ in range(30):
            n = int(rng.integers(4, 40))
            scores = rng.integers(0, 10, n).astype(float)  # ties likely
            labels = rng.integers(0, 2, n).astype(bool)
            if labels.all() or not labels.any():
                continue
            assert roc_auc(scores, labels) == pytest.approx(
                pairwise_auc(scores, labels), abs=1e-12)

    @given(st.lists(st.tuples(st.floats(-50, 50), st.booleans()),
                    min_size=4, max_size=40))
    @settings(max_examples=60, deadline=None)
    def test_label_flip_antisymmetry(self, pairs):
        scores = [s for s, _ in pairs]
        labels = [y for _, y in pairs]
        if all(labels) or not any(labels):
            return
        a = roc_auc(scores, labels)
        b = roc_auc(scores, [not y for y in labels])
        assert a + b == pytest.approx(1.0, abs=1e-12)

    @given(st.lists(st.tuples(st.integers(-320, 320), st.booleans()),
                    min_size=4, max_size=30))
    @settings(max_examples=60, deadline=None)
    def test_monotone_transform_invariance(self, pairs):
        # lattice scores keep the transforms strictly monotone in float64
        scores = np.array([s for s, _ in pairs], dtype=float) / 16.0
        labels = [y for _, y in pairs]
        if all(labels) or not any(labels):
            return
        base = roc_auc(scores, labels)
        assert roc_auc(3.0 * scores + 7.0, labels) == pytest.approx(base, abs=1e-12)
        assert roc_auc(np.exp(scores / 10.0), labels) == pytest.approx(base, abs=1e-12)

    def test_single_class(self):
        with pytest.raises(SingleClass):
            roc_auc([1.0, 2.0], [1, 1])
        with pytest.raises(SingleClass):
            roc_auc([1.0, 2.0], [0, 0])

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            roc_auc([1.0, 2.0], [1])

    def test_nonfinite_score(self):
        with pytest.raises(ValueError):
            roc_auc([np.nan, 1.0], [1, 0])


class TestSpearman:
    def test_identical(self):
        assert spearman_rho([1, 5, 9, 12], [1, 5, 9, 12]) == pytest.approx(1.0)

    def test_monotone_equivalent(self):
        assert spearman_rho([1, 2, 3, 4], [10, 100, 1000, 10_000]) == pytest.approx(1.0)

    def test_reversed(self):
        assert spearman_rho([1, 2, 3, 4], [9, 7, 5, 3]) == pytest.approx(-1.0)

    def test_ties_against_brute_force(self):
        xs = [3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0, 5.0, 3.0]
        ys = [2.0, 7.0, 1.0, 8.0, 2.0, 8.0, 1.0, 8.0, 2.0, 8.0]

        def avg_ranks(vals):
            order = sorted(range(len(vals)), key=lambda i: vals[i])
            ranks = [0.0] * len(vals)
            i = 0
            while i < len(order):
                j = i
                while j < len(order) and vals[order[j]] == vals[order[i]]:
                    j += 1
                avg = (i + 1 + j) / 2.0
                for k in range(i, j):
                    ranks[order[k]] = avg
                i = j
            return ranks

        rx, ry = avg_ranks(xs), avg_ranks(ys)
        mx, my = sum(rx) / len(rx), sum(ry) / len(ry)
        num = sum((a - mx) * (b - my) for a, b in zip(rx, ry))
        den = (sum((a - mx) ** 2 for a in rx) * sum((b - my) ** 2 for b in ry)) ** 0.5
        assert spearman_rho(xs, ys) == pytest.approx(num / den, abs=1e-12)

    def test_too_short(self):
        with pytest.raises(DegenerateInput):
            spearman_rho([1, 2], [3, 4])

    def test_constant_input(self):
        with pytest.raises(DegenerateInput):
            spearman_rho([1, 1, 1], [1, 2, 3])

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            spearman_rho([1, 2, 3], [1, 2])
