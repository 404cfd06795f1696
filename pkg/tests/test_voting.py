import itertools

import numpy as np
import pytest

from sarcens.predictions import PredictionMatrix
from sarcens.voting import (
    VotingConfig,
    hard_vote,
    mixed_vote,
    soft_vote,
    tune_cutoff,
    vote_matrix,
    vote_row,
)

CFG = VotingConfig()


def majority_oracle(row, threshold=0.5, tie_label=0):
    """Independent enumeration: binarize then literally count votes."""
    votes = [1 if p > threshold else 0 for p in row]
    ones = votes.count(1)
    zeros = votes.count(0)
    if ones == zeros:
        return tie_label
    return 1 if ones > zeros else 0


def random_matrix(rng, n_rows, m):
    probs = rng.random((n_rows, m))
    labels = rng.integers(0, 2, size=n_rows)
    return PredictionMatrix(
        model_ids=tuple(f"m{j}" for j in range(m)),
        example_ids=tuple(f"e{i}" for i in range(n_rows)),
        probs=probs,
        labels=labels,
    )


class TestHardVote:
    def test_forced_majority(self):
        assert hard_vote((0.9, 0.8, 0.2), CFG) == 1

    def test_tie_returns_tie_label(self):
        assert hard_vote((0.6, 0.4), CFG) == 0
        assert hard_vote((0.6, 0.4), VotingConfig(tie_label=1)) == 1

    def test_single_model_is_binarization(self):
        assert hard_vote((0.7,), CFG) == 1
        assert hard_vote((0.3,), CFG) == 0
        assert hard_vote((0.5,), CFG) == 0  # strict >

    def test_empty_row_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            hard_vote((), CFG)

    def test_brute_force_oracle_all_grid_rows(self):
        grid = (0.0, 0.25, 0.5, 0.75, 1.0)
        for m in (1, 2, 3, 4):
            for row in itertools.product(grid, repeat=m):
                assert hard_vote(row, CFG) == majority_oracle(row), row


class TestSoftVote:
    def test_mean_above_threshold(self):
        assert soft_vote((0.9, 0.8, 0.2), CFG) == 1  # mean 0.6333

    def test_exact_tie_mean(self):
        assert soft_vote((0.99, 0.01), CFG) == 0
        assert soft_vote((0.99, 0.01), VotingConfig(tie_label=1)) == 1

    def test_constant_row(self):
        assert soft_vote((0.8, 0.8, 0.8), CFG) == 1
        assert soft_vote((0.2, 0.2), CFG) == 0
        assert soft_vote((0.5, 0.5), CFG) == 0  # mean == threshold -> tie label

    def test_empty_row_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            soft_vote((), CFG)


class TestMixedVote:
    def test_hand_computed_example(self):
        row = (0.9, 0.55, 0.45, 0.1, 0.48)
        # 2 positive vs 3 negative: |diff| = 1 <= 2, soft path, mean 0.496 -> 0
        assert mixed_vote(row, VotingConfig(scheme="mixed", cutoff_n=2)) == 0

    def test_n_zero_odd_m_equals_hard(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            row = tuple(rng.random(5))
            assert mixed_vote(row, VotingConfig(scheme="mixed", cutoff_n=0)) == hard_vote(row, CFG)

    def test_n_equals_m_equals_soft(self):
        rng = np.random.default_rng(8)
        for _ in range(200):
            row = tuple(rng.random(5))
            assert mixed_vote(row, VotingConfig(scheme="mixed", cutoff_n=5)) == soft_vote(row, CFG)

    def test_n_out_of_range_rejected(self):
        with pytest.raises(ValueError, match="cutoff_n"):
            mixed_vote((0.4, 0.6), VotingConfig(scheme="mixed", cutoff_n=3))


class TestProperties:
    def test_extreme_n_equivalences_500_matrices(self):
        rng = np.random.default_rng(2024)
        for case in range(500):
            m = int(rng.choice((3, 5, 7, 9, 11)))
            matrix = random_matrix(rng, n_rows=int(rng.integers(1, 12)), m=m)
            hard = vote_matrix(matrix, VotingConfig(scheme="hard"))
            soft = vote_matrix(matrix, VotingConfig(scheme="soft"))
            mixed0 = vote_matrix(matrix, VotingConfig(scheme="mixed", cutoff_n=0))
            mixedm = vote_matrix(matrix, VotingConfig(scheme="mixed", cutoff_n=m))
            assert (mixed0 == hard).all(), f"case {case}: mixed(0) != hard"
            assert (mixedm == soft).all(), f"case {case}: mixed(M) != soft"

    def test_column_permutation_invariance(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            m = int(rng.integers(1, 8))
            row = tuple(rng.random(m))
            permuted = tuple(np.array(row)[rng.permutation(m)])
            for config in (
                VotingConfig(scheme="hard"),
                VotingConfig(scheme="soft"),
                VotingConfig(scheme="mixed", cutoff_n=int(rng.integers(0, m + 1))),
            ):
                assert vote_row(row, config) == vote_row(permuted, config)

    def test_soft_vote_monotone(self):
        rng = np.random.default_rng(4)
        for _ in range(200):
            m = int(rng.integers(1, 8))
            row = list(rng.random(m))
            before = soft_vote(row, CFG)
            j = int(rng.integers(0, m))
            row[j] = min(1.0, row[j] + float(rng.random()))
            after = soft_vote(row, CFG)
            assert not (before == 1 and after == 0)


class TestTuneCutoff:
    def test_exhaustive_scan_smallest_tie(self):
        # One strong column among weak ones: every n gives the same accuracy
        # on this tiny matrix, so the tie must resolve to the smallest n.
        matrix = PredictionMatrix(
            model_ids=("a", "b", "c"),
            example_ids=("e1", "e2"),
            probs=np.array([[0.9, 0.8, 0.7], [0.1, 0.2, 0.3]]),
            labels=np.array([1, 0]),
        )
        n_star, acc = tune_cutoff(matrix, CFG)
        assert n_star == 0
        assert acc == 1.0

    def test_picks_accuracy_maximizing_n(self):
        # Crafted so hard voting errs but soft voting is right: two confident
        # wrong votes vs one very confident right vote.
        probs = np.array([[0.95, 0.45, 0.40]])
        labels = np.array([1])
        matrix = PredictionMatrix(("a", "b", "c"), ("e1",), probs, labels)
        n_star, acc = tune_cutoff(matrix, CFG)
        # hard vote: 1 positive vs 2 negative -> 0 (wrong); soft: mean 0.6 -> 1
        assert acc == 1.0
        assert n_star == 1  # smallest n whose mixed vote goes soft

    def test_matches_explicit_scan(self):
        rng = np.random.default_rng(5)
        matrix = random_matrix(rng, n_rows=40, m=5)
        n_star, acc = tune_cutoff(matrix, CFG)
        accs = []
        for n in range(6):
            preds = vote_matrix(matrix, VotingConfig(scheme="mixed", cutoff_n=n))
            accs.append(float((preds == matrix.labels).mean()))
        assert acc == max(accs)
        assert n_star == accs.index(max(accs))
