import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from anchorcal.core import ContractError
from anchorcal.metrics import (
    Bin,
    DiscreteJoint,
    ReliabilityReport,
    auroc,
    binary_entropy,
    ece,
    ece_from_bins,
    joint_auc,
    lemma1_bound,
    minmax_normalize,
    mutual_information,
    mutual_information_kl,
    pinsker_chain,
    prop1_bound,
    random_joint,
    reliability_bins,
    tv_distance,
)


def brute_auroc(scores, labels):
    pos = [s for s, c in zip(scores, labels) if c == 1]
    neg = [s for s, c in zip(scores, labels) if c == 0]
    wins = sum(1 for p in pos for q in neg if p > q)
    ties = sum(1 for p in pos for q in neg if p == q)
    return (wins + 0.5 * ties) / (len(pos) * len(neg))


def brute_ece(preds, labels, m):
    n = len(preds)
    terms = []
    for k in range(m):
        lo, hi = k / m, (k + 1) / m
        members = [i for i, p in enumerate(preds) if (lo <= p < hi) or (k == m - 1 and p == 1.0)]
        if members:
            conf = math.fsum(preds[i] for i in members) / len(members)
            acc = sum(labels[i] for i in members) / len(members)
            terms.append(len(members) / n * abs(acc - conf))
    return math.fsum(terms)


def brute_joint_auc(j):
    pos = j.conditional(1).probs
    neg = j.conditional(0).probs
    total = 0.0
    for a, sa in enumerate(j.support):
        for b, sb in enumerate(j.support):
            if sa > sb:
                total += pos[a] * neg[b]
            elif sa == sb:
                total += 0.5 * pos[a] * neg[b]
    return total


class TestAuroc:
    def test_separated(self):
        assert auroc([(0.9, 1), (0.1, 0)]) == 1.0

    def test_all_ties(self):
        assert auroc([(0.5, 1), (0.5, 0)]) == 0.5

    def test_enumerated_example(self):
        assert auroc([(0.9, 1), (0.2, 1), (0.8, 0), (0.1, 0)]) == 0.75

    def test_degenerate(self):
        with pytest.raises(ContractError, match="degenerate-class"):
            auroc([(0.1, 1), (0.2, 1)])

    def test_matches_brute_force(self, rng):
        for _ in range(50):
            n = int(rng.integers(2, 60))
            s = rng.integers(0, 8, n).astype(float)
            c = rng.integers(0, 2, n)
            c[0], c[1] = 0, 1
            assert auroc(s, c) == brute_auroc(s, c)

    def test_monotone_transform_invariance(self, rng):
        s = np.round(rng.normal(size=300), 1)
        c = rng.integers(0, 2, 300)
        base = auroc(s, c)
        assert auroc(np.exp(s), c) == base
        assert auroc(3 * s + 7, c) == base

    def test_negation_without_ties(self, rng):
        s = rng.normal(size=200)
        c = rng.integers(0, 2, 200)
        assert auroc(-s, c) == pytest.approx(1 - auroc(s, c), abs=1e-15)


class TestEce:
    def test_perfect(self):
        assert ece([1.0] * 4, [1] * 4) == 0.0

    def test_overconfident_half(self):
        assert ece([1.0] * 4, [1, 0, 1, 0]) == 0.5

    def test_single_bin_calibrated(self):
        labels = [1] * 13 + [0] * 7
        assert ece([0.65] * 20, labels) == pytest.approx(0.0, abs=1e-15)

    def test_rejects_unnormalized(self):
        with pytest.raises(ContractError, match="unnormalized-prediction"):
            ece([0.5, 1.2], [1, 0])
        with pytest.raises(ContractError, match="unnormalized-prediction"):
            ece([-0.01], [1])

    def test_edges(self):
        # 0.1 opens bin 1, 1.0 closes the last bin
        rep = reliability_bins([0.1, 1.0, 0.0, 0.95], [0, 1, 0, 1], 10)
        counts = [b.count for b in rep.bins]
        assert counts[0] == 1 and counts[1] == 1 and counts[9] == 2

    def test_matches_brute_force(self, rng):
        for _ in range(50):
            n = int(rng.integers(1, 200))
            p = np.round(rng.random(n), int(rng.integers(1, 4)))
            c = rng.integers(0, 2, n)
            m = int(rng.integers(1, 20))
            assert ece(p, c, m) == brute_ece(list(p), list(c), m)

    @given(st.lists(st.tuples(st.floats(0, 1), st.integers(0, 1)), min_size=1, max_size=60), st.randoms())
    def test_range_and_permutation(self, pairs, rnd):
        p = [a for a, _ in pairs]
        c = [b for _, b in pairs]
        e = ece(p, c)
        assert 0.0 <= e <= 1.0
        idx = list(range(len(p)))
        rnd.shuffle(idx)
        assert ece([p[i] for i in idx], [c[i] for i in idx]) == e


class TestReliabilityReport:
    def test_two_point(self):
        rep = reliability_bins([0.05, 0.95], [0, 1], 10)
        occupied = [i for i, b in enumerate(rep.bins) if b.count]
        assert occupied == [0, 9]
        assert rep.ece == pytest.approx(0.5 * 0.05 + 0.5 * 0.05, abs=1e-15)
        assert rep.auroc == 1.0
        assert rep.n == 2

    def test_recompute_from_bins(self, rng):
        p = rng.random(500)
        c = rng.integers(0, 2, 500)
        rep = reliability_bins(p, c, 15)
        assert ece_from_bins(rep.bins) == rep.ece
        assert sum(b.count for b in rep.bins) == rep.n == 500
        for b in rep.bins:
            if b.count:
                assert b.lo <= b.conf <= b.hi

    def test_json_round_trip(self, rng):
        rep = reliability_bins(rng.random(50), np.r_[0, 1, rng.integers(0, 2, 48)], 10)
        again = ReliabilityReport.from_dict(__import__("json").loads(rep.to_json()))
        assert again == rep

    def test_bins_csv(self):
        rep = reliability_bins([0.05, 0.95], [0, 1], 2)
        lines = rep.bins_csv().strip().split("\n")
        assert lines[0] == "lo,hi,count,conf,acc"
        assert len(lines) == 3

    def test_empty_bin_no_weight(self):
        bins = [Bin(0.0, 0.5, 0, 0.0, 0.0), Bin(0.5, 1.0, 2, 0.75, 0.5)]
        assert ece_from_bins(bins) == 0.25


class TestMinmax:
    def test_maps_to_unit_interval(self):
        v = minmax_normalize([-2.0, 0.0, 2.0])
        assert v.tolist() == [0.0, 0.5, 1.0]

    def test_constant(self):
        assert minmax_normalize([3.0, 3.0]).tolist() == [0.5, 0.5]


class TestTv:
    def test_equal(self):
        assert tv_distance([0.2, 0.8], [0.2, 0.8]) == 0.0

    def test_disjoint(self):
        assert tv_distance([1.0, 0.0], [0.0, 1.0]) == 1.0

    def test_bernoulli(self):
        assert tv_distance([0.5, 0.5], [0.25, 0.75]) == 0.25

    def test_support_mismatch(self):
        a = DiscreteJoint([0, 1], [[0.25, 0.25], [0.25, 0.25]])
        b = DiscreteJoint([0, 2], [[0.25, 0.25], [0.25, 0.25]])
        with pytest.raises(ContractError, match="support-mismatch"):
            tv_distance(a.conditional(1), b.conditional(1))
        with pytest.raises(ContractError):
            tv_distance([0.5, 0.5], [1.0])


class TestInformation:
    def test_independent(self):
        j = DiscreteJoint([0, 1, 2], np.outer([0.3, 0.7], [0.2, 0.5, 0.3]))
        assert mutual_information(j) == pytest.approx(0.0, abs=1e-15)

    def test_deterministic(self):
        j = DiscreteJoint([0, 1], [[0.5, 0.0], [0.0, 0.5]])
        assert mutual_information(j) == pytest.approx(math.log(2), abs=1e-15)

    def test_invalid_joint(self):
        with pytest.raises(ContractError, match="invalid-joint"):
            DiscreteJoint([0, 1], [[0.5, 0.0], [0.0, 0.6]])
        with pytest.raises(ContractError):
            DiscreteJoint([1, 0], [[0.5, 0.0], [0.0, 0.5]])

    def test_kl_decomposition_agrees(self, rng):
        for k in range(2, 17):
            j = random_joint(rng, k)
            assert mutual_information(j) == pytest.approx(mutual_information_kl(j), abs=1e-12)

    def test_relabeling_symmetry(self, rng):
        for _ in range(20):
            j = random_joint(rng, int(rng.integers(2, 10)))
            flipped = DiscreteJoint(j.support, j.mass[::-1])
            assert mutual_information(flipped) == pytest.approx(mutual_information(j), abs=1e-14)
            assert mutual_information(j) >= 0

    @pytest.mark.parametrize("lam,expected", [(0.0, 0.0), (1.0, 0.0), (0.5, math.log(2)), (0.1, 0.325083)])
    def test_binary_entropy(self, lam, expected):
        assert binary_entropy(lam) == pytest.approx(expected, abs=1e-6)

    def test_binary_entropy_range(self):
        with pytest.raises(ContractError):
            binary_entropy(1.5)


class TestBounds:
    def test_joint_auc_matches_brute(self, rng):
        for _ in range(30):
            j = random_joint(rng, int(rng.integers(2, 12)))
            assert joint_auc(j) == pytest.approx(brute_joint_auc(j), abs=1e-14)

    def test_prop1_independent(self):
        j = DiscreteJoint([0, 1], np.outer([0.4, 0.6], [0.5, 0.5]))
        lhs, rhs, holds = prop1_bound(j)
        assert lhs == pytest.approx(0.0, abs=1e-15) and rhs == pytest.approx(0.0, abs=1e-7) and holds

    def test_prop1_deterministic(self):
        j = DiscreteJoint([0, 1], [[0.5, 0.0], [0.0, 0.5]])
        lhs, rhs, holds = prop1_bound(j)
        assert lhs == 0.5
        assert rhs == pytest.approx(math.sqrt(math.log(2) / 0.5), abs=1e-12)
        assert rhs == pytest.approx(1.177, abs=1e-3)
        assert holds

    def test_prop1_degenerate(self):
        j = DiscreteJoint([0, 1], [[0.0, 0.0], [0.5, 0.5]])
        with pytest.raises(ContractError, match="degenerate-class"):
            prop1_bound(j)

    def test_prop1_dirichlet_sweep(self, rng):
        assert all(prop1_bound(random_joint(rng, 8))[2] for _ in range(100))

    @settings(max_examples=200, deadline=None)
    @given(st.integers(2, 16), st.integers(0, 2**32 - 1), st.floats(0.05, 5.0))
    def test_lemma1_and_pinsker(self, k, seed, alpha):
        j = random_joint(np.random.default_rng(seed), k, alpha)
        if not 0 < j.p_c < 1:
            return
        assert lemma1_bound(j)[2]
        assert pinsker_chain(j)[2]
        assert prop1_bound(j)[2]
