import numpy as np
import pytest

from anchorcal.core import ContractError, LabeledDataset, ScoreRecord
from anchorcal.ingest import dataset_from_arrays
from anchorcal.mapper import MapperConfig
from anchorcal.supervision import (
    ProtocolSpec,
    corrupt_labels,
    fewshot_subsample,
    pairwise_concat,
    rows_csv,
    run_protocol,
    transfer_run,
)
from anchorcal.synthetic import logistic_dataset, sample_logistic


def balanced(n, seed=0):
    rng = np.random.default_rng(seed)
    return dataset_from_arrays({"s": rng.normal(size=n)}, np.arange(n) % 2, seed=seed)


class TestFewshot:
    def test_identity_at_n(self):
        ds = balanced(30)
        assert fewshot_subsample(ds, 30).records == ds.records

    def test_k8(self):
        sub = fewshot_subsample(balanced(1000), 8, seed=3)
        assert len(sub) == 8 and set(sub.labels) == {0, 1}

    def test_deterministic(self):
        ds = balanced(500)
        assert fewshot_subsample(ds, 16, 1).ids == fewshot_subsample(ds, 16, 1).ids
        assert fewshot_subsample(ds, 16, 1).ids != fewshot_subsample(ds, 16, 2).ids

    def test_k_too_large(self):
        with pytest.raises(ContractError):
            fewshot_subsample(balanced(5), 6)

    def test_single_class(self):
        ds = dataset_from_arrays({"s": np.zeros(10)}, np.ones(10))
        with pytest.raises(ContractError, match="degenerate-class"):
            fewshot_subsample(ds, 4)

    def test_rare_class_exhausts_retries(self):
        labels = np.zeros(10000, dtype=int)
        labels[0] = 1
        ds = dataset_from_arrays({"s": np.zeros(10000)}, labels)
        with pytest.raises(ContractError, match="attempts"):
            fewshot_subsample(ds, 8, seed=0)

    def test_scores_untouched(self):
        ds = balanced(100)
        sub = fewshot_subsample(ds, 32, 0)
        lookup = {r.id: r for r in ds}
        assert all(lookup[r.id] == r for r in sub)


class TestCorrupt:
    def test_rate_zero(self):
        ds = balanced(20)
        assert corrupt_labels(ds, 0.0).records == ds.records

    def test_rate_one_involution(self):
        ds = balanced(20)
        once = corrupt_labels(ds, 1.0)
        assert (once.labels == 1 - ds.labels).all()
        assert corrupt_labels(once, 1.0).records == ds.records

    def test_exact_count(self):
        ds = balanced(10)
        assert (corrupt_labels(ds, 0.3, seed=5).labels != ds.labels).sum() == 3

    @pytest.mark.parametrize("rate", [0.1, 0.2, 0.29, 0.3, 0.4, 0.5, 0.7])
    @pytest.mark.parametrize("n", [7, 10, 100, 333])
    def test_floor_count(self, rate, n):
        ds = balanced(n)
        flips = (corrupt_labels(ds, rate, seed=1).labels != ds.labels).sum()
        assert flips == int(round(rate * 1000)) * n // 1000

    def test_same_seed_twice_restores(self):
        ds = balanced(57)
        assert corrupt_labels(corrupt_labels(ds, 0.4, 9), 0.4, 9).records == ds.records

    def test_scores_bit_unchanged(self):
        ds = balanced(50)
        out = corrupt_labels(ds, 0.5, 2)
        assert [dict(r.scores) for r in out] == [dict(r.scores) for r in ds]

    def test_range(self):
        with pytest.raises(ContractError):
            corrupt_labels(balanced(4), 1.5)


class TestPairwise:
    def test_same_name(self):
        rows = pairwise_concat(balanced(5), "s", "s")
        assert all(v[0] == v[1] for v, _ in rows)

    def test_construction(self):
        ds = LabeledDataset((ScoreRecord("q", {"coe_c": 1.2, "vc": 0.8}, 1),))
        (vec, label), = pairwise_concat(ds, "coe_c", "vc", {"coe_c": "confidence", "vc": "confidence"})
        assert vec.tolist() == [1.2, 0.8] and label == 1

    def test_orientation_per_component(self):
        ds = LabeledDataset((ScoreRecord("q", {"entropy": 1.2, "vc": 0.8}, 1),))
        (vec, _), = pairwise_concat(ds, "entropy", "vc")
        assert vec.tolist() == [-1.2, 0.8]

    def test_shape_and_order(self):
        ds = balanced(40)
        ds = dataset_from_arrays({"a": np.arange(40.0), "b": -np.arange(40.0)}, ds.labels)
        rows = pairwise_concat(ds, "b", "a", {"a": "confidence", "b": "confidence"})
        assert len(rows) == 40
        assert all(v.shape == (2,) and v[1] == i for i, (v, _) in enumerate(rows))

    def test_missing(self):
        with pytest.raises(ContractError, match="missing-score"):
            pairwise_concat(balanced(3), "s", "t")


class TestProtocolSpec:
    def test_requires_fields(self):
        with pytest.raises(ContractError):
            ProtocolSpec("fewshot")
        with pytest.raises(ContractError):
            ProtocolSpec("corrupt", k_labels=8, corrupt_rate=0.1)
        with pytest.raises(ContractError):
            ProtocolSpec("nope")
        ProtocolSpec("pairwise", pair=("a", "b"))
        ProtocolSpec("transfer")


class TestTransfer:
    def test_degenerate_transfer_equals_in_domain(self):
        ds = logistic_dataset(400, 3)
        cfg = MapperConfig(seed=1, max_epochs=30)
        a = transfer_run(ds, ds, "score", cfg)
        b = transfer_run(ds, ds, "score", cfg)
        assert a == b

    def test_inverted_target(self):
        src = logistic_dataset(2000, 1)
        s, c = sample_logistic(2000, 2, slope=-2.0, offset=-1.0)
        tgt = dataset_from_arrays({"score": s}, c)
        rep = transfer_run(src, tgt, "score", MapperConfig(seed=0, phi_rank=0.0))
        assert rep.auroc < 0.5


class TestRunProtocol:
    def test_rows(self):
        ds = logistic_dataset(600, 4)
        cfg = MapperConfig(seed=0, max_epochs=40)
        rows = [
            run_protocol(ProtocolSpec("fewshot", k_labels=8, seed=0), ds, "score", cfg),
            run_protocol(ProtocolSpec("corrupt", corrupt_rate=0.2, seed=0), ds, "score", cfg),
        ]
        assert rows[0].n_train == 8 and rows[0].n_eval == 300
        assert rows[1].n_train == 300
        text = rows_csv(rows)
        assert text.splitlines()[0].startswith("protocol,setting,score")
        assert len(text.splitlines()) == 3

    def test_pairwise_row(self):
        rng = np.random.default_rng(0)
        ds = dataset_from_arrays({"a": rng.normal(size=200), "b": rng.normal(size=200)}, np.arange(200) % 2)
        row = run_protocol(ProtocolSpec("pairwise", pair=("a", "b")), ds, "a", MapperConfig(max_epochs=5))
        assert row.score == "a+b" and np.isnan(row.vanilla_ece)
