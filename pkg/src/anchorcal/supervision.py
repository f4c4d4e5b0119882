"""Label-budget, label-noise, cross-task transfer and two-score protocols
wrapped around the mapper.

Every protocol reports vanilla and anchored metrics on an evaluation split
that the mapper never sees. Vanilla scores are oriented to confidence and
min-max normalized over the evaluation split before binning.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, replace
from typing import NamedTuple, Sequence

import numpy as np

from . import mapper as _mapper
from .core import ContractError, LabeledDataset, Orientation, column_arrays, extract_score_column, rng_for
from .metrics import DEFAULT_BINS, ReliabilityReport, minmax_normalize, reliability_bins

FEWSHOT_SIZES = (8, 16, 32, 64, 128)
CORRUPT_RATES = (0.1, 0.2, 0.3, 0.4, 0.5)
MAX_FEWSHOT_TRIES = 100


@dataclass(frozen=True)
class ProtocolSpec:
    kind: str
    k_labels: int | None = None
    corrupt_rate: float | None = None
    pair: tuple[str, str] | None = None
    seed: int = 0

    def __post_init__(self):
        need = {"fewshot": "k_labels", "corrupt": "corrupt_rate", "pairwise": "pair", "transfer": None}
        if self.kind not in need:
            raise ContractError("bad-protocol", f"unknown protocol kind {self.kind!r}")
        for fld in ("k_labels", "corrupt_rate", "pair"):
            present = getattr(self, fld) is not None
            if present != (need[self.kind] == fld):
                state = "requires" if not present else "does not take"
                raise ContractError("bad-protocol", f"{self.kind} {state} {fld}")
        if self.k_labels is not None and self.k_labels < 1:
            raise ContractError("bad-protocol", "k_labels must be positive")
        if self.corrupt_rate is not None and not 0.0 <= self.corrupt_rate <= 1.0:
            raise ContractError("bad-protocol", "corrupt_rate must be in [0, 1]")


def fewshot_subsample(ds: LabeledDataset, k: int, seed: int | None = None, min_per_class: int = 1) -> LabeledDataset:
    """Uniform ``k``-record sample without replacement containing both classes.

    Redraws up to 100 times until each class has at least ``min_per_class``
    records. The sample keeps the dataset's record order.
    """
    n = len(ds)
    if k < 1 or k > n:
        raise ContractError("bad-k", f"k={k} for a dataset of {n} records")
    labels = ds.labels
    n_pos = int(labels.sum())
    if min(n_pos, n - n_pos) < min_per_class or 2 * min_per_class > k:
        raise ContractError("degenerate-class", "both classes unattainable in the subsample")
    rng = rng_for(ds.seed if seed is None else seed, "fewshot")
    for _ in range(MAX_FEWSHOT_TRIES):
        idx = np.sort(rng.choice(n, size=k, replace=False))
        pos = int(labels[idx].sum())
        if min(pos, k - pos) >= min_per_class:
            return ds.replace([ds.records[i] for i in idx])
    raise ContractError("degenerate-class", f"no two-class draw of size {k} in {MAX_FEWSHOT_TRIES} attempts")


def n_corrupted(rate: float, n: int) -> int:
    # 1e-9 guards products like 0.29 * 100 = 28.999999999999996
    return min(n, math.floor(rate * n + 1e-9))


def corrupt_labels(ds: LabeledDataset, rate: float, seed: int | None = None) -> LabeledDataset:
    """Flip exactly ``floor(rate * n)`` labels chosen uniformly without replacement."""
    if not 0.0 <= rate <= 1.0:
        raise ContractError("out-of-range", f"corruption rate {rate!r} not in [0, 1]")
    n = len(ds)
    m = n_corrupted(rate, n)
    rng = rng_for(ds.seed if seed is None else seed, "corrupt")
    flip = set(rng.choice(n, size=m, replace=False).tolist()) if m else set()
    return ds.replace([r.with_label(1 - r.label) if i in flip else r for i, r in enumerate(ds.records)])


def pairwise_concat(ds: LabeledDataset, name_a: str, name_b: str, orient=None):
    """``[((a, b), label), ...]`` with each component in confidence direction."""
    col_a = extract_score_column(ds, name_a, orient)
    col_b = extract_score_column(ds, name_b, orient)
    return [(np.array([a, b]), c) for (a, c), (b, _) in zip(col_a, col_b)]


# --- anchoring pipelines -----------------------------------------------------


def fit(ds: LabeledDataset, names: Sequence[str], cfg: _mapper.MapperConfig | None = None, orient=None):
    """Train a mapper on the given score column(s); returns ``(params, history)``."""
    names = list(names)
    x, y = column_arrays(ds, names, orient)
    cfg = cfg or _mapper.MapperConfig(seed=ds.seed)
    cfg = replace(cfg, input_dim=len(names))
    params, hist = _mapper.train(x, cfg, labels=y)
    o = Orientation(orient)
    params.meta = {"scores": names, "orientation": {n: o[n] for n in names}}
    return params, hist


def anchored_report(params, ds: LabeledDataset, names: Sequence[str], orient=None, m_bins: int = DEFAULT_BINS) -> ReliabilityReport:
    x, y = column_arrays(ds, list(names), orient)
    return reliability_bins(_mapper.apply(params, x), y, m_bins)


def vanilla_report(ds: LabeledDataset, name: str, orient=None, m_bins: int = DEFAULT_BINS) -> ReliabilityReport:
    """Metrics of the raw score after orientation and min-max normalization."""
    x, y = column_arrays(ds, [name], orient)
    return reliability_bins(minmax_normalize(x[:, 0]), y, m_bins)


def transfer_run(train_ds, test_ds, score_name, cfg=None, orient=None, m_bins: int = DEFAULT_BINS) -> ReliabilityReport:
    """Train on ``train_ds`` (early stopping on its own validation split), evaluate on ``test_ds``."""
    params, _ = fit(train_ds, [score_name], cfg, orient)
    return anchored_report(params, test_ds, [score_name], orient, m_bins)


class ProtocolRow(NamedTuple):
    protocol: str
    setting: str
    score: str
    n_train: int
    n_eval: int
    vanilla_ece: float
    tac_ece: float
    vanilla_auroc: float
    tac_auroc: float


def _row(protocol, setting, names, train_ds, eval_ds, cfg, orient, m_bins):
    params, _ = fit(train_ds, names, cfg, orient)
    tac = anchored_report(params, eval_ds, names, orient, m_bins)
    van = vanilla_report(eval_ds, names[0], orient, m_bins) if len(names) == 1 else None
    nan = float("nan")
    return ProtocolRow(
        protocol,
        setting,
        "+".join(names),
        len(train_ds),
        len(eval_ds),
        van.ece if van else nan,
        tac.ece,
        van.auroc if van else nan,
        tac.auroc,
    )


def run_protocol(
    spec: ProtocolSpec,
    ds: LabeledDataset,
    score_name: str,
    cfg: _mapper.MapperConfig | None = None,
    orient=None,
    train_fraction: float = 0.5,
    test_ds: LabeledDataset | None = None,
    m_bins: int = DEFAULT_BINS,
) -> ProtocolRow:
    """Run one protocol and report vanilla vs anchored metrics on held-out data.

    For ``fewshot``, ``corrupt`` and ``pairwise`` the dataset is split
    (stratified, ``train_fraction`` for training); the label budget or noise
    only touches the training part. ``transfer`` trains on ``ds`` and
    evaluates on ``test_ds``.
    """
    cfg = cfg or _mapper.MapperConfig(seed=spec.seed)
    if spec.kind == "transfer":
        if test_ds is None:
            raise ContractError("bad-protocol", "transfer needs a test dataset")
        return _row("transfer", f"{ds.source_tag}->{test_ds.source_tag}", [score_name], ds, test_ds, cfg, orient, m_bins)
    train_ds, eval_ds = ds.replace(seed=spec.seed).split(train_fraction, stream="protocol-split")
    if spec.kind == "fewshot":
        # two per class so the internal validation split keeps both classes
        sub = fewshot_subsample(train_ds, spec.k_labels, spec.seed, min_per_class=2)
        return _row("fewshot", str(spec.k_labels), [score_name], sub, eval_ds, cfg, orient, m_bins)
    if spec.kind == "corrupt":
        noisy = corrupt_labels(train_ds, spec.corrupt_rate, spec.seed)
        return _row("corrupt", repr(spec.corrupt_rate), [score_name], noisy, eval_ds, cfg, orient, m_bins)
    names = list(spec.pair)
    return _row("pairwise", "+".join(names), names, train_ds, eval_ds, cfg, orient, m_bins)


def rows_csv(rows: Sequence[ProtocolRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(ProtocolRow._fields) + ["delta_ece", "delta_auroc"])
    for r in rows:
        vals = [repr(v) if isinstance(v, float) else v for v in r]
        w.writerow(vals + [repr(r.tac_ece - r.vanilla_ece), repr(r.tac_auroc - r.vanilla_auroc)])
    return buf.getvalue()
