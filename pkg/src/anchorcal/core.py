"""Shared data model: score records, labeled datasets, score orientation.

Everything here is immutable after construction. Randomness for every
downstream protocol is derived from the dataset seed via :func:`rng_for`.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

CONFIDENCE = "confidence"
UNCERTAINTY = "uncertainty"


class ContractError(ValueError):
    """A violated input contract.

    ``code`` is a short machine-readable tag such as ``"empty-dataset"`` or
    ``"degenerate-class"``; the message carries the human-readable detail.
    """

    def __init__(self, code: str, message: str | None = None):
        self.code = code
        super().__init__(f"{code}: {message}" if message else code)


def rng_for(seed: int, stream: str) -> np.random.Generator:
    """Independent generator for a named stream derived from a 64-bit seed.

    Streams are keyed by a CRC32 of their name and fed to ``SeedSequence`` as
    a spawn key, so the same (seed, stream) always yields the same draws and
    distinct streams never share state.
    """
    if seed < 0 or seed >= 2**64:
        raise ContractError("bad-seed", f"seed must be an unsigned 64-bit int, got {seed}")
    key = zlib.crc32(stream.encode("utf-8"))
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(key,)))


@dataclass(frozen=True)
class ScoreRecord:
    id: str
    scores: Mapping[str, float]
    label: int
    token_logprobs: tuple[float, ...] | None = None
    step_entropies: tuple[float, ...] | None = None
    meta: Mapping[str, str] | None = None

    def __post_init__(self):
        if isinstance(self.label, bool) or self.label not in (0, 1):
            raise ContractError("bad-label", f"record {self.id!r}: label must be 0 or 1, got {self.label!r}")
        object.__setattr__(self, "label", int(self.label))
        object.__setattr__(self, "scores", MappingProxyType({str(k): float(v) for k, v in self.scores.items()}))
        if self.token_logprobs is not None:
            lp = tuple(float(v) for v in self.token_logprobs)
            if any(not v <= 0.0 for v in lp):
                raise ContractError("bad-logprob", f"record {self.id!r}: token log-probabilities must be <= 0")
            object.__setattr__(self, "token_logprobs", lp)
        if self.step_entropies is not None:
            ent = tuple(float(v) for v in self.step_entropies)
            if any(not v >= 0.0 for v in ent):
                raise ContractError("bad-entropy", f"record {self.id!r}: step entropies must be >= 0")
            object.__setattr__(self, "step_entropies", ent)
        if self.meta is not None:
            object.__setattr__(self, "meta", MappingProxyType({str(k): str(v) for k, v in self.meta.items()}))

    def with_label(self, label: int) -> "ScoreRecord":
        return ScoreRecord(self.id, self.scores, label, self.token_logprobs, self.step_entropies, self.meta)

    def with_scores(self, scores: Mapping[str, float]) -> "ScoreRecord":
        return ScoreRecord(self.id, scores, self.label, self.token_logprobs, self.step_entropies, self.meta)


@dataclass(frozen=True)
class LabeledDataset:
    records: tuple[ScoreRecord, ...]
    source_tag: str = ""
    seed: int = 0

    def __post_init__(self):
        recs = tuple(self.records)
        object.__setattr__(self, "records", recs)
        seen = set()
        dupes = []
        for r in recs:
            if r.id in seen:
                dupes.append(r.id)
            seen.add(r.id)
        if dupes:
            raise ContractError("duplicate-id", f"duplicate ids: {sorted(set(dupes))}")

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def labels(self) -> np.ndarray:
        return np.array([r.label for r in self.records], dtype=np.int64)

    @property
    def ids(self) -> list[str]:
        return [r.id for r in self.records]

    def score_names(self) -> set[str]:
        names: set[str] = set()
        for r in self.records:
            names.update(r.scores)
        return names

    def replace(self, records: Iterable[ScoreRecord] | None = None, **kw) -> "LabeledDataset":
        return LabeledDataset(
            tuple(self.records if records is None else records),
            kw.get("source_tag", self.source_tag),
            kw.get("seed", self.seed),
        )

    def split(self, fraction: float, stream: str = "split") -> tuple["LabeledDataset", "LabeledDataset"]:
        """Stratified split; the first part holds roughly ``fraction`` of each class."""
        if not 0.0 < fraction < 1.0:
            raise ContractError("bad-fraction", f"split fraction must be in (0,1), got {fraction}")
        idx_a, idx_b = stratified_split(self.labels, fraction, rng_for(self.seed, stream))
        recs = self.records
        return self.replace([recs[i] for i in idx_a]), self.replace([recs[i] for i in idx_b])


def stratified_split(labels: Sequence[int], fraction: float, rng: np.random.Generator):
    """Index arrays (first, rest) with ``round(fraction * n_c)`` of each class in ``first``.

    A class with at least two members always lands on both sides. Both
    returned index arrays are sorted so the original record order survives.
    """
    labels = np.asarray(labels)
    first = []
    for c in (0, 1):
        idx = np.flatnonzero(labels == c)
        perm = rng.permutation(idx)
        k = int(round(fraction * len(idx)))
        if len(idx) >= 2:
            k = min(max(k, 1), len(idx) - 1)
        first.append(perm[:k])
    first = np.sort(np.concatenate(first))
    rest = np.setdiff1d(np.arange(len(labels)), first)
    return first, rest


class Orientation(dict):
    """Mapping score-name -> ``"confidence"`` or ``"uncertainty"``.

    Names missing from the explicit mapping fall back to :func:`default_orientation`.
    """

    def __init__(self, mapping: Mapping[str, str] | None = None, **kw):
        super().__init__()
        for k, v in {**(mapping or {}), **kw}.items():
            self[k] = v

    def __setitem__(self, key, value):
        if value not in (CONFIDENCE, UNCERTAINTY):
            raise ContractError("bad-orientation", f"{key!r}: {value!r}")
        super().__setitem__(key, value)

    def __missing__(self, key):
        return default_orientation(key)

    def sign(self, name: str) -> float:
        return -1.0 if self[name] == UNCERTAINTY else 1.0


def default_orientation(name: str) -> str:
    """Shipped default direction for a score name.

    MSP / log-probability style names are confidences; entropy, perplexity,
    energy and similar dispersion measures are uncertainties. Unknown names
    are treated as confidences.
    """
    low = name.lower()
    tokens = set(low.replace("-", "_").split("_"))
    if any(h in low for h in ("entropy", "perplexity", "energy", "eigenscore", "uncertainty")) or tokens & {"se", "ppl", "ent"}:
        return UNCERTAINTY
    return CONFIDENCE


def correctness_prior(ds: LabeledDataset | Sequence[int]) -> float:
    """Fraction of records labeled correct.

    Returns 0.0 or 1.0 on single-class input; callers that need both classes
    must check.
    """
    labels = ds.labels if isinstance(ds, LabeledDataset) else np.asarray(list(ds))
    if len(labels) == 0:
        raise ContractError("empty-dataset")
    return float(np.count_nonzero(labels == 1)) / len(labels)


def require_both_classes(labels, where: str = "") -> None:
    labels = np.asarray(labels)
    n_pos = int(np.count_nonzero(labels == 1))
    if n_pos == 0 or n_pos == len(labels):
        raise ContractError("degenerate-class", f"both classes required{(' in ' + where) if where else ''}")


def extract_score_column(ds: LabeledDataset, name: str, orient: Mapping[str, str] | None = None):
    """Per-record ``(confidence-direction value, label)`` pairs for one score.

    Uncertainty-oriented scores are negated so larger always means more
    confident. Order follows the dataset.
    """
    orient = orient if isinstance(orient, Orientation) else Orientation(orient)
    missing = [r.id for r in ds.records if name not in r.scores]
    if missing:
        raise ContractError("missing-score", f"score {name!r} absent on ids {missing}")
    sign = orient.sign(name)
    out = []
    for r in ds.records:
        v = r.scores[name]
        if not math.isfinite(v):
            raise ContractError("non-finite-score", f"score {name!r} on id {r.id!r} is {v}")
        out.append((sign * v if sign < 0 else v, r.label))
    return out


def column_arrays(ds: LabeledDataset, names: Sequence[str], orient: Mapping[str, str] | None = None):
    """``(X, y)`` with X shaped (n, len(names)) in confidence direction."""
    cols = [extract_score_column(ds, n, orient) for n in names]
    X = np.array([[c[i][0] for c in cols] for i in range(len(ds))], dtype=np.float64).reshape(len(ds), len(names))
    y = ds.labels
    return X, y
