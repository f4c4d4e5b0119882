"""Exact evaluation primitives: AUROC, ECE and reliability bins, plus the
information quantities used to check discriminability bounds on finite joints.

All logarithms are natural; information is reported in nats.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .core import ContractError, require_both_classes

DEFAULT_BINS = 10
BOUND_SLACK = 1e-12


def _as_pairs(pairs_or_scores, labels=None):
    if labels is None:
        arr = list(pairs_or_scores)
        scores = np.array([p[0] for p in arr], dtype=np.float64)
        labels = np.array([p[1] for p in arr], dtype=np.int64)
    else:
        scores = np.asarray(pairs_or_scores, dtype=np.float64).ravel()
        labels = np.asarray(labels).ravel().astype(np.int64)
    if scores.shape != labels.shape:
        raise ContractError("length-mismatch", f"{scores.shape[0]} scores vs {labels.shape[0]} labels")
    return scores, labels


def auroc(pairs_or_scores, labels=None) -> float:
    """Tie-aware empirical AUROC.

    Accepts either a sequence of ``(score, label)`` pairs or parallel
    ``scores, labels`` arrays. Each positive/negative pair with the positive
    ranked higher counts 1, a tie counts 1/2. Computed from integer win and
    tie counts, so the result is the correctly rounded ratio.
    """
    scores, labels = _as_pairs(pairs_or_scores, labels)
    if np.isnan(scores).any():
        raise ContractError("non-finite-score", "NaN score passed to auroc")
    require_both_classes(labels, "auroc")
    pos = scores[labels == 1]
    neg = np.sort(scores[labels == 0])
    lo = np.searchsorted(neg, pos, side="left")
    hi = np.searchsorted(neg, pos, side="right")
    wins = int(lo.sum())
    ties = int((hi - lo).sum())
    return (2 * wins + ties) / (2 * len(pos) * len(neg))


def _check_preds(preds, labels):
    preds = np.asarray(preds, dtype=np.float64).ravel()
    labels = np.asarray(labels).ravel()
    if preds.shape != labels.shape:
        raise ContractError("length-mismatch", f"{preds.shape[0]} predictions vs {labels.shape[0]} labels")
    if len(preds) == 0:
        raise ContractError("empty-dataset")
    bad = ~((preds >= 0.0) & (preds <= 1.0))
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise ContractError("unnormalized-prediction", f"prediction {float(preds[i])!r} at index {i} outside [0, 1]")
    if not np.isin(labels, (0, 1)).all():
        raise ContractError("bad-label", "labels must be 0 or 1")
    return preds, labels.astype(np.int64)


def bin_edges(m_bins: int) -> np.ndarray:
    if int(m_bins) != m_bins or m_bins < 1:
        raise ContractError("bad-bins", f"bin count must be a positive int, got {m_bins!r}")
    return np.arange(m_bins + 1, dtype=np.float64) / m_bins


def bin_index(preds, m_bins: int) -> np.ndarray:
    """Bin of each prediction: ``[k/M, (k+1)/M)``, with the last bin closed at 1."""
    edges = bin_edges(m_bins)
    idx = np.searchsorted(edges, preds, side="right") - 1
    return np.minimum(idx, m_bins - 1)


class Bin(NamedTuple):
    lo: float
    hi: float
    count: int
    conf: float
    acc: float


def _bins(preds, labels, m_bins):
    edges = bin_edges(m_bins)
    idx = bin_index(preds, m_bins)
    out = []
    for k in range(m_bins):
        mask = idx == k
        cnt = int(mask.sum())
        if cnt:
            conf = math.fsum(preds[mask]) / cnt
            acc = int(labels[mask].sum()) / cnt
        else:
            conf = acc = 0.0
        out.append(Bin(float(edges[k]), float(edges[k + 1]), cnt, conf, acc))
    return out


def ece_from_bins(bins: Sequence[Bin], n: int | None = None) -> float:
    """Count-weighted mean of ``|acc - conf|``; empty bins carry no weight."""
    n = sum(b.count for b in bins) if n is None else n
    return math.fsum(b.count / n * abs(b.acc - b.conf) for b in bins if b.count)


def ece(preds, labels, m_bins: int = DEFAULT_BINS) -> float:
    """Expected calibration error over ``m_bins`` equal-width bins on [0, 1].

    Predictions outside [0, 1] raise ``ContractError("unnormalized-prediction")``;
    nothing is clamped.
    """
    preds, labels = _check_preds(preds, labels)
    return ece_from_bins(_bins(preds, labels, m_bins), len(preds))


@dataclass(frozen=True)
class ReliabilityReport:
    bins: tuple[Bin, ...]
    ece: float
    auroc: float
    n: int

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "ece": self.ece,
            "auroc": self.auroc,
            "bins": [b._asdict() for b in self.bins],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def bins_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["lo", "hi", "count", "conf", "acc"])
        for b in self.bins:
            w.writerow([repr(b.lo), repr(b.hi), b.count, repr(b.conf), repr(b.acc)])
        return buf.getvalue()

    @classmethod
    def from_dict(cls, d: dict) -> "ReliabilityReport":
        return cls(tuple(Bin(**b) for b in d["bins"]), d["ece"], d["auroc"], d["n"])


def reliability_bins(preds, labels, m_bins: int = DEFAULT_BINS) -> ReliabilityReport:
    preds, labels = _check_preds(preds, labels)
    bins = tuple(_bins(preds, labels, m_bins))
    return ReliabilityReport(bins, ece_from_bins(bins, len(preds)), auroc(preds, labels), len(preds))


def minmax_normalize(values, lo: float | None = None, hi: float | None = None) -> np.ndarray:
    """Affine map of raw scores onto [0, 1] using the given (or observed) range.

    A constant column maps to 0.5. Values outside an explicit range are left
    outside so that ``ece`` rejects them rather than silently clipping.
    """
    v = np.asarray(values, dtype=np.float64)
    lo = float(v.min()) if lo is None else lo
    hi = float(v.max()) if hi is None else hi
    if hi == lo:
        return np.full_like(v, 0.5)
    out = (v - lo) / (hi - lo)
    # (max - lo) / (hi - lo) can round to 1 + ulp
    return np.where((v == hi), 1.0, np.where(v == lo, 0.0, out))


# --- finite joints over (C, S) ------------------------------------------------


class Conditional(NamedTuple):
    support: np.ndarray
    probs: np.ndarray


class DiscreteJoint:
    """Exact joint law of a binary label C and a finitely supported score S.

    ``mass[c, k]`` is P(C=c, S=support[k]); support is strictly increasing.
    """

    def __init__(self, support, mass, tol: float = 1e-9):
        support = np.array(support, dtype=np.float64).ravel()
        mass = np.array(mass, dtype=np.float64)
        if mass.shape != (2, support.size):
            raise ContractError("invalid-joint", f"mass shape {mass.shape} does not match support size {support.size}")
        if support.size == 0:
            raise ContractError("invalid-joint", "empty support")
        if np.any(np.diff(support) <= 0):
            raise ContractError("invalid-joint", "support must be strictly increasing")
        if np.any(mass < 0) or not np.all(np.isfinite(mass)):
            raise ContractError("invalid-joint", "negative or non-finite mass")
        total = math.fsum(mass.ravel())
        if abs(total - 1.0) > tol:
            raise ContractError("invalid-joint", f"mass sums to {float(total)!r}")
        self.support = support
        self.mass = mass
        self.support.flags.writeable = False
        self.mass.flags.writeable = False

    @classmethod
    def from_weighted(cls, values, labels, weights) -> "DiscreteJoint":
        """Accumulate weighted (value, label) atoms, merging equal values."""
        values = np.asarray(values, dtype=np.float64)
        labels = np.asarray(labels, dtype=np.int64)
        weights = np.asarray(weights, dtype=np.float64)
        support, inv = np.unique(values, return_inverse=True)
        mass = np.zeros((2, support.size))
        np.add.at(mass, (labels, inv), weights)
        return cls(support, mass)

    @property
    def p_c(self) -> float:
        return math.fsum(self.mass[1])

    def marginal(self) -> np.ndarray:
        return self.mass.sum(axis=0)

    def conditional(self, c: int) -> Conditional:
        row = self.mass[c]
        tot = math.fsum(row)
        if tot <= 0:
            raise ContractError("degenerate-class", f"P(C={c}) = 0")
        return Conditional(self.support, row / tot)

    def __repr__(self):
        return f"DiscreteJoint(support={self.support.tolist()}, mass={self.mass.tolist()})"


def _probs(p):
    if isinstance(p, Conditional):
        return p.support, p.probs
    return None, np.asarray(p, dtype=np.float64)


def tv_distance(p, q) -> float:
    """Total variation distance ``0.5 * sum |p_k - q_k|`` on a shared support."""
    sp, pp = _probs(p)
    sq, qq = _probs(q)
    if pp.shape != qq.shape or (sp is not None and sq is not None and not np.array_equal(sp, sq)):
        raise ContractError("support-mismatch")
    return 0.5 * math.fsum(np.abs(pp - qq))


def kl_divergence(p, q) -> float:
    """KL(p || q) in nats, with 0 log 0 = 0; infinite when p is not dominated by q."""
    _, pp = _probs(p)
    _, qq = _probs(q)
    if pp.shape != qq.shape:
        raise ContractError("support-mismatch")
    nz = pp > 0
    if np.any(qq[nz] <= 0):
        return math.inf
    return math.fsum(pp[nz] * np.log(pp[nz] / qq[nz]))


def mutual_information(j: DiscreteJoint) -> float:
    """I(C; S) in nats, summed directly over the joint table."""
    pc = j.mass.sum(axis=1)
    ps = j.marginal()
    nz = j.mass > 0
    outer = np.outer(pc, ps)
    terms = j.mass[nz] * np.log(j.mass[nz] / outer[nz])
    return max(0.0, math.fsum(terms))


def mutual_information_kl(j: DiscreteJoint) -> float:
    """Same quantity via ``p_c KL(P+ || M) + (1 - p_c) KL(P- || M)``."""
    pc = j.p_c
    m = j.marginal()
    total = 0.0
    if pc > 0:
        total += pc * kl_divergence(j.conditional(1), m)
    if pc < 1:
        total += (1 - pc) * kl_divergence(j.conditional(0), m)
    return total


def binary_entropy(lam: float) -> float:
    """h(lam) in nats; 0 at both endpoints."""
    if not 0.0 <= lam <= 1.0:
        raise ContractError("out-of-range", f"binary entropy argument {lam!r} not in [0, 1]")
    if lam == 0.0 or lam == 1.0:
        return 0.0
    return -lam * math.log(lam) - (1 - lam) * math.log1p(-lam)


def joint_auc(j: DiscreteJoint) -> float:
    """Population P(S+ > S-) + 0.5 P(S+ = S-) for a finite joint."""
    pos = j.conditional(1).probs
    neg = j.conditional(0).probs
    below = np.concatenate(([0.0], np.cumsum(neg)[:-1]))
    return math.fsum(pos * (below + 0.5 * neg))


def _require_prior(j):
    pc = j.p_c
    if not 0.0 < pc < 1.0:
        raise ContractError("degenerate-class", f"p_c = {float(pc)!r}, need 0 < p_c < 1")
    return pc


def mi_auc_bound(mi: float, p_c: float) -> float:
    return math.sqrt(max(mi, 0.0) / (2 * p_c * (1 - p_c)))


def prop1_bound(j: DiscreteJoint):
    """``(lhs, rhs, holds)`` for ``|AUC - 1/2| <= sqrt(I / (2 p_c (1 - p_c)))``."""
    pc = _require_prior(j)
    lhs = abs(joint_auc(j) - 0.5)
    rhs = mi_auc_bound(mutual_information(j), pc)
    return lhs, rhs, lhs <= rhs + BOUND_SLACK


def lemma1_bound(j: DiscreteJoint):
    """``(lhs, rhs, holds)`` for ``|AUC - 1/2| <= TV(P+, P-)``."""
    _require_prior(j)
    lhs = abs(joint_auc(j) - 0.5)
    rhs = tv_distance(j.conditional(1), j.conditional(0))
    return lhs, rhs, lhs <= rhs + BOUND_SLACK


def pinsker_chain(j: DiscreteJoint):
    """``(lhs, rhs, holds)`` for ``2 p_c (1 - p_c) TV(P+, P-)^2 <= I(C; S)``."""
    pc = _require_prior(j)
    tv = tv_distance(j.conditional(1), j.conditional(0))
    lhs = 2 * pc * (1 - pc) * tv * tv
    rhs = mutual_information(j)
    return lhs, rhs, lhs <= rhs + BOUND_SLACK


def random_joint(rng: np.random.Generator, k: int, alpha: float = 1.0) -> DiscreteJoint:
    """Dirichlet-sampled joint on a random strictly increasing ``k``-point support."""
    support = np.sort(rng.choice(np.arange(-10 * k, 10 * k), size=k, replace=False)).astype(np.float64) / 10
    mass = rng.dirichlet(np.full(2 * k, alpha)).reshape(2, k)
    return DiscreteJoint(support, mass)
