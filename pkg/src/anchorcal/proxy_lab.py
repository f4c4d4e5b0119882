"""Constructed worlds in which predictive entropy carries (almost) no
information about correctness, and exact checks of the resulting bounds.

Each query has one correct and one wrong response that share an entropy
profile: zero everywhere except ``ln 2`` at the divergence position ``tau``.
Under the base distribution both responses are equally likely, so the
entropy proxy is independent of correctness. An informative component gives
wrong responses extra entropy at the divergence step; mixing it in with
weight ``lam`` lets information grow from zero, bounded by
``h(lam) + lam ln 2``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .core import ContractError, rng_for
from .metrics import (
    BOUND_SLACK,
    DiscreteJoint,
    binary_entropy,
    joint_auc,
    mi_auc_bound,
    mutual_information,
)

LN2 = math.log(2.0)
MAX_SUPPORT = 10_000


class Query(NamedTuple):
    length: int
    tau: int  # 1-based divergence position
    profile: tuple[float, ...]


@dataclass(frozen=True)
class TwoResponseWorld:
    queries: tuple[Query, ...]
    informative_bonus: float = math.log(3.0)
    seed: int = 0

    def __post_init__(self):
        if not self.queries:
            raise ContractError("empty-world")
        if self.informative_bonus < 0:
            raise ContractError("bad-bonus", "informative bonus must be >= 0")
        if 2 * len(self.queries) > MAX_SUPPORT:
            raise ContractError("world-too-large", f"at most {MAX_SUPPORT // 2} queries")
        for q in self.queries:
            if not 1 <= q.tau <= q.length or len(q.profile) != q.length:
                raise ContractError("bad-query", f"{q}")


@dataclass(frozen=True)
class MixtureSpec:
    lam: float
    world: TwoResponseWorld

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise ContractError("out-of-range", f"mixture weight {self.lam!r} not in [0, 1]")


def base_profile(length: int, tau: int) -> tuple[float, ...]:
    """Per-step entropies shared by both responses: ``ln 2`` at ``tau``, else 0."""
    return tuple(LN2 if t == tau else 0.0 for t in range(1, length + 1))


def build_base_world(n_queries: int, length_range=(1, 20), seed: int = 0, bonus: float = math.log(3.0)) -> TwoResponseWorld:
    """Random world with uniform lengths in ``length_range`` (inclusive) and uniform ``tau``."""
    lo, hi = (length_range, length_range) if isinstance(length_range, int) else length_range
    if n_queries < 1 or lo < 1 or hi < lo:
        raise ContractError("bad-world", f"n_queries={n_queries}, length_range={length_range}")
    rng = rng_for(seed, "proxy-world")
    queries = []
    for _ in range(n_queries):
        length = int(rng.integers(lo, hi + 1))
        tau = int(rng.integers(1, length + 1))
        queries.append(Query(length, tau, base_profile(length, tau)))
    return TwoResponseWorld(tuple(queries), bonus, seed)


def predictive_entropy(profile, mode: str = "sum") -> float:
    prof = list(profile)
    if not prof:
        raise ContractError("empty-profile")
    if any(v < 0 for v in prof):
        raise ContractError("bad-entropy", "step entropies must be >= 0")
    if mode == "sum":
        return math.fsum(prof)
    if mode == "mean":
        return math.fsum(prof) / len(prof)
    raise ContractError("bad-mode", f"aggregation must be 'sum' or 'mean', got {mode!r}")


def _wrong_profile(q: Query, bonus: float) -> tuple[float, ...]:
    prof = list(q.profile)
    prof[q.tau - 1] += bonus
    return tuple(prof)


def _atoms(world: TwoResponseWorld, informative: bool, agg: str):
    """(score, label, weight) atoms: every query weighs 1/n, each response 1/2."""
    w = 1.0 / (2 * len(world.queries))
    vals, labs = [], []
    for q in world.queries:
        vals.append(predictive_entropy(q.profile, agg))
        labs.append(1)
        wrong = _wrong_profile(q, world.informative_bonus) if informative else q.profile
        vals.append(predictive_entropy(wrong, agg))
        labs.append(0)
    return np.array(vals), np.array(labs), np.full(len(vals), w)


def base_joint(world: TwoResponseWorld, agg: str = "sum") -> DiscreteJoint:
    return DiscreteJoint.from_weighted(*_atoms(world, False, agg))


def informative_joint(world: TwoResponseWorld, agg: str = "sum") -> DiscreteJoint:
    return DiscreteJoint.from_weighted(*_atoms(world, True, agg))


def mixture_joint(spec: MixtureSpec, agg: str = "sum") -> DiscreteJoint:
    """``(1 - lam) * base + lam * informative``, merged on the union support."""
    v0, c0, w0 = _atoms(spec.world, False, agg)
    v1, c1, w1 = _atoms(spec.world, True, agg)
    return DiscreteJoint.from_weighted(
        np.concatenate([v0, v1]),
        np.concatenate([c0, c1]),
        np.concatenate([(1.0 - spec.lam) * w0, spec.lam * w1]),
    )


class Prop2Check(NamedTuple):
    lam: float
    mi: float
    budget: float
    auc_gap: float
    auc_bound: float
    holds: bool


def information_budget(lam: float) -> float:
    return binary_entropy(lam) + lam * LN2


def verify_prop2(spec: MixtureSpec, agg: str = "sum") -> Prop2Check:
    j = mixture_joint(spec, agg)
    pc = j.p_c
    if not 0.0 < pc < 1.0:
        raise ContractError("degenerate-class", f"p_c = {float(pc)!r}")
    mi = mutual_information(j)
    budget = information_budget(spec.lam)
    gap = abs(joint_auc(j) - 0.5)
    bound = mi_auc_bound(mi, pc)
    holds = mi <= budget + BOUND_SLACK and gap <= bound + BOUND_SLACK
    return Prop2Check(spec.lam, mi, budget, gap, bound, holds)


def sweep(world: TwoResponseWorld, lambdas, agg: str = "sum") -> list[Prop2Check]:
    return [verify_prop2(MixtureSpec(float(lam), world), agg) for lam in lambdas]


def sweep_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["lambda", "I", "budget", "auc_gap", "auc_bound", "holds"])
    for r in rows:
        w.writerow([repr(r.lam), repr(r.mi), repr(r.budget), repr(r.auc_gap), repr(r.auc_bound), str(r.holds).lower()])
    return buf.getvalue()
