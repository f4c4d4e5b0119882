#!/usr/bin/env python3
"""How much can a score tell us about correctness?

Random finite joints over (correctness, score) illustrate two bounds. The
AUROC gap is at most the total-variation distance between the two
class-conditional score laws. That distance is in turn limited by the
mutual information between score and correctness. A two-response toy world
then shows an entropy proxy whose information, and with it AUROC, shrinks
as its informative share lambda goes to zero.
"""

import math

from anchorcal.core import rng_for
from anchorcal.metrics import joint_auc, lemma1_bound, mutual_information, prop1_bound, random_joint
from anchorcal.proxy_lab import MixtureSpec, build_base_world, mixture_joint, sweep

# %% a handful of random joints
rng = rng_for(0, "demo-bounds")
print(f"{'k':>3} {'AUC':>7} {'|AUC-1/2|':>10} {'TV':>7} {'I (nats)':>9} {'MI bound':>9}")
for k in (2, 4, 8, 16):
    j = random_joint(rng, k)
    gap, tv, _ = lemma1_bound(j)
    _, rhs, _ = prop1_bound(j)
    print(f"{k:3d} {joint_auc(j):7.4f} {gap:10.4f} {tv:7.4f} {mutual_information(j):9.5f} {rhs:9.4f}")

# %% the entropy-proxy mixture
world = build_base_world(50, seed=0, bonus=math.log(3))
print("\nlambda       I      budget   |AUC-1/2|")
for row in sweep(world, [0.5, 0.1, 0.01, 0.001]):
    print(f"{row.lam:<8g} {row.mi:.6f} {row.budget:.6f} {row.auc_gap:.6f}")

j = mixture_joint(MixtureSpec(0.0, world))
print(f"\nlambda=0: I={mutual_information(j):.2e}, AUC={joint_auc(j):.4f}")
