#!/usr/bin/env python3
"""Two scores that are useless alone but decisive together.

Each score is uniform on [-1, 1]; the answer is correct exactly when both
fall on the same side of zero. A one-input mapper cannot beat chance on
either score, while a two-input mapper separates the classes.
"""

import numpy as np

from anchorcal import MapperConfig, apply, auroc, ece, train
from anchorcal.synthetic import sample_xor

a, b, c = sample_xor(2000, seed=0)
a_t, b_t, c_t = sample_xor(2000, seed=1)

for name, x, x_t in (("a", a, a_t), ("b", b, b_t)):
    p, _ = train(x[:, None], MapperConfig(seed=0), labels=c)
    prob = apply(p, x_t)
    print(f"mapper on {name} alone: AUROC {auroc(prob, c_t):.3f}, ECE {ece(prob, c_t):.3f}")

p, hist = train(np.c_[a, b], MapperConfig(input_dim=2, seed=0), labels=c)
prob = apply(p, np.c_[a_t, b_t])
print(f"mapper on (a, b):     AUROC {auroc(prob, c_t):.4f}, ECE {ece(prob, c_t):.3f}")
print(f"best epoch {hist.best_epoch} of {len(hist.epochs)}")
