#!/usr/bin/env python3
"""Anchoring under a small label budget, under noisy labels and across tasks."""

from anchorcal import MapperConfig
from anchorcal.supervision import CORRUPT_RATES, FEWSHOT_SIZES, ProtocolSpec, run_protocol, transfer_run
from anchorcal.synthetic import logistic_dataset

ds = logistic_dataset(4000, seed=0)
cfg = MapperConfig(phi_rank=1.0, seed=0)
orient = {"score": "confidence"}

# %% few labels
print("protocol  setting  n_train  vanilla_ece  tac_ece")
for k in FEWSHOT_SIZES:
    row = run_protocol(ProtocolSpec("fewshot", k_labels=k), ds, "score", cfg, orient)
    print(f"fewshot   {row.setting:>7}  {row.n_train:7d}  {row.vanilla_ece:11.4f}  {row.tac_ece:7.4f}")

# %% flipped labels: calibration degrades toward the noisy posterior
for rate in CORRUPT_RATES:
    row = run_protocol(ProtocolSpec("corrupt", corrupt_rate=rate), ds, "score", cfg, orient)
    print(f"corrupt   {row.setting:>7}  {row.n_train:7d}  {row.vanilla_ece:11.4f}  {row.tac_ece:7.4f}")

# %% transfer to another task whose score-correctness relation is the same
target = logistic_dataset(4000, seed=1)
report = transfer_run(ds, target, "score", cfg, orient)
print(f"\ntransfer: target ECE {report.ece:.4f}, AUROC {report.auroc:.4f}")
