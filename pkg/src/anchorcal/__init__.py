"""Post-hoc truth anchoring of LLM uncertainty scores.

Maps raw proxy scores to correctness probabilities with a small learned
mapper, evaluates calibration and discrimination exactly, and checks the
information-theoretic limits of proxy scores on constructed distributions.
"""

from .core import (
    CONFIDENCE,
    UNCERTAINTY,
    ContractError,
    LabeledDataset,
    Orientation,
    ScoreRecord,
    correctness_prior,
    extract_score_column,
    rng_for,
)
from .mapper import MapperConfig, MapperParams, TrainHistory, apply, train
from .metrics import DiscreteJoint, ReliabilityReport, auroc, ece, mutual_information, reliability_bins

__version__ = "0.1.0"
