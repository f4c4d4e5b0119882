"""Reading and writing score/label files, and proxy scores derived from
cached per-token log-probabilities or step entropies.

All log-probabilities are natural-log. Scores that need model access
(energy, P(True), verbalised confidence, semantic entropy, ...) are plain
pass-through columns here.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .core import ContractError, LabeledDataset, ScoreRecord

DERIVED_NAMES = ("log_msp", "perplexity", "mean_entropy")
CALIBRATED_KEY = "tac_prob"


def _check_logprobs(token_logprobs):
    lp = [float(v) for v in token_logprobs]
    if not lp:
        raise ContractError("empty-sequence", "no token log-probabilities")
    if any(not v <= 0.0 for v in lp):
        raise ContractError("bad-logprob", "token log-probabilities must be <= 0")
    return lp


def derive_log_msp(token_logprobs) -> float:
    """Sequence log-probability (sum of token log-probabilities)."""
    return math.fsum(_check_logprobs(token_logprobs))


def derive_perplexity(token_logprobs) -> float:
    lp = _check_logprobs(token_logprobs)
    return math.exp(-math.fsum(lp) / len(lp))


def derive_mean_entropy(step_entropies) -> float:
    ent = [float(v) for v in step_entropies]
    if not ent:
        raise ContractError("empty-sequence", "no step entropies")
    if any(not v >= 0.0 for v in ent):
        raise ContractError("bad-entropy", "step entropies must be >= 0")
    return math.fsum(ent) / len(ent)


def derived_scores(token_logprobs=None, step_entropies=None) -> dict[str, float]:
    out = {}
    if token_logprobs:
        out["log_msp"] = derive_log_msp(token_logprobs)
        out["perplexity"] = derive_perplexity(token_logprobs)
    if step_entropies:
        out["mean_entropy"] = derive_mean_entropy(step_entropies)
    return out


def _parse_label(raw, where):
    if isinstance(raw, bool):
        raise ContractError("bad-label", f"{where}: label must be 0 or 1, got {raw!r}")
    try:
        val = float(raw)
    except (TypeError, ValueError):
        raise ContractError("bad-label", f"{where}: label must be 0 or 1, got {raw!r}") from None
    if val not in (0.0, 1.0):
        raise ContractError("bad-label", f"{where}: label must be 0 or 1, got {raw!r}")
    return int(val)


def _finish(rid, scores, label, lp, ent, meta, where, derive):
    if derive:
        for k, v in derived_scores(lp, ent).items():
            scores.setdefault(k, v)
    if not scores:
        raise ContractError("no-scores", f"{where}: record has no scores")
    try:
        return ScoreRecord(rid, scores, label, lp, ent, meta or None)
    except ContractError as e:
        raise ContractError(e.code, f"{where}: {e}") from None


def _read_jsonl(path, derive):
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            where = f"{path}:{lineno}"
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise ContractError("malformed-line", f"{where}: {e.msg}") from None
            if not isinstance(obj, dict):
                raise ContractError("malformed-line", f"{where}: expected a JSON object")
            if "label" not in obj:
                raise ContractError("missing-label", where)
            label = _parse_label(obj["label"], where)
            rid = str(obj["id"]) if obj.get("id") is not None else str(len(records))
            raw_scores = obj.get("scores") or {}
            if not isinstance(raw_scores, dict):
                raise ContractError("malformed-line", f"{where}: scores must be an object")
            scores = {}
            for k, v in raw_scores.items():
                if isinstance(v, bool) or not isinstance(v, (int, float)):
                    raise ContractError("malformed-line", f"{where}: score {k!r} is not a number")
                scores[str(k)] = float(v)
            if CALIBRATED_KEY in obj:
                scores[CALIBRATED_KEY] = float(obj[CALIBRATED_KEY])
            records.append(
                _finish(rid, scores, label, obj.get("token_logprobs"), obj.get("step_entropies"), obj.get("meta"), where, derive)
            )
    return records


def _read_csv(path, derive):
    records = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "label" not in reader.fieldnames:
            raise ContractError("missing-label", f"{path}: CSV header has no 'label' column")
        for lineno, row in enumerate(reader, 2):
            where = f"{path}:{lineno}"
            if None in row:
                raise ContractError("malformed-line", f"{where}: more fields than header columns")
            label = _parse_label(row["label"], where)
            rid = row.get("id") or str(len(records))
            scores, meta = {}, {}
            for k, v in row.items():
                if k in ("label", "id") or v is None or v == "":
                    continue
                try:
                    scores[k] = float(v)
                except ValueError:
                    meta[k] = v
            records.append(_finish(rid, scores, label, None, None, meta, where, derive))
    return records


def load_records(path, format: str | None = None, seed: int = 0, source_tag: str | None = None, derive: bool = True) -> LabeledDataset:
    """Load a JSONL or CSV score file into a :class:`LabeledDataset`.

    ``format`` defaults to the file suffix. Records without an id get their
    0-based position as a decimal string. With ``derive`` set, records
    carrying ``token_logprobs`` / ``step_entropies`` gain ``log_msp``,
    ``perplexity`` and ``mean_entropy`` scores unless already present.
    """
    path = Path(path)
    fmt = (format or path.suffix.lstrip(".")).lower()
    if fmt == "jsonl":
        records = _read_jsonl(path, derive)
    elif fmt == "csv":
        records = _read_csv(path, derive)
    else:
        raise ContractError("bad-format", f"unknown format {fmt!r} (expected jsonl or csv)")
    return LabeledDataset(tuple(records), source_tag if source_tag is not None else path.name, seed)


def record_to_dict(r: ScoreRecord, prob: float | None = None) -> dict:
    d = {"id": r.id, "label": r.label, "scores": {k: v for k, v in r.scores.items() if k != CALIBRATED_KEY}}
    if r.token_logprobs is not None:
        d["token_logprobs"] = list(r.token_logprobs)
    if r.step_entropies is not None:
        d["step_entropies"] = list(r.step_entropies)
    if r.meta:
        d["meta"] = dict(r.meta)
    if prob is not None:
        d[CALIBRATED_KEY] = prob
    elif CALIBRATED_KEY in r.scores:
        d[CALIBRATED_KEY] = r.scores[CALIBRATED_KEY]
    return d


def write_records(path, ds: LabeledDataset) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in ds.records:
            fh.write(json.dumps(record_to_dict(r)) + "\n")


def write_calibrated(path, ds: LabeledDataset, probs) -> None:
    """Write JSONL records with their calibrated probability under ``tac_prob``."""
    probs = np.asarray(probs, dtype=np.float64).ravel()
    if probs.size != len(ds):
        raise ContractError("length-mismatch", f"{probs.size} probabilities for {len(ds)} records")
    if not np.all((probs > 0.0) & (probs < 1.0)):
        raise ContractError("bad-probability", "calibrated probabilities must lie in (0, 1)")
    lines = [json.dumps(record_to_dict(r, float(p))) + "\n" for r, p in zip(ds.records, probs)]
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.writelines(lines)
    except OSError as e:
        raise ContractError("unwritable-path", f"{path}: {e.strerror or e}") from None


def dataset_from_arrays(scores: dict[str, np.ndarray], labels, seed: int = 0, source_tag: str = "synthetic") -> LabeledDataset:
    """Build a dataset from parallel score columns (ids are positions)."""
    labels = np.asarray(labels, dtype=np.int64)
    cols = {k: np.asarray(v, dtype=np.float64) for k, v in scores.items()}
    recs = [
        ScoreRecord(str(i), {k: float(v[i]) for k, v in cols.items()}, int(labels[i]))
        for i in range(len(labels))
    ]
    return LabeledDataset(tuple(recs), source_tag, seed)

