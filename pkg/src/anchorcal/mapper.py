"""Truth-anchoring mapper: a small ReLU MLP from raw score(s) to P(correct).

Trained full-batch with Adam on binary cross-entropy plus an optional
logistic pairwise ranking term over all positive/negative pairs, with early
stopping on validation AUROC. Everything is plain numpy with hand-written
backpropagation.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .core import ContractError, rng_for, stratified_split
from .metrics import auroc

FORMAT_VERSION = "anchorcal.mapper/1"

_P_LO = np.finfo(np.float64).tiny
_P_HI = 1.0 - np.finfo(np.float64).epsneg


@dataclass(frozen=True)
class MapperConfig:
    input_dim: int = 1
    hidden_width: int = 32
    hidden_layers: int = 3
    learning_rate: float = 0.01
    phi_rank: float = 1.0
    max_epochs: int = 500
    patience: int = 50
    val_fraction: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if self.input_dim not in (1, 2):
            raise ContractError("bad-config", f"input_dim must be 1 or 2, got {self.input_dim}")
        for name in ("hidden_width", "hidden_layers", "max_epochs", "patience"):
            if getattr(self, name) < 1:
                raise ContractError("bad-config", f"{name} must be positive")
        if self.phi_rank < 0:
            raise ContractError("bad-config", "phi_rank must be >= 0")
        if not 0.0 < self.val_fraction < 1.0:
            raise ContractError("bad-config", "val_fraction must be in (0, 1)")


@dataclass
class MapperParams:
    """Layer weights (``fan_in x fan_out``) and biases, plus input standardization.

    ``weights[-1]`` has a single output column producing the logit.
    """

    weights: list[np.ndarray]
    biases: list[np.ndarray]
    shift: np.ndarray
    scale: np.ndarray
    config: MapperConfig = field(default_factory=MapperConfig)
    meta: dict = field(default_factory=dict)

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[0]

    def arrays(self) -> list[np.ndarray]:
        """Trainable arrays in a fixed order: W0, b0, W1, b1, ..."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def copy(self) -> "MapperParams":
        return MapperParams(
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
            self.shift.copy(),
            self.scale.copy(),
            self.config,
            dict(self.meta),
        )

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(a)) for a in self.arrays())

    def to_dict(self) -> dict:
        return {
            "version": FORMAT_VERSION,
            "layers": [
                {"shape": list(w.shape), "weight": w.ravel().tolist(), "bias": b.tolist()}
                for w, b in zip(self.weights, self.biases)
            ],
            "shift": self.shift.tolist(),
            "scale": self.scale.tolist(),
            "config": asdict(self.config),
            "meta": self.meta,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "MapperParams":
        if d.get("version") != FORMAT_VERSION:
            raise ContractError("version-mismatch", f"expected {FORMAT_VERSION!r}, got {d.get('version')!r}")
        weights, biases = [], []
        for layer in d["layers"]:
            shape = tuple(layer["shape"])
            weights.append(np.array(layer["weight"], dtype=np.float64).reshape(shape))
            biases.append(np.array(layer["bias"], dtype=np.float64))
        cfg = MapperConfig(**d["config"])
        dims = [cfg.input_dim] + [cfg.hidden_width] * cfg.hidden_layers + [1]
        expected = [(a, b) for a, b in zip(dims[:-1], dims[1:])]
        if [w.shape for w in weights] != expected or [b.shape for b in biases] != [(b,) for _, b in expected]:
            raise ContractError("bad-mapper", "layer shapes do not match the stored configuration")
        shift = np.array(d["shift"], dtype=np.float64)
        scale = np.array(d["scale"], dtype=np.float64)
        if shift.shape != (cfg.input_dim,) or scale.shape != (cfg.input_dim,):
            raise ContractError("bad-mapper", "standardization vectors do not match input_dim")
        return cls(weights, biases, shift, scale, cfg, dict(d.get("meta") or {}))

    @classmethod
    def from_json(cls, text: str) -> "MapperParams":
        return cls.from_dict(json.loads(text))


def zero_params(cfg: MapperConfig = MapperConfig()) -> MapperParams:
    dims = [cfg.input_dim] + [cfg.hidden_width] * cfg.hidden_layers + [1]
    return MapperParams(
        [np.zeros((a, b)) for a, b in zip(dims[:-1], dims[1:])],
        [np.zeros(b) for b in dims[1:]],
        np.zeros(cfg.input_dim),
        np.ones(cfg.input_dim),
        cfg,
    )


def init_params(cfg: MapperConfig, shift=None, scale=None) -> MapperParams:
    """Uniform(+-sqrt(6 / fan_in)) weights and zero biases from the config seed."""
    rng = rng_for(cfg.seed, "mapper-init")
    p = zero_params(cfg)
    for w in p.weights:
        bound = math.sqrt(6.0 / w.shape[0])
        w[...] = rng.uniform(-bound, bound, size=w.shape)
    if shift is not None:
        p.shift = np.asarray(shift, dtype=np.float64).copy()
    if scale is not None:
        p.scale = np.asarray(scale, dtype=np.float64).copy()
    return p


def sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def softplus(x):
    """log(1 + e^x) without overflow."""
    return np.logaddexp(0.0, x)


def _as_inputs(p: MapperParams, s) -> np.ndarray:
    x = np.asarray(s, dtype=np.float64)
    if x.ndim == 0:
        x = x.reshape(1, 1)
    elif x.ndim == 1:
        x = x.reshape(-1, 1) if p.input_dim == 1 else x.reshape(1, -1)
    if x.shape[1] != p.input_dim:
        raise ContractError("input-dim-mismatch", f"mapper expects {p.input_dim} inputs, got {x.shape[1]}")
    if not np.all(np.isfinite(x)):
        raise ContractError("non-finite-input")
    return x


def _forward_cache(p: MapperParams, x: np.ndarray):
    h = (x - p.shift) / p.scale
    pre, acts = [], [h]
    last = len(p.weights) - 1
    for i, (w, b) in enumerate(zip(p.weights, p.biases)):
        a = h @ w + b
        pre.append(a)
        h = a if i == last else np.maximum(a, 0.0)
        acts.append(h)
    return h[:, 0], pre, acts


def logits(p: MapperParams, s) -> np.ndarray:
    return _forward_cache(p, _as_inputs(p, s))[0]


def forward(p: MapperParams, s):
    """``(z, prob)`` for a single score vector."""
    x = _as_inputs(p, np.asarray(s, dtype=np.float64).reshape(1, -1))
    z = float(_forward_cache(p, x)[0][0])
    return z, float(to_prob(np.array([z]))[0])


def to_prob(z) -> np.ndarray:
    # keep probabilities strictly inside (0, 1) when the logit saturates float64
    return np.clip(sigmoid(z), _P_LO, _P_HI)


def apply(p: MapperParams, scores) -> np.ndarray:
    """Calibrated probabilities for a batch of score vectors (or scalars when 1-D)."""
    return to_prob(logits(p, scores))


# --- objective ---------------------------------------------------------------


def bce_with_logits(z, labels) -> float:
    z = np.asarray(z, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if z.size == 0:
        raise ContractError("empty-batch")
    return float(np.mean(softplus(z) - y * z))


def bce_loss(probs, labels, logits=None) -> float:
    """Mean binary cross-entropy. Uses the logit form when ``logits`` is given."""
    if logits is not None:
        return bce_with_logits(logits, labels)
    p = np.asarray(probs, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if p.size == 0:
        raise ContractError("empty-batch")
    if p.shape != y.shape:
        raise ContractError("length-mismatch")
    return float(-np.mean(y * np.log(p) + (1 - y) * np.log1p(-p)))


def _pair_terms(z, y, need_grad: bool):
    """Pairwise logistic loss and its per-logit gradient, sharing one pass."""
    pos, neg = y == 1, y == 0
    zp, zn = z[pos], z[neg]
    if zp.size == 0 or zn.size == 0:
        return None, None
    d = zp[:, None] - zn[None, :]
    e = np.exp(-np.abs(d))
    loss = float(np.mean(np.maximum(-d, 0.0) + np.log1p(e)))
    if not need_grad:
        return loss, None
    # sigmoid(-d), written via e = exp(-|d|)
    w = np.where(d >= 0, e, 1.0) / (1.0 + e)
    w /= d.size
    g = np.zeros_like(z)
    g[pos] = -w.sum(axis=1)
    g[neg] = w.sum(axis=0)
    return loss, g


def rank_loss(z, labels, return_flag: bool = False):
    """Mean logistic loss ``log(1 + exp(-(z_i - z_j)))`` over positive/negative pairs.

    Returns 0 on a single-class batch; with ``return_flag`` also returns
    ``"no-pairs"`` in that case (``None`` otherwise).
    """
    loss, _ = _pair_terms(np.asarray(z, dtype=np.float64), np.asarray(labels), False)
    flag = None
    if loss is None:
        loss, flag = 0.0, "no-pairs"
    return (loss, flag) if return_flag else loss


def total_loss(probs, z, labels, phi_rank: float) -> float:
    bce = bce_loss(probs, labels, logits=z)
    if phi_rank == 0:
        return bce
    return bce + phi_rank * rank_loss(z, labels)


def loss_and_gradients(p: MapperParams, x, labels, phi_rank: float):
    """``(loss, grads)`` with ``grads`` aligned to :meth:`MapperParams.arrays`.

    ReLU's subgradient at exactly zero is taken as zero.
    """
    x = _as_inputs(p, x)
    y = np.asarray(labels, dtype=np.float64)
    if x.shape[0] == 0:
        raise ContractError("empty-batch")
    z, pre, acts = _forward_cache(p, x)
    loss = bce_with_logits(z, y)
    dz = (sigmoid(z) - y) / z.size
    if phi_rank:
        r_loss, r_grad = _pair_terms(z, y, True)
        if r_loss is not None:
            loss += phi_rank * r_loss
            dz += phi_rank * r_grad
    delta = dz[:, None]
    grads_w, grads_b = [], []
    for i in range(len(p.weights) - 1, -1, -1):
        grads_w.append(acts[i].T @ delta)
        grads_b.append(delta.sum(axis=0))
        if i:
            delta = (delta @ p.weights[i].T) * (pre[i - 1] > 0)
    grads = []
    for gw, gb in zip(reversed(grads_w), reversed(grads_b)):
        grads += [gw, gb]
    return loss, grads


def gradients(p: MapperParams, x, labels, phi_rank: float):
    return loss_and_gradients(p, x, labels, phi_rank)[1]


# --- optimizer ---------------------------------------------------------------


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros_like(cls, arrays) -> "AdamState":
        return cls([np.zeros_like(a) for a in arrays], [np.zeros_like(a) for a in arrays])


def adam_step(arrays, grads, state: AdamState, lr: float) -> None:
    """One bias-corrected Adam update applied to ``arrays`` in place."""
    if len(arrays) != len(grads) or len(arrays) != len(state.m):
        raise ContractError("state-mismatch")
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1 - b1**state.t
    c2 = 1 - b2**state.t
    for a, g, m, v in zip(arrays, grads, state.m, state.v):
        m *= b1
        m += (1 - b1) * g
        v *= b2
        v += (1 - b2) * g * g
        a -= lr * (m / c1) / (np.sqrt(v / c2) + state.eps)


# --- training ----------------------------------------------------------------


@dataclass
class EpochRecord:
    train_loss: float
    val_auroc: float
    val_loss: float


@dataclass
class TrainHistory:
    epochs: list[EpochRecord]
    best_epoch: int
    stopped_early: bool

    @property
    def best_val_auroc(self) -> float:
        return self.epochs[self.best_epoch].val_auroc

    def summary(self) -> dict:
        return {
            "epochs": len(self.epochs),
            "best_epoch": self.best_epoch,
            "best_val_auroc": self.best_val_auroc,
            "best_val_loss": self.epochs[self.best_epoch].val_loss,
            "final_train_loss": self.epochs[-1].train_loss,
            "stopped_early": self.stopped_early,
        }


def _standardizer(x):
    shift = x.mean(axis=0)
    scale = x.std(axis=0)
    scale = np.where(scale > 0, scale, 1.0)
    return shift, scale


def train(data, cfg: MapperConfig = MapperConfig(), labels=None):
    """Fit a mapper and return ``(params, history)``.

    ``data`` is either an ``(n, input_dim)`` array with ``labels`` given
    separately, or a sequence of ``(score-vector, label)`` pairs. A stratified
    ``cfg.val_fraction`` slice is held out. After each full-batch Adam step
    the validation AUROC is computed; the checkpoint kept is the one with the
    highest validation AUROC, ties broken by lower validation BCE. Training
    stops after ``cfg.patience`` epochs without a new best.
    """
    if labels is None:
        pairs = list(data)
        x = np.array([np.ravel(np.asarray(s, dtype=np.float64)) for s, _ in pairs], dtype=np.float64)
        y = np.array([c for _, c in pairs], dtype=np.int64)
    else:
        x = np.asarray(data, dtype=np.float64)
        y = np.asarray(labels, dtype=np.int64)
    x = x.reshape(len(y), -1) if x.size else x.reshape(0, cfg.input_dim)
    if x.shape[1] != cfg.input_dim:
        cfg = replace(cfg, input_dim=x.shape[1])
    if len(y) < 2:
        raise ContractError("too-few-records", "training needs at least 2 records")
    if not np.all(np.isfinite(x)):
        raise ContractError("non-finite-input")

    tr, va = stratified_split(y, 1.0 - cfg.val_fraction, rng_for(cfg.seed, "mapper-split"))
    for part, name in ((tr, "train"), (va, "validation")):
        yy = y[part]
        if yy.size == 0 or yy.min() == yy.max():
            raise ContractError("split-degenerate", f"{name} split lacks one class")
    xt, yt, xv, yv = x[tr], y[tr], x[va], y[va]

    shift, scale = _standardizer(xt)
    params = init_params(cfg, shift, scale)
    arrays = params.arrays()
    state = AdamState.zeros_like(arrays)

    epochs: list[EpochRecord] = []
    best = None
    best_key = None
    since_best = 0
    stopped_early = False
    for epoch in range(cfg.max_epochs):
        loss, grads = loss_and_gradients(params, xt, yt, cfg.phi_rank)
        adam_step(arrays, grads, state, cfg.learning_rate)
        if not params.is_finite():
            raise ContractError("non-finite-params", f"parameters diverged at epoch {epoch}")
        zv = logits(params, xv)
        # AUROC on logits: same ordering as probabilities without float saturation ties
        rec = EpochRecord(float(loss), auroc(zv, yv), bce_with_logits(zv, yv))
        epochs.append(rec)
        key = (rec.val_auroc, -rec.val_loss)
        if best_key is None or key > best_key:
            best_key, best, best_epoch, since_best = key, params.copy(), epoch, 0
        else:
            since_best += 1
            if since_best >= cfg.patience:
                stopped_early = epoch + 1 < cfg.max_epochs
                break
    return best, TrainHistory(epochs, best_epoch, stopped_early)


def is_strictly_increasing_on(p: MapperParams, values) -> bool:
    """Whether the 1-D mapper's logit strictly increases over the sorted unique values."""
    u = np.unique(np.asarray(values, dtype=np.float64))
    if u.size < 2:
        return True
    return bool(np.all(np.diff(logits(p, u)) > 0))
