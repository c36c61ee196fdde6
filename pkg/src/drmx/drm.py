"""Feed-forward classifier over Boolean feature vectors, written against numpy.

Hidden layers are affine + ReLU with inverted dropout, the output is a
softmax, and training is mini-batch gradient descent with momentum on
mean cross-entropy.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import BadDims, NonFiniteLoss, SingleClassData, WidthMismatch
from .vectorizer import FeatureVector, VectorizedDataset

log = logging.getLogger(__name__)

INIT_STD = 0.05


@dataclass
class Network:
    dims: Tuple[int, ...]
    weights: List[np.ndarray]          # weights[l] has shape (dims[l], dims[l+1])
    biases: List[np.ndarray]
    dropout: Tuple[float, ...]         # one rate per hidden layer
    classes: Tuple = ()

    def __post_init__(self):
        check_dims(self.dims)
        if len(self.dropout) != len(self.dims) - 2:
            raise BadDims("one dropout rate per hidden layer")
        for l, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (self.dims[l], self.dims[l + 1]) or b.shape != (self.dims[l + 1],):
                raise BadDims(f"layer {l} parameters do not chain with dims {self.dims}")
        if len(self.weights) != len(self.dims) - 1 or len(self.biases) != len(self.weights):
            raise BadDims("wrong number of layers")

    @property
    def input_width(self) -> int:
        return self.dims[0]

    def params(self) -> List[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    def copy(self) -> "Network":
        return Network(self.dims, [w.copy() for w in self.weights],
                       [b.copy() for b in self.biases], self.dropout, self.classes)

    def same_parameters(self, other: "Network") -> bool:
        return self.dims == other.dims and all(
            np.array_equal(a, b) for a, b in zip(self.params(), other.params()))


def check_dims(dims) -> None:
    if len(dims) < 3:
        raise BadDims(f"need input, at least one hidden layer and output; got {tuple(dims)}")
    if any(int(d) != d or d < 1 for d in dims[1:]) or dims[0] < 0:
        raise BadDims(f"layer widths must be positive integers; got {tuple(dims)}")


def init_network(dims: Sequence[int], dropout: Optional[Sequence[float]] = None,
                 rng=0, std: float = INIT_STD, classes: Sequence = ()) -> Network:
    """Gaussian weights (mean 0, ``std``), zero biases. ``rng`` is a seed or Generator."""
    dims = tuple(int(d) for d in dims)
    check_dims(dims)
    dropout = tuple(dropout) if dropout is not None else (0.0,) * (len(dims) - 2)
    gen = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    weights = [gen.normal(0.0, std, size=(a, b)) if std > 0 else np.zeros((a, b))
               for a, b in zip(dims[:-1], dims[1:])]
    biases = [np.zeros(b) for b in dims[1:]]
    return Network(dims, weights, biases, dropout, tuple(classes))


def _as_matrix(net: Network, x) -> Tuple[np.ndarray, bool]:
    if isinstance(x, FeatureVector):
        x = x.to_array()
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.shape[1] != net.input_width:
        raise WidthMismatch(f"input width {x.shape[1]} != network input {net.input_width}")
    return x, single


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _forward_cache(net: Network, x: np.ndarray, train: bool, gen):
    acts = [x]
    masks = []
    h = x
    for l in range(len(net.weights) - 1):
        z = h @ net.weights[l] + net.biases[l]
        h = np.maximum(z, 0.0)
        rate = net.dropout[l]
        if train and rate > 0:
            mask = (gen.random(h.shape) >= rate) / (1.0 - rate)
            h = h * mask
        else:
            mask = None
        masks.append(mask)
        acts.append(h)
    probs = softmax(h @ net.weights[-1] + net.biases[-1])
    return acts, masks, probs


def forward(net: Network, x, mode: str = "infer", rng=None) -> np.ndarray:
    """Class probabilities for one vector (1-D result) or a batch (2-D)."""
    if mode not in ("train", "infer"):
        raise ValueError(f"mode must be 'train' or 'infer', not {mode!r}")
    xs, single = _as_matrix(net, x)
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    probs = _forward_cache(net, xs, mode == "train", gen)[2]
    return probs[0] if single else probs


def cross_entropy(probs: np.ndarray, y: np.ndarray) -> float:
    p = probs[np.arange(len(y)), y]
    return float(-np.mean(np.log(np.maximum(p, 1e-300))))


def loss(net: Network, x, y) -> float:
    xs, _ = _as_matrix(net, x)
    return cross_entropy(_forward_cache(net, xs, False, None)[2], np.atleast_1d(y))


def backprop(net: Network, x: np.ndarray, y: np.ndarray, train: bool = False, gen=None):
    """Mean cross-entropy and its gradient, as lists matching weights/biases."""
    acts, masks, probs = _forward_cache(net, x, train, gen)
    n = len(y)
    value = cross_entropy(probs, y)
    delta = probs.copy()
    delta[np.arange(n), y] -= 1.0
    delta /= n
    gw = [None] * len(net.weights)
    gb = [None] * len(net.biases)
    for l in range(len(net.weights) - 1, -1, -1):
        gw[l] = acts[l].T @ delta
        gb[l] = delta.sum(axis=0)
        if l == 0:
            break
        delta = delta @ net.weights[l].T
        if masks[l - 1] is not None:
            delta = delta * masks[l - 1]
        delta = delta * (acts[l] > 0)
    return value, gw, gb


def _precise_loss(params: List[np.ndarray], xs: np.ndarray, ys: np.ndarray) -> Tuple[float, bytes]:
    """Mean cross-entropy and ReLU on/off pattern, computed in extended precision."""
    h = xs.astype(np.longdouble)
    pattern = []
    n_layers = len(params) // 2
    for l in range(n_layers):
        z = h @ params[2 * l] + params[2 * l + 1]
        if l == n_layers - 1:
            break
        pattern.append(np.packbits(z > 0).tobytes())
        h = np.maximum(z, 0)
    z = z - z.max(axis=1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    return -np.mean(logp[np.arange(len(ys)), ys]), b"".join(pattern)


def gradient_check_detail(net: Network, x, y, step: float = 1e-5,
                          floor: float = 1e-8) -> Tuple[float, int, int]:
    """(worst relative error, coordinates compared, coordinates skipped).

    The relative error of one parameter is ``|a - n| / max(|a|, |n|, floor)``
    where ``n`` is the central difference, taken in extended precision so
    that rounding in the loss does not swamp small gradients. A coordinate is
    skipped when the +/- perturbation switches some ReLU on or off: the loss
    has a kink there and the central difference is not a derivative.
    Dropout must be off.
    """
    if any(net.dropout):
        raise ValueError("gradient check needs dropout disabled")
    xs, _ = _as_matrix(net, x)
    ys = np.atleast_1d(np.asarray(y, dtype=int))
    _, gw, gb = backprop(net, xs, ys)
    params = [p.astype(np.longdouble) for p in net.params()]
    worst, compared, skipped = 0.0, 0, 0
    for param, grad in zip(params, [g for pair in zip(gw, gb) for g in pair]):
        flat = param.reshape(-1)
        gflat = grad.reshape(-1)
        for i in range(flat.size):
            keep = flat[i]
            flat[i] = keep + step
            up, p_up = _precise_loss(params, xs, ys)
            flat[i] = keep - step
            down, p_down = _precise_loss(params, xs, ys)
            flat[i] = keep
            if p_up != p_down:
                skipped += 1
                continue
            numeric = float((up - down) / (2 * step))
            err = abs(gflat[i] - numeric) / max(abs(gflat[i]), abs(numeric), floor)
            worst = max(worst, err)
            compared += 1
    if skipped:
        log.info("gradient check skipped %d coordinates at ReLU kinks", skipped)
    return worst, compared, skipped


def gradient_check(net: Network, x, y, step: float = 1e-5, floor: float = 1e-8) -> float:
    """Largest relative gap between backprop and central differences."""
    return gradient_check_detail(net, x, y, step, floor)[0]


# --- predictors --------------------------------------------------------------

@dataclass(frozen=True)
class NetworkPredictor:
    network: Network
    classes: Tuple

    def __post_init__(self):
        if len(self.classes) != self.network.dims[-1]:
            raise BadDims("class list does not match the output layer")

    @property
    def width(self) -> int:
        return self.network.input_width

    def predict(self, x):
        probs = forward(self.network, x, "infer")
        return self.classes[int(np.argmax(probs))]  # first maximum wins


@dataclass(frozen=True)
class TablePredictor:
    """Lookup from packed bits to a class, with a default for unseen vectors."""

    table: Dict[int, object] = field(hash=False)
    default: object
    width: int

    def predict(self, x):
        if isinstance(x, FeatureVector):
            if x.width != self.width:
                raise WidthMismatch(f"vector width {x.width} != table width {self.width}")
            key = x.bits
        else:
            key = FeatureVector.from_bits(x).bits
        return self.table.get(key, self.default)


def predict(p, x):
    return p.predict(x)


# --- training ----------------------------------------------------------------

@dataclass
class TrainReport:
    epochs: int
    final_loss: float
    validation_score: Optional[float]
    stopping_loss: Optional[float]
    seed: int
    selected: Dict = field(default_factory=dict)
    hit_epoch_cap: bool = False
    untrained: bool = False
    loss_history: List[float] = field(default_factory=list)

    def to_dict(self) -> Dict:
        return {"epochs": self.epochs, "final_loss": self.final_loss,
                "validation_score": self.validation_score,
                "stopping_loss": self.stopping_loss, "seed": self.seed,
                "selected": self.selected, "hit_epoch_cap": self.hit_epoch_cap,
                "untrained": self.untrained}


_SEARCHABLE = ("hidden", "dropout", "learning_rate", "momentum", "batch_size")


def _fit(net: Network, x: np.ndarray, y: np.ndarray, lr: float, momentum: float,
         batch: int, epochs: int, gen, stop_at: Optional[float] = None):
    """Run at most ``epochs`` epochs; returns (epochs run, per-epoch full-set losses)."""
    vw = [np.zeros_like(w) for w in net.weights]
    vb = [np.zeros_like(b) for b in net.biases]
    history = []
    n = len(y)
    for epoch in range(epochs):
        order = gen.permutation(n)
        for start in range(0, n, batch):
            idx = order[start:start + batch]
            value, gw, gb = backprop(net, x[idx], y[idx], True, gen)
            if not np.isfinite(value):
                raise NonFiniteLoss(f"loss became {value} in epoch {epoch + 1}")
            for l in range(len(net.weights)):
                vw[l] = momentum * vw[l] - lr * gw[l]
                vb[l] = momentum * vb[l] - lr * gb[l]
                net.weights[l] += vw[l]
                net.biases[l] += vb[l]
        full = loss(net, x, y)
        if not np.isfinite(full):
            raise NonFiniteLoss(f"loss became {full} in epoch {epoch + 1}")
        history.append(full)
        if stop_at is not None and full <= stop_at:
            return epoch + 1, history
    return epochs, history


def _stratified_split(y: np.ndarray, fraction: float, gen) -> Tuple[np.ndarray, np.ndarray]:
    val = []
    for c in np.unique(y):
        rows = np.flatnonzero(y == c)
        rows = rows[gen.permutation(len(rows))]
        take = int(round(fraction * len(rows)))
        if len(rows) > 1:
            take = min(max(take, 1), len(rows) - 1)
        else:
            take = 0
        val.extend(rows[:take].tolist())
    val = np.array(sorted(val), dtype=int)
    train = np.setdiff1d(np.arange(len(y)), val)
    return train, val


def _candidate(cfg, overrides: Dict):
    bad = set(overrides) - set(_SEARCHABLE)
    if bad:
        raise ValueError(f"unsearchable settings: {sorted(bad)}")
    return cfg.update(**overrides)


def train(data: VectorizedDataset, cfg) -> Tuple[Network, TrainReport]:
    """Select settings on a validation split (when asked), then retrain on everything.

    The retrain stops once the full-set training loss falls to the selected
    candidate's training loss at selection time, or at the epoch cap.
    """
    x = data.matrix()
    y = data.targets()
    classes = tuple(data.class_set)
    if len(set(y.tolist())) < 2 or len(classes) < 2:
        raise SingleClassData("training data must contain at least two classes")
    gen = np.random.default_rng(cfg.seed)
    candidates = [{}] + [dict(s) for s in cfg.search]

    def build(c):
        return init_network((data.feature_count, *c.hidden, len(classes)), c.dropout,
                            gen, c.init_std, classes)

    chosen, val_score, stop_at = {}, None, None
    if cfg.validation_fraction > 0 and cfg.epochs > 0:
        tr, va = _stratified_split(y, cfg.validation_fraction, gen)
        if len(va) == 0 or len(set(y[tr].tolist())) < 2:
            log.warning("validation split is degenerate; skipping model selection")
        else:
            best = None
            for overrides in candidates:
                c = _candidate(cfg, overrides)
                net = build(c)
                _fit(net, x[tr], y[tr], c.learning_rate, c.momentum, c.batch_size,
                     c.epochs, gen)
                pred = np.argmax(forward(net, x[va]), axis=1)
                score = float(np.mean(pred == y[va]))
                train_loss = loss(net, x[tr], y[tr])
                if best is None or score > best[0]:
                    best = (score, overrides, train_loss)
            val_score, chosen, stop_at = best
    elif len(candidates) > 1:
        log.warning("search settings ignored without a validation fraction")

    c = _candidate(cfg, chosen)
    net = build(c)
    if c.epochs == 0:
        report = TrainReport(0, loss(net, x, y), val_score, stop_at, cfg.seed, chosen,
                             hit_epoch_cap=True, untrained=True)
        return net, report
    ran, history = _fit(net, x, y, c.learning_rate, c.momentum, c.batch_size, c.epochs,
                        gen, stop_at)
    report = TrainReport(ran, history[-1], val_score, stop_at, cfg.seed, chosen,
                         hit_epoch_cap=stop_at is None or history[-1] > stop_at,
                         loss_history=history)
    return net, report


def accuracy(p, data: VectorizedDataset) -> float:
    if not len(data):
        return 0.0
    hits = sum(p.predict(v) == lbl for v, lbl in zip(data.vectors, data.labels))
    return hits / len(data)
