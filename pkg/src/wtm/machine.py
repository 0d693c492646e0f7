"""Weighted Tsetlin Machine: clause banks, weighted voting and learning.

A :class:`BinaryWTM` holds ``pos_clauses`` clauses voting for class 1
followed by ``neg_clauses`` clauses voting for class 0, stored as one
contiguous ``(clauses, 2*o)`` state matrix plus a weight vector.  A
:class:`MulticlassWTM` stacks one such machine per class into
``(classes, clauses, 2*o)`` and predicts the class with the largest
weighted sum.

With ``learning_rate == 0`` every weight stays at exactly 1.0 and the
machine behaves as a plain Tsetlin Machine.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass

import numpy as np
from numba import njit, prange

from .automata import DEFAULT_STATES, Clause, Mode, _clause_output, literal_matrix, literals, random_states
from .feedback import FeedbackKind, _type_i, _type_ii
from .sampling import Rng, _next_double, _next_u64, _sample_positions, _uniform_below, binomial_cdf, is_bernoulli

log = logging.getLogger(__name__)

NEGATIVE_MODES = ("one", "all")


@dataclass(frozen=True)
class WTMParams:
    """Hyperparameters shared by every class of a machine.

    ``sparsity`` is the probability of each stochastic exclude-favouring
    event in Type I feedback; larger values give shorter clauses.
    """

    n_features: int
    pos_clauses: int = 50
    neg_clauses: int = 50
    threshold: int = 15
    sparsity: float = 0.1
    learning_rate: float = 0.002
    n_states: int = DEFAULT_STATES

    def __post_init__(self):
        if self.n_features < 1:
            raise ValueError("need at least one feature")
        if self.pos_clauses < 1 or self.neg_clauses < 1:
            raise ValueError("need at least one clause of each polarity")
        if self.threshold < 1:
            raise ValueError(f"threshold must be >= 1, got {self.threshold}")
        if not 0.0 < self.sparsity < 1.0:
            raise ValueError(f"sparsity must lie in (0, 1), got {self.sparsity}")
        if not self.learning_rate >= 0.0:
            raise ValueError(f"learning rate must be >= 0, got {self.learning_rate}")
        if self.n_states < 1:
            raise ValueError("need at least one state per action")

    @classmethod
    def per_class(cls, n_features: int, clauses: int, **kw) -> "WTMParams":
        """Split ``clauses`` evenly between the two polarities."""
        if clauses < 2:
            raise ValueError("need at least two clauses per class")
        return cls(n_features, clauses - clauses // 2, clauses // 2, **kw)

    @property
    def n_clauses(self) -> int:
        return self.pos_clauses + self.neg_clauses

    @property
    def n_literals(self) -> int:
        return 2 * self.n_features


# ---------------------------------------------------------------------------
# scalar rules


def clamp_sum(s: float, threshold: int) -> float:
    return min(max(float(s), -threshold), float(threshold))


def feedback_probability(y: int, clamped: float, threshold: int) -> float:
    """Chance that any one clause receives feedback for target ``y``."""
    if y == 1:
        return (threshold - clamped) / (2 * threshold)
    return (threshold + clamped) / (2 * threshold)


def update_weight(w: float, kind: FeedbackKind, learning_rate: float) -> float:
    if kind is FeedbackKind.TYPE_I:
        return w * (1.0 + learning_rate)
    return w / (1.0 + learning_rate)


# ---------------------------------------------------------------------------
# kernels


@njit(cache=True)
def _weighted_sum(states, weights, lits, n_pos, n_states, learn):
    s = 0.0
    for j in range(states.shape[0]):
        if _clause_output(states[j], lits, n_states, learn):
            if j < n_pos:
                s += weights[j]
            else:
                s -= weights[j]
    return s


# During training each clause also keeps its include actions packed into
# uint64 words, so evaluating it is a handful of ANDs against the packed
# false literals of the example.  The feedback kernels keep the words in
# step with the states.


@njit(cache=True, inline="always")
def _fires(row, false_row):
    for w in range(row.shape[0]):
        if row[w] & false_row[w]:
            return 0
    return 1


@njit(cache=True)
def _fit(states, include, weights, lits, false_lits, y, n_pos, threshold, sparsity, lr, n_states, rng, bernoulli, cdf,
         flags, positions, outputs):
    n_clauses = states.shape[0]
    u = states.shape[1]
    s = 0.0
    for j in range(n_clauses):
        out = _fires(include[j], false_lits)
        outputs[j] = out
        if out:
            if j < n_pos:
                s += weights[j]
            else:
                s -= weights[j]
    t = float(threshold)
    c = min(max(s, -t), t)
    if y == 1:
        p = (t - c) / (2.0 * t)
    else:
        p = (t + c) / (2.0 * t)
    if p <= 0.0:
        return
    factor = 1.0 + lr
    for j in range(n_clauses):
        if _next_double(rng) >= p:
            continue
        if (j < n_pos) == (y == 1):
            q = _sample_positions(rng, u, sparsity, bernoulli, cdf, flags, positions)
            _type_i(states[j], lits, n_states, outputs[j], positions, q, include[j])
            if outputs[j]:
                weights[j] *= factor
        elif outputs[j]:
            _type_ii(states[j], lits, n_states, include[j])
            weights[j] /= factor


@njit(cache=True)
def _fit_multiclass(states, include, weights, lits, false_lits, y, n_pos, threshold, sparsity, lr, n_states, rng,
                    bernoulli, cdf, all_negatives, flags, positions, outputs):
    n_classes = states.shape[0]
    _fit(states[y], include[y], weights[y], lits, false_lits, 1, n_pos, threshold, sparsity, lr, n_states, rng,
         bernoulli, cdf, flags, positions, outputs)
    if all_negatives:
        for k in range(n_classes):
            if k != y:
                _fit(states[k], include[k], weights[k], lits, false_lits, 0, n_pos, threshold, sparsity, lr,
                     n_states, rng, bernoulli, cdf, flags, positions, outputs)
    else:
        k = _uniform_below(rng, n_classes - 1)
        if k >= y:
            k += 1
        _fit(states[k], include[k], weights[k], lits, false_lits, 0, n_pos, threshold, sparsity, lr, n_states, rng,
             bernoulli, cdf, flags, positions, outputs)


@njit(cache=True)
def _train_epoch(states, include, weights, lits, false_lits, labels, order, n_pos, threshold, sparsity, lr,
                 n_states, rng, bernoulli, cdf, all_negatives):
    u = states.shape[2]
    flags = np.zeros(u, dtype=np.uint8)
    positions = np.empty(u, dtype=np.int64)
    outputs = np.empty(states.shape[1], dtype=np.uint8)
    for i in range(order.shape[0]):
        idx = order[i]
        _fit_multiclass(states, include, weights, lits[idx], false_lits[idx], labels[idx], n_pos, threshold,
                        sparsity, lr, n_states, rng, bernoulli, cdf, all_negatives, flags, positions, outputs)


@njit(cache=True)
def _draw_negatives(rng, labels, order, n_classes):
    out = np.empty(order.shape[0], dtype=np.int64)
    for i in range(order.shape[0]):
        y = labels[order[i]]
        k = _uniform_below(rng, n_classes - 1)
        out[i] = k + 1 if k >= y else k
    return out


@njit(cache=True, parallel=True)
def _train_epoch_partitioned(states, include, weights, lits, false_lits, labels, order, negatives, rngs, n_pos,
                             threshold, sparsity, lr, n_states, bernoulli, cdf, all_negatives):
    # Each class bank is owned by one worker with its own stream, so results
    # do not depend on the number of threads.
    n_classes = states.shape[0]
    u = states.shape[2]
    for c in prange(n_classes):
        flags = np.zeros(u, dtype=np.uint8)
        positions = np.empty(u, dtype=np.int64)
        outputs = np.empty(states.shape[1], dtype=np.uint8)
        rng = rngs[c]
        for i in range(order.shape[0]):
            idx = order[i]
            y = labels[idx]
            if y == c:
                target = 1
            elif (all_negatives and y != c) or (not all_negatives and negatives[i] == c):
                target = 0
            else:
                continue
            _fit(states[c], include[c], weights[c], lits[idx], false_lits[idx], target, n_pos, threshold, sparsity,
                 lr, n_states, rng, bernoulli, cdf, flags, positions, outputs)


@njit(cache=True)
def _packed_class_sums(include, nonempty, signed_weights, false_lits, learn, out):
    n_samples, n_words = false_lits.shape
    n_classes, n_clauses = signed_weights.shape
    for i in range(n_samples):
        for c in range(n_classes):
            s = 0.0
            for j in range(n_clauses):
                if not learn and not nonempty[c, j]:
                    continue
                fires = True
                for w in range(n_words):
                    if include[c, j, w] & false_lits[i, w]:
                        fires = False
                        break
                if fires:
                    s += signed_weights[c, j]
            out[i, c] = s


def pack_bits(bits: np.ndarray) -> np.ndarray:
    """Pack the last axis of a 0/1 array into little-endian uint64 words."""
    bits = np.asarray(bits, dtype=np.uint8)
    n = bits.shape[-1]
    pad = (-n) % 64
    if pad:
        bits = np.concatenate((bits, np.zeros(bits.shape[:-1] + (pad,), dtype=np.uint8)), axis=-1)
    packed = np.packbits(bits, axis=-1, bitorder="little")
    return np.ascontiguousarray(packed).view("<u8")


def _include_words(states: np.ndarray, n_states: int) -> np.ndarray:
    return pack_bits(states > n_states)


# ---------------------------------------------------------------------------
# binary machine


class BinaryWTM:
    """Positive then negative clause bank for one two-class discriminator."""

    def __init__(self, params: WTMParams, rng: Rng | None = None, *, states=None, weights=None):
        self.params = params
        shape = (params.n_clauses, params.n_literals)
        if states is None:
            if rng is None:
                raise ValueError("need an rng to initialise automaton states")
            states = random_states(rng, shape, params.n_states)
        if weights is None:
            weights = np.ones(params.n_clauses, dtype=np.float64)
        if states.shape != shape or states.dtype != np.int32:
            raise ValueError(f"states must be int32 with shape {shape}")
        if weights.shape != (params.n_clauses,) or weights.dtype != np.float64:
            raise ValueError(f"weights must be float64 with shape {(params.n_clauses,)}")
        self.states = states
        self.weights = weights

    def __repr__(self):
        p = self.params
        return f"BinaryWTM(o={p.n_features}, clauses={p.pos_clauses}+{p.neg_clauses}, T={p.threshold})"

    def clause(self, j: int) -> Clause:
        """Copy of clause ``j`` (positive clauses first)."""
        return Clause(self.states[j].copy(), self.params.n_states, float(self.weights[j]))

    def set_clause(self, j: int, c: Clause):
        if c.n_states != self.params.n_states or c.n_features != self.params.n_features:
            raise ValueError("clause does not fit this machine")
        self.states[j] = c.states
        self.weights[j] = c.weight

    @property
    def positive_weights(self) -> np.ndarray:
        return self.weights[: self.params.pos_clauses]

    @property
    def negative_weights(self) -> np.ndarray:
        return self.weights[self.params.pos_clauses :]

    def clause_outputs(self, x, mode: Mode = Mode.CLASSIFY) -> np.ndarray:
        lits = _input_literals(self.params, x)
        learn = mode == Mode.LEARN
        return np.array([_clause_output(s, lits, self.params.n_states, learn) for s in self.states], dtype=np.uint8)


def _input_literals(params: WTMParams, x) -> np.ndarray:
    lits = literals(x)
    if lits.shape[0] != params.n_literals:
        raise ValueError(f"input has {lits.shape[0] // 2} features, machine expects {params.n_features}")
    return lits


def weighted_sum(m: BinaryWTM, x, mode: Mode = Mode.CLASSIFY) -> float:
    p = m.params
    lits = _input_literals(p, x)
    return float(_weighted_sum(m.states, m.weights, lits, p.pos_clauses, p.n_states, mode == Mode.LEARN))


def predict(m: BinaryWTM, x) -> int:
    """1 when the weighted vote is non-negative, else 0."""
    return 1 if weighted_sum(m, x, Mode.CLASSIFY) >= 0.0 else 0


def fit_example(m: BinaryWTM, x, y: int, rng: Rng, sampler: str = "binomial") -> BinaryWTM:
    """One on-line learning step on ``(x, y)``; updates ``m`` in place."""
    if y not in (0, 1):
        raise ValueError(f"binary target must be 0 or 1, got {y}")
    p = m.params
    lits = _input_literals(p, x)
    u = p.n_literals
    _fit(m.states, _include_words(m.states, p.n_states), m.weights, lits, pack_bits(1 - lits), y, p.pos_clauses,
         p.threshold, p.sparsity, p.learning_rate, p.n_states, rng.state, is_bernoulli(sampler),
         binomial_cdf(u, p.sparsity), np.zeros(u, np.uint8), np.empty(u, np.int64), np.empty(p.n_clauses, np.uint8))
    return m


# ---------------------------------------------------------------------------
# multiclass machine


@dataclass
class EpochMetrics:
    epoch: int
    train_acc: float
    eval_acc: float
    seconds: float

    def line(self) -> str:
        return f"{self.epoch}\t{self.train_acc:.4f}\t{self.eval_acc:.4f}\t{self.seconds:.3f}"


@dataclass
class WeightStats:
    min: float
    max: float
    mean: float

    @property
    def ratio(self) -> float:
        return self.max / self.min


class MulticlassWTM:
    """One binary machine per class; the largest weighted sum wins."""

    def __init__(self, params: WTMParams, n_classes: int, rng: Rng | None = None, *, states=None, weights=None):
        if n_classes < 2:
            raise ValueError(f"need at least two classes, got {n_classes}")
        self.params = params
        self.n_classes = n_classes
        shape = (n_classes, params.n_clauses, params.n_literals)
        if states is None:
            if rng is None:
                raise ValueError("need an rng to initialise automaton states")
            states = random_states(rng, shape, params.n_states)
        if weights is None:
            weights = np.ones(shape[:2], dtype=np.float64)
        states = np.ascontiguousarray(states, dtype=np.int32)
        weights = np.ascontiguousarray(weights, dtype=np.float64)
        if states.shape != shape:
            raise ValueError(f"states must have shape {shape}, got {states.shape}")
        if weights.shape != shape[:2]:
            raise ValueError(f"weights must have shape {shape[:2]}, got {weights.shape}")
        self.states = states
        self.weights = weights

    def __repr__(self):
        p = self.params
        return (f"MulticlassWTM(classes={self.n_classes}, o={p.n_features}, "
                f"clauses={p.pos_clauses}+{p.neg_clauses}, T={p.threshold}, lr={p.learning_rate})")

    @property
    def machines(self) -> list[BinaryWTM]:
        """Per-class views sharing memory with this machine."""
        return [BinaryWTM(self.params, states=self.states[i], weights=self.weights[i]) for i in range(self.n_classes)]

    def copy(self) -> "MulticlassWTM":
        return MulticlassWTM(self.params, self.n_classes, states=self.states.copy(), weights=self.weights.copy())

    def class_sums(self, X, mode: Mode = Mode.CLASSIFY) -> np.ndarray:
        """Weighted sum of every class for every row of ``X``."""
        X = np.atleast_2d(np.asarray(X, dtype=np.uint8))
        if X.shape[1] != self.params.n_features:
            raise ValueError(f"input has {X.shape[1]} features, machine expects {self.params.n_features}")
        p = self.params
        include = self.states > p.n_states
        signed = self.weights.copy()
        signed[:, p.pos_clauses :] *= -1.0
        out = np.empty((X.shape[0], self.n_classes), dtype=np.float64)
        _packed_class_sums(pack_bits(include), include.any(axis=2), signed, pack_bits(1 - literal_matrix(X)),
                           mode == Mode.LEARN, out)
        return out

    def predict(self, X) -> np.ndarray:
        # argmax keeps the first maximum, i.e. ties go to the lowest class
        return np.argmax(self.class_sums(X), axis=1)

    def score(self, X, y) -> float:
        y = np.asarray(y)
        if y.shape[0] == 0:
            raise ValueError("cannot score an empty set")
        return float(np.mean(self.predict(X) == y))


def predict_multiclass(mm: MulticlassWTM, x) -> int:
    x = np.asarray(x, dtype=np.uint8)
    if x.ndim != 1:
        raise ValueError("expected a single feature vector")
    return int(mm.predict(x[None, :])[0])


def _check_negatives(negatives: str) -> bool:
    if negatives not in NEGATIVE_MODES:
        raise ValueError(f"negatives must be one of {NEGATIVE_MODES}, got {negatives!r}")
    return negatives == "all"


def fit_multiclass_example(mm: MulticlassWTM, x, y: int, rng: Rng, sampler: str = "binomial",
                           negatives: str = "one") -> MulticlassWTM:
    """Train class ``y`` towards 1 and one random other class towards 0."""
    if not 0 <= y < mm.n_classes:
        raise ValueError(f"label {y} outside [0, {mm.n_classes})")
    p = mm.params
    lits = _input_literals(p, x)
    u = p.n_literals
    include = _include_words(mm.states, p.n_states)
    _fit_multiclass(mm.states, include, mm.weights, lits, pack_bits(1 - lits), int(y),
                    p.pos_clauses, p.threshold, p.sparsity, p.learning_rate, p.n_states, rng.state,
                    is_bernoulli(sampler), binomial_cdf(u, p.sparsity), _check_negatives(negatives),
                    np.zeros(u, np.uint8), np.empty(u, np.int64), np.empty(p.n_clauses, np.uint8))
    return mm


def train_epochs(mm: MulticlassWTM, data, epochs: int, rng: Rng, shuffle: bool = True, *, eval_data=None,
                 sampler: str = "binomial", negatives: str = "one", workers: int = 1, eval_train: bool = True,
                 on_epoch=None) -> list[EpochMetrics]:
    """Run ``epochs`` passes of on-line learning over ``data``.

    ``data`` and ``eval_data`` need ``features`` (rows of bits) and
    ``labels``.  With ``workers > 1`` the classes are trained in parallel,
    each with its own stream derived from ``rng``; that changes the random
    streams, and so the model, relative to the sequential default.
    Accuracies that are not computed are reported as NaN.
    """
    p = mm.params
    X = np.asarray(data.features, dtype=np.uint8)
    labels = np.ascontiguousarray(data.labels, dtype=np.int64)
    if epochs < 0:
        raise ValueError(f"epochs must be non-negative, got {epochs}")
    if X.shape[0] == 0:
        raise ValueError("cannot train on an empty dataset")
    if X.shape[1] != p.n_features:
        raise ValueError(f"dataset has {X.shape[1]} features, machine expects {p.n_features}")
    if labels.min() < 0 or labels.max() >= mm.n_classes:
        raise ValueError(f"labels must lie in [0, {mm.n_classes})")
    if eval_data is not None and np.asarray(eval_data.features).shape[1] != p.n_features:
        raise ValueError("evaluation set width does not match the machine")
    bern = is_bernoulli(sampler)
    cdf = binomial_cdf(p.n_literals, p.sparsity)
    all_neg = _check_negatives(negatives)
    lits = literal_matrix(X)
    false_lits = pack_bits(1 - lits)
    include = _include_words(mm.states, p.n_states)

    history = []
    for epoch in range(1, epochs + 1):
        t0 = time.perf_counter()
        order = rng.permutation(X.shape[0]) if shuffle else np.arange(X.shape[0], dtype=np.int64)
        if workers > 1:
            _set_threads(workers)
            negs = _draw_negatives(rng.state, labels, order, mm.n_classes)
            base = Rng(int(_next_u64(rng.state)))
            rngs = np.stack([base.spawn(c).state for c in range(mm.n_classes)])
            _train_epoch_partitioned(mm.states, include, mm.weights, lits, false_lits, labels, order, negs, rngs,
                                     p.pos_clauses, p.threshold, p.sparsity, p.learning_rate, p.n_states, bern, cdf,
                                     all_neg)
        else:
            _train_epoch(mm.states, include, mm.weights, lits, false_lits, labels, order, p.pos_clauses, p.threshold,
                         p.sparsity, p.learning_rate, p.n_states, rng.state, bern, cdf, all_neg)
        seconds = time.perf_counter() - t0
        train_acc = mm.score(X, labels) if eval_train else float("nan")
        eval_acc = mm.score(eval_data.features, eval_data.labels) if eval_data is not None else float("nan")
        m = EpochMetrics(epoch, train_acc, eval_acc, seconds)
        log.debug("epoch %d train %.4f eval %.4f (%.2fs)", epoch, train_acc, eval_acc, seconds)
        history.append(m)
        if on_epoch is not None:
            on_epoch(m)
    return history


def _set_threads(workers: int):
    import numba

    n = min(workers, numba.config.NUMBA_NUM_THREADS)
    if n < workers:
        log.warning("only %d threads available; results are unaffected", n)
    numba.set_num_threads(n)


def weight_statistics(mm: MulticlassWTM) -> list[WeightStats]:
    """Min, max and mean clause weight of each class (both polarities)."""
    return [WeightStats(float(w.min()), float(w.max()), float(w.mean())) for w in mm.weights]
