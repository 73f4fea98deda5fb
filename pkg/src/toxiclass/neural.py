"""Embedding-based LSTM and CNN binary classifiers with hand-derived
gradients, trained by seeded mini-batch gradient descent on cross-entropy.

All arithmetic is float64. Forward passes are pure functions of (parameters,
input); training is bitwise reproducible for a fixed (data, spec, seed).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    EmptyAfterEncoding,
    EmptySequence,
    SequenceTooShort,
    SingleClassTraining,
)
from .features import Vocabulary


@dataclass
class TrainSpec:
    epochs: int = 5
    batch_size: int = 32
    learning_rate: float = 0.05
    seed: int = 0
    max_len: int = 200
    embed_dim: int = 50
    hidden_size: int = 64
    n_filters: int = 100
    kernel_width: int = 3

    def __post_init__(self):
        for name in ("epochs", "batch_size", "max_len", "embed_dim",
                     "hidden_size", "n_filters", "kernel_width"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be nonnegative")


@dataclass
class SequenceExample:
    """Token ids truncated/padded to a fixed length; padding id = |vocab|."""

    token_ids: np.ndarray
    true_len: int


def encode_sequence(tokens: Sequence[str], vocab: Vocabulary, max_len: int) -> SequenceExample:
    """Map tokens to vocabulary columns, dropping out-of-vocabulary ones."""
    ids = [vocab.index[t] for t in tokens if t in vocab.index][:max_len]
    if not ids:
        raise EmptyAfterEncoding("no in-vocabulary token in document")
    pad_id = len(vocab)
    padded = np.full(max_len, pad_id, dtype=np.int64)
    padded[: len(ids)] = ids
    return SequenceExample(padded, len(ids))


def pad_to_min_len(example: SequenceExample, min_len: int, pad_id: int) -> SequenceExample:
    """Extend ``true_len`` to ``min_len`` using padding ids (CNN short input)."""
    if example.true_len >= min_len:
        return example
    ids = example.token_ids
    if len(ids) < min_len:
        ids = np.concatenate([ids, np.full(min_len - len(ids), pad_id, dtype=np.int64)])
    return SequenceExample(ids, min_len)


def _xavier(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int, fan_out: int) -> np.ndarray:
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def _bce_and_dlogit(logits: np.ndarray, y: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean binary cross-entropy and its gradient w.r.t. the logits."""
    n = len(logits)
    losses = np.maximum(logits, 0.0) - y * logits + np.log1p(np.exp(-np.abs(logits)))
    probs = _sigmoid(logits)
    return float(np.mean(losses)), (probs - y) / n


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


class LstmModel:
    """Single-layer LSTM -> affine -> sigmoid. Padding steps are skipped:
    state freezes once a sequence ends, so the read-out sees the hidden state
    at each example's true length."""

    family = "lstm"

    def __init__(self, vocab_size: int, embed_dim: int, hidden_size: int,
                 rng: np.random.Generator | None = None):
        self.vocab_size = vocab_size
        self.embed_dim = embed_dim
        self.hidden_size = hidden_size
        self.pad_id = vocab_size
        v, e, h = vocab_size + 1, embed_dim, hidden_size
        if rng is None:
            self.embedding = np.zeros((v, e))
            self.w_i, self.w_f, self.w_o, self.w_g = (np.zeros((e + h, h)) for _ in range(4))
            self.w_out = np.zeros(h)
        else:
            self.embedding = _xavier(rng, (v, e), v, e)
            self.w_i = _xavier(rng, (e + h, h), e + h, h)
            self.w_f = _xavier(rng, (e + h, h), e + h, h)
            self.w_o = _xavier(rng, (e + h, h), e + h, h)
            self.w_g = _xavier(rng, (e + h, h), e + h, h)
            self.w_out = _xavier(rng, (h,), h, 1)
        self.b_i = np.zeros(h)
        self.b_f = np.zeros(h)
        self.b_o = np.zeros(h)
        self.b_g = np.zeros(h)
        self.b_out = np.zeros(1)

    def parameters(self) -> dict[str, np.ndarray]:
        return {
            "embedding": self.embedding,
            "w_i": self.w_i, "b_i": self.b_i,
            "w_f": self.w_f, "b_f": self.b_f,
            "w_o": self.w_o, "b_o": self.b_o,
            "w_g": self.w_g, "b_g": self.b_g,
            "w_out": self.w_out, "b_out": self.b_out,
        }

    def _forward_batch(self, ids: np.ndarray, lens: np.ndarray):
        batch, steps = ids.shape
        h = np.zeros((batch, self.hidden_size))
        c = np.zeros((batch, self.hidden_size))
        cache = []
        for t in range(steps):
            mask = (t < lens).astype(np.float64)[:, None]
            x = self.embedding[ids[:, t]]
            z = np.concatenate([x, h], axis=1)
            gi = _sigmoid(z @ self.w_i + self.b_i)
            gf = _sigmoid(z @ self.w_f + self.b_f)
            go = _sigmoid(z @ self.w_o + self.b_o)
            gg = np.tanh(z @ self.w_g + self.b_g)
            c_new = gf * c + gi * gg
            tanh_c = np.tanh(c_new)
            h_new = go * tanh_c
            cache.append((z, gi, gf, go, gg, c, tanh_c, mask))
            c = mask * c_new + (1.0 - mask) * c
            h = mask * h_new + (1.0 - mask) * h
        logits = h @ self.w_out + self.b_out[0]
        return logits, h, cache

    def _backward_batch(self, ids, dlogits, h_final, cache):
        grads = {name: np.zeros_like(p) for name, p in self.parameters().items()}
        grads["w_out"] = h_final.T @ dlogits
        grads["b_out"] = np.array([np.sum(dlogits)])
        dh = dlogits[:, None] * self.w_out[None, :]
        dc = np.zeros_like(dh)
        e = self.embed_dim
        for t in range(len(cache) - 1, -1, -1):
            z, gi, gf, go, gg, c_prev, tanh_c, mask = cache[t]
            dh_new = mask * dh
            dh_carry = (1.0 - mask) * dh
            dc_new = mask * dc
            dc_carry = (1.0 - mask) * dc
            do = dh_new * tanh_c
            dc_new = dc_new + dh_new * go * (1.0 - tanh_c**2)
            df = dc_new * c_prev
            di = dc_new * gg
            dg = dc_new * gi
            da_i = di * gi * (1.0 - gi)
            da_f = df * gf * (1.0 - gf)
            da_o = do * go * (1.0 - go)
            da_g = dg * (1.0 - gg**2)
            grads["w_i"] += z.T @ da_i
            grads["w_f"] += z.T @ da_f
            grads["w_o"] += z.T @ da_o
            grads["w_g"] += z.T @ da_g
            grads["b_i"] += da_i.sum(axis=0)
            grads["b_f"] += da_f.sum(axis=0)
            grads["b_o"] += da_o.sum(axis=0)
            grads["b_g"] += da_g.sum(axis=0)
            dz = da_i @ self.w_i.T + da_f @ self.w_f.T + da_o @ self.w_o.T + da_g @ self.w_g.T
            np.add.at(grads["embedding"], ids[:, t], dz[:, :e])
            dh = dz[:, e:] + dh_carry
            dc = dc_new * gf + dc_carry
        return grads

    def _batch_arrays(self, examples: Sequence[SequenceExample]):
        lens = np.array([ex.true_len for ex in examples], dtype=np.int64)
        steps = int(lens.max())
        ids = np.stack([
            ex.token_ids[:steps] if len(ex.token_ids) >= steps
            else np.concatenate([ex.token_ids,
                                 np.full(steps - len(ex.token_ids), self.pad_id, dtype=np.int64)])
            for ex in examples
        ])
        return ids, lens

    def loss_and_grads(self, examples: Sequence[SequenceExample], labels: np.ndarray):
        ids, lens = self._batch_arrays(examples)
        logits, h_final, cache = self._forward_batch(ids, lens)
        loss, dlogits = _bce_and_dlogit(logits, np.asarray(labels, dtype=np.float64))
        return loss, self._backward_batch(ids, dlogits, h_final, cache)

    def predict_proba_batch(self, examples: Sequence[SequenceExample]) -> np.ndarray:
        ids, lens = self._batch_arrays(examples)
        logits, _, _ = self._forward_batch(ids, lens)
        p = _sigmoid(logits)
        return np.column_stack([p, 1.0 - p])

    def predict_proba(self, x: SequenceExample) -> tuple[float, float]:
        if x.true_len == 0:
            raise EmptySequence("LSTM forward needs true_len >= 1")
        p = float(self.predict_proba_batch([x])[0, 0])
        return (p, 1.0 - p)


class CnnModel:
    """Embedding -> 1-D valid convolution -> ReLU -> global max pool ->
    affine -> sigmoid. Only windows inside an example's true length feed the
    pool."""

    family = "cnn"

    def __init__(self, vocab_size: int, embed_dim: int, n_filters: int,
                 kernel_width: int, rng: np.random.Generator | None = None):
        self.vocab_size = vocab_size
        self.embed_dim = embed_dim
        self.n_filters = n_filters
        self.kernel_width = kernel_width
        self.pad_id = vocab_size
        v, e, f, w = vocab_size + 1, embed_dim, n_filters, kernel_width
        if rng is None:
            self.embedding = np.zeros((v, e))
            self.kernels = np.zeros((f, w, e))
            self.w_out = np.zeros(f)
        else:
            self.embedding = _xavier(rng, (v, e), v, e)
            self.kernels = _xavier(rng, (f, w, e), w * e, f)
            self.w_out = _xavier(rng, (f,), f, 1)
        self.kernel_bias = np.zeros(f)
        self.b_out = np.zeros(1)

    def parameters(self) -> dict[str, np.ndarray]:
        return {
            "embedding": self.embedding,
            "kernels": self.kernels,
            "kernel_bias": self.kernel_bias,
            "w_out": self.w_out,
            "b_out": self.b_out,
        }

    def _forward_batch(self, ids: np.ndarray, lens: np.ndarray):
        batch, steps = ids.shape
        w = self.kernel_width
        positions = steps - w + 1
        emb = self.embedding[ids]
        scores = np.zeros((batch, positions, self.n_filters))
        for j in range(w):
            scores += emb[:, j : j + positions, :] @ self.kernels[:, j, :].T
        scores += self.kernel_bias
        relu = np.maximum(scores, 0.0)
        valid = np.arange(positions)[None, :] < (lens - w + 1)[:, None]
        masked = np.where(valid[:, :, None], relu, -1.0)
        argmax = np.argmax(masked, axis=1)
        pooled = np.take_along_axis(relu, argmax[:, None, :], axis=1)[:, 0, :]
        logits = pooled @ self.w_out + self.b_out[0]
        return logits, (emb, scores, argmax, pooled, ids)

    def _backward_batch(self, cache, dlogits):
        emb, scores, argmax, pooled, ids = cache
        grads = {name: np.zeros_like(p) for name, p in self.parameters().items()}
        grads["w_out"] = pooled.T @ dlogits
        grads["b_out"] = np.array([np.sum(dlogits)])
        dpooled = dlogits[:, None] * self.w_out[None, :]
        batch, positions, filters = scores.shape
        picked = np.take_along_axis(scores, argmax[:, None, :], axis=1)[:, 0, :]
        gate = (picked > 0.0).astype(np.float64)
        dscores = np.zeros_like(scores)
        b_idx = np.arange(batch)[:, None]
        f_idx = np.arange(filters)[None, :]
        dscores[b_idx, argmax, f_idx] = dpooled * gate
        grads["kernel_bias"] = dscores.sum(axis=(0, 1))
        demb = np.zeros_like(emb)
        for j in range(self.kernel_width):
            grads["kernels"][:, j, :] = np.einsum(
                "bpf,bpe->fe", dscores, emb[:, j : j + positions, :]
            )
            demb[:, j : j + positions, :] += dscores @ self.kernels[:, j, :]
        np.add.at(grads["embedding"], ids, demb)
        return grads

    def _batch_arrays(self, examples: Sequence[SequenceExample]):
        lens = np.array([ex.true_len for ex in examples], dtype=np.int64)
        if int(lens.min()) < self.kernel_width:
            raise SequenceTooShort(
                f"sequence shorter than kernel width {self.kernel_width}; pad first"
            )
        steps = int(lens.max())
        ids = np.stack([
            ex.token_ids[:steps] if len(ex.token_ids) >= steps
            else np.concatenate([ex.token_ids,
                                 np.full(steps - len(ex.token_ids), self.pad_id, dtype=np.int64)])
            for ex in examples
        ])
        return ids, lens

    def loss_and_grads(self, examples: Sequence[SequenceExample], labels: np.ndarray):
        ids, lens = self._batch_arrays(examples)
        logits, cache = self._forward_batch(ids, lens)
        loss, dlogits = _bce_and_dlogit(logits, np.asarray(labels, dtype=np.float64))
        return loss, self._backward_batch(cache, dlogits)

    def predict_proba_batch(self, examples: Sequence[SequenceExample]) -> np.ndarray:
        examples = [pad_to_min_len(ex, self.kernel_width, self.pad_id) for ex in examples]
        ids, lens = self._batch_arrays(examples)
        logits, _ = self._forward_batch(ids, lens)
        p = _sigmoid(logits)
        return np.column_stack([p, 1.0 - p])

    def predict_proba(self, x: SequenceExample) -> tuple[float, float]:
        if x.true_len == 0:
            raise EmptySequence("CNN forward needs true_len >= 1")
        p = float(self.predict_proba_batch([x])[0, 0])
        return (p, 1.0 - p)


def lstm_forward(model: LstmModel, x: SequenceExample) -> tuple[float, float]:
    return model.predict_proba(x)


def cnn_forward(model: CnnModel, x: SequenceExample) -> tuple[float, float]:
    """Raises SequenceTooShort for true_len < kernel width; callers pad with
    ``pad_to_min_len`` when they want the padded-input behaviour."""
    if x.true_len == 0:
        raise EmptySequence("CNN forward needs true_len >= 1")
    if x.true_len < model.kernel_width:
        raise SequenceTooShort(
            f"true_len {x.true_len} < kernel width {model.kernel_width}"
        )
    ids, lens = model._batch_arrays([x])
    logits, _ = model._forward_batch(ids, lens)
    p = float(_sigmoid(logits)[0])
    return (p, 1.0 - p)


def train_neural(
    kind: str,
    data: Sequence[tuple[SequenceExample, int]],
    spec: TrainSpec,
    vocab_size: int | None = None,
) -> LstmModel | CnnModel:
    """Mini-batch gradient descent with a seeded shuffle per epoch.

    Pass ``vocab_size`` explicitly when examples come from a Vocabulary so
    the padding id lines up; the fallback infers a safe upper bound.
    """
    if kind not in ("lstm", "cnn"):
        raise ValueError(f"unknown neural model kind {kind!r}")
    if not data:
        raise SingleClassTraining("no training examples")
    labels_all = np.array([label for _, label in data], dtype=np.float64)
    if len(np.unique(labels_all)) < 2:
        raise SingleClassTraining("neural training needs both classes")
    if vocab_size is None:
        vocab_size = max(int(ex.token_ids.max()) for ex, _ in data) + 1

    rng = np.random.default_rng(spec.seed)
    if kind == "lstm":
        model = LstmModel(vocab_size, spec.embed_dim, spec.hidden_size, rng)
        examples = [ex for ex, _ in data]
    else:
        model = CnnModel(vocab_size, spec.embed_dim, spec.n_filters, spec.kernel_width, rng)
        examples = [pad_to_min_len(ex, spec.kernel_width, model.pad_id) for ex, _ in data]

    n = len(examples)
    params = model.parameters()
    for _ in range(spec.epochs):
        order = rng.permutation(n)
        for start in range(0, n, spec.batch_size):
            batch_idx = order[start : start + spec.batch_size]
            batch = [examples[i] for i in batch_idx]
            _, grads = model.loss_and_grads(batch, labels_all[batch_idx])
            for name in params:
                params[name] -= spec.learning_rate * grads[name]
    return model


def mean_epoch_loss(model, examples, labels, batch_size=32) -> float:
    """Mean per-batch loss over one pass in natural order (no updates)."""
    losses = []
    for start in range(0, len(examples), batch_size):
        batch = examples[start : start + batch_size]
        loss, _ = model.loss_and_grads(batch, labels[start : start + batch_size])
        losses.append(loss)
    return float(np.mean(losses))
