"""Model registry, versioned-JSON persistence, and token-level adapters.

Serialized models carry a family tag, a config echo, and flat parameter
arrays; floats survive the JSON round trip losslessly (shortest-repr
encoding). Each file also records the vocabulary hash it was trained
against so serving can detect mismatched artifacts.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict
from pathlib import Path
from typing import Sequence

import numpy as np

from .classical import (
    DecisionTree,
    ForestModel,
    GradientBoostingModel,
    KnnModel,
    LinearModel,
)
from .ensemble import SoftVotingEnsemble
from .errors import DataError, EmptyAfterEncoding
from .features import FeatureMatrix, Vocabulary, vectorize_corpus
from .neural import CnnModel, LstmModel, SequenceExample, encode_sequence, pad_to_min_len

MODEL_FORMAT_VERSION = 1

CLASSICAL_FAMILIES = ("lr", "svm", "knn", "rf", "gbm", "dt")
NEURAL_FAMILIES = ("lstm", "cnn")
ALL_FAMILIES = CLASSICAL_FAMILIES + NEURAL_FAMILIES

ENSEMBLE_NAME = "lstm-cnn"


def file_sha256(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _tree_to_dict(tree: DecisionTree) -> dict:
    return {
        "feature": tree.feature.tolist(),
        "threshold": tree.threshold.tolist(),
        "left": tree.left.tolist(),
        "right": tree.right.tolist(),
        "value": tree.value.tolist(),
        "max_depth": tree.max_depth,
    }


def _tree_from_dict(d: dict) -> DecisionTree:
    return DecisionTree(
        np.array(d["feature"], dtype=np.int64),
        np.array(d["threshold"], dtype=np.float64),
        np.array(d["left"], dtype=np.int64),
        np.array(d["right"], dtype=np.int64),
        np.array(d["value"], dtype=np.float64),
        d["max_depth"],
    )


def _matrix_to_dict(X: FeatureMatrix) -> dict:
    return {
        "indptr": X.indptr.tolist(),
        "indices": X.indices.tolist(),
        "data": X.data.tolist(),
        "width": X.width,
        "kind": X.kind,
    }


def _matrix_from_dict(d: dict) -> FeatureMatrix:
    return FeatureMatrix(
        np.array(d["indptr"], dtype=np.int64),
        np.array(d["indices"], dtype=np.int64),
        np.array(d["data"], dtype=np.float64),
        d["width"],
        d["kind"],
    )


def model_params_dict(model) -> dict:
    if isinstance(model, LinearModel):
        return {"weights": model.weights.tolist(), "bias": model.bias, "link": model.link}
    if isinstance(model, KnnModel):
        return {
            "rows": _matrix_to_dict(model.rows),
            "labels": model.labels.tolist(),
            "k": model.k,
        }
    if isinstance(model, DecisionTree):
        return {"tree": _tree_to_dict(model)}
    if isinstance(model, ForestModel):
        return {
            "trees": [_tree_to_dict(t) for t in model.trees],
            "n_estimators": model.n_estimators,
            "width": model.width,
        }
    if isinstance(model, GradientBoostingModel):
        return {
            "trees": [_tree_to_dict(t) for t in model.trees],
            "n_estimators": model.n_estimators,
            "learning_rate": model.learning_rate,
            "base_score": model.base_score,
            "width": model.width,
        }
    if isinstance(model, (LstmModel, CnnModel)):
        shapes = {
            "vocab_size": model.vocab_size,
            "embed_dim": model.embed_dim,
        }
        if isinstance(model, LstmModel):
            shapes["hidden_size"] = model.hidden_size
        else:
            shapes["n_filters"] = model.n_filters
            shapes["kernel_width"] = model.kernel_width
        return {
            "shapes": shapes,
            "arrays": {name: arr.tolist() for name, arr in model.parameters().items()},
        }
    raise TypeError(f"cannot serialize model of type {type(model).__name__}")


def model_from_params(family: str, params: dict):
    if family in ("lr", "svm"):
        return LinearModel(
            np.array(params["weights"], dtype=np.float64),
            float(params["bias"]),
            params["link"],
        )
    if family == "knn":
        return KnnModel(
            _matrix_from_dict(params["rows"]),
            np.array(params["labels"], dtype=np.int64),
            params["k"],
        )
    if family == "dt":
        return _tree_from_dict(params["tree"])
    if family == "rf":
        return ForestModel(
            [_tree_from_dict(t) for t in params["trees"]],
            params["n_estimators"],
            params["width"],
        )
    if family == "gbm":
        return GradientBoostingModel(
            [_tree_from_dict(t) for t in params["trees"]],
            params["n_estimators"],
            float(params["learning_rate"]),
            float(params["base_score"]),
            params["width"],
        )
    if family in ("lstm", "cnn"):
        shapes = params["shapes"]
        if family == "lstm":
            model = LstmModel(shapes["vocab_size"], shapes["embed_dim"], shapes["hidden_size"])
        else:
            model = CnnModel(
                shapes["vocab_size"], shapes["embed_dim"],
                shapes["n_filters"], shapes["kernel_width"],
            )
        live = model.parameters()
        for name, values in params["arrays"].items():
            live[name][...] = np.array(values, dtype=np.float64).reshape(live[name].shape)
        return model
    raise DataError(f"unknown model family {family!r}")


def save_model(model, path: str | Path, family: str, config, vocab_sha256: str) -> None:
    payload = {
        "format_version": MODEL_FORMAT_VERSION,
        "family": family,
        "config": asdict(config) if config is not None else None,
        "vocab_sha256": vocab_sha256,
        "params": model_params_dict(model),
    }
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, sort_keys=True)
        handle.write("\n")


def load_model(path: str | Path):
    """Returns (model, header) where header keeps family/config/vocab hash."""
    with open(path, "r", encoding="utf-8") as handle:
        payload = json.load(handle)
    if payload.get("format_version") != MODEL_FORMAT_VERSION:
        raise DataError(f"{path}: unsupported model format version")
    model = model_from_params(payload["family"], payload["params"])
    header = {k: payload[k] for k in ("format_version", "family", "config", "vocab_sha256")}
    return model, header


# ---------------------------------------------------------------------------
# token-level adapters: uniform predict_proba(tokens) over both model kinds
# ---------------------------------------------------------------------------


class FeatureModelAdapter:
    """Classical model behind the training-time vectorization path."""

    def __init__(self, model, vocab: Vocabulary, kind: str, family: str):
        self.model = model
        self.vocab = vocab
        self.kind = kind
        self.family = family

    def predict_proba(self, tokens: Sequence[str]) -> tuple[float, float]:
        X = vectorize_corpus([list(tokens)], self.vocab, self.kind)
        if isinstance(self.model, DecisionTree):
            return self.model.predict_proba(X.row(0), width=X.width)
        return self.model.predict_proba(X.row(0))

    def predict_proba_batch(self, token_lists) -> np.ndarray:
        X = vectorize_corpus([list(t) for t in token_lists], self.vocab, self.kind)
        return predict_proba_matrix(self.model, X)


class SequenceModelAdapter:
    """Neural model behind the training-time encoding path.

    ``predict_proba`` raises EmptyAfterEncoding (the soft-voting combiner
    turns that into a (0.5, 0.5) contribution); ``predict_proba_batch``
    substitutes the (0.5, 0.5) pair row-wise.
    """

    def __init__(self, model, vocab: Vocabulary, max_len: int, family: str):
        self.model = model
        self.vocab = vocab
        self.max_len = max_len
        self.family = family

    def _encode(self, tokens) -> SequenceExample:
        example = encode_sequence(list(tokens), self.vocab, self.max_len)
        if isinstance(self.model, CnnModel):
            example = pad_to_min_len(example, self.model.kernel_width, self.model.pad_id)
        return example

    def predict_proba(self, tokens: Sequence[str]) -> tuple[float, float]:
        return self.model.predict_proba(self._encode(tokens))

    def predict_proba_batch(self, token_lists) -> np.ndarray:
        encoded = []
        failed = []
        for i, tokens in enumerate(token_lists):
            try:
                encoded.append(self._encode(tokens))
            except EmptyAfterEncoding:
                failed.append(i)
                encoded.append(None)
        present = [ex for ex in encoded if ex is not None]
        out = np.full((len(encoded), 2), 0.5)
        if present:
            probs = self.model.predict_proba_batch(present)
            out[[i for i, ex in enumerate(encoded) if ex is not None]] = probs
        return out


def predict_proba_matrix(model, X: FeatureMatrix) -> np.ndarray:
    """(n, 2) probability pairs for any classical model."""
    if isinstance(model, DecisionTree):
        p = model.leaf_values_matrix(X.to_dense())
        return np.column_stack([p, 1.0 - p])
    return model.predict_proba_matrix(X)


def classify_pairs(pairs: np.ndarray, tie_is_toxic: bool = False) -> np.ndarray:
    """Hard labels (1 = toxic) from probability pairs.

    Individual models resolve an exact 0.5 to NonToxic; the soft-voting
    ensemble resolves it to Toxic.
    """
    toxic = pairs[:, 0]
    return (toxic >= 0.5).astype(np.int64) if tie_is_toxic else (toxic > 0.5).astype(np.int64)


def ensemble_pairs(pairs_a: np.ndarray, pairs_b: np.ndarray) -> np.ndarray:
    """Row-wise soft vote of two members' probability pairs."""
    return (pairs_a + pairs_b) / 2.0


__all__ = [
    "ALL_FAMILIES",
    "CLASSICAL_FAMILIES",
    "NEURAL_FAMILIES",
    "ENSEMBLE_NAME",
    "FeatureModelAdapter",
    "SequenceModelAdapter",
    "SoftVotingEnsemble",
    "classify_pairs",
    "ensemble_pairs",
    "file_sha256",
    "load_model",
    "model_from_params",
    "model_params_dict",
    "predict_proba_matrix",
    "save_model",
]
