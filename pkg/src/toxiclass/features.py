"""Vocabulary construction and sparse BoW / TF-IDF vectorization.

TF is the within-document relative frequency (0 for an empty document), IDF
is ln(total documents / documents containing the term) with no smoothing,
and a TF-IDF weight is their product. Zero weights are never stored.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError, EmptyCorpus, UnknownTerm

FEATURE_KINDS = ("bow", "tfidf")


@dataclass
class Vocabulary:
    """Term -> column bijection plus document-frequency statistics."""

    terms: list[str]
    doc_freq: np.ndarray
    n_docs: int
    index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        self.index = {term: column for column, term in enumerate(self.terms)}

    def __len__(self) -> int:
        return len(self.terms)

    def __contains__(self, term: str) -> bool:
        return term in self.index

    def column(self, term: str) -> int:
        try:
            return self.index[term]
        except KeyError:
            raise UnknownTerm(f"term {term!r} not in vocabulary") from None

    def document_frequency(self, term: str) -> int:
        return int(self.doc_freq[self.column(term)])

    def save(self, path: str | Path) -> None:
        """"term<TAB>column<TAB>doc_freq" lines under an n_docs header."""
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(f"# n_docs\t{self.n_docs}\n")
            for column, term in enumerate(self.terms):
                handle.write(f"{term}\t{column}\t{int(self.doc_freq[column])}\n")

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        terms: list[str] = []
        freqs: list[int] = []
        n_docs = None
        with open(path, "r", encoding="utf-8") as handle:
            for line in handle:
                line = line.rstrip("\n")
                if not line:
                    continue
                if line.startswith("#"):
                    _, _, value = line.partition("\t")
                    n_docs = int(value)
                    continue
                term, column, freq = line.split("\t")
                if int(column) != len(terms):
                    raise DataError(f"{path}: vocabulary columns out of order")
                terms.append(term)
                freqs.append(int(freq))
        if n_docs is None:
            raise DataError(f"{path}: missing n_docs header")
        return cls(terms, np.array(freqs, dtype=np.int64), n_docs)


def build_vocabulary(
    corpus: Sequence[Sequence[str]], max_features: int = 20_000
) -> Vocabulary:
    """Index the top ``max_features`` terms by document frequency.

    Ranking is document frequency descending with lexicographic ascending
    tie-break, so the selection is deterministic.
    """
    if len(corpus) == 0:
        raise EmptyCorpus("cannot build a vocabulary over an empty corpus")
    df: Counter[str] = Counter()
    for doc in corpus:
        df.update(set(doc))
    ranked = sorted(df.items(), key=lambda item: (-item[1], item[0]))[:max_features]
    terms = [term for term, _ in ranked]
    freqs = np.array([freq for _, freq in ranked], dtype=np.int64)
    return Vocabulary(terms, freqs, len(corpus))


@dataclass(frozen=True)
class SparseRow:
    """Strictly increasing column ids paired with nonzero weights."""

    columns: np.ndarray
    weights: np.ndarray

    @property
    def nnz(self) -> int:
        return len(self.columns)

    def to_dense(self, width: int) -> np.ndarray:
        dense = np.zeros(width)
        dense[self.columns] = self.weights
        return dense


_EMPTY_COLS = np.array([], dtype=np.int64)
_EMPTY_VALS = np.array([], dtype=np.float64)


def empty_row() -> SparseRow:
    return SparseRow(_EMPTY_COLS, _EMPTY_VALS)


class FeatureMatrix:
    """Row-major sparse matrix in CSR form."""

    def __init__(
        self,
        indptr: np.ndarray,
        indices: np.ndarray,
        data: np.ndarray,
        width: int,
        kind: str,
    ):
        self.indptr = np.asarray(indptr, dtype=np.int64)
        self.indices = np.asarray(indices, dtype=np.int64)
        self.data = np.asarray(data, dtype=np.float64)
        self.width = int(width)
        self.kind = kind
        self._row_ids_cache: np.ndarray | None = None

    @classmethod
    def from_rows(cls, rows: Iterable[SparseRow], width: int, kind: str) -> "FeatureMatrix":
        indptr = [0]
        cols: list[np.ndarray] = []
        vals: list[np.ndarray] = []
        for row in rows:
            cols.append(row.columns)
            vals.append(row.weights)
            indptr.append(indptr[-1] + row.nnz)
        indices = np.concatenate(cols) if cols else _EMPTY_COLS
        data = np.concatenate(vals) if vals else _EMPTY_VALS
        return cls(np.array(indptr, dtype=np.int64), indices, data, width, kind)

    @property
    def n_rows(self) -> int:
        return len(self.indptr) - 1

    def row(self, i: int) -> SparseRow:
        start, stop = self.indptr[i], self.indptr[i + 1]
        return SparseRow(self.indices[start:stop], self.data[start:stop])

    def iter_rows(self) -> Iterable[SparseRow]:
        for i in range(self.n_rows):
            yield self.row(i)

    def _row_ids(self) -> np.ndarray:
        if self._row_ids_cache is None:
            self._row_ids_cache = np.repeat(
                np.arange(self.n_rows, dtype=np.int64), np.diff(self.indptr)
            )
        return self._row_ids_cache

    def matvec(self, w: np.ndarray) -> np.ndarray:
        """X @ w for a dense weight vector."""
        products = self.data * w[self.indices]
        return np.bincount(self._row_ids(), weights=products, minlength=self.n_rows)

    def rmatvec(self, v: np.ndarray) -> np.ndarray:
        """X.T @ v for a dense per-row vector."""
        products = self.data * v[self._row_ids()]
        return np.bincount(self.indices, weights=products, minlength=self.width)

    def row_norms_sq(self) -> np.ndarray:
        return np.bincount(
            self._row_ids(), weights=self.data * self.data, minlength=self.n_rows
        )

    def to_dense(self) -> np.ndarray:
        dense = np.zeros((self.n_rows, self.width))
        dense[self._row_ids(), self.indices] = self.data
        return dense

    def take(self, row_order: np.ndarray) -> "FeatureMatrix":
        """New matrix whose rows are self's rows in the given order."""
        row_order = np.asarray(row_order, dtype=np.int64)
        lengths = np.diff(self.indptr)[row_order]
        indptr = np.zeros(len(row_order) + 1, dtype=np.int64)
        np.cumsum(lengths, out=indptr[1:])
        gather = np.concatenate(
            [np.arange(self.indptr[i], self.indptr[i + 1]) for i in row_order]
        ) if len(row_order) else _EMPTY_COLS
        return FeatureMatrix(
            indptr, self.indices[gather], self.data[gather], self.width, self.kind
        )

    def vstack_rows(self, rows: Sequence[SparseRow]) -> "FeatureMatrix":
        """New matrix with the given rows appended after self's rows."""
        extra_lengths = np.array([row.nnz for row in rows], dtype=np.int64)
        indptr = np.concatenate(
            [self.indptr, self.indptr[-1] + np.cumsum(extra_lengths)]
        )
        indices = np.concatenate([self.indices] + [row.columns for row in rows])
        data = np.concatenate([self.data] + [row.weights for row in rows])
        return FeatureMatrix(indptr, indices, data, self.width, self.kind)


def bow_vectorize(doc: Sequence[str], vocab: Vocabulary) -> SparseRow:
    """Raw in-vocabulary term counts; out-of-vocabulary tokens are ignored."""
    counts: Counter[int] = Counter()
    for token in doc:
        column = vocab.index.get(token)
        if column is not None:
            counts[column] += 1
    if not counts:
        return empty_row()
    columns = np.array(sorted(counts), dtype=np.int64)
    weights = np.array([counts[c] for c in columns], dtype=np.float64)
    return SparseRow(columns, weights)


def term_frequency(doc: Sequence[str], term: str) -> float:
    """Relative frequency of ``term`` in ``doc``; 0 for an empty document."""
    if len(doc) == 0:
        return 0.0
    return sum(1 for token in doc if token == term) / len(doc)


def inverse_doc_frequency(vocab: Vocabulary, term: str) -> float:
    """ln(n_docs / doc_freq); no smoothing."""
    return math.log(vocab.n_docs / vocab.document_frequency(term))


def tfidf_vectorize(doc: Sequence[str], vocab: Vocabulary) -> SparseRow:
    """TF x IDF per in-vocabulary term, dropping exact zeros."""
    if len(doc) == 0:
        return empty_row()
    counts: Counter[str] = Counter(doc)
    length = len(doc)
    pairs = []
    for term, count in counts.items():
        column = vocab.index.get(term)
        if column is None:
            continue
        weight = (count / length) * math.log(vocab.n_docs / vocab.doc_freq[column])
        if weight != 0.0:
            pairs.append((column, weight))
    if not pairs:
        return empty_row()
    pairs.sort()
    columns = np.array([c for c, _ in pairs], dtype=np.int64)
    weights = np.array([w for _, w in pairs], dtype=np.float64)
    return SparseRow(columns, weights)


def vectorize_corpus(
    corpus: Sequence[Sequence[str]], vocab: Vocabulary, kind: str
) -> FeatureMatrix:
    if kind not in FEATURE_KINDS:
        raise ValueError(f"unknown feature kind {kind!r}")
    vectorize = bow_vectorize if kind == "bow" else tfidf_vectorize
    return FeatureMatrix.from_rows(
        (vectorize(doc, vocab) for doc in corpus), len(vocab), kind
    )
