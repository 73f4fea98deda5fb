"""Dataset ingestion: CSV parsing, binary relabeling, majority-class capping.

The input schema is the Jigsaw toxic-comment CSV: a header row naming
``comment_text`` plus six binary flag columns. Relabeling collapses the
multi-label scheme to two classes: a record with ``toxic=1`` is Toxic, a
record with all six flags zero is NonToxic, and a record flagged only with
non-``toxic`` categories is dropped.
"""

from __future__ import annotations

import csv
import enum
import io
import logging
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Iterator

import numpy as np

from .errors import MalformedCsv, MissingColumn, NonBinaryLabel

log = logging.getLogger(__name__)

FLAG_COLUMNS = (
    "toxic",
    "severe_toxic",
    "obscene",
    "threat",
    "insult",
    "identity_hate",
)
REQUIRED_COLUMNS = ("comment_text",) + FLAG_COLUMNS


class Label(enum.Enum):
    TOXIC = "toxic"
    NONTOXIC = "non-toxic"

    def to_int(self) -> int:
        return 1 if self is Label.TOXIC else 0

    @staticmethod
    def from_int(value: int) -> "Label":
        return Label.TOXIC if value else Label.NONTOXIC


@dataclass(frozen=True)
class RawRecord:
    id: str
    comment_text: str
    toxic: int
    severe_toxic: int
    obscene: int
    threat: int
    insult: int
    identity_hate: int

    def flags(self) -> tuple[int, ...]:
        return (
            self.toxic,
            self.severe_toxic,
            self.obscene,
            self.threat,
            self.insult,
            self.identity_hate,
        )


@dataclass(frozen=True)
class LabeledComment:
    text: str
    label: Label


@dataclass
class LabeledCorpus:
    """Ordered comments plus per-class totals (always a recount)."""

    comments: list[LabeledComment]

    @property
    def counts(self) -> dict[Label, int]:
        tally = Counter(c.label for c in self.comments)
        return {Label.TOXIC: tally[Label.TOXIC], Label.NONTOXIC: tally[Label.NONTOXIC]}

    def __len__(self) -> int:
        return len(self.comments)

    def labels_as_ints(self) -> np.ndarray:
        return np.array([c.label.to_int() for c in self.comments], dtype=np.int64)

    def texts(self) -> list[str]:
        return [c.text for c in self.comments]


def _parse_flag(raw: str, column: str, row_number: int) -> int:
    """Accept 0/1 in integer or float spelling ("0", "1", "0.0", "1.0")."""
    try:
        value = float(raw)
    except ValueError:
        raise NonBinaryLabel(
            f"row {row_number}: column {column!r} has non-numeric value {raw!r}"
        ) from None
    if value == 0.0:
        return 0
    if value == 1.0:
        return 1
    raise NonBinaryLabel(f"row {row_number}: column {column!r} has value {raw!r}, expected 0 or 1")


def parse_dataset(csv_source: str | Path | IO[bytes] | IO[str]) -> Iterator[RawRecord]:
    """Stream RawRecords from a Jigsaw-schema CSV.

    ``csv_source`` may be a path or an open text/binary stream. Standard CSV
    quoting (embedded commas, newlines, doubled quotes) is handled. Columns
    beyond the required set are ignored; unknown label-like columns trigger a
    single warning.
    """
    if isinstance(csv_source, (str, Path)):
        with open(csv_source, "r", encoding="utf-8", newline="") as handle:
            yield from _parse_stream(handle)
    elif isinstance(csv_source, io.TextIOBase):
        yield from _parse_stream(csv_source)
    else:
        yield from _parse_stream(io.TextIOWrapper(csv_source, encoding="utf-8", newline=""))


def _parse_stream(handle: IO[str]) -> Iterator[RawRecord]:
    reader = csv.reader(handle)
    try:
        header = next(reader, None)
    except csv.Error as exc:
        raise MalformedCsv(f"header: {exc}") from exc
    if header is None:
        raise MissingColumn("empty input: no header row")

    positions = {name: i for i, name in enumerate(header)}
    for column in REQUIRED_COLUMNS:
        if column not in positions:
            raise MissingColumn(f"required column {column!r} absent from header")
    extra = [name for name in header if name not in REQUIRED_COLUMNS and name != "id"]
    if extra:
        log.warning("ignoring unrecognized columns: %s", ", ".join(extra))

    id_pos = positions.get("id")
    width = len(header)
    row_number = 1
    while True:
        try:
            row = next(reader, None)
        except csv.Error as exc:
            raise MalformedCsv(f"row {row_number + 1}: {exc}") from exc
        if row is None:
            return
        row_number += 1
        if len(row) != width:
            raise MalformedCsv(
                f"row {row_number}: expected {width} fields, found {len(row)}"
            )
        if id_pos is not None:
            record_id = row[id_pos]
            if not record_id:
                raise MalformedCsv(f"row {row_number}: empty id")
        else:
            record_id = f"row-{row_number}"
        flags = [
            _parse_flag(row[positions[column]], column, row_number)
            for column in FLAG_COLUMNS
        ]
        yield RawRecord(record_id, row[positions["comment_text"]], *flags)


def relabel_binary(records: Iterable[RawRecord]) -> LabeledCorpus:
    """Collapse the six flags to {Toxic, NonToxic}.

    toxic=1 wins regardless of the other flags; all-zero rows are NonToxic;
    rows flagged only with non-toxic categories are dropped. Input order is
    preserved.
    """
    comments = []
    for record in records:
        if record.toxic == 1:
            comments.append(LabeledComment(record.comment_text, Label.TOXIC))
        elif not any(record.flags()):
            comments.append(LabeledComment(record.comment_text, Label.NONTOXIC))
    return LabeledCorpus(comments)


def select_without_replacement(n: int, k: int, rng: np.random.Generator) -> np.ndarray:
    """Fisher-Yates selection of k distinct indices out of range(n)."""
    return rng.permutation(n)[:k]


def cap_majority(corpus: LabeledCorpus, cap: int, seed: int) -> LabeledCorpus:
    """Subsample the majority class down to ``cap`` comments.

    The minority class is untouched; surviving comments keep their original
    relative order. A fixed seed makes the selection reproducible.
    """
    if cap <= 0:
        raise ValueError("cap must be positive")
    counts = corpus.counts
    majority = max(counts, key=lambda label: (counts[label], label is Label.NONTOXIC))
    if counts[majority] <= cap:
        return LabeledCorpus(list(corpus.comments))

    majority_positions = [
        i for i, c in enumerate(corpus.comments) if c.label is majority
    ]
    rng = np.random.default_rng(seed)
    chosen = select_without_replacement(len(majority_positions), cap, rng)
    keep = {majority_positions[i] for i in chosen}
    comments = [
        c
        for i, c in enumerate(corpus.comments)
        if c.label is not majority or i in keep
    ]
    return LabeledCorpus(comments)


def ingest(
    csv_source: str | Path | IO[bytes] | IO[str],
    non_toxic_cap: int = 70_000,
    seed: int = 42,
) -> LabeledCorpus:
    """parse -> relabel -> cap, the full ingest path."""
    return cap_majority(relabel_binary(parse_dataset(csv_source)), non_toxic_cap, seed)


_ESCAPES = {"\\": "\\\\", "\t": "\\t", "\n": "\\n", "\r": "\\r"}
_UNESCAPES = {"\\\\": "\\", "\\t": "\t", "\\n": "\n", "\\r": "\r"}


def _escape(text: str) -> str:
    for raw, esc in _ESCAPES.items():
        text = text.replace(raw, esc)
    return text


def _unescape(text: str) -> str:
    out = []
    i = 0
    while i < len(text):
        if text[i] == "\\" and i + 1 < len(text):
            out.append(_UNESCAPES.get(text[i : i + 2], text[i + 1]))
            i += 2
        else:
            out.append(text[i])
            i += 1
    return "".join(out)


def write_corpus_tsv(corpus: LabeledCorpus, path: str | Path) -> None:
    """Cache format between CLI stages: one "label<TAB>text" line per comment."""
    with open(path, "w", encoding="utf-8") as handle:
        for comment in corpus.comments:
            handle.write(f"{comment.label.value}\t{_escape(comment.text)}\n")


def read_corpus_tsv(path: str | Path) -> LabeledCorpus:
    comments = []
    with open(path, "r", encoding="utf-8") as handle:
        for line_number, line in enumerate(handle, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            try:
                label_text, text = line.split("\t", 1)
                label = Label(label_text)
            except ValueError as exc:
                raise MalformedCsv(f"{path}:{line_number}: bad corpus cache line") from exc
            comments.append(LabeledComment(_unescape(text), label))
    return LabeledCorpus(comments)
