"""Text cleaning: normalization, spell correction, stopword removal, stemming.

The pipeline is normalize -> spell-correct -> drop stopwords -> stem. Spell
correction runs before stemming on purpose: stems are not dictionary words,
so correcting afterwards would mis-fire.
"""

from __future__ import annotations

import string
from functools import lru_cache
from importlib import resources
from pathlib import Path

from .stemmer import stem

# Every ASCII punctuation mark and digit becomes a space during normalization.
_STRIP_CHARS = string.punctuation + string.digits
_STRIP_TABLE = str.maketrans({ch: " " for ch in _STRIP_CHARS})

_ALPHABET = "abcdefghijklmnopqrstuvwxyz"

# Tokens shorter than this are never spell-corrected (slang, initialisms).
MIN_CORRECTION_LENGTH = 3


def normalize_and_tokenize(text: str) -> list[str]:
    """Lowercase, blank out punctuation/digits, split on whitespace."""
    return text.lower().translate(_STRIP_TABLE).split()


def _edits1(token: str) -> set[str]:
    """Single-edit variants: deletes, transposes, replaces, inserts."""
    splits = [(token[:i], token[i:]) for i in range(len(token) + 1)]
    deletes = {left + right[1:] for left, right in splits if right}
    transposes = {
        left + right[1] + right[0] + right[2:]
        for left, right in splits
        if len(right) > 1
    }
    replaces = {
        left + ch + right[1:] for left, right in splits if right for ch in _ALPHABET
    }
    inserts = {left + ch + right for left, right in splits for ch in _ALPHABET}
    return deletes | transposes | replaces | inserts


class SpellDictionary:
    """Word-frequency dictionary backing deterministic spell correction.

    Correction picks the highest-frequency known word within edit distance 1,
    falling back to distance 2, else leaves the token alone. Frequency ties
    break lexicographically.
    """

    def __init__(self, entries: dict[str, int]):
        for word, count in entries.items():
            if count < 1:
                raise ValueError(f"frequency for {word!r} must be >= 1")
        self.entries = dict(entries)
        self._cache: dict[str, str] = {}

    @classmethod
    def from_file(cls, path: str | Path) -> "SpellDictionary":
        """Load "word" or "word<TAB>count" lines; '#' lines are comments."""
        entries: dict[str, int] = {}
        with open(path, "r", encoding="utf-8") as handle:
            for line in handle:
                line = line.rstrip("\n")
                if not line or line.startswith("#"):
                    continue
                word, _, count = line.partition("\t")
                word = word.lower()
                entries[word] = max(entries.get(word, 0), int(count) if count else 1)
        return cls(entries)

    def __contains__(self, word: str) -> bool:
        return word in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def _best(self, candidates: set[str]) -> str | None:
        known = [w for w in candidates if w in self.entries]
        if not known:
            return None
        return min(known, key=lambda w: (-self.entries[w], w))

    def correct(self, token: str) -> str:
        if len(token) < MIN_CORRECTION_LENGTH or token in self.entries:
            return token
        cached = self._cache.get(token)
        if cached is not None:
            return cached
        one_away = _edits1(token)
        best = self._best(one_away)
        if best is None:
            two_away = set()
            for variant in one_away:
                two_away |= _edits1(variant)
            best = self._best(two_away)
        result = token if best is None else best
        self._cache[token] = result
        return result


def spell_correct(token: str, dictionary: SpellDictionary) -> str:
    return dictionary.correct(token)


def load_stopwords(path: str | Path) -> frozenset[str]:
    """One lowercase word per line; '#' lines are comments."""
    words = set()
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if line and not line.startswith("#"):
                words.add(line.lower())
    return frozenset(words)


def filter_stopwords(tokens: list[str], stops: frozenset[str]) -> list[str]:
    return [t for t in tokens if t not in stops]


def _data_path(name: str) -> Path:
    return Path(str(resources.files("toxiclass").joinpath("data", name)))


@lru_cache(maxsize=1)
def default_stopwords() -> frozenset[str]:
    return load_stopwords(_data_path("stopwords.txt"))


@lru_cache(maxsize=1)
def default_spell_dictionary() -> SpellDictionary:
    return SpellDictionary.from_file(_data_path("word_frequencies.txt"))


def preprocess(
    text: str,
    dictionary: SpellDictionary | None = None,
    stops: frozenset[str] | None = None,
) -> list[str]:
    """Full cleaning pipeline for one comment."""
    if dictionary is None:
        dictionary = default_spell_dictionary()
    if stops is None:
        stops = default_stopwords()
    tokens = normalize_and_tokenize(text)
    tokens = [dictionary.correct(t) for t in tokens]
    tokens = filter_stopwords(tokens, stops)
    return [stem(t) for t in tokens]


def preprocess_corpus(
    texts: list[str],
    dictionary: SpellDictionary | None = None,
    stops: frozenset[str] | None = None,
) -> list[list[str]]:
    if dictionary is None:
        dictionary = default_spell_dictionary()
    if stops is None:
        stops = default_stopwords()
    return [preprocess(text, dictionary, stops) for text in texts]
