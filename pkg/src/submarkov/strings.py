"""Word-level string algebra: dictionaries, sentences, contexts, insertion.

Sentences are tuples of word ids; the empty tuple is the empty sentence.
All orderings in the package derive from the canonical (length,
lexicographic-by-id) order on sentences, so every downstream artifact
(pair indices, component references, energy tables) is reproducible.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator

from .errors import ValidationError

Sentence = tuple[int, ...]
Context = tuple[Sentence, Sentence]

EPSILON: Sentence = ()


def sent_key(s: Sentence) -> tuple[int, Sentence]:
    """Sort key for the canonical (length, lexicographic) sentence order."""
    return (len(s), s)


@dataclass(frozen=True)
class Dictionary:
    """Ordered set of word tokens; the word id is the position in ``words``."""

    words: tuple[str, ...]

    def __post_init__(self):
        if not self.words:
            raise ValidationError("dictionary must not be empty")
        if len(set(self.words)) != len(self.words):
            raise ValidationError("dictionary contains duplicate tokens")
        for w in self.words:
            if not w or any(ch.isspace() for ch in w):
                raise ValidationError(f"invalid token {w!r}: empty or contains whitespace")
        object.__setattr__(self, "_index", {w: i for i, w in enumerate(self.words)})

    @classmethod
    def from_tokens(cls, tokens: Iterable[str]) -> "Dictionary":
        return cls(tuple(tokens))

    def __len__(self) -> int:
        return len(self.words)

    def id_of(self, token: str) -> int:
        try:
            return self._index[token]
        except KeyError:
            raise ValidationError(f"word {token!r} is not in the dictionary") from None

    def encode(self, text: str) -> Sentence:
        """Whitespace-tokenize ``text`` into a sentence of word ids."""
        return tuple(self.id_of(t) for t in text.split())

    def decode(self, s: Sentence) -> str:
        return " ".join(self.words[i] for i in s)

    def check_sentence(self, s: Sentence) -> Sentence:
        for i in s:
            if not (0 <= i < len(self.words)):
                raise ValidationError(f"word id {i} outside dictionary of size {len(self.words)}")
        return s


def insert(x: Context, y: Sentence) -> Sentence:
    """Insert the non-empty syntagm ``y`` into the two-sided context ``x``.

    The result is the word-level concatenation left + y + right.  Inserting
    the empty sentence is rejected: the operator acts on non-empty syntagms
    only, while either side of the context may be empty.
    """
    if not y:
        raise ValidationError("cannot insert the empty sentence")
    return x[0] + y + x[1]


def occurrences(s: Sentence, y: Sentence) -> list[Context]:
    """All contexts x with insert(x, y) == s, ordered by left length.

    Overlapping occurrences each yield their own context; the map from
    contexts to sentences is many-to-one, so this is the full preimage.
    """
    if not y:
        raise ValidationError("occurrences of the empty sentence are undefined")
    k = len(y)
    return [
        (s[:i], s[i + k :])
        for i in range(len(s) - k + 1)
        if s[i : i + k] == y
    ]


@dataclass(frozen=True)
class SubstitutePair:
    """Unordered substitute pair stored in its canonical orientation.

    ``y0`` precedes ``y1`` in the (length, lexicographic) order; substitute
    exponents are reported for the y0 -> y1 direction and negate on flip.
    """

    y0: Sentence
    y1: Sentence

    def key(self):
        return (sent_key(self.y0), sent_key(self.y1))

    def other(self, y: Sentence) -> Sentence:
        if y == self.y0:
            return self.y1
        if y == self.y1:
            return self.y0
        raise ValidationError("sentence is not a member of this pair")

    def member(self, sigma: int) -> Sentence:
        return self.y0 if sigma == 0 else self.y1


def make_pair(a: Sentence, b: Sentence) -> SubstitutePair:
    if not a or not b:
        raise ValidationError("substitute pair members must be non-empty")
    if a == b:
        raise ValidationError("substitute pair members must differ")
    if sent_key(a) <= sent_key(b):
        return SubstitutePair(a, b)
    return SubstitutePair(b, a)


@dataclass(frozen=True)
class PairFamily:
    """Duplicate-free list of substitute pairs in canonical order.

    Positions in ``pairs`` are the pair indices used everywhere else
    (edges, loop vectors, exponent tables).
    """

    pairs: tuple[SubstitutePair, ...]

    def __post_init__(self):
        keys = [p.key() for p in self.pairs]
        if sorted(set(keys)) != keys:
            raise ValidationError("pair family must be sorted and duplicate-free")

    @classmethod
    def from_pairs(cls, pairs: Iterable[SubstitutePair]) -> "PairFamily":
        return cls(tuple(sorted(set(pairs), key=SubstitutePair.key)))

    @classmethod
    def from_sets(cls, sets: Iterable[Iterable[Sentence]]) -> "PairFamily":
        """All unordered pairs of distinct members within each set.

        This is the pair reduction of a family of substitute sets: a set is
        a substitute set exactly when all its member pairs are, so the pair
        family generates the same model.
        """
        acc = []
        for group in sets:
            members = sorted(set(group), key=sent_key)
            for a, b in itertools.combinations(members, 2):
                acc.append(make_pair(a, b))
        return cls.from_pairs(acc)

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self) -> Iterator[SubstitutePair]:
        return iter(self.pairs)

    def __getitem__(self, i: int) -> SubstitutePair:
        return self.pairs[i]

    def index(self, pair: SubstitutePair) -> int:
        try:
            return self.pairs.index(pair)
        except ValueError:
            raise ValidationError("pair is not in the family") from None

    def find(self, a: Sentence, b: Sentence) -> tuple[int, int]:
        """Locate the unordered pair {a, b}; returns (index, sigma) where
        sigma is 0 if a == y0 (a -> b is the canonical direction), else 1."""
        p = make_pair(a, b)
        i = self.index(p)
        return i, 0 if a == p.y0 else 1

    def without(self, i: int) -> "PairFamily":
        return PairFamily(self.pairs[:i] + self.pairs[i + 1 :])
