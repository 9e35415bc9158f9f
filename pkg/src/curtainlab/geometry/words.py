"""Reduced words over an involutive alphabet: the combinatorial core of trees.

A (q+1)-regular tree is the Cayley graph of a free product. For even valence
2k we use the free group on k generators (letters a, A, b, B, ... where the
capital letter is the inverse); for odd valence we use the free product of
q+1 copies of Z/2 (letters s0, s1, ... each its own inverse). In both cases
vertices are reduced words: no letter is followed by its inverse letter.
"""

from __future__ import annotations

from dataclasses import dataclass

Word = tuple  # tuple of int letter codes

_FREE_NAMES = "abcdefghijklm"


@dataclass(frozen=True)
class Alphabet:
    """Letter set with involution; valence of the tree equals ``size``."""

    size: int
    inv: tuple
    names: tuple

    @staticmethod
    def regular(valence: int) -> "Alphabet":
        if valence < 3:
            raise ValueError("tree valence must be at least 3")
        if valence % 2 == 0:
            k = valence // 2
            names = []
            inv = []
            for i in range(k):
                names += [_FREE_NAMES[i], _FREE_NAMES[i].upper()]
                inv += [2 * i + 1, 2 * i]
            return Alphabet(valence, tuple(inv), tuple(names))
        names = tuple(f"s{i}" for i in range(valence))
        return Alphabet(valence, tuple(range(valence)), names)

    @property
    def involutive(self) -> bool:
        return self.inv == tuple(range(self.size))

    def parse(self, text: str) -> Word:
        """Parse a word like ``"abA"`` or ``"s0 s1"`` and reduce it."""
        if not text or text in ("e", "1"):
            return ()
        letters = []
        if self.involutive:
            for tok in text.replace(",", " ").split():
                if tok not in self.names:
                    raise ValueError(f"unknown letter {tok!r}")
                letters.append(self.names.index(tok))
        else:
            for ch in text:
                if ch.isspace():
                    continue
                if ch not in self.names:
                    raise ValueError(f"unknown letter {ch!r}")
                letters.append(self.names.index(ch))
        return self.reduce_concat((), tuple(letters))

    def format(self, word: Word) -> str:
        if not word:
            return "e"
        sep = " " if self.involutive else ""
        return sep.join(self.names[x] for x in word)

    def reduce_concat(self, left: Word, right: Word) -> Word:
        """Reduced form of the concatenation of two words (left assumed reduced)."""
        out = list(left)
        for x in right:
            if out and out[-1] == self.inv[x]:
                out.pop()
            else:
                out.append(x)
        return tuple(out)

    def inverse(self, word: Word) -> Word:
        return tuple(self.inv[x] for x in reversed(word))

    def is_reduced(self, word: Word) -> bool:
        return all(word[i + 1] != self.inv[word[i]] for i in range(len(word) - 1))

    def cyclic_reduce(self, word: Word):
        """Split ``word`` as p * core * p^-1 with core cyclically reduced.

        Returns (prefix p, core). The core is empty only for the empty word.
        """
        lo, hi = 0, len(word)
        while hi - lo >= 2 and word[hi - 1] == self.inv[word[lo]]:
            lo += 1
            hi -= 1
        return word[:lo], word[lo:hi]

    def extensions(self, last: int | None):
        """Letters that extend a reduced word ending in ``last``."""
        if last is None:
            return range(self.size)
        bad = self.inv[last]
        return [x for x in range(self.size) if x != bad]


def common_prefix_len(a: Word, b: Word) -> int:
    n = min(len(a), len(b))
    for i in range(n):
        if a[i] != b[i]:
            return i
    return n
