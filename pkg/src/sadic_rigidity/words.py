"""Alphabets, finite words and occurrence counting.

Words are plain tuples of symbol strings.  Symbols are atoms: ``"a"``,
``"b"`` for the two-letter alphabet, ``"a_0"``, ``"b_1"`` for glued
alphabets and ``"a'_1"`` for their primed copies.  Every function that
needs to know the alphabet takes it explicitly and rejects foreign symbols.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Iterable, Sequence

Word = tuple[str, ...]

EMPTY: Word = ()


class AlphabetError(ValueError):
    """A symbol or word does not belong to the alphabet it was used with."""


@dataclass(frozen=True)
class Alphabet:
    """Ordered finite set of symbols, optionally carrying glued pair structure.

    ``d`` is the number of pairs ``A_i = {a_i, b_i}`` when the alphabet is a
    glued alphabet; ``primed`` adds the copies ``a'_i, b'_i``.  Symbol order is
    definition order and is used to sort every set of words the package emits.
    """

    symbols: tuple[str, ...]
    d: int | None = None
    primed: bool = False
    _index: dict[str, int] = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self) -> None:
        if len(set(self.symbols)) != len(self.symbols):
            raise AlphabetError(f"repeated symbols in {self.symbols}")
        if not self.symbols:
            raise AlphabetError("an alphabet needs at least one symbol")
        if self.d is not None:
            expected = 4 * self.d if self.primed else 2 * self.d
            if len(self.symbols) != expected:
                raise AlphabetError(
                    f"glued alphabet with d={self.d} needs {expected} symbols"
                )
            for sym in self.symbols:
                _parse_glued(sym)
        object.__setattr__(self, "_index", {s: i for i, s in enumerate(self.symbols)})

    def __len__(self) -> int:
        return len(self.symbols)

    def __iter__(self):
        return iter(self.symbols)

    def __contains__(self, symbol: object) -> bool:
        return symbol in self._index

    def index(self, symbol: str) -> int:
        try:
            return self._index[symbol]
        except KeyError:
            raise AlphabetError(f"symbol {symbol!r} not in alphabet {self.symbols}") from None

    def check(self, word: Iterable[str]) -> Word:
        w = tuple(word)
        for s in w:
            if s not in self._index:
                raise AlphabetError(f"symbol {s!r} not in alphabet {self.symbols}")
        return w

    def sort_key(self, word: Word) -> tuple:
        """Length first, then lexicographic in definition order."""
        return (len(word), tuple(self._index[s] for s in word))

    def sorted(self, words: Iterable[Word]) -> list[Word]:
        return sorted(words, key=self.sort_key)

    def complement_map(self) -> dict[str, str] | None:
        """The letter swap ``a <-> b`` (within each pair for glued alphabets)."""
        if self.d is None:
            if len(self.symbols) != 2:
                return None
            x, y = self.symbols
            return {x: y, y: x}
        out = {}
        for s in self.symbols:
            role, i, primed = _parse_glued(s)
            out[s] = glued_symbol("b" if role == "a" else "a", i, primed)
        return out

    def pair(self, i: int) -> tuple[str, str]:
        if self.d is None:
            raise AlphabetError("pairs only exist in glued alphabets")
        i %= self.d
        return glued_symbol("a", i), glued_symbol("b", i)

    def primed_pair(self, i: int) -> tuple[str, str]:
        if self.d is None or not self.primed:
            raise AlphabetError("primed pairs only exist in primed glued alphabets")
        i %= self.d
        return glued_symbol("a", i, True), glued_symbol("b", i, True)


def glued_symbol(role: str, i: int, primed: bool = False) -> str:
    return f"{role}'_{i}" if primed else f"{role}_{i}"


def _parse_glued(symbol: str) -> tuple[str, int, bool]:
    role, sep, idx = symbol.partition("_")
    primed = role.endswith("'")
    role = role.rstrip("'")
    if not sep or role not in ("a", "b") or not idx.isdigit():
        raise AlphabetError(f"{symbol!r} is not a glued symbol like a_0 or b'_1")
    return role, int(idx), primed


def parse_glued_symbol(symbol: str) -> tuple[str, int, bool]:
    """Split ``"a'_3"`` into ``("a", 3, True)``."""
    return _parse_glued(symbol)


def glued_alphabet(d: int, primed: bool = False) -> Alphabet:
    """``Λ_d`` (or ``Λ'_d`` when ``primed``), ordered a_0, b_0, a_1, b_1, ..."""
    if d < 1:
        raise AlphabetError("d must be a positive integer")
    syms = [glued_symbol(r, i) for i in range(d) for r in ("a", "b")]
    if primed:
        syms += [glued_symbol(r, i, True) for i in range(d) for r in ("a", "b")]
    return Alphabet(tuple(syms), d=d, primed=primed)


def pair_alphabet(i: int) -> Alphabet:
    """The two-letter alphabet ``A_i = {a_i, b_i}``."""
    return Alphabet((glued_symbol("a", i), glued_symbol("b", i)))


AB = Alphabet(("a", "b"))


def parse_word(text: str, alphabet: Alphabet | None = None) -> Word:
    """Parse ``"abab"`` or dotted multi-character tokens ``"a_0.b_0"``."""
    text = text.strip()
    if not text or text in ("ε", "eps"):
        return EMPTY
    w = tuple(text.split(".")) if "." in text or "_" in text else tuple(text)
    return alphabet.check(w) if alphabet is not None else w


def format_word(word: Sequence[str]) -> str:
    if not word:
        return "ε"
    if all(len(s) == 1 for s in word):
        return "".join(word)
    return ".".join(word)


def count_occurrences(w: Sequence[str], u: Sequence[str]) -> int:
    """Number of (possibly overlapping) occurrences of ``u`` in ``w``."""
    m = len(u)
    if m == 0:
        raise ValueError("cannot count occurrences of the empty word")
    u = tuple(u)
    w = tuple(w)
    return sum(1 for i in range(len(w) - m + 1) if w[i : i + m] == u)


def frequency(u: Sequence[str], w: Sequence[str]) -> Fraction:
    if len(w) == 0:
        raise ValueError("frequency in the empty word is undefined")
    return Fraction(count_occurrences(w, u), len(w))


def factor_counts(w: Sequence[str], k: int) -> dict[Word, int]:
    """Occurrence counts of every factor of ``w`` of length ``1..k``."""
    w = tuple(w)
    out: dict[Word, int] = {}
    n = len(w)
    for i in range(n):
        for j in range(i + 1, min(n, i + k) + 1):
            f = w[i:j]
            out[f] = out.get(f, 0) + 1
    return out


def all_words(alphabet: Alphabet, k: int) -> list[Word]:
    return [tuple(p) for p in product(alphabet.symbols, repeat=k)]


def complete_words(alphabet: Alphabet, k: int) -> list[Word]:
    """Length-``k`` words whose first and last letters coincide."""
    if k < 2:
        raise ValueError("complete words have length at least 2")
    return [w for w in all_words(alphabet, k) if w[0] == w[-1]]


def cross_complete_words(alphabet: Alphabet, k: int) -> list[Word]:
    """Length-``k`` words over a two-letter alphabet with ``w_1`` the complement of ``w_k``."""
    if len(alphabet) != 2:
        raise ValueError("cross-complete words need a two-letter alphabet")
    if k < 2:
        raise ValueError("cross-complete words have length at least 2")
    bar = alphabet.complement_map()
    return [w for w in all_words(alphabet, k) if w[0] == bar[w[-1]]]


def complement(w: Sequence[str], alphabet: Alphabet) -> Word:
    """Letterwise swap ``a <-> b``; needs a two-letter alphabet."""
    if len(alphabet) != 2:
        raise ValueError("complement needs a two-letter alphabet")
    bar = alphabet.complement_map()
    return tuple(bar[s] for s in alphabet.check(w))
