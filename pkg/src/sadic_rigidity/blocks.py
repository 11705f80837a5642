"""Compositional statistics of huge words.

``BlockStats`` records factor counts up to a fixed order together with the
boundary letters needed to count factors straddling a concatenation point.
``PairStats`` records, for every lag ``h <= H``, how often a letter ``x`` is
followed ``h`` positions later by a letter ``y``.  Both form monoids under
concatenation, so statistics of ``σ(w)`` follow from statistics of the letter
images without writing the word out.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence, TypeVar

import numpy as np
from scipy.signal import fftconvolve

from .words import Alphabet, Word, factor_counts

S = TypeVar("S", "BlockStats", "PairStats")


def _tail(w: Word, n: int) -> Word:
    if n <= 0:
        return ()
    return w[-n:] if n < len(w) else w


@dataclass(frozen=True)
class BlockStats:
    """Factor counts of order ``k`` of a word that is never stored itself."""

    k: int
    length: int
    counts: Mapping[Word, int]
    prefix: Word
    suffix: Word

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("block order must be at least 1")

    @classmethod
    def empty(cls, k: int) -> BlockStats:
        return cls(k, 0, {}, (), ())

    @classmethod
    def from_word(cls, w: Sequence[str], k: int) -> BlockStats:
        w = tuple(w)
        b = min(k - 1, len(w))
        return cls(k, len(w), factor_counts(w, k), w[:b], _tail(w, b))

    @classmethod
    def letter(cls, c: str, k: int) -> BlockStats:
        return cls.from_word((c,), k)

    def empty_like(self) -> BlockStats:
        return BlockStats.empty(self.k)

    def count(self, u: Sequence[str]) -> int:
        u = tuple(u)
        if not 1 <= len(u) <= self.k:
            raise ValueError(f"stats of order {self.k} do not cover words of length {len(u)}")
        return self.counts.get(u, 0)

    def factors(self, j: int | None = None) -> set[Word]:
        return {u for u, c in self.counts.items() if c and (j is None or len(u) == j)}

    def letter_counts(self) -> dict[str, int]:
        return {u[0]: c for u, c in self.counts.items() if len(u) == 1}

    def concat(self, other: BlockStats) -> BlockStats:
        return block_concat(self, other)

    __add__ = concat


def straddles(left: Word, right: Word, k: int) -> dict[Word, int]:
    """Factors of ``left + right`` of length ``<= k`` that start in ``left`` and end in ``right``."""
    joined = left + right
    n = len(left)
    out: dict[Word, int] = {}
    for i in range(n):
        for end in range(n + 1, min(len(joined), i + k) + 1):
            f = joined[i:end]
            out[f] = out.get(f, 0) + 1
    return out


def block_concat(x: BlockStats, y: BlockStats) -> BlockStats:
    if x.k != y.k:
        raise ValueError(f"cannot concatenate stats of orders {x.k} and {y.k}")
    if x.length == 0:
        return y
    if y.length == 0:
        return x
    k = x.k
    counts = dict(x.counts)
    for u, c in y.counts.items():
        counts[u] = counts.get(u, 0) + c
    if k > 1:
        for u, c in straddles(x.suffix, y.prefix, k).items():
            counts[u] = counts.get(u, 0) + c
    b = k - 1
    prefix = x.prefix if x.length >= b else (x.prefix + y.prefix)[:b]
    suffix = y.suffix if y.length >= b else _tail(x.suffix + y.suffix, b)
    return BlockStats(k, x.length + y.length, counts, prefix, suffix)


@dataclass(frozen=True, eq=False)
class PairStats:
    """Lag counts ``lags[h-1, x, y] = #{p : w_p = x, w_{p+h} = y}`` for ``1 <= h <= H``."""

    H: int
    alphabet: Alphabet
    length: int
    lags: np.ndarray
    prefix: Word
    suffix: Word

    @classmethod
    def empty(cls, H: int, alphabet: Alphabet) -> PairStats:
        n = len(alphabet)
        return cls(H, alphabet, 0, np.zeros((H, n, n), dtype=object), (), ())

    @classmethod
    def from_word(cls, w: Sequence[str], H: int, alphabet: Alphabet) -> PairStats:
        w = alphabet.check(w)
        n = len(alphabet)
        idx = np.array([alphabet.index(s) for s in w], dtype=np.int64)
        lags = np.zeros((H, n, n), dtype=object)
        for h in range(1, min(H, len(w) - 1) + 1):
            m = np.zeros((n, n), dtype=np.int64)
            np.add.at(m, (idx[:-h], idx[h:]), 1)
            lags[h - 1] = m.astype(object)
        b = min(H, len(w))
        return cls(H, alphabet, len(w), lags, w[:b], _tail(w, b))

    @classmethod
    def letter(cls, c: str, H: int, alphabet: Alphabet) -> PairStats:
        return cls.from_word((c,), H, alphabet)

    def empty_like(self) -> PairStats:
        return PairStats.empty(self.H, self.alphabet)

    def lag(self, h: int, x: str, y: str) -> int:
        if not 1 <= h <= self.H:
            raise ValueError(f"lag {h} outside 1..{self.H}")
        return int(self.lags[h - 1, self.alphabet.index(x), self.alphabet.index(y)])

    def concat(self, other: PairStats) -> PairStats:
        return pair_concat(self, other)

    __add__ = concat

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PairStats):
            return NotImplemented
        return (self.H == other.H and self.alphabet == other.alphabet
                and self.length == other.length and self.prefix == other.prefix
                and self.suffix == other.suffix and bool((self.lags == other.lags).all()))


def _one_hot(w: Word, alphabet: Alphabet) -> np.ndarray:
    m = np.zeros((len(w), len(alphabet)))
    for i, s in enumerate(w):
        m[i, alphabet.index(s)] = 1.0
    return m


def cross_lags(left: Word, right: Word, H: int, alphabet: Alphabet) -> np.ndarray:
    """Lag counts of pairs with the first letter in ``left`` and the second in ``right``."""
    n = len(alphabet)
    out = np.zeros((H, n, n), dtype=object)
    if not left or not right:
        return out
    r = _one_hot(left[::-1], alphabet)
    t = _one_hot(right, alphabet)
    # pair (last-i letter of left, q-th letter of right) sits at lag i + q + 1
    if len(left) * len(right) <= 4096:
        conv = np.zeros((len(left) + len(right) - 1, n, n))
        for i in range(len(left)):
            conv[i : i + len(right)] += r[i][None, :, None] * t[:, None, :]
    else:
        conv = fftconvolve(r[:, :, None], t[:, None, :], axes=0)
    m = min(H, conv.shape[0])
    out[:m] = np.rint(conv[:m]).astype(np.int64).astype(object)
    return out


def pair_concat(x: PairStats, y: PairStats) -> PairStats:
    if x.H != y.H or x.alphabet != y.alphabet:
        raise ValueError("cannot concatenate pair stats with different lag ranges or alphabets")
    if x.length == 0:
        return y
    if y.length == 0:
        return x
    H = x.H
    lags = x.lags + y.lags + cross_lags(x.suffix, y.prefix, H, x.alphabet)
    prefix = x.prefix if x.length >= H else (x.prefix + y.prefix)[:H]
    suffix = y.suffix if y.length >= H else _tail(x.suffix + y.suffix, H)
    return PairStats(H, x.alphabet, x.length + y.length, lags, prefix, suffix)


def power(x: S, p: int) -> S:
    """``x`` concatenated with itself ``p`` times."""
    if p < 0:
        raise ValueError("negative power")
    out = x.empty_like()
    base = x
    while p:
        if p & 1:
            out = out.concat(base)
        p >>= 1
        if p:
            base = base.concat(base)
    return out


def runs(w: Iterable[str]) -> list[tuple[str, int]]:
    out: list[tuple[str, int]] = []
    for s in w:
        if out and out[-1][0] == s:
            out[-1] = (s, out[-1][1] + 1)
        else:
            out.append((s, 1))
    return out


def evaluate(word: Sequence[str], base: Mapping[str, S], empty: S | None = None) -> S:
    """Stats of the concatenation of ``base[c]`` over the letters ``c`` of ``word``."""
    out = empty if empty is not None else next(iter(base.values())).empty_like()
    for s, r in runs(word):
        out = out.concat(power(base[s], r) if r > 1 else base[s])
    return out


class PowerImages:
    """Stats of ``τ^m(x)`` and of ``τ^m(x)`` without its last letter, over a base map."""

    def __init__(self, images: Mapping[str, Word], base: Mapping[str, S]):
        self.images = {c: tuple(img) for c, img in images.items()}
        self.runs = {c: runs(img) for c, img in self.images.items()}
        self._full = [dict(base)]
        empty = next(iter(base.values())).empty_like()
        self._drop = [{c: empty for c in self.images}]

    def _step(self) -> None:
        full, drop = self._full[-1], self._drop[-1]
        new_full, new_drop = {}, {}
        for c, rl in self.runs.items():
            head = next(iter(full.values())).empty_like()
            for s, r in rl[:-1]:
                head = head.concat(power(full[s], r))
            s, r = rl[-1]
            if r > 1:
                head = head.concat(power(full[s], r - 1))
            new_full[c] = head.concat(full[s])
            new_drop[c] = head.concat(drop[s])
        self._full.append(new_full)
        self._drop.append(new_drop)

    def full(self, m: int) -> dict[str, S]:
        while len(self._full) <= m:
            self._step()
        return self._full[m]

    def drop_last(self, m: int) -> dict[str, S]:
        while len(self._drop) <= m:
            self._step()
        return self._drop[m]


def map_stats(images: Mapping[str, Sequence[str]], base: Mapping[str, S]) -> dict[str, S]:
    return {c: evaluate(img, base) for c, img in images.items()}


StatsFactory = Callable[[str], S]
