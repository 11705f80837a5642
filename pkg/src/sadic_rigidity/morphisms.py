"""Morphisms of free monoids, glued substitutions and the ζ_L family."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .blocks import map_stats
from .words import (
    AB,
    Alphabet,
    AlphabetError,
    Word,
    count_occurrences,
    format_word,
    glued_alphabet,
    glued_symbol,
    pair_alphabet,
    parse_glued_symbol,
    parse_word,
)

MATERIALIZE_LIMIT = 10**7


class MorphismError(ValueError):
    pass


class MaterializationError(RuntimeError):
    """A literal word was requested whose length exceeds the materialization limit."""


@dataclass(frozen=True)
class Morphism:
    """Non-erasing morphism ``source* -> target*`` given by letter images."""

    source: Alphabet
    target: Alphabet
    images: tuple[Word, ...]

    def __post_init__(self) -> None:
        if len(self.images) != len(self.source):
            raise MorphismError("one image per source letter is required")
        for s, img in zip(self.source, self.images):
            if not img:
                raise MorphismError(f"image of {s!r} is empty (erasing morphisms are not allowed)")
            self.target.check(img)

    @classmethod
    def from_dict(
        cls, images: Mapping[str, Sequence[str]], source: Alphabet | None = None,
        target: Alphabet | None = None,
    ) -> Morphism:
        if source is None:
            source = Alphabet(tuple(images))
        if target is None:
            target = source
        missing = [s for s in source if s not in images]
        if missing:
            raise MorphismError(f"no image given for {missing}")
        extra = [s for s in images if s not in source]
        if extra:
            raise MorphismError(f"images given for symbols outside the source: {extra}")
        return cls(source, target, tuple(tuple(images[s]) for s in source))

    def __getitem__(self, letter: str) -> Word:
        return self.images[self.source.index(letter)]

    def __call__(self, word: Iterable[str]) -> Word:
        return apply(self, word)

    def items(self):
        return zip(self.source.symbols, self.images)

    @property
    def is_endomorphism(self) -> bool:
        return self.source == self.target

    @property
    def constant_length(self) -> int | None:
        lengths = {len(img) for img in self.images}
        return lengths.pop() if len(lengths) == 1 else None

    def __len__(self) -> int:
        ell = self.constant_length
        if ell is None:
            raise MorphismError("morphism does not have constant length")
        return ell

    def power(self, p: int) -> Morphism:
        if not self.is_endomorphism:
            raise MorphismError("only endomorphisms can be iterated")
        if p < 0:
            raise MorphismError("negative powers are undefined")
        out = identity(self.source)
        base = self
        while p:
            if p & 1:
                out = compose(out, base)
            p >>= 1
            if p:
                base = compose(base, base)
        return out

    def to_literal(self) -> str:
        return "\n".join(f"{s} -> {format_word(img)}" for s, img in self.items())

    def __str__(self) -> str:
        return "; ".join(f"{s} -> {format_word(img)}" for s, img in self.items())


def identity(alphabet: Alphabet) -> Morphism:
    return Morphism(alphabet, alphabet, tuple((s,) for s in alphabet))


def parse_morphism(text: str, source: Alphabet | None = None, target: Alphabet | None = None) -> Morphism:
    """Parse the ``letter -> image`` literal format, one rule per line (or ``;``)."""
    images: dict[str, Word] = {}
    rules = [r for line in text.replace(";", "\n").splitlines() if (r := line.strip())]
    for lineno, rule in enumerate(rules, 1):
        if "->" not in rule:
            raise MorphismError(f"rule {lineno}: expected 'letter -> image', got {rule!r}")
        lhs, rhs = (part.strip() for part in rule.split("->", 1))
        if lhs in images:
            raise MorphismError(f"rule {lineno}: letter {lhs!r} defined twice")
        images[lhs] = parse_word(rhs)
    if source is None:
        syms = tuple(images)
        source = _infer_alphabet(syms)
    if target is None:
        target = source
        letters = {s for img in images.values() for s in img}
        if not letters <= set(source.symbols):
            target = _infer_alphabet(tuple(dict.fromkeys(s for img in images.values() for s in img)))
    return Morphism.from_dict(images, source, target)


def _infer_alphabet(symbols: tuple[str, ...]) -> Alphabet:
    try:
        parsed = [parse_glued_symbol(s) for s in symbols]
    except AlphabetError:
        return Alphabet(symbols)
    idx = {i for _, i, _ in parsed}
    primed = any(p for _, _, p in parsed)
    d = max(idx) + 1
    full = glued_alphabet(d, primed)
    if set(symbols) == set(full.symbols):
        return full
    if len(idx) == 1 and not primed and len(symbols) == 2:
        return pair_alphabet(idx.pop())
    return Alphabet(symbols)


def apply(sigma: Morphism, word: Iterable[str]) -> Word:
    out: list[str] = []
    for s in sigma.source.check(word):
        out.extend(sigma[s])
    return tuple(out)


def compose(tau: Morphism, sigma: Morphism) -> Morphism:
    """``tau ∘ sigma``: first ``sigma``, then ``tau``."""
    if sigma.target != tau.source:
        raise MorphismError("cannot compose: target of sigma is not the source of tau")
    return Morphism(sigma.source, tau.target, tuple(apply(tau, img) for img in sigma.images))


@dataclass(frozen=True)
class CompositionMatrix:
    """``M[b, a] = |σ(a)|_b``; rows are target letters, columns source letters."""

    rows: Alphabet
    cols: Alphabet
    array: np.ndarray

    def __getitem__(self, key: tuple[str, str]) -> int:
        b, a = key
        return self.array[self.rows.index(b), self.cols.index(a)]

    def __matmul__(self, other: CompositionMatrix) -> CompositionMatrix:
        if self.cols != other.rows:
            raise MorphismError("matrix shapes do not chain")
        return CompositionMatrix(self.rows, other.cols, self.array.dot(other.array))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CompositionMatrix):
            return NotImplemented
        return (self.rows == other.rows and self.cols == other.cols
                and bool((self.array == other.array).all()))

    def tolist(self) -> list[list[int]]:
        return [[int(x) for x in row] for row in self.array]


def composition_matrix(sigma: Morphism) -> CompositionMatrix:
    m = np.zeros((len(sigma.target), len(sigma.source)), dtype=object)
    for j, img in enumerate(sigma.images):
        for s in img:
            m[sigma.target.index(s), j] += 1
    return CompositionMatrix(sigma.target, sigma.source, m)


def is_positive(sigma: Morphism) -> bool:
    return bool((composition_matrix(sigma).array > 0).all())


def is_primitive(sigma: Morphism) -> bool:
    """Some power ``M^p`` with ``p <= (|A|-1)^2 + 1`` is entrywise positive."""
    if not sigma.is_endomorphism:
        raise MorphismError("primitivity is defined for endomorphisms only")
    m = (composition_matrix(sigma).array > 0).astype(np.int64)
    n = m.shape[0]
    p = m.copy()
    for _ in range((n - 1) ** 2 + 1):
        if (p > 0).all():
            return True
        p = ((p @ m) > 0).astype(np.int64)
    return False


def is_prolongable(sigma: Morphism) -> bool:
    """Every image starts and ends with its own letter."""
    if not sigma.is_endomorphism:
        raise MorphismError("prolongability is defined for endomorphisms only")
    return all(img[0] == s and img[-1] == s for s, img in sigma.items())


def is_left_permutative(sigma: Morphism) -> bool:
    firsts = [img[0] for img in sigma.images]
    return len(set(firsts)) == len(firsts)


def is_mirror(sigma: Morphism) -> bool | None:
    """``σ(w̄) = σ(w)̄``; ``None`` when no complement exists on the alphabets."""
    bar_s = sigma.source.complement_map()
    bar_t = sigma.target.complement_map()
    if bar_s is None or bar_t is None:
        return None
    return all(sigma[bar_s[s]] == tuple(bar_t[x] for x in img) for s, img in sigma.items())


@dataclass(frozen=True)
class Predicates:
    constant_length: bool
    left_permutative: bool
    positive: bool
    primitive: bool | None
    prolongable: bool | None
    mirror: bool | None


def predicates(sigma: Morphism) -> Predicates:
    endo = sigma.is_endomorphism
    return Predicates(
        constant_length=sigma.constant_length is not None,
        left_permutative=is_left_permutative(sigma),
        positive=is_positive(sigma),
        primitive=is_primitive(sigma) if endo else None,
        prolongable=is_prolongable(sigma) if endo else None,
        mirror=is_mirror(sigma),
    )


def essential_occurrences(sigma: Morphism, w: Sequence[str], u: Sequence[str]) -> int:
    """Occurrences of ``u`` in ``σ(w)`` starting in ``σ(w_1)`` and ending in ``σ(w_{|w|})``."""
    w = sigma.source.check(w)
    u = tuple(u)
    if not w or not u:
        raise ValueError("essential occurrences need nonempty w and u")
    image = apply(sigma, w)
    if len(w) == 1:
        return count_occurrences(image, u)
    first = len(sigma[w[0]])
    last_start = len(image) - len(sigma[w[-1]])
    m = len(u)
    return sum(
        1
        for i in range(min(first, len(image) - m + 1))
        if i + m - 1 >= last_start and image[i : i + m] == u
    )


def kappa(w: Sequence[str], alphabet: Alphabet) -> Word:
    """Shift the pair index of the last letter by one, modulo ``d``."""
    w = alphabet.check(w)
    if alphabet.d is None:
        raise AlphabetError("κ acts on glued alphabets only")
    if not w:
        raise ValueError("κ is undefined on the empty word")
    role, i, primed = parse_glued_symbol(w[-1])
    if primed:
        raise ValueError("κ is undefined when the last letter is primed")
    return w[:-1] + (glued_symbol(role, (i + 1) % alphabet.d),)


def kappa_letter(letter: str, d: int) -> str:
    role, i, primed = parse_glued_symbol(letter)
    if primed:
        raise ValueError("κ is undefined on primed letters")
    return glued_symbol(role, (i + 1) % d)


def on_pair(tau: Morphism, i: int) -> Morphism:
    """Rename a substitution on ``{a, b}`` to act on ``A_i = {a_i, b_i}``."""
    if tau.source == pair_alphabet(i):
        return tau
    if tau.source != AB or not tau.is_endomorphism:
        raise MorphismError("on_pair expects an endomorphism of {a, b}")
    ren = {"a": glued_symbol("a", i), "b": glued_symbol("b", i)}
    alpha = pair_alphabet(i)
    return Morphism(alpha, alpha, tuple(tuple(ren[s] for s in img) for img in tau.images))


def glue(taus: Sequence[Morphism]) -> Morphism:
    """The glued substitution ``Γ(τ_0, ..., τ_{d-1})`` on ``Λ_d``."""
    d = len(taus)
    if d < 1:
        raise MorphismError("glue needs at least one substitution")
    lam = glued_alphabet(d)
    images: dict[str, Word] = {}
    for i, tau in enumerate(taus):
        alpha = pair_alphabet(i)
        if tau.source != alpha or tau.target != alpha:
            raise MorphismError(f"component {i} must be an endomorphism of {alpha.symbols}")
        for s, img in tau.items():
            images[s] = kappa(img, lam)
    return Morphism.from_dict(images, lam, lam)


def zeta(L: int, long: bool = False) -> Morphism:
    """``a -> a^{L-1} b, b -> b^{L-1} a`` (length ``L``); ``long=True`` gives ``a^L b``."""
    if L < 2:
        raise MorphismError("ζ_L needs L >= 2")
    r = L if long else L - 1
    return Morphism(AB, AB, (("a",) * r + ("b",), ("b",) * r + ("a",)))


def thue_morse() -> Morphism:
    return zeta(2)


def length4_taus() -> tuple[Morphism, Morphism]:
    """The two length-4 substitutions of the worked gluing example."""
    t0 = parse_morphism("a_0 -> a_0.b_0.b_0.a_0\nb_0 -> b_0.a_0.a_0.b_0", pair_alphabet(0))
    t1 = parse_morphism("a_1 -> a_1.b_1.b_1.b_1\nb_1 -> b_1.a_1.a_1.a_1", pair_alphabet(1))
    return t0, t1


def materialize(chain: Sequence[Morphism], letter: str, limit: int = MATERIALIZE_LIMIT) -> Word:
    """The literal word ``σ_1 ∘ ... ∘ σ_m(letter)``; refuses words longer than ``limit``."""
    _check_chain(chain)
    size = _chain_length(chain, letter)
    if size > limit:
        raise MaterializationError(f"word of length {size} exceeds the limit {limit}")
    w: Word = (letter,)
    for sigma in reversed(chain):
        w = apply(sigma, w)
    return w


def _chain_length(chain: Sequence[Morphism], letter: str) -> int:
    # letter lengths propagate bottom-up: |σ_1...σ_j(x)|
    lens = {s: 1 for s in (chain[0].target if chain else [letter])}
    for sigma in chain:
        lens = {s: sum(lens[x] for x in img) for s, img in sigma.items()}
    return lens[letter]


def _check_chain(chain: Sequence[Morphism]) -> None:
    for upper, lower in zip(chain[1:], chain[:-1]):
        if upper.target != lower.source:
            raise MorphismError("chain is not composable")


def image_stats(sigma, base: Mapping[str, object]) -> dict:
    """Stats of every letter image of ``sigma`` over stats ``base`` of the target letters."""
    if isinstance(sigma, Morphism):
        return map_stats(dict(sigma.items()), base)
    return sigma.image_stats(base)


def level_length(sigma) -> int:
    if isinstance(sigma, Morphism):
        return len(sigma)
    return sigma.length


class GluedPower:
    """``Γ(τ_0^{e_0}, ..., τ_{d-1}^{e_{d-1}})`` kept symbolic; images are built only on request."""

    def __init__(self, taus: Sequence[Morphism], exponents: Sequence[int]):
        if len(taus) != len(exponents) or not taus:
            raise MorphismError("one exponent per component is required")
        self.d = len(taus)
        self.taus = tuple(on_pair(t, i) if t.source == AB else t for i, t in enumerate(taus))
        self.exponents = tuple(int(e) for e in exponents)
        for i, (t, e) in enumerate(zip(self.taus, self.exponents)):
            if t.source != pair_alphabet(i) or not t.is_endomorphism:
                raise MorphismError(f"component {i} must be an endomorphism of A_{i}")
            if t.constant_length is None:
                raise MorphismError(f"component {i} is not of constant length")
            if e < 1:
                raise MorphismError("exponents must be positive")
        lengths = {len(t) ** e for t, e in zip(self.taus, self.exponents)}
        if len(lengths) != 1:
            raise MorphismError(f"component lengths differ: {sorted(lengths)}")
        self.length = lengths.pop()
        self.source = self.target = glued_alphabet(self.d)

    def __len__(self) -> int:
        return self.length

    @property
    def constant_length(self) -> int:
        return self.length

    def __eq__(self, other: object) -> bool:
        if isinstance(other, GluedPower):
            return self.taus == other.taus and self.exponents == other.exponents
        return NotImplemented

    def __hash__(self) -> int:
        return hash((self.taus, self.exponents))

    def __repr__(self) -> str:
        parts = ", ".join(f"τ_{i}^{e}" for i, e in enumerate(self.exponents))
        return f"GluedPower(Γ({parts}), length={self.length})"

    def last_letter(self, c: str) -> str:
        """Last letter of ``τ_i^{e_i}(c)`` before κ is applied."""
        i = parse_glued_symbol(c)[1]
        tau, e = self.taus[i], self.exponents[i]
        for _ in range(e):
            c = tau[c][-1]
        return c

    def image_stats(self, base: Mapping[str, object]) -> dict:
        from .blocks import PowerImages

        out = {}
        for i, (tau, e) in enumerate(zip(self.taus, self.exponents)):
            drop = PowerImages(dict(tau.items()), base).drop_last(e)
            for c in tau.source:
                out[c] = drop[c].concat(base[kappa_letter(self.last_letter(c), self.d)])
        return out

    def materialize(self, limit: int = MATERIALIZE_LIMIT) -> Morphism:
        if self.length > limit:
            raise MaterializationError(f"images of length {self.length} exceed the limit {limit}")
        return glue([t.power(e) for t, e in zip(self.taus, self.exponents)])

    def __getitem__(self, letter: str) -> Word:
        return self.materialize()[letter]

    def items(self):
        return self.materialize().items()
