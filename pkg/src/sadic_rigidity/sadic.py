"""Directive sequences: constant, glued powers and the three-morphism decomposition.

Levels of constant and glued sequences are non-negative integers.  The
decomposed sequence is indexed by ``QIndex`` values ``q = n + m/(n+2)``.  In
every case ``morphism_at(level)`` maps the alphabet of ``next_level(level)``
into the alphabet of ``level``.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from fractions import Fraction
from functools import total_ordering
from typing import Callable, Sequence

from .blocks import BlockStats
from .morphisms import (
    GluedPower,
    Morphism,
    MorphismError,
    length4_taus,
    image_stats,
    is_mirror,
    is_positive,
    is_prolongable,
    level_length,
    on_pair,
    zeta,
)
from .words import (
    AB,
    Alphabet,
    Word,
    glued_alphabet,
    pair_alphabet,
)


class SequenceError(ValueError):
    pass


@total_ordering
@dataclass(frozen=True)
class QIndex:
    """``q = n + m/(n+2)`` with ``0 <= m <= n+1``; ``m = 0`` is the integer level ``n``."""

    n: int
    m: int = 0

    def __post_init__(self) -> None:
        if self.n < 0 or not 0 <= self.m <= self.n + 1:
            raise SequenceError(f"invalid Q index ({self.n}, {self.m})")

    def __lt__(self, other: QIndex) -> bool:
        return (self.n, self.m) < (other.n, other.m)

    @property
    def value(self) -> Fraction:
        return self.n + Fraction(self.m, self.n + 2)

    @property
    def is_integer(self) -> bool:
        return self.m == 0

    @property
    def kind(self) -> str:
        """Which of φ, ρ, ψ sits at this index."""
        if self.m == 0:
            return "phi"
        if self.m == self.n + 1:
            return "psi"
        return "rho"

    def succ(self) -> QIndex:
        return QIndex(self.n, self.m + 1) if self.m <= self.n else QIndex(self.n + 1, 0)

    def pred(self) -> QIndex:
        if self.m > 0:
            return QIndex(self.n, self.m - 1)
        if self.n == 0:
            raise SequenceError("0 has no predecessor in Q")
        return QIndex(self.n - 1, self.n)

    def __str__(self) -> str:
        return str(self.n) if self.m == 0 else f"{self.n}+{self.m}/{self.n + 2}"


def q_levels(start: QIndex, stop: QIndex) -> list[QIndex]:
    """All Q indices ``start <= q < stop`` in increasing order."""
    out, q = [], start
    while q < stop:
        out.append(q)
        q = q.succ()
    return out


class DirectiveSequence:
    kind = "abstract"

    def __init__(self) -> None:
        self._cache: dict = {}
        self._lock = threading.Lock()

    def _build(self, level):
        raise NotImplementedError

    def morphism_at(self, level):
        with self._lock:
            if level not in self._cache:
                self._cache[level] = self._build(level)
            return self._cache[level]

    def alphabet_at(self, level) -> Alphabet:
        raise NotImplementedError

    def next_level(self, level):
        return level + 1

    def levels(self, start, stop) -> list:
        out, lv = [], start
        while lv < stop:
            out.append(lv)
            lv = self.next_level(lv)
        return out

    def length_at(self, level) -> int:
        return level_length(self.morphism_at(level))

    def height(self, n) -> int:
        """``h^{(n)} = |σ_{[0,n)}|``."""
        h = 1
        for lv in self.levels(self.first_level, n):
            h *= self.length_at(lv)
        return h

    first_level = 0

    def chain(self, start, stop) -> list:
        return [self.morphism_at(lv) for lv in self.levels(start, stop)]


class ConstantSequence(DirectiveSequence):
    kind = "constant"

    def __init__(self, sigma: Morphism):
        super().__init__()
        self.sigma = sigma

    def _build(self, level):
        return self.sigma

    def morphism_at(self, level):
        return self.sigma

    def alphabet_at(self, level) -> Alphabet:
        return self.sigma.source

    def height(self, n) -> int:
        return len(self.sigma) ** n


def constant_sequence(sigma: Morphism) -> ConstantSequence:
    if not sigma.is_endomorphism:
        raise SequenceError("a substitution must be an endomorphism")
    p = sigma.power(len(sigma.source))
    if any(len(img) < 2 for img in p.images):
        raise SequenceError("the substitution has a letter whose iterates do not grow")
    return ConstantSequence(sigma)


@dataclass(frozen=True)
class LinearSchedule:
    """``e_i(n) = c_i (n+1)``."""

    multipliers: tuple[int, ...]

    def __call__(self, i: int, n: int) -> int:
        return self.multipliers[i] * (n + 1)

    def __str__(self) -> str:
        return ", ".join(f"e_{i}(n)={c}(n+1)" if c != 1 else f"e_{i}(n)=n+1"
                         for i, c in enumerate(self.multipliers))


def _power_letter_counts(tau: Morphism, p: int) -> dict[str, dict[str, int]]:
    base = {c: BlockStats.letter(c, 1) for c in tau.source}
    from .blocks import PowerImages

    full = PowerImages(dict(tau.items()), base).full(p)
    return {c: full[c].letter_counts() for c in tau.source}


def _power_ends(tau: Morphism, p: int, c: str) -> tuple[str, str]:
    first = last = c
    for _ in range(p):
        first, last = tau[first][0], tau[last][-1]
    return first, last


@dataclass(frozen=True)
class BaseCheck:
    """Hypotheses of the gluing construction for one component base ``τ^c``."""

    i: int
    length: int
    positive: bool
    prolongable: bool
    mirror: bool | None

    @property
    def admissible(self) -> bool:
        return self.positive and self.prolongable


class GluedPowersSequence(DirectiveSequence):
    """``σ_n = Γ(τ_0^{e_0(n)}, ..., τ_{d-1}^{e_{d-1}(n)})``."""

    kind = "glued"

    def __init__(self, taus: Sequence[Morphism], schedule: Callable[[int, int], int],
                 name: str = "glued"):
        super().__init__()
        self.taus = tuple(on_pair(t, i) if t.source == AB else t for i, t in enumerate(taus))
        self.d = len(self.taus)
        self.schedule = schedule
        self.name = name
        self.alphabet = glued_alphabet(self.d)
        for i, t in enumerate(self.taus):
            if t.source != pair_alphabet(i) or not t.is_endomorphism:
                raise SequenceError(f"component {i} must be an endomorphism of A_{i}")
            if t.constant_length is None:
                raise SequenceError(f"component {i} is not of constant length")

    def exponents(self, n: int) -> tuple[int, ...]:
        return tuple(self.schedule(i, n) for i in range(self.d))

    def _build(self, n: int) -> GluedPower:
        try:
            return GluedPower(self.taus, self.exponents(n))
        except MorphismError as exc:
            raise SequenceError(f"level {n}: {exc}") from None

    def alphabet_at(self, level) -> Alphabet:
        return self.alphabet

    def length_at(self, n: int) -> int:
        lengths = {len(t) ** e for t, e in zip(self.taus, self.exponents(n))}
        if len(lengths) != 1:
            raise SequenceError(f"level {n}: component lengths differ: {sorted(lengths)}")
        return lengths.pop()

    @property
    def multipliers(self) -> tuple[int, ...] | None:
        return self.schedule.multipliers if isinstance(self.schedule, LinearSchedule) else None

    def base(self, i: int) -> tuple[Morphism, int]:
        """The component ``τ_i`` and the power ``c_i`` with ``e_i(n) = c_i (n+1)``."""
        c = self.multipliers[i] if self.multipliers else 1
        return self.taus[i], c

    @property
    def base_length(self) -> int:
        """``ℓ = |τ_i^{c_i}|``, the length of ``σ_0``."""
        return self.length_at(0)

    def base_checks(self) -> list[BaseCheck]:
        out = []
        for i in range(self.d):
            tau, c = self.base(i)
            counts = _power_letter_counts(tau, c)
            positive = all(counts[x].get(y, 0) > 0 for x in tau.source for y in tau.source)
            prolongable = all(_power_ends(tau, c, x) == (x, x) for x in tau.source)
            out.append(BaseCheck(i, len(tau) ** c, positive, prolongable, is_mirror(tau)))
        return out

    def component_alphabet(self, i: int) -> Alphabet:
        return pair_alphabet(i)


def glued_powers(taus: Sequence[Morphism], exponents: Callable[[int, int], int] | Sequence[int] | None = None,
                 strict: bool = True, name: str = "glued") -> GluedPowersSequence:
    """Glued sequence over ``taus``; ``exponents`` is a schedule or a list of multipliers."""
    if exponents is None:
        exponents = LinearSchedule((1,) * len(taus))
    elif not callable(exponents):
        exponents = LinearSchedule(tuple(int(c) for c in exponents))
    ds = GluedPowersSequence(taus, exponents, name)
    if isinstance(exponents, LinearSchedule):
        ds.length_at(0)  # equal base lengths imply equal lengths at every level
    if strict:
        for chk in ds.base_checks():
            if not chk.admissible:
                raise SequenceError(
                    f"component {chk.i} base is not positive and prolongable "
                    f"(positive={chk.positive}, prolongable={chk.prolongable})")
    return ds


def desk_variant(L: int = 6, d: int = 2) -> GluedPowersSequence:
    """``τ_i = ζ_{L^{2^i}}`` with ``e_i(n) = (n+1) 2^{d-i}``; every level has length ``L^{2^d (n+1)}``."""
    taus = [zeta(L ** (2 ** i)) for i in range(d)]
    return glued_powers(taus, [2 ** (d - i) for i in range(d)], name=f"desk-variant L={L} d={d}")


def final_family(L: int = 6, d: int = 2) -> GluedPowersSequence:
    """``τ_i = ζ_{L^{2^{i+1}}}`` with ``e_i(n) = (n+1) 2^{d-i}``; level length ``L^{2^{d+1} (n+1)}``."""
    taus = [zeta(L ** (2 ** (i + 1))) for i in range(d)]
    return glued_powers(taus, [2 ** (d - i) for i in range(d)], name=f"final-family L={L} d={d}")


def length4_example() -> GluedPowersSequence:
    """The worked length-4 example; its second component is not prolongable."""
    return glued_powers(length4_taus(), strict=False, name="length-4 pair")


@dataclass(frozen=True)
class Decomposition:
    psi: Morphism
    rho: Morphism
    phi: Morphism
    u: tuple[Word, ...]
    v: tuple[Word, ...]


def decomposition_morphisms(taus: Sequence[Morphism]) -> Decomposition:
    """Build ψ, ρ, φ from equal-length ``τ_i`` without checking any hypothesis."""
    taus = [on_pair(t, i) if t.source == AB else t for i, t in enumerate(taus)]
    d = len(taus)
    lam = glued_alphabet(d)
    lamp = glued_alphabet(d, primed=True)
    us, vs = [], []
    for i, t in enumerate(taus):
        a, b = lam.pair(i)
        us.append(t[a][:-1])
        vs.append(t[b][:-1])
    psi, rho, phi = {}, {}, {}
    for i, t in enumerate(taus):
        a, b = lam.pair(i)
        ap, bp = lamp.primed_pair(i)
        an, bn = lamp.primed_pair(i + 1)
        psi[a] = us[i] + (an,)
        psi[b] = vs[i] + (bn,)
        rho[a] = t[a]
        rho[b] = t[b]
        rho[ap] = us[(i - 1) % d] + (ap,)
        rho[bp] = vs[(i - 1) % d] + (bp,)
        phi[a], phi[b], phi[ap], phi[bp] = (a,), (b,), (a,), (b,)
    return Decomposition(
        Morphism.from_dict(psi, lam, lamp),
        Morphism.from_dict(rho, lamp, lamp),
        Morphism.from_dict(phi, lamp, lam),
        tuple(us),
        tuple(vs),
    )


class DecomposedSequence(DirectiveSequence):
    """The glued sequence written as ``σ_n = φ ∘ ρ^n ∘ ψ`` and indexed by Q."""

    kind = "decomposed"
    first_level = QIndex(0)

    def __init__(self, taus: Sequence[Morphism], parts: Decomposition, name: str = "decomposed"):
        super().__init__()
        self.taus = tuple(on_pair(t, i) if t.source == AB else t for i, t in enumerate(taus))
        self.d = len(self.taus)
        self.parts = parts
        self.name = name
        self.alphabet = glued_alphabet(self.d)
        self.primed_alphabet = glued_alphabet(self.d, primed=True)
        self.length = len(self.taus[0])

    def _coerce(self, level) -> QIndex:
        return level if isinstance(level, QIndex) else QIndex(int(level))

    def _build(self, level) -> Morphism:
        q = self._coerce(level)
        return {"phi": self.parts.phi, "rho": self.parts.rho, "psi": self.parts.psi}[q.kind]

    def morphism_at(self, level) -> Morphism:
        return self._build(level)

    def alphabet_at(self, level) -> Alphabet:
        return self.alphabet if self._coerce(level).is_integer else self.primed_alphabet

    def next_level(self, level) -> QIndex:
        return self._coerce(level).succ()

    def levels(self, start, stop) -> list[QIndex]:
        return q_levels(self._coerce(start), self._coerce(stop))

    def length_at(self, level) -> int:
        return 1 if self._coerce(level).kind == "phi" else self.length

    def integer_morphism(self, n: int) -> Morphism:
        """``φ ∘ ρ^n ∘ ψ``."""
        return compose_chain(self.chain(QIndex(n), QIndex(n + 1)))


def compose_chain(chain: Sequence[Morphism]) -> Morphism:
    from .morphisms import compose

    out = chain[-1]
    for sigma in reversed(chain[:-1]):
        out = compose(sigma, out)
    return out


def decompose(ds: GluedPowersSequence) -> DecomposedSequence:
    """Rewrite a glued sequence with ``e_i(n) = c_i (n+1)`` over the bases ``τ_i^{c_i}``."""
    if not isinstance(ds, GluedPowersSequence) or ds.multipliers is None:
        raise SequenceError("decompose needs a glued sequence with a linear schedule")
    bases = []
    for i in range(ds.d):
        tau, c = ds.base(i)
        if len(tau) ** c > 10**6:
            raise SequenceError(f"component {i} base of length {len(tau) ** c} is too long to decompose")
        bases.append(tau.power(c))
    lengths = {len(t) for t in bases}
    if len(lengths) != 1:
        raise SequenceError("component bases must share one length")
    for i, t in enumerate(bases):
        if not is_mirror(t):
            raise SequenceError(f"component {i} is not a mirror substitution")
        if not is_positive(t):
            raise SequenceError(f"component {i} is not positive")
        if not is_prolongable(t):
            raise SequenceError(f"component {i} is not prolongable")
    return DecomposedSequence(bases, decomposition_morphisms(bases), name=f"{ds.name} (decomposed)")


class InsufficientDepth(RuntimeError):
    """The requested depth is too shallow; ``partial`` holds what was found."""

    def __init__(self, message: str, partial: set[Word], required: int):
        super().__init__(message)
        self.partial = partial
        self.required = required


def chain_stats(ds: DirectiveSequence, n, N, factory) -> dict:
    """Stats of ``σ_{[n,N)}(x)`` for every letter ``x`` of level ``N``."""
    stats = {x: factory(x) for x in ds.alphabet_at(n)}
    for lv in ds.levels(n, N):
        stats = image_stats(ds.morphism_at(lv), stats)
    return stats


def _min_depth(ds: DirectiveSequence, n, target: int):
    N, h = n, 1
    while h < target:
        h *= ds.length_at(N)
        N = ds.next_level(N)
    return N


def language(ds: DirectiveSequence, n, m: int, N=None) -> set[Word]:
    """Factors of length ``<= m`` of ``σ_{[n,N)}(a)`` over all letters ``a`` of level ``N``."""
    if m < 1:
        raise ValueError("max_len must be positive")
    required = ds.next_level(_min_depth(ds, n, 2 * m))
    found = set()
    depth = required if N is None else N
    stats = chain_stats(ds, n, depth, lambda x: BlockStats.letter(x, m))
    for st in stats.values():
        found |= st.factors()
    if N is not None and N < required:
        raise InsufficientDepth(
            f"depth {N} is below the required {required} for words of length {m}", found, required)
    return found


def complexity(ds: DirectiveSequence, n, m: int, N=None) -> list[int]:
    """``p(j)`` for ``j = 1..m``."""
    lang = language(ds, n, m, N)
    return [sum(1 for w in lang if len(w) == j) for j in range(1, m + 1)]


@dataclass(frozen=True)
class BKKRow:
    n: int
    length: int
    foreign: Fraction
    deficit: Fraction
    spread: Fraction
    foreign_closed: Fraction
    deficit_closed: Fraction

    @property
    def matches(self) -> bool:
        return self.foreign == self.foreign_closed and self.deficit == self.deficit_closed


@dataclass(frozen=True)
class BKKReport:
    i: int
    rows: tuple[BKKRow, ...]

    @property
    def all_match(self) -> bool:
        return all(r.matches for r in self.rows)


def bkk_check(ds: DirectiveSequence, i: int, n0: int, n1: int) -> BKKReport:
    """The three scalar quantities of the ergodic-decomposition conditions, per level ``n0..n1``."""
    alpha = ds.alphabet_at(n0)
    if alpha.d is None or alpha.primed:
        raise ValueError("bkk_check needs a glued alphabet")
    d = alpha.d
    own = alpha.pair(i)
    rows = []
    for n in range(n0, n1 + 1):
        sigma = ds.morphism_at(n)
        ell = level_length(sigma)
        counts = {c: st.letter_counts()
                  for c, st in image_stats(sigma, {x: BlockStats.letter(x, 1) for x in alpha}).items()}
        foreign = sum(counts[c].get(x, 0) for c in own for x in alpha if x not in own)
        foreign = Fraction(foreign, ell)
        deficit = 1 - min(Fraction(counts[c].get(own[0], 0) + counts[c].get(own[1], 0), ell) for c in own)
        spread = Fraction(max(sum(abs(counts[c].get(x, 0) - counts[c2].get(x, 0)) for x in alpha)
                           for c in own for c2 in own), ell)
        closed_a = Fraction(2, ell) if d >= 2 else Fraction(0)
        closed_c = Fraction(1, ell) if d >= 2 else Fraction(0)
        rows.append(BKKRow(n, ell, foreign, deficit, spread, closed_a, closed_c))
    return BKKReport(i, tuple(rows))


def is_primitive_sequence(ds: GluedPowersSequence, n: int = 0) -> bool:
    """``M(σ_{[n, n+d)})`` is positive."""
    alpha = ds.alphabet_at(n)
    stats = chain_stats(ds, n, n + ds.d, lambda x: BlockStats.letter(x, 1))
    return all(stats[c].letter_counts().get(x, 0) > 0 for c in alpha for x in alpha)


def is_left_permutative_sequence(ds: DirectiveSequence, n: int = 0) -> bool:
    sigma = ds.morphism_at(n)
    alpha = ds.alphabet_at(ds.next_level(n))
    stats = image_stats(sigma, {x: BlockStats.letter(x, 2) for x in ds.alphabet_at(n)})
    firsts = [stats[c].prefix[0] for c in alpha]
    return len(set(firsts)) == len(firsts)


def alphabet_rank(ds: DirectiveSequence, levels: int = 4) -> int:
    return min(len(ds.alphabet_at(n)) for n in range(levels))
