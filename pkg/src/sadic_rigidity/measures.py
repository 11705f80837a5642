"""Invariant measures on cylinder sets.

A ``LevelMeasure`` stores the masses of all words of length ``<= order`` in
its support and, optionally, an endpoint table ``P_h(x, y)``: the mass of
the words of length ``h+1`` that start with ``x`` and end with ``y``.  The
endpoint table is what complete-word sums need when ``h`` is too large for
the words themselves to be listed.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

import numpy as np

from .blocks import BlockStats, PairStats, PowerImages, cross_lags, straddles
from .linalg import nullspace, solve
from .morphisms import (
    GluedPower,
    MaterializationError,
    Morphism,
    composition_matrix,
    image_stats,
    is_primitive,
    level_length,
)
from .words import Alphabet, Word, format_word, parse_glued_symbol

DEFAULT_BIT_BUDGET = 2**16
MANTISSA_BITS = 128
DIRECT_LIMIT = 20_000


class MeasureError(ValueError):
    pass


def required_order(k: int, ell: int) -> int:
    """Longest upper word needed to transfer words of length ``k`` through a length-``ell`` morphism."""
    if k <= 1:
        return 1
    return (k - 2) // ell + 2


def round_mantissa(x: Fraction, bits: int = MANTISSA_BITS) -> Fraction:
    """Nearest dyadic rational with a ``bits``-bit mantissa."""
    if x == 0:
        return x
    e = x.numerator.bit_length() - x.denominator.bit_length() - bits
    if e >= 0:
        scaled = Fraction(x.numerator, x.denominator * (1 << e))
        return Fraction(round(scaled) << e)
    scaled = x * (1 << -e)
    return Fraction(round(scaled), 1 << -e)


@dataclass(frozen=True, eq=False)
class LevelMeasure:
    level: object
    order: int
    alphabet: Alphabet
    masses: Mapping[Word, Fraction]
    lags: np.ndarray | None = None
    error_bound: Fraction = Fraction(0)

    @property
    def exact(self) -> bool:
        return self.error_bound == 0

    @property
    def max_lag(self) -> int:
        return 0 if self.lags is None else self.lags.shape[0]

    def __getitem__(self, u: Sequence[str]) -> Fraction:
        u = tuple(u)
        if len(u) > self.order:
            raise MeasureError(f"word of length {len(u)} exceeds the stored order {self.order}")
        if not u:
            return Fraction(1)
        self.alphabet.check(u)
        return self.masses.get(u, Fraction(0))

    def mass(self, u: Sequence[str]) -> Fraction:
        return self[u]

    def words(self, j: int | None = None) -> list[Word]:
        return self.alphabet.sorted(w for w in self.masses if j is None or len(w) == j)

    def total(self, j: int) -> Fraction:
        return sum((m for w, m in self.masses.items() if len(w) == j), Fraction(0))

    def endpoint(self, h: int, x: str, y: str) -> Fraction:
        """Mass of words of length ``h+1`` starting with ``x`` and ending with ``y``."""
        if h < 1:
            raise MeasureError("lag must be positive")
        if self.lags is not None and h <= self.max_lag:
            return self.lags[h - 1, self.alphabet.index(x), self.alphabet.index(y)]
        if h + 1 <= self.order:
            return sum((m for w, m in self.masses.items()
                        if len(w) == h + 1 and w[0] == x and w[-1] == y), Fraction(0))
        raise MeasureError(f"lag {h} is neither stored nor covered by order {self.order}")

    def endpoint_matrix(self, h: int) -> np.ndarray:
        n = len(self.alphabet)
        if self.lags is not None and h <= self.max_lag:
            return self.lags[h - 1]
        m = np.full((n, n), Fraction(0), dtype=object)
        for x in self.alphabet:
            for y in self.alphabet:
                m[self.alphabet.index(x), self.alphabet.index(y)] = self.endpoint(h, x, y)
        return m

    def covers_lag(self, h: int) -> bool:
        return h <= self.max_lag or h + 1 <= self.order

    def check(self, tol: Fraction | float = 0) -> None:
        """Probability and Kolmogorov consistency, exactly or within ``tol``."""
        tol = Fraction(tol) + 4 * self.error_bound
        for w, m in self.masses.items():
            if m < -tol:
                raise MeasureError(f"negative mass at {format_word(w)}")
        if abs(self.total(1) - 1) > tol:
            raise MeasureError(f"letter masses sum to {self.total(1)}")
        for j in range(1, self.order):
            right: dict[Word, Fraction] = {}
            left: dict[Word, Fraction] = {}
            for w, m in self.masses.items():
                if len(w) == j + 1:
                    right[w[:-1]] = right.get(w[:-1], 0) + m
                    left[w[1:]] = left.get(w[1:], 0) + m
            for u in set(right) | set(left) | {w for w in self.masses if len(w) == j}:
                m = self.masses.get(u, 0)
                if abs(right.get(u, 0) - m) > tol or abs(left.get(u, 0) - m) > tol:
                    raise MeasureError(f"inconsistent masses around {format_word(u)}")

    def restrict(self, k: int) -> LevelMeasure:
        if k > self.order:
            raise MeasureError(f"cannot restrict order {self.order} measure to order {k}")
        return replace(self, order=k, masses={w: m for w, m in self.masses.items() if len(w) <= k})

    def extend_alphabet(self, alphabet: Alphabet) -> LevelMeasure:
        """The same measure viewed on a larger alphabet (zero mass off the original letters)."""
        for s in self.alphabet:
            if s not in alphabet:
                raise MeasureError(f"{s!r} is missing from the target alphabet")
        lags = None
        if self.lags is not None:
            n = len(alphabet)
            lags = np.full((self.max_lag, n, n), Fraction(0), dtype=object)
            ix = [alphabet.index(s) for s in self.alphabet]
            lags[np.ix_(range(self.max_lag), ix, ix)] = self.lags
        return replace(self, alphabet=alphabet, lags=lags)

    def relabel(self, mapping: Mapping[str, str], alphabet: Alphabet) -> LevelMeasure:
        masses = {tuple(mapping[s] for s in w): m for w, m in self.masses.items()}
        lags = None
        if self.lags is not None:
            n = len(alphabet)
            lags = np.full((self.max_lag, n, n), Fraction(0), dtype=object)
            for x in self.alphabet:
                for y in self.alphabet:
                    lags[:, alphabet.index(mapping[x]), alphabet.index(mapping[y])] = \
                        self.lags[:, self.alphabet.index(x), self.alphabet.index(y)]
        return LevelMeasure(self.level, self.order, alphabet, masses, lags, self.error_bound)

    def at_level(self, level) -> LevelMeasure:
        return replace(self, level=level)

    def distance(self, other: LevelMeasure) -> Fraction:
        """Max-norm distance over stored words and shared lags."""
        k = min(self.order, other.order)
        keys = {w for w in self.masses if len(w) <= k} | {w for w in other.masses if len(w) <= k}
        dist = max((abs(self.masses.get(w, 0) - other.masses.get(w, 0)) for w in keys), default=Fraction(0))
        if self.lags is not None and other.lags is not None and self.alphabet == other.alphabet:
            h = min(self.max_lag, other.max_lag)
            diff = self.lags[:h] - other.lags[:h]
            dist = max(dist, max((abs(x) for x in diff.flat), default=Fraction(0)))
        return Fraction(dist)

    def letter_mass(self, letters: Iterable[str]) -> Fraction:
        return sum((self[(c,)] for c in letters), Fraction(0))

    def rows(self) -> list[tuple[Word, Fraction]]:
        return [(w, self.masses[w]) for w in self.words()]


def measure_csv(measures: Sequence[LevelMeasure]) -> str:
    """``level, word, numerator, denominator`` (exact) or ``level, word, value, error_bound``."""
    buf = io.StringIO()
    out = csv.writer(buf, lineterminator="\n")
    exact = all(m.exact for m in measures)
    out.writerow(["level", "word", "numerator", "denominator"] if exact
                 else ["level", "word", "value", "error_bound"])
    for mu in measures:
        for w, m in mu.rows():
            if exact:
                out.writerow([str(mu.level), format_word(w), m.numerator, m.denominator])
            else:
                out.writerow([str(mu.level), format_word(w), f"{float(m):.17g}",
                              f"{float(mu.error_bound):.3g}"])
    return buf.getvalue()


def _finalize(masses: dict, lags, err: Fraction, bit_budget: int):
    """Apply the bit budget: beyond it, round to 128-bit mantissas and grow the error bound."""
    masses = {w: m for w, m in masses.items() if m != 0}
    bits = max((m.denominator.bit_length() for m in masses.values()), default=0)
    if lags is not None:
        bits = max(bits, max((x.denominator.bit_length() for x in lags.flat), default=0))
    if bits <= bit_budget:
        return masses, lags, err
    masses = {w: round_mantissa(m) for w, m in masses.items()}
    if lags is not None:
        lags = np.vectorize(round_mantissa, otypes=[object])(lags)
    return masses, lags, err + Fraction(1, 1 << (MANTISSA_BITS - 1))


def _as_fraction_lags(H: int, n: int) -> np.ndarray:
    return np.full((H, n, n), Fraction(0), dtype=object)


def transfer_down(sigma, mu: LevelMeasure, k: int, lags: int = 0, level=None,
                  bit_budget: int = DEFAULT_BIT_BUDGET) -> LevelMeasure:
    """``μ'(u) = (1/|σ|) Σ_{w} ⌊σ(w)⌋_u μ(w)`` for every ``|u| <= k``; optional endpoint lags up to ``lags``."""
    if k < 1:
        raise MeasureError("order must be positive")
    ell = level_length(sigma)
    if sigma.source != mu.alphabet:
        raise MeasureError("the upper measure does not live on the source alphabet of σ")
    req = max(required_order(k, ell), 2 if lags else 1)
    if mu.order < req:
        raise MeasureError(f"upper measure has order {mu.order}; order {req} is required")
    if lags > ell:
        raise MeasureError(f"lags up to {lags} need lag <= |σ| = {ell}")
    if abs(mu.total(1) - 1) > 4 * mu.error_bound:
        raise MeasureError(f"upper letter masses sum to {mu.total(1)}, not 1")
    target = sigma.target
    if req <= 2:
        masses = _transfer_blocks(sigma, mu, k, ell)
    else:
        masses = _transfer_direct(sigma, mu, k, ell, req)
    lag_table = _transfer_lags(sigma, mu, lags, ell) if lags else None
    err = 2 * mu.error_bound
    masses, lag_table, err = _finalize(masses, lag_table, err, bit_budget)
    return LevelMeasure(level, k, target, masses, lag_table, err)


def _upper_pairs(mu: LevelMeasure) -> list[tuple[str, str, Fraction]]:
    return [(w[0], w[1], m) for w, m in mu.masses.items() if len(w) == 2 and m]


def _transfer_blocks(sigma, mu: LevelMeasure, k: int, ell: int) -> dict:
    stats = image_stats(sigma, {x: BlockStats.letter(x, k) for x in sigma.target})
    acc: dict[Word, Fraction] = {}
    for c in sigma.source:
        m = mu[(c,)]
        if m:
            for u, n in stats[c].counts.items():
                acc[u] = acc.get(u, 0) + n * m
    if k > 1:
        for c, e, m in _upper_pairs(mu):
            for u, n in straddles(stats[c].suffix, stats[e].prefix, k).items():
                acc[u] = acc.get(u, 0) + n * m
    return {u: Fraction(v) / ell for u, v in acc.items()}


def _literal(sigma) -> Morphism:
    if isinstance(sigma, GluedPower):
        if sigma.length > DIRECT_LIMIT:
            raise MaterializationError(
                f"transfer of long words needs literal images; |σ| = {sigma.length} is too large")
        return sigma.materialize()
    return sigma


def _transfer_direct(sigma, mu: LevelMeasure, k: int, ell: int, req: int) -> dict:
    sigma = _literal(sigma)
    acc: dict[Word, Fraction] = {}
    for w, m in mu.masses.items():
        if not m or len(w) > req:
            continue
        img = sigma(w)
        lw = len(w)
        for i in range(ell):
            if lw == 1:
                lo, hi = 1, min(k, ell - i)
            else:
                lo = max(1, (lw - 1) * ell - i + 1)
                hi = min(k, lw * ell - i)
            for length in range(lo, hi + 1):
                u = img[i : i + length]
                acc[u] = acc.get(u, 0) + m
    return {u: Fraction(v) / ell for u, v in acc.items()}


def _transfer_lags(sigma, mu: LevelMeasure, H: int, ell: int) -> np.ndarray:
    target = sigma.target
    n = len(target)
    stats = image_stats(sigma, {x: PairStats.letter(x, H, target) for x in target})
    acc = _as_fraction_lags(H, n)
    for c in sigma.source:
        m = mu[(c,)]
        if m:
            acc = acc + stats[c].lags * m
    for c, e, m in _upper_pairs(mu):
        acc = acc + cross_lags(stats[c].suffix, stats[e].prefix, H, target) * m
    return acc / ell


def pushforward_letter_to_letter(phi: Morphism, mu: LevelMeasure) -> LevelMeasure:
    """``μ'(w) = Σ_{u ∈ φ^{-1}(w)} μ(u)``."""
    if not isinstance(phi, Morphism) or any(len(img) != 1 for img in phi.images):
        raise MeasureError("pushforward needs a letter-to-letter morphism")
    if phi.source != mu.alphabet:
        raise MeasureError("measure alphabet differs from the source of φ")
    masses: dict[Word, Fraction] = {}
    for w, m in mu.masses.items():
        u = phi(w)
        masses[u] = masses.get(u, 0) + m
    lags = None
    if mu.lags is not None:
        t = phi.target
        lags = _as_fraction_lags(mu.max_lag, len(t))
        for x in mu.alphabet:
            for y in mu.alphabet:
                lags[:, t.index(phi[x][0]), t.index(phi[y][0])] += \
                    mu.lags[:, mu.alphabet.index(x), mu.alphabet.index(y)]
    return LevelMeasure(mu.level, mu.order, phi.target, masses, lags, mu.error_bound)


# --- unique measures of primitive substitutions -------------------------------------------


def _letter_frequencies(tau: Morphism) -> dict[str, Fraction]:
    ell = len(tau)
    m = composition_matrix(tau).array
    n = m.shape[0]
    rows = [[m[r, c] - (ell if r == c else 0) for c in range(n)] for r in range(n)]
    basis = nullspace(rows)
    if len(basis) != 1:
        raise MeasureError(f"eigenspace of |τ| has dimension {len(basis)}, expected 1")
    v = basis[0]
    s = sum(v)
    return {x: v[i] / s for i, x in enumerate(tau.source)}


def _two_word_masses(tau: Morphism, letters: dict[str, Fraction]) -> dict[Word, Fraction]:
    """Solve ``x = (1/ℓ)(b + S x)`` for the 2-word masses, ``S`` the straddle matrix."""
    ell = len(tau)
    alpha = tau.source
    pairs = [(x, y) for x in alpha for y in alpha]
    index = {p: i for i, p in enumerate(pairs)}
    stats = {c: BlockStats.from_word(tau[c], 2) for c in alpha}
    b = [Fraction(0)] * len(pairs)
    for c in alpha:
        for u, cnt in stats[c].counts.items():
            if len(u) == 2:
                b[index[u]] += cnt * letters[c]
    a = [[Fraction(ell if r == col else 0) for col in range(len(pairs))] for r in range(len(pairs))]
    for col, (c, e) in enumerate(pairs):
        u = (tau[c][-1], tau[e][0])
        a[index[u]][col] -= 1
    x = solve(a, b)
    return {p: x[i] for i, p in enumerate(pairs) if x[i]}


@lru_cache(maxsize=256)
def _substitution_measure(tau: Morphism, k: int, lags: int) -> LevelMeasure:
    if not tau.is_endomorphism or tau.constant_length is None:
        raise MeasureError("substitution_measure needs a constant-length substitution")
    if not is_primitive(tau):
        raise MeasureError("substitution is not primitive")
    letters = _letter_frequencies(tau)
    masses: dict[Word, Fraction] = {(x,): m for x, m in letters.items() if m}
    masses.update(_two_word_masses(tau, letters))
    mu = LevelMeasure(None, 2, tau.source, masses)
    ell = len(tau)
    while mu.order < k:
        mu = transfer_down(tau, mu, min(k, (mu.order - 1) * ell + 1))
    if k < mu.order:
        mu = mu.restrict(k)
    if lags:
        p, big = 1, ell
        while big < lags:
            p, big = p + 1, big * ell
        base = {x: PairStats.letter(x, lags, tau.source) for x in tau.source}
        full = PowerImages(dict(tau.items()), base).full(p)
        power = _StatsMorphism(tau.source, big, full)
        two = mu if mu.order >= 2 else _substitution_measure(tau, 2, 0)
        mu = replace(mu, lags=_transfer_lags(power, two, lags, big))
    return mu


class _StatsMorphism:
    """A morphism known only through precomputed image stats."""

    def __init__(self, alphabet: Alphabet, length: int, stats: dict):
        self.source = self.target = alphabet
        self.length = length
        self._stats = stats

    def image_stats(self, base):
        return self._stats


def substitution_measure(tau: Morphism, k: int, lags: int = 0) -> LevelMeasure:
    """The unique invariant measure of a primitive constant-length substitution, to order ``k``."""
    if k < 1:
        raise MeasureError("order must be positive")
    return _substitution_measure(tau, k, lags)


# --- empirical oracle -----------------------------------------------------------------------


def empirical_measure(prefix: Sequence[str], k: int, alphabet: Alphabet | None = None) -> LevelMeasure:
    """Cyclic factor frequencies of ``prefix``; exactly consistent by construction."""
    w = tuple(prefix)
    if len(w) < k:
        raise MeasureError(f"prefix of length {len(w)} is shorter than the order {k}")
    if alphabet is None:
        alphabet = Alphabet(tuple(dict.fromkeys(w)))
    alphabet.check(w)
    n = len(w)
    ext = w + w[: k - 1]
    counts: dict[Word, int] = {}
    for i in range(n):
        for j in range(1, k + 1):
            u = ext[i : i + j]
            counts[u] = counts.get(u, 0) + 1
    return LevelMeasure("empirical", k, alphabet, {u: Fraction(c, n) for u, c in counts.items()})


# --- ergodic measures of glued sequences ----------------------------------------------------


@dataclass(frozen=True)
class GluedMeasure:
    measure: LevelMeasure
    component: int
    level: object
    depth: object
    certificate: Fraction
    tolerance: float
    converged: bool
    maximizer_ok: bool | None
    foreign_mass: Fraction
    trail: tuple = field(default=(), repr=False)


def _ansatz(ds, i: int, order: int, level) -> LevelMeasure:
    tau = ds.taus[i]
    nu = substitution_measure(tau, order)
    return replace(nu.extend_alphabet(ds.alphabet_at(level)), level=level)


def _orders(ds, n, N, k: int, lags: int) -> dict:
    levels = ds.levels(n, N)
    need = {}
    cur = max(k, 2 if lags else 1)
    for lv in levels:
        need[lv] = cur
        cur = required_order(cur, ds.length_at(lv))
    need[N] = max(cur, 2)
    return need


def transfer_chain(ds, top: LevelMeasure, n, N, k: int, lags: int = 0,
                   bit_budget: int = DEFAULT_BIT_BUDGET) -> LevelMeasure:
    """Push a measure at level ``N`` down to level ``n`` through ``σ_{[n,N)}``."""
    need = _orders(ds, n, N, k, lags)
    mu = top
    levels = ds.levels(n, N)
    for lv in reversed(levels):
        last = lv == levels[0]
        mu = transfer_down(ds.morphism_at(lv), mu, need[lv] if not last else k,
                           lags=lags if last else 0, level=lv, bit_budget=bit_budget)
    return mu


def _candidate(ds, i, n, N, k, lags, bit_budget):
    need = _orders(ds, n, N, k, lags)
    top = _ansatz(ds, i, need[N], N)
    return transfer_chain(ds, top, n, N, k, lags, bit_budget)


DEPTHS = (1, 2, 4, 8, 16, 24)


def _plus(ds, n, steps: int):
    lv = n
    for _ in range(steps):
        lv = ds.next_level(lv)
    return lv


def _integer_above(ds, n, steps: int):
    """The integer level ``steps`` integer levels above ``n`` (ansatz levels must be unprimed)."""
    from .sadic import QIndex

    if isinstance(n, QIndex):
        return QIndex(n.n + steps)
    return n + steps


def _foreign(mu: LevelMeasure, i: int) -> Fraction:
    total = Fraction(0)
    for c in mu.alphabet:
        _, j, _ = parse_glued_symbol(c)
        if j != i:
            total += mu[(c,)]
    return total


def glued_ergodic_measure(ds, i: int, n, k: int = 3, depth: int | None = None, lags: int = 0,
                          tol: float = 1e-6, cap: int = 24, maximizer_check: bool = True,
                          bit_budget: int = DEFAULT_BIT_BUDGET) -> GluedMeasure:
    """Approximate ``μ_i`` at level ``n`` by transferring ``ν_i`` down from a deeper level."""
    if not 0 <= i < ds.d:
        raise MeasureError(f"component {i} outside 0..{ds.d - 1}")
    if depth is not None:
        schedule = [depth]
    else:
        schedule = [D for D in DEPTHS if D < cap] + [cap]
    trail = []
    result = None
    for D in schedule:
        N1, N2 = _integer_above(ds, n, D), _integer_above(ds, n, D + 1)
        m1 = _candidate(ds, i, n, N1, k, lags, bit_budget)
        m2 = _candidate(ds, i, n, N2, k, lags, bit_budget)
        cert = m1.distance(m2) + m1.error_bound + m2.error_bound
        trail.append((D, cert))
        result = (m2, N2, cert)
        if cert <= Fraction(tol):
            break
    mu, N, cert = result
    maximizer = None
    if maximizer_check and ds.d > 1:
        own = [x for x in mu.alphabet if parse_glued_symbol(x)[1] == i and not parse_glued_symbol(x)[2]]
        mine = mu.letter_mass(own)
        others = [_candidate(ds, j, n, N, 1, 0, bit_budget).letter_mass(own)
                  for j in range(ds.d) if j != i]
        maximizer = all(mine >= o for o in others)
    return GluedMeasure(mu, i, n, N, cert, tol, cert <= Fraction(tol), maximizer,
                        _foreign(mu, i), tuple(trail))
