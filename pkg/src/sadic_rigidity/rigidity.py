"""Partial rigidity rates of constant-length systems.

The rate of a level measure is read off complete words: at level ``n`` the
estimate is ``max_k Σ_{w complete, |w|=k} μ^{(n)}(w)`` and the associated
times are ``(k-1) h^{(n)}``.  Lower and upper certificates come from the
component substitutions, and the complete-word set masses obey an exact
recurrence across the refined levels of a decomposed glued sequence.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from .measures import (
    LevelMeasure,
    MeasureError,
    glued_ergodic_measure,
    substitution_measure,
)
from .morphisms import (
    Morphism,
    is_mirror,
    is_positive,
    is_primitive,
    is_prolongable,
    zeta,
)
from .sadic import ConstantSequence, GluedPowersSequence, constant_sequence
from .words import Alphabet, Word, glued_symbol, parse_glued_symbol

TIE_TOLERANCE = Fraction(1, 10**9)
DEFAULT_K_MAX = 6
DEFAULT_TOL = 1e-6
DEFAULT_CAP = 24


class RateError(ValueError):
    pass


# --- complete-word masses ----------------------------------------------------------------


def complete_mass(mu: LevelMeasure, k: int, sub: Alphabet | Sequence[str] | None = None,
                  cross: bool = False) -> Fraction:
    """``Σ μ(w)`` over complete (or cross-complete) words of length ``k`` with letters in ``sub``."""
    if k < 2:
        raise MeasureError("complete words have length at least 2")
    letters = list(mu.alphabet if sub is None else sub)
    if cross:
        if len(letters) != 2:
            raise MeasureError("cross-complete words need a two-letter alphabet")
        pairs = [(letters[0], letters[1]), (letters[1], letters[0])]
    else:
        pairs = [(c, c) for c in letters]
    pairs = [(x, y) for x, y in pairs if x in mu.alphabet and y in mu.alphabet]
    if k <= mu.order:
        inner = set(mu.alphabet) if sub is None else set(letters)
        return sum((m for w, m in mu.masses.items()
                    if len(w) == k and (w[0], w[-1]) in pairs and all(s in inner for s in w)),
                   Fraction(0))
    if sub is not None and set(letters) != set(mu.alphabet):
        raise MeasureError(f"order {mu.order} is too small for words of length {k} over a sub-alphabet")
    if not mu.covers_lag(k - 1):
        raise MeasureError(f"measure of order {mu.order} with {mu.max_lag} lags cannot reach length {k}")
    return sum((mu.endpoint(k - 1, x, y) for x, y in pairs), Fraction(0))


def complete_masses(mu: LevelMeasure, k_max: int, sub=None) -> dict[int, Fraction]:
    return {k: complete_mass(mu, k, sub) for k in range(2, k_max + 1)}


def best_k(masses: Mapping[int, Fraction], tie: Fraction = TIE_TOLERANCE) -> tuple[int, Fraction]:
    """Maximum over ``k``; the smallest ``k`` within ``tie`` of the maximum wins."""
    top = max(masses.values())
    for k in sorted(masses):
        if masses[k] >= top - tie:
            return k, masses[k]
    raise AssertionError("unreachable")


# --- reports -------------------------------------------------------------------------------


@dataclass(frozen=True)
class LevelEstimate:
    level: object
    k: int
    mass: Fraction
    height: int
    certificate: Fraction = Fraction(0)
    masses: Mapping[int, Fraction] = field(default_factory=dict, repr=False)

    @property
    def time(self) -> int:
        """The rigidity time ``(k-1) h^{(n)}``."""
        return (self.k - 1) * self.height


@dataclass(frozen=True)
class RateReport:
    component: int
    system: str
    lower_bound: Fraction | None
    upper_bound: Fraction | None
    estimates: tuple[LevelEstimate, ...]
    converged: bool
    tolerance: float
    k_max: int
    truncated: bool
    height: str
    depth_cap: int = DEFAULT_CAP

    @property
    def rate(self) -> Fraction:
        return self.estimates[-1].mass

    @property
    def k(self) -> int:
        return self.estimates[-1].k

    @property
    def rigidity_sequence(self) -> str:
        ks = sorted({e.k for e in self.estimates})
        if len(ks) == 1:
            k = ks[0]
            scale = "" if k == 2 else f"{k - 1}·"
            return f"{scale}{self.height}"
        return "(k_n-1)·h^(n) with k_n = " + ", ".join(f"{e.k}@{e.level}" for e in self.estimates)

    def sandwich(self, tol: Fraction = TIE_TOLERANCE) -> bool:
        for e in self.estimates:
            if self.lower_bound is not None and e.mass + tol < self.lower_bound:
                return False
            if self.upper_bound is not None and e.mass > self.upper_bound + tol:
                return False
        return True

    def to_dict(self) -> dict:
        return {
            "component": self.component,
            "system": self.system,
            "rate": _rational(self.rate),
            "k": self.k,
            "rigidity_sequence": self.rigidity_sequence,
            "lower_bound": _rational(self.lower_bound),
            "upper_bound": _rational(self.upper_bound),
            "converged": self.converged,
            "tolerance": self.tolerance,
            "k_max": self.k_max,
            "truncated": self.truncated,
            "depth_cap": self.depth_cap,
            "estimates": [
                {"level": str(e.level), "k": e.k, "mass": _rational(e.mass),
                 "time": e.time, "certificate": _rational(e.certificate)}
                for e in self.estimates
            ],
        }


def _rational(x: Fraction | None):
    if x is None:
        return None
    return {"num": x.numerator, "den": x.denominator}


def reports_json(reports: Sequence[RateReport]) -> str:
    return json.dumps([r.to_dict() for r in reports], indent=2) + "\n"


def reports_csv(reports: Sequence[RateReport]) -> str:
    buf = io.StringIO()
    out = csv.writer(buf, lineterminator="\n")
    out.writerow(["component", "level", "k", "numerator", "denominator", "value", "time"])
    for r in reports:
        for e in r.estimates:
            out.writerow([r.component, str(e.level), e.k, e.mass.numerator, e.mass.denominator,
                          f"{float(e.mass):.12g}", e.time])
    return buf.getvalue()


# --- estimates -----------------------------------------------------------------------------


def _constant_estimates(ds: ConstantSequence, k_max: int, levels: Sequence[int]):
    tau = ds.sigma
    nu = substitution_measure(tau, 1, lags=k_max - 1)
    masses = complete_masses(nu, k_max)
    k, m = best_k(masses)
    ell = len(tau)
    return [LevelEstimate(n, k, m, ell ** n, Fraction(0), masses) for n in levels]


def _glued_estimates(ds: GluedPowersSequence, i: int, k_max: int, levels, tol, cap):
    out = []
    for n in levels:
        g = glued_ergodic_measure(ds, i, n, k=1, lags=k_max - 1, tol=tol, cap=cap,
                                  maximizer_check=False)
        masses = complete_masses(g.measure, k_max)
        k, m = best_k(masses)
        out.append(LevelEstimate(n, k, m, ds.height(n), g.certificate, masses))
    return out


def delta_estimate(ds, i: int = 0, k_max: int | None = None, levels: Sequence[int] = (0, 1, 2),
                   tol: float = DEFAULT_TOL, cap: int = DEFAULT_CAP, bounds: bool = True) -> RateReport:
    """Per-level maxima of complete-word masses of ``μ_i``, with the smallest achieving ``k``."""
    levels = list(levels)
    if not levels:
        raise RateError("at least one level is required")
    if isinstance(ds, ConstantSequence):
        k_max = DEFAULT_K_MAX if k_max is None else k_max
        if k_max < 2:
            raise RateError("k_max must be at least 2")
        est = _constant_estimates(ds, k_max, levels)
        base = f"{len(ds.sigma)}^n"
        lower = est[0].mass if bounds else None
        upper = _safe_upper(ds.sigma) if bounds else None
        truncated = True
        name = "constant"
    elif isinstance(ds, GluedPowersSequence):
        ell = ds.base_length
        k_max = ell if k_max is None else k_max
        if k_max < 2:
            raise RateError("k_max must be at least 2")
        est = _glued_estimates(ds, i, k_max, levels, tol, cap)
        base = "h^(n)"
        truncated = k_max < ell
        lower = lower_bound(ds.taus, i) if bounds else None
        upper = _safe_upper(ds.taus[i]) if bounds else None
        name = ds.name
    else:
        raise RateError(f"no rate pipeline for sequences of kind {ds.kind!r}")
    converged = len(est) < 2 or abs(est[-1].mass - est[-2].mass) < Fraction(tol)
    converged = converged and all(e.certificate <= Fraction(tol) for e in est)
    return RateReport(i, name, lower, upper, tuple(est), converged, tol, k_max, truncated, base, cap)


# --- certificates ---------------------------------------------------------------------------


def zeta_rate(L: int) -> Fraction:
    """Closed form ``(L-1)/(L+1)`` for ``a -> a^{L-1} b``."""
    return Fraction(L - 1, L + 1)


def _zeta_length(tau: Morphism) -> int | None:
    """``L`` if ``tau`` is ``ζ_L`` up to renaming the two letters, else ``None``."""
    if len(tau.source) != 2 or not tau.is_endomorphism or tau.constant_length is None:
        return None
    L = len(tau)
    a, b = tau.source
    ren = {"a": a, "b": b}
    z = zeta(L)
    if all(tau[ren[s]] == tuple(ren[x] for x in img) for s, img in z.items()):
        return L
    return None


def lower_bound(taus: Sequence[Morphism] | Morphism, i: int = 0, k_max: int | None = None) -> Fraction:
    """``δ_{ν_i}``: the rate of the component substitution on its own."""
    tau = taus if isinstance(taus, Morphism) else taus[i]
    L = _zeta_length(tau)
    if L is not None and k_max is None:
        return zeta_rate(L)
    if not is_primitive(tau):
        raise RateError("lower bound needs a primitive substitution")
    k_max = max(DEFAULT_K_MAX, len(tau)) if k_max is None else k_max
    return delta_estimate(constant_sequence(tau), k_max=k_max, levels=(1,), bounds=False).rate


def smallest_prolongable_power(tau: Morphism, limit: int = 8) -> tuple[Morphism, int]:
    p, t = 1, tau
    while not is_prolongable(t):
        p += 1
        if p > limit:
            raise RateError("no prolongable power found")
        t = tau.power(p)
    return t, p


UPPER_SCAN_LIMIT = 4096


def upper_bound(tau: Morphism, scan_limit: int = UPPER_SCAN_LIMIT) -> Fraction:
    """``max_{k=2..ℓ}`` of complete and cross-complete ``ν``-masses over the smallest prolongable power.

    For ``ζ_L`` whose power is longer than ``scan_limit`` the closed form is returned instead of the scan.
    """
    if len(tau.source) != 2 or not is_mirror(tau):
        raise RateError("upper bound needs a mirror substitution on two letters")
    t, _ = smallest_prolongable_power(tau)
    if not is_positive(t):
        raise RateError("upper bound needs a positive substitution")
    ell = len(t)
    if ell > scan_limit:
        L = _zeta_length(tau)
        if L is None:
            raise RateError(f"scanning k up to {ell} exceeds the limit {scan_limit}")
        return zeta_rate(L)
    nu = substitution_measure(tau, 1, lags=ell - 1)
    best = Fraction(0)
    for k in range(2, ell + 1):
        best = max(best, complete_mass(nu, k), complete_mass(nu, k, cross=True))
    return best


def _safe_upper(tau: Morphism) -> Fraction | None:
    try:
        return upper_bound(tau)
    except RateError:
        return None


# --- coefficient machinery -----------------------------------------------------------------


@dataclass(frozen=True)
class RCoefficients:
    """``r_j`` counts straddling matches and ``r̃_j`` inner matches of ``v`` at gap ``j``."""

    v: Word
    r: tuple[int, ...]
    rt: tuple[int, ...]

    @property
    def length(self) -> int:
        return len(self.v)

    def get(self, j: int) -> tuple[int, int]:
        if not 1 <= j <= self.length:
            raise IndexError(f"j={j} outside 1..{self.length}")
        return self.r[j - 1], self.rt[j - 1]


def _coefficients(v: Word) -> tuple[tuple[int, ...], tuple[int, ...]]:
    ell = len(v)
    one = lambda p, q: int(v[p - 1] == v[q - 1])  # noqa: E731  1-indexed
    r = tuple(sum(one(ell - j + jp, jp) for jp in range(1, j + 1)) for j in range(1, ell + 1))
    rt = tuple(sum(one(jp, j + jp) for jp in range(1, ell - j + 1)) for j in range(1, ell + 1))
    return r, rt


def r_coefficients(tau: Morphism) -> RCoefficients:
    if tau.constant_length is None or len(tau.source) != 2:
        raise RateError("coefficients need a constant-length substitution on two letters")
    if not is_mirror(tau):
        raise RateError("coefficients need a mirror substitution")
    a, b = tau.source
    r, rt = _coefficients(tau[a])
    if _coefficients(tau[b]) != (r, rt):
        raise RateError("coefficients depend on the chosen letter")
    return RCoefficients(tau[a], r, rt)


# --- C and D set masses ---------------------------------------------------------------------


def eta_map(d: int) -> dict[str, str]:
    """``a_i -> a_i`` and ``a'_{i+1} -> a_i`` (same for ``b``)."""
    out = {}
    for j in range(d):
        for role in "ab":
            out[glued_symbol(role, j)] = glued_symbol(role, j)
            out[glued_symbol(role, j, True)] = glued_symbol(role, (j - 1) % d)
    return out


def _ends(i: int, d: int) -> set[str]:
    return {glued_symbol("a", i), glued_symbol("b", i),
            glued_symbol("a", (i + 1) % d, True), glued_symbol("b", (i + 1) % d, True)}


SET_KINDS = ("C", "Cbar", "D", "Dbar")


def _pair_test(kind: str, i: int, d: int):
    et = eta_map(d)
    ends = _ends(i, d)
    bar = {glued_symbol("a", i): glued_symbol("b", i), glued_symbol("b", i): glued_symbol("a", i)}

    def test(x: str, y: str) -> bool:
        if x not in ends or y not in ends:
            return False
        if kind == "C":
            return x == y
        if kind == "Cbar":
            return x in bar and bar[x] == y
        if kind == "D":
            return et[x] == et[y]
        return bar[et[x]] == et[y]

    return test


def set_mass(mu: LevelMeasure, i: int, k: int, kind: str) -> Fraction:
    """``μ(C^i_k)``, ``μ(C̄^i_k)``, ``μ(D^i_k)`` or ``μ(D̄^i_k)``."""
    if kind not in SET_KINDS:
        raise RateError(f"unknown set {kind!r}")
    d = mu.alphabet.d
    if d is None:
        raise RateError("set masses need a glued alphabet")
    test = _pair_test(kind, i, d)
    unprimed_only = kind.startswith("C")
    if k == 1:
        if kind in ("Cbar", "Dbar"):
            return Fraction(0)
        return sum((mu[(x,)] for x in mu.alphabet if test(x, x)), Fraction(0))
    if k <= mu.order:
        return sum((m for w, m in mu.masses.items()
                    if len(w) == k and test(w[0], w[-1])
                    and not (unprimed_only and any(parse_glued_symbol(s)[2] for s in w))),
                   Fraction(0))
    if unprimed_only and mu.alphabet.primed:
        raise RateError("C sets past the stored order need an unprimed alphabet")
    return sum((mu.endpoint(k - 1, x, y) for x in mu.alphabet for y in mu.alphabet if test(x, y)),
               Fraction(0))


def d_recurrence_step(kind: str, coeffs: RCoefficients, upper: Mapping[tuple[str, int], Fraction],
                      k: int) -> dict[tuple[str, int], Fraction]:
    """Lower ``D``/``D̄`` masses at lengths ``ℓk+j+1`` for ``j = 1..ℓ`` from upper masses at ``k+1, k+2``.

    ``kind`` is ``"rho"`` (upper sets ``D``, ``D̄``) or ``"psi"`` (upper sets ``C``, ``C̄``).
    """
    if kind not in ("rho", "psi"):
        raise RateError("kind must be 'rho' or 'psi'")
    same, other = ("D", "Dbar") if kind == "rho" else ("C", "Cbar")
    need = [(same, k + 1), (same, k + 2), (other, k + 1), (other, k + 2)]
    missing = [key for key in need if key not in upper]
    if missing:
        raise RateError(f"missing upper masses: {missing}")
    ell = coeffs.length
    s1, s2 = upper[(same, k + 1)], upper[(same, k + 2)]
    o1, o2 = upper[(other, k + 1)], upper[(other, k + 2)]
    out = {}
    for j in range(1, ell + 1):
        r, rt = coeffs.get(j)
        if r + (j - r) + rt + (ell - j - rt) != ell or not (0 <= r <= j and 0 <= rt <= ell - j):
            raise RateError(f"coefficients at j={j} are not stochastic")
        n = ell * k + j + 1
        out[("D", n)] = (r * s2 + rt * s1 + (j - r) * o2 + (ell - j - rt) * o1) / ell
        out[("Dbar", n)] = ((j - r) * s2 + (ell - j - rt) * s1 + r * o2 + rt * o1) / ell
    return out


@dataclass(frozen=True)
class Bound:
    """An upper bound, never a value."""

    value: Fraction
    slack: Fraction


def phi_slack(n: int, ell: int) -> Fraction:
    return Fraction(2, ell ** (n + 1))


def phi_step_bound(upper: Mapping[tuple[str, int], Fraction], n: int, ell: int) -> dict[tuple[str, int], Bound]:
    """``μ^{(n)}(C_k) <= μ^{(n+1/(n+2))}(D_k) + 2/ℓ^{n+1}`` and the barred analogue."""
    slack = phi_slack(n, ell)
    out = {}
    for (kind, k), m in upper.items():
        if kind in ("D", "Dbar"):
            out[("C" if kind == "D" else "Cbar", k)] = Bound(m + slack, slack)
    return out


# --- empirical oracle ----------------------------------------------------------------------


def empirical_return_mass(prefix: Sequence[str], h: int, k: int) -> Fraction:
    """Fraction of positions ``t`` with ``w[t:t+k] == w[t+h:t+h+k]``."""
    w = tuple(prefix)
    if h < 1 or k < 1:
        raise ValueError("shift and word length must be positive")
    n = len(w) - h - k + 1
    if n < 1:
        raise ValueError(f"prefix of length {len(w)} is too short for h={h}, k={k}")
    hits = sum(1 for t in range(n) if w[t : t + k] == w[t + h : t + h + k])
    return Fraction(hits, n)
