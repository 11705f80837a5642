"""Named verification checks bundled by ``sadic-rigidity verify``."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

from .measures import (
    empirical_measure,
    glued_ergodic_measure,
    substitution_measure,
    transfer_down,
)
from .morphisms import length4_taus, materialize, thue_morse, zeta
from .rigidity import (
    complete_mass,
    d_recurrence_step,
    delta_estimate,
    empirical_return_mass,
    phi_slack,
    phi_step_bound,
    r_coefficients,
    set_mass,
    zeta_rate,
)
from .sadic import (
    DecomposedSequence,
    QIndex,
    bkk_check,
    constant_sequence,
    decomposition_morphisms,
    desk_variant,
    length4_example,
)
from .words import parse_glued_symbol


@dataclass
class CheckResult:
    name: str
    passed: bool = True
    lines: list[str] = field(default_factory=list)
    seconds: float = 0.0

    def record(self, ok: bool, line: str) -> None:
        self.passed &= bool(ok)
        self.lines.append(("ok   " if ok else "FAIL ") + line)


def _zeta_closed_form(res: CheckResult, Ls: Sequence[int] = (6, 8, 10, 12), **_) -> None:
    for L in Ls:
        t = time.perf_counter()
        r = delta_estimate(constant_sequence(zeta(L)))
        dt = time.perf_counter() - t
        res.record(r.rate == zeta_rate(L) and r.k == 2 and r.rigidity_sequence == f"{L}^n" and dt < 5,
                   f"L={L}: rate {r.rate} (closed form {zeta_rate(L)}), k={r.k}, "
                   f"sequence {r.rigidity_sequence}, {dt:.2f}s")


def _thue_morse(res: CheckResult, **_) -> None:
    r = delta_estimate(constant_sequence(thue_morse()))
    m2 = complete_mass(substitution_measure(thue_morse(), 2), 2)
    res.record(r.rate == Fraction(2, 3) and r.k == 4, f"rate {r.rate}, k={r.k}, sequence {r.rigidity_sequence}")
    res.record(m2 == Fraction(1, 3), f"k=2 complete mass {m2}")


def _gluing_convergence(res: CheckResult, system=None, levels=(6, 8, 10), **_) -> None:
    ds = system if system is not None else length4_example()
    for i in range(ds.d):
        nu = substitution_measure(ds.taus[i], 3)
        for n in levels:
            g = glued_ergodic_measure(ds, i, n, k=3)
            mu = g.measure
            own = {w for w in mu.masses if all(parse_glued_symbol(s)[1] == i for s in w)} | set(nu.masses)
            dev = max(abs(mu[w] - nu[w]) for w in own)
            res.record(dev < Fraction(1, 10**4) and g.foreign_mass < Fraction(1, 10**3),
                       f"i={i} n={n}: max |μ_i - ν_i| = {float(dev):.3g} over |w| <= 3, "
                       f"foreign mass {float(g.foreign_mass):.3g}")


def _distinct_rates(res: CheckResult, levels=(2, 3), **_) -> None:
    ds = desk_variant()
    for i, target in ((0, Fraction(5, 7)), (1, Fraction(35, 37))):
        r = delta_estimate(ds, i, levels=levels)
        err = abs(r.rate - target)
        res.record(err < Fraction(1, 10**3) and r.k == 2,
                   f"i={i}: estimate {float(r.rate):.12f}, target {target}, |diff| {float(err):.3g}, "
                   f"k={r.k}, sequence {r.rigidity_sequence}")


def _bkk(res: CheckResult, system=None, **_) -> None:
    systems = [system] if system is not None else [length4_example(), desk_variant()]
    for ds in systems:
        for i in range(ds.d):
            rep = bkk_check(ds, i, 0, 6)
            res.record(rep.all_match,
                       f"{ds.name} i={i}: foreign = 2/|σ_n| and deficit = 1/|σ_n| for n = 0..6")


def _recurrence(res: CheckResult, **_) -> None:
    taus = length4_taus()
    dsq = DecomposedSequence(taus, decomposition_morphisms(taus), name="length-4 pair")
    coeffs = r_coefficients(taus[0])
    ell = coeffs.length
    for q in (QIndex(1, 1), QIndex(1, 2), QIndex(2, 1), QIndex(2, 2), QIndex(2, 3)):
        up = glued_ergodic_measure(dsq, 0, q.succ(), k=3, depth=6, maximizer_check=False).measure
        low = transfer_down(dsq.morphism_at(q), up, 2 * ell + 1, level=q)
        same, other = ("D", "Dbar") if q.kind == "rho" else ("C", "Cbar")
        ok = True
        for k in (0, 1):
            upper = {(s, m): set_mass(up, 0, m, s) for s in (same, other) for m in (k + 1, k + 2)}
            for (s, m), v in d_recurrence_step(q.kind, coeffs, upper, k).items():
                ok &= set_mass(low, 0, m, s) == v
        res.record(ok, f"q={q} ({q.kind}): recurrence equals transfer for k in {{0,1}}, j = 1..{ell}")
    for n in (1, 2):
        up = glued_ergodic_measure(dsq, 0, QIndex(n, 1), k=ell, depth=6, maximizer_check=False).measure
        low = transfer_down(dsq.morphism_at(QIndex(n)), up, ell)
        bounds = phi_step_bound({(s, k): set_mass(up, 0, k, s) for s in ("D", "Dbar")
                                 for k in range(2, ell + 1)}, n, ell)
        ok = all(set_mass(low, 0, k, s) <= b.value for (s, k), b in bounds.items())
        res.record(ok, f"n={n}: C-masses within D-masses + {phi_slack(n, ell)}")


def _empirical(res: CheckResult, **_) -> None:
    z = zeta(6)
    w = materialize([z] * 6, "a")
    emp = empirical_measure(w, 3)
    nu = substitution_measure(z, 3)
    dev = max(abs(emp[u] - nu[u]) for u in set(emp.masses) | set(nu.masses))
    res.record(dev < Fraction(1, 100), f"max |empirical - ν| over |w| <= 3 on ζ_6^6(a): {float(dev):.4f}")
    ret = empirical_return_mass(w, 6**4, 2)
    res.record(abs(ret - Fraction(5, 7)) < Fraction(5, 100),
               f"return mass at h=6^4, k=2: {float(ret):.5f} (target 5/7)")


CHECKS: dict[str, Callable] = {
    "zeta-closed-form": _zeta_closed_form,
    "thue-morse": _thue_morse,
    "gluing-convergence": _gluing_convergence,
    "distinct-rates": _distinct_rates,
    "bkk": _bkk,
    "recurrence-equivalence": _recurrence,
    "empirical-oracle": _empirical,
}


def run_check(name: str, **kwargs) -> CheckResult:
    if name not in CHECKS:
        raise KeyError(name)
    res = CheckResult(name)
    t = time.perf_counter()
    CHECKS[name](res, **kwargs)
    res.seconds = time.perf_counter() - t
    return res
