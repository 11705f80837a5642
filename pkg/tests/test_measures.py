from fractions import Fraction

import pytest

from sadic_rigidity.measures import (
    LevelMeasure,
    MeasureError,
    empirical_measure,
    glued_ergodic_measure,
    measure_csv,
    pushforward_letter_to_letter,
    required_order,
    round_mantissa,
    substitution_measure,
    transfer_down,
)
from sadic_rigidity.morphisms import (
    Morphism,
    essential_occurrences,
    length4_taus,
    identity,
    materialize,
    on_pair,
    parse_morphism,
    thue_morse,
    zeta,
)
from sadic_rigidity.sadic import length4_example, glued_powers
from sadic_rigidity.words import AB, all_words, glued_alphabet


def _oracle_transfer(sigma, mu, k):
    """The transfer formula evaluated literally with essential occurrences."""
    ell = len(sigma)
    out = {}
    support = [w for w in mu.masses if mu.masses[w]]
    for j in range(1, k + 1):
        for u in all_words(sigma.target, j):
            s = sum(essential_occurrences(sigma, w, u) * mu.masses[w] for w in support
                    if len(w) <= required_order(j, ell))
            if s:
                out[u] = Fraction(s) / ell
    return out


def test_uniform_letters_through_zeta6():
    mu = LevelMeasure(None, 1, AB, {("a",): Fraction(1, 2), ("b",): Fraction(1, 2)})
    low = transfer_down(zeta(6), mu, 1)
    assert low[("a",)] == Fraction(1, 6) * (5 * Fraction(1, 2) + Fraction(1, 2))


def test_transfer_matches_literal_formula():
    tau = parse_morphism("a -> aab; b -> bab")
    mu = substitution_measure(thue_morse(), 4)
    for k in (1, 2, 3, 5, 7):
        low = transfer_down(tau, mu, k)
        assert dict(low.masses) == _oracle_transfer(tau, mu, k)


def test_insufficient_order_is_reported():
    mu = substitution_measure(zeta(6), 2)
    with pytest.raises(MeasureError, match="order 3 is required"):
        transfer_down(zeta(6), mu, 9)
    bad = LevelMeasure(None, 1, AB, {("a",): Fraction(1, 2)})
    with pytest.raises(MeasureError):
        transfer_down(zeta(6), bad, 1)


def test_fixed_point_property():
    nu = substitution_measure(zeta(6), 5)
    assert dict(transfer_down(zeta(6), nu, 5).masses) == dict(nu.masses)
    tm = substitution_measure(thue_morse(), 6)
    assert dict(transfer_down(thue_morse(), tm, 6).masses) == dict(tm.masses)


def test_substitution_measure_values():
    nu = substitution_measure(zeta(6), 3)
    assert nu[("a",)] == nu[("b",)] == Fraction(1, 2)
    assert nu[("a", "a")] + nu[("b", "b")] == Fraction(5, 7)
    nu.check()
    tm = substitution_measure(thue_morse(), 2)
    assert tm[("a", "a")] + tm[("b", "b")] == Fraction(1, 3)
    with pytest.raises(MeasureError):
        substitution_measure(parse_morphism("a -> aa; b -> bb"), 2)


def test_substitution_measure_against_long_prefix():
    tau = Morphism(AB, AB, (tuple("aba"), tuple("bba")))
    nu = substitution_measure(tau, 3)
    w = materialize([tau] * 10, "a")
    emp = empirical_measure(w, 3)
    assert max(abs(emp[u] - nu[u]) for u in set(emp.masses) | set(nu.masses)) < 1e-3


def test_lag_table_matches_words():
    nu = substitution_measure(zeta(3), 6, lags=5)
    for h in range(1, 6):
        for x in AB:
            for y in AB:
                words = sum(m for w, m in nu.masses.items() if len(w) == h + 1 and w[0] == x and w[-1] == y)
                assert nu.lags[h - 1, AB.index(x), AB.index(y)] == words


def test_pushforward():
    ab = glued_alphabet(2)
    phi = Morphism(ab, AB, (("a",), ("b",), ("a",), ("b",)))
    g = glued_ergodic_measure(length4_example(), 0, 2, k=2).measure
    p = pushforward_letter_to_letter(phi, g)
    assert p.total(1) == 1 and p.total(2) == 1
    same = pushforward_letter_to_letter(identity(ab), g)
    assert dict(same.masses) == dict(g.masses)
    with pytest.raises(MeasureError):
        pushforward_letter_to_letter(zeta(2), substitution_measure(zeta(2), 2))


def test_one_substitution_factor_map():
    # both components carry the same substitution: each ergodic measure projects to ν
    ds = glued_powers([zeta(4), zeta(4)], [2, 2], name="same")
    ab = ds.alphabet
    phi = Morphism(ab, AB, (("a",), ("b",), ("a",), ("b",)))
    nu = substitution_measure(zeta(4), 3)
    for i in range(2):
        p = pushforward_letter_to_letter(phi, glued_ergodic_measure(ds, i, 4, k=3).measure)
        assert max(abs(p[w] - nu[w]) for w in nu.masses) < 1e-6


def test_single_component_is_exact():
    ds = glued_powers([zeta(4)], [2], name="single")
    g = glued_ergodic_measure(ds, 0, 1, k=3)
    nu = substitution_measure(on_pair(zeta(4), 0), 3)
    assert dict(g.measure.masses) == dict(nu.masses)
    assert g.certificate == 0 and g.foreign_mass == 0


def test_length4_example_convergence_and_maximizer():
    ds = length4_example()
    t1 = length4_taus()[1]
    nu = substitution_measure(t1, 2)
    g = glued_ergodic_measure(ds, 1, 6, k=2)
    assert g.converged and g.maximizer_ok
    assert abs(g.measure[("a_1", "a_1")] - nu[("a_1", "a_1")]) < 1e-4
    early = glued_ergodic_measure(ds, 0, 0, k=1)
    late = glued_ergodic_measure(ds, 0, 8, k=1)
    assert late.foreign_mass < early.foreign_mass
    assert late.measure[("a_0",)] + late.measure[("b_0",)] > 1 - 1e-5


def test_foreign_mass_bound():
    ds = length4_example()
    for n in range(2, 7):
        g = glued_ergodic_measure(ds, 0, n, k=1)
        assert g.foreign_mass <= Fraction(2, 4**n)


def test_empirical_measure():
    emp = empirical_measure(("a",) * 10, 3)
    assert emp[("a",)] == 1 and emp[("a", "a", "a")] == 1
    emp.check()
    with pytest.raises(MeasureError):
        empirical_measure("ab", 3)


def test_empirical_converges_with_depth():
    z = zeta(6)
    nu = substitution_measure(z, 3)
    devs = []
    for depth in (4, 5, 6):
        emp = empirical_measure(materialize([z] * depth, "a"), 3)
        devs.append(max(abs(emp[u] - nu[u]) for u in set(emp.masses) | set(nu.masses)))
    assert devs[0] > devs[1] > devs[2]


def test_length4_example_empirical_letters():
    ds = length4_example()
    w = materialize(ds.chain(0, 3), "a_0")
    assert len(w) == 4096
    emp = empirical_measure(w, 1, ds.alphabet)
    g = glued_ergodic_measure(ds, 0, 0, k=1).measure
    assert all(abs(emp[(c,)] - g[(c,)]) < 0.1 for c in ds.alphabet)


def test_csv_layout():
    text = measure_csv([substitution_measure(thue_morse(), 2).at_level(0)])
    lines = text.splitlines()
    assert lines[0] == "level,word,numerator,denominator"
    assert lines[1] == "0,a,1,2" and lines[3] == "0,aa,1,6"
    approx = LevelMeasure(0, 1, AB, {("a",): Fraction(1, 3), ("b",): Fraction(2, 3)}, error_bound=Fraction(1, 10**30))
    assert measure_csv([approx]).splitlines()[0] == "level,word,value,error_bound"


def test_mantissa_rounding():
    x = Fraction(1, 3)
    r = round_mantissa(x, 20)
    assert abs(r - x) <= x / 2**19
    assert round_mantissa(Fraction(0)) == 0


def test_bit_budget_switches_to_rounded():
    nu = substitution_measure(zeta(6), 3)
    low = transfer_down(zeta(6), nu, 3, bit_budget=1)
    assert not low.exact
    assert max(abs(low[w] - nu[w]) for w in nu.masses) <= low.error_bound
    low.check()
