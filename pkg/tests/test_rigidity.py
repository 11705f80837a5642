import json
from fractions import Fraction

import pytest

from sadic_rigidity.measures import (
    LevelMeasure,
    MeasureError,
    glued_ergodic_measure,
    substitution_measure,
    transfer_down,
)
from sadic_rigidity.morphisms import length4_taus, materialize, parse_morphism, thue_morse, zeta
from sadic_rigidity.rigidity import (
    RateError,
    best_k,
    complete_mass,
    d_recurrence_step,
    delta_estimate,
    empirical_return_mass,
    lower_bound,
    phi_slack,
    phi_step_bound,
    r_coefficients,
    reports_csv,
    reports_json,
    set_mass,
    upper_bound,
)
from sadic_rigidity.sadic import (
    DecomposedSequence,
    QIndex,
    constant_sequence,
    decomposition_morphisms,
    desk_variant,
    length4_example,
)
from sadic_rigidity.words import AB


def test_complete_mass_values():
    assert complete_mass(substitution_measure(zeta(6), 2), 2) == Fraction(5, 7)
    tm = substitution_measure(thue_morse(), 4)
    assert complete_mass(tm, 2) == Fraction(1, 3)
    assert complete_mass(tm, 4) == Fraction(2, 3)
    with pytest.raises(MeasureError):
        complete_mass(tm, 5)


def test_complete_plus_cross_is_one():
    for tau in (zeta(3), thue_morse(), parse_morphism("a -> aba; b -> bba")):
        nu = substitution_measure(tau, 5)
        for k in range(2, 6):
            assert complete_mass(nu, k) + complete_mass(nu, k, cross=True) == 1


def test_lag_route_equals_word_route():
    nu_words = substitution_measure(zeta(4), 6)
    nu_lags = substitution_measure(zeta(4), 1, lags=5)
    for k in range(2, 7):
        assert complete_mass(nu_words, k) == complete_mass(nu_lags, k)


def test_constant_zeta_report():
    r = delta_estimate(constant_sequence(zeta(6)))
    assert r.rate == Fraction(5, 7) and r.k == 2 and r.rigidity_sequence == "6^n"
    assert all(e.mass == Fraction(5, 7) for e in r.estimates)
    assert [e.time for e in r.estimates] == [1, 6, 36]
    tm = delta_estimate(constant_sequence(thue_morse()))
    assert tm.rate == Fraction(2, 3) and tm.k == 4 and tm.rigidity_sequence == "3·2^n"
    assert tm.estimates[1].time == 6


def test_tie_break_smallest_k():
    assert best_k({2: Fraction(1, 2), 3: Fraction(1, 2), 4: Fraction(1, 3)}) == (2, Fraction(1, 2))
    assert best_k({2: Fraction(1, 3), 3: Fraction(1, 2)})[0] == 3


def test_bounds():
    assert lower_bound(zeta(8)) == Fraction(7, 9)
    assert lower_bound([zeta(6).power(2)]) == Fraction(5, 7)
    assert lower_bound(zeta(8), k_max=8) == Fraction(7, 9)
    assert upper_bound(zeta(6)) == Fraction(5, 7)
    assert upper_bound(thue_morse()) == Fraction(2, 3)
    with pytest.raises(RateError):
        upper_bound(parse_morphism("a -> aab; b -> abb"))


def test_upper_bound_scan_never_exceeds_k2():
    nu = substitution_measure(zeta(6), 1, lags=35)
    k2 = complete_mass(nu, 2)
    assert all(complete_mass(nu, k) <= k2 and complete_mass(nu, k, cross=True) <= k2 for k in range(2, 37))


def test_r_coefficients_hand_values():
    c = r_coefficients(length4_taus()[0])
    assert c.get(1)[0] == 1 and c.get(2)[0] == 0 and c.get(4) == (4, 0)
    c1 = r_coefficients(length4_taus()[1])
    assert c1.get(4) == (4, 0)
    for j in range(1, 5):
        r, rt = c1.get(j)
        assert 0 <= r <= j and 0 <= rt <= 4 - j
    with pytest.raises(RateError):
        r_coefficients(parse_morphism("a -> ab; b -> bb"))


def test_recurrence_trivial_cases():
    c = r_coefficients(length4_taus()[0])
    up = {("D", 2): Fraction(1, 3), ("D", 3): Fraction(1, 4),
          ("Dbar", 2): Fraction(1, 5), ("Dbar", 3): Fraction(1, 6)}
    out = d_recurrence_step("rho", c, up, 1)
    assert out[("D", 4 + 4 + 1)] == up[("D", 3)]
    with pytest.raises(RateError):
        d_recurrence_step("rho", c, {("D", 2): 0}, 1)


@pytest.fixture(scope="module")
def decomposed():
    taus = length4_taus()
    return DecomposedSequence(taus, decomposition_morphisms(taus))


def test_recurrence_equals_transfer(decomposed):
    coeffs = r_coefficients(length4_taus()[0])
    for q in (QIndex(1, 1), QIndex(1, 2), QIndex(2, 1)):
        up = glued_ergodic_measure(decomposed, 0, q.succ(), k=3, depth=5, maximizer_check=False).measure
        low = transfer_down(decomposed.morphism_at(q), up, 9, level=q)
        same, other = ("D", "Dbar") if q.kind == "rho" else ("C", "Cbar")
        for k in (0, 1):
            upper = {(s, m): set_mass(up, 0, m, s) for s in (same, other) for m in (k + 1, k + 2)}
            for (s, m), v in d_recurrence_step(q.kind, coeffs, upper, k).items():
                assert set_mass(low, 0, m, s) == v
                # the unshifted length does not satisfy the identity
            assert any(set_mass(low, 0, m - 1, s) != v
                       for (s, m), v in d_recurrence_step(q.kind, coeffs, upper, k).items())


def test_phi_bound_holds(decomposed):
    for n in (1, 2):
        up = glued_ergodic_measure(decomposed, 0, QIndex(n, 1), k=4, depth=5, maximizer_check=False).measure
        low = transfer_down(decomposed.morphism_at(QIndex(n)), up, 4)
        b = phi_step_bound({(s, k): set_mass(up, 0, k, s) for s in ("D", "Dbar") for k in range(2, 5)}, n, 4)
        for (s, k), bound in b.items():
            assert set_mass(low, 0, k, s) <= bound.value
            assert bound.slack == phi_slack(n, 4) == Fraction(2, 4 ** (n + 1))


def test_glued_estimates_and_sandwich():
    ds = desk_variant()
    r = delta_estimate(ds, 0, levels=(2, 3))
    assert r.k == 2 and r.rigidity_sequence == "h^(n)"
    assert abs(r.rate - Fraction(5, 7)) < 1e-9 and r.sandwich()
    assert r.estimates[1].time == ds.height(3)


def test_length4_example_rate_between_bounds():
    r = delta_estimate(length4_example(), 0, levels=(15, 16))
    assert r.lower_bound == lower_bound(length4_taus()[0])
    assert r.sandwich()


def test_report_serialization():
    r = delta_estimate(constant_sequence(zeta(6)))
    data = json.loads(reports_json([r]))
    assert data[0]["rate"] == {"num": 5, "den": 7}
    assert reports_csv([r]).splitlines()[0] == "component,level,k,numerator,denominator,value,time"


def test_empirical_return_mass():
    w = ("a", "b") * 50
    assert empirical_return_mass(w, 2, 2) == 1
    z = materialize([zeta(6)] * 6, "a")
    matched = empirical_return_mass(z, 6**4, 2)
    assert abs(matched - Fraction(5, 7)) < 5e-2
    assert empirical_return_mass(z, 6**4 + 1, 2) < matched
    with pytest.raises(ValueError):
        empirical_return_mass(w, 99, 2)


def test_set_mass_letters():
    mu = LevelMeasure(None, 1, AB, {("a",): Fraction(1)})
    with pytest.raises(RateError):
        set_mass(mu, 0, 2, "D")
