from fractions import Fraction

import pytest

from sadic_rigidity.morphisms import (
    length4_taus,
    materialize,
    thue_morse,
    zeta,
)
from sadic_rigidity.sadic import (
    DecomposedSequence,
    InsufficientDepth,
    QIndex,
    SequenceError,
    bkk_check,
    complexity,
    constant_sequence,
    decompose,
    decomposition_morphisms,
    desk_variant,
    length4_example,
    glued_powers,
    is_left_permutative_sequence,
    is_primitive_sequence,
    language,
    final_family,
    q_levels,
)
from sadic_rigidity.words import factor_counts


def test_qindex_order_matches_value():
    qs = q_levels(QIndex(0), QIndex(4))
    assert [q.value for q in qs] == sorted(q.value for q in qs)
    assert [str(q) for q in qs[:4]] == ["0", "0+1/2", "1", "1+1/3"]
    assert QIndex(2, 3).kind == "psi" and QIndex(2, 1).kind == "rho" and QIndex(2).kind == "phi"
    assert QIndex(2, 3).succ() == QIndex(3)
    assert QIndex(3).pred() == QIndex(2, 3)
    with pytest.raises(SequenceError):
        QIndex(1, 3)


def test_level_lengths():
    ds = desk_variant()
    assert [ds.length_at(n) for n in range(3)] == [1296, 1296**2, 1296**3]
    assert ds.exponents(0) == (4, 2)
    pf = final_family()
    assert pf.length_at(0) == 6**8 and pf.exponents(1) == (8, 4)
    assert length4_example().length_at(5) == 4**6


def test_strict_rejects_non_prolongable_component():
    with pytest.raises(SequenceError):
        glued_powers(length4_taus())
    with pytest.raises(SequenceError):
        glued_powers([zeta(6), zeta(36)])  # unequal lengths


def test_decomposition_identity():
    ds = glued_powers([zeta(6), zeta(6)], [2, 2], name="zz")
    dec = decompose(ds)
    for n in range(3):
        assert dec.integer_morphism(n) == ds.morphism_at(n).materialize()


def test_decomposition_on_length4_example_first_component():
    taus = length4_taus()
    dsq = DecomposedSequence(taus, decomposition_morphisms(taus))
    ex = length4_example()
    for n in range(3):
        lit = ex.morphism_at(n).materialize()
        comp = dsq.integer_morphism(n)
        assert comp["a_0"] == lit["a_0"] and comp["b_0"] == lit["b_0"]
    with pytest.raises(SequenceError):
        decompose(ex)


def test_language_against_materialized_word():
    cs = constant_sequence(zeta(6))
    w = materialize([zeta(6)] * 5, "a") + materialize([zeta(6)] * 5, "b")
    for m in range(1, 5):
        want = {u for u in factor_counts(w, m)}
        assert language(cs, 0, m) == want
    assert complexity(constant_sequence(thue_morse()), 0, 6) == [2, 4, 6, 10, 12, 16]
    with pytest.raises(InsufficientDepth):
        language(cs, 0, 5, N=1)


def test_bkk_closed_forms():
    for ds in (length4_example(), desk_variant()):
        for i in range(2):
            rep = bkk_check(ds, i, 0, 3)
            assert rep.all_match
            assert rep.rows[1].foreign == Fraction(2, ds.length_at(1))
    one = glued_powers([zeta(4)], [2], name="single")
    rows = bkk_check(one, 0, 0, 2).rows
    assert all(r.foreign == 0 and r.foreign_closed == 0 for r in rows)


def test_glued_structure_predicates():
    ds = length4_example()
    assert is_primitive_sequence(ds, 0)
    assert is_left_permutative_sequence(ds, 0)
