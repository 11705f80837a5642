import pytest

from sadic_rigidity.blocks import BlockStats
from sadic_rigidity.morphisms import (
    GluedPower,
    MaterializationError,
    MorphismError,
    compose,
    composition_matrix,
    essential_occurrences,
    length4_taus,
    glue,
    is_left_permutative,
    is_mirror,
    is_positive,
    is_primitive,
    is_prolongable,
    kappa,
    materialize,
    on_pair,
    parse_morphism,
    thue_morse,
    zeta,
)
from sadic_rigidity.words import AB, glued_alphabet, parse_word


def test_zeta_images():
    z = zeta(6)
    assert z["a"] == tuple("aaaaab") and z["b"] == tuple("bbbbba")
    assert zeta(3, long=True)["a"] == tuple("aaab")
    assert thue_morse()["a"] == ("a", "b")
    with pytest.raises(MorphismError):
        zeta(1)


def test_parse_literal_roundtrip():
    t = parse_morphism("a -> ab\nb -> ba")
    assert t == thue_morse()
    assert parse_morphism(t.to_literal()) == t
    with pytest.raises(MorphismError):
        parse_morphism("a -> ab; a -> ba")
    with pytest.raises(MorphismError):
        parse_morphism("a ab")


def test_composition_matrix_and_compose():
    z = zeta(6)
    m = composition_matrix(z)
    assert m["a", "a"] == 5 and m["b", "a"] == 1
    assert (composition_matrix(compose(z, z)).tolist()
            == (m @ m).tolist())
    assert z.power(2)["a"] == z(z["a"])


def test_predicates():
    z = zeta(6)
    assert is_positive(z) and is_primitive(z) and is_mirror(z)
    assert not is_prolongable(z)
    assert is_prolongable(z.power(2))
    assert is_left_permutative(z)
    t0, t1 = length4_taus()
    assert is_prolongable(t0) and not is_prolongable(t1)
    assert is_mirror(t1)
    assert not is_primitive(parse_morphism("a -> aa; b -> bb"))


def test_essential_occurrences_hand_count():
    tm = thue_morse()
    # σ(ab) = abba: 'bb' straddles the two images, 'ab' sits inside σ(a)
    assert essential_occurrences(tm, "ab", "bb") == 1
    assert essential_occurrences(tm, "ab", "ab") == 0
    assert essential_occurrences(tm, "a", "ab") == 1


def test_kappa_and_glue():
    lam = glued_alphabet(2)
    assert kappa(("a_0", "b_0"), lam) == ("a_0", "b_1")
    assert kappa(("a_1",), lam) == ("a_0",)
    t0, t1 = length4_taus()
    g = glue([t0, t1])
    assert g["a_0"] == parse_word("a_0.b_0.b_0.a_1")
    assert g["b_1"] == parse_word("b_1.a_1.a_1.a_0")


def test_glued_power_matches_materialized():
    t0, t1 = length4_taus()
    gp = GluedPower([t0, t1], [3, 3])
    lit = gp.materialize()
    assert lit == glue([t0.power(3), t1.power(3)])
    base = {x: BlockStats.letter(x, 4) for x in gp.source}
    stats = gp.image_stats(base)
    for c in gp.source:
        assert stats[c] == BlockStats.from_word(lit[c], 4)


def test_glued_power_rejects_unequal_lengths():
    with pytest.raises(MorphismError):
        GluedPower([on_pair(zeta(2), 0), on_pair(zeta(3), 1)], [1, 1])


def test_materialize_limit():
    with pytest.raises(MaterializationError):
        materialize([zeta(6)] * 10, "a", limit=1000)
    assert len(materialize([zeta(6)] * 3, "a")) == 216
    assert materialize([], "a") == ("a",)
    assert AB.check(materialize([thue_morse()] * 2, "a")) == tuple("abba")
