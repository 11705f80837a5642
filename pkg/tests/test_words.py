from fractions import Fraction

import pytest

from sadic_rigidity.words import (
    AB,
    Alphabet,
    AlphabetError,
    all_words,
    complement,
    complete_words,
    count_occurrences,
    cross_complete_words,
    factor_counts,
    format_word,
    frequency,
    glued_alphabet,
    glued_symbol,
    pair_alphabet,
    parse_glued_symbol,
    parse_word,
)


def test_glued_alphabet_order():
    assert glued_alphabet(2).symbols == ("a_0", "b_0", "a_1", "b_1")
    primed = glued_alphabet(2, primed=True)
    assert primed.symbols[4:] == ("a'_0", "b'_0", "a'_1", "b'_1")
    assert len(primed) == 8


def test_parse_glued_symbol_roundtrip():
    for s in glued_alphabet(3, primed=True):
        role, i, primed = parse_glued_symbol(s)
        assert glued_symbol(role, i, primed) == s
    with pytest.raises(AlphabetError):
        parse_glued_symbol("c_0")


def test_parse_and_format():
    assert parse_word("abba") == ("a", "b", "b", "a")
    assert parse_word("a_0.b_1") == ("a_0", "b_1")
    assert parse_word("ε") == ()
    assert format_word(("a", "b")) == "ab"
    assert format_word(("a_0", "b'_1")) == "a_0.b'_1"
    with pytest.raises(AlphabetError):
        parse_word("abc", AB)


def test_occurrences_overlap():
    assert count_occurrences("aaaa", "aa") == 3
    assert frequency("ab", "abab") == Fraction(1, 2)
    counts = factor_counts("abab", 2)
    assert counts[("a", "b")] == 2 and counts[("b", "a")] == 1 and counts[("a",)] == 2


def test_complete_and_cross_complete_partition():
    for k in range(2, 6):
        comp = set(complete_words(AB, k))
        cross = set(cross_complete_words(AB, k))
        assert comp.isdisjoint(cross)
        assert comp | cross == set(all_words(AB, k))
    with pytest.raises(ValueError):
        cross_complete_words(glued_alphabet(2), 2)


def test_complement_needs_two_letters():
    assert complement("aab", AB) == ("b", "b", "a")
    assert complement(("a_1", "b_1"), pair_alphabet(1)) == ("b_1", "a_1")
    with pytest.raises(ValueError):
        complement(("a_0",), glued_alphabet(2))


def test_alphabet_validation():
    with pytest.raises(AlphabetError):
        Alphabet(("a", "a"))
    assert glued_alphabet(2).complement_map()["a_1"] == "b_1"
    assert AB.sorted([("b",), ("a", "b"), ("a",)]) == [("a",), ("b",), ("a", "b")]
