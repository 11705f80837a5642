"""Randomized structural properties of measures and glued substitutions."""

from fractions import Fraction

from hypothesis import given, settings
from hypothesis import strategies as st

from sadic_rigidity.measures import substitution_measure, transfer_down
from sadic_rigidity.morphisms import Morphism, glue, is_left_permutative, is_mirror, is_primitive, on_pair
from sadic_rigidity.sadic import glued_powers, is_primitive_sequence
from sadic_rigidity.words import AB, complement


@st.composite
def constant_length_substitutions(draw, min_len=2, max_len=5):
    ell = draw(st.integers(min_value=min_len, max_value=max_len))
    a = tuple(draw(st.lists(st.sampled_from("ab"), min_size=ell, max_size=ell)))
    b = tuple(draw(st.lists(st.sampled_from("ab"), min_size=ell, max_size=ell)))
    return Morphism(AB, AB, (a, b))


@st.composite
def mirror_substitutions(draw, ell=None):
    if ell is None:
        ell = draw(st.integers(min_value=3, max_value=6))
    middle = draw(st.lists(st.sampled_from("ab"), min_size=ell - 2, max_size=ell - 2))
    if "b" not in middle:
        middle[draw(st.integers(min_value=0, max_value=ell - 3))] = "b"
    a = ("a",) + tuple(middle) + ("a",)
    return Morphism(AB, AB, (a, complement(a, AB)))


def _consistent(mu):
    mu.check()
    for j in range(1, mu.order + 1):
        assert mu.total(j) == 1


@settings(max_examples=40)
@given(st.lists(constant_length_substitutions(), min_size=5, max_size=5), mirror_substitutions())
def test_chained_transfers_conserve_mass(chain, top):
    mu = substitution_measure(top, 4)
    for sigma in chain:
        mu = transfer_down(sigma, mu, 4)
        assert mu.exact
        _consistent(mu)


@settings(max_examples=60)
@given(mirror_substitutions())
def test_mirror_symmetry(tau):
    assert is_mirror(tau) and is_primitive(tau)
    nu = substitution_measure(tau, 4)
    for w, m in nu.masses.items():
        assert nu[complement(w, AB)] == m


@settings(max_examples=60)
@given(st.integers(min_value=1, max_value=4), st.integers(min_value=3, max_value=5), st.data())
def test_glued_left_permutative_and_positive(d, ell, data):
    taus = [on_pair(data.draw(mirror_substitutions(ell)), i) for i in range(d)]
    g = glue(taus)
    assert is_left_permutative(g)
    ds = glued_powers(taus, name="random")
    for n in range(2):
        assert is_primitive_sequence(ds, n)


@settings(max_examples=40)
@given(mirror_substitutions())
def test_fixed_point_of_own_transfer(tau):
    nu = substitution_measure(tau, 5)
    assert dict(transfer_down(tau, nu, 5).masses) == dict(nu.masses)
    assert sum(nu[(c,)] for c in AB) == Fraction(1)
