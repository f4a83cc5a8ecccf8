from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from nilfill import catalog
from nilfill.bch import (BCHError, GroupElement, bch, bch_dynkin, commutator, inv, mul, pow, simple_commutator)
from nilfill.liealg import lower_central_series

small = st.fractions(min_value=-2, max_value=2, max_denominator=5)


def vec(dim):
    return st.lists(small, min_size=dim, max_size=dim)


CATALOG = [catalog.model_filiform(5), catalog.corner_filiform(6), catalog.l55(), catalog.heisenberg(2),
           catalog.k7("2/3"), catalog.product_of("L55xL32"), catalog.product_of("L57xL43")]


def test_bch_l55_fixture():
    A = catalog.l55()
    assert bch(A, A.unit(0), A.unit(1)) == [1, 1, Fraction(1, 2), Fraction(1, 12), 0]


def test_bch_abelian_is_sum():
    A = catalog.abelian(3)
    assert bch(A, [1, 2, 3], [Fraction(1, 2), 0, -1]) == [Fraction(3, 2), 2, 2]


@settings(max_examples=40, deadline=None)
@given(small, small)
def test_bch_heisenberg_closed_form(a, b):
    A = catalog.model_filiform(3)
    assert bch(A, [a, 0, 0], [0, b, 0]) == [a, b, a * b / 2]


@pytest.mark.parametrize("A", [A for A in CATALOG if A.nilpotency_class <= 5], ids=lambda A: A.name)
@settings(max_examples=6, deadline=None)
@given(data=st.data())
def test_bch_matches_dynkin_oracle(A, data):
    X, Y = data.draw(vec(A.dim)), data.draw(vec(A.dim))
    assert bch(A, X, Y) == bch_dynkin(A, X, Y)


@pytest.mark.parametrize("A", CATALOG, ids=lambda A: A.name)
@settings(max_examples=15, deadline=None)
@given(data=st.data())
def test_bch_edge_identities(A, data):
    X = data.draw(vec(A.dim))
    assert bch(A, X, A.zero()) == list(X)
    assert bch(A, X, [-x for x in X]) == A.zero()


@pytest.mark.parametrize("A", CATALOG, ids=lambda A: A.name)
@settings(max_examples=20, deadline=None)
@given(data=st.data())
def test_associativity(A, data):
    g, h, k = (GroupElement.make(A, data.draw(vec(A.dim))) for _ in range(3))
    assert mul(mul(g, h), k) == mul(g, mul(h, k))


@settings(max_examples=30, deadline=None)
@given(vec(7), small, small)
def test_pow_is_one_parameter(v, a, b):
    A = catalog.k7("2/3")
    g = GroupElement.make(A, v)
    assert pow(g, a + b) == mul(pow(g, a), pow(g, b))
    assert pow(g, 1) == g
    assert pow(g, 0).is_identity()
    assert mul(g, inv(g)).is_identity()


@settings(max_examples=30, deadline=None)
@given(vec(7), vec(7))
def test_conjugation_keeps_central_coordinate(v, w):
    A = catalog.product_of("L55xL32")
    z = A.center
    g, h = GroupElement.make(A, v), GroupElement.make(A, w)
    central = GroupElement.exp_basis(A, z, w[z])
    assert mul(mul(inv(g), central), g) == central
    assert mul(mul(inv(h), g), h).coords[0] == g.coords[0]


def test_half_powers():
    A = catalog.model_filiform(4)
    x1 = GroupElement.exp_basis(A, 0)
    half = pow(x1, Fraction(1, 2))
    assert mul(half, half) == x1


@pytest.mark.parametrize("p", range(5, 9))
def test_corner_commutator_x2_x3(p):
    A = catalog.corner_filiform(p)
    x2, x3 = GroupElement.exp_basis(A, 1), GroupElement.exp_basis(A, 2)
    assert commutator(x2, x3) == GroupElement.exp_basis(A, p - 1)


def test_commutator_with_identity():
    A = catalog.l55()
    g = GroupElement.make(A, [1, 2, 3, 4, 5])
    assert commutator(g, GroupElement.identity(A)).is_identity()


@settings(max_examples=30, deadline=None)
@given(small)
def test_heisenberg_commutator_of_powers(s):
    A = catalog.model_filiform(3)
    x, y = GroupElement.exp_basis(A, 0, s), GroupElement.exp_basis(A, 1, s)
    assert commutator(x, y) == GroupElement.exp_basis(A, 2, s * s)


@pytest.mark.parametrize("k", [2, 3, 4, 5])
@pytest.mark.parametrize("s", [1, Fraction(3, 2), 2, Fraction(-1, 3)])
def test_k_fold_commutator_scales(k, s):
    A = catalog.model_filiform(k + 1)
    gs = [GroupElement.exp_basis(A, 0, s)] * (k - 1) + [GroupElement.exp_basis(A, 1, s)]
    assert simple_commutator(gs) == GroupElement.exp_basis(A, k, s ** k)


def test_simple_commutator_needs_two():
    A = catalog.model_filiform(3)
    with pytest.raises(BCHError):
        simple_commutator([GroupElement.identity(A)])


def test_mixed_groups_rejected():
    a, b = catalog.model_filiform(3), catalog.model_filiform(3)
    with pytest.raises(BCHError):
        mul(GroupElement.identity(a), GroupElement.identity(b))


@pytest.mark.parametrize("p", range(5, 9))
def test_log_of_iterated_generators_in_corner(p):
    A = catalog.corner_filiform(p)
    x1 = GroupElement.exp_basis(A, 0)
    xi = GroupElement.exp_basis(A, 1)
    for i in range(2, p):
        xi = commutator(x1, xi)
        lead = next(j for j, c in enumerate(xi.coords) if c)
        assert lead == i and xi.coords[i] == 1


@pytest.mark.parametrize("name,A", [("l6", catalog.model_filiform(6)), ("l55", catalog.l55())])
@settings(max_examples=10, deadline=None)
@given(data=st.data())
def test_truncation_commutes_with_projection(name, A, data):
    # in these algebras each C^j is spanned by trailing basis vectors, so projection drops coordinates
    from nilfill.liealg import quotient
    X, Y = data.draw(vec(A.dim)), data.draw(vec(A.dim))
    Z = bch(A, X, Y)
    for S in lower_central_series(A)[1:-1]:
        drop = {next(i for i, x in enumerate(v) if x) for v in S.basis}
        assert all(sum(1 for x in v if x) == 1 for v in S.basis)
        Q = quotient(A, S.basis)
        keep = [i for i in range(A.dim) if i not in drop]
        assert bch(Q, [X[i] for i in keep], [Y[i] for i in keep]) == [Z[i] for i in keep]
