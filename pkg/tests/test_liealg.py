from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from nilfill import catalog
from nilfill.cohomology import betti_numbers
from nilfill.liealg import (LieAlgebra, LieAlgebraError, Subspace, carnot_graded, center, central_product,
                            direct_sum, lower_central_series, quotient, rank_one_adjoint_witness, validate)

small = st.fractions(min_value=-3, max_value=3, max_denominator=4)


def catalog_algebras():
    out = [catalog.model_filiform(p) for p in range(3, 9)]
    out += [catalog.corner_filiform(p) for p in range(5, 9)]
    out += [catalog.l55(), catalog.heisenberg(2), catalog.k7("2/3"), catalog.j_km(4, 2)]
    out += [catalog.product_of(name) for name, _ in catalog.TABLE1[:8]]
    return out


def series_dims(A):
    return [S.dim for S in lower_central_series(A)]


def test_filiform_brackets():
    l5 = catalog.model_filiform(5)
    assert l5.bracket(l5.unit(0), l5.unit(2)) == l5.unit(3)
    c5 = catalog.corner_filiform(5)
    assert c5.bracket(c5.unit(1), c5.unit(2)) == c5.unit(4)


@settings(max_examples=30, deadline=None)
@given(st.lists(small, min_size=7, max_size=7))
def test_bracket_antisymmetric(u):
    A = catalog.k7("2/3")
    assert A.bracket(u, u) == A.zero()


@pytest.mark.parametrize("A", catalog_algebras(), ids=lambda A: A.name)
def test_catalog_algebras_validate(A):
    assert validate(A).ok


def test_validate_k7_two_thirds_all_triples():
    # brute-force oracle over every basis triple
    A = catalog.k7(Fraction(2, 3))
    from itertools import combinations
    for i, j, k in combinations(range(7), 3):
        a, b, c = A.unit(i), A.unit(j), A.unit(k)
        s = [x + y + z for x, y, z in zip(A.bracket(a, A.bracket(b, c)), A.bracket(b, A.bracket(c, a)),
                                          A.bracket(c, A.bracket(a, b)))]
        assert not any(s)
    assert validate(A).ok


def test_validate_reports_first_bad_triple():
    c5 = catalog.corner_filiform(5)
    br = dict(c5.brackets)
    br[(1, 3)] = {4: 1}
    bad = LieAlgebra(c5.basis, br)
    rep = validate(bad)
    assert not rep.ok
    # by hand: [X2,[X3,X1]] = -[X2,X4] = -X5 and the other two terms vanish
    assert rep.triple == (1, 2, 3)
    assert rep.jacobiator == [0, 0, 0, 0, -1]


@settings(max_examples=20, deadline=None)
@given(st.lists(small, min_size=21, max_size=21))
def test_jacobi_on_random_vectors(xs):
    A = catalog.product_of("L55xL32")
    u, v, w = xs[:7], xs[7:14], xs[14:]
    s = [a + b + c for a, b, c in zip(A.bracket(u, A.bracket(v, w)), A.bracket(v, A.bracket(w, u)),
                                      A.bracket(w, A.bracket(u, v)))]
    assert not any(s)


@pytest.mark.parametrize("k", range(2, 8))
def test_filiform_class(k):
    assert catalog.model_filiform(k + 1).nilpotency_class == k


def test_abelian_series():
    A = catalog.abelian(3)
    assert series_dims(A) == [3, 0]
    assert A.nilpotency_class == 1


def test_g_lambda_class_seven():
    assert catalog.g_lambda("2/3").nilpotency_class == 7


def test_centers():
    for p in range(3, 9):
        Z = center(catalog.model_filiform(p))
        assert Z.dim == 1 and Z.contains(catalog.model_filiform(p).unit(p - 1))
    L = catalog.l55()
    assert center(L).dim == 1 and center(L).contains(L.unit(3))
    assert center(catalog.heisenberg(3)).dim == 1


def test_central_products():
    H5 = central_product(catalog.model_filiform(3), catalog.model_filiform(3))
    assert H5.dim == 5 and center(H5).dim == 1 and H5.nilpotency_class == 2
    assert betti_numbers(H5) == betti_numbers(catalog.heisenberg(2))
    G = central_product(catalog.model_filiform(5), catalog.model_filiform(3))
    assert G.dim == 7 and G.nilpotency_class == 4
    L = catalog.l55()
    assert central_product(L, catalog.model_filiform(3)).dim == L.dim + 2


@pytest.mark.parametrize("p,q", [(p, q) for p in range(3, 9) for q in range(3, p + 1)])
def test_central_product_invariants(p, q):
    A, B = catalog.model_filiform(p), catalog.model_filiform(q)
    G = central_product(A, B)
    assert center(G).dim == 1
    assert G.nilpotency_class == max(A.nilpotency_class, B.nilpotency_class)


def test_central_product_rejects_noncentral_designation():
    A = catalog.model_filiform(4)
    B = LieAlgebra(["a", "b", "c"], {(0, 1): {2: 1}}, center=0)
    with pytest.raises(LieAlgebraError):
        central_product(A, B)


def test_carnot_graded_of_filiform_is_itself():
    for p in range(3, 8):
        A = catalog.model_filiform(p)
        gr = carnot_graded(A)
        assert sorted(gr.brackets.items()) == sorted(A.brackets.items())


def test_carnot_graded_l5_times_l3():
    G = catalog.product_of("L57xL32")
    gr = carnot_graded(G)
    target = direct_sum(catalog.model_filiform(5), catalog.abelian(2))
    assert validate(gr).ok
    assert series_dims(gr) == series_dims(target)
    assert betti_numbers(gr) == betti_numbers(target)


@pytest.mark.parametrize("k,m", [(3, 2), (4, 2), (5, 3)])
def test_carnot_graded_jkm(k, m):
    target = direct_sum(catalog.model_filiform(k + 1), catalog.abelian(2 * m))
    for A in (catalog.j_km(k, m), catalog.j_corner_km(k, m)):
        gr = carnot_graded(A)
        assert series_dims(gr) == series_dims(target)
        assert betti_numbers(gr) == betti_numbers(target)


@pytest.mark.parametrize("A", catalog_algebras()[:12], ids=lambda A: A.name)
def test_carnot_graded_properties(A):
    gr = carnot_graded(A)
    assert gr.dim == A.dim
    assert series_dims(gr) == series_dims(A)
    assert validate(gr).ok
    again = carnot_graded(gr)
    assert again.brackets == gr.brackets


def test_quotients():
    for p in range(4, 8):
        A = catalog.model_filiform(p)
        Q = quotient(A, [A.unit(p - 1)])
        assert Q.brackets == catalog.model_filiform(p - 1).brackets
    A = catalog.model_filiform(4)
    assert direct_sum(A, LieAlgebra([], {})).brackets == A.brackets
    with pytest.raises(LieAlgebraError):
        quotient(A, [A.unit(1)])


def test_quotient_of_direct_sum_is_central_product():
    K, L = catalog.l55(), catalog.model_filiform(3)
    S = direct_sum(K, L)
    diff = [0] * S.dim
    diff[3], diff[K.dim + 2] = 1, -1
    Q = quotient(S, [diff])
    C = central_product(K, L)
    assert Q.dim == C.dim
    # the quotient keeps Y3 (last) as the central vector where the product keeps X4
    order = [0, 1, 2, 6, 3, 4, 5]
    relabel = {q: c for c, q in enumerate(order)}
    moved = {tuple(sorted((relabel[i], relabel[j]))): {relabel[k]: v for k, v in cs.items()}
             for (i, j), cs in Q.brackets.items()}
    assert moved == C.brackets


def test_rank_one_adjoint_witness():
    l6 = catalog.model_filiform(6)
    assert rank_one_adjoint_witness(l6) == l6.unit(1)
    assert rank_one_adjoint_witness(catalog.corner_filiform(6)) is None
    assert rank_one_adjoint_witness(catalog.abelian(3)) is None


def test_json_roundtrip():
    A = catalog.product_of("L55xL43")
    B = LieAlgebra.from_json(A.to_json())
    assert B.brackets == A.brackets and B.basis == A.basis and B.weights == A.weights
    assert A.to_json()["brackets"][0]["i"] >= 1


def test_subspace_span():
    S = Subspace.span(3, [[1, 0, 0], [2, 0, 0], [0, 1, 1]])
    assert S.dim == 2
    assert S.contains([3, 1, 1]) and not S.contains([0, 0, 1])
