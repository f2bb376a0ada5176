from itertools import product

import pytest
from hypothesis import given
from hypothesis import strategies as st

from src.bundles import PAULI, fan_involution, pauli
from src.context_poset import (
    Context,
    ContextPoset,
    closure,
    context_from_involutions,
    context_from_projections,
    contains_projection,
    full_abelian_poset,
    intersect,
    is_subcontext,
    order_automorphisms,
    partition_context,
    set_partitions,
    trivial_context,
)
from src.errors import (
    ContextInvariantError,
    NonCommutingError,
    NotAProjectionError,
    ObjectMismatchError,
    SizeBoundError,
)
from src.exact_arith import BlockMatrix
from src.star_algebra import abelian_algebra, matrix_algebra

BELL = {1: 1, 2: 2, 3: 5, 4: 15, 5: 52}


def _partitions_by_brute_force(n):
    """Label sequences in restricted-growth form, one per set partition."""
    count = 0
    for labels in product(range(n), repeat=n):
        if all(labels[i] <= max(labels[:i], default=-1) + 1 for i in range(n)):
            count += 1
    return count


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_full_abelian_poset_has_bell_many_contexts(n):
    poset = full_abelian_poset(n)
    assert len(poset) == BELL[n]
    assert len(list(set_partitions(n))) == _partitions_by_brute_force(n) == BELL[n]


def test_full_abelian_poset_shape(c3):
    assert c3.contexts[0] == trivial_context(c3.algebra)
    assert c3.maximal() == [len(c3) - 1]
    assert len(c3.contexts[-1]) == 3
    # the three two-block partitions sit between bottom and top
    assert [c3.rank(i) for i in range(len(c3))] == [0, 1, 1, 1, 2]
    assert len(c3.covers()) == 6


def test_full_abelian_poset_matches_generic_construction(c4):
    rebuilt = ContextPoset.from_contexts(c4.algebra, list(c4.contexts))
    assert rebuilt == c4


def test_full_abelian_bound(clean_env):
    with pytest.raises(SizeBoundError):
        full_abelian_poset(0)
    clean_env.setenv("SPECPRESHEAF_MAX_FULL_ABELIAN", "2")
    with pytest.raises(SizeBoundError):
        full_abelian_poset(3)


def test_context_invariants():
    c2 = abelian_algebra(2)
    with pytest.raises(ContextInvariantError):
        Context.of(c2, [])
    with pytest.raises(ContextInvariantError) as info:
        Context.of(c2, [BlockMatrix.diagonal([1, 0])])
    assert 'residual' in info.value.witness
    with pytest.raises(ContextInvariantError):
        Context.of(c2, [BlockMatrix.diagonal([1, 0]), BlockMatrix.diagonal([1, 1])])
    with pytest.raises(NotAProjectionError):
        Context.of(c2, [BlockMatrix.diagonal([2, 0]), BlockMatrix.diagonal([-1, 1])])


def test_context_is_canonical():
    c2 = abelian_algebra(2)
    e1, e2 = BlockMatrix.diagonal([1, 0]), BlockMatrix.diagonal([0, 1])
    assert Context.of(c2, [e1, e2]) == Context.of(c2, [e2, e1])
    assert hash(Context.of(c2, [e1, e2])) == hash(Context.of(c2, [e2, e1]))


def test_context_from_projections_refines():
    c3 = abelian_algebra(3)
    context = context_from_projections(c3, [BlockMatrix.diagonal([1, 1, 0]), BlockMatrix.diagonal([0, 1, 1])])
    assert len(context) == 3


def test_context_from_projections_rejects_noncommuting(m2):
    p = BlockMatrix.from_rows([[1, 0], [0, 0]])
    q = BlockMatrix.from_rows([["1/2", "1/2"], ["1/2", "1/2"]])
    with pytest.raises(NonCommutingError):
        context_from_projections(m2, [p, q])


def test_context_from_involutions(m2):
    context = context_from_involutions(m2, [PAULI['Z']])
    assert set(context.atoms) == {BlockMatrix.from_rows([[1, 0], [0, 0]]), BlockMatrix.from_rows([[0, 0], [0, 1]])}
    with pytest.raises(NotAProjectionError):
        context_from_involutions(m2, [BlockMatrix.from_rows([[1, 1], [0, 1]])])


def test_mermin_rows_are_maximal_contexts():
    m4 = matrix_algebra(4)
    row = context_from_involutions(m4, [pauli(w) for w in ('XI', 'IX', 'XX')])
    assert len(row) == 4
    assert contains_projection(row, m4.unit())


def test_intersect_of_partitions():
    c3 = abelian_algebra(3)
    a = partition_context(c3, [[0, 1], [2]])
    b = partition_context(c3, [[0], [1, 2]])
    assert intersect(a, b) == trivial_context(c3)
    fine = partition_context(c3, [[0], [1], [2]])
    assert intersect(a, fine) == a
    assert is_subcontext(a, fine) and not is_subcontext(fine, a)


def test_intersect_of_noncommuting_contexts_is_trivial(m2):
    z = context_from_involutions(m2, [fan_involution(0, 1)])
    x = context_from_involutions(m2, [fan_involution(1, 0)])
    assert intersect(z, x) == trivial_context(m2)


def test_intersect_across_algebras():
    with pytest.raises(ObjectMismatchError):
        intersect(trivial_context(abelian_algebra(2)), trivial_context(abelian_algebra(3)))


def test_closure_is_a_fixed_point(mermin):
    again = closure(mermin.algebra, list(mermin.contexts))
    assert again == mermin


def test_mermin_closure_counts(mermin):
    assert len(mermin) == 16
    maximal = mermin.maximal()
    assert len(maximal) == 6
    assert all(len(mermin.contexts[m]) == 4 for m in maximal)
    assert sum(1 for c in mermin.contexts if len(c) == 2) == 9


def test_closure_size_bound(clean_env, m2):
    clean_env.setenv("SPECPRESHEAF_MAX_CONTEXTS", "2")
    generators = [context_from_involutions(m2, [fan_involution(0, 1)]),
                  context_from_involutions(m2, [fan_involution(1, 0)])]
    with pytest.raises(SizeBoundError):
        closure(m2, generators)


def test_meet_index(c3):
    top = len(c3) - 1
    for i in range(len(c3)):
        assert c3.meet(i, top) == i
        assert c3.meet(i, 0) == 0


@pytest.mark.parametrize("n, expected", [(2, 1), (3, 6), (4, 24)])
def test_order_automorphisms_of_full_posets(n, expected):
    tables = order_automorphisms(full_abelian_poset(n))
    assert len(tables) == expected
    assert tables[0] == tuple(range(len(tables[0])))


def test_order_automorphisms_form_a_group(c3):
    tables = set(order_automorphisms(c3))
    for f in tables:
        assert tuple(sorted(range(len(f)), key=lambda i: f[i])) in tables
        for g in tables:
            assert tuple(g[f[i]] for i in range(len(f))) in tables


def test_order_automorphisms_of_fan_and_mermin(fan, mermin):
    assert len(order_automorphisms(fan)) == 6
    assert len(order_automorphisms(mermin)) == 72


def test_automorphism_search_bound(clean_env, c4):
    clean_env.setenv("SPECPRESHEAF_MAX_AUTOMORPHISM_CONTEXTS", "10")
    with pytest.raises(SizeBoundError):
        order_automorphisms(c4)


def test_hasse_diagram(c3):
    graph = c3.hasse_diagram()
    assert graph.number_of_nodes() == 5
    assert set(graph.edges()) == set(c3.covers())


PARTITION_CONTEXTS = [partition_context(abelian_algebra(4), p) for p in set_partitions(4)]
partition_contexts = st.sampled_from(PARTITION_CONTEXTS)


@given(partition_contexts, partition_contexts, partition_contexts)
def test_intersect_is_commutative_and_associative(a, b, c):
    assert intersect(a, b) == intersect(b, a)
    assert intersect(intersect(a, b), c) == intersect(a, intersect(b, c))
    assert intersect(a, a) == a
