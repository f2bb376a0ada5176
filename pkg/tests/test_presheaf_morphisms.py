from fractions import Fraction
from itertools import permutations

import pytest

from app import default_functor_homs
from src.bundles import PAULI, fan_involution
from src.context_poset import ContextPoset, context_from_involutions, full_abelian_poset, trivial_context
from src.errors import CorruptPosetError, MissingContextError, NotComposableError, ObjectMismatchError
from src.exact_arith import BlockMatrix
from src.presheaf_morphisms import (
    BaseMap,
    check_naturality,
    compose_base_maps,
    compose_copresheaf_morphisms,
    compose_presheaf_morphisms,
    dualize_copresheaf_morphism,
    functor_B_check,
    functor_S_check,
    identity_base_map,
    identity_copresheaf_morphism,
    identity_morphism,
    induce_base_map,
    induce_copresheaf_morphism,
    induce_presheaf_morphism,
    invert_presheaf_isomorphism,
    is_presheaf_isomorphism,
    make_presheaf_morphism,
    naturality_witness,
)
from src.spectral_presheaf import bohrification_for, presheaf_for
from src.star_algebra import (
    compose_hom,
    diagonal_embedding,
    identity_hom,
    inner_automorphism,
    permutation_hom,
    projection_hom,
)


def _sigma(n):
    return presheaf_for(full_abelian_poset(n))


def test_identity_hom_induces_identity(c3):
    sigma = presheaf_for(c3)
    assert induce_presheaf_morphism(identity_hom(c3.algebra), sigma, sigma) == identity_morphism(sigma)


def test_embedding_base_map_sends_partitions_to_pulled_back_partitions():
    h = diagonal_embedding(2, (1, 2))
    base = induce_base_map(h, full_abelian_poset(2), full_abelian_poset(3))
    assert base.is_monotone()
    target = full_abelian_poset(3)
    assert base(0) == 0
    # the finest context of C^2 goes to the partition {0 | 12} of C^3
    assert len(target.contexts[base(1)]) == 2


def test_induced_morphism_is_natural_and_mono():
    h = diagonal_embedding(2, (1, 2))
    m = induce_presheaf_morphism(h, _sigma(2), _sigma(3))
    assert check_naturality(m)
    assert not is_presheaf_isomorphism(m)
    # components are onto the characters of the source context
    for c, table in enumerate(m.components):
        assert set(table) == set(range(m.lower.components[c]))


def test_non_injective_hom_induces_a_morphism():
    h = projection_hom(3, (0,))
    m = induce_presheaf_morphism(h, _sigma(3), _sigma(1))
    assert check_naturality(m)
    assert set(m.base.table) == {0}


def test_contravariance_on_embedding_chain():
    f = diagonal_embedding(2, (1, 2))
    g = diagonal_embedding(3, (1, 1, 2))
    s_f = induce_presheaf_morphism(f, _sigma(2), _sigma(3))
    s_g = induce_presheaf_morphism(g, _sigma(3), _sigma(4))
    s_gf = induce_presheaf_morphism(compose_hom(g, f), _sigma(2), _sigma(4))
    assert compose_presheaf_morphisms(s_f, s_g) == s_gf
    with pytest.raises(NotComposableError):
        compose_presheaf_morphisms(s_g, s_f)


def test_automorphisms_of_c3_embed_and_reverse_composition(c3):
    sigma = presheaf_for(c3)
    homs = [permutation_hom(3, p) for p in permutations(range(3))]
    induced = [induce_presheaf_morphism(h, sigma, sigma) for h in homs]
    assert all(is_presheaf_isomorphism(m) for m in induced)
    assert len({(m.base.table, m.components) for m in induced}) == 6
    for g, s_g in zip(homs, induced):
        for h, s_h in zip(homs, induced):
            assert induce_presheaf_morphism(compose_hom(g, h), sigma, sigma) == compose_presheaf_morphisms(s_h, s_g)


def test_inverse_isomorphism(c3):
    sigma = presheaf_for(c3)
    m = induce_presheaf_morphism(permutation_hom(3, (1, 2, 0)), sigma, sigma)
    inverse = invert_presheaf_isomorphism(m)
    assert compose_presheaf_morphisms(m, inverse) == identity_morphism(sigma)
    assert compose_presheaf_morphisms(inverse, m) == identity_morphism(sigma)


def test_missing_image_context(m2):
    z = context_from_involutions(m2, [fan_involution(0, 1)])
    x = context_from_involutions(m2, [fan_involution(1, 0)])
    poset = ContextPoset.from_contexts(m2, [trivial_context(m2), z])
    target = ContextPoset.from_contexts(m2, [trivial_context(m2), z, x])
    # Ad(Y) and Ad(X) fix the Z context
    assert induce_base_map(inner_automorphism(m2, PAULI["Y"]), poset, target).table == (0, 1)
    assert induce_base_map(inner_automorphism(m2, PAULI["X"]), poset, poset).table == (0, 1)
    rotation = BlockMatrix.from_rows([[Fraction(3, 5), Fraction(-4, 5)], [Fraction(4, 5), Fraction(3, 5)]])
    with pytest.raises(MissingContextError):
        induce_base_map(inner_automorphism(m2, rotation), poset, target)


def test_induce_checks_algebras(c3):
    with pytest.raises(ObjectMismatchError):
        induce_base_map(identity_hom(full_abelian_poset(2).algebra), c3, c3)


def test_naturality_witness_flags_broken_component(c3):
    sigma = presheaf_for(c3)
    top = len(c3) - 1
    components = [tuple(range(n)) for n in sigma.components]
    components[top] = (1, 0, 2)
    m = make_presheaf_morphism(identity_base_map(c3), components, sigma, sigma)
    witness = naturality_witness(m)
    assert witness is not None and witness[1] == top


def test_component_count_checked(c3):
    with pytest.raises(CorruptPosetError):
        make_presheaf_morphism(identity_base_map(c3), [(0,)])


def test_base_map_bounds(c3):
    with pytest.raises(CorruptPosetError):
        BaseMap(c3, c3, (0, 1, 2, 3, 9))
    with pytest.raises(NotComposableError):
        compose_base_maps(identity_base_map(c3), identity_base_map(full_abelian_poset(2)))


def test_copresheaf_morphism_dualizes_to_presheaf_morphism():
    h = diagonal_embedding(3, (2, 1, 1))
    bohr_a, bohr_b = bohrification_for(full_abelian_poset(3)), bohrification_for(full_abelian_poset(4))
    n = induce_copresheaf_morphism(h, bohr_a, bohr_b)
    s = induce_presheaf_morphism(h, _sigma(3), _sigma(4))
    assert dualize_copresheaf_morphism(n, _sigma(3), _sigma(4)) == s


def test_copresheaf_composition_is_covariant():
    f = diagonal_embedding(2, (1, 2))
    g = diagonal_embedding(3, (1, 1, 2))
    b2, b3, b4 = (bohrification_for(full_abelian_poset(n)) for n in (2, 3, 4))
    b_f = induce_copresheaf_morphism(f, b2, b3)
    b_g = induce_copresheaf_morphism(g, b3, b4)
    assert compose_copresheaf_morphisms(b_g, b_f) == induce_copresheaf_morphism(compose_hom(g, f), b2, b4)
    assert induce_copresheaf_morphism(identity_hom(b3.poset.algebra), b3, b3) == identity_copresheaf_morphism(b3)


def test_functor_checks_on_default_homs():
    homs = default_functor_homs()
    s_report = functor_S_check(homs)
    b_report = functor_B_check(homs)
    assert s_report.passed, s_report.failures()
    assert b_report.passed, b_report.failures()


def test_functor_check_needs_posets_for_matrix_algebras(m2):
    with pytest.raises(MissingContextError):
        functor_S_check([identity_hom(m2)])
