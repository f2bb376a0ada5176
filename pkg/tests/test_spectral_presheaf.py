import pytest

from src.bundles import load_bundle
from src.context_poset import ContextPoset, full_abelian_poset, partition_context
from src.exact_arith import BlockMatrix
from src.spectral_presheaf import (
    GlobalSection,
    build_bohrification,
    build_presheaf,
    check_bohrification_duality,
    check_functoriality,
    check_surjectivity,
    global_sections,
    global_sections_bruteforce,
    is_global_section,
    local_duality_roundtrip,
    presheaf_for,
    pullback_presheaf,
    restrict_sections,
)
from src.star_algebra import abelian_algebra

BUNDLES = ['c2', 'c3', 'c4', 'm2fan', 'mermin']


@pytest.fixture(scope="module", params=BUNDLES)
def bundled(request):
    return load_bundle(request.param).poset


def test_components_are_atom_counts(c3):
    sigma = build_presheaf(c3)
    assert sigma.components == (1, 2, 2, 2, 3)


def test_restriction_sends_atoms_to_the_block_above():
    c3 = abelian_algebra(3)
    coarse = partition_context(c3, [[0, 1], [2]])
    fine = partition_context(c3, [[0], [1], [2]])
    poset = ContextPoset.from_contexts(c3, [coarse, fine, partition_context(c3, [[0, 1, 2]])])
    sigma = build_presheaf(poset)
    small, big = poset.index(coarse), poset.index(fine)
    table = sigma.restrictions[(small, big)]
    point = [fine.atoms.index(BlockMatrix.diagonal([int(i == k) for i in range(3)])) for k in range(3)]
    # points 0 and 1 lie in the same block of the coarse context
    assert table[point[0]] == table[point[1]] != table[point[2]]
    assert coarse.atoms[table[point[2]]] == BlockMatrix.diagonal([0, 0, 1])


def test_laws_on_bundled_posets(bundled):
    sigma = build_presheaf(bundled)
    assert check_functoriality(sigma).passed
    assert check_surjectivity(sigma).passed
    assert check_bohrification_duality(sigma, build_bohrification(bundled)).passed


def test_local_duality_on_bundled_posets(bundled):
    assert all(local_duality_roundtrip(c) for c in bundled.contexts)


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_full_abelian_sections_are_points(n):
    sigma = presheaf_for(full_abelian_poset(n))
    sections = global_sections(sigma)
    assert len(sections) == n
    assert sections == global_sections_bruteforce(sigma)
    assert all(is_global_section(sigma, s.assignment) for s in sections)
    # each section is determined by its value on the top context
    assert sorted(s.assignment[-1] for s in sections) == list(range(n))


def test_mermin_has_no_global_section(mermin):
    sigma = presheaf_for(mermin)
    assert global_sections(sigma) == []
    assert global_sections_bruteforce(sigma) == []


def test_fan_sections_are_independent_choices(fan):
    sigma = presheaf_for(fan)
    sections = global_sections(sigma)
    assert len(sections) == 8
    assert sections == global_sections_bruteforce(sigma)


def test_is_global_section_rejects_partial_and_inconsistent(c3):
    sigma = presheaf_for(c3)
    assert not is_global_section(sigma, [0, 0, 0, 0, None])
    good = global_sections(sigma)[0].assignment
    bad = list(good)
    bad[1] = 1 - bad[1]
    assert not is_global_section(sigma, bad)


def test_restricted_sections_stay_sections(c4):
    larger = presheaf_for(c4)
    algebra = c4.algebra
    smaller = build_presheaf(ContextPoset.from_contexts(algebra, [
        partition_context(algebra, [[0, 1, 2, 3]]),
        partition_context(algebra, [[0, 1], [2, 3]]),
        partition_context(algebra, [[0], [1], [2], [3]]),
    ]))
    restricted = restrict_sections(global_sections(larger), larger, smaller)
    assert len(set(restricted)) == 4
    assert all(is_global_section(smaller, s.assignment) for s in restricted)
    assert set(restricted) == set(global_sections(smaller))


def test_pullback_along_identity(c3):
    sigma = presheaf_for(c3)
    assert pullback_presheaf(tuple(range(len(c3))), c3, sigma) == sigma


def test_global_section_is_a_value():
    assert GlobalSection((0, 1)) == GlobalSection((0, 1))
