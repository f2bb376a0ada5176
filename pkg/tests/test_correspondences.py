from fractions import Fraction

import pytest

from src.bundles import (
    PAULI,
    coordinate_permutations,
    fan_patchwork,
    m2_candidate_automorphisms,
)
from src.context_poset import ContextPoset, full_abelian_poset, order_automorphisms, partition_context, trivial_context
from src.correspondences import (
    ADDITIVE_ON_SPAN,
    JORDAN_PER_CONTEXT,
    LatticeIso,
    PartialAlgebraIso,
    QuasiJordanIso,
    aut_groups,
    atom_permutation_iso,
    check_lattice_iso,
    check_orthomodular,
    compose_partial_isos,
    context_jordan_failure,
    copresheaf_iso_from_partial_iso,
    extend_lattice_iso,
    identity_partial_iso,
    invert_partial_iso,
    is_partial_iso,
    lattice_for,
    lattice_iso_from_partial_iso,
    make_partial_iso,
    natural_families,
    order_iso_to_partial_iso_search,
    partial_iso_from_jordan_map,
    partial_iso_from_presheaf_iso,
    presheaf_iso_from_partial_iso,
    presheaf_isomorphisms_over,
    structure_witness,
    verify_quasi_jordan,
)
from src.errors import (
    LatticeLawError,
    MissingContextError,
    NotAnIsomorphismError,
    NotComposableError,
    ObjectMismatchError,
)
from src.exact_arith import BlockMatrix, GaussianRational
from src.presheaf_morphisms import (
    BaseMap,
    compose_presheaf_morphisms,
    copresheaf_naturality_witness,
    identity_base_map,
    induce_presheaf_morphism,
)
from src.spectral_presheaf import presheaf_for
from src.star_algebra import (
    abelian_algebra,
    diagonal_embedding,
    inner_automorphism,
    permutation_hom,
    transpose_map,
)


def _order_automorphisms(poset):
    return [BaseMap(poset, poset, table) for table in order_automorphisms(poset)]


def _cycle(poset):
    n = len(poset.algebra.shape)
    return partial_iso_from_jordan_map(permutation_hom(n, [(i + 1) % n for i in range(n)]), poset, poset)


# natural families

@pytest.mark.parametrize("n", [3, 4])
def test_each_order_automorphism_has_exactly_one_family(n):
    poset = full_abelian_poset(n)
    for gamma in _order_automorphisms(poset):
        families = natural_families(gamma)
        assert len(families) == 1
        assert order_iso_to_partial_iso_search(gamma) == families[0]


def test_c2_identity_carries_two_families(c2):
    families = natural_families(identity_base_map(c2))
    assert len(families) == 2
    assert identity_partial_iso(c2) in families


def test_fan_identity_carries_a_swap_per_context(fan):
    assert len(natural_families(identity_base_map(fan))) == 8


def test_mermin_identity_carries_pauli_many_families(mermin):
    assert len(natural_families(identity_base_map(mermin))) == 16


def test_search_fails_on_mismatched_atom_counts():
    c2, c3 = abelian_algebra(2), abelian_algebra(3)
    chain2 = ContextPoset.from_contexts(c2, [trivial_context(c2), partition_context(c2, [[0], [1]])])
    chain3 = ContextPoset.from_contexts(c3, [trivial_context(c3), partition_context(c3, [[0], [1], [2]])])
    gamma = BaseMap(chain2, chain3, (0, 1))
    assert gamma.is_order_isomorphism()
    assert natural_families(gamma) == []
    assert order_iso_to_partial_iso_search(gamma) is None


def test_search_needs_an_order_isomorphism(c3):
    with pytest.raises(NotAnIsomorphismError):
        natural_families(BaseMap(c3, c3, (0, 0, 0, 0, 0)))


def test_presheaf_search_agrees_with_family_search(fan, c3):
    for poset in (fan, c3):
        for gamma in _order_automorphisms(poset):
            assert len(presheaf_isomorphisms_over(gamma)) == len(natural_families(gamma))


# partial isomorphisms

def test_cycle_acts_on_elements(c3):
    t = _cycle(c3)
    assert is_partial_iso(t)
    assert t(BlockMatrix.diagonal([5, 6, 7])) == BlockMatrix.diagonal([7, 5, 6])
    assert structure_witness(t) is None


def test_apply_outside_stored_contexts(fan):
    t = identity_partial_iso(fan)
    with pytest.raises(MissingContextError):
        t(PAULI['Y'])
    with pytest.raises(MissingContextError):
        t.apply_in(0, PAULI['Z'])


def test_make_partial_iso_rejects_unnatural_family(c3):
    kappa = [tuple(range(len(c))) for c in c3.contexts]
    kappa[-1] = (1, 0, 2)
    with pytest.raises(NotAnIsomorphismError) as info:
        make_partial_iso(identity_base_map(c3), kappa)
    assert info.value.witness[1] == len(c3) - 1


def test_compose_and_invert(c4):
    t = _cycle(c4)
    inverse = invert_partial_iso(t)
    assert compose_partial_isos(t, inverse) == identity_partial_iso(c4)
    assert compose_partial_isos(inverse, t) == identity_partial_iso(c4)
    with pytest.raises(NotComposableError):
        compose_partial_isos(t, identity_partial_iso(full_abelian_poset(3)))


def test_presheaf_roundtrips_over_c4_automorphisms(c4):
    sigma = presheaf_for(c4)
    for gamma in _order_automorphisms(c4):
        t = natural_families(gamma)[0]
        m = presheaf_iso_from_partial_iso(t)
        assert partial_iso_from_presheaf_iso(m) == t
        assert presheaf_iso_from_partial_iso(partial_iso_from_presheaf_iso(m)) == m
        assert m.lower == sigma


def test_presheaf_partial_bijection_reverses_composition(c3):
    families = [natural_families(g)[0] for g in _order_automorphisms(c3)]
    for g in families:
        for h in families:
            composite = presheaf_iso_from_partial_iso(compose_partial_isos(g, h))
            assert composite.base.table == compose_partial_isos(g, h).base.table
            assert composite == compose_presheaf_morphisms(presheaf_iso_from_partial_iso(h),
                                                           presheaf_iso_from_partial_iso(g))


def test_non_isomorphism_rejected(c2, c3):
    embedding = induce_presheaf_morphism(diagonal_embedding(2, (1, 2)), presheaf_for(c2), presheaf_for(c3))
    with pytest.raises(NotAnIsomorphismError):
        partial_iso_from_presheaf_iso(embedding)


def test_copresheaf_isos_are_natural(fan):
    for t in natural_families(identity_base_map(fan)):
        assert copresheaf_naturality_witness(copresheaf_iso_from_partial_iso(t)) is None


def test_transpose_restricts_to_identity(fan, m2):
    assert partial_iso_from_jordan_map(transpose_map(m2), fan, fan) == identity_partial_iso(fan)


def test_rotation_leaves_the_fan(fan, m2):
    rotation = BlockMatrix.from_rows([[Fraction(3, 5), Fraction(-4, 5)], [Fraction(4, 5), Fraction(3, 5)]])
    with pytest.raises(MissingContextError):
        partial_iso_from_jordan_map(inner_automorphism(m2, rotation), fan, fan)


# lattices

@pytest.mark.parametrize("fixture, size", [("c3", 8), ("c4", 16), ("fan", 8), ("mermin", 68)])
def test_lattice_sizes_and_laws(request, fixture, size):
    poset = request.getfixturevalue(fixture)
    lattice = lattice_for(poset)
    assert len(lattice) == size
    assert lattice.elements[lattice.zero].is_zero()
    assert lattice.elements[lattice.one] == poset.algebra.unit()
    report = check_orthomodular(lattice)
    assert report.passed, report.failures()


def test_lattice_roundtrips_over_c3(c3):
    for gamma in _order_automorphisms(c3):
        t = natural_families(gamma)[0]
        l = lattice_iso_from_partial_iso(t)
        assert check_lattice_iso(l)
        assert extend_lattice_iso(l, c3, c3) == t


def test_check_lattice_iso_names_failing_pair(c3):
    lattice = lattice_for(c3)
    n = len(lattice)
    table = list(range(n))
    table[0], table[n - 1] = n - 1, 0
    with pytest.raises(LatticeLawError) as info:
        check_lattice_iso(LatticeIso(lattice, lattice, tuple(table)))
    assert info.value.witness['pair'] == [0, 1]

    collapsed = tuple([0] * n)
    with pytest.raises(LatticeLawError):
        check_lattice_iso(LatticeIso(lattice, lattice, collapsed))


def test_extend_checks_posets(c3, c4):
    l = lattice_iso_from_partial_iso(identity_partial_iso(c3))
    with pytest.raises(ObjectMismatchError):
        extend_lattice_iso(l, c4, c4)


# quasi-Jordan maps

def test_fan_patchwork_is_jordan_per_context_but_not_linear(fan):
    report = verify_quasi_jordan(fan_patchwork(fan))
    assert report.entry(JORDAN_PER_CONTEXT).passed
    assert report.values['linear'] is False
    assert not report.entry(ADDITIVE_ON_SPAN).passed
    assert report.entry(ADDITIVE_ON_SPAN).witness is not None


def test_report_entries_are_found_by_name(fan):
    report = verify_quasi_jordan(fan_patchwork(fan))
    report.entries.reverse()
    assert report.entry(JORDAN_PER_CONTEXT).passed
    assert not report.entry(ADDITIVE_ON_SPAN).passed
    with pytest.raises(KeyError):
        report.entry("no such check")


def test_context_jordan_failure_shares_its_cache(fan):
    cache = {}
    assert context_jordan_failure(fan_patchwork(fan).partial, cache) is None
    assert context_jordan_failure(identity_partial_iso(fan), cache) is None
    assert all(cache.values())
    assert len(cache) == 2 * len(fan) - 2


def test_collapsing_atoms_is_not_jordan(c3):
    identity = identity_partial_iso(c3)
    kappa = list(identity.kappa)
    kappa[-1] = (0, 0, 1)
    collapsed = PartialAlgebraIso(identity.base, tuple(kappa))
    assert context_jordan_failure(collapsed) == len(c3) - 1


def test_cycle_is_linear_quasi_jordan(c3):
    report = verify_quasi_jordan(QuasiJordanIso(_cycle(c3)))
    assert report.passed, report.failures()
    assert report.values['linear'] is True


def test_quasi_jordan_needs_self_adjoint_input(c3):
    q = QuasiJordanIso(identity_partial_iso(c3))
    with pytest.raises(ObjectMismatchError):
        q(BlockMatrix.diagonal([1, GaussianRational(0, 1), 0]))


def test_atom_permutation_iso(fan):
    t = atom_permutation_iso(fan, {1: (1, 0)})
    assert t.kappa[1] == (1, 0)
    assert isinstance(t, PartialAlgebraIso)


# automorphism groups

@pytest.mark.parametrize("n, order", [(3, 6), (4, 24)])
def test_group_orders_agree_for_c3_and_c4(n, order):
    poset = full_abelian_poset(n)
    report = aut_groups(poset, star_automorphisms=coordinate_permutations(n))
    assert report.passed, report.failures()
    values = report.values
    assert values['aut_ord'] == values['aut_sigma'] == values['aut_part'] == values['aut_jordan'] == order
    assert values['aut_lattice_from_part'] == values['aut_bohrification'] == order
    assert values['aut_quasi_jordan'] == order
    assert values['rigid'] is True
    assert values['supplied_preserving_family'] == values['supplied_base_maps'] == order


def test_c2_exclusion_witness(c2):
    report = aut_groups(c2, star_automorphisms=coordinate_permutations(2))
    assert report.passed, report.failures()
    assert report.values['aut_ord'] == 1
    assert report.values['aut_part'] == report.values['aut_sigma'] == report.values['aut_jordan'] == 2
    assert report.values['rigid'] is False
    assert report.values['supplied_base_maps'] == 1


def test_fan_exclusion_witness(fan):
    report = aut_groups(fan, star_automorphisms=m2_candidate_automorphisms())
    assert report.passed, report.failures()
    assert report.values['aut_ord'] == 6
    assert report.values['aut_part'] == 48
    assert report.values['families_per_order_automorphism'] == [8]
    assert report.values['aut_quasi_jordan'] == 48
    assert report.entry("every partial automorphism is a quasi-Jordan automorphism").passed
    assert report.values['supplied_preserving_family'] == 2
    assert report.values['aut_ord'] > report.values['supplied_preserving_family']
    assert report.values['aut_jordan'] == "theorem-backed, not recomputed"
