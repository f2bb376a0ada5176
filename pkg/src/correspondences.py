"""
Isomorphism correspondences.

A partial algebra isomorphism is a base map gamma plus, for every stored
context C, a bijection kappa_C from the atoms of C to the atoms of
gamma(C), natural in C. This module converts between those, spectral
presheaf isomorphisms, projection ortholattice isomorphisms and
Bohrification isomorphisms, searches for natural families over a given
order-isomorphism, checks quasi-Jordan maps and assembles the
automorphism-group report.
"""

import logging
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from itertools import combinations, permutations, product
from math import factorial
from typing import Callable, Dict, FrozenSet, Iterator, List, Mapping, Optional, Sequence, Tuple

from src.context_poset import Context, ContextPoset, order_automorphisms
from src.errors import (
    CorruptPosetError,
    LatticeLawError,
    MissingContextError,
    NotAnIsomorphismError,
    NotComposableError,
    ObjectMismatchError,
    SpectralPresheafError,
)
from src.exact_arith import (
    BlockMatrix,
    GaussianRational,
    linear_combination,
    mat_adjoint,
    mat_mul,
    null_space,
    solve_membership,
)
from src.presheaf_morphisms import (
    BaseMap,
    CopresheafMorphism,
    PresheafMorphism,
    compose_base_maps,
    compose_copresheaf_morphisms,
    compose_presheaf_morphisms,
    copresheaf_naturality_witness,
    identity_base_map,
    induce_presheaf_morphism,
    is_presheaf_isomorphism,
    make_presheaf_morphism,
)
from src.reports import CheckReport
from src.spectral_presheaf import SpectralPresheaf, bohrification_for, presheaf_for
from src.star_algebra import (
    StarAlgebra,
    UnitalStarHom,
    commutes,
    compose_hom,
    identity_hom,
    is_self_adjoint,
    jordan_product,
    permutation_hom,
    verify_hom,
)

logger = logging.getLogger(__name__)

Table = Tuple[int, ...]


def _inverse_table(table: Sequence[int]) -> Table:
    inverse = [0] * len(table)
    for i, j in enumerate(table):
        inverse[j] = i
    return tuple(inverse)


# partial algebra isomorphisms

@dataclass(frozen=True)
class PartialAlgebraIso:
    """
    T: A_part -> B_part.

    kappa[C][a] is the atom of base(C) that atom a of C is sent to. On a
    context, T is the unique linear extension of kappa_C.
    """

    base: BaseMap
    kappa: Tuple[Table, ...]

    def __post_init__(self):
        object.__setattr__(self, 'kappa', tuple(tuple(int(x) for x in t) for t in self.kappa))
        if len(self.kappa) != len(self.base.source):
            raise CorruptPosetError("One atom bijection per source context is required",
                                    witness=len(self.kappa))

    @property
    def source(self) -> StarAlgebra:
        return self.base.source.algebra

    @property
    def target(self) -> StarAlgebra:
        return self.base.target.algebra

    def atom_image(self, c: int, a: int) -> BlockMatrix:
        return self.base.target.contexts[self.base(c)].atoms[self.kappa[c][a]]

    def apply_in(self, c: int, x: BlockMatrix) -> BlockMatrix:
        """T(x) computed in context c; raises MissingContextError if x is not in it."""
        context = self.base.source.contexts[c]
        coefficients = solve_membership(x, list(context.atoms))
        if coefficients is None:
            raise MissingContextError(f"Element is not in context {c}", witness=x.entry_strings())
        return linear_combination(coefficients, [self.atom_image(c, a) for a in range(len(context))])

    def apply(self, x: BlockMatrix) -> BlockMatrix:
        """
        T(x) for x in some stored context.

        Largest contexts are tried first; naturality makes the result
        independent of the context used.
        """
        for c in reversed(range(len(self.base.source))):
            coefficients = solve_membership(x, list(self.base.source.contexts[c].atoms))
            if coefficients is not None:
                images = [self.atom_image(c, a) for a in range(len(coefficients))]
                return linear_combination(coefficients, images)
        raise MissingContextError("Element lies in no stored context", witness=x.entry_strings())

    __call__ = apply


def _partial_key(t: PartialAlgebraIso) -> Tuple:
    return t.base.table, t.kappa


def _presheaf_key(m: PresheafMorphism) -> Tuple:
    return m.base.table, m.components


def kappa_naturality_witness(t: PartialAlgebraIso) -> Optional[List[int]]:
    """
    First [C', C, k] where kappa_C does not carry the atoms of C under atom
    k of C' onto the atoms of gamma(C) under kappa_{C'}(k); None if natural.
    A [c, c, -1] witness marks a component that is not a bijection.
    """
    source, target, gamma = t.base.source, t.base.target, t.base.table
    for c in range(len(source)):
        if sorted(t.kappa[c]) != list(range(len(target.contexts[gamma[c]]))) \
                or len(t.kappa[c]) != len(source.contexts[c]):
            return [c, c, -1]

    inclusion_a = bohrification_for(source).inclusions
    inclusion_b = bohrification_for(target).inclusions
    for small, big in sorted(source.leq):
        parts_b = inclusion_b.get((gamma[small], gamma[big]))
        if parts_b is None:
            return [small, big, -1]
        for k, parts in enumerate(inclusion_a[(small, big)]):
            if {t.kappa[big][s] for s in parts} != set(parts_b[t.kappa[small][k]]):
                return [small, big, k]
    return None


def is_partial_iso(t: PartialAlgebraIso) -> bool:
    return t.base.is_order_isomorphism() and kappa_naturality_witness(t) is None


def make_partial_iso(base: BaseMap, kappa: Sequence[Sequence[int]]) -> PartialAlgebraIso:
    """Build and verify; raises NotAnIsomorphismError with the naturality witness."""
    t = PartialAlgebraIso(base, tuple(tuple(k) for k in kappa))
    if not base.is_order_isomorphism():
        raise NotAnIsomorphismError("Base map is not an order-isomorphism", witness=list(base.table))
    witness = kappa_naturality_witness(t)
    if witness is not None:
        raise NotAnIsomorphismError("Atom bijections are not natural in the context", witness=witness)
    return t


def identity_partial_iso(poset: ContextPoset) -> PartialAlgebraIso:
    return PartialAlgebraIso(identity_base_map(poset), tuple(tuple(range(len(c))) for c in poset.contexts))


def atom_permutation_iso(poset: ContextPoset, swaps: Mapping[int, Sequence[int]]) -> PartialAlgebraIso:
    """Identity base map; atoms of context c permuted by swaps[c], other contexts fixed."""
    kappa = [tuple(swaps.get(c, range(len(context)))) for c, context in enumerate(poset.contexts)]
    return make_partial_iso(identity_base_map(poset), kappa)


def compose_partial_isos(t2: PartialAlgebraIso, t1: PartialAlgebraIso) -> PartialAlgebraIso:
    """t2 after t1."""
    if t1.base.target != t2.base.source:
        raise NotComposableError("Partial isomorphisms do not compose: posets differ")
    base = compose_base_maps(t2.base, t1.base)
    kappa = tuple(
        tuple(t2.kappa[t1.base(c)][b] for b in t1.kappa[c])
        for c in range(len(t1.base.source))
    )
    return PartialAlgebraIso(base, kappa)


def invert_partial_iso(t: PartialAlgebraIso) -> PartialAlgebraIso:
    inverse_base = t.base.inverse()
    kappa = tuple(_inverse_table(t.kappa[inverse_base(d)]) for d in range(len(t.base.target)))
    return PartialAlgebraIso(inverse_base, kappa)


def structure_witness(t: PartialAlgebraIso) -> Optional[Dict]:
    """
    Check on every context that T fixes the unit and preserves sums,
    products and adjoints of two generic commuting normal elements.
    """
    for c, context in enumerate(t.base.source.contexts):
        n = len(context)
        x = linear_combination([GaussianRational(k + 1) for k in range(n)], list(context.atoms))
        y = linear_combination([GaussianRational(n - k, k + 1) for k in range(n)], list(context.atoms))
        if not preserves_commuting_structure(t, c, x, y):
            return {'context': c}
    return None


def preserves_commuting_structure(t: PartialAlgebraIso, c: int, x: BlockMatrix, y: BlockMatrix) -> bool:
    """Unit, sum, product and adjoint laws for x, y in context c."""
    tx, ty = t.apply_in(c, x), t.apply_in(c, y)
    return (
        t.apply_in(c, t.source.unit()) == t.target.unit()
        and t.apply_in(c, x + y) == tx + ty
        and t.apply_in(c, mat_mul(x, y)) == mat_mul(tx, ty)
        and t.apply_in(c, mat_adjoint(x)) == mat_adjoint(tx)
    )


# spectral presheaf <-> partial algebra

def partial_iso_from_presheaf_iso(m: PresheafMorphism) -> PartialAlgebraIso:
    """
    kappa_C is the inverse of the character bijection iota_C: the character
    at atom b of gamma(C) is sent to the character at atom a of C exactly
    when kappa_C(a) = b.
    """
    if not is_presheaf_isomorphism(m):
        raise NotAnIsomorphismError("Presheaf morphism is not an isomorphism", witness=list(m.base.table))
    t = PartialAlgebraIso(m.base, tuple(_inverse_table(table) for table in m.components))
    witness = kappa_naturality_witness(t)
    if witness is not None:
        raise CorruptPosetError("Presheaf isomorphism is not natural", witness=witness)
    return t


def presheaf_iso_from_partial_iso(t: PartialAlgebraIso) -> PresheafMorphism:
    """iota_C(lambda) = lambda o T|_C, i.e. components are the inverse atom bijections."""
    components = tuple(_inverse_table(table) for table in t.kappa)
    return make_presheaf_morphism(t.base, components, presheaf_for(t.base.source), presheaf_for(t.base.target))


def copresheaf_iso_from_partial_iso(t: PartialAlgebraIso) -> CopresheafMorphism:
    components = tuple(tuple((b,) for b in table) for table in t.kappa)
    return CopresheafMorphism(t.base, components, bohrification_for(t.base.source),
                              bohrification_for(t.base.target))


def partial_iso_from_jordan_map(h: UnitalStarHom, source_poset: ContextPoset,
                                target_poset: ContextPoset) -> PartialAlgebraIso:
    """
    Restrict a global linear map (a *-automorphism, or a Jordan
    *-isomorphism such as the transpose) to the stored contexts.

    Raises NotAnIsomorphismError when the atoms of a context do not map to
    a context, MissingContextError when the image context is not stored.
    """
    table, kappa = [], []
    for c, context in enumerate(source_poset.contexts):
        images = [h.apply(a) for a in context.atoms]
        try:
            image = Context.of(h.target, images)
        except SpectralPresheafError as exc:
            raise NotAnIsomorphismError(f"{h.name or 'Map'} does not send context {c} to a context: {exc}",
                                        witness={'context': c}) from exc
        index = target_poset.get_index(image)
        if index is None:
            raise MissingContextError(f"Image of context {c} under {h.name or 'the map'} is not stored",
                                      witness={'context': c})
        atoms = target_poset.contexts[index].atoms
        table.append(index)
        kappa.append(tuple(atoms.index(p) for p in images))
    return make_partial_iso(BaseMap(source_poset, target_poset, tuple(table)), kappa)


# natural family search

def _part_lookup(poset: ContextPoset) -> Dict[Tuple[int, int], Dict[FrozenSet[int], int]]:
    inclusions = bohrification_for(poset).inclusions
    return {
        pair: {frozenset(part): k for k, part in enumerate(parts)}
        for pair, parts in inclusions.items()
    }


def _iter_natural_families(gamma: BaseMap) -> Iterator[PartialAlgebraIso]:
    """
    Backtrack over atom bijections at the maximal contexts; every other
    kappa is forced by pushing down along inclusions, and a disagreement
    with an earlier push prunes the branch.
    """
    if not gamma.is_order_isomorphism():
        raise NotAnIsomorphismError("Base map is not an order-isomorphism", witness=list(gamma.table))
    source, target = gamma.source, gamma.target
    if any(len(source.contexts[c]) != len(target.contexts[gamma(c)]) for c in range(len(source))):
        return

    inclusion_a = bohrification_for(source).inclusions
    lookup_b = _part_lookup(target)
    order = sorted(source.maximal(), key=lambda m: (-len(source.contexts[m]), m))
    kappa: List[Optional[Table]] = [None] * len(source)
    pins = [0] * len(source)

    def derive(m: int, bijection: Table, c: int) -> Optional[Table]:
        index = lookup_b[(gamma(c), gamma(m))]
        table = []
        for parts in inclusion_a[(c, m)]:
            k = index.get(frozenset(bijection[s] for s in parts))
            if k is None:
                return None
            table.append(k)
        return tuple(table)

    def pop(changed: List[int]):
        for c in changed:
            pins[c] -= 1
            if pins[c] == 0:
                kappa[c] = None

    def push(m: int, bijection: Table) -> Optional[List[int]]:
        changed = []
        for c in source.below(m):
            derived = derive(m, bijection, c)
            if derived is None or (kappa[c] is not None and kappa[c] != derived):
                pop(changed)
                return None
            kappa[c] = derived
            pins[c] += 1
            changed.append(c)
        return changed

    def search(depth: int) -> Iterator[PartialAlgebraIso]:
        if depth == len(order):
            yield PartialAlgebraIso(gamma, tuple(kappa))
            return
        m = order[depth]
        for bijection in permutations(range(len(source.contexts[m]))):
            changed = push(m, bijection)
            if changed is None:
                continue
            yield from search(depth + 1)
            pop(changed)

    yield from search(0)


def natural_families(gamma: BaseMap) -> List[PartialAlgebraIso]:
    """Every partial isomorphism over gamma, in canonical (lexicographic kappa) order."""
    found = sorted(_iter_natural_families(gamma), key=lambda t: t.kappa)
    for t in found:
        witness = kappa_naturality_witness(t)
        if witness is not None:
            raise CorruptPosetError("Search produced a non-natural family", witness=witness)
    return found


def order_iso_to_partial_iso_search(gamma: BaseMap) -> Optional[PartialAlgebraIso]:
    """
    One partial isomorphism over gamma, or None.

    None is exhaustive for the stored posets; it says nothing about the
    full context categories.
    """
    families = natural_families(gamma)
    if not families:
        logger.info(f"[CORRESPONDENCE] no natural family over base map {list(gamma.table)}")
        return None
    return families[0]


def presheaf_isomorphisms_over(gamma: BaseMap, sigma_a: Optional[SpectralPresheaf] = None,
                               sigma_b: Optional[SpectralPresheaf] = None) -> List[PresheafMorphism]:
    """
    Every presheaf isomorphism with base gamma, found directly on characters.

    Choices are made at maximal contexts. Below a maximal M the component
    is forced by iota_{C'}(r(b)) = r(iota_M(b)), which has to be well
    defined and bijective.
    """
    if not gamma.is_order_isomorphism():
        raise NotAnIsomorphismError("Base map is not an order-isomorphism", witness=list(gamma.table))
    sigma_a = sigma_a or presheaf_for(gamma.source)
    sigma_b = sigma_b or presheaf_for(gamma.target)
    source = gamma.source
    if any(sigma_a.components[c] != sigma_b.components[gamma(c)] for c in range(len(source))):
        return []

    order = sorted(source.maximal(), key=lambda m: (-sigma_a.components[m], m))
    iota: List[Optional[Table]] = [None] * len(source)
    pins = [0] * len(source)
    found: List[PresheafMorphism] = []

    def derive(m: int, bijection: Table, c: int) -> Optional[Table]:
        restrict_b = sigma_b.restrictions[(gamma(c), gamma(m))]
        restrict_a = sigma_a.restrictions[(c, m)]
        table: List[Optional[int]] = [None] * sigma_b.components[gamma(c)]
        for b, a in enumerate(bijection):
            small_b, small_a = restrict_b[b], restrict_a[a]
            if table[small_b] is None:
                table[small_b] = small_a
            elif table[small_b] != small_a:
                return None
        if sorted(x for x in table if x is not None) != list(range(sigma_a.components[c])):
            return None
        return tuple(table)

    def pop(changed: List[int]):
        for c in changed:
            pins[c] -= 1
            if pins[c] == 0:
                iota[c] = None

    def search(depth: int):
        if depth == len(order):
            found.append(make_presheaf_morphism(gamma, tuple(iota), sigma_a, sigma_b))
            return
        m = order[depth]
        for bijection in permutations(range(sigma_a.components[m])):
            changed = []
            for c in source.below(m):
                derived = derive(m, bijection, c)
                if derived is None or (iota[c] is not None and iota[c] != derived):
                    break
                iota[c] = derived
                pins[c] += 1
                changed.append(c)
            else:
                search(depth + 1)
            pop(changed)

    search(0)
    found.sort(key=lambda m: m.components)
    return found


# projection ortholattices

def _projection_key(p: BlockMatrix) -> Tuple:
    return p.trace().re, p.sort_key()


@dataclass(frozen=True)
class OrthoLattice:
    """
    Projections that are atom sums in some stored context, ordered by
    p <= q iff pq = p. Sorted by rank, so index 0 is 0 and the last index is 1.
    Meets and joins are taken inside the stored set and may not exist.
    """

    algebra: StarAlgebra
    elements: Tuple[BlockMatrix, ...]
    complement: Table
    leq: FrozenSet[Tuple[int, int]]
    _index: Dict[BlockMatrix, int] = field(init=False, repr=False, compare=False, hash=False)
    _down: Tuple[FrozenSet[int], ...] = field(init=False, repr=False, compare=False, hash=False)
    _up: Tuple[FrozenSet[int], ...] = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        n = len(self.elements)
        object.__setattr__(self, '_index', {p: i for i, p in enumerate(self.elements)})
        object.__setattr__(self, '_down', tuple(frozenset(i for i in range(n) if (i, j) in self.leq)
                                                for j in range(n)))
        object.__setattr__(self, '_up', tuple(frozenset(j for j in range(n) if (i, j) in self.leq)
                                              for i in range(n)))

    def __len__(self) -> int:
        return len(self.elements)

    @property
    def zero(self) -> int:
        return 0

    @property
    def one(self) -> int:
        return len(self.elements) - 1

    def index(self, p: BlockMatrix) -> int:
        return self._index[p]

    def get_index(self, p: BlockMatrix) -> Optional[int]:
        return self._index.get(p)

    def le(self, i: int, j: int) -> bool:
        return (i, j) in self.leq

    @cached_property
    def _meets(self) -> Dict[Tuple[int, int], Optional[int]]:
        table = {}
        for i, j in combinations(range(len(self)), 2):
            table[(i, j)] = self._extremum(self._down[i] & self._down[j], self._down)
        return table

    @cached_property
    def _joins(self) -> Dict[Tuple[int, int], Optional[int]]:
        table = {}
        for i, j in combinations(range(len(self)), 2):
            table[(i, j)] = self._extremum(self._up[i] & self._up[j], self._up)
        return table

    @staticmethod
    def _extremum(bounds: FrozenSet[int], cone: Tuple[FrozenSet[int], ...]) -> Optional[int]:
        for k in bounds:
            if bounds <= cone[k]:
                return k
        return None

    def glb(self, i: int, j: int) -> Optional[int]:
        if i == j:
            return i
        return self._meets[(min(i, j), max(i, j))]

    def lub(self, i: int, j: int) -> Optional[int]:
        if i == j:
            return i
        return self._joins[(min(i, j), max(i, j))]


def lattice_from_algebra(poset: ContextPoset) -> OrthoLattice:
    """All atom-subset sums of all stored contexts, with order and complement computed exactly."""
    algebra = poset.algebra
    seen = {}
    for context in poset.contexts:
        for _, p in context.projections():
            seen.setdefault(p, None)
    elements = sorted(seen, key=_projection_key)
    index = {p: i for i, p in enumerate(elements)}
    unit = algebra.unit()
    complement = tuple(index[unit - p] for p in elements)

    ranks = [p.trace().re for p in elements]
    leq = set()
    for i, p in enumerate(elements):
        for j, q in enumerate(elements):
            if i == j or (ranks[i] < ranks[j] and mat_mul(p, q) == p):
                leq.add((i, j))
    logger.info(f"[LATTICE] {len(elements)} projections over {len(poset)} contexts of {algebra.label}")
    return OrthoLattice(algebra, tuple(elements), complement, frozenset(leq))


@lru_cache(maxsize=64)
def lattice_for(poset: ContextPoset) -> OrthoLattice:
    return lattice_from_algebra(poset)


def check_orthomodular(lattice: OrthoLattice) -> CheckReport:
    """
    Ortholattice laws on the stored projections. The orthomodular law is
    checked on every comparable pair whose meet and join are stored.
    """
    report = CheckReport(title=f"Projection ortholattice of {lattice.algebra.label}",
                         claim="projections form an orthomodular lattice")
    report.values['elements'] = len(lattice)
    comp = lattice.complement
    unit = lattice.algebra.unit()
    report.add("contains 0 and 1",
               lattice.elements[lattice.zero].is_zero() and lattice.elements[lattice.one] == unit)

    not_involutive = [i for i in range(len(lattice)) if comp[comp[i]] != i]
    report.add("complement is an involution", not not_involutive,
               witness=not_involutive[0] if not_involutive else None)

    reversing = next(([i, j] for i, j in sorted(lattice.leq) if not lattice.le(comp[j], comp[i])), None)
    report.add("complement reverses order", reversing is None, witness=reversing)

    bad_complement = next((i for i in range(len(lattice))
                           if lattice.glb(i, comp[i]) != lattice.zero or lattice.lub(i, comp[i]) != lattice.one),
                          None)
    report.add("p ^ p' = 0 and p v p' = 1", bad_complement is None, witness=bad_complement)

    skipped = 0
    witness = None
    for i, j in sorted(lattice.leq):
        if i == j:
            continue
        meet = lattice.glb(j, comp[i])
        join = lattice.lub(i, meet) if meet is not None else None
        if join is None:
            skipped += 1
        elif join != j and witness is None:
            witness = [i, j]
    report.add("orthomodular law p <= q => q = p v (q ^ p')", witness is None, witness=witness,
               detail=f"{skipped} comparable pairs have a meet or join outside the stored family")
    return report


class _ProjectionIndex:
    """Lattice positions of every atom-subset sum, per context, for table-only conversions."""

    def __init__(self, poset: ContextPoset):
        self.lattice = lattice_for(poset)
        self.subsets: List[Table] = []
        self.atoms: List[Table] = []
        self.by_atoms: Dict[FrozenSet[int], int] = {}
        for c, context in enumerate(poset.contexts):
            subsets = tuple(self.lattice.index(p) for _, p in context.projections())
            atoms = tuple(subsets[1 << k] for k in range(len(context)))
            self.subsets.append(subsets)
            self.atoms.append(atoms)
            self.by_atoms[frozenset(atoms)] = c


@lru_cache(maxsize=64)
def _projection_index(poset: ContextPoset) -> _ProjectionIndex:
    return _ProjectionIndex(poset)


@dataclass(frozen=True)
class LatticeIso:
    """table[i] = index in target of the image of source element i."""

    source: OrthoLattice
    target: OrthoLattice
    table: Table

    def __call__(self, i: int) -> int:
        return self.table[i]


def lattice_iso_from_partial_iso(t: PartialAlgebraIso) -> LatticeIso:
    """T restricted to projections: the subset sum over S goes to the subset sum over kappa_C(S)."""
    source = _projection_index(t.base.source)
    target = _projection_index(t.base.target)
    table: List[Optional[int]] = [None] * len(source.lattice)
    for c in range(len(t.base.source)):
        kappa = t.kappa[c]
        target_subsets = target.subsets[t.base(c)]
        for mask, i in enumerate(source.subsets[c]):
            image_mask = 0
            for a, b in enumerate(kappa):
                if mask >> a & 1:
                    image_mask |= 1 << b
            j = target_subsets[image_mask]
            if table[i] is None:
                table[i] = j
            elif table[i] != j:
                raise CorruptPosetError("A projection is sent to two different images",
                                        witness={'element': i, 'images': [table[i], j]})
    return LatticeIso(source.lattice, target.lattice, tuple(table))


def _lattice_law_error(message: str, l: LatticeIso, pair: Sequence[int]) -> LatticeLawError:
    return LatticeLawError(message, witness={
        'pair': list(pair),
        'elements': [l.source.elements[i].entry_strings() for i in pair],
    })


def check_lattice_iso(l: LatticeIso) -> bool:
    """
    Bijective, preserves complements and order both ways and every existing
    meet and join. Raises LatticeLawError naming the first failing pair.
    """
    source, target = l.source, l.target
    if len(source) != len(target) or len(l.table) != len(source):
        raise LatticeLawError("Lattices have different sizes", witness={'sizes': [len(source), len(target)]})
    first_seen: Dict[int, int] = {}
    for i, j in enumerate(l.table):
        if j in first_seen:
            raise _lattice_law_error("Lattice map is not injective", l, [first_seen[j], i])
        first_seen[j] = i

    for i in range(len(source)):
        if l(source.complement[i]) != target.complement[l(i)]:
            raise _lattice_law_error("Lattice map does not preserve complements", l, [i, source.complement[i]])

    for i, j in product(range(len(source)), repeat=2):
        if source.le(i, j) != target.le(l(i), l(j)):
            raise _lattice_law_error("Lattice map does not preserve order both ways", l, [i, j])

    for i, j in combinations(range(len(source)), 2):
        for own, other in ((source.glb, target.glb), (source.lub, target.lub)):
            expected = own(i, j)
            actual = other(l(i), l(j))
            if (expected is None) != (actual is None) or (expected is not None and l(expected) != actual):
                raise _lattice_law_error("Lattice map does not preserve an existing meet or join", l, [i, j])
    return True


def extend_lattice_iso(l: LatticeIso, source_poset: ContextPoset, target_poset: ContextPoset,
                       check: bool = True) -> PartialAlgebraIso:
    """
    T(sum a_i p_i) := sum a_i l(p_i) on the atom basis of each context.

    The images of the atoms of C must be exactly the atoms of a stored
    context, which becomes gamma(C). The result is checked to restrict to
    l on projections; with check=True, l is validated first and T is
    checked on commuting sums, products and adjoints.
    """
    if check:
        check_lattice_iso(l)
    source = _projection_index(source_poset)
    target = _projection_index(target_poset)
    if source.lattice != l.source or target.lattice != l.target:
        raise ObjectMismatchError("Lattice map does not belong to these posets")

    table, kappa = [], []
    for c in range(len(source_poset)):
        images = [l(i) for i in source.atoms[c]]
        d = target.by_atoms.get(frozenset(images))
        if d is None or len(set(images)) != len(images):
            try:
                Context.of(target_poset.algebra, [l.target.elements[i] for i in images])
            except SpectralPresheafError as exc:
                raise LatticeLawError(f"Images of the atoms of context {c} do not form a context: {exc}",
                                      witness={'context': c, 'images': images}) from exc
            raise MissingContextError(f"Image of context {c} is not stored in the target poset",
                                      witness={'context': c, 'images': images})
        table.append(d)
        kappa.append(tuple(target.atoms[d].index(i) for i in images))

    base = BaseMap(source_poset, target_poset, tuple(table))
    t = PartialAlgebraIso(base, tuple(kappa))
    if not base.is_order_isomorphism():
        raise LatticeLawError("Induced base map is not an order-isomorphism", witness={'pair': list(table)})
    witness = kappa_naturality_witness(t)
    if witness is not None:
        raise LatticeLawError("Induced atom bijections are not natural", witness={'pair': witness})

    restricted = lattice_iso_from_partial_iso(t)
    if restricted.table != l.table:
        first = next(i for i, (a, b) in enumerate(zip(restricted.table, l.table)) if a != b)
        raise LatticeLawError("Extension does not restrict to the lattice map", witness={'pair': [first, l(first)]})
    if check:
        broken = structure_witness(t)
        if broken is not None:
            raise CorruptPosetError("Extension is not a *-isomorphism on a context", witness=broken)
    return t


# quasi-Jordan maps

@dataclass(frozen=True)
class QuasiJordanIso:
    """A partial isomorphism read on self-adjoint elements only."""

    partial: PartialAlgebraIso

    def apply(self, x: BlockMatrix) -> BlockMatrix:
        if not is_self_adjoint(x):
            raise ObjectMismatchError("Quasi-Jordan maps act on self-adjoint elements", witness=x.entry_strings())
        return self.partial.apply(x)

    __call__ = apply


def _stored_atoms(t: PartialAlgebraIso) -> Tuple[List[BlockMatrix], List[BlockMatrix]]:
    """Distinct atoms across all contexts and their images."""
    atoms, images, seen = [], [], set()
    for c, context in enumerate(t.base.source.contexts):
        for a, p in enumerate(context.atoms):
            if p not in seen:
                seen.add(p)
                atoms.append(p)
                images.append(t.atom_image(c, a))
    return atoms, images


def _generic_element(context: Context, offset: int = 0) -> BlockMatrix:
    return linear_combination([GaussianRational(k + 1 + offset) for k in range(len(context))], list(context.atoms))


def default_quasi_jordan_samples(poset: ContextPoset) -> List[Tuple[BlockMatrix, BlockMatrix]]:
    """One generic self-adjoint element per maximal context, paired across noncommuting contexts."""
    maximal = poset.maximal()
    elements = [_generic_element(poset.contexts[m]) for m in maximal]
    pairs = [(a, b) for a, b in combinations(elements, 2) if not commutes(a, b)]
    if not pairs:
        top = poset.contexts[maximal[0]]
        pairs = [(_generic_element(top), _generic_element(top, offset=len(top)))]
    return pairs


JORDAN_PER_CONTEXT = "unital Jordan homomorphism on every context"
ADDITIVE_ON_SPAN = "additive on the span of the stored projections"


def _context_is_jordan(t: PartialAlgebraIso, c: int) -> bool:
    # atoms p_i satisfy p_i.p_j = delta_ij p_i and sum to 1, so T is a unital
    # Jordan map on the context iff the images do the same
    images = [t.atom_image(c, a) for a in range(len(t.base.source.contexts[c]))]
    total = images[0]
    for p in images[1:]:
        total = total + p
    if total != t.target.unit() or not all(is_self_adjoint(p) for p in images):
        return False
    return all(jordan_product(p, p) == p for p in images) and all(
        jordan_product(images[i], images[j]).is_zero() for i, j in combinations(range(len(images)), 2)
    )


def context_jordan_failure(t: PartialAlgebraIso, cache: Optional[Dict] = None) -> Optional[int]:
    """
    First context on which t is not a unital Jordan map, or None.

    cache is keyed by (context, image context, atom bijection) and may be
    shared between partial isos over the same pair of posets.
    """
    for c in range(len(t.base.source)):
        key = (c, t.base(c), t.kappa[c])
        ok = None if cache is None else cache.get(key)
        if ok is None:
            ok = _context_is_jordan(t, c)
            if cache is not None:
                cache[key] = ok
        if not ok:
            return c
    return None


def verify_quasi_jordan(q: QuasiJordanIso,
                        samples: Optional[Sequence[Tuple[BlockMatrix, BlockMatrix]]] = None) -> CheckReport:
    """
    Per-context unital Jordan laws, then global additivity.

    The map is additive on the span of the stored projections iff every
    linear relation among the stored atoms survives in their images; when
    it does, the sampled pairs are also checked for the Jordan product
    through A.B = ((A+B)^2 - A^2 - B^2) / 2.
    """
    t = q.partial
    poset = t.base.source
    report = CheckReport(title=f"Quasi-Jordan check on {t.source.label}",
                         claim="unital quasi-Jordan isomorphism")

    context_failure = context_jordan_failure(t)
    report.add(JORDAN_PER_CONTEXT, context_failure is None, witness=context_failure)

    atoms, images = _stored_atoms(t)
    relation_broken = None
    for relation in null_space([p.coordinates() for p in atoms]):
        if not linear_combination(relation, images).is_zero():
            relation_broken = [str(x) for x in relation]
            break
    linear = relation_broken is None
    report.values['linear'] = linear
    report.add(ADDITIVE_ON_SPAN, linear, witness=relation_broken,
               detail=None if linear else "a linear relation among stored atoms is not preserved")

    def extend(x: BlockMatrix) -> Optional[BlockMatrix]:
        coefficients = solve_membership(x, atoms)
        return None if coefficients is None else linear_combination(coefficients, images)

    pairs = list(samples) if samples is not None else default_quasi_jordan_samples(poset)
    for k, (a, b) in enumerate(pairs):
        ta, tb = q(a), q(b)
        total = a + b
        stored = next((c for c in reversed(range(len(poset)))
                       if solve_membership(total, list(poset.contexts[c].atoms)) is not None), None)
        if stored is not None:
            additive = t.apply_in(stored, total) == ta + tb
        else:
            additive = linear and extend(total) == ta + tb
        report.add(f"sample {k}: T(A+B) = T(A) + T(B)", additive)

        if linear:
            product_ab = jordan_product(a, b)
            mapped = extend(product_ab)
            if mapped is None:
                report.add(f"sample {k}: T(A.B) = T(A).T(B)", True,
                           detail="A.B lies outside the stored span; not checked")
            else:
                report.add(f"sample {k}: T(A.B) = T(A).T(B)", mapped == jordan_product(ta, tb))
    logger.info(f"[CORRESPONDENCE] quasi-Jordan check: linear={linear}, per-context={context_failure is None}")
    return report


# automorphism groups

def _generating_set(elements: Sequence, compose: Callable, key: Callable, identity) -> Tuple[List, int]:
    """Greedy generators in list order and the order of the subgroup they generate."""
    generated = {key(identity): identity}
    generators = []
    for g in elements:
        if key(g) in generated:
            continue
        generators.append(g)
        queue = list(generated.values())
        while queue:
            x = queue.pop()
            for s in generators:
                y = compose(s, x)
                k = key(y)
                if k not in generated:
                    generated[k] = y
                    queue.append(y)
    return generators, len(generated)


def _coordinate_permutations(poset: ContextPoset, report: CheckReport, part_keys: set):
    """Aut_Jordan(C^n) = coordinate permutations, mapped into Aut_part."""
    n = len(poset.algebra.shape)
    homs, partials = [], []
    for perm in permutations(range(n)):
        h = permutation_hom(n, perm)
        try:
            partials.append(partial_iso_from_jordan_map(h, poset, poset))
            homs.append(h)
        except MissingContextError:
            continue
    report.values['aut_jordan'] = factorial(n)
    report.values['aut_jordan_preserving_family'] = len(homs)

    keys = [_partial_key(t) for t in partials]
    report.add("Aut_Jordan -> Aut_part is injective", len(set(keys)) == len(keys))
    report.add("Aut_Jordan lands in Aut_part", all(k in part_keys for k in keys))
    if len(homs) == report.values['aut_jordan']:
        report.add("Aut_Jordan -> Aut_part is onto", set(keys) == part_keys)

    generators, order = _generating_set(homs, compose_hom, lambda h: h.matrix, identity_hom(poset.algebra))
    report.add("generators generate the family-preserving permutations", order == len(homs), witness=order)
    homomorphism = all(
        partial_iso_from_jordan_map(compose_hom(g, h), poset, poset)
        == compose_partial_isos(partial_iso_from_jordan_map(g, poset, poset),
                                partial_iso_from_jordan_map(h, poset, poset))
        for g, h in product(generators, repeat=2)
    )
    report.add("Aut_Jordan -> Aut_part is a homomorphism on generator pairs", homomorphism)


def _supplied_automorphisms(poset: ContextPoset, sigma: SpectralPresheaf,
                            star_automorphisms: Sequence[UnitalStarHom],
                            report: CheckReport, sigma_keys: set):
    """Aut(A) -> Aut(Sigma)^op on the supplied *-automorphisms that preserve the stored family."""
    unique = list({h.matrix: h for h in star_automorphisms}.values())
    verified = [h for h in unique if verify_hom(h)]
    rejected = [h.name for h in unique if h not in verified]
    report.add("supplied maps are unital *-automorphisms", not rejected, witness=rejected or None)

    preserving, induced = [], []
    for h in verified:
        try:
            induced.append(induce_presheaf_morphism(h, sigma, sigma))
            preserving.append(h)
        except MissingContextError:
            logger.debug(f"[CORRESPONDENCE] {h.name} moves a stored context outside the family")
    report.values['supplied_automorphisms'] = len(unique)
    report.values['supplied_preserving_family'] = len(preserving)
    report.values['supplied_base_maps'] = len({m.base.table for m in induced})

    keys = [_presheaf_key(m) for m in induced]
    report.add("S(h) is a presheaf automorphism for every family-preserving h",
               all(k in sigma_keys for k in keys))
    report.add("h -> S(h) is injective on the supplied automorphisms", len(set(keys)) == len(keys))
    report.add("S(h) agrees with the restriction of h to contexts", all(
        presheaf_iso_from_partial_iso(partial_iso_from_jordan_map(h, poset, poset)) == m
        for h, m in zip(preserving, induced)
    ))

    sample = list(zip(preserving, induced))[:6]
    reverses = all(
        induce_presheaf_morphism(compose_hom(g, h), sigma, sigma) == compose_presheaf_morphisms(sh, sg)
        for (g, sg), (h, sh) in product(sample, repeat=2)
    )
    report.add("S(g o h) = S(h) o S(g) on supplied pairs", reverses)


def aut_groups(poset: ContextPoset, sigma: Optional[SpectralPresheaf] = None,
               star_automorphisms: Sequence[UnitalStarHom] = ()) -> CheckReport:
    """
    Automorphism groups of the stored family and the explicit maps between them.

    Aut_ord is found on the Hasse diagram, Aut(Sigma) by searching
    character bijections and Aut_part by searching atom bijections, both
    over every order-automorphism. Maps between the groups are checked for
    bijectivity on all elements and for (anti)homomorphism on a greedy
    generating set. For C^n the coordinate permutations are added as
    Aut_Jordan; for other algebras Jordan-level statements are not
    recomputed.

    Raises:
        SizeBoundError: poset larger than SPECPRESHEAF_MAX_AUTOMORPHISM_CONTEXTS
    """
    sigma = sigma or presheaf_for(poset)
    if sigma.poset != poset:
        raise ObjectMismatchError("Presheaf is not over the given poset")
    algebra = poset.algebra
    report = CheckReport(
        title=f"Automorphism groups of {algebra.label} over {len(poset)} stored contexts",
        claim="Aut_ord, Aut(Sigma)^op, Aut_part and Aut_Jordan are isomorphic away from C^2 and B(C^2); "
              "Aut(A) embeds in Aut(Sigma)^op",
    )

    aut_ord = [BaseMap(poset, poset, table) for table in order_automorphisms(poset)]
    families = {base.table: natural_families(base) for base in aut_ord}
    aut_part = [t for base in aut_ord for t in families[base.table]]
    aut_sigma = [m for base in aut_ord for m in presheaf_isomorphisms_over(base, sigma, sigma)]
    multiplicities = sorted({len(f) for f in families.values()})
    jordan_cache: Dict = {}
    jordan_failures = [context_jordan_failure(t, jordan_cache) for t in aut_part]
    quasi_jordan = {_partial_key(t) for t, failure in zip(aut_part, jordan_failures) if failure is None}

    report.values.update({
        'aut_ord': len(aut_ord),
        'aut_sigma': len(aut_sigma),
        'aut_part': len(aut_part),
        'aut_quasi_jordan': len(quasi_jordan),
        'families_per_order_automorphism': multiplicities,
        'rigid': multiplicities == [1],
    })

    part_keys = {_partial_key(t) for t in aut_part}
    sigma_keys = {_presheaf_key(m) for m in aut_sigma}
    converted = [partial_iso_from_presheaf_iso(m) for m in aut_sigma]
    converted_keys = [_partial_key(t) for t in converted]
    report.add("Aut(Sigma) -> Aut_part is a bijection",
               len(set(converted_keys)) == len(aut_sigma) and set(converted_keys) == part_keys)
    report.add("presheaf iso -> partial iso -> presheaf iso is the identity",
               all(presheaf_iso_from_partial_iso(t) == m for t, m in zip(converted, aut_sigma)))
    report.add("partial iso -> presheaf iso -> partial iso is the identity",
               all(partial_iso_from_presheaf_iso(presheaf_iso_from_partial_iso(t)) == t for t in aut_part))
    report.add("every order-automorphism admits a natural family", all(families.values()))
    first_failure = next(((k, c) for k, c in enumerate(jordan_failures) if c is not None), None)
    report.add("every partial automorphism is a quasi-Jordan automorphism", first_failure is None,
               witness=None if first_failure is None else {'automorphism': first_failure[0],
                                                           'context': first_failure[1]})

    lattice_isos = [lattice_iso_from_partial_iso(t) for t in aut_part]
    report.values['aut_lattice_from_part'] = len({l.table for l in lattice_isos})
    report.add("Aut_part -> Aut(P(A)) is injective", report.values['aut_lattice_from_part'] == len(aut_part))
    report.add("partial iso -> lattice iso -> partial iso is the identity",
               all(extend_lattice_iso(l, poset, poset, check=False) == t for l, t in zip(lattice_isos, aut_part)))

    bohr_isos = [copresheaf_iso_from_partial_iso(t) for t in aut_part]
    report.values['aut_bohrification'] = len({(n.base.table, n.components) for n in bohr_isos})
    report.add("every natural family is a Bohrification automorphism",
               all(copresheaf_naturality_witness(n) is None for n in bohr_isos))

    generators, order = _generating_set(aut_part, compose_partial_isos, _partial_key, identity_partial_iso(poset))
    report.values['generators'] = len(generators)
    report.add("generators generate Aut_part", order == len(aut_part), witness=order)
    pairs = list(product(generators, repeat=2))
    report.add("Aut_part -> Aut(Sigma) reverses composition on generator pairs", all(
        presheaf_iso_from_partial_iso(compose_partial_isos(g, h))
        == compose_presheaf_morphisms(presheaf_iso_from_partial_iso(h), presheaf_iso_from_partial_iso(g))
        for g, h in pairs
    ))
    report.add("Aut_part -> Aut_ord is a homomorphism on generator pairs", all(
        compose_partial_isos(g, h).base == compose_base_maps(g.base, h.base) for g, h in pairs
    ))
    report.add("Aut_part -> Aut(P(A)) is a homomorphism on generator pairs", all(
        lattice_iso_from_partial_iso(compose_partial_isos(g, h)).table
        == tuple(lattice_iso_from_partial_iso(g).table[x] for x in lattice_iso_from_partial_iso(h).table)
        for g, h in pairs
    ))
    report.add("Aut_part -> Aut(Bohr) is a homomorphism on generator pairs", all(
        copresheaf_iso_from_partial_iso(compose_partial_isos(g, h))
        == compose_copresheaf_morphisms(copresheaf_iso_from_partial_iso(g), copresheaf_iso_from_partial_iso(h))
        for g, h in pairs
    ))
    lattice_failure = None
    for g in generators:
        try:
            check_lattice_iso(lattice_iso_from_partial_iso(g))
        except LatticeLawError as exc:
            lattice_failure = exc.witness
            break
    report.add("generator lattice maps satisfy the ortholattice laws", lattice_failure is None,
               witness=lattice_failure)

    if algebra.is_abelian:
        _coordinate_permutations(poset, report, part_keys)
    else:
        report.values['aut_jordan'] = "theorem-backed, not recomputed"

    if star_automorphisms:
        _supplied_automorphisms(poset, sigma, star_automorphisms, report, sigma_keys)

    logger.info(f"[CORRESPONDENCE] {algebra.label}: |Aut_ord|={len(aut_ord)} |Aut(Sigma)|={len(aut_sigma)} "
                f"|Aut_part|={len(aut_part)} rigid={report.values['rigid']}")
    return report
