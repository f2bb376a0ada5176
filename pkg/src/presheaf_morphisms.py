"""
Morphisms of spectral presheaves and of Bohrifications.

A presheaf morphism Sigma_B -> Sigma_A is a base map gamma: C(A) -> C(B)
together with, for each context C of A, a map of characters
Sigma_B(gamma(C)) -> Sigma_A(C), natural in C. A unital *-homomorphism
phi: A -> B induces one (functor S, contravariant) and, on Bohrifications,
a copresheaf morphism (functor B, covariant).
"""

import logging
from dataclasses import dataclass, field
from itertools import product
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from src.context_poset import (
    Context,
    ContextPoset,
    atom_decomposition,
    full_abelian_poset,
    is_monotone_table,
    is_order_isomorphism_table,
)
from src.errors import (
    CorruptPosetError,
    MissingContextError,
    NotComposableError,
    ObjectMismatchError,
)
from src.exact_arith import mat_mul
from src.reports import CheckReport
from src.spectral_presheaf import (
    Bohrification,
    SpectralPresheaf,
    build_bohrification,
    build_presheaf,
)
from src.star_algebra import StarAlgebra, UnitalStarHom, compose_hom, identity_hom

logger = logging.getLogger(__name__)

Table = Tuple[int, ...]


@dataclass(frozen=True)
class BaseMap:
    """A map of contexts source -> target given by table[i] = image index."""

    source: ContextPoset
    target: ContextPoset
    table: Table

    def __post_init__(self):
        table = tuple(int(x) for x in self.table)
        if len(table) != len(self.source) or any(not 0 <= x < len(self.target) for x in table):
            raise CorruptPosetError("Base map table does not fit its posets", witness=list(table))
        object.__setattr__(self, 'table', table)

    def __call__(self, c: int) -> int:
        return self.table[c]

    def is_monotone(self) -> bool:
        return is_monotone_table(self.table, self.source, self.target)

    def is_order_isomorphism(self) -> bool:
        return is_order_isomorphism_table(self.table, self.source, self.target)

    def inverse(self) -> 'BaseMap':
        inverse = [0] * len(self.table)
        for i, j in enumerate(self.table):
            inverse[j] = i
        return BaseMap(self.target, self.source, tuple(inverse))


def identity_base_map(poset: ContextPoset) -> BaseMap:
    return BaseMap(poset, poset, tuple(range(len(poset))))


def compose_base_maps(second: BaseMap, first: BaseMap) -> BaseMap:
    """second after first."""
    if first.target != second.source:
        raise NotComposableError("Base maps do not compose: posets differ")
    return BaseMap(first.source, second.target, tuple(second.table[x] for x in first.table))


def image_context(h: UnitalStarHom, context: Context) -> Context:
    """
    phi(C): the nonzero images of the atoms of C are pairwise orthogonal
    projections summing to 1, hence the atoms of the image context.
    """
    images = [h.apply(a) for a in context.atoms]
    return Context.of(h.target, [p for p in images if not p.is_zero()])


def induce_base_map(h: UnitalStarHom, source_poset: ContextPoset, target_poset: ContextPoset) -> BaseMap:
    """
    gamma(C) = h(C) for every stored context C.

    Raises MissingContextError when an image is not stored in target_poset;
    extend the target family with closure() first.
    """
    if source_poset.algebra != h.source or target_poset.algebra != h.target:
        raise ObjectMismatchError(
            f"Hom {h.name} does not go from {source_poset.algebra.label} to {target_poset.algebra.label}",
            witness=[h.source.label, h.target.label],
        )
    table = []
    for c, context in enumerate(source_poset.contexts):
        image = image_context(h, context)
        index = target_poset.get_index(image)
        if index is None:
            raise MissingContextError(
                f"Image of context {c} under {h.name or 'the hom'} is not in the target poset; "
                f"add it as a generator and re-run closure",
                witness={'context': c, 'image_atoms': [a.entry_strings() for a in image.atoms]},
            )
        table.append(index)

    base = BaseMap(source_poset, target_poset, tuple(table))
    if not base.is_monotone():
        raise CorruptPosetError(f"Induced base map of {h.name} is not monotone", witness=list(table))
    return base


@dataclass(frozen=True)
class PresheafMorphism:
    """
    <gamma, iota>: Sigma over base.target -> Sigma over base.source.

    components[C][b] = character of Sigma_A(C) that character b of
    Sigma_B(gamma(C)) is sent to.
    """

    base: BaseMap
    components: Tuple[Table, ...]
    lower: SpectralPresheaf = field(compare=False, repr=False)
    upper: SpectralPresheaf = field(compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, 'components', tuple(tuple(t) for t in self.components))
        if len(self.components) != len(self.base.source):
            raise CorruptPosetError("One component per source context is required",
                                    witness=len(self.components))


def _presheaves_for(base: BaseMap,
                    lower: Optional[SpectralPresheaf] = None,
                    upper: Optional[SpectralPresheaf] = None) -> Tuple[SpectralPresheaf, SpectralPresheaf]:
    if lower is None or lower.poset != base.source:
        lower = build_presheaf(base.source)
    if upper is None or upper.poset != base.target:
        upper = build_presheaf(base.target)
    return lower, upper


def make_presheaf_morphism(base: BaseMap, components: Sequence[Sequence[int]],
                           lower: Optional[SpectralPresheaf] = None,
                           upper: Optional[SpectralPresheaf] = None) -> PresheafMorphism:
    lower, upper = _presheaves_for(base, lower, upper)
    return PresheafMorphism(base, tuple(tuple(t) for t in components), lower, upper)


def naturality_witness(m: PresheafMorphism) -> Optional[List[int]]:
    """
    First [C', C, b] where iota_{C'} o r^B_{gamma C', gamma C} differs from
    r^A_{C', C} o iota_C at character b; None if the square always commutes.
    """
    lower, upper, gamma = m.lower, m.upper, m.base.table
    for c in range(len(m.base.source)):
        expected = upper.components[gamma[c]]
        if len(m.components[c]) != expected:
            return [c, c, -1]
        if any(not 0 <= a < lower.components[c] for a in m.components[c]):
            return [c, c, -1]
    for small, big in sorted(m.base.source.leq):
        for b in range(upper.components[gamma[big]]):
            left = m.components[small][upper.restrictions[(gamma[small], gamma[big])][b]]
            right = lower.restrictions[(small, big)][m.components[big][b]]
            if left != right:
                return [small, big, b]
    return None


def check_naturality(m: PresheafMorphism) -> bool:
    return naturality_witness(m) is None


def identity_morphism(sigma: SpectralPresheaf) -> PresheafMorphism:
    base = BaseMap(sigma.poset, sigma.poset, tuple(range(len(sigma.poset))))
    return PresheafMorphism(base, tuple(tuple(range(n)) for n in sigma.components), sigma, sigma)


def induce_presheaf_morphism(h: UnitalStarHom, sigma_a: SpectralPresheaf,
                             sigma_b: SpectralPresheaf) -> PresheafMorphism:
    """
    S(h): the component at C sends the character at atom b of h(C) to the
    atom a of C with b <= h(a), i.e. lambda |-> lambda o h|_C.
    """
    base = induce_base_map(h, sigma_a.poset, sigma_b.poset)
    components = []
    for c, context in enumerate(sigma_a.poset.contexts):
        images = [h.apply(a) for a in context.atoms]
        target = sigma_b.poset.contexts[base(c)]
        table = []
        for b in target.atoms:
            owners = [k for k, image in enumerate(images) if mat_mul(image, b) == b]
            if len(owners) != 1:
                raise CorruptPosetError(f"Atom of the image of context {c} has {len(owners)} preimages",
                                        witness={'context': c})
            table.append(owners[0])
        components.append(tuple(table))

    m = PresheafMorphism(base, tuple(components), sigma_a, sigma_b)
    witness = naturality_witness(m)
    if witness is not None:
        raise CorruptPosetError(f"Induced morphism of {h.name} is not natural", witness=witness)
    return m


def compose_presheaf_morphisms(m2: PresheafMorphism, m1: PresheafMorphism) -> PresheafMorphism:
    """
    m2 after m1 as presheaf maps (m1 first).

    Needs m1.base.source == m2.base.target. The composite has base
    m1.base o m2.base and components (m2 o m1)_C = m2_C o m1_{m2.base(C)}.
    """
    if m1.base.source != m2.base.target:
        raise NotComposableError(
            "Presheaf morphisms do not compose: the first one's base source "
            "is not the second one's base target"
        )
    base = compose_base_maps(m1.base, m2.base)
    components = []
    for c in range(len(m2.base.source)):
        inner = m1.components[m2.base(c)]
        outer = m2.components[c]
        components.append(tuple(outer[x] for x in inner))
    return PresheafMorphism(base, tuple(components), m2.lower, m1.upper)


def is_presheaf_isomorphism(m: PresheafMorphism) -> bool:
    """Base map an order-isomorphism and every component a bijection."""
    if not m.base.is_order_isomorphism():
        return False
    for c, table in enumerate(m.components):
        if sorted(table) != list(range(m.lower.components[c])):
            return False
    return True


def invert_presheaf_isomorphism(m: PresheafMorphism) -> PresheafMorphism:
    inverse_base = m.base.inverse()
    components = []
    for d in range(len(m.base.target)):
        c = inverse_base(d)
        table = m.components[c]
        inverse = [0] * len(table)
        for b, a in enumerate(table):
            inverse[a] = b
        components.append(tuple(inverse))
    return PresheafMorphism(inverse_base, tuple(components), m.upper, m.lower)


# Bohrification morphisms (functor B)

@dataclass(frozen=True)
class CopresheafMorphism:
    """
    <gamma, phi> on Bohrifications: components[C][a] lists the atoms of
    gamma(C) whose sum is phi(atom a of C) (empty when phi(a) = 0).
    """

    base: BaseMap
    components: Tuple[Tuple[Tuple[int, ...], ...], ...]
    lower: Bohrification = field(compare=False, repr=False)
    upper: Bohrification = field(compare=False, repr=False)


def identity_copresheaf_morphism(bohr: Bohrification) -> CopresheafMorphism:
    poset = bohr.poset
    components = tuple(tuple((k,) for k in range(len(c))) for c in poset.contexts)
    return CopresheafMorphism(identity_base_map(poset), components, bohr, bohr)


def induce_copresheaf_morphism(h: UnitalStarHom, bohr_a: Bohrification,
                               bohr_b: Bohrification) -> CopresheafMorphism:
    """B(h): base gamma(C) = h(C) and component h|_C : C -> h(C)."""
    base = induce_base_map(h, bohr_a.poset, bohr_b.poset)
    components = []
    for c, context in enumerate(bohr_a.poset.contexts):
        target = bohr_b.poset.contexts[base(c)]
        parts = []
        for a in context.atoms:
            image = h.apply(a)
            decomposition = atom_decomposition(image, target)
            if decomposition is None:
                raise CorruptPosetError(f"h(atom) is not in the image context of {c}", witness={'context': c})
            parts.append(tuple(sorted(decomposition)))
        components.append(tuple(parts))

    n = CopresheafMorphism(base, tuple(components), bohr_a, bohr_b)
    witness = copresheaf_naturality_witness(n)
    if witness is not None:
        raise CorruptPosetError(f"Induced Bohrification morphism of {h.name} is not natural", witness=witness)
    return n


def copresheaf_naturality_witness(n: CopresheafMorphism) -> Optional[List[int]]:
    """Covariant square: phi_C o incl^A_{C',C} = incl^B_{gamma C', gamma C} o phi_{C'} on atoms."""
    gamma = n.base.table
    for small, big in sorted(n.base.source.leq):
        inclusion_a = n.lower.inclusions[(small, big)]
        inclusion_b = n.upper.inclusions[(gamma[small], gamma[big])]
        for k in range(len(inclusion_a)):
            via_big = set()
            for a in inclusion_a[k]:
                via_big.update(n.components[big][a])
            via_small = set()
            for d in n.components[small][k]:
                via_small.update(inclusion_b[d])
            if via_big != via_small:
                return [small, big, k]
    return None


def compose_copresheaf_morphisms(n2: CopresheafMorphism, n1: CopresheafMorphism) -> CopresheafMorphism:
    """n2 after n1 (covariant: bases compose in the same order)."""
    if n1.base.target != n2.base.source:
        raise NotComposableError("Bohrification morphisms do not compose: posets differ")
    base = compose_base_maps(n2.base, n1.base)
    components = []
    for c in range(len(n1.base.source)):
        middle = n1.base(c)
        parts = []
        for part in n1.components[c]:
            image = set()
            for b in part:
                image.update(n2.components[middle][b])
            parts.append(tuple(sorted(image)))
        components.append(tuple(parts))
    return CopresheafMorphism(base, tuple(components), n1.lower, n2.upper)


def dualize_copresheaf_morphism(n: CopresheafMorphism, lower: Optional[SpectralPresheaf] = None,
                                upper: Optional[SpectralPresheaf] = None) -> PresheafMorphism:
    """Componentwise Gelfand duality: atom d of gamma(C) goes to the atom a of C with d in phi(a)."""
    components = []
    for c in range(len(n.base.source)):
        size = len(n.base.target.contexts[n.base(c)])
        table = [None] * size
        for a, part in enumerate(n.components[c]):
            for d in part:
                table[d] = a
        if any(t is None for t in table):
            raise CorruptPosetError(f"Component at {c} is not unital", witness={'context': c})
        components.append(tuple(table))
    return make_presheaf_morphism(n.base, components, lower, upper)


# functoriality checks

class _Registry:
    """Posets, presheaves and Bohrifications per algebra label, built once."""

    def __init__(self, posets: Optional[Mapping[str, ContextPoset]] = None):
        self.posets: Dict[str, ContextPoset] = dict(posets or {})
        self.sigmas: Dict[str, SpectralPresheaf] = {}
        self.bohrs: Dict[str, Bohrification] = {}

    def poset(self, algebra: StarAlgebra) -> ContextPoset:
        if algebra.label not in self.posets:
            if not algebra.is_abelian:
                raise MissingContextError(
                    f"No context poset supplied for {algebra.label}", witness=algebra.label
                )
            self.posets[algebra.label] = full_abelian_poset(len(algebra.shape))
        return self.posets[algebra.label]

    def sigma(self, algebra: StarAlgebra) -> SpectralPresheaf:
        if algebra.label not in self.sigmas:
            self.sigmas[algebra.label] = build_presheaf(self.poset(algebra))
        return self.sigmas[algebra.label]

    def bohr(self, algebra: StarAlgebra) -> Bohrification:
        if algebra.label not in self.bohrs:
            self.bohrs[algebra.label] = build_bohrification(self.poset(algebra))
        return self.bohrs[algebra.label]


def _algebras(homs: Sequence[UnitalStarHom]) -> List[StarAlgebra]:
    seen: Dict[str, StarAlgebra] = {}
    for h in homs:
        seen.setdefault(h.source.label, h.source)
        seen.setdefault(h.target.label, h.target)
    return list(seen.values())


def _composable_pairs(homs: Sequence[UnitalStarHom]) -> List[Tuple[UnitalStarHom, UnitalStarHom]]:
    return [(f, g) for f, g in product(homs, repeat=2) if f.target == g.source]


def functor_S_check(homs: Sequence[UnitalStarHom],
                    posets: Optional[Mapping[str, ContextPoset]] = None) -> CheckReport:
    """
    S(id) = id and S(g o f) = S(f) o S(g) (presheaf composition, f's
    morphism applied last) for every composable pair in homs.

    Posets default to the full context poset for abelian algebras.
    """
    registry = _Registry(posets)
    report = CheckReport(title="Functor S: unital C*-algebras -> presheaves (contravariant)",
                         claim="S is a contravariant functor on unital *-homomorphisms")

    for algebra in _algebras(homs):
        sigma = registry.sigma(algebra)
        s_id = induce_presheaf_morphism(identity_hom(algebra), sigma, sigma)
        report.add(f"S(id_{algebra.label}) = id", s_id == identity_morphism(sigma))

    induced = {}
    for k, h in enumerate(homs):
        induced[k] = induce_presheaf_morphism(h, registry.sigma(h.source), registry.sigma(h.target))
        report.add(f"S({h.name or k}) natural", check_naturality(induced[k]))

    for (i, f), (j, g) in product(enumerate(homs), repeat=2):
        if f.target != g.source:
            continue
        gf = compose_hom(g, f)
        direct = induce_presheaf_morphism(gf, registry.sigma(gf.source), registry.sigma(gf.target))
        reversed_composite = compose_presheaf_morphisms(induced[i], induced[j])
        report.add(f"S({g.name or j} o {f.name or i}) = S({f.name or i}) o S({g.name or j})",
                   direct == reversed_composite)

    logger.info(f"[FUNCTOR] S check over {len(homs)} homs: {'pass' if report.passed else 'FAIL'}")
    return report


def functor_B_check(homs: Sequence[UnitalStarHom],
                    posets: Optional[Mapping[str, ContextPoset]] = None) -> CheckReport:
    """
    B(id) = id, B(g o f) = B(g) o B(f), each component equals h restricted
    to the context, and dualizing B(h) componentwise gives S(h).
    """
    registry = _Registry(posets)
    report = CheckReport(title="Functor B: unital C*-algebras -> copresheaves (covariant)",
                         claim="B is a covariant functor on unital *-homomorphisms")

    for algebra in _algebras(homs):
        bohr = registry.bohr(algebra)
        b_id = induce_copresheaf_morphism(identity_hom(algebra), bohr, bohr)
        report.add(f"B(id_{algebra.label}) = id", b_id == identity_copresheaf_morphism(bohr))

    induced = {}
    for k, h in enumerate(homs):
        label = h.name or k
        n = induce_copresheaf_morphism(h, registry.bohr(h.source), registry.bohr(h.target))
        induced[k] = n
        report.add(f"B({label}) natural", copresheaf_naturality_witness(n) is None)

        matches = True
        for c, context in enumerate(n.base.source.contexts):
            target = n.base.target.contexts[n.base(c)]
            for a, part in zip(context.atoms, n.components[c]):
                image = h.target.zero()
                for d in part:
                    image = image + target.atoms[d]
                if image != h.apply(a):
                    matches = False
        report.add(f"B({label}) components = {label} restricted to each context", matches)

        s_h = induce_presheaf_morphism(h, registry.sigma(h.source), registry.sigma(h.target))
        dual = dualize_copresheaf_morphism(n, registry.sigma(h.source), registry.sigma(h.target))
        report.add(f"Gelfand dual of B({label}) = S({label})", dual == s_h)

    for (i, f), (j, g) in product(enumerate(homs), repeat=2):
        if f.target != g.source:
            continue
        gf = compose_hom(g, f)
        direct = induce_copresheaf_morphism(gf, registry.bohr(gf.source), registry.bohr(gf.target))
        composite = compose_copresheaf_morphisms(induced[j], induced[i])
        report.add(f"B({g.name or j} o {f.name or i}) = B({g.name or j}) o B({f.name or i})",
                   direct == composite)

    logger.info(f"[FUNCTOR] B check over {len(homs)} homs: {'pass' if report.passed else 'FAIL'}")
    return report
