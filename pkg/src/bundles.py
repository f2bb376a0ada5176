"""
Bundled example algebras and context families.

- c1..c4: full context posets of C^n (set partitions, ordered by refinement)
- m2fan: k two-atom contexts of M_2 along rational Bloch directions
- mermin: the Mermin-Peres square of two-qubit Pauli observables in M_4

verify_correspondence runs the correspondence suite for one bundle.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from itertools import permutations, product
from typing import Dict, List, Tuple

from src.context_poset import (
    Context,
    ContextPoset,
    closure,
    context_from_involutions,
    full_abelian_poset,
    partition_context,
    set_partitions,
)
from src.correspondences import (
    ADDITIVE_ON_SPAN,
    JORDAN_PER_CONTEXT,
    QuasiJordanIso,
    aut_groups,
    atom_permutation_iso,
    check_orthomodular,
    identity_partial_iso,
    lattice_for,
    partial_iso_from_jordan_map,
    verify_quasi_jordan,
)
from src.errors import SchemaError, SizeBoundError
from src.exact_arith import I, BlockMatrix, tensor
from src.reports import CheckReport
from src.spectral_presheaf import global_sections, global_sections_bruteforce, presheaf_for
from src.star_algebra import (
    StarAlgebra,
    UnitalStarHom,
    abelian_algebra,
    inner_automorphism,
    matrix_algebra,
    permutation_hom,
    transpose_map,
    verify_hom,
)

logger = logging.getLogger(__name__)

BUNDLE_NAMES = ('c2', 'c3', 'c4', 'm2fan', 'mermin')

PAULI = {
    'I': BlockMatrix.from_rows([[1, 0], [0, 1]]),
    'X': BlockMatrix.from_rows([[0, 1], [1, 0]]),
    'Y': BlockMatrix.from_rows([[0, -I], [I, 0]]),
    'Z': BlockMatrix.from_rows([[1, 0], [0, -1]]),
}

# rows and columns are the six contexts; the third column multiplies to -1
MERMIN_PERES_SQUARE = (
    ('XI', 'IX', 'XX'),
    ('IZ', 'ZI', 'ZZ'),
    ('XZ', 'ZX', 'YY'),
)

# unit Bloch vectors (x, z) with rational coordinates
FAN_DIRECTIONS = (
    (Fraction(0), Fraction(1)),
    (Fraction(1), Fraction(0)),
    (Fraction(24, 25), Fraction(-7, 25)),
    (Fraction(3, 5), Fraction(4, 5)),
    (Fraction(5, 13), Fraction(12, 13)),
    (Fraction(8, 17), Fraction(15, 17)),
    (Fraction(20, 29), Fraction(21, 29)),
)


def pauli(word: str) -> BlockMatrix:
    """Tensor product of Pauli matrices, e.g. pauli("XZ") = X (x) Z."""
    result = PAULI[word[0]]
    for letter in word[1:]:
        result = tensor(result, PAULI[letter])
    return result


@dataclass(frozen=True)
class GeneratedFamily:
    """
    A context family given by named commuting self-adjoint involutions.

    Each generator context is the algebra generated by its observables;
    the poset is the intersection closure of the generators.
    """

    name: str
    description: str
    algebra: StarAlgebra
    observables: Tuple[Tuple[str, BlockMatrix], ...]
    generator_names: Tuple[Tuple[str, Tuple[str, ...]], ...]
    expected: Tuple[Tuple[str, int], ...] = ()

    def generators(self) -> List[Context]:
        table = dict(self.observables)
        return [context_from_involutions(self.algebra, [table[o] for o in names])
                for _, names in self.generator_names]

    def poset(self) -> ContextPoset:
        return closure(self.algebra, self.generators())


@dataclass(frozen=True)
class PartitionFamily:
    """Contexts of C^n listed as set partitions of {0, ..., n-1}."""

    n: int
    partitions: Tuple[Tuple[Tuple[int, ...], ...], ...]
    expected: Tuple[Tuple[str, int], ...] = ()

    @property
    def name(self) -> str:
        return f"c{self.n}"

    def poset(self) -> ContextPoset:
        algebra = abelian_algebra(self.n)
        contexts = [partition_context(algebra, [list(b) for b in p]) for p in self.partitions]
        return ContextPoset.from_contexts(algebra, contexts)


def mermin_peres_family() -> GeneratedFamily:
    names = [word for row in MERMIN_PERES_SQUARE for word in row]
    lines = [(f"row{r + 1}", row) for r, row in enumerate(MERMIN_PERES_SQUARE)]
    lines += [(f"col{c + 1}", tuple(row[c] for row in MERMIN_PERES_SQUARE)) for c in range(3)]
    return GeneratedFamily(
        name='mermin',
        description="Mermin-Peres square: joint eigenbases of the rows and columns of two-qubit Pauli observables",
        algebra=matrix_algebra(4),
        observables=tuple((w, pauli(w)) for w in names),
        generator_names=tuple(lines),
        expected=(('contexts', 16), ('maximal', 6), ('atoms_per_maximal', 4), ('global_sections', 0),
                  ('lattice_elements', 68)),
    )


def mermin_peres() -> ContextPoset:
    return mermin_peres_family().poset()


def fan_involution(x: Fraction, z: Fraction) -> BlockMatrix:
    """Reflection x X + z Z for a unit Bloch vector (x, 0, z)."""
    return BlockMatrix.from_rows([[z, x], [x, -z]])


def fan_family(k: int = 3) -> GeneratedFamily:
    if not 1 <= k <= len(FAN_DIRECTIONS):
        raise SizeBoundError(f"Fan size must be between 1 and {len(FAN_DIRECTIONS)}", witness=k)
    names = [f"R{j}" for j in range(k)]
    return GeneratedFamily(
        name='m2fan',
        description=f"{k} pairwise noncommuting two-atom contexts of M_2 meeting only in the scalars",
        algebra=matrix_algebra(2),
        observables=tuple((name, fan_involution(*FAN_DIRECTIONS[j])) for j, name in enumerate(names)),
        generator_names=tuple((name, (name,)) for name in names),
        expected=(('contexts', k + 1), ('maximal', k), ('atoms_per_maximal', 2),
                  ('global_sections', 2 ** k), ('lattice_elements', 2 * k + 2)),
    )


def m2_fan(k: int = 3) -> ContextPoset:
    return fan_family(k).poset()


def partition_family(n: int) -> PartitionFamily:
    partitions = tuple(tuple(tuple(block) for block in p) for p in set_partitions(n))
    expected = (('contexts', len(partitions)), ('maximal', 1), ('atoms_per_maximal', n),
                ('global_sections', n), ('lattice_elements', 2 ** n))
    return PartitionFamily(n, partitions, expected)


def m2_candidate_automorphisms() -> List[UnitalStarHom]:
    """Ad u for the Pauli matrices, the phase gate and a rational rotation."""
    algebra = matrix_algebra(2)
    candidates = {
        'Ad(I)': PAULI['I'], 'Ad(X)': PAULI['X'], 'Ad(Y)': PAULI['Y'], 'Ad(Z)': PAULI['Z'],
        'Ad(S)': BlockMatrix.from_rows([[1, 0], [0, I]]),
        'Ad(R)': BlockMatrix.from_rows([[Fraction(3, 5), Fraction(-4, 5)], [Fraction(4, 5), Fraction(3, 5)]]),
    }
    return [inner_automorphism(algebra, u, name) for name, u in candidates.items()]


def pauli_automorphisms() -> List[UnitalStarHom]:
    """Ad P for the 16 two-qubit Pauli products; each fixes every Mermin-Peres context."""
    algebra = matrix_algebra(4)
    return [inner_automorphism(algebra, pauli(a + b), f"Ad({a}{b})") for a, b in product('IXYZ', repeat=2)]


def coordinate_permutations(n: int) -> List[UnitalStarHom]:
    return [permutation_hom(n, p) for p in permutations(range(n))]


@dataclass(frozen=True)
class Bundle:
    name: str
    description: str
    poset: ContextPoset
    automorphisms: Tuple[UnitalStarHom, ...]


def load_bundle(name: str) -> Bundle:
    """Build a bundled example by name (one of BUNDLE_NAMES or c1..c5)."""
    if name.startswith('c') and name[1:].isdigit():
        n = int(name[1:])
        return Bundle(name, f"full context poset of C^{n}", full_abelian_poset(n),
                      tuple(coordinate_permutations(n)))
    if name == 'm2fan':
        family = fan_family(3)
        return Bundle(name, family.description, family.poset(), tuple(m2_candidate_automorphisms()))
    if name == 'mermin':
        family = mermin_peres_family()
        return Bundle(name, family.description, family.poset(), tuple(pauli_automorphisms()))
    raise SchemaError(f"Unknown bundle {name!r}; choose from {', '.join(BUNDLE_NAMES)}", witness=name)


def fan_patchwork(poset: ContextPoset) -> QuasiJordanIso:
    """Swap the atoms of the first two fan contexts (Z and X) and fix the rest."""
    algebra = poset.algebra
    swaps = {}
    for x, z in FAN_DIRECTIONS[:2]:
        context = context_from_involutions(algebra, [fan_involution(x, z)])
        swaps[poset.index(context)] = (1, 0)
    return QuasiJordanIso(atom_permutation_iso(poset, swaps))


def verify_correspondence(name: str) -> CheckReport:
    """Automorphism groups, lattice laws and the bundle-specific exclusion witnesses."""
    bundle = load_bundle(name)
    poset = bundle.poset
    report = CheckReport(title=f"Correspondence suite for {name}: {bundle.description}",
                         claim="presheaf, partial algebra and lattice isomorphisms correspond bijectively")
    report.values['contexts'] = len(poset)

    groups = aut_groups(poset, star_automorphisms=bundle.automorphisms)
    report.extend(groups)
    lattice = lattice_for(poset)
    report.extend(check_orthomodular(lattice), prefix="lattice: ")

    values = groups.values
    if name == 'c2':
        report.add("the base map cannot recover the swap: |Aut_ord| < |Aut_part|",
                   values['aut_ord'] < values['aut_part'],
                   detail="both *-automorphisms of C^2 induce the identity base map")
    elif name.startswith('c'):
        report.add("each order-automorphism admits exactly one natural family", values['rigid'])
        n = len(poset.algebra.shape)
        if n > 1:
            cycle = permutation_hom(n, [(i + 1) % n for i in range(n)])
            q = QuasiJordanIso(partial_iso_from_jordan_map(cycle, poset, poset))
            report.extend(verify_quasi_jordan(q), prefix="cycle: ")
    elif name == 'm2fan':
        report.add("order-automorphisms outnumber partial isos from algebra automorphisms",
                   values['aut_ord'] > values['supplied_preserving_family'],
                   witness=[values['aut_ord'], values['supplied_preserving_family']])
        patchwork = verify_quasi_jordan(fan_patchwork(poset))
        relation = patchwork.entry(ADDITIVE_ON_SPAN).witness
        report.add("patchwork map is a unital Jordan map on every context",
                   patchwork.entry(JORDAN_PER_CONTEXT).passed)
        report.add("patchwork map is not globally additive", not patchwork.values['linear'], witness=relation)
        transpose = transpose_map(poset.algebra)
        report.add("transpose is not a *-homomorphism", not verify_hom(transpose))
        report.add("transpose restricts to the identity partial automorphism",
                   partial_iso_from_jordan_map(transpose, poset, poset) == identity_partial_iso(poset))
    elif name == 'mermin':
        sigma = presheaf_for(poset)
        sections = global_sections(sigma)
        oracle = global_sections_bruteforce(sigma)
        report.values['global_sections'] = len(sections)
        report.values['lattice_elements'] = len(lattice)
        report.add("no global section over the stored family (backtracking and exhaustive oracle)",
                   not sections and not oracle)

    logger.info(f"[BUNDLES] correspondence suite {name}: {'pass' if report.passed else 'FAIL'}")
    return report


def observed_counts(poset: ContextPoset) -> Dict[str, int]:
    """The quantities bundled files record under "expected"."""
    maximal = poset.maximal()
    sizes = {len(poset.contexts[m]) for m in maximal}
    return {
        'contexts': len(poset),
        'maximal': len(maximal),
        'atoms_per_maximal': sizes.pop() if len(sizes) == 1 else -1,
        'global_sections': len(global_sections(presheaf_for(poset))),
        'lattice_elements': len(lattice_for(poset)),
    }


def compare_counts(expected: Dict[str, int], observed: Dict[str, int]) -> List[Tuple[str, int, int]]:
    """(key, expected, observed) for every recorded count that does not match."""
    return [(key, value, observed.get(key)) for key, value in sorted(expected.items()) if observed.get(key) != value]


def family_for(name: str):
    """The serialisable family behind a bundled data file."""
    if name == 'mermin':
        return mermin_peres_family()
    if name == 'm2fan':
        return fan_family(3)
    if name.startswith('c') and name[1:].isdigit():
        return partition_family(int(name[1:]))
    raise SchemaError(f"No data family named {name!r}", witness=name)
