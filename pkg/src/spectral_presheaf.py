"""
The spectral presheaf over a context poset.

A character of a finite-dimensional abelian algebra is evaluation at a
unique atom, so the component at a context C is its list of atom indices
and restriction along C' <= C sends an atom of C to the atom of C' above it.
Also: the Bohrification copresheaf, global sections and local duality.
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from typing import Dict, List, Optional, Sequence, Tuple

from src.context_poset import Context, ContextPoset, atom_decomposition
from src.errors import CorruptPosetError, ObjectMismatchError
from src.exact_arith import (
    ONE,
    ZERO,
    BlockMatrix,
    GaussianRational,
    linear_combination,
    mat_adjoint,
    mat_mul,
    solve_membership,
)
from src.reports import CheckReport

logger = logging.getLogger(__name__)

Table = Tuple[int, ...]


@dataclass(frozen=True)
class SpectralPresheaf:
    """
    Sigma over a poset.

    components[c] is the number of characters at context c (characters are
    0..n-1, i.e. atom indices). restrictions[(small, big)] maps each
    character of big to a character of small, for every stored small <= big.
    """

    poset: ContextPoset
    components: Tuple[int, ...]
    restrictions: Dict[Tuple[int, int], Table]

    def __hash__(self):
        return hash((self.poset, self.components))

    def restrict(self, small: int, big: int, character: int) -> int:
        return self.restrictions[(small, big)][character]


def build_presheaf(poset: ContextPoset) -> SpectralPresheaf:
    """
    Components are atom lists; an atom a of C restricts to the unique atom
    a' of C' with a <= a'.
    """
    restrictions = {}
    for small, big in sorted(poset.leq):
        c_small, c_big = poset.contexts[small], poset.contexts[big]
        table = [None] * len(c_big)
        for k, atom in enumerate(c_small.atoms):
            parts = atom_decomposition(atom, c_big)
            if parts is None:
                raise CorruptPosetError(
                    f"Atom {k} of context {small} is not a sum of atoms of context {big}",
                    witness={'small': small, 'big': big, 'atom': k},
                )
            for part in parts:
                if table[part] is not None:
                    raise CorruptPosetError(
                        f"Atom {part} of context {big} lies under two atoms of context {small}",
                        witness={'small': small, 'big': big, 'atom': part},
                    )
                table[part] = k
        if any(t is None for t in table):
            raise CorruptPosetError(f"Restriction {big} -> {small} is not total",
                                    witness={'small': small, 'big': big})
        restrictions[(small, big)] = tuple(table)

    components = tuple(len(c) for c in poset.contexts)
    logger.info(f"[PRESHEAF] built Sigma over {len(poset)} contexts, {sum(components)} characters")
    return SpectralPresheaf(poset, components, restrictions)


def pullback_presheaf(table: Sequence[int], source_poset: ContextPoset, sigma: SpectralPresheaf) -> SpectralPresheaf:
    """
    Gamma*(Sigma): the presheaf over source_poset with component at C equal
    to Sigma at table[C], restrictions transported along the base map.
    """
    components = tuple(sigma.components[table[c]] for c in range(len(source_poset)))
    restrictions = {
        (small, big): sigma.restrictions[(table[small], table[big])]
        for small, big in source_poset.leq
    }
    return SpectralPresheaf(source_poset, components, restrictions)


def check_functoriality(sigma: SpectralPresheaf) -> CheckReport:
    """Identity and composition laws on every stored triple."""
    report = CheckReport(title="Spectral presheaf functoriality",
                         claim="restriction maps form a presheaf")
    poset = sigma.poset
    for c in range(len(poset)):
        identity = sigma.restrictions[(c, c)] == tuple(range(sigma.components[c]))
        report.add(f"r[{c},{c}] = id", identity, witness=None if identity else c)

    composed_ok = True
    witness = None
    for big in range(len(poset)):
        for mid in poset.below(big):
            for small in poset.below(mid):
                direct = sigma.restrictions[(small, big)]
                via = tuple(sigma.restrictions[(small, mid)][x] for x in sigma.restrictions[(mid, big)])
                if direct != via:
                    composed_ok = False
                    witness = witness or [small, mid, big]
    report.add("r[C'',C] = r[C'',C'] o r[C',C] on all stored triples", composed_ok, witness=witness)
    return report


def check_surjectivity(sigma: SpectralPresheaf) -> CheckReport:
    report = CheckReport(title="Spectral presheaf surjectivity",
                         claim="every restriction map is surjective")
    failures = [
        [small, big] for (small, big), table in sorted(sigma.restrictions.items())
        if set(table) != set(range(sigma.components[small]))
    ]
    report.add("all restriction maps surjective", not failures, witness=failures[0] if failures else None)
    return report


@dataclass(frozen=True)
class Bohrification:
    """
    The tautological copresheaf C |-> C.

    inclusions[(small, big)][k] is the set of atoms of big summing to atom
    k of small.
    """

    poset: ContextPoset
    inclusions: Dict[Tuple[int, int], Tuple[Tuple[int, ...], ...]]

    def __hash__(self):
        return hash(self.poset)

    def component(self, c: int) -> Tuple[BlockMatrix, ...]:
        return self.poset.contexts[c].atoms


def build_bohrification(poset: ContextPoset) -> Bohrification:
    inclusions = {}
    for small, big in sorted(poset.leq):
        c_big = poset.contexts[big]
        parts = []
        for atom in poset.contexts[small].atoms:
            decomposition = atom_decomposition(atom, c_big)
            if decomposition is None:
                raise CorruptPosetError(f"Context {small} is not contained in context {big}",
                                        witness={'small': small, 'big': big})
            parts.append(tuple(sorted(decomposition)))
        inclusions[(small, big)] = tuple(parts)
    return Bohrification(poset, inclusions)


def check_bohrification_duality(sigma: SpectralPresheaf, bohr: Bohrification) -> CheckReport:
    """|Sigma(C)| = number of atoms of the Bohrification at C; the inclusion tables dualize to the restrictions."""
    report = CheckReport(title="Bohrification / spectral presheaf duality",
                         claim="componentwise Gelfand duality between the Bohrification and Sigma")
    sizes = all(sigma.components[c] == len(bohr.component(c)) for c in range(len(sigma.poset)))
    report.add("component sizes agree", sizes)

    dual_ok = True
    witness = None
    for (small, big), parts in bohr.inclusions.items():
        for k, part in enumerate(parts):
            if any(sigma.restrictions[(small, big)][x] != k for x in part):
                dual_ok = False
                witness = witness or [small, big, k]
    report.add("inclusion tables dualize to restrictions", dual_ok, witness=witness)
    return report


# global sections

@dataclass(frozen=True)
class GlobalSection:
    """One character per context, compatible with every restriction."""

    assignment: Tuple[int, ...]


def _maximal_order(sigma: SpectralPresheaf) -> List[int]:
    maximal = sigma.poset.maximal()
    return sorted(maximal, key=lambda m: (-sigma.components[m], m))


def global_sections(sigma: SpectralPresheaf) -> List[GlobalSection]:
    """
    Enumerate all global sections.

    Backtracks over the maximal contexts (largest components first); each
    choice is pushed down to every context below it at once, and a clash
    with an earlier push prunes the branch. Every context lies below a
    maximal one, so a full assignment of maximal contexts fixes the section.
    """
    poset = sigma.poset
    order = _maximal_order(sigma)
    assignment: List[Optional[int]] = [None] * len(poset)
    # how many maximal contexts currently pin each context
    pins = [0] * len(poset)
    found: List[GlobalSection] = []
    explored = 0

    def push(m: int, character: int) -> Optional[List[int]]:
        changed = []
        for c in poset.below(m):
            value = sigma.restrictions[(c, m)][character]
            if assignment[c] is None:
                assignment[c] = value
            elif assignment[c] != value:
                pop(changed)
                return None
            pins[c] += 1
            changed.append(c)
        return changed

    def pop(changed: List[int]):
        for c in changed:
            pins[c] -= 1
            if pins[c] == 0:
                assignment[c] = None

    def search(depth: int):
        nonlocal explored
        if depth == len(order):
            found.append(GlobalSection(tuple(assignment)))
            return
        m = order[depth]
        for character in range(sigma.components[m]):
            explored += 1
            changed = push(m, character)
            if changed is None:
                continue
            search(depth + 1)
            pop(changed)

    search(0)
    found.sort(key=lambda s: s.assignment)
    logger.info(f"[SECTIONS] {len(found)} global sections over {len(poset)} contexts "
                f"({len(order)} maximal, {explored} branches)")
    return found


def global_sections_bruteforce(sigma: SpectralPresheaf) -> List[GlobalSection]:
    """
    Independent oracle: every assignment of the maximal contexts, each
    checked against every stored order pair.
    """
    poset = sigma.poset
    maximal = poset.maximal()
    found = []
    for choice in product(*(range(sigma.components[m]) for m in maximal)):
        assignment: List[Optional[int]] = [None] * len(poset)
        consistent = True
        for m, character in zip(maximal, choice):
            for c in poset.below(m):
                value = sigma.restrictions[(c, m)][character]
                if assignment[c] is not None and assignment[c] != value:
                    consistent = False
                    break
                assignment[c] = value
            if not consistent:
                break
        if consistent and is_global_section(sigma, assignment):
            found.append(GlobalSection(tuple(assignment)))
    found.sort(key=lambda s: s.assignment)
    return found


def is_global_section(sigma: SpectralPresheaf, assignment: Sequence[Optional[int]]) -> bool:
    if any(a is None for a in assignment):
        return False
    return all(sigma.restrictions[(small, big)][assignment[big]] == assignment[small]
               for small, big in sigma.poset.leq)


def restrict_sections(sections: Sequence[GlobalSection], larger: SpectralPresheaf,
                      smaller: SpectralPresheaf) -> List[GlobalSection]:
    """
    Restrict sections over a larger family to a smaller one (context-wise
    subset of the same algebra); the result is injective on sections.
    """
    if larger.poset.algebra != smaller.poset.algebra:
        raise ObjectMismatchError("Families of different algebras",
                                  witness=[larger.poset.algebra.label, smaller.poset.algebra.label])
    positions = []
    for context in smaller.poset.contexts:
        index = larger.poset.get_index(context)
        if index is None:
            raise ObjectMismatchError("Smaller family is not contained in the larger one",
                                      witness=[a.entry_strings() for a in context.atoms])
        positions.append(index)
    return [GlobalSection(tuple(s.assignment[i] for i in positions)) for s in sections]


# local duality

def local_duality_roundtrip(context: Context) -> bool:
    """
    Gelfand duality for one context, checked exactly.

    x |-> (atom-basis coefficients of x) identifies C with functions on its
    atoms: it sends the unit to the constant 1, atoms to point indicators,
    and respects products and the involution. Characters of the function
    algebra are point evaluations; composing with the identification gives
    back the characters of C, and the double dual returns the same points.
    """
    atoms = list(context.atoms)
    k = len(atoms)

    def transform(x: BlockMatrix) -> Optional[Tuple[GaussianRational, ...]]:
        coefficients = solve_membership(x, atoms)
        return tuple(coefficients) if coefficients is not None else None

    def inverse(f: Sequence[GaussianRational]) -> BlockMatrix:
        return linear_combination(f, atoms)

    if transform(context.algebra.unit()) != tuple([ONE] * k):
        return False

    indicators = [tuple(ONE if j == i else ZERO for j in range(k)) for i in range(k)]
    for i, a in enumerate(atoms):
        if transform(a) != indicators[i]:
            return False

    for i, j in product(range(k), repeat=2):
        pointwise = tuple(x * y for x, y in zip(indicators[i], indicators[j]))
        if transform(mat_mul(atoms[i], atoms[j])) != pointwise:
            return False

    # a generic element with distinct complex values on each point
    values = [GaussianRational(i + 1, k - i) for i in range(k)]
    x = inverse(values)
    fx = transform(x)
    if fx != tuple(values) or inverse(fx) != x:
        return False
    if transform(mat_adjoint(x)) != tuple(v.conjugate() for v in values):
        return False
    if transform(mat_mul(x, x)) != tuple(v * v for v in values):
        return False

    # characters of C: lambda_i(x) = i-th coefficient; they are multiplicative
    # and unital, and lambda_i(atom_j) = delta_ij recovers the point i
    for i in range(k):
        recovered = [j for j in range(k) if transform(atoms[j])[i] == ONE]
        if recovered != [i]:
            return False
        if transform(mat_mul(x, x))[i] != fx[i] * fx[i]:
            return False
    return True


@lru_cache(maxsize=64)
def presheaf_for(poset: ContextPoset) -> SpectralPresheaf:
    """build_presheaf, memoised per poset."""
    return build_presheaf(poset)


@lru_cache(maxsize=64)
def bohrification_for(poset: ContextPoset) -> Bohrification:
    return build_bohrification(poset)
