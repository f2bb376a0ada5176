"""
Contexts and finite posets of contexts.

A context is a unital abelian *-subalgebra, stored as its atoms: pairwise
orthogonal nonzero projections summing to the unit. A ContextPoset is a
finite, intersection-closed family of contexts ordered by inclusion.
"""

import logging
from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, FrozenSet, Iterator, List, Optional, Sequence, Tuple

import networkx as nx
from networkx.algorithms.isomorphism import DiGraphMatcher

from src.config import get_settings
from src.errors import (
    ContextInvariantError,
    NonCommutingError,
    NotAProjectionError,
    ObjectMismatchError,
    SizeBoundError,
)
from src.exact_arith import BlockMatrix, mat_add, mat_mul, mat_scale, mat_sub, GaussianRational
from src.star_algebra import StarAlgebra, abelian_algebra, commutes, is_projection, is_self_adjoint

logger = logging.getLogger(__name__)

HALF = GaussianRational(1) / 2


@dataclass(frozen=True)
class Context:
    """A unital abelian subalgebra given by its atoms, canonically ordered."""

    algebra: StarAlgebra
    atoms: Tuple[BlockMatrix, ...]

    @classmethod
    def of(cls, algebra: StarAlgebra, atoms: Sequence[BlockMatrix]) -> 'Context':
        """Validate the atoms and return the context in canonical form."""
        atoms = list(atoms)
        if not atoms:
            raise ContextInvariantError("A context needs at least one atom", witness=[])

        for k, p in enumerate(atoms):
            algebra.check_element(p)
            if p.is_zero():
                raise ContextInvariantError(f"Atom {k} is zero", witness={'atom': k})
            if not is_projection(p):
                raise NotAProjectionError(f"Atom {k} is not a projection", witness={'atom': k})

        for i, j in combinations(range(len(atoms)), 2):
            if not mat_mul(atoms[i], atoms[j]).is_zero():
                raise ContextInvariantError(
                    f"Atoms {i} and {j} are not orthogonal", witness={'atoms': [i, j]}
                )

        total = algebra.zero()
        for p in atoms:
            total = mat_add(total, p)
        residual = mat_sub(algebra.unit(), total)
        if not residual.is_zero():
            raise ContextInvariantError(
                "Atoms do not sum to the unit", witness={'residual': residual.entry_strings()}
            )

        return cls(algebra, tuple(sorted(atoms, key=lambda a: a.sort_key())))

    def __len__(self) -> int:
        return len(self.atoms)

    def sort_key(self) -> Tuple:
        return (len(self.atoms), tuple(a.sort_key() for a in self.atoms))

    def decompose(self, p: BlockMatrix) -> Optional[FrozenSet[int]]:
        """Indices of the atoms summing to p, or None if p is not such a sum."""
        return atom_decomposition(p, self)

    def projections(self) -> Iterator[Tuple[FrozenSet[int], BlockMatrix]]:
        """Every projection of the context (all atom-subset sums), including 0."""
        n = len(self.atoms)
        for mask in range(1 << n):
            subset = frozenset(i for i in range(n) if mask >> i & 1)
            yield subset, subset_sum(self, subset)

    def __str__(self) -> str:
        return f"Context[{len(self.atoms)} atoms in {self.algebra.label}]"


def subset_sum(context: Context, subset) -> BlockMatrix:
    total = context.algebra.zero()
    for i in sorted(subset):
        total = mat_add(total, context.atoms[i])
    return total


def trivial_context(algebra: StarAlgebra) -> Context:
    return Context(algebra, (algebra.unit(),))


def atom_decomposition(p: BlockMatrix, context: Context) -> Optional[FrozenSet[int]]:
    context.algebra.check_element(p)
    support = frozenset(i for i, a in enumerate(context.atoms) if not mat_mul(a, p).is_zero())
    if subset_sum(context, support) != p:
        return None
    return support


def contains_projection(context: Context, p: BlockMatrix) -> bool:
    return atom_decomposition(p, context) is not None


def is_subcontext(small: Context, big: Context) -> bool:
    """small <= big: every atom of small is a sum of atoms of big."""
    if small.algebra != big.algebra:
        raise ObjectMismatchError("Contexts live in different algebras",
                                  witness=[small.algebra.label, big.algebra.label])
    if len(small) > len(big):
        return False
    return all(atom_decomposition(a, big) is not None for a in small.atoms)


def context_from_projections(algebra: StarAlgebra, ps: Sequence[BlockMatrix]) -> Context:
    """
    The context generated by pairwise commuting projections.

    Its atoms are the nonzero products q_1 ... q_k with q_j in {p_j, 1 - p_j}.
    """
    unit = algebra.unit()
    for k, p in enumerate(ps):
        algebra.check_element(p)
        if not is_projection(p):
            raise NotAProjectionError(f"Generator {k} is not a projection", witness={'generator': k})
    for i, j in combinations(range(len(ps)), 2):
        if not commutes(ps[i], ps[j]):
            raise NonCommutingError(f"Generators {i} and {j} do not commute", witness={'generators': [i, j]})

    atoms = [unit]
    for p in ps:
        complement = mat_sub(unit, p)
        refined = []
        for a in atoms:
            for q in (p, complement):
                product = mat_mul(a, q)
                if not product.is_zero():
                    refined.append(product)
        atoms = refined
    return Context.of(algebra, atoms)


def context_from_involutions(algebra: StarAlgebra, involutions: Sequence[BlockMatrix]) -> Context:
    """Context generated by commuting self-adjoint A with A^2 = 1, via (1 + A)/2."""
    unit = algebra.unit()
    projections = []
    for k, a in enumerate(involutions):
        algebra.check_element(a)
        if not is_self_adjoint(a) or mat_mul(a, a) != unit:
            raise NotAProjectionError(f"Generator {k} is not a self-adjoint involution",
                                      witness={'generator': k})
        projections.append(mat_scale(mat_add(unit, a), HALF))
    return context_from_projections(algebra, projections)


def intersect(c1: Context, c2: Context) -> Context:
    """
    Meet of two contexts: the subalgebra of projections common to both.

    Link atom i of c1 and atom j of c2 when a_i b_j != 0. Every common
    projection is a union of linked components, and a component is common
    exactly when its c1-sum equals its c2-sum. The atoms of the meet are the
    common components plus, if any remain, the sum of all the others.
    """
    if c1.algebra != c2.algebra:
        raise ObjectMismatchError("Cannot intersect contexts of different algebras",
                                  witness=[c1.algebra.label, c2.algebra.label])
    if c1 == c2:
        return c1

    graph = nx.Graph()
    graph.add_nodes_from(('a', i) for i in range(len(c1)))
    graph.add_nodes_from(('b', j) for j in range(len(c2)))
    for i, a in enumerate(c1.atoms):
        for j, b in enumerate(c2.atoms):
            if not mat_mul(a, b).is_zero():
                graph.add_edge(('a', i), ('b', j))

    common = []
    leftover = c1.algebra.zero()
    for component in nx.connected_components(graph):
        left = subset_sum(c1, [i for side, i in component if side == 'a'])
        right = subset_sum(c2, [j for side, j in component if side == 'b'])
        if left == right:
            common.append(left)
        else:
            leftover = mat_add(leftover, left)
    if not leftover.is_zero():
        common.append(leftover)
    return Context.of(c1.algebra, common)


@dataclass(frozen=True)
class ContextPoset:
    """
    A finite intersection-closed family of contexts ordered by inclusion.

    contexts are canonically sorted (fewer atoms first), so index 0 is the
    trivial context and every index order is a linear extension of <=.
    leq holds the pairs (i, j) with contexts[i] <= contexts[j].
    """

    algebra: StarAlgebra
    contexts: Tuple[Context, ...]
    leq: FrozenSet[Tuple[int, int]]
    _index: Dict[Context, int] = field(init=False, repr=False, compare=False, hash=False)
    _below: Tuple[Tuple[int, ...], ...] = field(init=False, repr=False, compare=False, hash=False)
    _above: Tuple[Tuple[int, ...], ...] = field(init=False, repr=False, compare=False, hash=False)
    _rank: Tuple[int, ...] = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        n = len(self.contexts)
        object.__setattr__(self, '_index', {c: i for i, c in enumerate(self.contexts)})
        below = tuple(tuple(i for i in range(n) if (i, j) in self.leq) for j in range(n))
        above = tuple(tuple(j for j in range(n) if (i, j) in self.leq) for i in range(n))
        object.__setattr__(self, '_below', below)
        object.__setattr__(self, '_above', above)
        rank = [0] * n
        for j in range(n):
            rank[j] = max((rank[i] + 1 for i in below[j] if i != j), default=0)
        object.__setattr__(self, '_rank', tuple(rank))

    @classmethod
    def from_contexts(cls, algebra: StarAlgebra, contexts: Sequence[Context]) -> 'ContextPoset':
        """Sort, deduplicate and compute the inclusion order by atom-sum containment."""
        for c in contexts:
            if c.algebra != algebra:
                raise ObjectMismatchError(f"Context of {c.algebra.label} in a poset of {algebra.label}",
                                          witness=c.algebra.label)
        unique = sorted(set(contexts), key=lambda c: c.sort_key())
        leq = set()
        for i, small in enumerate(unique):
            leq.add((i, i))
            for j in range(i + 1, len(unique)):
                if is_subcontext(small, unique[j]):
                    leq.add((i, j))
        return cls(algebra, tuple(unique), frozenset(leq))

    def __len__(self) -> int:
        return len(self.contexts)

    def __contains__(self, context: Context) -> bool:
        return context in self._index

    def index(self, context: Context) -> int:
        return self._index[context]

    def get_index(self, context: Context) -> Optional[int]:
        return self._index.get(context)

    def le(self, i: int, j: int) -> bool:
        return (i, j) in self.leq

    def below(self, j: int) -> Tuple[int, ...]:
        return self._below[j]

    def above(self, i: int) -> Tuple[int, ...]:
        return self._above[i]

    def rank(self, i: int) -> int:
        return self._rank[i]

    @property
    def bottom(self) -> int:
        return 0

    def maximal(self) -> List[int]:
        return [i for i in range(len(self)) if self._above[i] == (i,)]

    def covers(self) -> List[Tuple[int, int]]:
        """Pairs (i, j) with i < j and nothing strictly in between."""
        result = []
        for i, j in sorted(self.leq):
            if i == j:
                continue
            if not any(k not in (i, j) and (k, j) in self.leq for k in self._above[i]):
                result.append((i, j))
        return result

    def hasse_diagram(self) -> nx.DiGraph:
        graph = nx.DiGraph()
        for i in range(len(self)):
            graph.add_node(i, rank=self._rank[i], down=len(self._below[i]), up=len(self._above[i]))
        graph.add_edges_from(self.covers())
        return graph

    def meet(self, i: int, j: int) -> int:
        return self.index(intersect(self.contexts[i], self.contexts[j]))


def closure(algebra: StarAlgebra, generators: Sequence[Context]) -> ContextPoset:
    """Smallest family containing the generators and the trivial context that is closed under intersect."""
    limit = get_settings().max_contexts
    family = {trivial_context(algebra)}
    family.update(generators)
    if len(family) > limit:
        raise SizeBoundError(f"Closure exceeds {limit} contexts (SPECPRESHEAF_MAX_CONTEXTS)", witness=limit)
    frontier = list(family)
    while frontier:
        discovered = []
        existing = list(family)
        for c in frontier:
            for d in existing:
                meet = intersect(c, d)
                if meet not in family:
                    family.add(meet)
                    discovered.append(meet)
                    if len(family) > limit:
                        raise SizeBoundError(
                            f"Closure exceeds {limit} contexts (SPECPRESHEAF_MAX_CONTEXTS)", witness=limit
                        )
        frontier = discovered

    logger.info(f"[POSET] closure of {len(generators)} generators reached {len(family)} contexts")
    return ContextPoset.from_contexts(algebra, list(family))


def set_partitions(n: int) -> Iterator[List[List[int]]]:
    """All partitions of {0, ..., n-1}, blocks in order of their smallest element."""
    if n == 0:
        yield []
        return
    for partition in set_partitions(n - 1):
        for k in range(len(partition)):
            yield [block + [n - 1] if b == k else block for b, block in enumerate(partition)]
        yield partition + [[n - 1]]


def partition_context(algebra: StarAlgebra, blocks: Sequence[Sequence[int]]) -> Context:
    """Context of C^n whose atoms are the block indicator projections."""
    n = len(algebra.shape)
    atoms = [BlockMatrix.diagonal([1 if k in block else 0 for k in range(n)]) for block in blocks]
    return Context.of(algebra, atoms)


def full_abelian_poset(n: int) -> ContextPoset:
    """
    C(C^n): one context per set partition of {1..n}, ordered by refinement.

    Every unital subalgebra of C^n is of this form, so the poset is the
    whole context category. It has Bell(n) elements.
    """
    settings = get_settings()
    bound = settings.max_full_abelian
    if n < 1 or n > bound:
        raise SizeBoundError(f"full_abelian_poset needs 1 <= n <= {bound} (SPECPRESHEAF_MAX_FULL_ABELIAN)",
                             witness=n)

    algebra = abelian_algebra(n)
    partitions = [tuple(frozenset(b) for b in p) for p in set_partitions(n)]
    if len(partitions) > settings.max_contexts:
        raise SizeBoundError(f"C^{n} has {len(partitions)} contexts, more than {settings.max_contexts} "
                             f"(SPECPRESHEAF_MAX_CONTEXTS)", witness=len(partitions))
    contexts = [partition_context(algebra, [sorted(b) for b in p]) for p in partitions]
    order = sorted(range(len(contexts)), key=lambda k: contexts[k].sort_key())
    contexts = [contexts[k] for k in order]
    partitions = [partitions[k] for k in order]

    # coarse <= fine: every block of the coarse partition is a union of fine blocks
    leq = set()
    for i, coarse in enumerate(partitions):
        for j, fine in enumerate(partitions):
            if all(any(block <= big for big in coarse) for block in fine):
                leq.add((i, j))

    logger.info(f"[POSET] full abelian poset of C^{n}: {len(contexts)} contexts")
    return ContextPoset(algebra, tuple(contexts), frozenset(leq))


def _node_match(a: dict, b: dict) -> bool:
    return a['rank'] == b['rank'] and a['down'] == b['down'] and a['up'] == b['up']


def order_isomorphisms(p: ContextPoset, q: ContextPoset) -> List[Tuple[int, ...]]:
    """
    All order-isomorphisms p -> q as tables (table[i] = image of i), sorted.

    Order-isomorphisms are exactly the isomorphisms of Hasse diagrams. The
    VF2 matcher backtracks over candidates with equal rank and equal
    up-/down-set sizes.
    """
    limit = get_settings().automorphism_limit
    if max(len(p), len(q)) > limit:
        raise SizeBoundError(
            f"Automorphism search is limited to {limit} contexts "
            f"(SPECPRESHEAF_MAX_AUTOMORPHISM_CONTEXTS, capped by SPECPRESHEAF_MAX_CONTEXTS)",
            witness=max(len(p), len(q)),
        )
    if len(p) != len(q):
        return []

    matcher = DiGraphMatcher(p.hasse_diagram(), q.hasse_diagram(), node_match=_node_match)
    tables = sorted(tuple(mapping[i] for i in range(len(p))) for mapping in matcher.isomorphisms_iter())
    logger.info(f"[POSET] {len(tables)} order-isomorphisms between posets of size {len(p)}")
    return tables


def order_automorphisms(p: ContextPoset) -> List[Tuple[int, ...]]:
    """All order-automorphisms of p as permutation tables; the identity is always first."""
    return order_isomorphisms(p, p)


def is_monotone_table(table: Sequence[int], p: ContextPoset, q: ContextPoset) -> bool:
    return all(q.le(table[i], table[j]) for i, j in p.leq)


def is_order_isomorphism_table(table: Sequence[int], p: ContextPoset, q: ContextPoset) -> bool:
    """Bijective, monotone, with monotone inverse."""
    if len(table) != len(p) or sorted(table) != list(range(len(q))):
        return False
    return all(p.le(i, j) == q.le(table[i], table[j]) for i in range(len(p)) for j in range(len(p)))
