"""
Finite-dimensional unital *-algebras and unital *-homomorphisms.

An algebra is a block shape [n_1, ..., n_k], i.e. M_{n_1} (+) ... (+) M_{n_k}.
Homomorphisms are stored as exact linear maps on coordinate vectors and
verified on matrix units.
"""

import logging
from dataclasses import dataclass
from itertools import product
from typing import List, Optional, Sequence, Tuple

from src.errors import NotAnIsomorphismError, ObjectMismatchError, ShapeMismatchError
from src.exact_arith import (
    ONE,
    ZERO,
    BlockMatrix,
    GaussianRational,
    as_scalar,
    coordinate_dimension,
    mat_add,
    mat_adjoint,
    mat_mul,
    mat_scale,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class StarAlgebra:
    """A direct sum of full matrix algebras."""

    shape: Tuple[int, ...]
    label: str = ""

    def __post_init__(self):
        shape = tuple(int(n) for n in self.shape)
        if not shape or any(n < 1 for n in shape):
            raise ShapeMismatchError(f"Invalid algebra shape {list(shape)}", witness=list(shape))
        object.__setattr__(self, 'shape', shape)
        if not self.label:
            object.__setattr__(self, 'label', default_label(shape))

    @property
    def dimension(self) -> int:
        return coordinate_dimension(self.shape)

    @property
    def is_abelian(self) -> bool:
        return all(n == 1 for n in self.shape)

    def unit(self) -> BlockMatrix:
        return BlockMatrix.identity(self.shape)

    def zero(self) -> BlockMatrix:
        return BlockMatrix.zero(self.shape)

    def matrix_units(self) -> List[BlockMatrix]:
        """E^{(b)}_{rc} for every block b; ordered like coordinates()."""
        units = []
        for b, n in enumerate(self.shape):
            for r, c in product(range(n), range(n)):
                coords = [ZERO] * self.dimension
                coords[_offset(self.shape, b) + r * n + c] = ONE
                units.append(BlockMatrix.from_coordinates(self.shape, coords))
        return units

    def check_element(self, a: BlockMatrix):
        if a.shape != self.shape:
            raise ShapeMismatchError(
                f"Element of shape {list(a.shape)} is not in {self.label} {list(self.shape)}",
                witness={'element': list(a.shape), 'algebra': list(self.shape)},
            )


def default_label(shape: Sequence[int]) -> str:
    if all(n == 1 for n in shape):
        return f"C^{len(shape)}"
    return " (+) ".join("C" if n == 1 else f"M_{n}" for n in shape)


def abelian_algebra(n: int) -> StarAlgebra:
    return StarAlgebra((1,) * n, f"C^{n}")


def matrix_algebra(n: int) -> StarAlgebra:
    return StarAlgebra((n,), f"M_{n}")


def _offset(shape: Sequence[int], block: int) -> int:
    return sum(n * n for n in shape[:block])


# element predicates

def _same_shape(a: BlockMatrix, b: BlockMatrix):
    if a.shape != b.shape:
        raise ShapeMismatchError(
            f"Shapes {list(a.shape)} and {list(b.shape)} differ",
            witness={'left': list(a.shape), 'right': list(b.shape)},
        )


def commutes(a: BlockMatrix, b: BlockMatrix) -> bool:
    _same_shape(a, b)
    return mat_mul(a, b) == mat_mul(b, a)


def is_normal(a: BlockMatrix) -> bool:
    adj = mat_adjoint(a)
    return mat_mul(adj, a) == mat_mul(a, adj)


def is_self_adjoint(a: BlockMatrix) -> bool:
    return mat_adjoint(a) == a


def is_projection(a: BlockMatrix) -> bool:
    return is_self_adjoint(a) and mat_mul(a, a) == a


def is_unitary(a: BlockMatrix) -> bool:
    return mat_mul(mat_adjoint(a), a) == BlockMatrix.identity(a.shape)


def jordan_product(a: BlockMatrix, b: BlockMatrix) -> BlockMatrix:
    """a . b = (ab + ba) / 2"""
    _same_shape(a, b)
    return mat_scale(mat_add(mat_mul(a, b), mat_mul(b, a)), GaussianRational(1, 0) / 2)


# homomorphisms

Matrix = Tuple[Tuple[GaussianRational, ...], ...]


@dataclass(frozen=True)
class UnitalStarHom:
    """
    A linear map source -> target given by its matrix on coordinate vectors.

    matrix has target.dimension rows and source.dimension columns. Whether
    it really is a unital *-homomorphism is decided by verify_hom; use
    build_hom to get a verified one.
    """

    source: StarAlgebra
    target: StarAlgebra
    matrix: Matrix
    name: str = ""

    def __post_init__(self):
        rows = tuple(tuple(as_scalar(x) for x in row) for row in self.matrix)
        if len(rows) != self.target.dimension or any(len(r) != self.source.dimension for r in rows):
            raise ShapeMismatchError(
                f"Hom matrix must be {self.target.dimension}x{self.source.dimension}",
                witness={'rows': len(rows), 'target_dimension': self.target.dimension,
                         'source_dimension': self.source.dimension},
            )
        object.__setattr__(self, 'matrix', rows)

    def apply(self, x: BlockMatrix) -> BlockMatrix:
        self.source.check_element(x)
        coords = x.coordinates()
        image = []
        for row in self.matrix:
            total = ZERO
            for a, c in zip(row, coords):
                if a.re or a.im:
                    total = total + a * c
            image.append(total)
        return BlockMatrix.from_coordinates(self.target.shape, image)

    __call__ = apply


def hom_from_images(source: StarAlgebra, target: StarAlgebra, images: Sequence[BlockMatrix],
                    name: str = "") -> UnitalStarHom:
    """Linear map sending the i-th matrix unit of source to images[i] (not verified)."""
    if len(images) != source.dimension:
        raise ShapeMismatchError(
            f"Need {source.dimension} images (one per matrix unit), got {len(images)}",
            witness=len(images),
        )
    for image in images:
        target.check_element(image)
    columns = [image.coordinates() for image in images]
    matrix = tuple(tuple(columns[j][i] for j in range(source.dimension)) for i in range(target.dimension))
    return UnitalStarHom(source, target, matrix, name)


def build_hom(source: StarAlgebra, target: StarAlgebra, images: Sequence[BlockMatrix],
              name: str = "") -> UnitalStarHom:
    """Like hom_from_images but raises unless the result is a unital *-homomorphism."""
    h = hom_from_images(source, target, images, name)
    if not verify_hom(h):
        raise NotAnIsomorphismError(
            f"Map {name or '(unnamed)'} from {source.label} to {target.label} is not a unital *-homomorphism",
            witness=name,
        )
    return h


def verify_hom(h: UnitalStarHom) -> bool:
    """
    Check h(1) = 1, h(xy) = h(x)h(y) and h(x*) = h(x)* on matrix units.

    Matrix units span the algebra and are closed under * and (up to zero)
    products, so checking them suffices.
    """
    if h.apply(h.source.unit()) != h.target.unit():
        logger.debug(f"[HOM] {h.name}: unit not preserved")
        return False

    units = h.source.matrix_units()
    images = [h.apply(u) for u in units]
    for u, hu in zip(units, images):
        if h.apply(mat_adjoint(u)) != mat_adjoint(hu):
            logger.debug(f"[HOM] {h.name}: involution not preserved")
            return False
    for (u, hu), (v, hv) in product(zip(units, images), repeat=2):
        if h.apply(mat_mul(u, v)) != mat_mul(hu, hv):
            logger.debug(f"[HOM] {h.name}: product not preserved")
            return False
    return True


def compose_hom(g: UnitalStarHom, f: UnitalStarHom) -> UnitalStarHom:
    """g after f."""
    if f.target != g.source:
        raise ObjectMismatchError(
            f"Cannot compose: {f.name or 'f'} lands in {f.target.label}, "
            f"{g.name or 'g'} starts at {g.source.label}",
            witness={'f_target': f.target.label, 'g_source': g.source.label},
        )
    rows = []
    for grow in g.matrix:
        row = []
        for j in range(f.source.dimension):
            total = ZERO
            for k, a in enumerate(grow):
                if a.re or a.im:
                    total = total + a * f.matrix[k][j]
            row.append(total)
        rows.append(tuple(row))
    name = f"{g.name}*{f.name}" if g.name and f.name else ""
    return UnitalStarHom(f.source, g.target, tuple(rows), name)


def identity_hom(algebra: StarAlgebra) -> UnitalStarHom:
    return hom_from_images(algebra, algebra, algebra.matrix_units(), "id")


def permutation_hom(n: int, permutation: Sequence[int], name: str = "") -> UnitalStarHom:
    """
    The *-automorphism of C^n moving coordinate i to coordinate permutation[i].

    (a_1, ..., a_n) |-> b with b[permutation[i]] = a_i.
    """
    algebra = abelian_algebra(n)
    if sorted(permutation) != list(range(n)):
        raise ShapeMismatchError(f"{list(permutation)} is not a permutation of range({n})",
                                 witness=list(permutation))
    images = []
    for i in range(n):
        values = [ZERO] * n
        values[permutation[i]] = ONE
        images.append(BlockMatrix.diagonal(values))
    return hom_from_images(algebra, algebra, images, name or f"perm{tuple(permutation)}")


def diagonal_embedding(n: int, multiplicities: Sequence[int], name: str = "") -> UnitalStarHom:
    """
    C^n -> C^m with coordinate i copied multiplicities[i] times, in order.

    multiplicities (2, 1) gives (a, b) |-> (a, a, b). A zero multiplicity
    gives a non-injective map.
    """
    if len(multiplicities) != n:
        raise ShapeMismatchError(f"Need {n} multiplicities", witness=list(multiplicities))
    m = sum(multiplicities)
    images = []
    offset = 0
    for k in multiplicities:
        values = [ONE if offset <= j < offset + k else ZERO for j in range(m)]
        images.append(BlockMatrix.diagonal(values))
        offset += k
    return hom_from_images(abelian_algebra(n), abelian_algebra(m), images,
                           name or f"diag{tuple(multiplicities)}")


def projection_hom(n: int, keep: Sequence[int], name: str = "") -> UnitalStarHom:
    """C^n -> C^len(keep), (a_1..a_n) |-> (a_keep[0], ...)."""
    m = len(keep)
    images = []
    for i in range(n):
        values = [ONE if keep[j] == i else ZERO for j in range(m)]
        images.append(BlockMatrix.diagonal(values))
    return hom_from_images(abelian_algebra(n), abelian_algebra(m), images, name or f"proj{tuple(keep)}")


def inner_automorphism(algebra: StarAlgebra, u: BlockMatrix, name: str = "") -> UnitalStarHom:
    """Ad u : x |-> u x u*, for a unitary u."""
    algebra.check_element(u)
    if not is_unitary(u):
        raise NotAnIsomorphismError("Ad u needs a unitary u", witness=u.entry_strings())
    u_star = mat_adjoint(u)
    images = [mat_mul(mat_mul(u, e), u_star) for e in algebra.matrix_units()]
    return hom_from_images(algebra, algebra, images, name or "Ad(u)")


def transpose_map(algebra: StarAlgebra) -> UnitalStarHom:
    """
    x |-> x^T blockwise.

    A unital linear Jordan *-automorphism; a *-homomorphism only when every
    block is 1x1, so verify_hom rejects it for nonabelian algebras.
    """
    images = []
    for b, n in enumerate(algebra.shape):
        for r, c in product(range(n), range(n)):
            coords = [ZERO] * algebra.dimension
            coords[_offset(algebra.shape, b) + c * n + r] = ONE
            images.append(BlockMatrix.from_coordinates(algebra.shape, coords))
    return hom_from_images(algebra, algebra, images, "transpose")


def preserves_jordan_product(h: UnitalStarHom,
                             pairs: Optional[Sequence[Tuple[BlockMatrix, BlockMatrix]]] = None) -> bool:
    """h(a.b) = h(a).h(b) on the given pairs (default: all matrix-unit pairs)."""
    if pairs is None:
        units = h.source.matrix_units()
        pairs = list(product(units, repeat=2))
    for a, b in pairs:
        if h.apply(jordan_product(a, b)) != jordan_product(h.apply(a), h.apply(b)):
            return False
    return h.apply(h.source.unit()) == h.target.unit()
