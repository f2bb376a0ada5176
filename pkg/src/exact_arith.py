"""
Exact arithmetic over the Gaussian rationals Q(i).

Provides the scalar type GaussianRational, block-diagonal matrices
(finite direct sums of full matrix algebras) and exact Gaussian
elimination. Nothing here ever rounds.
"""

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple, Union

from src.errors import SchemaError, ShapeMismatchError

Scalar = Union['GaussianRational', Fraction, int, str]

_SCALAR_PATTERN = re.compile(
    r'^\s*(?:(?P<re>[+-]?\d+(?:/\d+)?)\s*)?'
    r'(?:(?P<sign>[+-])?\s*(?P<im>\d+(?:/\d+)?)?\s*(?P<unit>i))?\s*$'
)


@dataclass(frozen=True)
class GaussianRational:
    """A number re + im·i with re, im arbitrary-precision rationals."""

    re: Fraction = Fraction(0)
    im: Fraction = Fraction(0)

    def __post_init__(self):
        for name in ('re', 'im'):
            value = getattr(self, name)
            if isinstance(value, (float, complex)):
                raise TypeError(f"GaussianRational.{name} must be exact, got {value!r}")
            object.__setattr__(self, name, Fraction(value))

    @classmethod
    def parse(cls, text: str) -> 'GaussianRational':
        """Parse "a", "a+b i", "a-b i", "b i", "i" or "-i" (a, b rationals like 3/4)."""
        match = _SCALAR_PATTERN.match(text)
        if not match or (match.group('re') is None and match.group('unit') is None):
            raise SchemaError(f"Not an exact Gaussian rational: {text!r}", witness=text)

        real_text, sign, imag_text, unit = match.group('re', 'sign', 'im', 'unit')
        if unit and sign is None and imag_text is None and real_text is not None:
            # "3/4 i": the leading number was the imaginary coefficient
            sign = '-' if real_text.startswith('-') else '+'
            real_text, imag_text = None, real_text.lstrip('+-')

        real = Fraction(real_text) if real_text else Fraction(0)
        imag = Fraction(0)
        if unit:
            if sign is None and real_text is not None:
                raise SchemaError(f"Missing sign before imaginary part: {text!r}", witness=text)
            imag = Fraction(imag_text) if imag_text else Fraction(1)
            if sign == '-':
                imag = -imag
        return cls(real, imag)

    def __str__(self) -> str:
        sign = '-' if self.im < 0 else '+'
        return f"{self.re}{sign}{abs(self.im)} i"

    def __repr__(self) -> str:
        return f"GaussianRational({self})"

    def is_zero(self) -> bool:
        return self.re == 0 and self.im == 0

    def __bool__(self) -> bool:
        return not self.is_zero()

    def conjugate(self) -> 'GaussianRational':
        return GaussianRational(self.re, -self.im)

    def norm_squared(self) -> Fraction:
        return self.re * self.re + self.im * self.im

    def __neg__(self) -> 'GaussianRational':
        return GaussianRational(-self.re, -self.im)

    def __add__(self, other: Scalar) -> 'GaussianRational':
        other = as_scalar(other)
        return GaussianRational(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __sub__(self, other: Scalar) -> 'GaussianRational':
        other = as_scalar(other)
        return GaussianRational(self.re - other.re, self.im - other.im)

    def __rsub__(self, other: Scalar) -> 'GaussianRational':
        return as_scalar(other) - self

    def __mul__(self, other: Scalar) -> 'GaussianRational':
        other = as_scalar(other)
        return GaussianRational(
            self.re * other.re - self.im * other.im,
            self.re * other.im + self.im * other.re,
        )

    __rmul__ = __mul__

    def inverse(self) -> 'GaussianRational':
        n = self.norm_squared()
        if n == 0:
            raise ZeroDivisionError("GaussianRational division by zero")
        return GaussianRational(self.re / n, -self.im / n)

    def __truediv__(self, other: Scalar) -> 'GaussianRational':
        return self * as_scalar(other).inverse()

    def __rtruediv__(self, other: Scalar) -> 'GaussianRational':
        return as_scalar(other) * self.inverse()

    def __eq__(self, other) -> bool:
        if isinstance(other, str):
            return NotImplemented
        try:
            other = as_scalar(other)
        except (TypeError, SchemaError):
            return NotImplemented
        return self.re == other.re and self.im == other.im

    def __hash__(self) -> int:
        # agrees with hash(int) / hash(Fraction) for real values
        if self.im == 0:
            return hash(self.re)
        return hash((self.re, self.im))


ZERO = GaussianRational(0)
ONE = GaussianRational(1)
I = GaussianRational(0, 1)


def as_scalar(value: Scalar) -> GaussianRational:
    """Coerce ints, Fractions and strings to GaussianRational."""
    if isinstance(value, GaussianRational):
        return value
    if isinstance(value, bool):
        raise TypeError("bool is not a scalar")
    if isinstance(value, (int, Fraction)):
        return GaussianRational(value)
    if isinstance(value, str):
        return GaussianRational.parse(value)
    raise TypeError(f"Cannot use {type(value).__name__} as an exact scalar")


Block = Tuple[Tuple[GaussianRational, ...], ...]


@dataclass(frozen=True)
class BlockMatrix:
    """
    A block-diagonal matrix: one square block per summand of the algebra.

    shape lists the block sizes [n_1, ..., n_k]; blocks[i] is n_i x n_i.
    """

    shape: Tuple[int, ...]
    blocks: Tuple[Block, ...]

    def __post_init__(self):
        shape = tuple(int(n) for n in self.shape)
        if not shape or any(n < 1 for n in shape):
            raise ShapeMismatchError(f"Invalid block shape {list(shape)}", witness=list(shape))
        if len(self.blocks) != len(shape):
            raise ShapeMismatchError(
                f"Shape {list(shape)} needs {len(shape)} blocks, got {len(self.blocks)}",
                witness=list(shape),
            )

        blocks = []
        for index, (n, block) in enumerate(zip(shape, self.blocks)):
            rows = tuple(tuple(as_scalar(x) for x in row) for row in block)
            if len(rows) != n or any(len(row) != n for row in rows):
                raise ShapeMismatchError(
                    f"Block {index} must be {n}x{n}", witness={'block': index, 'size': n}
                )
            blocks.append(rows)

        object.__setattr__(self, 'shape', shape)
        object.__setattr__(self, 'blocks', tuple(blocks))

    # constructors

    @classmethod
    def identity(cls, shape: Sequence[int]) -> 'BlockMatrix':
        return cls(tuple(shape), tuple(_identity_block(n) for n in shape))

    @classmethod
    def zero(cls, shape: Sequence[int]) -> 'BlockMatrix':
        return cls(tuple(shape), tuple(_zero_block(n) for n in shape))

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[Scalar]]) -> 'BlockMatrix':
        """A single full block, e.g. an element of M_n."""
        return cls((len(rows),), (tuple(tuple(row) for row in rows),))

    @classmethod
    def diagonal(cls, values: Sequence[Scalar], shape: Optional[Sequence[int]] = None) -> 'BlockMatrix':
        """
        Place values along the diagonal, block after block.

        Without a shape the matrix lives in C^n, i.e. shape [1, ..., 1].
        """
        shape = tuple(shape) if shape is not None else (1,) * len(values)
        if sum(shape) != len(values):
            raise ShapeMismatchError(
                f"{len(values)} diagonal values do not fit shape {list(shape)}", witness=list(shape)
            )
        blocks = []
        offset = 0
        for n in shape:
            blocks.append(tuple(
                tuple(as_scalar(values[offset + r]) if r == c else ZERO for c in range(n))
                for r in range(n)
            ))
            offset += n
        return cls(shape, tuple(blocks))

    @classmethod
    def from_coordinates(cls, shape: Sequence[int], coords: Sequence[Scalar]) -> 'BlockMatrix':
        """Inverse of coordinates(): row-major entries of each block, block after block."""
        shape = tuple(shape)
        if len(coords) != coordinate_dimension(shape):
            raise ShapeMismatchError(
                f"Expected {coordinate_dimension(shape)} coordinates for shape {list(shape)}, got {len(coords)}",
                witness=list(shape),
            )
        blocks = []
        offset = 0
        for n in shape:
            blocks.append(tuple(tuple(coords[offset + r * n: offset + (r + 1) * n]) for r in range(n)))
            offset += n * n
        return cls(shape, tuple(blocks))

    # views

    def coordinates(self) -> Tuple[GaussianRational, ...]:
        return tuple(x for block in self.blocks for row in block for x in row)

    def entry_strings(self) -> List[str]:
        return [str(x) for x in self.coordinates()]

    def sort_key(self) -> Tuple[str, ...]:
        """Lexicographic key on serialized entries; used for canonical ordering."""
        return tuple(self.entry_strings())

    def is_zero(self) -> bool:
        return all(x.is_zero() for x in self.coordinates())

    def trace(self) -> GaussianRational:
        total = ZERO
        for block in self.blocks:
            for k in range(len(block)):
                total = total + block[k][k]
        return total

    def __str__(self) -> str:
        parts = []
        for block in self.blocks:
            parts.append("[" + "; ".join(", ".join(str(x) for x in row) for row in block) + "]")
        return " (+) ".join(parts)

    # operators delegate to the module functions

    def __add__(self, other: 'BlockMatrix') -> 'BlockMatrix':
        return mat_add(self, other)

    def __sub__(self, other: 'BlockMatrix') -> 'BlockMatrix':
        return mat_sub(self, other)

    def __neg__(self) -> 'BlockMatrix':
        return mat_scale(self, -ONE)

    def __matmul__(self, other: 'BlockMatrix') -> 'BlockMatrix':
        return mat_mul(self, other)

    def __mul__(self, other):
        if isinstance(other, BlockMatrix):
            return mat_mul(self, other)
        return mat_scale(self, other)

    def __rmul__(self, scalar: Scalar) -> 'BlockMatrix':
        return mat_scale(self, scalar)


def coordinate_dimension(shape: Sequence[int]) -> int:
    """Complex dimension of the algebra with this block shape."""
    return sum(n * n for n in shape)


def _identity_block(n: int) -> Block:
    return tuple(tuple(ONE if r == c else ZERO for c in range(n)) for r in range(n))


def _zero_block(n: int) -> Block:
    return tuple(tuple(ZERO for _ in range(n)) for _ in range(n))


def _check_same_shape(a: BlockMatrix, b: BlockMatrix, operation: str):
    if a.shape != b.shape:
        raise ShapeMismatchError(
            f"{operation}: shapes {list(a.shape)} and {list(b.shape)} differ",
            witness={'left': list(a.shape), 'right': list(b.shape)},
        )


def mat_add(a: BlockMatrix, b: BlockMatrix) -> BlockMatrix:
    _check_same_shape(a, b, "mat_add")
    return BlockMatrix(a.shape, tuple(
        tuple(tuple(x + y for x, y in zip(ra, rb)) for ra, rb in zip(ba, bb))
        for ba, bb in zip(a.blocks, b.blocks)
    ))


def mat_sub(a: BlockMatrix, b: BlockMatrix) -> BlockMatrix:
    _check_same_shape(a, b, "mat_sub")
    return BlockMatrix(a.shape, tuple(
        tuple(tuple(x - y for x, y in zip(ra, rb)) for ra, rb in zip(ba, bb))
        for ba, bb in zip(a.blocks, b.blocks)
    ))


def mat_scale(a: BlockMatrix, scalar: Scalar) -> BlockMatrix:
    s = as_scalar(scalar)
    return BlockMatrix(a.shape, tuple(tuple(tuple(s * x for x in row) for row in block) for block in a.blocks))


def mat_mul(a: BlockMatrix, b: BlockMatrix) -> BlockMatrix:
    _check_same_shape(a, b, "mat_mul")
    blocks = []
    for ba, bb in zip(a.blocks, b.blocks):
        n = len(ba)
        rows = []
        for r in range(n):
            row = []
            for c in range(n):
                total = ZERO
                for k in range(n):
                    x = ba[r][k]
                    if x.re or x.im:
                        total = total + x * bb[k][c]
                row.append(total)
            rows.append(tuple(row))
        blocks.append(tuple(rows))
    return BlockMatrix(a.shape, tuple(blocks))


def mat_adjoint(a: BlockMatrix) -> BlockMatrix:
    """Conjugate transpose, block by block."""
    return BlockMatrix(a.shape, tuple(
        tuple(tuple(block[c][r].conjugate() for c in range(len(block))) for r in range(len(block)))
        for block in a.blocks
    ))


def linear_combination(coefficients: Sequence[Scalar], matrices: Sequence[BlockMatrix]) -> BlockMatrix:
    if not matrices:
        raise ShapeMismatchError("Empty linear combination has no shape")
    result = BlockMatrix.zero(matrices[0].shape)
    for c, m in zip(coefficients, matrices):
        c = as_scalar(c)
        if not c.is_zero():
            result = mat_add(result, mat_scale(m, c))
    return result


def tensor(a: BlockMatrix, b: BlockMatrix) -> BlockMatrix:
    """Kronecker product of two single-block matrices."""
    if len(a.shape) != 1 or len(b.shape) != 1:
        raise ShapeMismatchError("tensor is defined for single-block matrices only",
                                 witness={'left': list(a.shape), 'right': list(b.shape)})
    ra, rb = a.blocks[0], b.blocks[0]
    n, m = len(ra), len(rb)
    rows = [
        [ra[i // m][j // m] * rb[i % m][j % m] for j in range(n * m)]
        for i in range(n * m)
    ]
    return BlockMatrix.from_rows(rows)


# Gaussian elimination over Q(i)

def row_reduce(rows: Sequence[Sequence[Scalar]]) -> Tuple[List[List[GaussianRational]], List[int]]:
    """
    Reduced row echelon form.

    Returns:
        (rref rows, pivot column per nonzero row)
    """
    m = [[as_scalar(x) for x in row] for row in rows]
    if not m:
        return m, []
    n_rows, n_cols = len(m), len(m[0])
    pivots = []
    piv_r = 0
    for piv_c in range(n_cols):
        for i_row in range(piv_r, n_rows):
            if not m[i_row][piv_c].is_zero():
                break
        else:
            continue
        m[piv_r], m[i_row] = m[i_row], m[piv_r]
        inv = m[piv_r][piv_c].inverse()
        m[piv_r] = [x * inv for x in m[piv_r]]
        for r in range(n_rows):
            if r != piv_r and not m[r][piv_c].is_zero():
                factor = m[r][piv_c]
                m[r] = [x - factor * y for x, y in zip(m[r], m[piv_r])]
        pivots.append(piv_c)
        piv_r += 1
        if piv_r == n_rows:
            break
    return m, pivots


def solve_linear(columns: Sequence[Sequence[Scalar]], rhs: Sequence[Scalar]) -> Optional[List[GaussianRational]]:
    """
    Solve sum_j c_j columns[j] = rhs exactly.

    Free variables are set to zero. Returns None when rhs is not in the span.
    """
    n_cols = len(columns)
    n_rows = len(rhs)
    if n_cols == 0:
        return [] if all(as_scalar(x).is_zero() for x in rhs) else None
    augmented = [[columns[j][r] for j in range(n_cols)] + [rhs[r]] for r in range(n_rows)]
    reduced, pivots = row_reduce(augmented)
    if n_cols in pivots:
        return None
    solution = [ZERO] * n_cols
    for row, piv_c in zip(reduced, pivots):
        solution[piv_c] = row[n_cols]
    return solution


def null_space(columns: Sequence[Sequence[Scalar]]) -> List[List[GaussianRational]]:
    """Basis of {c : sum_j c_j columns[j] = 0}."""
    n_cols = len(columns)
    if n_cols == 0:
        return []
    n_rows = len(columns[0])
    matrix = [[columns[j][r] for j in range(n_cols)] for r in range(n_rows)]
    reduced, pivots = row_reduce(matrix)
    basis = []
    for free in (c for c in range(n_cols) if c not in pivots):
        vector = [ZERO] * n_cols
        vector[free] = ONE
        for row, piv_c in zip(reduced, pivots):
            vector[piv_c] = -row[free]
        basis.append(vector)
    return basis


def solve_membership(v: BlockMatrix, basis: Sequence[BlockMatrix]) -> Optional[List[GaussianRational]]:
    """
    Express v in the span of basis.

    Args:
        v: Element to decompose
        basis: Matrices of v's shape

    Returns:
        Coefficients c with v = sum c_j basis_j, or None if v is not in the span
    """
    for b in basis:
        _check_same_shape(v, b, "solve_membership")
    return solve_linear([b.coordinates() for b in basis], v.coordinates())
