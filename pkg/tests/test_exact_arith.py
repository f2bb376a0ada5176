from fractions import Fraction

import pytest
from hypothesis import assume, given, strategies as st

from src.errors import SchemaError, ShapeMismatchError
from src.exact_arith import (
    I,
    ONE,
    ZERO,
    BlockMatrix,
    GaussianRational,
    as_scalar,
    linear_combination,
    mat_adjoint,
    mat_mul,
    null_space,
    row_reduce,
    solve_linear,
    solve_membership,
    tensor,
)

rationals = st.fractions(min_value=-6, max_value=6, max_denominator=8)
scalars = st.builds(GaussianRational, rationals, rationals)
nonzero = scalars.filter(lambda x: not x.is_zero())
matrices_2x2 = st.lists(scalars, min_size=4, max_size=4).map(lambda c: BlockMatrix.from_coordinates((2,), c))


@given(scalars, scalars, scalars)
def test_field_axioms(a, b, c):
    assert a + b == b + a
    assert a * b == b * a
    assert (a + b) + c == a + (b + c)
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    assert a + ZERO == a
    assert a * ONE == a
    assert a - a == ZERO


@given(nonzero)
def test_inverse(a):
    assert a * a.inverse() == ONE
    assert ONE / a == a.inverse()


@given(scalars, scalars)
def test_conjugation_is_multiplicative(a, b):
    assert (a * b).conjugate() == a.conjugate() * b.conjugate()
    assert (a * a.conjugate()).im == 0
    assert (a * a.conjugate()).re == a.norm_squared()


def test_i_squared():
    assert I * I == -ONE


def test_division_by_zero():
    with pytest.raises(ZeroDivisionError):
        ONE / ZERO


def test_floats_rejected():
    with pytest.raises(TypeError):
        GaussianRational(0.5)
    with pytest.raises(TypeError):
        as_scalar(1.5)


@pytest.mark.parametrize("text, re, im", [
    ("3/4", Fraction(3, 4), 0),
    ("-2", -2, 0),
    ("1-2 i", 1, -2),
    ("1/2+1/3 i", Fraction(1, 2), Fraction(1, 3)),
    ("i", 0, 1),
    ("-i", 0, -1),
    ("2 i", 0, 2),
    ("-3/4 i", 0, Fraction(-3, 4)),
])
def test_parse(text, re, im):
    assert GaussianRational.parse(text) == GaussianRational(Fraction(re), Fraction(im))


@pytest.mark.parametrize("text", ["1.5", "abc", "", "1 2", "3/4 j"])
def test_parse_rejects(text):
    with pytest.raises(SchemaError):
        GaussianRational.parse(text)


def test_real_values_hash_like_numbers():
    assert hash(GaussianRational(3)) == hash(3)
    assert GaussianRational(Fraction(1, 2)) == Fraction(1, 2)


def test_block_shape_checked():
    with pytest.raises(ShapeMismatchError):
        BlockMatrix((2,), (((1, 0),),))
    with pytest.raises(ShapeMismatchError):
        BlockMatrix((1, 1), (((1,),),))
    with pytest.raises(ShapeMismatchError):
        mat_mul(BlockMatrix.identity((2,)), BlockMatrix.identity((1, 1)))


def test_diagonal_and_trace():
    d = BlockMatrix.diagonal([1, 2, 3])
    assert d.shape == (1, 1, 1)
    assert d.trace() == GaussianRational(6)
    assert BlockMatrix.diagonal([1, 2, 3], shape=(1, 2)).shape == (1, 2)
    with pytest.raises(ShapeMismatchError):
        BlockMatrix.diagonal([1, 2], shape=(3,))


@given(matrices_2x2, matrices_2x2)
def test_adjoint_reverses_products(a, b):
    assert mat_adjoint(mat_mul(a, b)) == mat_mul(mat_adjoint(b), mat_adjoint(a))
    assert mat_adjoint(mat_adjoint(a)) == a


@given(matrices_2x2, matrices_2x2, matrices_2x2)
def test_matrix_product_associative(a, b, c):
    assert (a @ b) @ c == a @ (b @ c)
    assert a * (b + c) == a * b + a * c


def test_tensor_of_paulis():
    x = BlockMatrix.from_rows([[0, 1], [1, 0]])
    z = BlockMatrix.from_rows([[1, 0], [0, -1]])
    expected = BlockMatrix.from_rows([[0, 0, 1, 0], [0, 0, 0, -1], [1, 0, 0, 0], [0, -1, 0, 0]])
    assert tensor(x, z) == expected


def test_row_reduce_pivots():
    rows, pivots = row_reduce([[1, 2, 3], [2, 4, 6], [0, 1, 1]])
    assert pivots == [0, 1]
    assert rows[0] == [ONE, ZERO, ONE]


@given(st.lists(st.lists(scalars, min_size=3, max_size=3), min_size=1, max_size=3),
       st.lists(scalars, min_size=3, max_size=3))
def test_solve_reconstructs_rhs(columns, coefficients):
    coefficients = coefficients[:len(columns)]
    rhs = [sum((c * col[r] for c, col in zip(coefficients, columns)), ZERO) for r in range(3)]
    solution = solve_linear(columns, rhs)
    assert solution is not None
    rebuilt = [sum((s * col[r] for s, col in zip(solution, columns)), ZERO) for r in range(3)]
    assert rebuilt == rhs


def test_solve_inconsistent():
    assert solve_linear([[1, 0]], [0, 1]) is None
    assert solve_linear([], [0, 0]) == []
    assert solve_linear([], [1, 0]) is None


@given(st.lists(st.lists(scalars, min_size=2, max_size=2), min_size=1, max_size=4))
def test_null_space_vectors_are_annihilated(columns):
    for vector in null_space(columns):
        assert [sum((v * col[r] for v, col in zip(vector, columns)), ZERO) for r in range(2)] == [ZERO, ZERO]
    assume(len(columns) > 2)
    assert len(null_space(columns)) >= len(columns) - 2


def test_solve_membership():
    e1 = BlockMatrix.diagonal([1, 0])
    e2 = BlockMatrix.diagonal([0, 1])
    x = BlockMatrix.diagonal([GaussianRational(2, 1), -3])
    assert solve_membership(x, [e1, e2]) == [GaussianRational(2, 1), GaussianRational(-3)]
    assert linear_combination(solve_membership(x, [e1, e2]), [e1, e2]) == x
    off_diagonal = BlockMatrix.from_rows([[0, 1], [1, 0]])
    assert solve_membership(off_diagonal, [BlockMatrix.identity((2,))]) is None
