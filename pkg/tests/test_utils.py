import numpy as np

from utils import constant_mask, decode_tuples, encode_tuples, rotate, table_digest


def test_tuple_codes():
    codes = encode_tuples([[1, 2], [0, 1]], 3)
    assert codes.tolist() == [7, 3]
    assert decode_tuples(codes, 3, 2).tolist() == [[1, 2], [0, 1]]
    assert constant_mask(np.array([0, 4, 5]), 3, 2).tolist() == [True, True, False]


def test_rotate():
    assert rotate((1, 2, 3), 1) == (2, 3, 1)
    assert rotate([1, 2, 3], -1) == (3, 1, 2)


def test_table_digest():
    table = np.array([[0, 1], [0, 1]])
    assert table_digest(table) == table_digest(table.tolist())
    assert table_digest(table) != table_digest(table.T)
