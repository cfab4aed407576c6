import hashlib

import numpy as np


def encode_tuples(columns, base):
    """Encode rows of element indices as mixed-radix integers (least significant first)"""
    columns = np.asarray(columns, dtype=np.int64)
    codes = np.zeros(columns.shape[0], dtype=np.int64)
    weight = 1
    for i in range(columns.shape[1]):
        codes += columns[:, i] * weight
        weight *= base
    return codes


def decode_tuples(codes, base, t):
    """Inverse of encode_tuples; returns an array of shape (len(codes), t)"""
    codes = np.asarray(codes, dtype=np.int64)
    out = np.empty((codes.shape[0], t), dtype=np.int64)
    rest = codes.copy()
    for i in range(t):
        out[:, i] = rest % base
        rest //= base
    return out


def constant_mask(codes, base, t):
    """Flag the codes whose tuple has all components equal"""
    decoded = decode_tuples(codes, base, t)
    return np.all(decoded == decoded[:, :1], axis=1)


def table_digest(table):
    """Stable sha256 digest of a multiplication table"""
    table = np.ascontiguousarray(np.asarray(table, dtype=np.int64))
    h = hashlib.sha256()
    h.update(str(table.shape).encode())
    h.update(table.tobytes())
    return h.hexdigest()


def rotate(seq, k):
    # Index i of the result holds seq[i + k] (cyclically)
    k %= len(seq)
    return tuple(seq[k:]) + tuple(seq[:k])
