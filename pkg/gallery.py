import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd
from sympy import isprime

from config import DEFAULT_ELEMENT_CAP
from errors import BadParameter, InvalidDelta, MalformedRees, ParseError
from green_structure import NO_ENTRY
from semigroup_core import THETA, PartialMap, adjoin_identity, close_generators, from_table, identity_map

logger = logging.getLogger(__name__)

# Default parameters used by gallery_listing and by bare ids on the command line
DEFAULT_PARAMS = {
    'Sp': (2,),
    'N': (3,),
    'Brandt': (3,),
    'SU': (((2, 3, 1),),),
    'C': (6,),
}

DESCRIPTIONS = {
    'Sp': "M^0(1,2p,2p;I) with rotations W_p,i; not SMN, every (2p-1)-generated subsemigroup SMN",
    'N': "M^0(1,n+1,n+1;I) with a = n-cycle, b = (n+1,1,..,n,theta) and 1; MN iff n odd",
    'N1': "N(6): BG_nil, not MN, not in J m G_nil",
    'N2': "N(15): MN, not SMN, not in J m G_nil",
    'M1': "M^0(1,6,6;I) with c1, d1, 1: SMN",
    'M2': "M^0(1,6,6;I) with c2, d2, e2, 1: MN but not SMN",
    'M3': "M^0(1,4,4;I) with c3, d3, 1: not MN, in J m G_nil",
    'Example18': "aperiodic SMN semigroup on 18 points with six generators",
    'Brandt': "aperiodic Brandt semigroup M^0(1,n,n;I)",
    'SU': "S(U) for bijections b_i of {1..n}",
    'C': "cyclic group of order n",
    'S3': "symmetric group on 3 points",
    'D4': "dihedral group of order 8",
    'Q8': "quaternion group",
    'Null': "two-element null semigroup",
}

_EXAMPLE18 = {
    'y1': [(1, 2), (13, 14), (15, 16)],
    'y2': [(5, 6), (7, 8), (17, 18)],
    'y3': [(3, 4), (9, 10), (11, 12)],
    'z1': [(2, 7), (4, 15), (6, 11), (8, 9), (10, 1), (12, 13), (14, 5), (16, 17), (18, 3)],
    'z2': [(2, 3), (4, 5), (6, 1)],
    'z3': [(2, 1), (4, 3), (6, 5), (8, 7), (10, 9), (12, 11), (14, 13), (16, 15), (18, 17)],
}


@dataclass(frozen=True)
class GalleryId:
    name: str
    params: tuple = ()

    def __str__(self):
        if not self.params:
            return self.name
        return f"{self.name} {' '.join(_format_param(p) for p in self.params)}"


def _format_param(p):
    if isinstance(p, tuple):
        return ' '.join(','.join(str(x) for x in b) for b in p)
    return str(p)


def parse_gallery_id(text, line=None):
    """Parse 'N 3', 'Sp 5', 'SU 2,3,1 1,2,3' or a bare name"""
    parts = text.split()
    if not parts:
        raise ParseError("empty gallery id", line)
    name, rest = parts[0], parts[1:]
    if name not in DESCRIPTIONS:
        raise ParseError(f"unknown gallery id {name!r}", line)
    if not rest:
        return GalleryId(name, DEFAULT_PARAMS.get(name, ()))
    try:
        if name == 'SU':
            return GalleryId(name, (tuple(tuple(int(x) for x in b.split(',')) for b in rest),))
        return GalleryId(name, tuple(int(x) for x in rest))
    except ValueError:
        raise ParseError(f"bad parameters for {name}: {' '.join(rest)}", line)


def brandt_maps(n):
    """m_i = (i -> i+1 mod n); these generate M^0(1,n,n;I_n)"""
    return [PartialMap.from_pairs(n, [(i, i % n + 1)]) for i in range(1, n + 1)]


def _brandt_names(n):
    return [f"m{i}" for i in range(1, n + 1)]


def _with_brandt(n, extra, names):
    gens = brandt_maps(n) + list(extra) + [identity_map(n)]
    return close_generators(gens, names=_brandt_names(n) + list(names) + ['1'])


def brandt(n):
    if n < 1:
        raise BadParameter("Brandt needs at least one point")
    return close_generators(brandt_maps(n), names=_brandt_names(n))


def n_family(n):
    """N(n) on points 1..n+1"""
    if n < 2:
        raise BadParameter("N(n) needs n >= 2")
    a = PartialMap.from_pairs(n + 1, [(i, i % n + 1) for i in range(1, n + 1)])
    b = PartialMap.from_pairs(n + 1, [(n + 1, 1)] + [(i, i + 1) for i in range(1, n)])
    return _with_brandt(n + 1, [a, b], ['a', 'b'])


def m_family(k):
    if k == 3:
        c = PartialMap.from_pairs(4, [(1, 2), (3, 4)])
        d = PartialMap.from_pairs(4, [(1, 4), (3, 2)])
        return _with_brandt(4, [c, d], ['c3', 'd3'])
    c = PartialMap.from_pairs(6, [(1, 4), (2, 5), (3, 6)])
    d = PartialMap.from_pairs(6, [(1, 5), (2, 6), (3, 4)])
    if k == 1:
        return _with_brandt(6, [c, d], ['c1', 'd1'])
    e = PartialMap.from_pairs(6, [(1, 6), (2, 4), (3, 5)])
    return _with_brandt(6, [c, d, e], ['c2', 'd2', 'e2'])


def example18():
    gens = [PartialMap.from_pairs(18, pairs) for pairs in _EXAMPLE18.values()]
    return close_generators(gens, names=list(_EXAMPLE18))


def s_p(p):
    """S_p on alpha_i = i and beta_i = p + i"""
    if not isprime(p):
        raise BadParameter(f"S_p needs a prime, got {p}")
    xs = [PartialMap.from_pairs(2 * p, [(i, p + i)]) for i in range(1, p + 1)]
    ws = [PartialMap.from_pairs(2 * p, [(p + j, (j + i - 1) % p + 1) for j in range(1, p + 1)])
          for i in range(1, p + 1)]
    names = [f"X{i}" for i in range(1, p + 1)] + [f"W{i}" for i in range(1, p + 1)]
    return close_generators(xs + ws, names=names)


def _check_bijections(bijections):
    if not bijections:
        raise BadParameter("S(U) needs at least one bijection")
    n = len(bijections[0])
    for b in bijections:
        if len(b) != n or sorted(b) != list(range(1, n + 1)):
            raise BadParameter(f"{b} is not a bijection of 1..{n}")
    return n


def su(bijections):
    """S(U) on X_n then X'_n: b'_i sends i to (b_i(i))', a' sends i to i'"""
    bijections = [tuple(b) for b in bijections]
    n = _check_bijections(bijections)
    primed = [PartialMap.from_pairs(2 * n, [(i, n + b[i - 1]) for i in range(1, n + 1)]) for b in bijections]
    a = PartialMap.from_pairs(2 * n, [(i, n + i) for i in range(1, n + 1)])
    gens = brandt_maps(2 * n) + primed + [a]
    names = _brandt_names(2 * n) + [f"b{i}" for i in range(1, len(primed) + 1)] + ['a']
    return close_generators(gens, names=names)


def _cycles(b):
    seen = set()
    cycles = []
    for start in range(1, len(b) + 1):
        if start in seen:
            continue
        cycle = [start]
        seen.add(start)
        x = b[start - 1]
        while x != start:
            cycle.append(x)
            seen.add(x)
            x = b[x - 1]
        cycles.append(tuple(cycle))
    return cycles


def _power(b, k):
    images = list(range(1, len(b) + 1))
    for _ in range(k):
        images = [b[x - 1] for x in images]
    return tuple(images)


def su_two_cycle(bijections):
    """(index, i1, i2) for a bijection containing the transposition (i1, i2), else None.

    Such an S(U) is not Mal'cev nilpotent.
    """
    for k, b in enumerate(bijections):
        for cycle in _cycles(b):
            if len(cycle) == 2:
                return k, cycle[0], cycle[1]
    return None


def su_rotation_powers(bijections):
    """(index, cycle) for some g with an m-cycle whose powers g^2..g^(m-1) are all listed, else None.

    Such an S(U) is not strongly Mal'cev nilpotent.
    """
    listed = {tuple(b) for b in bijections}
    for k, b in enumerate(bijections):
        for cycle in _cycles(b):
            m = len(cycle)
            if m > 1 and all(_power(b, e) in listed for e in range(2, m)):
                return k, cycle
    return None


def cyclic_group(n):
    if n < 1:
        raise BadParameter("cyclic group needs n >= 1")
    r = PartialMap(tuple((i + 1) % n for i in range(n)))
    return close_generators([r], names=['r'])


def symmetric3():
    return close_generators([PartialMap.from_points([2, 1, 3]), PartialMap.from_points([2, 3, 1])],
                            names=['s', 'r'])


def dihedral4():
    return close_generators([PartialMap.from_points([2, 3, 4, 1]), PartialMap.from_points([1, 4, 3, 2])],
                            names=['r', 's'])


_UNIT_PRODUCTS = {
    # (u, v) -> (sign, w) over the units 1, i, j, k
    (1, 1): (-1, 0), (1, 2): (1, 3), (1, 3): (-1, 2),
    (2, 1): (-1, 3), (2, 2): (-1, 0), (2, 3): (1, 1),
    (3, 1): (1, 2), (3, 2): (-1, 1), (3, 3): (-1, 0),
}


def _quaternion_product(x, y):
    sx, ux = divmod(x, 4)
    sy, uy = divmod(y, 4)
    if ux == 0:
        sign, w = 1, uy
    elif uy == 0:
        sign, w = 1, ux
    else:
        sign, w = _UNIT_PRODUCTS[(ux, uy)]
    negative = (sx + sy + (sign < 0)) % 2
    return 4 * negative + w


def quaternion8():
    """Right regular representation; element 4*s + u is (-1)^s times unit u of 1, i, j, k"""
    gens = [PartialMap(tuple(_quaternion_product(x, g) for x in range(8))) for g in (1, 2)]
    return close_generators(gens, names=['i', 'j'])


def null_semigroup():
    return close_generators([PartialMap.from_pairs(2, [(1, 2)])], names=['a'])


def group_table(name, *params):
    """Multiplication table of a gallery group with the identity as element 0"""
    S = build(GalleryId(name, tuple(params)))
    if S.identity is None:
        raise BadParameter(f"{name} is not a group")
    return adjoin_identity(S).table


def build_rees(desc):
    """M^0(G, n, m; P) as an abstract table; element (g; i, j) is (g*n + i)*m + j, the zero is last"""
    G = np.asarray(desc.group_table, dtype=np.int64)
    P = np.asarray(desc.sandwich, dtype=np.int64)
    n, m = desc.rows, desc.cols
    if n < 1 or m < 1:
        raise MalformedRees("Rees matrix semigroup needs at least one row and one column")
    if P.shape != (m, n):
        raise MalformedRees(f"sandwich must be {m} x {n}, got {P.shape}")
    if P.min() < NO_ENTRY or P.max() >= G.shape[0]:
        raise MalformedRees("sandwich entries outside the group")
    k = G.shape[0]
    zero = k * n * m
    xs = np.arange(zero)
    g, rest = np.divmod(xs, n * m)
    i, j = np.divmod(rest, m)
    entry = P[j[:, None], i[None, :]]
    defined = entry != NO_ENTRY
    # Calculate g P[j, k] h for every pair
    group = G[G[g[:, None], np.where(defined, entry, 0)], g[None, :]]
    product = (group * n + i[:, None]) * m + j[None, :]
    table = np.full((zero + 1, zero + 1), zero, dtype=np.int32)
    table[:zero, :zero] = np.where(defined, product, zero)
    return from_table(table)


def build_theta_union(q, T, delta):
    """M ∪^Δ T for M = M^0(1, q, q; I_q) and a semigroup T with zero.

    Args:
        q: number of rows (and columns) of M
        T: GeneratedSemigroup with a zero
        delta: for every element t of T, a PartialMap of degree q

    Returns:
        abstract GeneratedSemigroup; element i*q + j is (1; i, j), then T with its zero shared
    """
    if T.zero is None:
        raise InvalidDelta("T has no zero")
    maps = [delta[t] for t in range(T.size)]
    offending = []
    for t, d in enumerate(maps):
        if d.degree != q:
            raise InvalidDelta(f"Delta({t}) has degree {d.degree}, expected {q}", [t])
        empty = d.rank() == 0
        if empty != (t == T.zero) or not d.is_partial_injection():
            offending.append(t)
    for s in range(T.size):
        for t in range(T.size):
            if maps[s].then(maps[t]) != maps[int(T.table[s, t])]:
                offending.append(s)
                break
    if offending:
        raise InvalidDelta(f"Delta fails at elements {sorted(set(offending))}", sorted(set(offending)))

    M = q * q
    total = M + T.size
    zero = M + T.zero
    right = np.array([[THETA if v == THETA else v for v in d.images] for d in maps], dtype=np.int64)
    left = np.array([[THETA if v == THETA else v for v in d.inverse().images] for d in maps], dtype=np.int64)
    table = np.full((total, total), zero, dtype=np.int32)
    i, j = np.divmod(np.arange(M), q)
    same = j[:, None] == i[None, :]
    table[:M, :M] = np.where(same, i[:, None] * q + j[None, :], zero)
    # (1; i, j) t = (1; i, Delta(t)(j)) and t (1; i, j) = (1; Delta(t)^-1(i), j)
    image = right[:, j].T
    table[:M, M:] = np.where(image == THETA, zero, i[:, None] * q + image)
    pre = left[:, i]
    table[M:, :M] = np.where(pre == THETA, zero, pre * q + j[None, :])
    table[M:, M:] = T.table + M
    return from_table(table)


_BUILDERS = {
    'Sp': s_p,
    'N': n_family,
    'N1': lambda: n_family(6),
    'N2': lambda: n_family(15),
    'M1': lambda: m_family(1),
    'M2': lambda: m_family(2),
    'M3': lambda: m_family(3),
    'Example18': example18,
    'Brandt': brandt,
    'SU': su,
    'C': cyclic_group,
    'S3': symmetric3,
    'D4': dihedral4,
    'Q8': quaternion8,
    'Null': null_semigroup,
}


def build(gid, *params):
    """Build a gallery semigroup from a GalleryId, an id string or a name with parameters"""
    if isinstance(gid, str):
        gid = parse_gallery_id(gid) if not params else GalleryId(gid, tuple(params))
    if gid.name == 'Rees':
        return build_rees(gid.params[0])
    if gid.name == 'ThetaUnion':
        return build_theta_union(*gid.params)
    builder = _BUILDERS.get(gid.name)
    if builder is None:
        raise BadParameter(f"unknown gallery id {gid.name!r}")
    try:
        S = builder(*gid.params)
    except TypeError:
        raise BadParameter(f"wrong parameters for {gid.name}: {gid.params}")
    logger.info("built %s with %d elements", gid, S.size)
    return S


def random_transformation_semigroup(rng, points, gens, cap=DEFAULT_ELEMENT_CAP):
    """Random partial transformations on 1..points, theta included as an image.

    Raises CapExceeded when the closure outgrows ``cap``.
    """
    maps = []
    for _ in range(gens):
        images = rng.integers(-1, points, size=points)
        maps.append(PartialMap(tuple(int(v) for v in images)))
    return close_generators(maps, cap=cap)


def gallery_listing(sizes=True):
    """One row per gallery id with its default parameters"""
    rows = []
    for name, description in DESCRIPTIONS.items():
        gid = GalleryId(name, DEFAULT_PARAMS.get(name, ()))
        row = {'id': str(gid), 'description': description}
        if sizes:
            S = build(gid)
            row['points'] = S.degree
            row['size'] = S.size
        rows.append(row)
    return pd.DataFrame(rows)
