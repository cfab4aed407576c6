import heapq
import logging
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import pandas as pd
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from errors import InternalInconsistency, NotAGroup, NotRegular
from semigroup_core import omega_iterate

logger = logging.getLogger(__name__)

# Sandwich entry meaning "no group element"
NO_ENTRY = -1


@dataclass(frozen=True, eq=False)
class GreensStructure:
    r_class: np.ndarray
    l_class: np.ndarray
    j_class: np.ndarray
    h_class: np.ndarray
    j_members: tuple
    # j_order[a, b] is True iff J-class a lies below or equals J-class b
    j_order: np.ndarray
    regular: tuple
    idempotents: tuple

    @property
    def j_count(self):
        return len(self.j_members)


@dataclass(frozen=True)
class PrincipalSeries:
    layers: tuple
    ideals: tuple

    def __len__(self):
        return len(self.layers)

    def layer_of(self, j):
        return self.layers.index(j)

    def below(self, p):
        """Elements of S_{p+1}, the ideal under layer p"""
        if p + 1 < len(self.ideals):
            return self.ideals[p + 1]
        return frozenset()


@dataclass(frozen=True, eq=False)
class ReesCoordinatization:
    j_class: int
    rows: int
    cols: int
    idempotent: int
    group_elements: tuple
    group_table: np.ndarray
    sandwich: np.ndarray
    coord: dict
    element_at: dict
    is_inverse_square: bool

    def group_inverse(self, g):
        return int(np.flatnonzero(self.group_table[g] == 0)[0])


@dataclass(frozen=True, eq=False)
class ReesDescription:
    """Direct data of M^0(G, n, m; P); sandwich[j, i] is a group index or NO_ENTRY"""
    group_table: np.ndarray
    rows: int
    cols: int
    sandwich: np.ndarray


def _first_seen_labels(labels):
    # Renumber component labels so ids grow with the least member index
    mapping = {}
    out = np.empty(len(labels), dtype=np.int64)
    for x, label in enumerate(labels):
        if label not in mapping:
            mapping[label] = len(mapping)
        out[x] = mapping[label]
    return out


def _strong_components(n, sources, targets):
    graph = csr_matrix((np.ones(len(sources), dtype=np.int8), (sources, targets)), shape=(n, n))
    _, labels = connected_components(graph, directed=True, connection='strong')
    return _first_seen_labels(labels)


@lru_cache(maxsize=64)
def greens_structure(S):
    """Green's relations of S via strongly connected components of its Cayley graphs"""
    n = S.size
    k = len(S.generators)
    xs = np.repeat(np.arange(n), k)
    right_targets = S.right_cayley.reshape(-1)
    left_targets = S.left_cayley.reshape(-1)

    # Calculate R, L and J classes as strong components
    r_class = _strong_components(n, xs, right_targets)
    l_class = _strong_components(n, xs, left_targets)
    both_sources = np.concatenate([xs, xs])
    both_targets = np.concatenate([right_targets, left_targets])
    j_class = _strong_components(n, both_sources, both_targets)

    h_keys = {}
    h_class = np.empty(n, dtype=np.int64)
    for x in range(n):
        h_class[x] = h_keys.setdefault((r_class[x], l_class[x]), len(h_keys))

    j_count = int(j_class.max()) + 1
    members = [[] for _ in range(j_count)]
    for x in range(n):
        members[j_class[x]].append(x)

    # J-order from the condensation DAG, one bitset of lower classes per class
    cond = set(zip(j_class[both_sources].tolist(), j_class[both_targets].tolist()))
    succ = [[] for _ in range(j_count)]
    indegree = [0] * j_count
    for a, b in cond:
        if a != b:
            succ[a].append(b)
            indegree[b] += 1
    order = [a for a in range(j_count) if indegree[a] == 0]
    for a in order:
        for b in succ[a]:
            indegree[b] -= 1
            if indegree[b] == 0:
                order.append(b)
    below = [1 << a for a in range(j_count)]
    for a in reversed(order):
        for b in succ[a]:
            below[a] |= below[b]
    j_order = np.zeros((j_count, j_count), dtype=bool)
    for b in range(j_count):
        for a in range(j_count):
            if below[b] >> a & 1:
                j_order[a, b] = True

    idempotents = tuple(int(e) for e in S.idempotents)
    regular = [False] * j_count
    for e in idempotents:
        regular[j_class[e]] = True

    logger.info("%d elements: %d J-classes, %d R-classes, %d L-classes",
                n, j_count, int(r_class.max()) + 1, int(l_class.max()) + 1)
    return GreensStructure(
        r_class=r_class, l_class=l_class, j_class=j_class, h_class=h_class,
        j_members=tuple(tuple(m) for m in members), j_order=j_order,
        regular=tuple(regular), idempotents=idempotents,
    )


@lru_cache(maxsize=64)
def principal_series(S):
    """Maximal ideal chain S = S_1 > S_2 > ... with single J-class differences.

    Among the maximal J-classes of the remaining ideal the one with the
    lowest least element is removed first.
    """
    greens = greens_structure(S)
    strictly = greens.j_order & ~np.eye(greens.j_count, dtype=bool)
    above = strictly.sum(axis=1)
    # class ids are numbered by least element, so the heap yields the tie-break
    ready = [a for a in range(greens.j_count) if above[a] == 0]
    heapq.heapify(ready)
    layers = []
    while ready:
        a = heapq.heappop(ready)
        layers.append(a)
        for c in np.flatnonzero(strictly[:, a]):
            above[c] -= 1
            if above[c] == 0:
                heapq.heappush(ready, int(c))
    ideals = []
    for p in range(len(layers)):
        ideals.append(frozenset(x for j in layers[p:] for x in greens.j_members[j]))
    logger.debug("principal series has %d layers", len(layers))
    return PrincipalSeries(layers=tuple(layers), ideals=tuple(ideals))


def _group_table(S, elements):
    local = {x: i for i, x in enumerate(elements)}
    sub = S.table[np.ix_(elements, elements)]
    try:
        return np.vectorize(local.__getitem__)(sub).astype(np.int64)
    except KeyError:
        raise NotAGroup("H-class is not closed under multiplication")


@lru_cache(maxsize=256)
def rees_coordinatize(S, J):
    """Render the regular J-class J as M^0(G, n, m; P).

    Rows are R-classes and columns L-classes in first-seen element order.
    Columns are scaled so that the entry in the row of the chosen
    idempotent e (or the first nonzero entry) is 1_G; when the result is a
    permuted identity the columns are re-indexed so that P = I_n.
    """
    greens = greens_structure(S)
    T = S.table
    members = greens.j_members[J]
    idempotents = [x for x in members if T[x, x] == x]
    if not idempotents:
        raise NotRegular(f"J-class {J} contains no idempotent")
    e = idempotents[0]
    row_ids = list(dict.fromkeys(int(greens.r_class[x]) for x in members))
    col_ids = list(dict.fromkeys(int(greens.l_class[x]) for x in members))
    row_of = {r: i for i, r in enumerate(row_ids)}
    col_of = {c: j for j, c in enumerate(col_ids)}
    re, le = int(greens.r_class[e]), int(greens.l_class[e])

    group = [e] + [x for x in members if x != e and greens.r_class[x] == re and greens.l_class[x] == le]
    gtable = _group_table(S, group)
    group_arr = np.array(group)
    group_index = {x: i for i, x in enumerate(group)}

    # Representatives p_i in R_i and L_e, q_c in R_e and L_c
    p_rep, q_rep = {}, {}
    for x in members:
        r, l = int(greens.r_class[x]), int(greens.l_class[x])
        if l == le and row_of[r] not in p_rep:
            p_rep[row_of[r]] = e if r == re else x
        if r == re and col_of[l] not in q_rep:
            q_rep[col_of[l]] = e if l == le else x

    coord = {}
    for x in members:
        i = row_of[int(greens.r_class[x])]
        c = col_of[int(greens.l_class[x])]
        candidates = T[T[p_rep[i], group_arr], q_rep[c]]
        hits = np.flatnonzero(candidates == x)
        if len(hits) != 1:
            raise InternalInconsistency(f"element {x} has {len(hits)} Rees coordinates")
        coord[x] = [int(hits[0]), i, c]

    n, m = len(row_ids), len(col_ids)
    sandwich = np.full((m, n), NO_ENTRY, dtype=np.int64)
    for c in range(m):
        for i in range(n):
            y = int(T[q_rep[c], p_rep[i]])
            if y in group_index:
                sandwich[c, i] = group_index[y]

    inverse = [int(np.flatnonzero(gtable[g] == 0)[0]) for g in range(len(group))]
    row_e = row_of[re]
    for c in range(m):
        nonzero = np.flatnonzero(sandwich[c] != NO_ENTRY)
        if len(nonzero) == 0:
            raise InternalInconsistency(f"column {c} of a regular J-class has no sandwich entry")
        pivot = row_e if sandwich[c, row_e] != NO_ENTRY else int(nonzero[0])
        h = int(sandwich[c, pivot])
        if h == 0:
            continue
        # Replacing q_c by h^-1 q_c multiplies coordinates by h on the right
        hinv = inverse[h]
        for i in nonzero:
            sandwich[c, i] = gtable[hinv, sandwich[c, i]]
        for x, (g, i, cc) in coord.items():
            if cc == c:
                coord[x][0] = int(gtable[g, h])

    pattern = sandwich != NO_ENTRY
    is_inverse_square = (n == m and bool(np.all(pattern.sum(axis=0) == 1))
                         and bool(np.all(pattern.sum(axis=1) == 1)))
    if is_inverse_square:
        # Column c becomes the index of the row it pairs with
        relabel = [int(np.flatnonzero(pattern[c])[0]) for c in range(m)]
        new_sandwich = np.full((n, n), NO_ENTRY, dtype=np.int64)
        for c in range(m):
            new_sandwich[relabel[c], relabel[c]] = sandwich[c, relabel[c]]
        sandwich = new_sandwich
        for x in coord:
            coord[x][2] = relabel[coord[x][2]]

    coord = {x: tuple(v) for x, v in coord.items()}
    logger.debug("J-class %d: %d x %d over a group of order %d, inverse square %s",
                 J, n, m, len(group), is_inverse_square)
    return ReesCoordinatization(
        j_class=J, rows=n, cols=m, idempotent=e,
        group_elements=tuple(group), group_table=gtable, sandwich=sandwich,
        coord=coord, element_at={v: x for x, v in coord.items()},
        is_inverse_square=is_inverse_square,
    )


def check_rees_law(S, rees):
    """Return the first pair (x, y) in J where the Rees product law fails, or None"""
    T = S.table
    G = rees.group_table
    for x, (g, i, j) in rees.coord.items():
        for y, (h, k, l) in rees.coord.items():
            z = int(T[x, y])
            entry = rees.sandwich[j, k]
            if entry == NO_ENTRY:
                if z in rees.coord:
                    return x, y
            elif rees.element_at.get((int(G[G[g, entry], h]), i, l)) != z:
                return x, y
    return None


def _group_parts(table):
    n = table.shape[0]
    xs = np.arange(n)
    identity = None
    for e in range(n):
        if np.array_equal(table[e], xs) and np.array_equal(table[:, e], xs):
            identity = e
            break
    if identity is None:
        raise NotAGroup("no identity element")
    inverse = np.empty(n, dtype=np.int64)
    for x in range(n):
        hits = np.flatnonzero(table[x] == identity)
        if len(hits) == 0 or table[hits[0], x] != identity:
            raise NotAGroup(f"element {x} has no inverse")
        inverse[x] = hits[0]
    return identity, inverse


def _generated_subgroup(table, identity, gens):
    subgroup = {identity}
    frontier = [identity]
    gens = set(int(g) for g in gens)
    while frontier:
        nxt = []
        for x in frontier:
            for g in gens:
                y = int(table[x, g])
                if y not in subgroup:
                    subgroup.add(y)
                    nxt.append(y)
        frontier = nxt
    return frozenset(subgroup)


def group_nilpotency_class(table):
    """Nilpotency class of a group from its lower central series.

    Args:
        table: square multiplication table of a group

    Returns:
        the class (0 for the trivial group), or None when not nilpotent
    """
    table = np.asarray(table)
    identity, inverse = _group_parts(table)
    everything = frozenset(range(table.shape[0]))
    gamma = everything
    klass = 0
    while len(gamma) > 1:
        # Calculate [gamma, G] from commutators x^-1 y^-1 x y
        commutators = {int(table[table[table[inverse[x], inverse[y]], x], y])
                       for x in gamma for y in everything}
        nxt = _generated_subgroup(table, identity, commutators)
        if nxt == gamma:
            return None
        gamma = nxt
        klass += 1
    return klass


def maximal_subgroups(S):
    """List of (idempotent, H-class elements with e first) for every idempotent"""
    greens = greens_structure(S)
    out = []
    for e in greens.idempotents:
        h = greens.h_class[e]
        out.append((e, (e,) + tuple(int(x) for x in np.flatnonzero(greens.h_class == h) if x != e)))
    return out


def gnil_by_phi(S, group):
    """Decide G_nil membership of a maximal subgroup through phi-omega-iteration.

    phi(x) = x^(w-1) y^(w-1) x y, phi(y) = y; the group is nilpotent iff
    phi^w(x) = x^w for all x, y in it.
    """
    update = ('y1^w-1 y2^w-1 y1 y2', 'y2')
    omega = S.omega.omega
    for x in group:
        for y in group:
            limit = omega_iterate(S, update, (x, y), (x, y))
            if limit[0] != omega[x]:
                return False
    return True


def inverse_counts(S):
    """Number of inverses (y with xyx = x and yxy = y) of every element"""
    T = S.table
    ys = np.arange(S.size)
    counts = np.empty(S.size, dtype=np.int64)
    for x in range(S.size):
        ok = (T[T[x, ys], x] == x) & (T[T[ys, x], ys] == ys)
        counts[x] = int(ok.sum())
    return counts


def is_block_group_by_identity(S):
    """Check (ef)^w = (fe)^w over all idempotent pairs"""
    E = S.idempotents
    products = S.table[np.ix_(E, E)]
    omega = S.omega.omega
    return bool(np.array_equal(omega[products], omega[products.T]))


def idempotents_commute(S):
    E = S.idempotents
    products = S.table[np.ix_(E, E)]
    return bool(np.array_equal(products, products.T))


def is_regular_semigroup(S):
    return all(greens_structure(S).regular)


def is_inverse_semigroup(S):
    return is_regular_semigroup(S) and idempotents_commute(S)


def is_aperiodic(S):
    return all(len(h) == 1 for _, h in maximal_subgroups(S))


def block_group_failure(S):
    """Evidence that S is not a block group, or None.

    Inverse counting and the (ef)^w = (fe)^w identity must agree.
    """
    counts = inverse_counts(S)
    by_count = bool(np.all(counts <= 1))
    if by_count != is_block_group_by_identity(S):
        raise InternalInconsistency("block group tests disagree")
    if by_count:
        return None
    x = int(np.flatnonzero(counts > 1)[0])
    return {'reason': 'element with several inverses', 'element': x,
            'word': S.word_string(x), 'inverses': int(counts[x]),
            'j_class': int(greens_structure(S).j_class[x])}


def subgroup_classes(S):
    """Nilpotency class of each maximal subgroup, keyed by J-class.

    The lower central series and the phi-iteration must agree on
    nilpotency.
    """
    greens = greens_structure(S)
    out = {}
    for e, group in maximal_subgroups(S):
        j = int(greens.j_class[e])
        if j in out:
            continue
        klass = group_nilpotency_class(_group_table(S, list(group)))
        if (klass is not None) != gnil_by_phi(S, group):
            raise InternalInconsistency(f"nilpotency tests disagree on the group of J-class {j}")
        out[j] = (len(group), klass)
    return out


def block_group_nil_failure(S):
    """Evidence that S is not in BG_nil, or None"""
    failure = block_group_failure(S)
    if failure is not None:
        return failure
    for j, (order, klass) in subgroup_classes(S).items():
        if klass is None:
            return {'reason': 'maximal subgroup is not nilpotent', 'j_class': j,
                    'group_order': order}
    return None


def egg_box_table(S):
    """Egg-box summary with one row per J-class, top of the principal series first"""
    greens = greens_structure(S)
    series = principal_series(S)
    classes = subgroup_classes(S)
    rows = []
    for p, j in enumerate(series.layers):
        members = greens.j_members[j]
        order, klass = classes.get(j, (None, None))
        rows.append({
            'layer': p + 1,
            'j_class': j,
            'size': len(members),
            'r_classes': len({int(greens.r_class[x]) for x in members}),
            'l_classes': len({int(greens.l_class[x]) for x in members}),
            'regular': greens.regular[j],
            'idempotents': sum(1 for x in members if x in greens.idempotents),
            'group_order': order,
            'group_class': klass if order is not None else None,
            'representative': S.word_string(members[0]),
        })
    return pd.DataFrame(rows)
