import logging
import re
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from config import ASSOCIATIVITY_EXHAUSTIVE_CAP, DEFAULT_ELEMENT_CAP
from errors import CapExceeded, DegreeMismatch, InternalInconsistency, SemanticError

logger = logging.getLogger(__name__)

# Sink point; never a real point
THETA = -1


@dataclass(frozen=True)
class PartialMap:
    """A map on points 0..n-1 with the absorbing sink THETA.

    Points are shown to users as 1..n. Composition reads left to right:
    ``x.then(y)`` applies x first, which is the product xy in a
    transformation semigroup acting on the right.
    """
    images: tuple

    def __post_init__(self):
        n = len(self.images)
        for image in self.images:
            if image != THETA and not 0 <= image < n:
                raise SemanticError(f"image {image + 1} out of range for degree {n}")

    @classmethod
    def from_points(cls, images):
        """Build from 1-based images where None, 0 or '#' stand for THETA"""
        converted = []
        for image in images:
            if image is None or image == '#' or image == 0:
                converted.append(THETA)
            else:
                converted.append(int(image) - 1)
        return cls(tuple(converted))

    @classmethod
    def from_pairs(cls, degree, pairs):
        """Build from 1-based (point, image) pairs; unmentioned points go to THETA"""
        images = [THETA] * degree
        for src, dst in pairs:
            images[src - 1] = dst - 1
        return cls(tuple(images))

    @property
    def degree(self):
        return len(self.images)

    def __call__(self, point):
        if point == THETA:
            return THETA
        return self.images[point]

    def then(self, other):
        if other.degree != self.degree:
            raise DegreeMismatch(f"cannot compose degree {self.degree} with {other.degree}")
        return PartialMap(tuple(other(image) for image in self.images))

    def domain(self):
        return tuple(p for p, image in enumerate(self.images) if image != THETA)

    def rank(self):
        return len(self.domain())

    def is_partial_injection(self):
        seen = [image for image in self.images if image != THETA]
        return len(seen) == len(set(seen))

    def is_idempotent(self):
        return self.then(self) == self

    def inverse(self):
        """Inverse partial injection; only meaningful when is_partial_injection()"""
        images = [THETA] * self.degree
        for p, image in enumerate(self.images):
            if image != THETA:
                images[image] = p
        return PartialMap(tuple(images))

    def as_array(self):
        # THETA is stored at slot n so numpy indexing composes maps
        n = self.degree
        arr = np.array([n if image == THETA else image for image in self.images] + [n], dtype=np.int64)
        return arr

    def to_points(self):
        return [None if image == THETA else image + 1 for image in self.images]


def identity_map(degree):
    return PartialMap(tuple(range(degree)))


def constant_theta(degree):
    return PartialMap((THETA,) * degree)


def _array_to_map(arr):
    n = len(arr) - 1
    return PartialMap(tuple(THETA if v == n else int(v) for v in arr[:n]))


@dataclass(frozen=True, eq=False)
class GeneratedSemigroup:
    """A finite semigroup given by its multiplication table and named generators.

    Element i is ``elements[i]`` (a PartialMap, or None for abstract
    semigroups) and ``words[i]`` is a tuple of generator positions whose
    product is i. The empty word only occurs for an adjoined identity.
    """
    table: np.ndarray
    elements: tuple
    generator_names: tuple
    generators: tuple
    words: tuple
    has_adjoined_identity: bool = False
    degree: int = None

    @property
    def size(self):
        return self.table.shape[0]

    @cached_property
    def right_cayley(self):
        return self.table[:, list(self.generators)]

    @cached_property
    def left_cayley(self):
        return self.table[list(self.generators), :].T.copy()

    @cached_property
    def idempotents(self):
        xs = np.arange(self.size)
        return np.flatnonzero(self.table[xs, xs] == xs)

    @cached_property
    def identity(self):
        xs = np.arange(self.size)
        for e in self.idempotents:
            if np.array_equal(self.table[e], xs) and np.array_equal(self.table[:, e], xs):
                return int(e)
        return None

    @cached_property
    def zero(self):
        for z in self.idempotents:
            if np.all(self.table[z] == z) and np.all(self.table[:, z] == z):
                return int(z)
        return None

    @cached_property
    def omega(self):
        return omega_data(self)

    @cached_property
    def _index(self):
        return {m: i for i, m in enumerate(self.elements) if m is not None}

    def index_of(self, element):
        return self._index[element]

    def generator(self, name):
        return self.generators[self.generator_names.index(name)]

    def word_string(self, x):
        word = self.words[x]
        if not word:
            return '1'
        return '.'.join(self.generator_names[g] for g in word)

    def multiply(self, *xs):
        acc = xs[0]
        for x in xs[1:]:
            acc = int(self.table[acc, x])
        return acc


def close_generators(gens, cap=DEFAULT_ELEMENT_CAP, names=None, check=True):
    """Enumerate the semigroup generated by partial maps, Froidure-Pin style.

    Args:
        gens: list of PartialMap, all of one degree
        cap: maximum number of elements
        names: generator names, defaults to g1, g2, ...
        check: run the associativity check on the resulting table

    Returns:
        GeneratedSemigroup whose elements are PartialMaps
    """
    if not gens:
        raise SemanticError("at least one generator is required")
    if cap < 1:
        raise CapExceeded("element cap must be at least 1")
    degree = gens[0].degree
    for g in gens:
        if g.degree != degree:
            raise DegreeMismatch(f"generators of degree {degree} and {g.degree}")
    if names is None:
        names = tuple(f"g{i + 1}" for i in range(len(gens)))
    names = tuple(names)
    if len(set(names)) != len(names):
        raise SemanticError("duplicate generator name")

    gen_arrays = [g.as_array() for g in gens]
    arrays, words, parents, lasts = [], [], [], []
    index = {}

    def add(arr, word, parent, last):
        if len(arrays) >= cap:
            raise CapExceeded(f"closure exceeds {cap} elements")
        index[arr.tobytes()] = len(arrays)
        arrays.append(arr)
        words.append(word)
        parents.append(parent)
        lasts.append(last)
        return len(arrays) - 1

    gen_elements = []
    for pos, arr in enumerate(gen_arrays):
        j = index.get(arr.tobytes())
        if j is None:
            j = add(arr, (pos,), -1, pos)
        gen_elements.append(j)

    # Breadth-first closure under right multiplication by generators
    right = []
    i = 0
    while i < len(arrays):
        x = arrays[i]
        row = []
        for pos, g in enumerate(gen_arrays):
            y = g[x]
            j = index.get(y.tobytes())
            if j is None:
                j = add(y, words[i] + (pos,), i, pos)
            row.append(j)
        right.append(row)
        i += 1

    n_elements = len(arrays)
    right = np.array(right, dtype=np.int32).reshape(n_elements, len(gen_arrays))

    # Column y of the table follows from its parent column: x(pg) = (xp)g
    table = np.empty((n_elements, n_elements), dtype=np.int32)
    for y in range(n_elements):
        if parents[y] == -1:
            table[:, y] = right[:, lasts[y]]
        else:
            table[:, y] = right[table[:, parents[y]], lasts[y]]

    logger.info("closure of %d generators on %d points has %d elements", len(gens), degree, n_elements)
    semigroup = GeneratedSemigroup(
        table=table,
        elements=tuple(_array_to_map(a) for a in arrays),
        generator_names=names,
        generators=tuple(gen_elements),
        words=tuple(words),
        degree=degree,
    )
    if check:
        check_associativity(semigroup)
    return semigroup


def _words_from_generators(table, generators):
    # Shortest generator word for every element reachable from the generators
    n = table.shape[0]
    words = [None] * n
    frontier = []
    for pos, g in enumerate(generators):
        if words[g] is None:
            words[g] = (pos,)
            frontier.append(g)
    while frontier:
        nxt = []
        for x in frontier:
            for pos, g in enumerate(generators):
                y = int(table[x, g])
                if words[y] is None:
                    words[y] = words[x] + (pos,)
                    nxt.append(y)
        frontier = nxt
    return words


def from_table(table, names=None, generators=None, elements=None, check=True):
    """Wrap an abstract multiplication table as a GeneratedSemigroup.

    When no generators are given a generating set is chosen greedily in
    element order.
    """
    table = np.asarray(table, dtype=np.int32)
    n = table.shape[0]
    if table.ndim != 2 or table.shape[1] != n:
        raise SemanticError("multiplication table must be square")
    if n == 0 or table.min() < 0 or table.max() >= n:
        raise SemanticError("multiplication table entries out of range")

    if generators is None:
        generators = []
        covered = np.zeros(n, dtype=bool)
        for x in range(n):
            if covered[x]:
                continue
            generators.append(x)
            reached = _words_from_generators(table, generators)
            covered = np.array([w is not None for w in reached])
    generators = tuple(int(g) for g in generators)
    words = _words_from_generators(table, generators)
    missing = [x for x, w in enumerate(words) if w is None]
    if missing:
        raise SemanticError(f"elements {missing[:5]} are not products of the generators")
    if names is None:
        names = tuple(f"g{i + 1}" for i in range(len(generators)))
    if elements is None:
        elements = (None,) * n
    semigroup = GeneratedSemigroup(
        table=table,
        elements=tuple(elements),
        generator_names=tuple(names),
        generators=generators,
        words=tuple(words),
    )
    if check:
        check_associativity(semigroup)
    return semigroup


def check_associativity(S, cap=ASSOCIATIVITY_EXHAUSTIVE_CAP):
    """Raise InternalInconsistency unless the table is associative.

    Exhaustive up to ``cap`` elements, otherwise checked on generator
    left factors only.
    """
    T = S.table
    firsts = range(S.size) if S.size <= cap else sorted(set(S.generators))
    for x in firsts:
        left = T[T[x], :]
        right = T[x][T]
        if not np.array_equal(left, right):
            raise InternalInconsistency(f"table is not associative at left factor {x}")


def evaluate_word(S, word):
    """Element represented by a word of generator positions"""
    if not word:
        if S.identity is None:
            raise SemanticError("empty word in a semigroup without identity")
        return S.identity
    acc = S.generators[word[0]]
    for pos in word[1:]:
        acc = int(S.table[acc, S.generators[pos]])
    return acc


def _relabel(S, order, has_adjoined_identity):
    order = np.asarray(order)
    inverse = np.empty_like(order)
    inverse[order] = np.arange(len(order))
    table = inverse[S.table[np.ix_(order, order)]].astype(np.int32)
    return GeneratedSemigroup(
        table=table,
        elements=tuple(S.elements[i] for i in order),
        generator_names=S.generator_names,
        generators=tuple(int(inverse[g]) for g in S.generators),
        words=tuple(S.words[i] for i in order),
        has_adjoined_identity=has_adjoined_identity,
        degree=S.degree,
    )


def adjoin_identity(S):
    """Return S with an identity as element 0, adding one only if S has none"""
    if S.has_adjoined_identity:
        return S
    e = S.identity
    if e is not None:
        order = [e] + [x for x in range(S.size) if x != e]
        return _relabel(S, order, True)

    n = S.size
    table = np.empty((n + 1, n + 1), dtype=np.int32)
    table[0, :] = np.arange(n + 1)
    table[:, 0] = np.arange(n + 1)
    table[1:, 1:] = S.table + 1
    unit = identity_map(S.degree) if S.degree is not None else None
    return GeneratedSemigroup(
        table=table,
        elements=(unit,) + S.elements,
        generator_names=S.generator_names,
        generators=tuple(g + 1 for g in S.generators),
        words=((),) + S.words,
        has_adjoined_identity=True,
        degree=S.degree,
    )


@dataclass(frozen=True, eq=False)
class OmegaData:
    omega: np.ndarray
    omega_minus: np.ndarray
    index: np.ndarray
    period: np.ndarray


def omega_data(S):
    """Idempotent power, (omega-1)-power, index and period of every element"""
    T = S.table
    n = S.size
    xs = np.arange(n)

    # c = x^(2^M) with 2^M >= n lies on the cycle of <x>
    c = xs.copy()
    steps = 1
    while steps < n:
        c = T[c, c]
        steps *= 2

    period = np.zeros(n, dtype=np.int64)
    cur = c
    for k in range(1, n + 1):
        cur = T[cur, xs]
        period[(cur == c) & (period == 0)] = k
        if period.all():
            break

    # x^omega = c * x^((-steps) mod period)
    shift = (-steps) % period
    omega = c.copy()
    cur = c
    for k in range(1, int(shift.max()) + 1):
        cur = T[cur, xs]
        omega = np.where(shift == k, cur, omega)

    # x^(omega-1) = x^omega * x^(period-1)
    omega_minus = omega.copy()
    cur = omega
    for k in range(1, int(period.max())):
        cur = T[cur, xs]
        omega_minus = np.where(period - 1 == k, cur, omega_minus)

    index = np.zeros(n, dtype=np.int64)
    cur = xs
    for k in range(1, n + 1):
        index[(T[cur, omega] == cur) & (index == 0)] = k
        if index.all():
            break
        cur = T[cur, xs]

    return OmegaData(omega=omega.astype(np.int64), omega_minus=omega_minus.astype(np.int64),
                     index=index, period=period)


def omega_power(S, x):
    """Return (x^omega, x^(omega-1))"""
    data = S.omega
    return int(data.omega[x]), int(data.omega_minus[x])


_TOKEN = re.compile(r'^([yz])(\d+)(\^w(-1)?)?$')


def _parse_update_word(word, t):
    tokens = word.split() if isinstance(word, str) else list(word)
    parsed = []
    for token in tokens:
        match = _TOKEN.match(token)
        if not match:
            raise SemanticError(f"bad update token {token!r}")
        kind, number, power, minus = match.groups()
        number = int(number)
        if not 1 <= number <= t:
            raise SemanticError(f"variable {token!r} not declared for t = {t}")
        if power is None:
            mode = 'plain'
        elif minus is None:
            mode = 'omega'
        else:
            mode = 'omega_minus'
        parsed.append((kind, number - 1, mode))
    if not parsed:
        raise SemanticError("empty update word")
    return parsed


def _evaluate_update(S, parsed, ys, zs):
    data = S.omega
    acc = None
    for kind, i, mode in parsed:
        value = ys[i] if kind == 'y' else zs[i]
        if mode == 'omega':
            value = int(data.omega[value])
        elif mode == 'omega_minus':
            value = int(data.omega_minus[value])
        acc = value if acc is None else int(S.table[acc, value])
    return acc


def omega_iterate(S, update, y0, z):
    """Lasso limit of the substitution y -> (update_i(y, z))_i started at y0.

    Update words are whitespace separated tokens y1..yt, z1..zt, with
    optional suffixes ^w (omega power) and ^w-1 ((omega-1)-power).

    Returns:
        tuple F^k(y0) for the least k >= entry index with k divisible by the period
    """
    t = len(update)
    parsed = [_parse_update_word(word, t) for word in update]
    state = tuple(int(y) for y in y0)
    z = tuple(int(v) for v in z)
    seen = {}
    trail = []
    while state not in seen:
        seen[state] = len(trail)
        trail.append(state)
        state = tuple(_evaluate_update(S, p, state, z) for p in parsed)
    mu = seen[state]
    rho = len(trail) - mu
    # mu <= k < mu + rho = len(trail)
    k = mu if mu % rho == 0 else mu + (rho - mu % rho)
    return trail[k]


def omega_limit_batch(F):
    """Apply the omega-power of many self-maps at once.

    Args:
        F: integer array of shape (B, N); row b is a map on range(N)

    Returns:
        array G of the same shape with G[b] = F[b]^omega
    """
    F = np.asarray(F, dtype=np.int64)
    B, N = F.shape
    rows = np.arange(B)[:, None]
    start = np.broadcast_to(np.arange(N), (B, N))

    # x = F^(2^M)(y) with 2^M >= N is on the cycle
    power = F.copy()
    steps = 1
    while steps < N:
        power = power[rows, power]
        steps *= 2
    on_cycle = power[rows, start]

    period = np.zeros((B, N), dtype=np.int64)
    cur = on_cycle
    for k in range(1, N + 1):
        cur = F[rows, cur]
        period[(cur == on_cycle) & (period == 0)] = k
        if period.all():
            break

    shift = (-steps) % period
    result = on_cycle.copy()
    cur = on_cycle
    for k in range(1, int(shift.max()) + 1):
        cur = F[rows, cur]
        result = np.where(shift == k, cur, result)
    return result
