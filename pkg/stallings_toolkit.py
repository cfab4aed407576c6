import logging
from collections import deque
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from sympy import Matrix, ZZ
from sympy import isprime, primefactors, primerange
from sympy.matrices.normalforms import smith_normal_form

from config import PRIME_FLOOR
from errors import BadParameter, InternalInconsistency, NotInverse, NotPrime, ParseError

logger = logging.getLogger(__name__)

LETTERS = 'abcdefghijklmnopqrstuvwxyz'

YES = 'Yes'
NO = 'No'
UNKNOWN_AT_BOUND = 'UnknownAtBound'


def parse_word(text, line=None):
    """Word over a..z with capitals for inverses, freely reduced.

    Letter k is stored as k + 1 and its inverse as -(k + 1).
    """
    word = []
    for column, ch in enumerate(text.strip(), start=1):
        if ch in LETTERS:
            word.append(LETTERS.index(ch) + 1)
        elif ch.lower() in LETTERS:
            word.append(-(LETTERS.index(ch.lower()) + 1))
        elif ch == '1' and len(text.strip()) == 1:
            return ()
        else:
            raise ParseError(f"unexpected {ch!r} in word", line, column)
    return free_reduce(word)


def format_word(word, alphabet=None):
    if not word:
        return '1'
    if alphabet is None:
        return ''.join(LETTERS[s - 1] if s > 0 else LETTERS[-s - 1].upper() for s in word)
    return '.'.join(alphabet[s - 1] if s > 0 else f'{alphabet[-s - 1]}^-1' for s in word)


def free_reduce(word):
    stack = []
    for s in word:
        if stack and stack[-1] == -s:
            stack.pop()
        else:
            stack.append(s)
    return tuple(stack)


def invert_word(word):
    return tuple(-s for s in reversed(word))


def parse_basis(text):
    """One word per line; blank lines and '#' comments skipped; empty words dropped"""
    words = []
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        word = parse_word(line, line=number)
        if word:
            words.append(word)
    return words


@dataclass(frozen=True, eq=False)
class InverseAutomaton:
    """Based automaton over A with positive edges (src, letter, dst); inverse edges are implied"""
    n: int
    base: int
    alphabet: tuple
    edges: tuple

    @cached_property
    def forward(self):
        maps = [dict() for _ in self.alphabet]
        for s, a, d in self.edges:
            maps[a][s] = d
        return maps

    @cached_property
    def backward(self):
        maps = [dict() for _ in self.alphabet]
        for s, a, d in self.edges:
            maps[a][d] = s
        return maps

    @cached_property
    def is_inverse(self):
        seen = set()
        for s, a, d in self.edges:
            if (s, a, 1) in seen or (d, a, -1) in seen:
                return False
            seen.add((s, a, 1))
            seen.add((d, a, -1))
        return True

    def step(self, v, symbol):
        if symbol > 0:
            return self.forward[symbol - 1].get(v)
        return self.backward[-symbol - 1].get(v)

    def degree(self, v):
        return sum((s == v) + (d == v) for s, _, d in self.edges)

    def read(self, word, start=None):
        """End vertex of the path labelled by word, or None"""
        v = self.base if start is None else start
        for s in word:
            v = self.step(v, s)
            if v is None:
                return None
        return v


@dataclass(frozen=True)
class VertexCongruence:
    classes: tuple

    @property
    def is_trivial(self):
        return all(len(c) == 1 for c in self.classes)

    def identified_pair(self):
        for c in self.classes:
            if len(c) > 1:
                return c[0], c[1]
        return None

    def class_of(self, v):
        for i, c in enumerate(self.classes):
            if v in c:
                return i
        raise KeyError(v)


@dataclass(frozen=True, eq=False)
class ModPData:
    p: int
    matrix: np.ndarray
    rank: int


@dataclass(frozen=True, eq=False)
class NilClosure:
    automaton: InverseAutomaton
    congruence: VertexCongruence
    primes: tuple
    exact: bool
    per_prime: dict


@dataclass(frozen=True)
class ExtendibilityVerdict:
    status: str
    pair: tuple = None
    primes: tuple = ()
    exact: bool = True


def _symbols(k):
    # Traversal order: letter index, positive direction first
    for a in range(k):
        yield a + 1
        yield -(a + 1)


def _make(n, base, alphabet, edges):
    """Renumber the base component in BFS order from the base"""
    aut = InverseAutomaton(n=n, base=base, alphabet=tuple(alphabet), edges=tuple(sorted(set(edges))))
    order = {base: 0}
    queue = deque([base])
    while queue:
        v = queue.popleft()
        for s in _symbols(len(alphabet)):
            w = aut.step(v, s)
            if w is not None and w not in order:
                order[w] = len(order)
                queue.append(w)
    renamed = {(order[s], a, order[d]) for s, a, d in aut.edges if s in order}
    return InverseAutomaton(n=len(order), base=0, alphabet=tuple(alphabet), edges=tuple(sorted(renamed)))


def _fold(n, base, alphabet, edges, labels=None):
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(x, y):
        rx, ry = find(x), find(y)
        if rx != ry:
            parent[max(rx, ry)] = min(rx, ry)
            return True
        return False

    if labels is not None:
        first = {}
        for v, label in enumerate(labels):
            union(v, first.setdefault(label, v))

    # Merge the targets of equally labelled edges until a pass changes nothing
    changed = True
    while changed:
        changed = False
        seen = {}
        for s, a, d in edges:
            rs, rd = find(s), find(d)
            for key, target in (((rs, a + 1), rd), ((rd, -(a + 1)), rs)):
                other = seen.setdefault(key, target)
                if union(other, target):
                    changed = True
    folded = {(find(s), a, find(d)) for s, a, d in edges}
    return _make(n, find(base), alphabet, folded), [find(v) for v in range(n)]


def _trim(aut):
    edges = set(aut.edges)
    while True:
        degree = [0] * aut.n
        for s, _, d in edges:
            degree[s] += 1
            degree[d] += 1
        hairs = {v for v in range(aut.n) if v != aut.base and degree[v] == 1}
        if not hairs:
            break
        edges = {e for e in edges if e[0] not in hairs and e[2] not in hairs}
    return _make(aut.n, aut.base, aut.alphabet, edges)


def fold(basis, alphabet=None):
    """Stallings automaton of the subgroup generated by the basis words"""
    words = [free_reduce(w) for w in basis]
    words = [w for w in words if w]
    if alphabet is None:
        k = max((abs(s) for w in words for s in w), default=1)
        alphabet = tuple(LETTERS[:k])
    # Flower automaton: one petal per word through the base 0
    n = 1
    edges = []
    for word in words:
        path = [0] + list(range(n, n + len(word) - 1)) + [0]
        n += len(word) - 1
        for s, u, v in zip(word, path, path[1:]):
            if s > 0:
                edges.append((u, s - 1, v))
            else:
                edges.append((v, -s - 1, u))
    folded, _ = _fold(n, 0, alphabet, edges)
    result = _trim(folded)
    logger.debug("folded %d words into %d vertices", len(words), result.n)
    return result


def trim_to_core(aut):
    """Drop hanging trees at non-base vertices"""
    return _trim(aut)


def quotient_fold(aut, labels):
    """Identify vertices with equal labels and fold; also returns vertex -> quotient vertex"""
    folded, roots = _fold(aut.n, aut.base, aut.alphabet, aut.edges, labels=labels)
    where = _spanning_words(aut)
    mapping = [folded.read(where[v]) for v in range(aut.n)]
    return folded, mapping


def canonical_form(aut):
    canon = _make(aut.n, aut.base, aut.alphabet, aut.edges)
    return len(canon.alphabet), canon.n, canon.edges


def isomorphic(a, b):
    """Based isomorphism of deterministic connected automata"""
    return canonical_form(a) == canonical_form(b)


def _spanning_tree(aut):
    words = {aut.base: ()}
    tree = set()
    queue = deque([aut.base])
    while queue:
        v = queue.popleft()
        for s in _symbols(len(aut.alphabet)):
            w = aut.step(v, s)
            if w is not None and w not in words:
                words[w] = words[v] + (s,)
                tree.add((v, s - 1, w) if s > 0 else (w, -s - 1, v))
                queue.append(w)
    return words, tree


def _spanning_words(aut):
    return _spanning_tree(aut)[0]


def tree_basis(aut):
    """Basis u_p a u_q^-1 over the non-tree edges of a BFS spanning tree"""
    words, tree = _spanning_tree(aut)
    basis = []
    for s, a, d in aut.edges:
        if (s, a, d) in tree or s not in words:
            continue
        basis.append(free_reduce(words[s] + (a + 1,) + invert_word(words[d])))
    return basis


def accepts(aut, word):
    return aut.read(free_reduce(word)) == aut.base


def dump_automaton(aut):
    lines = [f"base {aut.base + 1}"]
    for s, a, d in aut.edges:
        lines.append(f"{s + 1} {aut.alphabet[a]} {d + 1}")
    return '\n'.join(lines)


def rank_mod_p(matrix, p):
    """Rank over Z/pZ by Gaussian elimination"""
    return len(_echelon_mod_p(matrix, p))


def _echelon_mod_p(matrix, p):
    # Rows with a unit pivot, pivot columns increasing
    A = np.array(matrix, dtype=np.int64) % p
    if A.ndim != 2 or A.size == 0:
        return []
    m, n = A.shape
    r = 0
    pivots = []
    for c in range(n):
        pivot = None
        for i in range(r, m):
            if A[i, c] % p != 0:
                pivot = i
                break
        if pivot is None:
            continue
        if pivot != r:
            A[[r, pivot], :] = A[[pivot, r], :]
        inv = pow(int(A[r, c]), -1, p)
        A[r, :] = (A[r, :] * inv) % p
        for i in range(m):
            if i != r and A[i, c] % p != 0:
                A[i, :] = (A[i, :] - A[i, c] * A[r, :]) % p
        pivots.append((c, A[r].copy()))
        r += 1
        if r == m:
            break
    return pivots


def _residue(vector, echelon, p):
    v = np.array(vector, dtype=np.int64) % p
    for c, row in echelon:
        if v[c]:
            v = (v - v[c] * row) % p
    return tuple(int(x) for x in v)


def abelian_invariants(matrix):
    """Rational rank and elementary divisors of an integer matrix (Smith normal form)"""
    rows = [list(map(int, row)) for row in np.asarray(matrix, dtype=np.int64).tolist()]
    if not rows or not rows[0]:
        return 0, []
    snf = smith_normal_form(Matrix(rows), domain=ZZ)
    diagonal = [abs(int(snf[i, i])) for i in range(min(snf.shape))]
    nonzero = [d for d in diagonal if d != 0]
    return len(nonzero), nonzero


def _path_vector(aut, word, columns):
    vec = np.zeros(len(columns), dtype=np.int64)
    v = aut.base
    for s in word:
        w = aut.step(v, s)
        if w is None:
            raise InternalInconsistency(f"word {format_word(word)} leaves the quotient automaton")
        edge = (v, s - 1, w) if s > 0 else (w, -s - 1, v)
        col = columns.get(edge)
        if col is not None:
            vec[col] += 1 if s > 0 else -1
        v = w
    return vec


def mod_p_data(Q, basis, p):
    """Matrix of the basis words against the non-tree edges of Q, reduced mod p"""
    _, tree = _spanning_tree(Q)
    columns = {e: i for i, e in enumerate(e for e in Q.edges if e not in tree)}
    matrix = np.array([_path_vector(Q, w, columns) for w in basis], dtype=np.int64).reshape(len(basis), len(columns))
    return ModPData(p=p, matrix=matrix, rank=rank_mod_p(matrix, p)), columns


def _congruence(aut, closure):
    words = _spanning_words(aut)
    classes = []
    for v in range(aut.n):
        for c in classes:
            if accepts(closure, words[v] + invert_word(words[c[0]])):
                c.append(v)
                break
        else:
            classes.append([v])
    return VertexCongruence(tuple(tuple(c) for c in classes))


def p_closure(aut, p):
    """Automaton of the pro-p closure and the congruence it induces on the vertices of aut.

    Starts from the bouquet quotient of the core and splits classes by
    residues modulo the span of the subgroup's image until that image
    has full rank mod p.
    """
    if not isprime(p):
        raise NotPrime(f"{p} is not prime")
    core = trim_to_core(aut)
    basis = tree_basis(core)
    u = _spanning_words(core)
    labels = [0] * core.n
    iterations = 0
    while True:
        Q, where = quotient_fold(core, labels)
        data, columns = mod_p_data(Q, basis, p)
        logger.debug("p = %d, step %d: %d classes, rank %d of %d", p, iterations, Q.n, data.rank, len(columns))
        if data.rank == len(columns):
            break
        echelon = _echelon_mod_p(data.matrix, p)
        keys = {}
        new_labels = []
        for r in range(core.n):
            key = (where[r], _residue(_path_vector(Q, u[r], columns), echelon, p))
            new_labels.append(keys.setdefault(key, len(keys)))
        if len(keys) <= len(set(labels)):
            raise InternalInconsistency(f"closure iteration for p = {p} did not refine")
        labels = new_labels
        iterations += 1
    logger.info("p = %d closure: %d vertices after %d refinements", p, Q.n, iterations)
    return Q, _congruence(aut, Q)


def _product_core(automata):
    first = automata[0]
    k = len(first.alphabet)
    start = tuple(a.base for a in automata)
    states = {start: 0}
    queue = deque([start])
    edges = set()
    while queue:
        state = queue.popleft()
        for a in range(k):
            nxt = tuple(aut.forward[a].get(v) for aut, v in zip(automata, state))
            if None in nxt:
                continue
            if nxt not in states:
                states[nxt] = len(states)
                queue.append(nxt)
            edges.add((states[state], a, states[nxt]))
        for a in range(k):
            prev = tuple(aut.backward[a].get(v) for aut, v in zip(automata, state))
            if None in prev:
                continue
            if prev not in states:
                states[prev] = len(states)
                queue.append(prev)
            edges.add((states[prev], a, states[state]))
    return _trim(_make(len(states), 0, first.alphabet, edges))


def _abelianization(core):
    basis = tree_basis(core)
    letters = sorted({a for _, a, _ in core.edges})
    matrix = np.zeros((len(basis), len(letters)), dtype=np.int64)
    position = {a: i for i, a in enumerate(letters)}
    for row, word in enumerate(basis):
        for s in word:
            matrix[row, position[abs(s) - 1]] += 1 if s > 0 else -1
    return matrix


def nil_closure(aut, primes='auto', prime_floor=PRIME_FLOOR):
    """Pro-nilpotent closure as the intersection of p-closures over a prime set.

    With primes='auto' the set is the primes dividing an elementary divisor
    of the abelianization matrix together with every prime up to
    prime_floor; the result is exact when that matrix has full rational rank.
    """
    core = trim_to_core(aut)
    matrix = _abelianization(core)
    rank, invariants = abelian_invariants(matrix)
    full = rank == matrix.shape[1]
    divisors = set()
    for d in invariants:
        if d > 1:
            divisors.update(int(q) for q in primefactors(d))
    if primes == 'auto':
        chosen = sorted(divisors | set(int(q) for q in primerange(2, prime_floor + 1)))
        exact = full
    else:
        chosen = sorted(set(int(q) for q in primes))
        exact = full and divisors <= set(chosen)
    if not chosen:
        raise BadParameter("no primes to close over")
    per_prime = {p: p_closure(aut, p) for p in chosen}

    keys = {}
    labels = []
    for v in range(aut.n):
        key = tuple(per_prime[p][1].class_of(v) for p in chosen)
        labels.append(keys.setdefault(key, len(keys)))
    classes = {}
    for v, label in enumerate(labels):
        classes.setdefault(label, []).append(v)
    congruence = VertexCongruence(tuple(tuple(c) for c in classes.values()))
    automaton = _product_core([per_prime[p][0] for p in chosen])
    logger.info("nil-closure over primes %s: %d classes on %d vertices, exact %s",
                chosen, len(classes), aut.n, exact)
    return NilClosure(automaton=automaton, congruence=congruence, primes=tuple(chosen),
                      exact=exact, per_prime=per_prime)


def is_gnil_extendible(aut, primes='auto', prime_floor=PRIME_FLOOR):
    """Yes iff the nil-closure congruence is trivial"""
    if not aut.is_inverse:
        raise NotInverse("some letter does not act as a partial injection")
    closure = nil_closure(aut, primes=primes, prime_floor=prime_floor)
    if closure.congruence.is_trivial:
        return ExtendibilityVerdict(YES, primes=closure.primes, exact=closure.exact)
    if closure.exact:
        return ExtendibilityVerdict(NO, pair=closure.congruence.identified_pair(),
                                    primes=closure.primes, exact=True)
    return ExtendibilityVerdict(UNKNOWN_AT_BOUND, primes=closure.primes, exact=False)


def from_edges(n, base, alphabet, edges):
    """Automaton with the given numbering; raises NotInverse unless each letter is a partial injection"""
    aut = InverseAutomaton(n=n, base=base, alphabet=tuple(alphabet), edges=tuple(sorted(set(edges))))
    if not aut.is_inverse:
        raise NotInverse("some letter does not act as a partial injection")
    return aut


def build_family(kind, l):
    """A_l, B_l or C_l over the letters a, b"""
    if kind not in ('A', 'B', 'C'):
        raise BadParameter(f"unknown family {kind!r}")
    if l < 2:
        raise BadParameter("family index must be at least 2")
    edges = [(i, 0, (i + 1) % l) for i in range(l)]
    edges += [(i, 1, i + 1) for i in range(l - 1)]
    n, base = l, 0
    if kind == 'C':
        edges.append((l - 1, 1, 0))
    elif kind == 'A':
        edges.append((l, 1, 0))
        n, base = l + 1, l
    return _make(n, base, ('a', 'b'), edges)
