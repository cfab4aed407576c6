import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import breadth_first_order, connected_components

from config import DEFAULT_T_MAX, Budgets
from errors import (BudgetExceeded, InternalInconsistency, MalformedRees, NotAGroup,
                    NotInverseSquare)
from green_structure import (NO_ENTRY, block_group_nil_failure, greens_structure,
                             group_nilpotency_class, principal_series, rees_coordinatize)
from lm_representation import gamma_psi, orbit_decomposition
from semigroup_core import adjoin_identity, omega_limit_batch
from utils import constant_mask, decode_tuples, encode_tuples, rotate

logger = logging.getLogger(__name__)

MEMBER = 'Member'
NOT_MEMBER = 'NotMember'
UNKNOWN = 'Unknown'

# Rows of tuples processed per vectorized step
CHUNK = 1 << 18


@dataclass(frozen=True)
class Verdict:
    status: str
    witness: object = None
    reason: str = None

    @property
    def is_member(self):
        return self.status == MEMBER


@dataclass(frozen=True)
class RotationWitness:
    """Columns alpha, beta (0-based) of layer ``layer`` and elements v_1..v_t
    with Gamma(v_i)(beta_j) = alpha_{j+i mod t}."""
    layer: int
    j_class: int
    t: int
    alpha: tuple
    beta: tuple
    witnesses: tuple


@dataclass(frozen=True)
class TupleCycleWitness:
    t: int
    elements: tuple
    words: tuple

    @property
    def distinct(self):
        return len(set(self.elements)) == self.t


@dataclass(frozen=True)
class NilpotencyClasses:
    mn_class: float
    smn_class: float


def lambda_step(table, xs, z):
    """One step of the cyclic recursion on a batch of t-tuples.

    lambda_{n+1,i} = lambda_{n,i} z lambda_{n,i+1} z ... z lambda_{n,i-1}
    """
    t = xs.shape[1]
    out = np.empty_like(xs)
    for i in range(t):
        acc = xs[:, i]
        for k in range(1, t):
            acc = table[table[acc, z], xs[:, (i + k) % t]]
        out[:, i] = acc
    return out


def lambda_sequences(S1, xs, zs):
    """Evolution (lambda_{k,1}, ..., lambda_{k,t}) for k = 0..len(zs)"""
    if len(xs) < 2:
        raise ValueError("the recursion needs t >= 2")
    state = np.array([xs], dtype=np.int64)
    out = [tuple(int(v) for v in state[0])]
    for z in zs:
        state = lambda_step(S1.table, state, np.array([z]))
        out.append(tuple(int(v) for v in state[0]))
    return out


def lambda_update_words(t):
    """Update words of phi_t: y_i -> lambda_{t,i}(y_1..y_t; z_1..z_t)"""
    current = [[f'y{i + 1}'] for i in range(t)]
    for k in range(1, t + 1):
        z = f'z{k}'
        nxt = []
        for i in range(t):
            word = list(current[i])
            for step in range(1, t):
                word += [z] + current[(i + step) % t]
            nxt.append(word)
        current = nxt
    return tuple(' '.join(word) for word in current)


def replay_tuple_cycle(S, witness):
    """True iff the words bring the tuple back to itself"""
    if witness.t < 2 or not witness.words:
        return False
    trail = lambda_sequences(S, witness.elements, witness.words)
    return trail[-1] == tuple(witness.elements)


def _budgets(budgets):
    return budgets if budgets is not None else Budgets()


def _tuple_space(S, t, use_identity):
    """Table and embedding so that tuples range over S while z ranges over S or S^1"""
    N = S.size
    if not use_identity:
        return S.table, np.arange(N), np.arange(N), np.arange(N)
    S1 = adjoin_identity(S)
    if S1.size == N:
        # S was a monoid, relabelled with the identity first
        emb = np.arange(N)
    else:
        emb = np.arange(1, N + 1)
    back = np.full(S1.size, -1, dtype=np.int64)
    back[emb] = np.arange(N)
    return S1.table, emb, back, np.arange(S1.size)


def _images(table, emb, back, N, t, codes, z):
    xs = emb[decode_tuples(codes, N, t)]
    zs = np.full(len(codes), z, dtype=np.int64)
    return encode_tuples(back[lambda_step(table, xs, zs)], N)


def _stable_tuples(S, t, budgets, use_identity=False):
    """Iterate T_{k+1} = images of T_k until constant or stable.

    Returns:
        (k, mask) where k is the first step whose set is all constant, or
        math.inf when a non-constant tuple survives forever; mask is the last set
    """
    N = S.size
    total = N ** t
    if total > budgets.oracle_nodes:
        raise BudgetExceeded(f"{N}^{t} tuples exceed the oracle budget {budgets.oracle_nodes}")
    table, emb, back, zs = _tuple_space(S, t, use_identity)
    all_codes = np.arange(total, dtype=np.int64)
    constant = constant_mask(all_codes, N, t)
    active = np.ones(total, dtype=bool)
    k = 0
    while True:
        if not (active & ~constant).any():
            return k, active
        codes = np.flatnonzero(active)
        nxt = np.zeros(total, dtype=bool)
        for start in range(0, len(codes), CHUNK):
            chunk = codes[start:start + CHUNK]
            for z in zs:
                nxt[_images(table, emb, back, N, t, chunk, z)] = True
        if np.array_equal(nxt, active):
            return math.inf, active
        active = nxt
        k += 1


def _cycle_witness(S, t, mask, use_identity=False):
    # Cycle through a non-constant tuple of the stable set, preferring distinct entries
    N = S.size
    table, emb, back, zs = _tuple_space(S, t, use_identity)
    codes = np.flatnonzero(mask & ~constant_mask(np.arange(N ** t), N, t))
    sources, targets = [], []
    for z in zs:
        images = _images(table, emb, back, N, t, codes, z)
        keep = np.isin(images, codes)
        sources.append(np.flatnonzero(keep))
        targets.append(np.searchsorted(codes, images[keep]))
    sources = np.concatenate(sources)
    targets = np.concatenate(targets)
    size = len(codes)
    graph = csr_matrix((np.ones(len(sources), dtype=np.int8), (sources, targets)), shape=(size, size))
    _, labels = connected_components(graph, directed=True, connection='strong')
    component_size = np.bincount(labels)
    self_loop = np.zeros(size, dtype=bool)
    self_loop[sources[sources == targets]] = True
    cyclic = (component_size[labels] > 1) | self_loop
    if not cyclic.any():
        return None
    decoded = decode_tuples(codes, N, t)
    distinct = np.array([len(set(row)) == t for row in decoded.tolist()])
    preferred = np.flatnonzero(cyclic & distinct)
    start = int(preferred[0] if len(preferred) else np.flatnonzero(cyclic)[0])

    def label(a, b):
        for z in zs:
            if _images(table, emb, back, N, t, codes[[a]], z)[0] == codes[b]:
                return int(z)
        raise InternalInconsistency("tuple graph edge without a label")

    if self_loop[start]:
        path = [start, start]
    else:
        order, predecessors = breadth_first_order(graph, start, directed=True, return_predecessors=True)
        closing = sources[(targets == start) & np.isin(sources, order)]
        last = int(closing[0])
        path = [last]
        while path[-1] != start:
            path.append(int(predecessors[path[-1]]))
        path.reverse()
        path.append(start)
    words = tuple(label(a, b) for a, b in zip(path, path[1:]))
    elements = tuple(int(v) for v in decoded[start])
    return TupleCycleWitness(t=t, elements=elements, words=words), bool(distinct[start])


def oracle_not_nilpotent(S, mode, t_max=DEFAULT_T_MAX, budgets=None, use_identity=False):
    """Brute-force search of the lambda-step tuple graph for a cyclic non-constant tuple.

    Args:
        mode: 'MN' (t = 2) or 'SMN' (t = 2..t_max)

    Returns:
        TupleCycleWitness with pairwise distinct entries, or None when
        nilpotent in that mode up to t_max. Cycles through tuples with
        repeated entries are not reported.
    """
    budgets = _budgets(budgets)
    ts = [2] if mode == 'MN' else list(range(2, t_max + 1))
    for t in ts:
        klass, mask = _stable_tuples(S, t, budgets, use_identity)
        if klass != math.inf:
            continue
        found = _cycle_witness(S, t, mask, use_identity)
        if found is None:
            raise InternalInconsistency("stable tuple set without a cycle")
        witness, distinct = found
        if distinct:
            logger.info("oracle found a cyclic %d-tuple", t)
            return witness
        logger.debug("t = %d: only tuples with repeated entries lie on cycles", t)
    return None


def nilpotency_classes(S, t_max=DEFAULT_T_MAX, budgets=None, use_identity=False):
    """Mal'cev class (t = 2) and strong class (max over t = 2..t_max); math.inf when infinite"""
    budgets = _budgets(budgets)
    classes = []
    for t in range(2, max(t_max, 2) + 1):
        klass, _ = _stable_tuples(S, t, budgets, use_identity)
        classes.append(max(klass, 1))
    return NilpotencyClasses(mn_class=classes[0], smn_class=max(classes))


def _layer_representation(S, series, p):
    if not greens_structure(S).regular[series.layers[p]]:
        return None
    try:
        return gamma_psi(S, series, p)
    except NotInverseSquare:
        raise InternalInconsistency(f"regular layer {p + 1} of a block group is not inverse")


def find_swap_pattern(maps, accept=None):
    """First (alpha, beta, (w, v)) with w: beta -> alpha', beta' -> alpha and v: beta -> alpha, beta' -> alpha'.

    Args:
        maps: dict element -> PartialMap, searched in element order
        accept: optional predicate on the column pair (alpha, alpha')
    """
    # (beta, beta', v(beta), v(beta')) -> first v
    keys = {}
    for s in sorted(maps):
        g = maps[s]
        dom = g.domain()
        for b in dom:
            for b2 in dom:
                if b != b2:
                    keys.setdefault((b, b2, g(b), g(b2)), s)
    for w in sorted(maps):
        g = maps[w]
        dom = g.domain()
        for b in dom:
            for b2 in dom:
                if b == b2:
                    continue
                alpha2, alpha = g(b), g(b2)
                if alpha == alpha2 or (accept is not None and not accept((alpha, alpha2))):
                    continue
                v = keys.get((b, b2, alpha, alpha2))
                if v is not None:
                    return (alpha, alpha2), (b, b2), (w, v)
    return None


def find_rotation_cycle(maps, degree, accept=None, t_max=None):
    """First rotation cycle among partial injections.

    For u, v in element order and every cycle (alpha_1..alpha_t) of
    h = Gamma(u)^-1 Gamma(v), with beta_j = Gamma(u)^-1(alpha_j), look for
    v_i sending beta_j to alpha_(j+i) for i = 2..t-1.

    Returns:
        (alpha, beta, (v_1, ..., v_t)) or None
    """
    owners = {}
    for s in sorted(maps):
        owners.setdefault(maps[s].images, s)
    images = np.array(list(owners.keys()), dtype=np.int64).reshape(len(owners), degree)
    elements = list(owners.values())
    movers = [(s, maps[s]) for s in elements if maps[s].rank() >= 2]
    for u, gu in movers:
        uinv = gu.inverse()
        for v, gv in movers:
            h = uinv.then(gv)
            cycles = sorted((c for c in orbit_decomposition(h).cycles
                             if len(c) >= 2 and (t_max is None or len(c) <= t_max)),
                            key=lambda c: (len(c), c))
            for cycle in cycles:
                alpha = tuple(a - 1 for a in cycle)
                if accept is not None and not accept(alpha):
                    continue
                t = len(alpha)
                beta = tuple(uinv(a) for a in alpha)
                found = [v]
                for i in range(2, t):
                    target = np.array([alpha[(j + i) % t] for j in range(t)])
                    hits = np.flatnonzero(np.all(images[:, list(beta)] == target, axis=1))
                    if len(hits) == 0:
                        break
                    found.append(elements[int(hits[0])])
                else:
                    found.append(u)
                    return alpha, beta, tuple(found)
    return None


def _bg_nil_verdict(S):
    failure = block_group_nil_failure(S)
    if failure is None:
        return None
    return Verdict(NOT_MEMBER, witness=dict(failure, kind='BGnilFailure'))


def check_mn(S):
    """Mal'cev nilpotency via the two-column rotation pattern on every inverse layer"""
    verdict = _bg_nil_verdict(S)
    if verdict is not None:
        return verdict
    series = principal_series(S)
    for p in reversed(range(len(series))):
        rep = _layer_representation(S, series, p)
        if rep is None or rep.degree < 2:
            continue
        found = find_swap_pattern(rep.gamma)
        if found is not None:
            alpha, beta, witnesses = found
            logger.info("MN fails on layer %d", p + 1)
            return Verdict(NOT_MEMBER, witness=RotationWitness(
                layer=p, j_class=rep.j_class, t=2, alpha=alpha, beta=beta, witnesses=witnesses))
    return Verdict(MEMBER)


def check_smn(S, t_max=DEFAULT_T_MAX, budgets=None):
    """Strong Mal'cev nilpotency via rotation cycles of Gamma(v) Gamma(u)^-1"""
    verdict = _bg_nil_verdict(S)
    if verdict is not None:
        return verdict
    series = principal_series(S)
    for p in reversed(range(len(series))):
        rep = _layer_representation(S, series, p)
        if rep is None or rep.degree < 2:
            continue
        if not all(g.is_partial_injection() for g in rep.gamma.values()):
            logger.warning("layer %d: Gamma is not injective, falling back to the oracle", p + 1)
            witness = oracle_not_nilpotent(S, 'SMN', t_max=t_max, budgets=budgets)
            return Verdict(MEMBER) if witness is None else Verdict(NOT_MEMBER, witness=witness)
        found = find_rotation_cycle(rep.gamma, rep.degree)
        if found is not None:
            alpha, beta, witnesses = found
            logger.info("SMN fails on layer %d with t = %d", p + 1, len(alpha))
            return Verdict(NOT_MEMBER, witness=RotationWitness(
                layer=p, j_class=rep.j_class, t=len(alpha), alpha=alpha, beta=beta, witnesses=witnesses))
    return Verdict(MEMBER)


def replay_rotation(S, witness):
    """Turn a RotationWitness into a TupleCycleWitness using only the table and Rees coordinates.

    Starts from y_j = (1_G; alpha_j, beta_j) and repeats the block v_1..v_t
    of lambda-steps until the tuple recurs.
    """
    rees = rees_coordinatize(S, witness.j_class)
    state = tuple(rees.element_at[(0, a, b)] for a, b in zip(witness.alpha, witness.beta))
    seen, trail = {}, []
    while state not in seen:
        seen[state] = len(trail)
        trail.append(state)
        state = lambda_sequences(S, state, witness.witnesses)[-1]
    start = seen[state]
    blocks = len(trail) - start
    cycle = TupleCycleWitness(t=witness.t, elements=trail[start], words=tuple(witness.witnesses) * blocks)
    if not cycle.distinct or not replay_tuple_cycle(S, cycle):
        raise InternalInconsistency("rotation witness does not replay")
    return cycle


def rotation_links_hold(S, witness):
    """Check Gamma(v_i)(beta_j) = alpha_{j+i} with freshly computed Gamma"""
    series = principal_series(S)
    rep = gamma_psi(S, series, series.layer_of(witness.j_class))
    t = witness.t
    for i, v in enumerate(witness.witnesses, start=1):
        g = rep.gamma_of(v)
        shifted = rotate(witness.alpha, i)
        if any(g(b) != a for b, a in zip(witness.beta, shifted)):
            return False
    return len(set(witness.alpha)) == t


def witness_regularity(S, witness):
    """Regularity flag of each v_i of a rotation witness"""
    greens = greens_structure(S)
    return tuple(greens.regular[greens.j_class[v]] for v in witness.witnesses)


def check_smn_circ_t(S, t=2, budgets=None):
    """SMN°_t: the omega-limit of phi_t has equal components for every y, z in S^t"""
    if t < 2:
        raise ValueError("t must be at least 2")
    budgets = _budgets(budgets)
    N = S.size
    states = N ** t
    if states * states > budgets.evaluations:
        raise BudgetExceeded(f"{N}^{2 * t} assignments exceed the evaluation budget")
    T = S.table
    all_y = decode_tuples(np.arange(states), N, t)
    batch = max(1, CHUNK // states)
    for start in range(0, states, batch):
        z_codes = np.arange(start, min(states, start + batch))
        zs = decode_tuples(z_codes, N, t)
        B = len(z_codes)
        xs = np.tile(all_y, (B, 1))
        for k in range(t):
            xs = lambda_step(T, xs, np.repeat(zs[:, k], states))
        F = encode_tuples(xs, N).reshape(B, states)
        limits = decode_tuples(omega_limit_batch(F).reshape(-1), N, t)
        if not np.all(limits == limits[:, :1]):
            return False
    return True


def _delta(T, om, omm, y1, y2, z1, z2):
    # ((y1z2)^(w-1) y1 z1 (y2z2)^(w-1) y2 z1)^w (y1z2)^w
    a = T[y1, z2]
    b = T[y2, z2]
    inner = T[T[T[omm[a], y1], z1], T[omm[b], y2]]
    inner = T[inner, z1]
    return T[om[inner], om[a]]


def check_mn_star(S, budgets=None):
    """MN*: Delta(y1, y2; z1, z2) = Delta(y2, y1; z1, z2) for all quadruples"""
    budgets = _budgets(budgets)
    N = S.size
    if N ** 4 > budgets.evaluations:
        raise BudgetExceeded(f"{N}^4 quadruples exceed the evaluation budget")
    T = S.table.astype(np.int64)
    om, omm = S.omega.omega, S.omega.omega_minus
    y2, z1, z2 = (grid.reshape(-1) for grid in np.meshgrid(np.arange(N), np.arange(N), np.arange(N), indexing='ij'))
    for y1 in range(N):
        y1s = np.full(len(y2), y1)
        if not np.array_equal(_delta(T, om, omm, y1s, y2, z1, z2), _delta(T, om, omm, y2, y1s, z1, z2)):
            return False
    return True


def check_p2(S):
    """Property P_2: the four products y_i z_j y_(i+j) staying in J force y1 H y2"""
    greens = greens_structure(S)
    T = S.table
    zs = np.arange(S.size)
    for J, members in enumerate(greens.j_members):
        in_j = greens.j_class == J
        ys = np.array(members)
        for y1 in members:
            first = in_j[T[T[y1, zs][None, :], ys[:, None]]] & in_j[T[T[ys[:, None], zs[None, :]], y1]]
            second = in_j[T[T[y1, zs], y1]][None, :] & in_j[T[T[ys[:, None], zs[None, :]], ys[:, None]]]
            bad = first.any(axis=1) & second.any(axis=1) & (greens.h_class[ys] != greens.h_class[y1])
            if bad.any():
                return False
    return True


def rees_fast_path(desc):
    """MN and SMN verdicts for M^0(G, n, m; P) given directly.

    Member iff n = m, P has exactly one entry per row and column, and G is nilpotent.
    """
    table = np.asarray(desc.group_table)
    P = np.asarray(desc.sandwich)
    if P.shape != (desc.cols, desc.rows):
        raise MalformedRees(f"sandwich must be {desc.cols} x {desc.rows}, got {P.shape}")
    if P.min() < NO_ENTRY or P.max() >= table.shape[0]:
        raise MalformedRees("sandwich entries outside the group")
    pattern = P != NO_ENTRY
    if not pattern.any(axis=0).all() or not pattern.any(axis=1).all():
        raise MalformedRees("sandwich matrix has an empty row or column")
    try:
        klass = group_nilpotency_class(table)
    except NotAGroup as e:
        raise MalformedRees(f"group table is not a group: {e}")

    violated = []
    if desc.rows != desc.cols:
        violated.append('n != m')
    if not (pattern.sum(axis=0) == 1).all() or not (pattern.sum(axis=1) == 1).all():
        violated.append('P is not a permuted identity')
    if klass is None:
        violated.append('G is not nilpotent')
    if violated:
        verdict = Verdict(NOT_MEMBER, witness={'kind': 'ReesCriterion', 'violated': violated})
    else:
        verdict = Verdict(MEMBER)
    return {'MN': verdict, 'SMN': verdict}