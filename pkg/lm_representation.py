import logging
import re
from dataclasses import dataclass

import numpy as np

from errors import InconsistentPattern, InternalInconsistency, NotInverseSquare, ParseError, SemanticError
from green_structure import greens_structure, rees_coordinatize
from semigroup_core import THETA, PartialMap, constant_theta

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class OrbitSpec:
    """Orbits of a partial map in 1-based points.

    ``links`` only appears for maps that are not partial injections: it
    holds the (point, image) pairs lying on merging branches.
    """
    cycles: tuple
    theta_runs: tuple
    links: tuple = ()


@dataclass(frozen=True)
class LinkPattern:
    pairs: tuple

    def is_consistent(self):
        target = {}
        for src, dst in self.pairs:
            if target.setdefault(src, dst) != dst:
                return False
        return True


@dataclass(frozen=True, eq=False)
class LMRepresentation:
    """Gamma and Psi of S acting on the columns of one inverse Rees layer"""
    layer: int
    j_class: int
    rees: object
    degree: int
    gamma: dict
    psi: dict
    action_order: str

    def gamma_of(self, s):
        return self.gamma.get(s, constant_theta(self.degree))

    def psi_of(self, s):
        return self.psi.get(s, (None,) * self.degree)


def orbit_decomposition(m):
    """Split a partial map into cycles and theta-runs, dropping (j, theta) pairs"""
    n = m.degree
    img = m.images
    indegree = [0] * n
    for image in img:
        if image != THETA:
            indegree[image] += 1

    on_cycle = [False] * n
    for p in range(n):
        q = img[p]
        for _ in range(n):
            if q == THETA:
                break
            if q == p:
                on_cycle[p] = True
                break
            q = img[q]

    cycles = []
    placed = [False] * n
    for p in range(n):
        if on_cycle[p] and not placed[p]:
            cycle = [p]
            placed[p] = True
            q = img[p]
            while q != p:
                cycle.append(q)
                placed[q] = True
                q = img[q]
            cycles.append(tuple(x + 1 for x in cycle))

    runs = []
    covered = [False] * n
    for p in range(n):
        if on_cycle[p] or indegree[p] != 0:
            continue
        seq = [p]
        cur = p
        while True:
            nxt = img[cur]
            if nxt == THETA or on_cycle[nxt] or indegree[nxt] > 1:
                break
            seq.append(nxt)
            cur = nxt
        if img[cur] == THETA:
            for x in seq:
                covered[x] = True
            if len(seq) >= 2:
                runs.append(tuple(x + 1 for x in seq))

    links = tuple((x + 1, img[x] + 1) for x in range(n)
                  if not on_cycle[x] and not covered[x] and img[x] != THETA)
    return OrbitSpec(cycles=tuple(cycles), theta_runs=tuple(runs), links=links)


def orbits_to_map(spec, degree):
    images = [THETA] * degree
    for cycle in spec.cycles:
        for k, point in enumerate(cycle):
            images[point - 1] = cycle[(k + 1) % len(cycle)] - 1
    for run in spec.theta_runs:
        for a, b in zip(run, run[1:]):
            images[a - 1] = b - 1
    for a, b in spec.links:
        images[a - 1] = b - 1
    return PartialMap(tuple(images))


def format_orbits(m):
    """Orbit notation such as (1,2,3)(4,5,#); the constant-theta map prints as '#'"""
    spec = orbit_decomposition(m)
    parts = ['(' + ','.join(map(str, c)) + ')' for c in spec.cycles]
    parts += ['(' + ','.join(map(str, r)) + ',#)' for r in spec.theta_runs]
    parts += [f'[{a}>{b}]' for a, b in spec.links]
    return ''.join(parts) or '#'


_ORBIT_TOKEN = re.compile(r'\s*(\(([^()]*)\)|\[(\d+)>(\d+)\]|#)')


def parse_orbits(text, degree, line=None):
    """Parse orbit notation back into a PartialMap on ``degree`` points"""
    images = [None] * degree

    def assign(src, dst, column):
        if not 1 <= src <= degree or (dst is not None and not 1 <= dst <= degree):
            raise SemanticError(f"point out of range 1..{degree} near column {column}")
        if images[src - 1] is not None:
            raise SemanticError(f"point {src} appears twice")
        images[src - 1] = THETA if dst is None else dst - 1

    pos = 0
    text = text.rstrip()
    while pos < len(text):
        match = _ORBIT_TOKEN.match(text, pos)
        if not match:
            raise ParseError(f"unexpected {text[pos:pos + 8]!r} in orbit notation", line, pos + 1)
        column = match.start(1) + 1
        if match.group(2) is not None:
            items = [item.strip() for item in match.group(2).split(',')]
            if not items or any(item == '' for item in items):
                raise ParseError("empty orbit", line, column)
            run = items[-1] == '#'
            try:
                points = [int(item) for item in (items[:-1] if run else items)]
            except ValueError:
                raise ParseError("orbit entries must be integers or a final #", line, column)
            if not points:
                raise ParseError("orbit without points", line, column)
            if run:
                for a, b in zip(points, points[1:]):
                    assign(a, b, column)
                assign(points[-1], None, column)
            else:
                for k, a in enumerate(points):
                    assign(a, points[(k + 1) % len(points)], column)
        elif match.group(3) is not None:
            assign(int(match.group(3)), int(match.group(4)), column)
        pos = match.end()
    return PartialMap(tuple(THETA if image is None else image for image in images))


def parse_link_pattern(text):
    """Parse [j11,j12,...;j21,...] into consecutive (from, to) pairs"""
    body = text.strip()
    if not (body.startswith('[') and body.endswith(']')):
        raise ParseError(f"link pattern must be bracketed: {text!r}")
    pairs = []
    for chain in body[1:-1].split(';'):
        points = [int(x) for x in chain.split(',') if x.strip()]
        if len(points) < 2:
            raise ParseError(f"link chain needs two points: {chain!r}")
        pairs.extend(zip(points, points[1:]))
    return LinkPattern(tuple(pairs))


def has_link_pattern(m, pat):
    """True iff m sends every from-point of the pattern to its to-point (1-based)"""
    if not pat.is_consistent():
        raise InconsistentPattern(f"pattern {pat.pairs} sends a point to two targets")
    return all(m(src - 1) == dst - 1 for src, dst in pat.pairs)


def gamma_psi(S, series, p):
    """L_M-representation of S on the columns of layer p of the principal series.

    Args:
        S: GeneratedSemigroup
        series: its PrincipalSeries
        p: 0-based layer index

    Returns:
        LMRepresentation; Gamma(s)(j) = j' when (1;i,j)s = (g;i,j') and Psi(s)(j) = g
    """
    J = series.layers[p]
    if not greens_structure(S).regular[J]:
        raise NotInverseSquare(f"layer {p + 1} is not regular")
    rees = rees_coordinatize(S, J)
    if not rees.is_inverse_square:
        raise NotInverseSquare(f"layer {p + 1} is not of the form M^0(G,n,n;I_n)")
    n = rees.rows
    N = S.size
    T = S.table

    col_of = np.full(N, -1, dtype=np.int64)
    group_of = np.full(N, -1, dtype=np.int64)
    for x, (g, i, j) in rees.coord.items():
        if i == 0:
            col_of[x] = j
            group_of[x] = g
    # (1_G; 0, j) s for all j and s
    anchors = np.array([rees.element_at[(0, 0, j)] for j in range(n)])
    products = T[anchors, :]
    gamma_cols = col_of[products]
    psi_cols = group_of[products]

    gamma, psi = {}, {}
    for s in np.flatnonzero((gamma_cols >= 0).any(axis=0)):
        s = int(s)
        gamma[s] = PartialMap(tuple(int(v) if v >= 0 else THETA for v in gamma_cols[:, s]))
        psi[s] = tuple(int(v) if v >= 0 else None for v in psi_cols[:, s])

    order = _validate_action(T, gamma_cols.T, n)
    logger.debug("layer %d: Gamma moves %d of %d elements, action order %s", p + 1, len(gamma), N, order)
    return LMRepresentation(layer=p, j_class=J, rees=rees, degree=n,
                            gamma=gamma, psi=psi, action_order=order)


def _validate_action(T, images, n):
    # images[s, j] in 0..n-1 or -1; THETA goes to slot n
    N = T.shape[0]
    G = np.concatenate([np.where(images < 0, n, images), np.full((N, 1), n)], axis=1)
    right_ok = left_ok = True
    ts = np.arange(N)[:, None]
    for s in range(N):
        product = G[T[s, :]]
        if right_ok and not np.array_equal(product, G[ts, G[s][None, :]]):
            right_ok = False
        if left_ok and not np.array_equal(product, G[s][G]):
            left_ok = False
        if not right_ok and not left_ok:
            break
    if not right_ok:
        raise InternalInconsistency("Gamma is not a homomorphism for the right action")
    return 'either' if left_ok else 'right'


def cocycle_failure(S, rep):
    """First (s, t, j) where Psi(st)(j) != Psi(s)(j) Psi(t)(Gamma(s)(j)), or None"""
    G = rep.rees.group_table
    T = S.table
    for s in rep.gamma:
        gs, ps = rep.gamma[s], rep.psi[s]
        for t in rep.gamma:
            st = int(T[s, t])
            gst = rep.gamma_of(st)
            pst = rep.psi_of(st)
            pt = rep.psi[t]
            for j in range(rep.degree):
                if gst(j) == THETA:
                    continue
                expected = int(G[ps[j], pt[gs(j)]])
                if pst[j] != expected:
                    return s, t, j
    return None
