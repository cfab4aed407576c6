import itertools
import logging
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from config import PRODUCT_STATE_BUDGET, Budgets
from errors import BudgetExceeded
from green_structure import greens_structure
from nilpotency_engine import find_rotation_cycle, find_swap_pattern
from semigroup_core import THETA, PartialMap, close_generators
from utils import encode_tuples

logger = logging.getLogger(__name__)

NO_EDGE = -1


@dataclass(frozen=True, eq=False)
class SchutzGraph:
    """Schutzenberger graph of one regular R-class (side 'right') or L-class (side 'left').

    Vertices are local indices into ``vertices`` (element ids of S);
    edges[a][v] is the target of the a-edge leaving v, or NO_EDGE.
    """
    side: str
    class_id: int
    j_class: int
    vertices: tuple
    letters: tuple
    edges: tuple
    h_classes: tuple
    base: int

    @property
    def size(self):
        return len(self.vertices)

    @cached_property
    def successor_array(self):
        return np.array(self.edges, dtype=np.int64).reshape(len(self.letters), self.size)

    @cached_property
    def is_inverse(self):
        for row in self.edges:
            targets = [v for v in row if v != NO_EDGE]
            if len(targets) != len(set(targets)):
                return False
        return True


def _graph(S, greens, side, class_id, members):
    vertices = tuple(sorted(members))
    local = {x: i for i, x in enumerate(vertices)}
    T = S.table
    edges = []
    for g in S.generators:
        row = []
        for x in vertices:
            y = int(T[x, g]) if side == 'right' else int(T[g, x])
            row.append(local.get(y, NO_EDGE))
        edges.append(tuple(row))
    idempotents = [i for i, x in enumerate(vertices) if T[x, x] == x]
    return SchutzGraph(
        side=side, class_id=class_id, j_class=int(greens.j_class[vertices[0]]),
        vertices=vertices, letters=S.generator_names, edges=tuple(edges),
        h_classes=tuple(int(greens.h_class[x]) for x in vertices),
        base=idempotents[0] if idempotents else 0,
    )


@lru_cache(maxsize=64)
def schutz_graphs(S):
    """Right graphs of all regular R-classes followed by left graphs of all regular L-classes"""
    greens = greens_structure(S)
    graphs = []
    for side, labels in (('right', greens.r_class), ('left', greens.l_class)):
        classes = {}
        for x in range(S.size):
            classes.setdefault(int(labels[x]), []).append(x)
        for class_id in sorted(classes):
            members = classes[class_id]
            if not greens.regular[greens.j_class[members[0]]]:
                continue
            graphs.append(_graph(S, greens, side, class_id, members))
    logger.info("%d Schutzenberger graphs, %d not inverse",
                len(graphs), sum(1 for g in graphs if not g.is_inverse))
    return tuple(graphs)


def transition_maps(g):
    """Partial maps on the vertices induced by each letter"""
    return [PartialMap(tuple(THETA if v == NO_EDGE else v for v in row)) for row in g.edges]


@lru_cache(maxsize=256)
def transition_semigroup(g):
    """Semigroup of the partial maps read along nonempty words"""
    return close_generators(transition_maps(g), names=g.letters, check=False)


@lru_cache(maxsize=4096)
def _reachable(g, start):
    # States reachable from start by a nonempty word in the k-fold product
    succ = g.successor_array
    n = g.size
    k = len(start)
    seen = np.zeros(0, dtype=np.int64)
    frontier = np.array([start], dtype=np.int64)
    while len(frontier):
        nxt = []
        for row in succ:
            images = row[frontier]
            images = images[np.all(images != NO_EDGE, axis=1)]
            if len(images):
                nxt.append(images)
        if not nxt:
            break
        nxt = np.unique(np.concatenate(nxt), axis=0)
        codes = encode_tuples(nxt, n)
        fresh = ~np.isin(codes, seen)
        seen = np.union1d(seen, codes[fresh])
        if len(seen) > PRODUCT_STATE_BUDGET:
            raise BudgetExceeded(f"product automaton of {k} copies exceeds {PRODUCT_STATE_BUDGET} states")
        frontier = nxt[fresh]
    return frozenset(int(c) for c in seen)


def l_intersection_nonempty(g, pairs):
    """True iff some nonempty word runs from beta_k to alpha_k for every (beta_k, alpha_k)"""
    if not pairs:
        return True
    start = tuple(int(b) for b, _ in pairs)
    target = int(encode_tuples(np.array([[a for _, a in pairs]]), g.size)[0])
    return target in _reachable(g, start)


def _maps_by_element(g):
    T = transition_semigroup(g)
    return {i: m for i, m in enumerate(T.elements)}


def _plain_nilpotent(g, accept):
    return find_swap_pattern(_maps_by_element(g), accept=accept) is None


def _strong_nilpotent_inverse(g, accept, n_max):
    return find_rotation_cycle(_maps_by_element(g), g.size, accept=accept, t_max=n_max) is None


def _strong_nilpotent_brute(g, accept, n_max, budget):
    T = transition_semigroup(g)
    n = g.size
    images = np.array([[n if v == THETA else v for v in m.images] for m in T.elements], dtype=np.int64)
    for t in range(2, n_max + 1):
        if n ** t * len(images) > budget:
            raise BudgetExceeded(f"{n}^{t} vertex tuples over {len(images)} transitions exceed the budget")
        for beta in itertools.product(range(n), repeat=t):
            reached = images[:, list(beta)]
            reached = reached[np.all(reached != n, axis=1)]
            if not len(reached):
                continue
            achievable = {tuple(row) for row in reached.tolist()}
            for alpha in achievable:
                if len(set(alpha)) == 1 or not accept(alpha):
                    continue
                if all(alpha[r:] + alpha[:r] in achievable for r in range(1, t)):
                    return False
    return True


def rclass_nilpotency_predicates(g, variant='plain', strong=False, n_max=None, budgets=None):
    """Nilpotency of a Schutzenberger graph in the sense of its L-set intersections.

    Args:
        g: SchutzGraph
        variant: 'plain' compares distinct vertices, 'H' only H-distinct ones
        strong: use rotations of vertex tuples of length up to n_max
        n_max: defaults to the number of H-classes met by the graph

    Returns:
        True when the graph is (H-)(strongly) nilpotent
    """
    if variant not in ('plain', 'H'):
        raise ValueError(f"unknown variant {variant!r}")
    if g.size == 1:
        return True
    h = g.h_classes

    def accept(alpha):
        if variant == 'plain':
            return len(set(alpha)) > 1
        return len({h[a] for a in alpha}) > 1

    if not strong:
        return _plain_nilpotent(g, accept)
    if n_max is None:
        n_max = len(set(h))
    if g.is_inverse:
        return _strong_nilpotent_inverse(g, accept, n_max)
    budgets = budgets if budgets is not None else Budgets()
    return _strong_nilpotent_brute(g, accept, n_max, budgets.evaluations)


def to_dot(g, S):
    """Graphviz text; vertices carry element words, edges generator letters"""
    name = f"{'R' if g.side == 'right' else 'L'}{g.class_id}"
    lines = [f'digraph "{name}" {{']
    for i, x in enumerate(g.vertices):
        shape = 'doublecircle' if i == g.base else 'circle'
        lines.append(f'  v{i} [label="{S.word_string(x)}", shape={shape}];')
    for letter, row in zip(g.letters, g.edges):
        for v, target in enumerate(row):
            if target != NO_EDGE:
                lines.append(f'  v{v} -> v{target} [label="{letter}"];')
    lines.append('}')
    return '\n'.join(lines)
