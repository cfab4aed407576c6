import logging
import time
from dataclasses import dataclass, field

from config import DEFAULT_T_MAX, PRIME_FLOOR, Budgets
from errors import BudgetExceeded, InternalInconsistency
from green_structure import (block_group_failure, block_group_nil_failure, greens_structure,
                             idempotents_commute, is_aperiodic, maximal_subgroups, subgroup_classes)
from nilpotency_engine import (MEMBER, NOT_MEMBER, UNKNOWN, RotationWitness, TupleCycleWitness, Verdict,
                               check_mn, check_mn_star, check_p2, check_smn, check_smn_circ_t,
                               replay_rotation, replay_tuple_cycle)
from schutzenberger import NO_EDGE, schutz_graphs
from stallings_toolkit import NO, UNKNOWN_AT_BOUND, from_edges, is_gnil_extendible
from utils import table_digest

logger = logging.getLogger(__name__)

# Report order; also the rows of the text table
PSEUDOVARIETIES = ('A', 'Inv', 'IdempotentsCommute', 'BG', 'BG_nil', 'BI',
                   'MN', 'SMN', 'MN*', 'SMNcirc2', 'JmGnil')

# --skip names accepted on the command line
SKIPPABLE = {'mnstar': 'MN*', 'smncirc': 'SMNcirc2', 'jmgnil': 'JmGnil', 'smn': 'SMN'}

# Member(left) must imply Member(right)
CHAIN = (('SMN', 'MN'), ('MN', 'BG_nil'), ('BG_nil', 'BG'), ('BI', 'BG'), ('BI', 'A'))


@dataclass
class ClassificationReport:
    digest: str
    size: int
    degree: int
    verdicts: dict = field(default_factory=dict)
    certificates: dict = field(default_factory=dict)
    consistency: dict = field(default_factory=dict)
    subgroups: dict = field(default_factory=dict)
    timing: dict = field(default_factory=dict)
    budget_exceeded: bool = False

    def status(self, name):
        return self.verdicts[name].status


def _from_failure(failure):
    if failure is None:
        return Verdict(MEMBER)
    return Verdict(NOT_MEMBER, witness=failure)


def _aperiodic_verdict(S):
    if is_aperiodic(S):
        return Verdict(MEMBER)
    greens = greens_structure(S)
    for e, group in maximal_subgroups(S):
        if len(group) > 1:
            return Verdict(NOT_MEMBER, witness={'kind': 'NontrivialSubgroup', 'idempotent': S.word_string(e),
                                                'j_class': int(greens.j_class[e]), 'group_order': len(group)})
    raise InternalInconsistency("aperiodicity test without a nontrivial subgroup")


def _commuting_verdict(S):
    if idempotents_commute(S):
        return Verdict(MEMBER)
    T = S.table
    for e in S.idempotents:
        for f in S.idempotents:
            if T[e, f] != T[f, e]:
                return Verdict(NOT_MEMBER, witness={'kind': 'IdempotentPair',
                                                    'e': S.word_string(int(e)), 'f': S.word_string(int(f))})
    raise InternalInconsistency("idempotent commutation test without a pair")


def _inverse_verdict(S, commuting):
    greens = greens_structure(S)
    for x in range(S.size):
        if not greens.regular[greens.j_class[x]]:
            return Verdict(NOT_MEMBER, witness={'kind': 'NonRegularElement', 'element': S.word_string(x)})
    if not commuting.is_member:
        return Verdict(NOT_MEMBER, witness=commuting.witness)
    return Verdict(MEMBER)


def _bi_verdict(bg, aperiodic):
    if not bg.is_member:
        return bg
    return aperiodic


def _graph_automaton(g):
    edges = [(v, a, target) for a, row in enumerate(g.edges) for v, target in enumerate(row) if target != NO_EDGE]
    return from_edges(g.size, g.base, g.letters, edges)


def check_jm_gnil(S, primes='auto', prime_floor=PRIME_FLOOR):
    """Decide J m G_nil through the regular Schutzenberger graphs of S.

    Member iff every right and left graph of a regular class is an inverse
    automaton whose nil-closure congruence is trivial.

    Returns:
        Verdict whose witness lists the evidence of every graph
    """
    evidence = []
    failed = unknown = False
    for g in schutz_graphs(S):
        entry = {'side': g.side, 'class_id': g.class_id, 'vertices': g.size,
                 'representative': S.word_string(g.vertices[g.base])}
        if not g.is_inverse:
            entry['status'] = 'NotInverse'
            failed = True
            evidence.append(entry)
            continue
        verdict = is_gnil_extendible(_graph_automaton(g), primes=primes, prime_floor=prime_floor)
        entry['status'] = verdict.status
        entry['primes'] = list(verdict.primes)
        entry['exact'] = verdict.exact
        if verdict.status == NO:
            u, v = verdict.pair
            entry['identified'] = [S.word_string(g.vertices[u]), S.word_string(g.vertices[v])]
            failed = True
        elif verdict.status == UNKNOWN_AT_BOUND:
            unknown = True
        evidence.append(entry)
    witness = {'kind': 'SchutzenbergerExtendibility', 'graphs': evidence}
    if failed:
        return Verdict(NOT_MEMBER, witness=witness)
    if unknown:
        return Verdict(UNKNOWN, witness=witness, reason='nil-closure prime set is not exact')
    logger.info("all %d Schutzenberger graphs are G_nil-extendible", len(evidence))
    return Verdict(MEMBER, witness=witness)


def _bool_verdict(value, kind):
    return Verdict(MEMBER) if value else Verdict(NOT_MEMBER, witness={'kind': kind})


def _check_chain(verdicts):
    for left, right in CHAIN:
        if left in verdicts and right in verdicts:
            if verdicts[left].status == MEMBER and verdicts[right].status == NOT_MEMBER:
                raise InternalInconsistency(f"{left} holds but {right} fails")


def _consistency(S, verdicts):
    flags = {}

    def known(*names):
        return all(n in verdicts and verdicts[n].status != UNKNOWN for n in names)

    if known('MN*', 'BG_nil', 'MN'):
        flags['mn_star_and_bg_nil_iff_mn'] = (
            (verdicts['MN*'].is_member and verdicts['BG_nil'].is_member) == verdicts['MN'].is_member)
    if known('SMNcirc2', 'MN'):
        flags['smn_circ_2_iff_mn'] = verdicts['SMNcirc2'].is_member == verdicts['MN'].is_member
    if known('BG_nil', 'MN') and verdicts['BG_nil'].is_member:
        flags['p2_iff_mn'] = check_p2(S) == verdicts['MN'].is_member
    for name, agreed in flags.items():
        if not agreed:
            logger.warning("consistency check %s failed", name)
    return flags


def _certificate(S, name, witness):
    # Replays through the lambda recursion only
    if isinstance(witness, RotationWitness):
        return replay_rotation(S, witness)
    if isinstance(witness, TupleCycleWitness):
        if not witness.distinct or not replay_tuple_cycle(S, witness):
            raise InternalInconsistency(f"{name} tuple cycle does not replay")
        return witness
    return None


def classify(S, skip=(), budgets=None, t_max=DEFAULT_T_MAX, primes='auto'):
    """Classify S against every supported pseudovariety.

    Args:
        S: GeneratedSemigroup
        skip: names from SKIPPABLE whose checks are not run
        budgets: Budgets for the oracle and the exhaustive identity checks
        t_max: longest tuple the oracle fallback of SMN looks at
        primes: prime strategy of the nil-closure ('auto' or a list)

    Returns:
        ClassificationReport; budget overruns show up as Unknown verdicts
    """
    budgets = budgets if budgets is not None else Budgets()
    skipped = {SKIPPABLE[s] for s in skip}
    report = ClassificationReport(digest=table_digest(S.table), size=S.size, degree=S.degree)
    verdicts = report.verdicts

    def run(name, check):
        if name in skipped:
            verdicts[name] = Verdict(UNKNOWN, reason='skipped')
            return
        started = time.perf_counter()
        try:
            verdicts[name] = check()
        except BudgetExceeded as e:
            logger.warning("%s: %s", name, e)
            verdicts[name] = Verdict(UNKNOWN, reason=str(e))
            report.budget_exceeded = True
        report.timing[name] = round(time.perf_counter() - started, 4)

    run('A', lambda: _aperiodic_verdict(S))
    run('IdempotentsCommute', lambda: _commuting_verdict(S))
    run('Inv', lambda: _inverse_verdict(S, verdicts['IdempotentsCommute']))
    run('BG', lambda: _from_failure(block_group_failure(S)))
    run('BG_nil', lambda: _from_failure(block_group_nil_failure(S)))
    run('BI', lambda: _bi_verdict(verdicts['BG'], verdicts['A']))
    run('MN', lambda: check_mn(S))
    run('SMN', lambda: check_smn(S, t_max=t_max, budgets=budgets))
    run('MN*', lambda: _bool_verdict(check_mn_star(S, budgets=budgets), 'DeltaIdentity'))
    run('SMNcirc2', lambda: _bool_verdict(check_smn_circ_t(S, 2, budgets=budgets), 'OmegaLimit'))
    run('JmGnil', lambda: check_jm_gnil(S, primes=primes, prime_floor=budgets.prime_floor))

    _check_chain(verdicts)
    report.consistency = _consistency(S, verdicts)
    report.subgroups = {j: {'order': order, 'class': klass}
                        for j, (order, klass) in subgroup_classes(S).items()}
    for name, verdict in verdicts.items():
        if verdict.status != NOT_MEMBER:
            continue
        certificate = _certificate(S, name, verdict.witness)
        if certificate is not None:
            report.certificates[name] = certificate
    logger.info("classified semigroup of size %d: %s", S.size,
                ', '.join(f"{n}={v.status}" for n, v in verdicts.items()))
    return report

