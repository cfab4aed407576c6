import dataclasses
import json
import logging

import pandas as pd

from classifier import PSEUDOVARIETIES
from nilpotency_engine import RotationWitness, TupleCycleWitness
from utils import rotate

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1


def _link_pattern(witness, i):
    # [beta_1,alpha_(1+i);...] in 1-based columns
    shifted = rotate(witness.alpha, i)
    chains = [f"{b + 1},{a + 1}" for b, a in zip(witness.beta, shifted)]
    return '[' + ';'.join(chains) + ']'


def witness_to_dict(witness, S=None):
    """JSON-ready form of a witness; element ids become words when S is given"""
    def word(x):
        return S.word_string(int(x)) if S is not None else int(x)

    if witness is None:
        return None
    if isinstance(witness, RotationWitness):
        return {
            'kind': 'RotationWitness',
            'layer': witness.layer + 1,
            'j_class': witness.j_class,
            't': witness.t,
            'alpha': [a + 1 for a in witness.alpha],
            'beta': [b + 1 for b in witness.beta],
            'witnesses': [word(v) for v in witness.witnesses],
            'link_patterns': [_link_pattern(witness, i) for i in range(1, witness.t + 1)],
        }
    if isinstance(witness, TupleCycleWitness):
        return {
            'kind': 'TupleCycleWitness',
            't': witness.t,
            'elements': [word(x) for x in witness.elements],
            'words': [word(z) for z in witness.words],
            'distinct': witness.distinct,
        }
    if dataclasses.is_dataclass(witness):
        return _plain(dataclasses.asdict(witness))
    return _plain(witness)


def _plain(value):
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if hasattr(value, 'item'):
        return value.item()
    return value


def report_to_dict(report, S=None):
    verdicts = {}
    for name, verdict in report.verdicts.items():
        verdicts[name] = {
            'status': verdict.status,
            'reason': verdict.reason,
            'witness': witness_to_dict(verdict.witness, S),
        }
    return {
        'schema_version': SCHEMA_VERSION,
        'digest': report.digest,
        'size': report.size,
        'degree': report.degree,
        'verdicts': verdicts,
        'certificates': {name: witness_to_dict(c, S) for name, c in report.certificates.items()},
        'consistency': dict(report.consistency),
        'subgroups': _plain(report.subgroups),
        'timing': dict(report.timing),
        'budget_exceeded': report.budget_exceeded,
    }


def verdict_table(report):
    """One row per pseudovariety in report order"""
    rows = []
    for name in PSEUDOVARIETIES:
        verdict = report.verdicts.get(name)
        if verdict is None:
            continue
        detail = verdict.reason or ''
        if not detail and verdict.witness is not None:
            witness = witness_to_dict(verdict.witness)
            detail = witness.get('kind', '') if isinstance(witness, dict) else ''
        rows.append({'pseudovariety': name, 'verdict': verdict.status, 'detail': detail,
                     'seconds': report.timing.get(name)})
    return pd.DataFrame(rows)


def _text(report, S):
    lines = [f"digest: {report.digest}", f"size: {report.size}"]
    if report.degree is not None:
        lines.append(f"points: {report.degree}")
    lines.append('')
    lines.append(verdict_table(report).to_string(index=False))
    witnesses = [(name, v.witness) for name, v in report.verdicts.items()
                 if v.status == 'NotMember' and v.witness is not None]
    if witnesses:
        lines.append('')
        lines.append('witnesses:')
        for name, witness in witnesses:
            lines.append(f"  {name}: {json.dumps(witness_to_dict(witness, S), sort_keys=True)}")
    if report.certificates:
        lines.append('')
        lines.append('replayed certificates:')
        for name, cert in report.certificates.items():
            lines.append(f"  {name}: {json.dumps(witness_to_dict(cert, S), sort_keys=True)}")
    if report.consistency:
        lines.append('')
        lines.append('consistency: ' + ', '.join(f"{k}={v}" for k, v in sorted(report.consistency.items())))
    return '\n'.join(lines) + '\n'


def emit_report(report, fmt='text', S=None):
    """Render a ClassificationReport as bytes.

    Args:
        report: ClassificationReport
        fmt: 'text' for a human table, 'json' for sorted-key JSON
        S: the classified semigroup, used to print elements as words
    """
    if fmt == 'json':
        body = json.dumps(report_to_dict(report, S), sort_keys=True, indent=2) + '\n'
    elif fmt == 'text':
        body = _text(report, S)
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    return body.encode('utf-8')
