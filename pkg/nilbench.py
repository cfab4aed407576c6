import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor

import pandas as pd

from classifier import SKIPPABLE, classify
from config import DEFAULT_T_MAX, load_budgets
from data_manager import format_semigroup, load_input
from errors import (BadParameter, BudgetExceeded, InputError, InternalInconsistency, InvalidDelta,
                    MalformedRees, NilbenchError, NotInverse, NotPrime)
from gallery import build, gallery_listing, parse_gallery_id
from green_structure import egg_box_table, principal_series
from nilpotency_engine import nilpotency_classes, oracle_not_nilpotent, rees_fast_path
from reporting import emit_report, witness_to_dict
from schutzenberger import rclass_nilpotency_predicates, schutz_graphs, to_dot
from stallings_toolkit import (dump_automaton, fold, format_word, is_gnil_extendible,
                               nil_closure, p_closure, parse_basis, tree_basis)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_BUDGET = 2
EXIT_INTERNAL = 3

_INPUT_ERRORS = (InputError, BadParameter, MalformedRees, InvalidDelta, NotPrime, NotInverse, OSError)


def _exit_code(error):
    if isinstance(error, BudgetExceeded):
        return EXIT_BUDGET
    if isinstance(error, InternalInconsistency):
        return EXIT_INTERNAL
    return EXIT_INPUT


def _parse_skip(text):
    if not text:
        return ()
    names = tuple(s.strip() for s in text.split(',') if s.strip())
    unknown = [s for s in names if s not in SKIPPABLE]
    if unknown:
        raise BadParameter(f"unknown --skip entries {unknown}; choose from {sorted(SKIPPABLE)}")
    return names


def _parse_primes(text):
    if text is None or text == 'auto':
        return 'auto'
    try:
        return [int(p) for p in text.split(',')]
    except ValueError:
        raise BadParameter(f"--primes takes 'auto' or a comma separated list, got {text!r}")


def _classify_file(path, fmt, skip, budget, t_max, primes):
    # Runs in worker processes; returns (output text, exit code)
    try:
        budgets = load_budgets(budget)
        loaded = load_input(path)
        S = loaded.semigroup
        report = classify(S, skip=skip, budgets=budgets, t_max=t_max, primes=primes)
        if loaded.rees is not None:
            fast = rees_fast_path(loaded.rees)
            for mode in ('MN', 'SMN'):
                report.consistency[f"rees_fast_path_{mode.lower()}"] = (
                    fast[mode].status == report.verdicts[mode].status)
        body = emit_report(report, fmt, S).decode('utf-8')
        return body, EXIT_BUDGET if report.budget_exceeded else EXIT_OK
    except NilbenchError as e:
        return f"{path}: {type(e).__name__}: {e}\n", _exit_code(e)
    except OSError as e:
        return f"{path}: {e}\n", EXIT_INPUT


def _classify_command(args):
    skip = _parse_skip(args.skip)
    primes = _parse_primes(args.primes)
    jobs = [(path, args.format, skip, args.budget, args.t_max, primes) for path in args.files]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_classify_file, *zip(*jobs)))
    else:
        results = [_classify_file(*job) for job in jobs]
    code = EXIT_OK
    for (body, status), path in zip(results, args.files):
        if len(args.files) > 1 and args.format == 'text':
            print(f"== {path}")
        stream = sys.stdout if status in (EXIT_OK, EXIT_BUDGET) else sys.stderr
        stream.write(body)
        code = max(code, status)
    return code


def _green_command(args):
    S = load_input(args.file).semigroup
    series = principal_series(S)
    print(f"size: {S.size}, principal series length: {len(series)}")
    print(egg_box_table(S).to_string(index=False))
    return EXIT_OK


def _schutz_command(args):
    S = load_input(args.file).semigroup
    graphs = schutz_graphs(S)
    if args.dot:
        for g in graphs:
            print(to_dot(g, S))
        return EXIT_OK
    budgets = load_budgets(args.budget)
    rows = []
    for g in graphs:
        row = {'side': g.side, 'class': g.class_id, 'j_class': g.j_class, 'vertices': g.size,
               'inverse': g.is_inverse, 'base': S.word_string(g.vertices[g.base])}
        for variant in ('plain', 'H'):
            for strong in (False, True):
                key = f"{'strong ' if strong else ''}{variant}"
                try:
                    row[key] = rclass_nilpotency_predicates(g, variant=variant, strong=strong, budgets=budgets)
                except BudgetExceeded:
                    row[key] = None
        rows.append(row)
    print(pd.DataFrame(rows).to_string(index=False))
    return EXIT_OK


def _print_congruence(congruence):
    classes = [c for c in congruence.classes if len(c) > 1]
    if not classes:
        print("congruence: trivial")
        return
    print("congruence: " + ' '.join('{' + ','.join(str(v + 1) for v in c) + '}' for c in classes))


def _stallings_command(args):
    with open(args.basisfile) as handle:
        basis = parse_basis(handle.read())
    aut = fold(basis)
    primes = _parse_primes(args.primes)
    if args.action == 'fold':
        print(dump_automaton(aut))
        print("basis: " + ' '.join(format_word(w) for w in tree_basis(aut)))
    elif args.action == 'closure':
        if args.p is None:
            raise BadParameter("closure needs -p P")
        closure, congruence = p_closure(aut, args.p)
        print(dump_automaton(closure))
        _print_congruence(congruence)
    elif args.action == 'nilclosure':
        result = nil_closure(aut, primes=primes)
        print(dump_automaton(result.automaton))
        _print_congruence(result.congruence)
        print(f"primes: {','.join(map(str, result.primes))} ({'exact' if result.exact else 'up to bound'})")
    else:
        verdict = is_gnil_extendible(aut, primes=primes)
        print(verdict.status)
        if verdict.pair is not None:
            u, v = verdict.pair
            print(f"identified vertices: {u + 1} {v + 1}")
    return EXIT_OK


def _gallery_command(args):
    if args.action == 'list':
        print(gallery_listing(sizes=args.sizes).to_string(index=False))
        return EXIT_OK
    if not args.id:
        raise BadParameter("gallery build needs an id")
    S = build(parse_gallery_id(' '.join(args.id)))
    sys.stdout.write(format_semigroup(S))
    return EXIT_OK


def _oracle_command(args):
    S = load_input(args.file).semigroup
    budgets = load_budgets(args.budget)
    classes = nilpotency_classes(S, t_max=args.t_max, budgets=budgets)
    print(f"Mal'cev class: {classes.mn_class}")
    print(f"strong class (t <= {args.t_max}): {classes.smn_class}")
    for mode in ('MN', 'SMN'):
        witness = oracle_not_nilpotent(S, mode, t_max=args.t_max, budgets=budgets)
        if witness is not None:
            print(f"{mode} witness: {witness_to_dict(witness, S)}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog='nilbench', description="Mal'cev nilpotency classifier for finite semigroups")
    parser.add_argument('-v', '--verbose', action='store_true', help="debug logging")
    subparsers = parser.add_subparsers(dest='command', required=True)

    p = subparsers.add_parser('classify', help="classify semigroup files")
    p.add_argument('files', nargs='+')
    p.add_argument('--format', choices=('text', 'json'), default='text')
    p.add_argument('--skip', default='', help=f"comma separated subset of {','.join(sorted(SKIPPABLE))}")
    p.add_argument('--budget', type=int, default=None, help="overrides NILBENCH_BUDGET")
    p.add_argument('--t-max', type=int, default=DEFAULT_T_MAX)
    p.add_argument('--primes', default='auto', help="'auto' or a comma separated prime list")
    p.add_argument('--jobs', type=int, default=1, help="files classified in parallel")
    p.set_defaults(func=_classify_command)

    p = subparsers.add_parser('green', help="egg-box summary per J-class")
    p.add_argument('file')
    p.set_defaults(func=_green_command)

    p = subparsers.add_parser('schutz', help="Schutzenberger graphs and their predicates")
    p.add_argument('file')
    p.add_argument('--dot', action='store_true')
    p.add_argument('--budget', type=int, default=None)
    p.set_defaults(func=_schutz_command)

    p = subparsers.add_parser('stallings', help="Stallings automata of subgroups of a free group")
    p.add_argument('action', choices=('fold', 'closure', 'nilclosure', 'extendible'))
    p.add_argument('basisfile')
    p.add_argument('-p', type=int, default=None, help="prime for closure")
    p.add_argument('--primes', default='auto')
    p.set_defaults(func=_stallings_command)

    p = subparsers.add_parser('gallery', help="named semigroups")
    p.add_argument('action', choices=('list', 'build'))
    p.add_argument('id', nargs='*')
    p.add_argument('--sizes', action='store_true', help="build every member to list its size")
    p.set_defaults(func=_gallery_command)

    p = subparsers.add_parser('oracle', help="brute-force nilpotency classes")
    p.add_argument('file')
    p.add_argument('--t-max', type=int, default=DEFAULT_T_MAX)
    p.add_argument('--budget', type=int, default=None)
    p.set_defaults(func=_oracle_command)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format='%(levelname)s %(name)s: %(message)s')
    try:
        return int(args.func(args))
    except _INPUT_ERRORS as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except BudgetExceeded as e:
        print(f"budget exceeded: {e}", file=sys.stderr)
        return EXIT_BUDGET
    except InternalInconsistency as e:
        print(f"internal inconsistency: {e}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == '__main__':
    raise SystemExit(main())
