import json

import pytest

from nilbench import EXIT_BUDGET, EXIT_INPUT, EXIT_OK, main
from stallings_toolkit import build_family, format_word, tree_basis

M3_FILE = "gallery: M3\n"


@pytest.fixture
def m3_path(tmp_path):
    path = tmp_path / 'm3.sg'
    path.write_text(M3_FILE)
    return str(path)


@pytest.fixture
def b6_basis(tmp_path):
    path = tmp_path / 'b6.txt'
    path.write_text('\n'.join(format_word(w) for w in tree_basis(build_family('B', 6))) + '\n')
    return str(path)


def test_classify_json(m3_path, capsys):
    assert main(['classify', m3_path, '--format', 'json', '--skip', 'mnstar,smncirc']) == EXIT_OK
    data = json.loads(capsys.readouterr().out)
    assert data['verdicts']['MN']['status'] == 'NotMember'
    assert data['verdicts']['MN*']['reason'] == 'skipped'


def test_classify_text_for_two_files(m3_path, tmp_path, capsys):
    other = tmp_path / 'c6.sg'
    other.write_text("gallery: C 6\n")
    assert main(['classify', m3_path, str(other), '--skip', 'jmgnil']) == EXIT_OK
    out = capsys.readouterr().out
    assert f"== {m3_path}" in out
    assert out.count('digest:') == 2


def test_classify_rees_input_adds_fast_path_flags(tmp_path, capsys):
    path = tmp_path / 'rees.sg'
    path.write_text("rees:\ngroup: C 2\nrows: 2\ncols: 2\nsandwich:\n0 -\n- 0\n")
    assert main(['classify', str(path), '--format', 'json']) == EXIT_OK
    data = json.loads(capsys.readouterr().out)
    assert data['consistency']['rees_fast_path_mn']
    assert data['consistency']['rees_fast_path_smn']
    assert data['verdicts']['MN']['status'] == 'Member'


def test_classify_budget_exit(tmp_path, capsys):
    path = tmp_path / 'm1.sg'
    path.write_text("gallery: M1\n")
    assert main(['classify', str(path), '--budget', '10', '--skip', 'jmgnil']) == EXIT_BUDGET
    assert 'Unknown' in capsys.readouterr().out


def test_classify_bad_input(tmp_path, capsys):
    path = tmp_path / 'bad.sg'
    path.write_text("points: 2\ngen x = [3,1]\n")
    assert main(['classify', str(path)]) == EXIT_INPUT
    assert 'SemanticError' in capsys.readouterr().err


def test_classify_missing_file(tmp_path):
    assert main(['classify', str(tmp_path / 'missing.sg')]) == EXIT_INPUT


def test_classify_bad_skip(m3_path, capsys):
    assert main(['classify', m3_path, '--skip', 'everything']) == EXIT_INPUT
    assert 'unknown --skip' in capsys.readouterr().err


def test_green(m3_path, capsys):
    assert main(['green', m3_path]) == EXIT_OK
    out = capsys.readouterr().out
    assert out.startswith('size: 20')
    assert 'r_classes' in out


def test_schutz_dot(m3_path, capsys):
    assert main(['schutz', m3_path, '--dot']) == EXIT_OK
    assert 'digraph' in capsys.readouterr().out


def test_schutz_table(m3_path, capsys):
    assert main(['schutz', m3_path]) == EXIT_OK
    out = capsys.readouterr().out
    assert 'strong plain' in out


def test_stallings_fold(b6_basis, capsys):
    assert main(['stallings', 'fold', b6_basis]) == EXIT_OK
    out = capsys.readouterr().out
    assert out.startswith('base 1')
    assert 'basis:' in out


def test_stallings_closure(b6_basis, capsys):
    assert main(['stallings', 'closure', b6_basis, '-p', '2']) == EXIT_OK
    out = capsys.readouterr().out
    assert 'congruence: {' in out
    assert out.startswith('base 1')


def test_stallings_closure_needs_prime(b6_basis):
    assert main(['stallings', 'closure', b6_basis]) == EXIT_INPUT
    assert main(['stallings', 'closure', b6_basis, '-p', '6']) == EXIT_INPUT


def test_stallings_nilclosure_and_extendible(b6_basis, capsys):
    assert main(['stallings', 'nilclosure', b6_basis]) == EXIT_OK
    out = capsys.readouterr().out
    assert 'congruence: trivial' in out
    assert '(exact)' in out
    assert main(['stallings', 'extendible', b6_basis]) == EXIT_OK
    assert capsys.readouterr().out.strip() == 'Yes'


def test_gallery_list_and_build(capsys):
    assert main(['gallery', 'list']) == EXIT_OK
    assert 'Example18' in capsys.readouterr().out
    assert main(['gallery', 'build', 'N', '3']) == EXIT_OK
    assert capsys.readouterr().out.startswith('points: 4\n')
    assert main(['gallery', 'build']) == EXIT_INPUT
    assert main(['gallery', 'build', 'Nope']) == EXIT_INPUT


def test_oracle(tmp_path, capsys):
    path = tmp_path / 's3.sg'
    path.write_text("gallery: S3\n")
    assert main(['oracle', str(path), '--t-max', '3']) == EXIT_OK
    out = capsys.readouterr().out
    assert "Mal'cev class: inf" in out
    assert 'MN witness:' in out
