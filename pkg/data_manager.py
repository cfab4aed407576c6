import logging
import re
from dataclasses import dataclass

import numpy as np

from errors import ParseError, SemanticError
from gallery import build, build_rees, group_table, parse_gallery_id
from green_structure import NO_ENTRY, ReesDescription
from lm_representation import format_orbits, parse_orbits
from semigroup_core import THETA, PartialMap, adjoin_identity, close_generators

logger = logging.getLogger(__name__)

# Semigroup file keys
POINTS_KEY = 'points'
GALLERY_KEY = 'gallery'
REES_KEY = 'rees'
ADJOIN_KEY = 'adjoin-identity'

_GEN_LINE = re.compile(r'^gen\s+(\S+)\s*=\s*(.*)$')
_KEY_LINE = re.compile(r'^([a-z-]+)\s*:\s*(.*)$')
_NAME = re.compile(r"^[A-Za-z0-9_']+$")


@dataclass(frozen=True, eq=False)
class LoadedInput:
    semigroup: object
    source: str
    rees: ReesDescription = None


def _lines(text):
    # Only whole-line comments; '#' inside orbits means theta
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line and not line.startswith('#'):
            yield number, line


def parse_image_list(text, degree, line=None, column=1):
    """[2,3,#,1] with 1-based images and '#' for theta"""
    body = text.strip()
    if not (body.startswith('[') and body.endswith(']')):
        raise ParseError("image list must be bracketed", line, column)
    items = [item.strip() for item in body[1:-1].split(',')]
    if len(items) != degree:
        raise SemanticError(f"line {line}: image list has {len(items)} entries, expected {degree}")
    images = []
    for k, item in enumerate(items):
        if item == '#':
            images.append(THETA)
            continue
        try:
            value = int(item)
        except ValueError:
            raise ParseError(f"bad image {item!r}", line, column + k)
        if not 1 <= value <= degree:
            raise SemanticError(f"line {line}: image {value} out of range 1..{degree}")
        images.append(value - 1)
    return PartialMap(tuple(images))


def _parse_group(spec, line):
    parts = spec.split()
    if not parts or parts[0] == 'trivial':
        return np.zeros((1, 1), dtype=np.int64)
    try:
        return group_table(parts[0], *(int(p) for p in parts[1:]))
    except ValueError:
        raise ParseError(f"bad group {spec!r}", line)


def _parse_rees(lines):
    # lines: (number, text) after the 'rees:' header
    fields = {}
    sandwich = []
    in_sandwich = False
    for number, line in lines:
        if in_sandwich:
            row = []
            for column, item in enumerate(line.split(), start=1):
                if item in ('-', '.'):
                    row.append(NO_ENTRY)
                else:
                    try:
                        row.append(int(item))
                    except ValueError:
                        raise ParseError(f"bad sandwich entry {item!r}", number, column)
            sandwich.append(row)
            continue
        match = _KEY_LINE.match(line)
        if not match:
            raise ParseError(f"expected 'key: value' in rees block, got {line!r}", number)
        key, value = match.groups()
        if key == 'sandwich':
            in_sandwich = True
        elif key in ('group', 'rows', 'cols'):
            fields[key] = (value, number)
        else:
            raise ParseError(f"unknown rees key {key!r}", number)
    for key in ('rows', 'cols'):
        if key not in fields:
            raise ParseError(f"rees block needs '{key}:'")
    try:
        rows, cols = int(fields['rows'][0]), int(fields['cols'][0])
    except ValueError:
        raise ParseError("rows and cols must be integers", fields['rows'][1])
    group_spec, group_line = fields.get('group', ('trivial', None))
    G = _parse_group(group_spec, group_line)
    if len(sandwich) != cols or any(len(r) != rows for r in sandwich):
        raise SemanticError(f"sandwich must have {cols} lines of {rows} entries")
    return ReesDescription(group_table=G, rows=rows, cols=cols, sandwich=np.array(sandwich, dtype=np.int64))


def parse_input(text):
    """Parse a semigroup file.

    The file either lists 'points: n' followed by 'gen <name> = <orbits or
    image list>' lines (and optionally 'adjoin-identity: true'), or holds a
    single 'gallery: <id> <params>' line, or a 'rees:' block with group,
    rows, cols and sandwich.

    Returns:
        LoadedInput
    """
    lines = list(_lines(text))
    if not lines:
        raise ParseError("empty input")
    degree = None
    gens, names = [], []
    adjoin = False
    for index, (number, line) in enumerate(lines):
        match = _GEN_LINE.match(line)
        if match:
            if degree is None:
                raise ParseError("'points:' must come before the generators", number)
            name, body = match.groups()
            if not _NAME.match(name):
                raise ParseError(f"bad generator name {name!r}", number, 5)
            if name in names:
                raise SemanticError(f"line {number}: duplicate generator name {name!r}")
            column = line.index('=') + 2
            if body.strip().startswith('['):
                gens.append(parse_image_list(body, degree, number, column))
            else:
                gens.append(parse_orbits(body, degree, number))
            names.append(name)
            continue
        match = _KEY_LINE.match(line)
        if not match:
            raise ParseError(f"cannot read {line!r}", number, 1)
        key, value = match.groups()
        if key == GALLERY_KEY:
            gid = parse_gallery_id(value, number)
            return LoadedInput(semigroup=build(gid), source=f"gallery {gid}")
        if key == REES_KEY:
            desc = _parse_rees(lines[index + 1:])
            return LoadedInput(semigroup=build_rees(desc), source='rees', rees=desc)
        if key == POINTS_KEY:
            try:
                degree = int(value)
            except ValueError:
                raise ParseError(f"points must be an integer, got {value!r}", number, len(key) + 3)
            if degree < 1:
                raise SemanticError(f"line {number}: points must be positive")
        elif key == ADJOIN_KEY:
            adjoin = value.strip().lower() in ('true', 'yes', '1')
        else:
            raise ParseError(f"unknown key {key!r}", number, 1)
    if not gens:
        raise SemanticError("no generators given")
    S = close_generators(gens, names=names)
    if adjoin:
        S = adjoin_identity(S)
    return LoadedInput(semigroup=S, source='generators')


def load_input(path):
    """Read and parse a semigroup file"""
    with open(path) as handle:
        text = handle.read()
    loaded = parse_input(text)
    logger.info("loaded %s from %s: %d elements", loaded.source, path, loaded.semigroup.size)
    return loaded


def format_semigroup(S):
    """Semigroup file text for a partial-transformation semigroup"""
    if S.degree is None:
        raise SemanticError("only partial-transformation semigroups have a file form")
    lines = [f"{POINTS_KEY}: {S.degree}"]
    for name, g in zip(S.generator_names, S.generators):
        lines.append(f"gen {name} = {format_orbits(S.elements[g])}")
    if S.has_adjoined_identity:
        lines.append(f"{ADJOIN_KEY}: true")
    return '\n'.join(lines) + '\n'
