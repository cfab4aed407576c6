import os
from dataclasses import dataclass

from errors import BadParameter

# Element budget for closures
DEFAULT_ELEMENT_CAP = 200_000

# Exhaustive associativity check up to this many elements
ASSOCIATIVITY_EXHAUSTIVE_CAP = 512

# Tuple graph nodes for the brute-force oracle
ORACLE_NODE_BUDGET = 5_000_000

# Evaluations for exhaustive pseudoidentity checks
PSEUDOIDENTITY_EVAL_BUDGET = 10 ** 8

# States in the synchronous product of a Schutzenberger graph
PRODUCT_STATE_BUDGET = 2_000_000

# Primes up to this floor are always tried by the nil-closure
PRIME_FLOOR = 7

DEFAULT_T_MAX = 4

BUDGET_ENV_VAR = 'NILBENCH_BUDGET'


@dataclass(frozen=True)
class Budgets:
    oracle_nodes: int = ORACLE_NODE_BUDGET
    evaluations: int = PSEUDOIDENTITY_EVAL_BUDGET
    element_cap: int = DEFAULT_ELEMENT_CAP
    prime_floor: int = PRIME_FLOOR


def load_budgets(override=None):
    """Build run budgets from defaults, the environment and an explicit override.

    Args:
        override: value of --budget, wins over NILBENCH_BUDGET when given

    Returns:
        Budgets
    """
    raw = override if override is not None else os.environ.get(BUDGET_ENV_VAR)
    if raw is None or raw == '':
        return Budgets()
    try:
        value = int(raw)
    except (TypeError, ValueError):
        raise BadParameter(f"budget must be a positive integer, got {raw!r}")
    if value <= 0:
        raise BadParameter(f"budget must be a positive integer, got {value}")
    return Budgets(oracle_nodes=value, evaluations=value)
