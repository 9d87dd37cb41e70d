"""
The rail-break network: Season, Time of day and Location are parentless causes
of Rail break, so the joint factorizes as p(R | S, T, L) p(S) p(T) p(L).

p(R=r1) is the probability that one train's exposure in one line section is
linked to a rail break occurring before or under the next loaded train.
"""
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from apps.factors.factor import Factor, Variable, make_factor, normalize
from core.exceptions import (
    DegenerateDistributionError, EvidenceError, StructureError, UndefinedConditionalError,
)
from .bayesnet import BayesNet, build_bn, joint_of
from .dag import Dag

logger = logging.getLogger(__name__)

SEASON = Variable('S', ('s0', 's1', 's2', 's3'))
TIME_OF_DAY = Variable('T', ('t0', 't1'))
LOCATION = Variable('L', ('l0', 'l1', 'l2'))
RAIL_BREAK = Variable('R', ('r0', 'r1'))

RAIL_VARIABLES = (SEASON, TIME_OF_DAY, LOCATION, RAIL_BREAK)
CAUSES = (SEASON, TIME_OF_DAY, LOCATION)
RAIL_DAG = Dag(('S', 'T', 'L', 'R'), (('S', 'R'), ('T', 'R'), ('L', 'R')))

VARIABLE_LABELS = {
    'S': 'Season',
    'T': 'Time of day',
    'L': 'Location',
    'R': 'Rail break',
}

# Human names for every state code, in state order.
STATE_ALIASES = {
    'S': ('early_summer', 'late_summer', 'winter', 'late_winter'),
    'T': ('morning', 'not_morning'),
    'L': ('coastal', 'semi_coastal', 'inland'),
    'R': ('no_break', 'break'),
}

EVIDENCE_KEYS = {
    's': 'S', 'season': 'S',
    't': 'T', 'time': 'T', 'time_of_day': 'T',
    'l': 'L', 'location': 'L', 'section': 'L',
    'r': 'R', 'rail_break': 'R',
}

CELL_COUNT = 4 * 2 * 3 * 2
DEFAULT_ALPHA = 1.0


def _variable(name: str) -> Variable:
    for variable in RAIL_VARIABLES:
        if variable.name == name:
            return variable
    raise EvidenceError(f"Unknown variable {name}; expected one of S, T, L, R")


def resolve_state(name: str, value: str) -> str:
    """Canonical state code for a code or alias, case-insensitive"""
    variable = _variable(name)
    token = str(value).strip().lower().replace('-', '_').replace(' ', '_')
    if token in variable.states:
        return token
    aliases = STATE_ALIASES[name]
    if token in aliases:
        return variable.states[aliases.index(token)]
    legal = ', '.join(f"{code} ({alias})" for code, alias in zip(variable.states, aliases))
    raise EvidenceError(f"Unknown state '{value}' for {VARIABLE_LABELS[name]}; legal states: {legal}")


def state_alias(name: str, code: str) -> str:
    return STATE_ALIASES[name][_variable(name).index(code)]


def resolve_variable(key: str) -> str:
    """Variable name for a code (S, T, L, R) or a long name such as 'season'"""
    name = key if key in VARIABLE_LABELS else EVIDENCE_KEYS.get(str(key).lower())
    if name is None:
        raise EvidenceError(f"Unknown variable '{key}'")
    return name


def resolve_evidence(evidence: Optional[Mapping[str, Any]]) -> Dict[str, str]:
    """Normalize evidence keys and state names; None values mean 'not observed'"""
    resolved = {}
    for key, value in (evidence or {}).items():
        if value is None or value == '':
            continue
        name = resolve_variable(key)
        resolved[name] = resolve_state(name, value)
    return resolved


def describe_evidence(evidence: Mapping[str, str]) -> str:
    if not evidence:
        return 'no evidence'
    return ', '.join(
        f"{VARIABLE_LABELS[name]}={state_alias(name, code)}"
        for name, code in sorted(evidence.items(), key=lambda item: 'STLR'.index(item[0]))
    )


class RiskModel:
    """Common surface of the fitted rail-break models"""

    kind = ''

    def __init__(self, provenance: Optional[Mapping[str, Any]] = None):
        self.provenance = dict(provenance or {})

    @property
    def factors(self) -> List[Factor]:
        raise NotImplementedError

    def joint(self) -> Factor:
        raise NotImplementedError

    @property
    def variables(self) -> Tuple[Variable, ...]:
        return RAIL_VARIABLES


class RailBreakModel(RiskModel):
    """Factorized model backed by a BayesNet over S, T, L and R"""

    kind = 'factorized'

    def __init__(self, net: BayesNet, provenance: Optional[Mapping[str, Any]] = None):
        if net.dag != RAIL_DAG:
            raise StructureError('Rail-break model requires exactly the edges S->R, T->R, L->R')
        for variable in RAIL_VARIABLES:
            if net.variable(variable.name) != variable:
                raise StructureError(f"Variable {variable.name} must have states {list(variable.states)}")
        super().__init__(provenance)
        self.net = net

    @classmethod
    def from_tables(cls, season: Sequence[float], time: Sequence[float], location: Sequence[float],
                    rail_break: Sequence[float], provenance: Optional[Mapping[str, Any]] = None):
        """Build from the three priors and the 48 p(R|S,T,L) values in S, T, L, R row-major order"""
        cpts = {
            'S': make_factor([SEASON], season),
            'T': make_factor([TIME_OF_DAY], time),
            'L': make_factor([LOCATION], location),
            'R': make_factor([SEASON, TIME_OF_DAY, LOCATION, RAIL_BREAK], rail_break),
        }
        return cls(build_bn(RAIL_DAG, cpts), provenance)

    def prior(self, name: str) -> Factor:
        if name not in ('S', 'T', 'L'):
            raise EvidenceError(f"{name} has no prior; expected S, T or L")
        return self.net.cpt(name)

    @property
    def break_cpt(self) -> Factor:
        """p(R | S, T, L) scoped (S, T, L, R)"""
        return self.net.cpt('R').reorder(['S', 'T', 'L', 'R'])

    def break_risk(self) -> np.ndarray:
        """p(R=r1 | s, t, l) as a 4x2x3 array"""
        return self.break_cpt.values[..., 1]

    @property
    def factors(self) -> List[Factor]:
        return self.net.factors

    def joint(self) -> Factor:
        return joint_of(self.net).reorder(['S', 'T', 'L', 'R'])

    def __eq__(self, other):
        if not isinstance(other, RailBreakModel):
            return NotImplemented
        return (
            all(self.net.cpt(v) == other.net.cpt(v) for v in RAIL_DAG.vertices)
            and self.provenance == other.provenance
        )

    __hash__ = None

    def __repr__(self):
        return f"RailBreakModel(provenance={self.provenance})"


class JointRailBreakModel(RiskModel):
    """Full-joint model: one normalized 48-cell table over S, T, L, R"""

    kind = 'full_joint'

    def __init__(self, table: Factor, provenance: Optional[Mapping[str, Any]] = None):
        if sorted(table.names) != sorted(v.name for v in RAIL_VARIABLES):
            raise StructureError(f"Full-joint table must be over S, T, L, R, got {list(table.names)}")
        for variable in RAIL_VARIABLES:
            if table.variable(variable.name) != variable:
                raise StructureError(f"Variable {variable.name} must have states {list(variable.states)}")
        if not table.is_distribution():
            raise StructureError(f"Full-joint table sums to {table.total():.12g}, expected 1")
        super().__init__(provenance)
        self.table = table.reorder(['S', 'T', 'L', 'R'])

    @property
    def factors(self) -> List[Factor]:
        return [self.table]

    def joint(self) -> Factor:
        return self.table

    def __eq__(self, other):
        if not isinstance(other, JointRailBreakModel):
            return NotImplemented
        return self.table == other.table and self.provenance == other.provenance

    __hash__ = None

    def __repr__(self):
        return f"JointRailBreakModel(provenance={self.provenance})"


@dataclass(frozen=True)
class CountTable:
    """Integer exposure counts over (S, T, L, R), shape 4x2x3x2"""
    counts: np.ndarray = field(repr=False)

    SHAPE = (4, 2, 3, 2)

    def __post_init__(self):
        array = np.asarray(self.counts)
        if array.size != CELL_COUNT:
            raise StructureError(f"Count table needs {CELL_COUNT} cells, got {array.size}")
        if not np.issubdtype(array.dtype, np.integer):
            if not np.all(np.isfinite(array)) or not np.array_equal(array, np.round(array)):
                raise StructureError('Count table entries must be integers')
        array = array.astype(np.int64).reshape(self.SHAPE)
        if np.any(array < 0):
            raise StructureError('Count table entries must be nonnegative')
        array.setflags(write=False)
        object.__setattr__(self, 'counts', array)

    @classmethod
    def zeros(cls) -> 'CountTable':
        return cls(np.zeros(cls.SHAPE, dtype=np.int64))

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def exposures(self) -> np.ndarray:
        """Exposures per (S, T, L) cell"""
        return self.counts.sum(axis=3)

    @property
    def breaks(self) -> np.ndarray:
        return self.counts[..., 1]

    def count(self, season: str, time: str, location: str, rail_break: str) -> int:
        index = (SEASON.index(season), TIME_OF_DAY.index(time), LOCATION.index(location), RAIL_BREAK.index(rail_break))
        return int(self.counts[index])

    def flat(self) -> List[int]:
        return [int(c) for c in self.counts.ravel()]

    def __eq__(self, other):
        if not isinstance(other, CountTable):
            return NotImplemented
        return np.array_equal(self.counts, other.counts)

    __hash__ = None


def _check_alpha(alpha: float):
    if not np.isfinite(alpha) or alpha < 0:
        raise StructureError(f"Smoothing alpha must be a finite number >= 0, got {alpha}")


def fit_full_joint(counts: CountTable, alpha: float = DEFAULT_ALPHA) -> Factor:
    """Joint over (S, T, L, R) as (count + alpha) / (total + 48 alpha)"""
    _check_alpha(alpha)
    smoothed = counts.counts.astype(float) + alpha
    if not smoothed.sum() > 0:
        raise DegenerateDistributionError('Count table is empty and alpha is 0')
    joint = normalize(make_factor(RAIL_VARIABLES, smoothed))
    logger.info(f"Fitted full joint from {counts.total} exposures with alpha={alpha}")
    return joint


def fit_factorized(counts: CountTable, alpha: float = DEFAULT_ALPHA,
                   provenance: Optional[Mapping[str, Any]] = None) -> RailBreakModel:
    """
    Estimate p(S), p(T), p(L) from marginal exposure counts and p(R | S, T, L)
    from the per-cell break fraction (breaks + alpha) / (exposures + 2 alpha)

    Args:
        counts: (S, T, L, R) count table
        alpha: Additive smoothing; 0 gives maximum likelihood
        provenance: Metadata stored with the model

    Returns:
        RailBreakModel over the fixed rail DAG

    Raises:
        UndefinedConditionalError: alpha is 0 and a cell has no exposures
    """
    _check_alpha(alpha)
    total = counts.total
    if total <= 0:
        raise DegenerateDistributionError('Count table is empty')

    exposures = counts.exposures.astype(float)
    season = exposures.sum(axis=(1, 2)) / total
    time = exposures.sum(axis=(0, 2)) / total
    location = exposures.sum(axis=(0, 1)) / total

    denominator = exposures + 2 * alpha
    empty = np.argwhere(denominator <= 0)
    if len(empty):
        s, t, l = (int(i) for i in empty[0])
        cell = (SEASON.states[s], TIME_OF_DAY.states[t], LOCATION.states[l])
        raise UndefinedConditionalError(
            f"No exposures in cell S={cell[0]}, T={cell[1]}, L={cell[2]} and alpha is 0", cell=cell
        )
    risk = (counts.breaks + alpha) / denominator
    rail_break = np.stack([1.0 - risk, risk], axis=-1)

    model = RailBreakModel.from_tables(season, time, location, rail_break, provenance)
    logger.info(f"Fitted factorized model from {total} exposures with alpha={alpha}")
    return model
