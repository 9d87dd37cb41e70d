"""
Discrete factor tables and the basic factor algebra

A factor maps every joint assignment of its scope to a nonnegative real. Tables
are stored row-major over the declared scope order (last variable fastest), so
the flat value list of a factor over (X, Y) is [x0y0, x0y1, x1y0, x1y1].
"""
import logging
from dataclasses import dataclass
from typing import Any, Dict, Iterable, List, Mapping, Sequence, Tuple, Union

import numpy as np

from core.exceptions import (
    ConstructionError, DegenerateDistributionError, EvidenceError,
    ScopeConflictError, UnknownVariableError,
)

logger = logging.getLogger(__name__)

DISTRIBUTION_TOL = 1e-9
IDENTITY_TOL = 1e-12


@dataclass(frozen=True)
class Variable:
    """Categorical random variable with a fixed, ordered state space"""
    name: str
    states: Tuple[str, ...]

    def __post_init__(self):
        if not isinstance(self.name, str) or not self.name:
            raise ConstructionError('Variable name must be a non-empty string')
        states = tuple(self.states)
        object.__setattr__(self, 'states', states)
        if len(states) < 2:
            raise ConstructionError(f"Variable {self.name} needs at least two states, got {len(states)}")
        if len(set(states)) != len(states):
            raise ConstructionError(f"Variable {self.name} has duplicate state labels: {list(states)}")

    @property
    def cardinality(self) -> int:
        return len(self.states)

    def index(self, state: str) -> int:
        """Position of a state label, raising EvidenceError for unknown labels"""
        try:
            return self.states.index(state)
        except ValueError:
            raise EvidenceError(
                f"Unknown state '{state}' for variable {self.name}; legal states: {', '.join(self.states)}"
            ) from None

    def __str__(self):
        return self.name


VariableRef = Union[str, Variable]
Assignment = Mapping[VariableRef, str]


def variable_name(ref: VariableRef) -> str:
    return ref.name if isinstance(ref, Variable) else str(ref)


class Factor:
    """Immutable nonnegative table over an ordered scope of variables"""

    __slots__ = ('_scope', '_values')

    def __init__(self, scope: Sequence[Variable], values: Any):
        scope = tuple(scope)
        for variable in scope:
            if not isinstance(variable, Variable):
                raise ConstructionError(f"Factor scope entries must be Variables, got {variable!r}")
        names = [v.name for v in scope]
        if len(set(names)) != len(names):
            raise ConstructionError(f"Duplicate variable names in scope: {names}")

        shape = tuple(v.cardinality for v in scope)
        expected = int(np.prod(shape, dtype=np.int64))
        try:
            array = np.array(values, dtype=float)
        except (TypeError, ValueError) as e:
            raise ConstructionError(f"Factor values must be real numbers: {e}") from None
        if array.size != expected:
            raise ConstructionError(f"Factor over {names} needs {expected} values, got {array.size}")
        if not np.all(np.isfinite(array)):
            raise ConstructionError(f"Factor over {names} contains NaN or infinite values")
        if np.any(array < 0):
            raise ConstructionError(f"Factor over {names} contains negative values")

        array = array.reshape(shape)
        array.setflags(write=False)
        self._scope = scope
        self._values = array

    @classmethod
    def _from_array(cls, scope: Sequence[Variable], array: np.ndarray) -> 'Factor':
        # Internal constructor for arrays produced by the algebra below.
        factor = cls.__new__(cls)
        array = np.array(array, dtype=float)
        array.setflags(write=False)
        factor._scope = tuple(scope)
        factor._values = array
        return factor

    @property
    def scope(self) -> Tuple[Variable, ...]:
        return self._scope

    @property
    def values(self) -> np.ndarray:
        """Read-only table shaped by the scope cardinalities"""
        return self._values

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(v.name for v in self._scope)

    @property
    def is_scalar(self) -> bool:
        return not self._scope

    def has(self, ref: VariableRef) -> bool:
        return variable_name(ref) in self.names

    def axis(self, ref: VariableRef) -> int:
        name = variable_name(ref)
        try:
            return self.names.index(name)
        except ValueError:
            raise UnknownVariableError(f"Variable {name} is not in scope {list(self.names)}") from None

    def variable(self, ref: VariableRef) -> Variable:
        return self._scope[self.axis(ref)]

    def total(self) -> float:
        return float(self._values.sum())

    def item(self) -> float:
        if not self.is_scalar:
            raise ConstructionError(f"Factor over {list(self.names)} is not a scalar")
        return float(self._values)

    def flat(self) -> List[float]:
        """Values in row-major order over the declared scope"""
        return [float(v) for v in self._values.ravel()]

    def value(self, assignment: Assignment) -> float:
        """Look up the entry for a full assignment of the scope"""
        resolved = resolve_assignment(self._scope, assignment)
        missing = [name for name in self.names if name not in resolved]
        if missing:
            raise EvidenceError(f"Assignment is missing variables {missing}")
        return float(self._values[tuple(resolved[name] for name in self.names)])

    def reorder(self, order: Sequence[VariableRef]) -> 'Factor':
        """Same factor with its scope permuted into the given order"""
        names = [variable_name(ref) for ref in order]
        if sorted(names) != sorted(self.names):
            raise UnknownVariableError(f"Cannot reorder scope {list(self.names)} as {names}")
        if tuple(names) == self.names:
            return self
        axes = [self.axis(name) for name in names]
        return Factor._from_array([self._scope[a] for a in axes], np.transpose(self._values, axes))

    def is_distribution(self, tol: float = DISTRIBUTION_TOL) -> bool:
        return abs(self.total() - 1.0) <= tol

    def is_cpt(self, child: VariableRef, tol: float = DISTRIBUTION_TOL) -> bool:
        """True if the table sums to one over `child` for every parent assignment"""
        sums = self._values.sum(axis=self.axis(child))
        return bool(np.all(np.abs(sums - 1.0) <= tol))

    def allclose(self, other: 'Factor', tol: float = IDENTITY_TOL) -> bool:
        """Entrywise comparison up to scope order"""
        if sorted(self.names) != sorted(other.names):
            return False
        if any(self.variable(v.name) != v for v in other.scope):
            return False
        aligned = other.reorder(self.names)
        return bool(np.all(np.abs(self._values - aligned.values) <= tol))

    def __eq__(self, other):
        if not isinstance(other, Factor):
            return NotImplemented
        return self._scope == other._scope and np.array_equal(self._values, other._values)

    __hash__ = None

    def __repr__(self):
        return f"Factor(scope={list(self.names)}, values={self.flat()})"


def resolve_assignment(scope: Iterable[Variable], assignment: Assignment) -> Dict[str, int]:
    """Map an assignment onto state indices, rejecting unknown variables and states"""
    by_name = {v.name: v for v in scope}
    resolved = {}
    for ref, state in (assignment or {}).items():
        name = variable_name(ref)
        if name not in by_name:
            raise EvidenceError(f"Evidence variable {name} is not in scope {list(by_name)}")
        resolved[name] = by_name[name].index(state)
    return resolved


def make_factor(scope: Sequence[Variable], values: Any) -> Factor:
    return Factor(scope, values)


def scalar_factor(value: float) -> Factor:
    return Factor((), [value])


def unit_factor() -> Factor:
    return scalar_factor(1.0)


def _broadcast(f: Factor, scope: Sequence[Variable]) -> np.ndarray:
    """f's table with its axes laid out along `scope`, size-1 axes elsewhere"""
    target = [v.name for v in scope]
    positions = [target.index(name) for name in f.names]
    order = np.argsort(positions)
    array = np.transpose(f.values, order) if f.names else f.values
    shape = [1] * len(scope)
    for position in positions:
        shape[position] = scope[position].cardinality
    return array.reshape(shape)


def product(f: Factor, g: Factor) -> Factor:
    """Pointwise product over the union of both scopes (f's variables first)"""
    merged = list(f.scope)
    known = {v.name: v for v in f.scope}
    for variable in g.scope:
        existing = known.get(variable.name)
        if existing is None:
            merged.append(variable)
            known[variable.name] = variable
        elif existing != variable:
            raise ScopeConflictError(
                f"Variable {variable.name} has states {list(existing.states)} in one factor "
                f"and {list(variable.states)} in the other"
            )
    values = _broadcast(f, merged) * _broadcast(g, merged)
    return Factor._from_array(merged, values)


def marginalize(f: Factor, out: VariableRef) -> Factor:
    """Sum `out` out of f"""
    axis = f.axis(out)
    scope = f.scope[:axis] + f.scope[axis + 1:]
    return Factor._from_array(scope, f.values.sum(axis=axis))


def marginalize_to(f: Factor, keep: Sequence[VariableRef]) -> Factor:
    """Sum out every variable not in `keep`; the result is ordered as `keep`"""
    keep_names = [variable_name(ref) for ref in keep]
    for name in keep_names:
        f.axis(name)
    drop = tuple(axis for axis, name in enumerate(f.names) if name not in keep_names)
    scope = [v for v in f.scope if v.name in keep_names]
    reduced = Factor._from_array(scope, f.values.sum(axis=drop) if drop else f.values)
    return reduced.reorder(keep_names)


def reduce(f: Factor, evidence: Assignment) -> Factor:
    """Slice of f consistent with the evidence; evidence variables leave the scope"""
    if not evidence:
        return f
    resolved = resolve_assignment(f.scope, evidence)
    index = []
    scope = []
    for variable in f.scope:
        if variable.name in resolved:
            index.append(resolved[variable.name])
        else:
            index.append(slice(None))
            scope.append(variable)
    return Factor._from_array(scope, f.values[tuple(index)])


def normalize(f: Factor) -> Factor:
    total = f.total()
    if not total > 0:
        raise DegenerateDistributionError(f"Factor over {list(f.names)} has zero total mass")
    return Factor._from_array(f.scope, f.values / total)
