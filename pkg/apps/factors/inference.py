"""
Exact inference over lists of factors: Bayes' rule, independence checks and
variable elimination
"""
import logging
from typing import Dict, Iterable, List, Optional, Sequence, Set, Union

import numpy as np

from core.exceptions import (
    DegenerateDistributionError, EvidenceError, ImpossibleEvidenceError,
    UnknownVariableError,
)
from .factor import (
    DISTRIBUTION_TOL, Assignment, Factor, Variable, VariableRef, marginalize,
    marginalize_to, normalize, product, reduce, unit_factor, variable_name,
)

logger = logging.getLogger(__name__)


def bayes_posterior(likelihood: Factor, prior: Factor, marginal: Union[Factor, float]) -> Factor:
    """
    p(H|E) = p(E|H) p(H) / p(E)

    `likelihood` holds p(E=e|H) as a factor over H, `prior` holds p(H) and
    `marginal` is the scalar p(E=e), either a float or a scalar factor.
    """
    evidence_probability = marginal.item() if isinstance(marginal, Factor) else float(marginal)
    if not evidence_probability > 0:
        raise DegenerateDistributionError(f"Marginal likelihood must be positive, got {evidence_probability}")
    joint = product(likelihood, prior)
    posterior = Factor._from_array(joint.scope, joint.values / evidence_probability)
    if not posterior.is_distribution():
        logger.warning(
            f"Posterior over {list(posterior.names)} sums to {posterior.total():.12g}; "
            f"the supplied marginal does not match likelihood and prior"
        )
    return posterior


def check_independence(joint: Factor, x: VariableRef, y: VariableRef,
                       given: Optional[VariableRef] = None, tol: float = DISTRIBUTION_TOL) -> bool:
    """
    True iff p(x, y) = p(x) p(y), or p(x, y | z) = p(x|z) p(y|z) when `given` is set,
    holds entrywise within `tol`. Conditionals are only compared where p(z) > 0.
    """
    names = [variable_name(x), variable_name(y)]
    if given is not None:
        names.append(variable_name(given))
    for name in names:
        joint.axis(name)

    table = normalize(marginalize_to(joint, names)).values
    if given is None:
        expected = np.outer(table.sum(axis=1), table.sum(axis=0))
        return bool(np.all(np.abs(table - expected) <= tol))

    for k in range(table.shape[2]):
        slab = table[:, :, k]
        mass = slab.sum()
        if mass <= 0:
            continue
        conditional = slab / mass
        expected = np.outer(conditional.sum(axis=1), conditional.sum(axis=0))
        if not np.all(np.abs(conditional - expected) <= tol):
            return False
    return True


def _scope_variables(factors: Iterable[Factor]) -> Dict[str, Variable]:
    variables = {}
    for f in factors:
        for variable in f.scope:
            variables.setdefault(variable.name, variable)
    return variables


def elimination_order(factors: Sequence[Factor], names: Iterable[VariableRef]) -> List[str]:
    """
    Greedy min-degree order over the interaction graph of `factors`.

    Ties are broken by variable name; eliminating a variable connects its
    remaining neighbours.
    """
    neighbours: Dict[str, Set[str]] = {}
    for f in factors:
        for name in f.names:
            neighbours.setdefault(name, set()).update(n for n in f.names if n != name)

    pending = {variable_name(ref) for ref in names}
    order = []
    while pending:
        chosen = min(pending, key=lambda n: (len(neighbours.get(n, ())), n))
        adjacent = neighbours.pop(chosen, set())
        for a in adjacent:
            neighbours[a].discard(chosen)
            neighbours[a].update(adjacent - {a})
        pending.remove(chosen)
        order.append(chosen)
    return order


def _check_evidence(variables: Dict[str, Variable], evidence: Assignment) -> Dict[str, str]:
    checked = {}
    for ref, state in (evidence or {}).items():
        name = variable_name(ref)
        if name not in variables:
            raise EvidenceError(f"Evidence variable {name} does not appear in any factor")
        variables[name].index(state)
        checked[name] = state
    return checked


def _sum_out(factors: List[Factor], hidden: Iterable[str]) -> List[Factor]:
    pool = list(factors)
    for name in elimination_order(pool, hidden):
        touching = [f for f in pool if f.has(name)]
        pool = [f for f in pool if not f.has(name)]
        combined = touching[0]
        for f in touching[1:]:
            combined = product(combined, f)
        pool.append(marginalize(combined, name))
    return pool


def _product_all(factors: Iterable[Factor]) -> Factor:
    result = unit_factor()
    for f in factors:
        result = product(result, f)
    return result


def evidence_mass(factors: Sequence[Factor], evidence: Assignment) -> float:
    """Total mass of the factor product consistent with the evidence, i.e. p(E)"""
    variables = _scope_variables(factors)
    checked = _check_evidence(variables, evidence)
    reduced = [reduce(f, {n: s for n, s in checked.items() if f.has(n)}) for f in factors]
    hidden = [name for name in variables if name not in checked]
    return _product_all(_sum_out(reduced, hidden)).item()


def eliminate(factors: Sequence[Factor], query: Sequence[VariableRef],
              evidence: Optional[Assignment] = None) -> Factor:
    """
    Posterior over the query variables given the evidence.

    Factors are reduced by the evidence, every other variable is summed out in
    min-degree order and the product of what remains is normalized. The result
    is ordered as `query`.
    """
    variables = _scope_variables(factors)
    checked = _check_evidence(variables, evidence)
    query_names = [variable_name(ref) for ref in query]
    for name in query_names:
        if name not in variables:
            raise UnknownVariableError(f"Query variable {name} does not appear in any factor")
        if name in checked:
            raise EvidenceError(f"Query variable {name} is also fixed by the evidence")

    reduced = [reduce(f, {n: s for n, s in checked.items() if f.has(n)}) for f in factors]
    hidden = [name for name in variables if name not in checked and name not in query_names]
    result = marginalize_to(_product_all(_sum_out(reduced, hidden)), query_names)
    if not result.total() > 0:
        raise ImpossibleEvidenceError(checked)
    return normalize(result)
