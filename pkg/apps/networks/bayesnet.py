"""
Bayesian networks: a validated DAG with one conditional probability table per vertex
"""
import logging
from dataclasses import dataclass
from typing import Dict, List, Mapping, Tuple

from apps.factors.factor import DISTRIBUTION_TOL, Factor, Variable, product, unit_factor
from core.exceptions import CPTError, StructureError
from .dag import Dag

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BayesNet:
    dag: Dag
    cpts: Tuple[Tuple[str, Factor], ...]

    @property
    def cpt_map(self) -> Dict[str, Factor]:
        return dict(self.cpts)

    def cpt(self, vertex: str) -> Factor:
        try:
            return self.cpt_map[vertex]
        except KeyError:
            raise StructureError(f"Unknown vertex {vertex}") from None

    def variable(self, vertex: str) -> Variable:
        return self.cpt(vertex).variable(vertex)

    @property
    def variables(self) -> List[Variable]:
        return [self.variable(v) for v in self.dag.vertices]

    @property
    def factors(self) -> List[Factor]:
        """CPTs in topological order"""
        cpts = self.cpt_map
        return [cpts[v] for v in self.dag.topological_order()]


def build_bn(dag: Dag, cpts: Mapping[str, Factor]) -> BayesNet:
    """Validate CPT scopes and row sums against the DAG and assemble the network"""
    missing = [v for v in dag.vertices if v not in cpts]
    extra = [v for v in cpts if v not in dag.vertices]
    if missing or extra:
        raise StructureError(f"CPTs must cover the vertices exactly; missing {missing}, unexpected {extra}")

    variables: Dict[str, Variable] = {}
    for vertex in dag.vertices:
        cpt = cpts[vertex]
        expected = {vertex, *dag.parents(vertex)}
        if set(cpt.names) != expected:
            raise StructureError(
                f"CPT for {vertex} has scope {sorted(cpt.names)}, expected {sorted(expected)}"
            )
        for variable in cpt.scope:
            if variables.setdefault(variable.name, variable) != variable:
                raise StructureError(f"Variable {variable.name} has inconsistent states across CPTs")
        if not cpt.is_cpt(vertex, DISTRIBUTION_TOL):
            raise CPTError(f"CPT for {vertex} has a parent row that does not sum to 1")

    return BayesNet(dag=dag, cpts=tuple((v, cpts[v]) for v in dag.vertices))


def joint_of(net: BayesNet) -> Factor:
    """Chain-rule product of every CPT, scoped in topological order"""
    joint = unit_factor()
    for f in net.factors:
        joint = product(joint, f)
    return joint.reorder(net.dag.topological_order())
