"""
Model files: versioned JSON holding variables, structure, tables and provenance.

Tables are stored row-major over their scope, last variable fastest, so the
break table over (S, T, L, R) alternates r0 and r1 entries.
"""
import json
import logging
from pathlib import Path
from typing import Union

from apps.factors.factor import make_factor
from apps.networks.bayesnet import build_bn
from apps.networks.railbreak import (
    RAIL_DAG, RAIL_VARIABLES, STATE_ALIASES, VARIABLE_LABELS,
    JointRailBreakModel, RailBreakModel, RiskModel,
)
from core.exceptions import ModelFileError, RailRiskError
from railrisk import __version__
from .serializers import SCHEMA_VERSION, ModelFileSerializer

logger = logging.getLogger(__name__)

JOINT_TABLE = 'joint'


def _variables_dict():
    return [
        {
            'name': v.name,
            'label': VARIABLE_LABELS[v.name],
            'states': list(v.states),
            'state_labels': list(STATE_ALIASES[v.name]),
        }
        for v in RAIL_VARIABLES
    ]


def _table(name, factor):
    return {'name': name, 'scope': list(factor.names), 'values': factor.flat()}


def model_to_dict(model: RiskModel) -> dict:
    if isinstance(model, RailBreakModel):
        edges = [list(edge) for edge in RAIL_DAG.edges]
        tables = [_table(v, model.net.cpt(v)) for v in ('S', 'T', 'L')]
        tables.append(_table('R', model.break_cpt))
    elif isinstance(model, JointRailBreakModel):
        edges = []
        tables = [_table(JOINT_TABLE, model.table)]
    else:
        raise ModelFileError(f"Cannot serialize {type(model).__name__}")
    return {
        'schema_version': SCHEMA_VERSION,
        'tool_version': __version__,
        'kind': model.kind,
        'variables': _variables_dict(),
        'structure': {'edges': edges},
        'tables': tables,
        'provenance': model.provenance,
    }


def model_from_dict(data) -> RiskModel:
    serializer = ModelFileSerializer(data=data)
    if not serializer.is_valid():
        raise ModelFileError(f"Invalid model file: {serializer.errors}")
    document = serializer.validated_data

    declared = [(v['name'], tuple(v['states'])) for v in document['variables']]
    expected = [(v.name, v.states) for v in RAIL_VARIABLES]
    if declared != expected:
        raise ModelFileError(f"Model variables {declared} do not match the rail-break variables {expected}")
    by_name = {v.name: v for v in RAIL_VARIABLES}
    tables = {t['name']: t for t in document['tables']}
    edges = {tuple(edge) for edge in document['structure']['edges']}

    try:
        factors = {
            name: make_factor([by_name[n] for n in table['scope']], table['values'])
            for name, table in tables.items()
            if all(n in by_name for n in table['scope'])
        }
        if len(factors) != len(tables):
            raise ModelFileError('A table scope names an unknown variable')

        if document['kind'] == 'factorized':
            if edges != set(RAIL_DAG.edges):
                raise ModelFileError(f"Factorized model needs edges {sorted(RAIL_DAG.edges)}, got {sorted(edges)}")
            if set(factors) != {'S', 'T', 'L', 'R'}:
                raise ModelFileError(f"Factorized model needs tables S, T, L, R, got {sorted(factors)}")
            return RailBreakModel(build_bn(RAIL_DAG, factors), document['provenance'])

        if edges:
            raise ModelFileError('Full-joint model must not declare edges')
        if set(factors) != {JOINT_TABLE}:
            raise ModelFileError(f"Full-joint model needs a single '{JOINT_TABLE}' table, got {sorted(factors)}")
        return JointRailBreakModel(factors[JOINT_TABLE], document['provenance'])
    except ModelFileError:
        raise
    except RailRiskError as e:
        raise ModelFileError(f"Invalid model tables: {e}") from None


def save_model(model: RiskModel, path: Union[str, Path]) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w', encoding='utf-8') as handle:
            json.dump(model_to_dict(model), handle, indent=2)
            handle.write('\n')
    except OSError as e:
        raise ModelFileError(f"Cannot write model file {path}: {e}") from None
    logger.info(f"Saved {model.kind} model to {path}")
    return path


def load_model(path: Union[str, Path]) -> RiskModel:
    """
    Read a model file written by save_model

    Args:
        path: Location of the JSON model file

    Returns:
        RailBreakModel or JointRailBreakModel, depending on the file's kind

    Raises:
        ModelFileError: The file is missing, is not JSON, or fails schema checks
    """
    path = Path(path)
    try:
        with open(path, encoding='utf-8') as handle:
            data = json.load(handle)
    except OSError as e:
        raise ModelFileError(f"Cannot read model file {path}: {e}") from None
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise ModelFileError(f"Model file {path} is not valid JSON: {e}") from None
    model = model_from_dict(data)
    logger.info(f"Loaded {model.kind} model from {path}")
    return model
