"""
Helpers shared by the railrisk management commands.

Exit codes: 0 success, 1 validation failure, 2 usage, I/O, schema or data error.
"""
import json
import logging
from pathlib import Path

from django.core.management.base import CommandError

from apps.synthgen.reference import FIXTURE_PATH
from core.exceptions import RailRiskError
from .modelfile import load_model

logger = logging.getLogger(__name__)

EXIT_VALIDATION = 1
EXIT_USAGE = 2


def usage_error(message) -> CommandError:
    return CommandError(str(message), returncode=EXIT_USAGE)


def validation_error(message) -> CommandError:
    return CommandError(str(message), returncode=EXIT_VALIDATION)


def add_model_argument(parser):
    parser.add_argument(
        '--model',
        default=str(FIXTURE_PATH),
        help='Model file (defaults to the committed reference model)',
    )


def load_model_or_fail(path):
    try:
        return load_model(Path(path))
    except RailRiskError as e:
        raise usage_error(e) from None


def dump_json(payload) -> str:
    return json.dumps(payload, indent=2)
