"""
Views for rail-break risk queries
"""
import logging
from functools import lru_cache

from django.conf import settings
from rest_framework import status
from rest_framework.decorators import api_view, permission_classes
from rest_framework.permissions import AllowAny

from apps.networks.railbreak import describe_evidence
from apps.networks.risk import Leg, query_risk, trip_risk
from core.exceptions import ModelFileError, RailRiskError
from core.responses import envelope, error_envelope
from .modelfile import load_model
from .serializers import RiskQuerySerializer, TripSerializer
from .services import RiskReportService

logger = logging.getLogger(__name__)


@lru_cache(maxsize=4)
def _load_cached(path):
    return load_model(path)


def served_model():
    """The model configured by RAILRISK_MODEL_PATH, loaded once per path"""
    return _load_cached(str(settings.RAILRISK_MODEL_PATH))


def _first_error(errors):
    if isinstance(errors, dict):
        for key, value in errors.items():
            message = _first_error(value)
            return message if key == 'non_field_errors' else f"{key}: {message}"
    if isinstance(errors, list) and errors:
        return _first_error(errors[0])
    return str(errors)


@api_view(['GET'])
@permission_classes([AllowAny])
def query(request):
    """p(R=r1 | evidence) for optional season, time and location parameters"""
    serializer = RiskQuerySerializer(data=request.query_params)
    if not serializer.is_valid():
        return error_envelope(_first_error(serializer.errors), request=request)
    evidence = serializer.validated_data['evidence']
    try:
        model = served_model()
        risk = query_risk(model, evidence)
    except ModelFileError as e:
        logger.error(f"Served model unavailable: {e}")
        return error_envelope(str(e), http_status=status.HTTP_500_INTERNAL_SERVER_ERROR, request=request)
    except RailRiskError as e:
        return error_envelope(str(e), request=request)

    return envelope({
        'evidence': evidence,
        'description': describe_evidence(evidence),
        'risk': risk,
        'kind': model.kind,
    }, message='Risk computed successfully', request=request)


@api_view(['POST'])
@permission_classes([AllowAny])
def trip(request):
    """Additive trip risk over legs of distinct sections"""
    serializer = TripSerializer(data=request.data)
    if not serializer.is_valid():
        return error_envelope(_first_error(serializer.errors), request=request)
    data = serializer.validated_data
    try:
        model = served_model()
        legs = [Leg(leg['section'], leg.get('time'), leg.get('season')) for leg in data['legs']]
        risk = trip_risk(model, legs, complement=data['complement'])
    except ModelFileError as e:
        logger.error(f"Served model unavailable: {e}")
        return error_envelope(str(e), http_status=status.HTTP_500_INTERNAL_SERVER_ERROR, request=request)
    except RailRiskError as e:
        return error_envelope(str(e), request=request)

    return envelope({
        'legs': [{'section': leg.section, 'time': leg.time, 'season': leg.season} for leg in legs],
        'complement': data['complement'],
        'risk': risk,
    }, message='Trip risk computed successfully', request=request)


@api_view(['GET'])
@permission_classes([AllowAny])
def report(request):
    """Scenario grid, summary rows and anchor table of the served model"""
    try:
        data = RiskReportService.build_report(served_model())
    except ModelFileError as e:
        logger.error(f"Served model unavailable: {e}")
        return error_envelope(str(e), http_status=status.HTTP_500_INTERNAL_SERVER_ERROR, request=request)
    except RailRiskError as e:
        return error_envelope(str(e), request=request)
    return envelope(data, message='Report generated successfully', request=request)
