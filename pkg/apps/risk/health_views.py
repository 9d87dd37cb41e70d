"""
Health check views
"""
import time

from rest_framework.decorators import api_view, permission_classes
from rest_framework.permissions import AllowAny
from rest_framework.response import Response

from core.exceptions import RailRiskError
from .views import served_model


@api_view(['GET'])
@permission_classes([AllowAny])
def health_check(request):
    """Healthy when the served model file loads"""
    try:
        model = served_model()
        return Response({
            'status': 'healthy',
            'model': model.kind,
            'timestamp': time.time()
        }, status=200)
    except RailRiskError as e:
        return Response({
            'status': 'unhealthy',
            'error': str(e),
            'timestamp': time.time()
        }, status=500)


@api_view(['GET'])
@permission_classes([AllowAny])
def liveness(request):
    return Response({
        'status': 'alive',
        'timestamp': time.time()
    }, status=200)
