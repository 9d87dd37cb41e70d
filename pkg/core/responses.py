"""
Response envelope used by every API view
"""
import uuid
from rest_framework import status
from rest_framework.response import Response
from django.utils import timezone


def envelope(data=None, message='', success=True, http_status=status.HTTP_200_OK, request=None):
    """
    Wrap a payload in the standard success/data/message envelope.

    The request id is the one RequestTimingMiddleware put on the request, so the
    body matches the X-Request-ID header. A fresh id is used when there is none.
    """
    request_id = getattr(request, 'request_id', None) or str(uuid.uuid4())
    return Response({
        'success': success,
        'data': data,
        'message': message,
        'request_id': request_id,
        'timestamp': timezone.now().isoformat()
    }, status=http_status)


def error_envelope(message, http_status=status.HTTP_400_BAD_REQUEST, request=None):
    return envelope(data=None, message=message, success=False, http_status=http_status, request=request)
