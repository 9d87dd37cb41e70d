"""
Custom middleware for request timing and logging
"""
import time
import uuid
import logging
from django.utils.deprecation import MiddlewareMixin

logger = logging.getLogger(__name__)


class RequestTimingMiddleware(MiddlewareMixin):
    """Log method, path, status and duration of every API request"""

    def process_request(self, request):
        request.start_time = time.perf_counter()
        request.request_id = request.headers.get('X-Request-ID') or str(uuid.uuid4())
        return None

    def process_response(self, request, response):
        if hasattr(request, 'start_time'):
            duration = time.perf_counter() - request.start_time
            logger.info(f"{request.method} {request.path} - {response.status_code} - {duration:.3f}s")
            response['X-Request-ID'] = request.request_id
        return response
