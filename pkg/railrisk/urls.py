"""
URL configuration for railrisk project.
"""
from django.urls import path, include
from drf_spectacular.views import SpectacularAPIView, SpectacularSwaggerView

urlpatterns = [
    # API Documentation
    path('api/schema/', SpectacularAPIView.as_view(), name='schema'),
    path('api/docs/', SpectacularSwaggerView.as_view(url_name='schema'), name='swagger-ui'),

    # API v1 routes
    path('api/v1/risk/', include('apps.risk.urls')),

    # Health check endpoints
    path('health/', include('apps.risk.health_urls')),
]
