"""
URL configuration for health checks
"""
from django.urls import path
from . import health_views

urlpatterns = [
    path('', health_views.health_check, name='health_check'),
    path('live', health_views.liveness, name='liveness'),
]
