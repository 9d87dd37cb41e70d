"""
URL configuration for risk queries
"""
from django.urls import path
from . import views

urlpatterns = [
    path('query', views.query, name='risk_query'),
    path('trip', views.trip, name='risk_trip'),
    path('report', views.report, name='risk_report'),
]
