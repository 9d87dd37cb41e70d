from django.apps import AppConfig


class RailRiskAppConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'apps.risk'
    verbose_name = 'Rail break risk'
