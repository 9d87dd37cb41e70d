from django.apps import AppConfig


class FactorsConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'apps.factors'
    verbose_name = 'Factor algebra'
