from django.apps import AppConfig


class NetworksConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'apps.networks'
    verbose_name = 'Bayesian networks'
