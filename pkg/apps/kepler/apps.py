from django.apps import AppConfig


class KeplerConfig(AppConfig):
    name = 'apps.kepler'
