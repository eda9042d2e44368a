from django.apps import AppConfig


class SplittingConfig(AppConfig):
    name = 'apps.splitting'
