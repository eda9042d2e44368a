from django.apps import AppConfig


class AlgebraConfig(AppConfig):
    name = 'apps.algebra'
