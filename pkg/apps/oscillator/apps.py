from django.apps import AppConfig


class OscillatorConfig(AppConfig):
    name = 'apps.oscillator'
