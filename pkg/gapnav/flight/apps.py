from django.apps import AppConfig


class FlightConfig(AppConfig):
    name = 'flight'
    verbose_name = 'Gap traversal flight stack'
