from django.apps import AppConfig


class FaultsimConfig(AppConfig):
    name = 'faultsim'
    verbose_name = 'TMR fault-injection simulator'
