from django.apps import AppConfig


class TransquadConfig(AppConfig):
    name = 'transquad'
    verbose_name = 'Transfinite summation and regulated integration'
