from django.apps import AppConfig


class SparsenessConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'sparseness'
    verbose_name = 'Scale of sparseness laboratory'
