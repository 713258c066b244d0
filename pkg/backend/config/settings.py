"""
Django settings for the scale-of-sparseness laboratory.

The project has no web surface: it is driven through management commands
(simulate, measure, regress, validate). Process-level knobs come from the
environment or a .env file; per-run numerics live in run config files.
"""

from pathlib import Path
import os
from decouple import config

# Build paths inside the project
BASE_DIR = Path(__file__).resolve().parent.parent

SECRET_KEY = config('SECRET_KEY', default='django-insecure-development-key-change-in-production')

DEBUG = config('DEBUG', default=False, cast=bool)


def _strip_wrapping_quotes(value: str) -> str:
    text = (value or '').strip()
    if len(text) >= 2 and ((text[0] == '"' and text[-1] == '"') or (text[0] == "'" and text[-1] == "'")):
        return text[1:-1].strip()
    return text


ALLOWED_HOSTS = []

# Application definition
INSTALLED_APPS = [
    'django.contrib.contenttypes',
    'rest_framework',
    'sparseness',
]

MIDDLEWARE = []


# Database: run manifests only. DATABASE_URL wins, otherwise DB_* variables, SQLite by default.
import dj_database_url

database_url = _strip_wrapping_quotes(os.environ.get('DATABASE_URL', ''))

_fallback_database = {
    'ENGINE': config('DB_ENGINE', default='django.db.backends.sqlite3'),
    'NAME': config('DB_NAME', default=str(BASE_DIR / 'db.sqlite3')),
    'USER': config('DB_USER', default=''),
    'PASSWORD': config('DB_PASSWORD', default=''),
    'HOST': config('DB_HOST', default=''),
    'PORT': config('DB_PORT', default=''),
}

if database_url:
    try:
        parsed_db_config = dj_database_url.parse(database_url)
    except ValueError:
        parsed_db_config = {}
    # Invalid DATABASE_URL should not break startup; fallback to explicit DB_* vars.
    DATABASES = {'default': parsed_db_config or _fallback_database}
else:
    DATABASES = {'default': _fallback_database}

LANGUAGE_CODE = 'en-us'
TIME_ZONE = 'UTC'
USE_I18N = False
USE_TZ = True

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

REST_FRAMEWORK = {
    'DEFAULT_RENDERER_CLASSES': (
        'rest_framework.renderers.JSONRenderer',
    ),
    'DEFAULT_AUTHENTICATION_CLASSES': [],
    'DEFAULT_PERMISSION_CLASSES': [],
    'UNAUTHENTICATED_USER': None,
}

# Logging: everything under the sparseness package goes to the console.
LOG_LEVEL = config('LOG_LEVEL', default='INFO').upper()

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'plain': {
            'format': '%(asctime)s %(levelname)s %(name)s: %(message)s',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'plain',
        },
    },
    'loggers': {
        'sparseness': {
            'handlers': ['console'],
            'level': LOG_LEVEL,
            'propagate': False,
        },
    },
}

# Laboratory defaults
SPARSENESS_THREADS = config('SPARSENESS_THREADS', default=1, cast=int)
SPARSENESS_OUTPUT_ROOT = Path(config('SPARSENESS_OUTPUT_ROOT', default=str(BASE_DIR / 'runs')))

# Z_alpha check and measurement
SPARSENESS_LAMBDA = config('SPARSENESS_LAMBDA', default=0.5, cast=float)
SPARSENESS_DELTA = config('SPARSENESS_DELTA', default=0.5, cast=float)
SPARSENESS_C0 = config('SPARSENESS_C0', default=2.0, cast=float)

# RIV geometry
SPARSENESS_CONNECTIVITY = config('SPARSENESS_CONNECTIVITY', default=26, cast=int)
SPARSENESS_REFINE_DEPTH = config('SPARSENESS_REFINE_DEPTH', default=3, cast=int)
SPARSENESS_RAY_COUNT = config('SPARSENESS_RAY_COUNT', default=5, cast=int)
SPARSENESS_RAY_SEED = config('SPARSENESS_RAY_SEED', default=20190604, cast=int)
SPARSENESS_BVH_LEAF_SIZE = config('SPARSENESS_BVH_LEAF_SIZE', default=8, cast=int)
