"""
Django settings for the whtoolkit project.

The project hosts the ``whx`` application: Wiener-Hopf and Riemann-Hilbert
factorization routines driven through management commands. There is no web
surface and no database; settings cover templates, logging and the numerical
tolerances.
"""

from pathlib import Path
from decouple import config

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent


# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = config('SECRET_KEY', default='django-insecure-whx-batch-only')

DEBUG = config('DEBUG', default=False, cast=bool)

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    'whx',
]

TEMPLATES = [
    {
        'BACKEND': 'django.template.backends.django.DjangoTemplates',
        'DIRS': [],
        'APP_DIRS': True,
        'OPTIONS': {
            'context_processors': [],
        },
    },
]


# Batch tool: nothing is persisted in a database.
DATABASES = {}


# Internationalization

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = False

USE_TZ = True


# Logging

WHX_LOG_LEVEL = config('WHX_LOG_LEVEL', default='WARNING')

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{levelname} {asctime} {name} {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'verbose',
        },
    },
    'loggers': {
        'whx': {
            'handlers': ['console'],
            'level': WHX_LOG_LEVEL,
            'propagate': False,
        },
    },
}


# Numerical configuration
# Grid sizes are powers of two; WHX_GRID_CAP bounds automatic refinement.

WHX_GRID_CAP = config('WHX_GRID_CAP', default=65536, cast=int)

WHX_TOLERANCES = {
    'singularity': config('WHX_SINGULARITY_TOL', default=1e-10, cast=float),
    'residual': config('WHX_RESIDUAL_TOL', default=1e-8, cast=float),
    'rank': config('WHX_RANK_TOL', default=1e-9, cast=float),
    'root': config('WHX_ROOT_TOL', default=1e-9, cast=float),
    'real_axis': config('WHX_REAL_AXIS_TOL', default=1e-8, cast=float),
    'tail': config('WHX_TAIL_TOL', default=1e-10, cast=float),
    'grid': config('WHX_DEFAULT_GRID', default=256, cast=int),
    'max_condition': config('WHX_MAX_CONDITION', default=1e12, cast=float),
}
