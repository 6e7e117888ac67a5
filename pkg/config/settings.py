"""
Django settings for the transquad project.

Solver defaults are read from the environment (or a .env file) through
python-decouple and picked up by transquad.services.config.SolverConfig.
"""

from pathlib import Path
from decouple import config

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

SECRET_KEY = config('SECRET_KEY', default='transquad-local-only-key')

DEBUG = config('DEBUG', default=False, cast=bool)

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    'transquad',
]

# Nothing is persisted; reports go to files named on the command line.
DATABASES = {}

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = False

USE_TZ = True


# Solver configuration

TRANSQUAD_THREADS = config('TRANSQUAD_THREADS', default=4, cast=int)
TRANSQUAD_DEPTH = config('TRANSQUAD_DEPTH', default=3, cast=int)
TRANSQUAD_PREFIX_LENGTH = config('TRANSQUAD_PREFIX_LENGTH', default=64, cast=int)
TRANSQUAD_CAUCHY_WINDOW = config('TRANSQUAD_CAUCHY_WINDOW', default=8, cast=int)
TRANSQUAD_LAYER_BUDGET = config('TRANSQUAD_LAYER_BUDGET', default=10_000, cast=int)
TRANSQUAD_BLOWUP = config('TRANSQUAD_BLOWUP', default=1e12, cast=float)
TRANSQUAD_OSC_SAMPLES = config('TRANSQUAD_OSC_SAMPLES', default=128, cast=int)
TRANSQUAD_OSC_ROUNDS = config('TRANSQUAD_OSC_ROUNDS', default=3, cast=int)
TRANSQUAD_EPSILON0 = config('TRANSQUAD_EPSILON0', default=1.0, cast=float)
TRANSQUAD_GRID_PER_UNIT = config('TRANSQUAD_GRID_PER_UNIT', default=512, cast=int)
TRANSQUAD_BLOCK_BUDGET = config('TRANSQUAD_BLOCK_BUDGET', default=64, cast=int)
TRANSQUAD_CELL_BUDGET = config('TRANSQUAD_CELL_BUDGET', default=500_000, cast=int)
TRANSQUAD_SERIES_TERMS = config('TRANSQUAD_SERIES_TERMS', default=512, cast=int)
TRANSQUAD_SEED = config('TRANSQUAD_SEED', default=0, cast=int)
TRANSQUAD_LOG_LEVEL = config('TRANSQUAD_LOG_LEVEL', default='INFO')


LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'plain': {
            'format': '{levelname} {name}: {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'plain',
        },
    },
    'loggers': {
        'transquad': {
            'handlers': ['console'],
            'level': TRANSQUAD_LOG_LEVEL,
            'propagate': False,
        },
    },
}
