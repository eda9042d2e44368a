"""
Django settings for the symplectic_lab project.

Every numeric protocol constant of the laboratory (precision, ladders,
tolerances, Kepler step counts) is read through python-decouple so a run can
be tuned from the environment or a .env file without touching code.
"""

from pathlib import Path
from decouple import Csv, config

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

SECRET_KEY = config('DJANGO_SECRET_KEY', default='symplectic-lab-offline-key-not-used-for-signing')

DEBUG = config('DEBUG', default=False, cast=bool)

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    'rest_framework',
    'apps.common',
    'apps.splitting',
    'apps.algebra',
    'apps.oscillator',
    'apps.brackets',
    'apps.kepler',
    'apps.sweeps',
]

# The laboratory persists nothing; management commands run without a database.
DATABASES = {}

LANGUAGE_CODE = 'en-us'

TIME_ZONE = config('TIME_ZONE', default='UTC')

USE_I18N = False
USE_TZ = True


# Extended-precision series extraction (oscillator lab)
LAB_PRECISION_DIGITS = config('LAB_PRECISION_DIGITS', default=60, cast=int)
FREQUENCY_LADDER_EPS0 = config('FREQUENCY_LADDER_EPS0', default=1e-2, cast=float)
LADDER_RATIO = config('LADDER_RATIO', default=0.5, cast=float)
LADDER_DEPTH = config('LADDER_DEPTH', default=8, cast=int)
ENERGY_LADDER_BASE_STEPS = config('ENERGY_LADDER_BASE_STEPS', default=32, cast=int)
SERIES_TOLERANCE = config('SERIES_TOLERANCE', default=1e-6, cast=float)
SERIES_ZERO_TOLERANCE = config('SERIES_ZERO_TOLERANCE', default=1e-20, cast=float)

# Coefficient algebra and scans
COEFFICIENT_EQUALITY_TOLERANCE = config('COEFFICIENT_EQUALITY_TOLERANCE', default=1e-12, cast=float)
POLE_DENOMINATOR_TOLERANCE = config('POLE_DENOMINATOR_TOLERANCE', default=1e-9, cast=float)
POLE_MEDIAN_FACTOR = config('POLE_MEDIAN_FACTOR', default=1e3, cast=float)
GOLDEN_SECTION_TOLERANCE = config('GOLDEN_SECTION_TOLERANCE', default=1e-12, cast=float)
KEPLER_OPTIMIZE_TOLERANCE = config('KEPLER_OPTIMIZE_TOLERANCE', default=1e-5, cast=float)
KEPLER_UNIFORM_ECCENTRICITIES = config(
    'KEPLER_UNIFORM_ECCENTRICITIES', default='0.95', cast=Csv(cast=float)
)

# Kepler protocol
KEPLER_STEPS = config('KEPLER_STEPS', default=5000, cast=int)
KEPLER_CHECK_STEPS = config('KEPLER_CHECK_STEPS', default=3000, cast=int)
KEPLER_SAMPLE_EVERY = config('KEPLER_SAMPLE_EVERY', default=10, cast=int)
KEPLER_CONVERGENCE_TOLERANCE = config('KEPLER_CONVERGENCE_TOLERANCE', default=0.02, cast=float)

# Workers for grid scans and eccentricity sweeps
LAB_THREADS = config('LAB_THREADS', default=1, cast=int)

# Memoization of expensive, deterministic results
SERIES_CACHE_TIMEOUT = config('SERIES_CACHE_TIMEOUT', default=3600, cast=int)

CACHES = {
    'default': {
        'BACKEND': 'django.core.cache.backends.locmem.LocMemCache',
        'LOCATION': 'symplectic-lab',
        'OPTIONS': {
            'MAX_ENTRIES': config('CACHE_MAX_ENTRIES', default=5000, cast=int),
        },
    }
}


# Logging configuration
LOG_LEVEL = config('LOG_LEVEL', default='INFO')
LOG_DIR = config('LOG_DIR', default='logs')

# Create logs directory if it doesn't exist
LOGS_PATH = BASE_DIR / LOG_DIR
try:
    LOGS_PATH.mkdir(exist_ok=True)
    # Test write permissions
    test_file = LOGS_PATH / '.test_write'
    test_file.touch()
    test_file.unlink()
    LOGS_WRITABLE = True
except (OSError, PermissionError):
    LOGS_WRITABLE = False

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'detailed': {
            'format': '[{asctime}] {levelname} {name} {message}',
            'style': '{',
            'datefmt': '%Y-%m-%d %H:%M:%S'
        },
        'simple': {
            'format': '[{asctime}] {levelname} {message}',
            'style': '{',
            'datefmt': '%Y-%m-%d %H:%M:%S'
        },
    },
    'handlers': {
        # stderr only: stdout carries CSV output
        'console': {
            'level': LOG_LEVEL,
            'class': 'logging.StreamHandler',
            'formatter': 'simple',
        },
    },
    'root': {
        'level': LOG_LEVEL,
        'handlers': ['console'],
    },
    'loggers': {
        'django': {
            'level': LOG_LEVEL,
            'propagate': True,
        },
        'apps': {
            'level': LOG_LEVEL,
            'propagate': True,
        },
        'apps.splitting': {
            'level': LOG_LEVEL,
            'propagate': True,
        },
        'apps.algebra': {
            'level': LOG_LEVEL,
            'propagate': True,
        },
        'apps.oscillator': {
            'level': LOG_LEVEL,
            'propagate': True,
        },
        'apps.brackets': {
            'level': LOG_LEVEL,
            'propagate': True,
        },
        'apps.kepler': {
            'level': LOG_LEVEL,
            'propagate': True,
        },
        'apps.sweeps': {
            'level': LOG_LEVEL,
            'propagate': True,
        },
    },
}

# Add file handler only if logs directory is writable
if LOGS_WRITABLE:
    LOGGING['handlers']['daily_file'] = {
        'level': LOG_LEVEL,
        'class': 'logging.handlers.TimedRotatingFileHandler',
        'filename': str(LOGS_PATH / 'lab.log'),
        'when': 'midnight',
        'interval': 1,
        'backupCount': 7,  # Keep 7 days of logs
        'formatter': 'detailed',
        'encoding': 'utf-8',
    }
    LOGGING['root']['handlers'].append('daily_file')
