import os
from pathlib import Path
from dotenv import load_dotenv

load_dotenv()

# Define LOGS_DIR early
BASE_DIR = Path(__file__).resolve().parent.parent
LOGS_DIR = Path(os.getenv('DESTSIM_LOGS_DIR', BASE_DIR / 'logs'))
LOGS_DIR.mkdir(parents=True, exist_ok=True)

SECRET_KEY = os.getenv('SECRET_KEY', 'django-insecure-destination-similarity')
DEBUG = os.getenv('DEBUG', 'True') == 'True'

ALLOWED_HOSTS = []

INSTALLED_APPS = [
    'django.contrib.contenttypes',
    'django.contrib.auth',
    'rest_framework',
    'destinations',
]

# No persistence: every artifact is a file under DESTSIM_OUTPUT_DIR
DATABASES = {}

LANGUAGE_CODE = 'en-us'
TIME_ZONE = 'UTC'
USE_I18N = False
USE_TZ = True


def _float_list(value):
    return [float(item) for item in value.split(',') if item.strip()]


# Destination similarity settings
DESTSIM_MALFORMED_THRESHOLD = float(os.getenv('DESTSIM_MALFORMED_THRESHOLD', '0.5'))
DESTSIM_MAX_USER_DEGREE = int(os.getenv('DESTSIM_MAX_USER_DEGREE', '1000'))
DESTSIM_MIN_SUPPORT = int(os.getenv('DESTSIM_MIN_SUPPORT', '1'))
DESTSIM_POPULARITY_DENOMINATOR = os.getenv('DESTSIM_POPULARITY_DENOMINATOR', 'n')
DESTSIM_DEFAULT_W = float(os.getenv('DESTSIM_DEFAULT_W', '0.5'))
DESTSIM_W_GRID = _float_list(os.getenv('DESTSIM_W_GRID', '0.1,0.3,0.5,0.7,0.9'))
DESTSIM_TOP_K = int(os.getenv('DESTSIM_TOP_K', '5'))
DESTSIM_SEED = int(os.getenv('DESTSIM_SEED', '0'))
DESTSIM_WORKERS = int(os.getenv('DESTSIM_WORKERS', '1'))
DESTSIM_BASELINE_MEASURE = os.getenv('DESTSIM_BASELINE_MEASURE', 'pearson')
DESTSIM_OUTPUT_DIR = os.getenv('DESTSIM_OUTPUT_DIR', str(BASE_DIR / 'output'))

# Logging Configuration
LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{levelname} {asctime} {module} {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'verbose',
        },
        'file': {
            'level': 'INFO',
            'class': 'logging.FileHandler',
            'filename': str(LOGS_DIR / 'debug.log'),
            'formatter': 'verbose',
        },
    },
    'loggers': {
        'django': {
            'handlers': ['console', 'file'],
            'level': 'INFO',
            'propagate': True,
        },
        'destinations': {
            'handlers': ['console', 'file'],
            'level': os.getenv('DESTSIM_LOG_LEVEL', 'INFO'),
            'propagate': False,
        },
    },
}

# Test Runner Settings
TEST_RUNNER = 'django.test.runner.DiscoverRunner'
