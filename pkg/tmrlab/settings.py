"""
Django settings for tmrlab project.

Laser fault-injection simulator for TMR shift registers. The simulator itself
lives in the ``faultsim`` app; the project adds the result archive (admin +
database) and the management commands.

For more information on this file, see
https://docs.djangoproject.com/en/4.2/topics/settings/
"""

import os

# Build paths inside the project like this: os.path.join(BASE_DIR, ...)
BASE_DIR = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = os.environ.get('FAULTLAB_SECRET_KEY', 'tmrlab-local-archive-key-not-for-deployment')

# SECURITY WARNING: don't run with debug turned on in production!
DEBUG = os.environ.get('FAULTLAB_DEBUG', '1') == '1'

ALLOWED_HOSTS = ['localhost', '127.0.0.1']


# Application definition

INSTALLED_APPS = [
    'django.contrib.admin',
    'django.contrib.auth',
    'django.contrib.contenttypes',
    'django.contrib.sessions',
    'django.contrib.messages',
    'django.contrib.staticfiles',
    'faultsim'
]

MIDDLEWARE = [
    'django.middleware.security.SecurityMiddleware',
    'django.contrib.sessions.middleware.SessionMiddleware',
    'django.middleware.common.CommonMiddleware',
    'django.middleware.csrf.CsrfViewMiddleware',
    'django.contrib.auth.middleware.AuthenticationMiddleware',
    'django.contrib.messages.middleware.MessageMiddleware',
    'django.middleware.clickjacking.XFrameOptionsMiddleware',
]

ROOT_URLCONF = 'tmrlab.urls'

TEMPLATES = [
    {
        'BACKEND': 'django.template.backends.django.DjangoTemplates',
        'DIRS': [],
        'APP_DIRS': True,
        'OPTIONS': {
            'context_processors': [
                'django.template.context_processors.debug',
                'django.template.context_processors.request',
                'django.contrib.auth.context_processors.auth',
                'django.contrib.messages.context_processors.messages',
            ],
        },
    },
]

WSGI_APPLICATION = 'tmrlab.wsgi.application'


# Database
# https://docs.djangoproject.com/en/4.2/ref/settings/#databases
# Архив кампаний по умолчанию хранится в sqlite, postgres включается переменными окружения

if os.environ.get('FAULTLAB_DB_ENGINE', 'sqlite') == 'postgresql':
    DATABASES = {
        'default': {
            'ENGINE': 'django.db.backends.postgresql',
            'NAME': os.environ.get('FAULTLAB_DB_NAME', 'faultlab_db'),
            'USER': os.environ.get('FAULTLAB_DB_USER', 'faultlab'),
            'PASSWORD': os.environ.get('FAULTLAB_DB_PASSWORD', ''),
            'HOST': os.environ.get('FAULTLAB_DB_HOST', 'localhost'),
            'PORT': os.environ.get('FAULTLAB_DB_PORT', '5432'),
        }
    }
else:
    DATABASES = {
        'default': {
            'ENGINE': 'django.db.backends.sqlite3',
            'NAME': os.path.join(BASE_DIR, 'faultlab.sqlite3'),
        }
    }

DEFAULT_AUTO_FIELD = 'django.db.models.AutoField'


# Internationalization
# https://docs.djangoproject.com/en/4.2/topics/i18n/

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = True

USE_TZ = True


# Static files (CSS, JavaScript, Images)
# https://docs.djangoproject.com/en/4.2/howto/static-files/

STATIC_URL = '/static/'


# Logging
# https://docs.djangoproject.com/en/4.2/topics/logging/

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
        'django': {
            'handlers': ['console'],
            'level': 'WARNING',
        },
        'faultsim': {
            'handlers': ['console'],
            'level': os.environ.get('FAULTLAB_LOG_LEVEL', 'INFO'),
            'propagate': False,
        },
    },
}


# Fault-injection simulator defaults

FAULTLAB = {
    # глобальное зерно ГСЧ и число процессов кампании, переопределяются окружением
    'SEED': int(os.environ.get('FAULTLAB_SEED', '2024')),
    'WORKERS': int(os.environ.get('FAULTLAB_WORKERS', os.cpu_count() or 1)),
    'REPETITIONS': 20,
    'REPEATABLE_AT': 0.95,
    'DELTA_NS': 1.0,
    'POWER_STEP_PCT': 5.0,
    'ORACLE_MAX_STAGES': 8,
    'ORACLE_MAX_EDGES': 256,
}
