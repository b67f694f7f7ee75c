"""
WSGI config for tmrlab project.

It exposes the WSGI callable as a module-level variable named ``application``.
`manage.py runserver` serves the campaign archive admin through it.
"""

import os

from django.core.wsgi import get_wsgi_application

os.environ.setdefault("DJANGO_SETTINGS_MODULE", "tmrlab.settings")

application = get_wsgi_application()
