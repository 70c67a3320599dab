"""
``clarke`` console script: the management commands without a Django project.

``clarke run scenario.json`` is ``django-admin run scenario.json`` against a
minimal in-process configuration, unless ``DJANGO_SETTINGS_MODULE`` points
at a real one.
"""
import os
import sys

import django
from django.conf import settings
from django.core.management import execute_from_command_line

STANDALONE_SETTINGS = {
    "INSTALLED_APPS": ["rest_framework", "clarke"],
    "DATABASES": {},
    "USE_TZ": True,
    "LOGGING": {
        "version": 1,
        "disable_existing_loggers": False,
        "formatters": {"plain": {"format": "%(levelname)s %(name)s: %(message)s"}},
        "handlers": {"stderr": {"class": "logging.StreamHandler", "formatter": "plain"}},
        "loggers": {"clarke": {"handlers": ["stderr"], "level": "WARNING"}},
    },
}


def main(argv=None):
    argv = list(sys.argv if argv is None else argv)
    if not os.environ.get("DJANGO_SETTINGS_MODULE") and not settings.configured:
        settings.configure(**STANDALONE_SETTINGS)
        django.setup()
    execute_from_command_line(["clarke"] + argv[1:])


if __name__ == "__main__":
    main()
