# Copyright (c) 2026, shrinklasso contributors. See LICENSE.txt for details.

import sys

import django
from django.conf import settings
from django.core.management import execute_from_command_line

# Command names accepted on the command line for modules that cannot carry
# a dash.
ALIASES = {
    "risk-curve": "risk_curve",
}

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "plain": {
            "format": "%(levelname)s %(name)s: %(message)s",
        },
    },
    "handlers": {
        "console": {
            "level": "DEBUG",
            "class": "logging.StreamHandler",
            "stream": "ext://sys.stderr",
            "formatter": "plain",
        },
    },
    "loggers": {
        "shrinklasso": {
            "handlers": ["console"],
            "level": "INFO",
            "propagate": False,
        },
    },
}


def main(argv=None):
    argv = list(sys.argv if argv is None else argv)
    if len(argv) > 1:
        argv[1] = ALIASES.get(argv[1], argv[1])
    if not settings.configured:
        settings.configure(
            INSTALLED_APPS=["shrinklasso"],
            LOGGING=LOGGING,
        )
    django.setup()
    execute_from_command_line(argv)
