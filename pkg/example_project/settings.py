import os

BASE_DIR = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
SECRET_KEY = "vickrey"
DEBUG = True
ALLOWED_HOSTS = []
INSTALLED_APPS = (
    # extra
    "rest_framework",
    # project apps
    "clarke",
)

DATABASES = {
    "default": {
        "ENGINE": "django.db.backends.sqlite3",
        "NAME": ":memory:",
    }
}

USE_TZ = True

CLARKE = {
    "TIE_RULE": "lex",
    "SEED": 0,
    "CHECK_INVARIANTS": True,
}

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "verbose": {"format": "%(asctime)s %(levelname)s %(name)s: %(message)s"},
    },
    "handlers": {
        "console": {"class": "logging.StreamHandler", "formatter": "verbose"},
    },
    "loggers": {
        "clarke": {
            "handlers": ["console"],
            "level": os.environ.get("CLARKE_LOG_LEVEL", "WARNING"),
        },
    },
}
