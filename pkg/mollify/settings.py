"""settings.py holds the logging configuration applied by the command-line front end."""

import copy

LOG_FORMAT = "%(asctime)s %(levelname)-8s %(name)s: %(message)s"

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "normal": {"format": LOG_FORMAT, "datefmt": "%H:%M:%S"},
    },
    "handlers": {
        "console": {
            "level": "DEBUG",
            "class": "logging.StreamHandler",
            "formatter": "normal",
            "stream": "ext://sys.stderr",
        },
    },
    "loggers": {
        "mollify": {"handlers": ["console"], "level": "INFO", "propagate": False},
    },
}


def logging_config(verbosity=0, quiet=False):
    """logging_config returns LOGGING with the package level set from the -v count and --quiet."""
    config = copy.deepcopy(LOGGING)
    if quiet:
        level = "WARNING"
    elif verbosity >= 1:
        level = "DEBUG"
    else:
        level = "INFO"
    config["loggers"]["mollify"]["level"] = level
    return config
