import math
import os
from pathlib import Path

BASE_DIR = Path(__file__).resolve().parent.parent

SECRET_KEY = os.environ.get(
    "DJANGO_SECRET_KEY",
    "spikewave-local-secret-key-not-used-for-anything-sensitive",
)

DEBUG = os.environ.get("DJANGO_DEBUG", "False").lower() in ("true", "1")

ALLOWED_HOSTS = []

INSTALLED_APPS = [
    "django.contrib.contenttypes",
    "django.contrib.auth",
    "rest_framework",
    "spikewave",
]

# Commands and tests never touch a database.
DATABASES = {}

DEFAULT_AUTO_FIELD = "django.db.models.BigAutoField"

LANGUAGE_CODE = "en-us"
TIME_ZONE = "UTC"
USE_I18N = False
USE_TZ = True


def _env_float(name, default):
    return float(os.environ.get(name, default))


def _env_int(name, default):
    return int(os.environ.get(name, default))


SPIKEWAVE = {
    # Sampling and kernel truncation
    "DT": _env_float("SPIKEWAVE_DT", 0.001),
    "EPS_TRUNC": _env_float("SPIKEWAVE_EPS_TRUNC", 1e-6),
    "BIN_WIDTH_FACTOR": _env_int("SPIKEWAVE_BIN_WIDTH_FACTOR", 50),
    "OUT_DIR": os.environ.get("SPIKEWAVE_OUT_DIR", str(BASE_DIR / "output")),
    # Experiment parameters (reconstruction experiments)
    "C": _env_float("SPIKEWAVE_C", math.sqrt(2.0)),
    "K": _env_int("SPIKEWAVE_K", 3),
    "TAU_MAX": _env_float("SPIKEWAVE_TAU_MAX", 3.4),
    "THETA": _env_float("SPIKEWAVE_THETA", 0.1),
    # Two-channel encoding demo
    "ENCODE": {
        "K": _env_int("SPIKEWAVE_ENCODE_K", 2),
        "TAU_MAX": _env_float("SPIKEWAVE_ENCODE_TAU_MAX", 1.0),
        "THETA": _env_float("SPIKEWAVE_ENCODE_THETA", 0.5),
        "DURATION": _env_float("SPIKEWAVE_ENCODE_DURATION", 4 * math.pi),
    },
    # Kernel figure
    "KERNELS": {
        "K": _env_int("SPIKEWAVE_KERNELS_K", 7),
        "TAU_MAX": _env_float("SPIKEWAVE_KERNELS_TAU_MAX", 1.0),
    },
    # Classical baselines
    "MORLET_SIGMA": _env_float("SPIKEWAVE_MORLET_SIGMA", 1.0),
    "MORLET_OMEGA0": _env_float("SPIKEWAVE_MORLET_OMEGA0", 5.0),
    "CWT_SCALES": _env_int("SPIKEWAVE_CWT_SCALES", 32),
    "TRUNC_EXP_K": _env_int("SPIKEWAVE_TRUNC_EXP_K", 5),
    "TRUNC_EXP_ORDER": _env_int("SPIKEWAVE_TRUNC_EXP_ORDER", 1),
    # Experiment signal durations (seconds)
    "SINE_DURATION": _env_float("SPIKEWAVE_SINE_DURATION", 40 * math.pi),
    "COMPOSITE_DURATION": _env_float("SPIKEWAVE_COMPOSITE_DURATION", 40.0),
    # Scale covariance
    "S_VALUES": [0.5, 1.0, 2.0, 4.0],
}

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "simple": {
            "format": "%(asctime)s %(levelname)s %(name)s: %(message)s",
        },
    },
    "handlers": {
        "console": {
            "class": "logging.StreamHandler",
            "formatter": "simple",
        },
    },
    "loggers": {
        "spikewave": {
            "handlers": ["console"],
            "level": os.environ.get("SPIKEWAVE_LOG_LEVEL", "WARNING"),
            "propagate": False,
        },
    },
}
