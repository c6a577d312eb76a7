import os

import django

os.environ.setdefault("DJANGO_SETTINGS_MODULE", "neurowave.settings")
django.setup()
