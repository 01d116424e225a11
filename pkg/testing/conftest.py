# pytest wiring: mirror testing/manage.py so the Django test settings
# (module ``settings``, app ``tests``) are importable and configured.
import os
import sys

import django

_HERE = os.path.abspath(os.path.dirname(__file__))
if _HERE not in sys.path:
    sys.path.insert(0, _HERE)

os.environ.setdefault("DJANGO_SETTINGS_MODULE", "settings")
django.setup()
