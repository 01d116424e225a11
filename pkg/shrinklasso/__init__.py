# Copyright (c) 2026, shrinklasso contributors. See LICENSE.txt for details.

__version__ = "0.1.0"
