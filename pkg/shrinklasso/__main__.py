# Copyright (c) 2026, shrinklasso contributors. See LICENSE.txt for details.

from shrinklasso.cli import main

main()
