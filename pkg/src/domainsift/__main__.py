"""``python -m domainsift`` → the ``dsift`` command line."""

from .cli import main

raise SystemExit(main())
