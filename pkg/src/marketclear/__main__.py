"""Module entry point: ``python -m marketclear``."""

from .cli import main

raise SystemExit(main())
