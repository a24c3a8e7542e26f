"""Allow ``python -m cavpull``."""

from .cli import main

raise SystemExit(main())
