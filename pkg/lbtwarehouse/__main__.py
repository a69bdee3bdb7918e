"""Allow ``python -m lbtwarehouse``."""

import sys

from .cli import main

sys.exit(main())
