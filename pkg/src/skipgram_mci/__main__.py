"""Allow ``python -m skipgram_mci``."""

import sys

from .cli import main

sys.exit(main())
