import sys

from swclock.cli import main

sys.exit(main())
