import sys

from polyntk.cli import main

sys.exit(main())
