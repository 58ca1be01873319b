import sys

from qulint.cli import main

sys.exit(main())
