import sys

from cvthermo.cli import main

sys.exit(main())
