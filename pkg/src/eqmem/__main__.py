import sys

from eqmem.cli import main

sys.exit(main())
