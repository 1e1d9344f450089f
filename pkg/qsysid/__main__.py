import sys

from qsysid.cli import main

sys.exit(main())
