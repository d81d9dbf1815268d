import sys

from hfdistill.harness.cli import main

sys.exit(main())
