import sys

from fogsched.harness.cli import main

sys.exit(main())
