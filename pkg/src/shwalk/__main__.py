import sys

from shwalk.cli import main

sys.exit(main())
