import sys

from tplkit.cli import main

sys.exit(main())
