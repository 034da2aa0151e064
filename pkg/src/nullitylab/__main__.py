import sys

from nullitylab.cli import main

sys.exit(main())
