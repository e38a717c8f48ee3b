import sys

from teanet.cli import main

sys.exit(main())
