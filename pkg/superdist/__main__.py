import sys

from superdist.cli.main import main

sys.exit(main())
