import sys

from sepca.cli import main

sys.exit(main())
