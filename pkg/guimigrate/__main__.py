import sys

from guimigrate.cli import main

sys.exit(main())
