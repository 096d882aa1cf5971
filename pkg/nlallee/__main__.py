import sys

from nlallee.cli import main

sys.exit(main())
