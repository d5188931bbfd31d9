"""Main program: run a fivevertex command from a source checkout"""

import sys

from fivevertex.cli import main

if __name__ == "__main__":
    sys.exit(main())
