"""Top-level entry point for the adaptive linear-optics toolkit."""

import sys

from cli.commands import main

if __name__ == '__main__':
    sys.exit(main())
