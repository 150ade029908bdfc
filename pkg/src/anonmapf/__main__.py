import sys

from anonmapf.cli import main

sys.exit(main())
