import sys

from oft3d.cli import main

sys.exit(main())
