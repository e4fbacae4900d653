import sys

from modalembed.cli import main

sys.exit(main())
