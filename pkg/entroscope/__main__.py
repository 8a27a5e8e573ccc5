import sys

from entroscope.cli import main

sys.exit(main())
