import sys

from mfpca.cli import main

sys.exit(main())
