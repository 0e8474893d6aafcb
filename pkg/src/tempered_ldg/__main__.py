import sys

from tempered_ldg.cli import main

sys.exit(main())
