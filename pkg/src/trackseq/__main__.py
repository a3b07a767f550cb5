import sys

from trackseq.cli import main

sys.exit(main())
