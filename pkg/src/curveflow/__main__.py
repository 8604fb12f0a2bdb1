import sys

from curveflow.cli import main

sys.exit(main())
