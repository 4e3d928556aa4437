import sys

from sparsebudget.main import main

sys.exit(main())
