"""Run the bundled corpus and print one line per case.

    python3 scripts/run_corpus.py [--filter 'c*'] [--json]
"""

import sys

from sdesym.cli import main

if __name__ == "__main__":
    sys.exit(main(["corpus", *sys.argv[1:]]))
