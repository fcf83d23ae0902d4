"""Regenerate the bundled synthetic fixtures (default: the package data directory)."""

import sys
from pathlib import Path

from wcoda.fixtures import write_bundled

target = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).parents[1] / "src" / "wcoda" / "data"
for path in write_bundled(target):
    print(path)
