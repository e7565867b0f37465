#!/usr/bin/env python
"""Run the spiral benchmark: Pearson R^2 misses the dependence between the
spiral's coordinates, the intrinsic-dimension shuffle test catches it.

Equivalent to `freqmask spiral-demo`; extra flags are passed through.
"""

import sys

from freqmask.cli import main

if __name__ == "__main__":
    argv = sys.argv[1:]
    if not any(a.startswith("--out") for a in argv):
        argv = ["--out", "runs/spiral"] + argv
    sys.exit(main(["spiral-demo"] + argv))
