#!/usr/bin/env python
"""Run the full experiment on the synthetic spectral dataset: generate
images, train the classifier, attack it, train EF and AF masks on the
aligned subset, and test the two mask families for dependence.

Equivalent to `freqmask pipeline`; extra flags are passed through.
"""

import sys

from freqmask.cli import main

if __name__ == "__main__":
    argv = sys.argv[1:]
    if not any(a.startswith("--out") for a in argv):
        argv = ["--out", "runs/pipeline"] + argv
    sys.exit(main(["pipeline"] + argv))
