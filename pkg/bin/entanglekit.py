#!/usr/bin/env python3
"""
entanglekit.py: entanglement of data tensors and feature rearrangement.

Usage:
    python3 entanglekit.py synth block-pairs --M 500 --N 16 --shuffle -o pairs.csv
    python3 entanglekit.py entangle pairs.csv --embedding sincos --levels 1..3
    python3 entanglekit.py rearrange pairs.csv -o pairs.perm.json
    python3 entanglekit.py apply pairs.csv pairs.perm.json -o arranged.csv
    python3 entanglekit.py swapgen arranged.csv --k 128 --seed 3 -o swapped.csv
    python3 entanglekit.py tnfit tensor.lctn --width 2 -o net.json
    python3 entanglekit.py swapseries pairs.csv --swaps 0,8,32,128 -o report/
"""

import logging
import sys

from entanglekit.cli import main

logging.basicConfig(level=logging.INFO, format="%(levelname)s: %(message)s")


if __name__ == "__main__":
    sys.exit(main())
