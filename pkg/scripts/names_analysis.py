#!/usr/bin/env python3
"""Random-allocation analysis of real name-frequency files.

Point this at census-style tables (one for given names, one for surnames)
to get the matching-by-name summary: expected proportion correct, entropy,
all-correct log probability, and Hoeffding tail bounds.  Without arguments
it runs on the bundled synthetic fixture tables.

Example with real files:

    python scripts/names_analysis.py \
        --first given.csv --first-value-col prop --first-kind proportion \
        --last surnames.csv --last-value-col count --last-kind count \
        --population 330000000 --out-dir out
"""

import sys

from microclust.cli import main as cli

GLOBAL_FLAGS = {"--out-dir", "--seed", "--jobs", "--config"}


def main() -> None:
    # Global flags belong before the subcommand; collect them wherever given.
    front: list[str] = []
    rest: list[str] = []
    tokens = iter(sys.argv[1:])
    for token in tokens:
        if token in GLOBAL_FLAGS:
            front.extend([token, next(tokens, "")])
        else:
            rest.append(token)
    if not rest:
        rest = ["--fixture"]
    sys.exit(cli([*front, "names", *rest]))


if __name__ == "__main__":
    main()
