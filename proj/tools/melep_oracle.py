#!/usr/bin/env python3
"""Brute-force MELEP in plain Python, for cross-checking the C++ implementation.

    melep_oracle.py --preds P.csv --labels L.csv   print MELEP for a pair of CSV files
    melep_oracle.py --check                        verify the built-in four-record instance
"""

import argparse
import csv
import math
import sys

INSTANCE_A_THETA = [[0.9, 0.2], [0.8, 0.7], [0.1, 0.6], [0.3, 0.4]]
INSTANCE_A_LABELS = [[1, 0], [1, 1], [0, 1], [0, 0]]
INSTANCE_A_MELEP = 0.57185948020463706


def pair(theta, labels, y, z):
    n = len(theta)
    joint = [[0.0, 0.0], [0.0, 0.0]]
    for i in range(n):
        t = labels[i][y]
        joint[t][1] += theta[i][z] / n
        joint[t][0] += (1 - theta[i][z]) / n
    marginal = [sum((1 - row[z]) for row in theta) / n, sum(row[z] for row in theta) / n]
    conditional = [[joint[t][s] / marginal[s] if marginal[s] > 0 else 0.0 for s in range(2)] for t in range(2)]
    return joint, marginal, conditional


def phi(theta, labels, y, z):
    _, _, c = pair(theta, labels, y, z)
    total = 0.0
    for i, row in enumerate(theta):
        t = labels[i][y]
        likelihood = c[t][0] * (1 - row[z]) + c[t][1] * row[z]
        total += math.log(max(likelihood, 1e-12))
    return -total / len(theta)


def melep(theta, labels):
    targets, sources = len(labels[0]), len(theta[0])
    score = 0.0
    for y in range(targets):
        positives = sum(row[y] for row in labels)
        negatives = len(labels) - positives
        if negatives == 0:
            raise ValueError(f"label {y} has no negative records")
        score += positives / negatives * sum(phi(theta, labels, y, z) for z in range(sources)) / sources
    return score / targets


def read_csv(path, cast):
    with open(path, newline="", encoding="utf-8-sig") as f:
        rows = list(csv.reader(f))
    return {row[0]: [cast(v) for v in row[1:]] for row in rows[1:] if row}


def main():
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--preds")
    parser.add_argument("--labels")
    parser.add_argument("--check", action="store_true")
    args = parser.parse_args()

    if args.check:
        got = melep(INSTANCE_A_THETA, INSTANCE_A_LABELS)
        ok = abs(got - INSTANCE_A_MELEP) <= 1e-10
        print(f"instance A: {got:.17g} (expected {INSTANCE_A_MELEP:.17g}) {'ok' if ok else 'MISMATCH'}")
        return 0 if ok else 1
    if not (args.preds and args.labels):
        parser.error("give --preds and --labels, or --check")

    labels = read_csv(args.labels, lambda v: int(float(v)))
    preds = read_csv(args.preds, float)
    ids = list(labels)
    if set(ids) != set(preds):
        sys.exit("prediction and label ids differ")
    print(f"{melep([preds[i] for i in ids], [labels[i] for i in ids]):.17g}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
