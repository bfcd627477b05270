"""Pure-Python (numpy) versions of the compiled row scans."""
import numpy as np


def match_rows(M, cols, target):
    if len(cols) == 0:
        return np.ones(M.shape[0], dtype=bool)
    return (M[:, cols] == target).all(axis=1)


def match_pairs(M, a, b):
    if len(a) == 0:
        return np.ones(M.shape[0], dtype=bool)
    return (M[:, a] == M[:, b]).all(axis=1)

