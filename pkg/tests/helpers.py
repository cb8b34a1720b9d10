"""Shared oracles and builders for the test suite.

The brute-force subset enumeration below is the independent reference for
every sigma_k computation: it implements the definition (sum over k-element
subsets of eigenvalue products) with no shared code path with the package's
coefficient recurrences.
"""

import math
from itertools import combinations

import numpy as np

from sigmak import Background, Grid, ProblemSpec


def brute_sigma(lam, k: int) -> float:
    """sigma_k by direct subset enumeration (the definition)."""
    lam = np.asarray(lam, dtype=float)
    if k == 0:
        return 1.0
    if k > lam.size:
        return 0.0
    return float(sum(math.prod(c) for c in combinations(lam.tolist(), k)))


def brute_sigma_all(lam, kmax: int) -> np.ndarray:
    return np.array([brute_sigma(lam, j) for j in range(kmax + 1)])


def canonical_problem(case: str = "A", n: int = 3, k: int = 3,
                      N: int = 16, alpha: str | None = None,
                      f: str | None = None) -> ProblemSpec:
    """The constant-coefficient model problems used throughout the suite."""
    grid = Grid(n, N)
    background = Background.isotropic(grid, ric0_scale=-1.0)
    if case == "A":
        alpha = "-0.1" if alpha is None else alpha
        f = "0.7" if f is None else f
    elif case == "B":
        alpha = repr(-1.0 / 3.0) if alpha is None else alpha
        f = "0" if f is None else f
    else:
        alpha = "-0.05" if alpha is None else alpha
        f = "1" if f is None else f
    return ProblemSpec.build(case, n, k, grid, alpha=alpha, f=f,
                             background=background)
