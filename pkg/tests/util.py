"""Shared helpers for the test-suite."""

import numpy as np

from liectrl.algebra import LieAlgebra
from liectrl import catalog
from liectrl.catalog import FIXTURES


def change_basis(a: LieAlgebra, p: np.ndarray) -> LieAlgebra:
    """Structure constants in the basis given by the columns of ``p``."""
    pinv = np.linalg.inv(p)
    c = np.einsum("ia,jb,ijk,ck->abc", p, p, a.structure, pinv)
    return LieAlgebra(c)


def upper_triangular_algebra(n: int) -> LieAlgebra:
    """Solvable algebra of upper-triangular ``n x n`` matrices."""
    mats = []
    for i in range(n):
        for j in range(i, n):
            m = np.zeros((n, n))
            m[i, j] = 1.0
            mats.append(m)
    return LieAlgebra.from_matrices(mats)


def fixture(name):
    return getattr(catalog, name)()


def all_fixtures():
    return {name: build() for name, build in FIXTURES.items()}
