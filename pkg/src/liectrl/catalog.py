"""Example systems: the classical linear system on R^2, two systems on SL(2,R),
the rolling sphere on R^2 x SO(3), a Heisenberg system and a generic
h-homogeneous product.

Every builder returns ``(system, realization)``.
"""

from __future__ import annotations

import numpy as np

from .algebra import LieAlgebra, ad
from .simulator import GroupRealization, MatrixFactor, TranslationFactor
from .system import ControlRange, ControlSystem, FiniteCenterDeclaration, GroupMeta

SL2_X = np.array([[1.0, 0.0], [0.0, -1.0]])
SL2_Y = np.array([[0.0, 0.0], [1.0, 0.0]])
SL2_Z = np.array([[0.0, 1.0], [0.0, 0.0]])

SO3_1 = np.array([[0.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]])
SO3_2 = np.array([[0.0, 0.0, -1.0], [0.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
SO3_3 = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])

ROTATION_GENERATOR = np.array([[0.0, -1.0], [1.0, 0.0]])

SL2_DECLARATION = (FiniteCenterDeclaration("SL(2,R)", True),)


def sl2() -> LieAlgebra:
    """``[X, Y] = -2Y``, ``[X, Z] = 2Z``, ``[Z, Y] = X``."""
    return LieAlgebra.from_brackets(
        ("X", "Y", "Z"),
        {(0, 1): {1: -2.0}, (0, 2): {2: 2.0}, (1, 2): {0: -1.0}},
    )


def so3() -> LieAlgebra:
    return LieAlgebra.from_matrices([SO3_1, SO3_2, SO3_3], ("Xh1", "Xh2", "Xh3"))


def direct_sum(first: LieAlgebra, second: LieAlgebra) -> LieAlgebra:
    n1, n2 = first.dim, second.dim
    c = np.zeros((n1 + n2,) * 3)
    c[:n1, :n1, :n1] = first.structure
    c[n1:, n1:, n1:] = second.structure
    return LieAlgebra(c, first.basis_names + second.basis_names)


def block_diag(*blocks) -> np.ndarray:
    n = sum(b.shape[0] for b in blocks)
    out = np.zeros((n, n))
    i = 0
    for b in blocks:
        k = b.shape[0]
        out[i:i + k, i:i + k] = b
        i += k
    return out


def classical_r2_rotation(omega: float = 1.0):
    alg = LieAlgebra.abelian(2, ("x1", "x2"))
    d = omega * ROTATION_GENERATOR
    sys = ControlSystem(alg, d, [[1.0, 0.0]], ControlRange.box(1), name="classical_r2_rotation")
    return sys, GroupRealization(alg, [TranslationFactor(2, "R2")], d, ["linear_map"])


def rank_deficient_r2():
    """``A = diag(1, 2)``, ``b = e1``: the Kalman condition fails."""
    alg = LieAlgebra.abelian(2, ("x1", "x2"))
    d = np.diag([1.0, 2.0])
    sys = ControlSystem(alg, d, [[1.0, 0.0]], ControlRange.box(1), name="rank_deficient_r2")
    return sys, GroupRealization(alg, [TranslationFactor(2, "R2")], d, ["linear_map"])


def _sl2_factor():
    return MatrixFactor(np.array([SL2_X, SL2_Y, SL2_Z]), ("unit_det",), "SL(2,R)")


def sl2_ex_i():
    """``D = ad(X)``, control field ``H = X + Y + Z``."""
    alg = sl2()
    d = ad(alg, [1.0, 0.0, 0.0])
    sys = ControlSystem(
        alg, d, [[1.0, 1.0, 1.0]], ControlRange.box(1), GroupMeta(finite_center_declarations=SL2_DECLARATION),
        name="sl2_ex_i",
    )
    return sys, GroupRealization(alg, [_sl2_factor()], d, ["inner"])


def sl2_ex_ii():
    """``D = ad(Y)``, control field ``Z``."""
    alg = sl2()
    d = ad(alg, [0.0, 1.0, 0.0])
    sys = ControlSystem(
        alg, d, [[0.0, 0.0, 1.0]], ControlRange.box(1), GroupMeta(finite_center_declarations=SL2_DECLARATION),
        name="sl2_ex_ii",
    )
    return sys, GroupRealization(alg, [_sl2_factor()], d, ["inner"])


def rolling_sphere(omega: float = 1.0, b=(1.0, 0.0), restricted: bool = False):
    """Rolling sphere on a plane revolving with angular velocity ``omega``.

    Channels: ``u`` along ``b`` in the plane, then ``v_1, v_2, v_3`` along the
    three rotation generators.  The range is unrestricted unless ``restricted``.
    """
    alg = direct_sum(LieAlgebra.abelian(2, ("e1", "e2")), so3())
    d = block_diag(omega * ROTATION_GENERATOR, np.zeros((3, 3)))
    fields = np.zeros((4, 5))
    fields[0, :2] = b
    fields[1:, 2:] = np.eye(3)
    rng = ControlRange.box(4) if restricted else ControlRange()
    sys = ControlSystem(alg, d, fields, rng, name="rolling_sphere")
    real = GroupRealization(
        alg,
        [TranslationFactor(2, "R2"), MatrixFactor(np.array([SO3_1, SO3_2, SO3_3]), ("orthogonal", "unit_det"), "SO(3)")],
        d,
        ["linear_map", "trivial"],
    )
    return sys, real


def heisenberg_solvable():
    """Heisenberg algebra ``[e1, e2] = e3`` with ``D = ad(e1)`` and fields ``e1, e2``."""
    alg = LieAlgebra.from_brackets(("e1", "e2", "e3"), {(0, 1): {2: 1.0}})
    d = ad(alg, [1.0, 0.0, 0.0])
    e12 = np.zeros((3, 3))
    e12[0, 1] = 1.0
    e23 = np.zeros((3, 3))
    e23[1, 2] = 1.0
    e13 = np.zeros((3, 3))
    e13[0, 2] = 1.0
    sys = ControlSystem(alg, d, [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]], ControlRange.box(2), name="heisenberg_solvable")
    real = GroupRealization(alg, [MatrixFactor(np.array([e12, e23, e13]), ("unit_det",), "H3")], d, ["inner"])
    return sys, real


def product_homogeneous():
    """sl(2)-homogeneous system on ``R^3 x SL(2,R)``: linear on ``R^3``, driftless on ``SL(2,R)``."""
    alg = direct_sum(LieAlgebra.abelian(3, ("x1", "x2", "x3")), sl2())
    de = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
    d = block_diag(de, np.zeros((3, 3)))
    fields = np.zeros((4, 6))
    fields[0, :3] = [1.0, 0.0, 1.0]
    fields[1:, 3:] = np.eye(3)
    sys = ControlSystem(
        alg, d, fields, ControlRange.box(4), GroupMeta(finite_center_declarations=SL2_DECLARATION),
        name="product_homogeneous",
    )
    real = GroupRealization(alg, [TranslationFactor(3, "R3"), _sl2_factor()], d, ["linear_map", "trivial"])
    return sys, real


FIXTURES = {
    "classical_r2_rotation": classical_r2_rotation,
    "sl2_ex_i": sl2_ex_i,
    "sl2_ex_ii": sl2_ex_ii,
    "rolling_sphere": rolling_sphere,
    "heisenberg_solvable": heisenberg_solvable,
    "product_homogeneous": product_homogeneous,
}

# derivations that ship in inner form, as ``D = ad(y)``
INNER_ELEMENTS = {
    "sl2_ex_i": (1.0, 0.0, 0.0),
    "sl2_ex_ii": (0.0, 1.0, 0.0),
    "heisenberg_solvable": (1.0, 0.0, 0.0),
}


def fixture_documents() -> dict:
    """Spec-file documents for every fixture, keyed by name."""
    from .specfile import to_document

    docs = {}
    for name, build in FIXTURES.items():
        sys, real = build()
        docs[name] = to_document(sys, real, INNER_ELEMENTS.get(name))
    return docs


def export_fixtures(directory) -> list:
    from pathlib import Path

    from .specfile import write_spec

    out = []
    for name, doc in fixture_documents().items():
        path = Path(directory) / f"{name}.json"
        write_spec(path, doc)
        out.append(path)
    return out
