import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from liectrl.algebra import LieAlgebra, Subspace, ad, is_nilpotent, is_subalgebra
from liectrl.catalog import ROTATION_GENERATOR, block_diag, direct_sum, so3, sl2
from liectrl.decomposition import (
    check_grading,
    d_decomposition,
    generalized_eigenspace,
    is_d_invariant,
    is_nilpotent_subspace,
    multiples_subalgebra,
    spectrum,
)
from liectrl.errors import NotAnEigenvalue

from util import all_fixtures, upper_triangular_algebra

X, Y, Z = np.eye(3)
ROLL_D = block_diag(ROTATION_GENERATOR, np.zeros((3, 3)))


def span(*vs):
    return Subspace.span(np.array(vs, dtype=float).T)


def classes(spec):
    return {(c.value.real, c.value.imag): c.multiplicity for c in spec.classes}


# -- spectrum -----------------------------------------------------------------


def test_spectrum_ad_x():
    assert classes(spectrum(ad(sl2(), X))) == {(-2.0, 0.0): 1, (0.0, 0.0): 1, (2.0, 0.0): 1}


def test_spectrum_zero_matrix():
    assert classes(spectrum(np.zeros((4, 4)))) == {(0.0, 0.0): 4}


def test_spectrum_rolling_sphere():
    assert classes(spectrum(ROLL_D)) == {(0.0, 0.0): 3, (0.0, 1.0): 1, (0.0, -1.0): 1}


def test_spectrum_nilpotent_ad_y():
    assert classes(spectrum(ad(sl2(), Y))) == {(0.0, 0.0): 3}


def test_spectrum_jordan_block_not_split():
    j = np.diag(np.ones(4), 1)
    assert classes(spectrum(j)) == {(0.0, 0.0): 5}
    p = np.random.default_rng(3).normal(size=(5, 5))
    assert classes(spectrum(p @ j @ np.linalg.inv(p))) == {(0.0, 0.0): 5}


def test_spectrum_shifted_jordan():
    j = 1.5 * np.eye(3) + np.diag(np.ones(2), 1)
    assert classes(spectrum(j)) == {(1.5, 0.0): 3}


def test_spectrum_zero_real_part_flags():
    s = spectrum(ad(sl2(), X))
    assert not s.zero_real_part()
    assert sorted(z.real for z in s.offending()) == [-2.0, 2.0]
    assert spectrum(ROLL_D).zero_real_part()


@given(arrays(np.float64, (3, 3), elements=st.floats(-2, 2)))
def test_spectrum_similarity_invariant(p):
    if np.linalg.cond(p) > 20:
        return
    d = ad(sl2(), X)
    s = spectrum(p @ d @ np.linalg.inv(p))
    assert [s.multiplicity(v, tol=1e-9) for v in (-2, 0, 2)] == [1, 1, 1]
    assert s.dim == 3


# -- generalized eigenspaces --------------------------------------------------


def test_eigenspace_ad_x():
    d = ad(sl2(), X)
    assert generalized_eigenspace(d, 2).same_as(span(Z))
    assert generalized_eigenspace(d, -2).same_as(span(Y))
    assert generalized_eigenspace(d, 0).same_as(span(X))


def test_eigenspace_full_multiplicity():
    assert generalized_eigenspace(ad(sl2(), Y), 0).dim == 3


def test_eigenspace_rotation_pair():
    e = np.eye(5)
    sub = generalized_eigenspace(ROLL_D, 1j)
    assert sub.same_as(span(e[0], e[1]))
    assert generalized_eigenspace(ROLL_D, -1j).same_as(sub)


def test_not_an_eigenvalue():
    with pytest.raises(NotAnEigenvalue):
        generalized_eigenspace(ad(sl2(), X), 1.0)


# -- decomposition ------------------------------------------------------------


def test_decomposition_ad_x():
    dec = d_decomposition(ad(sl2(), X))
    assert dec.g_plus.same_as(span(Z))
    assert dec.g_minus.same_as(span(Y))
    assert dec.g_zero.same_as(span(X))
    assert dec.g_kernel.same_as(span(X))


def test_decomposition_zero():
    dec = d_decomposition(np.zeros((3, 3)))
    assert dec.g_zero.dim == 3 and dec.g_kernel.dim == 3
    assert dec.g_plus.dim == 0 and dec.g_minus.dim == 0


def test_decomposition_nilpotent():
    dec = d_decomposition(ad(sl2(), Y))
    assert dec.g_zero.dim == 3 and dec.g_kernel.dim == 3


def test_decomposition_rolling_sphere():
    dec = d_decomposition(ROLL_D)
    assert dec.dims() == {"g_plus": 0, "g_minus": 0, "g_zero": 5, "g_kernel": 3}
    assert dec.g_kernel.same_as(Subspace.span(np.eye(5)[:, 2:]))


def _random_derivation_case(seed):
    """Inner derivation of a random element of a solvable algebra."""
    rng = np.random.default_rng(seed)
    a = upper_triangular_algebra(3)
    return a, ad(a, rng.normal(size=a.dim))


@pytest.mark.parametrize("seed", range(10))
def test_decomposition_properties(seed):
    a, d = _random_derivation_case(seed)
    dec = d_decomposition(d)
    n = a.dim
    assert dec.g_plus.dim + dec.g_minus.dim + dec.g_zero.dim == n
    for sub in (dec.g_plus, dec.g_minus, dec.g_zero, dec.g_kernel):
        assert is_d_invariant(d, sub)
    assert is_nilpotent_subspace(a, dec.g_plus)
    assert is_nilpotent_subspace(a, dec.g_minus)
    assert is_subalgebra(a, dec.g_kernel)
    rev = d_decomposition(-d)
    assert rev.g_plus.same_as(dec.g_minus)
    assert rev.g_minus.same_as(dec.g_plus)
    assert rev.g_zero.same_as(dec.g_zero)
    assert check_grading(a, d, dec).passed


@given(arrays(np.float64, 3, elements=st.floats(-3, 3)))
def test_decomposition_sl2_inner(y):
    a = sl2()
    d = ad(a, y)
    dec = d_decomposition(d)
    assert sum(dec.dims()[k] for k in ("g_plus", "g_minus", "g_zero")) == 3
    assert check_grading(a, d, dec).max_residual <= 1e-8 * max(1.0, float(np.abs(y).max()))


def test_fixtures_grading_and_dims():
    for name, (sys, _) in all_fixtures().items():
        dec = d_decomposition(sys.derivation)
        assert dec.g_plus.dim + dec.g_minus.dim + dec.g_zero.dim == sys.dim, name
        assert check_grading(sys.algebra, sys.derivation, dec).max_residual <= 1e-8, name
        assert is_nilpotent_subspace(sys.algebra, dec.g_plus)
        assert is_nilpotent_subspace(sys.algebra, dec.g_minus)


# -- grading ------------------------------------------------------------------


def test_grading_ad_x_exact():
    rep = check_grading(sl2(), ad(sl2(), X))
    assert rep.max_residual == 0.0


def test_grading_abelian():
    d = np.random.default_rng(0).normal(size=(3, 3))
    assert check_grading(LieAlgebra.abelian(3), d).max_residual == 0.0


def test_grading_detects_non_derivation():
    # diag(0, 1, 1) is not a derivation of sl(2): [Z, Y] = X would need eigenvalue 2
    rep = check_grading(sl2(), np.diag([0.0, 1.0, 1.0]))
    assert not rep.passed


# -- multiples ----------------------------------------------------------------


def test_multiples_rolling_sphere():
    m = multiples_subalgebra(direct_sum(LieAlgebra.abelian(2), so3()), ROLL_D, 1j)
    assert m.multiples == (1,)
    assert m.subspace.same_as(Subspace.span(np.eye(5)[:, :2]))
    assert m.nilpotent


def test_multiples_single_term_matches_eigenspace():
    d = block_diag(ROTATION_GENERATOR, 3 * ROTATION_GENERATOR)
    m = multiples_subalgebra(LieAlgebra.abelian(4), d, 3j)
    assert m.multiples == (1,)
    assert m.subspace.same_as(generalized_eigenspace(d, 3j))


def test_multiples_two_terms():
    # eigenvalues +-i and +-2i: the sum over j of g_(j i) picks up i and 2i
    d = block_diag(ROTATION_GENERATOR, 2 * ROTATION_GENERATOR)
    m = multiples_subalgebra(LieAlgebra.abelian(4), d, 1j)
    assert m.multiples == (1, 2)
    assert m.complex_dim == 2
    assert m.subspace.dim == 4


def test_multiples_rejects_real_eigenvalue():
    with pytest.raises(NotAnEigenvalue):
        multiples_subalgebra(sl2(), ad(sl2(), X), 2.0)


def test_is_nilpotent_sanity():
    assert not is_nilpotent(sl2())
